//! Simulation and solver suite for restaurant meal delivery with ghost
//! kitchens: integrated cook scheduling and vehicle dispatching over a day of
//! stochastic order arrivals.
//!
//! The main pieces are
//! - [`geo`]: travel and service times,
//! - [`model`]: orders, plans, states, costs and the state transition,
//! - [`instance`]: day sampling and configuration presets,
//! - [`pdft`]: assignment and timing of partial decisions,
//! - [`lns`]: first-in-first-out construction and large neighborhood search,
//! - [`vfa`]: post-decision features and the value network,
//! - [`sim`]: policies, episodes and KPIs,
//! - [`oracle`]: brute-force reference solvers used for validation,
//! - [`validate`]: self-check suites built on the oracle.

pub mod error;
pub mod geo;
pub mod instance;
pub mod lns;
pub mod model;
pub mod oracle;
pub mod pdft;
pub mod sim;
pub mod validate;
pub mod vfa;

pub use error::{ConfigError, GeoError, ModelError, OracleError};
pub use model::{Ctx, Order, Plan, ProblemConfig, State, Trip, EPS};
