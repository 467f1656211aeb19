//! Day simulation under a dispatching policy.
//!
//! A day has one decision point per order, at its placement time, and a final
//! one at the end of the order capture phase. Between decision points the
//! plan executes: trips whose departure has passed leave the kitchen. After
//! the final decision the remaining plan runs to completion.

mod bench;
mod kpi;

pub use bench::{
    compare, improvement, run_days, Comparison, ComparisonRow, DayResult, KpiSummary,
};
pub use kpi::{utilization_series, KpiReport, OrderOutcome, UtilizationSeries, CLOSE_THRESHOLD};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geo::TravelTimes;
use crate::lns::{fifo_insert, search, ImmediateCost, LnsConfig};
use crate::model::{plan_delay, transition, validate_decision, Ctx, DepartedTrip, Order, Plan, ProblemConfig, State};
use crate::pdft::PdftStats;
use crate::vfa::{extract_features, Features, ValueEvaluator, ValueNetwork};

#[derive(Debug, Clone)]
pub enum Policy {
    /// First-in-first-out insertion without search.
    Fifo,
    /// Search minimizing the immediate cost.
    Integrated(LnsConfig),
    /// Search minimizing the immediate cost plus the network's estimate of
    /// the cost to go.
    Ai { lns: LnsConfig, net: Arc<ValueNetwork> },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Fifo => "FIFO",
            Policy::Integrated(_) => "Integrated",
            Policy::Ai { .. } => "AI",
        }
    }
}

/// Mixes a base seed with a stream index (splitmix64 finalizer).
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub index: usize,
    pub t_now: f64,
    /// `None` at the end of the capture phase.
    pub new_order: Option<usize>,
    /// Open orders covered by the decision.
    pub open: usize,
    /// Change in planned delay.
    pub marginal_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub policy: String,
    pub seed: u64,
    pub decisions: Vec<DecisionRecord>,
    pub trips: Vec<DepartedTrip>,
    /// Indexed by order id.
    pub outcomes: Vec<OrderOutcome>,
    pub pdft: PdftStats,
    /// Features of each post-decision state, aligned with `decisions`.
    #[serde(skip)]
    pub features: Vec<Features>,
}

impl Episode {
    /// Sum of the marginal costs of all decisions.
    pub fn total_marginal_cost(&self) -> f64 {
        self.decisions.iter().map(|d| d.marginal_cost).sum()
    }

    pub fn total_delay(&self) -> f64 {
        self.outcomes.iter().map(|o| o.delay).sum()
    }

    /// Observed cost to go of each post-decision state: the marginal costs of
    /// all later decisions. By telescoping this equals the delay realized
    /// beyond what the decision itself planned.
    pub fn cost_to_go(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.decisions.len()];
        let mut acc = 0.0;
        for (k, d) in self.decisions.iter().enumerate().rev() {
            out[k] = acc;
            acc += d.marginal_cost;
        }
        out
    }
}

fn decide(
    ctx: &Ctx,
    state: &State,
    policy: &Policy,
    seed: u64,
    stats: &mut PdftStats,
) -> Plan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = match policy {
        Policy::Fifo => return fifo_insert(ctx, state),
        Policy::Integrated(cfg) => search(ctx, state, cfg, &ImmediateCost, &mut rng),
        // The cost to go after the final decision is zero.
        Policy::Ai { lns, .. } if state.new_order.is_none() => search(ctx, state, lns, &ImmediateCost, &mut rng),
        Policy::Ai { lns, net } => search(ctx, state, lns, &ValueEvaluator::new(net), &mut rng),
    };
    stats.merge(&r.pdft);
    r.decision
}

/// Simulates one day. `orders` must have dense ids sorted by placement time.
pub fn run_episode(
    cfg: &ProblemConfig,
    travel: &TravelTimes,
    orders: &[Order],
    policy: &Policy,
    seed: u64,
) -> Result<Episode, ModelError> {
    let ctx = Ctx::new(cfg, travel, orders)?;
    if orders.windows(2).any(|w| w[1].t_order < w[0].t_order) {
        return Err(ModelError::InvalidPlan("orders are not sorted by placement time".into()));
    }
    let t_close = orders.last().map_or(cfg.capture_horizon, |o| o.t_order.max(cfg.capture_horizon));
    let mut ep = Episode {
        policy: policy.name().to_owned(),
        seed,
        decisions: Vec::new(),
        trips: Vec::new(),
        outcomes: Vec::new(),
        pdft: PdftStats::default(),
        features: Vec::new(),
    };
    let first = orders.first().map_or(t_close, |o| o.t_order);
    let mut state = State::new(cfg, first, orders.first().map(|o| o.id));
    let n = orders.len();
    for k in 0..=n {
        let plan = decide(&ctx, &state, policy, stream_seed(seed, k as u64), &mut ep.pdft);
        validate_decision(&ctx, &state, &plan)?;
        ep.decisions.push(DecisionRecord {
            index: k,
            t_now: state.t_now,
            new_order: state.new_order,
            open: state.decision_orders().len(),
            marginal_cost: plan_delay(&ctx, &plan)? - plan_delay(&ctx, &state.plan)?,
        });
        ep.features.push(extract_features(&ctx, state.t_now, &plan));
        let (t_next, next_order) = match k + 1 {
            j if j < n => (orders[j].t_order, Some(j)),
            j if j == n => (t_close, None),
            _ => (f64::INFINITY, None),
        };
        let (next, departed) = transition(&ctx, &state, &plan, t_next, next_order);
        ep.trips.extend(departed);
        state = next;
    }
    if !state.open_orders.is_empty() || state.plan.num_trips() > 0 {
        return Err(ModelError::IncompleteEpisode(format!(
            "{} orders left undelivered",
            state.open_orders.len()
        )));
    }
    ep.outcomes = kpi::outcomes(&ctx, &ep.trips)?;
    Ok(ep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{preset, sample_days, Preset};

    #[test]
    fn empty_day_has_only_the_closing_decision() {
        let inst = preset(Preset::Desk);
        let tt = inst.geography.build().unwrap();
        let ep = run_episode(&inst.problem, &tt, &[], &Policy::Fifo, 1).unwrap();
        assert_eq!(ep.decisions.len(), 1);
        assert!(ep.trips.is_empty() && ep.outcomes.is_empty());
        let k = KpiReport::new(&inst.problem, &ep);
        assert_eq!(k.avg_delay, 0.0);
        assert_eq!(k.avg_orders_per_trip, 0.0);
    }

    #[test]
    fn ledger_telescopes() {
        let inst = preset(Preset::Desk);
        let tt = inst.geography.build().unwrap();
        let days = sample_days(&inst, &tt, 3, 2).unwrap();
        for day in &days {
            for policy in [Policy::Fifo, Policy::Integrated(LnsConfig::default())] {
                let ep = run_episode(&inst.problem, &tt, &day.orders, &policy, 9).unwrap();
                assert_eq!(ep.outcomes.len(), day.orders.len());
                assert!((ep.total_marginal_cost() - ep.total_delay()).abs() < 1e-6);
                let ctg = ep.cost_to_go();
                assert_eq!(*ctg.last().unwrap(), 0.0);
                assert!((ctg[0] + ep.decisions[0].marginal_cost - ep.total_delay()).abs() < 1e-6);
            }
        }
    }
}
