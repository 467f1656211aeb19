//! Large neighborhood search over partial decisions.
//!
//! The search starts from the FIFO decision, perturbs the current partial
//! decision with a uniformly chosen operator, times each candidate with the
//! PDFT and keeps the best feasible decision found.

mod condensed;
mod fifo;
mod operators;

pub use condensed::{condense, expand, CondensedDecision};
pub use fifo::fifo_insert;
pub use operators::{apply_operator, deadline, op1_weights, NUM_OPERATORS};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{plan_delay, Ctx, Plan, State};
use crate::pdft::{run_unchecked, solution_to_plan, PartialDecision, PdftConfig, PdftStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LnsConfig {
    pub iterations: usize,
    /// Probability of moving to a feasible candidate that is not better.
    pub accept_probability: f64,
    pub pdft: PdftConfig,
    /// Record one entry per iteration.
    pub trace: bool,
}

impl Default for LnsConfig {
    fn default() -> Self {
        LnsConfig {
            iterations: 70,
            accept_probability: 0.7,
            pdft: PdftConfig::default(),
            trace: false,
        }
    }
}

impl LnsConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.accept_probability) {
            return Err(ConfigError::Invalid("accept_probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Scores a decision; lower is better.
pub trait DecisionEvaluator {
    fn evaluate(&self, ctx: &Ctx, state: &State, decision: &Plan) -> f64;
}

/// Immediate cost only: the change in planned delay.
#[derive(Debug, Clone, Copy, Default)]
pub struct ImmediateCost;

impl DecisionEvaluator for ImmediateCost {
    fn evaluate(&self, ctx: &Ctx, state: &State, decision: &Plan) -> f64 {
        immediate_cost(ctx, state, decision)
    }
}

/// Planned delay of the decision minus that of the state's plan.
pub fn immediate_cost(ctx: &Ctx, state: &State, decision: &Plan) -> f64 {
    let new = plan_delay(ctx, decision).expect("decision orders are known");
    let old = plan_delay(ctx, &state.plan).expect("plan orders are known");
    new - old
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub operator: usize,
    /// `None` when the operator did not apply.
    pub feasible: Option<bool>,
    pub cost: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub decision: Plan,
    pub cost: f64,
    pub fifo_cost: f64,
    pub pdft: PdftStats,
    pub trace: Vec<TraceEntry>,
}

/// Runs the search at a decision point that has a new order.
pub fn search<E: DecisionEvaluator + ?Sized, R: Rng + ?Sized>(
    ctx: &Ctx,
    state: &State,
    cfg: &LnsConfig,
    evaluator: &E,
    rng: &mut R,
) -> SearchResult {
    let fifo = fifo_insert(ctx, state);
    let fifo_cost = evaluator.evaluate(ctx, state, &fifo);
    let mut best = fifo;
    let mut best_cost = fifo_cost;
    let mut current: PartialDecision = condense(ctx, &best).pd;
    let mut current_cost = best_cost;
    let mut stats = PdftStats::default();
    let mut trace = Vec::new();

    for iteration in 0..cfg.iterations {
        let op = rng.random_range(1..=NUM_OPERATORS);
        let mut entry = TraceEntry {
            iteration,
            operator: op,
            feasible: None,
            cost: None,
            accepted: false,
        };
        if let Some(cand) = apply_operator(op, ctx, state, &current, rng) {
            let r = run_unchecked(ctx, state, &cand, cfg.pdft);
            stats.record(&r);
            entry.feasible = Some(r.is_feasible());
            if let Some(sol) = r.solution {
                let plan = solution_to_plan(state, &cand, &sol);
                let cost = evaluator.evaluate(ctx, state, &plan);
                entry.cost = Some(cost);
                if cost < current_cost {
                    entry.accepted = true;
                    current = cand;
                    current_cost = cost;
                    if cost < best_cost {
                        best = plan;
                        best_cost = cost;
                    }
                } else if rng.random_bool(cfg.accept_probability) {
                    entry.accepted = true;
                    current = cand;
                    current_cost = cost;
                }
            }
        }
        if cfg.trace {
            trace.push(entry);
        }
    }
    SearchResult {
        decision: best,
        cost: best_cost,
        fifo_cost,
        pdft: stats,
        trace,
    }
}
