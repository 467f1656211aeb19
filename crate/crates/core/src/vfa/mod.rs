//! Value function approximation: post-decision features, the value network,
//! experience replay and the training loop.

mod features;
mod network;
mod replay;
mod train;

pub use features::{extract_features, Features, FEATURE_NAMES, NUM_FEATURES};
pub use network::{Adam, Gradient, Layer, ValueNetwork};
pub use replay::Replay;
pub use train::{train_policy, train_step, CurveRow, TrainConfig, TrainOutcome};

use crate::lns::{immediate_cost, DecisionEvaluator};
use crate::model::{Ctx, Plan, State};

/// Default layer widths: features, two hidden layers, one output.
pub const DEFAULT_SIZES: [usize; 4] = [NUM_FEATURES, 256, 256, 1];

/// Immediate cost plus the network's estimate of the cost to go from the
/// post-decision state.
#[derive(Debug, Clone, Copy)]
pub struct ValueEvaluator<'a> {
    net: &'a ValueNetwork,
}

impl<'a> ValueEvaluator<'a> {
    pub fn new(net: &'a ValueNetwork) -> Self {
        assert_eq!(net.inputs(), NUM_FEATURES, "value network must take {NUM_FEATURES} features");
        ValueEvaluator { net }
    }
}

impl DecisionEvaluator for ValueEvaluator<'_> {
    fn evaluate(&self, ctx: &Ctx, state: &State, decision: &Plan) -> f64 {
        let f = extract_features(ctx, state.t_now, decision);
        immediate_cost(ctx, state, decision) + self.net.value(&f)
    }
}
