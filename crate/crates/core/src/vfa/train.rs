//! Training the value network on simulated days.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ModelError};
use crate::geo::TravelTimes;
use crate::instance::{day_seed, sample_day, InstanceConfig};
use crate::lns::LnsConfig;
use crate::pdft::PdftStats;
use crate::sim::{run_episode, stream_seed, KpiReport, Policy};

use super::{Replay, ValueNetwork, DEFAULT_SIZES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Gradient steps after each simulated day.
    pub steps_per_episode: usize,
    /// Costs to go are divided by this before fitting a fresh network, in
    /// minutes. A fine-tuned network keeps its own scale.
    pub target_scale: f64,
    /// Window of the moving-average loss used by the convergence test.
    pub convergence_window: usize,
    /// Converged when the moving average improves by less than this
    /// fraction over one window.
    pub convergence_tolerance: f64,
    /// End training at convergence instead of running every episode.
    pub stop_when_converged: bool,
    pub lns: LnsConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 500,
            learning_rate: 0.001,
            batch_size: 128,
            replay_capacity: 1_000_000,
            steps_per_episode: 1,
            target_scale: 1.0,
            convergence_window: 200,
            convergence_tolerance: 0.01,
            stop_when_converged: false,
            lns: LnsConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be finite and nonnegative");
        }
        if !(self.target_scale > 0.0) || !self.target_scale.is_finite() {
            return bad("target scale must be positive and finite");
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.convergence_window == 0 {
            return bad("batch size, replay capacity and convergence window must be positive");
        }
        if !(self.convergence_tolerance >= 0.0) {
            return bad("convergence tolerance must be nonnegative");
        }
        self.lns.validate()
    }
}

/// One Adam step on the mean squared error of a uniform batch, with targets
/// divided by the network's target scale. Returns the batch loss before the
/// step, or `None` when the replay holds fewer tuples than a batch.
pub fn train_step<R: Rng + ?Sized>(
    net: &mut ValueNetwork,
    replay: &Replay,
    batch_size: usize,
    learning_rate: f64,
    rng: &mut R,
) -> Option<f64> {
    if replay.len() < batch_size || batch_size == 0 {
        return None;
    }
    let batch = replay.sample(batch_size, rng);
    let xs: Vec<&[f64]> = batch.iter().map(|b| &b.0[..]).collect();
    let ys: Vec<f64> = batch.iter().map(|b| b.1 / net.target_scale).collect();
    let (loss, grad) = net.loss_and_gradient(&xs, &ys);
    net.adam_step(&grad, learning_rate);
    Some(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    /// Mean loss of the episode's gradient steps; `None` before the replay
    /// fills one batch.
    pub loss: Option<f64>,
    /// Average order delay of the simulated day.
    pub avg_delay: f64,
    pub replay: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: ValueNetwork,
    pub curve: Vec<CurveRow>,
    /// First episode at which the moving-average loss stopped improving.
    pub converged_at: Option<usize>,
    pub pdft: PdftStats,
}

fn converged(losses: &[f64], window: usize, tol: f64) -> bool {
    if losses.len() < 2 * window {
        return false;
    }
    let n = losses.len();
    let recent: f64 = losses[n - window..].iter().sum::<f64>() / window as f64;
    let before: f64 = losses[n - 2 * window..n - window].iter().sum::<f64>() / window as f64;
    before - recent < tol * before.abs()
}

/// Runs `cfg.episodes` training days with the AI policy. Each day is
/// simulated with the current network; its post-decision features and
/// observed costs to go enter the replay, then the network takes
/// `cfg.steps_per_episode` gradient steps. Passing a network fine-tunes it;
/// otherwise a fresh one is initialized from `cfg.seed`.
pub fn train_policy(
    instance: &InstanceConfig,
    travel: &TravelTimes,
    cfg: &TrainConfig,
    net: Option<ValueNetwork>,
) -> Result<TrainOutcome, ModelError> {
    cfg.validate().map_err(|e| ModelError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, u64::MAX));
    let mut net = match net {
        Some(n) => n,
        None => ValueNetwork {
            target_scale: cfg.target_scale,
            ..ValueNetwork::new(&DEFAULT_SIZES, &mut rng)
        },
    };
    let mut replay = Replay::new(cfg.replay_capacity);
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut losses = Vec::new();
    let mut converged_at = None;
    let mut pdft = PdftStats::default();
    for e in 0..cfg.episodes {
        let mut day_rng = ChaCha8Rng::seed_from_u64(day_seed(cfg.seed, e));
        let orders = sample_day(instance, travel, &mut day_rng).map_err(|e| ModelError::Config(e.to_string()))?;
        let policy = Policy::Ai {
            lns: cfg.lns,
            net: Arc::new(net.clone()),
        };
        let ep = run_episode(&instance.problem, travel, &orders, &policy, stream_seed(cfg.seed, e as u64))?;
        pdft.merge(&ep.pdft);
        for (f, y) in ep.features.iter().zip(ep.cost_to_go()) {
            replay.push(*f, y);
        }
        let step_losses: Vec<f64> = (0..cfg.steps_per_episode)
            .filter_map(|_| train_step(&mut net, &replay, cfg.batch_size, cfg.learning_rate, &mut rng))
            .collect();
        let loss = (!step_losses.is_empty()).then(|| step_losses.iter().sum::<f64>() / step_losses.len() as f64);
        losses.extend(&step_losses);
        curve.push(CurveRow {
            episode: e,
            loss,
            avg_delay: KpiReport::new(&instance.problem, &ep).avg_delay,
            replay: replay.len(),
        });
        if converged_at.is_none() && converged(&losses, cfg.convergence_window, cfg.convergence_tolerance) {
            converged_at = Some(e);
            if cfg.stop_when_converged {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        net,
        curve,
        converged_at,
        pdft,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{preset, Preset};

    #[test]
    fn zero_episodes_returns_the_initial_network() {
        let inst = preset(Preset::Desk);
        let tt = inst.geography.build().unwrap();
        let cfg = TrainConfig {
            episodes: 0,
            ..TrainConfig::default()
        };
        let a = train_policy(&inst, &tt, &cfg, None).unwrap();
        let b = train_policy(&inst, &tt, &cfg, None).unwrap();
        assert!(a.curve.is_empty());
        assert_eq!(a.net, b.net);
        assert_eq!(a.net.sizes(), DEFAULT_SIZES.to_vec());
    }

    #[test]
    fn short_run_fills_the_replay() {
        let inst = preset(Preset::Desk);
        let tt = inst.geography.build().unwrap();
        let cfg = TrainConfig {
            episodes: 6,
            batch_size: 32,
            lns: LnsConfig {
                iterations: 10,
                ..LnsConfig::default()
            },
            ..TrainConfig::default()
        };
        let out = train_policy(&inst, &tt, &cfg, None).unwrap();
        assert_eq!(out.curve.len(), 6);
        assert!(out.curve.windows(2).all(|w| w[0].replay < w[1].replay));
        assert!(out.curve.last().unwrap().loss.is_some());
    }
}
