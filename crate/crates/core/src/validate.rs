//! Self-checks against the brute-force oracle and structural properties.
//! Each suite draws its cases from a seed and reports the failing ones.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geo::TravelTimes;
use crate::instance::{sample_days, InstanceConfig};
use crate::lns::{apply_operator, condense, expand, fifo_insert, NUM_OPERATORS};
use crate::model::{plan_delay, validate_decision, Plan};
use crate::oracle::{
    claim_a1_check, claim_a1_instance, claim_a2_check, claim_a2_instance, oracle_atp, random_instance,
    random_partial_decision, theorem1_witness, InstanceShape, OracleAtp, OracleCaps,
};
use crate::pdft::{run_pdft, solution_to_plan, PartialDecision, PdftConfig, Verdict};
use crate::sim::{run_episode, stream_seed, KpiReport, Policy};
use crate::vfa::{extract_features, Layer, ValueNetwork};

/// Failure descriptions kept per report.
const MAX_MESSAGES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub failures: usize,
    /// One-line summary of the suite's statistics.
    pub summary: String,
    /// The first failing cases.
    pub messages: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_owned(),
            cases: 0,
            failures: 0,
            summary: String::new(),
            messages: Vec::new(),
        }
    }

    fn fail(&mut self, message: String) {
        self.failures += 1;
        if self.messages.len() < MAX_MESSAGES {
            self.messages.push(message);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn instance_shape(k: usize) -> InstanceShape {
    if k % 3 == 0 {
        InstanceShape::tiny()
    } else {
        InstanceShape::atp()
    }
}

/// PDFT against the exact oracle on `n` random capped instances. Verdicts
/// must agree (the iteration cap counts as infeasible) and feasible delays
/// must match within 1e-6 with a valid plan.
pub fn pdft_suite(seed: u64, n: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("pdft");
    let caps = OracleCaps::default();
    let (mut feasible, mut infeasible, mut cap_hits, mut cap_exact) = (0, 0, 0, 0);
    let mut max_gap: f64 = 0.0;
    for k in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, k as u64));
        let inst = random_instance(&instance_shape(k), &mut rng);
        let pd = random_partial_decision(&inst, caps.max_trips, &mut rng);
        let ctx = inst.ctx();
        rep.cases += 1;
        let r = match run_pdft(&ctx, &inst.state, &pd, PdftConfig::default()) {
            Ok(r) => r,
            Err(e) => {
                rep.fail(format!("case {k}: {e}"));
                continue;
            }
        };
        let o = match oracle_atp(&ctx, &inst.state, &pd, &caps) {
            Ok(o) => o,
            Err(e) => {
                rep.fail(format!("case {k}: {e}"));
                continue;
            }
        };
        if r.verdict == Verdict::IterationLimit {
            cap_hits += 1;
            let big = PdftConfig {
                max_iter: 5000,
                trace: false,
            };
            if run_pdft(&ctx, &inst.state, &pd, big).is_ok_and(|b| b.is_feasible() == matches!(o, OracleAtp::Feasible(_))) {
                cap_exact += 1;
            }
        }
        match (&o, &r.solution) {
            (OracleAtp::Infeasible, None) => infeasible += 1,
            (OracleAtp::Feasible(s), Some(sol)) => {
                feasible += 1;
                let gap = (s.delay - sol.total_delay).abs();
                max_gap = max_gap.max(gap);
                if gap > 1e-6 {
                    rep.fail(format!("case {k}: oracle delay {} pdft {}", s.delay, sol.total_delay));
                    continue;
                }
                let plan = solution_to_plan(&inst.state, &pd, sol);
                if let Err(e) = validate_decision(&ctx, &inst.state, &plan) {
                    rep.fail(format!("case {k}: pdft plan invalid: {e}"));
                }
            }
            _ => rep.fail(format!("case {k}: oracle {} pdft {:?}", o.delay().map_or("infeasible".into(), |d| d.to_string()), r.verdict)),
        }
    }
    rep.summary = format!(
        "feasible {feasible} infeasible {infeasible} cap_hits {cap_hits} (exact at 5000 passes: {cap_exact}) max_delay_gap {max_gap:.3e}"
    );
    rep
}

/// Condensed-space optimum against `samples` sampled cook- and
/// vehicle-indexed decisions on `n` tiny instances.
pub fn theorem1_suite(seed: u64, n: usize, samples: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("theorem1");
    let mut sampled_feasible = 0;
    for k in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, k as u64));
        let inst = random_instance(&InstanceShape::tiny(), &mut rng);
        rep.cases += 1;
        match theorem1_witness(&inst, samples, &mut rng) {
            Ok(w) => {
                sampled_feasible += w.sampled_feasible;
                if w.counterexamples > 0 {
                    rep.fail(format!(
                        "case {k}: {} sampled decisions beat the condensed optimum {:?} (best {:?})",
                        w.counterexamples, w.condensed_best, w.best_sampled
                    ));
                }
            }
            Err(e) => rep.fail(format!("case {k}: {e}")),
        }
    }
    rep.summary = format!("sampled {} feasible {sampled_feasible}", n * samples);
    rep
}

fn random_network<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> ValueNetwork {
    let layers = sizes
        .windows(2)
        .map(|w| Layer {
            inputs: w[0],
            outputs: w[1],
            weights: (0..w[0] * w[1]).map(|_| rng.random_range(-1.0..1.0)).collect(),
            biases: (0..w[1]).map(|_| rng.random_range(-0.5..0.5)).collect(),
        })
        .collect();
    ValueNetwork::from_layers(layers)
}

fn batch_loss(net: &ValueNetwork, xs: &[&[f64]], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(x, y)| (net.forward(x) - y).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Relative error with an absolute floor, so two gradients that are both
/// numerically zero agree.
fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

/// Largest relative error between backpropagated and central-difference
/// gradients of the batch loss over every parameter.
pub fn gradient_error(net: &ValueNetwork, xs: &[&[f64]], ys: &[f64], h: f64) -> f64 {
    let (_, grad) = net.loss_and_gradient(xs, ys);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for k in 0..net.layers.len() {
        for j in 0..net.layers[k].weights.len() {
            let w = net.layers[k].weights[j];
            probe.layers[k].weights[j] = w + h;
            let up = batch_loss(&probe, xs, ys);
            probe.layers[k].weights[j] = w - h;
            let down = batch_loss(&probe, xs, ys);
            probe.layers[k].weights[j] = w;
            worst = worst.max(relative_error(grad[k].weights[j], (up - down) / (2.0 * h)));
        }
        for j in 0..net.layers[k].biases.len() {
            let b = net.layers[k].biases[j];
            probe.layers[k].biases[j] = b + h;
            let up = batch_loss(&probe, xs, ys);
            probe.layers[k].biases[j] = b - h;
            let down = batch_loss(&probe, xs, ys);
            probe.layers[k].biases[j] = b;
            worst = worst.max(relative_error(grad[k].biases[j], (up - down) / (2.0 * h)));
        }
    }
    worst
}

/// Backpropagation against central finite differences on `n` random
/// 21-8-8-1 networks, each with a random input and target.
pub fn gradient_suite(seed: u64, n: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("gradients");
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, k as u64));
        let net = random_network(&[21, 8, 8, 1], &mut rng);
        let x: Vec<f64> = (0..21).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = rng.random_range(-2.0..2.0);
        let err = gradient_error(&net, &[&x], &[y], 1e-5);
        worst = worst.max(err);
        rep.cases += 1;
        if err >= 1e-4 {
            rep.fail(format!("draw {k}: relative error {err:.3e}"));
        }
    }
    rep.summary = format!("max_relative_error {worst:.3e}");
    rep
}

/// Sum of marginal costs against the sum of realized delays on `n` sampled
/// days, plus freshness of every delivered order.
pub fn ledger_suite(
    instance: &InstanceConfig,
    travel: &TravelTimes,
    policy: &Policy,
    seed: u64,
    n: usize,
) -> SuiteReport {
    let mut rep = SuiteReport::new("ledger");
    let days = match sample_days(instance, travel, seed, n) {
        Ok(d) => d,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for day in &days {
        rep.cases += 1;
        match run_episode(&instance.problem, travel, &day.orders, policy, stream_seed(seed, day.index as u64)) {
            Ok(ep) => {
                let gap = (ep.total_marginal_cost() - ep.total_delay()).abs();
                worst = worst.max(gap);
                let fresh = KpiReport::new(&instance.problem, &ep).freshness_violations;
                violations += fresh;
                if gap > 1e-6 || fresh > 0 {
                    rep.fail(format!("day {}: ledger gap {gap:.3e}, freshness violations {fresh}", day.index));
                }
            }
            Err(e) => rep.fail(format!("day {}: {e}", day.index)),
        }
    }
    rep.summary = format!("policy {} max_gap {worst:.3e} freshness_violations {violations}", policy.name());
    rep
}

fn order_multiset(pd: &PartialDecision) -> (Vec<usize>, Vec<usize>) {
    let mut a = pd.food_seqs.concat();
    let mut b = pd.trips.concat();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// `n` random operator applications: each output keeps the order multiset
/// and is structurally valid; PDFT-feasible outputs give valid plans that
/// condense back to the output and expand to a valid plan of equal delay.
pub fn operator_suite(seed: u64, n: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("operators");
    let (mut applied, mut feasible) = (0, 0);
    for k in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, k as u64));
        let inst = random_instance(&InstanceShape::atp(), &mut rng);
        let ctx = inst.ctx();
        let pd = random_partial_decision(&inst, 4, &mut rng);
        let op = rng.random_range(1..=NUM_OPERATORS);
        rep.cases += 1;
        let Some(out) = apply_operator(op, &ctx, &inst.state, &pd, &mut rng) else {
            continue;
        };
        applied += 1;
        if order_multiset(&out) != order_multiset(&pd) {
            rep.fail(format!("case {k}: operator {op} changed the orders"));
            continue;
        }
        if let Err(e) = out.validate(&ctx, &inst.state) {
            rep.fail(format!("case {k}: operator {op} output invalid: {e}"));
            continue;
        }
        let Ok(r) = run_pdft(&ctx, &inst.state, &out, PdftConfig::default()) else {
            rep.fail(format!("case {k}: pdft rejected a valid partial decision"));
            continue;
        };
        let Some(sol) = r.solution else {
            continue;
        };
        feasible += 1;
        let plan = solution_to_plan(&inst.state, &out, &sol);
        if let Err(e) = validate_decision(&ctx, &inst.state, &plan) {
            rep.fail(format!("case {k}: operator {op} plan invalid: {e}"));
            continue;
        }
        let cd = condense(&ctx, &plan);
        if cd.pd != out {
            rep.fail(format!("case {k}: condensed plan differs from the operator output"));
            continue;
        }
        match expand(&ctx, &inst.state, &cd) {
            Ok(back) => {
                let same = plan_delay(&ctx, &back).is_ok_and(|d| (d - sol.total_delay).abs() < 1e-9);
                if validate_decision(&ctx, &inst.state, &back).is_err() || !same {
                    rep.fail(format!("case {k}: expanded plan invalid or of different delay"));
                }
            }
            Err(e) => rep.fail(format!("case {k}: expand failed: {e}")),
        }
    }
    rep.summary = format!("applied {applied} pdft_feasible {feasible}");
    rep
}

/// Plan with cooks and vehicles relabeled by random permutations.
fn relabel<R: Rng + ?Sized>(plan: &Plan, rng: &mut R) -> Plan {
    let mut cooks: Vec<usize> = (0..plan.cook_sequences.len()).collect();
    let mut vehicles: Vec<usize> = (0..plan.vehicle_trips.len()).collect();
    cooks.shuffle(rng);
    vehicles.shuffle(rng);
    Plan {
        cook_sequences: cooks.iter().map(|&c| plan.cook_sequences[c].clone()).collect(),
        start_times: plan.start_times.clone(),
        vehicle_trips: vehicles.iter().map(|&v| plan.vehicle_trips[v].clone()).collect(),
        vehicle_return: vehicles.iter().map(|&v| plan.vehicle_return[v]).collect(),
    }
}

/// Features of `n` random post-decision states are bitwise unchanged when
/// cooks and vehicles are relabeled.
pub fn feature_suite(seed: u64, n: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("features");
    for k in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, k as u64));
        let inst = random_instance(&InstanceShape::atp(), &mut rng);
        let ctx = inst.ctx();
        // A PDFT plan of a random partial decision when feasible, else FIFO.
        let pd = random_partial_decision(&inst, 4, &mut rng);
        let plan = run_pdft(&ctx, &inst.state, &pd, PdftConfig::default())
            .ok()
            .and_then(|r| r.solution)
            .map_or_else(|| fifo_insert(&ctx, &inst.state), |s| solution_to_plan(&inst.state, &pd, &s));
        rep.cases += 1;
        let base = extract_features(&ctx, inst.state.t_now, &plan);
        let moved = extract_features(&ctx, inst.state.t_now, &relabel(&plan, &mut rng));
        if base.iter().zip(&moved).any(|(a, b)| a.to_bits() != b.to_bits()) {
            rep.fail(format!("case {k}: features changed under relabeling"));
        }
    }
    rep.summary = format!("states {}", rep.cases);
    rep
}

/// Sorted preparation and shortest-round-trip-first sequencing against the
/// oracle optimum, `n` constructed instances each.
pub fn claims_suite(seed: u64, n: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("claims");
    for k in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, k as u64));
        let a1 = claim_a1_check(&claim_a1_instance(&mut rng));
        let a2 = claim_a2_check(&claim_a2_instance(&mut rng));
        rep.cases += 2;
        if !a1.holds() {
            rep.fail(format!("case {k}: sorted preparation {} > optimum {}", a1.claimed_best, a1.global_best));
        }
        if !a2.holds() {
            rep.fail(format!("case {k}: shortest round trip first {} > optimum {}", a2.claimed_best, a2.global_best));
        }
    }
    rep.summary = format!("instances {}", rep.cases);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_samples() {
        for rep in [
            pdft_suite(1, 30),
            theorem1_suite(1, 3, 200),
            gradient_suite(1, 3),
            operator_suite(1, 100),
            feature_suite(1, 30),
            claims_suite(1, 3),
        ] {
            assert!(rep.passed(), "{rep:?}");
            assert!(rep.cases > 0);
        }
    }

    #[test]
    fn gradient_error_flags_a_wrong_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = random_network(&[3, 4, 1], &mut rng);
        let x = [0.3, -0.2, 0.9];
        assert!(gradient_error(&net, &[&x], &[1.0], 1e-5) < 1e-6);
        assert!(relative_error(1.0, 1.1) > 0.05);
    }
}
