//! Neighborhood operators on partial decisions.
//!
//! Operators 1 and 2 reorder preparation sequences, 3 and 4 reorder the trip
//! sequence, 5 to 7 reshape trips. Each returns `None` when its
//! preconditions fail or when it would return its input unchanged. Orders
//! already in preparation are never moved within a preparation sequence.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::geo::KITCHEN;
use crate::model::{Ctx, State};
use crate::pdft::PartialDecision;

pub const NUM_OPERATORS: usize = 7;

/// Soft departure deadline of an order riding first on its trip.
pub fn deadline(ctx: &Ctx, i: usize) -> f64 {
    let o = ctx.order(i);
    o.t_order + ctx.cfg.tau - ctx.direct_time(i)
}

/// Selection probabilities of operator 1 over `orders`: one minus each
/// order's share of the deadline-times-preparation sum, renormalized.
/// Empty when fewer than two orders or a nonpositive sum.
pub fn op1_weights(ctx: &Ctx, orders: &[usize]) -> Vec<f64> {
    if orders.len() < 2 {
        return Vec::new();
    }
    let w: Vec<f64> = orders.iter().map(|&i| deadline(ctx, i) * ctx.order(i).t_prep).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.iter().any(|&x| x < 0.0) {
        return Vec::new();
    }
    let raw: Vec<f64> = w.iter().map(|x| 1.0 - x / total).collect();
    let norm: f64 = raw.iter().sum();
    raw.iter().map(|x| x / norm).collect()
}

/// Positions of a sequence that hold unstarted orders. Started orders lead
/// every sequence, so these form a suffix.
fn unstarted_positions(state: &State, seq: &[usize]) -> Vec<usize> {
    (0..seq.len()).filter(|&j| !state.is_started(seq[j])).collect()
}

/// Total driving time of a trip, service excluded.
fn driving_time(ctx: &Ctx, trip: &[usize]) -> f64 {
    let mut at = KITCHEN;
    let mut total = 0.0;
    for &i in trip {
        let loc = ctx.order(i).location;
        total += ctx.travel.t(at, loc);
        at = loc;
    }
    total + ctx.travel.t(at, KITCHEN)
}

fn changed(pd: &PartialDecision, out: PartialDecision) -> Option<PartialDecision> {
    (out != *pd).then_some(out)
}

/// Applies operator `op` (1 to 7).
pub fn apply_operator<R: Rng + ?Sized>(
    op: usize,
    ctx: &Ctx,
    state: &State,
    pd: &PartialDecision,
    rng: &mut R,
) -> Option<PartialDecision> {
    let mut out = pd.clone();
    match op {
        1 => {
            let f = rng.random_range(0..pd.food_seqs.len());
            let seq = &mut out.food_seqs[f];
            let pos = unstarted_positions(state, seq);
            let orders: Vec<usize> = pos.iter().map(|&j| seq[j]).collect();
            let w = op1_weights(ctx, &orders);
            if w.is_empty() {
                return None;
            }
            let k = WeightedIndex::new(&w).ok()?.sample(rng);
            // The first unstarted order has no unstarted predecessor.
            if k == 0 {
                return None;
            }
            seq.swap(pos[k - 1], pos[k]);
        }
        2 => {
            let f = rng.random_range(0..pd.food_seqs.len());
            let seq = &mut out.food_seqs[f];
            let pos = unstarted_positions(state, seq);
            if pos.len() < 2 {
                return None;
            }
            let picked: Vec<&usize> = pos.choose_multiple(rng, 2).collect();
            seq.swap(*picked[0], *picked[1]);
        }
        3 => {
            let n = out.trips.len();
            if n < 3 {
                return None;
            }
            let l = rng.random_range(0..=n - 3);
            out.trips[l..l + 3].sort_by(|a, b| driving_time(ctx, a).total_cmp(&driving_time(ctx, b)));
        }
        4 => {
            let n = out.trips.len();
            if n < 2 {
                return None;
            }
            let l = rng.random_range(0..n - 1);
            out.trips.swap(l, l + 1);
        }
        5 => {
            let pairs: Vec<usize> = (0..out.trips.len().saturating_sub(1))
                .filter(|&l| out.trips[l].len() + out.trips[l + 1].len() <= ctx.cfg.capacity)
                .collect();
            let &l = pairs.choose(rng)?;
            let second = out.trips.remove(l + 1);
            out.trips[l].extend(second);
        }
        6 => {
            let long: Vec<usize> = (0..out.trips.len()).filter(|&l| out.trips[l].len() >= 2).collect();
            let &l = long.choose(rng)?;
            let rest = out.trips[l].split_off(1);
            out.trips.insert(l + 1, rest);
        }
        7 => {
            if out.trips.is_empty() {
                return None;
            }
            let l = rng.random_range(0..out.trips.len());
            out.trips[l].shuffle(rng);
        }
        _ => panic!("operators are numbered 1 to {NUM_OPERATORS}"),
    }
    changed(pd, out)
}
