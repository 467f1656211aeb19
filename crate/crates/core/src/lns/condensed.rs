//! Decisions stripped of cook and vehicle identities.
//!
//! A condensed decision keeps, per food type, the preparation sequence with
//! start times, and the flat trip sequence with departures. Expanding it
//! assigns every order and trip to the lowest-index resource free at its
//! time, the same rule the PDFT uses, so cooks of one food type and vehicles
//! are interchangeable.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::ModelError;
use crate::model::{trip_duration, Ctx, Plan, State, Trip, EPS};
use crate::pdft::PartialDecision;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedDecision {
    pub pd: PartialDecision,
    pub start_times: BTreeMap<usize, f64>,
    /// Departure of each trip of `pd.trips`.
    pub departures: Vec<f64>,
}

/// Canonical condensed form of a plan: preparation sequences sorted by start
/// time then cook, trips sorted by departure then vehicle.
pub fn condense(ctx: &Ctx, plan: &Plan) -> CondensedDecision {
    let mut per_type: Vec<Vec<(f64, usize, usize)>> = vec![Vec::new(); ctx.cfg.food_types.len()];
    for (c, seq) in plan.cook_sequences.iter().enumerate() {
        for &i in seq {
            per_type[ctx.order(i).food_type].push((plan.start_times[&i], c, i));
        }
    }
    let food_seqs = per_type
        .into_iter()
        .map(|mut v| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            v.into_iter().map(|x| x.2).collect()
        })
        .collect();
    let mut trips: Vec<(f64, usize, &Trip)> = plan.trips().map(|(v, t)| (t.departure, v, t)).collect();
    trips.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    CondensedDecision {
        pd: PartialDecision {
            food_seqs,
            trips: trips.iter().map(|t| t.2.orders.clone()).collect(),
        },
        start_times: plan.start_times.clone(),
        departures: trips.iter().map(|t| t.0).collect(),
    }
}

/// Assigns cooks and vehicles to a condensed decision. Started orders keep
/// their cooks; fails when some order or trip finds no free resource.
pub fn expand(ctx: &Ctx, state: &State, cd: &CondensedDecision) -> Result<Plan, ModelError> {
    let cfg = ctx.cfg;
    let mut plan = state.plan.clone();
    plan.cook_sequences.iter_mut().for_each(Vec::clear);
    plan.vehicle_trips.iter_mut().for_each(Vec::clear);
    plan.start_times.clear();

    let mut cook_free = vec![state.t_now; cfg.num_cooks()];
    for (f, seq) in cd.pd.food_seqs.iter().enumerate() {
        for &i in seq {
            let Some(&a) = cd.start_times.get(&i) else {
                return Err(ModelError::InvalidPlan(format!("order {i} has no start time")));
            };
            let c = if state.is_started(i) {
                state.plan.cook_of(i).expect("started order has a cook")
            } else {
                cfg.cooks_of(f)
                    .find(|&c| cook_free[c] <= a + EPS)
                    .ok_or_else(|| ModelError::InvalidPlan(format!("no cook free for order {i} at {a}")))?
            };
            plan.cook_sequences[c].push(i);
            plan.start_times.insert(i, a);
            cook_free[c] = cook_free[c].max(a + ctx.order(i).t_prep);
        }
    }

    let mut veh_free = state.vehicle_eligibility();
    if cd.departures.len() != cd.pd.trips.len() {
        return Err(ModelError::InvalidPlan("one departure per trip is required".into()));
    }
    for (trip, &d) in cd.pd.trips.iter().zip(&cd.departures) {
        let v = veh_free
            .iter()
            .position(|&r| r <= d + EPS)
            .ok_or_else(|| ModelError::InvalidPlan(format!("no vehicle free at {d}")))?;
        veh_free[v] = d + trip_duration(ctx, trip);
        plan.vehicle_trips[v].push(Trip {
            orders: trip.clone(),
            departure: d,
        });
    }
    Ok(plan)
}
