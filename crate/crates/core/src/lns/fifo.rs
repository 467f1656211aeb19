//! First-in-first-out insertion of a new order into the current plan.

use crate::model::{trip_timing, Ctx, Plan, State, Trip, EPS, PLAN_TOL};
use crate::oracle::for_each_permutation;

/// Inserts the state's new order into its plan: appended to the
/// first-available cook of its food type, then either joined onto the last
/// trip of some vehicle (best in-trip sequence by total delay) or sent on a
/// new direct trip of the first vehicle to become free, postponing
/// preparation when the vehicle would otherwise break freshness.
///
/// Returns the state's plan unchanged when there is no new order.
pub fn fifo_insert(ctx: &Ctx, state: &State) -> Plan {
    let mut plan = state.plan.clone();
    let Some(i) = state.new_order else {
        return plan;
    };
    let o = ctx.order(i);
    let delta = ctx.freshness_of(i);

    let cook_free = |c: usize| {
        plan.cook_sequences[c]
            .iter()
            .map(|&j| plan.start_times[&j] + ctx.order(j).t_prep)
            .fold(state.t_now, f64::max)
    };
    let (c, free) = ctx
        .cfg
        .cooks_of(o.food_type)
        .map(|c| (c, cook_free(c)))
        .fold((usize::MAX, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
    let mut t = state.t_now.max(free);
    let ready = t + o.t_prep;

    // Best join onto a vehicle's last trip: (delay of the new order, vehicle, sequence).
    let mut join: Option<(f64, usize, Vec<usize>)> = None;
    for (v, trips) in plan.vehicle_trips.iter().enumerate() {
        let Some(last) = trips.last() else { continue };
        if last.orders.len() >= ctx.cfg.capacity || last.departure < ready - EPS {
            continue;
        }
        let d = last.departure;
        let mut members = last.orders.clone();
        members.push(i);
        let ready_of = |j: usize| {
            if j == i {
                ready
            } else {
                plan.start_times[&j] + ctx.order(j).t_prep
            }
        };
        let mut best_seq: Option<(f64, Vec<usize>)> = None;
        for_each_permutation(&members, &mut |seq| {
            let timing = trip_timing(ctx, seq);
            let fresh_ok = seq.iter().zip(&timing.fresh).all(|(&j, &off)| {
                d + off - ready_of(j) <= ctx.freshness_of(j) + PLAN_TOL
            });
            if !fresh_ok {
                return;
            }
            let total: f64 = seq
                .iter()
                .zip(&timing.handover)
                .map(|(&j, &h)| ctx.order_delay(j, d, h))
                .sum();
            if best_seq.as_ref().is_none_or(|b| total < b.0 - EPS) {
                best_seq = Some((total, seq.to_vec()));
            }
        });
        let Some((_, seq)) = best_seq else { continue };
        let pos = seq.iter().position(|&j| j == i).expect("new order is in the trip");
        let own = ctx.order_delay(i, d, trip_timing(ctx, &seq).handover[pos]);
        if join.as_ref().is_none_or(|b| own < b.0) {
            join = Some((own, v, seq));
        }
    }

    match join {
        Some((_, v, seq)) => {
            plan.vehicle_trips[v].last_mut().expect("vehicle has a trip").orders = seq;
        }
        None => {
            let vehicle_free = |v: usize| {
                plan.vehicle_trips[v]
                    .last()
                    .map(|tr| tr.departure + trip_timing(ctx, &tr.orders).duration)
                    .unwrap_or(f64::NEG_INFINITY)
                    .max(plan.vehicle_return[v])
                    .max(state.t_now)
            };
            let (v, vfree) = (0..ctx.cfg.fleet_size)
                .map(|v| (v, vehicle_free(v)))
                .fold((usize::MAX, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
            let departure = ready.max(vfree);
            let arrival = ctx.direct_time(i);
            if departure + arrival > ready + delta {
                t = departure + arrival - delta - o.t_prep;
            }
            plan.vehicle_trips[v].push(Trip {
                orders: vec![i],
                departure,
            });
        }
    }
    plan.cook_sequences[c].push(i);
    plan.start_times.insert(i, t);
    plan
}
