//! Summary statistics of a post-decision state's resources.
//!
//! Times are hours from now (clipped at zero), the clock is a fraction of the
//! operation horizon and counts are raw. Per-resource values are reduced to
//! mean, max and min so the vector length does not depend on the number of
//! cooks or vehicles. Means sum sorted values, which makes the vector
//! bitwise invariant under relabeling of cooks and vehicles.

use crate::model::{trip_duration, Ctx, Plan};

pub const NUM_FEATURES: usize = 21;

pub type Features = [f64; NUM_FEATURES];

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "current_time",
    "idle_cooks",
    "orders_per_cook_mean",
    "orders_per_cook_max",
    "orders_per_cook_min",
    "work_per_cook_mean",
    "work_per_cook_max",
    "work_per_cook_min",
    "cook_finish_mean",
    "cook_finish_max",
    "cook_finish_min",
    "idle_vehicles",
    "vehicle_return_mean",
    "vehicle_return_max",
    "vehicle_return_min",
    "trips_per_vehicle_mean",
    "trips_per_vehicle_max",
    "trips_per_vehicle_min",
    "orders_per_vehicle_mean",
    "orders_per_vehicle_max",
    "orders_per_vehicle_min",
];

fn mean_max_min(mut values: Vec<f64>) -> [f64; 3] {
    if values.is_empty() {
        return [0.0; 3];
    }
    values.sort_by(f64::total_cmp);
    let sum: f64 = values.iter().sum();
    [sum / values.len() as f64, values[values.len() - 1], values[0]]
}

fn hours_from(t: f64, t_now: f64) -> f64 {
    ((t - t_now) / 60.0).max(0.0)
}

/// Features of the post-decision state `(t_now, plan)`.
pub fn extract_features(ctx: &Ctx, t_now: f64, plan: &Plan) -> Features {
    let mut f = [0.0; NUM_FEATURES];
    f[0] = t_now / ctx.cfg.horizon;

    let mut cook_orders = Vec::new();
    let mut cook_work = Vec::new();
    let mut cook_finish = Vec::new();
    let mut idle_cooks = 0usize;
    for seq in &plan.cook_sequences {
        let mut count = 0usize;
        let mut work = 0.0;
        let mut finish = t_now;
        for &i in seq {
            let prep = ctx.order(i).t_prep;
            let done = plan.start_times[&i] + prep;
            if done > t_now {
                count += 1;
                work += prep;
                finish = finish.max(done);
            }
        }
        if count == 0 {
            idle_cooks += 1;
        }
        cook_orders.push(count as f64);
        cook_work.push(work / 60.0);
        cook_finish.push(hours_from(finish, t_now));
    }
    let n_cooks = plan.cook_sequences.len().max(1) as f64;
    f[1] = idle_cooks as f64 / n_cooks;
    f[2..5].copy_from_slice(&mean_max_min(cook_orders));
    f[5..8].copy_from_slice(&mean_max_min(cook_work));
    f[8..11].copy_from_slice(&mean_max_min(cook_finish));

    let mut returns = Vec::new();
    let mut trips = Vec::new();
    let mut orders = Vec::new();
    let mut idle_vehicles = 0usize;
    for (v, vt) in plan.vehicle_trips.iter().enumerate() {
        let back = vt
            .iter()
            .map(|t| t.departure + trip_duration(ctx, &t.orders))
            .fold(plan.vehicle_return[v], f64::max);
        if vt.is_empty() && back <= t_now {
            idle_vehicles += 1;
        }
        returns.push(hours_from(back, t_now));
        trips.push(vt.len() as f64);
        orders.push(vt.iter().map(|t| t.orders.len()).sum::<usize>() as f64);
    }
    let n_vehicles = plan.vehicle_trips.len().max(1) as f64;
    f[11] = idle_vehicles as f64 / n_vehicles;
    f[12..15].copy_from_slice(&mean_max_min(returns));
    f[15..18].copy_from_slice(&mean_max_min(trips));
    f[18..21].copy_from_slice(&mean_max_min(orders));
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{line_travel, small_cfg};
    use crate::model::{Order, Trip};

    #[test]
    fn empty_plan_is_all_idle() {
        let cfg = small_cfg();
        let tt = line_travel(&[(1, 5.0)]);
        let orders: Vec<Order> = Vec::new();
        let ctx = Ctx::new(&cfg, &tt, &orders).unwrap();
        let f = extract_features(&ctx, 300.0, &Plan::empty(&cfg));
        assert_eq!(f[1], 1.0);
        assert_eq!(f[11], 1.0);
        assert!(f[2..11].iter().chain(&f[12..]).all(|&x| x == 0.0));
        assert_eq!(f[0], 300.0 / cfg.horizon);
    }

    #[test]
    fn queued_orders_per_cook() {
        let cfg = small_cfg();
        let tt = line_travel(&[(1, 5.0)]);
        let orders: Vec<Order> = (0..2)
            .map(|id| Order {
                id,
                food_type: 0,
                t_order: 100.0,
                t_prep: 12.0,
                location: 1,
                service_time: 0.0,
            })
            .collect();
        let ctx = Ctx::new(&cfg, &tt, &orders).unwrap();
        let mut plan = Plan::empty(&cfg);
        plan.cook_sequences[0] = vec![0, 1];
        plan.start_times.insert(0, 100.0);
        plan.start_times.insert(1, 112.0);
        plan.vehicle_trips[1].push(Trip {
            orders: vec![0, 1],
            departure: 124.0,
        });
        let f = extract_features(&ctx, 100.0, &plan);
        let n = cfg.num_cooks() as f64;
        assert_eq!(&f[2..5], &[2.0 / n, 2.0, 0.0]);
        assert_eq!(f[6], 24.0 / 60.0);
        assert_eq!(f[9], 24.0 / 60.0);
        assert_eq!(f[1], (n - 1.0) / n);
        assert_eq!(f[11], 0.5);
        assert_eq!(f[13], (124.0 + 10.0 - 100.0) / 60.0);
        assert_eq!(&f[15..18], &[0.5, 1.0, 0.0]);
        assert_eq!(&f[18..21], &[1.0, 2.0, 0.0]);
    }
}
