//! Per-order outcomes, day KPIs and resource utilization.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{Ctx, DepartedTrip, ProblemConfig, EPS};

use super::Episode;

/// Orders whose direct drive is shorter than this are "close".
pub const CLOSE_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderOutcome {
    pub id: usize,
    pub food_type: usize,
    pub t_order: f64,
    pub cook: usize,
    pub start: f64,
    pub ready: f64,
    pub vehicle: usize,
    pub departure: f64,
    /// Arrival at the customer.
    pub arrival: f64,
    /// Arrival plus service at the door.
    pub handover: f64,
    pub delay: f64,
    /// Handover minus placement.
    pub click_to_door: f64,
    /// Arrival minus preparation completion.
    pub ready_to_door: f64,
    /// Direct drive from the kitchen.
    pub direct: f64,
}

pub(super) fn outcomes(ctx: &Ctx, trips: &[DepartedTrip]) -> Result<Vec<OrderOutcome>, ModelError> {
    let mut out: Vec<Option<OrderOutcome>> = vec![None; ctx.orders.len()];
    for trip in trips {
        let delays = trip.delays(ctx);
        for (j, &i) in trip.orders.iter().enumerate() {
            let o = ctx.order(i);
            let ready = trip.starts[j] + o.t_prep;
            let arrival = trip.departure + trip.fresh[j];
            let handover = trip.departure + trip.handover[j];
            out[i] = Some(OrderOutcome {
                id: i,
                food_type: o.food_type,
                t_order: o.t_order,
                cook: trip.cooks[j],
                start: trip.starts[j],
                ready,
                vehicle: trip.vehicle,
                departure: trip.departure,
                arrival,
                handover,
                delay: delays[j],
                click_to_door: handover - o.t_order,
                ready_to_door: arrival - ready,
                direct: ctx.direct_time(i),
            });
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, o)| o.ok_or_else(|| ModelError::IncompleteEpisode(format!("order {i} was never delivered"))))
        .collect()
}

/// KPIs of one simulated day. Averages over an empty set are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub orders: usize,
    pub trips: usize,
    pub avg_delay: f64,
    /// Percentage of orders with positive delay.
    pub pct_late: f64,
    pub avg_late_delay: f64,
    pub max_delay: f64,
    pub avg_click_to_door: f64,
    pub avg_orders_per_trip: f64,
    /// Sum of trip durations, service included.
    pub total_travel_time: f64,
    /// Average delay per food type.
    pub food_type_delay: Vec<f64>,
    pub close_orders: usize,
    pub close_delay: f64,
    pub far_orders: usize,
    pub far_delay: f64,
    pub freshness_violations: usize,
    /// Latest vehicle return.
    pub last_return: f64,
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl KpiReport {
    pub fn new(cfg: &ProblemConfig, ep: &Episode) -> Self {
        let o = &ep.outcomes;
        let n = o.len();
        let late: Vec<f64> = o.iter().map(|x| x.delay).filter(|&d| d > 0.0).collect();
        let sum_delay: f64 = o.iter().map(|x| x.delay).sum();
        let by_type = (0..cfg.food_types.len())
            .map(|f| {
                let d: Vec<f64> = o.iter().filter(|x| x.food_type == f).map(|x| x.delay).collect();
                mean(d.iter().sum(), d.len())
            })
            .collect();
        let (close, far): (Vec<&OrderOutcome>, Vec<&OrderOutcome>) =
            o.iter().partition(|x| x.direct < CLOSE_THRESHOLD);
        KpiReport {
            orders: n,
            trips: ep.trips.len(),
            avg_delay: mean(sum_delay, n),
            pct_late: 100.0 * mean(late.len() as f64, n),
            avg_late_delay: mean(late.iter().sum(), late.len()),
            max_delay: o.iter().map(|x| x.delay).fold(0.0, f64::max),
            avg_click_to_door: mean(o.iter().map(|x| x.click_to_door).sum(), n),
            avg_orders_per_trip: mean(n as f64, ep.trips.len()),
            total_travel_time: ep.trips.iter().map(|t| t.duration).sum(),
            food_type_delay: by_type,
            close_orders: close.len(),
            close_delay: mean(close.iter().map(|x| x.delay).sum(), close.len()),
            far_orders: far.len(),
            far_delay: mean(far.iter().map(|x| x.delay).sum(), far.len()),
            freshness_violations: o
                .iter()
                .filter(|x| x.ready_to_door > cfg.freshness(x.food_type) + EPS)
                .count(),
            last_return: ep.trips.iter().map(|t| t.departure + t.duration).fold(0.0, f64::max),
        }
    }
}

/// Fraction of cooks preparing and of vehicles away from the kitchen,
/// averaged over consecutive buckets starting at minute 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationSeries {
    pub bucket: f64,
    pub cooks: Vec<f64>,
    pub vehicles: Vec<f64>,
}

fn spread(intervals: &[(f64, f64)], bucket: f64, n: usize, resources: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &(a, b) in intervals {
        let first = (a / bucket).floor().max(0.0) as usize;
        for (k, slot) in out.iter_mut().enumerate().skip(first) {
            let lo = k as f64 * bucket;
            if lo >= b {
                break;
            }
            let overlap = b.min(lo + bucket) - a.max(lo);
            if overlap > 0.0 {
                *slot += overlap;
            }
        }
    }
    let cap = bucket * resources.max(1) as f64;
    out.iter_mut().for_each(|x| *x /= cap);
    out
}

/// Utilization over buckets covering the operation horizon and every
/// activity of the episode.
pub fn utilization_series(cfg: &ProblemConfig, ep: &Episode, bucket: f64) -> UtilizationSeries {
    assert!(bucket > 0.0, "bucket width must be positive");
    let prep: Vec<(f64, f64)> = ep.outcomes.iter().map(|o| (o.start, o.ready)).collect();
    let away: Vec<(f64, f64)> = ep.trips.iter().map(|t| (t.departure, t.departure + t.duration)).collect();
    let end = prep
        .iter()
        .chain(&away)
        .map(|x| x.1)
        .fold(cfg.horizon, f64::max);
    let n = (end / bucket).ceil() as usize;
    UtilizationSeries {
        bucket,
        cooks: spread(&prep, bucket, n, cfg.num_cooks()),
        vehicles: spread(&away, bucket, n, cfg.fleet_size),
    }
}
