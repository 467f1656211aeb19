//! Multi-day runs and policy comparison.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geo::TravelTimes;
use crate::instance::Day;
use crate::model::ProblemConfig;

use super::{run_episode, stream_seed, Episode, KpiReport, Policy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    pub day: usize,
    pub episode: Episode,
    pub kpis: KpiReport,
}

/// Simulates every day under `policy` on up to `jobs` threads. Day `d` uses
/// episode seed `stream_seed(seed, d.index)`, so results do not depend on
/// `jobs` and every policy sees the same random streams. Results are in the
/// order of `days`.
pub fn run_days(
    cfg: &ProblemConfig,
    travel: &TravelTimes,
    days: &[Day],
    policy: &Policy,
    seed: u64,
    jobs: usize,
) -> Result<Vec<DayResult>, ModelError> {
    let run = |day: &Day| -> Result<DayResult, ModelError> {
        let episode = run_episode(cfg, travel, &day.orders, policy, stream_seed(seed, day.index as u64))?;
        let kpis = KpiReport::new(cfg, &episode);
        Ok(DayResult {
            day: day.index,
            episode,
            kpis,
        })
    };
    let jobs = jobs.clamp(1, days.len().max(1));
    if jobs == 1 {
        return days.iter().map(run).collect();
    }
    let mut slots: Vec<Option<Result<DayResult, ModelError>>> = vec![None; days.len()];
    std::thread::scope(|s| {
        let chunk = days.len().div_ceil(jobs);
        for (ds, out) in days.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            let run = &run;
            s.spawn(move || {
                for (d, o) in ds.iter().zip(out) {
                    *o = Some(run(d));
                }
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every day ran")).collect()
}

/// Mean KPIs over days, plus the largest delay of any day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiSummary {
    pub days: usize,
    /// Field-wise mean of the day reports; `max_delay` is the mean of the
    /// daily maxima.
    pub mean: KpiReport,
    pub global_max_delay: f64,
}

impl KpiSummary {
    pub fn new(reports: &[KpiReport]) -> Self {
        let n = reports.len().max(1) as f64;
        let avg = |f: &dyn Fn(&KpiReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let avg_count = |f: &dyn Fn(&KpiReport) -> usize| (reports.iter().map(f).sum::<usize>() as f64 / n).round() as usize;
        let types = reports.first().map_or(0, |r| r.food_type_delay.len());
        let mean = KpiReport {
            orders: avg_count(&|r| r.orders),
            trips: avg_count(&|r| r.trips),
            avg_delay: avg(&|r| r.avg_delay),
            pct_late: avg(&|r| r.pct_late),
            avg_late_delay: avg(&|r| r.avg_late_delay),
            max_delay: avg(&|r| r.max_delay),
            avg_click_to_door: avg(&|r| r.avg_click_to_door),
            avg_orders_per_trip: avg(&|r| r.avg_orders_per_trip),
            total_travel_time: avg(&|r| r.total_travel_time),
            food_type_delay: (0..types).map(|f| avg(&|r| r.food_type_delay[f])).collect(),
            close_orders: avg_count(&|r| r.close_orders),
            close_delay: avg(&|r| r.close_delay),
            far_orders: avg_count(&|r| r.far_orders),
            far_delay: avg(&|r| r.far_delay),
            freshness_violations: reports.iter().map(|r| r.freshness_violations).sum(),
            last_return: avg(&|r| r.last_return),
        };
        KpiSummary {
            days: reports.len(),
            mean,
            global_max_delay: reports.iter().map(|r| r.max_delay).fold(0.0, f64::max),
        }
    }
}

/// Relative improvement of `candidate` over `baseline` in percent,
/// `(baseline - candidate) / candidate * 100`.
pub fn improvement(baseline: f64, candidate: f64) -> f64 {
    if baseline == candidate {
        0.0
    } else if candidate == 0.0 {
        f64::INFINITY.copysign(baseline)
    } else {
        (baseline - candidate) / candidate * 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub kpi: String,
    /// One value per policy.
    pub values: Vec<f64>,
    /// Improvement of the candidate over each other policy, in `baselines`
    /// order.
    pub improvements: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub policies: Vec<String>,
    /// The policy whose improvement is reported: AI when present, else the
    /// last policy.
    pub candidate: String,
    pub baselines: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kpi");
        for p in &self.policies {
            out.push(',');
            out.push_str(p);
        }
        for b in &self.baselines {
            out.push_str(&format!(",imp_over_{b}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.kpi);
            for v in r.values.iter().chain(&r.improvements) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Table of headline KPIs per policy with improvement columns.
pub fn compare(summaries: &[(String, KpiSummary)]) -> Comparison {
    let policies: Vec<String> = summaries.iter().map(|s| s.0.clone()).collect();
    let cand = policies
        .iter()
        .position(|p| p == "AI")
        .unwrap_or(policies.len().saturating_sub(1));
    let rows_of: [(&str, fn(&KpiSummary) -> f64); 8] = [
        ("avg_delay", |s| s.mean.avg_delay),
        ("pct_late", |s| s.mean.pct_late),
        ("avg_late_delay", |s| s.mean.avg_late_delay),
        ("max_delay", |s| s.mean.max_delay),
        ("global_max_delay", |s| s.global_max_delay),
        ("avg_click_to_door", |s| s.mean.avg_click_to_door),
        ("avg_orders_per_trip", |s| s.mean.avg_orders_per_trip),
        ("total_travel_time", |s| s.mean.total_travel_time),
    ];
    let others: Vec<usize> = (0..summaries.len()).filter(|&k| k != cand).collect();
    let rows = rows_of
        .iter()
        .map(|(name, f)| {
            let values: Vec<f64> = summaries.iter().map(|s| f(&s.1)).collect();
            ComparisonRow {
                kpi: (*name).to_owned(),
                improvements: others.iter().map(|&k| improvement(values[k], values[cand])).collect(),
                values,
            }
        })
        .collect();
    Comparison {
        candidate: policies.get(cand).cloned().unwrap_or_default(),
        baselines: others.iter().map(|&k| policies[k].clone()).collect(),
        policies,
        rows,
    }
}
