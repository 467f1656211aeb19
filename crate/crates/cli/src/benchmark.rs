use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::Args;
use ghostkitchen::instance::{sample_days, Day, InstanceConfig};
use ghostkitchen::model::ProblemConfig;
use ghostkitchen::pdft::PdftStats;
use ghostkitchen::sim::{
    compare, run_days, utilization_series, Comparison, DayResult, KpiReport, KpiSummary, Policy, CLOSE_THRESHOLD,
};
use serde_json::json;

use crate::manifest::{Run, RunManifest, MANIFEST_FILE};
use crate::train::load_checkpoint;
use crate::{config, Common, ConfigContext, Failure};

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    common: Common,
    /// Directory written by `generate`. Without it, `--days` days are
    /// sampled from the preset with the run seed.
    #[arg(long)]
    instances: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    days: usize,
    /// Comma-separated list of fifo, integrated and ai.
    #[arg(long, value_delimiter = ',', default_value = "fifo,integrated")]
    policies: Vec<String>,
    /// Network checkpoint for the AI policy.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Search iterations per decision.
    #[arg(long)]
    iterations: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also write the PDFT termination histogram and utilization series.
    #[arg(long)]
    diagnostics: bool,
    /// Utilization bucket width in minutes.
    #[arg(long, default_value_t = 15.0)]
    bucket: f64,
    /// Also write food-type and close/far breakdowns.
    #[arg(long)]
    segment: bool,
    /// Print the comparison table.
    #[arg(long)]
    table1: bool,
}

enum PolicyKind {
    Fifo,
    Integrated,
    Ai,
}

fn parse_policy(name: &str) -> anyhow::Result<PolicyKind> {
    match name.trim().to_ascii_lowercase().as_str() {
        "fifo" => Ok(PolicyKind::Fifo),
        "integrated" => Ok(PolicyKind::Integrated),
        "ai" => Ok(PolicyKind::Ai),
        other => bail!("unknown policy `{other}` (expected fifo, integrated or ai)"),
    }
}

/// Reads a `generate` output directory.
fn load_instances(dir: &Path, run: &mut Run) -> anyhow::Result<(InstanceConfig, Vec<Day>)> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = run.read_input(&path)?;
    let manifest: RunManifest =
        serde_json::from_slice(&bytes).with_context(|| format!("bad manifest {}", path.display()))?;
    if manifest.command != "generate" {
        bail!("{} was not written by generate", dir.display());
    }
    let inst: InstanceConfig = serde_json::from_value(
        manifest.settings.get("instance").cloned().ok_or_else(|| anyhow!("manifest has no instance"))?,
    )
    .context("bad instance in manifest")?;
    inst.validate()?;
    let mut days = Vec::new();
    for name in &manifest.outputs {
        let p = dir.join(name);
        let bytes = run.read_input(&p)?;
        let day: Day = serde_json::from_slice(&bytes).with_context(|| format!("bad day file {}", p.display()))?;
        days.push(day);
    }
    days.sort_by_key(|d| d.index);
    if days.windows(2).any(|w| w[0].index == w[1].index) {
        bail!("duplicate day index in {}", dir.display());
    }
    Ok((inst, days))
}

const DAY_COLUMNS: &str = "policy,day,orders,trips,avg_delay,pct_late,avg_late_delay,max_delay,avg_click_to_door,\
avg_orders_per_trip,total_travel_time,close_orders,close_delay,far_orders,far_delay,freshness_violations,last_return";

fn day_row(out: &mut String, policy: &str, day: usize, k: &KpiReport) {
    writeln!(
        out,
        "{policy},{day},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        k.orders,
        k.trips,
        k.avg_delay,
        k.pct_late,
        k.avg_late_delay,
        k.max_delay,
        k.avg_click_to_door,
        k.avg_orders_per_trip,
        k.total_travel_time,
        k.close_orders,
        k.close_delay,
        k.far_orders,
        k.far_delay,
        k.freshness_violations,
        k.last_return
    )
    .expect("writing to a string");
}

fn pdft_csv(runs: &[(String, Vec<DayResult>)]) -> (String, Vec<(String, PdftStats)>) {
    let mut csv = String::from("policy,backtracks,feasible,infeasible,cumulative_percent\n");
    let mut all = Vec::new();
    for (name, results) in runs {
        let mut stats = PdftStats::default();
        results.iter().for_each(|r| stats.merge(&r.episode.pdft));
        // FIFO makes no PDFT calls.
        let rows = if stats.calls == 0 { Vec::new() } else { stats.cumulative_percent() };
        for (k, pct) in rows {
            let f = stats.feasible.get(k).copied().unwrap_or(0);
            let i = stats.infeasible.get(k).copied().unwrap_or(0);
            writeln!(csv, "{name},{k},{f},{i},{pct}").expect("writing to a string");
        }
        all.push((name.clone(), stats));
    }
    (csv, all)
}

fn utilization_csv(cfg: &ProblemConfig, runs: &[(String, Vec<DayResult>)], bucket: f64) -> String {
    let mut csv = String::from("policy,day,bucket_start,cooks,vehicles\n");
    for (name, results) in runs {
        for r in results {
            let u = utilization_series(cfg, &r.episode, bucket);
            for (k, (c, v)) in u.cooks.iter().zip(&u.vehicles).enumerate() {
                writeln!(csv, "{name},{},{},{c},{v}", r.day, k as f64 * bucket).expect("writing to a string");
            }
        }
    }
    csv
}

/// Order-weighted breakdowns over all days.
fn segments_csv(cfg: &ProblemConfig, runs: &[(String, Vec<DayResult>)]) -> String {
    let mut csv = String::from("policy,segment,orders,avg_delay,pct_late\n");
    for (name, results) in runs {
        let outcomes: Vec<_> = results.iter().flat_map(|r| &r.episode.outcomes).collect();
        let mut segments: Vec<(String, Vec<f64>)> = cfg
            .food_types
            .iter()
            .enumerate()
            .map(|(f, ft)| {
                let d = outcomes.iter().filter(|o| o.food_type == f).map(|o| o.delay).collect();
                (format!("food_type:{}", ft.name), d)
            })
            .collect();
        segments.push(("close".into(), outcomes.iter().filter(|o| o.direct < CLOSE_THRESHOLD).map(|o| o.delay).collect()));
        segments.push(("far".into(), outcomes.iter().filter(|o| o.direct >= CLOSE_THRESHOLD).map(|o| o.delay).collect()));
        for (seg, d) in segments {
            let n = d.len();
            let (avg, late) = if n == 0 {
                (0.0, 0.0)
            } else {
                let late = d.iter().filter(|&&x| x > 0.0).count() as f64;
                (d.iter().sum::<f64>() / n as f64, 100.0 * late / n as f64)
            };
            writeln!(csv, "{name},{seg},{n},{avg},{late}").expect("writing to a string");
        }
    }
    csv
}

pub fn table1(c: &Comparison) -> String {
    let mut head = vec!["KPI".to_owned()];
    head.extend(c.policies.iter().cloned());
    head.extend(c.baselines.iter().map(|b| format!("% imp. over {b}")));
    let rows: Vec<Vec<String>> = c
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.kpi.clone()];
            cells.extend(r.values.iter().map(|v| format!("{v:.2}")));
            cells.extend(r.improvements.iter().map(|v| format!("{v:.1}")));
            cells
        })
        .collect();
    let widths: Vec<usize> = (0..head.len())
        .map(|j| rows.iter().map(|r| r[j].len()).chain([head[j].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for cells in std::iter::once(&head).chain(&rows) {
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(j, s)| if j == 0 { format!("{s:<w$}", w = widths[j]) } else { format!("{s:>w$}", w = widths[j]) })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn run(args: &BenchmarkArgs, root: &Path) -> Result<(), Failure> {
    let mut r = args.common.resolve()?;
    let kinds: Vec<PolicyKind> = args.policies.iter().map(|p| parse_policy(p)).collect::<Result<_, _>>().config_err()?;
    if kinds.is_empty() {
        return Err(Failure::Config(anyhow!("no policies given")));
    }
    if !(args.bucket > 0.0) {
        return Err(Failure::Config(anyhow!("bucket width must be positive")));
    }
    let lns = config::lns(&r.file, args.iterations).config_err()?;
    if let Some(dir) = &args.instances {
        if r.file.instance.is_some() || args.common.preset.is_some() {
            return Err(Failure::Config(anyhow!("--instances cannot be combined with a preset or an instance section")));
        }
        // Provisional name until the instance set is read.
        r.preset = String::new();
        if args.common.out.as_deref() == Some(dir.as_path()) {
            return Err(Failure::Config(anyhow!("output directory must differ from the instance directory")));
        }
    }
    let mut run = r.run("benchmark", PathBuf::new());
    let (inst, days) = match &args.instances {
        Some(dir) => load_instances(dir, &mut run).config_err()?,
        None => {
            let inst = config::instance(&r.preset, &r.file).config_err()?;
            let travel = inst.geography.build().config_err()?;
            let days = sample_days(&inst, &travel, r.seed, args.days).config_err()?;
            (inst, days)
        }
    };
    r.preset = inst.name.clone();
    run.preset = inst.name.clone();
    run.out = r.out_dir(&args.common, root, "benchmark");
    let travel = inst.geography.build().config_err()?;
    let net = match (&args.checkpoint, kinds.iter().any(|k| matches!(k, PolicyKind::Ai))) {
        (Some(p), true) => {
            let bytes = std::fs::read(p)
                .with_context(|| format!("cannot read checkpoint {}", p.display()))
                .config_err()?;
            run.input(p, &bytes);
            Some(Arc::new(load_checkpoint(&bytes, p)?))
        }
        (None, true) => return Err(Failure::Config(anyhow!("the AI policy needs --checkpoint"))),
        _ => None,
    };
    let policies: Vec<Policy> = kinds
        .iter()
        .map(|k| match k {
            PolicyKind::Fifo => Policy::Fifo,
            PolicyKind::Integrated => Policy::Integrated(lns),
            PolicyKind::Ai => Policy::Ai {
                lns,
                net: net.clone().expect("checked above"),
            },
        })
        .collect();

    let mut runs: Vec<(String, Vec<DayResult>)> = Vec::new();
    for p in &policies {
        let results = run_days(&inst.problem, &travel, &days, p, r.seed, args.jobs).map_err(|e| Failure::Runtime(e.into()))?;
        runs.push((p.name().to_owned(), results));
    }

    let summaries: Vec<(String, KpiSummary)> = runs
        .iter()
        .map(|(n, rs)| (n.clone(), KpiSummary::new(&rs.iter().map(|d| d.kpis.clone()).collect::<Vec<_>>())))
        .collect();
    let comparison = compare(&summaries);
    let mut days_csv = String::from(DAY_COLUMNS);
    days_csv.push('\n');
    let mut log = String::new();
    for (name, results) in &runs {
        for d in results {
            day_row(&mut days_csv, name, d.day, &d.kpis);
            log.push_str(&serde_json::to_string(&json!({"policy": name, "day": d.day, "kpis": d.kpis, "episode": d.episode})).map_err(anyhow::Error::from)?);
            log.push('\n');
        }
    }

    run.create_dir()?;
    run.write("kpis.csv", comparison.to_csv())?;
    run.write("days.csv", days_csv)?;
    run.write("episodes.jsonl", log)?;
    let mut summary = json!({
        "policies": summaries.iter().map(|(n, s)| json!({"policy": n, "summary": s})).collect::<Vec<_>>(),
        "comparison": comparison,
    });
    if args.diagnostics {
        let (csv, stats) = pdft_csv(&runs);
        run.write("pdft.csv", csv)?;
        run.write("utilization.csv", utilization_csv(&inst.problem, &runs, args.bucket))?;
        summary["pdft"] = json!(stats
            .iter()
            .map(|(n, s)| json!({
                "policy": n,
                "stats": s,
                "within_5": s.within(5),
                "cap_fraction": s.cap_fraction(),
            }))
            .collect::<Vec<_>>());
    }
    if args.segment {
        run.write("segments.csv", segments_csv(&inst.problem, &runs))?;
    }
    run.write_json("summary.json", &summary)?;
    let manifest = run.finish(json!({
        "instance": inst,
        "instances": args.instances.as_ref().map(|p| p.display().to_string()),
        "days": days.len(),
        "policies": policies.iter().map(Policy::name).collect::<Vec<_>>(),
        "checkpoint": args.checkpoint.as_ref().filter(|_| net.is_some()).map(|p| p.display().to_string()),
        "lns": lns,
        "diagnostics": args.diagnostics,
        "bucket": args.bucket,
        "segment": args.segment,
    }))?;

    if args.table1 {
        print!("{}", table1(&comparison));
    }
    let violations: usize = summaries.iter().map(|s| s.1.mean.freshness_violations).sum();
    println!("benchmarked {} days; results in {}", days.len(), manifest.output_dir);
    if violations > 0 {
        return Err(Failure::Validation(format!("{violations} orders exceeded their freshness limit")));
    }
    Ok(())
}
