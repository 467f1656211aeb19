use std::fmt::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use ghostkitchen::vfa::{train_policy, CurveRow, ValueNetwork};
use serde_json::json;

use crate::{config, Common, ConfigContext, Failure};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Simulated training days.
    #[arg(long)]
    episodes: Option<usize>,
    /// Search iterations per decision.
    #[arg(long)]
    iterations: Option<usize>,
    /// Gradient steps after each simulated day.
    #[arg(long)]
    steps_per_episode: Option<usize>,
    /// Continue training this checkpoint instead of a fresh network.
    #[arg(long, alias = "checkpoint-in")]
    fine_tune: Option<PathBuf>,
}

pub fn curve_csv(curve: &[CurveRow]) -> String {
    let mut out = String::from("episode,loss,avg_delay,replay\n");
    for r in curve {
        let loss = r.loss.map(|l| l.to_string()).unwrap_or_default();
        writeln!(out, "{},{loss},{},{}", r.episode, r.avg_delay, r.replay).expect("writing to a string");
    }
    out
}

pub fn load_checkpoint(bytes: &[u8], path: &Path) -> Result<ValueNetwork, Failure> {
    let net: ValueNetwork = serde_json::from_slice(bytes)
        .with_context(|| format!("bad checkpoint file {}", path.display()))
        .config_err()?;
    net.validate()
        .with_context(|| format!("bad checkpoint file {}", path.display()))
        .config_err()?;
    Ok(net)
}

pub fn run(args: &TrainArgs, root: &Path) -> Result<(), Failure> {
    let r = args.common.resolve()?;
    let inst = config::instance(&r.preset, &r.file).config_err()?;
    let travel = inst.geography.build().config_err()?;
    let lns = config::lns(&r.file, None).config_err()?;
    let mut cfg = config::train(&r.file, lns).config_err()?;
    cfg.seed = r.seed;
    if let Some(n) = args.episodes {
        cfg.episodes = n;
    }
    if let Some(n) = args.iterations {
        cfg.lns.iterations = n;
    }
    if let Some(n) = args.steps_per_episode {
        cfg.steps_per_episode = n;
    }
    cfg.validate().config_err()?;
    let out = r.out_dir(&args.common, root, "train");
    let mut run = r.run("train", out);
    let start = match &args.fine_tune {
        Some(p) => {
            let bytes = std::fs::read(p)
                .with_context(|| format!("cannot read checkpoint {}", p.display()))
                .config_err()?;
            run.input(p, &bytes);
            Some(load_checkpoint(&bytes, p)?)
        }
        None => None,
    };
    let outcome = train_policy(&inst, &travel, &cfg, start).map_err(|e| Failure::Runtime(e.into()))?;
    run.create_dir()?;
    run.write_json("checkpoint.json", &outcome.net)?;
    run.write("curve.csv", curve_csv(&outcome.curve))?;
    run.write_json(
        "train.json",
        &json!({
            "episodes": outcome.curve.len(),
            "converged_at": outcome.converged_at,
            "pdft": outcome.pdft,
            "pdft_within_5": outcome.pdft.within(5),
            "pdft_cap_fraction": outcome.pdft.cap_fraction(),
        }),
    )?;
    let manifest = run.finish(json!({
        "instance": inst,
        "train": cfg,
        "fine_tune": args.fine_tune.as_ref().map(|p| p.display().to_string()),
    }))?;
    println!(
        "trained {} episodes; checkpoint in {}",
        outcome.curve.len(),
        manifest.output_dir
    );
    Ok(())
}
