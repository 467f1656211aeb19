use std::path::Path;

use clap::Args;
use ghostkitchen::instance::sample_days;
use serde_json::json;

use crate::{config, Common, ConfigContext, Failure};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Number of days to sample.
    #[arg(long, default_value_t = 300)]
    days: usize,
}

pub fn day_file(index: usize) -> String {
    format!("day-{index:04}.json")
}

pub fn run(args: &GenerateArgs, root: &Path) -> Result<(), Failure> {
    let r = args.common.resolve()?;
    let inst = config::instance(&r.preset, &r.file).config_err()?;
    let travel = inst.geography.build().config_err()?;
    let days = sample_days(&inst, &travel, r.seed, args.days).config_err()?;
    let out = r.out_dir(&args.common, root, "generate");
    let mut run = r.run("generate", out);
    run.create_dir()?;
    for day in &days {
        run.write_json(&day_file(day.index), day)?;
    }
    let manifest = run.finish(json!({
        "days": args.days,
        "instance": inst,
    }))?;
    println!("wrote {} days to {}", days.len(), manifest.output_dir);
    Ok(())
}
