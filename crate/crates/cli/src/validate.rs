use std::path::Path;

use clap::{Args, ValueEnum};
use ghostkitchen::lns::LnsConfig;
use ghostkitchen::sim::Policy;
use ghostkitchen::validate::{
    claims_suite, feature_suite, gradient_suite, ledger_suite, operator_suite, pdft_suite, theorem1_suite, SuiteReport,
};
use serde_json::json;

use crate::{config, Common, ConfigContext, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// PDFT against the exact oracle.
    Pdft,
    /// Condensed decisions against sampled original decisions.
    Theorem1,
    /// Backpropagation against central differences.
    Gradients,
    /// Marginal costs against realized delays on simulated days.
    Ledger,
    /// Order conservation and validity of the search operators.
    Operators,
    /// Feature invariance under cook and vehicle relabeling.
    Features,
    /// Sorted preparation and shortest-first departure witnesses.
    Claims,
}

impl Suite {
    fn default_n(self) -> usize {
        match self {
            Suite::Pdft => 1000,
            Suite::Theorem1 => 200,
            Suite::Gradients => 100,
            Suite::Ledger => 50,
            Suite::Operators => 10_000,
            Suite::Features => 1000,
            Suite::Claims => 100,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Suite::Pdft => "pdft",
            Suite::Theorem1 => "theorem1",
            Suite::Gradients => "gradients",
            Suite::Ledger => "ledger",
            Suite::Operators => "operators",
            Suite::Features => "features",
            Suite::Claims => "claims",
        }
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    suite: Suite,
    /// Number of cases; each suite has its own default.
    #[arg(long)]
    n: Option<usize>,
    /// Sampled original decisions per theorem1 instance.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Search iterations for the ledger suite's integrated policy.
    #[arg(long)]
    iterations: Option<usize>,
}

pub fn run(args: &ValidateArgs, root: &Path) -> Result<(), Failure> {
    let r = args.common.resolve()?;
    let n = args.n.unwrap_or(args.suite.default_n());
    let mut settings = json!({"suite": args.suite.name(), "n": n});
    let report: SuiteReport = match args.suite {
        Suite::Pdft => pdft_suite(r.seed, n),
        Suite::Theorem1 => {
            settings["samples"] = json!(args.samples);
            theorem1_suite(r.seed, n, args.samples)
        }
        Suite::Gradients => gradient_suite(r.seed, n),
        Suite::Ledger => {
            let inst = config::instance(&r.preset, &r.file).config_err()?;
            let travel = inst.geography.build().config_err()?;
            let lns: LnsConfig = config::lns(&r.file, args.iterations).config_err()?;
            settings["instance"] = json!(inst);
            settings["lns"] = json!(lns);
            ledger_suite(&inst, &travel, &Policy::Integrated(lns), r.seed, n)
        }
        Suite::Operators => operator_suite(r.seed, n),
        Suite::Features => feature_suite(r.seed, n),
        Suite::Claims => claims_suite(r.seed, n),
    };
    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| root.join(format!("validate-{}-s{}", args.suite.name(), r.seed)));
    let mut run = r.run("validate", out);
    run.create_dir()?;
    run.write_json("report.json", &report)?;
    run.finish(settings)?;
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {}: {} cases, {} failures; {}",
        report.suite, report.cases, report.failures, report.summary
    );
    for m in &report.messages {
        println!("  {m}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{} of {} cases failed", report.failures, report.cases)))
    }
}
