use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bloch_cli::config::{load_config, Tolerances};
use bloch_cli::jobs::{self, Command, Job};
use bloch_cli::output::{persist, render_report, Header};
use bloch_cli::validate::{self, ValidationOptions, CHECK_NAMES};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bloch",
    version,
    about = "Leading-order Bloch dispersion for acoustic media with small inclusions"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Job description (JSON).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct RunFlags {
    /// Output root; results go to <out>/<job name>/.
    #[arg(long, env = "BLOCH_OUT", default_value = "out")]
    out: PathBuf,
    /// Solve spheres with the boundary-element method instead of the
    /// closed-form tensor.
    #[arg(long)]
    force_bem: bool,
    /// Worker threads for assembly and scans (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a Bloch vector and list its exceptional set.
    Exceptional(Common),
    /// Polarizability tensor of the configured inclusion.
    Polarizability(Common),
    /// Split frequencies or wave vectors at one k, or a band scan.
    Dispersion(Common),
    /// Cluster fields of the split modes on a grid.
    Cluster(Common),
    /// Run the acceptance checks.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Optional job config; only its name is used, for the report path.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunFlags,
    /// Run only these checks (repeatable).
    #[arg(long = "check", value_parser = clap::value_parser!(u8).range(1..=11))]
    checks: Vec<u8>,
    /// Add this offset to the order-two eigenvalues (negative control).
    #[arg(long, default_value_t = 0.0)]
    perturb_lambda: f64,
    /// Seed for the randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads(n: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run_job(cmd: Command, args: Common) -> anyhow::Result<ExitCode> {
    init_threads(args.run.threads)?;
    let loaded = load_config(&args.config)?;
    let job = Job {
        config: &loaded.config,
        base_dir: &loaded.base_dir,
        force_bem: args.run.force_bem,
    };
    let output = jobs::run(cmd, &job)
        .with_context(|| format!("{} job `{}`", cmd.name(), loaded.config.name))?;
    let header = Header::new(
        cmd.name(),
        &loaded.raw,
        loaded.config.tolerances,
        args.run.force_bem,
    );
    let dir = persist(&args.run.out, &loaded.config.name, &header, &output)?;
    print!("{}", output.summary);
    println!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn run_validate(args: ValidateArgs) -> anyhow::Result<ExitCode> {
    init_threads(args.run.threads)?;
    let mut opts = ValidationOptions {
        lambda_perturbation: args.perturb_lambda,
        ..ValidationOptions::default()
    };
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    let (name, raw, tolerances) = match &args.config {
        Some(p) => {
            let l = load_config(p)?;
            (l.config.name.clone(), l.raw, l.config.tolerances)
        }
        None => ("validate".to_string(), Vec::new(), Tolerances::default()),
    };
    let ids: Vec<usize> = if args.checks.is_empty() {
        (1..=CHECK_NAMES.len()).collect()
    } else {
        args.checks.iter().map(|c| *c as usize).collect()
    };
    let mut outcomes = Vec::with_capacity(ids.len());
    for id in ids {
        let o = validate::run_check(id, &opts);
        println!("{}", o.line());
        outcomes.push(o);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "{} of {} checks passed",
        outcomes.len() - failed,
        outcomes.len()
    );

    let header = Header::new("validate", &raw, tolerances, args.run.force_bem);
    let report = serde_json::json!({
        "seed": opts.seed,
        "lambda_perturbation": opts.lambda_perturbation,
        "checks": outcomes,
    });
    let dir = args.run.out.join(&name);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("report.json"), render_report(&header, &report)?)?;
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Exceptional(a) => run_job(Command::Exceptional, a),
        Cmd::Polarizability(a) => run_job(Command::Polarizability, a),
        Cmd::Dispersion(a) => run_job(Command::Dispersion, a),
        Cmd::Cluster(a) => run_job(Command::Cluster, a),
        Cmd::Validate(a) => run_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
