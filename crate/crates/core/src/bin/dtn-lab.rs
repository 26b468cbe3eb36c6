use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dtn_lab::cli::{run_to_dir, validate_config, Experiment, EXIT_CHECK_FAILURE, EXIT_CONFIG_ERROR, EXIT_PASS};

/// Runs one numerical experiment and writes CSV tables plus a JSON summary.
#[derive(Parser, Debug)]
#[command(name = "dtn-lab", version)]
struct Args {
    /// dtn-verify, commutator-sweep, identity-check, square-report,
    /// carleson-report, kenig-stein-check or kernel-check
    experiment: String,
    /// JSON config file
    #[arg(long)]
    config: PathBuf,
    /// Also write SVG line plots
    #[arg(long)]
    plots: bool,
    /// Output directory (overrides `out_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Use the symbol exactly as printed in the source derivation instead of
    /// the corrected one
    #[arg(long)]
    paper_literal_symbol: bool,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("dtn-lab: {msg}");
    ExitCode::from(EXIT_CONFIG_ERROR as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG_ERROR as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let Some(experiment) = Experiment::parse(&args.experiment) else {
        return config_error(format!("unknown experiment \"{}\"", args.experiment));
    };
    let raw = match std::fs::read_to_string(&args.config) {
        Ok(s) => s,
        Err(e) => return config_error(format!("cannot read {}: {e}", args.config.display())),
    };
    let mut cfg = match validate_config(&raw) {
        Ok(c) => c,
        Err(e) => {
            for v in &e.violations {
                eprintln!("dtn-lab: config: {v}");
            }
            return ExitCode::from(EXIT_CONFIG_ERROR as u8);
        }
    };
    if cfg.experiment != experiment {
        return config_error(format!(
            "command line asks for {experiment} but the config names {}",
            cfg.experiment
        ));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    cfg.paper_literal_symbol = args.paper_literal_symbol;

    let dir = cfg.out_dir.clone();
    let out = match run_to_dir(&cfg, &dir, args.plots) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("dtn-lab: {e}");
            return ExitCode::from(EXIT_CHECK_FAILURE as u8);
        }
    };
    for r in &out.report.records {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let bound = match r.tolerance {
            Some(t) => format!("{} {t:e}", serde_json::to_value(r.relation).unwrap().as_str().unwrap_or("?")),
            None => "finite".to_string(),
        };
        match &r.error {
            Some(err) => println!("{verdict} {:<40} error: {err}", r.name),
            None => println!("{verdict} {:<40} {:>14e}  ({bound})", r.name, r.value),
        }
    }
    println!(
        "{}: {} in {:.2} s, outputs in {}",
        out.report.experiment,
        if out.report.pass { "all checks pass" } else { "checks failed" },
        out.report.wall_time_s,
        dir.display()
    );
    ExitCode::from(if out.report.pass { EXIT_PASS } else { EXIT_CHECK_FAILURE } as u8)
}
