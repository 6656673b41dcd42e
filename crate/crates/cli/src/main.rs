use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use starisac::harness::{
    calibrate_cell, emit_plots, resolve_penalties, run_comm_mc, run_radar_mc, with_jobs, write_results, MetricsRecord,
    ScenarioConfig, ScenarioFile,
};
use starisac::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_CALIBRATION: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "starisac", version, about = "STAR-RIS ISAC Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Calibrate the GIC penalty for every configured CPI length
    Calibrate(RunArgs),
    /// Detection probability and velocity RMSE versus RCS
    Radar(RadarArgs),
    /// User bit error rate versus reference SNR
    Ber(RunArgs),
    /// Render SVG figures from result CSVs
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario JSON; absent keys take the reference values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the scenario
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per cell (calibration trials for `calibrate`, slots for `ber`)
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Only the mode with communication codes
    #[arg(long, overrides_with = "no_comm")]
    with_comm: bool,
    /// Only the radar-only mode
    #[arg(long, overrides_with = "with_comm")]
    no_comm: bool,
    /// Worker threads, 0 for one per core; STARISAC_JOBS takes precedence
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct RadarArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Directory holding calibration artifacts (defaults to --out)
    #[arg(long)]
    calibration: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Result CSV files
    results: Vec<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Calibration(_) => EXIT_CALIBRATION,
            Error::Io(_) | Error::Csv(_) | Error::Parse { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn jobs(flag: usize) -> Result<usize, Failure> {
    match std::env::var("STARISAC_JOBS") {
        Ok(v) => v.trim().parse().map_err(|_| Failure {
            code: EXIT_CONFIG,
            message: format!("STARISAC_JOBS must be a non-negative integer, got `{v}`"),
        }),
        Err(_) => Ok(flag),
    }
}

fn scenario(args: &RunArgs, trials: impl FnOnce(&mut ScenarioFile, u64)) -> Result<ScenarioConfig, Failure> {
    let mut file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure {
                code: EXIT_CONFIG,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            ScenarioFile::from_json(&text)?
        }
        None => ScenarioFile::default(),
    };
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if let Some(n) = args.trials {
        trials(&mut file, n);
    }
    Ok(file.resolve()?)
}

fn modes(args: &RunArgs) -> Vec<bool> {
    match (args.with_comm, args.no_comm) {
        (true, _) => vec![true],
        (_, true) => vec![false],
        _ => vec![false, true],
    }
}

fn calibrate(args: &RunArgs) -> Result<(), Failure> {
    let cfg = scenario(args, |f, n| f.detector.calibration_trials = n)?;
    for &p in &cfg.radar.pulses_per_cpi {
        for &comm in &modes(args) {
            let art = with_jobs(jobs(args.jobs)?, || calibrate_cell(&cfg, p, comm))??;
            let path = art.write(&args.out)?;
            println!(
                "P={p} {}: penalty {:.6} (empirical rate {:.3e} over {} trials) -> {}",
                if comm { "with comm" } else { "radar only" },
                art.penalty,
                art.empirical_rate,
                art.trials,
                path.display()
            );
        }
    }
    Ok(())
}

fn radar(args: &RadarArgs) -> Result<(), Failure> {
    let run = &args.run;
    let cfg = scenario(run, |f, n| f.radar.trials = n)?;
    let dir = args.calibration.as_deref().unwrap_or(&run.out);
    let mut penalties = Vec::new();
    for &comm in &modes(run) {
        penalties.extend(resolve_penalties(&cfg, comm, dir)?);
    }
    let n_jobs = jobs(run.jobs)?;
    let mut record = None;
    for &comm in &modes(run) {
        let rec = with_jobs(n_jobs, || run_radar_mc(&cfg, comm, &penalties))??;
        match &mut record {
            None => record = Some(rec),
            Some(r) => r.merge(rec)?,
        }
    }
    let record = record.expect("at least one mode");
    finish(&record, &cfg, &run.out.join("radar.csv"))
}

fn ber(args: &RunArgs) -> Result<(), Failure> {
    let cfg = scenario(args, |f, n| f.comm.slots = n)?;
    let record = with_jobs(jobs(args.jobs)?, || run_comm_mc(&cfg))??;
    finish(&record, &cfg, &args.out.join("ber.csv"))
}

fn finish(record: &MetricsRecord, cfg: &ScenarioConfig, path: &Path) -> Result<(), Failure> {
    let manifest = write_results(record, cfg, path)?;
    println!(
        "{} rows in {:.1} s -> {} ({})",
        record.len(),
        record.runtime_s,
        path.display(),
        manifest.display()
    );
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<(), Failure> {
    for path in emit_plots(&args.results, &args.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Calibrate(a) => calibrate(a),
        Command::Radar(a) => radar(a),
        Command::Ber(a) => ber(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
