use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coefid::data::io::{read_snapshots, snapshots_csv, write_snapshots};
use coefid::diagnostics;
use coefid::experiment::{self, ErrorRecord, ExperimentConfig, Plan, Prepared, SweepParameter, OUTPUT_ROOT_ENV};
use coefid::Result;

/// Recover velocity and diffusivity fields of advection-diffusion equations
/// from snapshot data.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Divide grid sizes, snapshot counts and dense data by this factor.
    #[arg(long)]
    scale: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Sampling seed; the noise seed becomes seed + 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. Defaults to `$COEFID_OUT/<config name>`, or
    /// `out/<config name>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the forward solver and write the state at the master times.
    Solve(Common),
    /// Solve, sample, add noise, filter and estimate derivatives.
    Sample(Common),
    /// Recover coefficients from a snapshot file written by `sample`.
    Recover {
        #[command(flatten)]
        common: Common,
        /// Snapshot file; defaults to `<out>/snapshots.bin`.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Separability and conditioning diagnostics for a snapshot file.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// The whole pipeline with all artifacts.
    Run(Common),
    /// Vary one setting and write one CSV row per run.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Param::Degree)]
        param: Param,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Degree,
    Noise,
    Method,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Solve(c) | Command::Sample(c) | Command::Run(c) => c,
            Command::Recover { common, .. } | Command::Diagnose { common, .. } | Command::Sweep { common, .. } => {
                common
            }
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(scale) = common.scale {
        cfg.output.scale = scale;
    }
    if let Some(seed) = common.seed {
        cfg.sampling.seed = seed;
        cfg.noise.seed = seed.wrapping_add(1);
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: Option<&ExperimentConfig>) -> PathBuf {
    if let Some(dir) = &common.out {
        return dir.clone();
    }
    if let Some(dir) = cfg.and_then(|c| c.output.dir.as_ref()) {
        return dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from);
    let stem = common.config.file_stem().map_or_else(|| "run".into(), |s| s.to_os_string());
    root.join(stem)
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn read_prepared(plan: &Plan, path: &Path) -> Result<Prepared> {
    let file = fs::File::open(path)?;
    let (s, derivs) = read_snapshots(std::io::BufReader::new(file))?;
    Ok(Prepared::from_parts(plan, s, derivs))
}

/// Ok(Some(record)) when artifacts were written but a trial degree failed.
fn execute(command: &Command, cfg: &ExperimentConfig, dir: &Path) -> Result<Option<ErrorRecord>> {
    let jobs = command.common().jobs.unwrap_or_else(rayon::current_num_threads);
    match command {
        Command::Solve(_) => {
            let plan = cfg.resolve()?;
            let traj = experiment::solve_forward(&plan, false)?;
            write(dir, "trajectory.csv", experiment::trajectory_csv(&plan, &traj))?;
        }
        Command::Sample(_) => {
            let plan = cfg.resolve()?;
            let traj = experiment::solve_forward(&plan, plan.epsilon > 0.0)?;
            let prepared = experiment::prepare(&plan, &traj)?;
            let mut bin = Vec::new();
            write_snapshots(&mut bin, &prepared.snapshots, Some(&prepared.derivs))?;
            write(dir, "snapshots.bin", bin)?;
            write(dir, "snapshots.csv", snapshots_csv(&prepared.snapshots))?;
        }
        Command::Recover { snapshots, .. } => {
            let plan = cfg.resolve()?;
            let path = snapshots.clone().unwrap_or_else(|| dir.join("snapshots.bin"));
            let prepared = read_prepared(&plan, &path)?;
            let results = experiment::recover_degrees(&plan, &prepared);
            for r in &results {
                if let Ok((sol, _)) = &r.outcome {
                    write(dir, &format!("solution_n{}.txt", r.degree), sol.to_text())?;
                }
            }
            write(dir, "errors.csv", experiment::errors_csv(&plan, &results))?;
            if let Some(record) = experiment::failure(&results) {
                record.write(dir)?;
                return Ok(Some(record));
            }
        }
        Command::Diagnose { snapshots, .. } => {
            let plan = cfg.resolve()?;
            let path = snapshots.clone().unwrap_or_else(|| dir.join("snapshots.bin"));
            let prepared = read_prepared(&plan, &path)?;
            let results = experiment::recover_degrees(&plan, &prepared);
            let d = experiment::diagnose(&plan, &prepared, &results)?;
            write(dir, "separability.csv", diagnostics::reports_csv(&d.separability))?;
            let mut text = diagnostics::reports_text(&d.separability);
            if let Some((n, c)) = &d.conditioning {
                text.push_str(&format!("degree {n} {}", c.text()));
            }
            write(dir, "separability.txt", &text)?;
            print!("{text}");
        }
        Command::Run(_) => {
            let report = experiment::run(cfg, Some(dir))?;
            return Ok(report.failure());
        }
        Command::Sweep { param, .. } => {
            let param = match param {
                Param::Degree => SweepParameter::Degree,
                Param::Noise => SweepParameter::Noise,
                Param::Method => SweepParameter::Method,
            };
            let (plan, rows) = experiment::sweep(cfg, param, jobs)?;
            write(dir, "sweep.csv", experiment::sweep_csv(&plan, &rows))?;
        }
    }
    Ok(None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common().clone();
    if let Some(jobs) = common.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let loaded = load(&common);
    let dir = out_dir(&common, loaded.as_ref().ok());
    let outcome = loaded.and_then(|cfg| execute(&cli.command, &cfg, &dir));
    match outcome {
        Ok(None) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Ok(Some(record)) => {
            eprintln!("error at degree {:?}: {}", record.degree, record.message);
            ExitCode::from(record.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Err(io) = ErrorRecord::from(&e).write(&dir) {
                eprintln!("could not write error record: {io}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
