use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dyncav::analysis::FitModel;
use dyncav::commands::{
    cmd_convergence, cmd_fit, cmd_run, cmd_sweep, cmd_verify, exit_code, SweepAxis,
    VerifyTolerances, WindowSpec,
};
use dyncav::config::{preset, presets, OutputPaths, RunConfig};
use dyncav::Error;

/// Particle creation from vacuum in a cavity with a vibrating mirror.
#[derive(Parser)]
#[command(name = "dyncav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write timeseries, spectrum and metadata.
    Run(RunArgs),
    /// Run and compare against closed forms, the second-order system and unitarity.
    Verify(RunArgs),
    /// One run per value of a parameter axis, plus summary.csv.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `epsilon=..`, `n=..`, `kind=..` or `drive=..` with comma separated values.
        #[arg(long)]
        axis: String,
    },
    /// Compare runs that differ only in the cut-off.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Comma separated cut-offs; defaults to the preset pair.
        #[arg(long, value_delimiter = ',')]
        cutoffs: Vec<usize>,
        /// Largest tolerated relative deviation per mode.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
    /// Fit a column of a stored run.
    Fit {
        /// Directory written by `run`.
        dir: PathBuf,
        /// `N_total`, `E`, `unitarity_defect` or `N_<k>`.
        #[arg(long, default_value = "N_total")]
        column: String,
        #[arg(long, value_enum, default_value_t = Model::Linear)]
        model: Model,
        /// Time window `lo,hi`.
        #[arg(long, value_delimiter = ',', conflicts_with = "tau")]
        time: Option<Vec<f64>>,
        /// Slow-time window `lo,hi`.
        #[arg(long, value_delimiter = ',')]
        tau: Option<Vec<f64>>,
    },
    /// List the built-in configurations.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Linear,
    Power,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (see `dyncav presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the mode cut-off.
    #[arg(long)]
    kmax: Option<usize>,
    /// Override the final time.
    #[arg(long)]
    tmax: Option<f64>,
    /// Override the sampling interval.
    #[arg(long)]
    sample_dt: Option<f64>,
    /// Worker threads; output does not depend on this.
    #[arg(long, env = "DYNCAV_THREADS")]
    threads: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, Option<(usize, usize)>), Error> {
        let (mut config, cutoffs) = match (&self.config, &self.preset) {
            (Some(path), _) => (RunConfig::from_file(path)?, None),
            (None, Some(name)) => {
                let p = preset(name)?;
                (p.config, Some(p.cutoffs))
            }
            (None, None) => {
                return Err(Error::Config(vec![
                    "either --config or --preset is required".into(),
                ]))
            }
        };
        if let Some(dir) = &self.out {
            config.output = OutputPaths {
                dir: dir.clone(),
                ..config.output
            };
        }
        if let Some(k) = self.kmax {
            config.k_max = k;
        }
        if let Some(t) = self.tmax {
            config.t_max = t;
        }
        if let Some(dt) = self.sample_dt {
            config.integrator.sample_interval = dt;
        }
        config.validate()?;
        let speed = config.motion.mirror_speed_bound();
        if speed >= 1.0 {
            eprintln!("warning: mirror speed reaches {speed:.3} (faster than light)");
        }
        Ok((config, cutoffs))
    }

    fn threads(&self) -> usize {
        self.threads
            .filter(|&n| n > 0)
            .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
            .unwrap_or(1)
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    out(&serde_json::to_string_pretty(value).expect("serializable report"));
}

/// Print to stdout, ignoring a closed pipe.
fn out(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run(args) => {
            let (config, _) = args.load()?;
            let record = cmd_run(&config, args.threads())?;
            let last = &record.final_spectrum;
            eprintln!(
                "t = {}  N = {:.6e}  E = {:.6e}  max defect = {:.2e}  steps = {}  ({:.1} s)",
                last.t,
                last.total,
                last.energy,
                record.max_unitarity_defect(),
                record.stats.accepted,
                record.wall_clock_seconds
            );
            eprintln!("wrote {}", config.output.dir.display());
        }
        Command::Verify(args) => {
            let (config, _) = args.load()?;
            let report = cmd_verify(&config, args.threads(), VerifyTolerances::default())?;
            print_json(&report);
            if !report.passed {
                return Ok(ExitCode::from(4));
            }
        }
        Command::Sweep { run, axis } => {
            let (config, _) = run.load()?;
            let axis = SweepAxis::parse(&axis)?;
            let report = cmd_sweep(&config, &axis, &config.output.dir, run.threads())?;
            for p in &report.points {
                match &p.error {
                    None => eprintln!("{} = {}: N = {:.6e}", report.axis, p.value, p.final_total),
                    Some(e) => eprintln!("{} = {}: failed: {e}", report.axis, p.value),
                }
            }
            eprintln!("wrote {}", config.output.dir.join("summary.csv").display());
            if report.failures() > 0 {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Convergence {
            run,
            cutoffs,
            tolerance,
        } => {
            let (config, pair) = run.load()?;
            let cutoffs = match (cutoffs.is_empty(), pair) {
                (false, _) => cutoffs,
                (true, Some((a, b))) => vec![a, b],
                (true, None) => {
                    return Err(Error::Config(vec![
                        "--cutoffs is required without a preset".into(),
                    ]))
                }
            };
            let out = run.out.as_deref();
            let summary = cmd_convergence(&config, &cutoffs, tolerance, run.threads(), out)?;
            print_json(&summary);
            if !summary.stable {
                return Ok(ExitCode::from(4));
            }
        }
        Command::Fit {
            dir,
            column,
            model,
            time,
            tau,
        } => {
            for w in [&time, &tau].into_iter().flatten() {
                if w.len() != 2 {
                    return Err(Error::Config(vec![format!(
                        "fit window: expected `lo,hi`, got {} values",
                        w.len()
                    )]));
                }
            }
            let window = match (time, tau) {
                (Some(w), _) => WindowSpec::Time(w[0], w[1]),
                (None, Some(w)) => WindowSpec::SlowTime(w[0], w[1]),
                (None, None) => WindowSpec::Default,
            };
            let model = match model {
                Model::Linear => FitModel::Linear,
                Model::Power => FitModel::PowerLaw,
            };
            print_json(&cmd_fit(&dir, &column, model, window)?);
        }
        Command::Presets => {
            for p in presets() {
                out(&format!(
                    "{:<11} k_max={:<4} t_max={:<6} {}",
                    p.name, p.config.k_max, p.config.t_max, p.summary
                ));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
