use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use autotumor::analytic::{analytic_nutrient, analytic_pressure, integrate_radius, AnalyticSetup, DEFAULT_RADIUS_DT};
use autotumor::diagnostics::write_csv_row;
use autotumor::scenario::{
    cartesian, check_run_dir, dir_name, load_config, preset, run_scenario, with_overrides, RunStatus, ScenarioConfig,
    ScenarioError, SweepAxis, PRESET_NAMES,
};

/// 1D two-phase tumor growth simulator.
#[derive(Parser)]
#[command(name = "autotumor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a JSON config or a preset.
    Run {
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory (default: runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    Presets,
    /// Evaluate the free boundary solution as CSV on stdout.
    Analytic {
        #[arg(value_enum)]
        quantity: Quantity,
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long = "t-end", default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = DEFAULT_RADIUS_DT)]
        dt: f64,
        /// Tumor radius for nutrient/pressure profiles (default: R0).
        #[arg(long = "R")]
        radius: Option<f64>,
        /// Number of profile points.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Run a preset over the cartesian product of parameter overrides.
    Sweep {
        #[arg(long)]
        preset: String,
        /// `path.to.key=v1,v2,...`, repeatable.
        #[arg(long, required = true)]
        vary: Vec<String>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (default: sweeps/<preset>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify the invariant log of a finished run directory.
    Check { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    Radius,
    Nutrient,
    Pressure,
}

#[derive(Args)]
struct SetupArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long = "D", default_value_t = 0.3)]
    d: f64,
    #[arg(long = "cB", default_value_t = 1.0)]
    c_b: f64,
    #[arg(long = "R0", default_value_t = 1.0)]
    r0: f64,
}

impl From<&SetupArgs> for AnalyticSetup {
    fn from(s: &SetupArgs) -> Self {
        AnalyticSetup {
            mu: s.mu,
            g: s.g,
            a: s.a,
            d: s.d,
            c_b: s.c_b,
            r0: s.r0,
        }
    }
}

enum Failure {
    Usage(String),
    Run(String),
    /// Downstream reader closed stdout.
    Pipe,
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config { .. } | ScenarioError::UnknownPreset { .. } | ScenarioError::Json { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::Pipe;
        }
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) | Err(Failure::Pipe) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config,
            preset: name,
            out,
        } => {
            let cfg = match (config, name) {
                (Some(path), None) => load_config(&path)?,
                (None, Some(name)) => preset(&name)?,
                _ => unreachable!("clap enforces exactly one source"),
            };
            let out = out.unwrap_or_else(|| Path::new("runs").join(dir_name(&cfg)));
            run_one(&cfg, &out)
        }
        Command::Presets => {
            let mut stdout = io::stdout().lock();
            for name in PRESET_NAMES {
                writeln!(stdout, "{name}")?;
            }
            Ok(())
        }
        Command::Analytic {
            quantity,
            setup,
            t_end,
            dt,
            radius,
            points,
        } => analytic(quantity, &(&setup).into(), t_end, dt, radius, points),
        Command::Sweep {
            preset: name,
            vary,
            jobs,
            out,
        } => sweep(&name, &vary, jobs, out),
        Command::Check { dir } => {
            let report = check_run_dir(&dir)?;
            if report.is_clean() {
                println!("{}: clean", report.manifest.name);
                Ok(())
            } else {
                for p in &report.problems {
                    println!("{}: {p}", report.manifest.name);
                }
                Err(Failure::Run(format!(
                    "{} problem(s) in {}",
                    report.problems.len(),
                    dir.display()
                )))
            }
        }
    }
}

fn run_one(cfg: &ScenarioConfig, out: &Path) -> Result<(), Failure> {
    let outcome = run_scenario(cfg, out)?;
    let m = &outcome.manifest;
    match m.status {
        RunStatus::Completed => {
            println!(
                "{}: {} steps to t = {} in {:.2}s -> {}",
                m.name,
                m.steps,
                m.final_time,
                m.wall_time_seconds,
                out.display()
            );
            Ok(())
        }
        RunStatus::Aborted => Err(Failure::Run(format!(
            "{}: solver aborted, {}; snapshot in {}",
            m.name,
            m.error.as_deref().unwrap_or("unknown error"),
            out.display()
        ))),
    }
}

fn analytic(
    quantity: Quantity,
    s: &AnalyticSetup,
    t_end: f64,
    dt: f64,
    radius: Option<f64>,
    points: usize,
) -> Result<(), Failure> {
    s.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let mut w = io::stdout().lock();
    match quantity {
        Quantity::Radius => {
            let traj = integrate_radius(s, t_end, dt).map_err(|e| Failure::Usage(e.to_string()))?;
            writeln!(w, "t,R,speed")?;
            for ((t, r), v) in traj.times.iter().zip(&traj.radii).zip(&traj.speeds) {
                write_csv_row(&mut w, &[*t, *r, *v])?;
            }
        }
        Quantity::Nutrient | Quantity::Pressure => {
            let r = radius.unwrap_or(s.r0);
            if !(r > 0.0) || points < 2 {
                return Err(Failure::Usage("need --R > 0 and --points >= 2".into()));
            }
            let (header, f): (_, fn(f64, f64, &AnalyticSetup) -> _) = match quantity {
                Quantity::Nutrient => ("x,c", analytic_nutrient),
                _ => ("x,p", analytic_pressure),
            };
            writeln!(w, "{header}")?;
            for i in 0..points {
                let x = -r + 2.0 * r * i as f64 / (points - 1) as f64;
                let v = f(x, r, s).map_err(|e| Failure::Usage(e.to_string()))?;
                write_csv_row(&mut w, &[x, v])?;
            }
        }
    }
    Ok(())
}

fn sweep(name: &str, vary: &[String], jobs: Option<usize>, out: Option<PathBuf>) -> Result<(), Failure> {
    let base = preset(name)?;
    let axes = vary
        .iter()
        .map(|v| SweepAxis::parse(v))
        .collect::<Result<Vec<_>, _>>()?;
    let configs = cartesian(&axes)
        .iter()
        .map(|combo| with_overrides(&base, combo))
        .collect::<Result<Vec<_>, _>>()?;
    let root = out.unwrap_or_else(|| Path::new("sweeps").join(dir_name(&base)));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Run(e.to_string()))?;
    let results: Vec<(String, Result<(), Failure>)> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| (cfg.name.clone(), run_one(cfg, &root.join(dir_name(cfg)))))
            .collect()
    });
    let mut failed = 0;
    for (member, r) in results {
        match r {
            Ok(()) | Err(Failure::Pipe) => {}
            Err(Failure::Usage(m) | Failure::Run(m)) => {
                eprintln!("{member}: {m}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Run(format!("{failed} of {} sweep runs failed", configs.len())));
    }
    Ok(())
}
