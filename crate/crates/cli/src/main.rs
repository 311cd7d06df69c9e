mod commands;
mod settings;

use clap::{Args, Parser, Subcommand};
use settings::{apply_config, preset, Command, Settings, PRESETS};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Adiabatic potentials, synthetic gauge fields, bound states and dynamics
/// of two dipole-dipole coupled Rydberg atoms.
#[derive(Parser, Debug)]
#[command(name = "rydberg-gauge", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON file overriding preset values; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in parameter set named after a reference figure.
    #[arg(long, global = true, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for grid sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Delta / delta (replaces the preset's list).
    #[arg(long, global = true, allow_negative_numbers = true)]
    delta_ratio: Option<f64>,
    /// Omega_L / |delta|.
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Radial grid points.
    #[arg(long, global = true)]
    points: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Adiabatic potential curves or 2D maps of the well state.
    Potentials,
    /// Connections, curvature and commutators along a radial line.
    Gauge,
    /// Vibrational and rotational levels in the well.
    Bound {
        /// Levels per motional quantum number.
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Ehrenfest propagation through the avoided crossing.
    Dynamics {
        /// Starting separation in R0.
        #[arg(long)]
        rho0: Option<f64>,
        /// Time step in 1/|delta|.
        #[arg(long)]
        dt: Option<f64>,
        /// Run length in 1/|delta|.
        #[arg(long)]
        tau_max: Option<f64>,
    },
    /// Run the full check suite and print a pass/fail table.
    Verify,
}

impl Cmd {
    fn kind(&self) -> Command {
        match self {
            Cmd::Potentials => Command::Potentials,
            Cmd::Gauge => Command::Gauge,
            Cmd::Bound { .. } => Command::Bound,
            Cmd::Dynamics { .. } => Command::Dynamics,
            Cmd::Verify => Command::Verify,
        }
    }
}

fn resolve(cli: &Cli) -> Result<Settings, String> {
    let cmd = cli.command.kind();
    let mut s = match &cli.common.preset {
        Some(name) => {
            let (pc, ps) = preset(name).expect("clap restricts preset names");
            if pc != cmd {
                return Err(format!("preset {name} belongs to the {} command", pc.name()));
            }
            ps
        }
        None => Settings::default(),
    };
    if let Some(path) = &cli.common.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        s = apply_config(&s, &text)?;
    }
    let c = &cli.common;
    if let Some(r) = c.delta_ratio {
        s.delta_ratios = vec![r];
    }
    if let Some(k) = c.kappa {
        s.kappa = k;
    }
    if let Some(n) = c.points {
        s.radial.points = n;
    }
    match &cli.command {
        Cmd::Bound { levels: Some(l) } => s.bound.levels = *l,
        Cmd::Dynamics { rho0, dt, tau_max } => {
            if let Some(r) = rho0 {
                s.dynamics.rho0 = *r;
            }
            if let Some(d) = dt {
                s.dynamics.integrator.dt = *d;
            }
            if let Some(t) = tau_max {
                s.dynamics.integrator.tau_max = *t;
            }
        }
        _ => {}
    }
    s.validate()?;
    Ok(s)
}

fn write_outputs(dir: &Path, outcome: &commands::Outcome, manifest: &serde_json::Value, stem: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in &outcome.artifacts {
        std::fs::write(dir.join(&a.name), &a.contents)?;
    }
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(dir.join(format!("{stem}.manifest.json")), text + "\n")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match resolve(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.common.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return ExitCode::from(2);
        }
    }
    let threads = rayon::current_num_threads();
    let cmd = cli.command.kind();
    let preset = cli.common.preset.as_deref();
    let start = Instant::now();
    let outcome = match commands::execute(cmd, &settings, preset) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let manifest = commands::manifest(cmd, preset, &settings, threads, &outcome, start.elapsed().as_secs_f64());
    if let Err(e) = write_outputs(&cli.common.out, &outcome, &manifest, preset.unwrap_or(cmd.name())) {
        eprintln!("error: writing to {}: {e}", cli.common.out.display());
        return ExitCode::FAILURE;
    }
    print!("{}", outcome.report);
    for a in &outcome.artifacts {
        println!("wrote {}", cli.common.out.join(&a.name).display());
    }
    if outcome.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
