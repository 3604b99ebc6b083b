use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cdgate::cli::{self, ErrorReport, Format, RunContext};
use cdgate::config::{load_preset, preset, RunConfig};
use cdgate::Error;

#[derive(Parser)]
#[command(name = "cdgate", version, about = "Rydberg-blockade CZ gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset name (see `cdgate presets list`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, env = "CDGATE_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Relative integrator tolerance; the absolute tolerance keeps its
    /// default ratio.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Export Omega0, the counterdiabatic term and the detuning.
    Pulse {
        #[command(flatten)]
        common: Common,
        /// Samples per pulse (default from the config).
        #[arg(long)]
        points: Option<usize>,
    },
    /// Run the CZ protocol on all four logical inputs.
    Gate {
        #[command(flatten)]
        common: Common,
    },
    /// Prepare and score the Bell state.
    Bell {
        #[command(flatten)]
        common: Common,
    },
    /// Run the `[sweep]` grid of the config.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Use the dense grid sizes.
        #[arg(long)]
        dense: bool,
    },
    /// Run the `[optimize]` search of the config.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Bundled presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset's TOML.
    Show { name: String },
}

fn load(common: &Common) -> Result<(RunConfig, RunContext), Error> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), None) => RunConfig::load(path)?,
        (None, Some(name)) => load_preset(name)?,
        _ => {
            return Err(Error::Config {
                field: "<cli>".into(),
                reason: "give exactly one of --config or --preset".into(),
            })
        }
    };
    if let Some(tol) = common.tol {
        cli::apply_tolerance(&mut cfg, tol)?;
    }
    let mut ctx = RunContext::new(&common.out_dir);
    ctx.jobs = common.jobs;
    ctx.preset = common.preset.clone();
    ctx.format = match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    Ok((cfg, ctx))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Pulse { common, points } => {
            let (cfg, ctx) = load(&common)?;
            report_outputs(&cli::cmd_pulse(&cfg, &ctx, points)?.outputs);
        }
        Command::Gate { common } => {
            let (cfg, ctx) = load(&common)?;
            let (run, m) = cli::cmd_gate(&cfg, &ctx)?;
            for r in &run.inputs {
                let phase = r.phase.map_or("-".to_string(), |p| format!("{p:+.6}"));
                println!(
                    "|{}>  P = {:.6}  leakage = {:.3e}  phase = {phase}",
                    r.input, r.return_population, r.leakage
                );
            }
            if let Some(c) = run.conditional_phase {
                println!("conditional phase = {c:+.6} rad");
            }
            report_outputs(&m.outputs);
        }
        Command::Bell { common } => {
            let (cfg, ctx) = load(&common)?;
            let (s, m) = cli::cmd_bell(&cfg, &ctx)?;
            println!(
                "F = {:.6}  (uncorrected {:.6}, 1 - F = {:.3e}, leakage {:.3e})",
                s.fidelity, s.fidelity_uncorrected, s.infidelity, s.leakage
            );
            report_outputs(&m.outputs);
        }
        Command::Sweep { common, dense } => {
            let (cfg, ctx) = load(&common)?;
            let (r, m) = cli::cmd_sweep(&cfg, &ctx, dense)?;
            let failed = r.rows.iter().filter(|row| row.error.is_some()).count();
            println!("{} points, {failed} failed", r.rows.len());
            report_outputs(&m.outputs);
        }
        Command::Optimize { common } => {
            let (cfg, ctx) = load(&common)?;
            let (r, m) = cli::cmd_optimize(&cfg, &ctx)?;
            println!(
                "best {:?}  objective {:.6e}  ({} evaluations{})",
                r.best_x,
                r.best_f,
                r.evals,
                if r.max_evals_reached { ", budget exhausted" } else { "" }
            );
            report_outputs(&m.outputs);
        }
        Command::Presets { action } => match action {
            PresetAction::List => cli::preset_list().iter().for_each(|l| println!("{l}")),
            PresetAction::Show { name } => print!("{}", preset(&name)?.text),
        },
    }
    Ok(())
}

fn report_outputs(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = ErrorReport::from(&e);
            eprintln!(
                "{}",
                serde_json::json!({ "error": report })
            );
            ExitCode::from(2)
        }
    }
}
