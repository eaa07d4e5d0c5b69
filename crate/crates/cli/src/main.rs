use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use jointnet_cli::{
    check_killed, ensure_no_violations, errors_csv, estimate, load_config, load_grid, load_mask, load_scenario, run_cascades, run_scenario, synthesize,
    true_state, validate_idr, validate_inputs, write_run, write_synthesis, ModelChoice, RunOptions, ValidationFailed,
};
use jointnet_core::{CasePolicy, EntityId, FailureScenario, SynthesisConfig};

#[derive(Parser)]
#[command(name = "jointnet", version, about = "Power/communication interdependency analysis")]
struct Cli {
    /// Interdependency model: miim, iim or both.
    #[arg(long, global = true)]
    model: Option<ModelChoice>,
    /// Data-path policy (1: SCADA over SONET only, 2: SCADA may also use DWDM).
    #[arg(long, global = true, value_parser = parse_case)]
    case: Option<CasePolicy>,
    /// Base seed for measurement noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the joint network and write network.json plus rule files.
    Synth {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a failure cascade and write traces and availability masks.
    Cascade {
        /// Scenario file supplying grid, config, kill list and case.
        #[arg(long, conflicts_with_all = ["grid", "config", "killed"])]
        scenario: Option<PathBuf>,
        #[arg(long, required_unless_present = "scenario")]
        grid: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Entity to kill, e.g. "P(12)" or "C(1,2,6,6)". Repeatable.
        #[arg(long = "kill")]
        killed: Vec<String>,
        #[arg(long, default_value = "")]
        label: String,
    },
    /// Monte Carlo state estimation under one or more availability masks.
    Estimate {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long = "mask", required = true)]
        masks: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// JSON list of {bus, vm, va_deg}; defaults to the grid's operating point.
        #[arg(long)]
        true_state: Option<PathBuf>,
        /// Write errors.csv here instead of under --out-dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario file end to end.
    Run { scenario: PathBuf },
    /// Check a grid/config pair or rule files; exits 2 on any problem.
    Validate {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "idr")]
        idr: Vec<PathBuf>,
    },
}

fn parse_case(s: &str) -> Result<CasePolicy, String> {
    s.parse::<u8>()
        .ok()
        .and_then(CasePolicy::from_number)
        .ok_or_else(|| format!("case must be 1 or 2, got '{s}'"))
}

fn config_or_default(path: Option<&PathBuf>) -> Result<SynthesisConfig> {
    path.map(load_config).transpose().map(Option::unwrap_or_default)
}

fn run(cli: Cli) -> Result<()> {
    let out = &cli.out_dir;
    match &cli.command {
        Command::Synth { grid, config } => {
            let net = synthesize(&load_grid(grid)?, &config_or_default(config.as_ref())?)?;
            ensure_no_violations(net.validate().iter().map(ToString::to_string).collect())?;
            for p in write_synthesis(&net, out)? {
                println!("{}", p.display());
            }
        }
        Command::Cascade {
            scenario,
            grid,
            config,
            killed,
            label,
        } => {
            let (net, scenario, case) = match scenario {
                Some(path) => {
                    let sc = load_scenario(path)?;
                    (synthesize(&sc.grid, &sc.config)?, sc.failure, Some(sc.case))
                }
                None => {
                    let grid = grid.as_ref().expect("clap enforces --grid");
                    let net = synthesize(&load_grid(grid)?, &config_or_default(config.as_ref())?)?;
                    let killed = killed
                        .iter()
                        .map(|s| EntityId::parse(s).map_err(|e| ValidationFailed(vec![format!("'{s}': {e}")])))
                        .collect::<Result<Vec<_>, _>>()?;
                    (net, FailureScenario::new(label.clone(), killed), None)
                }
            };
            check_killed(&net, &scenario)?;
            let models = cli.model.unwrap_or_default().models();
            let runs = run_cascades(&net, &models, cli.case.or(case).unwrap_or(CasePolicy::Case1), &scenario)?;
            for r in &runs {
                write_run(r, out)?;
                println!(
                    "{} case {}: converged at T{}, SCADA lost at {:?}",
                    r.model,
                    r.case,
                    r.trace.converged_at,
                    r.mask.scada_lost()
                );
            }
        }
        Command::Estimate {
            grid,
            masks,
            seeds,
            true_state: ts,
            out: csv_out,
        } => {
            let grid = load_grid(grid)?;
            let truth = true_state(&grid, ts.as_deref())?;
            let masks = masks.iter().map(load_mask).collect::<Result<Vec<_>>>()?;
            let reports = estimate(&grid, &truth, &masks, *seeds, cli.seed.unwrap_or(0))?;
            let path = match csv_out {
                Some(p) => p.clone(),
                None => {
                    std::fs::create_dir_all(out)?;
                    out.join("errors.csv")
                }
            };
            std::fs::write(&path, errors_csv(&reports)?).with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
        }
        Command::Run { scenario } => {
            let opts = RunOptions {
                models: cli.model,
                case: cli.case,
                seed: cli.seed,
            };
            let report = run_scenario(scenario, out, opts)?;
            for m in &report.models {
                println!("{}: SCADA lost at {:?}", m.model, m.scada_lost);
            }
            if let Some(d) = &report.diff {
                println!("second-model-only footprint: {:?}", d.only_second());
            }
        }
        Command::Validate { grid, config, idr } => {
            let mut problems = Vec::new();
            if let Some(g) = grid {
                problems.extend(validate_inputs(g, config.as_deref())?);
            }
            for p in idr {
                problems.extend(validate_idr(p)?.into_iter().map(|e| format!("{}: {e}", p.display())));
            }
            for p in &problems {
                eprintln!("{p}");
            }
            ensure_no_violations(problems)?;
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ValidationFailed>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
