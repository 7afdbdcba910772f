use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use amrsched_core::audit::audit;
use amrsched_core::baselines::{charger_unaware, energy_aware, rule_based, DispatchPolicy};
use amrsched_core::domain::{compute_metrics, objective, Config, FleetSchedule, Instance, ObjectiveMode};
use amrsched_core::experiments::{
    pareto_csv, pareto_svg, run_suite, soc_svg, to_csv, ExperimentSpec, Method, SuiteResults,
};
use amrsched_core::formulation::{solve_monolithic, BuildOptions, SolveError};
use amrsched_core::generate::{generate, GenParams};
use amrsched_core::io::{from_json, load_instance, load_schedule, save_instance, save_schedule, to_json};
use amrsched_core::matheuristic::{run_with, MatheuristicError, MatheuristicSettings};
use amrsched_solver::{SolveLimits, Status};

const OK: u8 = 0;
const INFEASIBLE: u8 = 1;
const NO_INCUMBENT: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "amrsched", version, about = "Battery-health-aware AMR fleet scheduling")]
struct Cli {
    /// Random seed for instance generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Time budget in seconds.
    #[arg(long, global = true, default_value_t = 300.0)]
    time_limit: f64,
    /// Relative optimality gap for branch-and-bound.
    #[arg(long, global = true, default_value_t = 1e-7)]
    gap: f64,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Generate {
        #[arg(long, default_value_t = 2)]
        robots: usize,
        #[arg(long, default_value_t = 6)]
        tasks: usize,
        #[arg(long, default_value_t = 1)]
        chargers: usize,
        #[arg(long)]
        horizon: Option<f64>,
        /// Override every robot's initial SOC.
        #[arg(long)]
        initial_soc: Option<f64>,
    },
    /// Solve an instance and write the schedule.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "matheuristic")]
        method: Method,
        /// Weights and partition counts as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Iteration log of the matheuristic, one JSON object per line.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Audit a schedule against its instance.
    Validate {
        instance: PathBuf,
        schedule: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Degradation-tardiness sweep over tardiness weights.
    Sweep {
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1, 1.0, 10.0])]
        mu: Vec<f64>,
    },
    /// Run an experiment suite; writes results.csv and results.json.
    Suite {
        /// Spec as JSON; defaults apply to missing fields.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Re-emit suite results, or plot a schedule's SOC.
    Report {
        /// Suite results JSON, or a schedule for `--format svg`.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Instance of the schedule, for `--format svg`.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        robot: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

/// Failure with its exit code.
struct Fail(u8, String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(USAGE, e.to_string())
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Fail> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Fail(USAGE, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn limits(cli: &Cli) -> SolveLimits {
    SolveLimits {
        rel_gap: cli.gap,
        ..SolveLimits::default()
    }
    .with_time_limit(Duration::from_secs_f64(cli.time_limit))
}

fn solve_error(e: SolveError) -> Fail {
    match e {
        SolveError::NoSolution(Status::Infeasible) => Fail(INFEASIBLE, "model is infeasible".into()),
        SolveError::NoSolution(s) => Fail(NO_INCUMBENT, format!("no incumbent, solver stopped with {s:?}")),
        e => Fail(USAGE, e.to_string()),
    }
}

fn solve(
    cli: &Cli,
    inst: &Instance,
    cfg: &Config,
    method: Method,
    log: Option<&Path>,
) -> Result<(FleetSchedule, String), Fail> {
    let lim = limits(cli);
    Ok(match method {
        Method::Rule => {
            let s = rule_based(inst, &DispatchPolicy::default()).map_err(|e| Fail(INFEASIBLE, e.to_string()))?;
            (s, "heuristic".into())
        }
        Method::Energy => {
            let o = energy_aware(inst, cfg, &lim).map_err(solve_error)?;
            (o.schedule, format!("{:?}", o.status))
        }
        Method::NoCharger => {
            let o = charger_unaware(inst, cfg, &lim).map_err(solve_error)?;
            (o.repaired, format!("{:?}", o.planned.status))
        }
        Method::Monolithic => {
            let (_, o) = solve_monolithic(inst, cfg, &BuildOptions::default(), &lim).map_err(solve_error)?;
            (o.schedule, format!("{:?}", o.status))
        }
        Method::Matheuristic => {
            let settings = MatheuristicSettings {
                time_limit: lim.time_limit,
                ..MatheuristicSettings::default()
            };
            match run_with(inst, cfg, &settings, &lim) {
                Ok(o) => {
                    if let Some(p) = log {
                        emit(Some(p), &o.log.to_json_lines())?;
                    }
                    (o.schedule, format!("{:?}", o.stop))
                }
                Err(MatheuristicError::NoIncumbent { log: l }) => {
                    if let Some(p) = log {
                        emit(Some(p), &l.to_json_lines())?;
                    }
                    return Err(Fail(NO_INCUMBENT, "no feasible fleet plan found".into()));
                }
                Err(e) => return Err(e.into()),
            }
        }
    })
}

fn run(cli: &Cli) -> Result<(), Fail> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate {
            robots,
            tasks,
            chargers,
            horizon,
            initial_soc,
        } => {
            let mut params = GenParams::new(*robots, *tasks, *chargers, cli.seed);
            if let Some(h) = horizon {
                params = params.with_horizon(*h);
            }
            let mut inst = generate(&params)?;
            if let Some(s0) = initial_soc {
                inst.robots.iter_mut().for_each(|r| r.s0 = *s0);
                inst.validate()?;
            }
            match out {
                Some(p) => save_instance(p, &inst)?,
                None => println!("{}", to_json(&inst)),
            }
        }
        Command::Solve {
            instance,
            method,
            config,
            log,
        } => {
            let inst = load_instance(instance)?;
            let cfg: Config = match config {
                Some(p) => from_json(&fs::read_to_string(p)?)?,
                None => Config::default(),
            };
            cfg.validate()?;
            let (schedule, status) = solve(cli, &inst, &cfg, *method, log.as_deref())?;
            let m = compute_metrics(&inst, &schedule)?;
            let obj = objective(&inst, &schedule, &cfg, ObjectiveMode::Exact)?;
            eprintln!(
                "{method}: status {status}, objective {obj:.6e}, degradation {:.6e}, tardiness {:.3}, queueing {:.3}",
                m.total_degradation, m.total_tardiness, m.total_queueing
            );
            match out {
                Some(p) => save_schedule(p, &schedule)?,
                None => println!("{}", to_json(&schedule)),
            }
        }
        Command::Validate { instance, schedule, tol } => {
            let inst = load_instance(instance)?;
            let s = load_schedule(schedule)?;
            let rep = audit(&inst, &s, *tol)?;
            emit(out, &rep.to_text())?;
            if !rep.is_clean() {
                return Err(Fail(INFEASIBLE, format!("{} violations", rep.violations.len())));
            }
        }
        Command::Sweep { instance, mu } => {
            let inst = load_instance(instance)?;
            let lim = limits(cli);
            let settings = MatheuristicSettings {
                time_limit: lim.time_limit,
                ..MatheuristicSettings::default()
            };
            let pts = amrsched_core::experiments::pareto_sweep(&inst, mu, &Config::default(), &settings, &lim)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    emit(Some(&dir.join("pareto.csv")), &pareto_csv(&pts)?)?;
                    emit(Some(&dir.join("pareto.svg")), &pareto_svg(&pts))?;
                }
                None => print!("{}", pareto_csv(&pts)?),
            }
        }
        Command::Suite { spec } => {
            let spec: ExperimentSpec = match spec {
                Some(p) => from_json(&fs::read_to_string(p)?)?,
                None => ExperimentSpec::default(),
            };
            let spec = ExperimentSpec {
                time_limit: cli.time_limit.min(spec.time_limit),
                ..spec
            };
            let rows = run_suite(&spec)?;
            let results = SuiteResults { spec, rows };
            match out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    emit(Some(&dir.join("results.csv")), &to_csv(&results.rows)?)?;
                    emit(Some(&dir.join("results.json")), &to_json(&results))?;
                }
                None => print!("{}", to_csv(&results.rows)?),
            }
        }
        Command::Report {
            input,
            format,
            instance,
            robot,
        } => match format {
            Format::Svg => {
                let Some(ip) = instance else {
                    return Err(Fail(USAGE, "--format svg needs --instance".into()));
                };
                let inst = load_instance(ip)?;
                let s = load_schedule(input)?;
                if *robot >= s.robots.len() {
                    return Err(Fail(USAGE, format!("no robot {robot}")));
                }
                emit(out, &soc_svg(&inst, &s, *robot))?;
            }
            Format::Csv | Format::Json => {
                let results: SuiteResults = from_json(&fs::read_to_string(input)?)?;
                let text = match format {
                    Format::Csv => to_csv(&results.rows)?,
                    _ => to_json(&results),
                };
                emit(out, &text)?;
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::from(OK),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
