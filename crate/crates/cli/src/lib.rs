//! Command-line front end for `stratcomm-core`: scenario files, the solver
//! commands and CSV/JSON output.
//!
//! Every command reads a scenario (`paper-iv` or a JSON file, see
//! [`scenario_file`]), runs one core operation and emits either a JSON
//! [`output::ResultEnvelope`] or CSV tables. Failures are a single JSON line
//! on stderr and a nonzero exit: 2 for invalid input, 3 for numerical
//! non-convergence, 4 for usage errors.

pub mod error;
pub mod output;
pub mod scenario_file;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use stratcomm_core::binary::{figure_data, BinaryParams, Dataset, DEFAULT_REGION_GRID};
use stratcomm_core::capacity::{capacity, DEFAULT_MAX_ITER, DEFAULT_TOL};
use stratcomm_core::concavify::{
    brute_force_direct, compositions, concavify_constrained, concavify_unconstrained, lagrangian_solve,
};
use stratcomm_core::sim::{simulate_with, CodebookConfig, CodebookDraw, DEFAULT_DELTA, DEFAULT_ETA};
use stratcomm_core::{Belief, DisclosureKernel, GridSpec, Scenario, SolveResult};

pub use crate::error::{CliError, ErrorKind};
use crate::output::{write_csv, ResultEnvelope, ScenarioRef};
pub use crate::scenario_file::{load_scenario, ScenarioFile};

#[derive(Debug, Parser)]
#[command(name = "stratcomm", version, about = "Strategic communication with decoder side information")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file, or `paper-iv` for the built-in binary example.
    #[arg(long, default_value = scenario_file::BUILTIN_PAPER)]
    pub scenario: String,
    /// Channel capacity in bits; computed from the channel when absent.
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Grid resolution (lattice steps per simplex edge, or points per axis).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Numerical tolerance of the command's iterative solver.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Blocklength.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Output file; a directory for multi-table CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Capacity of the scenario's channel.
    Capacity {
        #[command(flatten)]
        common: Common,
    },
    /// Optimal splitting by the grid linear program.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Drop the information constraint.
        #[arg(long)]
        unconstrained: bool,
    },
    /// Optimal splitting through the Lagrangian dual.
    Lagrangian {
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive search over disclosure kernels on a grid.
    Direct {
        #[command(flatten)]
        common: Common,
        /// Number of auxiliary symbols.
        #[arg(long, default_value_t = 2)]
        w_size: usize,
        /// Kernel entry step.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Feasible posterior pairs of the binary example, with and without the state.
    Region {
        #[command(flatten)]
        common: Common,
    },
    /// Every table behind the binary example's plots.
    Figures {
        #[command(flatten)]
        common: Common,
        /// Grid of the feasibility region.
        #[arg(long, default_value_t = DEFAULT_REGION_GRID)]
        region_grid: usize,
    },
    /// Monte Carlo of the random coding scheme.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_ETA)]
        eta: f64,
        /// Typicality tolerance.
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        /// KL threshold of a well-matched position, bits.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Fraction of positions allowed to be badly matched.
        #[arg(long, default_value_t = 0.2)]
        gamma: f64,
        /// Auxiliary symbols of the disclosure kernel found by direct search.
        #[arg(long, default_value_t = 2)]
        w_size: usize,
        /// Kernel entry step of that search.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Use one codebook for all trials instead of one per trial.
        #[arg(long)]
        shared_codebook: bool,
    },
    /// Decoder action and encoder utility at each state over a belief grid.
    BestreplyMap {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Self::Capacity { common }
            | Self::Solve { common, .. }
            | Self::Lagrangian { common }
            | Self::Direct { common, .. }
            | Self::Region { common }
            | Self::Figures { common, .. }
            | Self::Simulate { common, .. }
            | Self::BestreplyMap { common } => common,
        }
    }
}

/// What a command produced, before formatting.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub parameters: Value,
    pub result: Value,
    pub tables: Vec<Dataset>,
    pub warnings: Vec<String>,
    /// One line for the terminal when the output goes to a file.
    pub summary: String,
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn capacity_of(s: &Scenario, common: &Common) -> Result<(f64, Value, stratcomm_core::Dist), CliError> {
    let tol = common.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0) {
        return Err(CliError::usage("--tol must be positive"));
    }
    let r = capacity(s.channel(), tol, DEFAULT_MAX_ITER);
    if !r.converged {
        return Err(CliError::new(
            ErrorKind::NonConvergence,
            format!("capacity did not converge: residual {} after {} iterations", r.residual, r.iterations),
        ));
    }
    match common.capacity {
        Some(c) if !(c >= 0.0 && c.is_finite()) => Err(CliError::usage("--capacity must be a nonnegative number")),
        Some(c) => Ok((c, json!({"value": c, "source": "flag", "channel_capacity": r.capacity}), r.optimal_input)),
        None => Ok((r.capacity, json!({"value": r.capacity, "source": "channel"}), r.optimal_input)),
    }
}

fn grid_of(s: &Scenario, common: &Common) -> GridSpec {
    common.grid.map_or_else(|| GridSpec::default_for(s.nu()), GridSpec::new)
}

fn splitting_table(s: &Scenario, r: &SolveResult) -> Dataset {
    let mut columns = vec![String::from("weight")];
    columns.extend(s.u.symbols().iter().map(|u| format!("p_{u}")));
    columns.extend(s.z.symbols().iter().map(|z| format!("action_{z}")));
    columns.push(String::from("psi_e"));
    columns.push(String::from("h"));
    let rows = r
        .splitting
        .atoms()
        .iter()
        .zip(&r.action_profiles)
        .map(|(a, profile)| {
            let mut row = vec![a.weight];
            row.extend_from_slice(a.belief.mass());
            // -1 marks a state of zero probability under the atom
            row.extend(profile.iter().map(|v| v.map_or(-1.0, |v| v as f64)));
            let b = s.evaluate_belief(a.belief.mass());
            row.push(b.utility);
            row.push(b.entropy);
            row
        })
        .collect();
    Dataset {
        name: String::from("splitting"),
        columns,
        rows,
    }
}

fn solve_outcome(s: &Scenario, r: SolveResult, parameters: Value) -> Outcome {
    let summary = match r.constraint_slack {
        Some(slack) => format!("value {} (constraint slack {})", output::format_number(r.value), output::format_number(slack)),
        None => format!("value {}", output::format_number(r.value)),
    };
    Outcome {
        parameters,
        tables: vec![splitting_table(s, &r)],
        result: to_value(&r),
        warnings: Vec::new(),
        summary,
    }
}

fn binary_params(s: &Scenario) -> Result<BinaryParams, CliError> {
    BinaryParams::from_scenario(s).map_err(|e| CliError::usage(format!("this command needs the binary example: {e}")))
}

fn belief_grid(nu: usize, resolution: usize) -> Vec<Vec<f64>> {
    compositions(resolution, nu)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / resolution as f64).collect())
        .collect()
}

fn bestreply_table(s: &Scenario, resolution: usize) -> Dataset {
    let mut columns: Vec<String> = s.u.symbols().iter().map(|u| format!("p_{u}")).collect();
    for z in s.z.symbols() {
        columns.push(format!("action_{z}"));
        columns.push(format!("psi_e_{z}"));
    }
    let rows = belief_grid(s.nu(), resolution)
        .into_iter()
        .map(|p| {
            let mut row = p.clone();
            for z in 0..s.nz() {
                row.push(s.chosen_action(z, &p) as f64);
                row.push(s.robust_utility(z, &p));
            }
            row
        })
        .collect();
    Dataset {
        name: String::from("bestreply_map"),
        columns,
        rows,
    }
}

/// Runs one parsed command against an already loaded scenario.
pub fn execute(command: &Command, loaded: &scenario_file::Loaded) -> Result<Outcome, CliError> {
    let s = &loaded.scenario;
    let common = command.common();
    let prior = Belief(s.prior().clone());
    match command {
        Command::Capacity { .. } => {
            let tol = common.tol.unwrap_or(DEFAULT_TOL);
            if !(tol > 0.0) {
                return Err(CliError::usage("--tol must be positive"));
            }
            let r = capacity(s.channel(), tol, DEFAULT_MAX_ITER);
            if !r.converged {
                return Err(CliError::new(ErrorKind::NonConvergence, "capacity did not converge"));
            }
            let mut columns = vec![String::from("capacity"), String::from("residual"), String::from("iterations")];
            columns.extend(s.x.symbols().iter().map(|x| format!("p_{x}")));
            let mut row = vec![r.capacity, r.residual, r.iterations as f64];
            row.extend_from_slice(r.optimal_input.mass());
            Ok(Outcome {
                parameters: json!({"tol": tol, "max_iter": DEFAULT_MAX_ITER}),
                result: to_value(&r),
                tables: vec![Dataset {
                    name: String::from("capacity"),
                    columns,
                    rows: vec![row],
                }],
                warnings: Vec::new(),
                summary: format!("capacity {}", output::format_number(r.capacity)),
            })
        }
        Command::Solve { unconstrained, .. } => {
            let g = grid_of(s, common);
            if *unconstrained {
                let r = concavify_unconstrained(s, &prior, &g)?;
                Ok(solve_outcome(s, r, json!({"grid": g, "unconstrained": true})))
            } else {
                let (c, cap, _) = capacity_of(s, common)?;
                let r = concavify_constrained(s, &prior, c, &g)?;
                Ok(solve_outcome(s, r, json!({"grid": g, "unconstrained": false, "capacity": cap})))
            }
        }
        Command::Lagrangian { .. } => {
            let g = grid_of(s, common);
            let (c, cap, _) = capacity_of(s, common)?;
            let t_tol = common.tol.unwrap_or(1e-6);
            if !(t_tol > 0.0) {
                return Err(CliError::usage("--tol must be positive"));
            }
            let r = lagrangian_solve(s, &prior, c, &g, t_tol)?;
            Ok(solve_outcome(s, r, json!({"grid": g, "capacity": cap, "t_tol": t_tol})))
        }
        Command::Direct { w_size, step, .. } => {
            let (c, cap, _) = capacity_of(s, common)?;
            let r = brute_force_direct(s, c, *w_size, *step)?;
            let kernel = DisclosureKernel::from_splitting(&r.splitting, s.prior())?;
            let mut out = solve_outcome(s, r, json!({"capacity": cap, "w_size": w_size, "step": step}));
            out.result["kernel"] = to_value(&kernel.kernel().to_rows());
            Ok(out)
        }
        Command::Region { .. } => {
            let bp = binary_params(s)?;
            let (c, cap, _) = capacity_of(s, common)?;
            let grid = common.grid.unwrap_or(DEFAULT_REGION_GRID);
            let region = bp.feasibility_region(c, grid)?;
            let table = Dataset {
                name: String::from("region"),
                columns: ["q1", "q2", "splits_prior", "with_z", "without_z"].map(String::from).to_vec(),
                rows: region
                    .cells
                    .iter()
                    .map(|cell| {
                        let flag = |b: bool| b as u8 as f64;
                        vec![cell.q1, cell.q2, flag(cell.splits_prior), flag(cell.with_side_info), flag(cell.without_side_info)]
                    })
                    .collect(),
            };
            let result = json!({
                "grid": grid,
                "count_with_z": region.count_with(),
                "count_without_z": region.count_without(),
                "nesting_violations": region.nesting_violations(),
            });
            Ok(Outcome {
                parameters: json!({"capacity": cap, "grid": grid, "p0": bp.p0, "delta1": bp.delta1, "delta2": bp.delta2}),
                summary: format!(
                    "{} cells feasible with z, {} without, {} nesting violations",
                    region.count_with(),
                    region.count_without(),
                    region.nesting_violations()
                ),
                result,
                tables: vec![table],
                warnings: Vec::new(),
            })
        }
        Command::Figures { region_grid, .. } => {
            let bp = binary_params(s)?;
            let (c, cap, _) = capacity_of(s, common)?;
            let grid = common.grid.unwrap_or(2000);
            let tables = figure_data(&bp, c, grid, *region_grid)?;
            Ok(Outcome {
                parameters: json!({"capacity": cap, "grid": grid, "region_grid": region_grid}),
                result: json!({"tables": tables.iter().map(|t| t.name.clone()).collect::<Vec<_>>()}),
                summary: format!("{} tables", tables.len()),
                tables,
                warnings: Vec::new(),
            })
        }
        Command::Simulate {
            eta,
            delta,
            alpha,
            gamma,
            w_size,
            step,
            shared_codebook,
            ..
        } => {
            let (c, cap, input) = capacity_of(s, common)?;
            let direct = brute_force_direct(s, c, *w_size, *step)?;
            let kernel = DisclosureKernel::from_splitting(&direct.splitting, s.prior())?;
            let (config, warnings) = CodebookConfig::from_rates(s, kernel, input, c, common.n, *eta, *delta)?;
            let draw = if *shared_codebook { CodebookDraw::Shared } else { CodebookDraw::PerTrial };
            let report = simulate_with(s, &config, common.trials, *alpha, *gamma, common.seed, draw)?;
            let mut row = vec![
                report.n as f64,
                report.trials as f64,
                report.coverage_rate,
                report.error_rate,
                report.mean_utility_encoder,
                report.stderr_utility_encoder,
                report.mean_utility_decoder,
            ];
            let kl = |x: &Option<stratcomm_core::sim::Summary>| x.map_or(f64::NAN, |k| k.mean);
            row.push(kl(&report.kl_per_position));
            row.push(kl(&report.kl_per_position_no_error));
            row.push(report.b_set_frequency);
            row.push(report.wz_action_agreement.unwrap_or(f64::NAN));
            let table = Dataset {
                name: String::from("simulation"),
                columns: [
                    "n",
                    "trials",
                    "coverage_rate",
                    "error_rate",
                    "mean_utility_encoder",
                    "stderr_utility_encoder",
                    "mean_utility_decoder",
                    "kl_mean",
                    "kl_mean_no_error",
                    "b_set_frequency",
                    "wz_action_agreement",
                ]
                .map(String::from)
                .to_vec(),
                rows: vec![row],
            };
            Ok(Outcome {
                parameters: json!({
                    "capacity": cap,
                    "n": common.n,
                    "trials": common.trials,
                    "seed": common.seed,
                    "codebook_draw": draw,
                    "direct_search": {"w_size": w_size, "step": step, "value": direct.value},
                    "config": config,
                }),
                summary: format!(
                    "mean encoder utility {} (stderr {}), error rate {}",
                    output::format_number(report.mean_utility_encoder),
                    output::format_number(report.stderr_utility_encoder),
                    output::format_number(report.error_rate)
                ),
                result: to_value(&report),
                tables: vec![table],
                warnings,
            })
        }
        Command::BestreplyMap { .. } => {
            let resolution = common.grid.unwrap_or(if s.nu() == 2 { 100 } else { 20 });
            if resolution < 1 {
                return Err(CliError::usage("--grid must be at least 1"));
            }
            let table = bestreply_table(s, resolution);
            Ok(Outcome {
                parameters: json!({"grid": resolution}),
                result: json!({"points": table.rows.len(), "actions": s.v.symbols()}),
                summary: format!("{} belief points", table.rows.len()),
                tables: vec![table],
                warnings: Vec::new(),
            })
        }
    }
}

fn create(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::create(path).map_err(|e| CliError::io(&path.display().to_string(), &e))
}

fn emit(outcome: &Outcome, envelope: &ResultEnvelope, common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::new(ErrorKind::Io, e.to_string());
    match (common.format, &common.out) {
        (Format::Json, None) => stdout.write_all(envelope.to_json().as_bytes()).map_err(io),
        (Format::Json, Some(path)) => {
            create(path)?.write_all(envelope.to_json().as_bytes()).map_err(io)?;
            writeln!(stdout, "{}", outcome.summary).map_err(io)
        }
        (Format::Csv, None) => match outcome.tables.as_slice() {
            [table] => write_csv(stdout, table),
            _ => Err(CliError::usage("this command writes several tables; give --out DIR with --format csv")),
        },
        (Format::Csv, Some(path)) => {
            if let [table] = outcome.tables.as_slice() {
                write_csv(&mut create(path)?, table)?;
            } else {
                std::fs::create_dir_all(path).map_err(|e| CliError::io(&path.display().to_string(), &e))?;
                for table in &outcome.tables {
                    write_csv(&mut create(&path.join(format!("{}.csv", table.name)))?, table)?;
                }
            }
            writeln!(stdout, "{}", outcome.summary).map_err(io)
        }
    }
}

/// Parses `args` (without the program name), runs the command and writes
/// its output. Help and version requests print to `stdout` and succeed.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let echo: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(std::iter::once(std::ffi::OsString::from("stratcomm")).chain(args)) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            return write!(stdout, "{e}").map_err(|e| CliError::new(ErrorKind::Io, e.to_string()));
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return Err(CliError::usage(first));
        }
    };
    let common = cli.command.common();
    let loaded = load_scenario(&common.scenario)?;
    let outcome = execute(&cli.command, &loaded)?;
    let envelope = ResultEnvelope {
        tool: output::TOOL.to_string(),
        version: output::VERSION.to_string(),
        command: echo,
        scenario: Some(ScenarioRef {
            origin: loaded.origin.clone(),
            digest: loaded.digest(),
        }),
        parameters: outcome.parameters.clone(),
        result: outcome.result.clone(),
        tables: outcome.tables.clone(),
        warnings: outcome.warnings.clone(),
    };
    emit(&outcome, &envelope, common, stdout)
}
