use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use zonal_market::clearing::HydroMode;
use zonal_market::io::save_scenario;
use zonal_market::qp::QpSettings;
use zonal_market::run::{self, CaseKind, RunConfig};
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};
use zonal_market::tso::{HorizonMode, DEFAULT_ENUMERATION_CAP};
use zonal_market::validate::{render_table, run_checks, ValidationSettings};

#[derive(Parser)]
#[command(
    name = "zonal-market",
    version,
    about = "Zonal market clearing and interconnector restriction experiments"
)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic scenario directory.
    Generate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate demand curves and fleets and write them as CSV.
    Calibrate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = -0.05, allow_negative_numbers = true)]
        elasticity: f64,
    },
    /// Clear every week without restrictions.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a restriction case and write all reports.
    Optimize(OptimizeArgs),
    /// Recompute the run totals from the per-week tables of a finished run.
    Report {
        /// Run output directory holding run_manifest.json.
        #[arg(long)]
        run: PathBuf,
    },
    /// Check the analytical examples and their market-problem encodings.
    Validate {
        /// Set every tolerance to this value.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Steps per sloped supply curve.
        #[arg(long, default_value_t = ValidationSettings::default().steps)]
        steps: usize,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = SyntheticSpec::default().zones)]
    zones: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().weeks)]
    weeks: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().hours_per_week)]
    hours_per_week: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().renewable_amplitude)]
    renewable_amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    price_level: f64,
    #[arg(long, default_value_t = 1.0)]
    consumption_level: f64,
}

impl SpecArgs {
    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            seed: self.seed,
            zones: self.zones,
            weeks: self.weeks,
            hours_per_week: self.hours_per_week,
            renewable_amplitude: self.renewable_amplitude,
            price_level: self.price_level,
            consumption_level: self.consumption_level,
            ..SyntheticSpec::default()
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Scenario directory. Without it a synthetic scenario is generated.
    #[arg(long, conflicts_with = "seed")]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = SyntheticSpec::default().zones)]
    zones: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().weeks)]
    weeks: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().hours_per_week)]
    hours_per_week: usize,
    /// Only the first N weeks.
    #[arg(long)]
    week_limit: Option<usize>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl InputArgs {
    fn apply(&self, c: &mut RunConfig) {
        match &self.input {
            Some(dir) => {
                c.input_dir = Some(dir.clone());
                c.synthetic = None;
            }
            None => {
                c.input_dir = None;
                c.synthetic = Some(SyntheticSpec {
                    seed: self.seed.unwrap_or(42),
                    zones: self.zones,
                    weeks: self.weeks,
                    hours_per_week: self.hours_per_week,
                    ..SyntheticSpec::default()
                });
            }
        }
        c.week_limit = self.week_limit;
        c.workers = self.workers;
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Relative primal and dual residual tolerance.
    #[arg(long, default_value_t = QpSettings::default().tolerance)]
    tolerance: f64,
    #[arg(long, default_value_t = QpSettings::default().complementarity_tolerance)]
    complementarity_tolerance: f64,
    #[arg(long, default_value_t = QpSettings::default().max_iterations)]
    max_iterations: usize,
}

impl SolverArgs {
    fn settings(&self) -> QpSettings {
        QpSettings {
            tolerance: self.tolerance,
            complementarity_tolerance: self.complementarity_tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Base,
    Longterm,
    Seventy,
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum HydroArg {
    Baseline,
    Proportional,
}

#[derive(Clone, Copy, ValueEnum)]
enum HorizonArg {
    Hourly,
    Longterm,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Run configuration as JSON; other flags except --out and --workers are ignored.
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Replay the run recorded in a run_manifest.json.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "base")]
    case: CaseArg,
    /// Restricted line ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    lines: Option<Vec<String>>,
    /// Capacity levels, comma separated, must include 1.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long)]
    objective_country: Option<String>,
    #[arg(long, value_enum)]
    horizon: Option<HorizonArg>,
    /// How hourly cases replace the weekly hydro budget.
    #[arg(long, value_enum, default_value = "baseline")]
    hydro_mode: HydroArg,
    /// Week-local hours to write to hour_snapshot.json, comma separated.
    #[arg(long, value_delimiter = ',')]
    snapshot_hours: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    enumeration_cap: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

impl OptimizeArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let mut c: RunConfig = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                c.workers = self.input.workers;
                c
            }
            None => {
                let mut c = RunConfig::default();
                self.input.apply(&mut c);
                c.case = match self.case {
                    CaseArg::Base => CaseKind::Base,
                    CaseArg::Longterm => CaseKind::LongTerm,
                    CaseArg::Seventy => CaseKind::Seventy,
                    CaseArg::Custom => CaseKind::Custom,
                };
                c.restricted_lines = self.lines.clone();
                c.levels = self.levels.clone();
                c.objective_country = self.objective_country.clone();
                c.horizon_mode = self.horizon.map(|h| match h {
                    HorizonArg::Hourly => HorizonMode::Hourly,
                    HorizonArg::Longterm => HorizonMode::LongTerm,
                });
                c.hydro_mode = match self.hydro_mode {
                    HydroArg::Baseline => HydroMode::DecoupledBaseline,
                    HydroArg::Proportional => HydroMode::DecoupledProportional,
                };
                c.snapshot_hours = self.snapshot_hours.clone();
                c.enumeration_cap = self.enumeration_cap;
                c.qp = self.solver.settings();
                c
            }
        };
        c.output_dir = self.out.clone();
        Ok(c)
    }
}

fn print_summary(delta: &zonal_market::welfare::WelfareDelta) {
    let a = delta.annualized();
    println!(
        "{:<8} {:>12} {:>12} {:>12} {:>12}  (M€/yr over {} h)",
        "country", "dTW", "dCS", "dPS", "dCR", delta.hours
    );
    let rows = a
        .countries
        .iter()
        .map(|(c, d)| (c.as_str(), d))
        .chain([("Total", &a.system)]);
    for (c, d) in rows {
        println!(
            "{c:<8} {:>12.3} {:>12.3} {:>12.3} {:>12.3}",
            d.tw, d.cs, d.ps, d.cr
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate { spec, out } => {
            let data = generate_synthetic(&spec.spec());
            save_scenario(&out, &data)?;
            println!(
                "wrote {} weeks for {} zones to {}",
                data.weeks.len(),
                data.network.n_zones(),
                out.display()
            );
        }
        Command::Calibrate {
            input,
            out,
            elasticity,
        } => {
            let mut c = RunConfig {
                output_dir: out,
                ..RunConfig::default()
            };
            input.apply(&mut c);
            c.calibration.elasticity = elasticity;
            c.validate()?;
            let failures = run::calibrate_to_dir(&c)?;
            for f in &failures {
                eprintln!("{f}");
            }
            println!("wrote {} and {}", run::DEMAND_FILE, run::FLEETS_FILE);
        }
        Command::Solve { input, out, solver } => {
            let mut c = RunConfig {
                output_dir: out,
                qp: solver.settings(),
                ..RunConfig::default()
            };
            input.apply(&mut c);
            c.validate()?;
            let records = run::solve_to_dir(&c)?;
            let failed = records.iter().filter(|r| r.failure.is_some()).count();
            println!("cleared {} weeks, {failed} failed", records.len() - failed);
        }
        Command::Optimize(args) => {
            let outcome = match &args.manifest {
                Some(m) => run::rerun(m, Some(args.input.workers), Some(args.out.clone()))?,
                None => run::run_case(&args.config()?)?,
            };
            print_summary(&outcome.total);
            if let Some(e) = &outcome.expected {
                println!("expected per week:");
                print_summary(e);
            }
            if !outcome.manifest.failures.is_empty() {
                eprintln!(
                    "{} failures, see {}",
                    outcome.manifest.failures.len(),
                    run::MANIFEST_FILE
                );
            }
        }
        Command::Report { run: dir } => {
            let manifest = run::read_manifest(&dir.join(run::MANIFEST_FILE))?;
            let labels: Vec<String> = manifest
                .weeks
                .iter()
                .filter(|w| w.ok)
                .map(|w| w.label.clone())
                .collect();
            if labels.is_empty() {
                bail!("no successful weeks in {}", dir.display());
            }
            let summary = run::write_summary(&dir, &labels)?;
            print_summary(&summary.delta);
            for r in &summary.availability {
                println!("{:<10} {:>8.2} %", r.line, r.availability_pct);
            }
        }
        Command::Validate { tolerance, steps } => {
            let mut s =
                tolerance.map_or_else(ValidationSettings::default, ValidationSettings::uniform);
            s.steps = steps;
            let checks = run_checks(&s);
            print!("{}", render_table(&checks));
            let failed: Vec<&str> = checks
                .iter()
                .filter(|c| !c.passed())
                .map(|c| c.name.as_str())
                .collect();
            if !failed.is_empty() {
                eprintln!("failed: {}", failed.join(", "));
                return Ok(ExitCode::FAILURE);
            }
            println!("all {} checks passed", checks.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}
