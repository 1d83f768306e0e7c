//! End-to-end runs: load or generate inputs, calibrate, optimize each week,
//! write per-week tables and a summary, and record a manifest that replays
//! the run.
//!
//! Output layout:
//!
//! ```text
//! <output>/run_manifest.json
//! <output>/welfare_deltas.csv, availability.csv, curtailment_histogram.csv
//! <output>/weeks/<label>/plan.json, welfare_deltas.csv, availability.csv,
//!     curtailment_histogram.csv, mechanism_tags.csv, price_duration.csv,
//!     hour_snapshot.json (when hours are requested)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{calibrate_week, CalibrationConfig};
use crate::clearing::{self, ClearingProblem, HydroMode, MarketSolution};
use crate::io::{load_scenario, IoError, ScenarioData};
use crate::network::{Network, ScenarioWeek};
use crate::qp::QpSettings;
use crate::report::{self, AvailabilityRow, HourSnapshot, HourTag};
use crate::synthetic::{generate_synthetic, SyntheticSpec};
use crate::tso::{
    self, availability_stats, mechanism_tag, HorizonMode, OptimizerSettings, RestrictionCase,
    RestrictionPlan, TsoError, DEFAULT_ENUMERATION_CAP,
};
use crate::welfare::{self, Delta, WelfareDelta};

pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const WEEKS_DIR: &str = "weeks";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Tso(#[from] TsoError),
    #[error("no week could be processed")]
    NoWeeks,
}

fn file_err(path: &Path) -> impl Fn(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Base,
    LongTerm,
    Seventy,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Scenario directory; exclusive with `synthetic`.
    pub input_dir: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    pub case: CaseKind,
    /// Overrides of the case preset. All three are required for `custom`.
    pub restricted_lines: Option<Vec<String>>,
    pub levels: Option<Vec<f64>>,
    pub objective_country: Option<String>,
    pub horizon_mode: Option<HorizonMode>,
    /// Used by hourly cases; long-term weeks keep the budget coupled.
    pub hydro_mode: HydroMode,
    /// Only the first `n` weeks.
    pub week_limit: Option<usize>,
    pub output_dir: PathBuf,
    pub qp: QpSettings,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub enumeration_cap: usize,
    /// Week-local hours written to `hour_snapshot.json`.
    pub snapshot_hours: Vec<usize>,
    pub calibration: CalibrationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_dir: None,
            synthetic: Some(SyntheticSpec::default()),
            case: CaseKind::Base,
            restricted_lines: None,
            levels: None,
            objective_country: None,
            horizon_mode: None,
            hydro_mode: HydroMode::DecoupledBaseline,
            week_limit: None,
            output_dir: PathBuf::from("out"),
            qp: QpSettings::default(),
            workers: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            snapshot_hours: Vec::new(),
            calibration: CalibrationConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.input_dir.is_some() == self.synthetic.is_some() {
            return Err(RunError::Config(
                "give exactly one of an input directory and a synthetic spec".into(),
            ));
        }
        if let Some(s) = &self.synthetic {
            if s.zones < 2 || s.weeks == 0 || s.hours_per_week == 0 {
                return Err(RunError::Config(format!(
                    "synthetic spec needs at least 2 zones, 1 week and 1 hour, got {}/{}/{}",
                    s.zones, s.weeks, s.hours_per_week
                )));
            }
        }
        if self.week_limit == Some(0) {
            return Err(RunError::Config("week limit 0".into()));
        }
        self.calibration
            .validate()
            .map_err(|e| RunError::Config(e.to_string()))?;
        self.restriction_case()?;
        Ok(())
    }

    /// The case preset with any overrides applied.
    pub fn restriction_case(&self) -> Result<RestrictionCase, RunError> {
        let mut case = match self.case {
            CaseKind::Base => RestrictionCase::base(),
            CaseKind::LongTerm => RestrictionCase::long_term(),
            CaseKind::Seventy => RestrictionCase::seventy(),
            CaseKind::Custom => {
                let (Some(lines), Some(levels), Some(country)) = (
                    &self.restricted_lines,
                    &self.levels,
                    &self.objective_country,
                ) else {
                    return Err(RunError::Config(
                        "custom case needs lines, levels and an objective country".into(),
                    ));
                };
                RestrictionCase {
                    restricted_lines: lines.clone(),
                    levels: levels.clone(),
                    horizon_mode: HorizonMode::Hourly,
                    objective_country: country.clone(),
                }
            }
        };
        if let Some(v) = &self.restricted_lines {
            case.restricted_lines = v.clone();
        }
        if let Some(v) = &self.levels {
            case.levels = v.clone();
        }
        if let Some(v) = &self.objective_country {
            case.objective_country = v.clone();
        }
        if let Some(v) = self.horizon_mode {
            case.horizon_mode = v;
        }
        case.validate()?;
        Ok(case)
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            qp: self.qp,
            workers: 0,
            enumeration_cap: self.enumeration_cap,
        }
    }

    /// Read or generate the raw scenario, truncated to `week_limit`.
    pub fn load_inputs(&self) -> Result<ScenarioData, RunError> {
        let mut data = match (&self.input_dir, &self.synthetic) {
            (Some(dir), None) => load_scenario(dir)?,
            (None, Some(spec)) => generate_synthetic(spec),
            _ => {
                return Err(RunError::Config(
                    "give exactly one of an input directory and a synthetic spec".into(),
                ))
            }
        };
        if let Some(n) = self.week_limit {
            data.weeks.truncate(n);
        }
        Ok(data)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, RunError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))
    }
}

/// Calibrate every week, in order; failures carry the week label.
pub fn calibrate_all(
    data: &ScenarioData,
    config: &CalibrationConfig,
) -> Vec<Result<ScenarioWeek, (String, String)>> {
    data.weeks
        .par_iter()
        .map(|raw| {
            calibrate_week(&data.network, &data.generators, raw, config)
                .map_err(|e| (format!("week_{:03}", raw.week), e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekRecord {
    pub label: String,
    pub ok: bool,
    pub hours: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub case: RestrictionCase,
    pub weeks: Vec<WeekRecord>,
    pub failures: Vec<String>,
}

/// One hour of a processed week.
#[derive(Debug, Clone, PartialEq)]
pub struct HourReport {
    pub hour: usize,
    pub levels: Vec<f64>,
    /// Objective country delta and its reference welfare.
    pub objective: Delta,
    pub reference_tw: f64,
    pub system: Delta,
    pub reference_system_tw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeekReport {
    pub label: String,
    pub plan: RestrictionPlan,
    pub delta: WelfareDelta,
    pub hours: Vec<HourReport>,
    pub prices: Vec<Vec<f64>>,
    pub snapshots: Vec<HourSnapshot>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub weeks: Vec<WeekReport>,
    /// Sum over weeks, as written to the summary table.
    pub total: WelfareDelta,
    /// Probability-weighted delta for long-term cases.
    pub expected: Option<WelfareDelta>,
}

fn snapshot_levels<'a>(
    network: &'a Network,
    plan: &'a RestrictionPlan,
    row: usize,
) -> impl Fn(usize) -> f64 + 'a {
    move |l| {
        let id = &network.lines[l].id;
        plan.lines
            .iter()
            .position(|x| x == id)
            .map_or(1.0, |i| plan.level(row, i))
    }
}

fn hourly_week(
    network: &Network,
    week: &ScenarioWeek,
    case: &RestrictionCase,
    config: &RunConfig,
) -> Result<WeekReport, String> {
    let out = tso::optimize_hourly(
        network,
        week,
        case,
        config.hydro_mode,
        &config.optimizer_settings(),
    )
    .map_err(|e| e.to_string())?;
    let mut hours = Vec::new();
    let mut prices = Vec::new();
    let mut snapshots = Vec::new();
    for h in &out.hours {
        if let (Some(d), Some(sol)) = (&h.delta, &h.chosen) {
            hours.push(HourReport {
                hour: h.t,
                levels: h.levels.clone(),
                objective: d.country(&case.objective_country).unwrap_or_default(),
                reference_tw: h.reference_tw,
                system: d.system,
                reference_system_tw: h.reference_system_tw,
            });
            if config.snapshot_hours.contains(&h.t) {
                let levels = snapshot_levels(network, &out.plan, h.t);
                snapshots.push(report::hour_snapshot(&week.label, network, sol, 0, levels));
            }
        }
        if let Some(sol) = &h.chosen {
            prices.push(sol.prices[0].clone());
        }
    }
    let delta = out
        .total_delta()
        .ok_or_else(|| format!("every hour failed: {:?}", out.failures()))?;
    Ok(WeekReport {
        label: week.label.clone(),
        plan: out.plan.clone(),
        delta,
        hours,
        prices,
        snapshots,
        failures: out.failures(),
    })
}

fn long_term_week(
    network: &Network,
    outcome: &tso::WeekOutcome,
    plan: &RestrictionPlan,
    case: &RestrictionCase,
    snapshot_hours: &[usize],
) -> WeekReport {
    let hour_account = |s: &MarketSolution, t: usize| welfare::aggregate_hours(s, network, [t]);
    let hours = (0..outcome.chosen.n_hours())
        .map(|t| {
            let reference = hour_account(&outcome.reference, t);
            let d = welfare::delta(&hour_account(&outcome.chosen, t), &reference)
                .expect("same horizon");
            HourReport {
                hour: t,
                levels: plan.levels[0].clone(),
                objective: d.country(&case.objective_country).unwrap_or_default(),
                reference_tw: reference
                    .country(&case.objective_country)
                    .map_or(0.0, |c| c.tw),
                system: d.system,
                reference_system_tw: reference.system().tw,
            }
        })
        .collect();
    let snapshots = snapshot_hours
        .iter()
        .filter(|&&t| t < outcome.chosen.n_hours())
        .map(|&t| {
            report::hour_snapshot(
                &outcome.label,
                network,
                &outcome.chosen,
                t,
                snapshot_levels(network, plan, 0),
            )
        })
        .collect();
    WeekReport {
        label: outcome.label.clone(),
        plan: plan.clone(),
        delta: outcome.delta.clone(),
        hours,
        prices: outcome.chosen.prices.clone(),
        snapshots,
        failures: Vec::new(),
    }
}

/// Write the per-week tables of `week` under `dir`.
pub fn write_week(dir: &Path, network: &Network, week: &WeekReport) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(file_err(dir))?;
    report::write_json(&dir.join(report::PLAN_FILE), &week.plan)?;
    report::write_welfare_deltas(&dir.join(report::WELFARE_FILE), &week.delta)?;
    report::write_availability(&dir.join(report::AVAILABILITY_FILE), network, &week.plan)?;
    report::write_histogram(
        &dir.join(report::HISTOGRAM_FILE),
        &availability_stats(&week.plan).histogram,
    )?;
    let tags: Vec<HourTag> = week
        .hours
        .iter()
        .map(|h| HourTag {
            hour: h.hour,
            delta: h.objective,
            tag: mechanism_tag(&h.objective, h.reference_tw),
        })
        .collect();
    report::write_mechanism_tags(&dir.join(report::MECHANISM_FILE), &tags)?;
    report::write_price_duration(
        &dir.join(report::PRICE_DURATION_FILE),
        network,
        &week.prices,
    )?;
    if !week.snapshots.is_empty() {
        report::write_json(&dir.join(report::SNAPSHOT_FILE), &week.snapshots)?;
    }
    Ok(())
}

/// Totals recomputed from the per-week tables that were written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub delta: WelfareDelta,
    pub availability: Vec<AvailabilityRow>,
    pub histogram: Vec<usize>,
}

/// Read the per-week tables of `labels` under `output` back and recompute
/// the run totals: welfare changes add up, availability is the hour-weighted
/// mean, histograms add up.
pub fn summarize(output: &Path, labels: &[String]) -> Result<RunSummary, IoError> {
    let mut delta: Option<WelfareDelta> = None;
    let mut availability: Vec<AvailabilityRow> = Vec::new();
    let mut histogram: Vec<usize> = Vec::new();
    let mut weight = 0.0;
    for label in labels {
        let dir = output.join(WEEKS_DIR).join(label);
        let d = report::read_welfare_deltas(&dir.join(report::WELFARE_FILE))?;
        let hours = d.hours as f64;
        match &mut delta {
            None => delta = Some(d),
            Some(acc) => acc.accumulate(&d).map_err(|e| IoError::Schema {
                file: dir.join(report::WELFARE_FILE).display().to_string(),
                line: 0,
                message: e.to_string(),
            })?,
        }
        let rows = report::read_availability(&dir.join(report::AVAILABILITY_FILE))?;
        if availability.is_empty() {
            availability = rows
                .iter()
                .map(|r| AvailabilityRow {
                    availability_pct: 0.0,
                    ..r.clone()
                })
                .collect();
        }
        for (acc, r) in availability.iter_mut().zip(&rows) {
            acc.availability_pct += hours * r.availability_pct;
        }
        weight += hours;
        let h = report::read_histogram(&dir.join(report::HISTOGRAM_FILE))?;
        histogram.resize(histogram.len().max(h.len()), 0);
        for (acc, c) in histogram.iter_mut().zip(h) {
            *acc += c;
        }
    }
    if weight > 0.0 {
        for r in &mut availability {
            r.availability_pct /= weight;
        }
    }
    let delta = delta.unwrap_or(WelfareDelta {
        countries: Vec::new(),
        system: Delta::default(),
        hours: 0,
    });
    Ok(RunSummary {
        delta,
        availability,
        histogram,
    })
}

/// Recompute and write the run-level tables from the per-week tables.
pub fn write_summary(output: &Path, labels: &[String]) -> Result<RunSummary, IoError> {
    let s = summarize(output, labels)?;
    report::write_welfare_deltas(&output.join(report::WELFARE_FILE), &s.delta)?;
    report::write_availability_rows(&output.join(report::AVAILABILITY_FILE), &s.availability)?;
    report::write_histogram(&output.join(report::HISTOGRAM_FILE), &s.histogram)?;
    Ok(s)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(|e| IoError::Schema {
        file: path.display().to_string(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// Run one experiment and write every output. Failing weeks are recorded in
/// the manifest and skipped; the run fails only if no week succeeds.
pub fn run_case(config: &RunConfig) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let case = config.restriction_case()?;
    let data = config.load_inputs()?;
    let network = &data.network;
    case.resolve(network)?;
    let pool = config.pool()?;
    info!(
        "{} weeks, case {:?}, {} lines",
        data.weeks.len(),
        config.case,
        case.restricted_lines.len()
    );

    let calibrated = pool.install(|| calibrate_all(&data, &config.calibration));
    let mut records: Vec<WeekRecord> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut ready: Vec<ScenarioWeek> = Vec::new();
    for c in calibrated {
        match c {
            Ok(w) => ready.push(w),
            Err((label, msg)) => {
                warn!("{label}: calibration failed: {msg}");
                failures.push(format!("{label}: {msg}"));
                records.push(WeekRecord {
                    label,
                    ok: false,
                    hours: 0,
                    failures: vec![msg],
                });
            }
        }
    }

    let mut expected = None;
    let mut reports: Vec<WeekReport> = Vec::new();
    match case.horizon_mode {
        HorizonMode::Hourly => {
            let results: Vec<Result<WeekReport, String>> = pool.install(|| {
                ready
                    .par_iter()
                    .map(|w| hourly_week(network, w, &case, config))
                    .collect()
            });
            for (w, r) in ready.iter().zip(results) {
                match r {
                    Ok(rep) => reports.push(rep),
                    Err(msg) => {
                        warn!("{}: {msg}", w.label);
                        failures.push(format!("{}: {msg}", w.label));
                        records.push(WeekRecord {
                            label: w.label.clone(),
                            ok: false,
                            hours: 0,
                            failures: vec![msg],
                        });
                    }
                }
            }
        }
        HorizonMode::LongTerm => {
            if !ready.is_empty() {
                let p = 1.0 / ready.len() as f64;
                let weighted: Vec<(ScenarioWeek, f64)> =
                    ready.iter().map(|w| (w.clone(), p)).collect();
                let out = pool.install(|| {
                    tso::optimize_long_term(network, &weighted, &case, &config.optimizer_settings())
                })?;
                failures.extend(out.failures.iter().cloned());
                reports = out
                    .weeks
                    .iter()
                    .map(|w| long_term_week(network, w, &out.plan, &case, &config.snapshot_hours))
                    .collect();
                expected = Some(out.expected);
            }
        }
    }
    if reports.is_empty() {
        return Err(RunError::NoWeeks);
    }

    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir).map_err(|e| IoError::File {
        path: out_dir.clone(),
        source: e,
    })?;
    for rep in &reports {
        write_week(&out_dir.join(WEEKS_DIR).join(&rep.label), network, rep)?;
        failures.extend(rep.failures.iter().map(|f| format!("{}: {f}", rep.label)));
        records.push(WeekRecord {
            label: rep.label.clone(),
            ok: true,
            hours: rep.delta.hours,
            failures: rep.failures.clone(),
        });
    }
    records.sort_by(|a, b| a.label.cmp(&b.label));
    let labels: Vec<String> = reports.iter().map(|r| r.label.clone()).collect();
    let summary = write_summary(out_dir, &labels)?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        seed: config.synthetic.as_ref().map(|s| s.seed),
        case,
        weeks: records,
        failures,
    };
    report::write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(RunOutcome {
        manifest,
        weeks: reports,
        total: summary.delta,
        expected,
    })
}

/// Replay the run recorded in `manifest`, optionally with another worker
/// count or output directory.
pub fn rerun(
    manifest: &Path,
    workers: Option<usize>,
    output_dir: Option<PathBuf>,
) -> Result<RunOutcome, RunError> {
    let mut config = read_manifest(manifest)?.config;
    if let Some(w) = workers {
        config.workers = w;
    }
    if let Some(o) = output_dir {
        config.output_dir = o;
    }
    run_case(&config)
}

pub const DEMAND_FILE: &str = "demand_curves.csv";
pub const FLEETS_FILE: &str = "fleets.csv";
pub const SOLVE_FILE: &str = "solve_summary.csv";

/// Calibrate every week and write the demand curves and fleets.
pub fn calibrate_to_dir(config: &RunConfig) -> Result<Vec<String>, RunError> {
    let data = config.load_inputs()?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| IoError::File {
        path: out.clone(),
        source: e,
    })?;
    let calibrated = config
        .pool()?
        .install(|| calibrate_all(&data, &config.calibration));
    let csv_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IoError::Csv {
            path: path.clone(),
            source,
        }
    };
    let demand_path = out.join(DEMAND_FILE);
    let fleets_path = out.join(FLEETS_FILE);
    let mut demand = csv::Writer::from_path(&demand_path).map_err(csv_err(&demand_path))?;
    let mut fleets = csv::Writer::from_path(&fleets_path).map_err(csv_err(&fleets_path))?;
    demand
        .write_record([
            "week",
            "hour",
            "zone",
            "slope",
            "intercept",
            "renewable_mwh",
        ])
        .map_err(csv_err(&demand_path))?;
    fleets
        .write_record([
            "week",
            "zone",
            "type",
            "capacity_mw",
            "energy_budget_mwh",
            "marginal_cost_hour0",
        ])
        .map_err(csv_err(&fleets_path))?;
    let mut failures = Vec::new();
    for c in calibrated {
        let w = match c {
            Ok(w) => w,
            Err((label, msg)) => {
                warn!("{label}: {msg}");
                failures.push(format!("{label}: {msg}"));
                continue;
            }
        };
        for (t, h) in w.hours.iter().enumerate() {
            for (n, z) in data.network.zones.iter().enumerate() {
                demand
                    .write_record([
                        w.label.clone(),
                        t.to_string(),
                        z.id.clone(),
                        h.demand_slope[n].to_string(),
                        h.demand_intercept[n].to_string(),
                        h.renewable_mwh[n].to_string(),
                    ])
                    .map_err(csv_err(&demand_path))?;
            }
        }
        for (k, f) in w.fleets.iter().enumerate() {
            fleets
                .write_record([
                    w.label.clone(),
                    data.network.zones[f.zone].id.clone(),
                    f.gen_type.as_str().to_string(),
                    f.capacity_mw.to_string(),
                    f.energy_budget_mwh.map_or(String::new(), |b| b.to_string()),
                    w.fleet_cost(k, 0).to_string(),
                ])
                .map_err(csv_err(&fleets_path))?;
        }
    }
    demand.flush().map_err(file_err(&demand_path))?;
    fleets.flush().map_err(file_err(&fleets_path))?;
    Ok(failures)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub week: String,
    pub objective_eur: f64,
    pub kkt_residual: f64,
    pub mean_price_eur_mwh: f64,
    pub failure: Option<String>,
}

/// Clear every week without restrictions, hydro coupled, and write a
/// summary plus per-week price-duration tables.
pub fn solve_to_dir(config: &RunConfig) -> Result<Vec<SolveRecord>, RunError> {
    let data = config.load_inputs()?;
    let network = &data.network;
    let pool = config.pool()?;
    let records: Vec<(SolveRecord, Option<MarketSolution>)> = pool.install(|| {
        calibrate_all(&data, &config.calibration)
            .into_par_iter()
            .map(|c| {
                let failed = |week: String, msg: String| {
                    let r = SolveRecord {
                        week,
                        objective_eur: f64::NAN,
                        kkt_residual: f64::NAN,
                        mean_price_eur_mwh: f64::NAN,
                        failure: Some(msg),
                    };
                    (r, None)
                };
                let w = match c {
                    Ok(w) => w,
                    Err((label, msg)) => return failed(label, msg),
                };
                let p = ClearingProblem::week(network, &w);
                match clearing::solve(&p, &config.qp) {
                    Ok(s) => {
                        let kkt = clearing::verify_kkt(&p, &s).max();
                        let cells = (s.n_hours() * s.n_zones()).max(1) as f64;
                        let mean = s.prices.iter().flatten().sum::<f64>() / cells;
                        let r = SolveRecord {
                            week: w.label.clone(),
                            objective_eur: s.objective,
                            kkt_residual: kkt,
                            mean_price_eur_mwh: mean,
                            failure: None,
                        };
                        (r, Some(s))
                    }
                    Err(e) => failed(w.label.clone(), e.to_string()),
                }
            })
            .collect()
    });
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| IoError::File {
        path: out.clone(),
        source: e,
    })?;
    let path = out.join(SOLVE_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|source| IoError::Csv {
        path: path.clone(),
        source,
    })?;
    w.write_record([
        "week",
        "objective_eur",
        "kkt_residual",
        "mean_price_eur_mwh",
        "failure",
    ])
    .map_err(|source| IoError::Csv {
        path: path.clone(),
        source,
    })?;
    for (r, sol) in &records {
        w.write_record([
            r.week.clone(),
            r.objective_eur.to_string(),
            r.kkt_residual.to_string(),
            r.mean_price_eur_mwh.to_string(),
            r.failure.clone().unwrap_or_default(),
        ])
        .map_err(|source| IoError::Csv {
            path: path.clone(),
            source,
        })?;
        if let Some(s) = sol {
            let dir = out.join(WEEKS_DIR).join(&r.week);
            fs::create_dir_all(&dir).map_err(file_err(&dir))?;
            report::write_price_duration(
                &dir.join(report::PRICE_DURATION_FILE),
                network,
                &s.prices,
            )?;
        }
    }
    w.flush().map_err(file_err(&path))?;
    Ok(records.into_iter().map(|(r, _)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_input_source() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.input_dir = Some("x".into());
        assert!(matches!(c.validate(), Err(RunError::Config(_))));
        c.synthetic = None;
        assert!(c.validate().is_ok());
        c.input_dir = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn case_presets_and_overrides() {
        let mut c = RunConfig {
            case: CaseKind::Seventy,
            ..RunConfig::default()
        };
        assert_eq!(c.restriction_case().unwrap().levels, tso::SEVENTY_LEVELS);
        c.levels = Some(vec![1.0]);
        assert_eq!(c.restriction_case().unwrap().levels, [1.0]);
        c.case = CaseKind::Custom;
        assert!(c.restriction_case().is_err());
        c.restricted_lines = Some(vec!["DK1-DE".into()]);
        c.objective_country = Some("DE".into());
        let custom = c.restriction_case().unwrap();
        assert_eq!(custom.horizon_mode, HorizonMode::Hourly);
        assert_eq!(custom.objective_country, "DE");
        c.levels = Some(vec![0.5]);
        assert!(c.restriction_case().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = RunConfig {
            case: CaseKind::LongTerm,
            snapshot_hours: vec![3, 7],
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"longterm\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
