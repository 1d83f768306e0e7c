//! Search over a TSO's capacity levels on its interconnectors, maximizing
//! the total welfare of its own country.
//!
//! Two regimes: an hourly plan chosen hour by hour on hydro-decoupled
//! single-hour markets, and one long-term level vector applied to every hour
//! of every week, chosen by expected welfare over coupled weekly solves.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clearing::{
    self, CapacityOverrides, ClearingError, ClearingProblem, HydroMode, MarketSolution,
};
use crate::network::{Network, ScenarioWeek};
use crate::qp::QpSettings;
use crate::synthetic::DANISH_INTERCONNECTORS;
use crate::welfare::{self, Delta, WelfareDelta};

pub const BASE_LEVELS: [f64; 3] = [0.0, 0.5, 1.0];
pub const SEVENTY_LEVELS: [f64; 3] = [0.7, 0.85, 1.0];
pub const DEFAULT_ENUMERATION_CAP: usize = 100_000;

#[derive(Debug, Error)]
pub enum TsoError {
    #[error("{count} combinations exceed the enumeration cap {cap}")]
    EnumerationTooLarge { count: f64, cap: usize },
    #[error("unknown line {0:?}")]
    UnknownLine(String),
    #[error("invalid restriction case: {0}")]
    InvalidCase(String),
    #[error("scenario probabilities sum to {0}, expected 1")]
    Probabilities(f64),
    #[error("unrestricted reference solve failed: {0}")]
    Reference(ClearingError),
    #[error("every combination failed")]
    NoFeasibleCombination,
    #[error(transparent)]
    Clearing(#[from] ClearingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonMode {
    Hourly,
    LongTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionCase {
    pub restricted_lines: Vec<String>,
    pub levels: Vec<f64>,
    pub horizon_mode: HorizonMode,
    pub objective_country: String,
}

impl RestrictionCase {
    fn danish(levels: &[f64], horizon_mode: HorizonMode) -> Self {
        RestrictionCase {
            restricted_lines: DANISH_INTERCONNECTORS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            levels: levels.to_vec(),
            horizon_mode,
            objective_country: "DK".into(),
        }
    }

    /// Hourly choice among 0%, 50% and 100% on the Danish interconnectors.
    pub fn base() -> Self {
        Self::danish(&BASE_LEVELS, HorizonMode::Hourly)
    }

    /// One choice among 0%, 50% and 100% for all hours.
    pub fn long_term() -> Self {
        Self::danish(&BASE_LEVELS, HorizonMode::LongTerm)
    }

    /// Hourly choice among 70%, 85% and 100%.
    pub fn seventy() -> Self {
        Self::danish(&SEVENTY_LEVELS, HorizonMode::Hourly)
    }

    pub fn validate(&self) -> Result<(), TsoError> {
        if self.restricted_lines.is_empty() {
            return Err(TsoError::InvalidCase("no restricted lines".into()));
        }
        if self.levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(TsoError::InvalidCase(format!(
                "levels {:?} outside [0, 1]",
                self.levels
            )));
        }
        if !self.levels.contains(&1.0) {
            return Err(TsoError::InvalidCase("levels must contain 1".into()));
        }
        Ok(())
    }

    /// Levels, descending and deduplicated.
    pub fn sorted_levels(&self) -> Vec<f64> {
        let mut v = self.levels.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v.dedup();
        v
    }

    /// Line indices of the restricted lines in `network`.
    pub fn resolve(&self, network: &Network) -> Result<Vec<usize>, TsoError> {
        self.restricted_lines
            .iter()
            .map(|id| {
                network
                    .line_index(id)
                    .ok_or_else(|| TsoError::UnknownLine(id.clone()))
            })
            .collect()
    }
}

/// Every level vector, odometer order over descending levels with the last
/// line varying fastest. The all-ones vector comes first.
pub fn enumerate_combos(case: &RestrictionCase) -> Result<Vec<Vec<f64>>, TsoError> {
    enumerate_combos_capped(case, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_combos_capped(
    case: &RestrictionCase,
    cap: usize,
) -> Result<Vec<Vec<f64>>, TsoError> {
    case.validate()?;
    let levels = case.sorted_levels();
    let n = case.restricted_lines.len();
    let count = (levels.len() as f64).powi(n as i32);
    if count > cap as f64 {
        return Err(TsoError::EnumerationTooLarge { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; n];
    loop {
        out.push(idx.iter().map(|&i| levels[i]).collect());
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < levels.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Capacity levels per hour (hourly) or one row for all hours (long-term).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionPlan {
    pub lines: Vec<String>,
    pub mode: HorizonMode,
    /// `levels[row][line]`; one row per hour, or a single row.
    pub levels: Vec<Vec<f64>>,
}

impl RestrictionPlan {
    pub fn level(&self, row: usize, line: usize) -> f64 {
        let r = if self.mode == HorizonMode::LongTerm {
            0
        } else {
            row
        };
        self.levels[r][line]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationResult {
    pub index: usize,
    pub combo: Vec<f64>,
    pub objective_country_tw: f64,
    pub system_tw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub qp: QpSettings,
    /// Worker threads; 0 runs on the current rayon pool.
    pub workers: usize,
    pub enumeration_cap: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            qp: QpSettings::default(),
            workers: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl OptimizerSettings {
    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        if self.workers == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
}

fn total_capacity(network: &Network, lines: &[usize], combo: &[f64]) -> f64 {
    lines
        .iter()
        .zip(combo)
        .map(|(&l, &v)| v * network.lines[l].capacity_mw)
        .sum()
}

/// Index of the best combination: highest objective within `eps` of the
/// maximum, then larger available capacity, then the earliest index.
/// `scores` holds `(combo index, objective)` for the successful combinations.
pub fn select_best(
    scores: &[(usize, f64)],
    capacity: impl Fn(usize) -> f64,
    eps: f64,
) -> Option<usize> {
    let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let mut pick: Option<(usize, f64)> = None;
    for &(i, v) in scores {
        if v < best - eps {
            continue;
        }
        let cap = capacity(i);
        match pick {
            Some((_, c)) if cap <= c => {}
            _ => pick = Some((i, cap)),
        }
    }
    pick.map(|p| p.0)
}

fn tie_eps(reference_system_tw: f64) -> f64 {
    1e-8 * (1.0 + reference_system_tw.abs())
}

fn country_tw(account: &welfare::WelfareAccount, country: &str) -> f64 {
    account.country(country).map_or(0.0, |c| c.tw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourResult {
    /// Absolute hour in the week.
    pub t: usize,
    /// Chosen combination index (0, all ones, on failure).
    pub combo: usize,
    pub levels: Vec<f64>,
    /// Chosen minus all-ones, `None` if the hour failed.
    pub delta: Option<WelfareDelta>,
    /// Objective country TW of the all-ones solve.
    pub reference_tw: f64,
    /// System TW of the all-ones solve.
    pub reference_system_tw: f64,
    /// Solution under the chosen levels (the all-ones solve on failure, if any).
    pub chosen: Option<MarketSolution>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourlyOutcome {
    pub case: RestrictionCase,
    pub hydro_mode: HydroMode,
    pub plan: RestrictionPlan,
    pub hours: Vec<HourResult>,
}

impl HourlyOutcome {
    /// Sum of hourly deltas over successful hours.
    pub fn total_delta(&self) -> Option<WelfareDelta> {
        let mut it = self.hours.iter().filter_map(|h| h.delta.as_ref());
        let mut acc = it.next()?.clone();
        for d in it {
            acc.accumulate(d).expect("same countries every hour");
        }
        Some(acc)
    }

    pub fn failures(&self) -> Vec<String> {
        self.hours
            .iter()
            .filter_map(|h| h.failure.as_ref().map(|f| format!("hour {}: {f}", h.t)))
            .collect()
    }
}

fn overrides_for(lines: &[usize], combo: &[f64], t: Option<usize>) -> CapacityOverrides {
    let mut o = CapacityOverrides::none();
    for (&l, &v) in lines.iter().zip(combo) {
        match t {
            Some(t) => o.set(l, t, v),
            None => o.set_uniform(l, v),
        }
    }
    o
}

fn optimize_hour(
    network: &Network,
    week: &ScenarioWeek,
    caps: &clearing::HydroCaps,
    case: &RestrictionCase,
    lines: &[usize],
    combos: &[Vec<f64>],
    qp: &QpSettings,
    t: usize,
) -> HourResult {
    let solve = |i: usize| {
        let p = ClearingProblem::hour(network, week, t, caps).with_overrides(overrides_for(
            lines,
            &combos[i],
            Some(t),
        ));
        clearing::solve(&p, qp)
    };
    let failed = |msg: String,
                  chosen: Option<MarketSolution>,
                  reference_tw: f64,
                  reference_system_tw: f64| {
        warn!("{} hour {t}: {msg}", week.label);
        HourResult {
            t,
            combo: 0,
            levels: combos[0].clone(),
            delta: None,
            reference_tw,
            reference_system_tw,
            chosen,
            failure: Some(msg),
        }
    };
    let reference = match solve(0) {
        Ok(s) => s,
        Err(e) => {
            return failed(
                format!("all-ones solve failed: {e}"),
                None,
                f64::NAN,
                f64::NAN,
            )
        }
    };
    let ref_acc = welfare::aggregate(&reference, network);
    let ref_tw = country_tw(&ref_acc, &case.objective_country);
    let ref_sys = ref_acc.system().tw;
    let mut scores = vec![(0, ref_tw)];
    let mut solutions = vec![None; combos.len()];
    for i in 1..combos.len() {
        match solve(i) {
            Ok(s) => {
                scores.push((
                    i,
                    country_tw(&welfare::aggregate(&s, network), &case.objective_country),
                ));
                solutions[i] = Some(s);
            }
            Err(e) => {
                return failed(
                    format!("combination {:?} failed: {e}", combos[i]),
                    Some(reference),
                    ref_tw,
                    ref_sys,
                )
            }
        }
    }
    let best = select_best(
        &scores,
        |i| total_capacity(network, lines, &combos[i]),
        tie_eps(ref_sys),
    )
    .unwrap_or(0);
    let chosen = if best == 0 {
        reference.clone()
    } else {
        solutions[best].take().expect("solved")
    };
    let delta =
        welfare::delta(&welfare::aggregate(&chosen, network), &ref_acc).expect("same horizon");
    HourResult {
        t,
        combo: best,
        levels: combos[best].clone(),
        delta: Some(delta),
        reference_tw: ref_tw,
        reference_system_tw: ref_sys,
        chosen: Some(chosen),
        failure: None,
    }
}

/// Choose levels hour by hour on single-hour markets with hydro decoupled
/// according to `hydro_mode`. Deltas are against the all-ones solve of the
/// same decoupled hour.
pub fn optimize_hourly(
    network: &Network,
    week: &ScenarioWeek,
    case: &RestrictionCase,
    hydro_mode: HydroMode,
    settings: &OptimizerSettings,
) -> Result<HourlyOutcome, TsoError> {
    let lines = case.resolve(network)?;
    let combos = enumerate_combos_capped(case, settings.enumeration_cap)?;
    if hydro_mode == HydroMode::Coupled {
        return Err(TsoError::InvalidCase(
            "hourly optimization needs a decoupled hydro mode".into(),
        ));
    }
    let caps = clearing::decouple_hydro(network, week, hydro_mode, &settings.qp)
        .map_err(TsoError::Reference)?;
    let hours: Vec<HourResult> = settings.run(|| {
        (0..week.n_hours())
            .into_par_iter()
            .map(|t| optimize_hour(network, week, &caps, case, &lines, &combos, &settings.qp, t))
            .collect()
    });
    let plan = RestrictionPlan {
        lines: case.restricted_lines.clone(),
        mode: HorizonMode::Hourly,
        levels: hours.iter().map(|h| h.levels.clone()).collect(),
    };
    Ok(HourlyOutcome {
        case: case.clone(),
        hydro_mode,
        plan,
        hours,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeekOutcome {
    pub label: String,
    pub probability: f64,
    pub delta: WelfareDelta,
    pub reference: MarketSolution,
    pub chosen: MarketSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongTermOutcome {
    pub case: RestrictionCase,
    pub plan: RestrictionPlan,
    pub combo: usize,
    /// Probability-weighted delta of the chosen vector against all ones.
    pub expected: WelfareDelta,
    pub weeks: Vec<WeekOutcome>,
    /// Every combination that solved in all weeks, in enumeration order.
    pub combinations: Vec<CombinationResult>,
    pub failures: Vec<String>,
}

/// Choose one level vector for all hours of all weeks by expected objective
/// country welfare. Each week is solved as one coupled problem.
pub fn optimize_long_term(
    network: &Network,
    weeks: &[(ScenarioWeek, f64)],
    case: &RestrictionCase,
    settings: &OptimizerSettings,
) -> Result<LongTermOutcome, TsoError> {
    let lines = case.resolve(network)?;
    let combos = enumerate_combos_capped(case, settings.enumeration_cap)?;
    let total: f64 = weeks.iter().map(|w| w.1).sum();
    if weeks.is_empty() || (total - 1.0).abs() > 1e-9 || weeks.iter().any(|w| w.1 < 0.0) {
        return Err(TsoError::Probabilities(total));
    }
    let solve_week = |week: &ScenarioWeek, combo: &[f64]| {
        let p =
            ClearingProblem::week(network, week).with_overrides(overrides_for(&lines, combo, None));
        clearing::solve(&p, &settings.qp)
    };

    type Eval = Result<(f64, f64), String>;
    let evals: Vec<Eval> = settings.run(|| {
        combos
            .par_iter()
            .map(|combo| {
                let (mut obj, mut sys) = (0.0, 0.0);
                for (week, prob) in weeks {
                    let s = solve_week(week, combo).map_err(|e| format!("{}: {e}", week.label))?;
                    let acc = welfare::aggregate(&s, network);
                    obj += prob * country_tw(&acc, &case.objective_country);
                    sys += prob * acc.system().tw;
                }
                Ok((obj, sys))
            })
            .collect()
    });

    let (ref_obj, ref_sys) = match &evals[0] {
        Ok(v) => *v,
        Err(e) => {
            return Err(TsoError::InvalidCase(format!(
                "all-ones combination failed in {e}"
            )))
        }
    };
    let _ = ref_obj;
    let mut failures = Vec::new();
    let mut combinations = Vec::new();
    for (i, e) in evals.iter().enumerate() {
        match e {
            Ok((obj, sys)) => combinations.push(CombinationResult {
                index: i,
                combo: combos[i].clone(),
                objective_country_tw: *obj,
                system_tw: *sys,
            }),
            Err(msg) => {
                warn!("combination {:?} excluded: {msg}", combos[i]);
                failures.push(format!("combination {:?}: {msg}", combos[i]));
            }
        }
    }
    let scores: Vec<(usize, f64)> = combinations
        .iter()
        .map(|c| (c.index, c.objective_country_tw))
        .collect();
    let best = select_best(
        &scores,
        |i| total_capacity(network, &lines, &combos[i]),
        tie_eps(ref_sys),
    )
    .ok_or(TsoError::NoFeasibleCombination)?;

    let week_results: Vec<Result<WeekOutcome, TsoError>> = settings.run(|| {
        weeks
            .par_iter()
            .map(|(week, prob)| {
                let reference = solve_week(week, &combos[0])?;
                let chosen = if best == 0 {
                    reference.clone()
                } else {
                    solve_week(week, &combos[best])?
                };
                let delta = welfare::delta(
                    &welfare::aggregate(&chosen, network),
                    &welfare::aggregate(&reference, network),
                )
                .expect("same horizon");
                Ok(WeekOutcome {
                    label: week.label.clone(),
                    probability: *prob,
                    delta,
                    reference,
                    chosen,
                })
            })
            .collect()
    });
    let week_outcomes = week_results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let parts: Vec<(f64, &WelfareDelta)> = week_outcomes
        .iter()
        .map(|w| (w.probability, &w.delta))
        .collect();
    let expected = WelfareDelta::weighted(&parts).expect("consistent weeks");
    Ok(LongTermOutcome {
        case: case.clone(),
        plan: RestrictionPlan {
            lines: case.restricted_lines.clone(),
            mode: HorizonMode::LongTerm,
            levels: vec![combos[best].clone()],
        },
        combo: best,
        expected,
        weeks: week_outcomes,
        combinations,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityStats {
    pub lines: Vec<String>,
    /// Mean level per line over the plan's rows.
    pub mean_level: Vec<f64>,
    /// `histogram[k]`: rows with exactly `k` lines below level 1.
    pub histogram: Vec<usize>,
    pub rows: usize,
}

pub fn availability_stats(plan: &RestrictionPlan) -> AvailabilityStats {
    let n = plan.lines.len();
    let rows = plan.levels.len();
    let mut mean_level = vec![0.0; n];
    let mut histogram = vec![0; n + 1];
    for row in &plan.levels {
        for (m, v) in mean_level.iter_mut().zip(row) {
            *m += v;
        }
        histogram[row.iter().filter(|&&v| v < 1.0).count()] += 1;
    }
    if rows > 0 {
        for m in &mut mean_level {
            *m /= rows as f64;
        }
    }
    AvailabilityStats {
        lines: plan.lines.clone(),
        mean_level,
        histogram,
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    Flat,
}

impl Direction {
    fn of(v: f64, band: f64) -> Direction {
        if v > band {
            Direction::Up
        } else if v < -band {
            Direction::Down
        } else {
            Direction::Flat
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Flat => "flat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismTag {
    pub tw: Direction,
    pub cs: Direction,
    pub ps: Direction,
    pub cr: Direction,
}

impl MechanismTag {
    /// Rising components joined by `+`, e.g. `cs_up+cr_up`, or `none`.
    pub fn label(&self) -> String {
        let ups: Vec<&str> = [(self.cs, "cs_up"), (self.ps, "ps_up"), (self.cr, "cr_up")]
            .iter()
            .filter(|(d, _)| *d == Direction::Up)
            .map(|(_, s)| *s)
            .collect();
        if ups.is_empty() {
            "none".into()
        } else {
            ups.join("+")
        }
    }

    /// Rent gains alone point to the price-difference mechanism; consumer or
    /// producer gains alone point to the domestic-price mechanism.
    pub fn mechanism(&self) -> &'static str {
        use Direction::Up;
        match (self.cs == Up, self.ps == Up, self.cr == Up) {
            (false, false, false) => "none",
            (false, false, true) => "price_difference",
            (true, false, false) => "domestic_price_consumer",
            (false, true, false) => "domestic_price_producer",
            _ => "mixed",
        }
    }
}

/// Sign pattern of an hour's objective country delta, with a deadband of
/// `1e-6 * |level|` where `level` is that country's welfare in the hour.
pub fn mechanism_tag(delta: &Delta, level: f64) -> MechanismTag {
    let band = 1e-6 * level.abs().max(1.0);
    MechanismTag {
        tw: Direction::of(delta.tw, band),
        cs: Direction::of(delta.cs, band),
        ps: Direction::of(delta.ps, band),
        cr: Direction::of(delta.cr, band),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(lines: usize, levels: &[f64]) -> RestrictionCase {
        RestrictionCase {
            restricted_lines: (0..lines).map(|i| format!("L{i}")).collect(),
            levels: levels.to_vec(),
            horizon_mode: HorizonMode::Hourly,
            objective_country: "DK".into(),
        }
    }

    #[test]
    fn combo_counts_and_order() {
        assert_eq!(enumerate_combos(&case(5, &BASE_LEVELS)).unwrap().len(), 243);
        assert_eq!(
            enumerate_combos(&case(1, &[0.0, 1.0])).unwrap(),
            vec![vec![1.0], vec![0.0]]
        );
        let two = enumerate_combos(&case(2, &BASE_LEVELS)).unwrap();
        assert_eq!(two.len(), 9);
        assert_eq!(two[0], vec![1.0, 1.0]);
        assert_eq!(two[1], vec![1.0, 0.5]);
        assert_eq!(two[3], vec![0.5, 1.0]);
        assert_eq!(two[8], vec![0.0, 0.0]);
        assert!(matches!(
            enumerate_combos_capped(&case(11, &BASE_LEVELS), 100_000),
            Err(TsoError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn case_validation() {
        assert!(case(1, &[0.0, 0.5]).validate().is_err());
        assert!(case(1, &[1.2, 1.0]).validate().is_err());
        assert!(case(0, &[1.0]).validate().is_err());
        for c in [
            RestrictionCase::base(),
            RestrictionCase::seventy(),
            RestrictionCase::long_term(),
        ] {
            c.validate().unwrap();
        }
    }

    #[test]
    fn tie_break_prefers_capacity_then_order() {
        let cap = |i: usize| [10.0, 5.0, 7.0, 7.0][i];
        assert_eq!(
            select_best(&[(0, 1.0), (1, 2.0), (2, 2.0), (3, 2.0)], cap, 1e-9),
            Some(2)
        );
        assert_eq!(
            select_best(&[(0, 2.0), (1, 2.0 + 1e-12)], cap, 1e-9),
            Some(0)
        );
        assert_eq!(select_best(&[(1, 2.0), (2, 1.0)], cap, 1e-9), Some(1));
        assert_eq!(select_best(&[], cap, 1e-9), None);
    }

    #[test]
    fn availability_examples() {
        let plan = RestrictionPlan {
            lines: vec!["A".into(), "B".into()],
            mode: HorizonMode::Hourly,
            levels: vec![
                vec![1.0, 1.0],
                vec![0.0, 1.0],
                vec![1.0, 0.5],
                vec![0.0, 0.5],
            ],
        };
        let s = availability_stats(&plan);
        assert_eq!(s.mean_level, vec![0.5, 0.75]);
        assert_eq!(s.histogram, vec![1, 2, 1]);
        let ones = RestrictionPlan {
            levels: vec![vec![1.0, 1.0]; 5],
            ..plan
        };
        let s = availability_stats(&ones);
        assert_eq!(s.mean_level, vec![1.0, 1.0]);
        assert_eq!(s.histogram, vec![5, 0, 0]);
    }

    #[test]
    fn mechanism_patterns() {
        let consumer = mechanism_tag(
            &Delta {
                tw: 1.0,
                cs: 5.0,
                ps: -3.0,
                cr: -1.0,
            },
            1000.0,
        );
        assert_eq!(consumer.mechanism(), "domestic_price_consumer");
        assert_eq!(consumer.label(), "cs_up");
        let rent = mechanism_tag(
            &Delta {
                tw: 1.0,
                cs: -2.0,
                ps: -1.0,
                cr: 4.0,
            },
            1000.0,
        );
        assert_eq!(rent.mechanism(), "price_difference");
        let flat = mechanism_tag(&Delta::default(), 1e6);
        assert_eq!(flat.mechanism(), "none");
        assert_eq!(flat.tw, Direction::Flat);
        assert_eq!(
            mechanism_tag(
                &Delta {
                    tw: 0.5,
                    cs: 0.5,
                    ps: 0.0,
                    cr: 0.0
                },
                1e6
            )
            .cs,
            Direction::Flat
        );
    }
}
