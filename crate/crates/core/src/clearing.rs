//! Day-ahead market clearing as a welfare-maximizing quadratic program.
//!
//! The consumers, the price-taking producers and the flow-setting market
//! operator are each solving their own problem; stacking their optimality
//! conditions with the zonal balance gives a complementarity system that is
//! exactly the optimality system of one concave quadratic program:
//!
//! ```text
//!   max  Σ_{n,t} (½ a_nt d_nt + b_nt) d_nt  -  Σ_{k,t} C_kt q_kt
//!   s.t. 0 <= q_kt <= G_k                       (capacity)
//!        Σ_t q_kt <= Q_k                        (hydro energy budget)
//!        d_nt + Σ_l A_nl f_lt = Σ_{k∈n} q_kt + R_nt   (balance, dual = price)
//!        -F_lt <= f_lt <= F_lt,  d_nt >= 0
//! ```
//!
//! [`verify_kkt`] checks the three agents' conditions on a solution
//! independently of how it was obtained.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{HourData, Network, ScenarioWeek};
use crate::qp::{self, QpError, QpSettings, QpStatus, QuadraticProgram, RowKind};

#[derive(Debug, Error)]
pub enum ClearingError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("capacity override {value} for line {line}, hour {hour} is outside [0, 1]")]
    Override {
        line: usize,
        hour: usize,
        value: f64,
    },
    #[error("market problem is infeasible")]
    Infeasible,
    #[error("solver produced non-finite values")]
    Numerical,
    #[error("solver stopped after {iterations} iterations (KKT residual {residual:.3e})")]
    MaxIterations {
        iterations: usize,
        residual: f64,
        best: Box<MarketSolution>,
    },
    #[error(transparent)]
    Qp(#[from] QpError),
}

/// Per-line availability fractions applied to the physical line capacity.
/// Lookups fall back from `(line, hour)` to a line-wide value to 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacityOverrides {
    hourly: BTreeMap<(usize, usize), f64>,
    uniform: BTreeMap<usize, f64>,
}

impl CapacityOverrides {
    pub fn none() -> Self {
        Self::default()
    }

    /// Apply `fraction` to `line` in every hour.
    pub fn uniform(mut self, line: usize, fraction: f64) -> Self {
        self.uniform.insert(line, fraction);
        self
    }

    pub fn set(&mut self, line: usize, hour: usize, fraction: f64) {
        self.hourly.insert((line, hour), fraction);
    }

    pub fn set_uniform(&mut self, line: usize, fraction: f64) {
        self.uniform.insert(line, fraction);
    }

    pub fn factor(&self, line: usize, hour: usize) -> f64 {
        self.hourly
            .get(&(line, hour))
            .or_else(|| self.uniform.get(&line))
            .copied()
            .unwrap_or(1.0)
    }

    fn validate(&self, hours: &Range<usize>, n_lines: usize) -> Result<(), ClearingError> {
        for (&(line, hour), &value) in &self.hourly {
            if !(0.0..=1.0).contains(&value) || line >= n_lines {
                return Err(ClearingError::Override { line, hour, value });
            }
            if !hours.contains(&hour) {
                return Err(ClearingError::Dimension(format!(
                    "override for hour {hour} outside {hours:?}"
                )));
            }
        }
        for (&line, &value) in &self.uniform {
            if !(0.0..=1.0).contains(&value) || line >= n_lines {
                return Err(ClearingError::Override {
                    line,
                    hour: usize::MAX,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// How the weekly hydro energy budget enters the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HydroMode {
    /// Keep the weekly budget rows; hours are coupled.
    Coupled,
    /// Cap every hour's hydro output at an unrestricted weekly solve's dispatch.
    DecoupledBaseline,
    /// Cap every hour's hydro output at `Q / T`.
    DecoupledProportional,
}

/// Per-hour output caps replacing the weekly budget, `caps[t][fleet]`
/// (absolute hour index, infinite for fleets without a budget).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroCaps {
    pub caps: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HydroCoupling<'a> {
    Coupled,
    HourlyCaps(&'a HydroCaps),
}

#[derive(Debug, Clone)]
pub struct ClearingProblem<'a> {
    pub network: &'a Network,
    pub week: &'a ScenarioWeek,
    /// Absolute hour indices into `week.hours`.
    pub hours: Range<usize>,
    pub overrides: CapacityOverrides,
    pub hydro: HydroCoupling<'a>,
}

impl<'a> ClearingProblem<'a> {
    /// The whole week, unrestricted, hydro coupled.
    pub fn week(network: &'a Network, week: &'a ScenarioWeek) -> Self {
        ClearingProblem {
            network,
            week,
            hours: 0..week.n_hours(),
            overrides: CapacityOverrides::none(),
            hydro: HydroCoupling::Coupled,
        }
    }

    /// A single hour with per-hour hydro caps.
    pub fn hour(
        network: &'a Network,
        week: &'a ScenarioWeek,
        t: usize,
        caps: &'a HydroCaps,
    ) -> Self {
        ClearingProblem {
            network,
            week,
            hours: t..t + 1,
            overrides: CapacityOverrides::none(),
            hydro: HydroCoupling::HourlyCaps(caps),
        }
    }

    pub fn with_overrides(mut self, overrides: CapacityOverrides) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn n_hours(&self) -> usize {
        self.hours.len()
    }

    /// Available transfer capacity of `line` in absolute hour `t`.
    pub fn line_capacity(&self, line: usize, t: usize) -> f64 {
        self.network.lines[line].capacity_mw * self.overrides.factor(line, t)
    }

    /// Hourly output bound of `fleet` in absolute hour `t`.
    pub fn fleet_capacity(&self, fleet: usize, t: usize) -> f64 {
        let g = self.week.fleets[fleet].capacity_mw;
        match self.hydro {
            HydroCoupling::Coupled => g,
            HydroCoupling::HourlyCaps(c) => g.min(c.caps[t][fleet].max(0.0)),
        }
    }

    /// Fleets whose weekly budget is enforced as a row.
    pub fn budget_fleets(&self) -> Vec<usize> {
        match self.hydro {
            HydroCoupling::Coupled => self
                .week
                .fleets
                .iter()
                .enumerate()
                .filter(|(_, f)| f.energy_budget_mwh.is_some_and(f64::is_finite))
                .map(|(k, _)| k)
                .collect(),
            HydroCoupling::HourlyCaps(_) => Vec::new(),
        }
    }
}

/// Variable and row positions of a built market QP.
#[derive(Debug, Clone, PartialEq)]
pub struct QpLayout {
    pub n_zones: usize,
    pub n_fleets: usize,
    pub n_lines: usize,
    pub n_hours: usize,
    /// (fleet, row) for every budget row.
    pub budget_rows: Vec<(usize, usize)>,
}

impl QpLayout {
    fn per_hour(&self) -> usize {
        self.n_zones + self.n_fleets + self.n_lines
    }
    pub fn demand(&self, t: usize, n: usize) -> usize {
        t * self.per_hour() + n
    }
    pub fn dispatch(&self, t: usize, k: usize) -> usize {
        t * self.per_hour() + self.n_zones + k
    }
    pub fn flow(&self, t: usize, l: usize) -> usize {
        t * self.per_hour() + self.n_zones + self.n_fleets + l
    }
    pub fn balance_row(&self, t: usize, n: usize) -> usize {
        t * self.n_zones + n
    }
    pub fn n_vars(&self) -> usize {
        self.n_hours * self.per_hour()
    }
}

#[derive(Debug, Clone)]
pub struct MarketQp {
    pub qp: QuadraticProgram,
    pub layout: QpLayout,
}

/// Assemble the minimization form (negated welfare) of the clearing problem.
///
/// Balance rows are written as `Σq - d - Σ A f = -R` so that their duals are
/// the zonal prices directly; budget rows as `Σ_t q <= Q`, whose negated dual
/// is the water value.
pub fn build_qp(problem: &ClearingProblem<'_>) -> Result<MarketQp, ClearingError> {
    let net = problem.network;
    let week = problem.week;
    let (nz, nl, nk) = (net.n_zones(), net.n_lines(), week.fleets.len());
    if problem.hours.end > week.n_hours() || problem.hours.is_empty() {
        return Err(ClearingError::Dimension(format!(
            "hours {:?} outside a {}-hour week",
            problem.hours,
            week.n_hours()
        )));
    }
    if net.incidence.n_zones() != nz || net.incidence.n_lines() != nl {
        return Err(ClearingError::Dimension(
            "incidence does not match network".into(),
        ));
    }
    if let Some(k) = week.fleets.iter().position(|f| f.zone >= nz) {
        return Err(ClearingError::Dimension(format!(
            "fleet {k} sits in an unknown zone"
        )));
    }
    for t in problem.hours.clone() {
        let h = &week.hours[t];
        if h.renewable_mwh.len() != nz
            || h.demand_slope.len() != nz
            || h.demand_intercept.len() != nz
        {
            return Err(ClearingError::Dimension(format!(
                "hour {t} zone vectors differ from {nz} zones"
            )));
        }
        if let HydroCoupling::HourlyCaps(c) = problem.hydro {
            if c.caps.get(t).map_or(true, |row| row.len() != nk) {
                return Err(ClearingError::Dimension(format!(
                    "hydro caps missing for hour {t}"
                )));
            }
        }
    }
    problem.overrides.validate(&problem.hours, nl)?;

    let layout = QpLayout {
        n_zones: nz,
        n_fleets: nk,
        n_lines: nl,
        n_hours: problem.n_hours(),
        budget_rows: Vec::new(),
    };
    let mut qp = QuadraticProgram::with_vars(0);
    let mut layout = layout;
    for (lt, t) in problem.hours.clone().enumerate() {
        let h = &week.hours[t];
        for n in 0..nz {
            let v = qp.add_var(
                -h.demand_slope[n],
                -h.demand_intercept[n],
                0.0,
                f64::INFINITY,
            );
            debug_assert_eq!(v, layout.demand(lt, n));
        }
        for k in 0..nk {
            let cap = problem.fleet_capacity(k, t);
            let v = qp.add_var(0.0, week.fleet_cost(k, t), 0.0, cap);
            debug_assert_eq!(v, layout.dispatch(lt, k));
        }
        for l in 0..nl {
            let cap = problem.line_capacity(l, t);
            let v = qp.add_var(0.0, 0.0, -cap, cap);
            debug_assert_eq!(v, layout.flow(lt, l));
        }
    }
    for (lt, t) in problem.hours.clone().enumerate() {
        let h = &week.hours[t];
        for n in 0..nz {
            let mut coeffs = vec![(layout.demand(lt, n), -1.0)];
            for (k, _) in week.fleets_in(n) {
                coeffs.push((layout.dispatch(lt, k), 1.0));
            }
            for l in 0..nl {
                let a = net.incidence.get(n, l);
                if a != 0 {
                    coeffs.push((layout.flow(lt, l), -(a as f64)));
                }
            }
            let r = qp.add_row(coeffs, RowKind::Eq, -h.renewable_mwh[n], Some(lt));
            debug_assert_eq!(r, layout.balance_row(lt, n));
        }
    }
    for k in problem.budget_fleets() {
        let budget = week.fleets[k].energy_budget_mwh.unwrap_or(f64::INFINITY);
        let coeffs = (0..layout.n_hours)
            .map(|lt| (layout.dispatch(lt, k), 1.0))
            .collect();
        let r = qp.add_row(coeffs, RowKind::Le, budget, None);
        layout.budget_rows.push((k, r));
    }
    Ok(MarketQp { qp, layout })
}

/// Inputs of the solved hours, kept with the solution so that welfare
/// accounting needs nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedInputs {
    pub hour_data: Vec<HourData>,
    pub fleet_zone: Vec<usize>,
    /// `[t][fleet]`
    pub fleet_cost: Vec<Vec<f64>>,
    pub fleet_capacity: Vec<Vec<f64>>,
    /// `[t][line]`
    pub line_capacity: Vec<Vec<f64>>,
    /// Zone index pair `(from, to)` per line.
    pub line_ends: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSolution {
    pub hours: Range<usize>,
    /// `[t][zone]`, MWh
    pub demand: Vec<Vec<f64>>,
    /// `[t][fleet]`, MWh
    pub dispatch: Vec<Vec<f64>>,
    /// `[t][line]`, MWh, positive from → to
    pub flows: Vec<Vec<f64>>,
    /// `[t][zone]`, €/MWh
    pub prices: Vec<Vec<f64>>,
    /// Shadow value of each fleet's energy budget, €/MWh (0 if not enforced).
    pub water_values: Vec<f64>,
    /// Welfare (gross consumer value minus production cost), €.
    pub objective: f64,
    pub kkt_residual: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub inputs: SolvedInputs,
}

impl MarketSolution {
    pub fn n_hours(&self) -> usize {
        self.demand.len()
    }

    pub fn n_zones(&self) -> usize {
        self.inputs
            .hour_data
            .first()
            .map_or(0, |h| h.demand_slope.len())
    }

    /// Sum of dispatch in zone `n`, local hour `t`.
    pub fn zone_dispatch(&self, t: usize, n: usize) -> f64 {
        self.inputs
            .fleet_zone
            .iter()
            .enumerate()
            .filter(|(_, &z)| z == n)
            .map(|(k, _)| self.dispatch[t][k])
            .sum()
    }
}

/// Build, solve and unpack. A non-converged solve is returned as
/// [`ClearingError::MaxIterations`] carrying the last iterate.
pub fn solve(
    problem: &ClearingProblem<'_>,
    settings: &QpSettings,
) -> Result<MarketSolution, ClearingError> {
    let built = build_qp(problem)?;
    solve_built(problem, &built, settings)
}

pub fn solve_built(
    problem: &ClearingProblem<'_>,
    built: &MarketQp,
    settings: &QpSettings,
) -> Result<MarketSolution, ClearingError> {
    let raw = qp::solve(&built.qp, settings)?;
    let lay = &built.layout;
    let nh = lay.n_hours;
    let week = problem.week;
    let mut demand = vec![vec![0.0; lay.n_zones]; nh];
    let mut dispatch = vec![vec![0.0; lay.n_fleets]; nh];
    let mut flows = vec![vec![0.0; lay.n_lines]; nh];
    let mut prices = vec![vec![0.0; lay.n_zones]; nh];
    for t in 0..nh {
        for n in 0..lay.n_zones {
            demand[t][n] = raw.x[lay.demand(t, n)];
            prices[t][n] = raw.y[lay.balance_row(t, n)];
        }
        for k in 0..lay.n_fleets {
            dispatch[t][k] = raw.x[lay.dispatch(t, k)];
        }
        for l in 0..lay.n_lines {
            flows[t][l] = raw.x[lay.flow(t, l)];
        }
    }
    let mut water_values = vec![0.0; lay.n_fleets];
    for &(k, r) in &lay.budget_rows {
        water_values[k] = -raw.y[r];
    }
    let hours: Vec<usize> = problem.hours.clone().collect();
    let inputs = SolvedInputs {
        hour_data: hours.iter().map(|&t| week.hours[t].clone()).collect(),
        fleet_zone: week.fleets.iter().map(|f| f.zone).collect(),
        fleet_cost: hours
            .iter()
            .map(|&t| (0..lay.n_fleets).map(|k| week.fleet_cost(k, t)).collect())
            .collect(),
        fleet_capacity: hours
            .iter()
            .map(|&t| {
                (0..lay.n_fleets)
                    .map(|k| problem.fleet_capacity(k, t))
                    .collect()
            })
            .collect(),
        line_capacity: hours
            .iter()
            .map(|&t| {
                (0..lay.n_lines)
                    .map(|l| problem.line_capacity(l, t))
                    .collect()
            })
            .collect(),
        line_ends: (0..lay.n_lines)
            .map(|l| problem.network.incidence.endpoints(l))
            .collect(),
    };
    let solution = MarketSolution {
        hours: problem.hours.clone(),
        demand,
        dispatch,
        flows,
        prices,
        water_values,
        objective: -raw.objective,
        kkt_residual: raw.kkt_residual(),
        status: raw.status,
        iterations: raw.iterations,
        inputs,
    };
    match raw.status {
        QpStatus::Optimal => Ok(solution),
        QpStatus::Infeasible | QpStatus::Unbounded => Err(ClearingError::Infeasible),
        QpStatus::Numerical => Err(ClearingError::Numerical),
        QpStatus::MaxIterations => Err(ClearingError::MaxIterations {
            iterations: raw.iterations,
            residual: raw.kkt_residual(),
            best: Box::new(solution),
        }),
    }
}

/// Largest violation of each agent's optimality conditions.
///
/// The producer, consumer and operator entries are natural residuals
/// `|x - proj(x + g)|` in units normalized by the problem's price and
/// quantity scales. `clearing` is the largest zonal balance violation
/// divided by the quantity scale. All entries are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub producer: f64,
    pub consumer: f64,
    pub operator: f64,
    pub clearing: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.producer
            .max(self.consumer)
            .max(self.operator)
            .max(self.clearing)
    }
}

/// Check the optimality conditions of producers, consumers, the market
/// operator and the balance constraints, using only `problem` data and the
/// primal-dual values in `solution`.
pub fn verify_kkt(problem: &ClearingProblem<'_>, solution: &MarketSolution) -> KktReport {
    let net = problem.network;
    let week = problem.week;
    let hours: Vec<usize> = problem.hours.clone().collect();
    let (nz, nl, nk) = (net.n_zones(), net.n_lines(), week.fleets.len());
    let finite = [
        &solution.demand,
        &solution.dispatch,
        &solution.flows,
        &solution.prices,
    ]
    .iter()
    .all(|m| m.iter().flatten().all(|v| v.is_finite()))
        && solution.water_values.iter().all(|v| v.is_finite());
    if !finite {
        let inf = f64::INFINITY;
        return KktReport {
            producer: inf,
            consumer: inf,
            operator: inf,
            clearing: inf,
        };
    }

    let mut pscale: f64 = 1.0;
    let mut qscale: f64 = 1.0;
    for (lt, &t) in hours.iter().enumerate() {
        let h = &week.hours[t];
        for n in 0..nz {
            pscale = pscale.max(h.demand_intercept[n].abs());
            qscale = qscale
                .max(h.renewable_mwh[n])
                .max(solution.demand[lt][n].abs());
        }
        for k in 0..nk {
            pscale = pscale.max(week.fleet_cost(k, t).abs());
            let cap = problem.fleet_capacity(k, t);
            if cap.is_finite() {
                qscale = qscale.max(cap);
            }
        }
        for l in 0..nl {
            let cap = problem.line_capacity(l, t);
            if cap.is_finite() {
                qscale = qscale.max(cap);
            }
        }
    }
    let clamp = |v: f64, lo: f64, hi: f64| v.max(lo).min(hi);
    let budget_fleets = problem.budget_fleets();

    let mut rep = KktReport {
        producer: 0.0,
        consumer: 0.0,
        operator: 0.0,
        clearing: 0.0,
    };
    for (lt, &t) in hours.iter().enumerate() {
        let h = &week.hours[t];
        let price = &solution.prices[lt];
        for k in 0..nk {
            let fleet = &week.fleets[k];
            let nu = if budget_fleets.contains(&k) {
                solution.water_values[k]
            } else {
                0.0
            };
            let g = (price[fleet.zone] - week.fleet_cost(k, t) - nu) / pscale;
            let q = solution.dispatch[lt][k] / qscale;
            let cap = problem.fleet_capacity(k, t) / qscale;
            rep.producer = rep.producer.max((q - clamp(q + g, 0.0, cap)).abs());
        }
        for n in 0..nz {
            let d = solution.demand[lt][n];
            let g = (h.demand_slope[n] * d + h.demand_intercept[n] - price[n]) / pscale;
            let dn = d / qscale;
            rep.consumer = rep.consumer.max((dn - (dn + g).max(0.0)).abs());
        }
        for l in 0..nl {
            let (from, to) = net.incidence.endpoints(l);
            let g = (price[to] - price[from]) / pscale;
            let f = solution.flows[lt][l] / qscale;
            let cap = problem.line_capacity(l, t) / qscale;
            rep.operator = rep.operator.max((f - clamp(f + g, -cap, cap)).abs());
        }
        for n in 0..nz {
            let mut lhs = solution.demand[lt][n];
            for l in 0..nl {
                lhs += net.incidence.get(n, l) as f64 * solution.flows[lt][l];
            }
            let mut rhs = h.renewable_mwh[n];
            for (k, _) in week.fleets_in(n) {
                rhs += solution.dispatch[lt][k];
            }
            rep.clearing = rep.clearing.max((lhs - rhs).abs() / qscale);
        }
    }
    // Energy budgets: Σq <= Q, water value >= 0, complementary.
    let horizon = hours.len() as f64;
    for k in budget_fleets {
        let budget = week.fleets[k].energy_budget_mwh.unwrap_or(f64::INFINITY);
        let used: f64 = (0..hours.len()).map(|lt| solution.dispatch[lt][k]).sum();
        let slack = (budget - used) / (qscale * horizon);
        let nu = solution.water_values[k] / pscale;
        rep.producer = rep
            .producer
            .max(slack.min(nu).abs())
            .max((-slack).max(0.0))
            .max((-nu).max(0.0));
    }
    rep
}

/// Per-hour hydro caps that make every hour of `week` solvable on its own.
pub fn decouple_hydro(
    network: &Network,
    week: &ScenarioWeek,
    mode: HydroMode,
    settings: &QpSettings,
) -> Result<HydroCaps, ClearingError> {
    let nt = week.n_hours();
    let nk = week.fleets.len();
    let mut caps = vec![vec![f64::INFINITY; nk]; nt];
    match mode {
        HydroMode::Coupled => {
            return Err(ClearingError::Dimension(
                "coupled mode has no hourly caps".into(),
            ));
        }
        HydroMode::DecoupledProportional => {
            for (k, f) in week.fleets.iter().enumerate() {
                if let Some(q) = f.energy_budget_mwh.filter(|q| q.is_finite()) {
                    for row in caps.iter_mut() {
                        row[k] = q / nt as f64;
                    }
                }
            }
        }
        HydroMode::DecoupledBaseline => {
            let base = solve(&ClearingProblem::week(network, week), settings)?;
            for (k, f) in week.fleets.iter().enumerate() {
                if f.energy_budget_mwh.is_some_and(f64::is_finite) {
                    // Solver noise around zero output becomes an exact zero.
                    let floor = 1e-9 * f.capacity_mw.max(1.0);
                    for (t, row) in caps.iter_mut().enumerate() {
                        let q = base.dispatch[t][k];
                        row[k] = if q <= floor { 0.0 } else { q };
                    }
                }
            }
        }
    }
    Ok(HydroCaps { caps })
}
