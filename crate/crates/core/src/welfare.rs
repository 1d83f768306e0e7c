//! Consumer surplus, producer surplus, congestion rent and total welfare per
//! country, and differences between a restricted and a reference outcome.
//!
//! Conventions:
//! - CS is measured against zero consumption: `½ a d² + b d - π d`.
//! - PS includes renewable infeed at zero marginal cost: `Σ (π - C) q + π R`.
//! - Line rent is `(π_to - π_from) f`, split half to each end's country.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clearing::MarketSolution;
use crate::network::Network;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WelfareError {
    #[error("horizon mismatch: {0} vs {1} hours")]
    Horizon(usize, usize),
    #[error("country sets differ")]
    Countries,
}

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Consumer surplus in zone `n`, local hour `t`.
pub fn consumer_surplus(solution: &MarketSolution, t: usize, n: usize) -> f64 {
    let h = &solution.inputs.hour_data[t];
    let d = solution.demand[t][n];
    (0.5 * h.demand_slope[n] * d + h.demand_intercept[n] - solution.prices[t][n]) * d
}

/// Producer surplus in zone `n`, local hour `t`, renewables included.
pub fn producer_surplus(solution: &MarketSolution, t: usize, n: usize) -> f64 {
    let price = solution.prices[t][n];
    let mut ps = price * solution.inputs.hour_data[t].renewable_mwh[n];
    for (k, &zone) in solution.inputs.fleet_zone.iter().enumerate() {
        if zone == n {
            ps += (price - solution.inputs.fleet_cost[t][k]) * solution.dispatch[t][k];
        }
    }
    ps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineRent {
    pub total: f64,
    /// Half of the rent, credited to the sending zone's country.
    pub from_share: f64,
    /// Half of the rent, credited to the receiving zone's country.
    pub to_share: f64,
}

pub fn congestion_rent(solution: &MarketSolution, t: usize, l: usize) -> LineRent {
    let (from, to) = solution.inputs.line_ends[l];
    let total = (solution.prices[t][to] - solution.prices[t][from]) * solution.flows[t][l];
    LineRent {
        total,
        from_share: 0.5 * total,
        to_share: 0.5 * total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryWelfare {
    pub country: String,
    pub cs: f64,
    pub ps: f64,
    pub cr: f64,
    pub tw: f64,
}

impl CountryWelfare {
    fn new(country: &str) -> Self {
        CountryWelfare {
            country: country.to_string(),
            cs: 0.0,
            ps: 0.0,
            cr: 0.0,
            tw: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareAccount {
    /// In `Network::countries` order.
    pub countries: Vec<CountryWelfare>,
    /// Total rent per line over the horizon.
    pub line_rents: Vec<f64>,
    pub hours: usize,
}

impl WelfareAccount {
    pub fn country(&self, code: &str) -> Option<&CountryWelfare> {
        self.countries.iter().find(|c| c.country == code)
    }

    pub fn system(&self) -> CountryWelfare {
        let mut s = CountryWelfare::new("Total");
        for c in &self.countries {
            s.cs += c.cs;
            s.ps += c.ps;
            s.cr += c.cr;
        }
        s.tw = s.cs + s.ps + s.cr;
        s
    }
}

/// Welfare over the local hours in `hours` of `solution`.
pub fn aggregate_hours(
    solution: &MarketSolution,
    network: &Network,
    hours: impl IntoIterator<Item = usize>,
) -> WelfareAccount {
    let countries = network.countries();
    let idx = |zone: usize| {
        countries
            .iter()
            .position(|c| c == network.country_of(zone))
            .unwrap()
    };
    let mut acc: Vec<CountryWelfare> = countries.iter().map(|c| CountryWelfare::new(c)).collect();
    let mut line_rents = vec![0.0; network.n_lines()];
    let mut count = 0;
    for t in hours {
        count += 1;
        for n in 0..network.n_zones() {
            let c = &mut acc[idx(n)];
            c.cs += consumer_surplus(solution, t, n);
            c.ps += producer_surplus(solution, t, n);
        }
        for (l, rent) in line_rents.iter_mut().enumerate() {
            let r = congestion_rent(solution, t, l);
            let (from, to) = solution.inputs.line_ends[l];
            *rent += r.total;
            acc[idx(from)].cr += r.from_share;
            acc[idx(to)].cr += r.to_share;
        }
    }
    for c in &mut acc {
        c.tw = c.cs + c.ps + c.cr;
    }
    WelfareAccount {
        countries: acc,
        line_rents,
        hours: count,
    }
}

/// Welfare over the solution's whole horizon.
pub fn aggregate(solution: &MarketSolution, network: &Network) -> WelfareAccount {
    aggregate_hours(solution, network, 0..solution.n_hours())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Delta {
    pub tw: f64,
    pub cs: f64,
    pub ps: f64,
    pub cr: f64,
}

impl Delta {
    pub fn scaled(self, k: f64) -> Delta {
        Delta {
            tw: self.tw * k,
            cs: self.cs * k,
            ps: self.ps * k,
            cr: self.cr * k,
        }
    }

    pub fn add(self, o: Delta) -> Delta {
        Delta {
            tw: self.tw + o.tw,
            cs: self.cs + o.cs,
            ps: self.ps + o.ps,
            cr: self.cr + o.cr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareDelta {
    /// (country, change), in reference account order.
    pub countries: Vec<(String, Delta)>,
    pub system: Delta,
    pub hours: usize,
}

impl WelfareDelta {
    pub fn zero_like(account: &WelfareAccount) -> Self {
        WelfareDelta {
            countries: account
                .countries
                .iter()
                .map(|c| (c.country.clone(), Delta::default()))
                .collect(),
            system: Delta::default(),
            hours: account.hours,
        }
    }

    pub fn country(&self, code: &str) -> Option<Delta> {
        self.countries
            .iter()
            .find(|(c, _)| c == code)
            .map(|(_, d)| *d)
    }

    /// Million euro per year: horizon mean per hour × 8760 / 1e6.
    pub fn annualized(&self) -> WelfareDelta {
        let k = if self.hours == 0 {
            0.0
        } else {
            HOURS_PER_YEAR / self.hours as f64 / 1e6
        };
        WelfareDelta {
            countries: self
                .countries
                .iter()
                .map(|(c, d)| (c.clone(), d.scaled(k)))
                .collect(),
            system: self.system.scaled(k),
            hours: self.hours,
        }
    }

    /// Element-wise sum; horizons add up.
    pub fn accumulate(&mut self, other: &WelfareDelta) -> Result<(), WelfareError> {
        if self.countries.len() != other.countries.len() {
            return Err(WelfareError::Countries);
        }
        for ((c, d), (oc, od)) in self.countries.iter_mut().zip(&other.countries) {
            if c != oc {
                return Err(WelfareError::Countries);
            }
            *d = d.add(*od);
        }
        self.system = self.system.add(other.system);
        self.hours += other.hours;
        Ok(())
    }

    /// Probability-weighted combination `Σ w_i Δ_i`, keeping the first horizon.
    pub fn weighted(parts: &[(f64, &WelfareDelta)]) -> Result<WelfareDelta, WelfareError> {
        let Some((_, first)) = parts.first() else {
            return Err(WelfareError::Countries);
        };
        let mut out = WelfareDelta {
            countries: first
                .countries
                .iter()
                .map(|(c, _)| (c.clone(), Delta::default()))
                .collect(),
            system: Delta::default(),
            hours: first.hours,
        };
        for (w, d) in parts {
            if d.hours != out.hours {
                return Err(WelfareError::Horizon(d.hours, out.hours));
            }
            for ((c, acc), (oc, od)) in out.countries.iter_mut().zip(&d.countries) {
                if c != oc {
                    return Err(WelfareError::Countries);
                }
                *acc = acc.add(od.scaled(*w));
            }
            out.system = out.system.add(d.system.scaled(*w));
        }
        Ok(out)
    }
}

/// `restricted - reference`, per country and for the system.
pub fn delta(
    restricted: &WelfareAccount,
    reference: &WelfareAccount,
) -> Result<WelfareDelta, WelfareError> {
    if restricted.hours != reference.hours {
        return Err(WelfareError::Horizon(restricted.hours, reference.hours));
    }
    if restricted.countries.len() != reference.countries.len() {
        return Err(WelfareError::Countries);
    }
    let mut countries = Vec::with_capacity(reference.countries.len());
    for (r, b) in restricted.countries.iter().zip(&reference.countries) {
        if r.country != b.country {
            return Err(WelfareError::Countries);
        }
        let d = Delta {
            cs: r.cs - b.cs,
            ps: r.ps - b.ps,
            cr: r.cr - b.cr,
            tw: r.tw - b.tw,
        };
        countries.push((r.country.clone(), d));
    }
    let (rs, bs) = (restricted.system(), reference.system());
    let system = Delta {
        cs: rs.cs - bs.cs,
        ps: rs.ps - bs.ps,
        cr: rs.cr - bs.cr,
        tw: rs.tw - bs.tw,
    };
    Ok(WelfareDelta {
        countries,
        system,
        hours: reference.hours,
    })
}

/// Half the value of all production and consumption in `country` at zonal
/// prices, over the solution's horizon.
pub fn trade_value(solution: &MarketSolution, network: &Network, country: &str) -> f64 {
    let mut v = 0.0;
    for t in 0..solution.n_hours() {
        for n in 0..network.n_zones() {
            if network.country_of(n) != country {
                continue;
            }
            let volume = solution.demand[t][n]
                + solution.zone_dispatch(t, n)
                + solution.inputs.hour_data[t].renewable_mwh[n];
            v += solution.prices[t][n] * volume;
        }
    }
    0.5 * v
}

/// Net export of `country` in local hour `t`, MWh, over its border lines.
pub fn net_position(solution: &MarketSolution, network: &Network, country: &str, t: usize) -> f64 {
    let mut out = 0.0;
    for (l, &(from, to)) in solution.inputs.line_ends.iter().enumerate() {
        let from_in = network.country_of(from) == country;
        let to_in = network.country_of(to) == country;
        match (from_in, to_in) {
            (true, false) => out += solution.flows[t][l],
            (false, true) => out -= solution.flows[t][l],
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clearing::{solve, ClearingProblem, MarketSolution, SolvedInputs};
    use crate::network::{GenType, GeneratorFleet, HourData, Line, ScenarioWeek, Season, Zone};
    use crate::qp::{QpSettings, QpStatus};
    use approx::assert_abs_diff_eq;

    /// A hand-made one-zone, one-fleet, one-hour solution.
    fn manual(
        a: f64,
        b: f64,
        d: f64,
        price: f64,
        cost: f64,
        q: f64,
        renewable: f64,
    ) -> MarketSolution {
        MarketSolution {
            hours: 0..1,
            demand: vec![vec![d]],
            dispatch: vec![vec![q]],
            flows: vec![vec![]],
            prices: vec![vec![price]],
            water_values: vec![0.0],
            objective: 0.0,
            kkt_residual: 0.0,
            status: QpStatus::Optimal,
            iterations: 0,
            inputs: SolvedInputs {
                hour_data: vec![HourData {
                    t: 0,
                    renewable_mwh: vec![renewable],
                    demand_slope: vec![a],
                    demand_intercept: vec![b],
                    marginal_cost: [0.0; GenType::COUNT],
                }],
                fleet_zone: vec![0],
                fleet_cost: vec![vec![cost]],
                fleet_capacity: vec![vec![f64::INFINITY]],
                line_capacity: vec![vec![]],
                line_ends: vec![],
            },
        }
    }

    /// Composite Simpson rule for ∫₀^d (a x + b) dx.
    fn simpson(a: f64, b: f64, d: f64) -> f64 {
        let n = 1000;
        let h = d / n as f64;
        let f = |x: f64| a * x + b;
        let mut s = f(0.0) + f(d);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn consumer_surplus_examples() {
        assert_eq!(
            consumer_surplus(&manual(-1.0, 100.0, 0.0, 20.0, 0.0, 0.0, 0.0), 0, 0),
            0.0
        );
        let s = manual(-1.0, 100.0, 80.0, 20.0, 0.0, 0.0, 0.0);
        assert_abs_diff_eq!(consumer_surplus(&s, 0, 0), 3200.0, epsilon = 1e-9);
        for (a, b, d, p) in [
            (-1.0, 100.0, 80.0, 20.0),
            (-0.3, 400.0, 1234.5, 37.0),
            (-2.0, 50.0, 40.0, -5.0),
        ] {
            let s = manual(a, b, d, p, 0.0, 0.0, 0.0);
            assert_abs_diff_eq!(
                consumer_surplus(&s, 0, 0),
                simpson(a, b, d) - p * d,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn producer_surplus_examples() {
        assert_eq!(
            producer_surplus(&manual(-1.0, 1.0, 0.0, 50.0, 20.0, 0.0, 0.0), 0, 0),
            0.0
        );
        let s = manual(-1.0, 100.0, 110.0, 50.0, 20.0, 100.0, 10.0);
        assert_abs_diff_eq!(producer_surplus(&s, 0, 0), 3500.0, epsilon = 1e-9);
        // zero-cost hydro keeps the whole price as rent
        let s = manual(-1.0, 100.0, 30.0, 40.0, 0.0, 30.0, 0.0);
        assert_abs_diff_eq!(producer_surplus(&s, 0, 0), 1200.0, epsilon = 1e-9);
    }

    fn two_country(cap: f64) -> (Network, ScenarioWeek) {
        let net = Network::new(
            vec![Zone::new("A1", "AA"), Zone::new("B1", "BB")],
            vec![Line::new("AB", "A1", "B1", cap)],
        )
        .unwrap();
        let week = ScenarioWeek {
            label: "w".into(),
            season: Season::Summer,
            hours: vec![HourData {
                t: 0,
                renewable_mwh: vec![5.0, 0.0],
                demand_slope: vec![-1.0, -1.0],
                demand_intercept: vec![100.0, 100.0],
                marginal_cost: [0.0; GenType::COUNT],
            }],
            fleets: vec![
                GeneratorFleet::new(0, GenType::Coal, 1000.0).with_cost(20.0),
                GeneratorFleet::new(1, GenType::Ccgt, 1000.0).with_cost(30.0),
            ],
        };
        (net, week)
    }

    #[test]
    fn rent_example_and_split() {
        let mut s = manual(-1.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        s.prices = vec![vec![40.0, 50.0]];
        s.flows = vec![vec![500.0]];
        s.inputs.line_ends = vec![(0, 1)];
        let r = congestion_rent(&s, 0, 0);
        assert_eq!(r.total, 5000.0);
        assert_eq!(r.from_share, 2500.0);
        assert_eq!(r.to_share, 2500.0);
    }

    #[test]
    fn aggregate_identities_on_solved_market() {
        let (net, week) = two_country(10.0);
        let s = solve(&ClearingProblem::week(&net, &week), &QpSettings::default()).unwrap();
        let acc = aggregate(&s, &net);
        for c in &acc.countries {
            assert_eq!(c.tw, c.cs + c.ps + c.cr);
        }
        let rents: f64 = acc.line_rents.iter().sum();
        let cr: f64 = acc.countries.iter().map(|c| c.cr).sum();
        assert_abs_diff_eq!(rents, cr, epsilon = 1e-9);
        assert_abs_diff_eq!(
            acc.country("AA").unwrap().cr,
            0.5 * acc.line_rents[0],
            epsilon = 1e-9
        );
        // welfare identity with the QP objective
        assert_abs_diff_eq!(
            acc.system().tw,
            s.objective,
            epsilon = 1e-6 * s.objective.abs()
        );
        // net positions cancel and match the balance
        let na = net_position(&s, &net, "AA", 0);
        let nb = net_position(&s, &net, "BB", 0);
        assert_abs_diff_eq!(na + nb, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            na,
            s.zone_dispatch(0, 0) + 5.0 - s.demand[0][0],
            epsilon = 1e-6
        );
    }

    #[test]
    fn single_country_keeps_rent_internal() {
        let net = Network::new(
            vec![Zone::new("A1", "AA"), Zone::new("A2", "AA")],
            vec![Line::new("L", "A1", "A2", 10.0)],
        )
        .unwrap();
        let (_, week) = two_country(10.0);
        let s = solve(&ClearingProblem::week(&net, &week), &QpSettings::default()).unwrap();
        let acc = aggregate(&s, &net);
        assert_eq!(acc.countries.len(), 1);
        assert_abs_diff_eq!(acc.countries[0].cr, acc.line_rents[0], epsilon = 1e-9);
        assert_eq!(net_position(&s, &net, "AA", 0), 0.0);
    }

    #[test]
    fn delta_properties() {
        let (net, week) = two_country(10.0);
        let a = solve(&ClearingProblem::week(&net, &week), &QpSettings::default()).unwrap();
        let (net2, week2) = two_country(3.0);
        let b = solve(
            &ClearingProblem::week(&net2, &week2),
            &QpSettings::default(),
        )
        .unwrap();
        let (wa, wb) = (aggregate(&a, &net), aggregate(&b, &net2));
        let same = delta(&wa, &wa).unwrap();
        assert!(same.countries.iter().all(|(_, d)| *d == Delta::default()));
        let ab = delta(&wb, &wa).unwrap();
        let ba = delta(&wa, &wb).unwrap();
        for ((_, x), (_, y)) in ab.countries.iter().zip(&ba.countries) {
            assert_eq!(x.tw, -y.tw);
            assert_abs_diff_eq!(x.tw, x.cs + x.ps + x.cr, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(
            ab.system.tw,
            b.objective - a.objective,
            epsilon = 1e-6 * a.objective.abs()
        );
        assert!(ab.system.tw <= 1e-6);
        let mut short = wa.clone();
        short.hours = 2;
        assert!(matches!(
            delta(&short, &wa),
            Err(WelfareError::Horizon(2, 1))
        ));
    }

    #[test]
    fn annualization() {
        let d = WelfareDelta {
            countries: vec![(
                "AA".into(),
                Delta {
                    tw: 168e6,
                    cs: 0.0,
                    ps: 168e6,
                    cr: 0.0,
                },
            )],
            system: Delta {
                tw: 168e6,
                cs: 0.0,
                ps: 168e6,
                cr: 0.0,
            },
            hours: 168,
        };
        assert_abs_diff_eq!(d.annualized().countries[0].1.tw, 8760.0, epsilon = 1e-9);
    }

    #[test]
    fn trade_value_autarky() {
        let s = manual(-1.0, 100.0, 80.0, 20.0, 20.0, 80.0, 0.0);
        let net = Network::new(vec![Zone::new("A1", "AA")], vec![]).unwrap();
        assert_abs_diff_eq!(trade_value(&s, &net, "AA"), 20.0 * 80.0, epsilon = 1e-9);
        let s = manual(-1.0, 100.0, 80.0, 0.0, 0.0, 80.0, 0.0);
        assert_eq!(trade_value(&s, &net, "AA"), 0.0);
    }
}
