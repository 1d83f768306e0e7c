//! Self-contained validation: the analytical examples against their closed
//! forms, and the same examples cleared as one-hour market problems against
//! the analytical solutions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::clearing::{self, ClearingProblem, MarketSolution};
use crate::network::{Network, ScenarioWeek};
use crate::oracle::{
    coupled_equilibrium, encode_three_zone, encode_two_zone, three_zone_blockade,
    two_zone_welfare_delta, OracleError, ThreeZoneInstance, TwoZoneInstance,
};
use crate::qp::QpSettings;
use crate::welfare::{self, WelfareDelta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationSettings {
    /// Absolute tolerance of the analytical values.
    pub oracle_tolerance: f64,
    /// Relative tolerance of market-problem prices against the analytical ones.
    pub price_tolerance: f64,
    /// Relative tolerance of market-problem welfare changes.
    pub welfare_tolerance: f64,
    pub kkt_tolerance: f64,
    /// Steps per sloped supply curve.
    pub steps: usize,
    pub qp: QpSettings,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            oracle_tolerance: 1e-9,
            price_tolerance: 0.01,
            welfare_tolerance: 0.02,
            kkt_tolerance: 1e-6,
            steps: 2000,
            qp: QpSettings::default(),
        }
    }
}

impl ValidationSettings {
    /// Every tolerance set to `tol`.
    pub fn uniform(tol: f64) -> Self {
        ValidationSettings {
            oracle_tolerance: tol,
            price_tolerance: tol,
            welfare_tolerance: tol,
            kkt_tolerance: tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    pub kind: ErrorKind,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    fn absolute(name: impl Into<String>, expected: f64, computed: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            expected,
            computed,
            kind: ErrorKind::Absolute,
            error: (computed - expected).abs(),
            tolerance,
        }
    }

    fn relative(name: impl Into<String>, expected: f64, computed: f64, tolerance: f64) -> Self {
        let scale = expected.abs();
        let error = if scale > 0.0 {
            (computed - expected).abs() / scale
        } else {
            (computed - expected).abs()
        };
        Check {
            name: name.into(),
            expected,
            computed,
            kind: ErrorKind::Relative,
            error,
            tolerance,
        }
    }

    /// A residual that should be zero.
    fn residual(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check::absolute(name, 0.0, value, tolerance)
    }

    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

fn failed(name: &str, tolerance: f64) -> Check {
    Check::absolute(name, 0.0, f64::NAN, tolerance)
}

const K: f64 = 1.53;

fn oracle_checks(s: &ValidationSettings, out: &mut Vec<Check>) -> Result<(), OracleError> {
    let tol = s.oracle_tolerance;
    let reference = TwoZoneInstance::reference();
    let free = coupled_equilibrium(&reference, f64::INFINITY)?;
    out.push(Check::absolute(
        "two_zone.p_bar",
        17.0 / 3.0,
        free.importer_price,
        tol,
    ));
    out.push(Check::absolute("two_zone.q_bar", 2.5, free.flow, tol));
    let cut = coupled_equilibrium(&reference, K)?;
    let p1 = (11.0 - K) / 1.5;
    let p2 = (6.0 + K) / 1.5;
    out.push(Check::absolute(
        "two_zone.p1_restricted",
        p1,
        cut.importer_price,
        tol,
    ));
    out.push(Check::absolute(
        "two_zone.p2_restricted",
        p2,
        cut.exporter_price,
        tol,
    ));

    let flat = two_zone_welfare_delta(&TwoZoneInstance::flat_export(), K)?;
    let p_bar = 17.0 / 3.0;
    let z2 = 0.5 * (p1 - p_bar) * K;
    out.push(Check::absolute(
        "flat_export.zone2_dtw",
        z2,
        flat.zones[1].tw,
        tol,
    ));
    out.push(Check::absolute(
        "flat_export.zone1_dtw",
        -(p1 - p_bar) * (2.5 + K) / 2.0 + z2,
        flat.zones[0].tw,
        tol,
    ));
    out.push(Check::absolute(
        "flat_export.system_dtw",
        -(p1 - p_bar) * (2.5 - K) / 2.0,
        flat.system.tw,
        tol,
    ));

    let b = three_zone_blockade(&ThreeZoneInstance::reference())?;
    out.push(Check::absolute(
        "three_zone.p_integrated",
        22.0 / 3.0,
        b.integrated.0,
        tol,
    ));
    out.push(Check::absolute(
        "three_zone.q_integrated",
        8.0 / 3.0,
        b.integrated.1,
        tol,
    ));
    out.push(Check::absolute(
        "three_zone.p_blocked",
        6.0,
        b.blocked.0,
        tol,
    ));
    out.push(Check::absolute(
        "three_zone.q_blocked",
        2.0,
        b.blocked.1,
        tol,
    ));
    out.push(Check::absolute(
        "three_zone.zone2_dcs",
        20.0 / 9.0,
        b.zones[1].cs,
        tol,
    ));
    out.push(Check::absolute(
        "three_zone.zone1_dps",
        -28.0 / 9.0,
        b.zones[0].ps,
        tol,
    ));
    out.push(Check::absolute(
        "three_zone.zone3_dcs",
        -16.0 / 9.0,
        b.zones[2].cs,
        tol,
    ));
    out.push(Check::absolute(
        "three_zone.system_dtw",
        -8.0 / 3.0,
        b.system.tw,
        tol,
    ));
    Ok(())
}

fn clear(
    network: &Network,
    week: &ScenarioWeek,
    overrides: clearing::CapacityOverrides,
    s: &ValidationSettings,
    name: &str,
    out: &mut Vec<Check>,
) -> Option<MarketSolution> {
    let p = ClearingProblem::week(network, week).with_overrides(overrides);
    match clearing::solve(&p, &s.qp) {
        Ok(sol) => {
            out.push(Check::residual(
                format!("{name}.kkt"),
                clearing::verify_kkt(&p, &sol).max(),
                s.kkt_tolerance,
            ));
            Some(sol)
        }
        Err(_) => {
            out.push(failed(&format!("{name}.solve"), s.kkt_tolerance));
            None
        }
    }
}

fn qp_delta(
    network: &Network,
    restricted: &MarketSolution,
    reference: &MarketSolution,
) -> WelfareDelta {
    welfare::delta(
        &welfare::aggregate(restricted, network),
        &welfare::aggregate(reference, network),
    )
    .expect("same horizon")
}

fn qp_two_zone(inst: &TwoZoneInstance, label: &str, s: &ValidationSettings, out: &mut Vec<Check>) {
    let Ok(oracle) = two_zone_welfare_delta(inst, K) else {
        out.push(failed(&format!("{label}.oracle"), s.welfare_tolerance));
        return;
    };
    let (net_free, week_free) = encode_two_zone(inst, f64::INFINITY, s.steps);
    let (net_cut, week_cut) = encode_two_zone(inst, K, s.steps);
    let none = clearing::CapacityOverrides::none;
    let Some(free) = clear(
        &net_free,
        &week_free,
        none(),
        s,
        &format!("{label}.qp_free"),
        out,
    ) else {
        return;
    };
    let Some(cut) = clear(
        &net_cut,
        &week_cut,
        none(),
        s,
        &format!("{label}.qp_restricted"),
        out,
    ) else {
        return;
    };
    for z in 0..2 {
        out.push(Check::relative(
            format!("{label}.qp_free.price_z{}", z + 1),
            oracle.unrestricted.price(z),
            free.prices[0][z],
            s.price_tolerance,
        ));
        out.push(Check::relative(
            format!("{label}.qp_restricted.price_z{}", z + 1),
            oracle.restricted.price(z),
            cut.prices[0][z],
            s.price_tolerance,
        ));
    }
    // Both encodings share zones and countries, so accounts line up.
    let d = qp_delta(&net_cut, &cut, &free);
    for z in 0..2 {
        let c = d.country(&format!("C{}", z + 1)).unwrap_or_default();
        out.push(Check::relative(
            format!("{label}.qp.zone{}_dtw", z + 1),
            oracle.zones[z].tw,
            c.tw,
            s.welfare_tolerance,
        ));
    }
    out.push(Check::relative(
        format!("{label}.qp.system_dtw"),
        oracle.system.tw,
        d.system.tw,
        s.welfare_tolerance,
    ));
}

fn qp_three_zone(s: &ValidationSettings, out: &mut Vec<Check>) {
    let Ok(b) = three_zone_blockade(&ThreeZoneInstance::reference()) else {
        out.push(failed("three_zone.oracle", s.welfare_tolerance));
        return;
    };
    let (net, week) = encode_three_zone(&ThreeZoneInstance::reference(), s.steps);
    let Some(l23) = net.line_index("L23") else {
        out.push(failed("three_zone.encoding", s.welfare_tolerance));
        return;
    };
    let none = clearing::CapacityOverrides::none();
    let Some(free) = clear(
        &net,
        &week,
        none.clone(),
        s,
        "three_zone.qp_integrated",
        out,
    ) else {
        return;
    };
    let Some(cut) = clear(
        &net,
        &week,
        none.uniform(l23, 0.0),
        s,
        "three_zone.qp_blocked",
        out,
    ) else {
        return;
    };
    for z in 0..3 {
        out.push(Check::relative(
            format!("three_zone.qp_integrated.price_z{}", z + 1),
            b.integrated.0,
            free.prices[0][z],
            s.price_tolerance,
        ));
    }
    out.push(Check::relative(
        "three_zone.qp_blocked.price_z1",
        b.blocked.0,
        cut.prices[0][0],
        s.price_tolerance,
    ));
    out.push(Check::relative(
        "three_zone.qp_blocked.price_z3",
        b.isolated_price,
        cut.prices[0][2],
        s.price_tolerance,
    ));
    let d = qp_delta(&net, &cut, &free);
    let get = |c: &str| d.country(c).unwrap_or_default();
    let tol = s.welfare_tolerance;
    out.push(Check::relative(
        "three_zone.qp.zone2_dcs",
        b.zones[1].cs,
        get("C2").cs,
        tol,
    ));
    out.push(Check::relative(
        "three_zone.qp.zone1_dps",
        b.zones[0].ps,
        get("C1").ps,
        tol,
    ));
    out.push(Check::relative(
        "three_zone.qp.zone3_dcs",
        b.zones[2].cs,
        get("C3").cs,
        tol,
    ));
    out.push(Check::relative(
        "three_zone.qp.system_dtw",
        b.system.tw,
        d.system.tw,
        tol,
    ));
}

/// Run every check. Oracle errors show up as failed checks.
pub fn run_checks(s: &ValidationSettings) -> Vec<Check> {
    let mut out = Vec::new();
    if let Err(e) = oracle_checks(s, &mut out) {
        out.push(failed(&format!("oracle: {e}"), s.oracle_tolerance));
    }
    qp_two_zone(&TwoZoneInstance::reference(), "two_zone", s, &mut out);
    qp_two_zone(&TwoZoneInstance::flat_export(), "flat_export", s, &mut out);
    qp_three_zone(s, &mut out);
    out
}

/// Fixed-width residual table, one line per check.
pub fn render_table(checks: &[Check]) -> String {
    let width = checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(4)
        .max(5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>14}  {:>14}  {:>10}  {:>9}  result",
        "check", "expected", "computed", "error", "tolerance"
    );
    for c in checks {
        let kind = match c.kind {
            ErrorKind::Absolute => "abs",
            ErrorKind::Relative => "rel",
        };
        let _ = writeln!(
            s,
            "{:<width$}  {:>14.9}  {:>14.9}  {:>10.3e}  {:>9.1e}  {} ({kind})",
            c.name,
            c.expected,
            c.computed,
            c.error,
            c.tolerance,
            if c.passed() { "ok" } else { "FAIL" },
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tolerances_pass() {
        let checks = run_checks(&ValidationSettings::default());
        let bad: Vec<&Check> = checks.iter().filter(|c| !c.passed()).collect();
        assert!(bad.is_empty(), "{}", render_table(&checks));
        assert!(checks.len() > 30);
    }

    #[test]
    fn zero_tolerance_names_a_failure() {
        let checks = run_checks(&ValidationSettings::uniform(0.0));
        assert!(checks.iter().any(|c| !c.passed() && c.name.contains(".qp")));
        let table = render_table(&checks);
        assert!(table.contains("FAIL"));
        assert!(table.contains("three_zone.zone2_dcs"));
    }

    #[test]
    fn nan_never_passes() {
        assert!(!failed("x", f64::INFINITY).passed());
    }
}
