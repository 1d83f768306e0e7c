//! Closed-form equilibria of small linear markets, used as ground truth for
//! the QP and the welfare accounting.
//!
//! Curves are written in price form, `p = intercept + slope * q`. A supply
//! curve with slope 0 is perfectly elastic at its intercept.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{
    GenType, GeneratorFleet, HourData, Line, Network, ScenarioWeek, Season, Zone,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("curves do not intersect at a positive quantity")]
    NoIntersection,
    #[error("invalid {0} curve: slope {1}")]
    Slope(&'static str, f64),
    #[error("both zones are perfectly elastic; the coupled price is undetermined")]
    BothFlat,
    #[error("zone has neither demand nor supply")]
    EmptyZone,
    #[error("capacity must be non-negative, got {0}")]
    Capacity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Demand,
    Supply,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCurve {
    pub intercept: f64,
    pub slope: f64,
    pub kind: CurveKind,
}

impl LinearCurve {
    pub fn demand(intercept: f64, slope: f64) -> Result<Self, OracleError> {
        if !(slope < 0.0) {
            return Err(OracleError::Slope("demand", slope));
        }
        Ok(LinearCurve {
            intercept,
            slope,
            kind: CurveKind::Demand,
        })
    }

    pub fn supply(intercept: f64, slope: f64) -> Result<Self, OracleError> {
        if !(slope >= 0.0) || !slope.is_finite() {
            return Err(OracleError::Slope("supply", slope));
        }
        Ok(LinearCurve {
            intercept,
            slope,
            kind: CurveKind::Supply,
        })
    }

    pub fn price_at(&self, q: f64) -> f64 {
        self.intercept + self.slope * q
    }

    pub fn is_flat(&self) -> bool {
        self.slope == 0.0
    }

    /// Quantity as a linear function of price, `(constant, per_price)`.
    /// `None` for a flat supply curve.
    pub fn quantity_form(&self) -> Option<QuantityCurve> {
        if self.is_flat() {
            return None;
        }
        Some(QuantityCurve {
            constant: -self.intercept / self.slope,
            per_price: 1.0 / self.slope,
        })
    }
}

/// `q(p) = constant + per_price * p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantityCurve {
    pub constant: f64,
    pub per_price: f64,
}

impl QuantityCurve {
    pub fn at(&self, p: f64) -> f64 {
        self.constant + self.per_price * p
    }

    /// Price at which the curve reaches `q`.
    pub fn price_for(&self, q: f64) -> f64 {
        (q - self.constant) / self.per_price
    }

    /// `∫_{p0}^{p1} q(p) dp`.
    pub fn integral(&self, p0: f64, p1: f64) -> f64 {
        0.5 * (self.at(p0) + self.at(p1)) * (p1 - p0)
    }

    fn sub(self, o: QuantityCurve) -> QuantityCurve {
        QuantityCurve {
            constant: self.constant - o.constant,
            per_price: self.per_price - o.per_price,
        }
    }
}

/// Net export as a function of the zonal price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExcessCurve {
    Linear(QuantityCurve),
    /// Any quantity is exported or imported at this price.
    Flat(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneCurves {
    pub demand: Option<LinearCurve>,
    pub supply: Option<LinearCurve>,
}

impl ZoneCurves {
    pub fn new(demand: LinearCurve, supply: LinearCurve) -> Self {
        ZoneCurves {
            demand: Some(demand),
            supply: Some(supply),
        }
    }

    pub fn export_curve(&self) -> Result<ExcessCurve, OracleError> {
        if let Some(s) = self.supply.filter(LinearCurve::is_flat) {
            return Ok(ExcessCurve::Flat(s.intercept));
        }
        let zero = QuantityCurve {
            constant: 0.0,
            per_price: 0.0,
        };
        let s = self.supply.and_then(|c| c.quantity_form());
        let d = self.demand.and_then(|c| c.quantity_form());
        if s.is_none() && d.is_none() {
            return Err(OracleError::EmptyZone);
        }
        Ok(ExcessCurve::Linear(
            s.unwrap_or(zero).sub(d.unwrap_or(zero)),
        ))
    }

    /// Domestic consumer plus producer surplus change when the price moves
    /// from `p0` to `p1`.
    pub fn surplus_change(&self, p0: f64, p1: f64) -> (f64, f64) {
        let cs = self
            .demand
            .and_then(|d| d.quantity_form())
            .map_or(0.0, |d| -d.integral(p0, p1));
        let ps = self
            .supply
            .and_then(|s| s.quantity_form())
            .map_or(0.0, |s| s.integral(p0, p1));
        (cs, ps)
    }
}

/// Intersection of domestic demand and supply, `(p*, q*)`.
pub fn autarky(zone: &ZoneCurves) -> Result<(f64, f64), OracleError> {
    let (Some(d), Some(s)) = (zone.demand, zone.supply) else {
        return Err(OracleError::NoIntersection);
    };
    let q = (d.intercept - s.intercept) / (s.slope - d.slope);
    if !(q > 0.0) {
        return Err(OracleError::NoIntersection);
    }
    Ok((s.price_at(q), q))
}

/// Import `I = D - S` and export `E = S - D` curves of a zone with sloped
/// supply.
pub fn import_export_curves(
    zone: &ZoneCurves,
) -> Result<(QuantityCurve, QuantityCurve), OracleError> {
    match zone.export_curve()? {
        ExcessCurve::Linear(e) => {
            let i = QuantityCurve {
                constant: -e.constant,
                per_price: -e.per_price,
            };
            Ok((i, e))
        }
        ExcessCurve::Flat(_) => Err(OracleError::Slope("supply", 0.0)),
    }
}

/// Two zones joined by one line; zone order is arbitrary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoZoneInstance {
    pub zones: [ZoneCurves; 2],
}

impl TwoZoneInstance {
    /// The symmetric-slope example: D₁ p=10−q, S₁ p=2+2q, D₂ p=10−2q, S₂ p=1+q.
    pub fn reference() -> Self {
        TwoZoneInstance {
            zones: [
                ZoneCurves::new(
                    LinearCurve {
                        intercept: 10.0,
                        slope: -1.0,
                        kind: CurveKind::Demand,
                    },
                    LinearCurve {
                        intercept: 2.0,
                        slope: 2.0,
                        kind: CurveKind::Supply,
                    },
                ),
                ZoneCurves::new(
                    LinearCurve {
                        intercept: 10.0,
                        slope: -2.0,
                        kind: CurveKind::Demand,
                    },
                    LinearCurve {
                        intercept: 1.0,
                        slope: 1.0,
                        kind: CurveKind::Supply,
                    },
                ),
            ],
        }
    }

    /// The reference instance with the exporter's supply made perfectly
    /// elastic at the unconstrained coupled price.
    pub fn flat_export() -> Self {
        let mut inst = Self::reference();
        let p_bar = coupled_equilibrium(&inst, f64::INFINITY)
            .expect("reference instance")
            .importer_price;
        inst.zones[1].supply = Some(LinearCurve {
            intercept: p_bar,
            slope: 0.0,
            kind: CurveKind::Supply,
        });
        inst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledEquilibrium {
    pub importer: usize,
    pub exporter: usize,
    pub importer_price: f64,
    pub exporter_price: f64,
    /// Exporter to importer, MWh.
    pub flow: f64,
    pub congested: bool,
}

impl CoupledEquilibrium {
    pub fn price(&self, zone: usize) -> f64 {
        if zone == self.importer {
            self.importer_price
        } else {
            self.exporter_price
        }
    }

    pub fn rent(&self) -> f64 {
        (self.importer_price - self.exporter_price) * self.flow
    }
}

fn autarky_price(zone: &ZoneCurves) -> Result<f64, OracleError> {
    match zone.export_curve()? {
        ExcessCurve::Flat(p) => Ok(p),
        ExcessCurve::Linear(e) => Ok(e.price_for(0.0)),
    }
}

/// Equilibrium of two zones joined by a line of capacity `k` (may be infinite).
pub fn coupled_equilibrium(
    inst: &TwoZoneInstance,
    k: f64,
) -> Result<CoupledEquilibrium, OracleError> {
    if !(k >= 0.0) {
        return Err(OracleError::Capacity(k));
    }
    let pa = [
        autarky_price(&inst.zones[0])?,
        autarky_price(&inst.zones[1])?,
    ];
    let (importer, exporter) = if pa[0] >= pa[1] { (0, 1) } else { (1, 0) };
    let ei = inst.zones[importer].export_curve()?;
    let ee = inst.zones[exporter].export_curve()?;
    let p_bar = match (ei, ee) {
        (ExcessCurve::Flat(_), ExcessCurve::Flat(_)) => return Err(OracleError::BothFlat),
        (ExcessCurve::Flat(p), _) | (_, ExcessCurve::Flat(p)) => p,
        (ExcessCurve::Linear(a), ExcessCurve::Linear(b)) => {
            -(a.constant + b.constant) / (a.per_price + b.per_price)
        }
    };
    let q_bar = match ee {
        ExcessCurve::Linear(e) => e.at(p_bar),
        ExcessCurve::Flat(_) => match ei {
            ExcessCurve::Linear(i) => -i.at(p_bar),
            ExcessCurve::Flat(_) => unreachable!(),
        },
    };
    if q_bar <= k {
        return Ok(CoupledEquilibrium {
            importer,
            exporter,
            importer_price: p_bar,
            exporter_price: p_bar,
            flow: q_bar,
            congested: false,
        });
    }
    let price_for = |c: ExcessCurve, q: f64| match c {
        ExcessCurve::Flat(p) => p,
        ExcessCurve::Linear(e) => e.price_for(q),
    };
    Ok(CoupledEquilibrium {
        importer,
        exporter,
        importer_price: price_for(ei, -k),
        exporter_price: price_for(ee, k),
        flow: k,
        congested: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SurplusDelta {
    pub cs: f64,
    pub ps: f64,
    pub cr: f64,
    pub tw: f64,
}

impl SurplusDelta {
    fn new(cs: f64, ps: f64, cr: f64) -> Self {
        SurplusDelta {
            cs,
            ps,
            cr,
            tw: cs + ps + cr,
        }
    }

    fn plus(self, o: SurplusDelta) -> SurplusDelta {
        SurplusDelta::new(self.cs + o.cs, self.ps + o.ps, self.cr + o.cr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoZoneDelta {
    pub unrestricted: CoupledEquilibrium,
    pub restricted: CoupledEquilibrium,
    /// In instance zone order.
    pub zones: [SurplusDelta; 2],
    pub system: SurplusDelta,
}

/// Welfare change of restricting the line to `k` relative to an unlimited line.
/// The rent is split equally between the two zones.
pub fn two_zone_welfare_delta(inst: &TwoZoneInstance, k: f64) -> Result<TwoZoneDelta, OracleError> {
    let free = coupled_equilibrium(inst, f64::INFINITY)?;
    let cut = coupled_equilibrium(inst, k)?;
    let half_rent = 0.5 * (cut.rent() - free.rent());
    let mut zones = [SurplusDelta::default(); 2];
    for (z, out) in zones.iter_mut().enumerate() {
        let (cs, ps) = inst.zones[z].surplus_change(free.price(z), cut.price(z));
        *out = SurplusDelta::new(cs, ps, half_rent);
    }
    Ok(TwoZoneDelta {
        unrestricted: free,
        restricted: cut,
        zones,
        system: zones[0].plus(zones[1]),
    })
}

/// A pure supply zone 1 feeding pure demand zones 2 and 3, with zone 3
/// reached only over the 2–3 line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeZoneInstance {
    pub supply: LinearCurve,
    pub demand2: LinearCurve,
    pub demand3: LinearCurve,
}

impl ThreeZoneInstance {
    /// S₁: p=2+2q, D₂=D₃: p=10−2q.
    pub fn reference() -> Self {
        let d = LinearCurve {
            intercept: 10.0,
            slope: -2.0,
            kind: CurveKind::Demand,
        };
        ThreeZoneInstance {
            supply: LinearCurve {
                intercept: 2.0,
                slope: 2.0,
                kind: CurveKind::Supply,
            },
            demand2: d,
            demand3: d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeZoneBlockade {
    /// Common price and supplied quantity with all lines open.
    pub integrated: (f64, f64),
    /// Price of zones 1–2 and supplied quantity with the 2–3 line closed.
    pub blocked: (f64, f64),
    /// Zone 3's price when cut off: its demand choke price.
    pub isolated_price: f64,
    /// Zones 1, 2, 3.
    pub zones: [SurplusDelta; 3],
    pub system: SurplusDelta,
}

/// Equilibria with and without the 2–3 line and the resulting welfare changes.
pub fn three_zone_blockade(inst: &ThreeZoneInstance) -> Result<ThreeZoneBlockade, OracleError> {
    let s = inst
        .supply
        .quantity_form()
        .ok_or(OracleError::Slope("supply", 0.0))?;
    let d2 = inst
        .demand2
        .quantity_form()
        .ok_or(OracleError::Slope("demand", 0.0))?;
    let d3 = inst
        .demand3
        .quantity_form()
        .ok_or(OracleError::Slope("demand", 0.0))?;
    let clear = |demand: QuantityCurve| {
        let e = s.sub(demand);
        let p = e.price_for(0.0);
        (p, s.at(p))
    };
    let both = QuantityCurve {
        constant: d2.constant + d3.constant,
        per_price: d2.per_price + d3.per_price,
    };
    let integrated = clear(both);
    let blocked = clear(d2);
    if !(integrated.1 > 0.0 && blocked.1 > 0.0 && d3.at(integrated.0) > 0.0) {
        return Err(OracleError::NoIntersection);
    }
    let (p0, p1) = (integrated.0, blocked.0);
    let z1 = SurplusDelta::new(0.0, s.integral(p0, p1), 0.0);
    let z2 = SurplusDelta::new(-d2.integral(p0, p1), 0.0, 0.0);
    // Zone 3 loses its whole consumer surplus.
    let q3 = d3.at(p0);
    let z3 = SurplusDelta::new(-0.5 * (inst.demand3.intercept - p0) * q3, 0.0, 0.0);
    Ok(ThreeZoneBlockade {
        integrated,
        blocked,
        isolated_price: inst.demand3.intercept,
        zones: [z1, z2, z3],
        system: z1.plus(z2).plus(z3),
    })
}

/// Capacity standing in for an unlimited line or fleet in QP encodings.
pub const UNLIMITED_MW: f64 = 1.0e3;

/// Fleets approximating `curve` by `steps` constant-cost blocks up to `q_max`,
/// each priced at its midpoint.
pub fn step_fleets(
    zone: usize,
    curve: &LinearCurve,
    q_max: f64,
    steps: usize,
) -> Vec<GeneratorFleet> {
    if curve.is_flat() {
        return vec![
            GeneratorFleet::new(zone, GenType::Ccgt, UNLIMITED_MW).with_cost(curve.intercept)
        ];
    }
    let w = q_max / steps as f64;
    (0..steps)
        .map(|i| {
            GeneratorFleet::new(zone, GenType::Ccgt, w)
                .with_cost(curve.price_at((i as f64 + 0.5) * w))
        })
        .collect()
}

/// `(slope, intercept)` of the QP demand term; a zone without demand gets a
/// curve with zero intercept, which clears at zero for any positive price.
fn qp_demand(d: Option<LinearCurve>) -> (f64, f64) {
    match d {
        Some(d) => (d.slope, d.intercept),
        None => (-1.0, 0.0),
    }
}

fn supply_extent(curve: &LinearCurve, price_ceiling: f64) -> f64 {
    1.25 * ((price_ceiling - curve.intercept) / curve.slope).max(1.0)
}

fn single_hour(
    label: &str,
    demands: &[Option<LinearCurve>],
    fleets: Vec<GeneratorFleet>,
) -> ScenarioWeek {
    let (slopes, intercepts): (Vec<f64>, Vec<f64>) = demands.iter().map(|d| qp_demand(*d)).unzip();
    ScenarioWeek {
        label: label.to_string(),
        season: Season::Spring,
        hours: vec![HourData {
            t: 0,
            renewable_mwh: vec![0.0; demands.len()],
            demand_slope: slopes,
            demand_intercept: intercepts,
            marginal_cost: [0.0; GenType::COUNT],
        }],
        fleets,
    }
}

fn max_choke(demands: &[Option<LinearCurve>]) -> f64 {
    demands
        .iter()
        .flatten()
        .map(|d| d.intercept)
        .fold(0.0, f64::max)
}

/// One-hour market for a two-zone instance: zones `Z1`, `Z2` in countries
/// `C1`, `C2`, line `L12` from zone 1 to zone 2 with capacity `k` (capped at
/// [`UNLIMITED_MW`]).
pub fn encode_two_zone(inst: &TwoZoneInstance, k: f64, steps: usize) -> (Network, ScenarioWeek) {
    let net = Network::new(
        vec![Zone::new("Z1", "C1"), Zone::new("Z2", "C2")],
        vec![Line::new("L12", "Z1", "Z2", k.min(UNLIMITED_MW))],
    )
    .expect("two-zone network");
    let demands = [inst.zones[0].demand, inst.zones[1].demand];
    let ceiling = max_choke(&demands);
    let mut fleets = Vec::new();
    for (z, zc) in inst.zones.iter().enumerate() {
        if let Some(s) = zc.supply {
            let q_max = if s.is_flat() {
                UNLIMITED_MW
            } else {
                supply_extent(&s, ceiling)
            };
            fleets.extend(step_fleets(z, &s, q_max, steps));
        }
    }
    (net, single_hour("two_zone", &demands, fleets))
}

/// One-hour market for the three-zone instance: lines `L12` and `L23`, both
/// at [`UNLIMITED_MW`]; each zone is its own country `C1`..`C3`. Close `L23`
/// with a capacity override to reproduce the blockade.
pub fn encode_three_zone(inst: &ThreeZoneInstance, steps: usize) -> (Network, ScenarioWeek) {
    let net = Network::new(
        vec![
            Zone::new("Z1", "C1"),
            Zone::new("Z2", "C2"),
            Zone::new("Z3", "C3"),
        ],
        vec![
            Line::new("L12", "Z1", "Z2", UNLIMITED_MW),
            Line::new("L23", "Z2", "Z3", UNLIMITED_MW),
        ],
    )
    .expect("three-zone network");
    let demands = [None, Some(inst.demand2), Some(inst.demand3)];
    let q_max = supply_extent(&inst.supply, max_choke(&demands));
    let fleets = step_fleets(0, &inst.supply, q_max, steps);
    (net, single_hour("three_zone", &demands, fleets))
}
