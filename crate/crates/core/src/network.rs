//! Zonal network, generator fleets and the per-hour exogenous inputs of one
//! scenario week.
//!
//! Zones and lines are addressed by position (`usize`) everywhere in the
//! solver; string ids are only used at the file boundary and in reports.
//! Every per-zone vector in [`HourData`] is aligned with `Network::zones`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("line {line} references unknown zone {zone}")]
    UnknownZone { line: String, zone: String },
    #[error("line {line} duplicates the zone pair of line {existing}")]
    DuplicateLine { line: String, existing: String },
    #[error("duplicate zone id {0}")]
    DuplicateZone(String),
    #[error("unknown line id {0}")]
    UnknownLine(String),
    #[error("invalid network: {0:?}")]
    Invalid(Vec<Violation>),
}

/// Dispatchable generator technologies. The order fixes the column order of
/// per-type arrays such as [`HourData::marginal_cost`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenType {
    Hydro,
    Nuclear,
    Ccgt,
    GasPeak,
    Coal,
    Lignite,
}

impl GenType {
    pub const COUNT: usize = 6;
    pub const ALL: [GenType; GenType::COUNT] = [
        GenType::Hydro,
        GenType::Nuclear,
        GenType::Ccgt,
        GenType::GasPeak,
        GenType::Coal,
        GenType::Lignite,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GenType::Hydro => "hydro",
            GenType::Nuclear => "nuclear",
            GenType::Ccgt => "ccgt",
            GenType::GasPeak => "gas_peak",
            GenType::Coal => "coal",
            GenType::Lignite => "lignite",
        }
    }

    pub fn parse(s: &str) -> Option<GenType> {
        GenType::ALL.into_iter().find(|g| g.as_str() == s)
    }
}

impl fmt::Display for GenType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A price zone. `country` is the welfare aggregation key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub country: String,
}

impl Zone {
    pub fn new(id: impl Into<String>, country: impl Into<String>) -> Self {
        Zone {
            id: id.into(),
            country: country.into(),
        }
    }
}

/// An interconnector. Positive flow runs `from_zone -> to_zone`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from_zone: String,
    pub to_zone: String,
    pub capacity_mw: f64,
}

impl Line {
    pub fn new(
        id: impl Into<String>,
        from_zone: impl Into<String>,
        to_zone: impl Into<String>,
        capacity_mw: f64,
    ) -> Self {
        Line {
            id: id.into(),
            from_zone: from_zone.into(),
            to_zone: to_zone.into(),
            capacity_mw,
        }
    }
}

/// Zone-line incidence matrix: `+1` at the sending zone, `-1` at the
/// receiving zone, `0` elsewhere. Stored dense, zone-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    zones: usize,
    lines: usize,
    entries: Vec<i8>,
    /// (from, to) zone index per line.
    endpoints: Vec<(usize, usize)>,
}

impl Incidence {
    pub fn get(&self, zone: usize, line: usize) -> i8 {
        self.entries[zone * self.lines + line]
    }

    pub fn endpoints(&self, line: usize) -> (usize, usize) {
        self.endpoints[line]
    }

    pub fn n_zones(&self) -> usize {
        self.zones
    }

    pub fn n_lines(&self) -> usize {
        self.lines
    }

    /// Non-zero entries as a map, the textbook `(zone, line) -> coefficient` view.
    pub fn to_map(&self) -> BTreeMap<(usize, usize), i8> {
        let mut map = BTreeMap::new();
        for n in 0..self.zones {
            for l in 0..self.lines {
                let v = self.get(n, l);
                if v != 0 {
                    map.insert((n, l), v);
                }
            }
        }
        map
    }
}

/// Build the incidence matrix for `lines` over `zones`.
///
/// A line whose endpoints coincide gets an all-zero column (the `+1` and
/// `-1` cancel); [`validate_network`] reports it as a self-loop.
pub fn build_incidence(zones: &[Zone], lines: &[Line]) -> Result<Incidence, NetworkError> {
    let index = |line: &Line, id: &str| {
        zones
            .iter()
            .position(|z| z.id == id)
            .ok_or_else(|| NetworkError::UnknownZone {
                line: line.id.clone(),
                zone: id.to_string(),
            })
    };
    let mut entries = vec![0i8; zones.len() * lines.len()];
    let mut endpoints = Vec::with_capacity(lines.len());
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (l, line) in lines.iter().enumerate() {
        let from = index(line, &line.from_zone)?;
        let to = index(line, &line.to_zone)?;
        let key = (from.min(to), from.max(to));
        if let Some(&existing) = seen.get(&key) {
            return Err(NetworkError::DuplicateLine {
                line: line.id.clone(),
                existing: lines[existing].id.clone(),
            });
        }
        seen.insert(key, l);
        entries[from * lines.len() + l] += 1;
        entries[to * lines.len() + l] -= 1;
        endpoints.push((from, to));
    }
    Ok(Incidence {
        zones: zones.len(),
        lines: lines.len(),
        entries,
        endpoints,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub zones: Vec<Zone>,
    pub lines: Vec<Line>,
    pub incidence: Incidence,
}

impl Network {
    pub fn new(zones: Vec<Zone>, lines: Vec<Line>) -> Result<Self, NetworkError> {
        let incidence = build_incidence(&zones, &lines)?;
        Ok(Network {
            zones,
            lines,
            incidence,
        })
    }

    /// Like [`Network::new`] but also rejects any invariant violation.
    pub fn validated(zones: Vec<Zone>, lines: Vec<Line>) -> Result<Self, NetworkError> {
        let net = Self::new(zones, lines)?;
        let violations = validate_network(&net);
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(NetworkError::Invalid(violations))
        }
    }

    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    /// Index of the line joining `a` and `b` in either orientation.
    pub fn line_between(&self, a: &str, b: &str) -> Option<usize> {
        self.lines.iter().position(|l| {
            (l.from_zone == a && l.to_zone == b) || (l.from_zone == b && l.to_zone == a)
        })
    }

    /// Distinct countries in order of first appearance.
    pub fn countries(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for z in &self.zones {
            if !out.contains(&z.country) {
                out.push(z.country.clone());
            }
        }
        out
    }

    pub fn country_of(&self, zone: usize) -> &str {
        &self.zones[zone].country
    }
}

/// Machine-readable invariant violation codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code")]
pub enum Violation {
    DuplicateZone {
        zone: String,
    },
    EmptyCountry {
        zone: String,
    },
    UnknownZone {
        line: String,
        zone: String,
    },
    SelfLoop {
        line: String,
    },
    NegativeCapacity {
        line: String,
    },
    DuplicateLine {
        line: String,
    },
    IncidenceMismatch {
        line: String,
    },
    HoursMismatch {
        expected: usize,
        found: usize,
    },
    ZoneCountMismatch {
        hour: usize,
        expected: usize,
        found: usize,
    },
    NonNegativeDemandSlope {
        hour: usize,
        zone: String,
    },
    NegativeRenewable {
        hour: usize,
        zone: String,
    },
    NegativeMarginalCost {
        hour: usize,
        gen_type: GenType,
    },
    UnknownFleetZone {
        fleet: usize,
    },
    NegativeFleetCapacity {
        fleet: usize,
    },
    InvalidEnergyBudget {
        fleet: usize,
    },
    FiniteBudgetNonHydro {
        fleet: usize,
    },
}

/// Check every network invariant. An empty result means well-formed.
pub fn validate_network(network: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for z in &network.zones {
        if !ids.insert(z.id.as_str()) {
            out.push(Violation::DuplicateZone { zone: z.id.clone() });
        }
        if z.country.is_empty() {
            out.push(Violation::EmptyCountry { zone: z.id.clone() });
        }
    }
    let mut pairs = HashSet::new();
    for (l, line) in network.lines.iter().enumerate() {
        for end in [&line.from_zone, &line.to_zone] {
            if !ids.contains(end.as_str()) {
                out.push(Violation::UnknownZone {
                    line: line.id.clone(),
                    zone: end.clone(),
                });
            }
        }
        if line.from_zone == line.to_zone {
            out.push(Violation::SelfLoop {
                line: line.id.clone(),
            });
        }
        if !(line.capacity_mw >= 0.0) {
            out.push(Violation::NegativeCapacity {
                line: line.id.clone(),
            });
        }
        let key = if line.from_zone <= line.to_zone {
            (line.from_zone.as_str(), line.to_zone.as_str())
        } else {
            (line.to_zone.as_str(), line.from_zone.as_str())
        };
        if !pairs.insert(key) {
            out.push(Violation::DuplicateLine {
                line: line.id.clone(),
            });
        }
        if line.from_zone != line.to_zone && l < network.incidence.n_lines() {
            let col: Vec<i8> = (0..network.incidence.n_zones())
                .map(|n| network.incidence.get(n, l))
                .collect();
            let plus = col.iter().filter(|&&v| v == 1).count();
            let minus = col.iter().filter(|&&v| v == -1).count();
            let zero = col.iter().filter(|&&v| v == 0).count();
            if plus != 1 || minus != 1 || zero + 2 != col.len() {
                out.push(Violation::IncidenceMismatch {
                    line: line.id.clone(),
                });
            }
        }
    }
    if network.incidence.n_lines() != network.lines.len()
        || network.incidence.n_zones() != network.zones.len()
    {
        out.push(Violation::IncidenceMismatch { line: "*".into() });
    }
    out
}

/// Aggregated dispatchable capacity of one type in one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFleet {
    pub zone: usize,
    pub gen_type: GenType,
    /// Post-availability capacity, MW (= MWh per hour).
    pub capacity_mw: f64,
    /// Production limit over the horizon, MWh. `None` is unlimited.
    pub energy_budget_mwh: Option<f64>,
    /// Fleet-specific constant marginal cost. When set it replaces the
    /// hourly per-type cost; used to express stepped supply curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal_cost_override: Option<f64>,
}

impl GeneratorFleet {
    pub fn new(zone: usize, gen_type: GenType, capacity_mw: f64) -> Self {
        GeneratorFleet {
            zone,
            gen_type,
            capacity_mw,
            energy_budget_mwh: None,
            marginal_cost_override: None,
        }
    }

    pub fn with_budget(mut self, budget_mwh: f64) -> Self {
        self.energy_budget_mwh = Some(budget_mwh);
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.marginal_cost_override = Some(cost);
        self
    }
}

/// Exogenous inputs for one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourData {
    pub t: usize,
    pub renewable_mwh: Vec<f64>,
    /// Inverse-demand slope, strictly negative.
    pub demand_slope: Vec<f64>,
    pub demand_intercept: Vec<f64>,
    /// Indexed by [`GenType::index`].
    pub marginal_cost: [f64; GenType::COUNT],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Spring,
    Summer,
    Autumn,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [
        Season::Spring,
        Season::Summer,
        Season::Autumn,
        Season::Winter,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
            Season::Winter => "winter",
        }
    }

    pub fn parse(s: &str) -> Option<Season> {
        Season::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioWeek {
    pub label: String,
    pub season: Season,
    pub hours: Vec<HourData>,
    pub fleets: Vec<GeneratorFleet>,
}

pub const HOURS_PER_WEEK: usize = 168;

impl ScenarioWeek {
    pub fn n_hours(&self) -> usize {
        self.hours.len()
    }

    /// Marginal cost of `fleet` in hour `t` (index into `hours`).
    pub fn fleet_cost(&self, fleet: usize, t: usize) -> f64 {
        let f = &self.fleets[fleet];
        f.marginal_cost_override
            .unwrap_or_else(|| self.hours[t].marginal_cost[f.gen_type.index()])
    }

    /// Fleets located in `zone`.
    pub fn fleets_in(&self, zone: usize) -> impl Iterator<Item = (usize, &GeneratorFleet)> {
        self.fleets
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.zone == zone)
    }
}

/// Check a week against the network it is meant to run on.
pub fn validate_week(
    network: &Network,
    week: &ScenarioWeek,
    expected_hours: Option<usize>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = network.n_zones();
    if let Some(t) = expected_hours {
        if week.hours.len() != t {
            out.push(Violation::HoursMismatch {
                expected: t,
                found: week.hours.len(),
            });
        }
    }
    for (t, h) in week.hours.iter().enumerate() {
        for len in [
            h.renewable_mwh.len(),
            h.demand_slope.len(),
            h.demand_intercept.len(),
        ] {
            if len != n {
                out.push(Violation::ZoneCountMismatch {
                    hour: t,
                    expected: n,
                    found: len,
                });
            }
        }
        for (z, zone) in network.zones.iter().enumerate() {
            if h.demand_slope.get(z).is_some_and(|&a| !(a < 0.0)) {
                out.push(Violation::NonNegativeDemandSlope {
                    hour: t,
                    zone: zone.id.clone(),
                });
            }
            if h.renewable_mwh.get(z).is_some_and(|&r| !(r >= 0.0)) {
                out.push(Violation::NegativeRenewable {
                    hour: t,
                    zone: zone.id.clone(),
                });
            }
        }
        for g in GenType::ALL {
            if !(h.marginal_cost[g.index()] >= 0.0) {
                out.push(Violation::NegativeMarginalCost {
                    hour: t,
                    gen_type: g,
                });
            }
        }
    }
    for (k, f) in week.fleets.iter().enumerate() {
        if f.zone >= n {
            out.push(Violation::UnknownFleetZone { fleet: k });
        }
        if !(f.capacity_mw >= 0.0) {
            out.push(Violation::NegativeFleetCapacity { fleet: k });
        }
        if let Some(q) = f.energy_budget_mwh {
            if !(q >= 0.0) || q.is_nan() {
                out.push(Violation::InvalidEnergyBudget { fleet: k });
            }
            if q.is_finite() && f.gen_type != GenType::Hydro {
                out.push(Violation::FiniteBudgetNonHydro { fleet: k });
            }
        }
    }
    out
}
