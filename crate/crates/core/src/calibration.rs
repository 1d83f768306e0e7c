//! Turns historical-style raw inputs into model parameters: linear inverse
//! demand curves, per-type marginal costs, derated capacities and weekly
//! hydro energy budgets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{GenType, GeneratorFleet, HourData, Network, ScenarioWeek, Season};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("non-positive consumption {consumption} MWh (zone {zone}, hour {hour})")]
    NonPositiveConsumption {
        zone: String,
        hour: usize,
        consumption: f64,
    },
    #[error("zero historical price (zone {zone}, hour {hour}) gives a flat demand curve")]
    ZeroPrice { zone: String, hour: usize },
    #[error("price elasticity must be negative, got {0}")]
    Elasticity(f64),
    #[error("negative fuel price on {0}")]
    NegativeFuelPrice(String),
    #[error("no fuel prices for day {day} of week {week}")]
    MissingFuelDay { week: String, day: usize },
    #[error("{0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub elasticity: f64,
    /// Availability factor per [`GenType::index`].
    pub availability: [f64; GenType::COUNT],
    /// Electrical efficiency per [`GenType::index`]; only thermal types are used.
    pub efficiency: [f64; GenType::COUNT],
    /// tCO2 per MWh of fuel input.
    pub co2_coal: f64,
    pub co2_lignite: f64,
    pub co2_gas: f64,
    pub nuclear_cost: f64,
    pub hydro_cost: f64,
    /// Lignite fuel cost, €/MWh of fuel.
    pub lignite_fuel_cost: f64,
    /// Share of an aggregate natural-gas capacity assigned to CCGT.
    pub ccgt_share: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        let mut availability = [1.0; GenType::COUNT];
        availability[GenType::Coal.index()] = 0.85;
        availability[GenType::Lignite.index()] = 0.85;
        availability[GenType::Nuclear.index()] = 0.92;
        availability[GenType::Ccgt.index()] = 0.95;
        availability[GenType::GasPeak.index()] = 0.95;
        let mut efficiency = [1.0; GenType::COUNT];
        efficiency[GenType::Ccgt.index()] = 0.55;
        efficiency[GenType::GasPeak.index()] = 0.39;
        efficiency[GenType::Coal.index()] = 0.39;
        efficiency[GenType::Lignite.index()] = 0.38;
        CalibrationConfig {
            elasticity: -0.05,
            availability,
            efficiency,
            co2_coal: 0.359,
            co2_lignite: 0.364,
            co2_gas: 0.201,
            nuclear_cost: 15.0,
            hydro_cost: 0.0,
            lignite_fuel_cost: 10.0,
            ccgt_share: 2.0 / 3.0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        if !(self.elasticity < 0.0) {
            return Err(CalibrationError::Elasticity(self.elasticity));
        }
        for g in GenType::ALL {
            let a = self.availability[g.index()];
            let e = self.efficiency[g.index()];
            if !(a > 0.0 && a <= 1.0) || !(e > 0.0 && e <= 1.0) {
                return Err(CalibrationError::Shape(format!(
                    "factor for {g} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Daily fuel and carbon prices. Fuel prices are per MWh of fuel input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelDay {
    pub date: String,
    pub gas_price: f64,
    pub coal_price: f64,
    pub eua_price: f64,
}

/// Slope and intercept of the inverse demand curve `price = slope * d + intercept`
/// through the historical point `(consumption, |price|)` with point
/// elasticity `elasticity`.
pub fn demand_curve(
    price: f64,
    consumption: f64,
    elasticity: f64,
) -> Result<(f64, f64), CalibrationError> {
    if !(elasticity < 0.0) {
        return Err(CalibrationError::Elasticity(elasticity));
    }
    if !(consumption > 0.0) {
        return Err(CalibrationError::NonPositiveConsumption {
            zone: String::new(),
            hour: 0,
            consumption,
        });
    }
    let p = price.abs();
    if p == 0.0 {
        return Err(CalibrationError::ZeroPrice {
            zone: String::new(),
            hour: 0,
        });
    }
    let slope = p / (elasticity * consumption);
    let intercept = (1.0 - 1.0 / elasticity) * p;
    Ok((slope, intercept))
}

/// Marginal cost in €/MWh: `(fuel + co2_intensity * eua) / efficiency` for
/// thermal plants, fixed values for hydro and nuclear.
pub fn marginal_cost(gen_type: GenType, fuel: &FuelDay, config: &CalibrationConfig) -> f64 {
    let eff = config.efficiency[gen_type.index()];
    match gen_type {
        GenType::Hydro => config.hydro_cost,
        GenType::Nuclear => config.nuclear_cost,
        GenType::Ccgt | GenType::GasPeak => {
            (fuel.gas_price + config.co2_gas * fuel.eua_price) / eff
        }
        GenType::Coal => (fuel.coal_price + config.co2_coal * fuel.eua_price) / eff,
        GenType::Lignite => (config.lignite_fuel_cost + config.co2_lignite * fuel.eua_price) / eff,
    }
}

pub fn marginal_costs(fuel: &FuelDay, config: &CalibrationConfig) -> [f64; GenType::COUNT] {
    GenType::ALL.map(|g| marginal_cost(g, fuel, config))
}

/// Raw capacity technology as reported in source data. `Gas` is the
/// undifferentiated natural-gas figure that gets split into CCGT and peakers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawGenType {
    Typed(GenType),
    Gas,
}

impl RawGenType {
    pub fn parse(s: &str) -> Option<RawGenType> {
        if s == "gas" {
            Some(RawGenType::Gas)
        } else {
            GenType::parse(s).map(RawGenType::Typed)
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RawGenType::Gas => "gas",
            RawGenType::Typed(g) => g.as_str(),
        }
    }
}

/// Derated capacities for one raw figure. An aggregate gas figure expands
/// into a CCGT and a peaker entry.
pub fn derate_capacity(
    raw_mw: f64,
    raw_type: RawGenType,
    config: &CalibrationConfig,
) -> Vec<(GenType, f64)> {
    match raw_type {
        RawGenType::Typed(g) => vec![(g, raw_mw * config.availability[g.index()])],
        RawGenType::Gas => {
            let ccgt = raw_mw * config.ccgt_share;
            let peak = raw_mw - ccgt;
            vec![
                (
                    GenType::Ccgt,
                    ccgt * config.availability[GenType::Ccgt.index()],
                ),
                (
                    GenType::GasPeak,
                    peak * config.availability[GenType::GasPeak.index()],
                ),
            ]
        }
    }
}

/// Weekly hydro energy budget: the sum of historical hourly hydro output.
pub fn hydro_budget(historical_mwh: &[f64]) -> f64 {
    historical_mwh.iter().sum()
}

/// One raw capacity entry (`generators.csv` row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGenerator {
    pub zone: String,
    pub raw_type: RawGenType,
    pub raw_capacity_mw: f64,
}

/// Historical observations for one zone in one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawObservation {
    pub renewable_mwh: f64,
    pub hist_price: f64,
    pub hist_consumption: f64,
    pub hist_hydro: f64,
}

/// Raw inputs for one week, `hours[t][zone]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawWeek {
    pub week: u32,
    pub season: Season,
    pub hours: Vec<Vec<RawObservation>>,
    /// One entry per day, `fuel[t / 24]` applies to hour `t`.
    pub fuel: Vec<FuelDay>,
}

/// Build the calibrated [`ScenarioWeek`] for `raw` on `network`.
///
/// Capacities of the same zone and type are summed into one fleet; hydro
/// fleets receive the zone's weekly budget.
pub fn calibrate_week(
    network: &Network,
    generators: &[RawGenerator],
    raw: &RawWeek,
    config: &CalibrationConfig,
) -> Result<ScenarioWeek, CalibrationError> {
    config.validate()?;
    let n = network.n_zones();
    let label = format!("week_{:03}", raw.week);
    let mut hours = Vec::with_capacity(raw.hours.len());
    for (t, obs) in raw.hours.iter().enumerate() {
        if obs.len() != n {
            return Err(CalibrationError::Shape(format!(
                "hour {t} has {} zone observations, expected {n}",
                obs.len()
            )));
        }
        let fuel = raw
            .fuel
            .get(t / 24)
            .ok_or(CalibrationError::MissingFuelDay {
                week: label.clone(),
                day: t / 24,
            })?;
        for p in [fuel.gas_price, fuel.coal_price, fuel.eua_price] {
            if !(p >= 0.0) {
                return Err(CalibrationError::NegativeFuelPrice(fuel.date.clone()));
            }
        }
        let mut slope = Vec::with_capacity(n);
        let mut intercept = Vec::with_capacity(n);
        for (z, o) in obs.iter().enumerate() {
            let zone = &network.zones[z].id;
            let (a, b) = demand_curve(o.hist_price, o.hist_consumption, config.elasticity)
                .map_err(|e| match e {
                    CalibrationError::NonPositiveConsumption { consumption, .. } => {
                        CalibrationError::NonPositiveConsumption {
                            zone: zone.clone(),
                            hour: t,
                            consumption,
                        }
                    }
                    CalibrationError::ZeroPrice { .. } => CalibrationError::ZeroPrice {
                        zone: zone.clone(),
                        hour: t,
                    },
                    other => other,
                })?;
            slope.push(a);
            intercept.push(b);
        }
        hours.push(HourData {
            t,
            renewable_mwh: obs.iter().map(|o| o.renewable_mwh).collect(),
            demand_slope: slope,
            demand_intercept: intercept,
            marginal_cost: marginal_costs(fuel, config),
        });
    }

    let mut capacity = vec![[0.0f64; GenType::COUNT]; n];
    let mut present = vec![[false; GenType::COUNT]; n];
    for g in generators {
        let z = network.zone_index(&g.zone).ok_or_else(|| {
            CalibrationError::Shape(format!("generator in unknown zone {}", g.zone))
        })?;
        for (ty, mw) in derate_capacity(g.raw_capacity_mw, g.raw_type, config) {
            capacity[z][ty.index()] += mw;
            present[z][ty.index()] = true;
        }
    }
    let mut fleets = Vec::new();
    for z in 0..n {
        for ty in GenType::ALL {
            if !present[z][ty.index()] {
                continue;
            }
            let mut fleet = GeneratorFleet::new(z, ty, capacity[z][ty.index()]);
            if ty == GenType::Hydro {
                let series: Vec<f64> = raw.hours.iter().map(|h| h[z].hist_hydro).collect();
                fleet = fleet.with_budget(hydro_budget(&series));
            }
            fleets.push(fleet);
        }
    }
    Ok(ScenarioWeek {
        label,
        season: raw.season,
        hours,
        fleets,
    })
}
