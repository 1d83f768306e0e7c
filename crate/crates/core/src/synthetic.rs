//! Seeded synthetic scenarios on a Northern European zonal topology.
//!
//! Zones are listed Denmark-first, so the first `n` zones always form a
//! connected sub-network around the Danish interconnectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::{FuelDay, RawGenType, RawGenerator, RawObservation, RawWeek};
use crate::io::ScenarioData;
use crate::network::{GenType, Line, Network, Season, Zone, HOURS_PER_WEEK};

struct ZoneProfile {
    id: &'static str,
    country: &'static str,
    consumption: f64,
    base_price: f64,
    wind: f64,
    solar: f64,
    /// (type, raw MW); `"gas"` is split on calibration.
    plants: &'static [(&'static str, f64)],
}

const ZONES: [ZoneProfile; 18] = [
    ZoneProfile {
        id: "DK1",
        country: "DK",
        consumption: 2300.0,
        base_price: 45.0,
        wind: 4000.0,
        solar: 800.0,
        plants: &[("gas", 1200.0), ("coal", 1500.0)],
    },
    ZoneProfile {
        id: "DK2",
        country: "DK",
        consumption: 1500.0,
        base_price: 46.0,
        wind: 1500.0,
        solar: 400.0,
        plants: &[("gas", 800.0), ("coal", 1000.0)],
    },
    ZoneProfile {
        id: "DE",
        country: "DE",
        consumption: 58000.0,
        base_price: 52.0,
        wind: 55000.0,
        solar: 45000.0,
        plants: &[
            ("nuclear", 8000.0),
            ("gas", 30000.0),
            ("coal", 22000.0),
            ("lignite", 20000.0),
            ("hydro", 5000.0),
        ],
    },
    ZoneProfile {
        id: "SE4",
        country: "SE",
        consumption: 2500.0,
        base_price: 42.0,
        wind: 1800.0,
        solar: 0.0,
        plants: &[("gas", 600.0)],
    },
    ZoneProfile {
        id: "SE3",
        country: "SE",
        consumption: 9000.0,
        base_price: 38.0,
        wind: 2500.0,
        solar: 300.0,
        plants: &[("nuclear", 7000.0), ("hydro", 2600.0), ("gas", 500.0)],
    },
    ZoneProfile {
        id: "NO2",
        country: "NO",
        consumption: 4000.0,
        base_price: 36.0,
        wind: 0.0,
        solar: 0.0,
        plants: &[("hydro", 9500.0)],
    },
    ZoneProfile {
        id: "NL",
        country: "NL",
        consumption: 13000.0,
        base_price: 54.0,
        wind: 4500.0,
        solar: 7000.0,
        plants: &[("gas", 18000.0), ("coal", 4600.0)],
    },
    ZoneProfile {
        id: "NO1",
        country: "NO",
        consumption: 4000.0,
        base_price: 36.0,
        wind: 0.0,
        solar: 0.0,
        plants: &[("hydro", 6000.0)],
    },
    ZoneProfile {
        id: "SE2",
        country: "SE",
        consumption: 1800.0,
        base_price: 33.0,
        wind: 3000.0,
        solar: 0.0,
        plants: &[("hydro", 8000.0)],
    },
    ZoneProfile {
        id: "PL",
        country: "PL",
        consumption: 19000.0,
        base_price: 58.0,
        wind: 6000.0,
        solar: 1000.0,
        plants: &[("coal", 20000.0), ("lignite", 8000.0), ("gas", 2500.0)],
    },
    ZoneProfile {
        id: "SE1",
        country: "SE",
        consumption: 1200.0,
        base_price: 32.0,
        wind: 700.0,
        solar: 0.0,
        plants: &[("hydro", 5000.0)],
    },
    ZoneProfile {
        id: "NO3",
        country: "NO",
        consumption: 3000.0,
        base_price: 34.0,
        wind: 800.0,
        solar: 0.0,
        plants: &[("hydro", 3500.0)],
    },
    ZoneProfile {
        id: "NO4",
        country: "NO",
        consumption: 2000.0,
        base_price: 33.0,
        wind: 400.0,
        solar: 0.0,
        plants: &[("hydro", 4500.0)],
    },
    ZoneProfile {
        id: "FI",
        country: "FI",
        consumption: 9000.0,
        base_price: 44.0,
        wind: 2000.0,
        solar: 0.0,
        plants: &[
            ("nuclear", 2800.0),
            ("hydro", 3100.0),
            ("coal", 1500.0),
            ("gas", 1800.0),
        ],
    },
    ZoneProfile {
        id: "BE",
        country: "BE",
        consumption: 9500.0,
        base_price: 55.0,
        wind: 3000.0,
        solar: 4500.0,
        plants: &[("nuclear", 5900.0), ("gas", 6500.0)],
    },
    ZoneProfile {
        id: "FR",
        country: "FR",
        consumption: 55000.0,
        base_price: 50.0,
        wind: 15000.0,
        solar: 9000.0,
        plants: &[
            ("nuclear", 63000.0),
            ("hydro", 18000.0),
            ("gas", 7000.0),
            ("coal", 3000.0),
        ],
    },
    ZoneProfile {
        id: "AT",
        country: "AT",
        consumption: 7500.0,
        base_price: 53.0,
        wind: 3000.0,
        solar: 1500.0,
        plants: &[("hydro", 8500.0), ("gas", 4000.0)],
    },
    ZoneProfile {
        id: "CZ",
        country: "CZ",
        consumption: 7000.0,
        base_price: 51.0,
        wind: 0.0,
        solar: 2000.0,
        plants: &[
            ("nuclear", 4000.0),
            ("coal", 1200.0),
            ("lignite", 8000.0),
            ("gas", 1200.0),
            ("hydro", 1000.0),
        ],
    },
];

/// (from, to, MW); line ids are `FROM-TO`.
const LINES: [(&str, &str, f64); 31] = [
    ("DK1", "NO2", 1632.0),
    ("DK1", "SE3", 740.0),
    ("DK1", "DE", 2500.0),
    ("DK2", "SE4", 1300.0),
    ("DK2", "DE", 585.0),
    ("DK1", "DK2", 590.0),
    ("NO1", "NO2", 3500.0),
    ("NO1", "NO3", 500.0),
    ("NO3", "NO4", 200.0),
    ("NO4", "SE1", 700.0),
    ("NO3", "SE2", 600.0),
    ("NO4", "SE2", 300.0),
    ("NO1", "SE3", 2145.0),
    ("NO2", "NL", 700.0),
    ("NO2", "DE", 1400.0),
    ("SE1", "SE2", 3300.0),
    ("SE2", "SE3", 7300.0),
    ("SE3", "SE4", 5400.0),
    ("SE1", "FI", 1500.0),
    ("SE3", "FI", 1200.0),
    ("SE4", "DE", 615.0),
    ("SE4", "PL", 600.0),
    ("DE", "NL", 4250.0),
    ("DE", "FR", 3000.0),
    ("DE", "AT", 5000.0),
    ("DE", "CZ", 2100.0),
    ("DE", "PL", 2000.0),
    ("NL", "BE", 2400.0),
    ("BE", "FR", 3300.0),
    ("AT", "CZ", 900.0),
    ("CZ", "PL", 800.0),
];

/// Interconnectors between Denmark and its neighbours.
pub const DANISH_INTERCONNECTORS: [&str; 5] = ["DK1-NO2", "DK1-SE3", "DK1-DE", "DK2-SE4", "DK2-DE"];

pub const MAX_ZONES: usize = ZONES.len();

/// The reference network restricted to its first `n_zones` zones.
pub fn reference_network(n_zones: usize) -> Network {
    let n = n_zones.clamp(1, MAX_ZONES);
    let zones: Vec<Zone> = ZONES[..n]
        .iter()
        .map(|z| Zone::new(z.id, z.country))
        .collect();
    let ids: Vec<&str> = ZONES[..n].iter().map(|z| z.id).collect();
    let lines = LINES
        .iter()
        .filter(|(a, b, _)| ids.contains(a) && ids.contains(b))
        .map(|&(a, b, mw)| Line::new(format!("{a}-{b}"), a, b, mw))
        .collect();
    Network::new(zones, lines).expect("reference network is consistent")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelWalk {
    pub gas: f64,
    pub coal: f64,
    pub eua: f64,
    /// Daily relative standard deviation.
    pub volatility: f64,
}

impl Default for FuelWalk {
    fn default() -> Self {
        FuelWalk {
            gas: 20.0,
            coal: 10.0,
            eua: 25.0,
            volatility: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub zones: usize,
    pub weeks: usize,
    pub hours_per_week: usize,
    /// Relative seasonal swing of wind and solar output.
    pub renewable_amplitude: f64,
    /// Multiplies every zone's base price.
    pub price_level: f64,
    /// Multiplies every zone's base consumption.
    pub consumption_level: f64,
    pub fuel: FuelWalk,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 42,
            zones: MAX_ZONES,
            weeks: 100,
            hours_per_week: HOURS_PER_WEEK,
            renewable_amplitude: 0.4,
            price_level: 1.0,
            consumption_level: 1.0,
            fuel: FuelWalk::default(),
        }
    }
}

/// Week `w` of `n` falls in one of four equal season blocks.
pub fn season_of(w: usize, n: usize) -> Season {
    const ORDER: [Season; 4] = [
        Season::Winter,
        Season::Spring,
        Season::Summer,
        Season::Autumn,
    ];
    ORDER[(w * 4 / n.max(1)).min(3)]
}

fn seasonal(season: Season) -> (f64, f64, f64) {
    // (consumption factor, wind/solar phase in [-1, 1], hydro utilization)
    match season {
        Season::Winter => (1.15, 1.0, 0.55),
        Season::Spring => (1.0, 0.0, 0.45),
        Season::Summer => (0.88, -1.0, 0.35),
        Season::Autumn => (1.02, 0.3, 0.5),
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> ScenarioData {
    let network = reference_network(spec.zones);
    let profiles = &ZONES[..network.n_zones()];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut generators = Vec::new();
    for z in profiles {
        for &(ty, mw) in z.plants {
            let raw_type = RawGenType::parse(ty).expect("known type");
            generators.push(RawGenerator {
                zone: z.id.to_string(),
                raw_type,
                raw_capacity_mw: mw,
            });
        }
    }

    let t_week = spec.hours_per_week;
    let days = t_week.div_ceil(24);
    let (mut gas, mut coal, mut eua) = (spec.fuel.gas, spec.fuel.coal, spec.fuel.eua);
    let mut wind_state = vec![0.0f64; profiles.len()];
    let mut weeks = Vec::with_capacity(spec.weeks);
    for w in 0..spec.weeks {
        let season = season_of(w, spec.weeks);
        let (cons_f, phase, hydro_u) = seasonal(season);
        let amp = spec.renewable_amplitude;

        let mut fuel = Vec::with_capacity(days);
        for d in 0..days {
            let vol = spec.fuel.volatility;
            gas = (gas * (1.0 + vol * normal.sample(&mut rng))).max(1.0);
            coal = (coal * (1.0 + vol * normal.sample(&mut rng))).max(1.0);
            eua = (eua * (1.0 + vol * normal.sample(&mut rng))).max(1.0);
            fuel.push(FuelDay {
                date: format!("w{w:03}d{d}"),
                gas_price: gas,
                coal_price: coal,
                eua_price: eua,
            });
        }

        let mut hours = Vec::with_capacity(t_week);
        for t in 0..t_week {
            let hod = (t % 24) as f64;
            let daily = (std::f64::consts::TAU * (hod - 6.0) / 24.0).sin();
            let sun = (std::f64::consts::PI * (hod - 6.0) / 12.0).sin().max(0.0);
            let mut obs = Vec::with_capacity(profiles.len());
            for (z, p) in profiles.iter().enumerate() {
                wind_state[z] = 0.9 * wind_state[z] + 0.25 * normal.sample(&mut rng);
                let wind_cf =
                    (0.3 * (1.0 + 0.5 * amp * phase) + 0.15 * wind_state[z]).clamp(0.02, 0.9);
                let solar_cf = 0.6 * sun * (1.0 - 0.8 * amp * phase).clamp(0.1, 2.0);
                let renewable = p.wind * wind_cf + p.solar * solar_cf.min(0.85);

                let consumption = p.consumption
                    * spec.consumption_level
                    * cons_f
                    * (1.0 + 0.12 * daily + 0.02 * normal.sample(&mut rng));
                let price = (p.base_price
                    * spec.price_level
                    * (1.0 + 0.18 * daily + 0.08 * normal.sample(&mut rng))
                    - 0.002 * renewable / p.consumption.max(1.0) * p.base_price)
                    .max(1.0);
                let hydro_mw: f64 = p
                    .plants
                    .iter()
                    .filter(|(ty, _)| *ty == GenType::Hydro.as_str())
                    .map(|(_, mw)| mw)
                    .sum();
                let u =
                    (hydro_u * (1.0 + 0.25 * daily) + 0.03 * rng.random::<f64>()).clamp(0.0, 1.0);
                obs.push(RawObservation {
                    renewable_mwh: renewable.max(0.0),
                    hist_price: price,
                    hist_consumption: consumption.max(1.0),
                    hist_hydro: hydro_mw * u,
                });
            }
            hours.push(obs);
        }
        weeks.push(RawWeek {
            week: w as u32,
            season,
            hours,
            fuel,
        });
    }
    ScenarioData {
        network,
        generators,
        weeks,
    }
}
