//! Scenario directories: CSV tables for zones, lines, generators, hourly
//! observations and daily fuel prices.
//!
//! ```text
//! zones.csv        zone,country
//! lines.csv        id,from,to,capacity_mw
//! generators.csv   zone,type,raw_capacity_mw
//! timeseries.csv   week,hour,zone,renewable_mwh,hist_price_eur_mwh,hist_consumption_mwh,hist_hydro_mwh
//! fuel_prices.csv  week,day,gas,coal,eua
//! weeks.csv        week,season          (optional)
//! ```
//!
//! Hours and days are counted from 0 within each week.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{FuelDay, RawGenType, RawGenerator, RawObservation, RawWeek};
use crate::network::{Line, Network, NetworkError, Season, Zone};
use crate::synthetic::season_of;

pub const ZONES_FILE: &str = "zones.csv";
pub const LINES_FILE: &str = "lines.csv";
pub const GENERATORS_FILE: &str = "generators.csv";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const FUEL_FILE: &str = "fuel_prices.csv";
pub const WEEKS_FILE: &str = "weeks.csv";

const ZONES_HEADER: [&str; 2] = ["zone", "country"];
const LINES_HEADER: [&str; 4] = ["id", "from", "to", "capacity_mw"];
const GENERATORS_HEADER: [&str; 3] = ["zone", "type", "raw_capacity_mw"];
const TIMESERIES_HEADER: [&str; 7] = [
    "week",
    "hour",
    "zone",
    "renewable_mwh",
    "hist_price_eur_mwh",
    "hist_consumption_mwh",
    "hist_hydro_mwh",
];
const FUEL_HEADER: [&str; 5] = ["week", "day", "gas", "coal", "eua"];
const WEEKS_HEADER: [&str; 2] = ["week", "season"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Schema {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}:{line}: unknown zone {zone:?}")]
    UnknownZone {
        file: String,
        line: u64,
        zone: String,
    },
    #[error("{file}: missing row for week {week}, hour {hour}, zone {zone}")]
    Gap {
        file: String,
        week: u32,
        hour: usize,
        zone: String,
    },
    #[error("{file}: missing fuel prices for week {week}, day {day}")]
    FuelGap { file: String, week: u32, day: usize },
    #[error("{file}: {source}")]
    Network { file: String, source: NetworkError },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// Everything a scenario directory holds, before calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioData {
    pub network: Network,
    pub generators: Vec<RawGenerator>,
    /// Sorted by week number.
    pub weeks: Vec<RawWeek>,
}

impl ScenarioData {
    pub fn hours_per_week(&self) -> usize {
        self.weeks.first().map_or(0, |w| w.hours.len())
    }
}

struct Table {
    file: String,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(dir: &Path, name: &str, header: &[&str]) -> Result<Table, IoError> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|source| IoError::File {
            path: path.clone(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let found = reader
            .headers()
            .map_err(|source| IoError::Csv {
                path: path.clone(),
                source,
            })?
            .clone();
        let found: Vec<&str> = found.iter().map(str::trim).collect();
        if found != header {
            return Err(IoError::Schema {
                file: name.to_string(),
                line: 1,
                message: format!("header {:?}, expected {:?}", found, header),
            });
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| IoError::Schema {
                file: name.to_string(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Table {
            file: name.to_string(),
            rows,
        })
    }

    fn schema(&self, line: u64, message: String) -> IoError {
        IoError::Schema {
            file: self.file.clone(),
            line,
            message,
        }
    }

    fn str<'r>(
        &self,
        line: u64,
        rec: &'r csv::StringRecord,
        col: usize,
        name: &str,
    ) -> Result<&'r str, IoError> {
        let v = rec.get(col).map(str::trim).unwrap_or("");
        if v.is_empty() {
            return Err(self.schema(line, format!("empty {name}")));
        }
        Ok(v)
    }

    fn f64(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        col: usize,
        name: &str,
    ) -> Result<f64, IoError> {
        let s = self.str(line, rec, col, name)?;
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.schema(line, format!("{name} {s:?} is not a finite number"))),
        }
    }

    fn uint(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        col: usize,
        name: &str,
    ) -> Result<usize, IoError> {
        let s = self.str(line, rec, col, name)?;
        s.parse::<usize>()
            .map_err(|_| self.schema(line, format!("{name} {s:?} is not a non-negative integer")))
    }
}

pub fn load_network(dir: &Path) -> Result<Network, IoError> {
    let zt = Table::read(dir, ZONES_FILE, &ZONES_HEADER)?;
    let mut zones = Vec::new();
    for (line, rec) in &zt.rows {
        zones.push(Zone::new(
            zt.str(*line, rec, 0, "zone")?,
            zt.str(*line, rec, 1, "country")?,
        ));
    }
    let lt = Table::read(dir, LINES_FILE, &LINES_HEADER)?;
    let ids: BTreeSet<&str> = zones.iter().map(|z| z.id.as_str()).collect();
    let mut lines = Vec::new();
    for (line, rec) in &lt.rows {
        let from = lt.str(*line, rec, 1, "from")?;
        let to = lt.str(*line, rec, 2, "to")?;
        for z in [from, to] {
            if !ids.contains(z) {
                return Err(IoError::UnknownZone {
                    file: lt.file.clone(),
                    line: *line,
                    zone: z.to_string(),
                });
            }
        }
        let cap = lt.f64(*line, rec, 3, "capacity_mw")?;
        lines.push(Line::new(lt.str(*line, rec, 0, "id")?, from, to, cap));
    }
    Network::validated(zones, lines).map_err(|source| IoError::Network {
        file: LINES_FILE.into(),
        source,
    })
}

pub fn load_scenario(dir: &Path) -> Result<ScenarioData, IoError> {
    let network = load_network(dir)?;
    let zone_idx = |t: &Table, line: u64, z: &str| {
        network.zone_index(z).ok_or_else(|| IoError::UnknownZone {
            file: t.file.clone(),
            line,
            zone: z.to_string(),
        })
    };

    let gt = Table::read(dir, GENERATORS_FILE, &GENERATORS_HEADER)?;
    let mut generators = Vec::new();
    for (line, rec) in &gt.rows {
        let zone = gt.str(*line, rec, 0, "zone")?;
        zone_idx(&gt, *line, zone)?;
        let ty = gt.str(*line, rec, 1, "type")?;
        let raw_type = RawGenType::parse(ty)
            .ok_or_else(|| gt.schema(*line, format!("unknown type {ty:?}")))?;
        let mw = gt.f64(*line, rec, 2, "raw_capacity_mw")?;
        if mw < 0.0 {
            return Err(gt.schema(*line, format!("negative capacity {mw}")));
        }
        generators.push(RawGenerator {
            zone: zone.to_string(),
            raw_type,
            raw_capacity_mw: mw,
        });
    }

    let tt = Table::read(dir, TIMESERIES_FILE, &TIMESERIES_HEADER)?;
    let mut obs: BTreeMap<(u32, usize, usize), RawObservation> = BTreeMap::new();
    let mut max_hour = 0;
    for (line, rec) in &tt.rows {
        let week = tt.uint(*line, rec, 0, "week")? as u32;
        let hour = tt.uint(*line, rec, 1, "hour")?;
        let zone = zone_idx(&tt, *line, tt.str(*line, rec, 2, "zone")?)?;
        let o = RawObservation {
            renewable_mwh: tt.f64(*line, rec, 3, "renewable_mwh")?,
            hist_price: tt.f64(*line, rec, 4, "hist_price_eur_mwh")?,
            hist_consumption: tt.f64(*line, rec, 5, "hist_consumption_mwh")?,
            hist_hydro: tt.f64(*line, rec, 6, "hist_hydro_mwh")?,
        };
        if obs.insert((week, hour, zone), o).is_some() {
            return Err(tt.schema(*line, format!("duplicate row for week {week}, hour {hour}")));
        }
        max_hour = max_hour.max(hour);
    }
    let week_ids: BTreeSet<u32> = obs.keys().map(|k| k.0).collect();
    let n_hours = if obs.is_empty() { 0 } else { max_hour + 1 };

    let ft = Table::read(dir, FUEL_FILE, &FUEL_HEADER)?;
    let mut fuel: BTreeMap<(u32, usize), FuelDay> = BTreeMap::new();
    for (line, rec) in &ft.rows {
        let week = ft.uint(*line, rec, 0, "week")? as u32;
        let day = ft.uint(*line, rec, 1, "day")?;
        let d = FuelDay {
            date: format!("w{week:03}d{day}"),
            gas_price: ft.f64(*line, rec, 2, "gas")?,
            coal_price: ft.f64(*line, rec, 3, "coal")?,
            eua_price: ft.f64(*line, rec, 4, "eua")?,
        };
        if fuel.insert((week, day), d).is_some() {
            return Err(ft.schema(
                *line,
                format!("duplicate fuel row for week {week}, day {day}"),
            ));
        }
    }

    let mut seasons: BTreeMap<u32, Season> = BTreeMap::new();
    if dir.join(WEEKS_FILE).exists() {
        let wt = Table::read(dir, WEEKS_FILE, &WEEKS_HEADER)?;
        for (line, rec) in &wt.rows {
            let week = wt.uint(*line, rec, 0, "week")? as u32;
            let s = wt.str(*line, rec, 1, "season")?;
            let season = Season::parse(s)
                .ok_or_else(|| wt.schema(*line, format!("unknown season {s:?}")))?;
            seasons.insert(week, season);
        }
    }

    let n_weeks = week_ids.len();
    let mut weeks = Vec::with_capacity(n_weeks);
    for (i, &w) in week_ids.iter().enumerate() {
        let mut hours = Vec::with_capacity(n_hours);
        for t in 0..n_hours {
            let mut row = Vec::with_capacity(network.n_zones());
            for z in 0..network.n_zones() {
                let o = obs.get(&(w, t, z)).ok_or_else(|| IoError::Gap {
                    file: TIMESERIES_FILE.into(),
                    week: w,
                    hour: t,
                    zone: network.zones[z].id.clone(),
                })?;
                row.push(*o);
            }
            hours.push(row);
        }
        let mut days = Vec::new();
        for d in 0..n_hours.div_ceil(24) {
            let f = fuel.get(&(w, d)).ok_or(IoError::FuelGap {
                file: FUEL_FILE.into(),
                week: w,
                day: d,
            })?;
            days.push(f.clone());
        }
        let season = seasons
            .get(&w)
            .copied()
            .unwrap_or_else(|| season_of(i, n_weeks));
        weeks.push(RawWeek {
            week: w,
            season,
            hours,
            fuel: days,
        });
    }
    Ok(ScenarioData {
        network,
        generators,
        weeks,
    })
}

fn write_csv<const N: usize>(
    dir: &Path,
    name: &str,
    header: [&str; N],
    rows: impl IntoIterator<Item = [String; N]>,
) -> Result<(), IoError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|source| IoError::Csv {
        path: path.clone(),
        source,
    })?;
    let err = |source| IoError::Csv {
        path: path.clone(),
        source,
    };
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|source| IoError::File {
        path: path.clone(),
        source,
    })
}

/// Write `data` as a scenario directory (created if missing).
pub fn save_scenario(dir: &Path, data: &ScenarioData) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let net = &data.network;
    write_csv(
        dir,
        ZONES_FILE,
        ZONES_HEADER,
        net.zones.iter().map(|z| [z.id.clone(), z.country.clone()]),
    )?;
    write_csv(
        dir,
        LINES_FILE,
        LINES_HEADER,
        net.lines.iter().map(|l| {
            [
                l.id.clone(),
                l.from_zone.clone(),
                l.to_zone.clone(),
                l.capacity_mw.to_string(),
            ]
        }),
    )?;
    write_csv(
        dir,
        GENERATORS_FILE,
        GENERATORS_HEADER,
        data.generators.iter().map(|g| {
            [
                g.zone.clone(),
                g.raw_type.as_str().to_string(),
                g.raw_capacity_mw.to_string(),
            ]
        }),
    )?;
    let ts = data.weeks.iter().flat_map(|w| {
        w.hours.iter().enumerate().flat_map(move |(t, row)| {
            row.iter().enumerate().map(move |(z, o)| {
                [
                    w.week.to_string(),
                    t.to_string(),
                    net.zones[z].id.clone(),
                    o.renewable_mwh.to_string(),
                    o.hist_price.to_string(),
                    o.hist_consumption.to_string(),
                    o.hist_hydro.to_string(),
                ]
            })
        })
    });
    write_csv(dir, TIMESERIES_FILE, TIMESERIES_HEADER, ts)?;
    let fuel = data.weeks.iter().flat_map(|w| {
        w.fuel.iter().enumerate().map(move |(d, f)| {
            [
                w.week.to_string(),
                d.to_string(),
                f.gas_price.to_string(),
                f.coal_price.to_string(),
                f.eua_price.to_string(),
            ]
        })
    });
    write_csv(dir, FUEL_FILE, FUEL_HEADER, fuel)?;
    write_csv(
        dir,
        WEEKS_FILE,
        WEEKS_HEADER,
        data.weeks
            .iter()
            .map(|w| [w.week.to_string(), w.season.as_str().to_string()]),
    )
}
