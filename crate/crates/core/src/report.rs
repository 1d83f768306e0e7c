//! Result tables: welfare changes per country, line availability, counts of
//! curtailed lines, per-hour mechanism tags, price-duration curves and hour
//! snapshots. Every CSV written here can be read back with the matching
//! `read_*` function.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clearing::MarketSolution;
use crate::io::IoError;
use crate::network::Network;
use crate::tso::{availability_stats, MechanismTag, RestrictionPlan};
use crate::welfare::{Delta, WelfareDelta, HOURS_PER_YEAR};

pub const WELFARE_FILE: &str = "welfare_deltas.csv";
pub const AVAILABILITY_FILE: &str = "availability.csv";
pub const HISTOGRAM_FILE: &str = "curtailment_histogram.csv";
pub const MECHANISM_FILE: &str = "mechanism_tags.csv";
pub const PRICE_DURATION_FILE: &str = "price_duration.csv";
pub const PLAN_FILE: &str = "plan.json";
pub const SNAPSHOT_FILE: &str = "hour_snapshot.json";

pub const WELFARE_HEADER: [&str; 10] = [
    "country",
    "hours",
    "delta_tw_eur",
    "delta_cs_eur",
    "delta_ps_eur",
    "delta_cr_eur",
    "delta_tw_meur_yr",
    "delta_cs_meur_yr",
    "delta_ps_meur_yr",
    "delta_cr_meur_yr",
];
pub const AVAILABILITY_HEADER: [&str; 5] =
    ["line", "from", "to", "capacity_mw", "avg_availability_pct"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["num_curtailed_lines", "hours", "share"];
pub const MECHANISM_HEADER: [&str; 11] = [
    "hour",
    "delta_tw",
    "delta_cs",
    "delta_ps",
    "delta_cr",
    "tw",
    "cs",
    "ps",
    "cr",
    "tag",
    "mechanism",
];
pub const PRICE_DURATION_HEADER: [&str; 4] = ["zone", "rank", "hour_share", "price_eur_mwh"];

/// Row label of the system total in welfare tables.
pub const TOTAL_ROW: &str = "Total";

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: Vec<[String; N]>,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found: Vec<String> = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(String::from)
        .collect();
    let name = path
        .file_name()
        .map_or(String::new(), |n| n.to_string_lossy().into_owned());
    if found != header {
        return Err(IoError::Schema {
            file: name,
            line: 1,
            message: format!("header {found:?}, expected {header:?}"),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        out.push(
            rec.map_err(csv_err(path))?
                .iter()
                .map(String::from)
                .collect(),
        );
    }
    Ok(out)
}

fn num(path: &Path, row: usize, s: &str) -> Result<f64, IoError> {
    s.parse().map_err(|_| IoError::Schema {
        file: path.display().to_string(),
        line: row as u64 + 2,
        message: format!("{s:?} is not a number"),
    })
}

fn annual(eur: f64, hours: usize) -> f64 {
    if hours == 0 {
        0.0
    } else {
        eur * HOURS_PER_YEAR / hours as f64 / 1e6
    }
}

fn delta_row(label: &str, hours: usize, d: &Delta) -> [String; 10] {
    [
        label.to_string(),
        hours.to_string(),
        d.tw.to_string(),
        d.cs.to_string(),
        d.ps.to_string(),
        d.cr.to_string(),
        annual(d.tw, hours).to_string(),
        annual(d.cs, hours).to_string(),
        annual(d.ps, hours).to_string(),
        annual(d.cr, hours).to_string(),
    ]
}

/// Per-country changes in € over the horizon and annualized M€/yr, with a
/// system total row.
pub fn write_welfare_deltas(path: &Path, delta: &WelfareDelta) -> Result<(), IoError> {
    let mut rows: Vec<[String; 10]> = delta
        .countries
        .iter()
        .map(|(c, d)| delta_row(c, delta.hours, d))
        .collect();
    rows.push(delta_row(TOTAL_ROW, delta.hours, &delta.system));
    write_rows(path, WELFARE_HEADER, rows)
}

/// Reads a welfare table back; the total row becomes `system`.
pub fn read_welfare_deltas(path: &Path) -> Result<WelfareDelta, IoError> {
    let rows = read_rows(path, &WELFARE_HEADER)?;
    let mut countries = Vec::new();
    let mut system = Delta::default();
    let mut hours = 0;
    for (i, r) in rows.iter().enumerate() {
        hours = num(path, i, &r[1])? as usize;
        let d = Delta {
            tw: num(path, i, &r[2])?,
            cs: num(path, i, &r[3])?,
            ps: num(path, i, &r[4])?,
            cr: num(path, i, &r[5])?,
        };
        if r[0] == TOTAL_ROW {
            system = d;
        } else {
            countries.push((r[0].clone(), d));
        }
    }
    Ok(WelfareDelta {
        countries,
        system,
        hours,
    })
}

/// Mean available share of each restricted line's capacity, in percent.
pub fn write_availability(
    path: &Path,
    network: &Network,
    plan: &RestrictionPlan,
) -> Result<(), IoError> {
    let stats = availability_stats(plan);
    write_availability_levels(path, network, &stats.lines, &stats.mean_level)
}

/// Like [`write_availability`] from precomputed mean levels in `[0, 1]`.
pub fn write_availability_levels(
    path: &Path,
    network: &Network,
    lines: &[String],
    mean_levels: &[f64],
) -> Result<(), IoError> {
    let rows: Vec<AvailabilityRow> = lines
        .iter()
        .zip(mean_levels)
        .map(|(id, m)| {
            let (from, to, capacity_mw) = network
                .line_index(id)
                .map(|l| {
                    let line = &network.lines[l];
                    (
                        line.from_zone.clone(),
                        line.to_zone.clone(),
                        line.capacity_mw,
                    )
                })
                .unwrap_or_default();
            AvailabilityRow {
                line: id.clone(),
                from,
                to,
                capacity_mw,
                availability_pct: 100.0 * m,
            }
        })
        .collect();
    write_availability_rows(path, &rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityRow {
    pub line: String,
    pub from: String,
    pub to: String,
    pub capacity_mw: f64,
    pub availability_pct: f64,
}

pub fn read_availability(path: &Path) -> Result<Vec<AvailabilityRow>, IoError> {
    read_rows(path, &AVAILABILITY_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(AvailabilityRow {
                line: r[0].clone(),
                from: r[1].clone(),
                to: r[2].clone(),
                capacity_mw: num(path, i, &r[3])?,
                availability_pct: num(path, i, &r[4])?,
            })
        })
        .collect()
}

pub fn write_availability_rows(path: &Path, rows: &[AvailabilityRow]) -> Result<(), IoError> {
    let rows = rows
        .iter()
        .map(|r| {
            [
                r.line.clone(),
                r.from.clone(),
                r.to.clone(),
                r.capacity_mw.to_string(),
                r.availability_pct.to_string(),
            ]
        })
        .collect();
    write_rows(path, AVAILABILITY_HEADER, rows)
}

/// Hours with `k` curtailed lines for `k = 0..=lines`.
pub fn write_histogram(path: &Path, counts: &[usize]) -> Result<(), IoError> {
    let total: usize = counts.iter().sum();
    let rows = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let share = if total == 0 {
                0.0
            } else {
                c as f64 / total as f64
            };
            [k.to_string(), c.to_string(), share.to_string()]
        })
        .collect();
    write_rows(path, HISTOGRAM_HEADER, rows)
}

pub fn read_histogram(path: &Path) -> Result<Vec<usize>, IoError> {
    read_rows(path, &HISTOGRAM_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| Ok(num(path, i, &r[1])? as usize))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourTag {
    pub hour: usize,
    pub delta: Delta,
    pub tag: MechanismTag,
}

pub fn write_mechanism_tags(path: &Path, tags: &[HourTag]) -> Result<(), IoError> {
    let rows = tags
        .iter()
        .map(|h| {
            [
                h.hour.to_string(),
                h.delta.tw.to_string(),
                h.delta.cs.to_string(),
                h.delta.ps.to_string(),
                h.delta.cr.to_string(),
                h.tag.tw.as_str().to_string(),
                h.tag.cs.as_str().to_string(),
                h.tag.ps.as_str().to_string(),
                h.tag.cr.as_str().to_string(),
                h.tag.label(),
                h.tag.mechanism().to_string(),
            ]
        })
        .collect();
    write_rows(path, MECHANISM_HEADER, rows)
}

/// `(hour, mechanism)` pairs.
pub fn read_mechanism_tags(path: &Path) -> Result<Vec<(usize, String)>, IoError> {
    read_rows(path, &MECHANISM_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| Ok((num(path, i, &r[0])? as usize, r[10].clone())))
        .collect()
}

/// Zonal prices sorted descending per zone; `hour_share` is `rank / hours`.
pub fn price_duration(network: &Network, prices: &[Vec<f64>]) -> Vec<(String, Vec<f64>)> {
    (0..network.n_zones())
        .map(|n| {
            let mut p: Vec<f64> = prices.iter().map(|row| row[n]).collect();
            p.sort_by(|a, b| b.total_cmp(a));
            (network.zones[n].id.clone(), p)
        })
        .collect()
}

pub fn write_price_duration(
    path: &Path,
    network: &Network,
    prices: &[Vec<f64>],
) -> Result<(), IoError> {
    let mut rows = Vec::new();
    for (zone, sorted) in price_duration(network, prices) {
        let n = sorted.len();
        for (i, p) in sorted.iter().enumerate() {
            let rank = i + 1;
            rows.push([
                zone.clone(),
                rank.to_string(),
                (rank as f64 / n as f64).to_string(),
                p.to_string(),
            ]);
        }
    }
    write_rows(path, PRICE_DURATION_HEADER, rows)
}

/// Sorted prices per zone, in file order.
pub fn read_price_duration(path: &Path) -> Result<Vec<(String, Vec<f64>)>, IoError> {
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, r) in read_rows(path, &PRICE_DURATION_HEADER)?.iter().enumerate() {
        let p = num(path, i, &r[3])?;
        match out.last_mut() {
            Some((z, v)) if *z == r[0] => v.push(p),
            _ => out.push((r[0].clone(), vec![p])),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePrice {
    pub zone: String,
    pub price_eur_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFlow {
    pub line: String,
    pub from: String,
    pub to: String,
    pub flow_mw: f64,
    pub capacity_mw: f64,
    pub level: f64,
}

/// Prices, flows and capacity levels of one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourSnapshot {
    pub week: String,
    pub hour: usize,
    pub zones: Vec<ZonePrice>,
    pub lines: Vec<LineFlow>,
}

/// Snapshot of local hour `t` of `solution`; `levels` maps line index to the
/// applied capacity level.
pub fn hour_snapshot(
    week: &str,
    network: &Network,
    solution: &MarketSolution,
    t: usize,
    levels: impl Fn(usize) -> f64,
) -> HourSnapshot {
    HourSnapshot {
        week: week.to_string(),
        hour: solution.hours.start + t,
        zones: network
            .zones
            .iter()
            .enumerate()
            .map(|(n, z)| ZonePrice {
                zone: z.id.clone(),
                price_eur_mwh: solution.prices[t][n],
            })
            .collect(),
        lines: network
            .lines
            .iter()
            .enumerate()
            .map(|(l, line)| LineFlow {
                line: line.id.clone(),
                from: line.from_zone.clone(),
                to: line.to_zone.clone(),
                flow_mw: solution.flows[t][l],
                capacity_mw: line.capacity_mw,
                level: levels(l),
            })
            .collect(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Schema {
        file: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Line, Zone};
    use crate::tso::HorizonMode;

    fn net() -> Network {
        Network::new(
            vec![
                Zone::new("A", "AA"),
                Zone::new("B", "BB"),
                Zone::new("C", "BB"),
            ],
            vec![
                Line::new("A-B", "A", "B", 100.0),
                Line::new("B-C", "B", "C", 50.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn welfare_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = WelfareDelta {
            countries: vec![
                (
                    "AA".into(),
                    Delta {
                        tw: 1.5,
                        cs: 2.0,
                        ps: -1.0,
                        cr: 0.5,
                    },
                ),
                (
                    "BB".into(),
                    Delta {
                        tw: -3.25,
                        cs: -1.0,
                        ps: -2.5,
                        cr: 0.25,
                    },
                ),
            ],
            system: Delta {
                tw: -1.75,
                cs: 1.0,
                ps: -3.5,
                cr: 0.75,
            },
            hours: 168,
        };
        let p = dir.path().join(WELFARE_FILE);
        write_welfare_deltas(&p, &d).unwrap();
        assert_eq!(read_welfare_deltas(&p).unwrap(), d);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(&WELFARE_HEADER.join(",")));
        assert!(text.lines().last().unwrap().starts_with("Total,168,-1.75,"));
    }

    #[test]
    fn availability_and_histogram_recompute() {
        let dir = tempfile::tempdir().unwrap();
        let plan = RestrictionPlan {
            lines: vec!["A-B".into(), "B-C".into()],
            mode: HorizonMode::Hourly,
            levels: vec![
                vec![1.0, 0.5],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
                vec![0.5, 0.5],
            ],
        };
        let p = dir.path().join(AVAILABILITY_FILE);
        write_availability(&p, &net(), &plan).unwrap();
        let back = read_availability(&p).unwrap();
        let pct: Vec<f64> = back.iter().map(|r| r.availability_pct).collect();
        assert_eq!(pct, [62.5, 75.0]);
        assert_eq!(
            (
                back[1].from.as_str(),
                back[1].to.as_str(),
                back[1].capacity_mw
            ),
            ("B", "C", 50.0)
        );
        let stats = availability_stats(&plan);
        let h = dir.path().join(HISTOGRAM_FILE);
        write_histogram(&h, &stats.histogram).unwrap();
        assert_eq!(read_histogram(&h).unwrap(), vec![1, 2, 1]);
    }

    #[test]
    fn price_duration_sorted_descending() {
        let dir = tempfile::tempdir().unwrap();
        let prices = vec![
            vec![10.0, 5.0, 1.0],
            vec![30.0, 5.0, 1.0],
            vec![20.0, 7.0, 1.0],
        ];
        let p = dir.path().join(PRICE_DURATION_FILE);
        write_price_duration(&p, &net(), &prices).unwrap();
        let back = read_price_duration(&p).unwrap();
        assert_eq!(
            back[..2],
            [
                ("A".into(), vec![30.0, 20.0, 10.0]),
                ("B".into(), vec![7.0, 5.0, 5.0])
            ]
        );
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("A,3,1,10"));
    }
}
