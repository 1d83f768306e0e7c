use std::fs;

use proptest::prelude::*;
use zonal_market::io::{self, load_scenario, save_scenario, IoError};
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};

fn small(seed: u64, zones: usize, weeks: usize) -> SyntheticSpec {
    SyntheticSpec {
        seed,
        zones,
        weeks,
        hours_per_week: 24,
        ..SyntheticSpec::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn save_then_load_is_identity(seed in any::<u64>(), zones in 1usize..=18, weeks in 1usize..4) {
        let data = generate_synthetic(&small(seed, zones, weeks));
        let dir = tempfile::tempdir().unwrap();
        save_scenario(dir.path(), &data).unwrap();
        let back = load_scenario(dir.path()).unwrap();
        prop_assert_eq!(&back, &data);

        // A second pass writes the same bytes.
        let again = tempfile::tempdir().unwrap();
        save_scenario(again.path(), &back).unwrap();
        for f in [io::ZONES_FILE, io::LINES_FILE, io::GENERATORS_FILE, io::TIMESERIES_FILE, io::FUEL_FILE, io::WEEKS_FILE] {
            prop_assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(again.path().join(f)).unwrap());
        }
    }
}

fn saved() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    save_scenario(dir.path(), &generate_synthetic(&small(7, 4, 1))).unwrap();
    dir
}

fn rewrite(dir: &std::path::Path, file: &str, f: impl FnOnce(String) -> String) {
    let p = dir.join(file);
    let text = fs::read_to_string(&p).unwrap();
    fs::write(&p, f(text)).unwrap();
}

#[test]
fn wrong_header_names_the_file_and_line() {
    let dir = saved();
    rewrite(dir.path(), io::LINES_FILE, |t| {
        t.replacen("capacity_mw", "cap", 1)
    });
    match load_scenario(dir.path()) {
        Err(IoError::Schema { file, line, .. }) => {
            assert_eq!((file.as_str(), line), (io::LINES_FILE, 1))
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_finite_value_is_rejected() {
    let dir = saved();
    rewrite(dir.path(), io::TIMESERIES_FILE, |t| {
        let mut lines: Vec<String> = t.lines().map(String::from).collect();
        let mut f: Vec<String> = lines[3].split(',').map(String::from).collect();
        f[4] = "NaN".into();
        lines[3] = f.join(",");
        lines.join("\n") + "\n"
    });
    match load_scenario(dir.path()) {
        Err(IoError::Schema { file, line, .. }) => {
            assert_eq!((file.as_str(), line), (io::TIMESERIES_FILE, 4))
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_zone_and_missing_hour_are_reported() {
    let dir = saved();
    rewrite(dir.path(), io::GENERATORS_FILE, |t| t + "XX,gas,100\n");
    assert!(matches!(
        load_scenario(dir.path()),
        Err(IoError::UnknownZone { .. })
    ));

    let dir = saved();
    rewrite(dir.path(), io::TIMESERIES_FILE, |t| {
        let mut lines: Vec<&str> = t.lines().collect();
        lines.remove(5);
        lines.join("\n") + "\n"
    });
    assert!(load_scenario(dir.path()).is_err());
}

#[test]
fn missing_file_is_an_error() {
    let dir = saved();
    fs::remove_file(dir.path().join(io::FUEL_FILE)).unwrap();
    assert!(matches!(
        load_scenario(dir.path()),
        Err(IoError::File { .. })
    ));
}
