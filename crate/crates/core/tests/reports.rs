use std::fs;

use zonal_market::report;
use zonal_market::run::{self, CaseKind, RunConfig, WEEKS_DIR};
use zonal_market::synthetic::SyntheticSpec;

fn run_small(dir: &std::path::Path, case: CaseKind) -> run::RunOutcome {
    let config = RunConfig {
        synthetic: Some(SyntheticSpec {
            zones: 6,
            weeks: 2,
            hours_per_week: 24,
            ..SyntheticSpec::default()
        }),
        case,
        workers: 1,
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    };
    run::run_case(&config).unwrap()
}

#[test]
fn summary_tables_are_a_fixpoint_of_the_week_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_small(tmp.path(), CaseKind::Base);
    let labels: Vec<String> = out.weeks.iter().map(|w| w.label.clone()).collect();
    let files = [
        report::WELFARE_FILE,
        report::AVAILABILITY_FILE,
        report::HISTOGRAM_FILE,
    ];
    let before: Vec<Vec<u8>> = files
        .iter()
        .map(|f| fs::read(tmp.path().join(f)).unwrap())
        .collect();

    let summary = run::write_summary(tmp.path(), &labels).unwrap();
    for (f, b) in files.iter().zip(&before) {
        assert_eq!(&fs::read(tmp.path().join(f)).unwrap(), b, "{f} changed");
    }
    assert_eq!(
        summary.delta,
        report::read_welfare_deltas(&tmp.path().join(report::WELFARE_FILE)).unwrap()
    );
    assert_eq!(summary.histogram.iter().sum::<usize>(), 48);
}

#[test]
fn week_tables_match_the_in_memory_outcome() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_small(tmp.path(), CaseKind::Base);
    for w in &out.weeks {
        let dir = tmp.path().join(WEEKS_DIR).join(&w.label);
        let delta = report::read_welfare_deltas(&dir.join(report::WELFARE_FILE)).unwrap();
        assert_eq!(delta, w.delta);

        // Price-duration curves are the week's prices sorted per zone.
        let curves = report::read_price_duration(&dir.join(report::PRICE_DURATION_FILE)).unwrap();
        for (n, (_, sorted)) in curves.iter().enumerate() {
            let mut p: Vec<f64> = w.prices.iter().map(|row| row[n]).collect();
            p.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert_eq!(&p, sorted);
        }

        // One curtailment count per hour, and the histogram agrees with it.
        let counts: Vec<usize> = w
            .hours
            .iter()
            .map(|h| h.levels.iter().filter(|&&l| l < 1.0).count())
            .collect();
        let hist = report::read_histogram(&dir.join(report::HISTOGRAM_FILE)).unwrap();
        for (k, &c) in hist.iter().enumerate() {
            assert_eq!(c, counts.iter().filter(|&&x| x == k).count());
        }

        // Mean availability per line from the hourly levels.
        let avail = report::read_availability(&dir.join(report::AVAILABILITY_FILE)).unwrap();
        for (i, row) in avail.iter().enumerate() {
            let mean =
                100.0 * w.hours.iter().map(|h| h.levels[i]).sum::<f64>() / w.hours.len() as f64;
            assert!(
                (row.availability_pct - mean).abs() < 1e-9,
                "{}: {} vs {mean}",
                row.line,
                row.availability_pct
            );
        }

        let tags = report::read_mechanism_tags(&dir.join(report::MECHANISM_FILE)).unwrap();
        assert_eq!(tags.len(), w.hours.len());
    }
}

#[test]
fn long_term_weeks_hold_one_plan_for_all_hours() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_small(tmp.path(), CaseKind::LongTerm);
    assert!(out.expected.is_some());
    for w in &out.weeks {
        assert!(w.hours.windows(2).all(|p| p[0].levels == p[1].levels));
        let hist = report::read_histogram(
            &tmp.path()
                .join(WEEKS_DIR)
                .join(&w.label)
                .join(report::HISTOGRAM_FILE),
        )
        .unwrap();
        assert_eq!(hist.iter().filter(|&&c| c > 0).count(), 1);
    }
}
