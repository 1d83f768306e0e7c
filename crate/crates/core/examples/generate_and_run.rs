//! Generate a scenario directory, reload it, run the base case with all
//! reports and replay the run from its manifest on a different number of
//! threads.

use std::fs;

use zonal_market::io::{load_scenario, save_scenario};
use zonal_market::run::{rerun, run_case, CaseKind, RunConfig, MANIFEST_FILE};
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("zonal-market-example");
    let _ = fs::remove_dir_all(&root);
    let scenario = root.join("scenario");
    let spec = SyntheticSpec {
        zones: 6,
        weeks: 2,
        hours_per_week: 24,
        ..SyntheticSpec::default()
    };
    let data = generate_synthetic(&spec);
    save_scenario(&scenario, &data)?;
    assert_eq!(load_scenario(&scenario)?, data);
    println!("scenario written to {}", scenario.display());

    let config = RunConfig {
        input_dir: Some(scenario),
        synthetic: None,
        case: CaseKind::Base,
        output_dir: root.join("run"),
        workers: 1,
        snapshot_hours: vec![12],
        ..RunConfig::default()
    };
    let outcome = run_case(&config)?;
    let total = outcome.total.annualized();
    println!(
        "DK {:+.1} M EUR/yr, system {:+.1} M EUR/yr",
        total.country("DK").unwrap_or_default().tw,
        total.system.tw
    );
    for w in &outcome.manifest.weeks {
        println!("{}: ok {} ({} h)", w.label, w.ok, w.hours);
    }

    let replay = rerun(
        &config.output_dir.join(MANIFEST_FILE),
        Some(4),
        Some(root.join("replay")),
    )?;
    let a = fs::read(root.join("run/welfare_deltas.csv"))?;
    let b = fs::read(root.join("replay/welfare_deltas.csv"))?;
    println!(
        "replay on 4 threads identical: {}",
        a == b && replay.total == outcome.total
    );
    Ok(())
}
