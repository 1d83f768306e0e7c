//! One capacity vector for all hours of a set of equally likely weeks,
//! chosen by expected Danish welfare.

use zonal_market::calibration::{calibrate_week, CalibrationConfig};
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};
use zonal_market::tso::{optimize_long_term, OptimizerSettings, RestrictionCase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic(&SyntheticSpec {
        zones: 6,
        weeks: 4,
        hours_per_week: 48,
        ..SyntheticSpec::default()
    });
    let net = &data.network;
    let config = CalibrationConfig::default();
    let p = 1.0 / data.weeks.len() as f64;
    let weeks = data
        .weeks
        .iter()
        .map(|w| Ok((calibrate_week(net, &data.generators, w, &config)?, p)))
        .collect::<Result<Vec<_>, Box<dyn std::error::Error>>>()?;

    let case = RestrictionCase::long_term();
    let out = optimize_long_term(net, &weeks, &case, &OptimizerSettings::default())?;
    println!(
        "{} combinations evaluated, chose {:?}",
        out.combinations.len(),
        out.plan.levels[0]
    );
    let mut ranked = out.combinations.clone();
    ranked.sort_by(|a, b| b.objective_country_tw.total_cmp(&a.objective_country_tw));
    let reference = out.combinations[0].objective_country_tw;
    for c in ranked.iter().take(5) {
        println!(
            "  {:?}  expected DK gain {:10.0} EUR",
            c.combo,
            c.objective_country_tw - reference
        );
    }
    for w in &out.weeks {
        let dk = w.delta.country("DK").unwrap_or_default();
        println!(
            "{}: DK {:+10.0} EUR, system {:+10.0} EUR",
            w.label, dk.tw, w.delta.system.tw
        );
    }
    let e = out.expected.annualized();
    println!(
        "expected: DK {:+.1} M EUR/yr, system {:+.1} M EUR/yr",
        e.country("DK").unwrap_or_default().tw,
        e.system.tw
    );
    Ok(())
}
