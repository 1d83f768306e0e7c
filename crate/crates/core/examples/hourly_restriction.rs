//! Hour-by-hour choice of capacity levels on the Danish interconnectors,
//! maximizing Danish welfare, with mechanism tags for each hour.

use zonal_market::calibration::{calibrate_week, CalibrationConfig};
use zonal_market::clearing::HydroMode;
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};
use zonal_market::tso::{
    availability_stats, mechanism_tag, optimize_hourly, OptimizerSettings, RestrictionCase,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic(&SyntheticSpec {
        zones: 6,
        weeks: 1,
        hours_per_week: 48,
        ..SyntheticSpec::default()
    });
    let net = &data.network;
    let week = calibrate_week(
        net,
        &data.generators,
        &data.weeks[0],
        &CalibrationConfig::default(),
    )?;

    for case in [RestrictionCase::base(), RestrictionCase::seventy()] {
        let out = optimize_hourly(
            net,
            &week,
            &case,
            HydroMode::DecoupledBaseline,
            &OptimizerSettings::default(),
        )?;
        println!("levels {:?}", case.levels);
        for h in out.hours.iter().take(6) {
            let d = h
                .delta
                .as_ref()
                .and_then(|d| d.country("DK"))
                .unwrap_or_default();
            let tag = mechanism_tag(&d, h.reference_tw);
            println!(
                "  hour {:3}  {:?}  dTW_DK {:9.1}  {}",
                h.t,
                h.levels,
                d.tw,
                tag.mechanism()
            );
        }
        let stats = availability_stats(&out.plan);
        for (line, m) in stats.lines.iter().zip(&stats.mean_level) {
            println!("  {line:<8} available {:5.1} %", 100.0 * m);
        }
        let total = out.total_delta().expect("some hours solved").annualized();
        println!(
            "  DK {:+.1} M EUR/yr, system {:+.1} M EUR/yr, {} failed hours\n",
            total.country("DK").unwrap_or_default().tw,
            total.system.tw,
            out.failures().len()
        );
    }
    Ok(())
}
