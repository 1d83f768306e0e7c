//! Clear one synthetic week over every zone with the weekly hydro budgets
//! coupled, then check the optimality conditions.

use std::time::Instant;

use zonal_market::calibration::{calibrate_week, CalibrationConfig};
use zonal_market::clearing::{self, ClearingProblem};
use zonal_market::qp::QpSettings;
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic(&SyntheticSpec {
        weeks: 4,
        ..SyntheticSpec::default()
    });
    let net = &data.network;
    let week = calibrate_week(
        net,
        &data.generators,
        &data.weeks[0],
        &CalibrationConfig::default(),
    )?;
    println!(
        "{}: {} zones, {} lines, {} hours, {} fleets",
        week.label,
        net.n_zones(),
        net.n_lines(),
        week.n_hours(),
        week.fleets.len()
    );

    let start = Instant::now();
    let problem = ClearingProblem::week(net, &week);
    let sol = clearing::solve(&problem, &QpSettings::default())?;
    println!(
        "solved in {:.2?}, {} iterations",
        start.elapsed(),
        sol.iterations
    );

    let kkt = clearing::verify_kkt(&problem, &sol);
    println!("kkt residuals: {kkt:?}");

    println!("\nzone   mean price  min     max");
    for (n, z) in net.zones.iter().enumerate() {
        let p: Vec<f64> = sol.prices.iter().map(|row| row[n]).collect();
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{:<5} {mean:10.2} {lo:7.2} {hi:7.2}", z.id);
    }
    for (k, f) in week.fleets.iter().enumerate() {
        if sol.water_values[k] > 0.0 {
            println!(
                "water value {} {}: {:.2} EUR/MWh",
                net.zones[f.zone].id,
                f.gen_type.as_str(),
                sol.water_values[k]
            );
        }
    }
    Ok(())
}
