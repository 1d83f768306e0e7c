//! Split welfare into consumer surplus, producer surplus and congestion
//! rent per country, and compare an unrestricted week with one where a
//! single interconnector is halved.

use zonal_market::calibration::{calibrate_week, CalibrationConfig};
use zonal_market::clearing::{self, CapacityOverrides, ClearingProblem};
use zonal_market::qp::QpSettings;
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};
use zonal_market::welfare;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic(&SyntheticSpec {
        zones: 6,
        weeks: 1,
        ..SyntheticSpec::default()
    });
    let net = &data.network;
    let week = calibrate_week(
        net,
        &data.generators,
        &data.weeks[0],
        &CalibrationConfig::default(),
    )?;
    let settings = QpSettings::default();

    let reference = clearing::solve(&ClearingProblem::week(net, &week), &settings)?;
    let account = welfare::aggregate(&reference, net);
    println!(
        "country          CS            PS            CR            TW   (EUR over {} h)",
        account.hours
    );
    for c in account.countries.iter().chain([&account.system()]) {
        println!(
            "{:<8} {:13.0} {:13.0} {:13.0} {:13.0}",
            c.country, c.cs, c.ps, c.cr, c.tw
        );
    }
    let rents: f64 = account.line_rents.iter().sum();
    println!(
        "sum of line rents {rents:.0}, sum of country rents {:.0}",
        account.system().cr
    );
    let worst = (0..reference.n_hours())
        .map(|t| {
            net.countries()
                .iter()
                .map(|c| welfare::net_position(&reference, net, c, t))
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    println!("largest hourly sum of net positions {worst:.2e} MWh");

    let line = net.line_index("DK1-DE").expect("line exists");
    let halved = ClearingProblem::week(net, &week)
        .with_overrides(CapacityOverrides::none().uniform(line, 0.5));
    let restricted = clearing::solve(&halved, &settings)?;
    let d = welfare::delta(&welfare::aggregate(&restricted, net), &account)?.annualized();
    println!("\nDK1-DE at 50%, change in M EUR/yr");
    for (c, v) in d
        .countries
        .iter()
        .map(|(c, v)| (c.as_str(), v))
        .chain([("Total", &d.system)])
    {
        println!(
            "{c:<8} dTW {:+9.2}  dCS {:+9.2}  dPS {:+9.2}  dCR {:+9.2}",
            v.tw, v.cs, v.ps, v.cr
        );
    }
    Ok(())
}
