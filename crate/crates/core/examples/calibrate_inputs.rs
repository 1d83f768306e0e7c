//! From historical observations to model inputs: linear demand through the
//! observed price and consumption, fuel-based marginal costs and derated
//! capacities.

use zonal_market::calibration::{
    calibrate_week, demand_curve, derate_capacity, marginal_costs, CalibrationConfig, FuelDay,
    RawGenType,
};
use zonal_market::network::GenType;
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = CalibrationConfig::default();
    let (slope, intercept) = demand_curve(45.0, 3000.0, config.elasticity)?;
    println!(
        "45 EUR/MWh at 3000 MWh, elasticity {}: price = {slope:.4} d + {intercept:.1}",
        config.elasticity
    );
    println!(
        "demand at 90 EUR/MWh: {:.1} MWh",
        (90.0 - intercept) / slope
    );

    let fuel = FuelDay {
        date: "example".into(),
        gas_price: 25.0,
        coal_price: 12.0,
        eua_price: 30.0,
    };
    let costs = marginal_costs(&fuel, &config);
    for g in GenType::ALL {
        println!("{:<10} {:7.2} EUR/MWh", g.as_str(), costs[g.index()]);
    }
    for raw in [
        RawGenType::parse("gas").expect("known type"),
        RawGenType::parse("coal").expect("known type"),
    ] {
        println!(
            "1000 MW {} -> {:?}",
            raw.as_str(),
            derate_capacity(1000.0, raw, &config)
        );
    }

    let data = generate_synthetic(&SyntheticSpec {
        zones: 4,
        weeks: 1,
        ..SyntheticSpec::default()
    });
    let week = calibrate_week(&data.network, &data.generators, &data.weeks[0], &config)?;
    println!(
        "\n{} ({}): {} fleets",
        week.label,
        week.season.as_str(),
        week.fleets.len()
    );
    for f in &week.fleets {
        let budget = f
            .energy_budget_mwh
            .map_or(String::new(), |b| format!(", weekly budget {b:.0} MWh"));
        println!(
            "  {} {:<9} {:7.0} MW{budget}",
            data.network.zones[f.zone].id,
            f.gen_type.as_str(),
            f.capacity_mw
        );
    }
    Ok(())
}
