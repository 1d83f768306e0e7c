//! Two zones joined by one line: prices and welfare shares as the line is
//! restricted, for a symmetric pair and for an exporter with flat supply.

use zonal_market::oracle::{coupled_equilibrium, two_zone_welfare_delta, TwoZoneInstance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = TwoZoneInstance::reference();
    let free = coupled_equilibrium(&inst, f64::INFINITY)?;
    println!(
        "unrestricted: price {:.4}, flow {:.4}",
        free.importer_price, free.flow
    );

    println!("\n   K   p_importer  p_exporter   rent    dTW_1    dTW_2   dTW_sys");
    for k in [2.5, 2.0, 1.53, 1.0, 0.5, 0.0] {
        let d = two_zone_welfare_delta(&inst, k)?;
        println!(
            "{k:5.2}  {:10.4}  {:10.4}  {:6.3}  {:7.3}  {:7.3}  {:8.3}",
            d.restricted.importer_price,
            d.restricted.exporter_price,
            d.restricted.rent(),
            d.zones[0].tw,
            d.zones[1].tw,
            d.system.tw
        );
    }

    // With flat supply behind the exporter its price never moves, so its
    // only gain is its half of the congestion rent.
    let flat = TwoZoneInstance::flat_export();
    println!("\nflat exporter:   K   dTW_exporter  dTW_sys");
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=250 {
        let k = 2.5 - 0.01 * i as f64;
        let d = two_zone_welfare_delta(&flat, k)?;
        if d.zones[1].tw > best.1 {
            best = (k, d.zones[1].tw);
        }
        if i % 50 == 0 {
            println!(
                "              {k:5.2}  {:11.4}  {:7.4}",
                d.zones[1].tw, d.system.tw
            );
        }
    }
    println!(
        "exporter's best capacity on a 0.01 grid: K = {:.2} (gain {:.4})",
        best.0, best.1
    );
    Ok(())
}
