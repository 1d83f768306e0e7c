//! A supplier feeding two demand zones in series. Cutting the far line
//! lowers the price for the middle zone and strands the far one; the same
//! instance is then cleared as a market problem with stepped supply.

use zonal_market::clearing::{self, CapacityOverrides, ClearingProblem};
use zonal_market::oracle::{encode_three_zone, three_zone_blockade, ThreeZoneInstance};
use zonal_market::qp::QpSettings;
use zonal_market::welfare;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = ThreeZoneInstance::reference();
    let b = three_zone_blockade(&inst)?;
    println!(
        "integrated: p = {:.4}, q = {:.4}",
        b.integrated.0, b.integrated.1
    );
    println!(
        "blocked:    p = {:.4}, q = {:.4}, isolated zone at {:.1}",
        b.blocked.0, b.blocked.1, b.isolated_price
    );
    for (z, d) in b.zones.iter().enumerate() {
        println!(
            "zone {}: dCS {:+.4} dPS {:+.4} dTW {:+.4}",
            z + 1,
            d.cs,
            d.ps,
            d.tw
        );
    }
    println!("system dTW {:+.4}", b.system.tw);

    let (net, week) = encode_three_zone(&inst, 1000);
    let l23 = net.line_index("L23").expect("encoded line");
    let settings = QpSettings::default();
    let free = clearing::solve(&ClearingProblem::week(&net, &week), &settings)?;
    let cut_problem = ClearingProblem::week(&net, &week)
        .with_overrides(CapacityOverrides::none().uniform(l23, 0.0));
    let cut = clearing::solve(&cut_problem, &settings)?;
    println!("\nmarket problem, 1000 supply steps");
    println!("prices integrated {:?}", free.prices[0]);
    println!("prices blocked    {:?}", cut.prices[0]);
    let d = welfare::delta(
        &welfare::aggregate(&cut, &net),
        &welfare::aggregate(&free, &net),
    )?;
    for (c, v) in &d.countries {
        println!("{c}: dCS {:+.4} dPS {:+.4} dTW {:+.4}", v.cs, v.ps, v.tw);
    }
    println!(
        "system dTW {:+.4}  (kkt {:.1e})",
        d.system.tw,
        clearing::verify_kkt(&cut_problem, &cut).max()
    );
    Ok(())
}
