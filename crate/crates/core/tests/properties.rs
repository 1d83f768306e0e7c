use proptest::prelude::*;
use zonal_market::calibration::{calibrate_week, CalibrationConfig};
use zonal_market::clearing::{solve, CapacityOverrides, ClearingProblem, MarketSolution};
use zonal_market::network::{Line, Network, ScenarioWeek};
use zonal_market::qp::QpSettings;
use zonal_market::synthetic::{generate_synthetic, SyntheticSpec};

fn instance(seed: u64, zones: usize, week: usize) -> (Network, ScenarioWeek) {
    let spec = SyntheticSpec {
        seed,
        zones,
        weeks: 4,
        hours_per_week: 6,
        ..SyntheticSpec::default()
    };
    let data = generate_synthetic(&spec);
    let w = calibrate_week(
        &data.network,
        &data.generators,
        &data.weeks[week],
        &CalibrationConfig::default(),
    )
    .unwrap();
    (data.network, w)
}

fn clear(net: &Network, week: &ScenarioWeek, o: CapacityOverrides) -> MarketSolution {
    solve(
        &ClearingProblem::week(net, week).with_overrides(o),
        &QpSettings::default(),
    )
    .unwrap()
}

fn price_scale(sol: &MarketSolution) -> f64 {
    sol.prices
        .iter()
        .flatten()
        .fold(1.0f64, |m, p| m.max(p.abs()))
}

fn max_gap(a: &[Vec<f64>], b: &[Vec<f64>], k: f64) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (k * x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tighter_lines_never_raise_welfare(
        seed in 0u64..1000,
        zones in 3usize..=8,
        week in 0usize..4,
        factors in prop::collection::vec(0.0f64..=1.0, 16),
    ) {
        let (net, w) = instance(seed, zones, week);
        let free = clear(&net, &w, CapacityOverrides::none());
        let mut loose = CapacityOverrides::none();
        let mut tight = CapacityOverrides::none();
        for l in 0..net.n_lines() {
            let f = factors[l % factors.len()];
            loose.set_uniform(l, f.sqrt());
            tight.set_uniform(l, f);
        }
        let loose = clear(&net, &w, loose);
        let tight = clear(&net, &w, tight);
        let tol = 1e-7 * free.objective.abs().max(1.0);
        prop_assert!(loose.objective <= free.objective + tol);
        prop_assert!(tight.objective <= loose.objective + tol);
    }

    #[test]
    fn prices_scale_with_values_and_costs(seed in 0u64..1000, zones in 2usize..=8, k in 0.25f64..4.0) {
        let (net, w) = instance(seed, zones, 0);
        let mut scaled = w.clone();
        for h in &mut scaled.hours {
            h.demand_slope.iter_mut().for_each(|a| *a *= k);
            h.demand_intercept.iter_mut().for_each(|b| *b *= k);
            h.marginal_cost.iter_mut().for_each(|c| *c *= k);
        }
        for f in &mut scaled.fleets {
            if let Some(c) = &mut f.marginal_cost_override {
                *c *= k;
            }
        }
        let a = clear(&net, &w, CapacityOverrides::none());
        let b = clear(&net, &scaled, CapacityOverrides::none());
        let qscale = a.demand.iter().flatten().fold(1.0f64, |m, d| m.max(d.abs()));
        prop_assert!(max_gap(&a.prices, &b.prices, k) <= 1e-5 * k * price_scale(&a));
        prop_assert!(max_gap(&a.demand, &b.demand, 1.0) <= 1e-5 * qscale);
        prop_assert!((k * a.objective - b.objective).abs() <= 1e-7 * (k * a.objective).abs().max(1.0));
    }

    #[test]
    fn reversing_a_line_keeps_prices_and_rents(seed in 0u64..1000, zones in 2usize..=8, pick in any::<prop::sample::Index>()) {
        let (net, w) = instance(seed, zones, 1);
        let l = pick.index(net.n_lines());
        let mut lines = net.lines.clone();
        let old = &lines[l];
        lines[l] = Line::new(old.id.clone(), old.to_zone.clone(), old.from_zone.clone(), old.capacity_mw);
        let flipped = Network::new(net.zones.clone(), lines).unwrap();

        let a = clear(&net, &w, CapacityOverrides::none());
        let b = clear(&flipped, &w, CapacityOverrides::none());
        prop_assert!(max_gap(&a.prices, &b.prices, 1.0) <= 1e-5 * price_scale(&a));
        prop_assert!((a.objective - b.objective).abs() <= 1e-7 * a.objective.abs().max(1.0));
        for t in 0..a.n_hours() {
            // Rent does not depend on orientation.
            let rent = |s: &MarketSolution, n: &Network| {
                let (from, to) = n.incidence.endpoints(l);
                s.flows[t][l] * (s.prices[t][to] - s.prices[t][from])
            };
            let (ra, rb) = (rent(&a, &net), rent(&b, &flipped));
            prop_assert!((ra - rb).abs() <= 1e-4 * price_scale(&a) * net.lines[l].capacity_mw.max(1.0));
        }
    }
}

/// A line that is not at its limit carries no price difference.
#[test]
fn uncongested_lines_equalize_prices() {
    for seed in [1, 2, 3] {
        let (net, w) = instance(seed, 10, 2);
        let sol = clear(&net, &w, CapacityOverrides::none());
        let scale = price_scale(&sol);
        for t in 0..sol.n_hours() {
            for (l, line) in net.lines.iter().enumerate() {
                if sol.flows[t][l].abs() < line.capacity_mw * (1.0 - 1e-4) {
                    let (from, to) = net.incidence.endpoints(l);
                    let gap = sol.prices[t][to] - sol.prices[t][from];
                    assert!(
                        gap.abs() <= 1e-5 * scale,
                        "seed {seed} hour {t} line {}: gap {gap}",
                        line.id
                    );
                }
            }
        }
    }
}
