use dmpc_core::exec::Sequential;
use dmpc_core::mpc::{Strategy, KW};
use dmpc_core::sim::{
    compare_strategies, energy_cost, run_closed_loop, zone_disturbance, MetricsReport, PlantMismatch, Scenario,
    WeatherSample, WeatherSource,
};
use dmpc_core::thermal::{step, ZoneState};

fn small(name: &str, duration: usize) -> Scenario {
    Scenario { duration, ..Scenario::building(name, 1, 2, 2) }
}

#[test]
fn no_forcing_and_no_comfort_weight_means_no_input() {
    let calm = WeatherSample { outdoor: 25.0, wall_solar: [0.0; 4], internal_gain: 0.0, zone_solar: 0.0 };
    let mut scenario = small("calm", 192);
    scenario.weather = WeatherSource::Table(vec![calm; 192]);
    scenario.mpc.alpha = 0.0;
    let pwa = scenario.pwa.fit(&scenario.comfort).unwrap();
    let (trace, _) = run_closed_loop(&scenario, &pwa, Strategy::DistributedPwa, &Sequential).unwrap();
    assert!(trace.zones.iter().all(|r| r.input == 0.0));
    let air: Vec<f64> = trace.zones.iter().filter(|r| r.zone == 0).map(|r| r.state.air()).collect();
    assert!(air.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let last = air.last().unwrap();
    assert!(*last < 25.5 && *last >= 25.0, "{last}");
}

#[test]
fn energy_cost_and_metrics_recompute_from_the_trace() {
    let scenario = small("four", 24);
    let pwa = scenario.pwa.fit(&scenario.comfort).unwrap();
    let (trace, metrics) = run_closed_loop(&scenario, &pwa, Strategy::DistributedPwa, &Sequential).unwrap();
    let mut total = 0.0;
    for s in &trace.steps {
        let sum: f64 = trace.zones.iter().filter(|r| r.step == s.step).map(|r| r.input).sum();
        assert_eq!(sum, s.total_input);
        let tariff = scenario.schedules.price_for_step(s.step, scenario.mpc.dt);
        assert_eq!(s.energy_cost, tariff * sum * scenario.mpc.dt / 3.6e6);
        assert_eq!(s.energy_cost, energy_cost(tariff, sum, scenario.mpc.dt));
        total += s.energy_cost;
    }
    assert_eq!(metrics.total_cost, total);
    assert_eq!(MetricsReport::from_trace(&trace), metrics);
    assert_eq!(metrics.zones, 4);
    assert_eq!(metrics.steps, 24);
}

#[test]
fn one_step_prediction_equals_the_plant() {
    let scenario = Scenario::building("single", 1, 1, 1);
    let topo = scenario.topology();
    let predictor = scenario.predictor().unwrap();
    let mut x = ZoneState::uniform(27.0);
    x.0[3] = 29.5;
    for k in [0, 30, 50, 70] {
        let horizons = scenario.zone_horizons(&topo, &predictor, &[x], k, &Sequential).unwrap();
        let u = 0.37 * KW;
        let mut seq = vec![0.0; scenario.mpc.horizon];
        seq[0] = u;
        let predicted = horizons[0].prediction.predict(&seq)[0];
        let w = scenario.weather_at(k);
        let actual = step(&predictor, &x, u, &zone_disturbance(&topo, 0, &w, &[x.air()]));
        for (a, b) in predicted.0.iter().zip(actual.0.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        x = actual;
    }
}

#[test]
fn inputs_vanish_when_no_occupied_step_is_in_view() {
    let scenario = small("day", 96);
    let pwa = scenario.pwa.fit(&scenario.comfort).unwrap();
    let (trace, _) = run_closed_loop(&scenario, &pwa, Strategy::DistributedPwa, &Sequential).unwrap();
    let n = scenario.mpc.horizon;
    let dt = scenario.mpc.dt;
    for s in &trace.steps {
        let in_view = (1..=n).any(|l| scenario.schedules.occupied_at_step(s.step + l, dt));
        if !in_view {
            assert!(s.total_input < 1e-9, "step {}", s.step);
        }
    }
    // After the occupants leave, cooling stops and PMV climbs.
    let mean_pmv = |k: usize| {
        let v: Vec<f64> = trace.zones.iter().filter(|r| r.step == k).map(|r| r.pmv_exact).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(trace.steps[80].total_input < 1e-9);
    assert!(mean_pmv(84) > mean_pmv(78) + 0.1);
    assert!(mean_pmv(88) > mean_pmv(82));
    assert!(trace.steps[60].total_input > 0.0);
}

#[test]
fn same_strategy_twice_gives_identical_rows() {
    let mut scenario = small("twice", 24);
    scenario.plant_mismatch = Some(PlantMismatch { magnitude: 0.1, seed: 7 });
    let pwa = scenario.pwa.fit(&scenario.comfort).unwrap();
    let mut rows = compare_strategies(
        &scenario,
        &pwa,
        &[Strategy::DistributedPwa, Strategy::DistributedPwa],
        &Sequential,
    )
    .unwrap();
    let b = rows.pop().unwrap();
    let a = rows.pop().unwrap();
    assert_eq!(a, b);
    assert!(compare_strategies(&scenario, &pwa, &[Strategy::CentralizedPwa], &Sequential).is_err());
}

#[test]
fn four_zone_distributed_power_is_close_to_centralized() {
    let scenario = small("four-day", 96);
    let pwa = scenario.pwa.fit(&scenario.comfort).unwrap();
    let rows = compare_strategies(
        &scenario,
        &pwa,
        &[Strategy::CentralizedPwa, Strategy::DistributedPwa],
        &Sequential,
    )
    .unwrap();
    let (c, d) = (rows[0].metrics.average_power, rows[1].metrics.average_power);
    assert!(c > 0.0);
    assert!((d - c).abs() / c <= 0.02, "{d} vs {c}");
}

#[test]
fn tight_budget_holds_at_every_applied_step() {
    let mut scenario = small("tight", 96);
    scenario.c_max = Some(600.0);
    scenario.admm.rho = 5.0;
    let pwa = scenario.pwa.fit(&scenario.comfort).unwrap();
    for strategy in [Strategy::CentralizedLinear, Strategy::CentralizedPwa, Strategy::DistributedPwa] {
        let (trace, metrics) = run_closed_loop(&scenario, &pwa, strategy, &Sequential).unwrap();
        assert!(trace.steps.iter().all(|s| s.total_input <= 600.0));
        assert!(metrics.max_budget_excess <= 0.0);
        assert!(trace.steps.iter().any(|s| s.total_input > 599.0), "{strategy}");
    }
}

#[test]
fn mismatch_is_seeded() {
    let mut scenario = small("mm", 24);
    scenario.plant_mismatch = Some(PlantMismatch { magnitude: 0.1, seed: 3 });
    let a = scenario.plant_params();
    assert_eq!(a, scenario.plant_params());
    assert!(a.iter().all(|p| *p != scenario.zone_params));
    scenario.plant_mismatch = Some(PlantMismatch { magnitude: 0.1, seed: 4 });
    assert_ne!(a, scenario.plant_params());
}

#[test]
fn short_weather_table_is_rejected_before_start() {
    let mut scenario = small("short", 24);
    let w = WeatherSample { outdoor: 25.0, wall_solar: [0.0; 4], internal_gain: 0.0, zone_solar: 0.0 };
    scenario.weather = WeatherSource::Table(vec![w; 10]);
    let pwa = scenario.pwa.fit(&scenario.comfort).unwrap();
    assert!(run_closed_loop(&scenario, &pwa, Strategy::CentralizedPwa, &Sequential).is_err());
}
