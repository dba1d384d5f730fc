mod oracles;

use proptest::prelude::*;
use pvbess_core::battery::{BatteryParams, BatteryState};
use pvbess_core::control::{
    build_scenarios, day_ahead_bid_imbalance, intraday_bid_revenue, plan_realtime_imbalance,
    plan_realtime_revenue, MpcConfig, Mode, Objective,
};
use pvbess_core::forecast::{CopulaSpec, ForecastDistribution, ScenarioSet};
use pvbess_core::market::{MarketPosition, PriceRecord};
use pvbess_core::Ptu;

fn dist_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=10.0, 1..30)
}

fn dist(values: &[f64]) -> ForecastDistribution {
    ForecastDistribution::new(Ptu(5), values.to_vec(), 100.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quantile_is_monotone_and_bracketed(values in dist_values(), a in 0.001f64..0.999, b in 0.001f64..0.999) {
        let d = dist(&values);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.quantile(lo).unwrap() <= d.quantile(hi).unwrap() + 1e-12);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(d.quantile(lo).unwrap() >= min && d.quantile(hi).unwrap() <= max);
        let oracle = oracles::interpolated_quantile(d.sorted_values(), lo);
        prop_assert!((d.quantile(lo).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn median_minimizes_empirical_absolute_error(values in dist_values()) {
        let bid = day_ahead_bid_imbalance(&[dist(&values)]).unwrap()[0];
        let loss = |x: f64| values.iter().map(|v| (v - x).abs()).sum::<f64>();
        let grid = oracles::grid(0.0, 10.0, 1001);
        let best = grid.iter().copied().fold(f64::INFINITY, |b, x| b.min(loss(x)));
        prop_assert!(loss(bid) <= best + 1e-9);
    }

    #[test]
    fn quantile_minimizes_pinball_loss_of_implied_distribution(values in dist_values(), tau in 0.05f64..0.95) {
        let d = dist(&values);
        let n = 2000;
        let draws: Vec<f64> = (0..n)
            .map(|i| oracles::interpolated_quantile(d.sorted_values(), (i as f64 + 0.5) / n as f64))
            .collect();
        let pinball = |q: f64| draws.iter().map(|y| if *y >= q { tau * (y - q) } else { (1.0 - tau) * (q - y) }).sum::<f64>() / n as f64;
        let q = d.quantile(tau).unwrap();
        let best = oracles::grid(0.0, 10.0, 501).into_iter().fold(f64::INFINITY, |b, x| b.min(pinball(x)));
        prop_assert!(pinball(q) <= best + 1e-3);
    }

    #[test]
    fn newsvendor_maximizes_expected_revenue(values in dist_values(), spot in 20.0f64..80.0, lo in 1.0f64..30.0, hi in 1.0f64..30.0, e_c in 0.0f64..10.0) {
        let prices = PriceRecord::new(spot, spot - lo, spot + hi).unwrap();
        let d = dist(&values);
        let pos = MarketPosition::day_ahead(Ptu(5), e_c, 0.0);
        let e_id = intraday_bid_revenue(&pos, &d, &prices, Ptu(4)).unwrap();
        // Expected cash revenue under the distribution implied by the quantile
        // function, by midpoint quadrature over quantile levels.
        let n = 4000;
        let pv: Vec<f64> = (0..n).map(|i| oracles::interpolated_quantile(d.sorted_values(), (i as f64 + 0.5) / n as f64)).collect();
        let expected = |x: f64| pv.iter().map(|&e| oracles::cash_revenue(e_c, x, e, spot, spot, prices.pos_imbalance_price, prices.neg_imbalance_price)).sum::<f64>() / n as f64;
        let grid = oracles::grid(e_c - 10.0, e_c, 1001);
        let step = grid[1] - grid[0];
        let (best_x, _) = grid.iter().fold((0.0, f64::NEG_INFINITY), |(bx, bv), &x| {
            let v = expected(x);
            if v > bv { (x, v) } else { (bx, bv) }
        });
        prop_assert!(expected(e_id) >= expected(best_x) - 1e-9 || (e_id - best_x).abs() <= step + 1e-9,
            "rule {} vs grid {}", e_id, best_x);
    }
}

fn lattice(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn positions(targets: &[f64]) -> Vec<MarketPosition> {
    targets
        .iter()
        .enumerate()
        .map(|(i, &t)| MarketPosition::day_ahead(Ptu(i as i64), t, 0.0))
        .collect()
}

fn mpc(h: usize, n: usize, objective: Objective) -> MpcConfig {
    MpcConfig {
        horizon_steps: h,
        n_scenarios: n,
        objective,
        mode: Mode::Stochastic,
        use_intraday: false,
    }
}

#[derive(Debug, Clone)]
struct Instance {
    soc: f64,
    scenarios: Vec<Vec<f64>>,
    targets: Vec<f64>,
    prices: Vec<(f64, f64, f64)>,
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(h, n)| {
        (
            0u32..=100,
            prop::collection::vec(prop::collection::vec(0u32..=150, h), n),
            prop::collection::vec(0u32..=150, h),
            prop::collection::vec((20u32..80, 0u32..30, 0u32..30), h),
        )
            .prop_map(|(soc, sc, tg, pr)| Instance {
                soc: soc as f64 / 100.0,
                scenarios: sc.into_iter().map(|r| r.into_iter().map(|v| v as f64 / 100.0).collect()).collect(),
                targets: tg.into_iter().map(|v| v as f64 / 100.0).collect(),
                prices: pr
                    .into_iter()
                    .map(|(s, a, b)| {
                        let s = s as f64;
                        (s, s - a as f64, s - a as f64 + b as f64 + 1.0)
                    })
                    .collect(),
            })
    })
}

fn lossless() -> BatteryParams {
    BatteryParams::new(1.0, 1.0, 1.0, 1.0, 2000.0).unwrap()
}

fn oracle_bess(p: &BatteryParams) -> oracles::Bess {
    oracles::Bess {
        cap: p.capacity,
        eta_ch: p.charge_efficiency,
        eta_dis: p.discharge_efficiency,
        k: p.power_limit,
        bounded: true,
    }
}

fn enumerate_imbalance(inst: &Instance, p: &BatteryParams) -> f64 {
    let set = ScenarioSet::uniform(inst.scenarios.clone()).unwrap();
    let h = inst.targets.len();
    let pv_min: Vec<f64> = (0..h).map(|i| set.step_minimum(i)).collect();
    let w = 1.0 / inst.scenarios.len() as f64;
    let (best, _) = oracles::enumerate_plans(&oracle_bess(p), inst.soc * p.capacity, &pv_min, &oracles::grid(-1.0, 1.0, 201), |i, b| {
        -inst.scenarios.iter().map(|s| w * (s[i] + b - inst.targets[i]).abs()).sum::<f64>()
    });
    -best
}

fn enumerate_revenue(inst: &Instance, p: &BatteryParams) -> f64 {
    let h = inst.targets.len();
    let set = ScenarioSet::uniform(inst.scenarios.clone()).unwrap();
    let pv_min: Vec<f64> = (0..h).map(|i| set.step_minimum(i)).collect();
    let w = 1.0 / inst.scenarios.len() as f64;
    let proxy = p.replacement_cost / (2.0 * p.cycles_at_full_depth * p.capacity);
    let mean_spot = inst.prices.iter().map(|x| x.0).sum::<f64>() / h as f64;
    let vt = p.discharge_efficiency * mean_spot;
    let (best, _) = oracles::enumerate_plans(&oracle_bess(p), inst.soc * p.capacity, &pv_min, &oracles::grid(-1.0, 1.0, 201), |i, b| {
        let (spot, pos, neg) = inst.prices[i];
        let settle: f64 = inst
            .scenarios
            .iter()
            .map(|s| {
                let delivered = s[i] + b;
                let imb = delivered - inst.targets[i];
                let pb = if imb >= 0.0 { pos } else { neg };
                w * (spot * delivered - imb * (spot - pb))
            })
            .sum();
        let content_change = if b >= 0.0 { -b / p.discharge_efficiency } else { -b * p.charge_efficiency };
        settle - proxy * b.abs() + vt * content_change
    });
    best
}

fn run_imbalance(inst: &Instance, p: &BatteryParams) -> pvbess_core::control::RealtimePlan {
    let h = inst.targets.len();
    plan_realtime_imbalance(
        &BatteryState::new(inst.soc).unwrap(),
        p,
        &ScenarioSet::uniform(inst.scenarios.clone()).unwrap(),
        &positions(&inst.targets),
        &mpc(h, inst.scenarios.len(), Objective::ImbalanceMin),
    )
    .unwrap()
}

fn price_records(inst: &Instance) -> Vec<PriceRecord> {
    inst.prices.iter().map(|&(s, a, b)| PriceRecord::new(s, a, b).unwrap()).collect()
}

fn run_revenue(inst: &Instance, p: &BatteryParams) -> pvbess_core::control::RealtimePlan {
    let h = inst.targets.len();
    plan_realtime_revenue(
        &BatteryState::new(inst.soc).unwrap(),
        p,
        &ScenarioSet::uniform(inst.scenarios.clone()).unwrap(),
        &positions(&inst.targets),
        &price_records(inst),
        &mpc(h, inst.scenarios.len(), Objective::RevenueMax),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn realtime_controllers_match_enumeration_on_lattice(inst in instance()) {
        let p = lossless();
        let lp = run_imbalance(&inst, &p).objective;
        let en = enumerate_imbalance(&inst, &p);
        prop_assert!((lp - en).abs() < 1e-4, "imbalance lp {} vs enumeration {}", lp, en);
        let lp = run_revenue(&inst, &p).objective;
        let en = enumerate_revenue(&inst, &p);
        prop_assert!((lp - en).abs() < 1e-4, "revenue lp {} vs enumeration {}", lp, en);
    }

    #[test]
    fn realtime_controllers_dominate_enumeration_with_losses(inst in instance()) {
        let p = BatteryParams::new(1.0, 0.93, 0.91, 1.0, 2000.0).unwrap();
        prop_assert!(run_imbalance(&inst, &p).objective <= enumerate_imbalance(&inst, &p) + 1e-4);
        prop_assert!(run_revenue(&inst, &p).objective >= enumerate_revenue(&inst, &p) - 1e-4);
    }

    #[test]
    fn scenario_order_does_not_change_the_command(inst in instance()) {
        let p = BatteryParams::new(1.0, 0.93, 0.91, 1.0, 2000.0).unwrap();
        let mut rev = inst.clone();
        rev.scenarios.reverse();
        prop_assert!((run_imbalance(&inst, &p).commands[0] - run_imbalance(&rev, &p).commands[0]).abs() < 1e-9);
        prop_assert!((run_revenue(&inst, &p).commands[0] - run_revenue(&rev, &p).commands[0]).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn larger_deficit_never_discharges_less(pv in 0.0f64..1.0, target in 0.0f64..1.5, extra in 0.0f64..1.0, soc in 0.0f64..=1.0, later in 0.0f64..1.0) {
        let p = BatteryParams::new(1.5, 0.92, 0.95, 0.8, 1000.0).unwrap();
        let state = BatteryState::new(soc).unwrap();
        let cfg = mpc(2, 1, Objective::ImbalanceMin);
        let s = ScenarioSet::deterministic(vec![lattice(pv), later]).unwrap();
        let a = plan_realtime_imbalance(&state, &p, &s, &positions(&[target, later]), &cfg).unwrap().commands[0];
        let b = plan_realtime_imbalance(&state, &p, &s, &positions(&[target + extra, later]), &cfg).unwrap().commands[0];
        prop_assert!(b >= a - 1e-9, "{} then {}", a, b);
    }

    #[test]
    fn single_stochastic_scenario_equals_deterministic(values in prop::collection::vec(dist_values(), 1..6), seed in any::<u64>()) {
        let marginals: Vec<_> = values.iter().enumerate()
            .map(|(i, v)| ForecastDistribution::new(Ptu(i as i64), v.clone(), 100.0).unwrap())
            .collect();
        let copula = CopulaSpec::exponential(marginals.len(), 4.0);
        let det = MpcConfig { mode: Mode::Deterministic, ..mpc(marginals.len(), 7, Objective::ImbalanceMin) };
        let sto = mpc(marginals.len(), 1, Objective::ImbalanceMin);
        let a = build_scenarios(&marginals, &copula, &det, seed).unwrap();
        let b = build_scenarios(&marginals, &copula, &sto, seed.wrapping_add(1)).unwrap();
        prop_assert_eq!(&a, &b);
        let p = lossless();
        let state = BatteryState::new(0.4).unwrap();
        let targets: Vec<f64> = a.scenario(0).iter().map(|v| v * 0.9).collect();
        let pa = plan_realtime_imbalance(&state, &p, &a, &positions(&targets), &det).unwrap();
        let pb = plan_realtime_imbalance(&state, &p, &b, &positions(&targets), &sto).unwrap();
        prop_assert_eq!(pa, pb);
    }
}
