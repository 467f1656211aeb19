use ghostkitchen::geo::{ServiceTimeModel, TravelTimes};
use ghostkitchen::instance::{preset, sample_days, Preset};
use ghostkitchen::lns::{fifo_insert, search, ImmediateCost, LnsConfig};
use ghostkitchen::model::{transition, validate_decision, Ctx, FoodType, Order, ProblemConfig, State};
use ghostkitchen::sim::{
    compare, improvement, run_days, run_episode, utilization_series, KpiReport, KpiSummary, Policy,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(tau: f64) -> ProblemConfig {
    ProblemConfig {
        food_types: vec![FoodType {
            name: "a".into(),
            freshness: 20.0,
            cooks: 2,
        }],
        fleet_size: 1,
        capacity: 3,
        tau,
        capture_horizon: 1440.0,
        horizon: 1560.0,
        count_service_time: true,
    }
}

/// Kitchen and customers at 8 and 14 minutes, 6 minutes apart.
fn travel() -> TravelTimes {
    TravelTimes::from_matrix(
        &[0, 1, 2],
        vec![vec![0.0, 8.0, 14.0], vec![8.0, 0.0, 6.0], vec![14.0, 6.0, 0.0]],
        ServiceTimeModel::default(),
    )
    .unwrap()
}

fn order(id: usize, t_order: f64, t_prep: f64, location: usize, service_time: f64) -> Order {
    Order {
        id,
        food_type: 0,
        t_order,
        t_prep,
        location,
        service_time,
    }
}

#[test]
fn single_order_on_an_idle_system() {
    let tt = travel();
    let orders = vec![order(0, 100.0, 10.0, 1, 2.0)];
    for (tau, delay) in [(30.0, 0.0), (15.0, 5.0)] {
        let c = cfg(tau);
        let ep = run_episode(&c, &tt, &orders, &Policy::Fifo, 0).unwrap();
        let o = &ep.outcomes[0];
        // Prepared 100..110, leaves at once, arrives at 118, hands over at 120.
        assert_eq!((o.start, o.ready, o.departure), (100.0, 110.0, 110.0));
        assert_eq!((o.arrival, o.handover), (118.0, 120.0));
        assert_eq!(o.click_to_door, 10.0 + 8.0 + 2.0);
        assert_eq!(o.ready_to_door, 8.0);
        assert_eq!(o.delay, delay);
        let k = KpiReport::new(&c, &ep);
        assert_eq!(k.trips, 1);
        assert_eq!(k.total_travel_time, 8.0 + 2.0 + 8.0);
        assert_eq!(k.last_return, 128.0);
        assert_eq!(k.close_orders, 1);
        assert_eq!(k.pct_late, if delay > 0.0 { 100.0 } else { 0.0 });
    }
}

#[test]
fn two_order_kpis_by_hand() {
    let c = cfg(20.0);
    let tt = travel();
    // Order 0 is prepared 100..108 and leaves at 108. Order 1 is prepared
    // 101..107 by the other cook and joins that trip.
    let orders = vec![order(0, 100.0, 8.0, 1, 1.0), order(1, 101.0, 6.0, 2, 1.0)];
    let ep = run_episode(&c, &tt, &orders, &Policy::Fifo, 0).unwrap();
    assert_eq!(ep.trips.len(), 1);
    // Serving 0 first delays only order 1 (3 against 2 + 10 the other way).
    assert_eq!(ep.trips[0].orders, vec![0, 1]);
    let (o0, o1) = (&ep.outcomes[0], &ep.outcomes[1]);
    assert_eq!((o0.departure, o0.arrival, o0.handover), (108.0, 116.0, 117.0));
    assert_eq!((o1.arrival, o1.handover), (123.0, 124.0));
    // Deadlines 120 and 121.
    assert_eq!((o0.delay, o1.delay), (0.0, 3.0));
    assert_eq!((o0.ready_to_door, o1.ready_to_door), (8.0, 16.0));
    let k = KpiReport::new(&c, &ep);
    assert_eq!(k.avg_delay, 1.5);
    assert_eq!(k.pct_late, 50.0);
    assert_eq!(k.max_delay, 3.0);
    assert_eq!(k.avg_late_delay, 3.0);
    assert_eq!(k.avg_click_to_door, (17.0 + 23.0) / 2.0);
    assert_eq!(k.avg_orders_per_trip, 2.0);
    assert_eq!(k.total_travel_time, 8.0 + 1.0 + 6.0 + 1.0 + 14.0);
    assert_eq!((k.close_orders, k.far_orders), (1, 1));
    assert_eq!((k.close_delay, k.far_delay), (0.0, 3.0));
    assert_eq!(k.food_type_delay, vec![1.5]);
    assert_eq!(k.freshness_violations, 0);
}

#[test]
fn utilization_of_one_order() {
    let c = cfg(30.0);
    let tt = travel();
    let orders = vec![order(0, 100.0, 10.0, 1, 2.0)];
    let ep = run_episode(&c, &tt, &orders, &Policy::Fifo, 0).unwrap();
    let u = utilization_series(&c, &ep, 60.0);
    assert_eq!(u.cooks.len(), 26);
    assert_eq!(u.cooks[1], 10.0 / 120.0);
    assert_eq!(u.vehicles[1], 10.0 / 60.0);
    assert_eq!(u.vehicles[2], 8.0 / 60.0);
    assert_eq!(u.cooks.iter().sum::<f64>(), 10.0 / 120.0);
}

#[test]
fn utilization_conserves_busy_time() {
    let inst = preset(Preset::Desk);
    let tt = inst.geography.build().unwrap();
    let c = &inst.problem;
    for day in sample_days(&inst, &tt, 8, 3).unwrap() {
        let ep = run_episode(c, &tt, &day.orders, &Policy::Fifo, 1).unwrap();
        let u = utilization_series(c, &ep, 15.0);
        let prep: f64 = day.orders.iter().map(|o| o.t_prep).sum();
        let away: f64 = ep.trips.iter().map(|t| t.duration).sum();
        let cook_total = u.cooks.iter().sum::<f64>() * 15.0 * c.num_cooks() as f64;
        let vehicle_total = u.vehicles.iter().sum::<f64>() * 15.0 * c.fleet_size as f64;
        assert!((cook_total - prep).abs() < 1e-6);
        assert!((vehicle_total - away).abs() < 1e-6);
        assert!(u.cooks.iter().chain(&u.vehicles).all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
    }
}

#[test]
fn runs_are_reproducible_and_independent_of_jobs() {
    let inst = preset(Preset::Desk);
    let tt = inst.geography.build().unwrap();
    let days = sample_days(&inst, &tt, 3, 4).unwrap();
    let policy = Policy::Integrated(LnsConfig::default());
    let a = run_days(&inst.problem, &tt, &days, &policy, 11, 1).unwrap();
    let b = run_days(&inst.problem, &tt, &days, &policy, 11, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a[0].episode).unwrap(),
        serde_json::to_string(&run_episode(&inst.problem, &tt, &days[0].orders, &policy, a[0].episode.seed).unwrap()).unwrap()
    );
}

#[test]
fn comparison_of_a_policy_with_itself_shows_no_improvement() {
    let inst = preset(Preset::Desk);
    let tt = inst.geography.build().unwrap();
    let days = sample_days(&inst, &tt, 5, 2).unwrap();
    let r = run_days(&inst.problem, &tt, &days, &Policy::Fifo, 2, 1).unwrap();
    let s = KpiSummary::new(&r.iter().map(|d| d.kpis.clone()).collect::<Vec<_>>());
    let table = compare(&[("FIFO".into(), s.clone()), ("FIFO again".into(), s)]);
    assert_eq!(table.candidate, "FIFO again");
    assert!(table.rows.iter().all(|row| row.improvements == vec![0.0]));
    let csv = table.to_csv();
    assert!(csv.starts_with("kpi,FIFO,FIFO again,imp_over_FIFO\n"));
    assert_eq!(csv.lines().count(), 1 + table.rows.len());
}

#[test]
fn improvement_is_relative_to_the_candidate() {
    assert_eq!(improvement(10.0, 8.0), 25.0);
    assert_eq!(improvement(6.0, 8.0), -25.0);
    assert_eq!(improvement(0.0, 0.0), 0.0);
}

#[test]
fn search_never_loses_to_fifo_on_realistic_states() {
    let inst = preset(Preset::Desk);
    let tt = inst.geography.build().unwrap();
    let day = &sample_days(&inst, &tt, 21, 1).unwrap()[0];
    let ctx = Ctx::new(&inst.problem, &tt, &day.orders).unwrap();
    let mut state = State::new(&inst.problem, day.orders[0].t_order, Some(0));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for k in 0..day.orders.len() {
        let r = search(&ctx, &state, &LnsConfig::default(), &ImmediateCost, &mut rng);
        assert!(r.cost <= r.fifo_cost + 1e-9);
        validate_decision(&ctx, &state, &r.decision).unwrap();
        // Follow the FIFO trajectory so states stay realistic.
        let next = day.orders.get(k + 1).map_or((1440.0, None), |o| (o.t_order, Some(k + 1)));
        state = transition(&ctx, &state, &fifo_insert(&ctx, &state), next.0, next.1).0;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn episodes_telescope_and_stay_fresh(seed in any::<u64>(), integrated in any::<bool>()) {
        let inst = preset(Preset::Desk);
        let tt = inst.geography.build().unwrap();
        let day = &sample_days(&inst, &tt, seed, 1).unwrap()[0];
        let policy = if integrated { Policy::Integrated(LnsConfig { iterations: 20, ..LnsConfig::default() }) } else { Policy::Fifo };
        let ep = run_episode(&inst.problem, &tt, &day.orders, &policy, seed).unwrap();
        prop_assert!((ep.total_marginal_cost() - ep.total_delay()).abs() < 1e-6);
        let k = KpiReport::new(&inst.problem, &ep);
        prop_assert_eq!(k.freshness_violations, 0);
        prop_assert_eq!(ep.outcomes.len(), day.orders.len());
        for o in &ep.outcomes {
            prop_assert!(o.start >= o.t_order - 1e-9);
            prop_assert!(o.departure >= o.ready - 1e-9);
            prop_assert!(o.ready_to_door <= inst.problem.freshness(o.food_type) + 1e-9);
        }
    }
}
