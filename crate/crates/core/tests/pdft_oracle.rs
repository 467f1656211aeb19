use ghostkitchen::model::{plan_delay, validate_decision};
use ghostkitchen::oracle::{oracle_atp, random_instance, random_partial_decision, InstanceShape, OracleAtp, OracleCaps};
use ghostkitchen::pdft::{run_pdft, solution_to_plan, PdftConfig, PdftStats, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn pdft_matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let caps = OracleCaps::default();
    let (mut feasible, mut infeasible) = (0, 0);
    for k in 0..3000 {
        let shape = if k % 3 == 0 { InstanceShape::tiny() } else { InstanceShape::atp() };
        let inst = random_instance(&shape, &mut rng);
        let pd = random_partial_decision(&inst, caps.max_trips, &mut rng);
        let ctx = inst.ctx();
        let r = run_pdft(&ctx, &inst.state, &pd, PdftConfig { max_iter: 5000, trace: false }).unwrap();
        let o = oracle_atp(&ctx, &inst.state, &pd, &caps).unwrap();
        match (&o, r.verdict) {
            (OracleAtp::Infeasible, Verdict::Infeasible) => infeasible += 1,
            (OracleAtp::Feasible(s), Verdict::Feasible) => {
                feasible += 1;
                let sol = r.solution.as_ref().unwrap();
                assert!((s.delay - sol.total_delay).abs() < 1e-6, "instance {k}: oracle {} pdft {}\n{inst:?}\n{pd:?}", s.delay, sol.total_delay);
                let plan = solution_to_plan(&inst.state, &pd, sol);
                validate_decision(&ctx, &inst.state, &plan).unwrap();
                assert!((plan_delay(&ctx, &plan).unwrap() - sol.total_delay).abs() < 1e-9);
            }
            _ => panic!("instance {k}: oracle {o:?} pdft {:?}\n{inst:?}\n{pd:?}", r.verdict),
        }
    }
    eprintln!("feasible {feasible} infeasible {infeasible}");
    assert!(feasible > 300 && infeasible > 300);
}

#[test]
fn default_cap_only_rejects_infeasible_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let caps = OracleCaps::default();
    let mut stats = PdftStats::default();
    for k in 0..10_000 {
        let inst = random_instance(&InstanceShape::atp(), &mut rng);
        let pd = random_partial_decision(&inst, caps.max_trips, &mut rng);
        let ctx = inst.ctx();
        let r = run_pdft(&ctx, &inst.state, &pd, PdftConfig::default()).unwrap();
        stats.record(&r);
        let o = oracle_atp(&ctx, &inst.state, &pd, &caps).unwrap();
        assert_eq!(r.is_feasible(), matches!(o, OracleAtp::Feasible(_)), "instance {k}: {:?}", r.verdict);
    }
    assert!(stats.cap_fraction() < 0.01, "cap hits {}", stats.cap_hits);
    assert!(stats.within(5) > 0.95);
}
