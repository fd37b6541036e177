use crn_access::model::{self, link_rates};
use crn_access::optimizer::{
    conventional_baseline, optimize, optimize_fixed_power, solve, ModeKind, SolveMode,
    SolverOptions, DEFAULT_STARTS,
};
use crn_access::parallel::Execution;
use crn_access::params::{REFERENCE_GAMMA1, REFERENCE_GAMMA2};
use crn_access::sweep::{run_sweep, SweepSpec};
use crn_access::{evaluate, AccessPolicy, Constraints, SystemParams};

const TOL: f64 = 1e-5;

#[test]
fn restart_robustness_on_default_instance() {
    let p = SystemParams::reference();
    let rep = optimize(&p, &Constraints::reference(0.3), DEFAULT_STARTS, 0).unwrap();
    let frac = rep.starts_within_tolerance_of_best as f64 / rep.n_starts as f64;
    assert!(frac >= 0.10, "only {frac} of starts reach the best value");
    let check = evaluate(&rep.best_policy, &p, &Constraints::reference(0.3));
    assert!(check.feasible());
    assert!(check.slacks.iter().all(|(_, s)| *s >= -1e-9));
}

#[test]
fn same_seed_same_report() {
    let p = SystemParams::reference();
    let c = Constraints::reference(0.4);
    let mut opts = SolverOptions::new(80, 17);
    opts.exec = Execution::Sequential;
    let a = solve(&p, &c, SolveMode::Adaptive, &opts).unwrap();
    opts.exec = Execution::Parallel;
    let b = solve(&p, &c, SolveMode::Adaptive, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, optimize(&p, &c, 80, 17).unwrap());
}

#[test]
fn loosening_a_constraint_never_hurts() {
    let p = SystemParams::reference();
    let n = 150;
    let best = |c: &Constraints| optimize(&p, c, n, 3).unwrap().best_mu_s;
    for lambda in [0.2, 0.5] {
        let base = Constraints::reference(lambda).with_e_th_su(1e-6);
        let b = best(&base);
        let looser = [
            base.with_e_th_su(1e-5),
            Constraints {
                e_th_pu: 1.0,
                ..base
            },
            Constraints {
                lambda_p: lambda - 0.1,
                ..base
            },
        ];
        for c in looser {
            let v = best(&c);
            assert!(v >= b - TOL, "{c:?}: {v} < {b}");
        }
    }
}

#[test]
fn baselines_are_dominated() {
    let p = SystemParams::reference();
    for lambda in [0.0, 0.3, 0.7] {
        let c = Constraints::reference(lambda);
        let ad = optimize(&p, &c, 200, 1).unwrap().best_mu_s;
        let fx = optimize_fixed_power(&p, &c, REFERENCE_GAMMA1, REFERENCE_GAMMA2, 200, 1).unwrap();
        let cv = conventional_baseline(&p, &c, REFERENCE_GAMMA1, 200, 1).unwrap();
        assert!(fx.best_mu_s <= ad + 1e-6);
        assert!(cv.best_mu_s <= ad + 1e-6);
        assert_eq!(fx.mode, ModeKind::Fixed);
        let pol = cv.best_policy;
        assert_eq!((pol.a2(), pol.gamma2()), (0.0, 0.0));
        let mu_p = model::mu_p(&pol, &p, &link_rates(&p));
        assert_eq!(
            mu_p,
            model::p_succ_pu(0, &AccessPolicy::silent(), &p, &link_rates(&p))
        );
    }
}

#[test]
fn strict_energy_cap_binds_mid_range() {
    let p = SystemParams::reference();
    let c = Constraints::reference(0.4).with_e_th_su(1e-7);
    let rep = optimize(&p, &c, 300, 9).unwrap();
    let slack = evaluate(&rep.best_policy, &p, &c)
        .slack("energy_su")
        .unwrap();
    assert!((0.0..=1e-9).contains(&slack), "slack {slack}");
}

#[test]
fn sweep_with_simulator_check() {
    // Idle-only access keeps the primary at its solo rate, so this optimum is
    // strictly stable and the simulator should agree.
    let spec = SweepSpec {
        lambda_grid: vec![0.3],
        ms_list: vec![3],
        e_th_su_list: vec![5e-5],
        modes: vec![ModeKind::Conventional],
        n_starts: 50,
        seed: 4,
        sim_validate: true,
        sim_slots: 1_000_000,
        sim_warmup: None,
        gamma1_fixed: REFERENCE_GAMMA1,
        gamma2_fixed: REFERENCE_GAMMA2,
    };
    let rows = run_sweep(
        &spec,
        &SystemParams::reference(),
        &Constraints::reference(0.0),
        Execution::default(),
    )
    .unwrap();
    let err = rows[0].sim_rel_err().unwrap();
    assert!(err <= 0.02, "sim_rel_err {err}");
}
