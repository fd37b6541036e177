use crn_access::model::{self, link_rates};
use crn_access::oracle::{mc_success_prob, simulate_network, ChannelScenario, SimConfig};
use crn_access::{evaluate, AccessPolicy, Constraints, SystemParams};

fn default_policy() -> AccessPolicy {
    AccessPolicy::new(0.8, 0.3, 2e-10, 1e-10).unwrap()
}

#[test]
fn default_policy_regression() {
    let p = SystemParams::reference();
    let c = Constraints::reference(0.3);
    let rep = evaluate(&default_policy(), &p, &c);
    assert_eq!(rep.mu_s, 0.16712120613233222);

    let sim = simulate_network(&SimConfig::new(p, default_policy(), 0.3, 1_000_000, 77));
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(
        rel(sim.emp_mu_s, rep.mu_s) <= 0.02,
        "{} vs {}",
        sim.emp_mu_s,
        rep.mu_s
    );
    assert!(
        rel(sim.emp_pr_empty, rep.pr_empty) <= 0.02,
        "{} vs {}",
        sim.emp_pr_empty,
        rep.pr_empty
    );
    assert!(rel(sim.emp_energy_su, rep.energy_su) <= 0.02);
    assert!(rel(sim.emp_energy_pu, rep.energy_pu) <= 0.02);
    assert!(sim.mean_queue_len <= sim.max_queue_len as f64);
    for r in [sim.emp_mu_s, sim.emp_mu_p, sim.emp_pr_empty] {
        assert!((0.0..=1.0).contains(&r));
    }
}

#[test]
fn symmetric_users_see_equal_throughput() {
    let p = SystemParams::reference();
    let sim = simulate_network(&SimConfig::new(p, default_policy(), 0.3, 1_000_000, 5));
    let mean = sim.emp_mu_s;
    for (i, &x) in sim.per_su_mu_s.iter().enumerate() {
        let d = (x - mean).abs() / mean;
        assert!(d < 0.01, "user {i}: {x} vs mean {mean}");
    }
}

#[test]
fn reference_channel_values() {
    let p = SystemParams::reference();
    let r = link_rates(&p);
    let idle = ChannelScenario::su_idle(0, 2e-10, &p, &r);
    let pu = ChannelScenario::pu(1, 1e-10, &p, &r);
    for (s, frozen) in [(idle, 0.8904645841603366), (pu, 0.6786280635269697)] {
        assert!((s.closed_form() - frozen).abs() <= 1e-12 * frozen);
        let est = mc_success_prob(&s, 1_000_000, 99);
        assert!(
            (est.estimate - frozen).abs() <= 3.0 * est.std_err,
            "{est:?} vs {frozen}"
        );
    }
}

#[test]
fn primary_only_system_matches_solo_rate() {
    let p = SystemParams::reference();
    let sim = simulate_network(&SimConfig::new(
        p,
        AccessPolicy::silent(),
        0.5,
        1_000_000,
        8,
    ));
    let solo = model::p_succ_pu(0, &AccessPolicy::silent(), &p, &link_rates(&p));
    assert_eq!(sim.emp_mu_s, 0.0);
    assert!((sim.emp_mu_p - solo).abs() / solo <= 0.02);
}
