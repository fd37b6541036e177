//! Closed-form success probabilities, service rates and average energies.
//!
//! Channel power gains are exponential (block Rayleigh fading), so every
//! outage probability factors into a noise term and one independent factor
//! per interferer. Interferer counts `k` passed to the secondary-link
//! functions exclude the tagged user; the primary-link function counts every
//! active secondary user.

use crate::error::ModelError;
use crate::params::{AccessPolicy, Constraints, LinkRates, SystemParams};

/// Above this many users the binomial weights are accumulated in log space.
const LOG_SPACE_THRESHOLD: usize = 30;

pub fn link_rates(params: &SystemParams) -> LinkRates {
    let rs_spectral = params.packet_bits / (params.su_airtime() * params.bandwidth_w);
    let rp_spectral = params.packet_bits / (params.slot_t * params.bandwidth_w);
    LinkRates {
        rs_spectral,
        rp_spectral,
        rs_lin: rs_spectral.exp2() - 1.0,
        rp_lin: rp_spectral.exp2() - 1.0,
    }
}

/// Secondary success probability while the primary is idle, given
/// `k_interferers` other active secondary users, all at power `gamma1`.
///
/// A zero-power transmission never decodes; the result is then 0.
pub fn p_succ_su_idle(
    k_interferers: usize,
    gamma1: f64,
    params: &SystemParams,
    rates: &LinkRates,
) -> f64 {
    if gamma1 <= 0.0 {
        return 0.0;
    }
    let noise = (-params.delta_ss * rates.rs_lin * params.noise_n0 / gamma1).exp();
    noise * per_su_interferer(rates).powi(k_interferers as i32)
}

/// Secondary success probability while the primary is transmitting.
pub fn p_succ_su_busy(
    k_interferers: usize,
    policy: &AccessPolicy,
    params: &SystemParams,
    rates: &LinkRates,
) -> f64 {
    let gamma2 = policy.gamma2();
    if gamma2 <= 0.0 {
        return 0.0;
    }
    let noise = (-params.delta_ss * rates.rs_lin * params.noise_n0 / gamma2).exp();
    let pu_factor =
        1.0 / (1.0 + params.delta_ss * rates.rs_lin * params.gamma_p / (gamma2 * params.delta_ps));
    noise * pu_factor * per_su_interferer(rates).powi(k_interferers as i32)
}

/// Primary success probability with `k_active_su` secondary users transmitting
/// at `policy.gamma2()`.
pub fn p_succ_pu(
    k_active_su: usize,
    policy: &AccessPolicy,
    params: &SystemParams,
    rates: &LinkRates,
) -> f64 {
    let noise = (-params.delta_pp * rates.rp_lin * params.noise_n0 / params.gamma_p).exp();
    let per_su = 1.0
        / (1.0
            + params.delta_pp * rates.rp_lin * policy.gamma2()
                / (params.delta_sp * params.gamma_p));
    noise * per_su.powi(k_active_su as i32)
}

/// Interfering secondary users share the tagged user's power and gain
/// statistics, so each contributes the same factor.
fn per_su_interferer(rates: &LinkRates) -> f64 {
    1.0 / (1.0 + rates.rs_lin)
}

/// `P(Binomial(n, p) = k)`.
pub fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    if n > LOG_SPACE_THRESHOLD {
        let ln_choose: f64 = (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum();
        return (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp();
    }
    choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// Mean primary service rate: success probability averaged over the number
/// of secondary users that access while the primary is busy.
pub fn mu_p(policy: &AccessPolicy, params: &SystemParams, rates: &LinkRates) -> f64 {
    let m = params.num_su;
    (0..=m)
        .map(|k| binomial_pmf(m, k, policy.a2()) * p_succ_pu(k, policy, params, rates))
        .sum()
}

/// Probability that the primary queue is empty at the start of a slot.
pub fn pr_pu_empty(lambda_p: f64, mu_p: f64) -> Result<f64, ModelError> {
    if lambda_p > mu_p || (mu_p <= 0.0 && lambda_p > 0.0) {
        return Err(ModelError::UnstableQueue { lambda_p, mu_p });
    }
    if lambda_p == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - lambda_p / mu_p)
}

/// Per-user secondary throughput conditioned on the primary being idle:
/// own access probability times the expected success over the other users'
/// access pattern.
pub fn su_idle_throughput(policy: &AccessPolicy, params: &SystemParams, rates: &LinkRates) -> f64 {
    let others = params.num_su - 1;
    let a1 = policy.a1();
    if a1 == 0.0 {
        return 0.0;
    }
    a1 * (0..=others)
        .map(|k| binomial_pmf(others, k, a1) * p_succ_su_idle(k, policy.gamma1(), params, rates))
        .sum::<f64>()
}

/// Per-user secondary throughput conditioned on the primary transmitting.
pub fn su_busy_throughput(policy: &AccessPolicy, params: &SystemParams, rates: &LinkRates) -> f64 {
    let others = params.num_su - 1;
    let a2 = policy.a2();
    if a2 == 0.0 {
        return 0.0;
    }
    a2 * (0..=others)
        .map(|k| binomial_pmf(others, k, a2) * p_succ_su_busy(k, policy, params, rates))
        .sum::<f64>()
}

/// Mean service rate of one (saturated) secondary user.
pub fn mu_s(
    policy: &AccessPolicy,
    params: &SystemParams,
    rates: &LinkRates,
    lambda_p: f64,
) -> Result<f64, ModelError> {
    let empty = pr_pu_empty(lambda_p, mu_p(policy, params, rates))?;
    Ok(mix(empty, policy, params, rates))
}

fn mix(pr_empty: f64, policy: &AccessPolicy, params: &SystemParams, rates: &LinkRates) -> f64 {
    let idle = su_idle_throughput(policy, params, rates);
    let busy = if pr_empty < 1.0 {
        su_busy_throughput(policy, params, rates)
    } else {
        0.0
    };
    pr_empty * idle + (1.0 - pr_empty) * busy
}

/// Average SU transmit energy per slot in Joules.
pub fn avg_energy_su(
    policy: &AccessPolicy,
    params: &SystemParams,
    lambda_p: f64,
    mu_p: f64,
) -> Result<f64, ModelError> {
    let busy = 1.0 - pr_pu_empty(lambda_p, mu_p)?;
    let density =
        policy.a1() * policy.gamma1() * (1.0 - busy) + policy.a2() * policy.gamma2() * busy;
    Ok(density * params.bandwidth_w * params.su_airtime())
}

/// Average PU transmit energy per slot in Joules.
pub fn avg_energy_pu(params: &SystemParams, lambda_p: f64, mu_p: f64) -> Result<f64, ModelError> {
    let busy = 1.0 - pr_pu_empty(lambda_p, mu_p)?;
    Ok(params.gamma_p * params.bandwidth_w * params.slot_t * busy)
}

/// Names of the three constraints, in slack order.
pub const CONSTRAINT_NAMES: [&str; 3] = ["stability", "energy_pu", "energy_su"];

/// Everything the analytic model says about one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    /// Zero when the primary queue is unstable.
    pub mu_s: f64,
    pub mu_p: f64,
    /// Zero when the primary queue is unstable.
    pub pr_empty: f64,
    /// Energies assume a saturated primary when the queue is unstable.
    pub energy_su: f64,
    pub energy_pu: f64,
    pub stable: bool,
    /// True when a branch accesses the channel with zero power.
    pub degenerate: bool,
    /// `(mu_p - lambda_p, E_th,p - E_p, E_th,s - E_s)` keyed by [`CONSTRAINT_NAMES`].
    pub slacks: Vec<(&'static str, f64)>,
}

impl ThroughputReport {
    /// Stable and within both energy caps.
    pub fn feasible(&self) -> bool {
        self.stable && self.slacks.iter().all(|(_, s)| *s >= 0.0)
    }

    pub fn slack(&self, name: &str) -> Option<f64> {
        self.slacks
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| *s)
    }
}

/// Full analytic evaluation of `policy`. Infeasibility is reported through
/// flags and negative slacks; this never fails.
pub fn evaluate(
    policy: &AccessPolicy,
    params: &SystemParams,
    constraints: &Constraints,
) -> ThroughputReport {
    let rates = link_rates(params);
    evaluate_with_rates(policy, params, &rates, constraints)
}

pub(crate) fn evaluate_with_rates(
    policy: &AccessPolicy,
    params: &SystemParams,
    rates: &LinkRates,
    constraints: &Constraints,
) -> ThroughputReport {
    let lambda_p = constraints.lambda_p;
    let mu_p = mu_p(policy, params, rates);
    let stable = pr_pu_empty(lambda_p, mu_p).is_ok();
    // Past the frontier the primary is busy every slot.
    let busy = if stable {
        if lambda_p == 0.0 {
            0.0
        } else {
            lambda_p / mu_p
        }
    } else {
        1.0
    };
    let pr_empty = 1.0 - busy;
    let mu_s = if stable {
        mix(pr_empty, policy, params, rates)
    } else {
        0.0
    };
    let energy_su = (policy.a1() * policy.gamma1() * pr_empty
        + policy.a2() * policy.gamma2() * busy)
        * params.bandwidth_w
        * params.su_airtime();
    let energy_pu = params.gamma_p * params.bandwidth_w * params.slot_t * busy;
    let degenerate = (policy.a1() > 0.0 && policy.gamma1() == 0.0)
        || (policy.a2() > 0.0 && policy.gamma2() == 0.0);
    ThroughputReport {
        mu_s,
        mu_p,
        pr_empty: if stable { pr_empty } else { 0.0 },
        energy_su,
        energy_pu,
        stable,
        degenerate,
        slacks: vec![
            (CONSTRAINT_NAMES[0], mu_p - lambda_p),
            (CONSTRAINT_NAMES[1], constraints.e_th_pu - energy_pu),
            (CONSTRAINT_NAMES[2], constraints.e_th_su - energy_su),
        ],
    }
}
