//! Multi-start maximization of the secondary throughput over the access
//! policy, subject to primary stability and both average-energy caps.
//!
//! Each start draws a uniform point in the search box, repairs it to
//! feasibility (ordering `a2 <= a1`, then bisection on the powers, or on the
//! access probabilities when the powers are pinned), and runs a bounded
//! Nelder-Mead search on the negated throughput. Constraint violations are
//! handled by an exact penalty: every infeasible point scores worse than
//! every feasible one. Starts are independent; the best terminal point is
//! chosen in start order, so the report does not depend on scheduling.

pub mod nelder_mead;

use std::fmt;

use thiserror::Error;

use crate::model;
use crate::parallel::{map_indexed, Execution};
use crate::params::{AccessPolicy, Constraints, LinkRates, SystemParams};
use crate::rng::{Purpose, Stream};

use nelder_mead::{clamp_unit, NelderMeadOptions};

/// Default number of independent local searches.
pub const DEFAULT_STARTS: usize = 1000;
/// Starts within this of the best objective count as having found it.
pub const DEFAULT_BEST_TOLERANCE: f64 = 1e-4;
/// Objectives closer than this are ties, broken by the policy key.
const TIE_EPS: f64 = 1e-12;
const REPAIR_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    /// All four of `a1, a2, gamma1, gamma2` are free.
    Adaptive,
    /// Powers pinned; search over `a1, a2`.
    FixedPower { gamma1: f64, gamma2: f64 },
    /// Idle-only access: `a2 = gamma2 = 0`, `gamma1` pinned; search over `a1`.
    Conventional { gamma1: f64 },
}

impl SolveMode {
    pub fn kind(&self) -> ModeKind {
        match self {
            SolveMode::Adaptive => ModeKind::Adaptive,
            SolveMode::FixedPower { .. } => ModeKind::Fixed,
            SolveMode::Conventional { .. } => ModeKind::Conventional,
        }
    }

    fn dims(&self) -> usize {
        match self {
            SolveMode::Adaptive => 4,
            SolveMode::FixedPower { .. } => 2,
            SolveMode::Conventional { .. } => 1,
        }
    }

    /// Maps unit-box coordinates to a policy. Powers are scaled by `gamma_max`.
    fn policy(&self, x: &[f64], gamma_max: f64) -> AccessPolicy {
        match *self {
            SolveMode::Adaptive => {
                AccessPolicy::projected(x[0], x[1], x[2] * gamma_max, x[3] * gamma_max, gamma_max)
            }
            SolveMode::FixedPower { gamma1, gamma2 } => {
                AccessPolicy::projected(x[0], x[1], gamma1, gamma2, f64::INFINITY)
            }
            SolveMode::Conventional { gamma1 } => {
                AccessPolicy::projected(x[0], 0.0, gamma1, 0.0, f64::INFINITY)
            }
        }
    }

    fn project(&self, x: &mut [f64]) {
        clamp_unit(x);
        if x.len() >= 2 {
            x[1] = x[1].min(x[0]);
        }
    }

    /// Indices of the coordinates scaled by the repair bisection.
    fn repair_coords(&self) -> std::ops::Range<usize> {
        match self {
            SolveMode::Adaptive => 2..4,
            SolveMode::FixedPower { .. } => 0..2,
            SolveMode::Conventional { .. } => 0..1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Adaptive,
    Fixed,
    Conventional,
}

impl ModeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModeKind::Adaptive => "adaptive",
            ModeKind::Fixed => "fixed",
            ModeKind::Conventional => "conventional",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "adaptive" => Some(ModeKind::Adaptive),
            "fixed" => Some(ModeKind::Fixed),
            "conventional" => Some(ModeKind::Conventional),
            _ => None,
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    /// Even silent secondary users leave the primary unstable or over its
    /// energy cap, so no policy is feasible.
    #[error("no feasible policy: {0}")]
    GloballyInfeasible(String),
    #[error(transparent)]
    Invalid(#[from] crate::error::ModelError),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub best_tolerance: f64,
    pub local: NelderMeadOptions,
    pub exec: Execution,
}

impl SolverOptions {
    pub fn new(n_starts: usize, seed: u64) -> Self {
        SolverOptions {
            n_starts,
            seed,
            best_tolerance: DEFAULT_BEST_TOLERANCE,
            local: NelderMeadOptions::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub best_policy: AccessPolicy,
    pub best_mu_s: f64,
    pub n_starts: usize,
    pub n_feasible_starts: usize,
    pub starts_within_tolerance_of_best: usize,
    pub mode: ModeKind,
    /// The energy caps leave no room to transmit: the optimum is silence.
    pub degenerate_budget: bool,
    /// Terminal objective of every feasible start, in start order
    /// (`None` for starts that ended infeasible).
    pub start_objectives: Vec<Option<f64>>,
}

/// Maximizes the secondary throughput over all four policy variables.
pub fn optimize(
    params: &SystemParams,
    constraints: &Constraints,
    n_starts: usize,
    seed: u64,
) -> Result<SolveReport, OptimizeError> {
    solve(
        params,
        constraints,
        SolveMode::Adaptive,
        &SolverOptions::new(n_starts, seed),
    )
}

/// Maximizes over the access probabilities with both powers pinned.
pub fn optimize_fixed_power(
    params: &SystemParams,
    constraints: &Constraints,
    gamma1_fixed: f64,
    gamma2_fixed: f64,
    n_starts: usize,
    seed: u64,
) -> Result<SolveReport, OptimizeError> {
    let mode = SolveMode::FixedPower {
        gamma1: gamma1_fixed,
        gamma2: gamma2_fixed,
    };
    solve(
        params,
        constraints,
        mode,
        &SolverOptions::new(n_starts, seed),
    )
}

/// Idle-only baseline: secondary users stay silent whenever the primary is
/// busy, and transmit at a fixed power otherwise.
pub fn conventional_baseline(
    params: &SystemParams,
    constraints: &Constraints,
    gamma1_fixed: f64,
    n_starts: usize,
    seed: u64,
) -> Result<SolveReport, OptimizeError> {
    let mode = SolveMode::Conventional {
        gamma1: gamma1_fixed,
    };
    solve(
        params,
        constraints,
        mode,
        &SolverOptions::new(n_starts, seed),
    )
}

struct Problem<'a> {
    params: &'a SystemParams,
    rates: LinkRates,
    constraints: &'a Constraints,
    mode: SolveMode,
}

/// Outcome of scoring one policy.
struct Score {
    mu_s: f64,
    /// Sum of normalized constraint violations; 0 iff feasible.
    violation: f64,
}

impl Problem<'_> {
    fn score(&self, policy: &AccessPolicy) -> Score {
        let c = self.constraints;
        let p = self.params;
        let mu_p = model::mu_p(policy, p, &self.rates);
        let stable = c.lambda_p <= mu_p;
        let busy = if !stable {
            1.0
        } else if c.lambda_p == 0.0 {
            0.0
        } else {
            c.lambda_p / mu_p
        };
        let e_su = (policy.a1() * policy.gamma1() * (1.0 - busy)
            + policy.a2() * policy.gamma2() * busy)
            * p.bandwidth_w
            * p.su_airtime();
        let e_pu = p.gamma_p * p.bandwidth_w * p.slot_t * busy;
        let over = |e: f64, cap: f64| {
            if e > cap {
                (e - cap) / (cap + 1e-30)
            } else {
                0.0
            }
        };
        let violation =
            (c.lambda_p - mu_p).max(0.0) + over(e_su, c.e_th_su) + over(e_pu, c.e_th_pu);
        let mu_s = if violation == 0.0 {
            let idle = model::su_idle_throughput(policy, p, &self.rates);
            let busy_tp = if busy > 0.0 {
                model::su_busy_throughput(policy, p, &self.rates)
            } else {
                0.0
            };
            (1.0 - busy) * idle + busy * busy_tp
        } else {
            0.0
        };
        Score { mu_s, violation }
    }

    /// Negated throughput on the feasible set; `1 + violation` outside it.
    fn penalized(&self, x: &[f64]) -> f64 {
        let s = self.score(&self.mode.policy(x, self.constraints.gamma_max));
        if s.violation > 0.0 {
            1.0 + s.violation
        } else {
            -s.mu_s
        }
    }

    fn feasible(&self, x: &[f64]) -> bool {
        self.score(&self.mode.policy(x, self.constraints.gamma_max))
            .violation
            == 0.0
    }

    /// Shrinks the repair coordinates toward zero until the point is feasible.
    fn repair(&self, x: &mut [f64]) {
        self.mode.project(x);
        if self.feasible(x) {
            return;
        }
        let coords = self.mode.repair_coords();
        let original: Vec<f64> = x.to_vec();
        let scaled = |s: f64| {
            let mut y = original.clone();
            for i in coords.clone() {
                y[i] *= s;
            }
            self.mode.project(&mut y);
            y
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..REPAIR_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if self.feasible(&scaled(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x.copy_from_slice(&scaled(lo));
    }
}

struct StartOutcome {
    policy: AccessPolicy,
    mu_s: f64,
    feasible: bool,
}

fn tie_key(p: &AccessPolicy) -> [f64; 4] {
    [p.gamma1(), p.gamma2(), p.a1(), p.a2()]
}

fn lexicographically_smaller(a: &[f64; 4], b: &[f64; 4]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Runs the multi-start search for any mode.
pub fn solve(
    params: &SystemParams,
    constraints: &Constraints,
    mode: SolveMode,
    opts: &SolverOptions,
) -> Result<SolveReport, OptimizeError> {
    params.validate()?;
    constraints.validate()?;
    let problem = Problem {
        params,
        rates: model::link_rates(params),
        constraints,
        mode,
    };
    let silent = problem.score(&AccessPolicy::silent());
    if silent.violation > 0.0 {
        let report = model::evaluate(&AccessPolicy::silent(), params, constraints);
        let reason = if !report.stable {
            format!(
                "lambda_p = {} exceeds the primary service rate {} with silent secondary users",
                constraints.lambda_p, report.mu_p
            )
        } else {
            format!(
                "primary energy {} J exceeds its cap {} J with silent secondary users",
                report.energy_pu, constraints.e_th_pu
            )
        };
        return Err(OptimizeError::GloballyInfeasible(reason));
    }

    let dims = mode.dims();
    let outcomes = map_indexed(opts.n_starts, opts.exec, |i| {
        let mut rng = Stream::new(opts.seed, Purpose::SolverStart, i as u64, 0);
        let mut x: Vec<f64> = (0..dims).map(|_| rng.unit()).collect();
        problem.repair(&mut x);
        let result = nelder_mead::minimize(
            |y| problem.penalized(y),
            |y| mode.project(y),
            &x,
            &opts.local,
        );
        let policy = mode.policy(&result.x, constraints.gamma_max);
        let score = problem.score(&policy);
        StartOutcome {
            policy,
            mu_s: score.mu_s,
            feasible: score.violation == 0.0,
        }
    });

    // The silent policy is feasible here, so the fallback is always valid.
    let mut best = StartOutcome {
        policy: mode.policy(&vec![0.0; dims], constraints.gamma_max),
        mu_s: 0.0,
        feasible: true,
    };
    let mut found = false;
    for o in outcomes.iter().filter(|o| o.feasible) {
        let better = !found
            || o.mu_s > best.mu_s + TIE_EPS
            || ((o.mu_s - best.mu_s).abs() <= TIE_EPS
                && lexicographically_smaller(&tie_key(&o.policy), &tie_key(&best.policy)));
        if better {
            best = StartOutcome { ..*o };
            found = true;
        }
    }
    let n_feasible = outcomes.iter().filter(|o| o.feasible).count();
    let within = outcomes
        .iter()
        .filter(|o| o.feasible && o.mu_s >= best.mu_s - opts.best_tolerance)
        .count();

    Ok(SolveReport {
        best_policy: best.policy,
        best_mu_s: best.mu_s,
        n_starts: opts.n_starts,
        n_feasible_starts: n_feasible,
        starts_within_tolerance_of_best: within.max(1),
        mode: mode.kind(),
        degenerate_budget: best.mu_s == 0.0,
        start_objectives: outcomes
            .iter()
            .map(|o| o.feasible.then_some(o.mu_s))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{REFERENCE_GAMMA1, REFERENCE_GAMMA2};
    use approx::assert_relative_eq;

    const STARTS: usize = 60;

    #[test]
    fn solo_user_without_primary_traffic() {
        let p = SystemParams::reference().with_num_su(1);
        let c = Constraints::reference(0.0);
        let rep = optimize(&p, &c, STARTS, 1).unwrap();
        let pol = rep.best_policy;
        assert!((pol.a1() - 1.0).abs() < 1e-6, "{pol:?}");
        // Energy cap binds before gamma_max: gamma1 = E_th,s / (W (T - tau)).
        let binding = c.e_th_su / (p.bandwidth_w * p.su_airtime());
        assert!(binding < c.gamma_max);
        assert_relative_eq!(pol.gamma1(), binding, max_relative = 1e-6);
        let r = model::link_rates(&p);
        assert_relative_eq!(
            rep.best_mu_s,
            model::p_succ_su_idle(0, pol.gamma1(), &p, &r),
            max_relative = 1e-9
        );
        assert_relative_eq!(
            rep.best_mu_s,
            model::mu_s(&pol, &p, &r, 0.0).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn solo_user_hits_power_box_when_energy_is_loose() {
        let p = SystemParams::reference().with_num_su(1);
        let c = Constraints::reference(0.0).with_e_th_su(1.0);
        let rep = optimize(&p, &c, STARTS, 1).unwrap();
        assert!((rep.best_policy.a1() - 1.0).abs() < 1e-6);
        assert_relative_eq!(rep.best_policy.gamma1(), c.gamma_max, max_relative = 1e-6);
    }

    #[test]
    fn primary_overload_is_globally_infeasible() {
        let p = SystemParams::reference();
        let c = Constraints::reference(0.95);
        for res in [
            optimize(&p, &c, 4, 1),
            optimize_fixed_power(&p, &c, REFERENCE_GAMMA1, REFERENCE_GAMMA2, 4, 1),
            conventional_baseline(&p, &c, REFERENCE_GAMMA1, 4, 1),
        ] {
            assert!(matches!(res, Err(OptimizeError::GloballyInfeasible(_))));
        }
    }

    #[test]
    fn zero_fixed_powers_give_zero() {
        let p = SystemParams::reference();
        let rep =
            optimize_fixed_power(&p, &Constraints::reference(0.3), 0.0, 0.0, STARTS, 2).unwrap();
        assert_eq!(rep.best_mu_s, 0.0);
        assert!(rep.degenerate_budget);
    }

    #[test]
    fn zero_energy_budget_is_degenerate() {
        let p = SystemParams::reference();
        let c = Constraints::reference(0.3).with_e_th_su(0.0);
        let rep = optimize(&p, &c, STARTS, 2).unwrap();
        assert_eq!(rep.best_mu_s, 0.0);
        assert!(rep.degenerate_budget);
    }

    #[test]
    fn no_primary_traffic_makes_busy_power_irrelevant() {
        let p = SystemParams::reference();
        let c = Constraints::reference(0.0);
        let conv = conventional_baseline(&p, &c, REFERENCE_GAMMA1, STARTS, 3).unwrap();
        for g2 in [0.0, REFERENCE_GAMMA2, 5e-9] {
            let fixed = optimize_fixed_power(&p, &c, REFERENCE_GAMMA1, g2, STARTS, 3).unwrap();
            assert_relative_eq!(fixed.best_mu_s, conv.best_mu_s, max_relative = 1e-9);
            assert_relative_eq!(
                fixed.best_policy.a1(),
                conv.best_policy.a1(),
                max_relative = 1e-5
            );
        }
        // One-dimensional check: the optimum over a1 alone, by dense grid.
        let r = model::link_rates(&p);
        let grid_best = (0..=100_000)
            .map(|i| {
                let pol = AccessPolicy::new(i as f64 / 1e5, 0.0, REFERENCE_GAMMA1, 0.0).unwrap();
                model::mu_s(&pol, &p, &r, 0.0).unwrap()
            })
            .fold(0.0, f64::max);
        assert!(conv.best_mu_s >= grid_best - 1e-10);
        assert!(conv.best_mu_s <= grid_best + 1e-8);
    }

    #[test]
    fn conventional_keeps_primary_at_solo_rate() {
        let p = SystemParams::reference();
        let c = Constraints::reference(0.4);
        let rep = conventional_baseline(&p, &c, REFERENCE_GAMMA1, STARTS, 4).unwrap();
        assert_eq!(rep.best_policy.a2(), 0.0);
        assert_eq!(rep.best_policy.gamma2(), 0.0);
        let r = model::link_rates(&p);
        let eval = model::evaluate(&rep.best_policy, &p, &c);
        assert_eq!(eval.mu_p, model::p_succ_pu(0, &rep.best_policy, &p, &r));
    }

    #[test]
    fn baselines_never_beat_adaptive() {
        let p = SystemParams::reference();
        for lambda in [0.1, 0.4, 0.7] {
            let c = Constraints::reference(lambda);
            let adaptive = optimize(&p, &c, STARTS, 5).unwrap();
            let fixed = optimize_fixed_power(&p, &c, REFERENCE_GAMMA1, REFERENCE_GAMMA2, STARTS, 5)
                .unwrap();
            let conv = conventional_baseline(&p, &c, REFERENCE_GAMMA1, STARTS, 5).unwrap();
            assert!(
                fixed.best_mu_s <= adaptive.best_mu_s + 1e-6,
                "lambda {lambda}"
            );
            assert!(
                conv.best_mu_s <= adaptive.best_mu_s + 1e-6,
                "lambda {lambda}"
            );
        }
    }

    #[test]
    fn reported_policy_is_feasible() {
        let p = SystemParams::reference();
        for (lambda, e) in [(0.2, 5e-5), (0.5, 5e-6), (0.8, 1e-7)] {
            let c = Constraints::reference(lambda).with_e_th_su(e);
            let rep = optimize(&p, &c, STARTS, 6).unwrap();
            let eval = model::evaluate(&rep.best_policy, &p, &c);
            assert!(eval.feasible(), "{eval:?}");
            assert!(eval.slacks.iter().all(|(_, s)| *s >= -1e-9));
            assert_relative_eq!(eval.mu_s, rep.best_mu_s, max_relative = 1e-12);
            assert!(rep.starts_within_tolerance_of_best >= 1);
        }
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let p = SystemParams::reference();
        let c = Constraints::reference(0.3);
        let mut opts = SolverOptions::new(24, 9);
        let a = solve(&p, &c, SolveMode::Adaptive, &opts).unwrap();
        opts.exec = Execution::Sequential;
        let b = solve(&p, &c, SolveMode::Adaptive, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, optimize(&p, &c, 24, 9).unwrap());
    }

    #[test]
    fn ties_prefer_smaller_powers() {
        let a = AccessPolicy::new(0.5, 0.1, 1e-10, 2e-10).unwrap();
        let b = AccessPolicy::new(0.4, 0.1, 1e-10, 3e-10).unwrap();
        assert!(lexicographically_smaller(&tie_key(&a), &tie_key(&b)));
        assert!(!lexicographically_smaller(&tie_key(&b), &tie_key(&a)));
        assert!(!lexicographically_smaller(&tie_key(&a), &tie_key(&a)));
    }

    #[test]
    fn repair_lands_on_feasible_point() {
        let p = SystemParams::reference();
        let c = Constraints::reference(0.3).with_e_th_su(1e-7);
        for mode in [
            SolveMode::Adaptive,
            SolveMode::FixedPower {
                gamma1: REFERENCE_GAMMA1,
                gamma2: REFERENCE_GAMMA2,
            },
        ] {
            let problem = Problem {
                params: &p,
                rates: model::link_rates(&p),
                constraints: &c,
                mode,
            };
            let mut x = vec![1.0; mode.dims()];
            problem.repair(&mut x);
            assert!(problem.feasible(&x), "{mode:?}: {x:?}");
            assert!(x[1] <= x[0]);
        }
    }
}
