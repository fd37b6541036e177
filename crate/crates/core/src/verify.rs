//! Closed form vs. Monte Carlo over a fixed grid of decoding scenarios.

use std::fmt;

use crate::model;
use crate::oracle::{mc_success_prob_with, ChannelScenario};
use crate::parallel::Execution;
use crate::params::{SystemParams, REFERENCE_GAMMA1, REFERENCE_GAMMA2};
use crate::rng::derive_seed;

pub const POWER_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];
pub const INTERFERER_COUNTS: [usize; 4] = [0, 1, 2, 4];
/// Below this many samples the normal interval is only a rough guide.
pub const WIDE_CI_SAMPLES: u64 = 10_000;
pub const Z_LIMIT: f64 = 3.0;
/// Fraction of grid points that must agree for the run to pass.
pub const PASS_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    SuIdle,
    SuBusy,
    Pu,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::SuIdle => "su_idle",
            ScenarioKind::SuBusy => "su_busy",
            ScenarioKind::Pu => "pu",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyPoint {
    pub kind: ScenarioKind,
    pub k: usize,
    /// Secondary power under test (`gamma1` for idle, `gamma2` otherwise).
    pub power: f64,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_err: f64,
    /// `max(sample std err, closed-form binomial std err)`; the second term
    /// keeps a run of all-success samples from claiming zero error.
    pub sigma: f64,
    pub pass: bool,
}

impl VerifyPoint {
    pub fn z(&self) -> f64 {
        let d = (self.estimate - self.closed_form).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.sigma
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub n_samples: u64,
    pub seed: u64,
    pub points: Vec<VerifyPoint>,
}

impl VerifyReport {
    pub fn n_passed(&self) -> usize {
        self.points.iter().filter(|p| p.pass).count()
    }

    pub fn pass_fraction(&self) -> f64 {
        self.n_passed() as f64 / self.points.len() as f64
    }

    pub fn passed(&self) -> bool {
        self.pass_fraction() >= PASS_FRACTION
    }

    pub fn wide_intervals(&self) -> bool {
        self.n_samples < WIDE_CI_SAMPLES
    }
}

/// The 36-point grid: three powers around the reference values, four
/// interferer counts, three receivers.
pub fn grid() -> Vec<(ScenarioKind, usize, f64)> {
    let mut out = Vec::new();
    for kind in [ScenarioKind::SuIdle, ScenarioKind::SuBusy, ScenarioKind::Pu] {
        let base = if kind == ScenarioKind::SuIdle {
            REFERENCE_GAMMA1
        } else {
            REFERENCE_GAMMA2
        };
        for f in POWER_FACTORS {
            for k in INTERFERER_COUNTS {
                out.push((kind, k, base * f));
            }
        }
    }
    out
}

pub fn verify(params: &SystemParams, n_samples: u64, seed: u64, exec: Execution) -> VerifyReport {
    let rates = model::link_rates(params);
    let grid = grid();
    // Points run one after another; each estimate parallelizes internally.
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &(kind, k, power))| {
            let scenario = match kind {
                ScenarioKind::SuIdle => ChannelScenario::su_idle(k, power, params, &rates),
                ScenarioKind::SuBusy => ChannelScenario::su_busy(k, power, params, &rates),
                ScenarioKind::Pu => ChannelScenario::pu(k, power, params, &rates),
            };
            let closed_form = scenario.closed_form();
            let est = mc_success_prob_with(&scenario, n_samples, derive_seed(seed, i as u64), exec);
            let sigma = est
                .std_err
                .max((closed_form * (1.0 - closed_form) / est.n_samples as f64).sqrt());
            let diff = (est.estimate - closed_form).abs();
            VerifyPoint {
                kind,
                k,
                power,
                closed_form,
                estimate: est.estimate,
                std_err: est.std_err,
                sigma,
                pass: diff == 0.0 || diff <= Z_LIMIT * sigma,
            }
        })
        .collect();
    VerifyReport {
        n_samples: n_samples.max(1),
        seed,
        points,
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# samples per point: {}, seed: {}",
            self.n_samples, self.seed
        )?;
        if self.wide_intervals() {
            writeln!(
                f,
                "# note: fewer than {WIDE_CI_SAMPLES} samples, normal intervals are wide and approximate"
            )?;
        }
        writeln!(f, "scenario,k,power,closed_form,estimate,std_err,z,result")?;
        for p in &self.points {
            writeln!(
                f,
                "{},{},{},{},{},{},{:.3},{}",
                p.kind.name(),
                p.k,
                p.power,
                p.closed_form,
                p.estimate,
                p.std_err,
                p.z(),
                if p.pass { "pass" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "# {}/{} points within {Z_LIMIT} sigma: {}",
            self.n_passed(),
            self.points.len(),
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}
