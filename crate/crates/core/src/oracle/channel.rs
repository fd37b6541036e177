//! Brute-force estimate of a single-slot decoding probability under
//! Rayleigh fading: sample every gain, compute the SINR, count successes.

use crate::model;
use crate::parallel::{map_indexed, Execution};
use crate::params::{AccessPolicy, LinkRates, SystemParams};
use crate::rng::{Purpose, Stream};

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    /// The tagged secondary user's destination.
    Secondary,
    /// The primary destination.
    Primary,
}

/// One decoding event: who is listening, who is transmitting, at what power.
#[derive(Debug, Clone, Copy)]
pub struct ChannelScenario<'a> {
    pub receiver: Receiver,
    /// Active secondary users other than the tagged transmitter. For the
    /// primary receiver, every active secondary user.
    pub n_su_interferers: usize,
    /// Whether the primary transmits (only matters at a secondary receiver).
    pub pu_active: bool,
    pub own_power: f64,
    pub interferer_power: f64,
    pub params: &'a SystemParams,
    /// Linear SINR threshold.
    pub threshold: f64,
}

impl<'a> ChannelScenario<'a> {
    pub fn su_idle(k: usize, gamma1: f64, params: &'a SystemParams, rates: &LinkRates) -> Self {
        ChannelScenario {
            receiver: Receiver::Secondary,
            n_su_interferers: k,
            pu_active: false,
            own_power: gamma1,
            interferer_power: gamma1,
            params,
            threshold: rates.rs_lin,
        }
    }

    pub fn su_busy(k: usize, gamma2: f64, params: &'a SystemParams, rates: &LinkRates) -> Self {
        ChannelScenario {
            receiver: Receiver::Secondary,
            n_su_interferers: k,
            pu_active: true,
            own_power: gamma2,
            interferer_power: gamma2,
            params,
            threshold: rates.rs_lin,
        }
    }

    pub fn pu(k: usize, gamma2: f64, params: &'a SystemParams, rates: &LinkRates) -> Self {
        ChannelScenario {
            receiver: Receiver::Primary,
            n_su_interferers: k,
            pu_active: true,
            own_power: params.gamma_p,
            interferer_power: gamma2,
            params,
            threshold: rates.rp_lin,
        }
    }

    /// The matching closed-form probability from [`crate::model`].
    pub fn closed_form(&self) -> f64 {
        let rates = model::link_rates(self.params);
        let k = self.n_su_interferers;
        match (self.receiver, self.pu_active) {
            (Receiver::Secondary, false) => {
                model::p_succ_su_idle(k, self.own_power, self.params, &rates)
            }
            (Receiver::Secondary, true) => {
                let policy = AccessPolicy::projected(1.0, 1.0, 0.0, self.own_power, f64::INFINITY);
                model::p_succ_su_busy(k, &policy, self.params, &rates)
            }
            (Receiver::Primary, _) => {
                let policy =
                    AccessPolicy::projected(1.0, 1.0, 0.0, self.interferer_power, f64::INFINITY);
                model::p_succ_pu(k, &policy, self.params, &rates)
            }
        }
    }

    fn sample_success(&self, rng: &mut Stream) -> bool {
        let p = self.params;
        let (own_rate, cross_rate) = match self.receiver {
            Receiver::Secondary => (p.delta_ss, p.delta_ss),
            Receiver::Primary => (p.delta_pp, p.delta_sp),
        };
        let signal = self.own_power * rng.exponential(own_rate);
        let mut interference = 0.0;
        for _ in 0..self.n_su_interferers {
            interference += self.interferer_power * rng.exponential(cross_rate);
        }
        if self.receiver == Receiver::Secondary && self.pu_active {
            interference += p.gamma_p * rng.exponential(p.delta_ps);
        }
        signal > self.threshold * (p.noise_n0 + interference)
    }
}

/// Sample estimate and binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub n_samples: u64,
}

pub fn mc_success_prob(scenario: &ChannelScenario<'_>, n_samples: u64, seed: u64) -> McEstimate {
    mc_success_prob_with(scenario, n_samples, seed, Execution::default())
}

/// As [`mc_success_prob`]; samples are drawn in fixed chunks with one stream
/// per chunk, so the result does not depend on `exec`.
pub fn mc_success_prob_with(
    scenario: &ChannelScenario<'_>,
    n_samples: u64,
    seed: u64,
    exec: Execution,
) -> McEstimate {
    let n = n_samples.max(1) as usize;
    let chunks = n.div_ceil(CHUNK);
    let counts = map_indexed(chunks, exec, |c| {
        let len = CHUNK.min(n - c * CHUNK);
        let mut rng = Stream::new(seed, Purpose::ChannelSample, c as u64, 0);
        (0..len)
            .filter(|_| scenario.sample_success(&mut rng))
            .count() as u64
    });
    let hits: u64 = counts.iter().sum();
    let estimate = hits as f64 / n as f64;
    McEstimate {
        estimate,
        std_err: (estimate * (1.0 - estimate) / n as f64).sqrt(),
        n_samples: n as u64,
    }
}
