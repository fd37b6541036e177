//! Slot-level simulation of one primary link and `num_su` saturated
//! secondary links with SINR-threshold multipacket reception.
//!
//! Each slot: the primary transmits iff its queue is non-empty, every
//! secondary user senses that perfectly and transmits with `a1`/`gamma1` on an
//! idle channel or `a2`/`gamma2` on a busy one, fresh exponential gains are
//! drawn for every link, each receiver decodes iff its SINR beats the
//! threshold, and the queue is updated departures-first with the slot's
//! Bernoulli arrival (late arrival: it cannot be served this slot).

use std::io::Write;

use crate::model;
use crate::parallel::{map_indexed, Execution};
use crate::params::{AccessPolicy, SystemParams};
use crate::rng::{exponential_from_bits, open01, Purpose, Stream};

/// Least-squares queue growth (packets/slot) above which a run is unstable.
pub const INSTABILITY_SLOPE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_slots: u64,
    pub seed: u64,
    pub lambda_p: f64,
    pub policy: AccessPolicy,
    pub params: SystemParams,
    /// Leading slots excluded from the statistics.
    pub warmup_slots: u64,
}

impl SimConfig {
    /// Uses the default warmup of 10% of the run.
    pub fn new(
        params: SystemParams,
        policy: AccessPolicy,
        lambda_p: f64,
        n_slots: u64,
        seed: u64,
    ) -> Self {
        SimConfig {
            n_slots,
            seed,
            lambda_p,
            policy,
            params,
            warmup_slots: n_slots / 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Mean over users of each user's delivered packets per slot.
    pub emp_mu_s: f64,
    pub per_su_mu_s: Vec<f64>,
    /// Primary successes per primary transmission (0 if it never transmitted).
    pub emp_mu_p: f64,
    pub emp_pr_empty: f64,
    pub mean_queue_len: f64,
    pub max_queue_len: u64,
    /// Per user, Joules per slot.
    pub emp_energy_su: f64,
    pub emp_energy_pu: f64,
    pub slots_counted: u64,
    /// Least-squares slope of the queue length over the final half of the run.
    pub queue_slope: f64,
    pub final_queue_len: u64,
}

struct Streams {
    arrival: Stream,
    pu_gain: Stream,
    access: Vec<Stream>,
    own: Vec<Stream>,
    pu_to_su: Vec<Stream>,
    su_to_pu: Vec<Stream>,
    /// `cross[i * m + j]` is the gain from SU `i` to SU `j`'s destination;
    /// the diagonal is unused.
    cross: Vec<Option<Stream>>,
}

impl Streams {
    fn new(seed: u64, m: usize) -> Self {
        let per_user = |purpose| {
            (0..m)
                .map(|j| Stream::new(seed, purpose, j as u64, 0))
                .collect()
        };
        let cross = (0..m * m)
            .map(|ij| {
                let (i, j) = (ij / m, ij % m);
                (i != j).then(|| Stream::new(seed, Purpose::SecondaryCrossGain, i as u64, j as u64))
            })
            .collect();
        Streams {
            arrival: Stream::new(seed, Purpose::PrimaryArrival, 0, 0),
            pu_gain: Stream::new(seed, Purpose::PrimaryGain, 0, 0),
            access: per_user(Purpose::SecondaryAccess),
            own: per_user(Purpose::SecondaryOwnGain),
            pu_to_su: per_user(Purpose::PrimaryToSecondaryGain),
            su_to_pu: per_user(Purpose::SecondaryToPrimaryGain),
            cross,
        }
    }
}

/// Raw draws of one slot. Every stream advances exactly once per slot, so
/// draw `t` of a stream always belongs to slot `t`.
struct SlotDraws {
    arrival: u64,
    pu_gain: u64,
    access: Vec<u64>,
    own: Vec<u64>,
    pu_to_su: Vec<u64>,
    su_to_pu: Vec<u64>,
    cross: Vec<u64>,
}

impl SlotDraws {
    fn new(m: usize) -> Self {
        SlotDraws {
            arrival: 0,
            pu_gain: 0,
            access: vec![0; m],
            own: vec![0; m],
            pu_to_su: vec![0; m],
            su_to_pu: vec![0; m],
            cross: vec![0; m * m],
        }
    }

    fn fill(&mut self, s: &mut Streams) {
        self.arrival = s.arrival.next_u64();
        self.pu_gain = s.pu_gain.next_u64();
        for (d, st) in self.access.iter_mut().zip(&mut s.access) {
            *d = st.next_u64();
        }
        for (d, st) in self.own.iter_mut().zip(&mut s.own) {
            *d = st.next_u64();
        }
        for (d, st) in self.pu_to_su.iter_mut().zip(&mut s.pu_to_su) {
            *d = st.next_u64();
        }
        for (d, st) in self.su_to_pu.iter_mut().zip(&mut s.su_to_pu) {
            *d = st.next_u64();
        }
        for (d, st) in self.cross.iter_mut().zip(&mut s.cross) {
            if let Some(st) = st {
                *d = st.next_u64();
            }
        }
    }
}

/// One row of the optional per-slot trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    pub queue_len: u64,
    pub pu_tx: bool,
    pub n_su_tx: usize,
    pub pu_ack: bool,
    /// Bit `j` set iff SU `j` was decoded.
    pub su_acks: u64,
}

pub const TRACE_HEADER: [&str; 6] = ["slot", "Q_p", "pu_tx", "n_su_tx", "pu_ack", "su_acks"];

pub fn simulate_network(config: &SimConfig) -> SimResult {
    run(config, |_| {})
}

/// Runs the simulation and writes one CSV row per slot (warmup included).
/// Requires `num_su <= 64` for the acknowledgement bitmask.
pub fn simulate_network_traced<W: Write>(config: &SimConfig, out: W) -> std::io::Result<SimResult> {
    if config.params.num_su > 64 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "per-slot trace supports at most 64 secondary users",
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    let mut err = None;
    let result = run(config, |r| {
        if err.is_some() {
            return;
        }
        let row = [
            r.slot.to_string(),
            r.queue_len.to_string(),
            u8::from(r.pu_tx).to_string(),
            r.n_su_tx.to_string(),
            u8::from(r.pu_ack).to_string(),
            r.su_acks.to_string(),
        ];
        if let Err(e) = w.write_record(&row) {
            err = Some(e);
        }
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    w.flush()?;
    Ok(result)
}

/// Runs independent simulations, returning results in input order.
pub fn simulate_many(configs: &[SimConfig], exec: Execution) -> Vec<SimResult> {
    map_indexed(configs.len(), exec, |i| simulate_network(&configs[i]))
}

fn run(config: &SimConfig, mut on_slot: impl FnMut(&SlotRecord)) -> SimResult {
    let p = &config.params;
    let pol = &config.policy;
    let m = p.num_su;
    let rates = model::link_rates(p);
    let n = config.n_slots;
    let warmup = config.warmup_slots.min(n.saturating_sub(1));
    let half = n / 2;

    let mut streams = Streams::new(config.seed, m);
    let mut draws = SlotDraws::new(m);
    let mut active = vec![false; m];
    let mut su_success = vec![0u64; m];

    let mut queue: u64 = 0;
    let mut counted = 0u64;
    let mut queue_sum = 0.0f64;
    let mut queue_max = 0u64;
    let mut empty_slots = 0u64;
    let mut pu_tx_count = 0u64;
    let mut pu_success = 0u64;
    let mut su_energy_density = 0.0f64;

    // Least-squares accumulators over the final half, with t relative to `half`.
    let (mut st, mut sq, mut stt, mut stq, mut sn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);

    for slot in 0..n {
        draws.fill(&mut streams);
        let pu_tx = queue > 0;
        let (a, gamma) = if pu_tx {
            (pol.a2(), pol.gamma2())
        } else {
            (pol.a1(), pol.gamma1())
        };
        let mut n_active = 0;
        for (on, &bits) in active.iter_mut().zip(&draws.access) {
            *on = open01(bits) < a;
            n_active += usize::from(*on);
        }

        let pu_ack = pu_tx && {
            let interference: f64 = (0..m)
                .filter(|&j| active[j])
                .map(|j| gamma * exponential_from_bits(draws.su_to_pu[j], p.delta_sp))
                .sum();
            let signal = p.gamma_p * exponential_from_bits(draws.pu_gain, p.delta_pp);
            signal > rates.rp_lin * (p.noise_n0 + interference)
        };

        let mut acks = 0u64;
        for j in (0..m).filter(|&j| active[j]) {
            let mut interference = 0.0;
            if pu_tx {
                interference += p.gamma_p * exponential_from_bits(draws.pu_to_su[j], p.delta_ps);
            }
            for i in (0..m).filter(|&i| i != j && active[i]) {
                interference += gamma * exponential_from_bits(draws.cross[i * m + j], p.delta_ss);
            }
            let signal = gamma * exponential_from_bits(draws.own[j], p.delta_ss);
            if signal > rates.rs_lin * (p.noise_n0 + interference) {
                if slot >= warmup {
                    su_success[j] += 1;
                }
                if j < 64 {
                    acks |= 1 << j;
                }
            }
        }

        on_slot(&SlotRecord {
            slot,
            queue_len: queue,
            pu_tx,
            n_su_tx: n_active,
            pu_ack,
            su_acks: acks,
        });

        if slot >= warmup {
            counted += 1;
            queue_sum += queue as f64;
            queue_max = queue_max.max(queue);
            empty_slots += u64::from(!pu_tx);
            pu_tx_count += u64::from(pu_tx);
            pu_success += u64::from(pu_ack);
            su_energy_density += gamma * n_active as f64;
        }
        if slot >= half {
            let t = (slot - half) as f64;
            let q = queue as f64;
            st += t;
            sq += q;
            stt += t * t;
            stq += t * q;
            sn += 1.0;
        }

        let arrival = open01(draws.arrival) < config.lambda_p;
        queue = queue - u64::from(pu_ack) + u64::from(arrival);
    }

    let c = counted.max(1) as f64;
    let per_su_mu_s: Vec<f64> = su_success.iter().map(|&s| s as f64 / c).collect();
    let denom = sn * stt - st * st;
    let queue_slope = if denom > 0.0 {
        (sn * stq - st * sq) / denom
    } else {
        0.0
    };
    SimResult {
        emp_mu_s: per_su_mu_s.iter().sum::<f64>() / m as f64,
        per_su_mu_s,
        emp_mu_p: if pu_tx_count > 0 {
            pu_success as f64 / pu_tx_count as f64
        } else {
            0.0
        },
        emp_pr_empty: empty_slots as f64 / c,
        mean_queue_len: queue_sum / c,
        max_queue_len: queue_max,
        emp_energy_su: su_energy_density * p.bandwidth_w * p.su_airtime() / (c * m as f64),
        emp_energy_pu: pu_tx_count as f64 * p.gamma_p * p.bandwidth_w * p.slot_t / c,
        slots_counted: counted,
        queue_slope,
        final_queue_len: queue,
    }
}

/// Simulates from an empty queue and reports whether the queue's growth over
/// the final half of the run stays within [`INSTABILITY_SLOPE`].
pub fn stability_probe(
    policy: &AccessPolicy,
    params: &SystemParams,
    lambda_p: f64,
    n_slots: u64,
    seed: u64,
) -> bool {
    stability_probe_with(policy, params, lambda_p, n_slots, seed, INSTABILITY_SLOPE)
}

pub fn stability_probe_with(
    policy: &AccessPolicy,
    params: &SystemParams,
    lambda_p: f64,
    n_slots: u64,
    seed: u64,
    slope_tolerance: f64,
) -> bool {
    let config = SimConfig {
        warmup_slots: 0,
        ..SimConfig::new(*params, *policy, lambda_p, n_slots, seed)
    };
    simulate_network(&config).queue_slope <= slope_tolerance
}
