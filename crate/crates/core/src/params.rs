//! Physical, protocol and policy types shared by every module.

use crate::error::ModelError;

/// Physical and protocol constants of the shared channel.
///
/// Powers are spectral densities (Watts/Hz); the `delta_*` fields are the
/// rates of the exponential channel power gains, so a gain has mean `1/delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Slot length in seconds.
    pub slot_t: f64,
    /// Sensing interval at the start of each slot, seconds.
    pub sense_tau: f64,
    /// Packet length in bits.
    pub packet_bits: f64,
    /// Channel bandwidth in Hz.
    pub bandwidth_w: f64,
    /// Noise power spectral density, Watts/Hz.
    pub noise_n0: f64,
    /// SU transmitter to its own destination.
    pub delta_ss: f64,
    /// PU transmitter to the primary destination.
    pub delta_pp: f64,
    /// PU transmitter to an SU destination.
    pub delta_ps: f64,
    /// SU transmitter to the primary destination.
    pub delta_sp: f64,
    /// PU transmit power density, Watts/Hz.
    pub gamma_p: f64,
    /// Number of secondary users.
    pub num_su: usize,
}

impl SystemParams {
    /// Reference operating point: slot 1 ms, 10% sensing, 10 kbit packets,
    /// 10 MHz, three secondary users.
    pub fn reference() -> Self {
        SystemParams {
            slot_t: 1e-3,
            sense_tau: 1e-4,
            packet_bits: 10_000.0,
            bandwidth_w: 1e7,
            noise_n0: 1e-11,
            delta_ss: 2.0,
            delta_pp: 1.0,
            delta_ps: 2.0,
            delta_sp: 3.0,
            gamma_p: 1e-10,
            num_su: 3,
        }
    }

    pub fn with_num_su(mut self, num_su: usize) -> Self {
        self.num_su = num_su;
        self
    }

    /// Checks the parameter invariants. Zero noise and zero-length packets
    /// are accepted as limiting cases.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |field: &'static str, reason: &str| {
            Err(ModelError::InvalidParams {
                field,
                reason: reason.to_string(),
            })
        };
        let positive = [
            ("slot_T", self.slot_t),
            ("bandwidth_W", self.bandwidth_w),
            ("delta_ss", self.delta_ss),
            ("delta_pp", self.delta_pp),
            ("delta_ps", self.delta_ps),
            ("delta_sp", self.delta_sp),
            ("gamma_p", self.gamma_p),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, "must be finite and > 0");
            }
        }
        if !(self.sense_tau.is_finite() && self.sense_tau > 0.0) {
            return bad("sense_tau", "must be finite and > 0");
        }
        if self.sense_tau >= self.slot_t {
            return bad("sense_tau", "must satisfy sense_tau < slot_T");
        }
        if !(self.packet_bits.is_finite() && self.packet_bits >= 0.0) {
            return bad("packet_bits", "must be finite and >= 0");
        }
        if !(self.noise_n0.is_finite() && self.noise_n0 >= 0.0) {
            return bad("noise_N0", "must be finite and >= 0");
        }
        if self.num_su == 0 {
            return bad("num_su_Ms", "must be >= 1");
        }
        Ok(())
    }

    /// Transmission time available to a secondary packet.
    pub fn su_airtime(&self) -> f64 {
        self.slot_t - self.sense_tau
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Access probabilities and power densities of a (symmetric) secondary user,
/// keyed to the sensed primary state: index 1 when idle, 2 when busy.
///
/// Invariant: `0 <= a2 <= a1 <= 1` and both powers are finite and `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessPolicy {
    a1: f64,
    a2: f64,
    gamma1: f64,
    gamma2: f64,
}

impl AccessPolicy {
    pub fn new(a1: f64, a2: f64, gamma1: f64, gamma2: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&a1) || !(0.0..=1.0).contains(&a2) {
            return Err(ModelError::InvalidPolicy(format!(
                "access probabilities must lie in [0, 1], got a1 = {a1}, a2 = {a2}"
            )));
        }
        if a2 > a1 {
            return Err(ModelError::InvalidPolicy(format!(
                "a2 = {a2} exceeds a1 = {a1}"
            )));
        }
        if !(gamma1.is_finite() && gamma1 >= 0.0 && gamma2.is_finite() && gamma2 >= 0.0) {
            return Err(ModelError::InvalidPolicy(format!(
                "powers must be finite and >= 0, got gamma1 = {gamma1}, gamma2 = {gamma2}"
            )));
        }
        Ok(AccessPolicy {
            a1,
            a2,
            gamma1,
            gamma2,
        })
    }

    /// Secondary users never transmit.
    pub fn silent() -> Self {
        AccessPolicy {
            a1: 0.0,
            a2: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
        }
    }

    /// Clamps into the box and enforces `a2 <= a1`; non-finite inputs become 0.
    pub fn projected(a1: f64, a2: f64, gamma1: f64, gamma2: f64, gamma_max: f64) -> Self {
        let unit = |v: f64| {
            if v.is_finite() {
                v.clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        let power = |v: f64| {
            if v.is_finite() {
                v.clamp(0.0, gamma_max)
            } else {
                0.0
            }
        };
        let a1 = unit(a1);
        AccessPolicy {
            a1,
            a2: unit(a2).min(a1),
            gamma1: power(gamma1),
            gamma2: power(gamma2),
        }
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }
    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }
}

/// Spectral transmission rates and the matching linear SINR thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    /// Secondary rate in bits/s/Hz; pays the sensing penalty.
    pub rs_spectral: f64,
    /// Primary rate in bits/s/Hz.
    pub rp_spectral: f64,
    /// `2^rs_spectral - 1`
    pub rs_lin: f64,
    /// `2^rp_spectral - 1`
    pub rp_lin: f64,
}

/// Constraint set of the throughput maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    /// Primary arrival rate, packets/slot.
    pub lambda_p: f64,
    /// Cap on average SU transmit energy per slot, Joules.
    pub e_th_su: f64,
    /// Cap on average PU transmit energy per slot, Joules.
    pub e_th_pu: f64,
    /// Upper bound of the search box for both power densities, Watts/Hz.
    pub gamma_max: f64,
}

impl Constraints {
    pub const DEFAULT_GAMMA_MAX: f64 = 1e-8;

    pub fn reference(lambda_p: f64) -> Self {
        Constraints {
            lambda_p,
            e_th_su: 5e-5,
            e_th_pu: 1e-3,
            gamma_max: Self::DEFAULT_GAMMA_MAX,
        }
    }

    pub fn with_e_th_su(mut self, e_th_su: f64) -> Self {
        self.e_th_su = e_th_su;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("lambda_p", self.lambda_p),
            ("e_th_su", self.e_th_su),
            ("e_th_pu", self.e_th_pu),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::InvalidConstraints(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.gamma_max.is_finite() && self.gamma_max > 0.0) {
            return Err(ModelError::InvalidConstraints(format!(
                "gamma_max must be finite and > 0, got {}",
                self.gamma_max
            )));
        }
        Ok(())
    }
}

/// Reference fixed powers used by the fixed-power and conventional baselines.
pub const REFERENCE_GAMMA1: f64 = 2e-10;
pub const REFERENCE_GAMMA2: f64 = 1e-10;
