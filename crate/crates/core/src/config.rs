//! Flat `key = value` configuration documents.
//!
//! One key per line, `#` comments, lists in brackets:
//!
//! ```text
//! # Fig. 4 style sweep
//! num_su_Ms = 3
//! lambda_grid = [0.1, 0.3, 0.5]
//! e_th_su_list = [1e-1, 5e-6, 1e-7]
//! modes = ["adaptive"]
//! ```
//!
//! Every key is optional; missing keys take the reference defaults. Values are
//! parsed with the TOML grammar (a superset of this format) and then checked
//! against the flat schema below.

use toml::{Table, Value};

use crate::error::{ConfigError, ModelError};
use crate::optimizer::{ModeKind, DEFAULT_STARTS};
use crate::params::{AccessPolicy, Constraints, SystemParams, REFERENCE_GAMMA1, REFERENCE_GAMMA2};
use crate::sweep::SweepSpec;

/// Everything a configuration document can set.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: SystemParams,
    pub constraints: Constraints,
    pub sweep: SweepSpec,
    /// Policy used by `eval` and `simulate`.
    pub policy: AccessPolicy,
    /// `None` means 10% of the run.
    pub warmup_slots: Option<u64>,
    pub verify_samples: u64,
}

pub const DEFAULT_LAMBDA_P: f64 = 0.3;
pub const DEFAULT_SIM_SLOTS: u64 = 1_000_000;
pub const DEFAULT_VERIFY_SAMPLES: u64 = 1_000_000;

/// Default arrival grid: 0.0, 0.05, ..., 0.9.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=18).map(|i| i as f64 / 20.0).collect()
}

impl Default for Config {
    fn default() -> Self {
        let params = SystemParams::reference();
        let constraints = Constraints::reference(DEFAULT_LAMBDA_P);
        Config {
            params,
            constraints,
            sweep: SweepSpec {
                lambda_grid: default_lambda_grid(),
                ms_list: vec![params.num_su],
                e_th_su_list: vec![constraints.e_th_su],
                modes: vec![ModeKind::Adaptive],
                n_starts: DEFAULT_STARTS,
                seed: 0,
                sim_validate: false,
                sim_slots: DEFAULT_SIM_SLOTS,
                sim_warmup: None,
                gamma1_fixed: REFERENCE_GAMMA1,
                gamma2_fixed: REFERENCE_GAMMA2,
            },
            policy: AccessPolicy::new(0.8, 0.3, REFERENCE_GAMMA1, REFERENCE_GAMMA2)
                .expect("valid default policy"),
            warmup_slots: None,
            verify_samples: DEFAULT_VERIFY_SAMPLES,
        }
    }
}

const KEYS: &[&str] = &[
    "slot_T",
    "sense_tau",
    "packet_bits",
    "bandwidth_W",
    "noise_N0",
    "delta_ss",
    "delta_pp",
    "delta_ps",
    "delta_sp",
    "gamma_p",
    "num_su_Ms",
    "lambda_p",
    "e_th_su",
    "e_th_pu",
    "gamma_max",
    "a1",
    "a2",
    "gamma1",
    "gamma2",
    "gamma1_fixed",
    "gamma2_fixed",
    "lambda_grid",
    "ms_list",
    "e_th_su_list",
    "modes",
    "n_starts",
    "seed",
    "sim_validate",
    "sim_slots",
    "warmup_slots",
    "verify_samples",
];

struct Doc<'a> {
    text: &'a str,
    table: Table,
}

impl Doc<'_> {
    fn line_of(&self, key: &str) -> Option<usize> {
        self.text
            .lines()
            .position(|l| {
                let l = l.trim_start();
                l.strip_prefix(key)
                    .is_some_and(|rest| rest.trim_start().starts_with('='))
            })
            .map(|i| i + 1)
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: Some(key.to_string()),
            line: self.line_of(key),
            message: message.into(),
        }
    }

    fn f64(&self, key: &str, slot: &mut f64) -> Result<(), ConfigError> {
        if let Some(v) = self.table.get(key) {
            *slot = as_f64(v).ok_or_else(|| {
                self.error(key, format!("expected a number, got {}", v.type_str()))
            })?;
        }
        Ok(())
    }

    fn u64(&self, key: &str, slot: &mut u64) -> Result<(), ConfigError> {
        if let Some(v) = self.table.get(key) {
            *slot = as_u64(v).ok_or_else(|| {
                self.error(key, format!("expected a non-negative integer, got {v}"))
            })?;
        }
        Ok(())
    }

    fn usize(&self, key: &str, slot: &mut usize) -> Result<(), ConfigError> {
        let mut v = *slot as u64;
        self.u64(key, &mut v)?;
        *slot = v as usize;
        Ok(())
    }

    fn bool(&self, key: &str, slot: &mut bool) -> Result<(), ConfigError> {
        if let Some(v) = self.table.get(key) {
            *slot = v.as_bool().ok_or_else(|| {
                self.error(key, format!("expected true or false, got {}", v.type_str()))
            })?;
        }
        Ok(())
    }

    fn list<T>(
        &self,
        key: &str,
        slot: &mut Vec<T>,
        item: impl Fn(&Value) -> Option<T>,
        what: &str,
    ) -> Result<(), ConfigError> {
        if let Some(v) = self.table.get(key) {
            let arr = v
                .as_array()
                .ok_or_else(|| self.error(key, format!("expected a list, got {}", v.type_str())))?;
            *slot = arr
                .iter()
                .map(|x| {
                    item(x).ok_or_else(|| {
                        self.error(key, format!("expected a list of {what}, found {x}"))
                    })
                })
                .collect::<Result<_, _>>()?;
        }
        Ok(())
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_u64(v: &Value) -> Option<u64> {
    v.as_integer().and_then(|i| u64::try_from(i).ok())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let table: Table = toml::from_str(text).map_err(|e| ConfigError {
        key: None,
        line: e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
        message: e.message().trim().to_string(),
    })?;
    let doc = Doc { text, table };

    for (key, value) in &doc.table {
        if !KEYS.contains(&key.as_str()) {
            return Err(doc.error(key, "unknown key"));
        }
        if value.is_table() {
            return Err(doc.error(key, "nested tables are not supported"));
        }
    }

    let mut cfg = Config::default();
    let p = &mut cfg.params;
    doc.f64("slot_T", &mut p.slot_t)?;
    doc.f64("sense_tau", &mut p.sense_tau)?;
    doc.f64("packet_bits", &mut p.packet_bits)?;
    doc.f64("bandwidth_W", &mut p.bandwidth_w)?;
    doc.f64("noise_N0", &mut p.noise_n0)?;
    doc.f64("delta_ss", &mut p.delta_ss)?;
    doc.f64("delta_pp", &mut p.delta_pp)?;
    doc.f64("delta_ps", &mut p.delta_ps)?;
    doc.f64("delta_sp", &mut p.delta_sp)?;
    doc.f64("gamma_p", &mut p.gamma_p)?;
    doc.usize("num_su_Ms", &mut p.num_su)?;
    p.validate().map_err(|e| match e {
        ModelError::InvalidParams { field, reason } => doc.error(field, reason),
        other => ConfigError {
            key: None,
            line: None,
            message: other.to_string(),
        },
    })?;

    let c = &mut cfg.constraints;
    doc.f64("lambda_p", &mut c.lambda_p)?;
    doc.f64("e_th_su", &mut c.e_th_su)?;
    doc.f64("e_th_pu", &mut c.e_th_pu)?;
    doc.f64("gamma_max", &mut c.gamma_max)?;
    for (key, v) in [
        ("lambda_p", c.lambda_p),
        ("e_th_su", c.e_th_su),
        ("e_th_pu", c.e_th_pu),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(doc.error(key, "must be finite and >= 0"));
        }
    }
    if c.lambda_p > 1.0 {
        return Err(doc.error("lambda_p", "must lie in [0, 1]"));
    }
    if !(c.gamma_max.is_finite() && c.gamma_max > 0.0) {
        return Err(doc.error("gamma_max", "must be finite and > 0"));
    }

    let (mut a1, mut a2, mut g1, mut g2) = (
        cfg.policy.a1(),
        cfg.policy.a2(),
        cfg.policy.gamma1(),
        cfg.policy.gamma2(),
    );
    doc.f64("a1", &mut a1)?;
    doc.f64("a2", &mut a2)?;
    doc.f64("gamma1", &mut g1)?;
    doc.f64("gamma2", &mut g2)?;
    cfg.policy = AccessPolicy::new(a1, a2, g1, g2).map_err(|e| {
        let key = ["a2", "a1", "gamma1", "gamma2"]
            .into_iter()
            .find(|k| doc.table.contains_key(*k))
            .unwrap_or("a1");
        doc.error(key, e.to_string())
    })?;

    let s = &mut cfg.sweep;
    s.e_th_su_list = vec![cfg.constraints.e_th_su];
    s.ms_list = vec![cfg.params.num_su];
    doc.f64("gamma1_fixed", &mut s.gamma1_fixed)?;
    doc.f64("gamma2_fixed", &mut s.gamma2_fixed)?;
    for (key, v) in [
        ("gamma1_fixed", s.gamma1_fixed),
        ("gamma2_fixed", s.gamma2_fixed),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(doc.error(key, "must be finite and >= 0"));
        }
    }
    doc.list("lambda_grid", &mut s.lambda_grid, as_f64, "numbers")?;
    doc.list(
        "ms_list",
        &mut s.ms_list,
        |v| as_u64(v).map(|u| u as usize),
        "positive integers",
    )?;
    doc.list("e_th_su_list", &mut s.e_th_su_list, as_f64, "numbers")?;
    doc.list(
        "modes",
        &mut s.modes,
        |v| v.as_str().and_then(ModeKind::parse),
        "modes (adaptive, fixed, conventional)",
    )?;
    doc.usize("n_starts", &mut s.n_starts)?;
    doc.u64("seed", &mut s.seed)?;
    doc.bool("sim_validate", &mut s.sim_validate)?;
    doc.u64("sim_slots", &mut s.sim_slots)?;

    if s.lambda_grid.is_empty() || s.lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(doc.error(
            "lambda_grid",
            "must be a non-empty list of values in [0, 1]",
        ));
    }
    if s.ms_list.is_empty() || s.ms_list.contains(&0) {
        return Err(doc.error("ms_list", "must be a non-empty list of counts >= 1"));
    }
    if s.e_th_su_list.is_empty() || s.e_th_su_list.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(doc.error("e_th_su_list", "must be a non-empty list of values >= 0"));
    }
    if s.modes.is_empty() {
        return Err(doc.error("modes", "must name at least one mode"));
    }
    if s.n_starts == 0 {
        return Err(doc.error("n_starts", "must be >= 1"));
    }
    if s.sim_slots == 0 {
        return Err(doc.error("sim_slots", "must be >= 1"));
    }

    if doc.table.contains_key("warmup_slots") {
        let mut w = 0;
        doc.u64("warmup_slots", &mut w)?;
        if w >= cfg.sweep.sim_slots {
            return Err(doc.error("warmup_slots", "must be < sim_slots"));
        }
        cfg.warmup_slots = Some(w);
        cfg.sweep.sim_warmup = Some(w);
    }
    doc.u64("verify_samples", &mut cfg.verify_samples)?;
    if cfg.verify_samples == 0 {
        return Err(doc.error("verify_samples", "must be >= 1"));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.params, SystemParams::reference());
        assert_eq!(cfg.params.num_su, 3);
        assert_eq!(cfg.params.gamma_p, 1e-10);
        assert_eq!(cfg.constraints.e_th_su, 5e-5);
        assert_eq!(cfg.constraints.e_th_pu, 1e-3);
        assert_eq!(cfg.sweep.lambda_grid.len(), 19);
        assert_eq!(cfg.sweep.lambda_grid[0], 0.0);
        assert_eq!(cfg.sweep.lambda_grid[1], 0.05);
        assert_eq!(cfg.sweep.lambda_grid[18], 0.9);
        assert_eq!(cfg.sweep.ms_list, vec![3]);
        assert_eq!(cfg.sweep.n_starts, 1000);
        assert_eq!(cfg.sweep.gamma1_fixed, 2e-10);
        assert_eq!(cfg.sweep.gamma2_fixed, 1e-10);
    }

    #[test]
    fn comments_and_lists() {
        let text = "# energy sweep\nnum_su_Ms = 5 # five users\ne_th_su_list = [1e-1, 5e-6, 1e-7]\nmodes = [\"adaptive\", \"conventional\"]\nlambda_grid = [0, 0.5]\nsim_validate = true\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.params.num_su, 5);
        assert_eq!(cfg.sweep.ms_list, vec![5]);
        assert_eq!(cfg.sweep.e_th_su_list, vec![1e-1, 5e-6, 1e-7]);
        assert_eq!(
            cfg.sweep.modes,
            vec![ModeKind::Adaptive, ModeKind::Conventional]
        );
        assert_eq!(cfg.sweep.lambda_grid, vec![0.0, 0.5]);
        assert!(cfg.sweep.sim_validate);
    }

    #[test]
    fn sensing_longer_than_slot() {
        let err = parse_config("slot_T = 1e-3\nsense_tau = 2e-3\n").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("sense_tau"));
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("sense_tau < slot_T"), "{err}");
    }

    #[test]
    fn unknown_key_named_with_line() {
        let err = parse_config("a1 = 0.5\n\nbogus = 3\n").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("bogus"));
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn type_mismatch() {
        let err = parse_config("num_su_Ms = 2.5").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("num_su_Ms"));
        let err = parse_config("lambda_grid = 0.3").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("lambda_grid"));
        let err = parse_config("modes = [\"greedy\"]").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("modes"));
        let err = parse_config("sim_validate = 1").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("sim_validate"));
    }

    #[test]
    fn invariant_violations() {
        assert_eq!(
            parse_config("lambda_grid = [0.2, 1.5]")
                .unwrap_err()
                .key
                .as_deref(),
            Some("lambda_grid")
        );
        assert_eq!(
            parse_config("lambda_grid = []").unwrap_err().key.as_deref(),
            Some("lambda_grid")
        );
        assert_eq!(
            parse_config("ms_list = [0]").unwrap_err().key.as_deref(),
            Some("ms_list")
        );
        assert_eq!(
            parse_config("a1 = 0.2\na2 = 0.5")
                .unwrap_err()
                .key
                .as_deref(),
            Some("a2")
        );
        assert_eq!(
            parse_config("gamma_max = 0").unwrap_err().key.as_deref(),
            Some("gamma_max")
        );
        assert_eq!(
            parse_config("num_su_Ms = 0").unwrap_err().key.as_deref(),
            Some("num_su_Ms")
        );
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config("a1 = 0.5\na2 = = 0.1\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }
}
