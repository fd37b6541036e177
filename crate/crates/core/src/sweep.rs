//! Grid sweeps over arrival rate, user count, energy cap and solver mode,
//! emitted as CSV.

use std::io::Write;

use crate::model::{self, ThroughputReport};
use crate::optimizer::{self, ModeKind, OptimizeError, SolveMode, SolverOptions};
use crate::oracle::{simulate_network, SimConfig};
use crate::parallel::{map_indexed, Execution};
use crate::params::{AccessPolicy, Constraints, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lambda_grid: Vec<f64>,
    pub ms_list: Vec<usize>,
    pub e_th_su_list: Vec<f64>,
    pub modes: Vec<ModeKind>,
    pub n_starts: usize,
    pub seed: u64,
    /// Cross-check every optimum with the slot simulator.
    pub sim_validate: bool,
    pub sim_slots: u64,
    /// `None` means 10% of `sim_slots`.
    pub sim_warmup: Option<u64>,
    /// Powers used by the `fixed` mode; `conventional` uses `gamma1_fixed`.
    pub gamma1_fixed: f64,
    pub gamma2_fixed: f64,
}

pub const CSV_HEADER: [&str; 15] = [
    "lambda_p",
    "ms",
    "e_th_su",
    "mode",
    "a1",
    "a2",
    "gamma1",
    "gamma2",
    "mu_s_analytic",
    "mu_p",
    "e_su",
    "e_pu",
    "feasible",
    "mu_s_sim",
    "sim_rel_err",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub lambda_p: f64,
    pub ms: usize,
    pub e_th_su: f64,
    pub mode: ModeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    /// The optimum and its analytic evaluation; `None` when no policy is feasible.
    pub optimum: Option<(AccessPolicy, ThroughputReport)>,
    pub mu_s_sim: Option<f64>,
}

impl SweepRow {
    pub fn feasible(&self) -> bool {
        self.optimum.as_ref().is_some_and(|(_, r)| r.feasible())
    }

    pub fn mu_s(&self) -> Option<f64> {
        self.optimum.as_ref().map(|(_, r)| r.mu_s)
    }

    /// Relative gap between simulated and analytic throughput (undefined when
    /// the analytic value is 0).
    pub fn sim_rel_err(&self) -> Option<f64> {
        let an = self.mu_s()?;
        let sim = self.mu_s_sim?;
        (an > 0.0).then(|| (sim - an).abs() / an)
    }
}

impl SweepSpec {
    /// Grid points in emission order: lambda outermost, then user count,
    /// energy cap and mode.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &lambda_p in &self.lambda_grid {
            for &ms in &self.ms_list {
                for &e_th_su in &self.e_th_su_list {
                    for &mode in &self.modes {
                        out.push(SweepPoint {
                            lambda_p,
                            ms,
                            e_th_su,
                            mode,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn solve_mode(&self, kind: ModeKind) -> SolveMode {
        match kind {
            ModeKind::Adaptive => SolveMode::Adaptive,
            ModeKind::Fixed => SolveMode::FixedPower {
                gamma1: self.gamma1_fixed,
                gamma2: self.gamma2_fixed,
            },
            ModeKind::Conventional => SolveMode::Conventional {
                gamma1: self.gamma1_fixed,
            },
        }
    }
}

/// Solves every grid point. `params.num_su` and the constraint's `lambda_p`
/// and `e_th_su` are overridden per point; everything else is shared.
pub fn run_sweep(
    spec: &SweepSpec,
    params: &SystemParams,
    constraints: &Constraints,
    exec: Execution,
) -> Result<Vec<SweepRow>, OptimizeError> {
    params.validate()?;
    let points = spec.points();
    let rows = map_indexed(points.len(), exec, |i| {
        solve_point(spec, params, constraints, &points[i], exec)
    });
    rows.into_iter().collect()
}

fn solve_point(
    spec: &SweepSpec,
    params: &SystemParams,
    constraints: &Constraints,
    point: &SweepPoint,
    exec: Execution,
) -> Result<SweepRow, OptimizeError> {
    let params = params.with_num_su(point.ms);
    let constraints = Constraints {
        lambda_p: point.lambda_p,
        e_th_su: point.e_th_su,
        ..*constraints
    };
    let mut opts = SolverOptions::new(spec.n_starts, spec.seed);
    opts.exec = exec;
    let optimum = match optimizer::solve(&params, &constraints, spec.solve_mode(point.mode), &opts)
    {
        Ok(rep) => {
            let report = model::evaluate(&rep.best_policy, &params, &constraints);
            Some((rep.best_policy, report))
        }
        Err(OptimizeError::GloballyInfeasible(_)) => None,
        Err(e) => return Err(e),
    };
    let mu_s_sim = match &optimum {
        Some((policy, _)) if spec.sim_validate => {
            let mut cfg =
                SimConfig::new(params, *policy, point.lambda_p, spec.sim_slots, spec.seed);
            if let Some(w) = spec.sim_warmup {
                cfg.warmup_slots = w;
            }
            Some(simulate_network(&cfg).emp_mu_s)
        }
        _ => None,
    };
    Ok(SweepRow {
        point: point.clone(),
        optimum,
        mu_s_sim,
    })
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for row in rows {
        let p = &row.point;
        let mut rec = vec![
            fmt_f64(p.lambda_p),
            p.ms.to_string(),
            fmt_f64(p.e_th_su),
            p.mode.name().to_string(),
        ];
        match &row.optimum {
            Some((pol, rep)) => rec.extend(
                [
                    pol.a1(),
                    pol.a2(),
                    pol.gamma1(),
                    pol.gamma2(),
                    rep.mu_s,
                    rep.mu_p,
                    rep.energy_su,
                    rep.energy_pu,
                ]
                .map(fmt_f64),
            ),
            None => rec.extend(std::iter::repeat_n(String::new(), 8)),
        }
        rec.push(row.feasible().to_string());
        rec.push(opt(row.mu_s_sim));
        rec.push(opt(row.sim_rel_err()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
