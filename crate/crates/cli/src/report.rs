//! Tables and summaries written next to each run.

use std::fmt::Write;

use ringform::analysis::{
    self, check_bounds, classify, BoundCheckReport, FormationClass, CLASSIFY_TOL,
};
use ringform::dynamics::{SimConfig, StopReason, Trajectory};
use ringform::linearization::{
    classify_equilibrium, EquilibriumSpectrum, DEFAULT_ZERO_TOL, EQUILIBRIUM_TOL,
};
use ringform::topology::RingGraph;
use serde::Serialize;

/// Fixed-width scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per recorded step: `t`, every `psi`, every `phi`, `W`, `V`, every `|ω|`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.records[0].state.n();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("psi_{i}_rad")));
    header.extend((1..=n).map(|i| format!("phi_{i}_rad")));
    header.push("W_rad".into());
    header.push("V".into());
    header.extend((1..=n).map(|i| format!("omega_{i}_norm")));

    let mut out = header.join(",");
    out.push('\n');
    for r in &traj.records {
        let angles = r.state.to_angles();
        let mut row = vec![num(r.t)];
        row.extend(angles.iter().map(|a| num(a.psi)));
        row.extend(angles.iter().map(|a| num(a.phi)));
        row.push(num(r.w));
        row.push(num(r.v));
        row.extend(r.omega_norms.iter().map(|&w| num(w)));
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub config: SimConfig,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub final_time: f64,
    pub class: FormationClass,
    pub final_w: f64,
    pub final_v: f64,
    /// Earliest recorded time after which `W` stays within the
    /// classification tolerance of its final value.
    pub convergence_time: f64,
    pub mean_omega: f64,
    pub max_omega: f64,
    pub bounds: Vec<BoundCheckReport>,
    /// Present when the ring is undirected and the final state is an equilibrium.
    pub spectrum: Option<EquilibriumSpectrum>,
}

impl SimulationSummary {
    pub fn new(cfg: &SimConfig, g: &RingGraph, traj: &Trajectory) -> Self {
        let last = traj.last();
        let state = &last.state;
        let final_w = analysis::w(state);
        let convergence_time = traj
            .records
            .iter()
            .rposition(|r| (r.w - final_w).abs() >= CLASSIFY_TOL)
            .map_or(traj.records[0].t, |k| {
                traj.records[(k + 1).min(traj.records.len() - 1)].t
            });
        let omega = &last.omega_norms;
        let spectrum = (!cfg.directed
            && analysis::equilibrium_residual(state, g) <= EQUILIBRIUM_TOL)
            .then(|| classify_equilibrium(state, g, DEFAULT_ZERO_TOL).ok())
            .flatten();
        Self {
            config: cfg.clone(),
            stop_reason: traj.stop,
            steps: traj.steps,
            final_time: last.t,
            class: classify(state, g, omega, CLASSIFY_TOL),
            final_w,
            final_v: analysis::v(state),
            convergence_time,
            mean_omega: omega.iter().sum::<f64>() / omega.len() as f64,
            max_omega: omega.iter().copied().fold(0.0, f64::max),
            bounds: if state.n() >= 3 {
                check_bounds(state)
            } else {
                Vec::new()
            },
            spectrum,
        }
    }
}

pub fn bound_rows_header() -> &'static str {
    "sample,seed,bound,lhs,rhs,slack,applicable,holds,nu\n"
}

pub fn bound_row(sample: usize, seed: u64, r: &BoundCheckReport) -> String {
    format!(
        "{sample},{seed},{},{},{},{},{},{},{}\n",
        r.name.name(),
        num(r.lhs),
        num(r.rhs),
        num(r.slack),
        r.applicable,
        r.holds,
        r.nu.map_or(String::new(), num)
    )
}
