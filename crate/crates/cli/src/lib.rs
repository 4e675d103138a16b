//! Experiment runner behind the `ringform` binary.

pub mod config;
pub mod plot;
pub mod report;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use ringform::analysis::{check_bounds_with, BoundKind, FormationKind};
use ringform::dynamics::{random_state, simulate, SamplingConstraint, SimConfig, Trajectory};
use ringform::linearization::{classify_equilibrium, make_equispaced_circle, EquilibriumSpectrum};
use ringform::sphere_geom::Vec3;
use ringform::topology::RingGraph;
use ringform::FormationError;
use serde::Serialize;

pub use config::{AuditConfig, EquilibriumConfig, ExperimentSpec, Parity, Verb};
use report::{num, SimulationSummary};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Errors raised while running an already validated experiment.
fn run_error(e: FormationError) -> CliError {
    match e {
        FormationError::Config(m) => CliError::Config(m),
        other => CliError::Numerical(other.to_string()),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

/// Runs `spec`, writing its files into `out`. Progress goes to stdout unless `quiet`.
pub fn run(spec: &ExperimentSpec, out: &Path, quiet: bool) -> Result<(), CliError> {
    spec.validate()?;
    create_dir(out)?;
    let say = |line: String| {
        if !quiet {
            println!("{line}");
        }
    };
    match spec {
        ExperimentSpec::Simulate(cfg) => {
            let summary = run_simulation(cfg, out)?;
            say(format!(
                "{}: {:?} (residual {:.3e}), W = {:.6}, mean |omega| = {:.6}, stopped at t = {} ({:?})",
                out.display(),
                summary.class.kind,
                summary.class.residual,
                summary.final_w,
                summary.mean_omega,
                summary.final_time,
                summary.stop_reason
            ));
        }
        ExperimentSpec::Sweep { template, seeds } => {
            let summaries = run_sweep(template, seeds.clone(), out)?;
            let mut counts: Vec<(FormationKind, usize)> = Vec::new();
            for s in &summaries {
                match counts.iter_mut().find(|(k, _)| *k == s.class.kind) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((s.class.kind, 1)),
                }
            }
            let tally: Vec<String> = counts.iter().map(|(k, c)| format!("{k:?} {c}")).collect();
            say(format!(
                "{}: {} runs, {}",
                out.display(),
                summaries.len(),
                tally.join(", ")
            ));
        }
        ExperimentSpec::ClassifyEquilibrium(cfg) => {
            let spectrum = run_classify(cfg, out)?;
            say(format!(
                "{}: {:?}, zero {} negative {} positive {}",
                out.display(),
                spectrum.verdict,
                spectrum.n_zero(),
                spectrum.n_negative(),
                spectrum.n_positive()
            ));
        }
        ExperimentSpec::BoundAudit(cfg) => {
            let audit = run_audit(cfg, out)?;
            for b in &audit.bounds {
                say(format!(
                    "{:<28} applicable {:>5}  violations {:>3}  min slack {}",
                    b.name.name(),
                    b.applicable,
                    b.violations,
                    b.min_slack.map_or("-".into(), |s| format!("{s:.3e}"))
                ));
            }
            if !audit.all_hold {
                return Err(CliError::Numerical(format!(
                    "bound violations recorded in {}",
                    out.join("bounds.csv").display()
                )));
            }
        }
    }
    Ok(())
}

fn check_finite(traj: &Trajectory) -> Result<(), CliError> {
    for r in &traj.records {
        let finite = r.w.is_finite()
            && r.v.is_finite()
            && r.omega_norms.iter().all(|w| w.is_finite())
            && r.state
                .iter()
                .all(|p| p.vector().iter().all(|c| c.is_finite()));
        if !finite {
            return Err(CliError::Numerical(format!(
                "non-finite state at t = {}",
                r.t
            )));
        }
    }
    Ok(())
}

/// Simulates `cfg` and writes `trajectory.csv`, `summary.json` and `paths.svg` into `out`.
pub fn run_simulation(cfg: &SimConfig, out: &Path) -> Result<SimulationSummary, CliError> {
    create_dir(out)?;
    let g = cfg.graph().map_err(run_error)?;
    let traj = simulate(cfg).map_err(run_error)?;
    check_finite(&traj)?;
    let summary = SimulationSummary::new(cfg, &g, &traj);
    write_file(&out.join("trajectory.csv"), &report::trajectory_csv(&traj))?;
    write_json(&out.join("summary.json"), &summary)?;
    write_file(&out.join("paths.svg"), &plot::render_paths(&traj))?;
    Ok(summary)
}

/// Runs one simulation per seed in parallel, each into `seed_<k>/`, then
/// merges the results into `sweep.csv` in seed order.
pub fn run_sweep(
    template: &SimConfig,
    seeds: std::ops::Range<u64>,
    out: &Path,
) -> Result<Vec<SimulationSummary>, CliError> {
    create_dir(out)?;
    let results: Vec<Result<SimulationSummary, CliError>> = seeds
        .clone()
        .into_par_iter()
        .map(|seed| {
            let cfg = SimConfig {
                seed,
                ..template.clone()
            };
            run_simulation(&cfg, &out.join(format!("seed_{seed}")))
        })
        .collect();
    let summaries = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut table = String::from("seed,class,residual,final_w_rad,final_v,mean_omega,max_omega,convergence_time,stop_reason\n");
    for s in &summaries {
        table.push_str(&format!(
            "{},{:?},{},{},{},{},{},{},{:?}\n",
            s.config.seed,
            s.class.kind,
            num(s.class.residual),
            num(s.final_w),
            num(s.final_v),
            num(s.mean_omega),
            num(s.max_omega),
            num(s.convergence_time),
            s.stop_reason
        ));
    }
    write_file(&out.join("sweep.csv"), &table)?;
    Ok(summaries)
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSummary {
    pub config: EquilibriumConfig,
    pub spectrum: EquilibriumSpectrum,
}

/// Linearizes the equispaced equilibrium on the equator and writes `summary.json`.
pub fn run_classify(cfg: &EquilibriumConfig, out: &Path) -> Result<EquilibriumSpectrum, CliError> {
    create_dir(out)?;
    let g = RingGraph::undirected(cfg.n).map_err(|e| CliError::Config(e.to_string()))?;
    let state = make_equispaced_circle(cfg.n, cfg.alpha, &Vec3::z(), &Vec3::x())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let spectrum = classify_equilibrium(&state, &g, cfg.zero_tol).map_err(|e| match e {
        FormationError::NotEquilibrium { .. } => CliError::Config(format!(
            "alpha = {} does not give an equilibrium for n = {}: {e}",
            cfg.alpha, cfg.n
        )),
        other => run_error(other),
    })?;
    write_json(
        &out.join("summary.json"),
        &EquilibriumSummary {
            config: cfg.clone(),
            spectrum: spectrum.clone(),
        },
    )?;
    Ok(spectrum)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundTally {
    pub name: BoundKind,
    pub applicable: usize,
    pub violations: usize,
    /// Smallest slack over the samples where the bound applies.
    pub min_slack: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditSummary {
    pub config: AuditConfig,
    pub parity: Parity,
    pub bounds: Vec<BoundTally>,
    pub all_hold: bool,
}

/// Checks the bounds on `samples` random states drawn with seeds
/// `seed, seed + 1, …`. Writes `bounds.csv` and `summary.json`.
pub fn run_audit(cfg: &AuditConfig, out: &Path) -> Result<AuditSummary, CliError> {
    create_dir(out)?;
    let search = cfg.search();
    let rows: Vec<Result<(u64, Vec<_>), CliError>> = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let seed = cfg.seed.wrapping_add(k as u64);
            let state = random_state(cfg.n, seed, SamplingConstraint::None).map_err(run_error)?;
            Ok((seed, check_bounds_with(&state, &search)))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut table = String::from(report::bound_rows_header());
    let mut tallies: Vec<BoundTally> = Vec::new();
    for (k, (seed, reports)) in rows.iter().enumerate() {
        for r in reports {
            table.push_str(&report::bound_row(k, *seed, r));
            if !r.slack.is_finite() {
                return Err(CliError::Numerical(format!(
                    "non-finite slack for {} at seed {seed}",
                    r.name.name()
                )));
            }
            let tally = match tallies.iter_mut().position(|t| t.name == r.name) {
                Some(i) => &mut tallies[i],
                None => {
                    tallies.push(BoundTally {
                        name: r.name,
                        applicable: 0,
                        violations: 0,
                        min_slack: None,
                    });
                    tallies.last_mut().expect("just pushed")
                }
            };
            if r.applicable {
                tally.applicable += 1;
                tally.min_slack = Some(tally.min_slack.map_or(r.slack, |m| m.min(r.slack)));
            }
            if !r.holds {
                tally.violations += 1;
            }
        }
    }
    write_file(&out.join("bounds.csv"), &table)?;
    let summary = AuditSummary {
        config: cfg.clone(),
        parity: Parity::of(cfg.n),
        all_hold: tallies.iter().all(|t| t.violations == 0),
        bounds: tallies,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
