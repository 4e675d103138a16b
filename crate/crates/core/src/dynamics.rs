//! Closed-loop reduced-attitude dynamics over a ring.
//!
//! Each agent applies the angular velocity `ω_i = ∓ Σ_{j ∈ N_i} Γ_i × Γ_j`
//! and moves by `Γ̇_i = ω_i × Γ_i`. The minus sign (repulsive law) drives
//! neighbors apart; the plus sign is the classical consensus protocol.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;
use std::ops::Index;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::error::{FormationError, Result};
use crate::sphere_geom::{
    angles_to_vec, rotate, vec_to_angles, ReducedAttitude, SphereAngles, Vec3,
};
use crate::topology::RingGraph;

/// Angular speed below which an agent is considered at rest.
pub const STATIC_OMEGA_TOL: f64 = 1e-10;
/// Window, in steps, for detecting a rigidly rotating formation.
pub const STEADY_WINDOW: usize = 1000;
/// Rejection-sampling budget for constrained random states.
pub const SAMPLING_BUDGET: usize = 2_000_000;
/// Minimum distance of every latitude from the poles in [`rhs_angles`].
pub const POLE_MARGIN: f64 = 1e-6;

/// Point of `(S²)ⁿ`: one reduced attitude per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    attitudes: Vec<ReducedAttitude>,
}

impl SystemState {
    pub fn new(attitudes: Vec<ReducedAttitude>) -> Self {
        Self { attitudes }
    }

    pub fn from_angles(angles: &[SphereAngles]) -> Self {
        Self::new(angles.iter().map(angles_to_vec).collect())
    }

    /// Every agent at the same attitude.
    pub fn consensus(n: usize, v: ReducedAttitude) -> Self {
        Self::new(vec![v; n])
    }

    pub fn n(&self) -> usize {
        self.attitudes.len()
    }

    pub fn attitudes(&self) -> &[ReducedAttitude] {
        &self.attitudes
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ReducedAttitude> {
        self.attitudes.iter()
    }

    pub fn to_angles(&self) -> Vec<SphereAngles> {
        self.attitudes.iter().map(vec_to_angles).collect()
    }

    /// Applies the same rotation to every agent.
    pub fn rotated(&self, axis: &Vec3, angle: f64) -> Self {
        Self::new(
            self.attitudes
                .iter()
                .map(|p| rotate(p, axis, angle))
                .collect(),
        )
    }

    fn vectors(&self) -> Vec<Vec3> {
        self.attitudes.iter().map(|p| *p.vector()).collect()
    }
}

impl Index<usize> for SystemState {
    type Output = ReducedAttitude;

    fn index(&self, i: usize) -> &ReducedAttitude {
        &self.attitudes[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlLaw {
    /// `ω_i = -Σ Γ_i × Γ_j`: each agent moves away from its neighbors.
    Repulsive,
    /// `ω_i = +Σ Γ_i × Γ_j`: each agent moves toward its neighbors.
    Consensus,
}

impl ControlLaw {
    fn sign(self) -> f64 {
        match self {
            ControlLaw::Repulsive => -1.0,
            ControlLaw::Consensus => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Rotate each agent about its own `ω_i` by `|ω_i| dt`. Stays on the sphere exactly.
    #[default]
    Lie,
    /// Classical Runge–Kutta in ambient coordinates, renormalized after each step.
    Rk4,
}

fn check_consistent(n: usize, g: &RingGraph) {
    assert_eq!(n, g.n(), "state has {n} agents but the ring has {}", g.n());
}

fn omega_raw(x: &[Vec3], g: &RingGraph, law: ControlLaw) -> Vec<Vec3> {
    let sign = law.sign();
    (0..x.len())
        .map(|i| {
            let sum = g
                .neighbors(i)
                .into_iter()
                .fold(Vec3::zeros(), |acc, j| acc + x[i].cross(&x[j]));
            sum * sign
        })
        .collect()
}

fn field_raw(x: &[Vec3], g: &RingGraph, law: ControlLaw) -> Vec<Vec3> {
    omega_raw(x, g, law)
        .iter()
        .zip(x)
        .map(|(w, p)| w.cross(p))
        .collect()
}

/// Angular velocity of every agent under `law`.
pub fn control_omega(state: &SystemState, g: &RingGraph, law: ControlLaw) -> Vec<Vec3> {
    check_consistent(state.n(), g);
    omega_raw(&state.vectors(), g, law)
}

/// Tangent velocities `Γ̇_i = ω_i × Γ_i`.
pub fn rhs_cartesian(state: &SystemState, g: &RingGraph, law: ControlLaw) -> Vec<Vec3> {
    check_consistent(state.n(), g);
    field_raw(&state.vectors(), g, law)
}

/// The same closed loop written in `(psi, phi)` coordinates.
///
/// Returns `(psi_dot, phi_dot)` per agent. Refuses states within
/// [`POLE_MARGIN`] of a pole, where `psi` is not a coordinate.
pub fn rhs_angles(
    angles: &[SphereAngles],
    g: &RingGraph,
    law: ControlLaw,
) -> Result<Vec<(f64, f64)>> {
    check_consistent(angles.len(), g);
    if let Some((i, a)) = angles
        .iter()
        .enumerate()
        .find(|(_, a)| a.phi.abs() >= FRAC_PI_2 - POLE_MARGIN)
    {
        return Err(FormationError::Domain(format!(
            "agent {} has latitude {} too close to a pole for angle coordinates",
            i + 1,
            a.phi
        )));
    }
    // the repulsive law is the reference orientation; consensus flips every term
    let sign = -law.sign();
    Ok((0..angles.len())
        .map(|i| {
            let (psi_i, phi_i) = (angles[i].psi, angles[i].phi);
            let (s_i, c_i) = phi_i.sin_cos();
            let mut psi_acc = 0.0;
            let mut phi_acc = 0.0;
            for j in g.neighbors(i) {
                let (psi_j, phi_j) = (angles[j].psi, angles[j].phi);
                let (s_j, c_j) = phi_j.sin_cos();
                psi_acc -= (psi_j - psi_i).sin() * c_j;
                phi_acc += s_i * c_j * (psi_i - psi_j).cos() - c_i * s_j;
            }
            (sign * psi_acc / c_i, sign * phi_acc)
        })
        .collect())
}

fn lie_step(state: &SystemState, omega: &[Vec3], dt: f64) -> SystemState {
    SystemState::new(
        state
            .iter()
            .zip(omega)
            .map(|(p, w)| {
                let speed = w.norm();
                if speed < 1e-14 {
                    *p
                } else {
                    rotate(p, &(w / speed), speed * dt)
                }
            })
            .collect(),
    )
}

fn rk4_step(state: &SystemState, g: &RingGraph, law: ControlLaw, dt: f64) -> SystemState {
    let x = state.vectors();
    let axpy =
        |a: f64, k: &[Vec3]| -> Vec<Vec3> { x.iter().zip(k).map(|(p, d)| p + d * a).collect() };
    let k1 = field_raw(&x, g, law);
    let k2 = field_raw(&axpy(dt / 2.0, &k1), g, law);
    let k3 = field_raw(&axpy(dt / 2.0, &k2), g, law);
    let k4 = field_raw(&axpy(dt, &k3), g, law);
    SystemState::new(
        (0..x.len())
            .map(|i| {
                let next = x[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
                ReducedAttitude::try_from_vector(next)
                    .expect("RK4 step left a finite nonzero vector")
            })
            .collect(),
    )
}

/// Advances the closed loop by one step of size `dt`.
pub fn step(
    state: &SystemState,
    g: &RingGraph,
    law: ControlLaw,
    dt: f64,
    integrator: Integrator,
) -> SystemState {
    check_consistent(state.n(), g);
    match integrator {
        Integrator::Lie => lie_step(state, &control_omega(state, g, law), dt),
        Integrator::Rk4 => rk4_step(state, g, law, dt),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingConstraint {
    None,
    /// Every neighbor gap exceeds `π - 2π/n` (even `n`).
    InOmegaE,
    /// Every neighbor gap exceeds `max(π - 3π/n, π/2)` (odd `n`).
    InOmegaO,
    /// All agents strictly inside the hemisphere centred on their normalized mean.
    Hemisphere,
}

impl SamplingConstraint {
    fn label(self) -> &'static str {
        match self {
            SamplingConstraint::None => "none",
            SamplingConstraint::InOmegaE => "W > pi - 2pi/n",
            SamplingConstraint::InOmegaO => "W > max(pi - 3pi/n, pi/2)",
            SamplingConstraint::Hemisphere => "open hemisphere",
        }
    }
}

/// Lower bound on the neighbor gap that defines the even-case region of attraction.
pub fn omega_e_threshold(n: usize) -> f64 {
    std::f64::consts::PI - 2.0 * std::f64::consts::PI / n as f64
}

/// Lower bound on the neighbor gap that defines the odd-case region of attraction.
pub fn omega_o_threshold(n: usize) -> f64 {
    (std::f64::consts::PI - 3.0 * std::f64::consts::PI / n as f64).max(FRAC_PI_2)
}

fn in_open_hemisphere(state: &SystemState) -> bool {
    let mean = state.iter().fold(Vec3::zeros(), |acc, p| acc + p.vector());
    let norm = mean.norm();
    norm > 1e-12 && state.iter().all(|p| p.vector().dot(&mean) / norm > 0.0)
}

fn satisfies(state: &SystemState, constraint: SamplingConstraint) -> bool {
    let n = state.n();
    match constraint {
        SamplingConstraint::None => true,
        SamplingConstraint::InOmegaE => analysis::w(state) > omega_e_threshold(n),
        SamplingConstraint::InOmegaO => analysis::w(state) > omega_o_threshold(n),
        SamplingConstraint::Hemisphere => in_open_hemisphere(state),
    }
}

/// Draws one uniformly distributed attitude: three standard normals, normalized.
pub fn sample_attitude<R: rand::Rng + ?Sized>(rng: &mut R) -> ReducedAttitude {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if let Ok(p) = ReducedAttitude::try_from_vector(v) {
            return p;
        }
    }
}

/// Uniform random state, rejection-sampled until `constraint` holds.
///
/// The generator is ChaCha8 seeded through `seed_from_u64(seed)`. Each attempt
/// draws agents in index order, three standard normals (x, y, z) per agent, so
/// a given seed yields the same state on every platform.
pub fn random_state(n: usize, seed: u64, constraint: SamplingConstraint) -> Result<SystemState> {
    if n < 2 {
        return Err(FormationError::Config(format!(
            "need at least 2 agents, got {n}"
        )));
    }
    match constraint {
        SamplingConstraint::InOmegaE if !n.is_multiple_of(2) => {
            return Err(FormationError::Config(format!(
                "the even-case region needs even n, got {n}"
            )))
        }
        SamplingConstraint::InOmegaO if n.is_multiple_of(2) => {
            return Err(FormationError::Config(format!(
                "the odd-case region needs odd n, got {n}"
            )))
        }
        _ => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SAMPLING_BUDGET {
        let state = SystemState::new((0..n).map(|_| sample_attitude(&mut rng)).collect());
        if satisfies(&state, constraint) {
            return Ok(state);
        }
    }
    Err(FormationError::Sampling {
        constraint: constraint.label().to_string(),
        attempts: SAMPLING_BUDGET,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    Random,
    RandomInOmegaE,
    RandomInOmegaO,
    RandomInHemisphere,
    Explicit(Vec<SphereAngles>),
}

/// Everything needed to reproduce one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    #[serde(default)]
    pub directed: bool,
    #[serde(default = "default_law")]
    pub law: ControlLaw,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitialCondition,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub integrator: Integrator,
}

fn default_law() -> ControlLaw {
    ControlLaw::Repulsive
}

fn default_dt() -> f64 {
    0.01
}

fn default_t_end() -> f64 {
    100.0
}

fn default_init() -> InitialCondition {
    InitialCondition::Random
}

fn default_record_every() -> usize {
    1
}

impl SimConfig {
    pub fn new(
        n: usize,
        directed: bool,
        law: ControlLaw,
        seed: u64,
        init: InitialCondition,
    ) -> Self {
        Self {
            n,
            directed,
            law,
            dt: default_dt(),
            t_end: default_t_end(),
            seed,
            init,
            record_every: default_record_every(),
            integrator: Integrator::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        RingGraph::new(self.n, self.directed)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FormationError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(FormationError::Config(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(FormationError::Config(
                "record_every must be at least 1".into(),
            ));
        }
        if let InitialCondition::Explicit(angles) = &self.init {
            if angles.len() != self.n {
                return Err(FormationError::Config(format!(
                    "explicit initial state has {} agents, expected {}",
                    angles.len(),
                    self.n
                )));
            }
            if angles
                .iter()
                .any(|a| !a.psi.is_finite() || !a.phi.is_finite())
            {
                return Err(FormationError::Config(
                    "explicit initial angles must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> Result<RingGraph> {
        RingGraph::new(self.n, self.directed)
    }

    pub fn initial_state(&self) -> Result<SystemState> {
        let constraint = match &self.init {
            InitialCondition::Explicit(angles) => return Ok(SystemState::from_angles(angles)),
            InitialCondition::Random => SamplingConstraint::None,
            InitialCondition::RandomInOmegaE => SamplingConstraint::InOmegaE,
            InitialCondition::RandomInOmegaO => SamplingConstraint::InOmegaO,
            InitialCondition::RandomInHemisphere => SamplingConstraint::Hemisphere,
        };
        random_state(self.n, self.seed, constraint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Reached `t_end`.
    Horizon,
    /// Every agent came to rest.
    Static,
    /// Neighbor gaps and speeds stopped changing over [`STEADY_WINDOW`] steps.
    SteadyRotation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub state: SystemState,
    /// Minimal neighbor geodesic distance.
    pub w: f64,
    /// Lyapunov candidate `2 cos²(W/2)`.
    pub v: f64,
    pub omega_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub stop: StopReason,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> &TrajectoryRecord {
        self.records
            .last()
            .expect("trajectory holds at least the initial record")
    }

    pub fn final_state(&self) -> &SystemState {
        &self.last().state
    }

    pub fn final_time(&self) -> f64 {
        self.last().t
    }
}

fn record(t: f64, state: &SystemState, omega: &[Vec3]) -> TrajectoryRecord {
    TrajectoryRecord {
        t,
        state: state.clone(),
        w: analysis::w(state),
        v: analysis::v(state),
        omega_norms: omega.iter().map(|w| w.norm()).collect(),
    }
}

/// Integrates the closed loop described by `cfg`.
///
/// Records the initial state, every `record_every`-th step and the final
/// state. Stops early once all agents are at rest or, on directed rings, once
/// the formation rotates rigidly.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let g = cfg.graph()?;
    let mut state = cfg.initial_state()?;
    let mut omega = control_omega(&state, &g, cfg.law);
    let mut records = vec![record(0.0, &state, &omega)];
    let max_norm = |norms: &[f64]| norms.iter().cloned().fold(0.0, f64::max);

    if max_norm(&records[0].omega_norms) < STATIC_OMEGA_TOL {
        return Ok(Trajectory {
            records,
            stop: StopReason::Static,
            steps: 0,
        });
    }

    let total_steps = (cfg.t_end / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let mut history: VecDeque<(f64, Vec<f64>)> = VecDeque::with_capacity(STEADY_WINDOW + 1);
    let mut stop = StopReason::Horizon;
    let mut steps = 0;

    for k in 1..=total_steps {
        state = match cfg.integrator {
            Integrator::Lie => lie_step(&state, &omega, cfg.dt),
            Integrator::Rk4 => rk4_step(&state, &g, cfg.law, cfg.dt),
        };
        omega = control_omega(&state, &g, cfg.law);
        steps = k;
        let t = k as f64 * cfg.dt;
        let norms: Vec<f64> = omega.iter().map(|w| w.norm()).collect();

        if max_norm(&norms) < STATIC_OMEGA_TOL {
            stop = StopReason::Static;
        } else if g.is_directed() {
            let w = analysis::w(&state);
            if history.len() == STEADY_WINDOW {
                let (w_old, norms_old) = history.pop_front().expect("window is full");
                let settled = (w - w_old).abs() <= STATIC_OMEGA_TOL
                    && norms
                        .iter()
                        .zip(&norms_old)
                        .all(|(a, b)| (a - b).abs() <= STATIC_OMEGA_TOL);
                if settled {
                    stop = StopReason::SteadyRotation;
                }
            }
            history.push_back((w, norms));
        }

        if stop != StopReason::Horizon || k % cfg.record_every == 0 || k == total_steps {
            records.push(record(t, &state, &omega));
        }
        if stop != StopReason::Horizon {
            break;
        }
    }
    Ok(Trajectory {
        records,
        stop,
        steps,
    })
}
