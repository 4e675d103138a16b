//! Formation functionals and diagnostics.
//!
//! `W` is the smallest geodesic gap between ring neighbors `(i, i+1)` and
//! `V = max_i V_i = 2 cos²(W/2)` with `V_i = 1 + Γ_iᵀΓ_{i+1}`. `V` is the
//! Lyapunov candidate for both parities; its upper right Dini derivative is
//! the largest `V̇_i` over the indices attaining the maximum.

mod bounds;
mod classify;
mod manifold;

pub use bounds::{check_bounds, check_bounds_with, BoundCheckReport, BoundKind, BOUND_HOLD_TOL};
pub use classify::{
    classify, classify_with, fit_great_circle, FormationClass, FormationKind, CLASSIFY_TOL,
};
pub use manifold::{
    antipodal_candidate, antipodal_formation, cyclic_candidate, cyclic_formation, cyclic_spread_nu,
    dist_me_exact, dist_me_upper, dist_mo_exact, dist_mo_upper, state_distance,
    ConstructiveDistance,
};

use crate::dynamics::{rhs_cartesian, ControlLaw, SystemState};
use crate::error::{FormationError, Result};
use crate::sphere_geom::geodesic_distance;
use crate::topology::RingGraph;

/// Tolerance on `V - V_i` for membership in the active index set.
///
/// Exact ties computed in floating point differ by a few ulps; indices
/// trailing the maximum by more than that do not affect the right derivative.
pub const ACTIVE_SET_TOL: f64 = 1e-13;

/// Geodesic gaps `θ_{i,i+1}` around the ring, `i = 0..n`.
pub fn neighbor_gaps(state: &SystemState) -> Vec<f64> {
    let n = state.n();
    (0..n)
        .map(|i| geodesic_distance(&state[i], &state[(i + 1) % n]))
        .collect()
}

/// Minimal geodesic distance between ring neighbors.
pub fn w(state: &SystemState) -> f64 {
    neighbor_gaps(state)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub fn v_i(state: &SystemState, i: usize) -> f64 {
    let n = state.n();
    1.0 + state[i].dot(&state[(i + 1) % n])
}

pub fn v(state: &SystemState) -> f64 {
    (0..state.n())
        .map(|i| v_i(state, i))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Time derivative of `V_i` along the repulsive closed loop.
pub fn v_i_dot(state: &SystemState, g: &RingGraph, i: usize) -> f64 {
    let rates = rhs_cartesian(state, g, ControlLaw::Repulsive);
    v_i_dot_from(state, &rates, i)
}

fn v_i_dot_from(state: &SystemState, rates: &[crate::sphere_geom::Vec3], i: usize) -> f64 {
    let next = (i + 1) % state.n();
    state[next].vector().dot(&rates[i]) + state[i].vector().dot(&rates[next])
}

/// Indices whose `V_i` is within [`ACTIVE_SET_TOL`] of `V`.
pub fn active_set(state: &SystemState) -> Vec<usize> {
    let big_v = v(state);
    (0..state.n())
        .filter(|&i| big_v - v_i(state, i) <= ACTIVE_SET_TOL)
        .collect()
}

/// Upper right Dini derivative of `V` along the repulsive closed loop.
pub fn dini_v(state: &SystemState, g: &RingGraph) -> f64 {
    let rates = rhs_cartesian(state, g, ControlLaw::Repulsive);
    active_set(state)
        .into_iter()
        .map(|i| v_i_dot_from(state, &rates, i))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `Σ_i V_i`, the smooth LaSalle function for undirected rings.
pub fn lasalle_v_bar(state: &SystemState) -> f64 {
    (0..state.n()).map(|i| v_i(state, i)).sum()
}

/// `-Σ_i |Σ_{j ∈ N_i} Γ_i × Γ_j|²`, the derivative of [`lasalle_v_bar`] on an undirected ring.
pub fn lasalle_v_bar_dot(state: &SystemState, g: &RingGraph) -> Result<f64> {
    if g.is_directed() {
        return Err(FormationError::Domain(
            "the LaSalle sum is defined for undirected rings only".into(),
        ));
    }
    let omega = crate::dynamics::control_omega(state, g, ControlLaw::Repulsive);
    Ok(-omega.iter().map(|w| w.norm_squared()).sum::<f64>())
}

/// Largest geodesic distance between any two agents.
pub fn max_pairwise_distance(state: &SystemState) -> f64 {
    let n = state.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max(geodesic_distance(&state[i], &state[j]));
        }
    }
    worst
}

/// Largest control magnitude `|Σ_{j ∈ N_i} Γ_i × Γ_j|`; zero exactly on equilibria.
pub fn equilibrium_residual(state: &SystemState, g: &RingGraph) -> f64 {
    crate::dynamics::control_omega(state, g, ControlLaw::Repulsive)
        .iter()
        .map(|w| w.norm())
        .fold(0.0, f64::max)
}
