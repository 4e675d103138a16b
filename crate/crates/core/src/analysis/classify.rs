//! Naming the formation a state has settled into.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::manifold::{dist_me_exact, dist_mo_exact};
use crate::dynamics::SystemState;
use crate::linearization::symmetric_eigen;
use crate::search::{tangent_basis, SphereSearch};
use crate::sphere_geom::{great_circle_test, ReducedAttitude, Vec3};
use crate::topology::RingGraph;

/// Default classification tolerance, radians.
pub const CLASSIFY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormationKind {
    Antipodal,
    CyclicStatic,
    CyclicRotating,
    Consensus,
    GreatCircleEquilibrium,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormationClass {
    pub kind: FormationKind,
    /// The distance behind the verdict: to the formation manifold for the
    /// antipodal and cyclic kinds, largest pairwise gap for consensus, and
    /// largest angular offset from the fitted circle for great-circle states.
    /// For `Other` it is the distance to the manifold matching the parity.
    pub residual: f64,
}

/// Axis of the great circle closest to the state, with the largest angular
/// offset of any agent from that circle.
///
/// The axis is the eigenvector of `Σ Γ_i Γ_iᵀ` with the smallest eigenvalue.
pub fn fit_great_circle(state: &SystemState) -> (Vec3, f64) {
    let mut scatter = DMatrix::<f64>::zeros(3, 3);
    for p in state.iter() {
        let v = p.vector();
        for r in 0..3 {
            for c in 0..3 {
                scatter[(r, c)] += v[r] * v[c];
            }
        }
    }
    let (_, vectors) = symmetric_eigen(&scatter).expect("scatter matrices are symmetric");
    let mut axis = Vec3::new(vectors[(0, 0)], vectors[(1, 0)], vectors[(2, 0)]).normalize();
    // fix the sign so the same circle always yields the same axis
    let lead = if axis.z.abs() > 1e-12 {
        axis.z
    } else if axis.y.abs() > 1e-12 {
        axis.y
    } else {
        axis.x
    };
    if lead < 0.0 {
        axis = -axis;
    }
    let offset = state
        .iter()
        .map(|p| axis.dot(p.vector()).clamp(-1.0, 1.0).asin().abs())
        .fold(0.0, f64::max);
    (axis, offset)
}

pub fn classify(
    state: &SystemState,
    g: &RingGraph,
    omega_norms: &[f64],
    tol: f64,
) -> FormationClass {
    classify_with(state, g, omega_norms, tol, &SphereSearch::default())
}

/// Checks, in order: the parity's formation manifold, consensus, a static
/// great-circle equilibrium, and otherwise `Other`.
pub fn classify_with(
    state: &SystemState,
    g: &RingGraph,
    omega_norms: &[f64],
    tol: f64,
    search: &SphereSearch,
) -> FormationClass {
    let n = state.n();
    assert_eq!(n, g.n(), "state has {n} agents but the ring has {}", g.n());
    assert_eq!(n, omega_norms.len(), "one angular speed per agent expected");
    let max_omega = omega_norms.iter().copied().fold(0.0, f64::max);
    let at = |kind, residual| FormationClass { kind, residual };

    let manifold_distance = if n.is_multiple_of(2) {
        dist_me_exact(state, search).expect("even n")
    } else {
        dist_mo_exact(state, search).expect("odd n")
    };
    if manifold_distance < tol {
        if n.is_multiple_of(2) {
            return at(FormationKind::Antipodal, manifold_distance);
        }
        if max_omega < tol {
            return at(FormationKind::CyclicStatic, manifold_distance);
        }
        let speed = (PI / n as f64).sin();
        if omega_norms.iter().all(|w| (w - speed).abs() < tol) {
            return at(FormationKind::CyclicRotating, manifold_distance);
        }
    }

    let spread = super::max_pairwise_distance(state);
    if spread < tol {
        return at(FormationKind::Consensus, spread);
    }

    if max_omega < tol {
        let (axis, offset) = fit_great_circle(state);
        let (a, b) = tangent_basis(&axis);
        let a = ReducedAttitude::try_from_vector(a).expect("unit tangent");
        let b = ReducedAttitude::try_from_vector(b).expect("unit tangent");
        if state.iter().all(|p| great_circle_test(&a, &b, p, tol)) {
            return at(FormationKind::GreatCircleEquilibrium, offset);
        }
    }
    at(FormationKind::Other, manifold_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{antipodal_formation, cyclic_formation};
    use crate::dynamics::{control_omega, random_state, ControlLaw, SamplingConstraint};
    use crate::linearization::make_equispaced_circle;

    fn norms(state: &SystemState, g: &RingGraph) -> Vec<f64> {
        control_omega(state, g, ControlLaw::Repulsive)
            .iter()
            .map(|w| w.norm())
            .collect()
    }

    fn run(state: &SystemState, directed: bool) -> FormationClass {
        let g = RingGraph::new(state.n(), directed).unwrap();
        classify(state, &g, &norms(state, &g), CLASSIFY_TOL)
    }

    #[test]
    fn formation_examples() {
        let me = antipodal_formation(6, &ReducedAttitude::new(0.1, 0.2, 0.9));
        assert_eq!(run(&me, false).kind, FormationKind::Antipodal);
        assert_eq!(run(&me, true).kind, FormationKind::Antipodal);

        let mo = cyclic_formation(7, &Vec3::z(), &ReducedAttitude::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(run(&mo, true).kind, FormationKind::CyclicRotating);
        assert_eq!(run(&mo, false).kind, FormationKind::CyclicStatic);

        let same = SystemState::consensus(5, ReducedAttitude::new(0.0, 1.0, 0.0));
        let class = run(&same, false);
        assert_eq!(class.kind, FormationKind::Consensus);
        assert_eq!(class.residual, 0.0);
    }

    #[test]
    fn splay_equilibrium_is_a_great_circle_equilibrium() {
        let u = Vec3::new(0.0, 0.6, 0.8);
        let v = tangent_basis(&u).0;
        let s = make_equispaced_circle(5, 2.0 * PI / 5.0, &u, &v).unwrap();
        let class = run(&s, false);
        assert_eq!(class.kind, FormationKind::GreatCircleEquilibrium);
        assert!(class.residual < 1e-12);
    }

    #[test]
    fn random_states_are_other() {
        for seed in 0..5 {
            let s = random_state(6, seed, SamplingConstraint::None).unwrap();
            assert_eq!(run(&s, false).kind, FormationKind::Other);
        }
    }

    #[test]
    fn fitted_axis_is_orthogonal_to_circle_members() {
        let u = Vec3::new(1.0, -2.0, 0.5).normalize();
        let s = make_equispaced_circle(7, 1.3, &u, &tangent_basis(&u).1).unwrap();
        let (axis, offset) = fit_great_circle(&s);
        assert!(offset < 1e-12);
        assert!((axis.dot(&u).abs() - 1.0).abs() < 1e-12);
    }
}
