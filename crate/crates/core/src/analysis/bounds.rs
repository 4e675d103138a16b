//! Inequalities linking the minimal neighbor gap `W` to the distances from
//! the antipodal and cyclic manifolds.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use super::manifold::{cyclic_spread_nu, dist_me_exact, dist_mo_exact};
use crate::dynamics::SystemState;
use crate::search::SphereSearch;

/// A bound holds when its oriented slack is at least `-BOUND_HOLD_TOL`.
pub const BOUND_HOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `W ≥ π - 2 d_Me`
    AntipodalMinGap,
    /// `d_Me ≤ (n/2)(π - W)`
    AntipodalDistanceFromGap,
    /// `W ≥ π - π/n - 2 d_Mo`
    CyclicMinGap,
    /// `d_Mo ≤ sqrt(4n³(π - π/n - W))`, when the right side is at most `2√2`
    CyclicDistanceFromGap,
    /// `d_Mo ≤ 2nν` with `ν² = max_i |π - π/n - θ_{i,i+1}|`, when `ν ≤ √2/n`
    CyclicDistanceFromSpread,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::AntipodalMinGap => "antipodal_min_gap",
            BoundKind::AntipodalDistanceFromGap => "antipodal_distance_from_gap",
            BoundKind::CyclicMinGap => "cyclic_min_gap",
            BoundKind::CyclicDistanceFromGap => "cyclic_distance_from_gap",
            BoundKind::CyclicDistanceFromSpread => "cyclic_distance_from_spread",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub name: BoundKind,
    pub lhs: f64,
    pub rhs: f64,
    /// Positive when the inequality holds with room to spare.
    pub slack: f64,
    pub holds: bool,
    /// False when the bound's hypothesis fails; such reports always hold.
    pub applicable: bool,
    pub nu: Option<f64>,
}

impl BoundCheckReport {
    fn new(
        name: BoundKind,
        lhs: f64,
        rhs: f64,
        slack: f64,
        applicable: bool,
        nu: Option<f64>,
    ) -> Self {
        let holds = !applicable || slack >= -BOUND_HOLD_TOL;
        Self {
            name,
            lhs,
            rhs,
            slack,
            holds,
            applicable,
            nu,
        }
    }

    /// `lhs ≥ rhs`
    fn at_least(name: BoundKind, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, lhs - rhs, true, None)
    }

    /// `lhs ≤ rhs`
    fn at_most(name: BoundKind, lhs: f64, rhs: f64, applicable: bool, nu: Option<f64>) -> Self {
        Self::new(name, lhs, rhs, rhs - lhs, applicable, nu)
    }
}

pub fn check_bounds(state: &SystemState) -> Vec<BoundCheckReport> {
    check_bounds_with(state, &SphereSearch::default())
}

/// Evaluates the bounds for the state's parity using exact manifold distances.
pub fn check_bounds_with(state: &SystemState, search: &SphereSearch) -> Vec<BoundCheckReport> {
    let n = state.n();
    let nf = n as f64;
    let w = super::w(state);
    if n.is_multiple_of(2) {
        let d = dist_me_exact(state, search).expect("even n");
        vec![
            BoundCheckReport::at_least(BoundKind::AntipodalMinGap, w, PI - 2.0 * d),
            BoundCheckReport::at_most(
                BoundKind::AntipodalDistanceFromGap,
                d,
                nf / 2.0 * (PI - w),
                true,
                None,
            ),
        ]
    } else {
        let d = dist_mo_exact(state, search).expect("odd n");
        let target = PI - PI / nf;
        let gap_rhs = (4.0 * nf.powi(3) * (target - w).max(0.0)).sqrt();
        let nu = cyclic_spread_nu(state);
        vec![
            BoundCheckReport::at_least(BoundKind::CyclicMinGap, w, target - 2.0 * d),
            BoundCheckReport::at_most(
                BoundKind::CyclicDistanceFromGap,
                d,
                gap_rhs,
                gap_rhs <= 2.0 * SQRT_2,
                None,
            ),
            BoundCheckReport::at_most(
                BoundKind::CyclicDistanceFromSpread,
                d,
                2.0 * nf * nu,
                nu <= SQRT_2 / nf,
                Some(nu),
            ),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{antipodal_formation, cyclic_formation, dist_mo_upper};
    use crate::dynamics::{random_state, SamplingConstraint};
    use crate::sphere_geom::{rotate, ReducedAttitude, Vec3};
    use approx::assert_abs_diff_eq;

    fn quick() -> SphereSearch {
        SphereSearch {
            resolution: 512,
            ..SphereSearch::default()
        }
    }

    #[test]
    fn members_are_tight() {
        let me = antipodal_formation(4, &ReducedAttitude::new(0.0, 0.0, 1.0));
        let reports = check_bounds(&me);
        assert_eq!(reports[0].name, BoundKind::AntipodalMinGap);
        assert_abs_diff_eq!(reports[0].slack, 0.0, epsilon = 1e-7);
        assert!(reports.iter().all(|r| r.holds && r.applicable));

        let mo = cyclic_formation(5, &Vec3::z(), &ReducedAttitude::new(1.0, 0.0, 0.0)).unwrap();
        let reports = check_bounds(&mo);
        assert_eq!(reports.len(), 3);
        assert_abs_diff_eq!(reports[0].slack, 0.0, epsilon = 1e-7);
        assert!(reports.iter().all(|r| r.holds && r.applicable));
    }

    #[test]
    fn random_states_satisfy_applicable_bounds() {
        for n in 4..=7 {
            for seed in 0..40 {
                let s = random_state(n, seed, SamplingConstraint::None).unwrap();
                for r in check_bounds_with(&s, &quick()) {
                    assert!(!r.applicable || r.slack >= -1e-6, "n={n} seed={seed} {r:?}");
                }
            }
        }
    }

    #[test]
    fn hypotheses_gate_applicability() {
        let s = random_state(5, 3, SamplingConstraint::None).unwrap();
        let reports = check_bounds_with(&s, &quick());
        let spread = reports
            .iter()
            .find(|r| r.name == BoundKind::CyclicDistanceFromSpread)
            .unwrap();
        let nu = spread.nu.unwrap();
        assert_eq!(spread.applicable, nu <= SQRT_2 / 5.0);
        if !spread.applicable {
            assert!(spread.holds);
        }
    }

    #[test]
    fn spread_bound_holds_for_constructive_candidate_near_the_manifold() {
        // small in-plane jitter keeps ν below √2/n
        let base = cyclic_formation(7, &Vec3::z(), &ReducedAttitude::new(1.0, 0.0, 0.0)).unwrap();
        for seed in 0..20u64 {
            let jitter = random_state(7, seed, SamplingConstraint::None).unwrap();
            let agents = base
                .iter()
                .zip(jitter.iter())
                .map(|(p, j)| rotate(p, &Vec3::z(), 1e-3 * j.x()))
                .collect();
            let s = SystemState::new(agents);
            let nu = cyclic_spread_nu(&s);
            assert!(nu <= SQRT_2 / 7.0);
            assert!(dist_mo_upper(&s).unwrap().distance <= 14.0 * nu);
        }
    }
}
