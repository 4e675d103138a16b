//! Distances to the antipodal and cyclic formation manifolds.
//!
//! Distances on `(S²)ⁿ` use the max-of-agents metric. Each manifold gets two
//! routes: a constructive candidate built from the state itself (an upper
//! bound), and a global search over the manifold's parameters.

use std::f64::consts::PI;

use crate::dynamics::SystemState;
use crate::error::{FormationError, Result};
use crate::search::{minimize_on_sphere, tangent_basis, SphereSearch};
use crate::sphere_geom::{geodesic_distance, relative_axis_angle, rotate, ReducedAttitude, Vec3};

/// Max over agents of the geodesic distance between matching attitudes.
pub fn state_distance(a: &SystemState, b: &SystemState) -> f64 {
    assert_eq!(a.n(), b.n(), "states have different agent counts");
    a.iter()
        .zip(b.iter())
        .map(|(p, q)| geodesic_distance(p, q))
        .fold(0.0, f64::max)
}

fn cyclic_step(n: usize) -> f64 {
    PI - PI / n as f64
}

fn require_even(n: usize) -> Result<()> {
    if !n.is_multiple_of(2) {
        return Err(FormationError::Domain(format!(
            "the antipodal manifold is empty for odd n = {n}"
        )));
    }
    Ok(())
}

fn require_odd(n: usize) -> Result<()> {
    if n.is_multiple_of(2) {
        return Err(FormationError::Domain(format!(
            "the cyclic manifold is empty for even n = {n}"
        )));
    }
    Ok(())
}

/// Agents alternate between `v` and `-v`, starting with `v`.
pub fn antipodal_formation(n: usize, v: &ReducedAttitude) -> SystemState {
    SystemState::new((0..n).map(|k| if k % 2 == 0 { *v } else { -*v }).collect())
}

/// Agent `k` sits at `v` rotated about `u` by `k (π - π/n)`; requires `u ⟂ v`.
pub fn cyclic_formation(n: usize, u: &Vec3, v: &ReducedAttitude) -> Result<SystemState> {
    if (u.norm() - 1.0).abs() > 1e-9 || u.dot(v.vector()).abs() > 1e-9 {
        return Err(FormationError::Domain(
            "cyclic formation needs a unit axis orthogonal to the base point".into(),
        ));
    }
    let step = cyclic_step(n);
    Ok(SystemState::new(
        (0..n).map(|k| rotate(v, u, k as f64 * step)).collect(),
    ))
}

/// Antipodal state anchored at the middle agent: agent `i` (1-based) is
/// `(-1)^(i + n/2)` times agent `n/2`.
pub fn antipodal_candidate(state: &SystemState) -> Result<SystemState> {
    let n = state.n();
    require_even(n)?;
    let anchor = state[n / 2 - 1];
    Ok(SystemState::new(
        (1..=n)
            .map(|i| {
                if (i + n / 2).is_multiple_of(2) {
                    anchor
                } else {
                    -anchor
                }
            })
            .collect(),
    ))
}

pub fn dist_me_upper(state: &SystemState) -> Result<f64> {
    Ok(state_distance(state, &antipodal_candidate(state)?))
}

/// Cyclic state generated from agent 1 by rotations about the axis `k_12`.
///
/// The flag is set when agents 1 and 2 coincide or are antipodal, so that
/// `k_12` falls back to the deterministic degenerate axis.
pub fn cyclic_candidate(state: &SystemState) -> Result<(SystemState, bool)> {
    let n = state.n();
    require_odd(n)?;
    let rel = relative_axis_angle(&state[0], &state[1]);
    let degenerate = state[0].cross(&state[1]).norm() < 1e-12;
    let step = cyclic_step(n);
    let candidate = SystemState::new(
        (0..n)
            .map(|k| rotate(&state[0], &rel.axis, k as f64 * step))
            .collect(),
    );
    Ok((candidate, degenerate))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstructiveDistance {
    pub distance: f64,
    pub degenerate_axis: bool,
}

pub fn dist_mo_upper(state: &SystemState) -> Result<ConstructiveDistance> {
    let (candidate, degenerate_axis) = cyclic_candidate(state)?;
    Ok(ConstructiveDistance {
        distance: state_distance(state, &candidate),
        degenerate_axis,
    })
}

/// Smallest `ν` with `|π - π/n - θ_{i,i+1}| ≤ ν²` for every ring edge.
pub fn cyclic_spread_nu(state: &SystemState) -> f64 {
    let target = cyclic_step(state.n());
    super::neighbor_gaps(state)
        .into_iter()
        .map(|t| (target - t).abs())
        .fold(0.0, f64::max)
        .sqrt()
}

/// Largest geodesic distance from `points` to `target`, via the smallest inner product.
fn farthest_distance(points: &[Vec3], target: &Vec3) -> f64 {
    let (idx, _) = points
        .iter()
        .enumerate()
        .map(|(k, p)| (k, p.dot(target)))
        .fold(
            (0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        );
    let p = &points[idx];
    p.cross(target).norm().atan2(p.dot(target).clamp(-1.0, 1.0))
}

/// `min_v max_i d(Γ_i, (-1)^(i-1) v)` by lattice search and local refinement.
pub fn dist_me_exact(state: &SystemState, search: &SphereSearch) -> Result<f64> {
    let n = state.n();
    require_even(n)?;
    // flipping every other agent turns the problem into a smallest enclosing cap
    let flipped: Vec<Vec3> = state
        .iter()
        .enumerate()
        .map(|(k, p)| if k % 2 == 0 { *p.vector() } else { -p.vector() })
        .collect();
    Ok(minimize_on_sphere(|v| farthest_distance(&flipped, v), search).1)
}

/// For a fixed axis, `(cos β, sin β)` of the base point `cos β a + sin β b`
/// maximizing `min_k (p_k cos β + q_k sin β)`. The optimum of a lower
/// envelope of sinusoids is at a crest of one of them or where two cross.
fn best_phase(p: &[f64], q: &[f64]) -> (f64, f64) {
    let mut best = ((1.0, 0.0), f64::NEG_INFINITY);
    let mut consider = |c: f64, s: f64| {
        let r = (c * c + s * s).sqrt();
        if r == 0.0 {
            return;
        }
        let (c, s) = (c / r, s / r);
        let mut value = f64::INFINITY;
        for (a, b) in p.iter().zip(q) {
            value = value.min(a * c + b * s);
            if value <= best.1 {
                return;
            }
        }
        best = ((c, s), value);
    };
    for k in 0..p.len() {
        consider(p[k], q[k]);
    }
    for k in 0..p.len() {
        for l in k + 1..p.len() {
            let (dp, dq) = (p[k] - p[l], q[k] - q[l]);
            consider(-dq, dp);
            consider(dq, -dp);
        }
    }
    best.0
}

/// Distance from the state to the closest cyclic formation with axis `u`.
///
/// `turns[k]` holds `(cos kα, sin kα)` for the formation step `α`.
fn cyclic_distance_for_axis(vectors: &[Vec3], u: &Vec3, turns: &[(f64, f64)]) -> f64 {
    let (a, b) = tangent_basis(u);
    // coordinates of each agent after undoing its share of the formation rotation about u
    let mut p = Vec::with_capacity(vectors.len());
    let mut q = Vec::with_capacity(vectors.len());
    for (g, &(c, s)) in vectors.iter().zip(turns) {
        let (ga, gb) = (g.dot(&a), g.dot(&b));
        p.push(c * ga + s * gb);
        q.push(c * gb - s * ga);
    }
    let (c, s) = best_phase(&p, &q);
    let target = a * c + b * s;
    let k = (0..vectors.len())
        .min_by(|&i, &j| (p[i] * c + q[i] * s).total_cmp(&(p[j] * c + q[j] * s)))
        .expect("at least one agent");
    let pulled = a * p[k] + b * q[k] + u * vectors[k].dot(u);
    pulled.cross(&target).norm().atan2(pulled.dot(&target))
}

/// `min over u ⟂ v of max_i d(Γ_i, exp((i-1)(π - π/n) û) v)`.
///
/// The axis `u` is searched on the sphere; for each axis the base point is
/// optimized exactly along the great circle orthogonal to it.
pub fn dist_mo_exact(state: &SystemState, search: &SphereSearch) -> Result<f64> {
    let n = state.n();
    require_odd(n)?;
    let vectors: Vec<Vec3> = state.iter().map(|p| *p.vector()).collect();
    let step = cyclic_step(n);
    let turns: Vec<(f64, f64)> = (0..n)
        .map(|k| (k as f64 * step).sin_cos())
        .map(|(s, c)| (c, s))
        .collect();
    Ok(minimize_on_sphere(|u| cyclic_distance_for_axis(&vectors, u, &turns), search).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{random_state, SamplingConstraint};
    use crate::search::tangent_basis;
    use approx::assert_abs_diff_eq;

    fn search() -> SphereSearch {
        SphereSearch::default()
    }

    /// Rotates every agent by `eps` about a random tangent axis.
    fn perturb(state: &SystemState, eps: f64, seed: u64) -> SystemState {
        let dirs = random_state(state.n(), seed, SamplingConstraint::None).unwrap();
        SystemState::new(
            state
                .iter()
                .zip(dirs.iter())
                .map(|(p, d)| {
                    let axis = p.cross(d).normalize();
                    rotate(p, &axis, eps)
                })
                .collect(),
        )
    }

    #[test]
    fn antipodal_upper_two_agent_example() {
        let s = SystemState::new(vec![
            ReducedAttitude::new(1.0, 0.0, 0.0),
            ReducedAttitude::new(0.0, 1.0, 0.0),
        ]);
        let cand = antipodal_candidate(&s).unwrap();
        assert_eq!(cand[0], s[0]);
        assert_eq!(cand[1], -s[0]);
        assert_abs_diff_eq!(dist_me_upper(&s).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            dist_me_exact(&s, &search()).unwrap(),
            PI / 4.0,
            epsilon = 1e-7
        );
    }

    #[test]
    fn parity_errors() {
        let odd = random_state(5, 0, SamplingConstraint::None).unwrap();
        let even = random_state(4, 0, SamplingConstraint::None).unwrap();
        assert!(dist_me_upper(&odd).is_err());
        assert!(dist_me_exact(&odd, &search()).is_err());
        assert!(dist_mo_upper(&even).is_err());
        assert!(dist_mo_exact(&even, &search()).is_err());
    }

    #[test]
    fn members_have_zero_distance() {
        let v = ReducedAttitude::new(0.3, -0.2, 0.5);
        let me = antipodal_formation(6, &v);
        assert_eq!(dist_me_upper(&me).unwrap(), 0.0);
        assert!(dist_me_exact(&me, &search()).unwrap() < 1e-7);

        let u = tangent_basis(v.vector()).0;
        for n in [3, 5, 7, 9] {
            let mo = cyclic_formation(n, &u, &v).unwrap();
            let upper = dist_mo_upper(&mo).unwrap();
            assert!(!upper.degenerate_axis);
            assert!(upper.distance < 1e-10);
            assert!(dist_mo_exact(&mo, &search()).unwrap() < 1e-7);
        }
    }

    #[test]
    fn cyclic_members_skip_two_over_n_between_odd_agents() {
        let mo = cyclic_formation(7, &Vec3::z(), &ReducedAttitude::new(1.0, 0.0, 0.0)).unwrap();
        for i in (0..5).step_by(2) {
            assert_abs_diff_eq!(
                geodesic_distance(&mo[i], &mo[i + 2]),
                2.0 * PI / 7.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn perturbed_members_are_within_the_perturbation() {
        let eps = 0.01;
        let v = ReducedAttitude::new(-0.4, 0.1, 0.7);
        for seed in 0..5 {
            let me = perturb(&antipodal_formation(6, &v), eps, seed);
            assert!(dist_me_exact(&me, &search()).unwrap() <= eps + 1e-7);
            let mo = perturb(
                &cyclic_formation(7, &tangent_basis(v.vector()).1, &v).unwrap(),
                eps,
                seed + 100,
            );
            assert!(dist_mo_exact(&mo, &search()).unwrap() <= eps + 1e-7);
        }
    }

    #[test]
    fn upper_dominates_exact() {
        for seed in 0..30 {
            let even = random_state(6, seed, SamplingConstraint::None).unwrap();
            assert!(
                dist_me_upper(&even).unwrap() >= dist_me_exact(&even, &search()).unwrap() - 1e-9
            );
            let odd = random_state(5, seed, SamplingConstraint::None).unwrap();
            assert!(
                dist_mo_upper(&odd).unwrap().distance
                    >= dist_mo_exact(&odd, &search()).unwrap() - 1e-9
            );
        }
    }

    #[test]
    fn exact_distance_is_monotone_in_resolution() {
        for seed in 0..5 {
            let even = random_state(4, seed, SamplingConstraint::None).unwrap();
            let odd = random_state(5, seed, SamplingConstraint::None).unwrap();
            let mut last = (f64::INFINITY, f64::INFINITY);
            for resolution in [16, 64, 200, 1024] {
                let s = SphereSearch {
                    resolution,
                    ..SphereSearch::default()
                };
                let cur = (
                    dist_me_exact(&even, &s).unwrap(),
                    dist_mo_exact(&odd, &s).unwrap(),
                );
                assert!(cur.0 <= last.0 && cur.1 <= last.1);
                last = cur;
            }
        }
    }

    #[test]
    fn degenerate_first_edge_is_flagged() {
        let v = ReducedAttitude::new(0.0, 0.0, 1.0);
        let mut agents = cyclic_formation(5, &Vec3::x(), &v)
            .unwrap()
            .attitudes()
            .to_vec();
        agents[1] = -agents[0];
        let report = dist_mo_upper(&SystemState::new(agents)).unwrap();
        assert!(report.degenerate_axis);
        assert!(report.distance.is_finite());
    }

    #[test]
    fn spread_nu_matches_definition() {
        let mo = cyclic_formation(5, &Vec3::z(), &ReducedAttitude::new(1.0, 0.0, 0.0)).unwrap();
        assert!(cyclic_spread_nu(&mo) < 1e-7);
        let p = perturb(&mo, 1e-3, 4);
        let nu = cyclic_spread_nu(&p);
        let gaps = crate::analysis::neighbor_gaps(&p);
        assert!(gaps
            .iter()
            .all(|t| (PI - PI / 5.0 - t).abs() <= nu * nu + 1e-15));
    }
}
