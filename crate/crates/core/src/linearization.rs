//! Linearization of the undirected closed loop at great-circle equilibria.
//!
//! At an equilibrium on the equator (`φ_i = 0`) the angle-coordinate
//! dynamics decouple to first order into a longitude block
//! `ψ̇_i = Σ_j cos θ_ij (ψ_i - ψ_j)` and a latitude block
//! `φ̇_i = Σ_j (cos θ_ij φ_i - φ_j)`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analysis::{equilibrium_residual, fit_great_circle};
use crate::dynamics::SystemState;
use crate::error::{FormationError, Result};
use crate::sphere_geom::{rotate_vector, ReducedAttitude, Vec3};
use crate::topology::RingGraph;

/// Largest control residual accepted as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;
/// Largest latitude accepted as "on the equator".
pub const EQUATOR_TOL: f64 = 1e-8;
/// Default relative threshold below which an eigenvalue counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-12;

/// Agents placed along the great circle orthogonal to `axis`, starting at
/// `base` and advancing by signed `step_angles` about `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreatCircleConfig {
    pub axis: Vec3,
    pub base: Vec3,
    pub step_angles: Vec<f64>,
}

impl GreatCircleConfig {
    pub fn state(&self) -> Result<SystemState> {
        if (self.axis.norm() - 1.0).abs() > 1e-12 || (self.base.norm() - 1.0).abs() > 1e-12 {
            return Err(FormationError::Domain(
                "axis and base must be unit vectors".into(),
            ));
        }
        if self.axis.dot(&self.base).abs() > 1e-12 {
            return Err(FormationError::Domain(
                "base must be orthogonal to the axis".into(),
            ));
        }
        let mut angle = 0.0;
        let mut agents = vec![ReducedAttitude::try_from_vector(self.base)?];
        for step in &self.step_angles {
            angle += step;
            agents.push(ReducedAttitude::try_from_vector(rotate_vector(
                &self.base, &self.axis, angle,
            ))?);
        }
        Ok(SystemState::new(agents))
    }
}

/// `Γ_i = exp((i-1) α û) v`: `n` agents equally spaced by `alpha` along a great circle.
pub fn make_equispaced_circle(n: usize, alpha: f64, u: &Vec3, v: &Vec3) -> Result<SystemState> {
    GreatCircleConfig {
        axis: *u,
        base: *v,
        step_angles: vec![alpha; n.saturating_sub(1)],
    }
    .state()
}

/// Rotates the state so that its great circle becomes the equator.
///
/// The circle's axis `u` is fitted from the state; the rotation about
/// `u × e₃` by `arccos(u·e₃)` sends `u` to `e₃`. No rotation is applied when
/// `u = ±e₃`.
pub fn normalize_to_equator(state: &SystemState) -> SystemState {
    let (u, _) = fit_great_circle(state);
    let e3 = Vec3::z();
    let axis = u.cross(&e3);
    let sin_alpha = axis.norm();
    if sin_alpha < 1e-15 {
        return state.clone();
    }
    let alpha = u.dot(&e3).clamp(-1.0, 1.0).acos();
    state.rotated(&(axis / sin_alpha), alpha)
}

fn require_equatorial(state: &SystemState) -> Result<()> {
    if let Some((i, p)) = state
        .iter()
        .enumerate()
        .find(|(_, p)| p.z().abs() > EQUATOR_TOL)
    {
        return Err(FormationError::Domain(format!(
            "agent {} is off the equator (z = {:e}); normalize the equilibrium to the equator first",
            i + 1,
            p.z()
        )));
    }
    Ok(())
}

/// Builds `diag_i = Σ_j cos θ_ij` plus `off(cos θ_ij)` at every neighbor entry.
fn ring_matrix(
    state: &SystemState,
    g: &RingGraph,
    off: impl Fn(f64) -> f64,
) -> Result<DMatrix<f64>> {
    require_equatorial(state)?;
    let n = state.n();
    assert_eq!(n, g.n(), "state has {n} agents but the ring has {}", g.n());
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in g.neighbors(i) {
            let c = state[i].dot(&state[j]);
            m[(i, i)] += c;
            m[(i, j)] += off(c);
        }
    }
    Ok(m)
}

/// Longitude block: `A_ψ[i][i] = Σ_j cos θ_ij`, `A_ψ[i][j] = -cos θ_ij`.
pub fn jacobian_psi(state: &SystemState, g: &RingGraph) -> Result<DMatrix<f64>> {
    ring_matrix(state, g, |c| -c)
}

/// Latitude block: `A_φ[i][i] = Σ_j cos θ_ij`, `A_φ[i][j] = -1`.
pub fn jacobian_phi(state: &SystemState, g: &RingGraph) -> Result<DMatrix<f64>> {
    ring_matrix(state, g, |_| -1.0)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let asymmetry = (m - m.transpose()).abs().max();
    if asymmetry > SYMMETRY_TOL {
        return Err(FormationError::Asymmetric(asymmetry));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut q = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();
    let off_norm = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    for _sweep in 0..100 {
        if off_norm(&a) <= 1e-13 * scale {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akr) = (a[(k, p)], a[(k, r)]);
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let (apk, ark) = (a[(p, k)], a[(r, k)]);
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let (qkp, qkr) = (q[(k, p)], q[(k, r)]);
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok((values, vectors))
}

pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(m)?.0)
}

/// `λ_l = 2[cos α - cos((l-1) 2π/n)]`, `l = 1..n`: the spectrum of the latitude
/// block at an equispaced equilibrium with spacing `alpha`.
pub fn circulant_eigenvalues(alpha: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least 2 agents");
    (0..n)
        .map(|l| 2.0 * (alpha.cos() - (l as f64 * 2.0 * std::f64::consts::PI / n as f64).cos()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatrixName {
    #[serde(rename = "A_psi")]
    APsi,
    #[serde(rename = "A_phi")]
    APhi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    Unstable,
    /// No positive eigenvalue, but some zero ones.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub matrix_name: MatrixName,
    pub eigenvalues: Vec<f64>,
    pub n_zero: usize,
    pub n_negative: usize,
    pub n_positive: usize,
    pub verdict: Verdict,
}

impl SpectrumReport {
    /// Counts signs with `|λ| < zero_tol · max(1, ρ)` treated as zero.
    pub fn from_eigenvalues(matrix_name: MatrixName, eigenvalues: Vec<f64>, zero_tol: f64) -> Self {
        let radius = eigenvalues.iter().fold(0.0f64, |r, l| r.max(l.abs()));
        let threshold = zero_tol * radius.max(1.0);
        let n_zero = eigenvalues.iter().filter(|l| l.abs() < threshold).count();
        let n_positive = eigenvalues.iter().filter(|&&l| l >= threshold).count();
        let n_negative = eigenvalues.len() - n_zero - n_positive;
        let verdict = if n_positive > 0 {
            Verdict::Unstable
        } else if n_zero > 0 {
            Verdict::Degenerate
        } else {
            Verdict::Stable
        };
        Self {
            matrix_name,
            eigenvalues,
            n_zero,
            n_negative,
            n_positive,
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSpectrum {
    pub psi: SpectrumReport,
    pub phi: SpectrumReport,
    pub verdict: Verdict,
}

impl EquilibriumSpectrum {
    pub fn n_zero(&self) -> usize {
        self.psi.n_zero + self.phi.n_zero
    }

    pub fn n_negative(&self) -> usize {
        self.psi.n_negative + self.phi.n_negative
    }

    pub fn n_positive(&self) -> usize {
        self.psi.n_positive + self.phi.n_positive
    }
}

/// Spectra of both Jacobian blocks at an equilibrium of the undirected ring.
///
/// The equilibrium may sit on any great circle; it is rotated onto the
/// equator first.
pub fn classify_equilibrium(
    state: &SystemState,
    g: &RingGraph,
    zero_tol: f64,
) -> Result<EquilibriumSpectrum> {
    if g.is_directed() {
        return Err(FormationError::Domain(
            "linearization is available for undirected rings only".into(),
        ));
    }
    let residual = equilibrium_residual(state, g);
    if residual > EQUILIBRIUM_TOL {
        return Err(FormationError::NotEquilibrium {
            residual,
            tolerance: EQUILIBRIUM_TOL,
        });
    }
    let eq = normalize_to_equator(state);
    let psi = SpectrumReport::from_eigenvalues(
        MatrixName::APsi,
        symmetric_eigenvalues(&jacobian_psi(&eq, g)?)?,
        zero_tol,
    );
    let phi = SpectrumReport::from_eigenvalues(
        MatrixName::APhi,
        symmetric_eigenvalues(&jacobian_phi(&eq, g)?)?,
        zero_tol,
    );
    let verdict = match (psi.verdict, phi.verdict) {
        (Verdict::Unstable, _) | (_, Verdict::Unstable) => Verdict::Unstable,
        (Verdict::Stable, Verdict::Stable) => Verdict::Stable,
        _ => Verdict::Degenerate,
    };
    Ok(EquilibriumSpectrum { psi, phi, verdict })
}
