//! Derivative-free global minimization over the unit sphere.
//!
//! A function on S² is scanned on nested Fibonacci lattices and the best
//! lattice points are polished with Nelder–Mead in a local tangent chart.
//! The lattice sizes are `32, 64, 128, …` up to the first size that reaches
//! the requested resolution, and the answer is the minimum over all of them,
//! so raising the resolution can never make the result worse.

use std::f64::consts::PI;

use crate::sphere_geom::Vec3;

const BASE_LEVEL: usize = 32;

/// `count` nearly uniform points on S² along the golden-angle spiral.
pub fn fibonacci_lattice(count: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            Vec3::new(r * c, r * s, z)
        })
        .collect()
}

/// Lattice sizes scanned for a requested resolution.
pub fn lattice_levels(resolution: usize) -> Vec<usize> {
    let mut levels = vec![BASE_LEVEL];
    while *levels.last().expect("non-empty") < resolution {
        let next = levels.last().expect("non-empty") * 2;
        levels.push(next);
    }
    levels
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    /// Stop once every vertex lies within this distance of the best one.
    pub x_tol: f64,
    pub max_evals: usize,
}

/// Plain Nelder–Mead with the standard coefficients (1, 2, ½, ½).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for k in 0..dim {
        let mut x = x0.to_vec();
        x[k] += opts.initial_step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = dim + 1;

    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
    };

    loop {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = simplex[1..]
            .iter()
            .map(|x| {
                x.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread < opts.x_tol || evals >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for x in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let reflected = combine(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        evals += 1;

        if fr < values[0] {
            let expanded = combine(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
        } else if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
        } else {
            let (contracted, fc) = if fr < values[dim] {
                let x = combine(&centroid, &reflected, 0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = combine(&centroid, &worst, 0.5);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < values[dim].min(fr) {
                simplex[dim] = contracted;
                values[dim] = fc;
            } else {
                let best = simplex[0].clone();
                for k in 1..=dim {
                    simplex[k] = combine(&best, &simplex[k], 0.5);
                    values[k] = f(&simplex[k]);
                }
                evals += dim;
            }
        }
    }
    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty simplex");
    (simplex[best].clone(), values[best])
}

/// Orthonormal pair spanning the tangent plane at unit `p`.
pub fn tangent_basis(p: &Vec3) -> (Vec3, Vec3) {
    let helper = if p.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let t1 = p.cross(&helper).normalize();
    let t2 = p.cross(&t1);
    (t1, t2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSearch {
    /// Minimum number of lattice points; see [`lattice_levels`].
    pub resolution: usize,
    /// Lattice points polished per level.
    pub starts: usize,
    /// Refinement stops when the simplex is smaller than this (radians).
    pub x_tol: f64,
}

impl Default for SphereSearch {
    fn default() -> Self {
        Self {
            resolution: 4096,
            starts: 3,
            x_tol: 1e-11,
        }
    }
}

/// Polishes `start` with restarted Nelder–Mead in the tangent chart at the
/// current best point, until a restart no longer improves.
fn refine<F: Fn(&Vec3) -> f64>(
    f: &F,
    start: Vec3,
    start_value: f64,
    step: f64,
    x_tol: f64,
) -> (Vec3, f64) {
    let mut best = (start, start_value);
    let mut step = step;
    for _ in 0..8 {
        let centre = best.0;
        let (t1, t2) = tangent_basis(&centre);
        let chart = |x: &[f64]| (centre + t1 * x[0] + t2 * x[1]).normalize();
        let opts = NelderMeadOptions {
            initial_step: step,
            x_tol,
            max_evals: 600,
        };
        let (x, value) = nelder_mead(|x| f(&chart(x)), &[0.0, 0.0], &opts);
        let improved = best.1 - value;
        if value < best.1 {
            best = (chart(&x), value);
        }
        if improved <= 1e-15 {
            break;
        }
        step = (step * 0.25).max(x_tol * 10.0);
    }
    best
}

/// Approximate global minimum of `f` over S².
///
/// Lattice points lying within one lattice spacing of an optimum already
/// found by refinement are not refined again.
pub fn minimize_on_sphere<F: Fn(&Vec3) -> f64>(f: F, opts: &SphereSearch) -> (Vec3, f64) {
    let mut best = (Vec3::z(), f64::INFINITY);
    let mut optima: Vec<Vec3> = Vec::new();
    for level in lattice_levels(opts.resolution) {
        let lattice = fibonacci_lattice(level);
        let mut scored: Vec<(f64, usize)> =
            lattice.iter().enumerate().map(|(i, p)| (f(p), i)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let spacing = (4.0 * PI / level as f64).sqrt();
        for &(value, idx) in scored.iter().take(opts.starts.max(1)) {
            if value < best.1 {
                best = (lattice[idx], value);
            }
            let start = lattice[idx];
            if optima.iter().any(|o| o.dot(&start) > spacing.cos()) {
                continue;
            }
            let candidate = refine(&f, start, value, spacing, opts.x_tol);
            optima.push(candidate.0);
            if candidate.1 < best.1 {
                best = candidate;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lattice_is_unit_and_spread() {
        let pts = fibonacci_lattice(500);
        assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() < 1e-14));
        let mean = pts.iter().fold(Vec3::zeros(), |a, p| a + p) / 500.0;
        assert!(mean.norm() < 1e-2);
    }

    #[test]
    fn levels_grow_monotonically() {
        assert_eq!(lattice_levels(1), vec![32]);
        assert_eq!(lattice_levels(100), vec![32, 64, 128]);
        assert_eq!(lattice_levels(4096).last(), Some(&4096));
        for r in 1..3000 {
            let small = lattice_levels(r);
            let big = lattice_levels(r + 1);
            assert!(small.iter().all(|l| big.contains(l)));
            assert!(big.iter().sum::<usize>() > r);
        }
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let opts = NelderMeadOptions {
            initial_step: 0.5,
            x_tol: 1e-10,
            max_evals: 5000,
        };
        let (x, v) = nelder_mead(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 0.5,
            &[0.0, 0.0],
            &opts,
        );
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(x[1], -2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn sphere_minimum_of_smallest_enclosing_cap() {
        // max distance to two points is minimized at their midpoint
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 1.0, 0.0);
        let f = |v: &Vec3| {
            a.dot(v)
                .clamp(-1.0, 1.0)
                .acos()
                .max(b.dot(v).clamp(-1.0, 1.0).acos())
        };
        let (v, value) = minimize_on_sphere(f, &SphereSearch::default());
        assert_abs_diff_eq!(value, PI / 4.0, epsilon = 1e-7);
        assert_abs_diff_eq!(v, Vec3::new(1.0, 1.0, 0.0).normalize(), epsilon = 1e-6);
    }
}
