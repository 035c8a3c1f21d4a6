//! Radon transform `f^(beta, lambda) = int_{beta.x = lambda} f dsigma` and the
//! three identities it satisfies: the moment identity, the slice identity
//! against `e^{ik beta.x}` and antipodal symmetry.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::{ball_quadrature, ball_quadrature_real, DirectionSet};
use crate::potential::{trilinear, Potential};
use crate::quadrature::GaussLegendre;
use crate::vec3::{self, Vec3};

/// Minimum number of offsets per profile.
pub const MIN_OFFSETS: usize = 16;

/// Samples of `f^(beta, lambda)` on uniform offsets in `[-a, a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadonProfile {
    pub beta: Vec3,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadonProfile {
    pub fn spacing(&self) -> f64 {
        self.lambdas[1] - self.lambdas[0]
    }

    /// Trapezoidal `int e^{(i kappa - eta) lambda} f^(lambda) dlambda`.
    pub fn transform(&self, kappa: f64, eta: f64) -> Complex64 {
        let z = Complex64::new(-eta, kappa);
        let m = self.values.len();
        let dl = self.spacing();
        self.lambdas
            .iter()
            .zip(&self.values)
            .enumerate()
            .filter(|(_, (_, v))| **v != 0.0)
            .map(|(j, (l, v))| {
                let w = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
                (z * l).exp() * (w * v)
            })
            .sum::<Complex64>()
            * dl
    }

    /// `int f^ dlambda`.
    pub fn integral(&self) -> f64 {
        self.transform(0.0, 0.0).re
    }
}

/// How points on a plane are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadonSampler {
    /// Square lattice with the grid spacing and trilinear interpolation of
    /// the grid samples.
    Grid,
    /// Polar Gauss-Legendre x trapezoid rule on the closed form of the
    /// potential (falls back to interpolation for sampled potentials).
    Closed { radial_panels: usize, angular: usize },
}

impl RadonSampler {
    pub fn closed_default() -> Self {
        RadonSampler::Closed {
            radial_panels: 6,
            angular: 48,
        }
    }
}

/// Offsets `lambda_j = a (2j - (m-1)) / (m-1)`, antisymmetric exactly.
pub fn offsets(radius_a: f64, m: usize) -> Vec<f64> {
    let m1 = (m - 1) as f64;
    (0..m)
        .map(|j| radius_a * (2.0 * j as f64 - m1) / m1)
        .collect()
}

/// Radon profile by grid interpolation with `m` offsets.
pub fn radon_transform(f: &Potential, beta: &Vec3, m: usize) -> RadonProfile {
    radon_transform_with(f, beta, m, RadonSampler::Grid)
}

/// Radon profile with `max(m, 16)` offsets and a chosen plane sampler.
pub fn radon_transform_with(
    f: &Potential,
    beta: &Vec3,
    m: usize,
    sampler: RadonSampler,
) -> RadonProfile {
    let m = m.max(MIN_OFFSETS);
    let a = f.domain.radius();
    let lambdas = offsets(a, m);
    let (e1, e2) = vec3::orthonormal_frame(beta);
    let values = lambdas
        .par_iter()
        .map(|&lambda| match sampler {
            RadonSampler::Grid => plane_integral_grid(f, beta, &e1, &e2, lambda),
            RadonSampler::Closed {
                radial_panels,
                angular,
            } => plane_integral_polar(f, beta, &e1, &e2, lambda, radial_panels, angular),
        })
        .collect();
    RadonProfile {
        beta: *beta,
        lambdas,
        values,
    }
}

fn plane_integral_grid(f: &Potential, beta: &Vec3, e1: &Vec3, e2: &Vec3, lambda: f64) -> f64 {
    let a = f.domain.radius();
    let h = f.domain.spacing();
    let disk2 = a * a - lambda * lambda;
    if disk2 <= 0.0 {
        return 0.0;
    }
    let kmax = (disk2.sqrt() / h).floor() as i64;
    let center = vec3::scale(beta, lambda);
    let mut acc = 0.0;
    for i in -kmax..=kmax {
        let u = i as f64 * h;
        for j in -kmax..=kmax {
            let v = j as f64 * h;
            if u * u + v * v > disk2 {
                continue;
            }
            let x = vec3::add(&center, &vec3::add(&vec3::scale(e1, u), &vec3::scale(e2, v)));
            acc += trilinear(&f.domain, &f.values, &x);
        }
    }
    acc * h * h
}

fn plane_integral_polar(
    f: &Potential,
    beta: &Vec3,
    e1: &Vec3,
    e2: &Vec3,
    lambda: f64,
    radial_panels: usize,
    angular: usize,
) -> f64 {
    let reach = f
        .family
        .support_radius()
        .unwrap_or(f.domain.radius())
        .min(f.domain.radius());
    let disk2 = reach * reach - lambda * lambda;
    if disk2 <= 0.0 {
        return 0.0;
    }
    let rho_max = disk2.sqrt();
    let gl = GaussLegendre::new(16);
    let center = vec3::scale(beta, lambda);
    let dphi = std::f64::consts::TAU / angular as f64;
    let panel = rho_max / radial_panels as f64;
    let mut acc = 0.0;
    for p in 0..radial_panels {
        for (rho, w) in gl.mapped(p as f64 * panel, (p + 1) as f64 * panel) {
            let mut ring = 0.0;
            for k in 0..angular {
                let phi = k as f64 * dphi;
                let d = vec3::add(
                    &vec3::scale(e1, rho * phi.cos()),
                    &vec3::scale(e2, rho * phi.sin()),
                );
                ring += f.eval(&vec3::add(&center, &d));
            }
            acc += w * rho * ring * dphi;
        }
    }
    acc
}

/// Relative discrepancy of `int_B f dx = int f^(beta, lambda) dlambda`.
pub fn moment_identity_check(f: &Potential, beta: &Vec3) -> f64 {
    let lhs = ball_quadrature_real(&f.domain, &f.values);
    let rhs = radon_transform(f, beta, 2 * f.domain.n()).integral();
    relative_gap(Complex64::new(lhs, 0.0), Complex64::new(rhs, 0.0))
}

/// Relative discrepancy of
/// `int_B e^{ik beta.x} f dx = int e^{ik lambda} f^(beta, lambda) dlambda`.
pub fn slice_identity_check(f: &Potential, beta: &Vec3, k: f64) -> f64 {
    let field: Vec<Complex64> = f
        .domain
        .nodes()
        .zip(&f.values)
        .map(|(x, v)| Complex64::from_polar(*v, k * vec3::dot(beta, &x)))
        .collect();
    let lhs = ball_quadrature(&f.domain, &field);
    let rhs = radon_transform(f, beta, 2 * f.domain.n()).transform(k, 0.0);
    relative_gap(lhs, rhs)
}

/// `max |f^(beta, lambda) - f^(-beta, -lambda)|` over the set and offsets.
pub fn antipodal_identity_check(f: &Potential, betas: &DirectionSet) -> f64 {
    antipodal_gap(f, betas, RadonSampler::Grid)
}

pub fn antipodal_gap(f: &Potential, betas: &DirectionSet, sampler: RadonSampler) -> f64 {
    let m = 2 * f.domain.n();
    betas
        .directions()
        .iter()
        .map(|b| {
            let p = radon_transform_with(f, b, m, sampler);
            let q = radon_transform_with(f, &vec3::neg(b), m, sampler);
            p.values
                .iter()
                .zip(q.values.iter().rev())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `|lhs - rhs| / max(|lhs|, |rhs|)`, zero when both vanish.
pub fn relative_gap(lhs: Complex64, rhs: Complex64) -> f64 {
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).norm() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{fibonacci_sphere, make_grid};
    use crate::potential::{bump_potential, shifted_bump_potential};
    use std::f64::consts::PI;

    #[test]
    fn ball_indicator_central_slice_is_disk_area() {
        let d = make_grid(1.2, 49).unwrap();
        let vals = d
            .nodes()
            .map(|x| if vec3::norm(&x) <= 1.0 { 1.0 } else { 0.0 })
            .collect();
        let f = Potential::from_samples(&d, vals, 0, "indicator").unwrap();
        let beta = vec3::normalize(&[0.3, 0.4, 0.5]);
        let p = radon_transform(&f, &beta, 97);
        let mid = p.values[48];
        assert!(p.lambdas[48].abs() < 1e-15);
        assert!((mid / PI - 1.0).abs() < 0.02, "slice {mid}");
        for (l, v) in p.lambdas.iter().zip(&p.values) {
            if l.abs() >= 1.0 + d.spacing() * 3f64.sqrt() {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn radial_profile_is_even() {
        let d = make_grid(1.0, 25).unwrap();
        let f = bump_potential(&d, 1.0, 0.8).unwrap();
        let p = radon_transform(&f, &[0.0, 0.0, 1.0], 50);
        for (a, b) in p.values.iter().zip(p.values.iter().rev()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn identities_for_zero_potential() {
        let d = make_grid(1.0, 17).unwrap();
        let z = Potential::zero(&d);
        assert_eq!(moment_identity_check(&z, &[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(slice_identity_check(&z, &[1.0, 0.0, 0.0], 3.0), 0.0);
        assert_eq!(antipodal_identity_check(&z, &fibonacci_sphere(6).unwrap()), 0.0);
    }

    #[test]
    fn antipodal_symmetry_of_shifted_bump() {
        let d = make_grid(1.0, 25).unwrap();
        let f = shifted_bump_potential(&d, 1.0, 0.5, [0.2, -0.1, 0.15]).unwrap();
        let dirs = fibonacci_sphere(8).unwrap();
        assert!(antipodal_identity_check(&f, &dirs) < 1e-6);
        assert!(antipodal_gap(&f, &dirs, RadonSampler::closed_default()) < 1e-10);
    }

    #[test]
    fn closed_sampler_agrees_with_grid_sampler() {
        let d = make_grid(1.0, 33).unwrap();
        let f = bump_potential(&d, 1.0, 0.8).unwrap();
        let beta = vec3::normalize(&[1.0, 2.0, 0.5]);
        let g = radon_transform(&f, &beta, 66);
        let c = radon_transform_with(&f, &beta, 66, RadonSampler::closed_default());
        let peak = c.values.iter().cloned().fold(0.0, f64::max);
        for (a, b) in g.values.iter().zip(&c.values) {
            assert!((a - b).abs() < 0.01 * peak, "{a} vs {b}");
        }
    }

    #[test]
    fn transform_is_linear() {
        let d = make_grid(1.0, 17).unwrap();
        let f = bump_potential(&d, 1.0, 0.8).unwrap();
        let g = shifted_bump_potential(&d, 0.5, 0.4, [0.3, 0.0, 0.0]).unwrap();
        let s = Potential::from_samples(
            &d,
            f.values.iter().zip(&g.values).map(|(a, b)| 2.0 * a - b).collect(),
            4,
            "combo",
        )
        .unwrap();
        let beta = [0.0, 0.6, 0.8];
        let (pf, pg, ps) = (
            radon_transform(&f, &beta, 34),
            radon_transform(&g, &beta, 34),
            radon_transform(&s, &beta, 34),
        );
        for i in 0..34 {
            assert!((2.0 * pf.values[i] - pg.values[i] - ps.values[i]).abs() < 1e-12);
        }
    }
}
