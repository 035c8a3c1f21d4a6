//! Lippmann-Schwinger solver by Born (Neumann) iteration.
//!
//! With `v = e^{-ik alpha.x} u` and `v = 1 + eps`, the perturbation solves
//! `eps = f0 - T eps`, where `T eps = int G(x - y) q(y) eps(y) dy` uses the
//! kernel factored along `alpha` and `f0 = -T 1`. The series
//! `eps = sum_m (-T)^m f0` is summed until two consecutive terms fall below
//! `tol` in the sup-norm over the ball.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::green::{self, ConvolutionPath, GreenOperator, KernelParams};
use crate::grid::{BallDomain, ComplexField, DirectionSet};
use crate::linalg;
use crate::potential::{self, Potential};
use crate::vec3::{self, Vec3};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Converged (or best-effort) scattering solution for one `(alpha, k)`.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub u: ComplexField,
    pub v: ComplexField,
    pub eps: ComplexField,
    pub alpha: Vec3,
    pub k: Complex64,
    pub iterations: usize,
    /// `sup_{B_a} |eps - f0 + T eps|`.
    pub residual: f64,
    pub tol: f64,
    /// Sup-norms of the successive series terms, `f0` first.
    pub term_norms: Vec<f64>,
}

impl ScatteringSolution {
    pub fn converged(&self) -> bool {
        self.residual < 10.0 * self.tol
    }
}

/// The operator `T` for a fixed potential and kernel.
pub struct TOperator<'a> {
    q: &'a Potential,
    green: GreenOperator,
}

impl<'a> TOperator<'a> {
    pub fn new(q: &'a Potential, params: KernelParams) -> Self {
        Self::with_path(q, params, ConvolutionPath::Auto)
    }

    pub fn with_path(q: &'a Potential, params: KernelParams, path: ConvolutionPath) -> Self {
        Self {
            q,
            green: GreenOperator::new(&q.domain, params, path),
        }
    }

    pub fn apply(&self, eps: &[Complex64]) -> Vec<Complex64> {
        let weighted: Vec<Complex64> = eps
            .par_iter()
            .zip(self.q.values.par_iter())
            .map(|(e, q)| e * *q)
            .collect();
        self.green.apply(&weighted)
    }

    pub fn params(&self) -> &KernelParams {
        self.green.params()
    }
}

/// `T eps = int_{B_a} G(x - y, k) q(y) eps(y) dy` on the grid.
pub fn apply_t(eps: &ComplexField, q: &Potential, params: &KernelParams) -> Result<ComplexField> {
    eps.check_shape(&q.domain)?;
    let t = TOperator::new(q, *params);
    Ok(ComplexField {
        n: q.domain.n(),
        values: t.apply(&eps.values),
    })
}

pub(crate) fn ball_mask(domain: &BallDomain) -> Vec<bool> {
    let limit = domain.radius() * (1.0 + 1e-12);
    domain.nodes().map(|x| vec3::norm(&x) <= limit).collect()
}

pub(crate) fn masked_sup(values: &[Complex64], mask: &[bool]) -> f64 {
    values
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(v, _)| v.norm())
        .fold(0.0, f64::max)
}

fn assemble(
    q: &Potential,
    alpha: Vec3,
    k: Complex64,
    eps: Vec<Complex64>,
    iterations: usize,
    residual: f64,
    tol: f64,
    term_norms: Vec<f64>,
) -> ScatteringSolution {
    let domain = &q.domain;
    let v: Vec<Complex64> = eps.iter().map(|e| 1.0 + e).collect();
    let u: Vec<Complex64> = domain
        .nodes()
        .zip(&v)
        .map(|(x, vv)| (I * k * vec3::dot(&alpha, &x)).exp() * vv)
        .collect();
    let n = domain.n();
    ScatteringSolution {
        u: ComplexField { n, values: u },
        v: ComplexField { n, values: v },
        eps: ComplexField { n, values: eps },
        alpha,
        k,
        iterations,
        residual,
        tol,
        term_norms,
    }
}

/// Solve for `eps` by Neumann iteration.
pub fn solve_eps(
    q: &Potential,
    alpha: Vec3,
    k: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<ScatteringSolution> {
    let params = KernelParams::new(k, alpha)?;
    let t = TOperator::new(q, params);
    solve_eps_with(&t, tol, max_iter)
}

/// As [`solve_eps`], reusing a prepared operator.
pub fn solve_eps_with(t: &TOperator<'_>, tol: f64, max_iter: usize) -> Result<ScatteringSolution> {
    if !(tol > 0.0) {
        return Err(ScatterError::InvalidArgument(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let q = t.q;
    let params = *t.params();
    let domain = &q.domain;
    let zero = Complex64::new(0.0, 0.0);
    if q.is_zero() {
        return Ok(assemble(
            q,
            params.beta,
            params.k,
            vec![zero; domain.num_nodes()],
            0,
            0.0,
            tol,
            Vec::new(),
        ));
    }
    let mask = ball_mask(domain);
    let ones = vec![Complex64::new(1.0, 0.0); domain.num_nodes()];
    let free: Vec<Complex64> = t.apply(&ones).into_iter().map(|v| -v).collect();

    let mut term = free.clone();
    let mut eps = free.clone();
    let mut norms = vec![masked_sup(&term, &mask)];
    let mut growth_streak = 0usize;
    let mut iterations = 0usize;
    loop {
        let last = norms.len() - 1;
        if norms[last] < tol && (last == 0 || norms[last - 1] < tol) {
            break;
        }
        if iterations >= max_iter {
            return Err(ScatterError::NotConverged { tol, max_iter });
        }
        term = t.apply(&term).into_iter().map(|v| -v).collect();
        eps.par_iter_mut().zip(term.par_iter()).for_each(|(e, d)| *e += d);
        iterations += 1;
        let nrm = masked_sup(&term, &mask);
        norms.push(nrm);
        if !nrm.is_finite() {
            return Err(ScatterError::Divergence {
                iterations,
                last_norm: nrm,
            });
        }
        let len = norms.len();
        if len >= 3 && norms[len - 1] > norms[len - 3] {
            growth_streak += 1;
            if growth_streak >= (max_iter / 2).max(1) {
                return Err(ScatterError::Divergence {
                    iterations,
                    last_norm: nrm,
                });
            }
        } else {
            growth_streak = 0;
        }
    }
    let t_eps = t.apply(&eps);
    let res: Vec<Complex64> = eps
        .iter()
        .zip(&free)
        .zip(&t_eps)
        .map(|((e, f), te)| e - f + te)
        .collect();
    let residual = masked_sup(&res, &mask);
    Ok(assemble(
        q,
        params.beta,
        params.k,
        eps,
        iterations,
        residual,
        tol,
        norms,
    ))
}

/// Dense direct solve of the discrete system, restricted to the support of
/// `q`. Intended as an oracle on small grids (`n <= 13`).
pub fn solve_eps_dense(q: &Potential, alpha: Vec3, k: Complex64) -> Result<ScatteringSolution> {
    let domain = &q.domain;
    if domain.n() > 13 {
        return Err(ScatterError::InvalidArgument(
            "dense oracle is limited to n <= 13".into(),
        ));
    }
    let params = KernelParams::new(k, alpha)?;
    let h = domain.spacing();
    let support: Vec<usize> = (0..domain.num_nodes())
        .filter(|&i| q.values[i] != 0.0)
        .collect();
    let ijk = |idx: usize| {
        let (i, j, l) = domain.unravel(idx);
        [i as i64, j as i64, l as i64]
    };
    let kern = |a: usize, b: usize| {
        let (pa, pb) = (ijk(a), ijk(b));
        green::kernel_at_offset(h, &params, [pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]])
    };
    let s = support.len();
    let mut mat = vec![Complex64::new(0.0, 0.0); s * s];
    let mut rhs = vec![Complex64::new(0.0, 0.0); s];
    for (r, &a) in support.iter().enumerate() {
        for (c, &b) in support.iter().enumerate() {
            let tk = kern(a, b) * q.values[b];
            mat[r * s + c] = tk;
            rhs[r] -= tk;
        }
        mat[r * s + r] += 1.0;
    }
    let eps_s = linalg::solve_dense(mat, rhs)
        .ok_or_else(|| ScatterError::Degenerate("singular dense system".into()))?;
    // extend to all nodes: eps = -T(1 + eps)
    let eps: Vec<Complex64> = (0..domain.num_nodes())
        .into_par_iter()
        .map(|a| {
            -support
                .iter()
                .zip(&eps_s)
                .map(|(&b, e)| kern(a, b) * q.values[b] * (1.0 + e))
                .sum::<Complex64>()
        })
        .collect();
    Ok(assemble(q, alpha, k, eps, 0, 0.0, f64::EPSILON, Vec::new()))
}

/// `A(beta, alpha, k) = -(1/4 pi) int e^{-ik beta.y} q(y) u(y) dy`.
pub fn scattering_amplitude(
    q: &Potential,
    sol: &ScatteringSolution,
    beta: &Vec3,
) -> Result<Complex64> {
    sol.u.check_shape(&q.domain)?;
    if !sol.converged() {
        log::warn!(
            "amplitude requested from a non-converged solution (residual {:e}, tol {:e})",
            sol.residual,
            sol.tol
        );
    }
    Ok(amplitude_from_field(q, &sol.u.values, sol.k, beta))
}

pub(crate) fn amplitude_from_field(
    q: &Potential,
    u: &[Complex64],
    k: Complex64,
    beta: &Vec3,
) -> Complex64 {
    let weights = q.domain.ball_weights();
    let sum: Complex64 = (0..u.len())
        .into_par_iter()
        .filter(|&i| q.values[i] != 0.0)
        .map(|i| {
            let y = q.domain.node(i);
            (-I * k * vec3::dot(beta, &y)).exp() * q.values[i] * weights[i] * u[i]
        })
        .sum();
    -sum / (4.0 * PI)
}

/// First Born amplitude `-q~(k (alpha - beta)) / (4 pi)` for real `k`.
pub fn born_amplitude(q: &Potential, beta: &Vec3, alpha: &Vec3, k: f64) -> Complex64 {
    let xi = vec3::scale(&vec3::sub(alpha, beta), k);
    -potential::fourier_of_potential(q, &xi) / (4.0 * PI)
}

/// Sup-norm residual of the original equation
/// `u = e^{ik alpha.x} - int g(x, y) q(y) u(y) dy`, evaluated with the
/// kernel factored along `probe_dir` rather than `alpha`.
pub fn ls_residual_u(q: &Potential, sol: &ScatteringSolution, probe_dir: Vec3) -> Result<f64> {
    let domain = &q.domain;
    let k = sol.k;
    let params = KernelParams::new(k, probe_dir)?;
    let t = TOperator::new(q, params);
    // int g(x-y) f(y) dy = e^{ik d.x} int G_d(x-y) e^{-ik d.y} f(y) dy
    let shifted: Vec<Complex64> = domain
        .nodes()
        .zip(&sol.u.values)
        .map(|(y, u)| (-I * k * vec3::dot(&probe_dir, &y)).exp() * u)
        .collect();
    let conv = t.apply(&shifted);
    let res: Vec<Complex64> = domain
        .nodes()
        .zip(sol.u.values.iter().zip(&conv))
        .map(|(x, (u, c))| {
            let plane = (I * k * vec3::dot(&sol.alpha, &x)).exp();
            let g_term = (I * k * vec3::dot(&probe_dir, &x)).exp() * c;
            u - plane + g_term
        })
        .collect();
    Ok(masked_sup(&res, &ball_mask(domain)))
}

/// One row of an [`AmplitudeTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub beta: Vec3,
    pub alpha: Vec3,
    pub k: Complex64,
    pub amplitude: Complex64,
}

/// Samples of `A(beta, alpha, k)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AmplitudeTable {
    pub entries: Vec<AmplitudeEntry>,
}

impl AmplitudeTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `A(beta, alpha0, k)` over `betas x ks`, one solve per wavenumber.
pub fn fixed_direction_dataset(
    q: &Potential,
    alpha0: Vec3,
    betas: &DirectionSet,
    ks: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<AmplitudeTable> {
    if let Some(k) = ks.iter().find(|k| !(**k > 0.0)) {
        return Err(ScatterError::InvalidArgument(format!(
            "wavenumbers must be positive, got {k}"
        )));
    }
    let per_k: Vec<Result<Vec<AmplitudeEntry>>> = ks
        .par_iter()
        .map(|&k| {
            let kc = Complex64::new(k, 0.0);
            let sol = solve_eps(q, alpha0, kc, tol, max_iter)?;
            betas
                .directions()
                .iter()
                .map(|beta| {
                    Ok(AmplitudeEntry {
                        beta: *beta,
                        alpha: alpha0,
                        k: kc,
                        amplitude: scattering_amplitude(q, &sol, beta)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut entries = Vec::with_capacity(ks.len() * betas.len());
    for r in per_k {
        entries.extend(r?);
    }
    Ok(AmplitudeTable { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{fibonacci_sphere, make_grid};
    use crate::potential::bump_potential;

    fn c(k: f64) -> Complex64 {
        Complex64::new(k, 0.0)
    }

    #[test]
    fn free_case_is_exact() {
        let d = make_grid(1.0, 9).unwrap();
        let q = Potential::zero(&d);
        let alpha = [0.0, 0.0, 1.0];
        let sol = solve_eps(&q, alpha, c(3.0), 1e-8, 50).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.eps.sup_norm(), 0.0);
        for (x, u) in d.nodes().zip(&sol.u.values) {
            assert!((u - (I * 3.0 * x[2]).exp()).norm() < 1e-15);
        }
        assert_eq!(scattering_amplitude(&q, &sol, &[1.0, 0.0, 0.0]).unwrap().norm(), 0.0);
    }

    #[test]
    fn apply_t_trivial_cases() {
        let d = make_grid(1.0, 9).unwrap();
        let q = bump_potential(&d, 0.3, 0.7).unwrap();
        let p = KernelParams::real(2.0, [1.0, 0.0, 0.0]).unwrap();
        let f = ComplexField::from_fn(&d, |x| Complex64::new(1.0 + x[0], x[1]));
        assert_eq!(apply_t(&ComplexField::zeros(&d), &q, &p).unwrap().sup_norm(), 0.0);
        assert_eq!(apply_t(&f, &Potential::zero(&d), &p).unwrap().sup_norm(), 0.0);
        let a = apply_t(&f, &q, &p).unwrap();
        let b = apply_t(&f, &q.scaled(2.0), &p).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((2.0 * x - y).norm() <= 1e-15 * y.norm().max(1.0));
        }
    }

    #[test]
    fn chained_relations_hold() {
        let d = make_grid(1.0, 13).unwrap();
        let q = bump_potential(&d, 0.1, 0.8).unwrap();
        let alpha = vec3::normalize(&[0.2, 0.3, 1.0]);
        let sol = solve_eps(&q, alpha, c(5.0), 1e-10, 100).unwrap();
        for (idx, x) in d.nodes().enumerate() {
            let ph = (-I * 5.0 * vec3::dot(&alpha, &x)).exp();
            assert!((sol.v.values[idx] - ph * sol.u.values[idx]).norm() < 1e-12);
            assert!((sol.v.values[idx] - 1.0 - sol.eps.values[idx]).norm() < 1e-12);
        }
        assert!(sol.residual < 1e-9);
        assert!(ls_residual_u(&q, &sol, vec3::normalize(&[1.0, -1.0, 0.0])).unwrap() < 1e-8);
    }

    #[test]
    fn neumann_matches_dense_oracle() {
        let d = make_grid(1.0, 11).unwrap();
        let q = bump_potential(&d, 0.5, 0.8).unwrap();
        let alpha = [0.0, 0.6, 0.8];
        let k = Complex64::new(4.0, 0.3);
        let it = solve_eps(&q, alpha, k, 1e-12, 200).unwrap();
        let dense = solve_eps_dense(&q, alpha, k).unwrap();
        let err = it
            .eps
            .values
            .iter()
            .zip(&dense.eps.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn first_born_term_matches_fourier_transform() {
        let d = make_grid(1.0, 13).unwrap();
        let q = bump_potential(&d, 0.1, 0.8).unwrap();
        let alpha = [0.0, 0.0, 1.0];
        let beta = vec3::normalize(&[1.0, 0.5, 0.2]);
        let k = 4.0;
        let plane: Vec<Complex64> = d
            .nodes()
            .map(|x| (I * k * vec3::dot(&alpha, &x)).exp())
            .collect();
        let a = amplitude_from_field(&q, &plane, c(k), &beta);
        let b = born_amplitude(&q, &beta, &alpha, k);
        assert!((a - b).norm() < 1e-10 * b.norm().max(1e-12));
    }

    #[test]
    fn divergence_is_reported() {
        let d = make_grid(1.0, 9).unwrap();
        let q = bump_potential(&d, 400.0, 0.7).unwrap();
        let r = solve_eps(&q, [1.0, 0.0, 0.0], c(0.5), 1e-8, 40);
        assert!(matches!(r, Err(ScatterError::Divergence { .. })), "{r:?}");
    }

    #[test]
    fn dataset_shape_and_free_case() {
        let d = make_grid(1.0, 9).unwrap();
        let betas = fibonacci_sphere(7).unwrap();
        let t = fixed_direction_dataset(&Potential::zero(&d), [0.0, 0.0, 1.0], &betas, &[1.0, 2.0], 1e-8, 10)
            .unwrap();
        assert_eq!(t.len(), 14);
        assert!(t.entries.iter().all(|e| e.amplitude.norm() == 0.0));
        assert!(fixed_direction_dataset(&Potential::zero(&d), [0.0, 0.0, 1.0], &betas, &[0.0], 1e-8, 10).is_err());
    }
}
