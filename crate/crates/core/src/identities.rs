//! Two-path checks of the amplitude-difference identity, reciprocity and the
//! orthogonality relation behind fixed-direction uniqueness.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ScatterError};
use crate::grid::ball_quadrature;
use crate::potential::Potential;
use crate::radon::relative_gap;
use crate::solver::{scattering_amplitude, solve_eps, ScatteringSolution, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::vec3::{self, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Parameters a report was computed at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityContext {
    pub identity: &'static str,
    pub k: f64,
    pub alpha: Vec3,
    pub beta: Vec3,
    pub grid_n: usize,
    pub potentials: String,
}

/// Both sides of an identity and their discrepancy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub context: IdentityContext,
}

impl IdentityReport {
    fn new(lhs: Complex64, rhs: Complex64, context: IdentityContext) -> Self {
        Self {
            lhs,
            rhs,
            abs_err: (lhs - rhs).norm(),
            rel_err: relative_gap(lhs, rhs),
            context,
        }
    }
}

/// Solver settings shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

fn solve(q: &Potential, dir: Vec3, k: f64, s: SolveSettings) -> Result<ScatteringSolution> {
    let sol = solve_eps(q, dir, Complex64::new(k, 0.0), s.tol, s.max_iter)?;
    if !sol.converged() {
        return Err(ScatterError::NotConverged {
            tol: s.tol,
            max_iter: s.max_iter,
        });
    }
    Ok(sol)
}

fn check_pair(q1: &Potential, q2: &Potential) -> Result<()> {
    if q1.domain != q2.domain {
        return Err(ScatterError::InvalidArgument(
            "potentials must share one grid".into(),
        ));
    }
    Ok(())
}

/// `-4 pi [A1(beta, alpha, k) - A2(beta, alpha, k)]` against
/// `int [q1 - q2] u1(x, alpha, k) u2(x, -beta, k) dx`.
///
/// The volume integral runs over the common ball `B_a` of the grid.
pub fn amplitude_difference_check(
    q1: &Potential,
    q2: &Potential,
    beta: &Vec3,
    alpha: &Vec3,
    k: f64,
) -> Result<IdentityReport> {
    amplitude_difference_check_with(q1, q2, beta, alpha, k, SolveSettings::default())
}

pub fn amplitude_difference_check_with(
    q1: &Potential,
    q2: &Potential,
    beta: &Vec3,
    alpha: &Vec3,
    k: f64,
    s: SolveSettings,
) -> Result<IdentityReport> {
    check_pair(q1, q2)?;
    let u1 = solve(q1, *alpha, k, s)?;
    let u2_alpha = solve(q2, *alpha, k, s)?;
    let u2_back = solve(q2, vec3::neg(beta), k, s)?;
    let a1 = scattering_amplitude(q1, &u1, beta)?;
    let a2 = scattering_amplitude(q2, &u2_alpha, beta)?;
    let lhs = -4.0 * PI * (a1 - a2);
    let integrand: Vec<Complex64> = (0..q1.values.len())
        .into_par_iter()
        .map(|i| (q1.values[i] - q2.values[i]) * u1.u.values[i] * u2_back.u.values[i])
        .collect();
    let rhs = ball_quadrature(&q1.domain, &integrand);
    Ok(IdentityReport::new(
        lhs,
        rhs,
        IdentityContext {
            identity: "amplitude-difference",
            k,
            alpha: *alpha,
            beta: *beta,
            grid_n: q1.domain.n(),
            potentials: format!("{} | {}", q1.label, q2.label),
        },
    ))
}

/// `A(beta, alpha, k)` against `A(-alpha, -beta, k)`.
pub fn reciprocity_check(q: &Potential, beta: &Vec3, alpha: &Vec3, k: f64) -> Result<IdentityReport> {
    reciprocity_check_with(q, beta, alpha, k, SolveSettings::default())
}

pub fn reciprocity_check_with(
    q: &Potential,
    beta: &Vec3,
    alpha: &Vec3,
    k: f64,
    s: SolveSettings,
) -> Result<IdentityReport> {
    let forward = solve(q, *alpha, k, s)?;
    let backward = solve(q, vec3::neg(beta), k, s)?;
    let lhs = scattering_amplitude(q, &forward, beta)?;
    let rhs = scattering_amplitude(q, &backward, &vec3::neg(alpha))?;
    Ok(IdentityReport::new(
        lhs,
        rhs,
        IdentityContext {
            identity: "reciprocity",
            k,
            alpha: *alpha,
            beta: *beta,
            grid_n: q.domain.n(),
            potentials: q.label.clone(),
        },
    ))
}

/// `int p u1(x, alpha0, k) u2(x, -beta, k) dx` against
/// `int e^{i kappa zeta.x} (1 + eps) p dx` with `p = q1 - q2`,
/// `zeta = (alpha0 - beta)/tau`, `kappa = tau k`, `eps = eps1 + eps2 + eps1 eps2`.
pub fn orthogonality_relation_check(
    q1: &Potential,
    q2: &Potential,
    alpha0: &Vec3,
    beta: &Vec3,
    k: f64,
) -> Result<IdentityReport> {
    orthogonality_relation_check_with(q1, q2, alpha0, beta, k, SolveSettings::default())
}

pub fn orthogonality_relation_check_with(
    q1: &Potential,
    q2: &Potential,
    alpha0: &Vec3,
    beta: &Vec3,
    k: f64,
    s: SolveSettings,
) -> Result<IdentityReport> {
    check_pair(q1, q2)?;
    let diff = vec3::sub(alpha0, beta);
    let tau = vec3::norm(&diff);
    if tau < 1e-12 {
        return Err(ScatterError::Degenerate(
            "beta = alpha0 gives tau = 0".into(),
        ));
    }
    let zeta = vec3::scale(&diff, 1.0 / tau);
    let kappa = tau * k;
    let s1 = solve(q1, *alpha0, k, s)?;
    let s2 = solve(q2, vec3::neg(beta), k, s)?;
    let domain = &q1.domain;
    let (lhs_f, rhs_f): (Vec<Complex64>, Vec<Complex64>) = (0..q1.values.len())
        .into_par_iter()
        .map(|i| {
            let p = q1.values[i] - q2.values[i];
            let x = domain.node(i);
            let direct = p * s1.u.values[i] * s2.u.values[i];
            // eps_j from the factored fields v_j = 1 + eps_j
            let e1 = s1.eps.values[i];
            let e2 = s2.eps.values[i];
            let eps = e1 + e2 + e1 * e2;
            let rewritten = (I * kappa * vec3::dot(&zeta, &x)).exp() * (1.0 + eps) * p;
            (direct, rewritten)
        })
        .unzip();
    Ok(IdentityReport::new(
        ball_quadrature(domain, &lhs_f),
        ball_quadrature(domain, &rhs_f),
        IdentityContext {
            identity: "orthogonality-relation",
            k,
            alpha: *alpha0,
            beta: *beta,
            grid_n: domain.n(),
            potentials: format!("{} | {}", q1.label, q2.label),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::potential::{bump_potential, shifted_bump_potential};
    use crate::solver::born_amplitude;

    fn setup(n: usize) -> (Potential, Potential, Potential) {
        let d = make_grid(1.0, n).unwrap();
        (
            bump_potential(&d, 0.1, 0.8).unwrap(),
            shifted_bump_potential(&d, 0.08, 0.5, [0.1, 0.2, -0.1]).unwrap(),
            Potential::zero(&d),
        )
    }

    #[test]
    fn amplitude_difference_identity() {
        let (q1, q2, z) = setup(17);
        let alpha = [0.0, 0.0, 1.0];
        let beta = vec3::normalize(&[1.0, 0.5, 0.2]);
        let same = amplitude_difference_check(&q1, &q1, &beta, &alpha, 5.0).unwrap();
        assert!(same.lhs.norm() < 1e-12 && same.rhs.norm() < 1e-12);
        let reduced = amplitude_difference_check(&q1, &z, &beta, &alpha, 5.0).unwrap();
        assert!(reduced.rel_err < 1e-10, "{reduced:?}");
        let full = amplitude_difference_check(&q1, &q2, &beta, &alpha, 5.0).unwrap();
        assert!(full.rel_err < 1e-2, "{full:?}");
        assert_eq!(full.abs_err, (full.lhs - full.rhs).norm());
    }

    #[test]
    fn reciprocity() {
        let (q1, _, z) = setup(17);
        let alpha = vec3::normalize(&[0.3, -0.2, 1.0]);
        let beta = vec3::normalize(&[-1.0, 0.4, 0.1]);
        let r0 = reciprocity_check(&z, &beta, &alpha, 5.0).unwrap();
        assert_eq!(r0.lhs, Complex64::new(0.0, 0.0));
        assert_eq!(r0.rel_err, 0.0);
        let b1 = born_amplitude(&q1, &beta, &alpha, 5.0);
        let b2 = born_amplitude(&q1, &vec3::neg(&alpha), &vec3::neg(&beta), 5.0);
        assert!((b1 - b2).norm() < 1e-14 * b1.norm().max(1.0));
        let r = reciprocity_check(&q1, &beta, &alpha, 5.0).unwrap();
        assert!(r.rel_err < 1e-2, "{r:?}");
    }

    #[test]
    fn orthogonality_relation_rewriting() {
        let (q1, q2, z) = setup(17);
        let alpha0 = [0.0, 0.0, 1.0];
        let beta = vec3::normalize(&[0.6, 0.0, 0.8]);
        let same = orthogonality_relation_check(&q1, &q1, &alpha0, &beta, 4.0).unwrap();
        assert_eq!(same.lhs.norm(), 0.0);
        assert_eq!(same.rhs.norm(), 0.0);
        let one = orthogonality_relation_check(&q1, &z, &alpha0, &beta, 4.0).unwrap();
        assert!(one.rel_err < 1e-10);
        for (b, k) in [([1.0, 0.0, 0.0], 3.0), ([0.0, 0.6, -0.8], 6.0)] {
            let r = orthogonality_relation_check(&q1, &q2, &alpha0, &b, k).unwrap();
            assert!(r.rel_err < 1e-8, "{r:?}");
        }
        assert!(matches!(
            orthogonality_relation_check(&q1, &q2, &alpha0, &alpha0, 3.0),
            Err(ScatterError::Degenerate(_))
        ));
    }
}
