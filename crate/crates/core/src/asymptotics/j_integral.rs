use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Result, ScatterError};
use crate::quadrature::adaptive_with_breaks;

const REL_TOL: f64 = 1e-10;
const TAIL_TOL: f64 = 1e-12;

/// `J`, its `J-script` bound and the pieces of the `J-script` split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JIntegralReport {
    pub kappa: f64,
    pub eta: f64,
    pub ell: u32,
    pub j: f64,
    pub j_script: f64,
    /// `2 pi gamma^{1/2} eta^{-1} [(ell - 2) kappa]^{-1} J-script`.
    pub j_bound: f64,
    pub big_j1: f64,
    pub big_j2: f64,
    pub small_j1: f64,
    pub small_j2: f64,
}

fn validate(kappa: f64, eta: f64, ell: u32) -> Result<()> {
    if ell <= 3 {
        return Err(ScatterError::InvalidArgument(format!("ell must exceed 3, got {ell}")));
    }
    if !(eta > 0.0) || !(kappa > 0.0) {
        return Err(ScatterError::InvalidArgument(format!(
            "kappa and eta must be positive, got ({kappa}, {eta})"
        )));
    }
    Ok(())
}

/// `B(r) = int_{-1}^{1} dt / ([(r - kappa t)^2 + eta^2 t^2]^{1/2} (1 + gamma + r^2 - 2 r kappa t)^{ell/2})`.
fn b_of_r(r: f64, kappa: f64, eta: f64, ell: f64) -> f64 {
    let gamma = kappa * kappa + eta * eta;
    let t_star = (r * kappa / gamma).clamp(-1.0, 1.0);
    let mut f = |t: f64| {
        let s = ((r - kappa * t).powi(2) + eta * eta * t * t).sqrt();
        let w = 1.0 + gamma + r * r - 2.0 * r * kappa * t;
        1.0 / (s * w.powf(ell / 2.0))
    };
    let breaks: Vec<f64> = if t_star > -1.0 && t_star < 1.0 {
        vec![-1.0, t_star, 1.0]
    } else {
        vec![-1.0, 1.0]
    };
    adaptive_with_breaks(&mut f, &breaks, 0.0, REL_TOL)
}

/// Radius beyond which `int_R^inf 2 pi r B(r) dr` is below `1e-12`, using
/// `B(r) <= 2 / ((r - kappa) (1 + eta^2 + (r - kappa)^2)^{ell/2})` for `r > kappa`.
fn j_cutoff(kappa: f64, ell: f64) -> f64 {
    let tail = |r: f64| 4.0 * PI * r / (r - kappa) * (r - kappa).powf(1.0 - ell) / (ell - 1.0);
    let mut r = 2.0 * kappa + 1.0;
    while tail(r) > TAIL_TOL {
        r = kappa + 2.0 * (r - kappa);
    }
    r
}

fn geometric_breaks(start: f64, end: f64, anchors: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = anchors.iter().copied().filter(|x| *x > start && *x < end).collect();
    b.push(start);
    b.push(end);
    let mut x = anchors.iter().copied().fold(1.0_f64, f64::max) * 2.0;
    while x < end {
        b.push(x);
        x *= 2.0;
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `J = 2 pi int_0^inf r B(r) dr` by nested adaptive quadrature.
pub fn j_integral(kappa: f64, eta: f64, ell: u32) -> Result<f64> {
    validate(kappa, eta, ell)?;
    let l = ell as f64;
    let r_max = j_cutoff(kappa, l);
    let breaks = geometric_breaks(0.0, r_max, &[0.5 * kappa, kappa, 1.5 * kappa]);
    let mut f = |r: f64| r * b_of_r(r, kappa, eta, l);
    Ok(2.0 * PI * adaptive_with_breaks(&mut f, &breaks, 0.0, REL_TOL))
}

fn j_script_integrand(r: f64, kappa: f64, eta: f64, b: f64) -> f64 {
    let w2 = 1.0 + kappa * kappa + eta * eta;
    if r < 1e-6 * w2.sqrt() {
        // difference quotient limit: 4 b kappa / w2^{b+1}
        return 4.0 * b * kappa / w2.powf(b + 1.0);
    }
    ((w2 + r * r - 2.0 * kappa * r).powf(-b) - (w2 + r * r + 2.0 * kappa * r).powf(-b)) / r
}

fn integrate_tail<F: FnMut(f64) -> f64>(mut f: F, from: f64, anchors: &[f64], decay: f64) -> f64 {
    // integrand decays like r^{-decay}; stop where the remainder is negligible
    let mut end = from.max(1.0) * 4.0;
    for a in anchors {
        end = end.max(4.0 * a);
    }
    let mut total = adaptive_with_breaks(&mut f, &geometric_breaks(from, end, anchors), 0.0, REL_TOL);
    loop {
        let remainder = f(end).abs() * end / (decay - 1.0);
        if remainder <= TAIL_TOL * total.abs().max(1e-300) {
            return total;
        }
        let next = end * 4.0;
        total += adaptive_with_breaks(&mut f, &[end, next], 0.0, REL_TOL);
        end = next;
    }
}

/// `J-script = int_0^inf r^{-1} [(1 + gamma + r^2 - 2 kappa r)^{-b} - (1 + gamma + r^2 + 2 kappa r)^{-b}] dr`,
/// `b = ell/2 - 1`, split at `r = 1`.
pub fn j_script(kappa: f64, eta: f64, ell: u32) -> Result<(f64, f64)> {
    validate(kappa, eta, ell)?;
    let b = ell as f64 / 2.0 - 1.0;
    let f = |r: f64| j_script_integrand(r, kappa, eta, b);
    let mut f1 = f;
    let j1 = adaptive_with_breaks(&mut f1, &[0.0, 1.0], 0.0, REL_TOL);
    let j2 = integrate_tail(f, 1.0, &[0.5 * kappa, kappa, 2.0 * kappa], 2.0 * b + 2.0);
    Ok((j1, j2))
}

/// `2 pi gamma^{1/2} eta^{-1} [(ell - 2) kappa]^{-1} J-script`, an upper bound
/// on `J` obtained from `min_t [(r - kappa t)^2 + eta^2 t^2] >= r^2 eta^2 / gamma`.
pub fn j_script_bound(kappa: f64, eta: f64, ell: u32) -> Result<f64> {
    let (j1, j2) = j_script(kappa, eta, ell)?;
    let gamma = kappa * kappa + eta * eta;
    Ok(2.0 * PI * gamma.sqrt() / (eta * (ell as f64 - 2.0) * kappa) * (j1 + j2))
}

impl JIntegralReport {
    pub fn compute(kappa: f64, eta: f64, ell: u32) -> Result<Self> {
        let j = j_integral(kappa, eta, ell)?;
        let (big_j1, big_j2) = j_script(kappa, eta, ell)?;
        let gamma = kappa * kappa + eta * eta;
        let b = ell as f64 / 2.0 - 1.0;
        let w2 = 1.0 + eta * eta;
        let mut j21 = |r: f64| (w2 + (r - kappa).powi(2)).powf(-b) / r;
        let small_j1 = if kappa > 2.0 {
            adaptive_with_breaks(&mut j21, &geometric_breaks(1.0, 0.5 * kappa, &[]), 0.0, REL_TOL)
        } else {
            0.0
        };
        let small_j2 = integrate_tail(
            |r: f64| (w2 + (r - kappa).powi(2)).powf(-b) / r,
            (0.5 * kappa).max(1.0),
            &[kappa, 2.0 * kappa],
            2.0 * b + 1.0,
        );
        Ok(Self {
            kappa,
            eta,
            ell,
            j,
            j_script: big_j1 + big_j2,
            j_bound: 2.0 * PI * gamma.sqrt() / (eta * (ell as f64 - 2.0) * kappa) * (big_j1 + big_j2),
            big_j1,
            big_j2,
            small_j1,
            small_j2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    #[test]
    fn rejects_bad_arguments() {
        assert!(j_integral(8.0, 1.0, 3).is_err());
        assert!(j_integral(8.0, 0.0, 4).is_err());
    }

    #[test]
    fn positive_and_bounded_by_split_path() {
        for kappa in [8.0_f64, 32.0] {
            let eta = kappa.ln();
            let r = JIntegralReport::compute(kappa, eta, 4).unwrap();
            assert!(r.j > 0.0);
            assert!(r.j <= r.j_bound, "{r:?}");
            assert!(r.small_j1 >= 0.0 && r.small_j2 > 0.0);
        }
    }

    #[test]
    fn monotone_in_ell() {
        let a = j_integral(16.0, 2.0, 4).unwrap();
        let b = j_integral(16.0, 2.0, 6).unwrap();
        assert!(b < a);
    }

    #[test]
    fn matches_brute_force_double_integral() {
        // independent tensor Gauss-Legendre on a mapped r-axis
        let (kappa, eta, ell) = (4.0, 1.5, 6u32);
        let gl = GaussLegendre::new(64);
        let gamma = kappa * kappa + eta * eta;
        let mut total = 0.0;
        let edges = [0.0, 2.0, 4.0, 6.0, 10.0, 20.0, 50.0, 200.0, 2000.0];
        for w in edges.windows(2) {
            for (r, wr) in gl.mapped(w[0], w[1]) {
                let mut inner = 0.0;
                for p in 0..16 {
                    let (ta, tb) = (-1.0 + p as f64 / 8.0, -1.0 + (p + 1) as f64 / 8.0);
                    for (t, wt) in gl.mapped(ta, tb) {
                        let s = ((r - kappa * t).powi(2) + eta * eta * t * t).sqrt();
                        let q = 1.0 + gamma + r * r - 2.0 * r * kappa * t;
                        inner += wt / (s * q.powf(ell as f64 / 2.0));
                    }
                }
                total += wr * r * inner;
            }
        }
        let brute = 2.0 * PI * total;
        let j = j_integral(kappa, eta, ell).unwrap();
        assert!((j / brute - 1.0).abs() < 1e-5, "{j} vs {brute}");
    }
}
