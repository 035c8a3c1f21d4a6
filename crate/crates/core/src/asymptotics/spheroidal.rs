use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ScatterError};
use crate::potential::Potential;
use crate::quadrature::GaussLegendre;
use crate::vec3::{self, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);
/// Truncation level for `e^{-2 eta l s}`.
const S_TRUNC: f64 = 1e-14;
const S_ORDER: usize = 16;
const T_ORDER: usize = 16;
const T_PANELS: usize = 4;
const PSI_NODES: usize = 64;

/// `I1 = int_{B_a} e^{i z (|x - w| + |w - y|)} q(w) / (|x - w| |w - y|) dw`
/// with `z = kappa + i eta`, in prolate-spheroidal coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpheroidalI1 {
    pub value: Complex64,
    /// Half focal distance `|x - y| / 2`.
    pub half_focal: f64,
    /// Upper end of the `s` integral.
    pub s_max: f64,
    /// Whether `s_max` came from the `e^{-2 eta l s}` cutoff rather than the support.
    pub truncated: bool,
    pub s_panels: usize,
}

/// Orthonormal frame `(e, u, v)` with `e` along `y - x` and the center.
struct Frame {
    center: Vec3,
    e: Vec3,
    u: Vec3,
    v: Vec3,
    half: f64,
}

impl Frame {
    fn new(x: &Vec3, y: &Vec3) -> Result<Self> {
        let d = vec3::sub(y, x);
        let dist = vec3::norm(&d);
        if dist < 1e-12 {
            return Err(ScatterError::Degenerate("x = y has no spheroidal frame".into()));
        }
        let e = vec3::scale(&d, 1.0 / dist);
        let (u, v) = vec3::orthonormal_frame(&e);
        Ok(Self {
            center: vec3::scale(&vec3::add(x, y), 0.5),
            e,
            u,
            v,
            half: 0.5 * dist,
        })
    }

    /// `w(s, t, psi)` with `|w - x| = l (s + t)` and `|w - y| = l (s - t)`.
    fn point(&self, s: f64, t: f64, psi: f64) -> Vec3 {
        let rho = self.half * ((s * s - 1.0).max(0.0) * (1.0 - t * t).max(0.0)).sqrt();
        let axial = self.half * s * t;
        let mut w = self.center;
        for i in 0..3 {
            w[i] += axial * self.e[i] + rho * (psi.cos() * self.u[i] + psi.sin() * self.v[i]);
        }
        w
    }
}

fn check_points(q: &Potential, x: &Vec3, y: &Vec3) -> Result<()> {
    let a = q.domain.radius() * (1.0 + 1e-12);
    if vec3::norm(x) > a || vec3::norm(y) > a {
        return Err(ScatterError::InvalidArgument("x and y must lie in the ball".into()));
    }
    Ok(())
}

/// `Q(s) = int_0^{2 pi} dpsi int_{-1}^{1} dt q(w(s, t, psi))`.
fn shell_integral(q: &Potential, frame: &Frame, s: f64, gl_t: &GaussLegendre) -> f64 {
    let dpsi = 2.0 * PI / PSI_NODES as f64;
    let mut total = 0.0;
    for p in 0..T_PANELS {
        let ta = -1.0 + 2.0 * p as f64 / T_PANELS as f64;
        let tb = ta + 2.0 / T_PANELS as f64;
        for (t, wt) in gl_t.mapped(ta, tb) {
            let mut ring = 0.0;
            for j in 0..PSI_NODES {
                ring += q.eval(&frame.point(s, t, j as f64 * dpsi));
            }
            total += wt * ring * dpsi;
        }
    }
    total
}

/// `I1 = l int_1^inf e^{2 i (kappa + i eta) l s} Q(s) ds`, `l = |x - y| / 2`.
///
/// The `s` range ends where the spheroid leaves the ball or where
/// `e^{-2 eta l s} < 1e-14`, whichever comes first. Panels resolve the
/// oscillation `e^{2 i kappa l s}` with several nodes per period.
pub fn spheroidal_i1(q: &Potential, x: &Vec3, y: &Vec3, kappa: f64, eta: f64) -> Result<SpheroidalI1> {
    check_points(q, x, y)?;
    let frame = Frame::new(x, y)?;
    let l = frame.half;
    let a = q.domain.radius();
    let s_support = (vec3::norm(x) + vec3::norm(y) + 2.0 * a) / (2.0 * l);
    let s_cut = if eta > 0.0 {
        1.0 + (-S_TRUNC.ln()) / (2.0 * eta * l)
    } else {
        f64::INFINITY
    };
    let truncated = s_cut < s_support;
    let s_max = s_support.min(s_cut);
    let periods = (s_max - 1.0) * 2.0 * kappa.abs() * l / (2.0 * PI);
    let s_panels = (4.0 * periods).ceil().max(32.0) as usize;
    let z = Complex64::new(kappa, eta);
    if q.is_zero() {
        return Ok(SpheroidalI1 {
            value: Complex64::new(0.0, 0.0),
            half_focal: l,
            s_max,
            truncated,
            s_panels,
        });
    }
    let gl_s = GaussLegendre::new(S_ORDER);
    let gl_t = GaussLegendre::new(T_ORDER);
    // s = 1 + (s_max - 1) u^2 clusters nodes at the focal segment
    let width = 1.0 / s_panels as f64;
    let value: Complex64 = (0..s_panels)
        .into_par_iter()
        .map(|p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (u, wu) in gl_s.mapped(p as f64 * width, (p + 1) as f64 * width) {
                let s = 1.0 + (s_max - 1.0) * u * u;
                let ds = 2.0 * (s_max - 1.0) * u * wu;
                let shell = shell_integral(q, &frame, s, &gl_t);
                acc += (2.0 * I * z * l * s).exp() * shell * ds;
            }
            acc
        })
        .sum();
    Ok(SpheroidalI1 {
        value: value * l,
        half_focal: l,
        s_max,
        truncated,
        s_panels,
    })
}

/// The same integral by a midpoint rule over `[-a, a]^3` with `cells` cells
/// per axis. The `1/r` singularities at `x` and `y` are integrable and the
/// midpoint nodes avoid them unless `x` or `y` is a cell center.
pub fn spheroidal_i1_cartesian(
    q: &Potential,
    x: &Vec3,
    y: &Vec3,
    kappa: f64,
    eta: f64,
    cells: usize,
) -> Result<Complex64> {
    check_points(q, x, y)?;
    Frame::new(x, y)?;
    if cells == 0 {
        return Err(ScatterError::InvalidArgument("cells must be positive".into()));
    }
    let a = q.domain.radius();
    let h = 2.0 * a / cells as f64;
    let z = Complex64::new(kappa, eta);
    let total: Complex64 = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            let wx = -a + (i as f64 + 0.5) * h;
            for j in 0..cells {
                let wy = -a + (j as f64 + 0.5) * h;
                for k in 0..cells {
                    let w = [wx, wy, -a + (k as f64 + 0.5) * h];
                    if vec3::dot(&w, &w) > a * a {
                        continue;
                    }
                    let qv = q.eval(&w);
                    if qv == 0.0 {
                        continue;
                    }
                    let r1 = vec3::norm(&vec3::sub(x, &w));
                    let r2 = vec3::norm(&vec3::sub(&w, y));
                    if r1 == 0.0 || r2 == 0.0 {
                        continue;
                    }
                    acc += (I * z * (r1 + r2)).exp() * qv / (r1 * r2);
                }
            }
            acc
        })
        .sum();
    Ok(total * h.powi(3))
}

/// Volume of the spheroid `|w - x| + |w - y| <= 2 l s1` by the spheroidal
/// Jacobian `l^3 (s^2 - t^2)` and by counting midpoint cells of a
/// `cells^3` box around it. Returns `(spheroidal, cartesian)`.
pub fn spheroid_volume_check(x: &Vec3, y: &Vec3, s1: f64, cells: usize) -> Result<(f64, f64)> {
    let frame = Frame::new(x, y)?;
    if !(s1 > 1.0) || cells == 0 {
        return Err(ScatterError::InvalidArgument(format!(
            "need s1 > 1 and cells > 0, got {s1}, {cells}"
        )));
    }
    let l = frame.half;
    let gl = GaussLegendre::new(S_ORDER);
    let mut spheroidal = 0.0;
    for (s, ws) in gl.mapped(1.0, s1) {
        let inner = gl.integrate(-1.0, 1.0, |t| s * s - t * t);
        spheroidal += ws * inner;
    }
    spheroidal *= 2.0 * PI * l.powi(3);

    let reach = l * s1;
    let h = 2.0 * reach / cells as f64;
    let limit = 2.0 * l * s1;
    let count: usize = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut c = 0usize;
            for j in 0..cells {
                for k in 0..cells {
                    let off = [
                        -reach + (i as f64 + 0.5) * h,
                        -reach + (j as f64 + 0.5) * h,
                        -reach + (k as f64 + 0.5) * h,
                    ];
                    let w = vec3::add(&frame.center, &off);
                    if vec3::norm(&vec3::sub(&w, x)) + vec3::norm(&vec3::sub(&w, y)) <= limit {
                        c += 1;
                    }
                }
            }
            c
        })
        .sum();
    Ok((spheroidal, count as f64 * h.powi(3)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::potential::bump_potential;

    #[test]
    fn frame_distances() {
        let x = [0.2, -0.1, 0.3];
        let y = [-0.3, 0.2, 0.0];
        let f = Frame::new(&x, &y).unwrap();
        for (s, t, psi) in [(1.3, 0.2, 0.7), (2.0, -0.9, 4.0), (1.0, 0.5, 1.0)] {
            let w = f.point(s, t, psi);
            let dx = vec3::norm(&vec3::sub(&w, &x));
            let dy = vec3::norm(&vec3::sub(&w, &y));
            assert!((dx - f.half * (s + t)).abs() < 1e-12);
            assert!((dy - f.half * (s - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_and_degenerate() {
        let d = make_grid(1.0, 9).unwrap();
        let z = Potential::zero(&d);
        let r = spheroidal_i1(&z, &[0.1, 0.0, 0.0], &[-0.1, 0.0, 0.0], 8.0, 1.0).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
        assert!(spheroidal_i1(&z, &[0.1, 0.0, 0.0], &[0.1, 0.0, 0.0], 8.0, 1.0).is_err());
    }

    #[test]
    fn volume_matches_closed_form() {
        let x = [0.1, 0.2, -0.1];
        let y = [-0.2, 0.0, 0.3];
        let s1 = 1.7;
        let (sph, cart) = spheroid_volume_check(&x, &y, s1, 120).unwrap();
        let l = 0.5 * vec3::norm(&vec3::sub(&x, &y));
        let exact = 4.0 * PI / 3.0 * l.powi(3) * (s1.powi(3) - s1);
        assert!((sph / exact - 1.0).abs() < 1e-12);
        assert!((cart / exact - 1.0).abs() < 1e-2);
    }

    #[test]
    fn agrees_with_cartesian_quadrature() {
        let d = make_grid(1.0, 13).unwrap();
        let q = bump_potential(&d, 0.1, 0.8).unwrap();
        let x = [0.2, 0.05, 0.1];
        let y = [-0.25, 0.1, -0.05];
        let sph = spheroidal_i1(&q, &x, &y, 6.0, 0.5).unwrap();
        let cart = spheroidal_i1_cartesian(&q, &x, &y, 6.0, 0.5, 160).unwrap();
        let rel = (sph.value - cart).norm() / cart.norm();
        assert!(rel < 0.02, "{:?} vs {cart}: {rel}", sph.value);
    }
}
