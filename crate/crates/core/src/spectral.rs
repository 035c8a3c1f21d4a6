//! Grid Fourier transforms under the single convention used everywhere in the
//! crate:
//!
//! ```text
//! g~(xi) = int g(x) e^{+i xi.x} dx,     g(x) = (2 pi)^-3 int g~(xi) e^{-i xi.x} dxi
//! ```
//!
//! Under this convention `F(f * g) = f~ g~` and `F(f g) = (2 pi)^-3 f~ * g~`,
//! which is where the `(2 pi)^-3` in the Fourier-domain equation for `eps~`
//! comes from.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, ScatterError};
use crate::fft::{fast_size, fft3, Sign};
use crate::green::{ConvolutionPath, GreenOperator, KernelParams};
use crate::grid::{make_grid, BallDomain};
use crate::potential::Potential;
use crate::radon::{radon_transform_with, RadonSampler};
use crate::solver::ScatteringSolution;
use crate::vec3::{self, Vec3};

/// Largest admissible `eta * a` before `e^{eta a}` leaves a comfortable
/// floating-point range.
pub const MAX_ETA_A: f64 = 700.0;

/// Nodes with `|xi^2 - 2 k alpha.xi|` below this are skipped in the residual.
pub const CHARACTERISTIC_MARGIN: f64 = 1.0;

/// Samples of a transform on the cubic dual grid `xi = s * freq_spacing`,
/// stored in FFT order (signed index `s` wraps at `m / 2`).
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub m: usize,
    pub freq_spacing: f64,
    pub values: Vec<Complex64>,
    n: usize,
    spacing: f64,
    origin: f64,
}

/// Signed frequency index of FFT slot `i` on a length-`m` axis.
pub fn signed_index(i: usize, m: usize) -> i64 {
    if i < (m + 1) / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

impl SpectralField {
    pub fn xi(&self, idx: usize) -> Vec3 {
        let m = self.m;
        let (i, j, l) = (idx / (m * m), (idx / m) % m, idx % m);
        let d = self.freq_spacing;
        [
            signed_index(i, m) as f64 * d,
            signed_index(j, m) as f64 * d,
            signed_index(l, m) as f64 * d,
        ]
    }

    /// Largest `|xi_i|` represented on each axis.
    pub fn nyquist(&self) -> f64 {
        (self.m / 2) as f64 * self.freq_spacing
    }

    /// Trilinear interpolation between dual nodes; zero beyond the grid.
    pub fn interpolate(&self, xi: &Vec3) -> Complex64 {
        let m = self.m as i64;
        let (lo, hi) = (-(m / 2), (m - 1) / 2);
        let mut base = [0i64; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let u = xi[d] / self.freq_spacing;
            let f = u.floor() as i64;
            if f < lo || f + 1 > hi {
                return Complex64::new(0.0, 0.0);
            }
            base[d] = f;
            frac[d] = u - f as f64;
        }
        let slot = |s: i64| (s.rem_euclid(m)) as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..8 {
            let off = [(c >> 2 & 1) as i64, (c >> 1 & 1) as i64, (c & 1) as i64];
            let mut w = 1.0;
            for d in 0..3 {
                w *= if off[d] == 1 { frac[d] } else { 1.0 - frac[d] };
            }
            if w != 0.0 {
                let idx = (slot(base[0] + off[0]) * self.m + slot(base[1] + off[1])) * self.m
                    + slot(base[2] + off[2]);
                acc += self.values[idx] * w;
            }
        }
        acc
    }

    /// Inverse transform back onto the original `n^3` grid.
    pub fn inverse_ft(&self) -> Vec<Complex64> {
        let m = self.m;
        let mut buf: Vec<Complex64> = (0..m * m * m)
            .into_par_iter()
            .map(|idx| {
                let xi = self.xi(idx);
                self.values[idx] * Complex64::from_polar(1.0, -self.origin * (xi[0] + xi[1] + xi[2]))
            })
            .collect();
        fft3(&mut buf, m, Sign::Negative);
        let scale = 1.0 / ((m as f64).powi(3) * self.spacing.powi(3));
        let n = self.n;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out.push(buf[(i * m + j) * m + l] * scale);
                }
            }
        }
        out
    }

    /// Empty dual grid of `domain` at the given padding, the layout
    /// [`forward_ft`] produces.
    pub fn zeros(domain: &BallDomain, padding: usize) -> Result<Self> {
        if padding < 1 {
            return Err(ScatterError::InvalidArgument("padding must be >= 1".into()));
        }
        let n = domain.n();
        let m = fast_size(padding * n);
        Ok(Self {
            m,
            freq_spacing: std::f64::consts::TAU / (m as f64 * domain.spacing()),
            values: vec![Complex64::new(0.0, 0.0); m * m * m],
            n,
            spacing: domain.spacing(),
            origin: -domain.radius(),
        })
    }

    /// Storage slot of the node with signed indices `s`, if on the grid.
    pub fn slot(&self, s: [i64; 3]) -> Option<usize> {
        let m = self.m as i64;
        let (lo, hi) = (-(m / 2), (m - 1) / 2);
        if s.iter().any(|v| *v < lo || *v > hi) {
            return None;
        }
        let w = |v: i64| v.rem_euclid(m) as usize;
        Some((w(s[0]) * self.m + w(s[1])) * self.m + w(s[2]))
    }

    /// Signed indices of storage slot `idx`.
    pub fn signed(&self, idx: usize) -> [i64; 3] {
        let m = self.m;
        [
            signed_index(idx / (m * m), m),
            signed_index((idx / m) % m, m),
            signed_index(idx % m, m),
        ]
    }

    /// `(2 pi)^-3 sum |F|^2 dxi^3`.
    pub fn energy(&self) -> f64 {
        let d3 = self.freq_spacing.powi(3);
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * d3 / (2.0 * std::f64::consts::PI).powi(3)
    }
}

/// Transform of samples on the cube `origin + h * j`, `j in [0, n)^3`,
/// evaluated on an `m^3` dual grid.
fn dft_cube(values: &[Complex64], n: usize, origin: f64, h: f64, m: usize) -> SpectralField {
    assert!(m >= n);
    assert_eq!(values.len(), n * n * n);
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
    buf.par_chunks_mut(m * m).enumerate().take(n).for_each(|(i, slab)| {
        for j in 0..n {
            for l in 0..n {
                slab[j * m + l] = values[(i * n + j) * n + l];
            }
        }
    });
    fft3(&mut buf, m, Sign::Positive);
    let mut field = SpectralField {
        m,
        freq_spacing: std::f64::consts::TAU / (m as f64 * h),
        values: Vec::new(),
        n,
        spacing: h,
        origin,
    };
    let h3 = h * h * h;
    let phased: Vec<Complex64> = buf
        .par_iter()
        .enumerate()
        .map(|(idx, v)| {
            let xi = field.xi(idx);
            v * Complex64::from_polar(h3, origin * (xi[0] + xi[1] + xi[2]))
        })
        .collect();
    field.values = phased;
    field
}

/// Zero-padded DFT of a grid field scaled by the cell volume; the dual grid
/// has `fast_size(padding * n)` nodes per axis.
pub fn forward_ft(values: &[Complex64], domain: &BallDomain, padding: usize) -> Result<SpectralField> {
    if padding < 1 {
        return Err(ScatterError::InvalidArgument("padding must be >= 1".into()));
    }
    let n = domain.n();
    if values.len() != n * n * n {
        return Err(ScatterError::ShapeMismatch {
            expected: n * n * n,
            got: values.len(),
        });
    }
    let m = fast_size(padding * n);
    Ok(dft_cube(values, n, -domain.radius(), domain.spacing(), m))
}

pub fn forward_ft_real(values: &[f64], domain: &BallDomain, padding: usize) -> Result<SpectralField> {
    let c: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    forward_ft(&c, domain, padding)
}

/// `|h^3 sum |f|^2 - (2 pi)^-3 sum |F|^2 dxi^3| / h^3 sum |f|^2`.
pub fn parseval_gap(values: &[Complex64], domain: &BallDomain, padding: usize) -> Result<f64> {
    let spec = forward_ft(values, domain, padding)?;
    let direct = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * domain.cell_volume();
    if direct == 0.0 {
        return Ok(spec.energy());
    }
    Ok((direct - spec.energy()).abs() / direct)
}

/// Max relative gap between `F(f * g)` and `f~ g~` on the dual grid.
///
/// The linear convolution is summed directly on the `(2n-1)^3` offset cube
/// and transformed on the same dual grid as `f` and `g`; with
/// `fast_size(padding * n) < 2n - 1` the cyclic wrap shows up as error.
pub fn convolution_check(
    f: &[Complex64],
    g: &[Complex64],
    domain: &BallDomain,
    padding: usize,
) -> Result<f64> {
    let n = domain.n();
    let ft = forward_ft(f, domain, padding)?;
    let gt = forward_ft(g, domain, padding)?;
    let conv = direct_convolution(f, g, n, domain.cell_volume());
    let nc = 2 * n - 1;
    let m = ft.m;
    let h = domain.spacing();
    let lhs = if m >= nc {
        dft_cube(&conv, nc, -2.0 * domain.radius(), h, m)
    } else {
        // fold the long convolution onto m points per axis
        let mut folded = vec![Complex64::new(0.0, 0.0); m * m * m];
        for i in 0..nc {
            for j in 0..nc {
                for l in 0..nc {
                    folded[((i % m) * m + j % m) * m + l % m] += conv[(i * nc + j) * nc + l];
                }
            }
        }
        dft_cube(&folded, m, -2.0 * domain.radius(), h, m)
    };
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for idx in 0..m * m * m {
        let rhs = ft.values[idx] * gt.values[idx];
        scale = scale.max(rhs.norm()).max(lhs.values[idx].norm());
        worst = worst.max((lhs.values[idx] - rhs).norm());
    }
    Ok(if scale == 0.0 { 0.0 } else { worst / scale })
}

/// `h^3 sum_y f(x - y) g(y)` on offsets `x in [-2a, 2a]^3`, skipping zeros of `g`.
fn direct_convolution(f: &[Complex64], g: &[Complex64], n: usize, h3: f64) -> Vec<Complex64> {
    let nc = 2 * n - 1;
    let support: Vec<(usize, usize, usize, Complex64)> = (0..n * n * n)
        .filter(|&i| g[i] != Complex64::new(0.0, 0.0))
        .map(|i| (i / (n * n), (i / n) % n, i % n, g[i]))
        .collect();
    (0..nc * nc * nc)
        .into_par_iter()
        .map(|o| {
            let (oi, oj, ol) = (o / (nc * nc), (o / nc) % nc, o % nc);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(i, j, l, gv) in &support {
                let (fi, fj, fl) = (oi as i64 - i as i64, oj as i64 - j as i64, ol as i64 - l as i64);
                let r = 0..n as i64;
                if r.contains(&fi) && r.contains(&fj) && r.contains(&fl) {
                    acc += f[((fi as usize) * n + fj as usize) * n + fl as usize] * gv;
                }
            }
            acc * h3
        })
        .collect()
}

/// Outcome of the Fourier-domain `eps~` equation check.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsTildeReport {
    /// `sup |eps~ + (q~ + F(q eps)) / D| / sup |eps~|` over admissible nodes.
    pub residual: f64,
    /// `sup |F(q eps) / D| / sup |eps~|`, the size of the convolution term.
    pub convolution_term: f64,
    pub skipped_fraction: f64,
    pub admissible_nodes: usize,
    /// `(dist, residual)` restricted to nodes at first-order distance
    /// `|D| / |grad D| >= dist` from the characteristic set.
    pub residual_by_distance: Vec<(f64, f64)>,
}

/// Check `eps~ = -q~/D - (2 pi)^-3 (q~ * eps~)/D`, `D = xi^2 - 2k alpha.xi`,
/// for the solver's `eps`.
///
/// `eps` is extended to the cube of half-width `padding * a` by evaluating
/// `-int G (q v)` there with the same discrete kernel as the solver. The
/// outgoing `1/|x|` tail has no absolutely convergent transform, so the
/// extension is rolled off smoothly between `|x| = a` and `|x| = padding * a`;
/// this smooths `eps~` on the scale `1 / ((padding - 1) a)`.
pub fn eps_tilde_residual(sol: &ScatteringSolution, q: &Potential, padding: usize) -> Result<EpsTildeReport> {
    residual_core(&sol.eps.values, true, q, sol.alpha, sol.k, padding)
}

/// As [`eps_tilde_residual`] for the single-term field `eps_1 = -int G q`,
/// for which the residual is the dropped convolution term plus the
/// truncation error of the transform.
pub fn first_born_eps_tilde_residual(
    q: &Potential,
    alpha: Vec3,
    k: Complex64,
    padding: usize,
) -> Result<EpsTildeReport> {
    let params = KernelParams::new(k, alpha)?;
    let green = GreenOperator::new(&q.domain, params, ConvolutionPath::Auto);
    let qc: Vec<Complex64> = q.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let eps1: Vec<Complex64> = green.apply(&qc).into_iter().map(|v| -v).collect();
    residual_core(&eps1, false, q, alpha, k, padding)
}

/// `eps` is extended as `-int G q (1 + eps)` when `self_consistent`, else as
/// `-int G q`.
fn residual_core(
    eps: &[Complex64],
    self_consistent: bool,
    q: &Potential,
    alpha: Vec3,
    k: Complex64,
    padding: usize,
) -> Result<EpsTildeReport> {
    if padding < 2 {
        return Err(ScatterError::InvalidArgument("padding must be >= 2".into()));
    }
    let domain = &q.domain;
    let n = domain.n();
    if eps.len() != n * n * n {
        return Err(ScatterError::ShapeMismatch {
            expected: n * n * n,
            got: eps.len(),
        });
    }
    if q.is_zero() {
        return Ok(EpsTildeReport {
            residual: 0.0,
            convolution_term: 0.0,
            skipped_fraction: 0.0,
            admissible_nodes: 0,
            residual_by_distance: RESIDUAL_DISTANCES.iter().map(|&d| (d, 0.0)).collect(),
        });
    }
    let ne = padding * (n - 1) + 1;
    let ext = make_grid(padding as f64 * domain.radius(), ne)?;
    let shift = (ne - n) / 2;
    let embed = |vals: &dyn Fn(usize) -> Complex64| {
        let mut out = vec![Complex64::new(0.0, 0.0); ne * ne * ne];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out[((i + shift) * ne + j + shift) * ne + l + shift] = vals((i * n + j) * n + l);
                }
            }
        }
        out
    };
    let qv = if self_consistent {
        embed(&|i| q.values[i] * (1.0 + eps[i]))
    } else {
        embed(&|i| Complex64::new(q.values[i], 0.0))
    };
    let qe = embed(&|i| q.values[i] * eps[i]);
    let qq = embed(&|i| Complex64::new(q.values[i], 0.0));
    let params = KernelParams::new(k, alpha)?;
    let green = GreenOperator::new(&ext, params, ConvolutionPath::Fft);
    let r0 = domain.radius();
    let r1 = ext.radius();
    let eps_ext: Vec<Complex64> = green
        .apply(&qv)
        .into_iter()
        .enumerate()
        .map(|(i, v)| -v * taper(vec3::norm(&ext.node(i)), r0, r1))
        .collect();

    let m = fast_size(ne);
    let origin = -ext.radius();
    let h = ext.spacing();
    let et = dft_cube(&eps_ext, ne, origin, h, m);
    let qt = dft_cube(&qq, ne, origin, h, m);
    let qet = dft_cube(&qe, ne, origin, h, m);

    let total = m * m * m;
    let nodes: Vec<(f64, f64, f64, f64)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let xi = et.xi(idx);
            let d = vec3::dot(&xi, &xi) - 2.0 * k * vec3::dot(&alpha, &xi);
            if d.norm() < CHARACTERISTIC_MARGIN {
                return None;
            }
            let conv = qet.values[idx] / d;
            let res = et.values[idx] + qt.values[idx] / d + conv;
            let grad = (0..3)
                .map(|c| (2.0 * xi[c] - 2.0 * k * alpha[c]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            Some((d.norm() / grad, res.norm(), conv.norm(), et.values[idx].norm()))
        })
        .collect();
    let used = nodes.len();
    let worst_eps = nodes.iter().map(|n| n.3).fold(0.0, f64::max);
    let norm = if worst_eps > 0.0 { worst_eps } else { 1.0 };
    let worst_beyond = |dist: f64| {
        nodes
            .iter()
            .filter(|n| n.0 >= dist)
            .map(|n| n.1)
            .fold(0.0, f64::max)
            / norm
    };
    Ok(EpsTildeReport {
        residual: worst_beyond(0.0),
        convolution_term: nodes.iter().map(|n| n.2).fold(0.0, f64::max) / norm,
        skipped_fraction: (total - used) as f64 / total as f64,
        admissible_nodes: used,
        residual_by_distance: RESIDUAL_DISTANCES.iter().map(|&d| (d, worst_beyond(d))).collect(),
    })
}

/// Distances from the characteristic set at which the residual is also
/// reported.
pub const RESIDUAL_DISTANCES: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

/// `C^inf` cutoff: 1 on `[0, r0]`, 0 beyond `r1`.
fn taper(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        return 1.0;
    }
    if r >= r1 {
        return 0.0;
    }
    let t = (r - r0) / (r1 - r0);
    let f = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    f(1.0 - t) / (f(1.0 - t) + f(t))
}

fn check_eta(p: &Potential, eta: f64) -> Result<()> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(ScatterError::InvalidArgument(format!(
            "eta must be finite and >= 0, got {eta}"
        )));
    }
    let ea = eta * p.domain.radius();
    if ea > MAX_ETA_A {
        return Err(ScatterError::Overflow(ea));
    }
    Ok(())
}

/// `p~((kappa + i eta) beta)` by direct 3D quadrature over the ball.
pub fn complex_freq_transform_direct(p: &Potential, beta: &Vec3, kappa: f64, eta: f64) -> Result<Complex64> {
    check_eta(p, eta)?;
    let z = Complex64::new(-eta, kappa);
    let weights = p.domain.ball_weights();
    Ok((0..p.values.len())
        .into_par_iter()
        .filter(|&i| p.values[i] != 0.0)
        .map(|i| (z * vec3::dot(beta, &p.domain.node(i))).exp() * (weights[i] * p.values[i]))
        .sum())
}

/// `p~((kappa + i eta) beta) = int e^{i kappa lambda - eta lambda} p^(beta, lambda) dlambda`
/// with `2n` offsets and grid-interpolated planes.
pub fn complex_freq_transform(p: &Potential, beta: &Vec3, kappa: f64, eta: f64) -> Result<Complex64> {
    complex_freq_transform_with(p, beta, kappa, eta, 2 * p.domain.n(), RadonSampler::Grid)
}

pub fn complex_freq_transform_with(
    p: &Potential,
    beta: &Vec3,
    kappa: f64,
    eta: f64,
    offsets: usize,
    sampler: RadonSampler,
) -> Result<Complex64> {
    check_eta(p, eta)?;
    Ok(radon_transform_with(p, beta, offsets, sampler).transform(kappa, eta))
}

/// Both sides of the complex-frequency reduction: `(direct, radon)`.
pub fn complex_freq_two_paths(p: &Potential, beta: &Vec3, kappa: f64, eta: f64) -> Result<(Complex64, Complex64)> {
    Ok((
        complex_freq_transform_direct(p, beta, kappa, eta)?,
        complex_freq_transform(p, beta, kappa, eta)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ball_quadrature_real;
    use crate::potential::{bump_potential, fourier_of_potential, shifted_bump_potential};
    use crate::solver::solve_eps;

    fn as_complex(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
    }

    #[test]
    fn point_mass_has_flat_spectrum() {
        let d = make_grid(1.0, 17).unwrap();
        let mut f = vec![Complex64::new(0.0, 0.0); d.num_nodes()];
        f[d.center_index().unwrap()] = Complex64::new(1.0 / d.cell_volume(), 0.0);
        let s = forward_ft(&f, &d, 2).unwrap();
        for v in &s.values {
            assert!((v - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn real_even_field_has_real_spectrum() {
        let d = make_grid(1.0, 17).unwrap();
        let q = bump_potential(&d, 1.0, 0.8).unwrap();
        let s = forward_ft_real(&q.values, &d, 2).unwrap();
        for v in &s.values {
            assert!(v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn zero_frequency_is_the_integral() {
        let d = make_grid(1.0, 25).unwrap();
        let q = bump_potential(&d, 0.7, 0.8).unwrap();
        let s = forward_ft_real(&q.values, &d, 1).unwrap();
        let total = ball_quadrature_real(&d, &q.values);
        assert!((s.values[0].re - total).abs() < 1e-10);
        assert!((s.values[0] - fourier_of_potential(&q, &[0.0; 3])).norm() < 1e-10);
    }

    #[test]
    fn dual_node_values_match_direct_transform() {
        let d = make_grid(1.0, 17).unwrap();
        let q = shifted_bump_potential(&d, 1.0, 0.6, [0.2, 0.0, -0.1]).unwrap();
        let s = forward_ft_real(&q.values, &d, 2).unwrap();
        for idx in [1, 37, 500, 4000] {
            let direct = fourier_of_potential(&q, &s.xi(idx));
            assert!((s.values[idx] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let d = make_grid(1.0, 17).unwrap();
        let f: Vec<Complex64> = d
            .nodes()
            .map(|x| Complex64::new((x[0] * 3.0).sin() + x[1], x[2] * x[0]))
            .collect();
        for padding in [1, 2, 3] {
            let back = forward_ft(&f, &d, padding).unwrap().inverse_ft();
            for (a, b) in back.iter().zip(&f) {
                assert!((a - b).norm() < 1e-10);
            }
            assert!(parseval_gap(&f, &d, padding).unwrap() < 1e-10);
        }
    }

    #[test]
    fn convolution_theorem() {
        let d = make_grid(1.0, 13).unwrap();
        let q = bump_potential(&d, 1.0, 0.8).unwrap();
        let f = as_complex(&q.values);
        assert!(convolution_check(&f, &f, &d, 2).unwrap() < 1e-8);
        let zero = vec![Complex64::new(0.0, 0.0); d.num_nodes()];
        assert_eq!(convolution_check(&f, &zero, &d, 2).unwrap(), 0.0);
        assert!(convolution_check(&f, &f, &d, 1).unwrap() < 1e-8);
    }

    #[test]
    fn shift_theorem() {
        let d = make_grid(1.0, 17).unwrap();
        let g = bump_potential(&d, 1.0, 0.5).unwrap();
        let shift = [1i64, -1, 2];
        let h = d.spacing();
        let f = shifted_bump_potential(&d, 1.0, 0.5, [h, -h, 2.0 * h]).unwrap();
        let (ft, gt) = (
            forward_ft_real(&f.values, &d, 2).unwrap(),
            forward_ft_real(&g.values, &d, 2).unwrap(),
        );
        for idx in (0..ft.values.len()).step_by(97) {
            let xi = ft.xi(idx);
            let phase = h * (xi[0] * shift[0] as f64 + xi[1] * shift[1] as f64 + xi[2] * shift[2] as f64);
            assert!((ft.values[idx] - gt.values[idx] * Complex64::from_polar(1.0, phase)).norm() < 1e-10);
        }
        let (fc, gc) = (as_complex(&f.values), as_complex(&g.values));
        assert!(convolution_check(&fc, &gc, &d, 2).unwrap() < 1e-8);
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let d = make_grid(1.0, 17).unwrap();
        let q = bump_potential(&d, 1.0, 0.8).unwrap();
        let s = forward_ft_real(&q.values, &d, 2).unwrap();
        for idx in [0, 5, 300] {
            assert!((s.interpolate(&s.xi(idx)) - s.values[idx]).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_vanishes_for_zero_potential() {
        let d = make_grid(1.0, 17).unwrap();
        let z = Potential::zero(&d);
        let sol = solve_eps(&z, [0.0, 0.0, 1.0], Complex64::new(4.0, 0.0), 1e-10, 50).unwrap();
        assert_eq!(eps_tilde_residual(&sol, &z, 2).unwrap().residual, 0.0);
    }

    #[test]
    fn first_born_convolution_term() {
        let d = make_grid(1.0, 17).unwrap();
        let alpha = [0.0, 0.0, 1.0];
        let term = |amp: f64, k: f64| {
            let q = bump_potential(&d, amp, 0.8).unwrap();
            first_born_eps_tilde_residual(&q, alpha, Complex64::new(k, 0.0), 2)
                .unwrap()
                .convolution_term
        };
        let t6 = term(0.1, 6.0);
        assert!(t6 > 0.0 && t6 < 0.05);
        // eps_1 is linear in q, the dropped term quadratic
        assert!((term(0.2, 6.0) / t6 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn residual_away_from_characteristic_shrinks_with_padding() {
        let d = make_grid(1.0, 17).unwrap();
        let q = bump_potential(&d, 0.1, 0.8).unwrap();
        let sol = solve_eps(&q, [0.0, 0.0, 1.0], Complex64::new(10.0, 0.0), 1e-10, 100).unwrap();
        let far = |pad: usize| *eps_tilde_residual(&sol, &q, pad).unwrap().residual_by_distance.last().unwrap();
        let (r2, r3) = (far(2).1, far(3).1);
        assert!(r3 < 0.5 * r2, "{r2} {r3}");
        assert!(r3 < 0.05);
        assert!(eps_tilde_residual(&sol, &q, 1).is_err());
    }

    #[test]
    fn two_paths_agree_and_reduce_at_zero() {
        let d = make_grid(1.0, 33).unwrap();
        let q = bump_potential(&d, 0.1, 0.8).unwrap();
        let beta = vec3::normalize(&[1.0, -1.0, 2.0]);
        let (a, b) = complex_freq_two_paths(&q, &beta, 0.0, 0.0).unwrap();
        let total = ball_quadrature_real(&d, &q.values);
        assert!((a.re - total).abs() < 1e-12);
        assert!((b.re - total).abs() < 0.01 * total);
        assert!(matches!(
            complex_freq_transform(&q, &beta, 1.0, 800.0),
            Err(ScatterError::Overflow(_))
        ));
    }
}
