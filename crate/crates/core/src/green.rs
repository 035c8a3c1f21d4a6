//! Free-space Helmholtz Green's function, the direction-factored kernel
//! `G(z, k) = e^{ik(|z| - beta.z)} / (4 pi |z|)`, its Fourier symbol and the
//! discrete volume convolution used by the solver.
//!
//! The self-node of the discrete convolution is weighted by the average of
//! `1/r` over a ball of radius `h/2`, i.e. `(3/h) h^3 / (4 pi)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, ScatterError};
use crate::fft::{self, Sign};
use crate::grid::{BallDomain, ComplexField};
use crate::vec3::{self, Vec3};

/// Largest grid for which the operator uses direct summation by default.
pub const DIRECT_SUM_MAX_N: usize = 17;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Wavenumber (closed upper half-plane) and factoring direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub k: Complex64,
    pub beta: Vec3,
}

impl KernelParams {
    pub fn new(k: Complex64, beta: Vec3) -> Result<Self> {
        if k.im < 0.0 {
            return Err(ScatterError::LowerHalfPlane(k.im));
        }
        if !vec3::is_unit(&beta, 1e-12) {
            return Err(ScatterError::InvalidArgument(format!(
                "beta {beta:?} is not a unit vector"
            )));
        }
        Ok(Self { k, beta })
    }

    pub fn real(k: f64, beta: Vec3) -> Result<Self> {
        Self::new(Complex64::new(k, 0.0), beta)
    }
}

/// `g(x, y, k) = e^{ik|x-y|} / (4 pi |x-y|)`.
pub fn free_green(x: &Vec3, y: &Vec3, k: Complex64) -> Result<Complex64> {
    if k.im < 0.0 {
        return Err(ScatterError::LowerHalfPlane(k.im));
    }
    let r = vec3::norm(&vec3::sub(x, y));
    if r == 0.0 {
        return Err(ScatterError::SingularEvaluation);
    }
    Ok((I * k * r).exp() / (4.0 * PI * r))
}

/// Direction-factored kernel `e^{ik(|z| - beta.z)} / (4 pi |z|)` at `z = x - y`.
pub fn factored_green(x_minus_y: &Vec3, params: &KernelParams) -> Result<Complex64> {
    let r = vec3::norm(x_minus_y);
    if r == 0.0 {
        return Err(ScatterError::SingularEvaluation);
    }
    Ok(factored_kernel_unchecked(x_minus_y, r, params))
}

#[inline]
fn factored_kernel_unchecked(z: &Vec3, r: f64, params: &KernelParams) -> Complex64 {
    let phase = r - vec3::dot(&params.beta, z);
    (I * params.k * phase).exp() / (4.0 * PI * r)
}

/// Fourier symbol `1 / (xi^2 - 2 k beta.xi)` of the factored kernel.
pub fn green_symbol(xi: &Vec3, k: Complex64, beta: &Vec3) -> Result<Complex64> {
    let xi2 = vec3::dot(xi, xi);
    let denom = xi2 - 2.0 * k * vec3::dot(beta, xi);
    if denom.norm() <= 1e-14 * xi2.max(1.0) {
        return Err(ScatterError::ResonantFrequency(denom.norm()));
    }
    Ok(1.0 / denom)
}

/// Self-node weight of the discrete kernel (already multiplied by `h^3`).
pub fn self_weight(h: f64) -> f64 {
    (3.0 / (2.0 * (0.5 * h))) * h.powi(3) / (4.0 * PI)
}

/// How the discrete convolution is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionPath {
    /// Direct for `n <= 17`, FFT otherwise.
    Auto,
    Direct,
    Fft,
}

enum Backend {
    Direct {
        /// Kernel on the `(2n-1)^3` offset lattice, weights included.
        offsets: Vec<Complex64>,
    },
    Fft {
        size: usize,
        kernel_hat: Arc<Vec<Complex64>>,
    },
}

/// Precomputed discrete convolution `f -> sum_y G(x - y) f(y) h^3`.
pub struct GreenOperator {
    domain: BallDomain,
    params: KernelParams,
    backend: Backend,
}

impl GreenOperator {
    pub fn new(domain: &BallDomain, params: KernelParams, path: ConvolutionPath) -> Self {
        let n = domain.n();
        let use_direct = match path {
            ConvolutionPath::Auto => n <= DIRECT_SUM_MAX_N,
            ConvolutionPath::Direct => true,
            ConvolutionPath::Fft => false,
        };
        let backend = if use_direct {
            Backend::Direct {
                offsets: offset_kernel(domain, &params),
            }
        } else {
            let size = fft::fast_size(2 * n - 1);
            Backend::Fft {
                size,
                kernel_hat: Arc::new(cyclic_kernel_hat(domain, &params, size)),
            }
        };
        Self {
            domain: *domain,
            params,
            backend,
        }
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn apply(&self, field: &[Complex64]) -> Vec<Complex64> {
        let n = self.domain.n();
        assert_eq!(field.len(), n * n * n);
        match &self.backend {
            Backend::Direct { offsets } => apply_direct(n, offsets, field),
            Backend::Fft { size, kernel_hat } => apply_fft(n, *size, kernel_hat, field),
        }
    }
}

pub(crate) fn kernel_at_offset(h: f64, params: &KernelParams, d: [i64; 3]) -> Complex64 {
    if d == [0, 0, 0] {
        return Complex64::new(self_weight(h), 0.0);
    }
    let z = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
    let r = vec3::norm(&z);
    factored_kernel_unchecked(&z, r, params) * h.powi(3)
}

fn offset_kernel(domain: &BallDomain, params: &KernelParams) -> Vec<Complex64> {
    let n = domain.n() as i64;
    let w = (2 * n - 1) as usize;
    let h = domain.spacing();
    (0..w * w * w)
        .into_par_iter()
        .map(|idx| {
            let a = (idx / (w * w)) as i64 - (n - 1);
            let b = ((idx / w) % w) as i64 - (n - 1);
            let c = (idx % w) as i64 - (n - 1);
            kernel_at_offset(h, params, [a, b, c])
        })
        .collect()
}

fn apply_direct(n: usize, offsets: &[Complex64], field: &[Complex64]) -> Vec<Complex64> {
    let w = 2 * n - 1;
    let sources: Vec<(usize, usize, usize, Complex64)> = field
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
        .map(|(idx, v)| (idx / (n * n), (idx / n) % n, idx % n, *v))
        .collect();
    (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j, l) = (idx / (n * n), (idx / n) % n, idx % n);
            sources
                .iter()
                .map(|&(a, b, c, v)| {
                    let o = ((i + n - 1 - a) * w + (j + n - 1 - b)) * w + (l + n - 1 - c);
                    offsets[o] * v
                })
                .sum()
        })
        .collect()
}

fn cyclic_kernel_hat(domain: &BallDomain, params: &KernelParams, m: usize) -> Vec<Complex64> {
    let n = domain.n() as i64;
    let h = domain.spacing();
    let wrap = |i: usize| -> Option<i64> {
        let i = i as i64;
        if i < n {
            Some(i)
        } else if i > m as i64 - n {
            Some(i - m as i64)
        } else {
            None
        }
    };
    let mut buf: Vec<Complex64> = (0..m * m * m)
        .into_par_iter()
        .map(|idx| {
            let (a, b, c) = (idx / (m * m), (idx / m) % m, idx % m);
            match (wrap(a), wrap(b), wrap(c)) {
                (Some(a), Some(b), Some(c)) => kernel_at_offset(h, params, [a, b, c]),
                _ => Complex64::new(0.0, 0.0),
            }
        })
        .collect();
    fft::fft3(&mut buf, m, Sign::Negative);
    buf
}

fn apply_fft(n: usize, m: usize, kernel_hat: &[Complex64], field: &[Complex64]) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
    for i in 0..n {
        for j in 0..n {
            let src = (i * n + j) * n;
            let dst = (i * m + j) * m;
            buf[dst..dst + n].copy_from_slice(&field[src..src + n]);
        }
    }
    fft::fft3(&mut buf, m, Sign::Negative);
    buf.par_iter_mut()
        .zip(kernel_hat.par_iter())
        .for_each(|(b, k)| *b *= k);
    fft::fft3(&mut buf, m, Sign::Positive);
    let scale = 1.0 / (m * m * m) as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            let src = (i * m + j) * m;
            let dst = (i * n + j) * n;
            for l in 0..n {
                out[dst + l] = buf[src + l] * scale;
            }
        }
    }
    out
}

/// Grid evaluation of `x -> int G(x - y) field(y) dy`.
pub fn convolve_green(
    field: &ComplexField,
    params: &KernelParams,
    domain: &BallDomain,
) -> Result<ComplexField> {
    field.check_shape(domain)?;
    let op = GreenOperator::new(domain, *params, ConvolutionPath::Auto);
    Ok(ComplexField {
        n: domain.n(),
        values: op.apply(&field.values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn free_green_values() {
        let o = [0.0; 3];
        let x = [1.0, 0.0, 0.0];
        let g = free_green(&x, &o, Complex64::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(g.re, 1.0 / (4.0 * PI), epsilon = 1e-15);
        let g = free_green(&x, &o, Complex64::new(PI, 0.0)).unwrap();
        assert_relative_eq!(g.re, -1.0 / (4.0 * PI), epsilon = 1e-15);
        assert!(g.im.abs() < 1e-15);
        let g = free_green(&x, &o, Complex64::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(g.re, (-1f64).exp() / (4.0 * PI), epsilon = 1e-15);
        assert!(matches!(
            free_green(&o, &o, Complex64::new(1.0, 0.0)),
            Err(ScatterError::SingularEvaluation)
        ));
    }

    #[test]
    fn factored_green_on_and_against_the_ray() {
        let beta = [0.0, 0.0, 1.0];
        let p = KernelParams::real(3.7, beta).unwrap();
        let g = factored_green(&[0.0, 0.0, 2.0], &p).unwrap();
        assert_relative_eq!(g.re, 1.0 / (8.0 * PI), epsilon = 1e-15);
        assert!(g.im.abs() < 1e-15);
        let g = factored_green(&[0.0, 0.0, -1.0], &p).unwrap();
        let expect = (I * 2.0 * 3.7).exp() / (4.0 * PI);
        assert!((g - expect).norm() < 1e-15);
    }

    #[test]
    fn factored_is_free_times_plane_wave() {
        let beta = vec3::normalize(&[0.3, -0.4, 0.8]);
        let k = Complex64::new(2.5, 0.7);
        let p = KernelParams::new(k, beta).unwrap();
        for z in [[0.1, 0.2, 0.3], [-0.7, 0.05, 0.4], [1.0, -1.0, 0.0]] {
            let f = free_green(&z, &[0.0; 3], k).unwrap() * (-I * k * vec3::dot(&beta, &z)).exp();
            let g = factored_green(&z, &p).unwrap();
            assert!((f - g).norm() <= 1e-14 * g.norm());
        }
    }

    #[test]
    fn symbol_values() {
        let b = [1.0, 0.0, 0.0];
        let s = green_symbol(&[1.0, 0.0, 0.0], Complex64::new(0.0, 0.0), &b).unwrap();
        assert_relative_eq!(s.re, 1.0);
        let s = green_symbol(&[0.0, 1.0, 0.0], Complex64::new(5.0, 2.0), &b).unwrap();
        assert!((s - 1.0).norm() < 1e-15);
        // on the characteristic sphere |xi|^2 = 2 k beta.xi
        assert!(matches!(
            green_symbol(&[2.0, 0.0, 0.0], Complex64::new(1.0, 0.0), &b),
            Err(ScatterError::ResonantFrequency(_))
        ));
    }

    #[test]
    fn lower_half_plane_rejected() {
        assert!(KernelParams::new(Complex64::new(1.0, -0.1), [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn direct_and_fft_paths_agree() {
        let d = make_grid(1.0, 9).unwrap();
        let p = KernelParams::new(Complex64::new(3.0, 0.5), vec3::normalize(&[1.0, 2.0, 2.0]))
            .unwrap();
        let field: Vec<Complex64> = d
            .nodes()
            .map(|x| Complex64::new((x[0] * 2.0).cos() * (1.0 - x[1] * x[1]), x[2]))
            .collect();
        let a = GreenOperator::new(&d, p, ConvolutionPath::Direct).apply(&field);
        let b = GreenOperator::new(&d, p, ConvolutionPath::Fft).apply(&field);
        let err = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn convolution_is_linear() {
        let d = make_grid(1.0, 9).unwrap();
        let p = KernelParams::real(2.0, [0.0, 1.0, 0.0]).unwrap();
        let f = ComplexField::from_fn(&d, |x| Complex64::new(x[0], 1.0));
        let g = ComplexField::from_fn(&d, |x| Complex64::new(x[1] * x[2], -x[0]));
        let (a, c) = (Complex64::new(0.5, -1.0), Complex64::new(2.0, 0.25));
        let combo = ComplexField {
            n: d.n(),
            values: f
                .values
                .iter()
                .zip(&g.values)
                .map(|(x, y)| a * x + c * y)
                .collect(),
        };
        let lhs = convolve_green(&combo, &p, &d).unwrap();
        let cf = convolve_green(&f, &p, &d).unwrap();
        let cg = convolve_green(&g, &p, &d).unwrap();
        for i in 0..lhs.len() {
            let rhs = a * cf.values[i] + c * cg.values[i];
            assert!((lhs.values[i] - rhs).norm() < 1e-12);
        }
        let zero = convolve_green(&ComplexField::zeros(&d), &p, &d).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn kernel_modulus_bound_in_upper_half_plane() {
        let p = KernelParams::new(Complex64::new(4.0, 1.5), vec3::normalize(&[1.0, 1.0, 0.0]))
            .unwrap();
        let d = make_grid(1.0, 9).unwrap();
        for z in d.nodes().filter(|z| vec3::norm(z) > 0.0) {
            let r = vec3::norm(&z);
            let g = factored_green(&z, &p).unwrap().norm();
            assert!(g <= (2.0 * p.k.im * r).exp() / (4.0 * PI * r) * (1.0 + 1e-14));
        }
    }
}
