//! Cubic 3D FFT on row-major `m^3` buffers, built on `rustfft`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// Direction of the exponent: `Negative` is `e^{-2 pi i jk/m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Positive,
}

/// Unnormalized in-place 3D DFT of an `m x m x m` row-major buffer.
pub fn fft3(data: &mut [Complex64], m: usize, sign: Sign) {
    assert_eq!(data.len(), m * m * m, "buffer is not m^3");
    let mut planner = FftPlanner::<f64>::new();
    let plan = match sign {
        Sign::Negative => planner.plan_fft_forward(m),
        Sign::Positive => planner.plan_fft_inverse(m),
    };
    let rows_per_task = m.max(1);

    // last axis: contiguous rows
    data.par_chunks_mut(m * rows_per_task)
        .for_each(|chunk| plan.process(chunk));

    // middle axis: transpose each m x m slab
    data.par_chunks_mut(m * m).for_each(|slab| {
        transpose_square(slab, m);
        plan.process(slab);
        transpose_square(slab, m);
    });

    // first axis: transpose m x m^2 -> m^2 x m
    let mm = m * m;
    let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
    buf.par_chunks_mut(m).enumerate().for_each(|(col, out)| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = data[i * mm + col];
        }
    });
    buf.par_chunks_mut(m * rows_per_task)
        .for_each(|chunk| plan.process(chunk));
    data.par_chunks_mut(mm).enumerate().for_each(|(i, slab)| {
        for (col, v) in slab.iter_mut().enumerate() {
            *v = buf[col * m + i];
        }
    });
}

fn transpose_square(slab: &mut [Complex64], m: usize) {
    for r in 0..m {
        for c in (r + 1)..m {
            slab.swap(r * m + c, c * m + r);
        }
    }
}

/// Smallest size `>= n` whose prime factors are all in {2, 3, 5}.
pub fn fast_size(n: usize) -> usize {
    let mut k = n.max(1);
    loop {
        let mut r = k;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return k;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_naive_dft() {
        let m = 5;
        let data: Vec<Complex64> = (0..m * m * m)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        fft3(&mut fast, m, Sign::Positive);
        for &(a, b, c) in &[(0, 0, 0), (1, 2, 3), (4, 0, 2)] {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..m {
                for j in 0..m {
                    for l in 0..m {
                        let ph = 2.0 * PI * ((a * i + b * j + c * l) as f64) / m as f64;
                        acc += data[(i * m + j) * m + l] * Complex64::from_polar(1.0, ph);
                    }
                }
            }
            assert!((acc - fast[(a * m + b) * m + c]).norm() < 1e-10);
        }
    }

    #[test]
    fn round_trip() {
        let m = 6;
        let data: Vec<Complex64> = (0..m * m * m)
            .map(|i| Complex64::new(i as f64, -(i as f64).sqrt()))
            .collect();
        let mut x = data.clone();
        fft3(&mut x, m, Sign::Negative);
        fft3(&mut x, m, Sign::Positive);
        let scale = (m * m * m) as f64;
        for (a, b) in x.iter().zip(&data) {
            assert!((a / scale - b).norm() < 1e-10);
        }
    }

    #[test]
    fn fast_sizes() {
        assert_eq!(fast_size(7), 8);
        assert_eq!(fast_size(66), 72);
        assert_eq!(fast_size(64), 64);
    }
}
