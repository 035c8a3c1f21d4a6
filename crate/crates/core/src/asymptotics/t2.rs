use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ScatterError};
use crate::green::KernelParams;
use crate::potential::Potential;
use crate::solver::{ball_mask, masked_sup, TOperator};
use crate::vec3::{self, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);
const PLANE_WAVES: usize = 4;

/// Probe settings for [`t2_norm_estimate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct T2Options {
    /// Random probes in addition to the constant field; at least 8.
    pub probes: usize,
    pub seed: u64,
    /// Direction the kernel is factored along.
    pub beta: Vec3,
    /// Extra applications of `T^2` to each probe, keeping the best ratio.
    pub power_steps: usize,
}

impl Default for T2Options {
    fn default() -> Self {
        Self {
            probes: 8,
            seed: 0x5eed,
            beta: [0.0, 0.0, 1.0],
            power_steps: 2,
        }
    }
}

/// Lower bound on `||T^2||` in `C(B_a)` at `k = kappa + i eta`, the maximum of
/// `||T^2 f|| / ||f||` over seeded smooth probes and the constant field.
pub fn t2_norm_estimate(q: &Potential, kappa: f64, eta: f64, probes: usize) -> Result<f64> {
    t2_norm_estimate_with(
        q,
        kappa,
        eta,
        &T2Options {
            probes,
            ..T2Options::default()
        },
    )
}

/// Probe `f = sum_j c_j e^{i w_j.x}` with `|w_j| <= 2 kappa` and random complex `c_j`.
fn random_probe(q: &Potential, kappa: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let reach = 2.0 * kappa.max(1.0);
    let waves: Vec<(Vec3, Complex64)> = (0..PLANE_WAVES)
        .map(|_| {
            let w = [
                rng.gen_range(-reach..reach),
                rng.gen_range(-reach..reach),
                rng.gen_range(-reach..reach),
            ];
            let c = Complex64::from_polar(rng.gen_range(0.5..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
            (w, c)
        })
        .collect();
    q.domain
        .nodes()
        .map(|x| waves.iter().map(|(w, c)| c * (I * vec3::dot(w, &x)).exp()).sum())
        .collect()
}

pub fn t2_norm_estimate_with(q: &Potential, kappa: f64, eta: f64, opts: &T2Options) -> Result<f64> {
    if opts.probes < 8 {
        return Err(ScatterError::InvalidArgument(format!(
            "at least 8 probes required, got {}",
            opts.probes
        )));
    }
    let params = KernelParams::new(Complex64::new(kappa, eta), opts.beta)?;
    if q.is_zero() {
        return Ok(0.0);
    }
    let t = TOperator::new(q, params);
    let mask = ball_mask(&q.domain);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut probes = vec![vec![Complex64::new(1.0, 0.0); q.values.len()]];
    for _ in 0..opts.probes {
        probes.push(random_probe(q, kappa, &mut rng));
    }
    let ratios: Vec<f64> = probes
        .into_par_iter()
        .map(|mut f| {
            let mut best: f64 = 0.0;
            for _ in 0..=opts.power_steps {
                let norm_f = masked_sup(&f, &mask);
                if norm_f == 0.0 {
                    break;
                }
                let g = t.apply(&t.apply(&f));
                let norm_g = masked_sup(&g, &mask);
                best = best.max(norm_g / norm_f);
                f = g;
            }
            best
        })
        .collect();
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::potential::bump_potential;

    #[test]
    fn zero_potential_and_probe_count() {
        let d = make_grid(1.0, 9).unwrap();
        let z = Potential::zero(&d);
        assert_eq!(t2_norm_estimate(&z, 8.0, 2.0, 8).unwrap(), 0.0);
        assert!(t2_norm_estimate(&z, 8.0, 2.0, 7).is_err());
    }

    #[test]
    fn quadratic_in_potential() {
        let d = make_grid(1.0, 13).unwrap();
        let q = bump_potential(&d, 0.1, 0.8).unwrap();
        let e1 = t2_norm_estimate(&q, 8.0, 2.0, 8).unwrap();
        let e4 = t2_norm_estimate(&q.scaled(4.0), 8.0, 2.0, 8).unwrap();
        assert!(e1 > 0.0);
        assert!((e4 / e1 - 16.0).abs() < 1e-10 * 16.0, "{}", e4 / e1);
    }

    #[test]
    fn seeded_runs_repeat() {
        let d = make_grid(1.0, 13).unwrap();
        let q = bump_potential(&d, 0.1, 0.8).unwrap();
        let a = t2_norm_estimate(&q, 4.0, 1.0, 8).unwrap();
        let b = t2_norm_estimate(&q, 4.0, 1.0, 8).unwrap();
        assert_eq!(a, b);
    }
}
