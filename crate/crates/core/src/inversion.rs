//! Born reconstruction of a weak potential from fixed-direction data.
//!
//! Each sample `A(beta, alpha0, k)` gives `q~(xi) ~ -4 pi A` at
//! `xi = k (alpha0 - beta)`. Samples are binned onto the dual grid of the
//! domain, reflected with `q~(-xi) = conj q~(xi)`, optionally filled, and
//! inverted.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ScatterError};
use crate::grid::BallDomain;
use crate::potential::Potential;
use crate::solver::{
    born_amplitude, scattering_amplitude, solve_eps, AmplitudeEntry, AmplitudeTable,
};
use crate::spectral::SpectralField;
use crate::vec3::{self, Vec3};

/// Fraction of empty in-reach bins above which a low-coverage warning is logged.
pub const LOW_COVERAGE: f64 = 0.5;

/// One estimate `q~(xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierSample {
    pub xi: Vec3,
    pub value: Complex64,
}

/// Treatment of dual nodes no sample reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FillMode {
    Zero,
    /// Linear interpolation in `|xi|` between shell averages of reached nodes.
    Radial,
}

/// A `(beta, k)` pair of a sampling design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub beta: Vec3,
    pub k: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub q_rec: Potential,
    /// `||q_rec - q|| / ||q||` over the grid when a ground truth is supplied.
    pub rel_l2_error: Option<f64>,
    /// Fraction of dual nodes with `|xi| <= max sample |xi|` reached by a
    /// sample or its reflection.
    pub coverage: f64,
    /// Fraction of in-reach nodes set by the fill rule.
    pub filled: f64,
    pub samples_used: usize,
    pub samples_off_grid: usize,
    /// `max |Im| / max |Re|` of the inverse transform before truncation.
    pub imag_ratio: f64,
}

/// `xi = k (alpha0 - beta)` and `q~ = -4 pi A` for every row.
pub fn data_to_fourier_samples(table: &AmplitudeTable, alpha0: &Vec3) -> Result<Vec<FourierSample>> {
    table
        .entries
        .iter()
        .map(|e| {
            if vec3::norm(&vec3::sub(&e.alpha, alpha0)) > 1e-12 {
                return Err(ScatterError::InvalidArgument(format!(
                    "row with incidence {:?} in a table for {:?}",
                    e.alpha, alpha0
                )));
            }
            if e.k.im != 0.0 {
                return Err(ScatterError::InvalidArgument("complex wavenumber in data table".into()));
            }
            Ok(FourierSample {
                xi: vec3::scale(&vec3::sub(alpha0, &e.beta), e.k.re),
                value: -4.0 * PI * e.amplitude,
            })
        })
        .collect()
}

/// Sampling design that lands `xi = k (alpha0 - beta)` exactly on the dual
/// nodes with `0 < |xi| <= xi_max` and `alpha0.xi > 0`, plus the forward
/// sample `xi = 0`.
///
/// A node is reached by `k = |xi|^2 / (2 alpha0.xi)`, `beta = alpha0 - xi/k`;
/// nodes needing `k > k_max` are left out. Nodes in the other half-space are
/// covered by reflection.
pub fn node_placed_sweep(
    domain: &BallDomain,
    padding: usize,
    alpha0: &Vec3,
    xi_max: f64,
    k_max: f64,
) -> Result<Vec<SweepPoint>> {
    if !vec3::is_unit(alpha0, 1e-12) {
        return Err(ScatterError::InvalidDirections("alpha0 must be a unit vector".into()));
    }
    if !(k_max > 0.0) {
        return Err(ScatterError::InvalidArgument(format!("k_max must be positive, got {k_max}")));
    }
    let grid = SpectralField::zeros(domain, padding)?;
    let mut sweep = vec![SweepPoint {
        beta: *alpha0,
        k: 1.0_f64.min(k_max),
    }];
    for idx in 0..grid.values.len() {
        let xi = grid.xi(idx);
        let r = vec3::norm(&xi);
        let along = vec3::dot(alpha0, &xi);
        if r == 0.0 || r > xi_max || along <= 0.0 {
            continue;
        }
        let k = r * r / (2.0 * along);
        if k > k_max {
            continue;
        }
        let beta = vec3::normalize(&vec3::sub(alpha0, &vec3::scale(&xi, 1.0 / k)));
        sweep.push(SweepPoint { beta, k });
    }
    Ok(sweep)
}

/// Exact first-Born data `-q~(k (alpha0 - beta)) / (4 pi)` on a sweep.
pub fn born_dataset(q: &Potential, alpha0: &Vec3, sweep: &[SweepPoint]) -> AmplitudeTable {
    AmplitudeTable {
        entries: sweep
            .iter()
            .map(|p| AmplitudeEntry {
                beta: p.beta,
                alpha: *alpha0,
                k: Complex64::new(p.k, 0.0),
                amplitude: born_amplitude(q, &p.beta, alpha0, p.k),
            })
            .collect(),
    }
}

/// Solver data on a sweep, one solve per distinct wavenumber.
pub fn solver_dataset(
    q: &Potential,
    alpha0: &Vec3,
    sweep: &[SweepPoint],
    tol: f64,
    max_iter: usize,
) -> Result<AmplitudeTable> {
    let mut ks: Vec<f64> = sweep.iter().map(|p| p.k).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    let rows: Vec<Result<Vec<AmplitudeEntry>>> = ks
        .par_iter()
        .map(|&k| {
            let kc = Complex64::new(k, 0.0);
            let sol = solve_eps(q, *alpha0, kc, tol, max_iter)?;
            if !sol.converged() {
                return Err(ScatterError::NotConverged { tol, max_iter });
            }
            sweep
                .iter()
                .filter(|p| p.k == k)
                .map(|p| {
                    Ok(AmplitudeEntry {
                        beta: p.beta,
                        alpha: *alpha0,
                        k: kc,
                        amplitude: scattering_amplitude(q, &sol, &p.beta)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut entries = Vec::with_capacity(sweep.len());
    for r in rows {
        entries.extend(r?);
    }
    Ok(AmplitudeTable { entries })
}

fn radial_fill(grid: &mut SpectralField, reached: &[bool], in_reach: &[bool]) -> usize {
    let d = grid.freq_spacing;
    let width = 0.5 * d;
    let shell = |idx: usize, g: &SpectralField| (vec3::norm(&g.xi(idx)) / width).floor() as usize;
    let mut sums: Vec<(f64, Complex64, usize)> = Vec::new();
    for idx in 0..grid.values.len() {
        if !reached[idx] {
            continue;
        }
        let s = shell(idx, grid);
        if sums.len() <= s {
            sums.resize(s + 1, (0.0, Complex64::new(0.0, 0.0), 0));
        }
        sums[s].0 += vec3::norm(&grid.xi(idx));
        sums[s].1 += grid.values[idx];
        sums[s].2 += 1;
    }
    let knots: Vec<(f64, Complex64)> = sums
        .iter()
        .filter(|s| s.2 > 0)
        .map(|s| (s.0 / s.2 as f64, s.1 / s.2 as f64))
        .collect();
    let mut filled = 0;
    if knots.is_empty() {
        return 0;
    }
    for idx in 0..grid.values.len() {
        if reached[idx] || !in_reach[idx] {
            continue;
        }
        let r = vec3::norm(&grid.xi(idx));
        let pos = knots.partition_point(|k| k.0 < r);
        grid.values[idx] = if pos == 0 {
            knots[0].1
        } else if pos == knots.len() {
            knots[pos - 1].1
        } else {
            let (r0, v0) = knots[pos - 1];
            let (r1, v1) = knots[pos];
            v0 + (v1 - v0) * ((r - r0) / (r1 - r0))
        };
        filled += 1;
    }
    filled
}

/// Bin samples onto the dual grid of `domain`, reflect, fill and invert.
///
/// Collisions are averaged; reflected pairs are then averaged into exact
/// Hermitian symmetry. The result keeps the real part inside `B_a`.
pub fn reconstruct(
    samples: &[FourierSample],
    domain: &BallDomain,
    padding: usize,
    fill: FillMode,
    truth: Option<&Potential>,
) -> Result<ReconstructionResult> {
    if samples.is_empty() {
        return Err(ScatterError::InvalidArgument("no samples to reconstruct from".into()));
    }
    let mut grid = SpectralField::zeros(domain, padding)?;
    let total = grid.values.len();
    let d = grid.freq_spacing;
    let mut sum = vec![Complex64::new(0.0, 0.0); total];
    let mut count = vec![0usize; total];
    let mut off_grid = 0;
    let mut reach: f64 = 0.0;
    for s in samples {
        let idx = [0, 1, 2].map(|c| (s.xi[c] / d).round() as i64);
        let neg = idx.map(|v| -v);
        match (grid.slot(idx), grid.slot(neg)) {
            (Some(a), b) => {
                sum[a] += s.value;
                count[a] += 1;
                if let Some(b) = b {
                    sum[b] += s.value.conj();
                    count[b] += 1;
                }
                reach = reach.max(vec3::norm(&s.xi));
            }
            (None, _) => off_grid += 1,
        }
    }
    let reached: Vec<bool> = count.iter().map(|c| *c > 0).collect();
    for idx in 0..total {
        if count[idx] > 0 {
            grid.values[idx] = sum[idx] / count[idx] as f64;
        }
    }
    let sym: Vec<Complex64> = (0..total)
        .map(|idx| {
            let partner = grid.slot(grid.signed(idx).map(|v| -v));
            match partner {
                Some(p) if reached[p] && reached[idx] => 0.5 * (grid.values[idx] + grid.values[p].conj()),
                _ => grid.values[idx],
            }
        })
        .collect();
    grid.values = sym;
    let in_reach: Vec<bool> = (0..total)
        .map(|idx| vec3::norm(&grid.xi(idx)) <= reach * (1.0 + 1e-12))
        .collect();
    let reach_nodes = in_reach.iter().filter(|b| **b).count().max(1);
    let reached_in_reach = (0..total).filter(|&i| reached[i] && in_reach[i]).count();
    let coverage = reached_in_reach as f64 / reach_nodes as f64;
    if 1.0 - coverage > LOW_COVERAGE {
        log::warn!(
            "low dual-grid coverage: {:.1}% of in-reach nodes empty",
            100.0 * (1.0 - coverage)
        );
    }
    let filled = match fill {
        FillMode::Zero => 0,
        FillMode::Radial => radial_fill(&mut grid, &reached, &in_reach),
    };
    let raw = grid.inverse_ft();
    let max_re = raw.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let max_im = raw.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let limit = domain.radius() * (1.0 + 1e-12);
    let values: Vec<f64> = domain
        .nodes()
        .zip(&raw)
        .map(|(x, v)| if vec3::norm(&x) <= limit { v.re } else { 0.0 })
        .collect();
    let ell = truth.map(|t| t.smoothness_ell).unwrap_or(0);
    let q_rec = Potential::from_samples(domain, values, ell, "born reconstruction")?;
    let rel_l2_error = truth.map(|t| relative_l2(&q_rec.values, &t.values));
    Ok(ReconstructionResult {
        q_rec,
        rel_l2_error,
        coverage,
        filled: filled as f64 / reach_nodes as f64,
        samples_used: samples.len() - off_grid,
        samples_off_grid: off_grid,
        imag_ratio: if max_re > 0.0 { max_im / max_re } else { 0.0 },
    })
}

/// `||a - b|| / ||b||` on grid samples, `||a||` when `b = 0`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let base: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if base == 0.0 {
        diff
    } else {
        diff / base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::potential::{bump_potential, shifted_bump_potential};

    fn tilted() -> Vec3 {
        vec3::normalize(&[0.2113, 0.1547, 1.0])
    }

    #[test]
    fn forward_and_backward_samples() {
        let alpha0 = [0.0, 0.0, 1.0];
        let table = AmplitudeTable {
            entries: vec![
                AmplitudeEntry {
                    beta: alpha0,
                    alpha: alpha0,
                    k: Complex64::new(3.0, 0.0),
                    amplitude: Complex64::new(0.1, 0.0),
                },
                AmplitudeEntry {
                    beta: vec3::neg(&alpha0),
                    alpha: alpha0,
                    k: Complex64::new(3.0, 0.0),
                    amplitude: Complex64::new(0.0, 0.2),
                },
            ],
        };
        let s = data_to_fourier_samples(&table, &alpha0).unwrap();
        assert_eq!(vec3::norm(&s[0].xi), 0.0);
        assert!((vec3::norm(&s[1].xi) - 6.0).abs() < 1e-12);
        assert!((s[1].value - Complex64::new(0.0, -0.8 * PI)).norm() < 1e-12);
        assert!(data_to_fourier_samples(&table, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn sweep_lands_on_nodes() {
        let d = make_grid(1.0, 17).unwrap();
        let alpha0 = tilted();
        let sweep = node_placed_sweep(&d, 1, &alpha0, 12.0, 1e3).unwrap();
        let grid = SpectralField::zeros(&d, 1).unwrap();
        for p in &sweep {
            assert!(vec3::is_unit(&p.beta, 1e-12));
            let xi = vec3::scale(&vec3::sub(&alpha0, &p.beta), p.k);
            for c in 0..3 {
                let u = xi[c] / grid.freq_spacing;
                assert!((u - u.round()).abs() < 1e-9, "{xi:?}");
            }
        }
    }

    #[test]
    fn zero_potential_reconstructs_zero() {
        let d = make_grid(1.0, 17).unwrap();
        let z = Potential::zero(&d);
        let alpha0 = tilted();
        let sweep = node_placed_sweep(&d, 1, &alpha0, 12.0, 1e3).unwrap();
        let s = data_to_fourier_samples(&born_dataset(&z, &alpha0, &sweep), &alpha0).unwrap();
        let r = reconstruct(&s, &d, 1, FillMode::Zero, Some(&z)).unwrap();
        assert!(r.q_rec.values.iter().all(|v| *v == 0.0));
        assert!(reconstruct(&[], &d, 1, FillMode::Zero, None).is_err());
    }

    #[test]
    fn exact_born_data_on_full_dual_grid_is_exact() {
        // every node reached, so binning and inversion reproduce the samples
        let d = make_grid(1.0, 13).unwrap();
        let q = shifted_bump_potential(&d, 0.1, 0.5, [0.1, -0.1, 0.05]).unwrap();
        let alpha0 = tilted();
        let sweep = node_placed_sweep(&d, 1, &alpha0, f64::INFINITY, f64::INFINITY).unwrap();
        let s = data_to_fourier_samples(&born_dataset(&q, &alpha0, &sweep), &alpha0).unwrap();
        let r = reconstruct(&s, &d, 1, FillMode::Zero, Some(&q)).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert!(r.rel_l2_error.unwrap() < 1e-9, "{:?}", r.rel_l2_error);
        assert!(r.imag_ratio < 1e-10);
    }

    #[test]
    fn radial_fill_restores_missing_band() {
        let d = make_grid(1.0, 17).unwrap();
        let q = bump_potential(&d, 0.1, 0.8).unwrap();
        let alpha0 = tilted();
        let sweep = node_placed_sweep(&d, 1, &alpha0, 20.0, 20.0).unwrap();
        let s = data_to_fourier_samples(&born_dataset(&q, &alpha0, &sweep), &alpha0).unwrap();
        let zero = reconstruct(&s, &d, 1, FillMode::Zero, Some(&q)).unwrap();
        let radial = reconstruct(&s, &d, 1, FillMode::Radial, Some(&q)).unwrap();
        assert!(zero.coverage < 1.0 && radial.filled > 0.0);
        assert!(radial.rel_l2_error.unwrap() < zero.rel_l2_error.unwrap());
    }
}
