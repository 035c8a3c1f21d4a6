//! Quantitative estimates behind the uniqueness argument, measured on the
//! grid: transform decay at complex frequency, the matching height
//! `eta(kappa)`, the contraction factor `nu`, the auxiliary integrals `J`
//! and `J-script`, and the decay of `||T^2||`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ScatterError};
use crate::grid::DirectionSet;
use crate::potential::Potential;
use crate::radon::{radon_transform_with, RadonProfile, RadonSampler};
use crate::spectral::MAX_ETA_A;

mod decay;
mod j_integral;
mod nu;
mod spheroidal;
mod t2;

pub use decay::{decay_bound_check, find_eta, EtaFinder};
pub use j_integral::{j_integral, j_script, j_script_bound, JIntegralReport};
pub use nu::{nu_functional, NuMode, NuReport};
pub use spheroidal::{
    spheroid_volume_check, spheroidal_i1, spheroidal_i1_cartesian, SpheroidalI1,
};
pub use t2::{t2_norm_estimate, t2_norm_estimate_with, T2Options};

/// One sweep point of an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatePoint {
    pub kappa: f64,
    pub eta: f64,
    pub measured: f64,
    /// Bound or fitted model evaluated at this point (NaN when none applies).
    pub bound: f64,
}

/// A named pass/fail statement derived from the stored numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Sweep of one estimate with fits and verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub quantity: String,
    pub points: Vec<EstimatePoint>,
    pub fitted_exponent: Option<f64>,
    pub fitted_constant: Option<f64>,
    pub verdicts: Vec<Verdict>,
}

impl EstimateReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// `eta = ln(kappa) / a`, the matching height with the `O(1)` slack set to 0.
pub fn log_eta(kappa: f64, radius_a: f64) -> f64 {
    kappa.ln() / radius_a
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// How Radon profiles are sampled for high-frequency sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSampling {
    pub offsets: usize,
    pub sampler: RadonSampler,
}

impl Default for ProfileSampling {
    fn default() -> Self {
        Self {
            offsets: 2048,
            sampler: RadonSampler::Closed {
                radial_panels: 8,
                angular: 64,
            },
        }
    }
}

/// Radon profiles of one potential over a direction set, reused for every
/// `p~((kappa + i eta) beta)` evaluation.
#[derive(Debug, Clone)]
pub struct DirectionalTransform {
    profiles: Vec<RadonProfile>,
    radius_a: f64,
}

impl DirectionalTransform {
    pub fn new(p: &Potential, betas: &DirectionSet, sampling: ProfileSampling) -> Self {
        let profiles = betas
            .directions()
            .par_iter()
            .map(|b| radon_transform_with(p, b, sampling.offsets, sampling.sampler))
            .collect();
        Self {
            profiles,
            radius_a: p.domain.radius(),
        }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    fn guard(&self, eta: f64) -> Result<()> {
        let ea = eta.abs() * self.radius_a;
        if !(ea <= MAX_ETA_A) {
            return Err(ScatterError::Overflow(ea));
        }
        Ok(())
    }

    /// `p~((kappa + i eta) beta_i)`; `eta` may be negative.
    pub fn value(&self, i: usize, kappa: f64, eta: f64) -> Result<Complex64> {
        self.guard(eta)?;
        Ok(self.profiles[i].transform(kappa, eta))
    }

    /// `max_beta |p~((kappa + i eta) beta)|`; `eta` may be negative.
    pub fn max_abs(&self, kappa: f64, eta: f64) -> Result<f64> {
        self.guard(eta)?;
        Ok(self
            .profiles
            .par_iter()
            .map(|p| p.transform(kappa, eta).norm())
            .reduce(|| 0.0, f64::max))
    }
}
