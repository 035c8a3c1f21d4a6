use super::{loglog_slope, DirectionalTransform, EstimatePoint, EstimateReport, ProfileSampling, Verdict};
use crate::error::{Result, ScatterError};
use crate::grid::DirectionSet;
use crate::potential::Potential;
use crate::spectral::{forward_ft_real, MAX_ETA_A};

/// Measure `max_beta |p~((kappa + i eta) beta)|` over a sweep and test the
/// bound `c e^{a|eta|} / (1 + kappa^2 + eta^2)^{ell/2}`.
///
/// `c` is fitted on the points with `kappa <= median(kappas)` and the bound
/// is then checked on every point, so domination on the upper half of the
/// sweep is a prediction, not a fit. The `kappa` exponent is fitted on the
/// `eta = 0` points with `kappa > 0`.
pub fn decay_bound_check(
    p: &Potential,
    betas: &DirectionSet,
    kappas: &[f64],
    etas: &[f64],
) -> Result<EstimateReport> {
    decay_bound_check_with(p, betas, kappas, etas, ProfileSampling::default())
}

pub fn decay_bound_check_with(
    p: &Potential,
    betas: &DirectionSet,
    kappas: &[f64],
    etas: &[f64],
    sampling: ProfileSampling,
) -> Result<EstimateReport> {
    let a = p.domain.radius();
    if let Some(e) = etas.iter().find(|e| e.abs() * a > MAX_ETA_A) {
        return Err(ScatterError::Overflow(e.abs() * a));
    }
    let ell = p.smoothness_ell.min(64) as f64;
    let dt = DirectionalTransform::new(p, betas, sampling);
    let mut points = Vec::with_capacity(kappas.len() * etas.len());
    for &eta in etas {
        for &kappa in kappas {
            points.push(EstimatePoint {
                kappa,
                eta,
                measured: dt.max_abs(kappa, eta)?,
                bound: f64::NAN,
            });
        }
    }
    let weight = |pt: &EstimatePoint| {
        (1.0 + pt.kappa * pt.kappa + pt.eta * pt.eta).powf(ell / 2.0) * (-a * pt.eta.abs()).exp()
    };
    let mut sorted = kappas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len().saturating_sub(1) / 2).copied().unwrap_or(0.0);
    let c = points
        .iter()
        .filter(|pt| pt.kappa <= median)
        .map(|pt| pt.measured * weight(pt))
        .fold(0.0, f64::max);
    for pt in &mut points {
        pt.bound = c / weight(pt);
    }
    let dominated = points.iter().all(|pt| pt.measured <= pt.bound * (1.0 + 1e-9) + 1e-300);
    let worst = points
        .iter()
        .map(|pt| if pt.bound > 0.0 { pt.measured / pt.bound } else { 0.0 })
        .fold(0.0, f64::max);

    let zero_eta: Vec<&EstimatePoint> = points
        .iter()
        .filter(|pt| pt.eta == 0.0 && pt.kappa > 0.0)
        .collect();
    let exponent = loglog_slope(
        &zero_eta.iter().map(|pt| pt.kappa).collect::<Vec<_>>(),
        &zero_eta.iter().map(|pt| pt.measured).collect::<Vec<_>>(),
    );
    let mut verdicts = vec![Verdict {
        name: "bound dominates".into(),
        pass: dominated,
        detail: format!("c = {c:.6e} fitted on kappa <= {median}; max measured/bound = {worst:.4}"),
    }];
    if p.is_zero() {
        verdicts[0].pass = true;
    } else if let Some(s) = exponent {
        verdicts.push(Verdict {
            name: "kappa exponent".into(),
            pass: s <= -(ell - 0.5),
            detail: format!("fitted {s:.3}, required <= {:.1}", -(ell - 0.5)),
        });
    }
    Ok(EstimateReport {
        quantity: "complex-frequency transform decay".into(),
        points,
        fitted_exponent: exponent,
        fitted_constant: Some(c),
        verdicts,
    })
}

/// Matching-height solver for one potential and direction set.
///
/// The target `P = max |p~|` is taken over the real dual grid of the
/// potential (padding 2).
#[derive(Debug, Clone)]
pub struct EtaFinder {
    transform: DirectionalTransform,
    target: f64,
    radius_a: f64,
}

impl EtaFinder {
    pub fn new(p: &Potential, betas: &DirectionSet) -> Result<Self> {
        Self::with_sampling(p, betas, ProfileSampling::default())
    }

    pub fn with_sampling(p: &Potential, betas: &DirectionSet, sampling: ProfileSampling) -> Result<Self> {
        if p.is_zero() {
            return Err(ScatterError::InvalidPotential(
                "matching height is undefined for q = 0".into(),
            ));
        }
        let spec = forward_ft_real(&p.values, &p.domain, 2)?;
        let target = spec.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Self {
            transform: DirectionalTransform::new(p, betas, sampling),
            target,
            radius_a: p.domain.radius(),
        })
    }

    /// `P`.
    pub fn target(&self) -> f64 {
        self.target
    }

    /// `max_beta |p~((kappa + i eta) beta)|`.
    pub fn envelope(&self, kappa: f64, eta: f64) -> Result<f64> {
        self.transform.max_abs(kappa, eta)
    }

    /// Bisection for `max_beta |p~((kappa + i eta) beta)| = P` to relative
    /// tolerance `tol`, `eta in (0, 700 / a]`.
    pub fn find(&self, kappa: f64, tol: f64) -> Result<f64> {
        let target = self.target;
        let cap = MAX_ETA_A / self.radius_a;
        let g = |eta: f64| self.envelope(kappa, eta).map(|v| v - target);
        let g0 = g(0.0)?;
        if g0 >= -tol * target {
            return Err(ScatterError::NoCrossing {
                cap: 0.0,
                value: g0 + target,
                target,
            });
        }
        let (mut lo, mut hi) = (0.0, 1.0 / self.radius_a);
        loop {
            let v = g(hi)?;
            if v >= 0.0 {
                break;
            }
            lo = hi;
            if hi >= cap {
                return Err(ScatterError::NoCrossing {
                    cap,
                    value: v + target,
                    target,
                });
            }
            hi = (2.0 * hi).min(cap);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = g(mid)?;
            if v.abs() <= tol * target {
                return Ok(mid);
            }
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `eta(kappa)` with `max_beta |p~((kappa + i eta) beta)| = max |p~|`.
pub fn find_eta(p: &Potential, kappa: f64, betas: &DirectionSet, tol: f64) -> Result<f64> {
    EtaFinder::new(p, betas)?.find(kappa, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{fibonacci_sphere, make_grid};
    use crate::potential::{bump_potential, piecewise_smooth_potential};

    #[test]
    fn zero_potential_passes_trivially() {
        let d = make_grid(1.0, 17).unwrap();
        let z = Potential::zero(&d);
        let r = decay_bound_check(&z, &fibonacci_sphere(6).unwrap(), &[0.0, 4.0], &[0.0, 1.0]).unwrap();
        assert!(r.points.iter().all(|p| p.measured == 0.0));
        assert!(r.passed());
    }

    #[test]
    fn polynomial_bump_decays_at_least_like_its_order() {
        let d = make_grid(1.0, 25).unwrap();
        let p = piecewise_smooth_potential(&d, 0.1, 0.9, 4).unwrap();
        let dirs = fibonacci_sphere(6).unwrap();
        let r = decay_bound_check(&p, &dirs, &[4.0, 8.0, 16.0, 32.0, 64.0], &[0.0, 1.0, 2.0]).unwrap();
        assert!(r.fitted_exponent.unwrap() <= -3.5, "{r:?}");
        assert!(r.passed(), "{:?}", r.verdicts);
    }

    #[test]
    fn matching_height_is_scale_invariant() {
        let d = make_grid(1.0, 25).unwrap();
        let p = bump_potential(&d, 0.1, 0.8).unwrap();
        let dirs = fibonacci_sphere(6).unwrap();
        let f1 = EtaFinder::new(&p, &dirs).unwrap();
        let f2 = EtaFinder::new(&p.scaled(2.0), &dirs).unwrap();
        let e1 = f1.find(16.0, 1e-8).unwrap();
        let e2 = f2.find(16.0, 1e-8).unwrap();
        assert_eq!(e1, e2);
        let env = f1.envelope(16.0, e1).unwrap();
        assert!((env / f1.target() - 1.0).abs() <= 1e-8);
        assert!(matches!(f1.find(1e-3, 1e-3), Err(ScatterError::NoCrossing { .. })));
    }
}
