//! Real, compactly supported test potentials with an honest smoothness class.
//!
//! Two families are provided: the `C^inf` bump
//! `A exp(-R^2 / (R^2 - |x - c|^2))` and the finite-order polynomial bump
//! `A (1 - |x|^2 / R^2)_+^order`. Both keep a closed form next to the grid
//! samples so that off-grid evaluation (Radon planes, spheroidal shells) does
//! not go through interpolation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, ScatterError};
use crate::grid::BallDomain;
use crate::vec3::{self, Vec3};

/// Smoothness index declared for the `C^inf` bump unless overridden.
pub const BUMP_DECLARED_ELL: u32 = 8;

/// Closed-form description of a potential.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialFamily {
    Zero,
    Bump {
        amplitude: f64,
        support_r: f64,
        center: Vec3,
    },
    Polynomial {
        amplitude: f64,
        support_r: f64,
        order: u32,
    },
    Scaled {
        factor: f64,
        inner: Box<PotentialFamily>,
    },
    Difference(Box<PotentialFamily>, Box<PotentialFamily>),
    /// Grid samples only; off-grid values come from trilinear interpolation.
    Sampled,
}

impl PotentialFamily {
    /// Closed-form value, `None` for [`PotentialFamily::Sampled`].
    pub fn eval(&self, x: &Vec3) -> Option<f64> {
        match self {
            PotentialFamily::Zero => Some(0.0),
            PotentialFamily::Bump {
                amplitude,
                support_r,
                center,
            } => {
                let r2 = vec3::dot(&vec3::sub(x, center), &vec3::sub(x, center));
                let s2 = support_r * support_r;
                if r2 >= s2 {
                    Some(0.0)
                } else {
                    Some(amplitude * (-s2 / (s2 - r2)).exp())
                }
            }
            PotentialFamily::Polynomial {
                amplitude,
                support_r,
                order,
            } => {
                let u = 1.0 - vec3::dot(x, x) / (support_r * support_r);
                if u <= 0.0 {
                    Some(0.0)
                } else {
                    Some(amplitude * u.powi(*order as i32))
                }
            }
            PotentialFamily::Scaled { factor, inner } => inner.eval(x).map(|v| factor * v),
            PotentialFamily::Difference(a, b) => Some(a.eval(x)? - b.eval(x)?),
            PotentialFamily::Sampled => None,
        }
    }

    /// Radius of a ball centered at the origin containing the support.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            PotentialFamily::Zero => Some(0.0),
            PotentialFamily::Bump {
                support_r, center, ..
            } => Some(support_r + vec3::norm(center)),
            PotentialFamily::Polynomial { support_r, .. } => Some(*support_r),
            PotentialFamily::Scaled { inner, .. } => inner.support_radius(),
            PotentialFamily::Difference(a, b) => {
                Some(a.support_radius()?.max(b.support_radius()?))
            }
            PotentialFamily::Sampled => None,
        }
    }
}

/// A potential sampled on a [`BallDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub domain: BallDomain,
    pub values: Vec<f64>,
    pub smoothness_ell: u32,
    pub label: String,
    pub family: PotentialFamily,
}

impl Potential {
    fn from_family(
        domain: &BallDomain,
        family: PotentialFamily,
        smoothness_ell: u32,
        label: String,
    ) -> Self {
        let values = (0..domain.num_nodes())
            .into_par_iter()
            .map(|idx| family.eval(&domain.node(idx)).unwrap_or(0.0))
            .collect();
        Self {
            domain: *domain,
            values,
            smoothness_ell,
            label,
            family,
        }
    }

    /// The identically zero potential.
    pub fn zero(domain: &BallDomain) -> Self {
        Self {
            domain: *domain,
            values: vec![0.0; domain.num_nodes()],
            smoothness_ell: u32::MAX,
            label: "zero".into(),
            family: PotentialFamily::Zero,
        }
    }

    /// Grid samples without closed form.
    pub fn from_samples(
        domain: &BallDomain,
        values: Vec<f64>,
        smoothness_ell: u32,
        label: impl Into<String>,
    ) -> Result<Self> {
        if values.len() != domain.num_nodes() {
            return Err(ScatterError::ShapeMismatch {
                expected: domain.num_nodes(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ScatterError::InvalidPotential("non-finite sample".into()));
        }
        Ok(Self {
            domain: *domain,
            values,
            smoothness_ell,
            label: label.into(),
            family: PotentialFamily::Sampled,
        })
    }

    /// Value at an arbitrary point: closed form when known, else trilinear
    /// interpolation of the grid samples (zero outside the cube).
    pub fn eval(&self, x: &Vec3) -> f64 {
        match self.family.eval(x) {
            Some(v) => v,
            None => trilinear(&self.domain, &self.values, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `factor * q`, keeping the closed form.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            domain: self.domain,
            values: self.values.iter().map(|v| factor * v).collect(),
            smoothness_ell: self.smoothness_ell,
            label: format!("{factor}*{}", self.label),
            family: PotentialFamily::Scaled {
                factor,
                inner: Box::new(self.family.clone()),
            },
        }
    }

    /// `p = self - other`, with the smaller of the two smoothness indices.
    pub fn difference(&self, other: &Potential) -> Result<Self> {
        if self.domain != other.domain {
            return Err(ScatterError::InvalidArgument(
                "potentials live on different grids".into(),
            ));
        }
        Ok(Self {
            domain: self.domain,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            smoothness_ell: self.smoothness_ell.min(other.smoothness_ell),
            label: format!("{}-{}", self.label, other.label),
            family: PotentialFamily::Difference(
                Box::new(self.family.clone()),
                Box::new(other.family.clone()),
            ),
        })
    }

    /// Override the declared smoothness index.
    pub fn with_declared_ell(mut self, ell: u32) -> Result<Self> {
        if matches!(self.family, PotentialFamily::Bump { .. }) && ell > 3 {
            self.smoothness_ell = ell;
            Ok(self)
        } else {
            Err(ScatterError::InvalidPotential(
                "only the C-infinity bump accepts an arbitrary declared ell > 3".into(),
            ))
        }
    }

    /// `sqrt(int q^2 dx)` by ball quadrature.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        crate::grid::ball_quadrature_real(&self.domain, &sq).sqrt()
    }

    /// Maximum of `|q|` over nodes with `|x| > r`.
    pub fn max_abs_outside(&self, r: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(idx, _)| vec3::norm(&self.domain.node(*idx)) > r)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

fn check_support(domain: &BallDomain, support_r: f64, center: &Vec3) -> Result<()> {
    if !(support_r > 0.0) {
        return Err(ScatterError::InvalidPotential(format!(
            "support radius must be positive, got {support_r}"
        )));
    }
    let reach = support_r + vec3::norm(center);
    if reach >= domain.radius() {
        return Err(ScatterError::InvalidPotential(format!(
            "support reach {reach} must be below the ball radius {}",
            domain.radius()
        )));
    }
    if reach > domain.radius() - domain.spacing() {
        return Err(ScatterError::InvalidPotential(format!(
            "support reach {reach} leaves no one-cell margin inside radius {}",
            domain.radius()
        )));
    }
    Ok(())
}

/// `C^inf` bump centered at the origin.
pub fn bump_potential(domain: &BallDomain, amplitude: f64, support_r: f64) -> Result<Potential> {
    shifted_bump_potential(domain, amplitude, support_r, [0.0; 3])
}

/// `C^inf` bump centered at `center`; the whole support must stay inside `B_a`.
pub fn shifted_bump_potential(
    domain: &BallDomain,
    amplitude: f64,
    support_r: f64,
    center: Vec3,
) -> Result<Potential> {
    check_support(domain, support_r, &center)?;
    let label = if center == [0.0; 3] {
        format!("bump(A={amplitude},R={support_r})")
    } else {
        format!(
            "bump(A={amplitude},R={support_r},c=[{},{},{}])",
            center[0], center[1], center[2]
        )
    };
    Ok(Potential::from_family(
        domain,
        PotentialFamily::Bump {
            amplitude,
            support_r,
            center,
        },
        BUMP_DECLARED_ELL,
        label,
    ))
}

/// `amplitude * (1 - |x|^2 / R^2)_+^order`, declared `ell = order`.
pub fn piecewise_smooth_potential(
    domain: &BallDomain,
    amplitude: f64,
    support_r: f64,
    order: u32,
) -> Result<Potential> {
    if order < 4 {
        return Err(ScatterError::InvalidPotential(format!(
            "order must be >= 4, got {order}"
        )));
    }
    check_support(domain, support_r, &[0.0; 3])?;
    Ok(Potential::from_family(
        domain,
        PotentialFamily::Polynomial {
            amplitude,
            support_r,
            order,
        },
        order,
        format!("poly(A={amplitude},R={support_r},p={order})"),
    ))
}

/// `q~(xi) = int q(x) e^{i xi . x} dx` by direct ball quadrature.
pub fn fourier_of_potential(q: &Potential, xi: &Vec3) -> Complex64 {
    let weights = q.domain.ball_weights();
    (0..q.values.len())
        .into_par_iter()
        .filter(|&idx| q.values[idx] != 0.0)
        .map(|idx| {
            let x = q.domain.node(idx);
            let phase = vec3::dot(xi, &x);
            Complex64::from_polar(weights[idx] * q.values[idx], phase)
        })
        .sum()
}

/// Trilinear interpolation of grid samples; zero outside the cube.
pub fn trilinear(domain: &BallDomain, values: &[f64], x: &Vec3) -> f64 {
    let n = domain.n();
    let h = domain.spacing();
    let a = domain.radius();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        let u = (x[d] + a) / h;
        if !(u >= 0.0) || u > (n - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(n - 2);
        base[d] = i;
        frac[d] = u - i as f64;
    }
    let mut acc = 0.0;
    for c in 0..8 {
        let (di, dj, dl) = (c >> 2 & 1, c >> 1 & 1, c & 1);
        let w = (if di == 1 { frac[0] } else { 1.0 - frac[0] })
            * (if dj == 1 { frac[1] } else { 1.0 - frac[1] })
            * (if dl == 1 { frac[2] } else { 1.0 - frac[2] });
        if w != 0.0 {
            acc += w * values[domain.index(base[0] + di, base[1] + dj, base[2] + dl)];
        }
    }
    acc
}
