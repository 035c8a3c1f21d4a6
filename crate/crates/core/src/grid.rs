//! Uniform Cartesian grids over the cube `[-a, a]^3`, sphere direction sets
//! and the trapezoidal ball quadrature shared by every other module.
//!
//! Nodes are stored in row-major order: `index = (i * n + j) * n + l` with
//! `x = (-a + i h, -a + j h, -a + l h)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::vec3::{self, Vec3};

/// Smallest admissible number of points per axis.
pub const MIN_GRID_N: usize = 8;

/// Uniform grid on the bounding cube of the ball `B_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    radius_a: f64,
    grid_n: usize,
    spacing: f64,
}

impl BallDomain {
    pub fn radius(&self) -> f64 {
        self.radius_a
    }

    pub fn n(&self) -> usize {
        self.grid_n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn num_nodes(&self) -> usize {
        self.grid_n.pow(3)
    }

    /// Coordinate of the `i`-th node along one axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        // symmetric construction so that coord(i) == -coord(n-1-i) exactly
        let n1 = (self.grid_n - 1) as f64;
        self.radius_a * (2.0 * i as f64 - n1) / n1
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.grid_n + j) * self.grid_n + l
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.grid_n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Vec3 {
        let (i, j, l) = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(l)]
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.num_nodes()).map(move |idx| self.node(idx))
    }

    /// Index of the node at the origin, present only for odd `n`.
    pub fn center_index(&self) -> Option<usize> {
        if self.grid_n % 2 == 1 {
            let c = self.grid_n / 2;
            Some(self.index(c, c, c))
        } else {
            None
        }
    }

    /// Trapezoidal weights (including the cell volume) restricted to `|x| <= a`.
    pub fn ball_weights(&self) -> Vec<f64> {
        let n = self.grid_n;
        let hv = self.cell_volume();
        let axis_w = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let limit = self.radius_a * (1.0 + 1e-12);
        (0..self.num_nodes())
            .map(|idx| {
                let (i, j, l) = self.unravel(idx);
                let x = self.node(idx);
                if vec3::norm(&x) <= limit {
                    hv * axis_w(i) * axis_w(j) * axis_w(l)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Same grid geometry with a different number of points per axis.
    pub fn refined(&self, n: usize) -> Result<BallDomain> {
        make_grid(self.radius_a, n)
    }
}

/// Build the uniform grid on `[-a, a]^3` with `n` points per axis.
pub fn make_grid(radius_a: f64, n: usize) -> Result<BallDomain> {
    if !(radius_a > 0.0) || !radius_a.is_finite() {
        return Err(ScatterError::InvalidGrid(format!(
            "radius must be positive, got {radius_a}"
        )));
    }
    if n < MIN_GRID_N {
        return Err(ScatterError::InvalidGrid(format!(
            "need at least {MIN_GRID_N} points per axis, got {n}"
        )));
    }
    Ok(BallDomain {
        radius_a,
        grid_n: n,
        spacing: 2.0 * radius_a / (n - 1) as f64,
    })
}

/// How the weights of a [`DirectionSet`] are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightMode {
    /// Weights sum to `4 pi` (surface quadrature on `S^2`).
    Sphere,
    /// Weights sum to 1 (uniform average).
    Average,
}

/// Discrete set of unit vectors with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    directions: Vec<Vec3>,
    weights: Vec<f64>,
    mode: WeightMode,
}

impl DirectionSet {
    pub fn new(directions: Vec<Vec3>, weights: Vec<f64>, mode: WeightMode) -> Result<Self> {
        if directions.len() != weights.len() || directions.is_empty() {
            return Err(ScatterError::InvalidDirections(
                "directions and weights must be nonempty and of equal length".into(),
            ));
        }
        if let Some(d) = directions.iter().find(|d| !vec3::is_unit(d, 1e-12)) {
            return Err(ScatterError::InvalidDirections(format!(
                "direction {d:?} is not a unit vector"
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(ScatterError::InvalidDirections(
                "weights must be positive".into(),
            ));
        }
        Ok(Self {
            directions,
            weights,
            mode,
        })
    }

    /// Equal-weight set (sphere mode) from explicit unit vectors.
    pub fn from_directions(directions: Vec<Vec3>) -> Result<Self> {
        let m = directions.len().max(1);
        let w = 4.0 * PI / m as f64;
        Self::new(directions, vec![w; m], WeightMode::Sphere)
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted sum of `f` over the set.
    pub fn integrate<F: Fn(&Vec3) -> f64>(&self, f: F) -> f64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * f(d))
            .sum()
    }

    /// The union of the set with its antipodal image, equally weighted.
    pub fn symmetrized(&self) -> DirectionSet {
        let mut dirs = self.directions.clone();
        dirs.extend(self.directions.iter().map(vec3::neg));
        let total = match self.mode {
            WeightMode::Sphere => 4.0 * PI,
            WeightMode::Average => 1.0,
        };
        let w = total / dirs.len() as f64;
        let m = dirs.len();
        DirectionSet {
            directions: dirs,
            weights: vec![w; m],
            mode: self.mode,
        }
    }
}

/// Near-uniform Fibonacci lattice on `S^2` with equal weights `4 pi / m`.
pub fn fibonacci_sphere(m: usize) -> Result<DirectionSet> {
    if m < 6 {
        return Err(ScatterError::InvalidDirections(format!(
            "need at least 6 directions, got {m}"
        )));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    let directions = (0..m)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            vec3::normalize(&[r * phi.cos(), r * phi.sin(), z])
        })
        .collect();
    DirectionSet::new(directions, vec![4.0 * PI / m as f64; m], WeightMode::Sphere)
}

/// Point `kappa + i eta` of the closed upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrequency {
    pub kappa: f64,
    pub eta: f64,
}

impl ComplexFrequency {
    pub fn new(kappa: f64, eta: f64) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(ScatterError::InvalidArgument(format!(
                "kappa must be >= 0, got {kappa}"
            )));
        }
        if !(eta >= 0.0) {
            return Err(ScatterError::LowerHalfPlane(eta));
        }
        Ok(Self { kappa, eta })
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.kappa, self.eta)
    }

    /// `gamma = kappa^2 + eta^2`.
    pub fn gamma(&self) -> f64 {
        self.kappa * self.kappa + self.eta * self.eta
    }
}

/// Complex scalar field sampled on a [`BallDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub n: usize,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(domain: &BallDomain) -> Self {
        Self {
            n: domain.n(),
            values: vec![Complex64::new(0.0, 0.0); domain.num_nodes()],
        }
    }

    pub fn constant(domain: &BallDomain, c: Complex64) -> Self {
        Self {
            n: domain.n(),
            values: vec![c; domain.num_nodes()],
        }
    }

    pub fn from_fn<F: Fn(&Vec3) -> Complex64>(domain: &BallDomain, f: F) -> Self {
        Self {
            n: domain.n(),
            values: domain.nodes().map(|x| f(&x)).collect(),
        }
    }

    pub fn from_real(domain: &BallDomain, values: &[f64]) -> Self {
        Self {
            n: domain.n(),
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Sup-norm restricted to nodes inside the ball, the `C(B_a)` norm.
    pub fn ball_sup_norm(&self, domain: &BallDomain) -> f64 {
        let limit = domain.radius() * (1.0 + 1e-12);
        self.values
            .iter()
            .enumerate()
            .filter(|(idx, _)| vec3::norm(&domain.node(*idx)) <= limit)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn check_shape(&self, domain: &BallDomain) -> Result<()> {
        if self.values.len() != domain.num_nodes() {
            return Err(ScatterError::ShapeMismatch {
                expected: domain.num_nodes(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Trapezoidal ball quadrature `sum_x w(x) f(x)` over nodes with `|x| <= a`.
pub fn ball_quadrature(domain: &BallDomain, f: &[Complex64]) -> Complex64 {
    domain
        .ball_weights()
        .iter()
        .zip(f)
        .map(|(w, v)| v * *w)
        .sum()
}

/// Real-valued variant of [`ball_quadrature`].
pub fn ball_quadrature_real(domain: &BallDomain, f: &[f64]) -> f64 {
    domain.ball_weights().iter().zip(f).map(|(w, v)| w * v).sum()
}
