//! Random-vector families, seeded sampling and exact moment oracles.
//!
//! A [`DistributionSpec`] names a law on `R^n`. Capability flags are derived
//! from the family and never set by the user: they decide which exact
//! routes (closed-form moments, even-moment expansions) are available.

mod moments;
mod sampling;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use moments::{covariance, marginal_abs_moment, mixed_even_moment, radial_moment};
pub use sampling::{for_each_block, order_stat_mean, sample, SampleCache, BLOCK_ROWS};

/// Law of the radius `R` for `X = R U`, `U` uniform on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RadialLaw {
    /// `R` identically equal to `radius`.
    Constant { radius: f64 },
    /// `R` distributed as chi with `n` degrees of freedom, so `X` is a
    /// standard Gaussian vector.
    ChiNormalized,
    /// Density proportional to `r^(shape-1) exp(-(r/scale)^power)` on `r > 0`.
    GeneralizedGamma { scale: f64, shape: f64, power: f64 },
}

impl Default for RadialLaw {
    fn default() -> Self {
        RadialLaw::Constant { radius: 1.0 }
    }
}

/// Symmetric one-dimensional law used as a coordinate of a product vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Marginal {
    /// `+-value` with probability 1/2 each.
    TwoPoint { value: f64 },
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// Laplace with density `exp(-|x|/scale) / (2 scale)`.
    Exponential { scale: f64 },
    Gaussian { sigma: f64 },
    /// Density proportional to `exp(-|x/scale|^power)`.
    LaplacePower { scale: f64, power: f64 },
}

impl Marginal {
    pub fn abs_moment(&self, p: f64) -> f64 {
        use crate::special::*;
        match *self {
            Marginal::TwoPoint { value } => value.abs().powf(p),
            Marginal::Uniform { half_width } => half_width.powf(p) / (p + 1.0),
            Marginal::Exponential { scale } => laplace_abs_moment(scale, p),
            Marginal::Gaussian { sigma } => sigma.powf(p) * gaussian_abs_moment(p),
            Marginal::LaplacePower { scale, power } => laplace_power_abs_moment(scale, power, p),
        }
    }

    pub fn variance(&self) -> f64 {
        self.abs_moment(2.0)
    }

    pub fn is_log_concave(&self) -> bool {
        match *self {
            Marginal::TwoPoint { .. } => false,
            Marginal::LaplacePower { power, .. } => power >= 1.0,
            _ => true,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::TwoPoint { value } => value.is_finite(),
            Marginal::Uniform { half_width: a }
            | Marginal::Exponential { scale: a }
            | Marginal::Gaussian { sigma: a } => a.is_finite() && a > 0.0,
            Marginal::LaplacePower { scale, power } => scale > 0.0 && power > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("bad marginal parameters {self:?}")))
        }
    }
}

/// Supported families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    GaussianIsotropic,
    /// i.i.d. Laplace coordinates with unit variance, density
    /// `2^(-n/2) exp(-sqrt(2) ||x||_1)`.
    ExponentialProduct,
    RademacherProduct,
    UniformSphere {
        #[serde(default)]
        radial: RadialLaw,
    },
    /// Uniform on `[-sqrt(3), sqrt(3)]^n`.
    UniformCube,
    /// Atoms `+-sqrt(n) e_i`, each with probability `1/(2n)`.
    SparseIsotropic,
    UnconditionalProduct { marginals: Vec<Marginal> },
    /// `X = A Y` with `A` an `n x m` matrix (rows listed) and `Y ~ base`.
    LinearImage {
        matrix: Vec<Vec<f64>>,
        base: Box<DistributionSpec>,
    },
}

/// A random-vector law on `R^dimension`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub family: Family,
    pub dimension: usize,
}

/// Capability flags derived from the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub is_isotropic: bool,
    pub is_unconditional: bool,
    pub is_log_concave: bool,
    pub has_exact_mixed_moments: bool,
    pub has_exact_marginal_moments: bool,
}

const ISOTROPY_TOL: f64 = 1e-9;

impl DistributionSpec {
    fn simple(family: Family, n: usize) -> Self {
        Self { family, dimension: n }
    }

    pub fn gaussian(n: usize) -> Self {
        Self::simple(Family::GaussianIsotropic, n)
    }

    pub fn exponential(n: usize) -> Self {
        Self::simple(Family::ExponentialProduct, n)
    }

    pub fn rademacher(n: usize) -> Self {
        Self::simple(Family::RademacherProduct, n)
    }

    /// Uniform on the unit sphere `S^{n-1}`.
    pub fn sphere(n: usize) -> Self {
        Self::sphere_with_radius(n, RadialLaw::default())
    }

    pub fn sphere_with_radius(n: usize, radial: RadialLaw) -> Self {
        Self::simple(Family::UniformSphere { radial }, n)
    }

    pub fn cube(n: usize) -> Self {
        Self::simple(Family::UniformCube, n)
    }

    pub fn sparse(n: usize) -> Self {
        Self::simple(Family::SparseIsotropic, n)
    }

    pub fn product(marginals: Vec<Marginal>) -> Result<Self> {
        let spec = Self { dimension: marginals.len(), family: Family::UnconditionalProduct { marginals } };
        spec.validate()?;
        Ok(spec)
    }

    /// `X = A Y`; `A` must have full row rank.
    pub fn linear_image(matrix: DMatrix<f64>, base: DistributionSpec) -> Result<Self> {
        let rows = (0..matrix.nrows()).map(|i| matrix.row(i).iter().copied().collect()).collect();
        let spec = Self {
            dimension: matrix.nrows(),
            family: Family::LinearImage { matrix: rows, base: Box::new(base) },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.dimension
    }

    /// The matrix of a `LinearImage`, if this is one.
    pub fn matrix(&self) -> Option<DMatrix<f64>> {
        match &self.family {
            Family::LinearImage { matrix, base } => {
                let m = base.dimension;
                Some(DMatrix::from_fn(matrix.len(), m, |i, j| matrix[i][j]))
            }
            _ => None,
        }
    }

    /// Diagonal entries when this is a square diagonal `LinearImage`.
    pub(crate) fn diagonal(&self) -> Option<Vec<f64>> {
        let a = self.matrix()?;
        if !a.is_square() {
            return None;
        }
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if i != j && a[(i, j)] != 0.0 {
                    return None;
                }
            }
        }
        Some(a.diagonal().iter().copied().collect())
    }

    /// Families whose law is invariant under rotations.
    pub(crate) fn is_rotation_invariant(&self) -> bool {
        matches!(self.family, Family::GaussianIsotropic | Family::UniformSphere { .. })
    }

    /// Checks parameter sanity, dimensions and full row rank of linear maps.
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(invalid("dimension must be positive"));
        }
        match &self.family {
            Family::UniformSphere { radial } => match *radial {
                RadialLaw::Constant { radius } if !(radius.is_finite() && radius > 0.0) => {
                    Err(invalid("sphere radius must be positive"))
                }
                RadialLaw::GeneralizedGamma { scale, shape, power }
                    if !(scale > 0.0 && shape > 0.0 && power > 0.0) =>
                {
                    Err(invalid("generalized gamma parameters must be positive"))
                }
                _ => Ok(()),
            },
            Family::UnconditionalProduct { marginals } => {
                if marginals.len() != self.dimension {
                    return Err(invalid("marginal count differs from dimension"));
                }
                marginals.iter().try_for_each(Marginal::validate)
            }
            Family::LinearImage { matrix, base } => {
                base.validate()?;
                if matrix.len() != self.dimension || matrix.iter().any(|r| r.len() != base.dimension) {
                    return Err(invalid(format!(
                        "matrix must be {} x {}",
                        self.dimension, base.dimension
                    )));
                }
                if self.dimension > base.dimension {
                    return Err(Error::SingularCovariance(f64::INFINITY));
                }
                let a = self.matrix().expect("linear image");
                let sv = a.singular_values();
                let max = sv.max();
                let min = sv.min();
                if !(min > 1e-12 * max.max(f64::MIN_POSITIVE)) {
                    return Err(Error::SingularCovariance(max / min));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn capabilities(&self) -> Capabilities {
        let n = self.dimension;
        match &self.family {
            Family::GaussianIsotropic | Family::ExponentialProduct | Family::UniformCube => Capabilities {
                is_isotropic: true,
                is_unconditional: true,
                is_log_concave: true,
                has_exact_mixed_moments: true,
                has_exact_marginal_moments: true,
            },
            Family::RademacherProduct | Family::SparseIsotropic => Capabilities {
                is_isotropic: true,
                is_unconditional: true,
                is_log_concave: false,
                has_exact_mixed_moments: true,
                has_exact_marginal_moments: true,
            },
            Family::UniformSphere { radial } => {
                let er2 = radial_moment(radial, n, 2.0);
                let log_concave = match *radial {
                    RadialLaw::ChiNormalized => true,
                    RadialLaw::GeneralizedGamma { shape, power, .. } => shape == n as f64 && power >= 1.0,
                    RadialLaw::Constant { .. } => false,
                };
                Capabilities {
                    is_isotropic: (er2 - n as f64).abs() <= ISOTROPY_TOL * n as f64,
                    is_unconditional: true,
                    is_log_concave: log_concave,
                    has_exact_mixed_moments: true,
                    has_exact_marginal_moments: true,
                }
            }
            Family::UnconditionalProduct { marginals } => Capabilities {
                is_isotropic: marginals.iter().all(|m| (m.variance() - 1.0).abs() <= ISOTROPY_TOL),
                is_unconditional: true,
                is_log_concave: marginals.iter().all(Marginal::is_log_concave),
                has_exact_mixed_moments: true,
                has_exact_marginal_moments: true,
            },
            Family::LinearImage { base, .. } => {
                let b = base.capabilities();
                let diagonal = self.diagonal().is_some();
                let cov = covariance(self);
                let isotropic = (&cov - DMatrix::identity(n, n)).amax() <= ISOTROPY_TOL;
                Capabilities {
                    is_isotropic: isotropic,
                    is_unconditional: diagonal && b.is_unconditional,
                    is_log_concave: b.is_log_concave,
                    has_exact_mixed_moments: diagonal && b.has_exact_mixed_moments,
                    has_exact_marginal_moments: (diagonal && b.has_exact_marginal_moments)
                        || base.is_rotation_invariant(),
                }
            }
        }
    }

    /// Short human-readable family name.
    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::GaussianIsotropic => "gaussian_isotropic",
            Family::ExponentialProduct => "exponential_product",
            Family::RademacherProduct => "rademacher_product",
            Family::UniformSphere { .. } => "uniform_sphere",
            Family::UniformCube => "uniform_cube",
            Family::SparseIsotropic => "sparse_isotropic",
            Family::UnconditionalProduct { .. } => "unconditional_product",
            Family::LinearImage { .. } => "linear_image",
        }
    }
}

/// Threshold on `lambda_max / lambda_min` of the covariance for [`isotropize`].
pub const CONDITION_THRESHOLD: f64 = 1e6;

/// Returns the isotropic position `Cov(X)^{-1/2} X` as a `LinearImage`.
///
/// Linear images are folded (`Cov^{-1/2} A` applied to the original base);
/// already isotropic specs are returned unchanged.
pub fn isotropize(spec: &DistributionSpec) -> Result<DistributionSpec> {
    spec.validate()?;
    let n = spec.dimension;
    let cov = covariance(spec);
    if (&cov - DMatrix::identity(n, n)).amax() <= ISOTROPY_TOL {
        return Ok(spec.clone());
    }
    let eig = cov.symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) || max / min > CONDITION_THRESHOLD {
        return Err(Error::SingularCovariance(if min > 0.0 { max / min } else { f64::INFINITY }));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let whitening = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    match (&spec.family, spec.matrix()) {
        (Family::LinearImage { base, .. }, Some(a)) => {
            DistributionSpec::linear_image(whitening * a, (**base).clone())
        }
        _ => DistributionSpec::linear_image(whitening, spec.clone()),
    }
}
