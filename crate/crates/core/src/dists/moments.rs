use nalgebra::DMatrix;

use super::{DistributionSpec, Family, RadialLaw};
use crate::combi::Multiindex;
use crate::error::{invalid, Error, Result};
use crate::special::{gaussian_abs_moment, laplace_abs_moment, ln_gamma, odd_double_factorial, sphere_coordinate_abs_moment};

/// Standard deviation-one Laplace scale.
pub(crate) const LAPLACE_UNIT_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// `E R^p` for the radial law of a `UniformSphere` in dimension `n`.
pub fn radial_moment(radial: &RadialLaw, n: usize, p: f64) -> f64 {
    match *radial {
        RadialLaw::Constant { radius } => radius.powf(p),
        RadialLaw::ChiNormalized => {
            let n = n as f64;
            (0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (n + p)) - ln_gamma(0.5 * n)).exp()
        }
        RadialLaw::GeneralizedGamma { scale, shape, power } => {
            (p * scale.ln() + ln_gamma((shape + p) / power) - ln_gamma(shape / power)).exp()
        }
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// Exact `E|X_i|^p` (coordinates are 0-based).
pub fn marginal_abs_moment(spec: &DistributionSpec, i: usize, p: f64) -> Result<f64> {
    let n = spec.dimension;
    if i >= n {
        return Err(invalid(format!("coordinate {i} out of range for dimension {n}")));
    }
    if !(p >= 1.0) {
        return Err(invalid(format!("moment order must be >= 1, got {p}")));
    }
    Ok(match &spec.family {
        Family::GaussianIsotropic => gaussian_abs_moment(p),
        Family::ExponentialProduct => laplace_abs_moment(LAPLACE_UNIT_SCALE, p),
        Family::RademacherProduct => 1.0,
        Family::UniformSphere { radial } => radial_moment(radial, n, p) * sphere_coordinate_abs_moment(n, p),
        Family::UniformCube => 3f64.powf(0.5 * p) / (p + 1.0),
        Family::SparseIsotropic => (n as f64).powf(0.5 * p - 1.0),
        Family::UnconditionalProduct { marginals } => marginals[i].abs_moment(p),
        Family::LinearImage { base, .. } => {
            if let Some(d) = spec.diagonal() {
                d[i].abs().powf(p) * marginal_abs_moment(base, i, p)?
            } else if base.is_rotation_invariant() {
                // <a_i, Y> has the law of |a_i| Y_1 for rotation-invariant Y.
                let a = spec.matrix().expect("linear image");
                a.row(i).norm().powf(p) * marginal_abs_moment(base, 0, p)?
            } else {
                return Err(Error::NoExactOracle(format!(
                    "marginal moments of a general linear image of {}",
                    base.family_name()
                )));
            }
        }
    })
}

/// Exact `E X^{2 alpha} = E prod_i X_i^{2 alpha_i}`.
pub fn mixed_even_moment(spec: &DistributionSpec, alpha: &Multiindex) -> Result<f64> {
    let n = spec.dimension;
    if alpha.len() != n {
        return Err(invalid(format!("multiindex length {} differs from dimension {n}", alpha.len())));
    }
    let a = alpha.entries();
    let k = alpha.order();
    Ok(match &spec.family {
        Family::GaussianIsotropic => a.iter().map(|&ai| odd_double_factorial(ai)).product(),
        Family::ExponentialProduct => a.iter().map(|&ai| factorial(2 * ai) * 0.5f64.powi(ai as i32)).product(),
        Family::RademacherProduct => 1.0,
        Family::UniformSphere { radial } => {
            let num: f64 = a.iter().map(|&ai| odd_double_factorial(ai)).product();
            let den: f64 = (0..k).map(|j| (n + 2 * j as usize) as f64).product();
            radial_moment(radial, n, 2.0 * k as f64) * num / den
        }
        Family::UniformCube => a.iter().map(|&ai| 3f64.powi(ai as i32) / (2 * ai + 1) as f64).product(),
        Family::SparseIsotropic => {
            let support = a.iter().filter(|&&ai| ai > 0).count();
            match support {
                0 => 1.0,
                1 => (n as f64).powi(k as i32 - 1),
                _ => 0.0,
            }
        }
        Family::UnconditionalProduct { marginals } => marginals
            .iter()
            .zip(a)
            .map(|(m, &ai)| if ai == 0 { 1.0 } else { m.abs_moment(2.0 * ai as f64) })
            .product(),
        Family::LinearImage { base, .. } => {
            let d = spec.diagonal().ok_or_else(|| {
                Error::NoExactOracle("mixed moments of a non-diagonal linear image".into())
            })?;
            let scale: f64 = d.iter().zip(a).map(|(di, &ai)| di.powi(2 * ai as i32)).product();
            scale * mixed_even_moment(base, alpha)?
        }
    })
}

/// Exact covariance matrix `E X X^T` (all families are centered).
pub fn covariance(spec: &DistributionSpec) -> DMatrix<f64> {
    let n = spec.dimension;
    match &spec.family {
        Family::UniformSphere { radial } => DMatrix::identity(n, n) * (radial_moment(radial, n, 2.0) / n as f64),
        Family::UnconditionalProduct { marginals } => {
            DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, marginals.iter().map(|m| m.variance())))
        }
        Family::LinearImage { base, .. } => {
            let a = spec.matrix().expect("linear image");
            &a * covariance(base) * a.transpose()
        }
        _ => DMatrix::identity(n, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combi::enumerate_multiindices;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_marginals() {
        let e = DistributionSpec::exponential(3);
        assert_relative_eq!(marginal_abs_moment(&e, 1, 2.0).unwrap(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(marginal_abs_moment(&e, 0, 4.0).unwrap(), 6.0, max_relative = 1e-13);
    }

    #[test]
    fn sphere_marginal_second_moment() {
        let s = DistributionSpec::sphere(7);
        assert_relative_eq!(marginal_abs_moment(&s, 3, 2.0).unwrap(), 1.0 / 7.0, max_relative = 1e-13);
    }

    #[test]
    fn mixed_moment_examples() {
        let e = DistributionSpec::exponential(2);
        assert_eq!(mixed_even_moment(&e, &Multiindex::new(vec![1, 1])).unwrap(), 1.0);
        let g = DistributionSpec::gaussian(3);
        assert_eq!(mixed_even_moment(&g, &Multiindex::new(vec![2, 0, 0])).unwrap(), 3.0);
        let s = DistributionSpec::sphere(3);
        assert_relative_eq!(
            mixed_even_moment(&s, &Multiindex::new(vec![1, 1, 0])).unwrap(),
            1.0 / 15.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn mixed_moments_agree_with_marginals_for_single_coordinates() {
        for spec in [
            DistributionSpec::gaussian(3),
            DistributionSpec::exponential(3),
            DistributionSpec::cube(3),
            DistributionSpec::sparse(3),
            DistributionSpec::sphere(3),
        ] {
            for k in 1..5u32 {
                let m = mixed_even_moment(&spec, &Multiindex::new(vec![0, k, 0])).unwrap();
                let r = marginal_abs_moment(&spec, 1, 2.0 * k as f64).unwrap();
                assert_relative_eq!(m, r, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sparse_is_exactly_isotropic_over_its_atoms() {
        // E X_i X_j summed over the 2n atoms +-sqrt(n) e_l with mass 1/(2n):
        // each atom contributes n * [i = j = l] / (2n), an exact rational 1/2.
        for n in 1..9usize {
            for i in 0..n {
                for j in 0..n {
                    let twice: u64 = (0..n).map(|l| 2 * u64::from(i == l && j == l)).sum();
                    assert_eq!(twice, 2 * u64::from(i == j));
                }
            }
            let spec = DistributionSpec::sparse(n);
            for alpha in enumerate_multiindices(n, 1) {
                assert_eq!(mixed_even_moment(&spec, &alpha).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn non_diagonal_images_have_no_mixed_oracle() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let spec = DistributionSpec::linear_image(a, DistributionSpec::exponential(2)).unwrap();
        assert!(matches!(
            mixed_even_moment(&spec, &Multiindex::new(vec![1, 0])),
            Err(Error::NoExactOracle(_))
        ));
        assert!(marginal_abs_moment(&spec, 0, 2.0).is_err());
        let g = DistributionSpec::linear_image(
            DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 1.0]),
            DistributionSpec::gaussian(2),
        )
        .unwrap();
        assert_relative_eq!(marginal_abs_moment(&g, 0, 2.0).unwrap(), 25.0, max_relative = 1e-13);
    }
}
