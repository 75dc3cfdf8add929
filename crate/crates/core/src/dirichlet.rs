//! Dirichlet Laplacian on boxes: exact spectra by separation of variables and
//! the counting bounds they are compared with.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::counting_bound;
use crate::error::{Error, Result};
use crate::kernels::KernelPair;
use crate::special::sphere_area;

/// Largest number of modes [`box_spectrum`] enumerates.
pub const MODE_LIMIT: usize = 1_000_000;

/// Eigenvalues `pi^2 sum m_i^2 / L_i^2` below a cap, ascending, with multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpectrum {
    pub sides: Vec<f64>,
    pub nu_max: f64,
    pub eigenvalues: Vec<f64>,
    /// Every eigenvalue `<= nu_max` is present.
    pub complete: bool,
}

/// All Dirichlet eigenvalues `<= nu_max` of the box with the given sides.
pub fn box_spectrum(sides: &[f64], nu_max: f64) -> Result<DirichletSpectrum> {
    if sides.is_empty() || sides.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("box sides must be positive".into()));
    }
    let base: f64 = sides.iter().map(|l| (PI / l).powi(2)).sum();
    if !(nu_max > base) {
        return Err(Error::InvalidParameter(format!(
            "nu_max = {nu_max} must exceed the first eigenvalue {base}"
        )));
    }
    let d = sides.len();
    let weights: Vec<f64> = sides.iter().map(|l| (PI / l).powi(2)).collect();
    let max_index: Vec<u64> = sides.iter().map(|l| (l * nu_max.sqrt() / PI).floor() as u64).collect();
    let mut eigenvalues = Vec::new();
    let mut m = vec![1u64; d];
    // odometer over m_i >= 1, pruning once the partial sum exceeds the cap
    'outer: loop {
        let value: f64 = m.iter().zip(&weights).map(|(&mi, w)| (mi * mi) as f64 * w).sum();
        if value <= nu_max {
            eigenvalues.push(value);
            if eigenvalues.len() > MODE_LIMIT {
                return Err(Error::EnumerationLimit(format!(
                    "more than {MODE_LIMIT} modes below nu = {nu_max}"
                )));
            }
            m[0] += 1;
            if m[0] <= max_index[0] {
                continue;
            }
        }
        // carry: reset the lowest axis and advance the next one
        let mut k = 0;
        loop {
            m[k] = 1;
            k += 1;
            if k == d {
                break 'outer;
            }
            m[k] += 1;
            if m[k] <= max_index[k] {
                let low: f64 = m.iter().zip(&weights).map(|(&mi, w)| (mi * mi) as f64 * w).sum();
                if low <= nu_max {
                    break;
                }
            }
        }
    }
    eigenvalues.sort_by(f64::total_cmp);
    Ok(DirichletSpectrum {
        sides: sides.to_vec(),
        nu_max,
        eigenvalues,
        complete: true,
    })
}

/// `N(nu) = #{k : nu_k < nu}`.
pub fn counting_function(spectrum: &DirichletSpectrum, nu: f64) -> Result<usize> {
    if nu > spectrum.nu_max {
        return Err(Error::BeyondCap {
            value: nu,
            cap: spectrum.nu_max,
        });
    }
    Ok(spectrum.eigenvalues.partition_point(|&x| x < nu))
}

fn weyl_factor(d: usize, measure: f64, nu: f64) -> f64 {
    (2.0 * PI).powi(-(d as i32)) * measure * nu.powf(d as f64 / 2.0) * sphere_area(d) / d as f64
}

/// `(2 pi)^{-d} nu^{d/2} |Omega| |S^{d-1}| (1/d) (d/(d-2))^{d/2}`, the counting bound
/// of the inverse Laplacian at `lambda = 1/nu`; requires d >= 3.
pub fn pl_bound(d: usize, measure: f64, nu: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!("requires d >= 3, got {d}")));
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    counting_bound(&KernelPair::riesz(d, 2.0)?, measure, 1.0 / nu)
}

/// Weyl term times `((d+2)/d)^{d/2}`.
pub fn semiclassical_bound(d: usize, measure: f64, nu: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let df = d as f64;
    Ok(weyl_factor(d, measure, nu) * ((df + 2.0) / df).powf(df / 2.0))
}

/// The Weyl term `(2 pi)^{-d} |Omega| nu^{d/2} |S^{d-1}| / d`.
pub fn polya_bound(d: usize, measure: f64, nu: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    Ok(weyl_factor(d, measure, nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn first_eigenvalues() {
        let sq = box_spectrum(&[1.0, 1.0], 100.0).unwrap();
        assert_relative_eq!(sq.eigenvalues[0], 2.0 * PI * PI, max_relative = 1e-15);
        let cube = box_spectrum(&[1.0, 1.0, 1.0], 100.0).unwrap();
        assert_relative_eq!(cube.eigenvalues[0], 3.0 * PI * PI, max_relative = 1e-15);
        let five = box_spectrum(&[1.0, 1.0], 5.0 * PI * PI * (1.0 + 1e-12)).unwrap();
        assert_eq!(five.eigenvalues.len(), 3);
        assert_relative_eq!(five.eigenvalues[1], 5.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(five.eigenvalues[2], 5.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn strict_counting() {
        let sq = box_spectrum(&[1.0, 1.0], 100.0).unwrap();
        let two = 2.0 * PI * PI;
        assert_eq!(counting_function(&sq, two).unwrap(), 0);
        assert_eq!(counting_function(&sq, two + 1e-9).unwrap(), 1);
        assert_eq!(counting_function(&sq, 5.0 * PI * PI + 1e-9).unwrap(), 3);
        assert!(matches!(counting_function(&sq, 101.0), Err(Error::BeyondCap { .. })));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let sides = [1.0, 1.7, 0.6];
        let cap = 600.0;
        let s = box_spectrum(&sides, cap).unwrap();
        let mut brute = Vec::new();
        for a in 1..40u32 {
            for b in 1..40u32 {
                for c in 1..40u32 {
                    let v = PI * PI
                        * ((a * a) as f64 / 1.0 + (b * b) as f64 / (1.7 * 1.7) + (c * c) as f64 / (0.6 * 0.6));
                    if v <= cap {
                        brute.push(v);
                    }
                }
            }
        }
        brute.sort_by(f64::total_cmp);
        assert_eq!(s.eigenvalues.len(), brute.len());
        for (x, y) in s.eigenvalues.iter().zip(&brute) {
            assert_relative_eq!(*x, *y, max_relative = 1e-14);
        }
    }

    #[test]
    fn guards() {
        assert!(box_spectrum(&[1.0, 1.0], 10.0).is_err());
        assert!(box_spectrum(&[1.0, -1.0], 100.0).is_err());
        assert!(matches!(box_spectrum(&[1.0, 1.0, 1.0], 1e6), Err(Error::EnumerationLimit(_))));
        assert!(pl_bound(2, 1.0, 10.0).is_err());
    }

    #[test]
    fn bound_constants() {
        assert_relative_eq!(pl_bound(3, 1.0, 1.0).unwrap(), 3.0f64.sqrt() / (2.0 * PI * PI), max_relative = 1e-14);
        assert_relative_eq!(pl_bound(4, 1.0, 1.0).unwrap(), 1.0 / (8.0 * PI * PI), max_relative = 1e-14);
        assert_relative_eq!(
            pl_bound(3, 1.0, 9.0).unwrap(),
            27.0 * pl_bound(3, 1.0, 1.0).unwrap(),
            max_relative = 1e-14
        );
        for nu in [1.0, 37.0, 500.0] {
            let ratio = pl_bound(3, 1.0, nu).unwrap() / semiclassical_bound(3, 1.0, nu).unwrap();
            assert!((ratio - 1.8f64.powf(1.5)).abs() <= 1e-12);
        }
        // d = 2: (2 pi)^{-2} |Omega| 2 pi nu (1/2) 2 = |Omega| nu / (2 pi)
        assert_relative_eq!(semiclassical_bound(2, 3.0, 5.0).unwrap(), 15.0 / (2.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(polya_bound(2, 3.0, 5.0).unwrap(), 15.0 / (4.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn pl_equals_counting_bound_at_reciprocal() {
        let k = KernelPair::riesz(3, 2.0).unwrap();
        for nu in [30.0, 123.4, 500.0] {
            assert_eq!(pl_bound(3, 1.0, nu).unwrap(), counting_bound(&k, 1.0, 1.0 / nu).unwrap());
            // and the stated closed form
            let closed = (2.0 * PI).powi(-3) * nu.powf(1.5) * 4.0 * PI / 3.0 * 3.0f64.powf(1.5);
            assert_relative_eq!(pl_bound(3, 1.0, nu).unwrap(), closed, max_relative = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn constants_are_ordered(d in 3usize..7, nu in 0.1f64..1e4, measure in 0.1f64..10.0) {
            let p = polya_bound(d, measure, nu).unwrap();
            let s = semiclassical_bound(d, measure, nu).unwrap();
            let l = pl_bound(d, measure, nu).unwrap();
            prop_assert!(p <= s && s <= l);
        }
    }
}
