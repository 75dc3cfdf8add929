//! Closed-form and quadrature evaluations of the Riesz-mean bounds and the
//! counting bound derived from them.

mod lemma;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::kernels::{KernelPair, LowerBoundSymbol, RadialSymbol};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::sphere_area;

pub use lemma::{
    asymptotic_roots, lemma_asymptotic, lemma_integral_numeric, lemma_roots, LemmaProfile, RootLabel, RootSet,
    REGIME_FRACTION,
};

/// A leading term and a second-order correction, kept separate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTerm {
    pub leading: f64,
    pub second: f64,
}

impl TwoTerm {
    pub fn total(&self) -> f64 {
        self.leading + self.second
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")))
    }
}

fn phase_volume(d: usize) -> f64 {
    (2.0 * PI).powi(d as i32)
}

/// `int_{R^d} (q(|xi|) - lambda)_+ dxi` for a radial, non-increasing symbol.
pub fn radial_excess_integral(symbol: &dyn RadialSymbol, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let Some(edge) = symbol.level_crossing(lambda) else {
        return Ok(0.0);
    };
    if edge <= 0.0 {
        return Ok(0.0);
    }
    let d = symbol.dimension();
    let dm1 = d as f64 - 1.0;
    let scale = lambda * edge.powi(d as i32) / d as f64;
    let opts = QuadOptions::with_tolerances(1e-10 * scale.max(f64::MIN_POSITIVE), 1e-12);
    let q = integrate(
        |r| {
            if r <= 0.0 {
                return 0.0;
            }
            (symbol.radial_value(r) - lambda).max(0.0) * r.powf(dm1)
        },
        0.0,
        edge,
        opts,
    )?;
    Ok(sphere_area(d) * q.value)
}

/// `(2 pi)^{-d} |Omega| int (|Q^(xi)| - lambda)_+ dxi` for a radial decaying symbol.
pub fn upper_bound_general(symbol: &dyn RadialSymbol, measure: f64, lambda: f64) -> Result<f64> {
    Ok(measure * radial_excess_integral(symbol, lambda)? / phase_volume(symbol.dimension()))
}

/// `int (|K^(xi)| - 1)_+ dxi = alpha / (d (d - alpha)) int_{S^{d-1}} |f|^{d/alpha}`.
pub fn homogeneous_excess_integral(kernel: &KernelPair) -> Result<f64> {
    let d = kernel.dimension as f64;
    let a = kernel.alpha;
    Ok(a / (d * (d - a)) * kernel.symbol_sphere_moment(None)?)
}

/// `(2 pi)^{-d} |Omega| lambda^{1-d/alpha} int (|K^(xi)| - 1)_+ dxi`.
pub fn upper_bound_homogeneous(kernel: &KernelPair, measure: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let d = kernel.dimension as f64;
    let a = kernel.alpha;
    if !(a > 0.0 && a < d) {
        return Err(Error::AlphaOutOfRange {
            alpha: a,
            range: format!("(0, {d})"),
        });
    }
    Ok(measure * lambda.powf(1.0 - d / a) * homogeneous_excess_integral(kernel)? / phase_volume(kernel.dimension))
}

/// Leading and second terms of the two-term lower bound.
pub fn lower_bound_two_term(
    kernel: &KernelPair,
    domain: &ConvexDomain,
    symbol: &LowerBoundSymbol,
    lambda: f64,
) -> Result<TwoTerm> {
    check_lambda(lambda)?;
    if kernel.dimension != domain.dimension {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension,
            got: kernel.dimension,
        });
    }
    if !domain.strictly_convex_smooth() {
        return Err(Error::NonSmoothDomain(domain.name().to_string()));
    }
    let d = kernel.dimension as f64;
    let a = kernel.alpha;
    if !(a > 0.0 && a < d - 1.0) {
        return Err(Error::AlphaOutOfRange {
            alpha: a,
            range: format!("(0, {})", d - 1.0),
        });
    }
    let measure = domain.measure();
    let leading = upper_bound_homogeneous(kernel, measure, lambda)?;
    let second = measure / phase_volume(kernel.dimension) * symbol.gamma / (d - a - 1.0) * lambda.powf(1.0 - (d - 1.0) / a);
    Ok(TwoTerm { leading, second })
}

fn require_radial(kernel: &KernelPair) -> Result<()> {
    if kernel.is_radial() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "the counting bound is stated for the radial symbol |xi|^-alpha".into(),
        ))
    }
}

/// `n(lambda) <= (2 pi)^{-d} lambda^{-d/alpha} |Omega| |S^{d-1}| d^{d/alpha} / (d (d-alpha)^{d/alpha})`.
pub fn counting_bound(kernel: &KernelPair, measure: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    require_radial(kernel)?;
    let d = kernel.dimension as f64;
    let a = kernel.alpha;
    let p = d / a;
    Ok(lambda.powf(-p) * measure * sphere_area(kernel.dimension) * d.powf(p)
        / (d * (d - a).powf(p))
        / phase_volume(kernel.dimension))
}

/// The un-optimised bound `upper_bound(tau) / (lambda - tau)`, `0 < tau < lambda`.
pub fn counting_bound_tau(kernel: &KernelPair, measure: f64, lambda: f64, tau: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(tau > 0.0 && tau < lambda) {
        return Err(Error::InvalidParameter(format!("tau must lie in (0, {lambda}), got {tau}")));
    }
    Ok(upper_bound_homogeneous(kernel, measure, tau)? / (lambda - tau))
}

/// The minimiser `lambda (1 - alpha/d)` of [`counting_bound_tau`].
pub fn optimal_tau(kernel: &KernelPair, lambda: f64) -> f64 {
    lambda * (1.0 - kernel.alpha / kernel.dimension as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauSearch {
    pub tau: f64,
    pub value: f64,
    pub step: f64,
}

/// Minimise [`counting_bound_tau`] over `tau = lambda k / (points + 1)`, k = 1..=points.
pub fn minimize_tau_on_grid(kernel: &KernelPair, measure: f64, lambda: f64, points: usize) -> Result<TauSearch> {
    if points == 0 {
        return Err(Error::InvalidParameter("tau grid needs at least one point".into()));
    }
    let step = lambda / (points + 1) as f64;
    let mut best = TauSearch {
        tau: f64::NAN,
        value: f64::INFINITY,
        step,
    };
    for k in 1..=points {
        let tau = step * k as f64;
        let value = counting_bound_tau(kernel, measure, lambda, tau)?;
        if value < best.value {
            best = TauSearch { tau, value, step };
        }
    }
    Ok(best)
}
