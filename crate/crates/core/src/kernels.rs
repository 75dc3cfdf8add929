//! Homogeneous kernels `K(x) = a(x/|x|) |x|^{alpha-d}` paired with their
//! Fourier symbols `K^(xi) = f(xi/|xi|) |xi|^{-alpha}`, plus the Helmholtz
//! resolvent symbol `1 / (|xi|^2 + kappa^2)`.
//!
//! Fourier convention: `K^(xi) = int e^{-i x.xi} K(x) dx`, no prefactor; the
//! inverse transform carries `(2 pi)^{-d}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::OverlapExpansion;
use crate::quadrature::SphereQuadrature;
use crate::special::{gamma, norm, sgn};

/// A real function on the unit sphere.
type DirectionFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum AngularProfile {
    Constant(f64),
    /// Samples on equispaced circle nodes `2 pi k / n` (d = 2), trigonometric interpolation.
    Circle(CircleTable),
    Function(Arc<DirectionFn>),
}

impl fmt::Debug for AngularProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Circle(t) => write!(f, "Circle({} samples)", t.samples.len()),
            Self::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl AngularProfile {
    pub fn function<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::Function(Arc::new(f))
    }

    /// Evaluate at a unit vector.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Circle(t) => t.eval(theta[1].atan2(theta[0])),
            Self::Function(f) => f(theta),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            _ => None,
        }
    }
}

/// Trigonometric interpolant of samples on `n` equispaced circle nodes.
#[derive(Debug, Clone)]
pub struct CircleTable {
    pub samples: Vec<f64>,
    cos_coeffs: Vec<f64>,
    sin_coeffs: Vec<f64>,
}

impl CircleTable {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::InvalidParameter("circle table needs samples".into()));
        }
        let half = n / 2;
        let mut cos_coeffs = vec![0.0; half + 1];
        let mut sin_coeffs = vec![0.0; half + 1];
        for (j, v) in samples.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / n as f64;
            for k in 0..=half {
                let kt = k as f64 * t;
                cos_coeffs[k] += v * kt.cos();
                sin_coeffs[k] += v * kt.sin();
            }
        }
        for k in 0..=half {
            let scale = if k == 0 || (n.is_multiple_of(2) && k == half) { 1.0 } else { 2.0 } / n as f64;
            cos_coeffs[k] *= scale;
            sin_coeffs[k] *= scale;
        }
        if n.is_multiple_of(2) {
            sin_coeffs[half] = 0.0;
        }
        Ok(Self {
            samples,
            cos_coeffs,
            sin_coeffs,
        })
    }

    pub fn eval(&self, angle: f64) -> f64 {
        self.cos_coeffs
            .iter()
            .zip(&self.sin_coeffs)
            .enumerate()
            .map(|(k, (a, b))| {
                let kt = k as f64 * angle;
                a * kt.cos() + b * kt.sin()
            })
            .sum()
    }
}

/// Normalising constant of the Riesz kernel with symbol `|xi|^{-alpha}`:
/// `K(x) = C |x|^{alpha-d}`, `C = pi^{-d/2} 2^{-alpha} Gamma((d-alpha)/2) / Gamma(alpha/2)`.
pub fn riesz_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    PI.powf(-df / 2.0) * 2f64.powf(-alpha) * gamma((df - alpha) / 2.0) / gamma(alpha / 2.0)
}

fn check_alpha(d: usize, alpha: f64) -> Result<()> {
    if d >= 1 && alpha > 0.0 && alpha < d as f64 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange {
            alpha,
            range: format!("(0, {d})"),
        })
    }
}

/// Kernel/symbol pair of a homogeneous convolution kernel of order `alpha - d`.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub dimension: usize,
    pub alpha: f64,
    /// Angular profile of K; the constant C for the Riesz kernel.
    pub amplitude: AngularProfile,
    /// f in `K^(xi) = f(xi/|xi|) / |xi|^alpha`.
    pub symbol_f: AngularProfile,
}

impl KernelPair {
    /// The spherically symmetric kernel with symbol `|xi|^{-alpha}`.
    pub fn riesz(d: usize, alpha: f64) -> Result<Self> {
        check_alpha(d, alpha)?;
        Ok(Self {
            dimension: d,
            alpha,
            amplitude: AngularProfile::Constant(riesz_constant(d, alpha)),
            symbol_f: AngularProfile::Constant(1.0),
        })
    }

    /// A user-supplied pair; both profiles must be real and even on the sphere.
    pub fn custom(d: usize, alpha: f64, amplitude: AngularProfile, symbol_f: AngularProfile) -> Result<Self> {
        check_alpha(d, alpha)?;
        Ok(Self {
            dimension: d,
            alpha,
            amplitude,
            symbol_f,
        })
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.amplitude, AngularProfile::Constant(_)) && self.symbol_f.constant_value() == Some(1.0)
    }

    /// K(x); infinite at the origin.
    pub fn kernel_eval(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        if r == 0.0 {
            return f64::INFINITY;
        }
        let amp = match &self.amplitude {
            AngularProfile::Constant(c) => *c,
            other => {
                let theta: Vec<f64> = x.iter().map(|v| v / r).collect();
                other.eval(&theta)
            }
        };
        amp * r.powf(self.alpha - self.dimension as f64)
    }

    /// K^(xi) = f(xi/|xi|) |xi|^{-alpha}.
    pub fn symbol_eval(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: xi.len(),
            });
        }
        let r = norm(xi);
        if r == 0.0 {
            return Err(Error::SingularSymbol);
        }
        let theta: Vec<f64> = xi.iter().map(|v| v / r).collect();
        Ok(self.symbol_f.eval(&theta) * r.powf(-self.alpha))
    }

    /// `int_{S^{d-1}} |f|^{d/alpha} dsigma` (closed form for radial kernels).
    pub fn symbol_sphere_moment(&self, rule: Option<&SphereQuadrature>) -> Result<f64> {
        if let Some(c) = self.symbol_f.constant_value() {
            return Ok(c.abs().powf(self.dimension as f64 / self.alpha) * crate::special::sphere_area(self.dimension));
        }
        let owned;
        let rule = match rule {
            Some(r) => r,
            None => {
                owned = SphereQuadrature::default_for(self.dimension)?;
                &owned
            }
        };
        let p = self.dimension as f64 / self.alpha;
        Ok(rule.integrate(|t| self.symbol_f.eval(t).abs().powf(p)))
    }
}

/// Resolvent symbol `Q^(xi) = 1 / (|xi|^2 + kappa^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzSymbol {
    pub dimension: usize,
    pub kappa: f64,
}

impl HelmholtzSymbol {
    pub fn new(d: usize, kappa: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be >= 0, got {kappa}")));
        }
        Ok(Self { dimension: d, kappa })
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        let r = norm(xi);
        if r == 0.0 && self.kappa == 0.0 {
            return Err(Error::SingularSymbol);
        }
        Ok(self.radial_value(r))
    }
}

/// A radially symmetric, non-increasing symbol `|Q^(xi)| = q(|xi|)` decaying at infinity.
pub trait RadialSymbol {
    fn dimension(&self) -> usize;
    fn radial_value(&self, r: f64) -> f64;
    /// Radius where `q` drops to `level`; `None` if `q < level` everywhere
    /// except possibly a null set.
    fn level_crossing(&self, level: f64) -> Option<f64>;
}

impl RadialSymbol for HelmholtzSymbol {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn radial_value(&self, r: f64) -> f64 {
        1.0 / (r * r + self.kappa * self.kappa)
    }

    fn level_crossing(&self, level: f64) -> Option<f64> {
        let s = 1.0 / level - self.kappa * self.kappa;
        (s > 0.0).then(|| s.sqrt())
    }
}

impl RadialSymbol for KernelPair {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn radial_value(&self, r: f64) -> f64 {
        let f = self.symbol_f.constant_value().unwrap_or(1.0).abs();
        f * r.powf(-self.alpha)
    }

    fn level_crossing(&self, level: f64) -> Option<f64> {
        let f = self.symbol_f.constant_value().unwrap_or(1.0).abs();
        (f > 0.0).then(|| (f / level).powf(1.0 / self.alpha))
    }
}

/// A radial symbol given by samples `(r_i, q_i)`, linearly interpolated and
/// zero beyond the last radius.
#[derive(Debug, Clone)]
pub struct TabulatedSymbol {
    pub dimension: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl TabulatedSymbol {
    pub fn new(dimension: usize, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(Error::InvalidParameter("tabulated symbol needs >= 2 matching samples".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
            return Err(Error::InvalidParameter("radii must be non-negative and increasing".into()));
        }
        if values.windows(2).any(|w| w[1].abs() > w[0].abs()) {
            return Err(Error::InvalidParameter("tabulated symbol must be non-increasing in modulus".into()));
        }
        Ok(Self {
            dimension,
            radii,
            values,
        })
    }
}

impl RadialSymbol for TabulatedSymbol {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn radial_value(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0].abs();
        }
        if r >= self.radii[n - 1] {
            return 0.0;
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        let t = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i]);
        (1.0 - t) * self.values[i].abs() + t * self.values[i + 1].abs()
    }

    fn level_crossing(&self, level: f64) -> Option<f64> {
        if self.values[0].abs() <= level {
            return None;
        }
        for i in 0..self.radii.len() - 1 {
            let (a, b) = (self.values[i].abs(), self.values[i + 1].abs());
            if b <= level {
                let t = (a - level) / (a - b);
                return Some(self.radii[i] + t * (self.radii[i + 1] - self.radii[i]));
            }
        }
        self.radii.last().copied()
    }
}

/// Second-order symbol data: `F^(xi) = g(xi/|xi|) / |xi|^{alpha+1}` and the
/// constant `gamma = int sgn(f) |f|^{(d-alpha-1)/alpha} g dsigma`.
#[derive(Debug, Clone)]
pub struct LowerBoundSymbol {
    /// Angular profile of the correction symbol, when known pointwise.
    pub g: Option<AngularProfile>,
    pub gamma: f64,
}

/// `Gamma((alpha+1)/2) Gamma((d-alpha)/2) / (Gamma(alpha/2) Gamma((d-alpha-1)/2))`.
pub fn radial_gamma_ratio(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    gamma((alpha + 1.0) / 2.0) * gamma((df - alpha) / 2.0) / (gamma(alpha / 2.0) * gamma((df - alpha - 1.0) / 2.0))
}

/// gamma for the Riesz kernel: `(2/|Omega|) * ratio(d, alpha) * int A_Omega dsigma`.
pub fn radial_gamma(d: usize, alpha: f64, measure: f64, a_integral: f64) -> Result<f64> {
    check_lower_alpha(d, alpha)?;
    Ok(2.0 / measure * radial_gamma_ratio(d, alpha) * a_integral)
}

fn check_lower_alpha(d: usize, alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < d as f64 - 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange {
            alpha,
            range: format!("(0, {}) required by the second-order term", d as f64 - 1.0),
        })
    }
}

/// Lower-bound symbol for a radial kernel from a tabulated boundary expansion.
///
/// The expansion must carry quadrature weights (see [`crate::geometry::ConvexDomain::expansion_on`]).
pub fn lower_symbol(kernel: &KernelPair, expansion: &OverlapExpansion) -> Result<LowerBoundSymbol> {
    if expansion.dimension != kernel.dimension {
        return Err(Error::DimensionMismatch {
            expected: kernel.dimension,
            got: expansion.dimension,
        });
    }
    check_lower_alpha(kernel.dimension, kernel.alpha)?;
    if !kernel.is_radial() {
        return Err(Error::InvalidParameter(
            "non-radial kernels need a user-supplied g (see lower_symbol_with_g)".into(),
        ));
    }
    let integral = expansion
        .sphere_integral()
        .ok_or_else(|| Error::InvalidParameter("boundary expansion has no quadrature weights".into()))?;
    Ok(LowerBoundSymbol {
        g: None,
        gamma: radial_gamma(kernel.dimension, kernel.alpha, expansion.measure, integral)?,
    })
}

/// Lower-bound symbol from an explicit correction profile `g`:
/// `gamma = sum_i w_i sgn(f_i) |f_i|^{(d-alpha-1)/alpha} g_i` over `rule`.
/// Zeros of f contribute nothing (sgn(0) = 0).
pub fn lower_symbol_with_g(kernel: &KernelPair, g: AngularProfile, rule: &SphereQuadrature) -> Result<LowerBoundSymbol> {
    check_lower_alpha(kernel.dimension, kernel.alpha)?;
    if rule.dimension != kernel.dimension {
        return Err(Error::DimensionMismatch {
            expected: kernel.dimension,
            got: rule.dimension,
        });
    }
    let p = (kernel.dimension as f64 - kernel.alpha - 1.0) / kernel.alpha;
    let gamma = rule.integrate(|t| {
        let f = kernel.symbol_f.eval(t);
        sgn(f) * f.abs().powf(p) * g.eval(t)
    });
    Ok(LowerBoundSymbol { g: Some(g), gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::quadrature::{integrate, QuadOptions};
    use approx::assert_relative_eq;

    #[test]
    fn riesz_constants() {
        assert_relative_eq!(riesz_constant(3, 2.0), 1.0 / (4.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(riesz_constant(2, 1.0), 1.0 / (2.0 * PI), max_relative = 1e-14);
        let k = KernelPair::riesz(3, 1.3).unwrap();
        assert!(k.is_radial());
        assert_relative_eq!(k.symbol_eval(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn alpha_range_enforced() {
        assert!(KernelPair::riesz(2, 0.0).is_err());
        assert!(KernelPair::riesz(2, 2.0).is_err());
        assert!(KernelPair::riesz(3, -1.0).is_err());
    }

    #[test]
    fn symbol_evaluation() {
        let k = KernelPair::riesz(3, 2.0).unwrap();
        assert_relative_eq!(k.symbol_eval(&[0.0, 2.0, 0.0]).unwrap(), 0.25, max_relative = 1e-15);
        let xi = [0.3, -0.4, 1.2];
        let xi2: Vec<f64> = xi.iter().map(|v| 2.0 * v).collect();
        assert_relative_eq!(
            k.symbol_eval(&xi).unwrap() / k.symbol_eval(&xi2).unwrap(),
            4.0,
            max_relative = 1e-14
        );
        assert!(matches!(k.symbol_eval(&[0.0, 0.0, 0.0]), Err(Error::SingularSymbol)));
        assert!(k.symbol_eval(&[1.0]).is_err());

        let aniso = KernelPair::custom(
            2,
            1.0,
            AngularProfile::Constant(1.0),
            AngularProfile::function(|t| 1.0 + 0.5 * (2.0 * t[1].atan2(t[0])).cos()),
        )
        .unwrap();
        assert_relative_eq!(aniso.symbol_eval(&[1.0, 0.0]).unwrap(), 1.5, max_relative = 1e-15);
        assert!(!aniso.is_radial());
    }

    #[test]
    fn circle_table_interpolates_trig_polynomials() {
        let f = |t: f64| 1.0 + 0.5 * (2.0 * t).cos() - 0.25 * (3.0 * t).sin();
        let n = 16;
        let samples = (0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).collect();
        let table = CircleTable::new(samples).unwrap();
        for &t in &[0.1, 1.0, 2.5, -0.7, 4.0] {
            assert!((table.eval(t) - f(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn helmholtz_values() {
        assert!(HelmholtzSymbol::new(3, -1.0).is_err());
        let h0 = HelmholtzSymbol::new(3, 0.0).unwrap();
        assert_relative_eq!(h0.eval(&[0.0, 2.0, 0.0]).unwrap(), 0.25);
        assert!(h0.eval(&[0.0, 0.0, 0.0]).is_err());
        let h1 = HelmholtzSymbol::new(3, 1.0).unwrap();
        assert_eq!(h1.eval(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        let h3 = HelmholtzSymbol::new(2, 3.0).unwrap();
        assert_relative_eq!(h3.eval(&[4.0, 0.0]).unwrap(), 1.0 / 25.0, max_relative = 1e-15);
        assert_eq!(h1.level_crossing(1.0), None);
        assert_relative_eq!(h1.level_crossing(0.25).unwrap(), 3f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn parseval_spot_check_for_newtonian_kernel() {
        // int K(z) e^{-|z|^2/2} dz = (2 pi)^{-3} int K^(xi) (2 pi)^{3/2} e^{-|xi|^2/2} dxi
        let k = KernelPair::riesz(3, 2.0).unwrap();
        let opts = QuadOptions::default();
        let lhs = 4.0 * PI * integrate(|r| k.kernel_eval(&[r, 0.0, 0.0]) * r * r * (-r * r / 2.0).exp(), 0.0, 40.0, opts)
            .unwrap()
            .value;
        let rhs = (2.0 * PI).powf(-1.5)
            * 4.0
            * PI
            * integrate(|r| k.radial_value(r) * r * r * (-r * r / 2.0).exp(), 0.0, 40.0, opts)
                .unwrap()
                .value;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
        assert_relative_eq!(lhs, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn gamma_for_unit_ball() {
        // d = 3, alpha = 1: gamma = (3/(2 pi)) * (1/pi) * (-4 pi^2) = -6
        let k = KernelPair::riesz(3, 1.0).unwrap();
        let ball = ConvexDomain::ball(3, 1.0).unwrap();
        let exp = ball.expansion_on(&SphereQuadrature::default_for(3).unwrap()).unwrap();
        let ls = lower_symbol(&k, &exp).unwrap();
        assert_relative_eq!(ls.gamma, -6.0, max_relative = 1e-9);
        let doubled = lower_symbol(&k, &exp.scaled(2.0)).unwrap();
        assert_relative_eq!(doubled.gamma, 2.0 * ls.gamma, max_relative = 1e-14);
        let closed = radial_gamma(3, 1.0, ball.measure(), -PI * 4.0 * PI).unwrap();
        assert_relative_eq!(closed, -6.0, max_relative = 1e-13);
    }

    #[test]
    fn gamma_for_unit_disk_half_alpha() {
        let k = KernelPair::riesz(2, 0.5).unwrap();
        let disk = ConvexDomain::ball(2, 1.0).unwrap();
        let exp = disk.expansion_on(&SphereQuadrature::circle(32)).unwrap();
        let ls = lower_symbol(&k, &exp).unwrap();
        // Gamma(3/4)^2 / Gamma(1/4)^2 from reference values
        let g34 = 1.225_416_702_465_178;
        let g14 = 3.625_609_908_221_908;
        let expected = (2.0 / PI) * (g34 * g34 / (g14 * g14)) * (-2.0) * 2.0 * PI;
        assert_relative_eq!(ls.gamma, expected, max_relative = 1e-6);
    }

    #[test]
    fn lower_symbol_preconditions() {
        let disk = ConvexDomain::ball(2, 1.0).unwrap();
        let exp = disk.expansion_on(&SphereQuadrature::circle(8)).unwrap();
        // alpha >= d - 1
        assert!(lower_symbol(&KernelPair::riesz(2, 1.0).unwrap(), &exp).is_err());
        let unweighted = disk.expansion(&[vec![1.0, 0.0]]).unwrap();
        assert!(lower_symbol(&KernelPair::riesz(2, 0.5).unwrap(), &unweighted).is_err());
        let k3 = KernelPair::riesz(3, 1.0).unwrap();
        assert!(matches!(lower_symbol(&k3, &exp), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gamma_with_explicit_g() {
        // d = 2, alpha = 1/2: exponent (d - alpha - 1)/alpha = 1, so gamma = int sgn(f)|f| g
        let cos2 = |t: &[f64]| (2.0 * t[1].atan2(t[0])).cos();
        let k = KernelPair::custom(2, 0.5, AngularProfile::Constant(1.0), AngularProfile::function(cos2)).unwrap();
        let rule = SphereQuadrature::circle(32);
        let ls = lower_symbol_with_g(&k, AngularProfile::function(cos2), &rule).unwrap();
        assert_relative_eq!(ls.gamma, PI, max_relative = 1e-13);
        // f identically zero: sgn(0) = 0 kills every contribution
        let zero = KernelPair::custom(2, 0.5, AngularProfile::Constant(1.0), AngularProfile::Constant(0.0)).unwrap();
        let ls = lower_symbol_with_g(&zero, AngularProfile::Constant(1.0), &rule).unwrap();
        assert_eq!(ls.gamma, 0.0);
    }

    #[test]
    fn radial_pair_is_even_and_homogeneous() {
        let k = KernelPair::riesz(2, 0.7).unwrap();
        let x = [0.3, -1.1];
        let t: f64 = 2.7;
        let tx = [t * x[0], t * x[1]];
        assert_relative_eq!(k.kernel_eval(&tx), t.powf(0.7 - 2.0) * k.kernel_eval(&x), max_relative = 1e-13);
        assert_relative_eq!(k.kernel_eval(&[-x[0], -x[1]]), k.kernel_eval(&x), max_relative = 1e-15);
    }
}
