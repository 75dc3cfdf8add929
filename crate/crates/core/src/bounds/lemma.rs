//! The scalar profile `h(r) = C1 / r^alpha + C2 / r^(alpha+1)` and the integral
//! `int_0^inf (|h(r)| - mu)_+ r^(d-1) dr` behind the two-term lower bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breakpoints, QuadOptions};
use crate::special::sgn;

use super::TwoTerm;

const NEWTON_STEPS: usize = 50;
const BISECTION_STEPS: usize = 200;
/// The two-root case requires `mu < REGIME_FRACTION * max h`.
pub const REGIME_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaProfile {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub dimension: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootLabel {
    /// Crossing of `h = -mu` below the zero of h (mixed signs).
    RMinus,
    /// First crossing of `h = +mu` after the zero of h (mixed signs).
    RPlus1,
    /// Outer crossing of `h = +mu` (mixed signs).
    RPlus2,
    /// The single crossing when `|h|` is monotone.
    RPlus,
}

impl RootLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RootLabel::RMinus => "r_minus",
            RootLabel::RPlus1 => "r_plus_1",
            RootLabel::RPlus2 => "r_plus_2",
            RootLabel::RPlus => "r_plus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub mu: f64,
    pub roots: Vec<(RootLabel, f64)>,
}

impl RootSet {
    pub fn get(&self, label: RootLabel) -> Option<f64> {
        self.roots.iter().find(|(l, _)| *l == label).map(|(_, r)| *r)
    }
}

/// Which shape `|h|` has.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `|h|` strictly decreasing from infinity to 0.
    Monotone,
    /// Sign change at `zero`, interior maximum at `peak`.
    Mixed { zero: f64, peak: f64 },
}

impl LemmaProfile {
    pub fn new(c1: f64, c2: f64, alpha: f64, dimension: usize) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite()) || (c1 == 0.0 && c2 == 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coefficients must be finite and not both zero (C1 = {c1}, C2 = {c2})"
            )));
        }
        let upper = dimension as f64 - 1.0;
        if !(alpha > 0.0 && alpha < upper) {
            return Err(Error::AlphaOutOfRange {
                alpha,
                range: format!("(0, {upper})"),
            });
        }
        Ok(Self {
            c1,
            c2,
            alpha,
            dimension,
        })
    }

    /// h(r), evaluated as `(C1 r + C2) r^{-alpha-1}` to keep the sign change accurate.
    pub fn eval(&self, r: f64) -> f64 {
        self.c1.mul_add(r, self.c2) * r.powf(-self.alpha - 1.0)
    }

    fn derivative(&self, r: f64) -> f64 {
        let a = self.alpha;
        (-a * self.c1 * r - (a + 1.0) * self.c2) * r.powf(-a - 2.0)
    }

    fn shape(&self) -> Shape {
        if self.c1 != 0.0 && self.c2 != 0.0 && sgn(self.c1) != sgn(self.c2) {
            let zero = -self.c2 / self.c1;
            Shape::Mixed {
                zero,
                peak: (self.alpha + 1.0) / self.alpha * zero,
            }
        } else {
            Shape::Monotone
        }
    }

    /// `max |h|` on the outer branch for mixed signs; the upper end of the two-root regime.
    pub fn outer_maximum(&self) -> Option<f64> {
        match self.shape() {
            Shape::Mixed { peak, .. } => Some(self.eval(peak).abs()),
            Shape::Monotone => None,
        }
    }

    /// Sign of h on the outer branch, used to orient the mixed case so that
    /// the outer branch is positive.
    fn orientation(&self) -> f64 {
        if self.c1 != 0.0 {
            sgn(self.c1)
        } else {
            sgn(self.c2)
        }
    }

    fn check_mu(&self, mu: f64) -> Result<()> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        if let Some(top) = self.outer_maximum() {
            let limit = REGIME_FRACTION * top;
            if mu >= limit {
                return Err(Error::RootRegime { mu, limit });
            }
        }
        Ok(())
    }
}

/// Truncated expansions of the crossings of `|h| = mu`.
pub fn asymptotic_roots(p: &LemmaProfile, mu: f64) -> Result<RootSet> {
    p.check_mu(mu)?;
    let a = p.alpha;
    let roots = match p.shape() {
        Shape::Monotone if p.c1 == 0.0 => vec![(RootLabel::RPlus, (p.c2.abs() / mu).powf(1.0 / (a + 1.0)))],
        Shape::Monotone => vec![(
            RootLabel::RPlus,
            (p.c1.abs() / mu).powf(1.0 / a) + p.c2 / (a * p.c1),
        )],
        Shape::Mixed { zero, .. } => {
            let shift = zero.powf(a + 1.0) * mu / p.c1.abs();
            vec![
                (RootLabel::RMinus, zero - shift),
                (RootLabel::RPlus1, zero + shift),
                (RootLabel::RPlus2, (p.c1.abs() / mu).powf(1.0 / a) + p.c2 / (a * p.c1)),
            ]
        }
    };
    Ok(RootSet { mu, roots })
}

/// Solve `s * h(r) = target` on `[lo, hi]`, where the left side minus target
/// changes sign across the bracket; Newton from `guess` with bisection safeguard.
fn solve_bracketed(p: &LemmaProfile, s: f64, target: f64, mut lo: f64, mut hi: f64, guess: f64) -> Result<f64> {
    let g = |r: f64| s * p.eval(r) - target;
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if sgn(g_lo) == sgn(g_hi) {
        return Err(Error::RootFinding(format!("no sign change on [{lo}, {hi}]")));
    }
    let lo_sign = sgn(g_lo);
    let mut r = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for step in 0..NEWTON_STEPS + BISECTION_STEPS {
        let v = g(r);
        if v == 0.0 {
            return Ok(r);
        }
        if sgn(v) == lo_sign {
            lo = r;
        } else {
            hi = r;
        }
        let newton = r - v / (s * p.derivative(r));
        let next = if step < NEWTON_STEPS && newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - r).abs() <= 4.0 * f64::EPSILON * r.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            // pick the best of the final candidates
            let best = [next, lo, hi]
                .into_iter()
                .min_by(|a, b| g(*a).abs().total_cmp(&g(*b).abs()))
                .unwrap_or(next);
            return Ok(best);
        }
        r = next;
    }
    Err(Error::RootFinding(format!("no convergence on [{lo}, {hi}]")))
}

/// Expand `x` by `factor` until `pred(x)` holds.
fn expand_until(mut x: f64, factor: f64, pred: impl Fn(f64) -> bool) -> Result<f64> {
    for _ in 0..2000 {
        if pred(x) {
            return Ok(x);
        }
        x *= factor;
        if x == 0.0 || !x.is_finite() {
            break;
        }
    }
    Err(Error::RootFinding("could not bracket the crossing".into()))
}

/// Newton-refined crossings of `|h| = mu`, initialised at the expansions.
pub fn lemma_roots(p: &LemmaProfile, mu: f64) -> Result<RootSet> {
    let guesses = asymptotic_roots(p, mu)?;
    let s = p.orientation();
    let guess = |label| guesses.get(label).unwrap_or(f64::NAN);
    let roots = match p.shape() {
        Shape::Monotone => {
            let g0 = guess(RootLabel::RPlus);
            let start = if g0 > 0.0 && g0.is_finite() { g0 } else { 1.0 };
            let lo = expand_until(start, 0.5, |r| s * p.eval(r) > mu)?;
            let hi = expand_until(start, 2.0, |r| s * p.eval(r) < mu)?;
            vec![(RootLabel::RPlus, solve_bracketed(p, s, mu, lo, hi, g0)?)]
        }
        Shape::Mixed { zero, peak } => {
            let lo = expand_until(zero / 2.0, 0.5, |r| s * p.eval(r) < -mu)?;
            let r_minus = solve_bracketed(p, s, -mu, lo, zero, guess(RootLabel::RMinus))?;
            let r_plus_1 = solve_bracketed(p, s, mu, zero, peak, guess(RootLabel::RPlus1))?;
            let hi = expand_until(2.0 * peak, 2.0, |r| s * p.eval(r) < mu)?;
            let r_plus_2 = solve_bracketed(p, s, mu, peak, hi, guess(RootLabel::RPlus2))?;
            vec![
                (RootLabel::RMinus, r_minus),
                (RootLabel::RPlus1, r_plus_1),
                (RootLabel::RPlus2, r_plus_2),
            ]
        }
    };
    Ok(RootSet { mu, roots })
}

/// `int_0^inf (|h(r)| - mu)_+ r^{d-1} dr` by root splitting and adaptive
/// Gauss-Kronrod on each interval where `|h| > mu`.
pub fn lemma_integral_numeric(p: &LemmaProfile, mu: f64) -> Result<f64> {
    let roots = lemma_roots(p, mu)?;
    let intervals: Vec<(f64, f64)> = match p.shape() {
        Shape::Monotone => vec![(0.0, roots.get(RootLabel::RPlus).unwrap_or(0.0))],
        Shape::Mixed { .. } => vec![
            (0.0, roots.get(RootLabel::RMinus).unwrap_or(0.0)),
            (
                roots.get(RootLabel::RPlus1).unwrap_or(0.0),
                roots.get(RootLabel::RPlus2).unwrap_or(0.0),
            ),
        ],
    };
    let dm1 = p.dimension as f64 - 1.0;
    let integrand = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        (p.eval(r).abs() - mu).max(0.0) * r.powf(dm1)
    };
    let mut total = 0.0;
    for (a, b) in intervals {
        if b <= a {
            continue;
        }
        // scale of the piece: mu b^d / d bounds it from below
        let scale = mu * b.powf(dm1 + 1.0) / (dm1 + 1.0);
        let opts = QuadOptions::with_tolerances(1e-15 * scale, 1e-13);
        // geometric breakpoints resolve the r^{d-alpha-2} behaviour at the origin
        let mut points = vec![a];
        if a == 0.0 {
            let mut x = b * 1e-12;
            while x < b / 2.0 {
                points.push(x);
                x *= 8.0;
            }
        }
        points.push(b);
        total += integrate_with_breakpoints(integrand, &points, opts)?.value;
    }
    Ok(total)
}

/// Leading and second terms of the two-term expansion of the lemma integral.
pub fn lemma_asymptotic(p: &LemmaProfile, mu: f64) -> Result<TwoTerm> {
    if p.c1 == 0.0 {
        return Err(Error::InvalidParameter(
            "C1 = 0: the leading term degenerates; use the numeric integral".into(),
        ));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let d = p.dimension as f64;
    let a = p.alpha;
    let leading = a / (d * (d - a)) * p.c1.abs().powf(d / a) * mu.powf(1.0 - d / a);
    let second = sgn(p.c1) * p.c1.abs().powf((d - a - 1.0) / a) * p.c2 / (d - a - 1.0) * mu.powf(1.0 - (d - 1.0) / a);
    Ok(TwoTerm { leading, second })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Antiderivative of `(s h(r) - mu) r^{d-1}` on a piece where `s h > 0`.
    fn piece(p: &LemmaProfile, s: f64, mu: f64, a: f64, b: f64) -> f64 {
        let d = p.dimension as f64;
        let e1 = d - p.alpha; // exponent after integrating r^{d-1-alpha}
        let e2 = d - p.alpha - 1.0;
        let prim = |r: f64| {
            if r == 0.0 {
                return 0.0;
            }
            s * (p.c1 * r.powf(e1) / e1 + p.c2 * r.powf(e2) / e2) - mu * r.powf(d) / d
        };
        prim(b) - prim(a)
    }

    fn exact_integral(p: &LemmaProfile, mu: f64) -> f64 {
        let roots = lemma_roots(p, mu).unwrap();
        let s = p.orientation();
        match roots.get(RootLabel::RPlus) {
            Some(r) => piece(p, s, mu, 0.0, r),
            None => {
                let rm = roots.get(RootLabel::RMinus).unwrap();
                let r1 = roots.get(RootLabel::RPlus1).unwrap();
                let r2 = roots.get(RootLabel::RPlus2).unwrap();
                piece(p, -s, mu, 0.0, rm) + piece(p, s, mu, r1, r2)
            }
        }
    }

    #[test]
    fn pure_power_closed_forms() {
        let p = LemmaProfile::new(1.0, 0.0, 1.0, 3).unwrap();
        assert_relative_eq!(lemma_integral_numeric(&p, 0.01).unwrap(), 1e4 / 6.0, max_relative = 1e-11);
        let t = lemma_asymptotic(&p, 0.01).unwrap();
        assert_relative_eq!(t.leading, 1e4 / 6.0, max_relative = 1e-14);
        assert_eq!(t.second, 0.0);

        let q = LemmaProfile::new(0.0, 1.0, 1.0, 3).unwrap();
        for mu in [0.1f64, 0.01, 1e-4] {
            let expected: f64 = 2.0 / 3.0 * mu.powf(-0.5);
            assert_relative_eq!(lemma_integral_numeric(&q, mu).unwrap(), expected, max_relative = 1e-11);
        }
        assert!(lemma_asymptotic(&q, 0.1).is_err());
    }

    #[test]
    fn numeric_matches_antiderivative_oracle() {
        for (c1, c2) in [(1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-2.0, -0.5), (0.7, -1.3)] {
            for (alpha, d) in [(1.0, 3), (0.5, 3), (1.5, 3), (0.6, 2), (2.2, 4)] {
                let p = LemmaProfile::new(c1, c2, alpha, d).unwrap();
                for mu in [1e-2, 1e-3] {
                    let num = lemma_integral_numeric(&p, mu).unwrap();
                    let exact = exact_integral(&p, mu);
                    assert_relative_eq!(num, exact, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn mixed_case_second_term_example() {
        let p = LemmaProfile::new(1.0, -1.0, 1.0, 3).unwrap();
        let t = lemma_asymptotic(&p, 1e-3).unwrap();
        assert_relative_eq!(t.leading, 1e6 / 6.0, max_relative = 1e-13);
        assert_relative_eq!(t.second, -1e3, max_relative = 1e-13);
        let num = lemma_integral_numeric(&p, 1e-3).unwrap();
        let second = num - t.leading;
        assert!((second - t.second).abs() < 0.01 * t.second.abs(), "second {second}");
    }

    #[test]
    fn sign_flip_leaves_everything_unchanged() {
        let a = LemmaProfile::new(1.3, -0.4, 1.0, 3).unwrap();
        let b = LemmaProfile::new(-1.3, 0.4, 1.0, 3).unwrap();
        assert_eq!(lemma_asymptotic(&a, 1e-3).unwrap(), lemma_asymptotic(&b, 1e-3).unwrap());
        assert_relative_eq!(
            lemma_integral_numeric(&a, 1e-3).unwrap(),
            lemma_integral_numeric(&b, 1e-3).unwrap(),
            max_relative = 1e-13
        );
        assert_eq!(lemma_roots(&a, 1e-3).unwrap(), lemma_roots(&b, 1e-3).unwrap());
    }

    #[test]
    fn root_examples() {
        let p = LemmaProfile::new(1.0, -1.0, 1.0, 3).unwrap();
        let roots = lemma_roots(&p, 0.01).unwrap();
        // r - 1 = -mu r^2 near 1
        let exact = (-1.0 + (1.0f64 + 4.0 * 0.01).sqrt()) / (2.0 * 0.01);
        assert_relative_eq!(roots.get(RootLabel::RMinus).unwrap(), exact, max_relative = 1e-14);
        assert!((roots.get(RootLabel::RMinus).unwrap() - 0.99).abs() < 2e-4);
        let (rm, r1, r2) = (
            roots.get(RootLabel::RMinus).unwrap(),
            roots.get(RootLabel::RPlus1).unwrap(),
            roots.get(RootLabel::RPlus2).unwrap(),
        );
        assert!(rm < r1 && r1 < r2);

        let q = LemmaProfile::new(1.0, 0.0, 1.0, 3).unwrap();
        assert_relative_eq!(lemma_roots(&q, 0.01).unwrap().get(RootLabel::RPlus).unwrap(), 100.0, max_relative = 1e-14);

        let w = LemmaProfile::new(1.0, 1.0, 1.0, 3).unwrap();
        // 1/r + 1/r^2 = mu  =>  r = (1 + sqrt(1 + 4 mu)) / (2 mu)
        let r = lemma_roots(&w, 0.01).unwrap().get(RootLabel::RPlus).unwrap();
        let exact = (1.0 + (1.0f64 + 0.04).sqrt()) / 0.02;
        assert_relative_eq!(r, exact, max_relative = 1e-14);
        assert!((r - 101.0).abs() < 0.05);
    }

    #[test]
    fn regime_is_enforced() {
        let p = LemmaProfile::new(1.0, -1.0, 1.0, 3).unwrap();
        // max h at r = 2 is 1/4
        assert_relative_eq!(p.outer_maximum().unwrap(), 0.25, max_relative = 1e-15);
        assert!(matches!(lemma_roots(&p, 0.23), Err(Error::RootRegime { .. })));
        assert!(lemma_roots(&p, 0.2).is_ok());
        assert!(LemmaProfile::new(1.0, 1.0, 2.0, 3).is_err());
        assert!(LemmaProfile::new(0.0, 0.0, 1.0, 3).is_err());
    }

    #[test]
    fn residuals_are_tiny() {
        for (c1, c2) in [(1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (2.0, -3.0)] {
            let p = LemmaProfile::new(c1, c2, 1.0, 3).unwrap();
            for mu in [1e-2, 1e-3] {
                let roots = lemma_roots(&p, mu).unwrap();
                for (label, r) in &roots.roots {
                    let target = if *label == RootLabel::RMinus { -mu } else { mu };
                    let value = p.orientation() * p.eval(*r);
                    assert!((value - target).abs() <= 1e-12 * mu, "{label:?}: {value} vs {target}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn mixed_roots_are_ordered(c1 in 0.2f64..5.0, c2 in -5.0f64..-0.2, alpha in 0.3f64..1.9, frac in 0.001f64..0.8) {
            let p = LemmaProfile::new(c1, c2, alpha, 3).unwrap();
            let mu = frac * p.outer_maximum().unwrap();
            let roots = lemma_roots(&p, mu).unwrap();
            let rm = roots.get(RootLabel::RMinus).unwrap();
            let r1 = roots.get(RootLabel::RPlus1).unwrap();
            let r2 = roots.get(RootLabel::RPlus2).unwrap();
            prop_assert!(rm < r1 && r1 < r2);
            prop_assert!((p.eval(rm) + mu).abs() <= 1e-9 * mu);
            prop_assert!((p.eval(r1) - mu).abs() <= 1e-9 * mu);
            prop_assert!((p.eval(r2) - mu).abs() <= 1e-9 * mu);
        }
    }
}
