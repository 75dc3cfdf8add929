//! One-dimensional and spherical quadrature rules.
//!
//! * Gauss-Legendre rules of arbitrary order (Newton on the Legendre recurrence).
//! * Globally adaptive Gauss-Kronrod (10/21 point pair) with breakpoints.
//! * Quadrature on the unit sphere S^{d-1} for d = 1, 2, 3.

// Kronrod tables are kept at their published digits.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_451_309,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let hab = h.abs();
    let value = res_k * h;
    res_abs *= hab;
    res_asc *= hab;
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Globally adaptive Gauss-Kronrod integration of `f` over [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quad> {
    integrate_with_breakpoints(f, &[a, b], opts)
}

/// Adaptive integration over consecutive intervals of `points` (sorted ascending).
///
/// Breakpoints should be placed at kinks and interior singularities of `f`.
pub fn integrate_with_breakpoints<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<Quad> {
    assert!(points.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = kronrod21(&mut f, w[0], w[1]);
        total += value;
        total_err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut count = heap.len();
    // error contributions from segments too small to split any further
    let mut frozen_err = 0.0;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol || heap.is_empty() {
            return Ok(Quad {
                value: total,
                error: total_err,
                intervals: count,
            });
        }
        if count >= opts.max_intervals {
            return Err(Error::Quadrature {
                estimate: total_err,
                tolerance: tol,
            });
        }
        let seg = heap.pop().expect("heap checked non-empty");
        let mid = 0.5 * (seg.a + seg.b);
        if (seg.b - seg.a) <= 1e3 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            frozen_err += seg.error;
            if heap.is_empty() || frozen_err > tol {
                return Err(Error::Quadrature {
                    estimate: total_err,
                    tolerance: tol,
                });
            }
            continue;
        }
        let (v1, e1) = kronrod21(&mut f, seg.a, mid);
        let (v2, e2) = kronrod21(&mut f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        count += 1;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
}

/// A quadrature rule on the unit sphere S^{d-1}.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub dimension: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Default rule: S^0 exactly, 32-point trapezoid on S^1, 10 x 11 product grid on S^2.
    pub fn default_for(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Self::points()),
            2 => Ok(Self::circle(32)),
            3 => Ok(Self::sphere(10, 11)),
            _ => Err(Error::InvalidParameter(format!(
                "spherical quadrature available for d = 1, 2, 3, got {d}"
            ))),
        }
    }

    /// S^0 = {-1, +1} with unit counting weights.
    pub fn points() -> Self {
        Self {
            dimension: 1,
            nodes: vec![vec![-1.0], vec![1.0]],
            weights: vec![1.0, 1.0],
        }
    }

    /// Equispaced trapezoid rule on S^1 starting at angle 0.
    pub fn circle(n: usize) -> Self {
        assert!(n >= 1);
        let w = 2.0 * PI / n as f64;
        let nodes = (0..n)
            .map(|k| {
                let t = w * k as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        Self {
            dimension: 2,
            nodes,
            weights: vec![w; n],
        }
    }

    /// Product rule on S^2: Gauss-Legendre in cos(polar angle), trapezoid in azimuth.
    pub fn sphere(n_polar: usize, n_azimuth: usize) -> Self {
        assert!(n_polar >= 1 && n_azimuth >= 1);
        let gl = GaussLegendre::new(n_polar);
        let dphi = 2.0 * PI / n_azimuth as f64;
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (z, wz) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - z * z).sqrt();
            for k in 0..n_azimuth {
                let phi = dphi * k as f64;
                nodes.push(vec![s * phi.cos(), s * phi.sin(), *z]);
                weights.push(wz * dphi);
            }
        }
        Self {
            dimension: 3,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let gl = GaussLegendre::new(n);
            assert_relative_eq!(gl.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
            for p in 0..(2 * n) {
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(p as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} p={p}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn kronrod_handles_smooth_and_singular_integrands() {
        let q = integrate(|x: f64| x.sin(), 0.0, PI, QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-13);
        // integrable endpoint singularity
        let q = integrate(|x: f64| x.powf(-0.7), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, 1.0 / 0.3, max_relative = 1e-9);
    }

    #[test]
    fn breakpoints_resolve_kinks() {
        let f = |x: f64| (x - 0.3).abs();
        let q = integrate_with_breakpoints(f, &[0.0, 0.3, 1.0], QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, 0.045 + 0.245, max_relative = 1e-14);
    }

    #[test]
    fn divergent_integral_reports_failure() {
        let opts = QuadOptions {
            max_intervals: 200,
            ..QuadOptions::default()
        };
        assert!(integrate(|x: f64| 1.0 / x, 0.0, 1.0, opts).is_err());
    }

    #[test]
    fn sphere_rules_integrate_low_degree_harmonics() {
        let c = SphereQuadrature::circle(32);
        assert_relative_eq!(c.integrate(|_| 1.0), 2.0 * PI, max_relative = 1e-14);
        assert!(c.integrate(|x| x[0].powi(3) * x[1]).abs() < 1e-13);
        assert_relative_eq!(c.integrate(|x| x[0] * x[0]), PI, max_relative = 1e-13);

        let s = SphereQuadrature::default_for(3).unwrap();
        assert_eq!(s.len(), 110);
        assert_relative_eq!(s.integrate(|_| 1.0), 4.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(s.integrate(|x| x[2] * x[2]), 4.0 * PI / 3.0, max_relative = 1e-13);
        assert_relative_eq!(s.integrate(|x| x[0] * x[0]), 4.0 * PI / 3.0, max_relative = 1e-13);
        assert_relative_eq!(
            s.integrate(|x| x[0].powi(2) * x[1].powi(2)),
            4.0 * PI / 15.0,
            max_relative = 1e-12
        );
    }
}
