//! Finite-measure domains and the translation-overlap function
//! `eta(z) = |Omega ∩ (Omega + z)|`.
//!
//! All domains are centred at the origin. Balls and ellipsoids are smooth and
//! strictly convex; boxes have corners and are admitted only where a finite
//! measure suffices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::SphereQuadrature;
use crate::special::{ball_volume, cap_integral, norm, sphere_area};

/// Default Monte-Carlo budget for overlap estimates.
pub const DEFAULT_MC_SAMPLES: u64 = 1_000_000;
const MC_SHARD: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainKind {
    Ball { radius: f64 },
    Ellipsoid { semi_axes: Vec<f64> },
    Box { sides: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexDomain {
    pub dimension: usize,
    pub kind: DomainKind,
}

/// A value with a one-sigma error estimate (zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// How `overlap` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapMethod {
    /// Closed form where one exists, otherwise Monte-Carlo with the defaults.
    Auto,
    MonteCarlo { samples: u64, seed: u64 },
}

impl ConvexDomain {
    pub fn ball(dimension: usize, radius: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        positive("radius", radius)?;
        Ok(Self {
            dimension,
            kind: DomainKind::Ball { radius },
        })
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        if semi_axes.is_empty() {
            return Err(Error::InvalidParameter("ellipsoid needs at least one semi-axis".into()));
        }
        for &a in &semi_axes {
            positive("semi-axis", a)?;
        }
        Ok(Self {
            dimension: semi_axes.len(),
            kind: DomainKind::Ellipsoid { semi_axes },
        })
    }

    pub fn cuboid(sides: Vec<f64>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidParameter("box needs at least one side".into()));
        }
        for &l in &sides {
            positive("side length", l)?;
        }
        Ok(Self {
            dimension: sides.len(),
            kind: DomainKind::Box { sides },
        })
    }

    /// Check the kind parameters against the dimension (useful after deserialising).
    pub fn validated(self) -> Result<Self> {
        let rebuilt = match &self.kind {
            DomainKind::Ball { radius } => Self::ball(self.dimension, *radius)?,
            DomainKind::Ellipsoid { semi_axes } => Self::ellipsoid(semi_axes.clone())?,
            DomainKind::Box { sides } => Self::cuboid(sides.clone())?,
        };
        if rebuilt.dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: rebuilt.dimension,
            });
        }
        Ok(rebuilt)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DomainKind::Ball { .. } => "ball",
            DomainKind::Ellipsoid { .. } => "ellipsoid",
            DomainKind::Box { .. } => "box",
        }
    }

    /// |Omega|.
    pub fn measure(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius } => ball_volume(self.dimension) * radius.powi(self.dimension as i32),
            DomainKind::Ellipsoid { semi_axes } => ball_volume(self.dimension) * semi_axes.iter().product::<f64>(),
            DomainKind::Box { sides } => sides.iter().product(),
        }
    }

    /// Diameter of the largest inscribed ball, R_Omega.
    pub fn inner_diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius } => 2.0 * radius,
            DomainKind::Ellipsoid { semi_axes } => 2.0 * semi_axes.iter().copied().fold(f64::INFINITY, f64::min),
            DomainKind::Box { sides } => sides.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius } => 2.0 * radius,
            DomainKind::Ellipsoid { semi_axes } => 2.0 * semi_axes.iter().copied().fold(0.0, f64::max),
            DomainKind::Box { sides } => norm(sides),
        }
    }

    pub fn strictly_convex_smooth(&self) -> bool {
        !matches!(self.kind, DomainKind::Box { .. })
    }

    /// Half-widths of the axis-aligned bounding box.
    pub fn half_widths(&self) -> Vec<f64> {
        match &self.kind {
            DomainKind::Ball { radius } => vec![*radius; self.dimension],
            DomainKind::Ellipsoid { semi_axes } => semi_axes.clone(),
            DomainKind::Box { sides } => sides.iter().map(|l| 0.5 * l).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dimension);
        match &self.kind {
            DomainKind::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>() < radius * radius,
            DomainKind::Ellipsoid { semi_axes } => {
                x.iter().zip(semi_axes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>() < 1.0
            }
            DomainKind::Box { sides } => x.iter().zip(sides).all(|(v, l)| v.abs() < 0.5 * l),
        }
    }

    pub fn indicator(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            1.0
        } else {
            0.0
        }
    }

    /// Smooth P with P = 0 and |grad P| = 1 on the boundary, P > 0 inside.
    /// `None` for kinds without a smooth boundary.
    pub fn boundary_fn(&self, x: &[f64]) -> Option<f64> {
        match &self.kind {
            DomainKind::Ball { radius } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Some((radius * radius - r2) / (2.0 * radius))
            }
            DomainKind::Ellipsoid { semi_axes } => {
                let q: f64 = x.iter().zip(semi_axes).map(|(v, a)| (v / a) * (v / a)).sum();
                let g2: f64 = x.iter().zip(semi_axes).map(|(v, a)| v * v / a.powi(4)).sum();
                let amin = semi_axes.iter().copied().fold(f64::INFINITY, f64::min);
                let c = amin.powi(-4);
                Some((1.0 - q) / (2.0 * (g2 + c * (1.0 - q).powi(2)).sqrt()))
            }
            DomainKind::Box { .. } => None,
        }
    }

    fn check_vector(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Closed-form eta(z), where available.
    pub fn overlap_exact(&self, z: &[f64]) -> Option<f64> {
        let d = self.dimension;
        match &self.kind {
            DomainKind::Ball { radius } => Some(ball_overlap(d, *radius, norm(z))),
            DomainKind::Ellipsoid { semi_axes } => {
                // affine image of the unit ball
                let scaled: Vec<f64> = z.iter().zip(semi_axes).map(|(v, a)| v / a).collect();
                Some(semi_axes.iter().product::<f64>() * ball_overlap(d, 1.0, norm(&scaled)))
            }
            DomainKind::Box { sides } => Some(sides.iter().zip(z).map(|(l, v)| (l - v.abs()).max(0.0)).product()),
        }
    }

    /// eta(z) = |Omega ∩ (Omega + z)|.
    pub fn overlap(&self, z: &[f64], method: OverlapMethod) -> Result<Estimate> {
        self.check_vector(z)?;
        match method {
            OverlapMethod::Auto => match self.overlap_exact(z) {
                Some(value) => Ok(Estimate { value, std_error: 0.0 }),
                None => self.overlap_monte_carlo(z, DEFAULT_MC_SAMPLES, 0),
            },
            OverlapMethod::MonteCarlo { samples, seed } => self.overlap_monte_carlo(z, samples, seed),
        }
    }

    /// Monte-Carlo estimate of eta(z) from uniform samples in the bounding box.
    ///
    /// Samples are drawn in fixed-size shards, each from its own ChaCha stream,
    /// so the result depends only on `(samples, seed)` and not on thread count.
    pub fn overlap_monte_carlo(&self, z: &[f64], samples: u64, seed: u64) -> Result<Estimate> {
        self.check_vector(z)?;
        if samples == 0 {
            return Err(Error::InvalidParameter("Monte-Carlo sample budget must be positive".into()));
        }
        let half = self.half_widths();
        let box_volume: f64 = half.iter().map(|b| 2.0 * b).product();
        let shards = samples.div_ceil(MC_SHARD);
        let hits: u64 = (0..shards)
            .into_par_iter()
            .map(|shard| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(shard);
                let n = MC_SHARD.min(samples - shard * MC_SHARD);
                let mut y = vec![0.0; self.dimension];
                let mut shifted = vec![0.0; self.dimension];
                let mut hits = 0u64;
                for _ in 0..n {
                    for (k, yk) in y.iter_mut().enumerate() {
                        *yk = half[k] * (2.0 * rng.random::<f64>() - 1.0);
                        shifted[k] = *yk + z[k];
                    }
                    if self.contains(&y) && self.contains(&shifted) {
                        hits += 1;
                    }
                }
                hits
            })
            .sum();
        let p = hits as f64 / samples as f64;
        Ok(Estimate {
            value: box_volume * p,
            std_error: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
        })
    }

    /// Closed-form boundary coefficient A_Omega(theta) for balls and ellipsoids.
    ///
    /// For the unit ball this is `-|S^{d-2}| / (d-1)`.
    pub fn boundary_coefficient_exact(&self, direction: &[f64]) -> Option<f64> {
        let d = self.dimension;
        if d < 2 {
            return None;
        }
        let unit_ball = -sphere_area(d - 1) / (d as f64 - 1.0);
        let n = norm(direction);
        match &self.kind {
            DomainKind::Ball { radius } => Some(unit_ball * radius.powi(d as i32 - 1)),
            DomainKind::Ellipsoid { semi_axes } => {
                let scaled: Vec<f64> = direction.iter().zip(semi_axes).map(|(v, a)| v / (a * n)).collect();
                Some(semi_axes.iter().product::<f64>() * norm(&scaled) * unit_ball)
            }
            DomainKind::Box { .. } => None,
        }
    }

    /// A_Omega(theta) = d/dr eta(r theta) at r = 0+, from one-sided difference
    /// quotients at r = R/64, R/128, R/256 (R the inner diameter) combined by
    /// two Richardson steps.
    pub fn boundary_coefficient(&self, direction: &[f64]) -> Result<Estimate> {
        self.check_vector(direction)?;
        if !self.strictly_convex_smooth() {
            return Err(Error::NonSmoothDomain(self.name().into()));
        }
        let n = norm(direction);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter("direction must be a non-zero vector".into()));
        }
        let theta: Vec<f64> = direction.iter().map(|v| v / n).collect();
        let measure = self.measure();
        let quotient = |r: f64| -> Result<f64> {
            let z: Vec<f64> = theta.iter().map(|t| t * r).collect();
            let eta = self.overlap(&z, OverlapMethod::Auto)?;
            Ok((eta.value - measure) / r)
        };
        let h0 = self.inner_diameter() / 64.0;
        let d0 = quotient(h0)?;
        let d1 = quotient(h0 / 2.0)?;
        let d2 = quotient(h0 / 4.0)?;
        // remove the O(r) then the O(r^2) term
        let e1 = 2.0 * d1 - d0;
        let e2 = 2.0 * d2 - d1;
        let value = (4.0 * e2 - e1) / 3.0;
        let err = (value - e2).abs();
        let tolerance = 1e-3 * value.abs().max(measure / self.inner_diameter());
        if !(err <= tolerance) {
            return Err(Error::Extrapolation { estimate: err, tolerance });
        }
        Ok(Estimate {
            value,
            std_error: err,
        })
    }

    /// Tabulate A_Omega on arbitrary directions (no quadrature weights attached).
    pub fn expansion(&self, directions: &[Vec<f64>]) -> Result<OverlapExpansion> {
        if directions.is_empty() {
            return Err(Error::InvalidParameter("expansion needs at least one direction".into()));
        }
        self.build_expansion(directions.to_vec(), None)
    }

    /// Tabulate A_Omega on the nodes of a spherical quadrature rule.
    pub fn expansion_on(&self, rule: &SphereQuadrature) -> Result<OverlapExpansion> {
        if rule.dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: rule.dimension,
            });
        }
        if rule.is_empty() {
            return Err(Error::InvalidParameter("empty quadrature rule".into()));
        }
        self.build_expansion(rule.nodes.clone(), Some(rule.weights.clone()))
    }

    fn build_expansion(&self, directions: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<OverlapExpansion> {
        let estimates = directions
            .iter()
            .map(|dir| self.boundary_coefficient(dir))
            .collect::<Result<Vec<_>>>()?;
        Ok(OverlapExpansion {
            dimension: self.dimension,
            measure: self.measure(),
            a_samples: estimates.iter().map(|e| e.value).collect(),
            a_errors: estimates.iter().map(|e| e.std_error).collect(),
            directions,
            weights,
            r_max: self.inner_diameter() / 2.0,
        })
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Overlap of two balls of radius `radius` in R^d whose centres are `r` apart.
pub fn ball_overlap(d: usize, radius: f64, r: f64) -> f64 {
    if r >= 2.0 * radius {
        return 0.0;
    }
    2.0 * ball_volume(d - 1) * radius.powi(d as i32) * cap_integral(d, r / (2.0 * radius))
}

/// First-order boundary expansion of eta: `eta(r theta) ≈ |Omega| + r A(theta)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapExpansion {
    pub dimension: usize,
    pub measure: f64,
    pub directions: Vec<Vec<f64>>,
    pub a_samples: Vec<f64>,
    pub a_errors: Vec<f64>,
    /// Spherical quadrature weights matching `directions`, when tabulated on a rule.
    pub weights: Option<Vec<f64>>,
    pub r_max: f64,
}

impl OverlapExpansion {
    /// `int_{S^{d-1}} A_Omega dsigma`, available when weights are attached.
    pub fn sphere_integral(&self) -> Option<f64> {
        self.weights
            .as_ref()
            .map(|w| w.iter().zip(&self.a_samples).map(|(w, a)| w * a).sum())
    }

    /// Multiply every A sample by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.a_samples.iter_mut().for_each(|a| *a *= factor);
        out.a_errors.iter_mut().for_each(|e| *e *= factor.abs());
        out
    }
}
