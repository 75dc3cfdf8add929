//! Tables behind the `lemma`, `eta` and `dirichlet` subcommands.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bounds::{asymptotic_roots, lemma_asymptotic, lemma_integral_numeric, lemma_roots, LemmaProfile};
use crate::dirichlet::{box_spectrum, counting_function, pl_bound, polya_bound, semiclassical_bound};
use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, OverlapExpansion, OverlapMethod};
use crate::quadrature::SphereQuadrature;

use super::{format_float, OverlapChoice, OverlapSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub mu: f64,
    pub numeric: f64,
    pub leading: Option<f64>,
    pub second: Option<f64>,
    /// `numeric - leading - second`.
    pub remainder: Option<f64>,
    /// Remainder divided by `mu^{1-(d-1)/alpha}`; tends to 0.
    pub scaled_remainder: Option<f64>,
    /// `(label, newton root, truncated expansion)`.
    pub roots: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaTable {
    pub profile: LemmaProfile,
    pub rows: Vec<LemmaRow>,
}

/// Numeric integral, two-term expansion and roots for each `mu`.
pub fn lemma_table(profile: &LemmaProfile, mus: &[f64]) -> Result<LemmaTable> {
    let d = profile.dimension as f64;
    let a = profile.alpha;
    let rows = mus
        .iter()
        .map(|&mu| {
            let numeric = lemma_integral_numeric(profile, mu)?;
            let terms = if profile.c1 != 0.0 {
                Some(lemma_asymptotic(profile, mu)?)
            } else {
                None
            };
            let remainder = terms.map(|t| numeric - t.leading - t.second);
            let newton = lemma_roots(profile, mu)?;
            let expansion = asymptotic_roots(profile, mu)?;
            let roots = newton
                .roots
                .iter()
                .map(|(label, r)| (label.as_str().to_string(), *r, expansion.get(*label).unwrap_or(f64::NAN)))
                .collect();
            Ok(LemmaRow {
                mu,
                numeric,
                leading: terms.map(|t| t.leading),
                second: terms.map(|t| t.second),
                remainder,
                scaled_remainder: remainder.map(|r| r / mu.powf(1.0 - (d - 1.0) / a)),
                roots,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaTable {
        profile: *profile,
        rows,
    })
}

impl LemmaTable {
    pub fn to_csv(&self) -> String {
        let labels: Vec<String> = self
            .rows
            .first()
            .map(|r| r.roots.iter().map(|(l, _, _)| l.clone()).collect())
            .unwrap_or_default();
        let mut out = String::from("mu,numeric,leading,second,remainder,scaled_remainder");
        for l in &labels {
            let _ = write!(out, ",{l},{l}_expansion");
        }
        out.push('\n');
        let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                format_float(r.mu),
                format_float(r.numeric),
                opt(r.leading),
                opt(r.second),
                opt(r.remainder),
                opt(r.scaled_remainder)
            );
            for (_, root, approx) in &r.roots {
                let _ = write!(out, ",{},{}", format_float(*root), format_float(*approx));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub direction: usize,
    pub r: f64,
    pub eta: f64,
    pub std_error: f64,
    /// `|Omega| + r A(theta)`.
    pub first_order: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaTable {
    pub expansion: OverlapExpansion,
    pub a_integral: Option<f64>,
    pub rows: Vec<EtaRow>,
}

/// eta along the nodes of the default spherical rule at evenly spaced radii
/// up to half the inner diameter, next to its first-order expansion.
pub fn eta_table(domain: &ConvexDomain, spec: &OverlapSpec, seed: u64) -> Result<EtaTable> {
    let rule = SphereQuadrature::default_for(domain.dimension)?;
    let expansion = if domain.strictly_convex_smooth() {
        domain.expansion_on(&rule)?
    } else {
        // boxes: no boundary expansion; report eta only
        OverlapExpansion {
            dimension: domain.dimension,
            measure: domain.measure(),
            directions: rule.nodes.clone(),
            a_samples: vec![f64::NAN; rule.len()],
            a_errors: vec![f64::NAN; rule.len()],
            weights: Some(rule.weights.clone()),
            r_max: domain.inner_diameter() / 2.0,
        }
    };
    if spec.radii == 0 {
        return Err(Error::Config("overlap.radii must be >= 1".into()));
    }
    let method = match spec.method {
        OverlapChoice::Exact => OverlapMethod::Auto,
        OverlapChoice::MonteCarlo => OverlapMethod::MonteCarlo {
            samples: spec.samples,
            seed,
        },
    };
    let mut rows = Vec::new();
    for (i, dir) in expansion.directions.iter().enumerate() {
        for j in 1..=spec.radii {
            let r = expansion.r_max * j as f64 / spec.radii as f64;
            let z: Vec<f64> = dir.iter().map(|t| r * t).collect();
            let est = domain.overlap(&z, method)?;
            rows.push(EtaRow {
                direction: i,
                r,
                eta: est.value,
                std_error: est.std_error,
                first_order: expansion.measure + r * expansion.a_samples[i],
            });
        }
    }
    let a_integral = if domain.strictly_convex_smooth() {
        expansion.sphere_integral()
    } else {
        None
    };
    Ok(EtaTable {
        expansion,
        a_integral,
        rows,
    })
}

impl EtaTable {
    pub fn to_csv(&self) -> String {
        let d = self.expansion.dimension;
        let mut out = String::from("direction");
        for k in 0..d {
            let _ = write!(out, ",theta_{k}");
        }
        out.push_str(",r,eta,std_error,a_coefficient,first_order\n");
        for row in &self.rows {
            let _ = write!(out, "{}", row.direction);
            for t in &self.expansion.directions[row.direction] {
                let _ = write!(out, ",{}", format_float(*t));
            }
            let a = self.expansion.a_samples[row.direction];
            let fmt_nan = |x: f64| if x.is_nan() { String::new() } else { format_float(x) };
            let _ = writeln!(
                out,
                ",{},{},{},{},{}",
                format_float(row.r),
                format_float(row.eta),
                format_float(row.std_error),
                fmt_nan(a),
                fmt_nan(row.first_order)
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletRow {
    pub nu: f64,
    pub count: usize,
    pub polya: f64,
    pub semiclassical: f64,
    pub pl: Option<f64>,
}

/// Exact `N(nu)` of the box against the three counting bounds on `points`
/// evenly spaced values in `[nu_min, nu_max]`.
pub fn dirichlet_table(sides: &[f64], nu_min: f64, nu_max: f64, points: usize) -> Result<Vec<DirichletRow>> {
    if points == 0 || !(nu_max > nu_min) || !(nu_min > 0.0) {
        return Err(Error::InvalidParameter("need 0 < nu_min < nu_max and points >= 1".into()));
    }
    let spectrum = box_spectrum(sides, nu_max)?;
    let d = sides.len();
    let measure: f64 = sides.iter().product();
    (0..points)
        .map(|i| {
            let nu = if points == 1 {
                nu_min
            } else if i + 1 == points {
                nu_max
            } else {
                nu_min + (nu_max - nu_min) * i as f64 / (points - 1) as f64
            };
            Ok(DirichletRow {
                nu,
                count: counting_function(&spectrum, nu)?,
                polya: polya_bound(d, measure, nu)?,
                semiclassical: semiclassical_bound(d, measure, nu)?,
                pl: if d >= 3 { Some(pl_bound(d, measure, nu)?) } else { None },
            })
        })
        .collect()
}

/// CSV of [`dirichlet_table`] rows.
pub fn dirichlet_csv(rows: &[DirichletRow]) -> String {
    let mut out = String::from("nu,count,polya,semiclassical,pl\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(r.nu),
            r.count,
            format_float(r.polya),
            format_float(r.semiclassical),
            r.pl.map(format_float).unwrap_or_default()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_table_rows() {
        let p = LemmaProfile::new(1.0, -1.0, 1.0, 3).unwrap();
        let t = lemma_table(&p, &[1e-2, 1e-3]).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].roots.len(), 3);
        assert!(t.rows[1].scaled_remainder.unwrap().abs() < t.rows[0].scaled_remainder.unwrap().abs());
        let csv = t.to_csv();
        assert!(csv.starts_with("mu,numeric,leading,second,remainder,scaled_remainder,r_minus,r_minus_expansion"));

        let q = LemmaProfile::new(0.0, 1.0, 1.0, 3).unwrap();
        let t = lemma_table(&q, &[1e-2]).unwrap();
        assert!(t.rows[0].leading.is_none());
    }

    #[test]
    fn eta_table_for_disk_and_square() {
        let disk = ConvexDomain::ball(2, 1.0).unwrap();
        let t = eta_table(&disk, &OverlapSpec::default(), 0).unwrap();
        assert_eq!(t.rows.len(), 32 * 8);
        assert!((t.a_integral.unwrap() + 4.0 * std::f64::consts::PI).abs() < 1e-3);
        let sq = ConvexDomain::cuboid(vec![1.0, 1.0]).unwrap();
        let t = eta_table(&sq, &OverlapSpec::default(), 0).unwrap();
        assert!(t.a_integral.is_none());
        assert!(t.to_csv().lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn dirichlet_rows() {
        let rows = dirichlet_table(&[1.0, 1.0, 1.0], 3.0 * std::f64::consts::PI.powi(2), 500.0, 50).unwrap();
        assert_eq!(rows.len(), 50);
        assert_eq!(rows[0].count, 0);
        assert_eq!(rows[49].count, 133);
        assert!(rows.iter().all(|r| (r.count as f64) <= r.polya));
        assert!(dirichlet_csv(&rows).starts_with("nu,count,polya,semiclassical,pl\n"));
    }
}
