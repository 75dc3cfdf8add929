//! Pipelines behind the command-line front-end: configuration, bound curves
//! and report files.

mod config;
mod tables;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{counting_bound, lower_bound_two_term, upper_bound_general, upper_bound_homogeneous};
use crate::error::Result;
use crate::geometry::ConvexDomain;
use crate::kernels::{lower_symbol, lower_symbol_with_g, LowerBoundSymbol};
use crate::quadrature::SphereQuadrature;
use crate::spectral::{build_mesh, helmholtz_spectrum, kernel_spectrum, DiscreteSpectrum, Family, MeshSummary};

pub use config::{
    geometric_grid, BoundSelection, BuiltKernel, DomainSpec, ExperimentConfig, GridSpec, KernelSpec, MeshSpec,
    OutputSpec, OverlapChoice, OverlapSpec, SelfCellChoice, Tolerances,
};
pub use tables::{
    dirichlet_csv, dirichlet_table, eta_table, lemma_table, DirichletRow, EtaRow, EtaTable, LemmaRow, LemmaTable,
};

/// Column order of `report.csv`.
pub const REPORT_COLUMNS: [&str; 7] = [
    "lambda",
    "riesz_empirical",
    "upper_bound",
    "lower_leading",
    "lower_second",
    "counting_empirical",
    "counting_bound",
];

/// One lambda of a bound curve. Bounds that do not apply are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub lambda: f64,
    pub riesz_empirical: f64,
    pub upper_bound: Option<f64>,
    pub lower_leading: Option<f64>,
    pub lower_second: Option<f64>,
    pub counting_empirical: usize,
    pub counting_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub timestamp: String,
    pub version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub domain: String,
    pub kernel: String,
    pub mesh: MeshSummary,
    pub null_threshold: f64,
    pub lambda_max: f64,
    pub positive_count: usize,
    pub negative_count: usize,
    /// gamma of the two-term lower bound, when it applies.
    pub gamma: Option<f64>,
}

/// Outcome of the dominance checks: lambdas where a bound is exceeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Dominance {
    pub upper_violations: Vec<f64>,
    pub counting_violations: Vec<f64>,
}

impl Dominance {
    pub fn holds(&self) -> bool {
        self.upper_violations.is_empty() && self.counting_violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub metadata: Metadata,
    pub rows: Vec<BoundRow>,
    pub dominance: Dominance,
}

/// Result of [`run`]: the curve and the spectrum it was computed from.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub curve: BoundCurve,
    pub spectrum: DiscreteSpectrum,
}

/// Mesh, assemble and diagonalise the configured operator.
pub fn compute_spectrum(config: &ExperimentConfig) -> Result<(ConvexDomain, BuiltKernel, DiscreteSpectrum)> {
    config.validate()?;
    let domain = config.domain.build()?;
    let kernel = config.kernel.build(domain.dimension)?;
    let mesh = build_mesh(&domain, config.mesh.target_cells)?;
    let opts = config.mesh.assembly_options();
    let spectrum = match &kernel {
        BuiltKernel::Homogeneous(k) => kernel_spectrum(&mesh, k, opts)?,
        BuiltKernel::Helmholtz(h) => helmholtz_spectrum(&mesh, h, opts)?,
    };
    Ok((domain, kernel, spectrum))
}

fn lower_symbol_for(config: &ExperimentConfig, domain: &ConvexDomain, kernel: &BuiltKernel) -> Result<Option<LowerBoundSymbol>> {
    let BuiltKernel::Homogeneous(k) = kernel else {
        return Ok(None);
    };
    let d = domain.dimension;
    if !config.bounds.lower || !domain.strictly_convex_smooth() || !(k.alpha < d as f64 - 1.0) {
        return Ok(None);
    }
    let rule = SphereQuadrature::default_for(d)?;
    if let Some(g) = config.kernel.correction_profile()? {
        return Ok(Some(lower_symbol_with_g(k, g, &rule)?));
    }
    if k.is_radial() {
        let expansion = domain.expansion_on(&rule)?;
        return Ok(Some(lower_symbol(k, &expansion)?));
    }
    Ok(None)
}

/// Analytic bounds at one lambda. Bounds that do not apply are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub lambda: f64,
    pub upper_bound: Option<f64>,
    pub lower_leading: Option<f64>,
    pub lower_second: Option<f64>,
    pub counting_bound: Option<f64>,
}

/// Column order of `bounds.csv`.
pub const ANALYTIC_COLUMNS: [&str; 5] = ["lambda", "upper_bound", "lower_leading", "lower_second", "counting_bound"];

/// Every selected bound on `grid`, without a spectrum. Also returns gamma
/// when the two-term lower bound applies.
pub fn analytic_bounds(
    config: &ExperimentConfig,
    domain: &ConvexDomain,
    kernel: &BuiltKernel,
    grid: &[f64],
) -> Result<(Vec<AnalyticRow>, Option<f64>)> {
    let measure = domain.measure();
    let lower = lower_symbol_for(config, domain, kernel)?;
    let rows = grid
        .iter()
        .map(|&lambda| {
            let upper_bound = if config.bounds.upper {
                Some(match kernel {
                    BuiltKernel::Homogeneous(k) => upper_bound_homogeneous(k, measure, lambda)?,
                    BuiltKernel::Helmholtz(h) => upper_bound_general(h, measure, lambda)?,
                })
            } else {
                None
            };
            let (lower_leading, lower_second) = match (&lower, kernel) {
                (Some(ls), BuiltKernel::Homogeneous(k)) => {
                    let t = lower_bound_two_term(k, domain, ls, lambda)?;
                    (Some(t.leading), Some(t.second))
                }
                _ => (None, None),
            };
            let counting_bound = match kernel {
                BuiltKernel::Homogeneous(k) if config.bounds.counting && k.is_radial() => {
                    Some(counting_bound(k, measure, lambda)?)
                }
                _ => None,
            };
            Ok(AnalyticRow {
                lambda,
                upper_bound,
                lower_leading,
                lower_second,
                counting_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, lower.map(|l| l.gamma)))
}

/// CSV of [`analytic_bounds`] rows.
pub fn analytic_csv(rows: &[AnalyticRow]) -> String {
    let mut out = ANALYTIC_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(r.lambda),
            format_optional(r.upper_bound),
            format_optional(r.lower_leading),
            format_optional(r.lower_second),
            format_optional(r.counting_bound),
        );
    }
    out
}

/// Evaluate every selected bound on the lambda grid of `spectrum`.
pub fn bound_curve(
    config: &ExperimentConfig,
    domain: &ConvexDomain,
    kernel: &BuiltKernel,
    spectrum: &DiscreteSpectrum,
) -> Result<BoundCurve> {
    let grid = config.lambda_grid.values(Some(spectrum.max_abs()))?;
    let (analytic, gamma) = analytic_bounds(config, domain, kernel, &grid)?;
    let slack = 1.0 + config.tolerances.dominance_relative;
    let mut dominance = Dominance::default();
    let rows: Vec<BoundRow> = analytic
        .into_iter()
        .map(|a| {
            let riesz_empirical = spectrum.riesz_mean(a.lambda, Family::Both);
            let counting_empirical = spectrum.counting(a.lambda);
            if a.upper_bound.is_some_and(|u| riesz_empirical > u * slack) {
                dominance.upper_violations.push(a.lambda);
            }
            if a.counting_bound.is_some_and(|c| counting_empirical as f64 > c * slack) {
                dominance.counting_violations.push(a.lambda);
            }
            BoundRow {
                lambda: a.lambda,
                riesz_empirical,
                upper_bound: a.upper_bound,
                lower_leading: a.lower_leading,
                lower_second: a.lower_second,
                counting_empirical,
                counting_bound: a.counting_bound,
            }
        })
        .collect();
    let mesh = spectrum
        .mesh
        .clone()
        .ok_or_else(|| crate::Error::InvalidParameter("spectrum carries no mesh metadata".into()))?;
    let metadata = Metadata {
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config.hash()?,
        config: config.clone(),
        domain: domain.name().to_string(),
        kernel: spectrum.kernel.clone(),
        mesh,
        null_threshold: spectrum.null_threshold,
        lambda_max: spectrum.max_abs(),
        positive_count: spectrum.positive_count,
        negative_count: spectrum.negative_count,
        gamma,
    };
    Ok(BoundCurve {
        metadata,
        rows,
        dominance,
    })
}

/// Full pipeline: spectrum, bound curve and dominance checks.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let (domain, kernel, spectrum) = compute_spectrum(config)?;
    let curve = bound_curve(config, &domain, &kernel, &spectrum)?;
    Ok(RunOutput { curve, spectrum })
}

/// 17 significant digits; round-trips exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_optional(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl BoundCurve {
    pub fn to_csv(&self) -> String {
        let mut out = REPORT_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                format_float(r.lambda),
                format_float(r.riesz_empirical),
                format_optional(r.upper_bound),
                format_optional(r.lower_leading),
                format_optional(r.lower_second),
                r.counting_empirical,
                format_optional(r.counting_bound),
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Write `report.csv`, `report.json` and `spectrum.csv` into `dir`.
pub fn write_report(dir: &Path, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.csv"), output.curve.to_csv())?;
    std::fs::write(dir.join("report.json"), output.curve.to_json()?)?;
    std::fs::write(dir.join("spectrum.csv"), output.spectrum.to_csv())?;
    Ok(())
}

/// Write `spectrum.csv` and `spectrum.json` into `dir`.
pub fn write_spectrum(dir: &Path, spectrum: &DiscreteSpectrum) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("spectrum.csv"), spectrum.to_csv())?;
    std::fs::write(dir.join("spectrum.json"), spectrum.to_json()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_disk() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
            [domain]
            kind = "ball"
            dimension = 2
            [kernel]
            type = "riesz"
            alpha = 0.6
            [mesh]
            target_cells = 200
            [lambda_grid]
            points = 12
            "#,
        )
        .unwrap()
    }

    #[test]
    fn disk_run_satisfies_upper_and_counting_bounds() {
        let out = run(&small_disk()).unwrap();
        let c = &out.curve;
        assert_eq!(c.rows.len(), 12);
        assert!(c.dominance.holds(), "{:?}", c.dominance);
        assert!(c.metadata.gamma.unwrap() < 0.0);
        for r in &c.rows {
            assert!(r.lower_leading.is_some() && r.lower_second.unwrap() < 0.0);
            assert_eq!(r.lower_leading, r.upper_bound);
        }
        let csv = c.to_csv();
        assert!(csv.starts_with("lambda,riesz_empirical,upper_bound,lower_leading,lower_second"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn csv_and_json_payloads_agree() {
        let out = run(&small_disk()).unwrap();
        let back: BoundCurve = serde_json::from_str(&out.curve.to_json().unwrap()).unwrap();
        assert_eq!(back, out.curve);
        for (line, row) in out.curve.to_csv().lines().skip(1).zip(&back.rows) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells[0].parse::<f64>().unwrap(), row.lambda);
            assert_eq!(cells[1].parse::<f64>().unwrap(), row.riesz_empirical);
            assert_eq!(cells[2].parse::<f64>().unwrap(), row.upper_bound.unwrap());
            assert_eq!(cells[5].parse::<usize>().unwrap(), row.counting_empirical);
        }
    }

    #[test]
    fn box_domain_reports_no_lower_bound() {
        let mut config = small_disk();
        config.domain = DomainSpec::Box { sides: vec![1.0, 1.0] };
        let out = run(&config).unwrap();
        assert!(out.curve.rows.iter().all(|r| r.lower_leading.is_none()));
        assert!(out.curve.metadata.gamma.is_none());
        assert!(out.curve.to_csv().lines().nth(1).unwrap().contains(",,,"));
    }
}
