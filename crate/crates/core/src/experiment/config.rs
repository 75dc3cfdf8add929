//! Experiment configuration, read from TOML.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, DEFAULT_MC_SAMPLES};
use crate::kernels::{AngularProfile, CircleTable, HelmholtzSymbol, KernelPair};
use crate::spectral::{AssemblyOptions, SelfCellRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for every Monte-Carlo path.
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainSpec,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub lambda_grid: GridSpec,
    #[serde(default)]
    pub bounds: BoundSelection,
    #[serde(default)]
    pub overlap: OverlapSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Ball {
        dimension: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipsoid {
        semi_axes: Vec<f64>,
    },
    Box {
        sides: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn build(&self) -> Result<ConvexDomain> {
        match self {
            DomainSpec::Ball { dimension, radius } => ConvexDomain::ball(*dimension, *radius),
            DomainSpec::Ellipsoid { semi_axes } => ConvexDomain::ellipsoid(semi_axes.clone()),
            DomainSpec::Box { sides } => ConvexDomain::cuboid(sides.clone()),
        }
    }
}

/// Kernel choice. Custom kernels are planar: the angular profiles are sampled
/// at the equally spaced angles `2 pi k / n` and interpolated trigonometrically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Riesz {
        alpha: f64,
    },
    Helmholtz {
        kappa: f64,
    },
    Custom {
        alpha: f64,
        /// Samples of the angular profile of K.
        amplitude: Vec<f64>,
        /// Samples of f in the symbol `f(theta) |xi|^-alpha`.
        symbol_f: Vec<f64>,
        /// Samples of the correction profile g, enabling the two-term lower bound.
        #[serde(default)]
        symbol_g: Option<Vec<f64>>,
    },
}

/// A kernel ready for assembly.
#[derive(Debug, Clone)]
pub enum BuiltKernel {
    Homogeneous(KernelPair),
    Helmholtz(HelmholtzSymbol),
}

impl KernelSpec {
    pub fn build(&self, dimension: usize) -> Result<BuiltKernel> {
        match self {
            KernelSpec::Riesz { alpha } => Ok(BuiltKernel::Homogeneous(KernelPair::riesz(dimension, *alpha)?)),
            KernelSpec::Helmholtz { kappa } => Ok(BuiltKernel::Helmholtz(HelmholtzSymbol::new(dimension, *kappa)?)),
            KernelSpec::Custom {
                alpha,
                amplitude,
                symbol_f,
                ..
            } => {
                if dimension != 2 {
                    return Err(Error::Config(format!(
                        "custom kernels are tabulated on the circle and need a planar domain (got d = {dimension})"
                    )));
                }
                let amp = AngularProfile::Circle(CircleTable::new(amplitude.clone())?);
                let f = AngularProfile::Circle(CircleTable::new(symbol_f.clone())?);
                Ok(BuiltKernel::Homogeneous(KernelPair::custom(2, *alpha, amp, f)?))
            }
        }
    }

    /// The correction profile for custom kernels, when supplied.
    pub fn correction_profile(&self) -> Result<Option<AngularProfile>> {
        match self {
            KernelSpec::Custom {
                symbol_g: Some(g), ..
            } => Ok(Some(AngularProfile::Circle(CircleTable::new(g.clone())?))),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SelfCellChoice {
    #[default]
    Pyramid,
    EqualVolumeBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    #[serde(default = "default_cells")]
    pub target_cells: usize,
    #[serde(default)]
    pub self_cell: SelfCellChoice,
}

fn default_cells() -> usize {
    2000
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            target_cells: default_cells(),
            self_cell: SelfCellChoice::default(),
        }
    }
}

impl MeshSpec {
    pub fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions {
            self_cell: match self.self_cell {
                SelfCellChoice::Pyramid => SelfCellRule::Pyramid,
                SelfCellChoice::EqualVolumeBall => SelfCellRule::EqualVolumeBall,
            },
            ..AssemblyOptions::default()
        }
    }
}

/// Geometric lambda grid. Without `min`/`max` the range is
/// `[lower_fraction, upper_fraction] * lambda_max` of the computed spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_lower")]
    pub lower_fraction: f64,
    #[serde(default = "default_upper")]
    pub upper_fraction: f64,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

fn default_points() -> usize {
    30
}
fn default_lower() -> f64 {
    1.0 / 200.0
}
fn default_upper() -> f64 {
    0.5
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: default_points(),
            lower_fraction: default_lower(),
            upper_fraction: default_upper(),
            min: None,
            max: None,
        }
    }
}

impl GridSpec {
    /// The grid for a spectrum with largest magnitude `lambda_max` (ignored
    /// when absolute bounds are configured).
    pub fn values(&self, lambda_max: Option<f64>) -> Result<Vec<f64>> {
        let (lo, hi) = match (self.min, self.max, lambda_max) {
            (Some(lo), Some(hi), _) => (lo, hi),
            (None, None, Some(top)) => (self.lower_fraction * top, self.upper_fraction * top),
            (None, None, None) => {
                return Err(Error::Config(
                    "lambda_grid needs min and max when no spectrum is computed".into(),
                ))
            }
            _ => return Err(Error::Config("lambda_grid.min and lambda_grid.max go together".into())),
        };
        geometric_grid(lo, hi, self.points)
    }
}

/// `points` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Config(format!("invalid lambda range [{lo}, {hi}]")));
    }
    match points {
        0 => Err(Error::Config("lambda grid needs at least one point".into())),
        1 => Ok(vec![lo]),
        n => {
            let ratio = (hi / lo).ln() / (n - 1) as f64;
            Ok((0..n)
                .map(|i| if i + 1 == n { hi } else { lo * (ratio * i as f64).exp() })
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSelection {
    #[serde(default = "yes")]
    pub upper: bool,
    #[serde(default = "yes")]
    pub lower: bool,
    #[serde(default = "yes")]
    pub counting: bool,
}

fn yes() -> bool {
    true
}

impl Default for BoundSelection {
    fn default() -> Self {
        Self {
            upper: true,
            lower: true,
            counting: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapChoice {
    /// Closed forms (every built-in domain has one).
    #[default]
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    #[serde(default)]
    pub method: OverlapChoice,
    #[serde(default = "default_samples")]
    pub samples: u64,
    /// Number of radii in the eta table, spaced evenly on (0, R/2].
    #[serde(default = "default_radii")]
    pub radii: usize,
}

fn default_samples() -> u64 {
    DEFAULT_MC_SAMPLES
}
fn default_radii() -> usize {
    8
}

impl Default for OverlapSpec {
    fn default() -> Self {
        Self {
            method: OverlapChoice::default(),
            samples: default_samples(),
            radii: default_radii(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack allowed by the dominance checks.
    #[serde(default)]
    pub dominance_relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { dominance_relative: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out")]
    pub dir: String,
}

fn default_out() -> String {
    "out".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let domain = self.domain.build().map_err(|e| Error::Config(e.to_string()))?;
        self.kernel
            .build(domain.dimension)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.kernel.correction_profile().map_err(|e| Error::Config(e.to_string()))?;
        if self.mesh.target_cells < 16 {
            return Err(Error::Config("mesh.target_cells must be >= 16".into()));
        }
        if self.lambda_grid.points == 0 {
            return Err(Error::Config("lambda_grid.points must be >= 1".into()));
        }
        let (lo, hi) = (self.lambda_grid.lower_fraction, self.lambda_grid.upper_fraction);
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config("lambda_grid fractions need 0 < lower < upper".into()));
        }
        if self.overlap.method == OverlapChoice::MonteCarlo && self.overlap.samples == 0 {
            return Err(Error::Config("overlap.samples must be positive".into()));
        }
        if self.tolerances.dominance_relative < 0.0 {
            return Err(Error::Config("tolerances.dominance_relative must be >= 0".into()));
        }
        Ok(())
    }

    /// Canonical TOML of the effective configuration.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = r#"
        seed = 7
        [domain]
        kind = "ball"
        dimension = 2
        [kernel]
        type = "riesz"
        alpha = 0.6
        [mesh]
        target_cells = 400
    "#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(DISK).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.domain, DomainSpec::Ball { dimension: 2, radius: 1.0 });
        assert_eq!(c.lambda_grid.points, 30);
        assert_eq!(c.mesh.self_cell, SelfCellChoice::Pyramid);
        assert!(c.bounds.upper && c.bounds.lower && c.bounds.counting);
        assert_eq!(c.output.dir, "out");
    }

    #[test]
    fn canonical_form_round_trips_and_hash_is_stable() {
        let c = ExperimentConfig::from_toml(DISK).unwrap();
        let again = ExperimentConfig::from_toml(&c.canonical().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash().unwrap(), again.hash().unwrap());
        assert_eq!(c.hash().unwrap().len(), 64);
        let mut other = c.clone();
        other.seed = 8;
        assert_ne!(c.hash().unwrap(), other.hash().unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("seed = 1").is_err());
        let unknown = DISK.replace("alpha = 0.6", "alpha = 0.6\nbeta = 1");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let bad_alpha = DISK.replace("alpha = 0.6", "alpha = 2.5");
        assert!(ExperimentConfig::from_toml(&bad_alpha).is_err());
        let custom3 = r#"
            [domain]
            kind = "ball"
            dimension = 3
            [kernel]
            type = "custom"
            alpha = 1.0
            amplitude = [1.0, 1.0, 1.0]
            symbol_f = [1.0, 1.0, 1.0]
        "#;
        assert!(matches!(ExperimentConfig::from_toml(custom3), Err(Error::Config(_))));
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(0.01, 1.0, 3).unwrap();
        assert_eq!(g[0], 0.01);
        assert_eq!(g[2], 1.0);
        assert!((g[1] - 0.1).abs() < 1e-15);
        assert!(geometric_grid(1.0, 0.5, 3).is_err());
        let spec = GridSpec::default();
        let v = spec.values(Some(2.0)).unwrap();
        assert_eq!(v.len(), 30);
        assert_eq!(v[0], 0.01);
        assert_eq!(v[29], 1.0);
        assert!(spec.values(None).is_err());
    }
}
