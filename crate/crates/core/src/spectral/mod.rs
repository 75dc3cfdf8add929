//! Galerkin discretisation of convolution operators on a domain, signed
//! eigenvalues, empirical Riesz means and counting functions.

mod assembly;
mod mesh;

use std::fmt::Write as _;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{HelmholtzSymbol, KernelPair};

pub use assembly::{
    assemble, assemble_helmholtz, ball_self_energy, cell_pair_integral, AssemblyOptions, SelfCellRule,
    SymmetricMatrix, MAX_CELLS,
};
pub use mesh::{build_mesh, Cell, Mesh};

/// Eigenvalues with `|lambda| <= NULL_RELATIVE * max |lambda|` are numerically null.
pub const NULL_RELATIVE: f64 = 1e-10;

/// Which eigenvalue family a Riesz mean runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Both,
    Positive,
    Negative,
}

/// Mesh facts carried alongside a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub dimension: usize,
    pub cells: usize,
    pub cell_size: f64,
    pub coverage_measure: f64,
    pub domain_measure: f64,
    pub coverage_deficit: f64,
}

impl From<&Mesh> for MeshSummary {
    fn from(mesh: &Mesh) -> Self {
        Self {
            dimension: mesh.dimension,
            cells: mesh.len(),
            cell_size: mesh.cell_size(),
            coverage_measure: mesh.coverage_measure,
            domain_measure: mesh.domain_measure,
            coverage_deficit: mesh.coverage_deficit(),
        }
    }
}

/// Signed eigenvalues, sorted by magnitude (largest first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    pub eigenvalues: Vec<f64>,
    pub null_threshold: f64,
    /// Number of leading eigenvalues above the null threshold.
    pub retained: usize,
    pub positive_count: usize,
    pub negative_count: usize,
    pub mesh: Option<MeshSummary>,
    pub kernel: String,
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(matrix: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = matrix.n;
    let scale = matrix.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if matrix.max_asymmetry() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(format!(
            "matrix is not symmetric (max asymmetry {:e})",
            matrix.max_asymmetry()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mat = Mat::<f64>::from_fn(n, n, |i, j| matrix.get(i, j));
    mat.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenSolver)
}

impl DiscreteSpectrum {
    /// Sort, flag numerically null eigenvalues and count signs.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, mesh: Option<MeshSummary>, kernel: impl Into<String>) -> Self {
        eigenvalues.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
        let largest = eigenvalues.first().map_or(0.0, |x| x.abs());
        let null_threshold = NULL_RELATIVE * largest;
        let retained = eigenvalues.iter().take_while(|x| x.abs() > null_threshold).count();
        let kept = &eigenvalues[..retained];
        Self {
            positive_count: kept.iter().filter(|&&x| x > 0.0).count(),
            negative_count: kept.iter().filter(|&&x| x < 0.0).count(),
            eigenvalues,
            null_threshold,
            retained,
            mesh,
            kernel: kernel.into(),
        }
    }

    pub fn from_matrix(matrix: &SymmetricMatrix, mesh: Option<MeshSummary>, kernel: impl Into<String>) -> Result<Self> {
        Ok(Self::from_eigenvalues(symmetric_eigenvalues(matrix)?, mesh, kernel))
    }

    /// Eigenvalues above the null threshold.
    pub fn retained_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.retained]
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |x| x.abs())
    }

    /// Largest positive eigenvalue, or 0.
    pub fn max_positive(&self) -> f64 {
        self.retained_eigenvalues().iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `sum (|lambda_k| - lambda)_+` over retained eigenvalues of the family.
    pub fn riesz_mean(&self, lambda: f64, family: Family) -> f64 {
        self.retained_eigenvalues()
            .iter()
            .filter(|&&x| match family {
                Family::Both => true,
                Family::Positive => x > 0.0,
                Family::Negative => x < 0.0,
            })
            .map(|x| (x.abs() - lambda).max(0.0))
            .sum()
    }

    /// Number of retained eigenvalues strictly above `lambda`.
    pub fn counting(&self, lambda: f64) -> usize {
        self.retained_eigenvalues().iter().filter(|&&x| x > lambda).count()
    }

    /// CSV with header `k,lambda_k`, k from 1 in magnitude order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda_k\n");
        for (k, x) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{},{:.16e}", k + 1, x);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Assemble and diagonalise a homogeneous-kernel operator on `mesh`.
pub fn kernel_spectrum(mesh: &Mesh, kernel: &KernelPair, opts: AssemblyOptions) -> Result<DiscreteSpectrum> {
    let matrix = assemble(mesh, kernel, opts)?;
    let label = if kernel.is_radial() {
        format!("riesz(d={}, alpha={})", kernel.dimension, kernel.alpha)
    } else {
        format!("custom(d={}, alpha={})", kernel.dimension, kernel.alpha)
    };
    DiscreteSpectrum::from_matrix(&matrix, Some(mesh.into()), label)
}

/// Assemble and diagonalise the Helmholtz-symbol operator on `mesh`.
pub fn helmholtz_spectrum(mesh: &Mesh, symbol: &HelmholtzSymbol, opts: AssemblyOptions) -> Result<DiscreteSpectrum> {
    let matrix = assemble_helmholtz(mesh, symbol, opts)?;
    let label = format!("helmholtz(d={}, kappa={})", symbol.dimension, symbol.kappa);
    DiscreteSpectrum::from_matrix(&matrix, Some(mesh.into()), label)
}

/// Observed convergence order from values on three meshes with cell sizes
/// `h, h/ratio, h/ratio^2`. `None` when the differences do not shrink.
pub fn convergence_order(coarse: f64, medium: f64, fine: f64, ratio: f64) -> Option<f64> {
    let d1 = (coarse - medium).abs();
    let d2 = (medium - fine).abs();
    if d2 == 0.0 || d1 <= d2 {
        return None;
    }
    Some((d1 / d2).ln() / ratio.ln())
}

/// Richardson extrapolation of a quantity with known order `p`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    let f = ratio.powf(order);
    fine + (fine - coarse) / (f - 1.0)
}
