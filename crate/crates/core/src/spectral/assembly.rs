//! Galerkin matrix of the convolution operator in the orthonormal
//! piecewise-constant basis `{ |c|^{-1/2} 1_c }`.
//!
//! On a uniform grid the entry for cells `i, j` depends only on the index
//! offset `delta = idx_i - idx_j`:
//!
//! ```text
//! int_{c_i} int_{c_j} K(x - y) dy dx = int_{[-h,h]^d} K(delta*h + w) prod_k (h_k - |w_k|) dw
//! ```
//!
//! (the tent is the overlap function of one cell). The right side is split
//! into the 2^d orthants of the tent. When the kernel singularity
//! `w = -delta*h` is a corner of an orthant box (self and adjacent cells) the
//! box is cut into pyramids with apex at the singularity; homogeneity of K
//! makes the radial integral along each pyramid exact, leaving a smooth face
//! integral for Gauss-Legendre. Every other orthant box is integrated with
//! tensor Gauss-Legendre after dyadic subdivision, finer for nearer boxes.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{AngularProfile, HelmholtzSymbol, KernelPair};
use crate::quadrature::GaussLegendre;
use crate::special::{ball_volume, gamma, norm, sphere_area};
use crate::spectral::Mesh;

/// Hard cap on the number of cells a dense assembly accepts.
pub const MAX_CELLS: usize = 5000;

/// Quadrature used for the singular self-cell integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfCellRule {
    /// Pyramid decomposition about the singularity (any kernel).
    #[default]
    Pyramid,
    /// Replace the cell by the ball of equal volume and use the closed-form
    /// ball self-energy (radial kernels only).
    EqualVolumeBall,
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    pub self_cell: SelfCellRule,
    pub max_cells: usize,
    /// Gauss-Legendre points per axis on pyramid faces.
    pub face_order: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            self_cell: SelfCellRule::Pyramid,
            max_cells: MAX_CELLS,
            face_order: 12,
        }
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn from_fn<F: Fn(usize, usize) -> f64>(n: usize, f: F) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        Self { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// `int_{B_rho} int_{B_rho} |x - y|^{alpha-d} dx dy` for a ball of radius rho in R^d.
///
/// Obtained from `int |z|^{alpha-d} eta_B(z) dz` with the lens volume eta_B:
/// `|S^{d-1}| |B^{d-1}| rho^{d+alpha} 2^alpha / alpha * B((alpha+1)/2, (d+1)/2)`.
pub fn ball_self_energy(d: usize, alpha: f64, rho: f64) -> f64 {
    let df = d as f64;
    let beta = gamma((alpha + 1.0) / 2.0) * gamma((df + 1.0) / 2.0) / gamma((alpha + df) / 2.0 + 1.0);
    sphere_area(d) * ball_volume(d - 1) * rho.powf(df + alpha) * 2f64.powf(alpha) / alpha * beta
}

type SmoothKernel<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

struct CellIntegrator<'a> {
    kernel: Option<&'a KernelPair>,
    /// Bounded remainder added to the homogeneous part.
    smooth: Option<SmoothKernel<'a>>,
    spacing: &'a [f64],
    face_rule: GaussLegendre,
    rules: Vec<GaussLegendre>,
}

impl<'a> CellIntegrator<'a> {
    fn new(kernel: Option<&'a KernelPair>, smooth: Option<SmoothKernel<'a>>, spacing: &'a [f64], face_order: usize) -> Self {
        Self {
            kernel,
            smooth,
            spacing,
            face_rule: GaussLegendre::new(face_order),
            rules: (0..=8).map(|n| GaussLegendre::new(n.max(1))).collect(),
        }
    }

    /// `int_{c} int_{c + delta*h} K(x - y)`, i.e. the un-normalised Galerkin entry.
    fn pair_integral(&self, delta: &[i64]) -> f64 {
        let d = delta.len();
        let h = self.spacing;
        let singular: Vec<f64> = delta.iter().zip(h).map(|(&k, &hk)| -(k as f64) * hk).collect();
        let reach = delta.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0);
        let (levels, order) = match reach {
            0..=2 => (2, 4),
            3..=6 => (1, 4),
            7..=12 => (0, 4),
            _ => (0, 3),
        };
        let mut total = 0.0;
        for orthant in 0..(1usize << d) {
            let signs: Vec<f64> = (0..d).map(|k| if (orthant >> k) & 1 == 1 { 1.0 } else { -1.0 }).collect();
            if let Some(kernel) = self.kernel {
                let corner = (0..d).all(|k| delta[k] == 0 || delta[k] as f64 == -signs[k]);
                total += if corner {
                    self.pyramid_orthant(kernel, &singular, &signs)
                } else {
                    self.regular_orthant(&|z| kernel.kernel_eval(z), delta, &signs, levels, order)
                };
            }
            if let Some(smooth) = self.smooth {
                total += self.regular_orthant(smooth, delta, &signs, levels, order);
            }
        }
        total
    }

    /// Tensor Gauss over the orthant box `prod [min(0, s_k h_k), max(0, s_k h_k)]`.
    fn regular_orthant(&self, kernel: &dyn Fn(&[f64]) -> f64, delta: &[i64], signs: &[f64], levels: u32, order: usize) -> f64 {
        let d = delta.len();
        let h = self.spacing;
        let parts = 1usize << levels;
        let rule = &self.rules[order];
        let q = rule.nodes.len();
        // 1-D sample positions and weights along each axis over the orthant
        let mut axis_pts: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
        for k in 0..d {
            let lo = if signs[k] > 0.0 { 0.0 } else { -h[k] };
            let width = h[k] / parts as f64;
            let mut pts = Vec::with_capacity(parts * q);
            for p in 0..parts {
                let a = lo + p as f64 * width;
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    pts.push((a + 0.5 * width * (x + 1.0), 0.5 * width * w));
                }
            }
            axis_pts.push(pts);
        }
        let offset: Vec<f64> = delta.iter().zip(h).map(|(&k, &hk)| k as f64 * hk).collect();
        let m = axis_pts[0].len();
        let total_pts = m.pow(d as u32);
        let mut z = vec![0.0; d];
        let mut sum = 0.0;
        for flat in 0..total_pts {
            let mut rem = flat;
            let mut weight = 1.0;
            for k in 0..d {
                let (w_k, wt) = axis_pts[k][rem % m];
                rem /= m;
                weight *= wt * (h[k] - w_k.abs());
                z[k] = offset[k] + w_k;
            }
            sum += weight * kernel(&z);
        }
        sum
    }

    /// Orthant box with the kernel singularity at its corner `apex`.
    fn pyramid_orthant(&self, kernel: &KernelPair, apex: &[f64], signs: &[f64]) -> f64 {
        let d = apex.len();
        let h = self.spacing;
        let alpha = kernel.alpha;
        // direction from the apex into the box along each axis
        let dir: Vec<f64> = (0..d)
            .map(|k| {
                let far = if apex[k] == 0.0 { signs[k] * h[k] } else { 0.0 };
                (far - apex[k]).signum()
            })
            .collect();
        // tent factor h_k - s_k w_k = a_k + b_k t along w = apex + t q
        let a: Vec<f64> = (0..d).map(|k| h[k] - signs[k] * apex[k]).collect();
        let mut total = 0.0;
        let rule = &self.face_rule;
        let q_pts = rule.nodes.len();
        let mut q = vec![0.0; d];
        let mut coeffs = vec![0.0; d + 1];
        for face in 0..d {
            let free: Vec<usize> = (0..d).filter(|&k| k != face).collect();
            let n_face = q_pts.pow(free.len() as u32);
            let mut face_sum = 0.0;
            for flat in 0..n_face {
                let mut rem = flat;
                let mut weight = 1.0;
                q[face] = dir[face] * h[face];
                for &k in &free {
                    let i = rem % q_pts;
                    rem /= q_pts;
                    let u = 0.5 * h[k] * (rule.nodes[i] + 1.0);
                    weight *= 0.5 * h[k] * rule.weights[i];
                    q[k] = dir[k] * u;
                }
                // prod_k (a_k + b_k t), b_k = -s_k q_k
                coeffs.iter_mut().for_each(|c| *c = 0.0);
                coeffs[0] = 1.0;
                for k in 0..d {
                    let b = -signs[k] * q[k];
                    for m in (0..=k + 1).rev() {
                        let lower = if m > 0 { coeffs[m - 1] } else { 0.0 };
                        coeffs[m] = coeffs[m] * a[k] + lower * b;
                    }
                }
                let radial: f64 = coeffs.iter().enumerate().map(|(m, c)| c / (alpha + m as f64)).sum();
                face_sum += weight * kernel.kernel_eval(&q) * radial;
            }
            total += h[face] * face_sum;
        }
        total
    }
}

/// Galerkin matrix of `kernel` on `mesh`.
pub fn assemble(mesh: &Mesh, kernel: &KernelPair, opts: AssemblyOptions) -> Result<SymmetricMatrix> {
    if kernel.dimension != mesh.dimension {
        return Err(Error::DimensionMismatch {
            expected: mesh.dimension,
            got: kernel.dimension,
        });
    }
    if opts.self_cell == SelfCellRule::EqualVolumeBall && !matches!(kernel.amplitude, AngularProfile::Constant(_)) {
        return Err(Error::InvalidParameter(
            "the equal-volume-ball self-cell rule needs a radial kernel".into(),
        ));
    }
    let source = Source {
        kernel: Some(kernel),
        smooth: None,
        radial: matches!(kernel.amplitude, AngularProfile::Constant(_)),
    };
    assemble_source(mesh, &source, opts)
}

/// Galerkin matrix of the operator with symbol `1 / (|xi|^2 + kappa^2)`.
///
/// Supported for d = 3, kernel `exp(-kappa r) / (4 pi r)`, split into the
/// Newtonian part (alpha = 2) and a bounded remainder, and for d = 1 with
/// kappa > 0, kernel `exp(-kappa |x|) / (2 kappa)`.
pub fn assemble_helmholtz(mesh: &Mesh, symbol: &HelmholtzSymbol, opts: AssemblyOptions) -> Result<SymmetricMatrix> {
    if symbol.dimension != mesh.dimension {
        return Err(Error::DimensionMismatch {
            expected: mesh.dimension,
            got: symbol.dimension,
        });
    }
    let kappa = symbol.kappa;
    match symbol.dimension {
        3 => {
            let newton = KernelPair::riesz(3, 2.0)?;
            let remainder = move |z: &[f64]| {
                let r = norm(z);
                if r * kappa < 1e-8 {
                    -kappa / (4.0 * PI)
                } else {
                    (-kappa * r).exp_m1() / (4.0 * PI * r)
                }
            };
            let source = Source {
                kernel: Some(&newton),
                smooth: (kappa > 0.0).then_some(&remainder as SmoothKernel),
                radial: true,
            };
            assemble_source(mesh, &source, opts)
        }
        1 if kappa > 0.0 => {
            let kernel = move |z: &[f64]| (-kappa * z[0].abs()).exp() / (2.0 * kappa);
            let source = Source {
                kernel: None,
                smooth: Some(&kernel),
                radial: true,
            };
            assemble_source(mesh, &source, opts)
        }
        d => Err(Error::InvalidParameter(format!(
            "Helmholtz operator discretisation is available for d = 3, and d = 1 with kappa > 0 (got d = {d}, kappa = {kappa})"
        ))),
    }
}

struct Source<'a> {
    kernel: Option<&'a KernelPair>,
    smooth: Option<SmoothKernel<'a>>,
    /// Kernel invariant under coordinate reflections.
    radial: bool,
}

fn assemble_source(mesh: &Mesh, source: &Source, opts: AssemblyOptions) -> Result<SymmetricMatrix> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if mesh.len() > opts.max_cells {
        return Err(Error::InvalidParameter(format!(
            "mesh has {} cells, dense assembly is capped at {}",
            mesh.len(),
            opts.max_cells
        )));
    }
    let table = OffsetTable::build(mesh, source, opts)?;
    let n = mesh.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let a = &mesh.cells[i].index;
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = table.get(a, &mesh.cells[j].index);
        }
    });
    Ok(SymmetricMatrix { n, data })
}

/// Normalised entries for every index offset present in the mesh.
struct OffsetTable {
    extent: Vec<i64>,
    values: Vec<f64>,
}

impl OffsetTable {
    fn build(mesh: &Mesh, source: &Source, opts: AssemblyOptions) -> Result<Self> {
        let d = mesh.dimension;
        let extent: Vec<i64> = (0..d)
            .map(|k| {
                let (lo, hi) = mesh
                    .cells
                    .iter()
                    .fold((i64::MAX, i64::MIN), |(lo, hi), c| (lo.min(c.index[k]), hi.max(c.index[k])));
                hi - lo
            })
            .collect();
        let sizes: Vec<usize> = extent.iter().map(|e| (2 * e + 1) as usize).collect();
        let total: usize = sizes.iter().product();
        let radial = source.radial;
        let integrator = CellIntegrator::new(source.kernel, source.smooth, &mesh.spacing, opts.face_order);
        let v = mesh.cell_volume;

        let decode = |flat: usize| -> Vec<i64> {
            let mut rem = flat;
            (0..d)
                .map(|k| {
                    let i = rem % sizes[k];
                    rem /= sizes[k];
                    i as i64 - extent[k]
                })
                .collect()
        };
        // canonical representative: |delta| componentwise for radial kernels,
        // otherwise the first non-zero component made positive (K even)
        let canonical = |delta: &[i64]| -> Vec<i64> {
            if radial {
                return delta.iter().map(|k| k.abs()).collect();
            }
            match delta.iter().find(|&&k| k != 0) {
                Some(&k) if k < 0 => delta.iter().map(|x| -x).collect(),
                _ => delta.to_vec(),
            }
        };
        let encode = |delta: &[i64]| -> usize {
            let mut flat = 0;
            for k in (0..d).rev() {
                flat = flat * sizes[k] + (delta[k] + extent[k]) as usize;
            }
            flat
        };

        let mut values: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let delta = decode(flat);
                if canonical(&delta) != delta {
                    return f64::NAN;
                }
                let ball_rule = opts.self_cell == SelfCellRule::EqualVolumeBall && delta.iter().all(|&k| k == 0);
                let raw = match (source.kernel, ball_rule) {
                    (Some(kernel), true) => {
                        let amp = kernel.amplitude.constant_value().unwrap_or(0.0);
                        let rho = (v / ball_volume(d)).powf(1.0 / d as f64);
                        let smooth = CellIntegrator::new(None, source.smooth, &mesh.spacing, opts.face_order);
                        amp * ball_self_energy(d, kernel.alpha, rho) + smooth.pair_integral(&delta)
                    }
                    _ => integrator.pair_integral(&delta),
                };
                raw / v
            })
            .collect();
        for flat in 0..total {
            if values[flat].is_nan() {
                let delta = decode(flat);
                values[flat] = values[encode(&canonical(&delta))];
            }
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Quadrature {
                estimate: *bad,
                tolerance: 0.0,
            });
        }
        Ok(Self { extent, values })
    }

    fn get(&self, a: &[i64], b: &[i64]) -> f64 {
        let mut flat = 0usize;
        for k in (0..a.len()).rev() {
            let size = (2 * self.extent[k] + 1) as usize;
            flat = flat * size + (a[k] - b[k] + self.extent[k]) as usize;
        }
        self.values[flat]
    }
}

/// Un-normalised pair integral `int_{c} int_{c + delta*h} K(x - y) dy dx` for
/// cells with the given spacing.
pub fn cell_pair_integral(kernel: &KernelPair, spacing: &[f64], delta: &[i64]) -> f64 {
    CellIntegrator::new(Some(kernel), None, spacing, AssemblyOptions::default().face_order).pair_integral(delta)
}
