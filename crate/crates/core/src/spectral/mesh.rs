use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, DomainKind};

/// One grid cell: integer grid index and centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: Vec<i64>,
    pub centroid: Vec<f64>,
}

/// Uniform axis-aligned grid cells whose centroids lie in the domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub dimension: usize,
    /// Cell side length along each axis.
    pub spacing: Vec<f64>,
    /// Lower corner of the cell with grid index 0.
    pub origin: Vec<f64>,
    pub cells: Vec<Cell>,
    pub cell_volume: f64,
    pub coverage_measure: f64,
    pub domain_measure: f64,
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Largest cell side, h.
    pub fn cell_size(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    /// |Omega| minus the covered volume (may be negative for staircase covers).
    pub fn coverage_deficit(&self) -> f64 {
        self.domain_measure - self.coverage_measure
    }

    /// Split every cell into 2^d children. The refined space contains the
    /// coarse piecewise-constant space.
    pub fn refine(&self) -> Mesh {
        let d = self.dimension;
        let spacing: Vec<f64> = self.spacing.iter().map(|h| h / 2.0).collect();
        let mut cells = Vec::with_capacity(self.cells.len() << d);
        for cell in &self.cells {
            for bits in 0..(1usize << d) {
                let index: Vec<i64> = (0..d).map(|k| 2 * cell.index[k] + ((bits >> k) & 1) as i64).collect();
                let centroid = (0..d)
                    .map(|k| self.origin[k] + (index[k] as f64 + 0.5) * spacing[k])
                    .collect();
                cells.push(Cell { index, centroid });
            }
        }
        let cell_volume = spacing.iter().product();
        Mesh {
            dimension: d,
            origin: self.origin.clone(),
            coverage_measure: cell_volume * cells.len() as f64,
            cells,
            cell_volume,
            spacing,
            domain_measure: self.domain_measure,
        }
    }
}

struct Grid {
    spacing: Vec<f64>,
    counts: Vec<usize>,
}

impl Grid {
    fn origin(&self) -> Vec<f64> {
        self.spacing
            .iter()
            .zip(&self.counts)
            .map(|(h, n)| -0.5 * h * *n as f64)
            .collect()
    }

    fn for_each_cell<F: FnMut(Vec<i64>, Vec<f64>)>(&self, mut f: F) {
        let d = self.counts.len();
        let origin = self.origin();
        let total: usize = self.counts.iter().product();
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let index: Vec<i64> = idx.iter().map(|&i| i as i64).collect();
            let centroid = (0..d).map(|k| origin[k] + (idx[k] as f64 + 0.5) * self.spacing[k]).collect();
            f(index, centroid);
            for (i, &count) in idx.iter_mut().zip(&self.counts) {
                *i += 1;
                if *i < count {
                    break;
                }
                *i = 0;
            }
        }
    }

    fn count_inside(&self, domain: &ConvexDomain) -> usize {
        let mut count = 0;
        self.for_each_cell(|_, c| {
            if domain.contains(&c) {
                count += 1;
            }
        });
        count
    }
}

fn candidate_grid(domain: &ConvexDomain, divisions: usize) -> Grid {
    let half = domain.half_widths();
    let widest = half.iter().copied().fold(0.0, f64::max);
    let h = 2.0 * widest / divisions as f64;
    match &domain.kind {
        DomainKind::Box { sides } => {
            let counts: Vec<usize> = sides.iter().map(|l| ((l / h).round() as usize).max(1)).collect();
            let spacing = sides.iter().zip(&counts).map(|(l, n)| l / *n as f64).collect();
            Grid { spacing, counts }
        }
        _ => {
            let counts = half.iter().map(|b| ((2.0 * b / h).ceil() as usize).max(1)).collect();
            Grid {
                spacing: vec![h; domain.dimension],
                counts,
            }
        }
    }
}

/// Uniform grid whose inside-cell count is as close as possible to `target_cells`.
///
/// Cells are kept when their centroid lies in the domain. Grids are centred on
/// the origin, so boxes are covered exactly.
pub fn build_mesh(domain: &ConvexDomain, target_cells: usize) -> Result<Mesh> {
    if target_cells < 16 {
        return Err(Error::InvalidParameter(format!(
            "target_cells must be >= 16, got {target_cells}"
        )));
    }
    let mut best: Option<(usize, usize)> = None;
    let mut divisions = 1;
    loop {
        let grid = candidate_grid(domain, divisions);
        let count = grid.count_inside(domain);
        let miss = count.abs_diff(target_cells);
        if count > 0 && best.is_none_or(|(_, m)| miss < m) {
            best = Some((divisions, miss));
        }
        if count > 2 * target_cells || divisions > 4 * target_cells {
            break;
        }
        divisions += 1;
    }
    let (divisions, _) = best.ok_or(Error::EmptyMesh)?;
    let grid = candidate_grid(domain, divisions);
    let mut cells = Vec::new();
    grid.for_each_cell(|index, centroid| {
        if domain.contains(&centroid) {
            cells.push(Cell { index, centroid });
        }
    });
    if cells.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let cell_volume: f64 = grid.spacing.iter().product();
    Ok(Mesh {
        dimension: domain.dimension,
        origin: grid.origin(),
        coverage_measure: cell_volume * cells.len() as f64,
        cells,
        cell_volume,
        spacing: grid.spacing,
        domain_measure: domain.measure(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn unit_square_grid() {
        let sq = ConvexDomain::cuboid(vec![1.0, 1.0]).unwrap();
        let mesh = build_mesh(&sq, 400).unwrap();
        assert_eq!(mesh.len(), 400);
        assert_relative_eq!(mesh.cell_size(), 0.05, max_relative = 1e-14);
        assert_relative_eq!(mesh.coverage_measure, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn disk_coverage() {
        let disk = ConvexDomain::ball(2, 1.0).unwrap();
        let mesh = build_mesh(&disk, 400).unwrap();
        assert!((mesh.len() as f64 - 400.0).abs() <= 0.2 * 400.0);
        assert!((mesh.coverage_measure - PI).abs() <= 0.05 * PI);
        for c in &mesh.cells {
            assert!(disk.contains(&c.centroid));
        }
    }

    #[test]
    fn counts_near_target_for_several_domains() {
        let domains = [
            ConvexDomain::ball(2, 1.0).unwrap(),
            ConvexDomain::ball(3, 1.0).unwrap(),
            ConvexDomain::ellipsoid(vec![2.0, 1.0]).unwrap(),
            ConvexDomain::cuboid(vec![1.0, 2.0, 3.0]).unwrap(),
        ];
        for dom in &domains {
            for target in [200, 1000, 2000] {
                let m = build_mesh(dom, target).unwrap();
                let rel = (m.len() as f64 - target as f64).abs() / target as f64;
                assert!(rel <= 0.2, "{} target {target}: got {}", dom.name(), m.len());
            }
        }
    }

    #[test]
    fn doubling_target_shrinks_cells_by_dimension_root() {
        for dom in [ConvexDomain::ball(2, 1.0).unwrap(), ConvexDomain::ball(3, 1.0).unwrap()] {
            let a = build_mesh(&dom, 800).unwrap();
            let b = build_mesh(&dom, 1600).unwrap();
            let ratio = b.cell_size() / a.cell_size();
            let expected = 0.5f64.powf(1.0 / dom.dimension as f64);
            assert!((ratio - expected).abs() < 0.1 * expected, "ratio {ratio}");
        }
        let seg = ConvexDomain::ball(1, 1.0).unwrap();
        let a = build_mesh(&seg, 100).unwrap();
        let b = build_mesh(&seg, 200).unwrap();
        assert_relative_eq!(b.cell_size() / a.cell_size(), 0.5, max_relative = 0.02);
    }

    #[test]
    fn rejects_small_targets_and_is_deterministic() {
        let disk = ConvexDomain::ball(2, 1.0).unwrap();
        assert!(build_mesh(&disk, 15).is_err());
        let a = build_mesh(&disk, 300).unwrap();
        let b = build_mesh(&disk, 300).unwrap();
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn refinement_preserves_coverage() {
        let disk = ConvexDomain::ball(2, 1.0).unwrap();
        let m = build_mesh(&disk, 100).unwrap();
        let r = m.refine();
        assert_eq!(r.len(), 4 * m.len());
        assert_relative_eq!(r.coverage_measure, m.coverage_measure, max_relative = 1e-12);
        assert_relative_eq!(r.cell_size(), m.cell_size() / 2.0);
    }
}
