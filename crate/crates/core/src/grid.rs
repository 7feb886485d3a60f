//! Uniform 1D mesh.

use crate::error::{Error, Result};

/// Ghost-cell policy at the domain edges.
///
/// The upwind stencil only reaches one cell to the left; outflow copies the
/// edge cell, periodic wraps around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Outflow,
    Periodic,
}

/// Uniform grid of `n_cells` cells on `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub dx: f64,
    pub boundary: Boundary,
}

/// Cap on the cell count; keeps hostile configs from allocating unbounded
/// memory.
pub const MAX_CELLS: usize = 100_000_000;

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || !(x_max > x_min) {
            return Err(Error::Config(format!(
                "invalid grid extent [{x_min}, {x_max}]"
            )));
        }
        if n_cells == 0 || n_cells > MAX_CELLS {
            return Err(Error::Config(format!("invalid cell count {n_cells}")));
        }
        let dx = (x_max - x_min) / n_cells as f64;
        if !(dx > 0.0) {
            return Err(Error::Config("grid spacing underflows to zero".into()));
        }
        Ok(Grid { x_min, x_max, n_cells, dx, boundary })
    }

    /// Center of cell j: x_min + (j + 1/2) dx.
    pub fn cell_center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx
    }

    /// Left interface x_{j-1/2} of cell j.
    pub fn cell_left(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    /// Right interface x_{j+1/2} of cell j.
    pub fn cell_right(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 1.0) * self.dx
    }

    /// A grid with twice the cells over the same extent.
    pub fn refined(&self) -> Grid {
        Grid::new(self.x_min, self.x_max, 2 * self.n_cells, self.boundary)
            .expect("refinement of a valid grid is valid")
    }

    /// True when `self` is the exact 2:1 coarsening of `fine`.
    pub fn is_coarsening_of(&self, fine: &Grid) -> bool {
        self.x_min == fine.x_min
            && self.x_max == fine.x_max
            && self.boundary == fine.boundary
            && 2 * self.n_cells == fine.n_cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_and_interfaces() {
        let g = Grid::new(-2.0, 2.0, 4, Boundary::Outflow).unwrap();
        assert_eq!(g.dx, 1.0);
        assert_eq!(g.cell_center(0), -1.5);
        assert_eq!(g.cell_left(0), -2.0);
        assert_eq!(g.cell_right(3), 2.0);
        assert_eq!(g.cell_center(2), g.cell_left(2) + 0.5 * g.dx);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Grid::new(1.0, 1.0, 10, Boundary::Outflow).is_err());
        assert!(Grid::new(0.0, 1.0, 0, Boundary::Outflow).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 10, Boundary::Outflow).is_err());
    }

    #[test]
    fn refinement_relation() {
        let g = Grid::new(0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let f = g.refined();
        assert!(g.is_coarsening_of(&f));
        assert!(!f.is_coarsening_of(&g));
    }
}
