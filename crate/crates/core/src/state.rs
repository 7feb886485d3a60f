//! Conserved state storage, cell-average projection, polar decomposition.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quad::gauss5;

/// Below this radius a cell counts as zero for the angle rule.
pub const R_ZERO_TOL: f64 = 1e-14;

/// Angle assigned when every cell to the right is also zero; the value is
/// immaterial because u = v = 0 there.
pub const ZERO_STATE_ANGLE: f64 = std::f64::consts::FRAC_PI_4;

/// Paired cell averages (u_j, v_j) at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(t: f64, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Input("u and v arrays differ in length".into()));
        }
        Ok(State { t, u, v })
    }

    pub fn n_cells(&self) -> usize {
        self.u.len()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|x| x.is_finite()) && self.v.iter().all(|x| x.is_finite())
    }

    /// Radius r_j = sqrt(u_j^2 + v_j^2).
    pub fn radius(&self, j: usize) -> f64 {
        (self.u[j] * self.u[j] + self.v[j] * self.v[j]).sqrt()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|j| self.radius(j)).collect()
    }

    /// Number of cells where a component dips below -tol.
    pub fn positivity_violations(&self, tol: f64) -> usize {
        self.u
            .iter()
            .zip(self.v.iter())
            .filter(|(&u, &v)| u < -tol || v < -tol)
            .count()
    }
}

/// Polar view: r_j and the angle in [0, pi/2].
#[derive(Debug, Clone, PartialEq)]
pub struct PolarState {
    pub r: Vec<f64>,
    pub angle: Vec<f64>,
}

/// Polar decomposition with the zero-radius angle rule: a zero cell copies
/// the angle of the nearest cell to its right with r above tolerance; if no
/// such cell exists the conventional value pi/4 is used.
///
/// Slightly negative components (>= -R_ZERO_TOL roundoff) are clamped to
/// zero before the angle is taken, so angles always land in [0, pi/2].
pub fn to_polar(state: &State) -> PolarState {
    let n = state.n_cells();
    let mut r = vec![0.0; n];
    let mut angle = vec![0.0; n];
    let mut anchor: Option<f64> = None;
    for j in (0..n).rev() {
        r[j] = state.radius(j);
        if r[j] > R_ZERO_TOL {
            let u = state.u[j].max(0.0);
            let v = state.v[j].max(0.0);
            let a = v.atan2(u).clamp(0.0, std::f64::consts::FRAC_PI_2);
            angle[j] = a;
            anchor = Some(a);
        } else {
            angle[j] = anchor.unwrap_or(ZERO_STATE_ANGLE);
        }
    }
    PolarState { r, angle }
}

/// Reconstruction u = r cos(angle), v = r sin(angle).
pub fn from_polar(polar: &PolarState, t: f64) -> State {
    let u = polar
        .r
        .iter()
        .zip(polar.angle.iter())
        .map(|(&r, &a)| r * a.cos())
        .collect();
    let v = polar
        .r
        .iter()
        .zip(polar.angle.iter())
        .map(|(&r, &a)| r * a.sin())
        .collect();
    State { t, u, v }
}

/// Cell-average projection of (u0, v0) onto the grid with 5-point
/// Gauss-Legendre quadrature per cell.
pub fn project_initial(
    u0: &dyn Fn(f64) -> f64,
    v0: &dyn Fn(f64) -> f64,
    grid: &Grid,
) -> Result<State> {
    project_initial_with_breaks(u0, v0, &[], grid)
}

/// Same as [`project_initial`] but splitting each cell at the listed
/// breakpoints, so piecewise-polynomial data (Riemann jumps) is averaged
/// exactly.
pub fn project_initial_with_breaks(
    u0: &dyn Fn(f64) -> f64,
    v0: &dyn Fn(f64) -> f64,
    breakpoints: &[f64],
    grid: &Grid,
) -> Result<State> {
    let n = grid.n_cells;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for j in 0..n {
        let xl = grid.cell_left(j);
        let xr = grid.cell_right(j);
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > xl && b < xr)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(xl);
        edges.extend(cuts);
        edges.push(xr);
        let mut su = 0.0;
        let mut sv = 0.0;
        for w in edges.windows(2) {
            su += gauss5(u0, w[0], w[1]);
            sv += gauss5(v0, w[0], w[1]);
        }
        u[j] = su / grid.dx;
        v[j] = sv / grid.dx;
        if !u[j].is_finite() || !v[j].is_finite() {
            return Err(Error::Input(format!(
                "initial-data quadrature non-finite in cell {j}"
            )));
        }
    }
    Ok(State { t: 0.0, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn project_constant_exact() {
        let g = Grid::new(-1.0, 1.0, 7, Boundary::Outflow).unwrap();
        let s = project_initial(&|_| 3.0, &|_| 0.5, &g).unwrap();
        assert!(s.u.iter().all(|&x| (x - 3.0).abs() < 1e-14));
        assert!(s.v.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        assert_eq!(s.t, 0.0);
    }

    #[test]
    fn project_linear_one_cell() {
        let g = Grid::new(0.0, 1.0, 1, Boundary::Outflow).unwrap();
        let s = project_initial(&|x| x, &|_| 1.0, &g).unwrap();
        assert!((s.u[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn project_riemann_straddling_cell() {
        // single cell [-0.25, 0.75], jump at 0: average = 0.25*1 + 0.75*2
        let g = Grid::new(-0.25, 0.75, 1, Boundary::Outflow).unwrap();
        let u0 = |x: f64| if x < 0.0 { 1.0 } else { 2.0 };
        let s = project_initial_with_breaks(&u0, &|_| 1.0, &[0.0], &g).unwrap();
        assert!((s.u[0] - 1.75).abs() < 1e-14, "{}", s.u[0]);
    }

    #[test]
    fn projection_conservative() {
        let g = Grid::new(-2.0, 2.0, 64, Boundary::Outflow).unwrap();
        let u0 = |x: f64| 0.3 + (-x * x).exp();
        let s = project_initial(&u0, &u0, &g).unwrap();
        let sum: f64 = s.u.iter().sum::<f64>() * g.dx;
        let exact = crate::quad::simpson(u0, -2.0, 2.0, 1024.0);
        assert!((sum - exact).abs() < 1e-10);
    }

    #[test]
    fn polar_examples() {
        let s = State::new(0.0, vec![1.0, 1.0, 2.0], vec![1.0, 0.0, 0.0]).unwrap();
        let p = to_polar(&s);
        assert!((p.r[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((p.angle[0] - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(p.r[1], 1.0);
        assert_eq!(p.angle[1], 0.0);
    }

    #[test]
    fn zero_radius_copies_right_anchor() {
        let s = State::new(
            0.0,
            vec![1.0, 0.0, 0.3f64.cos()],
            vec![0.0, 0.0, 0.3f64.sin()],
        )
        .unwrap();
        let p = to_polar(&s);
        assert!((p.angle[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn all_zero_right_tail_gets_convention() {
        let s = State::new(0.0, vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]).unwrap();
        let p = to_polar(&s);
        assert_eq!(p.angle[1], ZERO_STATE_ANGLE);
        assert_eq!(p.angle[2], ZERO_STATE_ANGLE);
    }

    #[test]
    fn from_polar_examples() {
        let p = PolarState {
            r: vec![2f64.sqrt(), 0.0, 2.0],
            angle: vec![FRAC_PI_4, 1.3, FRAC_PI_2],
        };
        let s = from_polar(&p, 0.0);
        assert!((s.u[0] - 1.0).abs() < 1e-15);
        assert!((s.v[0] - 1.0).abs() < 1e-15);
        assert_eq!((s.u[1], s.v[1]), (0.0, 0.0));
        assert!(s.u[2].abs() < 1e-15);
        assert!((s.v[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn positivity_violation_count() {
        let s = State::new(0.0, vec![1.0, -1e-10], vec![1.0, 1.0]).unwrap();
        assert_eq!(s.positivity_violations(1e-13), 1);
        assert_eq!(s.positivity_violations(1e-9), 0);
    }
}
