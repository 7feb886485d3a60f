//! Grid-refinement self-convergence and weak-solution residuals.
//!
//! No exact solution of the nonlinear system is assumed: convergence is
//! measured Cauchy-style against the next-finer grid, and the distributional
//! form of the equations is tested against smooth compactly supported test
//! functions.

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::Grid;
use crate::state::State;

/// Conservative 2:1 restriction: each coarse value is the mean of its two
/// children.
pub fn restrict(fine: &State, coarse_grid: &Grid) -> Result<State> {
    if fine.n_cells() != 2 * coarse_grid.n_cells {
        return Err(Error::Input(format!(
            "restrict: fine grid has {} cells, expected {}",
            fine.n_cells(),
            2 * coarse_grid.n_cells
        )));
    }
    let half = |w: &[f64]| -> Vec<f64> {
        w.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    };
    Ok(State { t: fine.t, u: half(&fine.u), v: half(&fine.v) })
}

/// Self-convergence table: per level the L1 distance between this level's
/// solution and the restriction of the next-finer one, with log2 rates.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceTable {
    pub resolutions: Vec<usize>,
    pub l1_errors_r: Vec<f64>,
    pub l1_errors_u: Vec<f64>,
    pub l1_errors_v: Vec<f64>,
    /// rates[k] = log2(errors[k] / errors[k+1]); NaN where an error is zero.
    pub rates_r: Vec<f64>,
    pub rates_u: Vec<f64>,
    pub rates_v: Vec<f64>,
    pub complete: bool,
}

fn l1_diff(a: &[f64], b: &[f64], dx: f64) -> f64 {
    dx * a.iter().zip(b.iter()).map(|(&x, &y)| (x - y).abs()).sum::<f64>()
}

fn rates_of(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 && w[1] > 0.0 {
                (w[0] / w[1]).log2()
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Assemble the table from per-level (grid, final state) pairs, coarsest
/// first, each level doubling the previous.
pub fn convergence_table(levels: &[(Grid, State)]) -> Result<ConvergenceTable> {
    if levels.len() < 3 {
        return Err(Error::Config(format!(
            "convergence ladder needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    for w in levels.windows(2) {
        if !w[0].0.is_coarsening_of(&w[1].0) {
            return Err(Error::Config(format!(
                "ladder levels {} and {} are not a 2:1 refinement pair",
                w[0].0.n_cells, w[1].0.n_cells
            )));
        }
    }
    let mut err_r = Vec::new();
    let mut err_u = Vec::new();
    let mut err_v = Vec::new();
    for w in levels.windows(2) {
        let (coarse_grid, coarse) = &w[0];
        let (_, fine) = &w[1];
        let restricted = restrict(fine, coarse_grid)?;
        err_u.push(l1_diff(&restricted.u, &coarse.u, coarse_grid.dx));
        err_v.push(l1_diff(&restricted.v, &coarse.v, coarse_grid.dx));
        err_r.push(l1_diff(&restricted.radii(), &coarse.radii(), coarse_grid.dx));
    }
    Ok(ConvergenceTable {
        resolutions: levels.iter().map(|(g, _)| g.n_cells).collect(),
        rates_r: rates_of(&err_r),
        rates_u: rates_of(&err_u),
        rates_v: rates_of(&err_v),
        l1_errors_r: err_r,
        l1_errors_u: err_u,
        l1_errors_v: err_v,
        complete: true,
    })
}

/// Run the ladder through `run_level` and assemble the table.
pub fn self_convergence<F>(resolutions: &[usize], run_level: F) -> Result<ConvergenceTable>
where
    F: Fn(usize) -> Result<(Grid, State)>,
{
    if resolutions.len() < 3 {
        return Err(Error::Config(format!(
            "convergence ladder needs at least 3 levels, got {}",
            resolutions.len()
        )));
    }
    if resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Config("resolutions must strictly double".into()));
    }
    let levels: Vec<(Grid, State)> = resolutions
        .iter()
        .map(|&n| run_level(n))
        .collect::<Result<_>>()?;
    convergence_table(&levels)
}

/// A smooth space-time test function with compact support.
pub trait TestFunction {
    fn psi(&self, x: f64, t: f64) -> f64;
    fn psi_t(&self, x: f64, t: f64) -> f64;
    fn psi_x(&self, x: f64, t: f64) -> f64;
    /// Closure of the support as ((x_lo, x_hi), (t_lo, t_hi)).
    fn support(&self) -> ((f64, f64), (f64, f64));
    fn id(&self) -> String;
}

fn bump(z: f64) -> f64 {
    if z.abs() < 1.0 {
        (-1.0 / (1.0 - z * z)).exp()
    } else {
        0.0
    }
}

fn bump_prime(z: f64) -> f64 {
    if z.abs() < 1.0 {
        let d = 1.0 - z * z;
        (-1.0 / d).exp() * (-2.0 * z / (d * d))
    } else {
        0.0
    }
}

/// Tensor product of two scaled bumps exp(-1/(1 - z^2)).
#[derive(Debug, Clone, serde::Serialize)]
pub struct BumpTestFunction {
    pub x_center: f64,
    pub x_width: f64,
    pub t_center: f64,
    pub t_width: f64,
}

impl BumpTestFunction {
    pub fn new(x_center: f64, x_width: f64, t_center: f64, t_width: f64) -> Result<Self> {
        if !(x_width > 0.0 && t_width > 0.0) {
            return Err(Error::Input("bump widths must be positive".into()));
        }
        Ok(BumpTestFunction { x_center, x_width, t_center, t_width })
    }
}

impl TestFunction for BumpTestFunction {
    fn psi(&self, x: f64, t: f64) -> f64 {
        bump((x - self.x_center) / self.x_width) * bump((t - self.t_center) / self.t_width)
    }

    fn psi_t(&self, x: f64, t: f64) -> f64 {
        bump((x - self.x_center) / self.x_width)
            * bump_prime((t - self.t_center) / self.t_width)
            / self.t_width
    }

    fn psi_x(&self, x: f64, t: f64) -> f64 {
        bump_prime((x - self.x_center) / self.x_width)
            * bump((t - self.t_center) / self.t_width)
            / self.x_width
    }

    fn support(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.x_center - self.x_width, self.x_center + self.x_width),
            (self.t_center - self.t_width, self.t_center + self.t_width),
        )
    }

    fn id(&self) -> String {
        format!(
            "bump(x:{}+-{}, t:{}+-{})",
            self.x_center, self.x_width, self.t_center, self.t_width
        )
    }
}

/// Weak-form residual values of the two equations for one test function.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WeakResidualReport {
    pub test_function_id: String,
    pub residual_u: f64,
    pub residual_v: f64,
}

fn check_support(psi: &dyn TestFunction, grid: &Grid, t_end: f64) -> Result<()> {
    let ((xl, xr), (tl, tr)) = psi.support();
    if xl <= grid.x_min || xr >= grid.x_max {
        return Err(Error::Input(format!(
            "test-function spatial support [{xl}, {xr}] touches the domain [{}, {}]",
            grid.x_min, grid.x_max
        )));
    }
    if tl <= 0.0 || tr >= t_end {
        return Err(Error::Input(format!(
            "test-function time support [{tl}, {tr}] touches [0, {t_end}]"
        )));
    }
    Ok(())
}

/// Space integrand of the weak form at one state:
///   dx * sum_j [ w_j psi_t(x_j, t) + w_j phi(r_j) psi_x(x_j, t) ]
fn weak_flux(state: &State, model: &FluxModel, psi: &dyn TestFunction, grid: &Grid) -> (f64, f64) {
    let mut fu = 0.0;
    let mut fv = 0.0;
    for j in 0..state.n_cells() {
        let x = grid.cell_center(j);
        let pt = psi.psi_t(x, state.t);
        let px = psi.psi_x(x, state.t);
        if pt == 0.0 && px == 0.0 {
            continue;
        }
        let phi = model.phi(state.radius(j));
        fu += state.u[j] * pt + state.u[j] * phi * px;
        fv += state.v[j] * pt + state.v[j] * phi * px;
    }
    (grid.dx * fu, grid.dx * fv)
}

/// Evaluate the weak residual over a stored trajectory (snapshot list in
/// time order, starting at t = 0). Time integration is the trapezoid rule
/// over the snapshot times; the initial-data term uses the t = 0 snapshot.
pub fn weak_residual(
    snapshots: &[State],
    model: &FluxModel,
    psi: &dyn TestFunction,
    grid: &Grid,
    t_end: f64,
) -> Result<WeakResidualReport> {
    if snapshots.len() < 2 {
        return Err(Error::Input("weak_residual needs at least two snapshots".into()));
    }
    check_support(psi, grid, t_end)?;
    let init = &snapshots[0];
    let mut ru = 0.0;
    let mut rv = 0.0;
    for j in 0..init.n_cells() {
        let p = psi.psi(grid.cell_center(j), 0.0);
        ru += init.u[j] * p;
        rv += init.v[j] * p;
    }
    ru *= grid.dx;
    rv *= grid.dx;
    let mut prev = weak_flux(&snapshots[0], model, psi, grid);
    for w in snapshots.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let cur = weak_flux(&w[1], model, psi, grid);
        ru += 0.5 * (prev.0 + cur.0) * dt;
        rv += 0.5 * (prev.1 + cur.1) * dt;
        prev = cur;
    }
    Ok(WeakResidualReport { test_function_id: psi.id(), residual_u: ru, residual_v: rv })
}

/// Observer accumulating the weak residual on the fly, equivalent to
/// [`weak_residual`] over every-step snapshots without storing them.
pub struct WeakResidualAccumulator<'a> {
    model: &'a FluxModel,
    psi: &'a dyn TestFunction,
    grid: &'a Grid,
    residual_u: f64,
    residual_v: f64,
    prev_flux: Option<(f64, f64)>,
    started: bool,
}

impl<'a> WeakResidualAccumulator<'a> {
    pub fn new(
        model: &'a FluxModel,
        psi: &'a dyn TestFunction,
        grid: &'a Grid,
        t_end: f64,
    ) -> Result<Self> {
        check_support(psi, grid, t_end)?;
        Ok(WeakResidualAccumulator {
            model,
            psi,
            grid,
            residual_u: 0.0,
            residual_v: 0.0,
            prev_flux: None,
            started: false,
        })
    }

    pub fn report(&self) -> WeakResidualReport {
        WeakResidualReport {
            test_function_id: self.psi.id(),
            residual_u: self.residual_u,
            residual_v: self.residual_v,
        }
    }

    fn start(&mut self, init: &State) {
        for j in 0..init.n_cells() {
            let p = self.psi.psi(self.grid.cell_center(j), 0.0);
            self.residual_u += self.grid.dx * init.u[j] * p;
            self.residual_v += self.grid.dx * init.v[j] * p;
        }
        self.prev_flux = Some(weak_flux(init, self.model, self.psi, self.grid));
        self.started = true;
    }
}

impl crate::integrator::Observer for WeakResidualAccumulator<'_> {
    fn on_step(&mut self, prev: &State, next: &State, dt: f64) {
        if !self.started {
            self.start(prev);
        }
        let cur = weak_flux(next, self.model, self.psi, self.grid);
        let pf = self.prev_flux.expect("started");
        self.residual_u += 0.5 * (pf.0 + cur.0) * dt;
        self.residual_v += 0.5 * (pf.1 + cur.1) * dt;
        self.prev_flux = Some(cur);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn restrict_examples() {
        let coarse = Grid::new(0.0, 1.0, 1, Boundary::Outflow).unwrap();
        let fine = State::new(0.3, vec![1.0, 3.0], vec![2.0, 2.0]).unwrap();
        let r = restrict(&fine, &coarse).unwrap();
        assert_eq!(r.u, vec![2.0]);
        assert_eq!(r.v, vec![2.0]);
        assert_eq!(r.t, 0.3);

        let c4 = Grid::new(0.0, 1.0, 4, Boundary::Outflow).unwrap();
        let f = State::new(0.0, vec![5.0; 8], vec![1.0; 8]).unwrap();
        let r = restrict(&f, &c4).unwrap();
        assert!(r.u.iter().all(|&x| x == 5.0));

        assert!(restrict(&f, &coarse).is_err());
    }

    #[test]
    fn restrict_conservative() {
        let coarse = Grid::new(0.0, 2.0, 8, Boundary::Outflow).unwrap();
        let fine_vals: Vec<f64> = (0..16).map(|j| (j as f64 * 0.37).sin() + 2.0).collect();
        let fine = State::new(0.0, fine_vals.clone(), fine_vals).unwrap();
        let r = restrict(&fine, &coarse).unwrap();
        let dxc = coarse.dx;
        let dxf = dxc / 2.0;
        let sc: f64 = r.u.iter().sum::<f64>() * dxc;
        let sf: f64 = fine.u.iter().sum::<f64>() * dxf;
        assert!((sc - sf).abs() < 1e-14);
    }

    #[test]
    fn constant_solution_zero_errors() {
        let mk = |n: usize| {
            let g = Grid::new(0.0, 1.0, n, Boundary::Outflow).unwrap();
            let s = State::new(0.5, vec![2.0; n], vec![1.0; n]).unwrap();
            (g, s)
        };
        let table = convergence_table(&[mk(8), mk(16), mk(32)]).unwrap();
        assert!(table.l1_errors_r.iter().all(|&e| e == 0.0));
        assert!(table.rates_r.iter().all(|r| r.is_nan()));
    }

    #[test]
    fn ladder_validation() {
        let run = |n: usize| {
            let g = Grid::new(0.0, 1.0, n, Boundary::Outflow).unwrap();
            let s = State::new(0.0, vec![1.0; n], vec![1.0; n]).unwrap();
            Ok((g, s))
        };
        assert!(self_convergence(&[10, 20], run).is_err());
        assert!(self_convergence(&[10, 20, 30], run).is_err());
        assert!(self_convergence(&[10, 20, 40], run).is_ok());
    }

    #[test]
    fn weak_residual_zero_test_function() {
        struct Zero;
        impl TestFunction for Zero {
            fn psi(&self, _: f64, _: f64) -> f64 {
                0.0
            }
            fn psi_t(&self, _: f64, _: f64) -> f64 {
                0.0
            }
            fn psi_x(&self, _: f64, _: f64) -> f64 {
                0.0
            }
            fn support(&self) -> ((f64, f64), (f64, f64)) {
                ((0.4, 0.6), (0.4, 0.6))
            }
            fn id(&self) -> String {
                "zero".into()
            }
        }
        let g = Grid::new(0.0, 1.0, 10, Boundary::Outflow).unwrap();
        let s0 = State::new(0.0, vec![1.0; 10], vec![1.0; 10]).unwrap();
        let mut s1 = s0.clone();
        s1.t = 1.0;
        let rep = weak_residual(&[s0, s1], &FluxModel::affine(), &Zero, &g, 1.0).unwrap();
        assert_eq!(rep.residual_u, 0.0);
        assert_eq!(rep.residual_v, 0.0);
    }

    #[test]
    fn weak_residual_constant_solution_small() {
        // Constant exact solution: the weak integrals telescope to zero up
        // to quadrature error of the smooth psi.
        let g = Grid::new(-2.0, 2.0, 400, Boundary::Outflow).unwrap();
        let psi = BumpTestFunction::new(0.0, 1.0, 0.5, 0.3).unwrap();
        let n_t = 200;
        let t_end = 1.0;
        let snaps: Vec<State> = (0..=n_t)
            .map(|k| State {
                t: t_end * k as f64 / n_t as f64,
                u: vec![1.5; 400],
                v: vec![0.5; 400],
            })
            .collect();
        let rep = weak_residual(&snaps, &FluxModel::affine(), &psi, &g, t_end).unwrap();
        assert!(rep.residual_u.abs() < 1e-4, "{}", rep.residual_u);
        assert!(rep.residual_v.abs() < 1e-4, "{}", rep.residual_v);
    }

    #[test]
    fn weak_residual_support_validation() {
        let g = Grid::new(-1.0, 1.0, 10, Boundary::Outflow).unwrap();
        let psi = BumpTestFunction::new(0.9, 0.5, 0.5, 0.2).unwrap();
        let s0 = State::new(0.0, vec![1.0; 10], vec![1.0; 10]).unwrap();
        let mut s1 = s0.clone();
        s1.t = 1.0;
        assert!(weak_residual(&[s0.clone(), s1.clone()], &FluxModel::affine(), &psi, &g, 1.0).is_err());
        let psi = BumpTestFunction::new(0.0, 0.5, 0.9, 0.2).unwrap();
        assert!(weak_residual(&[s0, s1], &FluxModel::affine(), &psi, &g, 1.0).is_err());
    }

    #[test]
    fn weak_residual_linear_in_psi() {
        struct Combo {
            a: f64,
            p1: BumpTestFunction,
            b: f64,
            p2: BumpTestFunction,
        }
        impl TestFunction for Combo {
            fn psi(&self, x: f64, t: f64) -> f64 {
                self.a * self.p1.psi(x, t) + self.b * self.p2.psi(x, t)
            }
            fn psi_t(&self, x: f64, t: f64) -> f64 {
                self.a * self.p1.psi_t(x, t) + self.b * self.p2.psi_t(x, t)
            }
            fn psi_x(&self, x: f64, t: f64) -> f64 {
                self.a * self.p1.psi_x(x, t) + self.b * self.p2.psi_x(x, t)
            }
            fn support(&self) -> ((f64, f64), (f64, f64)) {
                let (x1, t1) = self.p1.support();
                let (x2, t2) = self.p2.support();
                ((x1.0.min(x2.0), x1.1.max(x2.1)), (t1.0.min(t2.0), t1.1.max(t2.1)))
            }
            fn id(&self) -> String {
                "combo".into()
            }
        }
        let g = Grid::new(-2.0, 2.0, 100, Boundary::Outflow).unwrap();
        let p1 = BumpTestFunction::new(-0.5, 0.8, 0.4, 0.3).unwrap();
        let p2 = BumpTestFunction::new(0.5, 0.6, 0.6, 0.3).unwrap();
        let combo = Combo { a: 2.0, p1: p1.clone(), b: -3.0, p2: p2.clone() };
        let snaps: Vec<State> = (0..=50)
            .map(|k| {
                let t = k as f64 / 50.0;
                let u: Vec<f64> = (0..100).map(|j| 1.0 + 0.1 * ((j as f64 + t).sin())).collect();
                let v: Vec<f64> = (0..100).map(|j| 1.0 + 0.1 * ((j as f64 - t).cos())).collect();
                State { t, u, v }
            })
            .collect();
        let m = FluxModel::affine();
        let r1 = weak_residual(&snaps, &m, &p1, &g, 1.0).unwrap();
        let r2 = weak_residual(&snaps, &m, &p2, &g, 1.0).unwrap();
        let rc = weak_residual(&snaps, &m, &combo, &g, 1.0).unwrap();
        assert!((rc.residual_u - (2.0 * r1.residual_u - 3.0 * r2.residual_u)).abs() < 1e-12);
        assert!((rc.residual_v - (2.0 * r1.residual_v - 3.0 * r2.residual_v)).abs() < 1e-12);
    }
}
