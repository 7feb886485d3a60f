//! The semi-discrete upwind right-hand side.
//!
//! Both components are transported with speed phi(r_j) > 0, so the backward
//! difference D- is the correct one-sided stencil:
//!
//!   u_j' = -D-(phi(r_j) u_j),   v_j' = -D-(phi(r_j) v_j).

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::{Boundary, Grid};
use crate::state::State;

/// Time derivative of the state arrays.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

/// Backward difference (w_j - w_{j-1}) / dx with the ghost value at j = 0
/// given by the boundary policy.
pub fn backward_difference(w: &[f64], j: usize, dx: f64, boundary: Boundary) -> f64 {
    let prev = if j > 0 {
        w[j - 1]
    } else {
        match boundary {
            Boundary::Outflow => w[0],
            Boundary::Periodic => w[w.len() - 1],
        }
    };
    (w[j] - prev) / dx
}

/// Evaluate the upwind tendency at `state`.
pub fn semidiscrete_rhs(state: &State, model: &FluxModel, grid: &Grid) -> Result<Tendency> {
    let n = state.n_cells();
    debug_assert_eq!(n, grid.n_cells);
    let mut flux_u = vec![0.0; n];
    let mut flux_v = vec![0.0; n];
    for j in 0..n {
        let r = state.radius(j);
        let phi = model.phi(r);
        if !phi.is_finite() {
            return Err(Error::Solver(format!("phi non-finite at cell {j} (r = {r})")));
        }
        flux_u[j] = phi * state.u[j];
        flux_v[j] = phi * state.v[j];
    }
    let du = (0..n)
        .map(|j| -backward_difference(&flux_u, j, grid.dx, grid.boundary))
        .collect();
    let dv = (0..n)
        .map(|j| -backward_difference(&flux_v, j, grid.dx, grid.boundary))
        .collect();
    Ok(Tendency { du, dv })
}

/// Max over cells of f'(r_j) = phi(r_j) + r_j phi'(r_j); the CFL speed.
pub fn max_wave_speed(state: &State, model: &FluxModel) -> f64 {
    (0..state.n_cells())
        .map(|j| {
            let r = state.radius(j);
            model.phi(r) + r * model.phi_prime(r)
        })
        .fold(0.0, f64::max)
}
