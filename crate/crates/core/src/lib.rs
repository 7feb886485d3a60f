//! A finite-volume solver for a 2x2 system of conservation laws
//!
//!   u_t + (u phi(r))_x = 0,   v_t + (v phi(r))_x = 0,   r = sqrt(u^2 + v^2),
//!
//! using a first-order upwind spatial discretization and explicit
//! strong-stability-preserving time stepping, together with a verification
//! harness for the discrete a priori estimates the scheme satisfies
//! (norm decay, maximum principle, positivity and ratio bounds, angle
//! bounded variation, entropy dissipation) and refinement studies
//! (self-convergence rates and weak-solution residuals).

pub mod analysis;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod flux;
pub mod grid;
pub mod init;
pub mod integrator;
pub mod io;
pub mod pchip;
pub mod quad;
pub mod run;
pub mod scheme;
pub mod state;

pub use error::{Error, Result};
pub use flux::FluxModel;
pub use grid::{Boundary, Grid};
pub use state::State;
