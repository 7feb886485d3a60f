//! Explicit strong-stability-preserving time integration of the semi-discrete
//! system under a CFL constraint.
//!
//! The SSP methods are convex combinations of forward Euler steps, so every
//! per-step bound the upwind update satisfies (positivity, max principle,
//! norm decay, ratio bounds) transfers from Euler to them unchanged. Each
//! Euler application is reported to observers through `on_stage`, which is
//! where stage-wise inequalities (the discrete entropy sign) are checked.

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::Grid;
use crate::scheme::{max_wave_speed, semidiscrete_rhs};
use crate::state::State;

/// Time-stepping method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Euler,
    Ssprk2,
    Ssprk3,
}

/// Integration parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub cfl: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// Simulation-time interval between snapshots; 0 snapshots every step.
    pub snapshot_every: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Ssprk3,
            cfl: 0.5,
            t_end: 0.5,
            max_steps: 10_000_000,
            snapshot_every: 0.05,
        }
    }
}

impl IntegratorConfig {
    /// `strict` additionally requires cfl <= 1 (the monotonicity range).
    pub fn validate(&self, strict_cfl: bool) -> Result<()> {
        if !(self.cfl > 0.0) || !self.cfl.is_finite() {
            return Err(Error::Config(format!("cfl must be positive, got {}", self.cfl)));
        }
        if strict_cfl && self.cfl > 1.0 {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1] for a monotone update, got {}",
                self.cfl
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        if !(self.snapshot_every >= 0.0) {
            return Err(Error::Config("snapshot_every must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Hooks invoked by [`integrate`]. All callbacks observe, never mutate.
pub trait Observer {
    /// After each accepted step.
    fn on_step(&mut self, _prev: &State, _next: &State, _dt: f64) {}
    /// After each forward-Euler application inside a step. `pre` and `post`
    /// are related by exactly one Euler update with step `dt`.
    fn on_stage(&mut self, _pre: &State, _post: &State, _dt: f64) {}
    /// At each snapshot time (including t = 0 and t_end).
    fn on_snapshot(&mut self, _state: &State) {}
}

/// Outcome of a run.
pub struct RunResult {
    pub final_state: State,
    pub snapshots: Vec<State>,
    pub dt_history: Vec<f64>,
    pub steps: usize,
    pub completed: bool,
    /// Present when the run aborted (NaN) or hit the step budget.
    pub failure: Option<String>,
}

fn euler_update(state: &State, tend: &crate::scheme::Tendency, dt: f64) -> State {
    let u = state
        .u
        .iter()
        .zip(tend.du.iter())
        .map(|(&x, &d)| x + dt * d)
        .collect();
    let v = state
        .v
        .iter()
        .zip(tend.dv.iter())
        .map(|(&x, &d)| x + dt * d)
        .collect();
    State { t: state.t + dt, u, v }
}

fn convex(t: f64, a: f64, sa: &State, b: f64, sb: &State) -> State {
    let u = sa
        .u
        .iter()
        .zip(sb.u.iter())
        .map(|(&x, &y)| a * x + b * y)
        .collect();
    let v = sa
        .v
        .iter()
        .zip(sb.v.iter())
        .map(|(&x, &y)| a * x + b * y)
        .collect();
    State { t, u, v }
}

fn euler_stage(
    state: &State,
    dt: f64,
    model: &FluxModel,
    grid: &Grid,
    observers: &mut [&mut dyn Observer],
) -> Result<State> {
    let tend = semidiscrete_rhs(state, model, grid)?;
    let next = euler_update(state, &tend, dt);
    for obs in observers.iter_mut() {
        obs.on_stage(state, &next, dt);
    }
    Ok(next)
}

/// One step of `method` from `state` with step size `dt`.
pub fn step(
    state: &State,
    dt: f64,
    model: &FluxModel,
    grid: &Grid,
    method: Method,
) -> Result<State> {
    step_observed(state, dt, model, grid, method, &mut [])
}

fn step_observed(
    state: &State,
    dt: f64,
    model: &FluxModel,
    grid: &Grid,
    method: Method,
    observers: &mut [&mut dyn Observer],
) -> Result<State> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Solver(format!("invalid step size {dt}")));
    }
    let t_next = state.t + dt;
    let next = match method {
        Method::Euler => euler_stage(state, dt, model, grid, observers)?,
        Method::Ssprk2 => {
            let s1 = euler_stage(state, dt, model, grid, observers)?;
            let s2 = euler_stage(&s1, dt, model, grid, observers)?;
            convex(t_next, 0.5, state, 0.5, &s2)
        }
        Method::Ssprk3 => {
            let s1 = euler_stage(state, dt, model, grid, observers)?;
            let s2 = euler_stage(&s1, dt, model, grid, observers)?;
            let s2 = convex(state.t + 0.5 * dt, 0.75, state, 0.25, &s2);
            let s3 = euler_stage(&s2, dt, model, grid, observers)?;
            convex(t_next, 1.0 / 3.0, state, 2.0 / 3.0, &s3)
        }
    };
    if !next.is_finite() {
        return Err(Error::Solver(format!("non-finite state after step to t = {t_next}")));
    }
    Ok(next)
}

/// Advance `state0` to `config.t_end`, invoking observers along the way.
///
/// The step size is cfl * dx / max_wave_speed, truncated to land exactly on
/// t_end. Snapshots are recorded at the first step boundary at or past each
/// multiple of `snapshot_every` (every step when it is 0), plus t = 0 and the
/// final time.
pub fn integrate(
    state0: State,
    model: &FluxModel,
    grid: &Grid,
    config: &IntegratorConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunResult> {
    config.validate(false)?;
    if !state0.is_finite() {
        return Err(Error::Input("initial state is not finite".into()));
    }
    let mut snapshots = vec![state0.clone()];
    for obs in observers.iter_mut() {
        obs.on_snapshot(&state0);
    }
    let mut dt_history = Vec::new();
    let mut state = state0;
    let mut steps = 0usize;
    let mut next_snapshot = if config.snapshot_every > 0.0 {
        config.snapshot_every
    } else {
        0.0
    };

    while state.t < config.t_end {
        if steps >= config.max_steps {
            let msg = format!("max_steps = {} exceeded at t = {}", config.max_steps, state.t);
            let final_state = state.clone();
            return Ok(RunResult {
                final_state,
                snapshots,
                dt_history,
                steps,
                completed: false,
                failure: Some(msg),
            });
        }
        let speed = max_wave_speed(&state, model);
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::Solver(format!("invalid wave speed {speed} at t = {}", state.t)));
        }
        let dt = (config.cfl * grid.dx / speed).min(config.t_end - state.t);
        let next = match step_observed(&state, dt, model, grid, config.method, observers) {
            Ok(next) => next,
            Err(e) => {
                // keep the last good snapshot trail
                let msg = format!("aborted at t = {}: {e}", state.t);
                let final_state = state.clone();
                snapshots.push(state);
                return Ok(RunResult {
                    final_state,
                    snapshots,
                    dt_history,
                    steps,
                    completed: false,
                    failure: Some(msg),
                });
            }
        };
        for obs in observers.iter_mut() {
            obs.on_step(&state, &next, dt);
        }
        dt_history.push(dt);
        steps += 1;
        state = next;
        let due = config.snapshot_every == 0.0
            || state.t >= next_snapshot
            || state.t >= config.t_end;
        if due {
            snapshots.push(state.clone());
            for obs in observers.iter_mut() {
                obs.on_snapshot(&state);
            }
            if config.snapshot_every > 0.0 {
                while next_snapshot <= state.t {
                    next_snapshot += config.snapshot_every;
                }
            }
        }
    }
    Ok(RunResult {
        final_state: state,
        snapshots,
        dt_history,
        steps,
        completed: true,
        failure: None,
    })
}
