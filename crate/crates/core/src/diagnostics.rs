//! Discrete a priori estimates along a run.
//!
//! Every quantity the scheme's norm-decay, maximum-principle, ratio,
//! angle-BV and entropy-dissipation estimates refer to is computed here,
//! together with the inequality checks (each with an explicit slack knob
//! absorbing time discretization and roundoff).

use crate::error::{Error, Result};
use crate::flux::{EntropyPair, FluxModel};
use crate::grid::{Boundary, Grid};
use crate::integrator::Observer;
use crate::quad::simpson;
use crate::state::{to_polar, PolarState, State, R_ZERO_TOL};

/// Discrete L1, L2, Linf norms of r.
pub fn norms(state: &State, grid: &Grid) -> (f64, f64, f64) {
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut linf = 0.0f64;
    for j in 0..state.n_cells() {
        let r = state.radius(j);
        l1 += r;
        l2 += r * r;
        linf = linf.max(r);
    }
    (grid.dx * l1, (grid.dx * l2).sqrt(), linf)
}

/// Componentwise extrema of u_j / v_j, skipping (and counting) cells where
/// v_j is at or below the zero tolerance.
pub fn ratio_bounds(state: &State) -> Result<(f64, f64, usize)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut skipped = 0usize;
    for j in 0..state.n_cells() {
        if state.v[j] <= R_ZERO_TOL {
            skipped += 1;
            continue;
        }
        let q = state.u[j] / state.v[j];
        lo = lo.min(q);
        hi = hi.max(q);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Input("ratio undefined: no cell with v above tolerance".into()));
    }
    Ok((lo, hi, skipped))
}

/// Total variation of the angle over interior differences.
pub fn angle_bv(polar: &PolarState) -> f64 {
    polar.angle.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Ghost radius to the left of cell 0.
fn ghost_left(values: &[f64], boundary: Boundary) -> f64 {
    match boundary {
        Boundary::Outflow => values[0],
        Boundary::Periodic => values[values.len() - 1],
    }
}

/// Entropy residual between two consecutive snapshots:
///   residual_j = [eta(r_j(next)) - eta(r_j(prev))]/dt + D-(q(r_j(prev))).
///
/// Returns the per-cell array and its dx-weighted integral. For the first
/// pair this approximates -e_{1,j}, so a monotone (Euler) update keeps it
/// nonpositive up to roundoff.
pub fn entropy_residual(
    prev: &State,
    next: &State,
    dt: f64,
    model: &FluxModel,
    pair: &EntropyPair,
    grid: &Grid,
) -> Result<(Vec<f64>, f64)> {
    let n = prev.n_cells();
    if next.n_cells() != n || n != grid.n_cells {
        return Err(Error::Input("entropy_residual: snapshot grids differ".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Input(format!("entropy_residual: invalid dt = {dt}")));
    }
    let r_prev = prev.radii();
    let r_next = next.radii();
    let q_prev: Vec<f64> = r_prev
        .iter()
        .map(|&r| pair.q(model, r))
        .collect::<Result<_>>()?;
    let mut residual = vec![0.0; n];
    for j in 0..n {
        let d_eta = (pair.eta(model, r_next[j])? - pair.eta(model, r_prev[j])?) / dt;
        let qm = if j > 0 { q_prev[j - 1] } else { ghost_left(&q_prev, grid.boundary) };
        residual[j] = d_eta + (q_prev[j] - qm) / grid.dx;
    }
    let integral = grid.dx * residual.iter().sum::<f64>();
    Ok((residual, integral))
}

/// The three discrete dissipation expressions at one state, with the
/// intermediate values r_{j-1/2}, U_{j-1/2} replaced by arithmetic means.
///
/// e1 is the projection form orthogonal to U (nonnegative by construction),
/// e2 uses f'', e3 uses q2''. Cells whose mean radius is below tolerance get
/// zero and are counted in the returned flag.
pub struct DissipationTerms {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e3: Vec<f64>,
    pub undefined_cells: usize,
}

pub fn dissipation_terms(state: &State, model: &FluxModel, grid: &Grid) -> DissipationTerms {
    let n = state.n_cells();
    let mut e1 = vec![0.0; n];
    let mut e2 = vec![0.0; n];
    let mut e3 = vec![0.0; n];
    let mut undefined = 0usize;
    let r: Vec<f64> = state.radii();
    for j in 0..n {
        let (um, vm, rm) = if j > 0 {
            (state.u[j - 1], state.v[j - 1], r[j - 1])
        } else {
            match grid.boundary {
                Boundary::Outflow => (state.u[0], state.v[0], r[0]),
                Boundary::Periodic => (state.u[n - 1], state.v[n - 1], r[n - 1]),
            }
        };
        let du = (state.u[j] - um) / grid.dx;
        let dv = (state.v[j] - vm) / grid.dx;
        let dr = (r[j] - rm) / grid.dx;
        let r_half = 0.5 * (r[j] + rm);
        let u_half = 0.5 * (state.u[j] + um);
        let v_half = 0.5 * (state.v[j] + vm);
        if r_half <= R_ZERO_TOL {
            undefined += 1;
            continue;
        }
        let phi_m = model.phi(rm);
        // component of D-U orthogonal to U_{j-1/2}
        let uhat = (u_half / r_half, v_half / r_half);
        let along = du * uhat.0 + dv * uhat.1;
        let perp_sq = (du - along * uhat.0).powi(2) + (dv - along * uhat.1).powi(2);
        e1[j] = phi_m * grid.dx * perp_sq / r_half;
        e2[j] = 0.5 * grid.dx * model.flux_f_double_prime(r_half) * dr * dr;
        e3[j] = 0.5 * grid.dx * model.q2_double_prime(r_half) * dr * dr;
    }
    DissipationTerms { e1, e2, e3, undefined_cells: undefined }
}

/// Spatial part of the norm-decay dissipation budget at one state:
///   sum_j [ int_{r_{j-1}}^{r_j} (r_j^2 - s^2) phi'(s) ds
///           + dx^2 phi(r_{j-1}) ((D+ u_j)^2 + (D+ v_j)^2) ].
///
/// Nonnegative because phi > 0 and phi' >= 0. Multiplied by dt and summed
/// over steps this is the time-accumulated budget bounded by the initial
/// squared L2 norm of r.
pub fn rl1_budget_increment(state: &State, model: &FluxModel, grid: &Grid) -> f64 {
    let n = state.n_cells();
    let r = state.radii();
    let mut total = 0.0;
    for j in 0..n {
        let rm = if j > 0 { r[j - 1] } else { ghost_left(&r, grid.boundary) };
        let rj = r[j];
        total += simpson(|s| (rj * rj - s * s) * model.phi_prime(s), rm, rj, 256.0);

        let (up, vp) = if j + 1 < n {
            (state.u[j + 1], state.v[j + 1])
        } else {
            match grid.boundary {
                Boundary::Outflow => (state.u[n - 1], state.v[n - 1]),
                Boundary::Periodic => (state.u[0], state.v[0]),
            }
        };
        let du = up - state.u[j];
        let dv = vp - state.v[j];
        total += model.phi(rm) * (du * du + dv * dv);
    }
    total
}

/// Slack constants for the inequality checks. Each absorbs time
/// discretization and roundoff; defaults are the suite's pinned values.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SlackConfig {
    /// Relative per-step slack for L1/L2 decay.
    pub norm_decay_rel: f64,
    /// Absolute slack for the max principle.
    pub max_principle_abs: f64,
    /// Absolute slack for angle BV growth.
    pub angle_bv_abs: f64,
    /// Absolute widening of the initial ratio envelope [1/C, C].
    pub ratio_abs: f64,
    /// Absolute slack for the accumulated dissipation budget.
    pub budget_abs: f64,
    /// Cellwise upper bound on the first-pair entropy residual.
    pub entropy_cellwise: f64,
    /// Components may dip this far below zero.
    pub positivity_abs: f64,
}

impl Default for SlackConfig {
    fn default() -> Self {
        SlackConfig {
            norm_decay_rel: 1e-10,
            max_principle_abs: 1e-10,
            angle_bv_abs: 1e-8,
            ratio_abs: 1e-8,
            budget_abs: 1e-8,
            entropy_cellwise: 1e-10,
            positivity_abs: 1e-13,
        }
    }
}

/// Time series of the r norms.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub l1_r: Vec<f64>,
    pub l2_r: Vec<f64>,
    pub linf_r: Vec<f64>,
}

/// Time series of angle statistics.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct AngleSeries {
    pub times: Vec<f64>,
    pub bv: Vec<f64>,
    pub min_angle: Vec<f64>,
    pub max_angle: Vec<f64>,
}

/// Accumulated dissipation integrals.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct DissipationBudget {
    pub e1_integral: f64,
    pub e2_integral: f64,
    pub e3_integral: f64,
    pub rl1_budget: f64,
}

/// One inequality verdict.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub pass: bool,
    /// Worst signed violation (positive means the bound was exceeded).
    pub worst_violation: f64,
    /// Time at which the worst violation occurred.
    pub at_time: f64,
    pub detail: String,
}

/// Full verification report for one run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiagnosticsReport {
    pub norms: NormSeries,
    pub angles: AngleSeries,
    pub budget: DissipationBudget,
    pub initial_l2_sq: f64,
    pub initial_linf: f64,
    pub initial_bv: f64,
    pub initial_ratio_envelope: f64,
    pub ratio_min_seen: f64,
    pub ratio_max_seen: f64,
    pub ratio_skipped_cells: usize,
    pub min_component_seen: f64,
    pub worst_entropy_residual: f64,
    pub min_e1_seen: f64,
    pub checks: Vec<InequalityCheck>,
    pub all_pass: bool,
}

/// Per-step series mirroring the CSV series file.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct StepSeries {
    pub step: Vec<usize>,
    pub t: Vec<f64>,
    pub dt: Vec<f64>,
    pub l1_r: Vec<f64>,
    pub l2_r: Vec<f64>,
    pub linf_r: Vec<f64>,
    pub bv_angle: Vec<f64>,
    pub ratio_min: Vec<f64>,
    pub ratio_max: Vec<f64>,
}

/// Observer that accumulates every diagnostic along a run and produces the
/// per-inequality verdicts at the end.
pub struct DiagnosticsCollector {
    model: FluxModel,
    grid: Grid,
    slack: SlackConfig,
    entropy_pair: EntropyPair,
    initialized: bool,
    // initial envelope
    initial_l1: f64,
    initial_l2: f64,
    initial_l2_sq: f64,
    initial_linf: f64,
    initial_bv: f64,
    initial_ratio_envelope: f64,
    // previous-step norms for per-step decay checks
    prev_l1: f64,
    prev_l2: f64,
    // worst observations
    worst_l1_growth: (f64, f64),
    worst_l2_growth: (f64, f64),
    worst_linf: (f64, f64),
    worst_bv: (f64, f64),
    ratio_min_seen: f64,
    ratio_max_seen: f64,
    worst_ratio: (f64, f64),
    ratio_skipped: usize,
    min_component: (f64, f64),
    worst_entropy: (f64, f64),
    min_e1: (f64, f64),
    budget: DissipationBudget,
    norms: NormSeries,
    angles: AngleSeries,
    series: StepSeries,
    steps: usize,
    /// Accumulate e-term integrals and budget each step (costs one pass per
    /// step); off when only the cheap norm checks are wanted.
    pub track_dissipation: bool,
}

impl DiagnosticsCollector {
    pub fn new(model: FluxModel, grid: Grid, slack: SlackConfig) -> Result<Self> {
        let entropy_pair = EntropyPair::new(crate::flux::EntropyIndex::One, 0.0, &model)?;
        Ok(DiagnosticsCollector {
            model,
            grid,
            slack,
            entropy_pair,
            initialized: false,
            initial_l1: 0.0,
            initial_l2: 0.0,
            initial_l2_sq: 0.0,
            initial_linf: 0.0,
            initial_bv: 0.0,
            initial_ratio_envelope: 1.0,
            prev_l1: 0.0,
            prev_l2: 0.0,
            worst_l1_growth: (f64::NEG_INFINITY, 0.0),
            worst_l2_growth: (f64::NEG_INFINITY, 0.0),
            worst_linf: (f64::NEG_INFINITY, 0.0),
            worst_bv: (f64::NEG_INFINITY, 0.0),
            ratio_min_seen: f64::INFINITY,
            ratio_max_seen: f64::NEG_INFINITY,
            worst_ratio: (f64::NEG_INFINITY, 0.0),
            ratio_skipped: 0,
            min_component: (f64::INFINITY, 0.0),
            worst_entropy: (f64::NEG_INFINITY, 0.0),
            min_e1: (f64::INFINITY, 0.0),
            budget: DissipationBudget::default(),
            norms: NormSeries::default(),
            angles: AngleSeries::default(),
            series: StepSeries::default(),
            steps: 0,
            track_dissipation: true,
        })
    }

    fn record_state(&mut self, state: &State, dt: Option<f64>) {
        let (l1, l2, linf) = norms(state, &self.grid);
        let polar = to_polar(state);
        let bv = angle_bv(&polar);
        let min_a = polar.angle.iter().copied().fold(f64::INFINITY, f64::min);
        let max_a = polar.angle.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (rmin, rmax, skipped) = match ratio_bounds(state) {
            Ok(x) => x,
            Err(_) => (f64::NAN, f64::NAN, state.n_cells()),
        };
        let t = state.t;

        if !self.initialized {
            self.initialized = true;
            self.initial_l1 = l1;
            self.initial_l2 = l2;
            self.initial_l2_sq = l2 * l2;
            self.initial_linf = linf;
            self.initial_bv = bv;
            if rmin.is_finite() {
                self.initial_ratio_envelope = rmax.max(1.0 / rmin);
            }
            self.prev_l1 = l1;
            self.prev_l2 = l2;
        } else {
            let g1 = (l1 - self.prev_l1) / self.prev_l1.max(f64::MIN_POSITIVE);
            let g2 = (l2 - self.prev_l2) / self.prev_l2.max(f64::MIN_POSITIVE);
            if g1 > self.worst_l1_growth.0 {
                self.worst_l1_growth = (g1, t);
            }
            if g2 > self.worst_l2_growth.0 {
                self.worst_l2_growth = (g2, t);
            }
            self.prev_l1 = l1;
            self.prev_l2 = l2;
        }
        if linf - self.initial_linf > self.worst_linf.0 {
            self.worst_linf = (linf - self.initial_linf, t);
        }
        if bv - self.initial_bv > self.worst_bv.0 {
            self.worst_bv = (bv - self.initial_bv, t);
        }
        if rmin.is_finite() {
            self.ratio_min_seen = self.ratio_min_seen.min(rmin);
            self.ratio_max_seen = self.ratio_max_seen.max(rmax);
            let c = self.initial_ratio_envelope;
            let excess = (rmax - c).max(1.0 / c - rmin);
            if excess > self.worst_ratio.0 {
                self.worst_ratio = (excess, t);
            }
        }
        self.ratio_skipped += skipped;
        let mc = state
            .u
            .iter()
            .chain(state.v.iter())
            .copied()
            .fold(f64::INFINITY, f64::min);
        if mc < self.min_component.0 {
            self.min_component = (mc, t);
        }

        self.norms.times.push(t);
        self.norms.l1_r.push(l1);
        self.norms.l2_r.push(l2);
        self.norms.linf_r.push(linf);
        self.angles.times.push(t);
        self.angles.bv.push(bv);
        self.angles.min_angle.push(min_a);
        self.angles.max_angle.push(max_a);

        if let Some(dt) = dt {
            self.series.step.push(self.steps);
            self.series.t.push(t);
            self.series.dt.push(dt);
            self.series.l1_r.push(l1);
            self.series.l2_r.push(l2);
            self.series.linf_r.push(linf);
            self.series.bv_angle.push(bv);
            self.series.ratio_min.push(rmin);
            self.series.ratio_max.push(rmax);
        }
    }

    /// Produce the verdicts. Call after the run.
    pub fn report(&self) -> DiagnosticsReport {
        let s = &self.slack;
        let mut checks = Vec::new();
        let mut add = |name: &str, violation: (f64, f64), bound: f64, detail: String| {
            let worst = violation.0;
            checks.push(InequalityCheck {
                name: name.to_string(),
                pass: worst <= bound,
                worst_violation: worst - bound,
                at_time: violation.1,
                detail,
            });
        };
        add(
            "norm_decay_l1",
            self.worst_l1_growth,
            s.norm_decay_rel,
            format!("worst per-step relative L1 growth {:.3e}", self.worst_l1_growth.0),
        );
        add(
            "norm_decay_l2",
            self.worst_l2_growth,
            s.norm_decay_rel,
            format!("worst per-step relative L2 growth {:.3e}", self.worst_l2_growth.0),
        );
        add(
            "dissipation_budget",
            (self.budget.rl1_budget - self.initial_l2_sq, self.norms.times.last().copied().unwrap_or(0.0)),
            s.budget_abs,
            format!(
                "accumulated budget {:.6e} vs initial ||r||_L2^2 = {:.6e}",
                self.budget.rl1_budget, self.initial_l2_sq
            ),
        );
        add(
            "max_principle",
            self.worst_linf,
            s.max_principle_abs,
            format!("worst Linf excess over initial {:.3e}", self.worst_linf.0),
        );
        add(
            "ratio_bounds",
            self.worst_ratio,
            s.ratio_abs,
            format!(
                "ratios seen [{:.6}, {:.6}] vs envelope [{:.6}, {:.6}]",
                self.ratio_min_seen,
                self.ratio_max_seen,
                1.0 / self.initial_ratio_envelope,
                self.initial_ratio_envelope
            ),
        );
        add(
            "positivity",
            (-self.min_component.0, self.min_component.1),
            s.positivity_abs,
            format!("min component seen {:.3e}", self.min_component.0),
        );
        add(
            "angle_bv",
            self.worst_bv,
            s.angle_bv_abs,
            format!("worst BV excess over initial {:.3e}", self.worst_bv.0),
        );
        add(
            "entropy_sign",
            self.worst_entropy,
            s.entropy_cellwise,
            format!("worst cellwise stage residual {:.3e}", self.worst_entropy.0),
        );
        add(
            "e1_nonnegative",
            (-self.min_e1.0, self.min_e1.1),
            0.0,
            format!("min e1 seen {:.3e}", self.min_e1.0),
        );
        let all_pass = checks.iter().all(|c| c.pass);
        DiagnosticsReport {
            norms: self.norms.clone(),
            angles: self.angles.clone(),
            budget: self.budget.clone(),
            initial_l2_sq: self.initial_l2_sq,
            initial_linf: self.initial_linf,
            initial_bv: self.initial_bv,
            initial_ratio_envelope: self.initial_ratio_envelope,
            ratio_min_seen: self.ratio_min_seen,
            ratio_max_seen: self.ratio_max_seen,
            ratio_skipped_cells: self.ratio_skipped,
            min_component_seen: self.min_component.0,
            worst_entropy_residual: self.worst_entropy.0,
            min_e1_seen: self.min_e1.0,
            checks,
            all_pass,
        }
    }

    pub fn step_series(&self) -> &StepSeries {
        &self.series
    }
}

impl Observer for DiagnosticsCollector {
    fn on_step(&mut self, prev: &State, next: &State, dt: f64) {
        if !self.initialized {
            self.record_state(prev, None);
        }
        if self.track_dissipation {
            self.budget.rl1_budget += dt * rl1_budget_increment(prev, &self.model, &self.grid);
            let terms = dissipation_terms(prev, &self.model, &self.grid);
            let e1_min = terms.e1.iter().copied().fold(f64::INFINITY, f64::min);
            if e1_min < self.min_e1.0 {
                self.min_e1 = (e1_min, prev.t);
            }
            self.budget.e1_integral += dt * self.grid.dx * terms.e1.iter().sum::<f64>();
            self.budget.e2_integral += dt * self.grid.dx * terms.e2.iter().sum::<f64>();
            self.budget.e3_integral += dt * self.grid.dx * terms.e3.iter().sum::<f64>();
        }
        self.steps += 1;
        self.record_state(next, Some(dt));
    }

    fn on_stage(&mut self, pre: &State, post: &State, dt: f64) {
        // Discrete entropy inequality for (eta1, q1) with k = 0; holds per
        // Euler application, which is exactly what a stage is.
        if let Ok((residual, _)) =
            entropy_residual(pre, post, dt, &self.model, &self.entropy_pair, &self.grid)
        {
            let worst = residual.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if worst > self.worst_entropy.0 {
                self.worst_entropy = (worst, pre.t);
            }
        }
    }
}
