//! Flux models: the scalar function phi(r) and everything derived from it.
//!
//! The system transports both components with the common speed phi(r),
//! r = sqrt(u^2 + v^2). The scalar flux is f(r) = r phi(r); the entropy
//! machinery needs f', f'' and the integral entropy flux q2.

use crate::error::{Error, Result};
use crate::pchip::Pchip;
use crate::quad::{simpson, SIMPSON_PANELS_PER_UNIT};

/// Tolerance below which 2 phi'(r) + r phi''(r) counts as a sampled zero of
/// the nondegeneracy expression.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Default upper end of the validity interval when no run envelope is known.
pub const DEFAULT_R_MAX: f64 = 10.0;

#[derive(Debug, Clone)]
enum PhiKind {
    /// phi = 1
    Constant,
    /// phi = 1 + r
    Affine,
    /// phi = 1 + r^2
    Quadratic,
    /// phi = 2 - 1/(1 + r)
    Saturating,
    /// Monotone cubic through tabulated (r, phi) samples.
    Tabulated(Pchip),
}

/// The scalar speed function phi with derivatives and a validity range.
///
/// Immutable after construction; shared freely between threads.
#[derive(Debug, Clone)]
pub struct FluxModel {
    name: String,
    kind: PhiKind,
    r_max_valid: f64,
    quad_panels_per_unit: f64,
}

/// Report from sampling the model assumptions on `[0, r_max_valid]`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionReport {
    pub n_samples: usize,
    pub r_max_valid: f64,
    pub min_phi: f64,
    pub min_phi_prime: f64,
    pub max_abs_phi_double_prime: f64,
    /// Sampled r where |2 phi' + r phi''| < DEGENERACY_TOL.
    pub degenerate_r: Vec<f64>,
    pub positivity_ok: bool,
    pub monotonicity_ok: bool,
    pub all_finite: bool,
    /// Set when the degenerate set covers a non-trivial fraction of the
    /// samples, i.e. the nondegeneracy hypothesis of the convergence
    /// statement fails on a set of positive measure.
    pub nondegeneracy_violated: bool,
}

impl AssumptionReport {
    pub fn assumptions_hold(&self) -> bool {
        self.positivity_ok && self.monotonicity_ok && self.all_finite
    }
}

impl FluxModel {
    pub fn constant() -> Self {
        Self::with_kind("constant", PhiKind::Constant)
    }

    pub fn affine() -> Self {
        Self::with_kind("affine", PhiKind::Affine)
    }

    pub fn quadratic() -> Self {
        Self::with_kind("quadratic", PhiKind::Quadratic)
    }

    pub fn saturating() -> Self {
        Self::with_kind("saturating", PhiKind::Saturating)
    }

    /// Custom model from tabulated (r, phi) samples.
    pub fn tabulated(r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if phi.iter().any(|&p| p <= 0.0) {
            return Err(Error::Input("tabulated phi samples must be positive".into()));
        }
        if phi.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Input(
                "tabulated phi samples must be non-decreasing (phi' >= 0)".into(),
            ));
        }
        if r.iter().any(|&s| s < 0.0) {
            return Err(Error::Input("tabulated r samples must be nonnegative".into()));
        }
        let interp = Pchip::new(r, phi)?;
        Ok(Self::with_kind("tabulated", PhiKind::Tabulated(interp)))
    }

    /// Built-in model by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "constant" => Ok(Self::constant()),
            "affine" => Ok(Self::affine()),
            "quadratic" => Ok(Self::quadratic()),
            "saturating" => Ok(Self::saturating()),
            other => Err(Error::Config(format!("unknown flux model '{other}'"))),
        }
    }

    fn with_kind(name: &str, kind: PhiKind) -> Self {
        FluxModel {
            name: name.to_string(),
            kind,
            r_max_valid: DEFAULT_R_MAX,
            quad_panels_per_unit: SIMPSON_PANELS_PER_UNIT,
        }
    }

    /// Pin the validity envelope, typically 2x the maximum initial radius.
    pub fn with_r_max_valid(mut self, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::Config("r_max_valid must be positive and finite".into()));
        }
        self.r_max_valid = r_max;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn r_max_valid(&self) -> f64 {
        self.r_max_valid
    }

    pub fn phi(&self, r: f64) -> f64 {
        match &self.kind {
            PhiKind::Constant => 1.0,
            PhiKind::Affine => 1.0 + r,
            PhiKind::Quadratic => 1.0 + r * r,
            PhiKind::Saturating => 2.0 - 1.0 / (1.0 + r),
            PhiKind::Tabulated(p) => p.eval(r).0,
        }
    }

    pub fn phi_prime(&self, r: f64) -> f64 {
        match &self.kind {
            PhiKind::Constant => 0.0,
            PhiKind::Affine => 1.0,
            PhiKind::Quadratic => 2.0 * r,
            PhiKind::Saturating => {
                let d = 1.0 + r;
                1.0 / (d * d)
            }
            PhiKind::Tabulated(p) => p.eval(r).1,
        }
    }

    pub fn phi_double_prime(&self, r: f64) -> f64 {
        match &self.kind {
            PhiKind::Constant | PhiKind::Affine => 0.0,
            PhiKind::Quadratic => 2.0,
            PhiKind::Saturating => {
                let d = 1.0 + r;
                -2.0 / (d * d * d)
            }
            PhiKind::Tabulated(p) => p.eval(r).2,
        }
    }

    /// (phi, phi', phi'') at r >= 0.
    pub fn evaluate(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("phi evaluated at r = {r} < 0")));
        }
        let out = (self.phi(r), self.phi_prime(r), self.phi_double_prime(r));
        if !out.0.is_finite() || !out.1.is_finite() || !out.2.is_finite() {
            return Err(Error::Domain(format!("phi non-finite at r = {r}")));
        }
        Ok(out)
    }

    /// Scalar flux f(r) = r phi(r).
    pub fn flux_f(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("flux f evaluated at r = {r} < 0")));
        }
        Ok(r * self.phi(r))
    }

    /// f'(r) = phi + r phi'; the characteristic speed bound.
    pub fn flux_f_prime(&self, r: f64) -> f64 {
        self.phi(r) + r * self.phi_prime(r)
    }

    /// f''(r) = 2 phi' + r phi''; its zero set is the degeneracy locus.
    pub fn flux_f_double_prime(&self, r: f64) -> f64 {
        2.0 * self.phi_prime(r) + r * self.phi_double_prime(r)
    }

    /// q2''(s) = 2 f'(s) f''(s).
    pub fn q2_double_prime(&self, r: f64) -> f64 {
        2.0 * self.flux_f_prime(r) * self.flux_f_double_prime(r)
    }

    /// Entropy flux of the second pair: integral of (f'(theta))^2 from k to s.
    ///
    /// Antisymmetric under swapping k and s by construction.
    pub fn entropy_flux_q2(&self, k: f64, s: f64) -> Result<f64> {
        for (label, val) in [("k", k), ("s", s)] {
            if !(0.0 <= val && val <= self.r_max_valid) {
                return Err(Error::Domain(format!(
                    "entropy_flux_q2: {label} = {val} outside [0, {}]",
                    self.r_max_valid
                )));
            }
        }
        Ok(simpson(
            |t| {
                let fp = self.flux_f_prime(t);
                fp * fp
            },
            k,
            s,
            self.quad_panels_per_unit,
        ))
    }

    /// g(r) = 2 * integral_0^r (s phi(s) + s^2 phi'(s)) ds.
    pub fn g_integral(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("g evaluated at r = {r} < 0")));
        }
        Ok(simpson(
            |s| 2.0 * (s * self.phi(s) + s * s * self.phi_prime(s)),
            0.0,
            r,
            self.quad_panels_per_unit,
        ))
    }

    /// Sample the assumptions on `[0, r_max_valid]`.
    pub fn check_assumptions(&self, n_samples: usize) -> AssumptionReport {
        let n = n_samples.max(2);
        let mut min_phi = f64::INFINITY;
        let mut min_phi_prime = f64::INFINITY;
        let mut max_abs_pp = 0.0f64;
        let mut degenerate = Vec::new();
        let mut all_finite = true;
        for i in 0..n {
            let r = self.r_max_valid * i as f64 / (n - 1) as f64;
            let p = self.phi(r);
            let dp = self.phi_prime(r);
            let ddp = self.phi_double_prime(r);
            if !(p.is_finite() && dp.is_finite() && ddp.is_finite()) {
                all_finite = false;
                continue;
            }
            min_phi = min_phi.min(p);
            min_phi_prime = min_phi_prime.min(dp);
            max_abs_pp = max_abs_pp.max(ddp.abs());
            if (2.0 * dp + r * ddp).abs() < DEGENERACY_TOL {
                degenerate.push(r);
            }
        }
        let frac = degenerate.len() as f64 / n as f64;
        AssumptionReport {
            n_samples: n,
            r_max_valid: self.r_max_valid,
            min_phi,
            min_phi_prime,
            max_abs_phi_double_prime: max_abs_pp,
            degenerate_r: degenerate,
            positivity_ok: min_phi > 0.0,
            monotonicity_ok: min_phi_prime >= 0.0,
            all_finite,
            nondegeneracy_violated: frac > 0.1,
        }
    }
}

/// Which of the two entropy pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EntropyIndex {
    /// eta(s) = s - k, q(s) = f(s) - f(k)
    One,
    /// eta(s) = f(s) - f(k), q(s) = integral_k^s (f')^2
    Two,
}

/// An entropy/entropy-flux pair (eta, q) with reference constant k.
#[derive(Debug, Clone, Copy)]
pub struct EntropyPair {
    pub index: EntropyIndex,
    pub k: f64,
}

impl EntropyPair {
    pub fn new(index: EntropyIndex, k: f64, model: &FluxModel) -> Result<Self> {
        if !(0.0 <= k && k <= model.r_max_valid()) {
            return Err(Error::Domain(format!(
                "entropy reference k = {k} outside [0, {}]",
                model.r_max_valid()
            )));
        }
        Ok(EntropyPair { index, k })
    }

    pub fn eta(&self, model: &FluxModel, s: f64) -> Result<f64> {
        match self.index {
            EntropyIndex::One => Ok(s - self.k),
            EntropyIndex::Two => Ok(model.flux_f(s)? - model.flux_f(self.k)?),
        }
    }

    pub fn q(&self, model: &FluxModel, s: f64) -> Result<f64> {
        match self.index {
            EntropyIndex::One => Ok(model.flux_f(s)? - model.flux_f(self.k)?),
            EntropyIndex::Two => model.entropy_flux_q2(self.k, s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtins() -> Vec<FluxModel> {
        vec![
            FluxModel::constant(),
            FluxModel::affine(),
            FluxModel::quadratic(),
            FluxModel::saturating(),
        ]
    }

    #[test]
    fn evaluate_examples() {
        let (p, dp, ddp) = FluxModel::affine().evaluate(2.0).unwrap();
        assert_eq!((p, dp, ddp), (3.0, 1.0, 0.0));
        let (p, dp, ddp) = FluxModel::constant().evaluate(7.3).unwrap();
        assert_eq!((p, dp, ddp), (1.0, 0.0, 0.0));
        let (p, dp, ddp) = FluxModel::quadratic().evaluate(0.5).unwrap();
        assert_eq!((p, dp, ddp), (1.25, 1.0, 2.0));
    }

    #[test]
    fn evaluate_rejects_negative_r() {
        assert!(FluxModel::affine().evaluate(-0.1).is_err());
        assert!(FluxModel::affine().flux_f(-1.0).is_err());
        assert!(FluxModel::affine().g_integral(-1e-9).is_err());
    }

    #[test]
    fn flux_f_examples() {
        assert_eq!(FluxModel::affine().flux_f(2.0).unwrap(), 6.0);
        for m in builtins() {
            assert_eq!(m.flux_f(0.0).unwrap(), 0.0);
        }
        assert_eq!(FluxModel::constant().flux_f(3.0).unwrap(), 3.0);
    }

    #[test]
    fn flux_f_monotone() {
        for m in builtins() {
            let mut prev = m.flux_f(0.0).unwrap();
            for i in 1..=1000 {
                let r = m.r_max_valid() * i as f64 / 1000.0;
                let f = m.flux_f(r).unwrap();
                assert!(f >= prev, "{} not monotone at r={r}", m.name());
                prev = f;
            }
        }
    }

    #[test]
    fn phi_assumptions_sampled() {
        for m in builtins() {
            for i in 0..=1000 {
                let r = m.r_max_valid() * i as f64 / 1000.0;
                assert!(m.phi(r) > 0.0);
                assert!(m.phi_prime(r) >= 0.0);
            }
        }
    }

    #[test]
    fn q2_affine_closed_form() {
        // affine: f = r + r^2, f' = 1 + 2r, int_0^1 (1+2r)^2 dr = 13/3
        let m = FluxModel::affine();
        let v = m.entropy_flux_q2(0.0, 1.0).unwrap();
        assert!((v - 13.0 / 3.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn q2_empty_and_unit() {
        for m in builtins() {
            assert_eq!(m.entropy_flux_q2(0.7, 0.7).unwrap(), 0.0);
        }
        // constant model f' = 1
        let v = FluxModel::constant().entropy_flux_q2(0.0, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn q2_antisymmetric() {
        let m = FluxModel::saturating();
        for (k, s) in [(0.0, 1.5), (0.3, 2.0), (1.9, 0.1)] {
            let a = m.entropy_flux_q2(k, s).unwrap();
            let b = m.entropy_flux_q2(s, k).unwrap();
            assert_eq!(a, -b);
        }
    }

    #[test]
    fn g_integral_closed_forms() {
        // affine: g(r) = r^2 + (4/3) r^3
        let m = FluxModel::affine();
        let v = m.g_integral(1.0).unwrap();
        assert!((v - 7.0 / 3.0).abs() < 1e-10);
        assert_eq!(m.g_integral(0.0).unwrap(), 0.0);
        // constant: g(r) = r^2
        let v = FluxModel::constant().g_integral(2.0).unwrap();
        assert!((v - 4.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_refinement_stable() {
        // Halving the panel size changes results by less than the tolerance.
        let mut coarse = FluxModel::affine();
        coarse.quad_panels_per_unit = 128.0;
        let mut fine = FluxModel::affine();
        fine.quad_panels_per_unit = 256.0;
        let a = coarse.g_integral(1.7).unwrap();
        let b = fine.g_integral(1.7).unwrap();
        assert!((a - b).abs() < 1e-10);
        let a = coarse.entropy_flux_q2(0.0, 1.7).unwrap();
        let b = fine.entropy_flux_q2(0.0, 1.7).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn check_assumptions_affine() {
        let rep = FluxModel::affine().check_assumptions(1000);
        assert!(rep.assumptions_hold());
        assert_eq!(rep.min_phi, 1.0);
        assert_eq!(rep.min_phi_prime, 1.0);
        assert!(rep.degenerate_r.is_empty());
        assert!(!rep.nondegeneracy_violated);
    }

    #[test]
    fn check_assumptions_constant_flags_degeneracy() {
        let rep = FluxModel::constant().check_assumptions(1000);
        assert!(rep.assumptions_hold());
        assert_eq!(rep.degenerate_r.len(), rep.n_samples);
        assert!(rep.nondegeneracy_violated);
    }

    #[test]
    fn check_assumptions_quadratic_single_root() {
        // 2 phi' + r phi'' = 6r, zero only at r = 0
        let rep = FluxModel::quadratic().check_assumptions(1000);
        assert_eq!(rep.degenerate_r, vec![0.0]);
        assert!(!rep.nondegeneracy_violated);
    }

    #[test]
    fn tabulated_matches_affine_data() {
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + x).collect();
        let m = FluxModel::tabulated(xs, ys).unwrap().with_r_max_valid(3.5).unwrap();
        let (p, dp, _) = m.evaluate(1.23).unwrap();
        assert!((p - 2.23).abs() < 1e-12);
        assert!((dp - 1.0).abs() < 1e-12);
        assert!(m.check_assumptions(500).assumptions_hold());
    }

    #[test]
    fn tabulated_rejects_invalid() {
        assert!(FluxModel::tabulated(vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(FluxModel::tabulated(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(FluxModel::tabulated(vec![-1.0, 1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn entropy_pair_definitions() {
        let m = FluxModel::affine();
        let p1 = EntropyPair::new(EntropyIndex::One, 0.5, &m).unwrap();
        assert_eq!(p1.eta(&m, 1.5).unwrap(), 1.0);
        let q1 = p1.q(&m, 1.5).unwrap();
        assert!((q1 - (m.flux_f(1.5).unwrap() - m.flux_f(0.5).unwrap())).abs() < 1e-15);
        let p2 = EntropyPair::new(EntropyIndex::Two, 0.5, &m).unwrap();
        assert_eq!(
            p2.eta(&m, 1.5).unwrap(),
            m.flux_f(1.5).unwrap() - m.flux_f(0.5).unwrap()
        );
        let q2 = p2.q(&m, 1.5).unwrap();
        assert_eq!(q2, m.entropy_flux_q2(0.5, 1.5).unwrap());
    }
}
