//! Run configuration: TOML parsing, command-line overrides, validation,
//! and assembly of the concrete problem objects.

use crate::analysis::BumpTestFunction;
use crate::diagnostics::SlackConfig;
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::{Boundary, Grid};
use crate::init::{make_initial_data, InitialData, InitialKind};
use crate::integrator::IntegratorConfig;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelConfig {
    pub name: String,
    /// Sample abscissae, tabulated model only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    /// Sample values, tabulated model only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
    /// Upper end of the radius range the model must be admissible on;
    /// defaults to twice the initial data's max radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max_valid: Option<f64>,
}

impl ModelConfig {
    pub fn build(&self, initial_max_r: f64) -> Result<FluxModel> {
        let model = if self.name == "tabulated" {
            let r = self
                .r
                .clone()
                .ok_or_else(|| Error::Config("tabulated model needs model.r".into()))?;
            let phi = self
                .phi
                .clone()
                .ok_or_else(|| Error::Config("tabulated model needs model.phi".into()))?;
            FluxModel::tabulated(r, phi)?
        } else {
            if self.r.is_some() || self.phi.is_some() {
                return Err(Error::Config(format!(
                    "model.r / model.phi are only valid for the tabulated model, not '{}'",
                    self.name
                )));
            }
            FluxModel::by_name(&self.name)?
        };
        let r_max = self.r_max_valid.unwrap_or(2.0 * initial_max_r);
        model.with_r_max_valid(r_max)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::Outflow
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.n_cells, self.boundary)
    }

    pub fn with_n_cells(&self, n_cells: usize) -> GridConfig {
        GridConfig { n_cells, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    /// Collect the full inequality suite during the run.
    pub enabled: bool,
    /// Also accumulate the dissipation-budget integrals (one extra pass per
    /// step).
    pub track_dissipation: bool,
    pub slack: SlackConfig,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            enabled: true,
            track_dissipation: true,
            slack: SlackConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TestFunctionConfig {
    pub x_center: f64,
    pub x_width: f64,
    pub t_center: f64,
    pub t_width: f64,
}

impl TestFunctionConfig {
    pub fn build(&self) -> Result<BumpTestFunction> {
        BumpTestFunction::new(self.x_center, self.x_width, self.t_center, self.t_width)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceConfig {
    /// Strictly doubling resolution ladder, at least 3 levels.
    pub resolutions: Vec<usize>,
    /// Fixed test functions for the weak-form residuals.
    #[serde(default)]
    pub test_functions: Vec<TestFunctionConfig>,
    /// Additionally place this many random bumps (seeded by `seed`).
    #[serde(default)]
    pub random_test_functions: usize,
    /// Minimum acceptable self-convergence L1 rate for r.
    #[serde(default = "default_min_rate")]
    pub min_rate_r: f64,
    /// Minimum acceptable per-doubling shrink factor of the weak residuals.
    #[serde(default = "default_min_shrink")]
    pub min_residual_shrink: f64,
}

fn default_min_rate() -> f64 {
    0.5
}

fn default_min_shrink() -> f64 {
    1.3
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: "out".into() }
    }
}

/// Everything a run needs, parsed from one TOML file.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub initial: InitialKind,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
}

/// The validated, concrete objects a simulation runs on.
pub struct Problem {
    pub model: FluxModel,
    pub grid: Grid,
    pub initial: InitialData,
}

impl RunConfig {
    /// Parse a TOML document.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let value: toml::Value =
            text.parse().map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
        value
            .try_into()
            .map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    /// Parse with `KEY=VALUE` overrides (dotted paths) applied on top.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
        let mut value: toml::Value =
            text.parse().map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        value
            .try_into()
            .map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    /// Serialize back to TOML (the manifest echo).
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize: {e}")))
    }

    /// Validate and build the concrete problem. `strict_cfl` additionally
    /// requires cfl <= 1 (the admissibility hypothesis); the verification
    /// command relaxes it so deliberately inadmissible runs can be observed
    /// failing.
    pub fn build(&self, strict_cfl: bool) -> Result<Problem> {
        self.integrator.validate(strict_cfl)?;
        let grid = self.grid.build()?;
        let initial = make_initial_data(&self.initial, grid.x_min, grid.x_max)?;
        let model = self.model.build(initial.max_r)?;
        let report = model.check_assumptions(512);
        if !report.assumptions_hold() {
            return Err(Error::Config(format!(
                "model '{}' violates the admissibility assumptions on [0, {}]: \
                 min phi = {:.6e}, min phi' = {:.6e}, finite = {}, degenerate fraction flag = {}",
                model.name(),
                model.r_max_valid(),
                report.min_phi,
                report.min_phi_prime,
                report.all_finite,
                report.nondegeneracy_violated,
            )));
        }
        if let Some(conv) = &self.convergence {
            conv.validate()?;
        }
        Ok(Problem { model, grid, initial })
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolutions.len() < 3 {
            return Err(Error::Config(format!(
                "convergence ladder needs at least 3 levels, got {}",
                self.resolutions.len()
            )));
        }
        if self.resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(Error::Config(
                "convergence.resolutions must strictly double".into(),
            ));
        }
        if !(self.min_rate_r.is_finite() && self.min_residual_shrink.is_finite()) {
            return Err(Error::Config("convergence thresholds must be finite".into()));
        }
        Ok(())
    }
}

/// Apply one `dotted.path=value` override to a parsed TOML document.
/// The value is itself parsed as TOML (so strings need quotes only when
/// they would not parse as a bare value).
pub fn apply_override(doc: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not KEY=VALUE")))?;
    let path = path.trim();
    let raw = raw.trim();
    if path.is_empty() {
        return Err(Error::Config(format!("override '{spec}' has an empty key")));
    }
    let value: toml::Value = match format!("x = {raw}").parse::<toml::Value>() {
        Ok(t) => t.get("x").cloned().unwrap(),
        // bare words (e.g. method=ssprk3) fall back to strings
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a non-table")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(toml::map::Map::new()));
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Method;

    const EXAMPLE: &str = r#"
[model]
name = "affine"

[grid]
x_min = -2.0
x_max = 2.0
n_cells = 400

[initial]
kind = "riemann"
u_left = 1.0
v_left = 1.0
u_right = 2.0
v_right = 1.0

[integrator]
method = "ssprk3"
cfl = 0.5
t_end = 0.5
"#;

    #[test]
    fn parse_example() {
        let cfg = RunConfig::parse(EXAMPLE).unwrap();
        assert_eq!(cfg.model.name, "affine");
        assert_eq!(cfg.grid.n_cells, 400);
        assert_eq!(cfg.integrator.method, Method::Ssprk3);
        assert_eq!(cfg.integrator.cfl, 0.5);
        assert_eq!(cfg.output.directory, "out");
        let p = cfg.build(true).unwrap();
        assert_eq!(p.grid.n_cells, 400);
        assert_eq!(p.model.name(), "affine");
        // default admissible range: twice the initial max radius sqrt(5)
        assert!((p.model.r_max_valid() - 2.0 * 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_through_toml() {
        let cfg = RunConfig::parse(EXAMPLE).unwrap();
        let echoed = cfg.to_toml().unwrap();
        let again = RunConfig::parse(&echoed).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn overrides() {
        let over = vec![
            "integrator.cfl=0.25".to_string(),
            "grid.n_cells=100".to_string(),
            "integrator.method=euler".to_string(),
            "output.directory=\"elsewhere\"".to_string(),
        ];
        let cfg = RunConfig::parse_with_overrides(EXAMPLE, &over).unwrap();
        assert_eq!(cfg.integrator.cfl, 0.25);
        assert_eq!(cfg.grid.n_cells, 100);
        assert_eq!(cfg.integrator.method, Method::Euler);
        assert_eq!(cfg.output.directory, "elsewhere");
    }

    #[test]
    fn bad_override_rejected() {
        let over = vec!["no-equals-sign".to_string()];
        assert!(RunConfig::parse_with_overrides(EXAMPLE, &over).is_err());
        let over = vec!["=5".to_string()];
        assert!(RunConfig::parse_with_overrides(EXAMPLE, &over).is_err());
    }

    #[test]
    fn strict_cfl_gate() {
        let over = vec!["integrator.cfl=1.2".to_string()];
        let cfg = RunConfig::parse_with_overrides(EXAMPLE, &over).unwrap();
        assert!(cfg.build(true).is_err());
        assert!(cfg.build(false).is_ok());
        let over = vec!["integrator.cfl=1.5".to_string()];
        let cfg = RunConfig::parse_with_overrides(EXAMPLE, &over).unwrap();
        assert!(cfg.build(true).is_err());
    }

    #[test]
    fn negative_initial_rejected() {
        let over = vec!["initial.u_left=-1.0".to_string()];
        let cfg = RunConfig::parse_with_overrides(EXAMPLE, &over).unwrap();
        match cfg.build(true) {
            Err(err) => assert!(err.to_string().contains("positive"), "{err}"),
            Ok(_) => panic!("negative initial data accepted"),
        }
    }

    #[test]
    fn tabulated_model_config() {
        let over = vec![
            "model.name=tabulated".to_string(),
            "model.r=[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]".to_string(),
            "model.phi=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]".to_string(),
        ];
        let cfg = RunConfig::parse_with_overrides(EXAMPLE, &over).unwrap();
        let p = cfg.build(true).unwrap();
        assert_eq!(p.model.name(), "tabulated");
        assert!((p.model.phi(1.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn convergence_ladder_validation() {
        let mut cfg = RunConfig::parse(EXAMPLE).unwrap();
        cfg.convergence = Some(ConvergenceConfig {
            resolutions: vec![100, 200],
            test_functions: vec![],
            random_test_functions: 0,
            min_rate_r: 0.5,
            min_residual_shrink: 1.3,
        });
        assert!(cfg.build(true).is_err());
        cfg.convergence.as_mut().unwrap().resolutions = vec![100, 200, 400];
        assert!(cfg.build(true).is_ok());
        cfg.convergence.as_mut().unwrap().resolutions = vec![100, 200, 300];
        assert!(cfg.build(true).is_err());
    }

    #[test]
    fn unknown_model_rejected() {
        let over = vec!["model.name=cubic".to_string()];
        let cfg = RunConfig::parse_with_overrides(EXAMPLE, &over).unwrap();
        assert!(cfg.build(true).is_err());
    }
}
