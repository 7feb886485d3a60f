//! Initial-data generators.
//!
//! Every generator produces strictly positive (u0, v0) with a bounded
//! component ratio, and reports the envelope constants R = max r(0) and
//! C = max ratio bound that the verification suite checks against.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::{project_initial_with_breaks, State};

/// Scalar initial profiles plus the constants the a priori estimates use.
pub struct InitialData {
    pub u0: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub v0: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Discontinuity locations; cell averaging splits cells here.
    pub breakpoints: Vec<f64>,
    /// R = max over the domain of sqrt(u0^2 + v0^2).
    pub max_r: f64,
    /// C with 1/C <= u0/v0 <= C over the domain.
    pub ratio_bound: f64,
}

impl InitialData {
    /// Cell-average the profiles onto the grid.
    pub fn project(&self, grid: &Grid) -> Result<State> {
        project_initial_with_breaks(&self.u0, &self.v0, &self.breakpoints, grid)
    }
}

/// Which test problem to generate.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialKind {
    Riemann {
        u_left: f64,
        v_left: f64,
        u_right: f64,
        v_right: f64,
        #[serde(default)]
        x0: f64,
    },
    GaussianBump {
        floor: f64,
        amplitude_u: f64,
        amplitude_v: f64,
        center: f64,
        width: f64,
    },
    SmoothStep {
        u_left: f64,
        u_right: f64,
        v_left: f64,
        v_right: f64,
        #[serde(default)]
        x0: f64,
        width: f64,
    },
}

const ENVELOPE_SAMPLES: usize = 4096;

fn envelope(
    u0: &(dyn Fn(f64) -> f64 + Send + Sync),
    v0: &(dyn Fn(f64) -> f64 + Send + Sync),
    x_min: f64,
    x_max: f64,
) -> Result<(f64, f64)> {
    let mut max_r = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    for i in 0..=ENVELOPE_SAMPLES {
        let x = x_min + (x_max - x_min) * i as f64 / ENVELOPE_SAMPLES as f64;
        let (u, v) = (u0(x), v0(x));
        if !(u > 0.0 && v > 0.0 && u.is_finite() && v.is_finite()) {
            return Err(Error::Input(format!(
                "initial data not strictly positive and finite at x = {x} (u = {u}, v = {v})"
            )));
        }
        max_r = max_r.max((u * u + v * v).sqrt());
        min_ratio = min_ratio.min(u / v);
        max_ratio = max_ratio.max(u / v);
    }
    Ok((max_r, max_ratio.max(1.0 / min_ratio)))
}

/// Build the profiles for `kind` on the domain `[x_min, x_max]`.
pub fn make_initial_data(kind: &InitialKind, x_min: f64, x_max: f64) -> Result<InitialData> {
    let (u0, v0, breakpoints): (
        Box<dyn Fn(f64) -> f64 + Send + Sync>,
        Box<dyn Fn(f64) -> f64 + Send + Sync>,
        Vec<f64>,
    ) = match *kind {
        InitialKind::Riemann { u_left, v_left, u_right, v_right, x0 } => (
            Box::new(move |x| if x < x0 { u_left } else { u_right }),
            Box::new(move |x| if x < x0 { v_left } else { v_right }),
            vec![x0],
        ),
        InitialKind::GaussianBump { floor, amplitude_u, amplitude_v, center, width } => {
            if !(width > 0.0) {
                return Err(Error::Input("gaussian_bump width must be positive".into()));
            }
            if !(floor > 0.0) {
                return Err(Error::Input("gaussian_bump floor must be positive".into()));
            }
            (
                Box::new(move |x: f64| {
                    floor + amplitude_u * (-((x - center) / width).powi(2)).exp()
                }),
                Box::new(move |x: f64| {
                    floor + amplitude_v * (-((x - center) / width).powi(2)).exp()
                }),
                vec![],
            )
        }
        InitialKind::SmoothStep { u_left, u_right, v_left, v_right, x0, width } => {
            if !(width > 0.0) {
                return Err(Error::Input("smooth_step width must be positive".into()));
            }
            let sig = move |x: f64| 0.5 * (1.0 + ((x - x0) / width).tanh());
            (
                Box::new(move |x: f64| u_left + (u_right - u_left) * sig(x)),
                Box::new(move |x: f64| v_left + (v_right - v_left) * sig(x)),
                vec![],
            )
        }
    };
    let (max_r, ratio_bound) = envelope(u0.as_ref(), v0.as_ref(), x_min, x_max)?;
    Ok(InitialData { u0, v0, breakpoints, max_r, ratio_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::state::to_polar;

    #[test]
    fn riemann_envelope_constants() {
        let kind = InitialKind::Riemann {
            u_left: 1.0,
            v_left: 1.0,
            u_right: 2.0,
            v_right: 1.0,
            x0: 0.0,
        };
        let d = make_initial_data(&kind, -2.0, 2.0).unwrap();
        assert!((d.max_r - 5f64.sqrt()).abs() < 1e-15);
        assert!((d.ratio_bound - 2.0).abs() < 1e-15);
        assert_eq!(d.breakpoints, vec![0.0]);
    }

    #[test]
    fn gaussian_bump_floor_positive() {
        let kind = InitialKind::GaussianBump {
            floor: 0.1,
            amplitude_u: 1.0,
            amplitude_v: 0.5,
            center: 0.0,
            width: 0.3,
        };
        let d = make_initial_data(&kind, -2.0, 2.0).unwrap();
        for i in 0..=100 {
            let x = -2.0 + 0.04 * i as f64;
            assert!((d.u0)(x) >= 0.1);
            assert!((d.v0)(x) >= 0.1);
        }
    }

    #[test]
    fn symmetric_smooth_step_has_constant_angle() {
        let kind = InitialKind::SmoothStep {
            u_left: 1.0,
            u_right: 2.0,
            v_left: 1.0,
            v_right: 2.0,
            x0: 0.0,
            width: 0.2,
        };
        let d = make_initial_data(&kind, -2.0, 2.0).unwrap();
        let grid = Grid::new(-2.0, 2.0, 50, Boundary::Outflow).unwrap();
        let s = d.project(&grid).unwrap();
        let p = to_polar(&s);
        let bv: f64 = p.angle.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        assert!(bv < 1e-14);
        assert!(p
            .angle
            .iter()
            .all(|&a| (a - std::f64::consts::FRAC_PI_4).abs() < 1e-14));
    }

    #[test]
    fn nonpositive_data_rejected() {
        let kind = InitialKind::Riemann {
            u_left: -1.0,
            v_left: 1.0,
            u_right: 2.0,
            v_right: 1.0,
            x0: 0.0,
        };
        assert!(make_initial_data(&kind, -2.0, 2.0).is_err());
        let kind = InitialKind::GaussianBump {
            floor: 0.0,
            amplitude_u: 1.0,
            amplitude_v: 1.0,
            center: 0.0,
            width: 0.5,
        };
        assert!(make_initial_data(&kind, -2.0, 2.0).is_err());
    }

    #[test]
    fn positive_data_angles_strictly_interior() {
        let kind = InitialKind::Riemann {
            u_left: 1.0,
            v_left: 1.0,
            u_right: 2.0,
            v_right: 1.0,
            x0: 0.0,
        };
        let d = make_initial_data(&kind, -2.0, 2.0).unwrap();
        let grid = Grid::new(-2.0, 2.0, 100, Boundary::Outflow).unwrap();
        let p = to_polar(&d.project(&grid).unwrap());
        for &a in &p.angle {
            assert!(a > 0.0 && a < std::f64::consts::FRAC_PI_2);
        }
    }
}
