//! Monotone cubic (Fritsch-Carlson) interpolation for tabulated flux models.
//!
//! Monotone data yields an interpolant with nonnegative derivative, which is
//! what the flux-model assumptions require of tabulated phi samples.

use crate::error::{Error, Result};

/// A monotone cubic Hermite interpolant through `(x_i, y_i)` samples.
///
/// Outside the tabulated range the interpolant is extended by the constant
/// end values (zero derivative), which preserves positivity and monotonicity.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Tangent at each knot.
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Input("tabulated r and phi lengths differ".into()));
        }
        if x.len() < 2 {
            return Err(Error::Input("tabulated model needs at least 2 samples".into()));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("tabulated samples must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("tabulated r samples must be strictly increasing".into()));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                // Weighted harmonic mean (Fritsch-Carlson), guarantees
                // monotonicity on each interval.
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        // Endpoint clamp: keep |d| <= 3|delta| and matching sign.
        for (i, di) in [(0usize, 0usize), (n - 1, n - 2)] {
            if delta[di] == 0.0 {
                d[i] = 0.0;
            } else if d[i] / delta[di] > 3.0 {
                d[i] = 3.0 * delta[di];
            }
        }
        Ok(Pchip { x, y, d })
    }

    fn segment(&self, x: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    /// Interpolant value, first, and second derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        if x <= self.x[0] {
            return (self.y[0], 0.0, 0.0);
        }
        if x >= self.x[n - 1] {
            return (self.y[n - 1], 0.0, 0.0);
        }
        let i = self.segment(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        // Hermite basis
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let val = y0 * h00 + h * d0 * h10 + y1 * h01 + h * d1 * h11;
        // First derivative in x
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -6.0 * t * t + 6.0 * t;
        let dh11 = 3.0 * t * t - 2.0 * t;
        let der = (y0 * dh00 + h * d0 * dh10 + y1 * dh01 + h * d1 * dh11) / h;
        // Second derivative in x
        let ddh00 = 12.0 * t - 6.0;
        let ddh10 = 6.0 * t - 4.0;
        let ddh01 = -12.0 * t + 6.0;
        let ddh11 = 6.0 * t - 2.0;
        let dder = (y0 * ddh00 + h * d0 * ddh10 + y1 * ddh01 + h * d1 * ddh11) / (h * h);
        (val, der, dder)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots() {
        let p = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 1.5, 1.8, 2.0]).unwrap();
        for (x, y) in [(0.0, 1.0), (1.0, 1.5), (2.0, 1.8)] {
            // left of first knot returns the constant extension; sample inside
            let (v, _, _) = p.eval(x + 1e-12);
            assert!((v - y).abs() < 1e-9, "x={x} v={v}");
        }
    }

    #[test]
    fn linear_data_reproduced() {
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x).collect();
        let p = Pchip::new(xs, ys).unwrap();
        let (v, dv, ddv) = p.eval(0.61);
        assert!((v - (1.0 + 2.0 * 0.61)).abs() < 1e-12);
        assert!((dv - 2.0).abs() < 1e-12);
        assert!(ddv.abs() < 1e-9);
    }

    #[test]
    fn monotone_data_nonnegative_derivative() {
        let p = Pchip::new(vec![0.0, 0.5, 1.0, 2.0], vec![1.0, 1.1, 1.7, 1.9]).unwrap();
        for i in 0..=1000 {
            let x = 2.0 * i as f64 / 1000.0;
            let (_, dv, _) = p.eval(x);
            assert!(dv >= -1e-13, "x={x} dv={dv}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Pchip::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Pchip::new(vec![0.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }
}
