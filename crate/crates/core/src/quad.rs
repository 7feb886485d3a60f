//! Fixed-panel quadrature rules used throughout the crate.
//!
//! All integrands here are smooth on each panel, so non-adaptive composite
//! rules with a resolution proportional to the interval length are sufficient.

/// Default number of Simpson panels per unit interval length.
pub const SIMPSON_PANELS_PER_UNIT: f64 = 256.0;

/// Hard cap on the total panel count, so hostile inputs (huge intervals from
/// a fuzzed config) cannot trigger unbounded work.
pub const MAX_PANELS: usize = 1 << 22;

const MIN_PANELS: usize = 8;

/// Composite Simpson rule over `[a, b]` with `panels_per_unit` panels per
/// unit length (each panel spans two subintervals).
///
/// `a > b` integrates with the opposite sign, so swapping the endpoints
/// negates the result exactly.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels_per_unit: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let len = hi - lo;
    let panels = ((len * panels_per_unit).ceil() as usize)
        .max(MIN_PANELS)
        .min(MAX_PANELS);
    let n = 2 * panels;
    let h = len / n as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        let x = lo + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    sign * sum * h / 3.0
}

/// 5-point Gauss-Legendre nodes on [-1, 1].
pub const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];

/// 5-point Gauss-Legendre weights on [-1, 1].
pub const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// 5-point Gauss-Legendre quadrature of `f` over `[a, b]`.
/// Exact for polynomials up to degree 9.
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        // x^3 over [0, 2] = 4
        let v = simpson(|x| x * x * x, 0.0, 2.0, 256.0);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_sign_swap() {
        let a = simpson(|x| x.exp(), 0.0, 1.5, 256.0);
        let b = simpson(|x| x.exp(), 1.5, 0.0, 256.0);
        assert_eq!(a, -b);
    }

    #[test]
    fn simpson_empty_interval() {
        assert_eq!(simpson(|x| x, 3.0, 3.0, 256.0), 0.0);
    }

    #[test]
    fn gauss5_degree9_exact() {
        // integral of x^9 over [0,1] = 1/10
        let v = gauss5(|x| x.powi(9), 0.0, 1.0);
        assert!((v - 0.1).abs() < 1e-14);
    }
}
