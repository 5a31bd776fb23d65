//! Numerical Bromwich inversion.
//!
//! Two schemes are provided: the Euler-accelerated Fourier series of
//! Abate and Whitt, whose nodes all lie on a vertical line with positive real
//! part, and the fixed Talbot contour of Abate and Valkó.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InversionMethod {
    /// Euler-summed Fourier series (nodes on Re(s) = M ln 10 / (3t)).
    Euler,
    /// Fixed Talbot contour rotation.
    Talbot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub method: InversionMethod,
    pub order: usize,
    /// Absolute tolerance on the error indicator.
    pub tolerance: f64,
    /// Compute the error indicator from a second order.
    pub check: bool,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            method: InversionMethod::Euler,
            order: 18,
            tolerance: 1e-6,
            check: true,
        }
    }
}

impl InversionConfig {
    /// Order used for the error indicator. The Euler scheme loses about
    /// M/3 digits to cancellation, so it is checked against a lower order;
    /// Talbot is checked against the doubled order.
    pub fn check_order(&self) -> usize {
        match self.method {
            InversionMethod::Euler => (2 * self.order).div_ceil(3).max(4),
            InversionMethod::Talbot => 2 * self.order,
        }
    }
}

/// Estimate returned by [`invert_laplace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverted {
    pub value: f64,
    pub error_indicator: f64,
    pub converged: bool,
}

/// Contour nodes `s_k` and weights `w_k` with `f(t) ≈ Σ Re(w_k F(s_k))`.
pub fn nodes(method: InversionMethod, order: usize, t: f64) -> Vec<(Complex64, Complex64)> {
    assert!(t > 0.0 && order >= 1);
    match method {
        InversionMethod::Euler => euler_nodes(order, t),
        InversionMethod::Talbot => talbot_nodes(order, t),
    }
}

fn euler_nodes(m: usize, t: f64) -> Vec<(Complex64, Complex64)> {
    let a = m as f64 * LN_10 / 3.0;
    let scale = 10f64.powf(m as f64 / 3.0) / t;
    let mut xi = vec![1.0; 2 * m + 1];
    xi[0] = 0.5;
    let two_m = 0.5f64.powi(m as i32);
    xi[2 * m] = two_m;
    let mut binom = 1.0;
    for k in 1..m {
        binom *= (m - k + 1) as f64 / k as f64;
        xi[2 * m - k] = xi[2 * m - k + 1] + two_m * binom;
    }
    xi.iter()
        .enumerate()
        .map(|(k, &x)| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let s = Complex64::new(a, PI * k as f64) / t;
            (s, Complex64::new(scale * sign * x, 0.0))
        })
        .collect()
}

fn talbot_nodes(m: usize, t: f64) -> Vec<(Complex64, Complex64)> {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut out = Vec::with_capacity(m);
    out.push((
        Complex64::new(r, 0.0),
        Complex64::new(0.5 * r / m as f64 * (r * t).exp(), 0.0),
    ));
    for k in 1..m {
        let th = k as f64 * PI / m as f64;
        let cot = th.cos() / th.sin();
        let s = Complex64::new(r * th * cot, r * th);
        let sigma = th + (th * cot - 1.0) * cot;
        let w = (s * t).exp() * Complex64::new(1.0, sigma) * (r / m as f64);
        out.push((s, w));
    }
    out
}

/// Evaluates the inversion sum for one order.
pub fn invert_once(
    transform: impl Fn(Complex64) -> Complex64,
    t: f64,
    method: InversionMethod,
    order: usize,
) -> f64 {
    nodes(method, order, t)
        .into_iter()
        .map(|(s, w)| (w * transform(s)).re)
        .sum()
}

/// Inverts `transform` at `t > 0`. The error indicator is the absolute
/// difference to the check order; convergence is declared when it is at most
/// `tolerance · scale`.
pub fn invert_laplace(
    transform: impl Fn(Complex64) -> Complex64,
    t: f64,
    config: &InversionConfig,
    scale: f64,
) -> Inverted {
    let value = invert_once(&transform, t, config.method, config.order);
    if !config.check {
        return Inverted {
            value,
            error_indicator: 0.0,
            converged: value.is_finite(),
        };
    }
    let other = invert_once(&transform, t, config.method, config.check_order());
    let error_indicator = (value - other).abs();
    Inverted {
        value,
        error_indicator,
        converged: value.is_finite() && error_indicator <= config.tolerance * scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both() -> [InversionConfig; 2] {
        [
            InversionConfig::default(),
            InversionConfig {
                method: InversionMethod::Talbot,
                ..InversionConfig::default()
            },
        ]
    }

    #[test]
    fn unit_step() {
        for cfg in both() {
            let r = invert_laplace(|s| 1.0 / s, 2.5, &cfg, 1.0);
            assert!((r.value - 1.0).abs() < 1e-8, "{cfg:?}: {r:?}");
            assert!(r.converged);
        }
    }

    #[test]
    fn decaying_exponential() {
        for cfg in both() {
            let r = invert_laplace(|s| 1.0 / (s + 1.0), 1.0, &cfg, 1.0);
            assert!((r.value - (-1.0f64).exp()).abs() < 1e-8, "{cfg:?}: {r:?}");
        }
    }

    #[test]
    fn euler_nodes_stay_in_right_half_plane() {
        for (s, _) in nodes(InversionMethod::Euler, 18, 3e-4) {
            assert!(s.re > 0.0);
        }
    }

    #[test]
    fn ramp_and_sine() {
        for cfg in both() {
            let r = invert_laplace(|s| 1.0 / (s * s), 3.0, &cfg, 1.0);
            assert!((r.value - 3.0).abs() < 1e-7, "{cfg:?}: {r:?}");
            let r = invert_laplace(|s| 1.0 / (s * s + 1.0), 1.0, &cfg, 1.0);
            assert!((r.value - 1f64.sin()).abs() < 1e-7, "{cfg:?}: {r:?}");
        }
    }
}
