//! Laplace functionals of α-Ginibre shot noise as radial Fredholm products.
//!
//! For a radial modifier `g(r; s)` and an α-Ginibre field of density ζ on a
//! disk of radius R, the Fredholm determinant reduces to
//!
//! ```text
//! ∏_{n=0}^{N} (1 + α I_n)^{-1/α},   I_n = (1/n!) ∫_0^{πζR²} e^{-u} u^n g(√(u/πζ); s) du,
//! ```
//!
//! and the Poisson limit to `exp(-∫_0^{πζR²} g du)`. The integrals are taken
//! in the variable `u = πζr²` on a composite Gauss–Legendre rule graded
//! geometrically towards the origin, where `g` varies on the scale
//! `(sθP/m)^{1/μ}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::NumericError;
use crate::params::Repulsion;
use crate::quadrature::{graded_panels, CompositeRule};

/// Smallest graded panel in the `u` variable.
const SMALLEST_U: f64 = 1e-24;
/// Width of the equal panels used above `u = 1` for Ginibre rows.
const UNIFORM_WIDTH: f64 = 3.0;
const POINTS: usize = 16;
/// Row entries below this weight are dropped (|g| ≤ 2).
const WEIGHT_FLOOR: f64 = 1e-20;

/// Radial modifier `g(r; s)` replacing `1 − e^{−sφ(r)}`.
pub trait RadialModifier: Sync {
    fn eval(&self, r: f64, s: Complex64) -> Complex64;
}

impl<F: Fn(f64, Complex64) -> Complex64 + Sync> RadialModifier for F {
    fn eval(&self, r: f64, s: Complex64) -> Complex64 {
        self(r, s)
    }
}

/// `g(r; s) = 1 − (1 + sθP/(m r^μ))^{−m}`, the Nakagami-m averaged modifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModifier {
    pub power: f64,
    pub fading_mean: f64,
    pub shape: f64,
    pub path_loss: f64,
}

impl FadingModifier {
    pub fn value(&self, r: f64, s: Complex64) -> Complex64 {
        let z = s * (self.fading_mean * self.power / (self.shape * r.powf(self.path_loss)));
        let m = self.shape;
        if m == m.trunc() && m <= 8.0 {
            // 1 − w^m = (1 − w)(1 + w + … + w^{m−1}) with w = 1/(1 + z)
            let w = (Complex64::new(1.0, 0.0) + z).inv();
            let mut sum = Complex64::new(1.0, 0.0);
            let mut pow = Complex64::new(1.0, 0.0);
            for _ in 1..m as usize {
                pow *= w;
                sum += pow;
            }
            return z * w * sum;
        }
        -expm1(ln1p(z) * -m)
    }
}

impl RadialModifier for FadingModifier {
    fn eval(&self, r: f64, s: Complex64) -> Complex64 {
        self.value(r, s)
    }
}

/// `ln(1 + z)` accurate for small `|z|`.
pub fn ln1p(z: Complex64) -> Complex64 {
    if !z.re.is_finite() || !z.im.is_finite() || z.norm() > 0.5 {
        return (Complex64::new(1.0, 0.0) + z).ln();
    }
    let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    let im = z.im.atan2(1.0 + z.re);
    Complex64::new(re, im)
}

/// `e^z − 1` accurate for small `|z|`.
pub fn expm1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half * half,
        z.re.exp() * z.im.sin(),
    )
}

/// Default truncation: at least 100 factors and enough to cover the bulk of
/// `Gamma(n+1, 1)` mass inside the window.
pub fn default_n_closed(density: f64, window_radius: f64) -> usize {
    let u = PI * density * window_radius * window_radius;
    (u + 10.0 * u.sqrt() + 10.0).ceil().max(100.0) as usize
}

struct Row {
    start: usize,
    weights: Vec<f64>,
}

struct Grid {
    rule: CompositeRule,
    radii: Vec<f64>,
    rows: Vec<Row>,
}

impl Grid {
    fn build(
        repulsion: Repulsion,
        density: f64,
        window_radius: f64,
        n_closed: usize,
        points: usize,
    ) -> Self {
        let upper = PI * density * window_radius * window_radius;
        let uniform = match repulsion {
            Repulsion::Poisson => None,
            Repulsion::Ginibre { .. } => Some(UNIFORM_WIDTH),
        };
        let rule = CompositeRule::from_panels(graded_panels(upper, SMALLEST_U, uniform), points);
        let radii = rule
            .nodes
            .iter()
            .map(|&u| (u / (PI * density)).sqrt())
            .collect();
        let rows = match repulsion {
            Repulsion::Poisson => vec![Row {
                start: 0,
                weights: rule.weights.clone(),
            }],
            Repulsion::Ginibre { .. } => (0..=n_closed)
                .map(|n| {
                    let lg = ln_gamma(n as f64 + 1.0);
                    let full: Vec<f64> = rule
                        .nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&u, &w)| w * (-u + n as f64 * u.ln() - lg).exp())
                        .collect();
                    let first = full.iter().position(|&w| w >= WEIGHT_FLOOR);
                    let last = full.iter().rposition(|&w| w >= WEIGHT_FLOOR);
                    match (first, last) {
                        (Some(a), Some(b)) => Row {
                            start: a,
                            weights: full[a..=b].to_vec(),
                        },
                        _ => Row {
                            start: 0,
                            weights: Vec::new(),
                        },
                    }
                })
                .collect(),
        };
        Grid { rule, radii, rows }
    }

    fn modifier_values(&self, modifier: &dyn RadialModifier, s: Complex64) -> Vec<Complex64> {
        self.radii.iter().map(|&r| modifier.eval(r, s)).collect()
    }

    fn integrals(&self, g: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = g.iter().map(|v| v.re).collect();
        let im: Vec<f64> = g.iter().map(|v| v.im).collect();
        self.rows
            .iter()
            .map(|row| {
                let range = row.start..row.start + row.weights.len();
                Complex64::new(
                    dot(&row.weights, &re[range.clone()]),
                    dot(&row.weights, &im[range]),
                )
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * i + k] * b[4 * i + k];
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Radial Fredholm product for one (repulsion, density, window, N) setting.
/// The quadrature rows are precomputed once and reused for every `s`.
pub struct RadialProduct {
    repulsion: Repulsion,
    density: f64,
    window_radius: f64,
    n_closed: usize,
    grid: Option<Grid>,
    refined: OnceLock<Option<Grid>>,
}

impl std::fmt::Debug for RadialProduct {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProduct")
            .field("repulsion", &self.repulsion)
            .field("density", &self.density)
            .field("window_radius", &self.window_radius)
            .field("n_closed", &self.n_closed)
            .finish()
    }
}

impl RadialProduct {
    /// `n_closed = None` selects [`default_n_closed`].
    pub fn new(
        repulsion: Repulsion,
        density: f64,
        window_radius: f64,
        n_closed: Option<usize>,
    ) -> Self {
        assert!(density >= 0.0 && window_radius > 0.0);
        let n_closed = n_closed.unwrap_or_else(|| default_n_closed(density, window_radius));
        assert!(n_closed >= 1);
        let grid = (density > 0.0)
            .then(|| Grid::build(repulsion, density, window_radius, n_closed, POINTS));
        RadialProduct {
            repulsion,
            density,
            window_radius,
            n_closed,
            grid,
            refined: OnceLock::new(),
        }
    }

    pub fn repulsion(&self) -> Repulsion {
        self.repulsion
    }

    pub fn n_closed(&self) -> usize {
        self.n_closed
    }

    pub fn node_count(&self) -> usize {
        self.grid.as_ref().map_or(0, |g| g.rule.nodes.len())
    }

    /// The inner integrals `I_n` (a single entry holding the Poisson
    /// exponent for the Poisson sentinel).
    pub fn integrals(&self, modifier: &dyn RadialModifier, s: Complex64) -> Vec<Complex64> {
        match &self.grid {
            None => Vec::new(),
            Some(grid) => grid.integrals(&grid.modifier_values(modifier, s)),
        }
    }

    fn combine(&self, integrals: &[Complex64], real: bool) -> Result<Complex64, NumericError> {
        match self.repulsion {
            Repulsion::Poisson => Ok(-integrals.first().copied().unwrap_or_default()),
            Repulsion::Ginibre { kappa } => {
                let k = f64::from(kappa);
                let mut log = Complex64::new(0.0, 0.0);
                for (n, &i) in integrals.iter().enumerate() {
                    let base = Complex64::new(1.0, 0.0) - i / k;
                    if real && base.re < 0.0 {
                        if base.re < -1e-12 {
                            return Err(NumericError::NegativeBase {
                                n,
                                base: base.re,
                                integral: i.re,
                            });
                        }
                        return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
                    }
                    log += ln1p(-i / k) * k;
                }
                Ok(log)
            }
        }
    }

    /// `ln L(s)`.
    pub fn log_evaluate(
        &self,
        modifier: &dyn RadialModifier,
        s: Complex64,
    ) -> Result<Complex64, NumericError> {
        if s == Complex64::new(0.0, 0.0) || self.grid.is_none() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let integrals = self.integrals(modifier, s);
        self.combine(&integrals, s.im == 0.0)
    }

    /// `L(s)`; exactly 1 at `s = 0`.
    pub fn evaluate(
        &self,
        modifier: &dyn RadialModifier,
        s: Complex64,
    ) -> Result<Complex64, NumericError> {
        self.log_evaluate(modifier, s).map(|l| l.exp())
    }

    /// Real-argument convenience wrapper.
    pub fn evaluate_real(&self, modifier: &dyn RadialModifier, s: f64) -> Result<f64, NumericError> {
        self.evaluate(modifier, Complex64::new(s, 0.0)).map(|v| v.re)
    }

    /// Evaluates with a doubled-order rule as a check; reports the panel with
    /// the largest discrepancy when the two disagree by more than `tol`.
    pub fn evaluate_checked(
        &self,
        modifier: &dyn RadialModifier,
        s: Complex64,
        tol: f64,
    ) -> Result<Complex64, NumericError> {
        let base = self.evaluate(modifier, s)?;
        let Some(grid) = &self.grid else {
            return Ok(base);
        };
        let refined = self
            .refined
            .get_or_init(|| {
                Some(Grid::build(
                    self.repulsion,
                    self.density,
                    self.window_radius,
                    self.n_closed,
                    2 * POINTS,
                ))
            })
            .as_ref()
            .expect("refined grid");
        let g_ref = refined.modifier_values(modifier, s);
        let fine = self
            .combine(&refined.integrals(&g_ref), s.im == 0.0)?
            .exp();
        let change = (fine - base).norm();
        if change <= tol {
            return Ok(fine);
        }
        let g = grid.modifier_values(modifier, s);
        let mut coarse_panels = vec![Complex64::new(0.0, 0.0); grid.rule.panels.len()];
        for (j, &p) in grid.rule.panel_of_node.iter().enumerate() {
            coarse_panels[p] += g[j] * grid.rule.weights[j];
        }
        let mut fine_panels = vec![Complex64::new(0.0, 0.0); refined.rule.panels.len()];
        for (j, &p) in refined.rule.panel_of_node.iter().enumerate() {
            fine_panels[p] += g_ref[j] * refined.rule.weights[j];
        }
        let worst = coarse_panels
            .iter()
            .zip(&fine_panels)
            .map(|(a, b)| (a - b).norm())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map_or(0, |(i, _)| i);
        let (lo, hi) = grid.rule.panels[worst];
        let to_r = |u: f64| (u / (PI * self.density)).sqrt();
        Err(NumericError::RadialQuadrature {
            lo,
            hi,
            r_lo: to_r(lo),
            r_hi: to_r(hi),
            change,
        })
    }

    /// `lim_{s→∞} L(s)`: the probability that the window holds no point.
    pub fn empty_probability(&self) -> f64 {
        if self.density == 0.0 {
            return 1.0;
        }
        let u = PI * self.density * self.window_radius * self.window_radius;
        match self.repulsion {
            Repulsion::Poisson => (-u).exp(),
            Repulsion::Ginibre { kappa } => {
                let k = f64::from(kappa);
                let log: f64 = (0..=self.n_closed)
                    .map(|n| {
                        let q = gamma_ur(n as f64 + 1.0, u);
                        k * ((k - 1.0 + q) / k).ln()
                    })
                    .sum();
                log.exp()
            }
        }
    }
}

/// Convenience form of the radial product for a one-off evaluation.
pub fn radial_fredholm_det(
    modifier: &dyn RadialModifier,
    repulsion: Repulsion,
    density: f64,
    window_radius: f64,
    s: Complex64,
    n_closed: Option<usize>,
) -> Result<Complex64, NumericError> {
    RadialProduct::new(repulsion, density, window_radius, n_closed).evaluate(modifier, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rayleigh() -> FadingModifier {
        FadingModifier {
            power: 0.2,
            fading_mean: 1.0,
            shape: 1.0,
            path_loss: 4.0,
        }
    }

    #[test]
    fn zero_argument_gives_one() {
        for rep in [Repulsion::GINIBRE, Repulsion::Poisson, Repulsion::Ginibre { kappa: 3 }] {
            let v = radial_fredholm_det(&rayleigh(), rep, 0.02, 30.0, Complex64::new(0.0, 0.0), None)
                .unwrap();
            assert_eq!(v, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn modifier_bounds() {
        let g = rayleigh();
        let mut prev = 1.0;
        for r in [1e-3, 0.1, 1.0, 5.0, 30.0] {
            let v = g.value(r, Complex64::new(10.0, 0.0)).re;
            assert!((0.0..=1.0).contains(&v) && v <= prev);
            prev = v;
        }
        assert_eq!(g.value(2.0, Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn small_argument_is_accurate() {
        let g = rayleigh();
        let s = 1e-14;
        let z = s * 0.2 / 16.0;
        let v = g.value(2.0, Complex64::new(s, 0.0)).re;
        assert!((v - z / (1.0 + z)).abs() < 1e-30);
    }

    #[test]
    fn row_sums_match_poisson_exponent() {
        let g = rayleigh();
        let s = Complex64::new(50.0, 20.0);
        let ginibre = RadialProduct::new(Repulsion::GINIBRE, 0.02, 30.0, None);
        let poisson = RadialProduct::new(Repulsion::Poisson, 0.02, 30.0, None);
        let total: Complex64 = ginibre.integrals(&g, s).iter().sum();
        let exponent = poisson.integrals(&g, s)[0];
        assert!((total - exponent).norm() < 1e-9 * exponent.norm());
    }

    #[test]
    fn empty_probability_is_large_s_limit() {
        let p = RadialProduct::new(Repulsion::Ginibre { kappa: 2 }, 0.002, 20.0, None);
        let far = p.evaluate_real(&rayleigh(), 1e30).unwrap();
        let atom = p.empty_probability();
        assert!((far - atom).abs() < 1e-6 * atom, "{far} vs {atom}");
    }

    #[test]
    fn refined_rule_agrees() {
        let p = RadialProduct::new(Repulsion::GINIBRE, 0.02, 30.0, None);
        for s in [1e-8, 1e-2, 1e3, 1e6] {
            p.evaluate_checked(&rayleigh(), Complex64::new(s, 3.0 * s), 1e-11)
                .unwrap();
        }
    }
}
