//! Gauss–Legendre rules, graded composite rules and adaptive Gauss–Kronrod.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A fixed composite rule with the panel of every node recorded.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub panels: Vec<(f64, f64)>,
    pub panel_of_node: Vec<usize>,
}

impl CompositeRule {
    /// Applies `points`-point Gauss–Legendre on every panel.
    pub fn from_panels(panels: Vec<(f64, f64)>, points: usize) -> Self {
        let (x, w) = gauss_legendre(points);
        let mut nodes = Vec::with_capacity(panels.len() * points);
        let mut weights = Vec::with_capacity(panels.len() * points);
        let mut panel_of_node = Vec::with_capacity(panels.len() * points);
        for (p, &(a, b)) in panels.iter().enumerate() {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(c + h * xi);
                weights.push(h * wi);
                panel_of_node.push(p);
            }
        }
        CompositeRule {
            nodes,
            weights,
            panels,
            panel_of_node,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Panels on [0, upper] graded geometrically (ratio 2) towards 0 down to
/// `smallest`. With `uniform_width`, the part above 1 is split into equal
/// panels no wider than that width.
pub fn graded_panels(upper: f64, smallest: f64, uniform_width: Option<f64>) -> Vec<(f64, f64)> {
    assert!(upper > 0.0 && smallest > 0.0);
    let mut panels = Vec::new();
    let mut top = upper;
    if let Some(width) = uniform_width {
        if upper > 1.0 {
            let count = ((upper - 1.0) / width).ceil().max(1.0) as usize;
            let h = (upper - 1.0) / count as f64;
            for i in 0..count {
                panels.push((1.0 + i as f64 * h, 1.0 + (i + 1) as f64 * h));
            }
            top = 1.0;
        }
    }
    let mut hi = top;
    while hi > smallest {
        let lo = 0.5 * hi;
        panels.push((lo, hi));
        hi = lo;
    }
    panels.push((0.0, hi));
    panels.sort_by(|a, b| a.0.total_cmp(&b.0));
    panels
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Globally adaptive 15-point Gauss–Kronrod integration on [a, b].
pub fn adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            converged: true,
            evaluations: 0,
        };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let value: f64 = intervals.iter().map(|i| i.2).sum();
        let error: f64 = intervals.iter().map(|i| i.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return QuadResult {
                value,
                error,
                converged: true,
                evaluations,
            };
        }
        if intervals.len() >= max_intervals {
            return QuadResult {
                value,
                error,
                converged: false,
                evaluations,
            };
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 32, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((approx - exact).abs() < 1e-13, "n = {n}");
            let even = (2 * n - 2) as i32;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(even)).sum();
            assert!((approx - 2.0 / (even as f64 + 1.0)).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn graded_rule_integrates_gamma_densities() {
        let rule = CompositeRule::from_panels(graded_panels(60.0, 1e-18, Some(2.0)), 16);
        for n in [0_i32, 1, 5, 30] {
            let lg = statrs::function::gamma::ln_gamma(n as f64 + 1.0);
            let v = rule.integrate(|u| (-u + n as f64 * u.ln() - lg).exp());
            let exact = statrs::function::gamma::gamma_lr(n as f64 + 1.0, 60.0);
            assert!((v - exact).abs() < 1e-13, "n = {n}: {v} vs {exact}");
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let r = adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 1e-12, 500);
        let exact = 2.0 * (1.0 / 1e-2_f64) * (1.0 / 1e-2_f64).atan();
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-8 * exact);
    }
}
