use d2d_core::analytic::incident::TAIL_MASS;
use d2d_core::analytic::{Diagnostics, FadingModifier, IncidentPowerDistribution, RadialProduct};
use d2d_core::point_process::FieldSampler;
use d2d_core::quadrature::adaptive;
use d2d_core::{validate, NetworkParams, Repulsion, ValidatedParams};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

const DENSITY: f64 = 0.02;
const RADIUS: f64 = 30.0;

fn rayleigh(power: f64, path_loss: f64) -> FadingModifier {
    FadingModifier {
        power,
        fading_mean: 1.0,
        shape: 1.0,
        path_loss,
    }
}

/// Monte Carlo mean and standard error of `E[∏ f(r_i)]` over field draws.
fn functional_mc(
    repulsion: Repulsion,
    draws: usize,
    seed: u64,
    factor: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let sampler = FieldSampler::new(repulsion, DENSITY, RADIUS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radii = Vec::new();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        radii.clear();
        sampler.sample_radii(&mut rng, &mut radii);
        let v: f64 = radii.iter().map(|&r| factor(r)).product();
        sum += v;
        sum_sq += v * v;
    }
    let n = draws as f64;
    let mean = sum / n;
    (mean, ((sum_sq / n - mean * mean) / n).sqrt())
}

#[test]
fn rayleigh_functional_matches_simulation() {
    let s = 1e3;
    let modifier = rayleigh(0.2, 4.0);
    for (repulsion, seed) in [
        (Repulsion::GINIBRE, 1),
        (Repulsion::Ginibre { kappa: 2 }, 2),
        (Repulsion::Poisson, 3),
    ] {
        let exact = RadialProduct::new(repulsion, DENSITY, RADIUS, None)
            .evaluate_real(&modifier, s)
            .unwrap();
        let (mc, se) = functional_mc(repulsion, 20_000, seed, |r| {
            1.0 / (1.0 + s * 0.2 / r.powi(4))
        });
        assert!(
            (mc - exact).abs() < 4.0 * se,
            "{repulsion}: analytic {exact} vs mc {mc} ± {se}"
        );
    }
}

#[test]
fn bounded_attenuation_functional_matches_simulation() {
    let phi = |r: f64| r.powi(-4).min(1.0);
    let modifier = move |r: f64, s: Complex64| -> Complex64 {
        Complex64::new(1.0, 0.0) - (-s * phi(r)).exp()
    };
    for repulsion in [Repulsion::GINIBRE, Repulsion::Ginibre { kappa: 4 }] {
        let exact = RadialProduct::new(repulsion, DENSITY, RADIUS, None)
            .evaluate_real(&modifier, 1.0)
            .unwrap();
        let (mc, se) = functional_mc(repulsion, 20_000, 9, |r| (-phi(r)).exp());
        assert!(
            (mc - exact).abs() < 4.0 * se,
            "{repulsion}: analytic {exact} vs mc {mc} ± {se}"
        );
    }
}

#[test]
fn weak_repulsion_approaches_poisson() {
    let modifier = rayleigh(0.2, 4.0);
    let weak = RadialProduct::new(Repulsion::Ginibre { kappa: 1024 }, DENSITY, RADIUS, None)
        .evaluate_real(&modifier, 1e3)
        .unwrap();
    let poisson = RadialProduct::new(Repulsion::Poisson, DENSITY, RADIUS, None)
        .evaluate_real(&modifier, 1e3)
        .unwrap();
    assert!(((weak - poisson) / poisson).abs() < 1e-3, "{weak} vs {poisson}");
}

#[test]
fn refined_quadrature_agrees() {
    let modifier = rayleigh(0.2, 4.0);
    for repulsion in [Repulsion::GINIBRE, Repulsion::Ginibre { kappa: 2 }, Repulsion::Poisson] {
        let product = RadialProduct::new(repulsion, DENSITY, RADIUS, None);
        for s in [1.0, 1e2, 1e4, 1e6] {
            for arg in [Complex64::new(s, 0.0), Complex64::new(s, 3.0 * s)] {
                product
                    .evaluate_checked(&modifier, arg, 1e-9)
                    .unwrap_or_else(|e| panic!("{repulsion} at {arg}: {e}"));
            }
        }
    }
}

#[test]
fn large_argument_tends_to_empty_window_probability() {
    for repulsion in [Repulsion::GINIBRE, Repulsion::Ginibre { kappa: 3 }, Repulsion::Poisson] {
        let product = RadialProduct::new(repulsion, DENSITY, 5.0, None);
        let empty = product.empty_probability();
        let limit = product
            .evaluate_real(&rayleigh(0.2, 4.0), 1e14)
            .unwrap();
        assert!((limit - empty).abs() < 1e-6 * empty.max(1e-3), "{repulsion}: {limit} vs {empty}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn laplace_is_decreasing_and_log_convex(
        kappa in prop_oneof![Just(0u32), 1u32..5],
        density in 1e-3..0.05f64,
        path_loss in 2.5..5.0f64,
        shape in 1u32..5,
        s in 1.0..1e6f64,
    ) {
        let repulsion = if kappa == 0 { Repulsion::Poisson } else { Repulsion::Ginibre { kappa } };
        let product = RadialProduct::new(repulsion, density, RADIUS, None);
        let modifier = FadingModifier { power: 0.2, fading_mean: 1.0, shape: f64::from(shape), path_loss };
        let l = |x: f64| product.log_evaluate(&modifier, Complex64::new(x, 0.0)).unwrap().re;
        let (a, b, c) = (l(s), l(2.0 * s), l(3.0 * s));
        prop_assert!(a <= 0.0);
        prop_assert!(b <= a + 1e-12 && c <= b + 1e-12);
        prop_assert!(b <= 0.5 * (a + c) + 1e-9 * a.abs().max(1.0));
    }
}

fn table_one(repulsion: Repulsion) -> ValidatedParams {
    let mut p = NetworkParams::table_one();
    p.repulsion = repulsion;
    validate(p).unwrap()
}

fn sample_incident_power(params: &NetworkParams, n: usize, seed: u64) -> Vec<f64> {
    let sampler = FieldSampler::new(params.repulsion, params.active_density_a(), params.window_radius);
    let gain = Gamma::new(params.nakagami_m, params.ambient_fading_mean / params.nakagami_m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radii = Vec::new();
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            radii.clear();
            sampler.sample_radii(&mut rng, &mut radii);
            radii
                .iter()
                .map(|&r| params.power_a * gain.sample(&mut rng) / r.powf(params.path_loss))
                .sum()
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn ks_on_grid(params: &ValidatedParams, samples: &[f64], grid: &[f64]) -> f64 {
    let dist = IncidentPowerDistribution::new(params);
    let n = samples.len() as f64;
    grid.iter()
        .map(|&rho| {
            let empirical = samples.partition_point(|&x| x <= rho) as f64 / n;
            (empirical - dist.cdf(rho).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn incident_power_law_matches_simulation() {
    let grid: Vec<f64> = (0..40).map(|i| 10f64.powf(-6.0 + 5.0 * i as f64 / 39.0)).collect();
    let mut settings = Vec::new();
    settings.push(table_one(Repulsion::GINIBRE));
    let mut p = NetworkParams::table_one();
    p.repulsion = Repulsion::Ginibre { kappa: 2 };
    p.path_loss = 3.0;
    p.nakagami_m = 4.0;
    p.set("l_A", 0.5, true).unwrap();
    settings.push(validate(p).unwrap());
    settings.push(table_one(Repulsion::Poisson));
    for (i, params) in settings.iter().enumerate() {
        let samples = sample_incident_power(params, 50_000, 100 + i as u64);
        let ks = ks_on_grid(params, &samples, &grid);
        assert!(ks < 0.01, "setting {i}: KS {ks}");
    }
}

#[test]
fn density_integrates_to_cdf_increments() {
    let params = table_one(Repulsion::GINIBRE);
    let dist = IncidentPowerDistribution::new(&params);
    let diag = Diagnostics::new();
    let upper = dist.upper_quantile(&diag).unwrap();
    assert!(1.0 - dist.cdf(upper).unwrap() <= TAIL_MASS);
    let lower: f64 = 1e-9;
    let mass = adaptive(
        |x| {
            let rho = x.exp();
            rho * dist.pdf(rho).unwrap()
        },
        lower.ln(),
        upper.ln(),
        1e-9,
        1e-8,
        400,
    );
    assert!(mass.converged);
    let total = mass.value + dist.cdf(lower).unwrap() + (1.0 - dist.cdf(upper).unwrap());
    assert!((total - 1.0).abs() < 1e-6, "{total}");
    assert!(diag.is_clean());
}

#[test]
fn doubling_the_window_moves_the_cdf_by_the_far_field_only() {
    let near = table_one(Repulsion::GINIBRE);
    let mut p = NetworkParams::table_one();
    p.window_radius = 2.0 * RADIUS;
    let far = validate(p).unwrap();
    let (a, b) = (IncidentPowerDistribution::new(&near), IncidentPowerDistribution::new(&far));
    // Mean power contributed by the annulus (R, 2R] is 3πζθP/(4R²) for μ = 4.
    let shift = 3.0 * std::f64::consts::PI * DENSITY * 0.2 / (4.0 * RADIUS * RADIUS);
    for rho in [near.backscatter_power_threshold(), near.htt_power_threshold()] {
        let (fa, fb) = (a.cdf(rho).unwrap(), b.cdf(rho).unwrap());
        assert!(fb <= fa + 1e-6, "{rho}: {fa} -> {fb}");
        assert!(fa - fb < 1e-2, "{rho}: {fa} -> {fb}");
        assert!(fa - fb <= a.cdf(rho + shift).unwrap() - a.cdf(rho - shift).unwrap() + 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cdf_is_monotone_and_density_nonnegative(
        kappa in prop_oneof![Just(0u32), 1u32..4],
        zeta in 0.005..0.04f64,
        path_loss in prop_oneof![Just(3.0), Just(4.0)],
        shape in 1u32..5,
    ) {
        let mut p = NetworkParams::table_one();
        p.repulsion = if kappa == 0 { Repulsion::Poisson } else { Repulsion::Ginibre { kappa } };
        p.set("zeta_A", zeta, true).unwrap();
        p.path_loss = path_loss;
        p.nakagami_m = f64::from(shape);
        let dist = IncidentPowerDistribution::new(&validate(p).unwrap());
        let mut last = 0.0;
        for i in 0..50 {
            let rho = 10f64.powf(-8.0 + 7.0 * i as f64 / 49.0);
            let f = dist.cdf(rho).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= last - 1e-12, "cdf decreased at {}: {} < {}", rho, f, last);
            prop_assert!(dist.pdf(rho).unwrap() >= 0.0);
            last = f;
        }
    }
}
