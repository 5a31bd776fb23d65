//! The law of the incident power `P_I` at the hybrid transmitter.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use super::fredholm::{FadingModifier, RadialProduct};
use super::inversion::{nodes, InversionConfig, Inverted};
use crate::error::NumericError;
use crate::params::{NetworkParams, Repulsion, ValidatedParams};

/// Collects non-fatal numerical issues raised while evaluating a metric.
#[derive(Debug, Default)]
pub struct Diagnostics {
    issues: Mutex<Vec<NumericError>>,
}

impl Diagnostics {
    const CAP: usize = 32;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, issue: NumericError) {
        let mut issues = self.issues.lock().expect("diagnostics lock");
        if issues.len() < Self::CAP {
            issues.push(issue);
        }
    }

    pub fn issues(&self) -> Vec<NumericError> {
        self.issues.lock().expect("diagnostics lock").clone()
    }

    pub fn is_clean(&self) -> bool {
        self.issues.lock().expect("diagnostics lock").is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionOptions {
    pub inversion: InversionConfig,
    /// Number of radial factors; `None` selects the density-dependent default.
    pub n_closed: Option<usize>,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            inversion: InversionConfig::default(),
            n_closed: None,
        }
    }
}

type NodeKey = (u64, u64);

/// Laplace transform, pdf and cdf of `P_I`, with caches for contour-node
/// transform values and for inverted abscissae.
#[derive(Debug)]
pub struct IncidentPowerDistribution {
    product: RadialProduct,
    modifier: FadingModifier,
    options: DistributionOptions,
    atom: f64,
    degenerate: bool,
    node_cache: RwLock<HashMap<NodeKey, Complex64>>,
    cdf_cache: RwLock<HashMap<u64, Inverted>>,
    pdf_cache: RwLock<HashMap<u64, Inverted>>,
    upper_quantile: OnceLock<f64>,
}

/// Tail mass beyond the upper integration cutoff.
pub const TAIL_MASS: f64 = 1e-6;

impl IncidentPowerDistribution {
    pub fn new(params: &ValidatedParams) -> Self {
        Self::with_options(params, DistributionOptions::default())
    }

    pub fn with_options(params: &ValidatedParams, options: DistributionOptions) -> Self {
        let p: &NetworkParams = params;
        let density = p.active_density_a();
        let product = RadialProduct::new(p.repulsion, density, p.window_radius, options.n_closed);
        let degenerate = density == 0.0 || p.power_a == 0.0;
        let atom = if degenerate {
            1.0
        } else {
            product.empty_probability()
        };
        IncidentPowerDistribution {
            product,
            modifier: FadingModifier {
                power: p.power_a,
                fading_mean: p.ambient_fading_mean,
                shape: p.nakagami_m,
                path_loss: p.path_loss,
            },
            options,
            atom,
            degenerate,
            node_cache: RwLock::new(HashMap::new()),
            cdf_cache: RwLock::new(HashMap::new()),
            pdf_cache: RwLock::new(HashMap::new()),
            upper_quantile: OnceLock::new(),
        }
    }

    pub fn options(&self) -> &DistributionOptions {
        &self.options
    }

    /// `P[P_I = 0]`, the mass of the atom at the origin.
    pub fn atom(&self) -> f64 {
        self.atom
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `L_{P_I}(s) = E[e^{−s P_I}]`, memoized per node.
    pub fn laplace(&self, s: Complex64) -> Result<Complex64, NumericError> {
        if self.degenerate {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let key = (s.re.to_bits(), s.im.to_bits());
        if let Some(v) = self.node_cache.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.product.evaluate(&self.modifier, s)?;
        self.node_cache.write().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// Every cached `(s, L(s))` pair, ordered by `s`.
    pub fn node_table(&self) -> Vec<(Complex64, Complex64)> {
        let cache = self.node_cache.read().expect("cache lock");
        let mut rows: Vec<_> = cache
            .iter()
            .map(|(&(re, im), &v)| (Complex64::new(f64::from_bits(re), f64::from_bits(im)), v))
            .collect();
        rows.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        rows
    }

    fn invert(
        &self,
        t: f64,
        transform: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
        scale: f64,
    ) -> Result<Inverted, NumericError> {
        let cfg = &self.options.inversion;
        let main = nodes(cfg.method, cfg.order, t);
        let check = if cfg.check {
            nodes(cfg.method, cfg.check_order(), t)
        } else {
            Vec::new()
        };
        let sum = |set: &[(Complex64, Complex64)]| -> Result<f64, NumericError> {
            let values: Vec<Complex64> = set
                .par_iter()
                .map(|&(s, _)| self.laplace(s))
                .collect::<Result<_, _>>()?;
            Ok(set
                .iter()
                .zip(values)
                .map(|(&(s, w), l)| (w * transform(s, l)).re)
                .sum())
        };
        let value = sum(&main)?;
        if !cfg.check {
            return Ok(Inverted {
                value,
                error_indicator: 0.0,
                converged: value.is_finite(),
            });
        }
        let other = sum(&check)?;
        let error_indicator = (value - other).abs();
        Ok(Inverted {
            value,
            error_indicator,
            converged: value.is_finite() && error_indicator <= cfg.tolerance * scale,
        })
    }

    /// Raw inversion of `L(s)/s` at `rho > 0` (cached).
    pub fn cdf_inversion(&self, rho: f64) -> Result<Inverted, NumericError> {
        if let Some(v) = self.cdf_cache.read().expect("cache lock").get(&rho.to_bits()) {
            return Ok(*v);
        }
        let v = self.invert(rho, |s, l| l / s, 1.0)?;
        self.cdf_cache.write().expect("cache lock").insert(rho.to_bits(), v);
        Ok(v)
    }

    /// Raw inversion of `L(s) − P[P_I = 0]` at `rho > 0` (cached).
    pub fn pdf_inversion(&self, rho: f64) -> Result<Inverted, NumericError> {
        if let Some(v) = self.pdf_cache.read().expect("cache lock").get(&rho.to_bits()) {
            return Ok(*v);
        }
        let atom = self.atom;
        let v = self.invert(rho, move |_, l| l - atom, 1.0 / rho)?;
        self.pdf_cache.write().expect("cache lock").insert(rho.to_bits(), v);
        Ok(v)
    }

    /// `F(rho) = P[P_I ≤ rho]`, clamped to [0, 1]; issues go to `diag`.
    pub fn cdf_with(&self, rho: f64, diag: &Diagnostics) -> Result<f64, NumericError> {
        if self.degenerate {
            return Ok(if rho >= 0.0 { 1.0 } else { 0.0 });
        }
        if rho < 0.0 {
            return Ok(0.0);
        }
        if rho == 0.0 {
            return Ok(self.atom);
        }
        let inv = self.cdf_inversion(rho)?;
        let tol = self.options.inversion.tolerance;
        if !inv.converged {
            diag.record(NumericError::Inversion {
                abscissa: rho,
                indicator: inv.error_indicator,
            });
        }
        if inv.value < -tol || inv.value > 1.0 + tol || !inv.value.is_finite() {
            diag.record(NumericError::CdfRange {
                abscissa: rho,
                value: inv.value,
            });
        }
        Ok(inv.value.clamp(0.0, 1.0))
    }

    /// Density of the continuous part of `P_I`, floored at 0; issues go to `diag`.
    pub fn pdf_with(&self, rho: f64, diag: &Diagnostics) -> Result<f64, NumericError> {
        if self.degenerate || rho <= 0.0 {
            return Ok(0.0);
        }
        let inv = self.pdf_inversion(rho)?;
        let tol = self.options.inversion.tolerance / rho;
        if !inv.converged {
            diag.record(NumericError::Inversion {
                abscissa: rho,
                indicator: inv.error_indicator,
            });
        }
        if inv.value < -tol || !inv.value.is_finite() {
            diag.record(NumericError::PdfNegative {
                abscissa: rho,
                value: inv.value,
            });
        }
        Ok(inv.value.max(0.0))
    }

    /// Strict cdf: any recorded issue becomes an error.
    pub fn cdf(&self, rho: f64) -> Result<f64, NumericError> {
        let diag = Diagnostics::new();
        let v = self.cdf_with(rho, &diag)?;
        match diag.issues().into_iter().next() {
            Some(issue) => Err(issue),
            None => Ok(v),
        }
    }

    /// Strict pdf: any recorded issue becomes an error.
    pub fn pdf(&self, rho: f64) -> Result<f64, NumericError> {
        let diag = Diagnostics::new();
        let v = self.pdf_with(rho, &diag)?;
        match diag.issues().into_iter().next() {
            Some(issue) => Err(issue),
            None => Ok(v),
        }
    }

    /// Smallest `10^k` W with `1 − F ≤ TAIL_MASS`.
    pub fn upper_quantile(&self, diag: &Diagnostics) -> Result<f64, NumericError> {
        if let Some(&q) = self.upper_quantile.get() {
            return Ok(q);
        }
        let mut rho = 1e-12;
        while rho < 1e40 {
            if 1.0 - self.cdf_with(rho, diag)? <= TAIL_MASS {
                break;
            }
            rho *= 10.0;
        }
        Ok(*self.upper_quantile.get_or_init(|| rho))
    }
}

/// Law of `P_I` for validated parameters.
pub fn incident_power_distribution(params: &ValidatedParams) -> IncidentPowerDistribution {
    IncidentPowerDistribution::new(params)
}

/// `L_{P_I}(s)` evaluated directly (no caching).
pub fn laplace_incident_power(
    params: &ValidatedParams,
    s: Complex64,
) -> Result<Complex64, NumericError> {
    let p: &NetworkParams = params;
    if p.active_density_a() == 0.0 || p.power_a == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let product = RadialProduct::new(p.repulsion, p.active_density_a(), p.window_radius, None);
    product.evaluate(
        &FadingModifier {
            power: p.power_a,
            fading_mean: p.ambient_fading_mean,
            shape: p.nakagami_m,
            path_loss: p.path_loss,
        },
        s,
    )
}

/// Closed-form `(pdf, cdf)` of `P_I` for a Poisson field on the whole plane
/// with Rayleigh ambient fading of unit mean and path-loss exponent 4.
pub fn closed_form_ppp_rayleigh_mu4(
    params: &NetworkParams,
    rho: f64,
) -> Result<(f64, f64), NumericError> {
    let fail = |what: &str| Err(NumericError::Precondition(what.to_string()));
    if params.path_loss != 4.0 {
        return fail("mu must equal 4");
    }
    if params.nakagami_m != 1.0 {
        return fail("m must equal 1 (Rayleigh)");
    }
    if params.ambient_fading_mean != 1.0 {
        return fail("theta must equal 1");
    }
    if params.repulsion != Repulsion::Poisson {
        return fail("alpha must be the Poisson sentinel");
    }
    if rho <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let zeta = params.active_density_a();
    let c = zeta * params.power_a.sqrt() * PI * PI / 4.0;
    let cdf = erfc(c / rho.sqrt());
    let pdf = 0.25 * (PI / rho).powf(1.5) * zeta * params.power_a.sqrt() * (-c * c / rho).exp();
    Ok((pdf, cdf))
}
