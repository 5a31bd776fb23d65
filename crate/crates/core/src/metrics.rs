//! Energy outage, coverage and throughput of the hybrid link.
//!
//! The per-mode building blocks are
//!
//! * `O_B = F(ρ_B/(βϱ))`, `O_H = F(ρ_H/(ωβ))`;
//! * `C_B = ∫_{ρ_B/(βϱ)}^∞ exp(−λτ_B d^μ σ²/(δ(1−ϱ)ρ)) f(ρ) dρ`, which is also
//!   the STP backscatter-mode probability;
//! * `C_H = ∫_{ρ_H/(ωβ)}^∞ H(τ_H/(ωβρ − ρ_H)) f(ρ) dρ` with
//!   `H(y) = exp(−λ d^μ σ²(1−ω) y) · L_Q(λ d^μ (1−ω) y)` and `L_Q` the
//!   Laplace transform of the interference at the receiver;
//! * `T_H = (1−ω) W ∫ f(ρ) ∫_{log2(1+τ_H)}^∞ H((2^t−1)/(ωβρ−ρ_H)) dt dρ`.
//!
//! Outer integrals run on `ln ρ` up to the abscissa where `1 − F ≤ 1e−6` and
//! add a tail term.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use crate::analytic::fredholm::{FadingModifier, RadialProduct};
use crate::analytic::incident::{Diagnostics, IncidentPowerDistribution};
use crate::error::{Error, NumericError};
use crate::params::ValidatedParams;
use crate::quadrature::{adaptive, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Ptp,
    Stp,
    PureBackscatter,
    PureHtt,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Ptp,
        Protocol::Stp,
        Protocol::PureBackscatter,
        Protocol::PureHtt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Ptp => "ptp",
            Protocol::Stp => "stp",
            Protocol::PureBackscatter => "pure-bs",
            Protocol::PureHtt => "pure-htt",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ptp" => Ok(Protocol::Ptp),
            "stp" => Ok(Protocol::Stp),
            "pure-bs" | "pure_backscatter" => Ok(Protocol::PureBackscatter),
            "pure-htt" | "pure_htt" => Ok(Protocol::PureHtt),
            other => Err(Error::InvalidArgument(format!(
                "unknown protocol {other:?} (expected ptp, stp, pure-bs, pure-htt)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Analytic,
    MonteCarlo,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::MonteCarlo => "mc",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Backscatter,
    Htt,
}

/// Standard errors (Monte Carlo) or numerical error indicators (analytic).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricErrors {
    pub b: f64,
    pub o: f64,
    pub c: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolMetrics {
    pub protocol: Protocol,
    pub engine: Engine,
    /// Backscatter-mode probability.
    pub b: f64,
    /// Energy outage probability.
    pub o: f64,
    /// Coverage probability.
    pub c: f64,
    /// Average throughput (bit/s).
    pub t: f64,
    pub errors: MetricErrors,
    pub trials: Option<u64>,
    pub low_confidence: bool,
    pub issues: Vec<String>,
}

impl ProtocolMetrics {
    pub fn converged(&self) -> bool {
        self.issues.is_empty()
    }

    /// Half-widths of normal-approximation 95% intervals.
    pub fn ci95(&self) -> MetricErrors {
        let z = 1.959_963_984_540_054;
        MetricErrors {
            b: z * self.errors.b,
            o: z * self.errors.o,
            c: z * self.errors.c,
            t: z * self.errors.t,
        }
    }
}

/// Adaptive tolerances for the outer integrals.
const OUTER_ABS: f64 = 1e-8;
const OUTER_REL: f64 = 1e-6;
const OUTER_INTERVALS: usize = 400;
/// Width of the `ln y` panels of the throughput t-integral.
const T_PANEL: f64 = 0.5;
const T_POINTS: usize = 8;
const T_CUTOFF: f64 = 1e-9;
const T_MAX: f64 = 200.0;

/// Evaluates per-mode quantities for one parameter set against a shared
/// incident-power law.
pub struct AnalyticEvaluator<'a> {
    params: &'a ValidatedParams,
    dist: &'a IncidentPowerDistribution,
    diag: Diagnostics,
    interference: RadialProduct,
    interferer: FadingModifier,
    h_cache: RwLock<HashMap<(i64, usize), f64>>,
    gl: (Vec<f64>, Vec<f64>),
    c_b: OnceLock<Estimate>,
    c_h: OnceLock<Estimate>,
    t_h: OnceLock<Estimate>,
}

/// A value with its numerical error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl<'a> AnalyticEvaluator<'a> {
    pub fn new(params: &'a ValidatedParams, dist: &'a IncidentPowerDistribution) -> Self {
        let p = params;
        let power = if p.strict_appendix {
            p.interference_ratio * p.power_b
        } else {
            p.power_b
        };
        AnalyticEvaluator {
            params,
            dist,
            diag: Diagnostics::new(),
            interference: RadialProduct::new(
                p.repulsion,
                p.active_density_b(),
                p.window_radius,
                None,
            ),
            interferer: FadingModifier {
                power,
                fading_mean: p.ambient_fading_mean,
                shape: p.nakagami_m,
                path_loss: p.path_loss,
            },
            h_cache: RwLock::new(HashMap::new()),
            gl: gauss_legendre(T_POINTS),
            c_b: OnceLock::new(),
            c_h: OnceLock::new(),
            t_h: OnceLock::new(),
        }
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diag
    }

    pub fn backscatter_threshold(&self) -> f64 {
        self.params.backscatter_power_threshold()
    }

    pub fn htt_threshold(&self) -> f64 {
        self.params.htt_power_threshold()
    }

    fn cdf(&self, rho: f64) -> Result<f64, Error> {
        Ok(self.dist.cdf_with(rho, &self.diag)?)
    }

    fn pdf(&self, rho: f64) -> Result<f64, Error> {
        Ok(self.dist.pdf_with(rho, &self.diag)?)
    }

    pub fn energy_outage(&self, mode: Mode) -> Result<f64, Error> {
        match mode {
            Mode::Backscatter => self.cdf(self.backscatter_threshold()),
            Mode::Htt => self.cdf(self.htt_threshold()),
        }
    }

    /// PTP backscatter-mode probability `F(ρ_H/(ωβ))`.
    pub fn prob_backscatter_ptp(&self) -> Result<f64, Error> {
        self.cdf(self.htt_threshold())
    }

    /// Mode probability used by the PTP throughput; the strict variant reads
    /// `F(ρ_B/(ωβ))`.
    fn prob_backscatter_ptp_throughput(&self) -> Result<f64, Error> {
        let p = self.params;
        if p.strict_appendix {
            self.cdf(p.circuit_power_b / (p.harvest_fraction * p.rf_dc_efficiency))
        } else {
            self.prob_backscatter_ptp()
        }
    }

    /// `∫_lower^∞ h(ρ) f(ρ) dρ` for `0 ≤ h ≤ h_max` nondecreasing in the tail.
    /// `tail_extra` is added to `h(ρ_q)` in the tail term.
    fn outer_integral(
        &self,
        lower: f64,
        h: impl Fn(f64) -> Result<f64, Error>,
        tail_extra: f64,
        h_max: Option<f64>,
    ) -> Result<Estimate, Error> {
        if self.dist.is_degenerate() {
            return Ok(Estimate::default());
        }
        let rho_q = self.dist.upper_quantile(&self.diag)?.max(lower);
        let mut failure: Option<Error> = None;
        let result = adaptive(
            |x| {
                if failure.is_some() {
                    return 0.0;
                }
                let rho = x.exp();
                match self.pdf(rho).and_then(|f| Ok(rho * f * h(rho)?)) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            lower.ln(),
            rho_q.ln(),
            OUTER_ABS,
            OUTER_REL,
            OUTER_INTERVALS,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if !result.converged {
            self.diag.record(NumericError::Quadrature {
                lo: lower,
                hi: rho_q,
                error: result.error,
            });
        }
        let tail_mass = 1.0 - self.cdf(rho_q)?;
        let h_q = h(rho_q)?;
        let tail = tail_mass * (h_q + tail_extra);
        let tail_error = match h_max {
            Some(m) => tail_mass * (m - h_q).max(0.0),
            None => tail_mass * (h_q + tail_extra),
        };
        Ok(Estimate {
            value: result.value + tail,
            error: result.error + tail_error,
        })
    }

    /// `C_B`, equal to the STP backscatter-mode probability.
    pub fn backscatter_success(&self) -> Result<Estimate, Error> {
        memo(&self.c_b, || self.compute_backscatter_success())
    }

    fn compute_backscatter_success(&self) -> Result<Estimate, Error> {
        let p = self.params;
        let k = p.link_fading_rate * p.snr_threshold_b * p.distance.powf(p.path_loss) * p.noise_power
            / (p.backscatter_efficiency * (1.0 - p.rectified_fraction));
        self.outer_integral(
            self.backscatter_threshold(),
            |rho| Ok((-k / rho).exp()),
            0.0,
            Some(1.0),
        )
    }

    /// Laplace transform of the receiver interference at real `s`.
    pub fn interference_laplace(&self, s: f64) -> Result<f64, Error> {
        Ok(self.interference.evaluate_real(&self.interferer, s)?)
    }

    /// `H(y) = P[h̃ > y (Q + σ²) d^μ (1 − ω)]` for exponential `h̃`.
    pub fn success_kernel(&self, y: f64) -> Result<f64, Error> {
        let p = self.params;
        let c = p.link_fading_rate * p.distance.powf(p.path_loss) * (1.0 - p.harvest_fraction);
        let noise = (-c * p.noise_power * y).exp();
        if noise == 0.0 {
            return Ok(0.0);
        }
        Ok(noise * self.interference_laplace(c * y)?)
    }

    fn htt_drive(&self, rho: f64) -> f64 {
        let p = self.params;
        p.harvest_fraction * p.rf_dc_efficiency * rho - p.circuit_power_h
    }

    /// `C_H`.
    pub fn htt_success(&self) -> Result<Estimate, Error> {
        memo(&self.c_h, || self.compute_htt_success())
    }

    fn compute_htt_success(&self) -> Result<Estimate, Error> {
        let tau = self.params.sinr_threshold_h;
        self.outer_integral(
            self.htt_threshold(),
            |rho| {
                let d = self.htt_drive(rho);
                if d <= 0.0 {
                    return Ok(0.0);
                }
                self.success_kernel(tau / d)
            },
            0.0,
            Some(1.0),
        )
    }

    fn cached_kernel(&self, panel: i64, node: usize, y: f64) -> Result<f64, Error> {
        if let Some(&v) = self.h_cache.read().expect("cache lock").get(&(panel, node)) {
            return Ok(v);
        }
        let v = self.success_kernel(y)?;
        self.h_cache
            .write()
            .expect("cache lock")
            .insert((panel, node), v);
        Ok(v)
    }

    /// `∫_{log2(1+τ_H)}^∞ H((2^t − 1)/D) dt` with `D = ωβρ − ρ_H > 0`, taken
    /// in `v = ln y` on panels aligned to a fixed lattice so that kernel
    /// values are shared across `ρ`.
    pub fn throughput_inner(&self, rho: f64) -> Result<f64, Error> {
        let d = self.htt_drive(rho);
        if d <= 0.0 {
            return Ok(0.0);
        }
        let tau = self.params.sinr_threshold_h;
        let v0 = (tau / d).ln();
        let v_max = ((T_MAX * LN_2).exp_m1() / d).ln();
        let (x, w) = &self.gl;
        let weight = |v: f64| {
            let e = d * v.exp();
            e / ((1.0 + e) * LN_2)
        };
        let mut total = 0.0;
        let first = (v0 / T_PANEL).floor() as i64 + 1;
        let hi = first as f64 * T_PANEL;
        if hi > v0 {
            let (c, h) = (0.5 * (v0 + hi), 0.5 * (hi - v0));
            for (xi, wi) in x.iter().zip(w) {
                let v = c + h * xi;
                total += h * wi * self.success_kernel(v.exp())? * weight(v);
            }
        }
        let mut panel = first;
        loop {
            let lo = panel as f64 * T_PANEL;
            if lo >= v_max {
                self.diag.record(NumericError::Truncated { t_max: T_MAX });
                break;
            }
            let (c, h) = (lo + 0.5 * T_PANEL, 0.5 * T_PANEL);
            let mut part = 0.0;
            for (i, (xi, wi)) in x.iter().zip(w).enumerate() {
                let v = c + h * xi;
                part += h * wi * self.cached_kernel(panel, i, v.exp())? * weight(v);
            }
            total += part;
            panel += 1;
            let saturated = d * lo.exp() >= 1.0;
            if saturated && part <= T_CUTOFF * total {
                break;
            }
            if saturated && total == 0.0 {
                break;
            }
        }
        Ok(total)
    }

    /// `T_H`. Without the strict flag the integrand also carries the
    /// `log2(1+τ_H)·H` boundary term, so that `T_H` equals
    /// `(1−ω)W E[log2(1+ν_H) 1{ν_H > τ_H, powered}]`.
    pub fn htt_throughput(&self) -> Result<Estimate, Error> {
        memo(&self.t_h, || self.compute_htt_throughput())
    }

    fn compute_htt_throughput(&self) -> Result<Estimate, Error> {
        let p = self.params;
        if p.bandwidth == 0.0 {
            return Ok(Estimate::default());
        }
        let t0 = p.sinr_threshold_h.ln_1p() / LN_2;
        let boundary = !p.strict_appendix;
        let inner = self.outer_integral(
            self.htt_threshold(),
            |rho| {
                let mut v = self.throughput_inner(rho)?;
                if boundary {
                    let d = self.htt_drive(rho);
                    if d > 0.0 {
                        v += t0 * self.success_kernel(p.sinr_threshold_h / d)?;
                    }
                }
                Ok(v)
            },
            p.path_loss / (2.0 * LN_2),
            None,
        )?;
        let scale = (1.0 - p.harvest_fraction) * p.bandwidth;
        Ok(Estimate {
            value: scale * inner.value,
            error: scale * inner.error,
        })
    }

    /// `(B, O)` for a protocol, with their numerical error estimates.
    pub fn outage_metrics(&self, protocol: Protocol) -> Result<(Estimate, Estimate), Error> {
        let o_b = self.energy_outage(Mode::Backscatter)?;
        let o_h = self.energy_outage(Mode::Htt)?;
        let tol = self.dist.options().inversion.tolerance;
        let b = match protocol {
            Protocol::Ptp => Estimate {
                value: self.prob_backscatter_ptp()?,
                error: tol,
            },
            Protocol::Stp => self.backscatter_success()?,
            Protocol::PureBackscatter => Estimate {
                value: 1.0,
                error: 0.0,
            },
            Protocol::PureHtt => Estimate::default(),
        };
        let o = Estimate {
            value: b.value * o_b + (1.0 - b.value) * o_h,
            error: tol + b.error,
        };
        Ok((b, o))
    }

    /// Assembles `(B, O, C, T)` for a protocol.
    pub fn protocol_metrics(&self, protocol: Protocol) -> Result<ProtocolMetrics, Error> {
        let p = self.params;
        let (b, o) = self.outage_metrics(protocol)?;
        let needs_bs = protocol != Protocol::PureHtt;
        let needs_htt = protocol != Protocol::PureBackscatter;
        let c_b = if needs_bs {
            self.backscatter_success()?
        } else {
            Estimate::default()
        };
        let (c_h, t_h) = if needs_htt {
            (self.htt_success()?, self.htt_throughput()?)
        } else {
            (Estimate::default(), Estimate::default())
        };
        let t_b = p.backscatter_rate * c_b.value;
        let b_t = match protocol {
            Protocol::Ptp => self.prob_backscatter_ptp_throughput()?,
            _ => b.value,
        };
        let c = b.value * c_b.value + (1.0 - b.value) * c_h.value;
        let t = b_t * t_b + (1.0 - b_t) * t_h.value;
        let errors = MetricErrors {
            b: b.error,
            o: o.error,
            c: c_b.error + c_h.error + b.error,
            t: p.backscatter_rate * c_b.error + t_h.error + b.error * (t_b - t_h.value).abs(),
        };
        Ok(ProtocolMetrics {
            protocol,
            engine: Engine::Analytic,
            b: b.value,
            o: o.value,
            c,
            t,
            errors,
            trials: None,
            low_confidence: false,
            issues: self.diag.issues().iter().map(|e| e.to_string()).collect(),
        })
    }
}

fn memo(
    cell: &OnceLock<Estimate>,
    compute: impl FnOnce() -> Result<Estimate, Error>,
) -> Result<Estimate, Error> {
    if let Some(v) = cell.get() {
        return Ok(*v);
    }
    let v = compute()?;
    Ok(*cell.get_or_init(|| v))
}

/// Evaluates one protocol with the analytic engine.
pub fn analytic_metrics(
    params: &ValidatedParams,
    dist: &IncidentPowerDistribution,
    protocol: Protocol,
) -> Result<ProtocolMetrics, Error> {
    AnalyticEvaluator::new(params, dist).protocol_metrics(protocol)
}

fn strict<T>(eval: &AnalyticEvaluator<'_>, value: Result<T, Error>) -> Result<T, Error> {
    let value = value?;
    match eval.diagnostics().issues().into_iter().next() {
        Some(issue) => Err(issue.into()),
        None => Ok(value),
    }
}

/// `O_B` or `O_H`.
pub fn energy_outage_mode(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
    mode: Mode,
) -> Result<f64, Error> {
    let e = AnalyticEvaluator::new(params, dist);
    strict(&e, e.energy_outage(mode))
}

pub fn prob_backscatter_ptp(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
) -> Result<f64, Error> {
    let e = AnalyticEvaluator::new(params, dist);
    strict(&e, e.prob_backscatter_ptp())
}

pub fn prob_backscatter_stp(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
) -> Result<f64, Error> {
    let e = AnalyticEvaluator::new(params, dist);
    strict(&e, e.backscatter_success().map(|x| x.value))
}

/// Identical to [`prob_backscatter_stp`].
pub fn coverage_backscatter(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
) -> Result<f64, Error> {
    prob_backscatter_stp(dist, params)
}

pub fn coverage_htt(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
) -> Result<f64, Error> {
    let e = AnalyticEvaluator::new(params, dist);
    strict(&e, e.htt_success().map(|x| x.value))
}

pub fn throughput_htt(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
) -> Result<f64, Error> {
    let e = AnalyticEvaluator::new(params, dist);
    strict(&e, e.htt_throughput().map(|x| x.value))
}

pub fn energy_outage_protocol(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
    protocol: Protocol,
) -> Result<f64, Error> {
    let e = AnalyticEvaluator::new(params, dist);
    let o_b = e.energy_outage(Mode::Backscatter)?;
    let o_h = e.energy_outage(Mode::Htt)?;
    let value = match protocol {
        Protocol::Ptp => Ok(o_h * (o_b - o_h + 1.0)),
        Protocol::Stp => e
            .backscatter_success()
            .map(|b| b.value * (o_b - o_h) + o_h),
        Protocol::PureBackscatter => Ok(o_b),
        Protocol::PureHtt => Ok(o_h),
    };
    strict(&e, value)
}

pub fn coverage_protocol(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
    protocol: Protocol,
) -> Result<f64, Error> {
    let e = AnalyticEvaluator::new(params, dist);
    let m = e.protocol_metrics(protocol)?;
    strict(&e, Ok(m.c))
}

pub fn throughput_protocol(
    dist: &IncidentPowerDistribution,
    params: &ValidatedParams,
    protocol: Protocol,
) -> Result<f64, Error> {
    let e = AnalyticEvaluator::new(params, dist);
    let m = e.protocol_metrics(protocol)?;
    strict(&e, Ok(m.t))
}
