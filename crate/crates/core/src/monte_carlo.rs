//! Two-phase Monte Carlo simulation of the hybrid link.
//!
//! Each trial draws a selection phase (incident power, plus the backscatter
//! SNR under STP) that fixes the mode, then an independent operation phase
//! that decides energy outage, coverage and rate. Trial `i` uses a ChaCha8
//! generator seeded with the run seed on stream `i`, so estimates do not
//! depend on how trials are scheduled across workers.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};
use rayon::prelude::*;

use crate::error::Error;
use crate::metrics::{Engine, MetricErrors, Mode, Protocol, ProtocolMetrics};
use crate::params::{Repulsion, ValidatedParams};
use crate::point_process::FieldSampler;

/// Trials below this count are flagged as low-confidence.
pub const LOW_CONFIDENCE_TRIALS: u64 = 30;
const CHUNK: u64 = 1024;

/// One Monte Carlo draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSample {
    /// Selection-phase incident power (NaN for the pure baselines).
    pub p_i_select: f64,
    /// Operation-phase incident power.
    pub p_i_op: f64,
    pub mode: Mode,
    pub energy_outage: bool,
    pub snr_or_sinr: f64,
    pub covered: bool,
    pub rate: f64,
    /// Aggregate interference at the receiver (0 in backscatter mode).
    pub interference: f64,
}

/// An ambient field seen from the window center: active points and gains.
struct Field {
    sampler: FieldSampler,
    /// Independent thinning applied after sampling (Poisson fields only).
    thinning: Option<f64>,
    power: f64,
    path_loss: f64,
    gain: Option<Gamma<f64>>,
}

impl Field {
    fn new(repulsion: Repulsion, density: f64, load: f64, power: f64, p: &ValidatedParams) -> Self {
        let (sampler, thinning) = match repulsion {
            Repulsion::Poisson if load < 1.0 && density > 0.0 => (
                FieldSampler::new(repulsion, density, p.window_radius),
                Some(load),
            ),
            _ => (
                FieldSampler::new(repulsion, density * load, p.window_radius),
                None,
            ),
        };
        let gain = (density * load > 0.0).then(|| {
            Gamma::new(p.nakagami_m, p.ambient_fading_mean / p.nakagami_m).expect("valid gain")
        });
        Field {
            sampler,
            thinning,
            power,
            path_loss: p.path_loss,
            gain,
        }
    }

    /// `Σ P h r^{−μ}` over one realization.
    fn shot_noise<R: Rng>(&self, rng: &mut R, radii: &mut Vec<f64>) -> f64 {
        let Some(gain) = &self.gain else {
            return 0.0;
        };
        radii.clear();
        self.sampler.sample_radii(rng, radii);
        let mut total = 0.0;
        for &r in radii.iter() {
            if let Some(load) = self.thinning {
                if !rng.random_bool(load) {
                    continue;
                }
            }
            total += gain.sample(rng) * r.powf(-self.path_loss);
        }
        self.power * total
    }
}

/// Per-parameter-set simulator.
pub struct Simulator<'a> {
    params: &'a ValidatedParams,
    sources: Field,
    interferers: Field,
    link: Exp<f64>,
    path_gain: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(params: &'a ValidatedParams) -> Self {
        let p = params;
        let interferer_power = if p.strict_appendix {
            p.interference_ratio * p.power_b
        } else {
            p.power_b
        };
        Simulator {
            params,
            sources: Field::new(p.repulsion, p.density_a, p.load_a, p.power_a, p),
            interferers: Field::new(p.repulsion, p.density_b, p.load_b, interferer_power, p),
            link: Exp::new(p.link_fading_rate).expect("positive rate"),
            path_gain: p.distance.powf(-p.path_loss),
        }
    }

    fn backscatter_snr(&self, incident: f64, h: f64) -> f64 {
        let p = self.params;
        let signal = p.backscatter_efficiency * incident * (1.0 - p.rectified_fraction) * h * self.path_gain;
        ratio(signal, p.noise_power)
    }

    /// One two-phase draw; the pure baselines skip the selection phase.
    pub fn draw<R: Rng>(&self, protocol: Protocol, rng: &mut R) -> SlotSample {
        let p = self.params;
        let mut radii = Vec::new();
        let (mode, p_i_select) = match protocol {
            Protocol::PureBackscatter => (Mode::Backscatter, f64::NAN),
            Protocol::PureHtt => (Mode::Htt, f64::NAN),
            Protocol::Ptp => {
                let pi = self.sources.shot_noise(rng, &mut radii);
                let htt = p.harvest_fraction * p.rf_dc_efficiency * pi > p.circuit_power_h;
                (if htt { Mode::Htt } else { Mode::Backscatter }, pi)
            }
            Protocol::Stp => {
                let pi = self.sources.shot_noise(rng, &mut radii);
                let h = self.link.sample(rng);
                let powered = p.rf_dc_efficiency * p.rectified_fraction * pi > p.circuit_power_b;
                let decodable = self.backscatter_snr(pi, h) > p.snr_threshold_b;
                let bs = powered && decodable;
                (if bs { Mode::Backscatter } else { Mode::Htt }, pi)
            }
        };
        let p_i_op = self.sources.shot_noise(rng, &mut radii);
        match mode {
            Mode::Backscatter => {
                let powered = p.rf_dc_efficiency * p.rectified_fraction * p_i_op > p.circuit_power_b;
                let h = self.link.sample(rng);
                let snr = if powered {
                    self.backscatter_snr(p_i_op, h)
                } else {
                    0.0
                };
                let covered = powered && snr > p.snr_threshold_b;
                SlotSample {
                    p_i_select,
                    p_i_op,
                    mode,
                    energy_outage: !powered,
                    snr_or_sinr: snr,
                    covered,
                    rate: if covered { p.backscatter_rate } else { 0.0 },
                    interference: 0.0,
                }
            }
            Mode::Htt => {
                let harvested = p.harvest_fraction * p.rf_dc_efficiency * p_i_op;
                let powered = harvested > p.circuit_power_h;
                let (sinr, q) = if powered {
                    let q = self.interferers.shot_noise(rng, &mut radii);
                    let h = self.link.sample(rng);
                    let transmit = (harvested - p.circuit_power_h) / (1.0 - p.harvest_fraction);
                    (ratio(transmit * h * self.path_gain, q + p.noise_power), q)
                } else {
                    (0.0, 0.0)
                };
                let covered = powered && sinr > p.sinr_threshold_h;
                let rate = if covered {
                    (1.0 - p.harvest_fraction) * p.bandwidth * sinr.ln_1p() / std::f64::consts::LN_2
                } else {
                    0.0
                };
                SlotSample {
                    p_i_select,
                    p_i_op,
                    mode,
                    energy_outage: !powered,
                    snr_or_sinr: sinr,
                    covered,
                    rate,
                    interference: q,
                }
            }
        }
    }

    /// Draw for trial `index` of a run seeded with `seed`.
    pub fn trial(&self, protocol: Protocol, seed: u64, index: u64) -> SlotSample {
        self.draw(protocol, &mut trial_rng(seed, index))
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Counter-based per-trial generator.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn draw_slot_sample<R: Rng>(params: &ValidatedParams, protocol: Protocol, rng: &mut R) -> SlotSample {
    Simulator::new(params).draw(protocol, rng)
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: [f64; 4],
    sum_sq: [f64; 4],
}

impl Moments {
    fn push(&mut self, x: [f64; 4]) {
        self.n += 1;
        for i in 0..4 {
            self.sum[i] += x[i];
            self.sum_sq[i] += x[i] * x[i];
        }
    }

    fn merge(mut self, other: &Moments) -> Moments {
        self.n += other.n;
        for i in 0..4 {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        self
    }
}

fn observation(s: &SlotSample) -> [f64; 4] {
    [
        f64::from(u8::from(s.mode == Mode::Backscatter)),
        f64::from(u8::from(s.energy_outage)),
        f64::from(u8::from(s.covered)),
        s.rate,
    ]
}

/// Sample means and standard errors of B, O, C, T over `n_trials` trials.
pub fn estimate(
    params: &ValidatedParams,
    protocol: Protocol,
    n_trials: u64,
    seed: u64,
) -> Result<ProtocolMetrics, Error> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
    }
    let sim = Simulator::new(params);
    let chunks = n_trials.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
                m.push(observation(&sim.trial(protocol, seed, i)));
            }
            m
        })
        .collect();
    let total = parts.iter().fold(Moments::default(), |acc, m| acc.merge(m));
    let n = total.n as f64;
    let mean = total.sum.map(|s| s / n);
    let binary_se = |i: usize| {
        if total.n < 2 {
            return 0.5;
        }
        let p = (total.sum[i] + 0.5) / (n + 1.0);
        (p * (1.0 - p) / n).sqrt()
    };
    let se = |i: usize, bound: f64| {
        if total.n < 2 {
            return bound;
        }
        let var = ((total.sum_sq[i] - n * mean[i] * mean[i]) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    };
    let fixed_mode = matches!(protocol, Protocol::PureBackscatter | Protocol::PureHtt);
    Ok(ProtocolMetrics {
        protocol,
        engine: Engine::MonteCarlo,
        b: mean[0],
        o: mean[1],
        c: mean[2],
        t: mean[3],
        errors: MetricErrors {
            b: if fixed_mode { 0.0 } else { binary_se(0) },
            o: binary_se(1),
            c: binary_se(2),
            t: se(3, mean[3].abs()),
        },
        trials: Some(total.n),
        low_confidence: total.n < LOW_CONFIDENCE_TRIALS,
        issues: Vec::new(),
    })
}

/// Forces `mode` in every trial; otherwise identical to [`estimate`].
pub fn run_baseline(
    params: &ValidatedParams,
    mode: Mode,
    n_trials: u64,
    seed: u64,
) -> Result<ProtocolMetrics, Error> {
    let protocol = match mode {
        Mode::Backscatter => Protocol::PureBackscatter,
        Mode::Htt => Protocol::PureHtt,
    };
    estimate(params, protocol, n_trials, seed)
}

/// Writes `trial,mode,P_I_select,P_I_op,snr_or_sinr,covered,rate` rows.
pub fn write_trace(
    params: &ValidatedParams,
    protocol: Protocol,
    n_trials: u64,
    seed: u64,
    mut out: impl Write,
) -> io::Result<()> {
    let sim = Simulator::new(params);
    writeln!(out, "trial,mode,P_I_select,P_I_op,snr_or_sinr,covered,rate")?;
    for i in 0..n_trials {
        let s = sim.trial(protocol, seed, i);
        let mode = match s.mode {
            Mode::Backscatter => "backscatter",
            Mode::Htt => "htt",
        };
        writeln!(
            out,
            "{i},{mode},{:e},{:e},{:e},{},{:e}",
            s.p_i_select, s.p_i_op, s.snr_or_sinr, s.covered, s.rate
        )?;
    }
    Ok(())
}
