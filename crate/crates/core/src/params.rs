//! Network parameters, unit conversion and validation.
//!
//! Every engine consumes a [`ValidatedParams`]. Raw configurations are flat
//! `key = value` records whose keys carry a unit suffix (`_w`, `_dbm`,
//! `_dbm_per_hz`, `_db`, `_m`, `_hz`, `_bps`); [`normalize_config`] converts
//! them to SI linear units and [`validate`] certifies the cross-field
//! invariants.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;

use thiserror::Error;

/// Repulsion of an α-Ginibre field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Repulsion {
    /// α = −1/κ for a positive integer κ. κ = 1 is the Ginibre process.
    Ginibre { kappa: u32 },
    /// The α → 0 limit (Poisson point process).
    Poisson,
}

impl Repulsion {
    pub const GINIBRE: Repulsion = Repulsion::Ginibre { kappa: 1 };

    /// Repulsion factor α; `0.0` for the Poisson sentinel.
    pub fn alpha(self) -> f64 {
        match self {
            Repulsion::Ginibre { kappa } => -1.0 / f64::from(kappa),
            Repulsion::Poisson => 0.0,
        }
    }

    /// Maps α to a repulsion, requiring α = −1/κ for an integer κ ≥ 1.
    /// `α = 0` is accepted as the Poisson sentinel.
    pub fn from_alpha(alpha: f64) -> Result<Self, ParamError> {
        if alpha == 0.0 {
            return Ok(Repulsion::Poisson);
        }
        if !(alpha.is_finite() && (-1.0..0.0).contains(&alpha)) {
            return Err(ParamError::OutOfRange {
                key: "alpha".into(),
                value: alpha.to_string(),
                range: "[-1, 0) or \"poisson\"".into(),
            });
        }
        let kappa = -1.0 / alpha;
        let rounded = kappa.round();
        if (kappa - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded > f64::from(u32::MAX) {
            return Err(ParamError::NonIntegerKappa { alpha });
        }
        Ok(Repulsion::Ginibre {
            kappa: rounded as u32,
        })
    }

    fn parse(text: &str) -> Result<Self, ParamError> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("poisson") || t.eq_ignore_ascii_case("ppp") {
            return Ok(Repulsion::Poisson);
        }
        let alpha = parse_f64("alpha", t)?;
        Repulsion::from_alpha(alpha)
    }
}

impl fmt::Display for Repulsion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Repulsion::Poisson => write!(f, "poisson"),
            Repulsion::Ginibre { kappa } => write!(f, "{:?}", -1.0 / f64::from(*kappa)),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("keys `{0}` and `{1}` are mutually exclusive")]
    Conflict(String, String),
    #[error("`{key}`: cannot parse {value:?} as a number")]
    Parse { key: String, value: String },
    #[error("`{key}` = {value} is out of range; admissible range is {range}")]
    OutOfRange {
        key: String,
        value: String,
        range: String,
    },
    #[error("alpha = {alpha} is not of the form -1/kappa for a positive integer kappa")]
    NonIntegerKappa { alpha: f64 },
    #[error("`{0}` is not a numeric parameter")]
    NotNumeric(String),
    #[error("invalid parameters: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub key: &'static str,
    pub rule: &'static str,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (got {})", self.key, self.rule, self.value)
    }
}

/// Every scalar of the link model, in SI linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// Density of the energy-source field Φ (points/m²).
    pub density_a: f64,
    /// Density of the interferer field Ψ (points/m²).
    pub density_b: f64,
    pub load_a: f64,
    pub load_b: f64,
    pub repulsion: Repulsion,
    /// Transmit power of Φ transmitters (W).
    pub power_a: f64,
    /// Transmit power of Ψ transmitters (W).
    pub power_b: f64,
    pub path_loss: f64,
    pub window_radius: f64,
    /// Transmitter–receiver distance (m).
    pub distance: f64,
    /// Noise power (W), used for both the backscatter and HTT receivers.
    pub noise_power: f64,
    /// HTT bandwidth (Hz).
    pub bandwidth: f64,
    /// Fraction of an HTT slot spent harvesting.
    pub harvest_fraction: f64,
    /// RF-to-DC conversion efficiency.
    pub rf_dc_efficiency: f64,
    /// Fraction of incident power rectified while backscattering.
    pub rectified_fraction: f64,
    pub backscatter_efficiency: f64,
    /// Rate of the exponential S→D power gains.
    pub link_fading_rate: f64,
    /// Mean of the Nakagami-m ambient power gains.
    pub ambient_fading_mean: f64,
    pub nakagami_m: f64,
    /// Backscatter SNR decode threshold (linear).
    pub snr_threshold_b: f64,
    /// HTT SINR decode threshold (linear).
    pub sinr_threshold_h: f64,
    /// Circuit power in backscatter mode (W).
    pub circuit_power_b: f64,
    /// Circuit power in HTT mode (W).
    pub circuit_power_h: f64,
    /// Backscatter data rate (bit/s).
    pub backscatter_rate: f64,
    /// l_B·ζ_B / (l_A·ζ_A); kept in sync by [`NetworkParams::sync_interference_ratio`].
    pub interference_ratio: f64,
    /// Reproduce the literal appendix forms (ξ-scaled interference, ρ_B in
    /// the PTP throughput mode probability, no throughput boundary term).
    pub strict_appendix: bool,
}

impl NetworkParams {
    /// Baseline evaluation setting: ζ_A = 0.02, ξ = 0.2, α = −1, and the
    /// remaining values of the reference parameter table.
    pub fn table_one() -> Self {
        let mut p = NetworkParams {
            density_a: 0.02,
            density_b: 0.0,
            load_a: 1.0,
            load_b: 1.0,
            repulsion: Repulsion::GINIBRE,
            power_a: 0.2,
            power_b: 0.2,
            path_loss: 4.0,
            window_radius: 30.0,
            distance: 5.0,
            noise_power: psd_dbm_per_hz_to_watts(-120.0, 1.0e6),
            bandwidth: 1.0e6,
            harvest_fraction: 0.5,
            rf_dc_efficiency: 0.3,
            rectified_fraction: 0.625,
            backscatter_efficiency: 1.0,
            link_fading_rate: 1.0,
            ambient_fading_mean: 1.0,
            nakagami_m: 1.0,
            snr_threshold_b: db_to_linear(5.0),
            sinr_threshold_h: db_to_linear(-40.0),
            circuit_power_b: 8.9e-6,
            circuit_power_h: 113.0e-6,
            backscatter_rate: 1.0e3,
            interference_ratio: 0.2,
            strict_appendix: false,
        };
        p.set_interference_ratio(0.2);
        p
    }

    /// Active density of Φ, l_A·ζ_A.
    pub fn active_density_a(&self) -> f64 {
        self.load_a * self.density_a
    }

    /// Active density of Ψ, l_B·ζ_B.
    pub fn active_density_b(&self) -> f64 {
        self.load_b * self.density_b
    }

    /// Incident-power threshold below which backscattering is in energy outage.
    pub fn backscatter_power_threshold(&self) -> f64 {
        self.circuit_power_b / (self.rf_dc_efficiency * self.rectified_fraction)
    }

    /// Incident-power threshold below which HTT is in energy outage.
    pub fn htt_power_threshold(&self) -> f64 {
        self.circuit_power_h / (self.harvest_fraction * self.rf_dc_efficiency)
    }

    /// Recomputes ξ from the densities when l_A·ζ_A > 0.
    pub fn sync_interference_ratio(&mut self) {
        let a = self.active_density_a();
        if a > 0.0 {
            self.interference_ratio = self.active_density_b() / a;
        }
    }

    /// Sets ξ by rescaling ζ_B.
    pub fn set_interference_ratio(&mut self, xi: f64) {
        self.interference_ratio = xi;
        if self.load_b > 0.0 {
            self.density_b = xi * self.active_density_a() / self.load_b;
        }
    }

    /// Reads a numeric field by its SI key.
    pub fn get(&self, key: &str) -> Result<f64, ParamError> {
        Ok(match key {
            "zeta_A" => self.density_a,
            "zeta_B" => self.density_b,
            "xi" => self.interference_ratio,
            "l_A" => self.load_a,
            "l_B" => self.load_b,
            "alpha" => self.repulsion.alpha(),
            "P_A" => self.power_a,
            "P_B" => self.power_b,
            "mu" => self.path_loss,
            "R" => self.window_radius,
            "d" => self.distance,
            "sigma2" => self.noise_power,
            "W" => self.bandwidth,
            "omega" => self.harvest_fraction,
            "beta" => self.rf_dc_efficiency,
            "varrho" => self.rectified_fraction,
            "delta" => self.backscatter_efficiency,
            "lambda" => self.link_fading_rate,
            "theta" => self.ambient_fading_mean,
            "m" => self.nakagami_m,
            "tau_B" => self.snr_threshold_b,
            "tau_H" => self.sinr_threshold_h,
            "rho_B" => self.circuit_power_b,
            "rho_H" => self.circuit_power_h,
            "T_B" => self.backscatter_rate,
            other => return Err(ParamError::NotNumeric(other.to_string())),
        })
    }

    /// Sets a numeric field by its SI key. With `hold_xi`, changes to the
    /// Φ density or loads rescale ζ_B so that ξ stays fixed; otherwise ξ is
    /// re-derived.
    pub fn set(&mut self, key: &str, value: f64, hold_xi: bool) -> Result<(), ParamError> {
        match key {
            "zeta_A" => self.density_a = value,
            "zeta_B" => {
                self.density_b = value;
                self.sync_interference_ratio();
                return Ok(());
            }
            "xi" => {
                self.set_interference_ratio(value);
                return Ok(());
            }
            "l_A" => self.load_a = value,
            "l_B" => self.load_b = value,
            "alpha" => self.repulsion = Repulsion::from_alpha(value)?,
            "P_A" => self.power_a = value,
            "P_B" => self.power_b = value,
            "mu" => self.path_loss = value,
            "R" => self.window_radius = value,
            "d" => self.distance = value,
            "sigma2" => self.noise_power = value,
            "W" => self.bandwidth = value,
            "omega" => self.harvest_fraction = value,
            "beta" => self.rf_dc_efficiency = value,
            "varrho" => self.rectified_fraction = value,
            "delta" => self.backscatter_efficiency = value,
            "lambda" => self.link_fading_rate = value,
            "theta" => self.ambient_fading_mean = value,
            "m" => self.nakagami_m = value,
            "tau_B" => self.snr_threshold_b = value,
            "tau_H" => self.sinr_threshold_h = value,
            "rho_B" => self.circuit_power_b = value,
            "rho_H" => self.circuit_power_h = value,
            "T_B" => self.backscatter_rate = value,
            other => return Err(ParamError::NotNumeric(other.to_string())),
        }
        if matches!(key, "zeta_A" | "l_A" | "l_B") {
            if hold_xi {
                self.set_interference_ratio(self.interference_ratio);
            } else {
                self.sync_interference_ratio();
            }
        }
        Ok(())
    }

    /// Renders the parameters as a raw configuration. `UnitStyle::Decibel`
    /// writes powers in dBm, thresholds in dB and the noise as a PSD.
    pub fn to_raw(&self, style: UnitStyle) -> RawConfig {
        let mut raw = RawConfig::default();
        let mut put = |k: &str, v: f64| {
            raw.entries.insert(k.to_string(), format!("{v:?}"));
        };
        put("zeta_A", self.density_a);
        put("zeta_B", self.density_b);
        put("l_A", self.load_a);
        put("l_B", self.load_b);
        put("mu", self.path_loss);
        put("R_m", self.window_radius);
        put("d_m", self.distance);
        put("W_hz", self.bandwidth);
        put("omega", self.harvest_fraction);
        put("beta", self.rf_dc_efficiency);
        put("varrho", self.rectified_fraction);
        put("delta", self.backscatter_efficiency);
        put("lambda", self.link_fading_rate);
        put("theta", self.ambient_fading_mean);
        put("m", self.nakagami_m);
        put("T_B_bps", self.backscatter_rate);
        match style {
            UnitStyle::Si => {
                put("P_A_w", self.power_a);
                put("P_B_w", self.power_b);
                put("sigma2_w", self.noise_power);
                put("tau_B", self.snr_threshold_b);
                put("tau_H", self.sinr_threshold_h);
                put("rho_B_w", self.circuit_power_b);
                put("rho_H_w", self.circuit_power_h);
            }
            UnitStyle::Decibel => {
                put("P_A_dbm", watts_to_dbm(self.power_a));
                put("P_B_dbm", watts_to_dbm(self.power_b));
                put(
                    "sigma2_dbm_per_hz",
                    watts_to_dbm(self.noise_power / self.bandwidth),
                );
                put("tau_B_db", linear_to_db(self.snr_threshold_b));
                put("tau_H_db", linear_to_db(self.sinr_threshold_h));
                put("rho_B_dbm", watts_to_dbm(self.circuit_power_b));
                put("rho_H_dbm", watts_to_dbm(self.circuit_power_h));
            }
        }
        raw.entries
            .insert("alpha".into(), self.repulsion.to_string());
        raw.entries
            .insert("strict_appendix".into(), self.strict_appendix.to_string());
        raw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitStyle {
    Si,
    Decibel,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Noise power of a PSD (dBm/Hz) integrated over `bandwidth` Hz.
pub fn psd_dbm_per_hz_to_watts(psd_dbm_per_hz: f64, bandwidth: f64) -> f64 {
    dbm_to_watts(psd_dbm_per_hz) * bandwidth
}

/// Flat `key = value` configuration record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are ignored;
    /// duplicate keys are rejected.
    pub fn parse(text: &str) -> Result<Self, ParamError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ParamError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ParamError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ParamError::DuplicateKey(k.to_string()));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Quantity with alternative unit spellings; the first entry is SI.
struct Quantity {
    keys: &'static [(&'static str, Unit)],
    required: bool,
}

#[derive(Clone, Copy)]
enum Unit {
    Linear,
    Decibel,
    Dbm,
    PsdDbmPerHz,
}

const QUANTITIES: &[Quantity] = &[
    q(&[("zeta_A", Unit::Linear)]),
    q(&[("l_A", Unit::Linear)]),
    q(&[("l_B", Unit::Linear)]),
    q(&[("P_A_w", Unit::Linear), ("P_A_dbm", Unit::Dbm)]),
    q(&[("P_B_w", Unit::Linear), ("P_B_dbm", Unit::Dbm)]),
    q(&[("mu", Unit::Linear)]),
    q(&[("R_m", Unit::Linear)]),
    q(&[("d_m", Unit::Linear)]),
    q(&[("W_hz", Unit::Linear)]),
    q(&[("sigma2_w", Unit::Linear), ("sigma2_dbm_per_hz", Unit::PsdDbmPerHz)]),
    q(&[("omega", Unit::Linear)]),
    q(&[("beta", Unit::Linear)]),
    q(&[("varrho", Unit::Linear)]),
    q(&[("delta", Unit::Linear)]),
    q(&[("lambda", Unit::Linear)]),
    q(&[("theta", Unit::Linear)]),
    q(&[("m", Unit::Linear)]),
    q(&[("tau_B", Unit::Linear), ("tau_B_db", Unit::Decibel)]),
    q(&[("tau_H", Unit::Linear), ("tau_H_db", Unit::Decibel)]),
    q(&[("rho_B_w", Unit::Linear), ("rho_B_dbm", Unit::Dbm)]),
    q(&[("rho_H_w", Unit::Linear), ("rho_H_dbm", Unit::Dbm)]),
    q(&[("T_B_bps", Unit::Linear)]),
];

const fn q(keys: &'static [(&'static str, Unit)]) -> Quantity {
    Quantity {
        keys,
        required: true,
    }
}

const OTHER_KEYS: &[&str] = &["zeta_B", "xi", "alpha", "strict_appendix"];

fn parse_f64(key: &str, value: &str) -> Result<f64, ParamError> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParamError::Parse {
            key: key.to_string(),
            value: value.to_string(),
        })
}

/// Converts a raw configuration to SI linear units.
///
/// Each quantity must be given exactly once, in any of its unit spellings.
/// ζ_B may be replaced by `xi`, in which case ζ_B = ξ·l_A·ζ_A / l_B.
pub fn normalize_config(raw: &RawConfig) -> Result<NetworkParams, ParamError> {
    for key in raw.entries.keys() {
        let known = OTHER_KEYS.contains(&key.as_str())
            || QUANTITIES
                .iter()
                .any(|q| q.keys.iter().any(|(k, _)| k == key));
        if !known {
            return Err(ParamError::UnknownKey(key.clone()));
        }
    }

    let mut si: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut psd = None;
    for quantity in QUANTITIES {
        let present: Vec<_> = quantity
            .keys
            .iter()
            .filter(|(k, _)| raw.entries.contains_key(*k))
            .collect();
        let si_key = quantity.keys[0].0;
        match present.as_slice() {
            [] if quantity.required => return Err(ParamError::MissingKey(si_key.to_string())),
            [] => {}
            [(key, unit)] => {
                let v = parse_f64(key, &raw.entries[*key])?;
                let converted = match unit {
                    Unit::Linear => v,
                    Unit::Decibel => db_to_linear(v),
                    Unit::Dbm => dbm_to_watts(v),
                    Unit::PsdDbmPerHz => {
                        psd = Some(v);
                        continue;
                    }
                };
                si.insert(si_key, converted);
            }
            [a, b, ..] => return Err(ParamError::Conflict(a.0.to_string(), b.0.to_string())),
        }
    }
    if let Some(psd) = psd {
        si.insert("sigma2_w", psd_dbm_per_hz_to_watts(psd, si["W_hz"]));
    }

    for (key, value) in &si {
        check_range(key, *value)?;
    }

    let repulsion = match raw.entries.get("alpha") {
        Some(text) => Repulsion::parse(text)?,
        None => return Err(ParamError::MissingKey("alpha".into())),
    };
    let strict_appendix = match raw.entries.get("strict_appendix").map(|s| s.trim()) {
        None => false,
        Some("true") | Some("1") => true,
        Some("false") | Some("0") => false,
        Some(other) => {
            return Err(ParamError::Parse {
                key: "strict_appendix".into(),
                value: other.to_string(),
            })
        }
    };

    let mut p = NetworkParams {
        density_a: si["zeta_A"],
        density_b: 0.0,
        load_a: si["l_A"],
        load_b: si["l_B"],
        repulsion,
        power_a: si["P_A_w"],
        power_b: si["P_B_w"],
        path_loss: si["mu"],
        window_radius: si["R_m"],
        distance: si["d_m"],
        noise_power: si["sigma2_w"],
        bandwidth: si["W_hz"],
        harvest_fraction: si["omega"],
        rf_dc_efficiency: si["beta"],
        rectified_fraction: si["varrho"],
        backscatter_efficiency: si["delta"],
        link_fading_rate: si["lambda"],
        ambient_fading_mean: si["theta"],
        nakagami_m: si["m"],
        snr_threshold_b: si["tau_B"],
        sinr_threshold_h: si["tau_H"],
        circuit_power_b: si["rho_B_w"],
        circuit_power_h: si["rho_H_w"],
        backscatter_rate: si["T_B_bps"],
        interference_ratio: 0.0,
        strict_appendix,
    };

    match (raw.entries.get("zeta_B"), raw.entries.get("xi")) {
        (Some(_), Some(_)) => return Err(ParamError::Conflict("zeta_B".into(), "xi".into())),
        (None, None) => return Err(ParamError::MissingKey("zeta_B".into())),
        (Some(v), None) => {
            let v = parse_f64("zeta_B", v)?;
            check_range("zeta_B", v)?;
            p.density_b = v;
            p.sync_interference_ratio();
        }
        (None, Some(v)) => {
            let v = parse_f64("xi", v)?;
            check_range("xi", v)?;
            p.set_interference_ratio(v);
        }
    }
    Ok(p)
}

/// Per-key admissible ranges, checked during normalization.
fn check_range(key: &str, value: f64) -> Result<(), ParamError> {
    let (ok, range) = match key {
        "zeta_A" | "zeta_B" | "xi" | "P_A_w" | "P_B_w" | "sigma2_w" | "W_hz" | "rho_B_w"
        | "rho_H_w" | "T_B_bps" => (value >= 0.0, "[0, inf)"),
        "l_A" | "l_B" => ((0.0..=1.0).contains(&value), "[0, 1]"),
        "mu" => (value > 2.0, "(2, inf)"),
        "R_m" | "d_m" | "lambda" | "theta" | "tau_B" | "tau_H" => (value > 0.0, "(0, inf)"),
        "omega" | "varrho" => (value > 0.0 && value < 1.0, "(0, 1)"),
        "beta" | "delta" => (value > 0.0 && value <= 1.0, "(0, 1]"),
        "m" => (value >= 1.0, "[1, inf)"),
        _ => (true, ""),
    };
    if ok {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            key: key.to_string(),
            value: value.to_string(),
            range: range.to_string(),
        })
    }
}

/// Parameters whose invariants have been certified.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams(NetworkParams);

impl ValidatedParams {
    pub fn params(&self) -> &NetworkParams {
        &self.0
    }

    pub fn into_inner(self) -> NetworkParams {
        self.0
    }
}

impl Deref for ValidatedParams {
    type Target = NetworkParams;
    fn deref(&self) -> &NetworkParams {
        &self.0
    }
}

/// Certifies every invariant, reporting all violations at once.
pub fn validate(params: NetworkParams) -> Result<ValidatedParams, ParamError> {
    let p = &params;
    let mut v = Vec::new();
    let mut check = |ok: bool, key: &'static str, rule: &'static str, value: f64| {
        if !ok {
            v.push(Violation { key, rule, value });
        }
    };
    let nonneg = "must be nonnegative";
    check(p.density_a >= 0.0, "zeta_A", "density nonnegative", p.density_a);
    check(p.density_b >= 0.0, "zeta_B", "density nonnegative", p.density_b);
    check((0.0..=1.0).contains(&p.load_a), "l_A", "load in [0, 1]", p.load_a);
    check((0.0..=1.0).contains(&p.load_b), "l_B", "load in [0, 1]", p.load_b);
    check(p.power_a >= 0.0, "P_A", nonneg, p.power_a);
    check(p.power_b >= 0.0, "P_B", nonneg, p.power_b);
    check(p.path_loss > 2.0, "mu", "path-loss exponent > 2", p.path_loss);
    check(p.window_radius > 0.0, "R", "window radius > 0", p.window_radius);
    check(p.distance > 0.0, "d", "distance > 0", p.distance);
    check(p.noise_power >= 0.0, "sigma2", nonneg, p.noise_power);
    check(p.bandwidth >= 0.0, "W", nonneg, p.bandwidth);
    check(
        p.harvest_fraction > 0.0 && p.harvest_fraction < 1.0,
        "omega",
        "omega in (0, 1)",
        p.harvest_fraction,
    );
    check(
        p.rf_dc_efficiency > 0.0 && p.rf_dc_efficiency <= 1.0,
        "beta",
        "beta in (0, 1]",
        p.rf_dc_efficiency,
    );
    check(
        p.rectified_fraction > 0.0 && p.rectified_fraction < 1.0,
        "varrho",
        "varrho in (0, 1)",
        p.rectified_fraction,
    );
    check(
        p.backscatter_efficiency > 0.0 && p.backscatter_efficiency <= 1.0,
        "delta",
        "delta in (0, 1]",
        p.backscatter_efficiency,
    );
    check(p.link_fading_rate > 0.0, "lambda", "lambda > 0", p.link_fading_rate);
    check(p.ambient_fading_mean > 0.0, "theta", "theta > 0", p.ambient_fading_mean);
    check(p.nakagami_m >= 1.0, "m", "Nakagami shape >= 1", p.nakagami_m);
    check(p.snr_threshold_b > 0.0, "tau_B", "threshold > 0", p.snr_threshold_b);
    check(p.sinr_threshold_h > 0.0, "tau_H", "threshold > 0", p.sinr_threshold_h);
    check(p.circuit_power_b >= 0.0, "rho_B", nonneg, p.circuit_power_b);
    check(p.circuit_power_h >= 0.0, "rho_H", nonneg, p.circuit_power_h);
    check(p.backscatter_rate >= 0.0, "T_B", nonneg, p.backscatter_rate);
    check(
        p.circuit_power_b < p.circuit_power_h,
        "rho_B",
        "rho_B < rho_H",
        p.circuit_power_b,
    );
    check(
        p.interference_ratio >= 0.0,
        "xi",
        "interference ratio nonnegative",
        p.interference_ratio,
    );
    let a = p.active_density_a();
    if a > 0.0 {
        let xi = p.active_density_b() / a;
        check(
            (p.interference_ratio - xi).abs() <= 1e-12 * xi.abs().max(1e-300),
            "xi",
            "xi = l_B zeta_B / (l_A zeta_A)",
            p.interference_ratio,
        );
    }
    let finite = [
        p.density_a,
        p.density_b,
        p.power_a,
        p.power_b,
        p.path_loss,
        p.window_radius,
        p.distance,
        p.noise_power,
        p.bandwidth,
        p.snr_threshold_b,
        p.sinr_threshold_h,
        p.backscatter_rate,
    ]
    .iter()
    .all(|x| x.is_finite());
    check(finite, "params", "all scalars finite", f64::NAN);
    if v.is_empty() {
        Ok(ValidatedParams(params))
    } else {
        Err(ParamError::Invalid(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_one_raw() -> RawConfig {
        RawConfig::parse(
            "# reference setting
             zeta_A = 0.02
             xi = 0.2
             l_A = 1
             l_B = 1
             alpha = -1
             P_A_w = 0.2
             P_B_w = 0.2
             mu = 4
             R_m = 30
             d_m = 5
             sigma2_dbm_per_hz = -120
             W_hz = 1e6
             omega = 0.5
             beta = 0.3
             varrho = 0.625
             delta = 1
             lambda = 1
             theta = 1
             m = 1
             tau_B_db = 5
             tau_H_db = -40
             rho_B_w = 8.9e-6
             rho_H_w = 113e-6
             T_B_bps = 1000",
        )
        .unwrap()
    }

    #[test]
    fn noise_psd_is_integrated_over_bandwidth() {
        let p = normalize_config(&table_one_raw()).unwrap();
        assert!((p.noise_power - 1.0e-9).abs() < 1e-24);
    }

    #[test]
    fn thresholds_convert_from_db() {
        let p = normalize_config(&table_one_raw()).unwrap();
        assert!((p.sinr_threshold_h - 1.0e-4).abs() < 1e-18);
        assert!((p.snr_threshold_b - 3.1623).abs() < 1e-4);
    }

    #[test]
    fn omega_on_boundary_is_rejected() {
        let mut raw = table_one_raw();
        raw.set("omega", "1.0");
        match normalize_config(&raw) {
            Err(ParamError::OutOfRange { key, range, .. }) => {
                assert_eq!(key, "omega");
                assert_eq!(range, "(0, 1)");
            }
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn strict_parser_rejects_unknown_and_missing_keys() {
        let mut raw = table_one_raw();
        raw.set("bogus", "1");
        assert_eq!(
            normalize_config(&raw),
            Err(ParamError::UnknownKey("bogus".into()))
        );
        let mut raw = table_one_raw();
        raw.entries.remove("mu");
        assert_eq!(
            normalize_config(&raw),
            Err(ParamError::MissingKey("mu".into()))
        );
        let mut raw = table_one_raw();
        raw.set("tau_B", "3");
        assert!(matches!(
            normalize_config(&raw),
            Err(ParamError::Conflict(..))
        ));
    }

    #[test]
    fn kappa_must_be_integer() {
        let mut raw = table_one_raw();
        raw.set("alpha", "-0.4");
        assert!(matches!(
            normalize_config(&raw),
            Err(ParamError::NonIntegerKappa { .. })
        ));
        raw.set("alpha", "-0.5");
        assert_eq!(
            normalize_config(&raw).unwrap().repulsion,
            Repulsion::Ginibre { kappa: 2 }
        );
        raw.set("alpha", "poisson");
        assert_eq!(
            normalize_config(&raw).unwrap().repulsion,
            Repulsion::Poisson
        );
    }

    #[test]
    fn table_one_is_valid_and_matches_config() {
        let from_file = normalize_config(&table_one_raw()).unwrap();
        let builtin = NetworkParams::table_one();
        assert!(validate(builtin.clone()).is_ok());
        for key in ["zeta_A", "zeta_B", "xi", "sigma2", "tau_B", "tau_H", "rho_H"] {
            let (a, b) = (from_file.get(key).unwrap(), builtin.get(key).unwrap());
            assert!((a - b).abs() <= 1e-12 * b.abs(), "{key}: {a} vs {b}");
        }
        assert!((builtin.density_b - 0.004).abs() < 1e-15);
    }

    #[test]
    fn negative_density_is_a_violation() {
        let mut p = NetworkParams::table_one();
        p.density_a = -0.01;
        p.sync_interference_ratio();
        match validate(p) {
            Err(ParamError::Invalid(v)) => {
                assert!(v.iter().any(|x| x.rule == "density nonnegative"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn circuit_power_ordering_is_enforced() {
        let mut p = NetworkParams::table_one();
        p.circuit_power_b = 200e-6;
        p.circuit_power_h = 113e-6;
        match validate(p) {
            Err(ParamError::Invalid(v)) => assert!(v.iter().any(|x| x.rule == "rho_B < rho_H")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn violations_are_aggregated() {
        let mut p = NetworkParams::table_one();
        p.path_loss = 2.0;
        p.distance = 0.0;
        p.circuit_power_b = 1.0;
        match validate(p) {
            Err(ParamError::Invalid(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn holding_xi_rescales_interferer_density() {
        let mut p = NetworkParams::table_one();
        p.set("zeta_A", 0.04, true).unwrap();
        assert!((p.density_b - 0.008).abs() < 1e-15);
        assert!((p.interference_ratio - 0.2).abs() < 1e-15);
        p.set("zeta_A", 0.02, false).unwrap();
        assert!((p.interference_ratio - 0.4).abs() < 1e-12);
        assert!(validate(p).is_ok());
    }
}
