//! Physical parameters, write-pulse envelopes and the time-ordered integrals
//! Γₖ(t′), pₖ(t′) and 𝒲(t) that drive the Green's-function solution.
//!
//! Internally everything is dimensionless: time in units of the second write
//! pulse duration T₂ and length in units of the cell length L. A channel is
//! then fully described by its gain `χ²LT₂/c`, the spin and pump-induced
//! decay rates and the AC Stark shift, each multiplied by T₂.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

/// Offset that makes the truncated Gaussian vanish at both pulse edges.
const GAUSSIAN_OFFSET: f64 = 5.530_843_701_478_336e-4; // exp(-7.5)

/// Intervals in the memoized cumulative-integral tables.
const TABLE_INTERVALS: usize = 1024;

/// Tolerance used when building the cumulative tables.
pub const HISTORY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseKind {
    ConstantStep,
    TruncatedGaussian,
}

impl PulseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PulseKind::ConstantStep => "constant",
            PulseKind::TruncatedGaussian => "gaussian",
        }
    }
}

impl fmt::Display for PulseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PulseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(PulseKind::ConstantStep),
            "gaussian" => Ok(PulseKind::TruncatedGaussian),
            other => Err(Error::out_of_range(
                "pulse_shape",
                format!("expected `constant` or `gaussian`, got {other:?}"),
            )),
        }
    }
}

/// Temporal shape of a write field, normalized to its peak Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEnvelope {
    pub kind: PulseKind,
    pub duration: f64,
}

impl PulseEnvelope {
    pub fn constant(duration: f64) -> Self {
        PulseEnvelope {
            kind: PulseKind::ConstantStep,
            duration,
        }
    }

    pub fn gaussian(duration: f64) -> Self {
        PulseEnvelope {
            kind: PulseKind::TruncatedGaussian,
            duration,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            PulseKind::ConstantStep => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            PulseKind::TruncatedGaussian => {
                if !(0.0..=self.duration).contains(&t) {
                    return 0.0;
                }
                let x = (t - 0.5 * self.duration) / self.duration;
                ((-30.0 * x * x).exp() - GAUSSIAN_OFFSET).max(0.0)
            }
        }
    }

    pub fn value_sq(&self, t: f64) -> f64 {
        let v = self.value(t);
        v * v
    }
}

/// Envelope value at time `t`; see [`PulseEnvelope::value`].
pub fn envelope_value(pulse: &PulseEnvelope, t: f64) -> f64 {
    pulse.value(t)
}

/// `𝒲(t) = 𝒲(0) e^{-G(t)} + e^{-G(t)} - 1` with `G(t) = ∫₀ᵗ γ′(s) ds`.
pub fn population_difference(w0: f64, pump_decay: impl Fn(f64) -> f64, t: f64) -> f64 {
    let g = if t > 0.0 {
        quad::integrate(&pump_decay, 0.0, t, 1e-13)
            .map(|r| r.value)
            .unwrap_or_else(|e| match e {
                Error::Quadrature { estimate, .. } => estimate,
                _ => f64::NAN,
            })
    } else {
        0.0
    };
    population_from_exponent(w0, g)
}

fn population_from_exponent(w0: f64, g: f64) -> f64 {
    if g == 0.0 {
        return w0;
    }
    let decay = (-g).exp();
    w0 * decay + decay - 1.0
}

/// Configuration keys in canonical order.
pub const CONFIG_KEYS: [&str; 13] = [
    "w0",
    "optical_depth_1",
    "pump_ratio",
    "delta_big_hz",
    "delta_small_hz",
    "gamma_s_hz",
    "gamma_1_hz",
    "gamma_2_hz",
    "t1_s",
    "t2_s",
    "pulse_shape",
    "g_ratio",
    "rabi_1_hz",
];

const REQUIRED_KEYS: [&str; 8] = [
    "w0",
    "optical_depth_1",
    "pump_ratio",
    "delta_big_hz",
    "delta_small_hz",
    "gamma_s_hz",
    "gamma_1_hz",
    "gamma_2_hz",
];

pub const DEFAULT_PULSE_DURATION_S: f64 = 1e-6;
pub const DEFAULT_RABI_1_HZ: f64 = 5e7;

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::DuplicateKey(key.to_string()));
        }
    }
    Ok(map)
}

/// Physical parameters of both write channels.
///
/// Rates and detunings are angular frequencies (rad/s); durations are seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Initial population difference 𝒲(0) seen by the second write pulse.
    pub w0: f64,
    /// `N g₁² |Ω₁₀|² T₁ L / (c Δ²)`.
    pub optical_depth_1: f64,
    /// `|Ω₂| / |Ω₁|`.
    pub pump_ratio: f64,
    pub delta_big: f64,
    pub delta_small: f64,
    pub gamma_s: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub t1: f64,
    pub t2: f64,
    /// Peak Rabi frequency of write 1.
    pub rabi_1: f64,
    /// `g₂ / g₁`.
    pub g_ratio: f64,
    pub pulse_shape: PulseKind,
    /// When false the first write field is off (`Ω_W₁ = 0`).
    pub write1_enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelId {
    Write1,
    Write2,
}

/// Build validated parameters from a key-value map (values in Hz and seconds).
pub fn build_params(config: &BTreeMap<String, String>) -> Result<ModelParams> {
    if let Some(key) = config.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(Error::UnknownKey(key.clone()));
    }
    for key in REQUIRED_KEYS {
        if !config.contains_key(key) {
            return Err(Error::MissingKey(key.to_string()));
        }
    }
    let num = |key: &str, default: f64| -> Result<f64> {
        match config.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::NotNumeric {
                    key: key.to_string(),
                    value: v.clone(),
                }),
        }
    };
    let params = ModelParams {
        w0: num("w0", f64::NAN)?,
        optical_depth_1: num("optical_depth_1", f64::NAN)?,
        pump_ratio: num("pump_ratio", f64::NAN)?,
        delta_big: TAU * num("delta_big_hz", f64::NAN)?,
        delta_small: TAU * num("delta_small_hz", f64::NAN)?,
        gamma_s: TAU * num("gamma_s_hz", f64::NAN)?,
        gamma_1: TAU * num("gamma_1_hz", f64::NAN)?,
        gamma_2: TAU * num("gamma_2_hz", f64::NAN)?,
        t1: num("t1_s", DEFAULT_PULSE_DURATION_S)?,
        t2: num("t2_s", DEFAULT_PULSE_DURATION_S)?,
        rabi_1: TAU * num("rabi_1_hz", DEFAULT_RABI_1_HZ)?,
        g_ratio: num("g_ratio", 1.0)?,
        pulse_shape: match config.get("pulse_shape") {
            None => PulseKind::TruncatedGaussian,
            Some(v) => v.parse()?,
        },
        write1_enabled: true,
    };
    params.validate()?;
    Ok(params)
}

impl ModelParams {
    /// The parameter set of the write-write experiment comparison
    /// (Gaussian pulses, 𝒲(0) = 0.99, optical depth 8.5, pump ratio 1.56).
    pub fn fig4() -> Self {
        build_params(&fig4_config()).expect("built-in parameter set is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.w0) {
            return Err(Error::out_of_range("w0", format!("{} not in [-1, 1]", self.w0)));
        }
        let positive = [
            ("optical_depth_1", self.optical_depth_1),
            ("pump_ratio", self.pump_ratio),
            ("delta_big_hz", self.delta_big),
            ("delta_small_hz", self.delta_small),
            ("t1_s", self.t1),
            ("t2_s", self.t2),
            ("g_ratio", self.g_ratio),
        ];
        for (key, v) in positive {
            if !(v > 0.0) {
                return Err(Error::out_of_range(key, format!("{v} must be > 0")));
            }
        }
        let nonnegative = [
            ("gamma_s_hz", self.gamma_s),
            ("gamma_1_hz", self.gamma_1),
            ("gamma_2_hz", self.gamma_2),
            ("rabi_1_hz", self.rabi_1),
        ];
        for (key, v) in nonnegative {
            if !(v >= 0.0) {
                return Err(Error::out_of_range(key, format!("{v} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Echo as a configuration map (Hz and seconds).
    pub fn to_config(&self) -> BTreeMap<String, String> {
        let entries = [
            ("w0", self.w0.to_string()),
            ("optical_depth_1", self.optical_depth_1.to_string()),
            ("pump_ratio", self.pump_ratio.to_string()),
            ("delta_big_hz", (self.delta_big / TAU).to_string()),
            ("delta_small_hz", (self.delta_small / TAU).to_string()),
            ("gamma_s_hz", (self.gamma_s / TAU).to_string()),
            ("gamma_1_hz", (self.gamma_1 / TAU).to_string()),
            ("gamma_2_hz", (self.gamma_2 / TAU).to_string()),
            ("t1_s", self.t1.to_string()),
            ("t2_s", self.t2.to_string()),
            ("pulse_shape", self.pulse_shape.to_string()),
            ("g_ratio", self.g_ratio.to_string()),
            ("rabi_1_hz", (self.rabi_1 / TAU).to_string()),
        ];
        entries
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    /// Same parameters with the first write field switched off.
    pub fn without_write1(&self) -> Self {
        ModelParams {
            write1_enabled: false,
            ..self.clone()
        }
    }

    pub fn with_pulse_shape(&self, kind: PulseKind) -> Self {
        ModelParams {
            pulse_shape: kind,
            ..self.clone()
        }
    }

    pub fn rabi(&self, id: ChannelId) -> f64 {
        match id {
            ChannelId::Write1 if !self.write1_enabled => 0.0,
            ChannelId::Write1 => self.rabi_1,
            ChannelId::Write2 => self.pump_ratio * self.rabi_1,
        }
    }

    fn detuning(&self, id: ChannelId) -> f64 {
        match id {
            ChannelId::Write1 => self.delta_big,
            ChannelId::Write2 => self.delta_small,
        }
    }

    /// Peak `χₖ² L / c` in 1/s.
    pub fn coupling_sq(&self, id: ChannelId) -> f64 {
        let write1 = self.optical_depth_1 / self.t1;
        match id {
            ChannelId::Write1 if !self.write1_enabled => 0.0,
            ChannelId::Write1 => write1,
            ChannelId::Write2 => {
                let detuning = self.delta_big / self.delta_small;
                write1 * (self.pump_ratio * detuning * self.g_ratio).powi(2)
            }
        }
    }

    /// Peak pump-induced spin decay `γₖ′ = γₖ |Ω|² / det²`.
    pub fn pump_decay(&self, id: ChannelId) -> f64 {
        let gamma = match id {
            ChannelId::Write1 => self.gamma_1,
            ChannelId::Write2 => self.gamma_2,
        };
        gamma * (self.rabi(id) / self.detuning(id)).powi(2)
    }

    /// Peak AC Stark shift `δ_L = |Ω|² / det`.
    pub fn stark_shift(&self, id: ChannelId) -> f64 {
        self.rabi(id).powi(2) / self.detuning(id)
    }

    /// Peak complex spin decay `Γ_S = γ_s + γ′ − i δ_L` in rad/s.
    pub fn spin_decay(&self, id: ChannelId) -> Complex64 {
        Complex64::new(self.gamma_s + self.pump_decay(id), -self.stark_shift(id))
    }

    /// Dimensionless description of one channel, time measured in T₂.
    pub fn channel(&self, id: ChannelId) -> Channel {
        let duration = match id {
            ChannelId::Write1 => self.t1 / self.t2,
            ChannelId::Write2 => 1.0,
        };
        let envelope = PulseEnvelope {
            kind: self.pulse_shape,
            duration,
        };
        Channel {
            envelope,
            gain: self.coupling_sq(id) * self.t2,
            spin_decay: self.gamma_s * self.t2,
            pump_decay: self.pump_decay(id) * self.t2,
            stark_shift: self.stark_shift(id) * self.t2,
        }
    }
}

/// The Gaussian write-write parameter set as configuration text values.
pub fn fig4_config() -> BTreeMap<String, String> {
    [
        ("w0", "0.99"),
        ("optical_depth_1", "8.5"),
        ("pump_ratio", "1.56"),
        ("delta_big_hz", "1.2e9"),
        ("delta_small_hz", "1e9"),
        ("gamma_s_hz", "1e4"),
        ("gamma_1_hz", "5.746e6"),
        ("gamma_2_hz", "6.605e6"),
        ("pulse_shape", "gaussian"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// One write channel in units of T₂ and L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub envelope: PulseEnvelope,
    /// Peak `χ² L T₂ / c`.
    pub gain: f64,
    /// `γ_s T₂`.
    pub spin_decay: f64,
    /// Peak `γ′ T₂`.
    pub pump_decay: f64,
    /// Peak `δ_L T₂`.
    pub stark_shift: f64,
}

impl Channel {
    /// Constant-step channel from dimensionless numbers.
    pub fn constant(gain: f64, spin_decay: f64, pump_decay: f64) -> Self {
        Channel {
            envelope: PulseEnvelope::constant(1.0),
            gain,
            spin_decay,
            pump_decay,
            stark_shift: 0.0,
        }
    }

    /// Instantaneous `Γ_S(t) T₂`.
    pub fn decay_rate(&self, t: f64) -> Complex64 {
        let f2 = self.envelope.value_sq(t);
        Complex64::new(self.spin_decay + self.pump_decay * f2, -self.stark_shift * f2)
    }
}

/// Whether the coupling is weighted by the depleting population difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Population {
    /// 𝒲 ≡ 1.
    Undepleted,
    /// 𝒲(t) from the population-difference equation with the given 𝒲(0).
    Depleting { w0: f64 },
}

#[derive(Debug, Clone)]
struct Tables {
    step: f64,
    envelope_area: Vec<f64>,
    weighted_area: Option<Vec<f64>>,
}

/// Memoized Γ(t′), p(t′) and 𝒲(t) for one channel. Immutable once built.
///
/// For constant pulses the closed forms are used, with
/// `p(t′) = η(t′) χ² t′` and `η(t′) = 𝒲(0)(1 − γ′t′/2) − γ′t′/2`.
/// For Gaussian pulses the cumulative integrals are tabulated on a uniform
/// grid and completed inside each interval with a 16-point rule.
#[derive(Debug, Clone)]
pub struct ChannelHistory {
    channel: Channel,
    population: Population,
    tables: Option<Tables>,
}

impl ChannelHistory {
    pub fn new(channel: Channel, population: Population) -> Result<Self> {
        if let Population::Depleting { w0 } = population {
            if !(-1.0..=1.0).contains(&w0) {
                return Err(Error::out_of_range("w0", format!("{w0} not in [-1, 1]")));
            }
        }
        let mut history = ChannelHistory {
            channel,
            population,
            tables: None,
        };
        if channel.envelope.kind == PulseKind::TruncatedGaussian {
            history.tables = Some(history.build_tables()?);
        }
        Ok(history)
    }

    fn build_tables(&self) -> Result<Tables> {
        let env = self.channel.envelope;
        let step = env.duration / TABLE_INTERVALS as f64;
        let tol = HISTORY_TOL / TABLE_INTERVALS as f64;
        let mut envelope_area = vec![0.0; TABLE_INTERVALS + 1];
        for k in 0..TABLE_INTERVALS {
            let (a, b) = (k as f64 * step, (k + 1) as f64 * step);
            let piece = quad::integrate(|s| env.value_sq(s), a, b, tol)?.value;
            envelope_area[k + 1] = envelope_area[k] + piece;
        }
        let mut tables = Tables {
            step,
            envelope_area,
            weighted_area: None,
        };
        if let Population::Depleting { .. } = self.population {
            let partial = ChannelHistory {
                channel: self.channel,
                population: self.population,
                tables: Some(tables.clone()),
            };
            let mut weighted = vec![0.0; TABLE_INTERVALS + 1];
            for k in 0..TABLE_INTERVALS {
                let (a, b) = (k as f64 * step, (k + 1) as f64 * step);
                let piece =
                    quad::integrate(|s| partial.population(s) * env.value_sq(s), a, b, tol)?.value;
                weighted[k + 1] = weighted[k] + piece;
            }
            tables.weighted_area = Some(weighted);
        }
        Ok(tables)
    }

    fn lookup(table: &[f64], step: f64, t: f64, integrand: impl FnMut(f64) -> f64) -> f64 {
        let end = step * TABLE_INTERVALS as f64;
        let t = t.clamp(0.0, end);
        let k = ((t / step) as usize).min(TABLE_INTERVALS - 1);
        let t_k = k as f64 * step;
        table[k] + quad::gauss16(t_k, t, integrand)
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn population_model(&self) -> Population {
        self.population
    }

    pub fn envelope_sq(&self, t: f64) -> f64 {
        self.channel.envelope.value_sq(t)
    }

    /// `∫₀ᵗ f(s)² ds`.
    pub fn envelope_area(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.tables {
            None => t,
            Some(tab) => {
                let env = self.channel.envelope;
                Self::lookup(&tab.envelope_area, tab.step, t, |s| env.value_sq(s))
            }
        }
    }

    /// Complex `Γ(t′) = ∫₀^{t′} Γ_S(t″) dt″` (dimensionless).
    pub fn gamma_integral(&self, t: f64) -> Complex64 {
        let c = &self.channel;
        let area = self.envelope_area(t);
        Complex64::new(
            c.spin_decay * t.max(0.0) + c.pump_decay * area,
            -c.stark_shift * area,
        )
    }

    /// `Re Γ(t′)`.
    pub fn decay_exponent(&self, t: f64) -> f64 {
        self.gamma_integral(t).re
    }

    /// `Re Γ_S(t′)`, the derivative of [`decay_exponent`](Self::decay_exponent).
    pub fn decay_rate(&self, t: f64) -> f64 {
        self.channel.decay_rate(t).re
    }

    /// Population difference 𝒲(t).
    pub fn population(&self, t: f64) -> f64 {
        match self.population {
            Population::Undepleted => 1.0,
            Population::Depleting { w0 } => {
                population_from_exponent(w0, self.channel.pump_decay * self.envelope_area(t))
            }
        }
    }

    /// `η(t′)` of the constant-pulse solution.
    pub fn eta(&self, t: f64) -> Option<f64> {
        if self.channel.envelope.kind != PulseKind::ConstantStep {
            return None;
        }
        Some(match self.population {
            Population::Undepleted => 1.0,
            Population::Depleting { w0 } => {
                let x = 0.5 * self.channel.pump_decay * t;
                w0 * (1.0 - x) - x
            }
        })
    }

    /// Dimensionless `p(t′) L / c`.
    pub fn p_integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let gain = self.channel.gain;
        if let Some(eta) = self.eta(t) {
            return gain * eta * t;
        }
        match (&self.population, &self.tables) {
            (Population::Undepleted, _) => gain * self.envelope_area(t),
            (Population::Depleting { .. }, Some(tab)) => {
                let env = self.channel.envelope;
                let weighted = tab.weighted_area.as_ref().expect("depleting table");
                gain * Self::lookup(weighted, tab.step, t, |s| self.population(s) * env.value_sq(s))
            }
            (Population::Depleting { .. }, None) => unreachable!("gaussian histories are tabulated"),
        }
    }

    /// `dp/dt′`, the instantaneous coupling `𝒲 χ² L T₂ / c` consistent with
    /// [`p_integral`](Self::p_integral).
    pub fn coupling_rate(&self, t: f64) -> f64 {
        let c = &self.channel;
        match (c.envelope.kind, self.population) {
            (PulseKind::ConstantStep, Population::Depleting { w0 }) => {
                if t < 0.0 {
                    0.0
                } else {
                    c.gain * (w0 - (w0 + 1.0) * c.pump_decay * t)
                }
            }
            _ => c.gain * self.population(t) * self.envelope_sq(t),
        }
    }

    /// Smallest effective population weight on `[0, t_end]`.
    pub fn min_population(&self, t_end: f64) -> f64 {
        let c = &self.channel;
        if c.gain == 0.0 {
            return self.population(t_end);
        }
        // Both the exact and the linearized weights are monotone in time.
        let w_end = match (c.envelope.kind, self.population) {
            (PulseKind::ConstantStep, Population::Depleting { w0 }) => {
                w0 - (w0 + 1.0) * c.pump_decay * t_end
            }
            _ => self.population(t_end),
        };
        w_end.min(self.population(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_envelope_values() {
        let p = PulseEnvelope::gaussian(2.0);
        assert_eq!(p.value(0.0), 0.0);
        assert_eq!(p.value(2.0), 0.0);
        assert!((p.value(1.0) - (1.0 - (-7.5f64).exp())).abs() < 1e-15);
        assert!((p.value(1.0) - 0.999446916).abs() < 1e-9);
        assert_eq!(p.value(-0.1), 0.0);
        assert_eq!(p.value(2.1), 0.0);
        assert!((GAUSSIAN_OFFSET - (-7.5f64).exp()).abs() < 1e-19);
        for i in 0..=128 {
            let s = i as f64 / 128.0;
            assert_eq!(p.value(1.0 + s), p.value(1.0 - s));
        }
    }

    #[test]
    fn constant_envelope_is_step() {
        let p = PulseEnvelope::constant(1.0);
        assert_eq!(envelope_value(&p, 0.3), 1.0);
        assert_eq!(envelope_value(&p, 0.0), 1.0);
        assert_eq!(envelope_value(&p, 7.0), 1.0);
        assert_eq!(envelope_value(&p, -1e-9), 0.0);
    }

    #[test]
    fn population_difference_cases() {
        assert_eq!(population_difference(0.9, |_| 0.3, 0.0), 0.9);
        let w = population_difference(1.0, |_| 0.1, 1.0);
        assert!((w - (2.0 * (-0.1f64).exp() - 1.0)).abs() < 1e-15);
        assert!((w - 0.8096748).abs() < 1e-7);
        assert!((population_difference(0.5, |_| 1.0, 60.0) + 1.0).abs() < 1e-12);
        // closed form with constant rate to machine precision
        for i in 0..20 {
            let t = 0.37 * i as f64;
            let closed = 0.3 * (-0.2 * t).exp() + (-0.2 * t).exp() - 1.0;
            assert!((population_difference(0.3, |_| 0.2, t) - closed).abs() < 1e-14);
        }
    }

    fn base_config() -> BTreeMap<String, String> {
        fig4_config()
    }

    #[test]
    fn fig4_parameters_are_accepted() {
        let p = ModelParams::fig4();
        assert_eq!(p.w0, 0.99);
        assert_eq!(p.pulse_shape, PulseKind::TruncatedGaussian);
        assert!((p.gamma_1 - TAU * 5.746e6).abs() < 1e-3);
        // χ₂²L/c = OD₁ · r² · (Δ/δ)² / T₁
        let expected = 8.5 * 1.56f64.powi(2) * 1.44 / 1e-6;
        assert!((p.coupling_sq(ChannelId::Write2) / expected - 1.0).abs() < 1e-14);
        let ch2 = p.channel(ChannelId::Write2);
        assert!((ch2.gain - 8.5 * 1.56f64.powi(2) * 1.44).abs() < 1e-12);
        let ch1 = p.channel(ChannelId::Write1);
        assert!((ch1.gain - 8.5).abs() < 1e-12);
        assert!(p.spin_decay(ChannelId::Write2).im < 0.0);
    }

    #[test]
    fn lossless_limit() {
        let mut cfg = base_config();
        for k in ["gamma_s_hz", "gamma_1_hz", "gamma_2_hz"] {
            cfg.insert(k.into(), "0".into());
        }
        cfg.insert("w0".into(), "1".into());
        cfg.insert("optical_depth_1".into(), "1".into());
        cfg.insert("pump_ratio".into(), "1".into());
        let p = build_params(&cfg).unwrap();
        assert_eq!(p.spin_decay(ChannelId::Write2).re, 0.0);
        cfg.insert("rabi_1_hz".into(), "0".into());
        let p = build_params(&cfg).unwrap();
        assert_eq!(p.spin_decay(ChannelId::Write2), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn config_errors_name_the_key() {
        let mut cfg = base_config();
        cfg.insert("w0".into(), "1.5".into());
        let e = build_params(&cfg).unwrap_err();
        assert_eq!(e.to_string(), "w0 out of range: 1.5 not in [-1, 1]");

        let mut cfg = base_config();
        cfg.remove("pump_ratio");
        assert!(matches!(build_params(&cfg), Err(Error::MissingKey(k)) if k == "pump_ratio"));

        let mut cfg = base_config();
        cfg.insert("gamma_s_hz".into(), "fast".into());
        assert!(matches!(build_params(&cfg), Err(Error::NotNumeric { key, .. }) if key == "gamma_s_hz"));

        let mut cfg = base_config();
        cfg.insert("colour".into(), "red".into());
        assert!(matches!(build_params(&cfg), Err(Error::UnknownKey(k)) if k == "colour"));

        let mut cfg = base_config();
        cfg.insert("gamma_2_hz".into(), "-1".into());
        assert!(matches!(build_params(&cfg), Err(Error::OutOfRange { key, .. }) if key == "gamma_2_hz"));

        let mut cfg = base_config();
        cfg.insert("pulse_shape".into(), "square".into());
        assert!(build_params(&cfg).is_err());
    }

    #[test]
    fn config_text_parsing() {
        let text = "# header\nw0 = 0.5 # trailing\n\n  pump_ratio=2\n";
        let map = parse_config(text).unwrap();
        assert_eq!(map["w0"], "0.5");
        assert_eq!(map["pump_ratio"], "2");
        assert!(matches!(parse_config("w0 0.5"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse_config("w0=1\nw0=2"), Err(Error::DuplicateKey(_))));
    }

    #[test]
    fn constant_histories() {
        let ch = Channel {
            stark_shift: 0.7,
            ..Channel::constant(3.0, 0.25, 0.0)
        };
        let h = ChannelHistory::new(ch, Population::Depleting { w0: 1.0 }).unwrap();
        assert_eq!(h.gamma_integral(0.0), Complex64::new(0.0, 0.0));
        assert_eq!(h.p_integral(0.0), 0.0);
        assert_eq!(h.gamma_integral(2.0), Complex64::new(0.5, -1.4));
        // γ′ = 0: p is exactly linear with slope 𝒲(0) χ²
        for i in 1..10 {
            let t = 0.3 * i as f64;
            assert_eq!(h.p_integral(t), 3.0 * t);
        }
        // 𝒲(0) = 1, γ′t′ = 0.2 → η = 0.8
        let h = ChannelHistory::new(Channel::constant(3.0, 0.0, 0.2), Population::Depleting { w0: 1.0 })
            .unwrap();
        assert!((h.eta(1.0).unwrap() - 0.8).abs() < 1e-15);
        assert!((h.p_integral(1.0) - 0.8 * 3.0).abs() < 1e-15);
    }

    fn riemann(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        // midpoint Riemann sum
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn gaussian_gamma_integral_against_riemann_sum() {
        let ch = Channel {
            envelope: PulseEnvelope::gaussian(1.0),
            gain: 1.0,
            spin_decay: 0.0,
            pump_decay: 1.0,
            stark_shift: 0.0,
        };
        let h = ChannelHistory::new(ch, Population::Undepleted).unwrap();
        let env = ch.envelope;
        let j = riemann(|t| env.value_sq(t), 0.0, 1.0, 400_000);
        assert!((h.gamma_integral(1.0).re - j).abs() < 1e-10, "{} vs {j}", h.gamma_integral(1.0).re);
        let j_half = riemann(|t| env.value_sq(t), 0.0, 0.43, 400_000);
        assert!((h.envelope_area(0.43) - j_half).abs() < 1e-10);
        // beyond the pulse nothing accumulates
        assert_eq!(h.envelope_area(1.5), h.envelope_area(1.0));
    }

    #[test]
    fn gaussian_p_integral_against_riemann_sum() {
        let ch = Channel {
            envelope: PulseEnvelope::gaussian(1.0),
            gain: 2.0,
            spin_decay: 0.1,
            pump_decay: 1.5,
            stark_shift: 3.0,
        };
        let h = ChannelHistory::new(ch, Population::Depleting { w0: 0.9 }).unwrap();
        let env = ch.envelope;
        let w = |t: f64| population_difference(0.9, |s| 1.5 * env.value_sq(s), t);
        for &t in &[0.2, 0.5, 0.77, 1.0] {
            let oracle = 2.0 * riemann(|s| w(s) * env.value_sq(s), 0.0, t, 4000);
            assert!((h.p_integral(t) - oracle).abs() < 1e-7, "t={t}");
            assert!((h.population(t) - w(t)).abs() < 1e-13);
        }
        // Re Γ nondecreasing, p continuous
        let mut prev = 0.0;
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            let g = h.gamma_integral(t).re;
            assert!(g >= prev);
            prev = g;
        }
        let eps = 1e-9;
        assert!((h.p_integral(0.5 + eps) - h.p_integral(0.5 - eps)).abs() < 1e-8);
    }

    #[test]
    fn coupling_rate_is_derivative_of_p() {
        for ch in [
            Channel::constant(4.0, 0.2, 0.3),
            Channel {
                envelope: PulseEnvelope::gaussian(1.0),
                ..Channel::constant(4.0, 0.2, 0.3)
            },
        ] {
            let h = ChannelHistory::new(ch, Population::Depleting { w0: 0.95 }).unwrap();
            for &t in &[0.1, 0.35, 0.6, 0.9] {
                let d = 1e-5;
                let fd = (h.p_integral(t + d) - h.p_integral(t - d)) / (2.0 * d);
                assert!((fd - h.coupling_rate(t)).abs() < 1e-7, "{:?} t={t}", ch.envelope.kind);
            }
        }
    }
}
