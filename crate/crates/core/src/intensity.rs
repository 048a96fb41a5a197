//! Stokes intensity at the exit face of the cell.
//!
//! In units where ħω = 1, time is measured in T₂ and length in L, the output
//! intensity of the second write pulse is
//!
//! ```text
//! I(t) = G f(t)² { e^{−2R(t)} ∫₀¹ H(1,z,t,0)² C(z) dz
//!                + ∫₀ᵗ 2r(s) e^{−2[R(t)−R(s)]} B(p(t) − p(s)) ds }
//! ```
//!
//! with `G = χ₂²LT₂/c`, `R = Re Γ₂`, `r = Re Γ_S₂`, `B = I₀² − I₁²` and `C`
//! the anti-normally ordered initial spin density. Splitting `C = 1 + n`
//! separates the spontaneous (vacuum) part from the part seeded by the
//! prepared spin wave `n`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{bessel_difference, kernel_h, KernelArgs};
use crate::params::{Channel, ChannelHistory, ChannelId, ModelParams, Population, PulseKind};
use crate::quad::{self, NodeGrid};
use crate::spinwave::{
    flipped_profile, map_geometry, split_vacuum, Geometry, Ordering, PreparedSpinWave, SpinCorrelation,
};

/// Default relative tolerance of the time and space quadratures.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Relative agreement demanded between the closed constant-pulse form and the
/// general formula.
pub const CLOSED_FORM_TOL: f64 = 1e-6;

pub const NORMALIZATION: &str = "hbar_omega=1; time in T2; length in L; intensity in photons per T2";

/// Output intensity against time with its two contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    pub times: Vec<f64>,
    pub total: Vec<f64>,
    pub vacuum_part: Vec<f64>,
    pub seed_part: Vec<f64>,
    pub geometry: Option<Geometry>,
    /// Set when 𝒲 dropped below zero somewhere on the trace, so that the
    /// kernels were evaluated on their J-Bessel continuation.
    pub population_inverted: bool,
}

impl IntensityTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn geometry_label(&self) -> &'static str {
        self.geometry.map_or("none", Geometry::as_str)
    }

    /// Index of the largest total intensity.
    pub fn peak_index(&self) -> usize {
        self.total
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i)
    }

    /// True if the total rises to a single maximum and then falls, ignoring
    /// changes smaller than `tol` relative to the peak.
    pub fn is_single_peaked(&self, tol: f64) -> bool {
        let peak = self.peak_index();
        let slack = tol * self.total[peak];
        let rising = self.total[..=peak].windows(2).all(|w| w[1] >= w[0] - slack);
        let falling = self.total[peak..].windows(2).all(|w| w[1] <= w[0] + slack);
        rising && falling
    }
}

/// Uniform grid of `n` times on `[0, end]`.
pub fn uniform_times(n: usize, end: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect(),
    }
}

fn value_or_estimate(r: Result<quad::QuadResult>) -> Result<f64> {
    r.map(|q| q.value)
}

/// Evaluator for the second write channel with a fixed population history.
#[derive(Debug, Clone)]
pub struct StokesChannel {
    history: ChannelHistory,
    tol: f64,
}

impl StokesChannel {
    pub fn new(channel: Channel, population: Population) -> Result<Self> {
        Ok(StokesChannel {
            history: ChannelHistory::new(channel, population)?,
            tol: DEFAULT_QUAD_TOL,
        })
    }

    /// Second write channel of `params` with initial population difference `w0`.
    pub fn for_params(params: &ModelParams, w0: f64) -> Result<Self> {
        Self::new(params.channel(ChannelId::Write2), Population::Depleting { w0 })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn history(&self) -> &ChannelHistory {
        &self.history
    }

    fn prefactor(&self, t: f64) -> f64 {
        self.history.channel().gain * self.history.envelope_sq(t)
    }

    /// `H(1, z, t, 0)²` for each `z`.
    fn kernel_sq(&self, t: f64, z: f64) -> f64 {
        let h = kernel_h(&KernelArgs::new(&self.history, 1.0, z, t, 0.0));
        h * h
    }

    /// Spontaneous part: decayed vacuum spin fluctuations plus Langevin noise.
    pub fn vacuum_part(&self, t: f64) -> Result<f64> {
        let pre = self.prefactor(t);
        if pre == 0.0 || t <= 0.0 {
            return Ok(pre);
        }
        let h = &self.history;
        let p_t = h.p_integral(t);
        let r_t = h.decay_exponent(t);
        let scale = bessel_difference(p_t).abs().max(1.0);
        let tol = self.tol * scale;

        let vacuum = value_or_estimate(quad::integrate(|z| self.kernel_sq(t, z), 0.0, 1.0, tol))?;
        let noise = value_or_estimate(quad::integrate(
            |s| {
                2.0 * h.decay_rate(s)
                    * (-2.0 * (r_t - h.decay_exponent(s))).exp()
                    * bessel_difference(p_t - h.p_integral(s))
            },
            0.0,
            t,
            tol,
        ))?;
        let value = pre * ((-2.0 * r_t).exp() * vacuum + noise);

        if h.channel().envelope.kind == PulseKind::ConstantStep {
            if let Some(w0) = self.constant_w0() {
                let c = h.channel();
                let closed = urs_constant_closed_form(
                    t,
                    c.gain,
                    c.spin_decay + c.pump_decay,
                    c.pump_decay,
                    w0,
                    self.tol,
                )?;
                if (value - closed).abs() > CLOSED_FORM_TOL * closed.abs() {
                    return Err(Error::Consistency(format!(
                        "constant-pulse intensity at t = {t}: general {value}, closed form {closed}"
                    )));
                }
            }
        }
        Ok(value)
    }

    fn constant_w0(&self) -> Option<f64> {
        match self.history.population_model() {
            Population::Depleting { w0 } => Some(w0),
            Population::Undepleted if self.history.channel().pump_decay == 0.0 => Some(1.0),
            Population::Undepleted => None,
        }
    }

    /// Part seeded by a normally ordered prepared density (geometry applied).
    pub fn seed_part(&self, t: f64, normal: &SpinCorrelation) -> Result<f64> {
        if normal.ordering() != Ordering::NormalOrdered {
            return Err(Error::InvalidArgument(
                "seed density must be normally ordered".into(),
            ));
        }
        let pre = self.prefactor(t);
        if pre == 0.0 {
            return Ok(0.0);
        }
        let r_t = self.history.decay_exponent(t);
        let weighted = normal.integrate_weighted(|z| self.kernel_sq(t, z));
        Ok(pre * (-2.0 * r_t).exp() * weighted)
    }

    /// Full trace, evaluated in parallel and gathered in time order.
    pub fn trace(&self, times: &[f64], seed: Option<&SpinCorrelation>) -> Result<IntensityTrace> {
        let parts = times
            .par_iter()
            .map(|&t| -> Result<(f64, f64)> {
                let vac = self.vacuum_part(t)?;
                let seeded = match seed {
                    Some(n) => self.seed_part(t, n)?,
                    None => 0.0,
                };
                Ok((vac, seeded))
            })
            .collect::<Result<Vec<_>>>()?;
        let end = times.iter().copied().fold(0.0, f64::max);
        let (vacuum_part, seed_part): (Vec<f64>, Vec<f64>) = parts.into_iter().unzip();
        Ok(IntensityTrace {
            times: times.to_vec(),
            total: vacuum_part.iter().zip(&seed_part).map(|(a, b)| a + b).collect(),
            vacuum_part,
            seed_part,
            geometry: seed.map(SpinCorrelation::geometry),
            population_inverted: self.history.min_population(end) < 0.0,
        })
    }
}

/// Usual Raman scattering for constant pulses, written directly from its
/// closed form:
///
/// ```text
/// I(t) = G { 2r ∫₀ᵗ e^{−2r(t−s)} B(G[η(t)t − η(s)s]) ds + e^{−2rt} B(Gη(t)t) }
/// ```
///
/// with `η(t) = 𝒲(0)(1 − γ′t/2) − γ′t/2`. `r` is the total spin decay rate.
pub fn urs_constant_closed_form(t: f64, gain: f64, r: f64, pump_decay: f64, w0: f64, tol: f64) -> Result<f64> {
    let eta_t = |s: f64| (w0 * (1.0 - 0.5 * pump_decay * s) - 0.5 * pump_decay * s) * s;
    let end = gain * eta_t(t);
    let scale = bessel_difference(end).abs().max(1.0);
    let noise = if t > 0.0 && r > 0.0 {
        quad::integrate(
            |s| 2.0 * r * (-2.0 * r * (t - s)).exp() * bessel_difference(gain * (eta_t(t) - eta_t(s))),
            0.0,
            t,
            tol * scale,
        )?
        .value
    } else {
        0.0
    };
    Ok(gain * (noise + (-2.0 * r * t).exp() * bessel_difference(end)))
}

/// URS intensity: vacuum initial state and 𝒲(0) = 1.
pub fn urs_intensity(t: f64, params: &ModelParams, pulse: PulseKind) -> Result<f64> {
    StokesChannel::for_params(&params.with_pulse_shape(pulse), 1.0)?.vacuum_part(t)
}

/// Additional intensity from a normally ordered, geometry-mapped density.
pub fn ers_additional(t: f64, corr: &SpinCorrelation, params: &ModelParams, pulse: PulseKind) -> Result<f64> {
    StokesChannel::for_params(&params.with_pulse_shape(pulse), params.w0)?.seed_part(t, corr)
}

/// Normally ordered spin wave written by the first pulse, in its own frame.
///
/// For constant pulses this is the flipped-atom density with strength
/// `ζ₁ = χ₁²Lt₁/c` and damping `a = 2c Re Γ_S₁/(χ₁²L)`; for Gaussian pulses it
/// is the six-term correlation with the vacuum removed.
pub fn prepared_seed(params: &ModelParams) -> Result<SpinCorrelation> {
    let ch = params.channel(ChannelId::Write1);
    match params.pulse_shape {
        PulseKind::ConstantStep => {
            let zeta1 = ch.gain * ch.envelope.duration;
            if zeta1 == 0.0 {
                return Ok(SpinCorrelation::empty(Geometry::Co));
            }
            let a = 2.0 * (ch.spin_decay + ch.pump_decay) / ch.gain;
            Ok(flipped_profile(zeta1, a))
        }
        PulseKind::TruncatedGaussian => {
            let anti = PreparedSpinWave::new(params)?.profile()?;
            Ok(split_vacuum(&anti)?.normal)
        }
    }
}

/// One point of an ERS trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErsPoint {
    pub total: f64,
    pub vacuum_part: f64,
    pub seed_part: f64,
}

pub fn ers_total(t: f64, geometry: Geometry, params: &ModelParams, pulse: PulseKind) -> Result<ErsPoint> {
    let params = params.with_pulse_shape(pulse);
    let seed = map_geometry(&prepared_seed(&params)?, geometry)?;
    let stokes = StokesChannel::for_params(&params, params.w0)?;
    let vacuum_part = stokes.vacuum_part(t)?;
    let seed_part = stokes.seed_part(t, &seed)?;
    Ok(ErsPoint {
        total: vacuum_part + seed_part,
        vacuum_part,
        seed_part,
    })
}

/// URS and both ERS geometries on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteWriteTraces {
    pub urs: IntensityTrace,
    pub co: IntensityTrace,
    pub counter: IntensityTrace,
}

pub fn write_write_traces(params: &ModelParams, times: &[f64], tol: f64) -> Result<WriteWriteTraces> {
    let seed = prepared_seed(params)?;
    let urs = StokesChannel::for_params(params, 1.0)?.with_tolerance(tol);
    let ers = StokesChannel::for_params(params, params.w0)?.with_tolerance(tol);
    let co = map_geometry(&seed, Geometry::Co)?;
    let counter = map_geometry(&seed, Geometry::Counter)?;
    Ok(WriteWriteTraces {
        urs: urs.trace(times, None)?,
        co: ers.trace(times, Some(&co))?,
        counter: ers.trace(times, Some(&counter))?,
    })
}

/// `I_add-counter / I_add-co` for a prepared profile at kernel strength
/// `s = η(t)χ₂²Lt/c`. The common prefactors cancel.
pub fn enhancement_ratio_for(profile: &SpinCorrelation, strength: f64) -> Result<f64> {
    let grid: &NodeGrid = profile.grid();
    let kernel = |z: f64| {
        let h = kernel_h(&KernelArgs::from_differences(strength, 1.0 - z));
        h * h
    };
    let values = profile.values();
    let n = values.len();
    let (mut co, mut counter) = (0.0, 0.0);
    for (i, (&z, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        let k = w * kernel(z);
        co += k * values[i];
        counter += k * values[n - 1 - i];
    }
    if !(co.is_finite() && counter.is_finite()) || co < f64::MIN_POSITIVE {
        return Err(Error::RatioUnderflow { strength });
    }
    Ok(counter / co)
}

/// [`enhancement_ratio_for`] with the constant-pulse flipped density.
pub fn enhancement_ratio(strength: f64, zeta1: f64, a: f64) -> Result<f64> {
    enhancement_ratio_for(&flipped_profile(zeta1, a), strength)
}
