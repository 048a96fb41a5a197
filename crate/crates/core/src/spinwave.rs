//! The spin wave left in the ensemble by the first write pulse.
//!
//! Correlations are diagonal in space, so a [`SpinCorrelation`] stores only
//! the weight multiplying `δ(z′ − z″)`, sampled on the crate's standard node
//! grid. Densities are measured in units of the cell length L: the vacuum
//! commutator contributes exactly 1 to an anti-normally ordered density.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{kernel_gs, KernelArgs};
use crate::params::{ChannelHistory, ChannelId, ModelParams, Population};
use crate::quad::{self, NodeGrid};
use crate::specfun;

/// Tolerance below which a negative normal-ordered density is treated as
/// rounding and clamped to zero.
pub const ORDERING_EPS: f64 = 1e-9;

pub const FLIPPED_DENSITY_TOL: f64 = 1e-9;
pub const INNER_TOL: f64 = 1e-8;
pub const OUTER_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Co,
    Counter,
}

impl Geometry {
    pub fn as_str(self) -> &'static str {
        match self {
            Geometry::Co => "co",
            Geometry::Counter => "counter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ordering {
    /// `⟨Ŝ†Ŝ⟩`: zero for the vacuum.
    NormalOrdered,
    /// `⟨ŜŜ†⟩`: the normal density plus the unit vacuum commutator.
    AntiNormalOrdered,
}

/// Diagonal spin-wave correlation on `z ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinCorrelation {
    grid: NodeGrid,
    values: Vec<f64>,
    geometry: Geometry,
    ordering: Ordering,
}

impl SpinCorrelation {
    pub fn from_values(grid: NodeGrid, values: Vec<f64>, ordering: Ordering, geometry: Geometry) -> Self {
        assert_eq!(grid.len(), values.len());
        SpinCorrelation {
            grid,
            values,
            geometry,
            ordering,
        }
    }

    /// Sample `density` on the standard grid.
    pub fn from_fn(density: impl Fn(f64) -> f64, ordering: Ordering, geometry: Geometry) -> Self {
        let grid = NodeGrid::standard();
        let values = grid.nodes().iter().map(|&z| density(z)).collect();
        Self::from_values(grid, values, ordering, geometry)
    }

    /// Anti-normally ordered vacuum, density ≡ 1.
    pub fn vacuum(geometry: Geometry) -> Self {
        Self::from_fn(|_| 1.0, Ordering::AntiNormalOrdered, geometry)
    }

    /// Normally ordered empty spin wave, density ≡ 0.
    pub fn empty(geometry: Geometry) -> Self {
        Self::from_fn(|_| 0.0, Ordering::NormalOrdered, geometry)
    }

    pub fn grid(&self) -> &NodeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    /// Weight of the vacuum commutator contained in the density.
    pub fn vacuum_weight(&self) -> f64 {
        match self.ordering {
            Ordering::NormalOrdered => 0.0,
            Ordering::AntiNormalOrdered => 1.0,
        }
    }

    /// Density at `z`, interpolated between grid nodes.
    pub fn density(&self, z: f64) -> f64 {
        self.grid.interpolate(&self.values, z)
    }

    /// `∫₀¹ g(z) density(z) dz` on the node grid.
    pub fn integrate_weighted(&self, g: impl FnMut(f64) -> f64) -> f64 {
        self.grid.integrate_weighted(&self.values, g)
    }

    pub fn integral(&self) -> f64 {
        self.integrate_weighted(|_| 1.0)
    }

    /// Mirror about `z = 1/2` and switch the geometry tag.
    pub fn reflect(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        SpinCorrelation {
            grid: self.grid.clone(),
            values,
            geometry: match self.geometry {
                Geometry::Co => Geometry::Counter,
                Geometry::Counter => Geometry::Co,
            },
            ordering: self.ordering,
        }
    }

    /// Scale the prepared (normally ordered) part by `lambda`.
    pub fn scale_prepared(&self, lambda: f64) -> Self {
        let vac = self.vacuum_weight();
        SpinCorrelation {
            values: self.values.iter().map(|v| vac + lambda * (v - vac)).collect(),
            ..self.clone()
        }
    }

    /// Add the vacuum commutator to a normally ordered density.
    pub fn to_anti_normal(&self) -> Self {
        match self.ordering {
            Ordering::AntiNormalOrdered => self.clone(),
            Ordering::NormalOrdered => SpinCorrelation {
                values: self.values.iter().map(|v| v + 1.0).collect(),
                ordering: Ordering::AntiNormalOrdered,
                ..self.clone()
            },
        }
    }

    /// Averages of the density over `m` equal cells, integrating the
    /// interpolant with a 16-point rule per cell.
    pub fn cell_averages(&self, m: usize) -> Vec<f64> {
        let h = 1.0 / m as f64;
        (0..m)
            .map(|i| {
                let a = i as f64 * h;
                quad::gauss16(a, a + h, |z| self.density(z)) / h
            })
            .collect()
    }
}

/// Rewrite a correlation prepared in the first pulse's frame for the given
/// propagation geometry of the second pulse.
pub fn map_geometry(base: &SpinCorrelation, geometry: Geometry) -> Result<SpinCorrelation> {
    if base.geometry != Geometry::Co {
        return Err(Error::InvalidArgument(
            "map_geometry expects a correlation in the co-propagating frame".into(),
        ));
    }
    Ok(match geometry {
        Geometry::Co => base.clone(),
        Geometry::Counter => base.reflect(),
    })
}

/// Result of removing the vacuum commutator from an anti-normal density.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumSplit {
    pub vacuum_weight: f64,
    pub normal: SpinCorrelation,
    /// Nodes whose slightly negative normal density was clamped to zero.
    pub clamped: usize,
}

pub fn split_vacuum(anti_normal: &SpinCorrelation) -> Result<VacuumSplit> {
    if anti_normal.ordering != Ordering::AntiNormalOrdered {
        return Err(Error::InvalidArgument(
            "split_vacuum expects an anti-normally ordered correlation".into(),
        ));
    }
    let mut clamped = 0;
    let mut values = Vec::with_capacity(anti_normal.values.len());
    for (&z, &v) in anti_normal.grid.nodes().iter().zip(&anti_normal.values) {
        let n = v - 1.0;
        if n < -ORDERING_EPS {
            return Err(Error::OrderingViolation { z, density: v });
        }
        if n < 0.0 {
            clamped += 1;
        }
        values.push(n.max(0.0));
    }
    Ok(VacuumSplit {
        vacuum_weight: 1.0,
        normal: SpinCorrelation {
            values,
            ordering: Ordering::NormalOrdered,
            ..anti_normal.clone()
        },
        clamped,
    })
}

/// Flipped-atom density `n(z) = ∫₀^{ζ₁} e^{−aζ} I₀(2√(ζ z))² dζ` left by a
/// constant write pulse of strength `ζ₁ = χ₁²L t₁/c`, with
/// `a = 2c Re Γ_S₁ / (χ₁² L)`.
pub fn flipped_density(z_norm: f64, zeta1: f64, a: f64) -> f64 {
    if zeta1 <= 0.0 {
        return 0.0;
    }
    let integrand = |zeta: f64| {
        let h = specfun::entire_i0(zeta * z_norm);
        (-a * zeta).exp() * h * h
    };
    match quad::integrate(integrand, 0.0, zeta1, FLIPPED_DENSITY_TOL) {
        Ok(r) => r.value,
        Err(Error::Quadrature { estimate, .. }) => estimate,
        Err(e) => unreachable!("{e}"),
    }
}

/// [`flipped_density`] sampled on the standard grid, normally ordered, in the
/// first pulse's frame.
pub fn flipped_profile(zeta1: f64, a: f64) -> SpinCorrelation {
    let grid = NodeGrid::standard();
    let values = grid
        .nodes()
        .par_iter()
        .map(|&z| flipped_density(z, zeta1, a))
        .collect();
    SpinCorrelation::from_values(grid, values, Ordering::NormalOrdered, Geometry::Co)
}

/// The six contributions to `⟨Ŝ(z,T₁) Ŝ†(z,T₁)⟩` (units of L).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SixTerms {
    /// Decayed vacuum `e^{−2R}`.
    pub vacuum: f64,
    /// `2 e^{−2R} ∫₀^z G_S(z,u,T₁,0) du`.
    pub gain_linear: f64,
    /// `e^{−2R} ∫₀^z G_S² du`.
    pub gain_quadratic: f64,
    /// `4 ∫ r(s) e^{−2[R − R(s)]} ∫₀^z G_S(z,u,T₁,s) du ds`.
    pub noise_linear: f64,
    /// `2 ∫ r(s) e^{−2[R − R(s)]} ds`, equal to `1 − e^{−2R}`.
    pub noise_vacuum: f64,
    /// `2 ∫ r(s) e^{−2[R − R(s)]} ∫₀^z G_S(z,u,T₁,s)² du ds`.
    pub noise_quadratic: f64,
}

impl SixTerms {
    pub fn total(&self) -> f64 {
        self.vacuum
            + self.gain_linear
            + self.gain_quadratic
            + self.noise_linear
            + self.noise_vacuum
            + self.noise_quadratic
    }
}

/// Spin wave prepared by the first write pulse of a parameter set.
#[derive(Debug, Clone)]
pub struct PreparedSpinWave {
    history: ChannelHistory,
    end: f64,
}

impl PreparedSpinWave {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let channel = params.channel(ChannelId::Write1);
        Self::from_history(ChannelHistory::new(channel, Population::Undepleted)?)
    }

    pub fn from_history(history: ChannelHistory) -> Result<Self> {
        let end = history.channel().envelope.duration;
        Ok(PreparedSpinWave { history, end })
    }

    pub fn history(&self) -> &ChannelHistory {
        &self.history
    }

    /// `p₁(T₁) − p₁(s)`.
    fn p_from(&self, s: f64) -> f64 {
        self.history.p_integral(self.end) - self.history.p_integral(s)
    }

    fn gs_integral(p_diff: f64, z: f64, power: i32) -> Result<f64> {
        if p_diff == 0.0 || z == 0.0 {
            return Ok(0.0);
        }
        let g = |u: f64| kernel_gs(&KernelArgs::from_differences(p_diff, z - u)).powi(power);
        Ok(quad::integrate(g, 0.0, z, INNER_TOL)?.value)
    }

    /// Term-by-term evaluation at `z` by nested adaptive quadrature.
    pub fn terms(&self, z: f64) -> Result<SixTerms> {
        let h = &self.history;
        let r_end = h.decay_exponent(self.end);
        let decay = (-2.0 * r_end).exp();
        let p0 = self.p_from(0.0);

        let noise = |power: i32| -> Result<f64> {
            let mut failure = None;
            let value = quad::integrate(
                |s| {
                    let weight = h.decay_rate(s) * (-2.0 * (r_end - h.decay_exponent(s))).exp();
                    if weight == 0.0 {
                        return 0.0;
                    }
                    match Self::gs_integral(self.p_from(s), z, power) {
                        Ok(v) => weight * v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                0.0,
                self.end,
                OUTER_TOL,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(value?.value)
        };

        Ok(SixTerms {
            vacuum: decay,
            gain_linear: 2.0 * decay * Self::gs_integral(p0, z, 1)?,
            gain_quadratic: decay * Self::gs_integral(p0, z, 2)?,
            noise_linear: 4.0 * noise(1)?,
            // r(s) is the derivative of R(s), so the integral is exact.
            noise_vacuum: 1.0 - decay,
            noise_quadratic: 2.0 * noise(2)?,
        })
    }

    pub fn correlation(&self, z: f64) -> Result<f64> {
        Ok(self.terms(z)?.total())
    }

    /// Anti-normally ordered profile on the standard grid, first-pulse frame.
    pub fn profile(&self) -> Result<SpinCorrelation> {
        let grid = NodeGrid::standard();
        let values = grid
            .nodes()
            .par_iter()
            .map(|&z| self.correlation(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpinCorrelation::from_values(
            grid,
            values,
            Ordering::AntiNormalOrdered,
            Geometry::Co,
        ))
    }
}

/// `⟨Ŝa₁(z,T₁) Ŝa₁†(z,T₁)⟩` for the first write pulse of `params`.
pub fn prepared_correlation_gaussian(z_norm: f64, params: &ModelParams) -> Result<f64> {
    PreparedSpinWave::new(params)?.correlation(z_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::bessel_difference;
    use crate::params::{Channel, PulseEnvelope};

    #[test]
    fn flipped_density_reference_values() {
        let closed = (1.0 - (-1.2f64).exp()) / 0.2;
        assert!((flipped_density(0.0, 6.0, 0.2) - closed).abs() < 1e-9);
        assert!((flipped_density(0.0, 6.0, 0.2) - 3.4940289).abs() < 1e-6);
        assert_eq!(flipped_density(0.4, 0.0, 0.2), 0.0);
        assert!(flipped_density(0.5, 6.0, 400.0) < 1e-2);
    }

    #[test]
    fn flipped_density_against_series_in_zeta() {
        // I₀(2√(ζz))² = Σ_k c_k (ζz)^k, integrated term by term at a = 0
        let z: f64 = 0.7;
        let zeta1: f64 = 3.0;
        let mut c = vec![0.0; 60];
        let mut phi = vec![0.0; 60];
        let mut f = 1.0;
        for k in 0..60 {
            if k > 0 {
                f *= k as f64;
            }
            phi[k] = 1.0 / (f * f);
        }
        for i in 0..60 {
            for j in 0..60 - i {
                c[i + j] += phi[i] * phi[j];
            }
        }
        let series: f64 = (0..60)
            .map(|k| c[k] * z.powi(k as i32) * zeta1.powi(k as i32 + 1) / (k + 1) as f64)
            .sum();
        assert!((flipped_density(z, zeta1, 0.0) / series - 1.0).abs() < 1e-11);
    }

    #[test]
    fn geometry_mapping() {
        let uniform = SpinCorrelation::from_fn(|_| 2.0, Ordering::NormalOrdered, Geometry::Co);
        let counter = map_geometry(&uniform, Geometry::Counter).unwrap();
        assert_eq!(counter.values(), uniform.values());
        assert_eq!(counter.geometry(), Geometry::Counter);

        let ramp = SpinCorrelation::from_fn(|z| z, Ordering::NormalOrdered, Geometry::Co);
        let flipped = map_geometry(&ramp, Geometry::Counter).unwrap();
        for &z in &[0.0, 0.13, 0.5, 0.91, 1.0] {
            assert!((flipped.density(z) - (1.0 - z)).abs() < 1e-13);
        }
        assert_eq!(map_geometry(&ramp, Geometry::Co).unwrap(), ramp);
        assert!(map_geometry(&flipped, Geometry::Co).is_err());

        let n = flipped_profile(6.0, 0.2);
        let r = map_geometry(&n, Geometry::Counter).unwrap();
        assert!((r.density(0.0) - n.density(1.0)).abs() < 1e-9 * n.density(1.0));
        assert_eq!(r.reflect(), n);
    }

    #[test]
    fn vacuum_split() {
        let vac = SpinCorrelation::vacuum(Geometry::Co);
        let split = split_vacuum(&vac).unwrap();
        assert_eq!(split.vacuum_weight, 1.0);
        assert!(split.normal.values().iter().all(|&v| v == 0.0));

        let seeded = SpinCorrelation::from_fn(|_| 1.0 + 0.25, Ordering::AntiNormalOrdered, Geometry::Co);
        let split = split_vacuum(&seeded).unwrap();
        assert!(split.normal.values().iter().all(|&v| v == 0.25));
        assert_eq!(split.normal.ordering(), Ordering::NormalOrdered);

        let rounding = SpinCorrelation::from_fn(|_| 1.0 - 1e-12, Ordering::AntiNormalOrdered, Geometry::Co);
        let split = split_vacuum(&rounding).unwrap();
        assert_eq!(split.clamped, rounding.values().len());

        let bad = SpinCorrelation::from_fn(|z| 1.0 - z, Ordering::AntiNormalOrdered, Geometry::Co);
        assert!(matches!(split_vacuum(&bad), Err(Error::OrderingViolation { .. })));
        assert!(split_vacuum(&SpinCorrelation::empty(Geometry::Co)).is_err());
    }

    fn gaussian_write1(gain: f64, spin_decay: f64, pump_decay: f64) -> PreparedSpinWave {
        let ch = Channel {
            envelope: PulseEnvelope::gaussian(1.0),
            gain,
            spin_decay,
            pump_decay,
            stark_shift: 2.0,
        };
        PreparedSpinWave::from_history(ChannelHistory::new(ch, Population::Undepleted).unwrap()).unwrap()
    }

    #[test]
    fn passive_limit_preserves_vacuum() {
        for gamma in [0.0, 0.4, 3.0] {
            let sw = gaussian_write1(0.0, gamma, 0.5);
            for &z in &[0.0, 0.3, 1.0] {
                assert!((sw.correlation(z).unwrap() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn six_terms_against_closed_forms() {
        // Inner integrals: ∫₀^z G_S = I₀(2√(Pz)) − 1 and ∫₀^z G_S² = P [B(Pz) − 1].
        let sw = gaussian_write1(8.0, 0.1, 0.3);
        let h = sw.history();
        let r_end = h.decay_exponent(1.0);
        let decay = (-2.0 * r_end).exp();
        for &z in &[0.0, 0.25, 0.8, 1.0] {
            let t = sw.terms(z).unwrap();
            let p = sw.p_from(0.0);
            let lin = specfun::entire_i0(p * z) - 1.0;
            let sq = p * (bessel_difference(p * z) - 1.0);
            assert!((t.gain_linear - 2.0 * decay * lin).abs() < 1e-8);
            assert!((t.gain_quadratic - decay * sq).abs() < 1e-8);

            let outer = |power: i32| {
                quad::integrate(
                    |s| {
                        let q = sw.p_from(s);
                        let inner = if power == 1 {
                            specfun::entire_i0(q * z) - 1.0
                        } else {
                            q * (bessel_difference(q * z) - 1.0)
                        };
                        h.decay_rate(s) * (-2.0 * (r_end - h.decay_exponent(s))).exp() * inner
                    },
                    0.0,
                    1.0,
                    1e-12,
                )
                .unwrap()
                .value
            };
            assert!((t.noise_linear - 4.0 * outer(1)).abs() < 1e-6, "z={z}");
            assert!((t.noise_quadratic - 2.0 * outer(2)).abs() < 1e-6, "z={z}");
            let vac = quad::integrate(
                |s| 2.0 * h.decay_rate(s) * (-2.0 * (r_end - h.decay_exponent(s))).exp(),
                0.0,
                1.0,
                1e-13,
            )
            .unwrap()
            .value;
            assert!((t.noise_vacuum - vac).abs() < 1e-10);
            assert!(t.total() >= t.vacuum);
        }
    }

    #[test]
    fn fig4_prepared_correlation_increases_along_the_cell() {
        let params = ModelParams::fig4();
        let c: Vec<f64> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&z| prepared_correlation_gaussian(z, &params).unwrap())
            .collect();
        assert!(c[0] < c[1] && c[1] < c[2], "{c:?}");
        // nothing written at the entrance face except through noise
        assert!((c[0] - 1.0).abs() < 1e-12);
        let split = split_vacuum(&PreparedSpinWave::new(&params).unwrap().profile().unwrap()).unwrap();
        assert_eq!(split.clamped, 0);
        assert!(split.normal.values().iter().all(|&v| v > 0.0));
    }
}
