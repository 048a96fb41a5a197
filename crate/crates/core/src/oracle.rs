//! Direct integration of the one-dimensional propagation pair, independent of
//! the Green's-function kernels.
//!
//! The cell is cut into `M` equal cells with spin modes
//! `b_i = h^{-1/2} ∫_cell Ŝ dz`. In the moving frame the Stokes field is
//! slaved to the spin wave, `Ê(z) ∝ ∫₀^z Ŝ† dz′`, which on the grid becomes a
//! lower-triangular matrix `T` (1 below the diagonal, ½ on it). The spin modes
//! then obey a linear system with gain `κ(t) = 𝒲(t)χ²(t)h`, and their second
//! moments `N_ij = ⟨b_i† b_j⟩` satisfy
//!
//! ```text
//! dN/dt = −2r N + κ (T N + N Tᵀ) + κ J
//! ```
//!
//! where `J` is the all-ones matrix (the spontaneous source from the vacuum
//! commutator, `T + Tᵀ = J`) and `r = Re Γ_S`. Spin Langevin noise drops out
//! of the normally ordered moments. The output intensity at the exit face is
//! `G f² (1 + h Σ_ij N_ij)`; the vacuum and seeded parts are propagated
//! separately since the system is linear.

use crate::error::{Error, Result};
use crate::intensity::IntensityTrace;
use crate::params::ChannelHistory;
use crate::spinwave::{split_vacuum, Ordering, SpinCorrelation};

pub const MIN_CELLS: usize = 32;
/// Largest admissible `dt · max(|Γ_S|, coupling)`.
pub const STABILITY_LIMIT: f64 = 0.1;
pub const DIAGONAL_TOL: f64 = 1e-9;
/// Relative errors at or below this level are rounding, not discretization.
pub const ROUNDING_FLOOR: f64 = 1e-11;

/// Equal-time second moments of the spin modes on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub z_cells: Vec<f64>,
    /// Row-major `M × M` matrix `⟨b_i† b_j⟩`. The Stark phase cancels in
    /// these moments, so the matrix is real symmetric.
    pub corr: Vec<f64>,
    pub t: f64,
}

impl GridState {
    fn new(m: usize, diagonal: &[f64]) -> Self {
        let mut corr = vec![0.0; m * m];
        for (i, &d) in diagonal.iter().enumerate() {
            corr[i * m + i] = d;
        }
        GridState {
            z_cells: (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect(),
            corr,
            t: 0.0,
        }
    }

    pub fn cells(&self) -> usize {
        self.z_cells.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.corr[i * self.cells() + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.cells()).map(|i| self.get(i, i)).sum()
    }

    pub fn min_diagonal(&self) -> f64 {
        (0..self.cells()).map(|i| self.get(i, i)).fold(f64::INFINITY, f64::min)
    }

    pub fn is_symmetric(&self) -> bool {
        let m = self.cells();
        (0..m).all(|i| (0..i).all(|j| self.corr[i * m + j] == self.corr[j * m + i]))
    }

    /// Total spin excitation `∫⟨Ŝ†Ŝ⟩ dz`.
    pub fn spin_excitation(&self) -> f64 {
        self.trace() / self.cells() as f64
    }

    /// `h Σ_ij N_ij`, the normally ordered part of `|∫Ŝ dz|²`.
    pub fn collective_sum(&self) -> f64 {
        self.corr.iter().sum::<f64>() / self.cells() as f64
    }
}

/// `out = −2r n + κ(x + xᵀ) + source·κ` with `x = T n`.
fn derivative(n: &[f64], m: usize, kappa: f64, r: f64, source: bool, x: &mut [f64], out: &mut [f64]) {
    for j in 0..m {
        let mut running = 0.0;
        for i in 0..m {
            let v = n[i * m + j];
            x[i * m + j] = running + 0.5 * v;
            running += v;
        }
    }
    let s = if source { kappa } else { 0.0 };
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = -2.0 * r * n[i * m + j] + kappa * (x[i * m + j] + x[j * m + i]) + s;
        }
    }
}

struct Propagator<'a> {
    history: &'a ChannelHistory,
    m: usize,
    source: bool,
    k: [Vec<f64>; 4],
    x: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Propagator<'a> {
    fn new(history: &'a ChannelHistory, m: usize, source: bool) -> Self {
        let z = || vec![0.0; m * m];
        Propagator {
            history,
            m,
            source,
            k: [z(), z(), z(), z()],
            x: z(),
            tmp: z(),
        }
    }

    fn rates(&self, t: f64) -> (f64, f64) {
        let kappa = self.history.coupling_rate(t) / self.m as f64;
        (kappa, self.history.decay_rate(t))
    }

    /// Classical fourth-order Runge–Kutta step.
    fn step(&mut self, state: &mut GridState, dt: f64) {
        let m = self.m;
        let t = state.t;
        let stages = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
        for (s, &(c, a)) in stages.iter().enumerate() {
            let (kappa, r) = self.rates(t + c * dt);
            if s == 0 {
                self.tmp.copy_from_slice(&state.corr);
            } else {
                let prev = &self.k[s - 1];
                for (y, (n, k)) in self.tmp.iter_mut().zip(state.corr.iter().zip(prev)) {
                    *y = n + a * dt * k;
                }
            }
            derivative(&self.tmp, m, kappa, r, self.source, &mut self.x, &mut self.k[s]);
        }
        let [k1, k2, k3, k4] = &self.k;
        for (i, n) in state.corr.iter_mut().enumerate() {
            *n += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        state.t = t + dt;
    }
}

/// Check the step against the fastest rate in the problem.
fn check_step(history: &ChannelHistory, dt: f64, end: f64) -> Result<()> {
    let steps = (end / dt).ceil().max(1.0) as usize;
    let mut fastest: f64 = 0.0;
    for k in 0..=2 * steps {
        let t = end * k as f64 / (2 * steps) as f64;
        let gamma = history.channel().decay_rate(t).norm();
        fastest = fastest.max(gamma).max(history.coupling_rate(t).abs());
    }
    if dt * fastest > STABILITY_LIMIT {
        return Err(Error::StepTooLarge {
            dt,
            bound: STABILITY_LIMIT / fastest,
        });
    }
    Ok(())
}

/// Propagate one initial moment matrix and record `h Σ N` at `times`.
///
/// `observe` sees the state after every step.
fn propagate(
    history: &ChannelHistory,
    initial_diag: &[f64],
    source: bool,
    dt: f64,
    times: &[f64],
    mut observe: impl FnMut(&GridState),
) -> Result<Vec<f64>> {
    let m = initial_diag.len();
    let mut state = GridState::new(m, initial_diag);
    let mut prop = Propagator::new(history, m, source);
    let start_trace = state.trace();
    let mut gain_budget = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while state.t < target {
            let h = dt.min(target - state.t);
            let (kappa, _) = prop.rates(state.t + 0.5 * h);
            gain_budget += (kappa * m as f64).abs() * h;
            prop.step(&mut state, h);
            if target - state.t < 1e-12 * dt {
                state.t = target;
            }
            observe(&state);
            let tr = state.trace();
            let bound = (start_trace + m as f64) * (4.0 * gain_budget + 4.0).exp();
            if !state.corr.iter().all(|v| v.is_finite()) || tr > bound {
                return Err(Error::Instability {
                    t: state.t,
                    reason: format!("trace {tr:e} exceeds growth bound {bound:e}"),
                });
            }
            if state.min_diagonal() < -DIAGONAL_TOL {
                return Err(Error::Instability {
                    t: state.t,
                    reason: format!("negative diagonal {:e}", state.min_diagonal()),
                });
            }
        }
        out.push(state.collective_sum());
    }
    Ok(out)
}

fn validate(history: &ChannelHistory, m: usize, dt: f64, times: &[f64]) -> Result<()> {
    if m < MIN_CELLS {
        return Err(Error::GridTooCoarse(format!("{m} cells, need at least {MIN_CELLS}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step {dt}")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("output times must be nondecreasing and >= 0".into()));
    }
    check_step(history, dt, times.last().copied().unwrap_or(0.0))
}

fn normal_density(initial: Option<&SpinCorrelation>) -> Result<Option<SpinCorrelation>> {
    Ok(match initial {
        None => None,
        Some(c) if c.ordering() == Ordering::AntiNormalOrdered => Some(split_vacuum(c)?.normal),
        Some(c) => Some(c.clone()),
    })
}

/// Oracle output intensity for the channel described by `history`, starting
/// from the vacuum plus an optional prepared spin wave (geometry applied).
pub fn simulate(
    history: &ChannelHistory,
    initial: Option<&SpinCorrelation>,
    cells: usize,
    dt: f64,
    times: &[f64],
) -> Result<IntensityTrace> {
    simulate_observed(history, initial, cells, dt, times, |_| {})
}

/// [`simulate`] with a callback invoked on the vacuum-driven state after
/// every time step.
pub fn simulate_observed(
    history: &ChannelHistory,
    initial: Option<&SpinCorrelation>,
    cells: usize,
    dt: f64,
    times: &[f64],
    observe: impl FnMut(&GridState),
) -> Result<IntensityTrace> {
    validate(history, cells, dt, times)?;
    let seed = normal_density(initial)?;
    let prefactor = |t: f64| history.channel().gain * history.envelope_sq(t);

    let vac = propagate(history, &vec![0.0; cells], true, dt, times, observe)?;
    let vacuum_part: Vec<f64> = times.iter().zip(&vac).map(|(&t, s)| prefactor(t) * (1.0 + s)).collect();
    let seed_part: Vec<f64> = match &seed {
        None => vec![0.0; times.len()],
        Some(n) => {
            let sums = propagate(history, &n.cell_averages(cells), false, dt, times, |_| {})?;
            times.iter().zip(&sums).map(|(&t, s)| prefactor(t) * s).collect()
        }
    };
    let end = times.last().copied().unwrap_or(0.0);
    Ok(IntensityTrace {
        times: times.to_vec(),
        total: vacuum_part.iter().zip(&seed_part).map(|(a, b)| a + b).collect(),
        vacuum_part,
        seed_part,
        geometry: seed.as_ref().map(SpinCorrelation::geometry),
        population_inverted: history.min_population(end) < 0.0,
    })
}

/// `max_i |o_i − a_i| / a_i` over the total intensity, counting points where
/// both are zero as exact.
pub fn max_relative_deviation(oracle: &IntensityTrace, analytic: &IntensityTrace) -> f64 {
    oracle
        .total
        .iter()
        .zip(&analytic.total)
        .map(|(&o, &a)| {
            if o == a {
                0.0
            } else {
                (o - a).abs() / a.abs()
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceEntry {
    pub cells: usize,
    pub dt: f64,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Error against the analytic trace for each cell count at the finest step.
    pub spatial: Vec<ConvergenceEntry>,
    /// Error against the finest step for each coarser step at the finest grid.
    pub temporal: Vec<ConvergenceEntry>,
    /// Observed orders between successive resolutions. A pair whose finer
    /// error is already at [`ROUNDING_FLOOR`] reports `+∞`.
    pub spatial_orders: Vec<f64>,
    pub temporal_orders: Vec<f64>,
    /// Both error sequences decrease strictly under refinement, or have
    /// reached the rounding floor.
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn min_order(&self) -> f64 {
        self.spatial_orders
            .iter()
            .chain(&self.temporal_orders)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn orders(entries: &[ConvergenceEntry], refinement: impl Fn(&ConvergenceEntry, &ConvergenceEntry) -> f64) -> Vec<f64> {
    entries
        .windows(2)
        .map(|w| {
            if w[1].max_rel_error <= ROUNDING_FLOOR {
                f64::INFINITY
            } else {
                (w[0].max_rel_error / w[1].max_rel_error).ln() / refinement(&w[0], &w[1]).ln()
            }
        })
        .collect()
}

/// Observed convergence of the oracle.
///
/// `cells_list` and `dt_list` are ordered from coarse to fine and need at
/// least three entries each.
pub fn convergence_study(
    history: &ChannelHistory,
    initial: Option<&SpinCorrelation>,
    analytic: &IntensityTrace,
    cells_list: &[usize],
    dt_list: &[f64],
) -> Result<ConvergenceReport> {
    if cells_list.len() < 3 || dt_list.len() < 3 {
        return Err(Error::InvalidArgument("convergence study needs at least three resolutions".into()));
    }
    let times = &analytic.times;
    let dt_fine = *dt_list.last().expect("nonempty");
    let m_fine = *cells_list.last().expect("nonempty");

    let spatial = cells_list
        .iter()
        .map(|&m| {
            let trace = simulate(history, initial, m, dt_fine, times)?;
            Ok(ConvergenceEntry {
                cells: m,
                dt: dt_fine,
                max_rel_error: max_relative_deviation(&trace, analytic),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = simulate(history, initial, m_fine, dt_fine, times)?;
    let temporal = dt_list[..dt_list.len() - 1]
        .iter()
        .map(|&dt| {
            let trace = simulate(history, initial, m_fine, dt, times)?;
            Ok(ConvergenceEntry {
                cells: m_fine,
                dt,
                max_rel_error: max_relative_deviation(&trace, &reference),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let decreasing = |e: &[ConvergenceEntry]| {
        e.windows(2)
            .all(|w| w[1].max_rel_error < w[0].max_rel_error || w[1].max_rel_error <= ROUNDING_FLOOR)
    };
    Ok(ConvergenceReport {
        spatial_orders: orders(&spatial, |a, b| b.cells as f64 / a.cells as f64),
        temporal_orders: orders(&temporal, |a, b| a.dt / b.dt),
        monotone: decreasing(&spatial) && decreasing(&temporal),
        spatial,
        temporal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::{uniform_times, StokesChannel};
    use crate::params::{Channel, Population, PulseEnvelope};
    use crate::spinwave::{flipped_profile, Geometry};

    fn channel(gain: f64, spin: f64, pump: f64) -> Channel {
        Channel::constant(gain, spin, pump)
    }

    #[test]
    fn derivative_of_identity_coupling() {
        // n = 0: only the source survives
        let m = 4;
        let n = vec![0.0; m * m];
        let (mut x, mut out) = (vec![0.0; m * m], vec![0.0; m * m]);
        derivative(&n, m, 0.5, 1.0, true, &mut x, &mut out);
        assert!(out.iter().all(|&v| v == 0.5));
        // T n for n = I is T itself
        let mut n = vec![0.0; m * m];
        for i in 0..m {
            n[i * m + i] = 1.0;
        }
        derivative(&n, m, 1.0, 0.0, false, &mut x, &mut out);
        for i in 0..m {
            for j in 0..m {
                let t = if j < i { 1.0 } else if j == i { 0.5 } else { 0.0 };
                assert_eq!(x[i * m + j], t);
                assert_eq!(out[i * m + j], 1.0);
            }
        }
    }

    #[test]
    fn no_coupling_means_no_light() {
        let h = ChannelHistory::new(channel(0.0, 0.4, 0.0), Population::Depleting { w0: 1.0 }).unwrap();
        let seed = SpinCorrelation::from_fn(|_| 2.5, Ordering::NormalOrdered, Geometry::Co);
        let tr = simulate(&h, Some(&seed), 32, 1e-3, &uniform_times(11, 1.0)).unwrap();
        assert!(tr.total.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn urs_agrees_with_analytic_constant_pulse() {
        let ch = channel(6.0, 0.3, 0.3);
        let h = ChannelHistory::new(ch, Population::Depleting { w0: 1.0 }).unwrap();
        let times = uniform_times(21, 1.0);
        let oracle = simulate(&h, None, 64, 1e-3, &times).unwrap();
        let analytic = StokesChannel::new(ch, Population::Depleting { w0: 1.0 })
            .unwrap()
            .trace(&times, None)
            .unwrap();
        let dev = max_relative_deviation(&oracle, &analytic);
        assert!(dev < 0.01, "{dev}");
    }

    #[test]
    fn ers_agrees_with_analytic_constant_pulse() {
        let ch = channel(6.0, 0.3, 0.0);
        let h = ChannelHistory::new(ch, Population::Depleting { w0: 1.0 }).unwrap();
        let times = uniform_times(11, 1.0);
        let stokes = StokesChannel::new(ch, Population::Depleting { w0: 1.0 }).unwrap();
        let n = flipped_profile(6.0, 0.2);
        for seed in [n.clone(), n.reflect()] {
            let oracle = simulate(&h, Some(&seed), 64, 1e-3, &times).unwrap();
            let analytic = stokes.trace(&times, Some(&seed)).unwrap();
            let dev = max_relative_deviation(&oracle, &analytic);
            assert!(dev < 0.01, "{:?}: {dev}", seed.geometry());
        }
    }

    #[test]
    fn covariance_stays_symmetric_with_nonnegative_diagonal() {
        let h = ChannelHistory::new(channel(5.0, 0.2, 0.1), Population::Depleting { w0: 1.0 }).unwrap();
        let mut checked = 0;
        simulate_observed(&h, None, 32, 2e-3, &uniform_times(5, 1.0), |s| {
            assert!(s.is_symmetric());
            assert!(s.min_diagonal() >= -DIAGONAL_TOL);
            checked += 1;
        })
        .unwrap();
        assert!(checked >= 500);
    }

    #[test]
    fn temporal_convergence_with_time_dependent_coefficients() {
        let ch = Channel {
            envelope: PulseEnvelope::gaussian(1.0),
            ..channel(8.0, 0.3, 0.5)
        };
        let h = ChannelHistory::new(ch, Population::Depleting { w0: 0.95 }).unwrap();
        let times = uniform_times(11, 1.0);
        let analytic = StokesChannel::new(ch, Population::Depleting { w0: 0.95 })
            .unwrap()
            .trace(&times, None)
            .unwrap();
        let rep = convergence_study(&h, None, &analytic, &[32, 64, 128], &[0.0125, 0.00625, 0.003125, 0.0015625]).unwrap();
        assert!(rep.monotone, "{rep:#?}");
        assert!(rep.min_order() >= 1.0, "{rep:#?}");
        assert!(rep.temporal_orders.iter().all(|&p| p > 3.5), "{rep:#?}");
        assert!(rep.spatial_orders.iter().all(|&p| (p - 2.0).abs() < 0.2), "{rep:#?}");
    }

    #[test]
    fn preconditions() {
        let h = ChannelHistory::new(channel(5.0, 0.2, 0.0), Population::Undepleted).unwrap();
        let t = uniform_times(3, 1.0);
        assert!(matches!(simulate(&h, None, 16, 1e-3, &t), Err(Error::GridTooCoarse(_))));
        assert!(matches!(simulate(&h, None, 32, 0.05, &t), Err(Error::StepTooLarge { .. })));
    }
}
