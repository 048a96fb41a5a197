//! Green's-function kernels of the moving-frame solution.
//!
//! With `x = [p(t_hi) − p(t_lo)]·(z_hi − z_lo)/c` the three kernels are
//!
//! ```text
//! H   = I₀(2√x)
//! G_S = √(p_diff / (c dz)) I₁(2√x) = (p_diff / c) · I₁(2√x)/√x
//! G_e = c dz / p_diff · G_S        = dz · I₁(2√x)/√x
//! ```
//!
//! Writing them through the entire functions of [`specfun::entire_i0`] and
//! [`specfun::entire_i1`] removes the `0/0` at `dz → 0` or `p_diff → 0`, and
//! continues them to `x < 0` (population inverted) as J₀ and J₁.
//! Lengths are in units of L and time in units of T₂, so `c = 1`.

use crate::error::{Error, Result};
use crate::params::ChannelHistory;
use crate::quad;
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelArgs {
    pub z_hi: f64,
    pub z_lo: f64,
    pub t_hi: f64,
    pub t_lo: f64,
    /// `p(t_hi) − p(t_lo)`.
    pub p_diff: f64,
    /// `(z_hi − z_lo) / c`.
    pub dz: f64,
}

impl KernelArgs {
    pub fn new(history: &ChannelHistory, z_hi: f64, z_lo: f64, t_hi: f64, t_lo: f64) -> Self {
        debug_assert!(z_hi >= z_lo && t_hi >= t_lo);
        KernelArgs {
            z_hi,
            z_lo,
            t_hi,
            t_lo,
            p_diff: history.p_integral(t_hi) - history.p_integral(t_lo),
            dz: z_hi - z_lo,
        }
    }

    /// Arguments from the two differences alone.
    pub fn from_differences(p_diff: f64, dz: f64) -> Self {
        KernelArgs {
            z_hi: dz,
            z_lo: 0.0,
            t_hi: 0.0,
            t_lo: 0.0,
            p_diff,
            dz,
        }
    }

    /// `p_diff · dz`, the square of half the Bessel argument.
    pub fn product(&self) -> f64 {
        self.p_diff * self.dz
    }

    /// True when the continuation to J-Bessel functions is in use.
    pub fn is_inverted(&self) -> bool {
        self.product() < 0.0
    }
}

pub fn kernel_h(args: &KernelArgs) -> f64 {
    specfun::entire_i0(args.product())
}

pub fn kernel_gs(args: &KernelArgs) -> f64 {
    args.p_diff * specfun::entire_i1(args.product())
}

pub fn kernel_ge(args: &KernelArgs) -> f64 {
    args.dz * specfun::entire_i1(args.product())
}

/// `B(x) = I₀(2√x)² − I₁(2√x)²`, the kernel combination that multiplies the
/// Langevin source in the output intensity.
pub fn bessel_difference(x: f64) -> f64 {
    let h = specfun::entire_i0(x);
    let g = specfun::entire_i1(x);
    h * h - x * g * g
}

const RESIDUAL_SEED_TOL: f64 = 1e-13;

/// Maximum normalized residual of the discretized propagation pair, evaluated
/// on the seed-driven part of the solution.
///
/// With a spin seed `s₀(z) = 1 + z`, no input field and no noise, the solution
/// reduces to
///
/// ```text
/// S(z,t) = e^{−R(t)} [s₀(z) + ∫₀^z G_S(z,z″,t,0) s₀(z″) dz″]
/// e(z,t) = e^{−R(t)} ∫₀^z H(z,z″,t,0) s₀(z″) dz″
/// ```
///
/// where `e` is the Stokes field divided by `iχ/c`. The pair then reads
/// `∂_z e = S` and `∂_t(e^{R} S) = ṗ e^{R} e`. Both are checked with a box
/// scheme (centered differences at cell midpoints), so the residual falls
/// quadratically with the spacing. The Stark phase is common to both fields
/// and is dropped.
pub fn kernel_residual(history: &ChannelHistory, t_grid: &[f64], z_grid: &[f64]) -> Result<f64> {
    for (name, grid) in [("time", t_grid), ("space", z_grid)] {
        if grid.len() < 5 {
            return Err(Error::GridTooCoarse(format!(
                "{name} grid has {} points, need at least 5",
                grid.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "{name} grid must be strictly increasing"
            )));
        }
    }
    if z_grid[0] < 0.0 {
        return Err(Error::InvalidArgument("space grid starts below 0".into()));
    }
    let t0 = t_grid[0].max(0.0);
    let seed = |z: f64| 1.0 + z;

    // Undamped fields u = e^{R} S and v = e^{R} e.
    let nz = z_grid.len();
    let mut u = vec![vec![0.0; nz]; t_grid.len()];
    let mut v = vec![vec![0.0; nz]; t_grid.len()];
    for (k, &t) in t_grid.iter().enumerate() {
        let p = history.p_integral(t) - history.p_integral(t0);
        for (i, &z) in z_grid.iter().enumerate() {
            let arg = |zz: f64| KernelArgs::from_differences(p, z - zz);
            u[k][i] = seed(z)
                + quad::integrate(|zz| kernel_gs(&arg(zz)) * seed(zz), 0.0, z, RESIDUAL_SEED_TOL)?.value;
            v[k][i] =
                quad::integrate(|zz| kernel_h(&arg(zz)) * seed(zz), 0.0, z, RESIDUAL_SEED_TOL)?.value;
        }
    }

    let damping: Vec<f64> = t_grid
        .iter()
        .map(|&t| (-(history.decay_exponent(t) - history.decay_exponent(t0))).exp())
        .collect();
    let scale = u
        .iter()
        .zip(&damping)
        .flat_map(|(row, d)| row.iter().map(move |x| (x * d).abs()))
        .fold(0.0, f64::max);

    let mut worst: f64 = 0.0;
    for (k, &t) in t_grid.iter().enumerate() {
        let d = damping[k];
        for i in 1..nz {
            let h = z_grid[i] - z_grid[i - 1];
            let r1 = (v[k][i] - v[k][i - 1]) / h - 0.5 * (u[k][i] + u[k][i - 1]);
            worst = worst.max((d * r1).abs());
        }
        if k == 0 {
            continue;
        }
        let dt = t - t_grid[k - 1];
        let (g_hi, g_lo) = (history.coupling_rate(t), history.coupling_rate(t_grid[k - 1]));
        let d_mid = 0.5 * (d + damping[k - 1]);
        for i in 0..nz {
            let r2 = (u[k][i] - u[k - 1][i]) / dt - 0.5 * (g_hi * v[k][i] + g_lo * v[k - 1][i]);
            worst = worst.max((d_mid * r2).abs());
        }
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Channel, Population};

    fn series_i0(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut f = 1.0;
        for k in 0..30 {
            if k > 0 {
                f *= k as f64;
            }
            sum += (x / 2.0).powi(2 * k) / (f * f);
        }
        sum
    }

    fn series_i1(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut f = 1.0;
        for k in 0..30 {
            if k > 0 {
                f *= k as f64;
            }
            sum += (x / 2.0).powi(2 * k + 1) / (f * f * (k + 1) as f64);
        }
        sum
    }

    #[test]
    fn kernel_values_at_reference_points() {
        let a = KernelArgs::from_differences(0.0, 0.7);
        assert_eq!(kernel_h(&a), 1.0);
        assert_eq!(kernel_gs(&a), 0.0);
        assert_eq!(kernel_ge(&a), 0.7);
        let a = KernelArgs::from_differences(0.3, 0.0);
        assert_eq!(kernel_h(&a), 1.0);
        assert_eq!(kernel_gs(&a), 0.3);
        assert_eq!(kernel_ge(&a), 0.0);

        let a = KernelArgs::from_differences(2.0, 0.5);
        assert!((kernel_h(&a) - 2.2795853023360673).abs() < 1e-14);
        assert!((kernel_h(&a) - series_i0(2.0)).abs() < 1e-14);
        let gs = (2.0f64 / 0.5).sqrt() * 1.5906368546373291;
        assert!((kernel_gs(&a) / gs - 1.0).abs() < 1e-14);
        assert!((kernel_ge(&a) / (0.5 / 2.0 * gs) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ge_scales_with_square_root_of_ratio() {
        // fixed p·dz: G_e ∝ √(dz/p)
        let x = 3.0;
        for &p in &[0.5, 1.0, 4.0, 12.0] {
            let a = KernelArgs::from_differences(p, x / p);
            let expected = (x / p / p).sqrt() * series_i1(2.0 * x.sqrt());
            assert!((kernel_ge(&a) / expected - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn branch_continuity() {
        let cut = specfun::ENTIRE_CUTOFF;
        let eps = 1e-12 * cut;
        for p in [1.0, 3.0] {
            let lo = KernelArgs::from_differences(p, (cut - eps) / p);
            let hi = KernelArgs::from_differences(p, (cut + eps) / p);
            assert!((kernel_gs(&lo) / kernel_gs(&hi) - 1.0).abs() < 1e-10);
            assert!((kernel_h(&lo) / kernel_h(&hi) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bessel_difference_identity() {
        for &x in &[0.0, 0.3, 2.0, 15.0, 40.0] {
            let r = 2.0 * f64::sqrt(x);
            let direct = series_i0(r).powi(2) - series_i1(r).powi(2);
            assert!((bessel_difference(x) / direct - 1.0).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn kernel_derivatives_match_the_propagation_pair() {
        // ∂_z H = G_S and ∂_p G_S = H (c = 1)
        let (p, z) = (2.3, 0.6);
        let d = 1e-6;
        let h = |p: f64, z: f64| kernel_h(&KernelArgs::from_differences(p, z));
        let gs = |p: f64, z: f64| kernel_gs(&KernelArgs::from_differences(p, z));
        assert!(((h(p, z + d) - h(p, z - d)) / (2.0 * d) - gs(p, z)).abs() < 1e-8);
        assert!(((gs(p + d, z) - gs(p - d, z)) / (2.0 * d) - h(p, z)).abs() < 1e-8);
    }

    fn history(gain: f64) -> ChannelHistory {
        ChannelHistory::new(Channel::constant(gain, 0.3, 0.0), Population::Undepleted).unwrap()
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn residual_vanishes_without_coupling() {
        let r = kernel_residual(&history(0.0), &grid(11), &grid(11)).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn residual_converges_at_second_order() {
        let h = history(4.0);
        let coarse = kernel_residual(&h, &grid(21), &grid(21)).unwrap();
        let fine = kernel_residual(&h, &grid(41), &grid(41)).unwrap();
        let ratio = coarse / fine;
        assert!(ratio >= 1.8, "ratio {ratio}");
        assert!((ratio.log2() - 2.0).abs() < 0.2, "order {}", ratio.log2());
    }

    #[test]
    fn residual_rejects_bad_grids() {
        let h = history(1.0);
        assert!(matches!(
            kernel_residual(&h, &grid(4), &grid(10)),
            Err(Error::GridTooCoarse(_))
        ));
        let bad = vec![0.0, 0.2, 0.2, 0.5, 1.0];
        assert!(kernel_residual(&h, &grid(5), &bad).is_err());
    }
}
