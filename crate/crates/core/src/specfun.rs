//! Modified Bessel functions of the first kind, orders 0 and 1.
//!
//! Two regimes meet at [`SERIES_CUTOFF`]: the defining power series below it
//! and a Chebyshev expansion of `sqrt(x) exp(-x) I_n(x)` in `15.5 / x - 1`
//! above it. The coefficients come from `tools/bessel_cheb.py`.
//!
//! The Green's-function kernels only ever need `I_0(2 sqrt(s))` and
//! `I_1(2 sqrt(s)) / sqrt(s)`, which are entire in `s`; [`entire_i0`] and
//! [`entire_i1`] evaluate them for either sign of `s` (negative `s` gives the
//! oscillatory continuation `J_0`, `J_1`).

use crate::error::{Error, Result};

/// Boundary between the power-series and Chebyshev regimes.
pub const SERIES_CUTOFF: f64 = 7.75;

/// `s` at which `2 sqrt(s)` reaches [`SERIES_CUTOFF`].
pub const ENTIRE_CUTOFF: f64 = SERIES_CUTOFF * SERIES_CUTOFF / 4.0;

// I0: 30 terms, max relative error 1.39e-16
const SCALED_I0_CHEB: [f64; 30] = [
    0.4023589034301764,
    0.0034876771026373706,
    7.40856222573413e-05,
    3.249942531669863e-06,
    2.4299531430552774e-07,
    2.8370482604934725e-08,
    4.332640055461383e-09,
    5.778732074243006e-10,
    -2.277520588805752e-11,
    -5.335508698299919e-11,
    -1.8182100469122763e-11,
    -1.2407659913065849e-12,
    1.4248818166844845e-12,
    5.084265101214693e-13,
    -4.221924226785864e-14,
    -6.879179225202733e-14,
    -6.50689883615322e-15,
    8.044848744159226e-15,
    1.8216936221655667e-15,
    -9.718437613574041e-16,
    -3.3181841137768624e-16,
    1.328570351286924e-16,
    5.470329831726796e-17,
    -2.1398114949027165e-17,
    -8.613439444637474e-18,
    3.982500816801355e-18,
    1.2636168163012256e-18,
    -8.07832843189022e-19,
    -1.5332978319567534e-19,
    1.6755539461569158e-19,
];

// I1: 30 terms, max relative error 1.47e-16
const SCALED_I1_CHEB: [f64; 30] = [
    0.3889652895678091,
    -0.010091634942457324,
    -0.00011873064644536223,
    -4.3551263727098725e-06,
    -2.972147842531525e-07,
    -3.28898802201904e-08,
    -4.9019559448187365e-09,
    -6.61010468300519e-10,
    1.5686239109594132e-11,
    5.5732704850739584e-11,
    1.9607170434654482e-11,
    1.5366938004600487e-12,
    -1.4602093517341085e-12,
    -5.462182622320129e-13,
    3.6822769784580534e-14,
    7.177758764171029e-14,
    7.657860064363602e-15,
    -8.232743113127712e-15,
    -1.9904989213014403e-15,
    9.800773691191897e-16,
    3.5560883120142706e-16,
    -1.3282158117783507e-16,
    -5.820910021966794e-17,
    2.136719272074224e-17,
    9.163660899364023e-18,
    -3.99560920600273e-18,
    -1.3540971357376954e-18,
    8.164073335941031e-19,
    1.6832203106440156e-19,
    -1.7065375524547477e-19,
];

/// A Bessel value together with the scaling it carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselResult {
    pub value: f64,
    /// When set, `value` is `I_n(x) * exp(-x)`.
    pub scaled: bool,
}

/// `I_order(x)` for `order` in {0, 1} and `x >= 0`, optionally scaled by `exp(-x)`.
pub fn bessel_i(order: u32, x: f64, scaled: bool) -> Result<BesselResult> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!(
            "bessel_i requires x >= 0, got {x}"
        )));
    }
    let value = match (order, scaled) {
        (0, false) => i0(x),
        (0, true) => i0e(x),
        (1, false) => i1(x),
        (1, true) => i1e(x),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "bessel_i supports orders 0 and 1, got {order}"
            )))
        }
    };
    Ok(BesselResult { value, scaled })
}

fn series(order: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term <= f64::EPSILON * 0.25 * sum {
            return sum;
        }
    }
}

fn chebyshev(coeffs: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        let b0 = 2.0 * t * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + coeffs[0]
}

/// `I_0(x)` for `x >= 0`.
pub fn i0(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        series(0, x)
    } else {
        i0e(x) * x.exp()
    }
}

/// `I_1(x)` for `x >= 0`.
pub fn i1(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        series(1, x)
    } else {
        i1e(x) * x.exp()
    }
}

/// `I_0(x) exp(-x)` for `x >= 0`.
pub fn i0e(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        series(0, x) * (-x).exp()
    } else {
        chebyshev(&SCALED_I0_CHEB, 2.0 * SERIES_CUTOFF / x - 1.0) / x.sqrt()
    }
}

/// `I_1(x) exp(-x)` for `x >= 0`.
pub fn i1e(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        series(1, x) * (-x).exp()
    } else {
        chebyshev(&SCALED_I1_CHEB, 2.0 * SERIES_CUTOFF / x - 1.0) / x.sqrt()
    }
}

/// `sum_k s^k / (k!)^2`, i.e. `I_0(2 sqrt(s))` for `s >= 0` and `J_0(2 sqrt(-s))` for `s < 0`.
pub fn entire_i0(s: f64) -> f64 {
    if s >= ENTIRE_CUTOFF {
        i0(2.0 * s.sqrt())
    } else if s > -1.0 {
        entire_series(s, 0.0)
    } else {
        libm::j0(2.0 * (-s).sqrt())
    }
}

/// `sum_k s^k / (k! (k+1)!)`, i.e. `I_1(2 sqrt(s)) / sqrt(s)` for `s > 0`,
/// `J_1(2 sqrt(-s)) / sqrt(-s)` for `s < 0`, and 1 at `s = 0`.
pub fn entire_i1(s: f64) -> f64 {
    if s >= ENTIRE_CUTOFF {
        let r = s.sqrt();
        i1(2.0 * r) / r
    } else if s > -1.0 {
        entire_series(s, 1.0)
    } else {
        let r = (-s).sqrt();
        libm::j1(2.0 * r) / r
    }
}

fn entire_series(s: f64, shift: f64) -> f64 {
    // Alternating for s < 0; only used there for |s| < 1.
    let mut term = 1.0f64;
    let mut sum = term;
    let mut k = 0.0;
    while term.abs() > f64::EPSILON * 0.25 * sum.abs() {
        k += 1.0;
        term *= s / (k * (k + shift));
        sum += term;
    }
    sum
}
