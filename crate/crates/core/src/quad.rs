//! Gauss–Legendre quadrature: a globally adaptive integrator and fixed
//! composite node sets on the unit interval.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Points per panel of the adaptive rule.
const PANEL_ORDER: usize = 10;
const MAX_PANELS: usize = 4096;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn legendre_rule(order: usize) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order).expect("quadrature order must be positive");
    let mut pairs = GaussLegendre::new(order).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

fn panel_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(PANEL_ORDER))
}

fn sixteen_point() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(16))
}

fn apply(rule: &[(f64, f64)], a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Fixed 16-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss16(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    apply(sixteen_point(), a, b, &mut f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    error: f64,
}

fn split(rule: &[(f64, f64)], a: f64, b: f64, whole: f64, f: &mut impl FnMut(f64) -> f64) -> Panel {
    let m = 0.5 * (a + b);
    let left = apply(rule, a, m, f);
    let right = apply(rule, m, b, f);
    Panel {
        a,
        b,
        left,
        right,
        error: (whole - left - right).abs(),
    }
}

/// Globally adaptive composite Gauss–Legendre integration of `f` over `[a, b]`
/// to an absolute tolerance.
///
/// Each panel is integrated with a 10-point rule on the whole panel and on
/// both halves; the difference bounds the error of the halved estimate. The
/// panel with the largest error is bisected until the summed error falls
/// below `tol`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidArgument(format!(
            "integration bounds [{a}, {b}]"
        )));
    }
    let rule = panel_rule();
    let mut evaluations = 0;
    let whole = apply(rule, a, b, &mut f);
    let mut panels = vec![split(rule, a, b, whole, &mut f)];
    evaluations += 3 * PANEL_ORDER;

    loop {
        let (value, error) = panels
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.left + p.right, e + p.error));
        if !value.is_finite() {
            return Err(Error::Quadrature {
                estimate: value,
                error,
                tol,
            });
        }
        if error <= tol {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if panels.len() + 2 > MAX_PANELS || m <= p.a || m >= p.b {
            return Err(Error::Quadrature {
                estimate: value,
                error,
                tol,
            });
        }
        panels.push(split(rule, p.a, m, p.left, &mut f));
        panels.push(split(rule, m, p.b, p.right, &mut f));
        evaluations += 4 * PANEL_ORDER;
    }
}

/// Composite Gauss–Legendre nodes on [0, 1] with equal panels.
///
/// The node set is symmetric under `z -> 1 - z`: node `i` mirrors node
/// `len - 1 - i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrid {
    panels: usize,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    reference: Vec<f64>,
}

impl NodeGrid {
    pub fn new(panels: usize, order: usize) -> Self {
        assert!(panels > 0 && order > 0);
        let rule = legendre_rule(order);
        let width = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * width;
            for &(x, w) in &rule {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        NodeGrid {
            panels,
            order,
            nodes,
            weights,
            reference: rule.iter().map(|p| p.0).collect(),
        }
    }

    /// The grid used for spatial profiles throughout the crate.
    pub fn standard() -> Self {
        NodeGrid::new(16, 12)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i g(z_i) v_i`.
    pub fn integrate_weighted(&self, values: &[f64], mut g: impl FnMut(f64) -> f64) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(values)
            .map(|((&z, &w), &v)| w * g(z) * v)
            .sum()
    }

    /// Lagrange interpolation of node samples within the panel containing `z`.
    pub fn interpolate(&self, values: &[f64], z: f64) -> f64 {
        let z = z.clamp(0.0, 1.0);
        let width = 1.0 / self.panels as f64;
        let k = ((z / width) as usize).min(self.panels - 1);
        let mid = (k as f64 + 0.5) * width;
        let x = (z - mid) / (0.5 * width);
        let base = k * self.order;
        let mut sum = 0.0;
        for (j, &xj) in self.reference.iter().enumerate() {
            let mut l = 1.0;
            for (m, &xm) in self.reference.iter().enumerate() {
                if m != j {
                    l *= (x - xm) / (xj - xm);
                }
            }
            sum += l * values[base + j];
        }
        sum
    }
}
