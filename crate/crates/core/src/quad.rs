//! Gauss–Legendre rules and a small adaptive integrator.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`,
/// sorted ascending and mirrored so that `x[i] == -x[m-1-i]` and
/// `w[i] == w[m-1-i]` hold exactly.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss–Legendre rule needs at least one node");
    if m == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let rule = GaussLegendre::new(m.try_into().expect("nonzero degree"));
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let xi = 0.5 * (pairs[j].0 - pairs[i].0);
        let wi = 0.5 * (pairs[i].1 + pairs[j].1);
        x[i] = -xi;
        x[j] = xi;
        w[i] = wi;
        w[j] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
        w[m / 2] = pairs[m / 2].1;
    }
    (x, w)
}

/// Fixed Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| half * v).collect(),
    )
}

const PANEL_ORDER: usize = 12;
const MAX_DEPTH: u32 = 48;

struct Panel {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Panel {
    fn new() -> Self {
        let (x, w) = gauss_legendre(PANEL_ORDER);
        Self { x, w }
    }

    fn apply<F: Fn(f64) -> Complex64>(&self, f: &F, a: f64, b: f64) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, w) in self.x.iter().zip(&self.w) {
            acc += f(mid + half * t) * *w;
        }
        acc * half
    }
}

/// Adaptive integral of a complex-valued function over `[a, b]`.
///
/// Each interval is accepted once its 12-point Gauss–Legendre value agrees
/// with the sum over its two halves to within `tol` (scaled by the interval
/// share of the whole range). Recursion order is fixed, so the result is
/// deterministic.
pub fn adaptive_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    let panel = Panel::new();
    let whole = panel.apply(&f, a, b);
    refine(&panel, &f, a, b, whole, tol, (b - a).abs(), 0)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> Complex64>(
    panel: &Panel,
    f: &F,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    span: f64,
    depth: u32,
) -> Complex64 {
    let mid = 0.5 * (a + b);
    let left = panel.apply(f, a, mid);
    let right = panel.apply(f, mid, b);
    let split = left + right;
    let budget = tol * ((b - a).abs() / span).max(1e-3);
    if depth >= MAX_DEPTH || (split - whole).norm() <= budget {
        return split;
    }
    refine(panel, f, a, mid, left, tol, span, depth + 1)
        + refine(panel, f, mid, b, right, tol, span, depth + 1)
}

/// Real-valued convenience wrapper around [`adaptive_complex`].
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_complex(|x| Complex64::new(f(x), 0.0), a, b, tol).re
}
