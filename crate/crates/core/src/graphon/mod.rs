//! Graphons, node grids, weighted graphs and W-random graphs.
//!
//! A [`Graphon`] is a symmetric kernel `W: [0,1]² → [0,1]`. The builtin
//! kinds are all *ring kernels*: their value depends only on the circle
//! distance `d(x, y) = min(|x − y|, 1 − |x − y|) ∈ [0, 1/2]`, so they act
//! on `L²([0,1])` as convolutions and their eigenfunctions are Fourier modes.

mod grid;
mod matrix;

use std::fmt;
use std::sync::Arc;

pub use grid::{make_grid, GridScheme, NodeGrid};
pub use matrix::{
    build_weighted_graph, norm_1n, norm_2n, sample_random_graph, AdjacencyMatrix, WeightMatrix,
};

use crate::error::{invalid, Result};
use crate::quad;

/// Distances this close to a plateau radius count as inside the plateau.
///
/// Grid points such as `i/n` carry rounding noise, and the closed condition
/// `d ≤ r` must not depend on it.
pub const RADIUS_TOLERANCE: f64 = 1e-12;

/// Sub-cells per axis used to cell-average discontinuous kernels.
pub const CELL_SUBSAMPLES: usize = 8;

/// Circle distance on the unit interval, `min(|x − y|, 1 − |x − y|)`.
///
/// The metric `d_S(2πx, 2πy)` on the phase circle equals `2π` times this.
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

/// Profile of a ring kernel `G(d)` for `d ∈ [0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RingShape {
    /// `G(d) = 1` for `d ≤ r`, `0` otherwise (k-nearest-neighbour limit).
    Indicator { r: f64 },
    /// `G(d) = exp(−κ d)`.
    Exponential { kappa: f64 },
}

/// Type-erased user kernel.
#[derive(Clone)]
pub struct CustomKernel {
    name: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum GraphonKind {
    /// `W ≡ p` (Erdős–Rényi limit; `p = 1` is the complete graph).
    Constant {
        p: f64,
    },
    /// `1 − p` within circle distance `r`, `p` elsewhere.
    SmallWorld {
        p: f64,
        r: f64,
    },
    Ring(RingShape),
    /// Small-world or indicator kernel with each jump replaced by a linear
    /// ramp of width `ramp` centred on the discontinuity.
    Mollified {
        base: Box<Graphon>,
        eps: f64,
        ramp: f64,
        l2_error: f64,
    },
    Custom(CustomKernel),
}

/// Regularity metadata carried by every graphon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularity {
    /// Lipschitz in the Euclidean metric of `[0,1]²` with this constant.
    Lipschitz(f64),
    /// Piecewise constant with jumps; no finite Lipschitz constant.
    PiecewiseConstant,
}

#[derive(Debug, Clone)]
pub struct Graphon {
    kind: GraphonKind,
    regularity: Regularity,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return invalid(format!("{name} = {v} must lie in [0, 1]"));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&r) {
        return invalid(format!("radius r = {r} must lie in [0, 1/2]"));
    }
    Ok(())
}

impl Graphon {
    pub fn constant(p: f64) -> Result<Self> {
        check_unit("p", p)?;
        Ok(Self {
            kind: GraphonKind::Constant { p },
            regularity: Regularity::Lipschitz(0.0),
        })
    }

    pub fn small_world(p: f64, r: f64) -> Result<Self> {
        check_unit("p", p)?;
        check_radius(r)?;
        Ok(Self {
            kind: GraphonKind::SmallWorld { p, r },
            regularity: Regularity::PiecewiseConstant,
        })
    }

    pub fn ring_indicator(r: f64) -> Result<Self> {
        check_radius(r)?;
        Ok(Self {
            kind: GraphonKind::Ring(RingShape::Indicator { r }),
            regularity: Regularity::PiecewiseConstant,
        })
    }

    pub fn ring_exponential(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return invalid(format!("decay rate kappa = {kappa} must be positive"));
        }
        // |dG/dd| ≤ κ and the circle distance is √2-Lipschitz on [0,1]².
        Ok(Self {
            kind: GraphonKind::Ring(RingShape::Exponential { kappa }),
            regularity: Regularity::Lipschitz(std::f64::consts::SQRT_2 * kappa),
        })
    }

    /// Wrap an arbitrary kernel. The caller is responsible for symmetry.
    /// Pass `lipschitz = None` for kernels with jumps.
    pub fn custom<F>(name: impl Into<String>, f: F, lipschitz: Option<f64>) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: GraphonKind::Custom(CustomKernel {
                name: name.into(),
                f: Arc::new(f),
            }),
            regularity: match lipschitz {
                Some(l) => Regularity::Lipschitz(l),
                None => Regularity::PiecewiseConstant,
            },
        }
    }

    pub fn kind(&self) -> &GraphonKind {
        &self.kind
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    /// Finite Lipschitz constant, or `None` for piecewise-constant kernels.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match self.regularity {
            Regularity::Lipschitz(l) => Some(l),
            Regularity::PiecewiseConstant => None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, GraphonKind::Custom(_))
    }

    /// True when `W(x, y)` depends only on the circle distance of `x` and `y`.
    pub fn is_ring(&self) -> bool {
        self.is_builtin()
    }

    /// Short human-readable description, e.g. `small_world:0.1:0.25`.
    pub fn label(&self) -> String {
        match &self.kind {
            GraphonKind::Constant { p } => format!("constant:{p}"),
            GraphonKind::SmallWorld { p, r } => format!("small_world:{p}:{r}"),
            GraphonKind::Ring(RingShape::Indicator { r }) => format!("ring_indicator:{r}"),
            GraphonKind::Ring(RingShape::Exponential { kappa }) => format!("ring_exp:{kappa}"),
            GraphonKind::Mollified { base, eps, .. } => {
                format!("mollified({}, eps={eps})", base.label())
            }
            GraphonKind::Custom(k) => format!("custom:{}", k.name),
        }
    }

    /// `W(x, y)`; both arguments must lie in `[0, 1]`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return invalid(format!("graphon arguments ({x}, {y}) outside [0, 1]"));
        }
        Ok(self.value(x, y))
    }

    /// `W(x, y)` without range checks, for inner loops.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            GraphonKind::Constant { p } => *p,
            GraphonKind::Custom(k) => (k.f)(x, y),
            _ => self.profile(circle_distance(x, y)),
        }
    }

    /// Ring profile `G(d)`. Meaningful for builtin kinds only; custom
    /// kernels evaluate `W(0, d)`.
    pub fn profile(&self, d: f64) -> f64 {
        match &self.kind {
            GraphonKind::Constant { p } => *p,
            GraphonKind::SmallWorld { p, r } => {
                if d <= r + RADIUS_TOLERANCE {
                    1.0 - p
                } else {
                    *p
                }
            }
            GraphonKind::Ring(RingShape::Indicator { r }) => {
                if d <= r + RADIUS_TOLERANCE {
                    1.0
                } else {
                    0.0
                }
            }
            GraphonKind::Ring(RingShape::Exponential { kappa }) => (-kappa * d).exp(),
            GraphonKind::Mollified { base, ramp, .. } => {
                let (inside, outside, r) =
                    base.plateau().expect("mollified base is a plateau kernel");
                let t = ((r + 0.5 * ramp - d) / ramp).clamp(0.0, 1.0);
                outside + (inside - outside) * t
            }
            GraphonKind::Custom(k) => (k.f)(0.0, d),
        }
    }

    /// `(inside value, outside value, radius)` for the discontinuous ring
    /// kernels.
    fn plateau(&self) -> Option<(f64, f64, f64)> {
        match self.kind {
            GraphonKind::SmallWorld { p, r } => Some((1.0 - p, p, r)),
            GraphonKind::Ring(RingShape::Indicator { r }) => Some((1.0, 0.0, r)),
            _ => None,
        }
    }

    /// Points of `[0, 1/2]` where the ring profile is not smooth; used to
    /// split quadratures.
    fn profile_breakpoints(&self) -> Vec<f64> {
        let mut pts = match &self.kind {
            GraphonKind::SmallWorld { r, .. } | GraphonKind::Ring(RingShape::Indicator { r }) => {
                vec![*r]
            }
            GraphonKind::Mollified { base, ramp, .. } => {
                let (_, _, r) = base.plateau().expect("plateau base");
                vec![r - 0.5 * ramp, r, r + 0.5 * ramp]
            }
            _ => Vec::new(),
        };
        pts.retain(|&d| d > 0.0 && d < 0.5);
        pts.insert(0, 0.0);
        pts.push(0.5);
        pts
    }

    /// `∫₀^{1/2} f(G(d)) dd`, split at the profile breakpoints.
    fn integrate_profile<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let pts = self.profile_breakpoints();
        pts.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                // Evaluate strictly inside each piece so that the closed
                // plateau condition never sees the breakpoint itself.
                quad::adaptive(|d| f(self.profile(d)), a, b, 1e-14)
            })
            .sum()
    }

    /// `∫∫ W(x, y) dx dy` over the unit square.
    pub fn integral(&self) -> f64 {
        if self.is_ring() {
            2.0 * self.integrate_profile(|g| g)
        } else {
            let (x, w) = quad::gauss_legendre_on(96, 0.0, 1.0);
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                for (yj, wj) in x.iter().zip(&w) {
                    acc += wi * wj * self.value(*xi, *yj);
                }
            }
            acc
        }
    }

    /// Smallest value on a probe grid (exact for builtin kinds).
    pub fn min_value(&self) -> f64 {
        match &self.kind {
            GraphonKind::Custom(_) => {
                let m = 97;
                let mut lo = f64::INFINITY;
                for i in 0..=m {
                    for j in 0..=m {
                        lo = lo.min(self.value(i as f64 / m as f64, j as f64 / m as f64));
                    }
                }
                lo
            }
            _ => {
                let pts = self.profile_breakpoints();
                let mut lo = f64::INFINITY;
                for w in pts.windows(2) {
                    for t in [0.0, 0.5, 1.0] {
                        lo = lo.min(self.profile(w[0] + t * (w[1] - w[0])));
                    }
                }
                lo
            }
        }
    }

    /// Replace the jumps of a small-world or indicator kernel by linear
    /// ramps, producing a Lipschitz kernel within `eps` of `self` in
    /// `L²([0,1]²)`.
    ///
    /// The ramp width is `δ = ε² / (8 J)` where `J` is the jump height,
    /// clipped so the ramp stays inside `[0, 1/2]`. The `L²` distance is
    /// checked by quadrature before the kernel is returned. Constant kernels
    /// are already smooth and are returned unchanged.
    pub fn mollify(&self, eps: f64) -> Result<Graphon> {
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("mollification scale eps = {eps} must be positive"));
        }
        if let GraphonKind::Constant { .. } = self.kind {
            return Ok(self.clone());
        }
        let Some((inside, outside, r)) = self.plateau() else {
            return invalid(format!(
                "{} is not a piecewise-constant ring kernel",
                self.label()
            ));
        };
        let jump = (inside - outside).abs();
        if jump == 0.0 || r == 0.0 || r == 0.5 {
            // No discontinuity inside (0, 1/2): the kernel is a.e. constant.
            let level = if r == 0.5 { inside } else { outside };
            return Graphon::constant(level);
        }
        let ramp = (eps * eps / (8.0 * jump)).min(2.0 * r).min(1.0 - 2.0 * r);
        let candidate = Graphon {
            kind: GraphonKind::Mollified {
                base: Box::new(self.clone()),
                eps,
                ramp,
                l2_error: 0.0,
            },
            regularity: Regularity::Lipschitz(std::f64::consts::SQRT_2 * jump / ramp),
        };
        let sq = 2.0
            * [(r - 0.5 * ramp, r), (r, r + 0.5 * ramp)]
                .iter()
                .map(|&(a, b)| {
                    // The difference is linear on each half of the ramp.
                    let (x, w) = quad::gauss_legendre_on(8, a, b);
                    x.iter()
                        .zip(&w)
                        .map(|(d, w)| {
                            let diff = candidate.profile(*d) - self.profile(*d);
                            w * diff * diff
                        })
                        .sum::<f64>()
                })
                .sum::<f64>();
        let l2 = sq.sqrt();
        if l2 >= eps {
            return Err(crate::Error::Numerical(format!(
                "mollified kernel misses the L² target: {l2} ≥ {eps}"
            )));
        }
        Ok(Graphon {
            kind: GraphonKind::Mollified {
                base: Box::new(self.clone()),
                eps,
                ramp,
                l2_error: l2,
            },
            regularity: candidate.regularity,
        })
    }

    /// `m × m` kernel matrix on the midpoint grid `x_i = (i − 1/2)/m`,
    /// row-major, without the `1/m` factor.
    ///
    /// Lipschitz kernels are sampled at the midpoints. Kernels with jumps
    /// are averaged over each grid cell instead: midpoint samples of a
    /// plateau kernel whose radius is a multiple of `1/m` sit exactly on the
    /// discontinuity and bias every eigenvalue by `O(1/m)`. Ring kernels are
    /// averaged exactly; other kernels with jumps use an `8 × 8` sub-grid.
    pub fn cell_matrix(&self, m: usize) -> Vec<f64> {
        let h = 1.0 / m as f64;
        let smooth = matches!(self.regularity, Regularity::Lipschitz(_));
        let mut out = vec![0.0; m * m];
        if self.is_ring() {
            // Circulant: entry depends on (j − i) mod m only.
            let row: Vec<f64> = (0..m)
                .map(|k| {
                    if smooth {
                        self.value(0.5 * h, (k as f64 + 0.5) * h)
                    } else {
                        self.ring_cell_average(k, m)
                    }
                })
                .collect();
            for i in 0..m {
                for j in 0..m {
                    out[i * m + j] = row[(j + m - i) % m];
                }
            }
            return out;
        }
        let sub = if smooth { 1 } else { CELL_SUBSAMPLES };
        let offsets: Vec<f64> = (0..sub).map(|a| (a as f64 + 0.5) / sub as f64).collect();
        let norm = 1.0 / (sub * sub) as f64;
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for oa in &offsets {
                    for ob in &offsets {
                        acc += self.value((i as f64 + oa) * h, (j as f64 + ob) * h);
                    }
                }
                out[i * m + j] = acc * norm;
                out[j * m + i] = acc * norm;
            }
        }
        out
    }

    /// Mean of a ring kernel over the cell pair `[0, h) × [kh, (k+1)h)`.
    ///
    /// The difference `Δ = y − x` of two uniform points in those cells has
    /// the triangular density `(h − |Δ − kh|)/h²` on `[(k−1)h, (k+1)h]`, so
    /// the average is a one-dimensional integral of `G(circle(Δ))`. It is
    /// split wherever the profile has a kink and integrated piecewise by
    /// Gauss–Legendre, which is exact for piecewise-constant profiles.
    fn ring_cell_average(&self, k: usize, m: usize) -> f64 {
        let h = 1.0 / m as f64;
        let centre = k as f64 * h;
        let (lo, hi) = (centre - h, centre + h);
        let mut cuts = vec![lo, centre, hi];
        for b in self.profile_breakpoints() {
            for n in -1..=2 {
                for d in [n as f64 - b, n as f64 + b] {
                    if d > lo && d < hi {
                        cuts.push(d);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let (t, w) = quad::gauss_legendre(8);
        let mut acc = 0.0;
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (ti, wi) in t.iter().zip(&w) {
                let delta = mid + half * ti;
                let weight = (h - (delta - centre).abs()) / (h * h);
                let d = delta.rem_euclid(1.0);
                acc += half * wi * weight * self.profile(d.min(1.0 - d));
            }
        }
        acc
    }
}
