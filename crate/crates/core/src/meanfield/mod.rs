//! Fourier–Galerkin solver for the Vlasov equation of the graphon Kuramoto
//! model.
//!
//! The conditional phase density `ρ(θ | ω, x)` is expanded as
//! `ρ = ρ̂₀ + Σ_{k≥1} (ρ̂_k e^{−ikθ} + c.c.)`, so that
//! `ρ̂_k = (2π)⁻¹ ∫ ρ e^{ikθ} dθ` and `ρ̂₀ = 1/(2π)`. With the order field
//! `h(x) = ∫∫∫ W(x, y) e^{iφ} ρ g dφ dλ dy = 2π 𝒫[ρ̂₁](x)` the Galerkin system
//! reads
//!
//! ```text
//! dρ̂_k/dt = ikω ρ̂_k + (kK/2) (h ρ̂_{k−1} − conj(h) ρ̂_{k+1}),   1 ≤ k ≤ M,
//! ```
//!
//! closed by `ρ̂_{M+1} = 0`. The global order parameter is
//! `r e^{iψ} = 2π ⟨ρ̂₁⟩`, the average over the frequency quadrature and the
//! spatial midpoints.

mod bl;
mod checkpoint;
mod linear;

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

pub use bl::{
    bl_distance_between, bl_distance_proxy, dictionary_size, EmpiricalMeasure, TestMeasure,
};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use linear::{linearized_evolve, GrowthEstimate};

use crate::dynamics::{tabulate_density, InitialCondition};
use crate::error::{invalid, Error, Result};
use crate::frequency::FrequencyDistribution;
use crate::graphon::Graphon;
use crate::lattice::Lattice;
use crate::spectra::{
    analytic_spectrum, nystrom_spectrum, transition_points, TransitionPoints, DEFAULT_K_MAX,
};
use crate::textio::fmt_f64;

/// Default Galerkin truncation.
pub const DEFAULT_ORDER: usize = 64;

/// Coefficient magnitude treated as a failure of the truncation.
pub const BLOWUP_THRESHOLD: f64 = 1e3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Galerkin coefficients on the frequency × space lattice.
#[derive(Debug, Clone)]
pub struct MeanFieldState {
    lattice: Lattice,
    order: usize,
    /// `ρ̂_k(ω_j, x_l)` at `((j * m_x) + l) * (M + 1) + k`.
    coeffs: Vec<Complex64>,
    time: f64,
}

impl MeanFieldState {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Truncation order `M`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `ρ̂_k(ω_j, x_l)`.
    pub fn coeff(&self, k: usize, j: usize, l: usize) -> Complex64 {
        self.coeffs[(j * self.lattice.m_x() + l) * (self.order + 1) + k]
    }

    /// `h(x_l)` for every spatial node.
    pub fn order_field(&self) -> Vec<Complex64> {
        order_field(&self.lattice, &self.coeffs, self.order)
    }

    /// `(r, ψ)` of the continuum.
    pub fn order_parameter(&self) -> (f64, f64) {
        let z = global_order(&self.lattice, &self.coeffs, self.order);
        let r = z.norm();
        if r < 1e-14 {
            (r, 0.0)
        } else {
            (r, crate::dynamics::wrap_phase(z.arg()))
        }
    }

    /// `|h(x_l)| / ∫ W(x_l, y) dy`, the local coherence seen by node `x_l`.
    pub fn local_order(&self) -> Vec<f64> {
        let mx = self.lattice.m_x();
        self.order_field()
            .iter()
            .enumerate()
            .map(|(l, h)| {
                let row: f64 = self.lattice.coupling[l * mx..(l + 1) * mx].iter().sum();
                if row > 0.0 {
                    h.norm() / row
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `ρ(θ | ω_j, x_l)` reconstructed from the truncated series.
    pub fn density(&self, theta: f64, j: usize, l: usize) -> f64 {
        let base = (j * self.lattice.m_x() + l) * (self.order + 1);
        let c = &self.coeffs[base..base + self.order + 1];
        c[0].re
            + 2.0
                * (1..=self.order)
                    .map(|k| (c[k] * Complex64::from_polar(1.0, -(k as f64) * theta)).re)
                    .sum::<f64>()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            order: self.order,
            m_omega: self.lattice.m_omega(),
            m_x: self.lattice.m_x(),
            time: self.time,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Rebuild a state from a checkpoint on a matching lattice.
    pub fn from_checkpoint(checkpoint: Checkpoint, lattice: Lattice) -> Result<Self> {
        if checkpoint.m_omega != lattice.m_omega() || checkpoint.m_x != lattice.m_x() {
            return invalid(format!(
                "checkpoint lattice {}×{} does not match {}×{}",
                checkpoint.m_omega,
                checkpoint.m_x,
                lattice.m_omega(),
                lattice.m_x()
            ));
        }
        Ok(Self {
            lattice,
            order: checkpoint.order,
            coeffs: checkpoint.coeffs,
            time: checkpoint.time,
        })
    }
}

fn order_field(lattice: &Lattice, coeffs: &[Complex64], order: usize) -> Vec<Complex64> {
    lattice
        .apply_p(coeffs, order + 1, 1)
        .into_iter()
        .map(|v| v * TAU)
        .collect()
}

fn global_order(lattice: &Lattice, coeffs: &[Complex64], order: usize) -> Complex64 {
    let avg = lattice.frequency_average(coeffs, order + 1, 1);
    avg.iter().sum::<Complex64>() * (TAU / lattice.m_x() as f64)
}

/// Initial Galerkin coefficients for `ic` on an `m_ω × m_x` lattice.
pub fn init_meanfield(
    ic: &InitialCondition,
    dist: &FrequencyDistribution,
    graphon: &Graphon,
    order: usize,
    m_omega: usize,
    m_x: usize,
) -> Result<MeanFieldState> {
    if order < 2 {
        return invalid(format!("Galerkin order M = {order} must be at least 2"));
    }
    if m_omega < 8 || m_x < 8 {
        return invalid(format!(
            "lattice {m_omega} × {m_x} too small (both sizes ≥ 8)"
        ));
    }
    let lattice = Lattice::new(graphon, dist, m_omega, m_x)?;
    let stride = order + 1;
    let mut coeffs = vec![ZERO; lattice.len() * stride];
    let base = 1.0 / TAU;
    for j in 0..m_omega {
        for l in 0..m_x {
            let c = &mut coeffs[(j * m_x + l) * stride..(j * m_x + l + 1) * stride];
            c[0] = Complex64::new(base, 0.0);
            match ic {
                InitialCondition::Incoherent => {}
                InitialCondition::WrappedGaussian {
                    concentration,
                    mean,
                } => {
                    if !(*concentration > 0.0) {
                        return invalid(format!("concentration {concentration} must be positive"));
                    }
                    for (k, ck) in c.iter_mut().enumerate().skip(1) {
                        let kf = k as f64;
                        let decay = if concentration.is_infinite() {
                            1.0
                        } else {
                            (-kf * kf / (2.0 * concentration)).exp()
                        };
                        *ck = Complex64::from_polar(base * decay, kf * mean);
                    }
                }
                InitialCondition::Custom(density) => {
                    let table = tabulate_density(density, lattice.omega.nodes[j], lattice.x[l])?;
                    let h = TAU / table.len() as f64;
                    for (k, ck) in c.iter_mut().enumerate().skip(1) {
                        let s: Complex64 = table
                            .iter()
                            .enumerate()
                            .map(|(a, v)| Complex64::from_polar(*v, k as f64 * a as f64 * h))
                            .sum();
                        *ck = s * (h / TAU);
                    }
                }
            }
        }
    }
    Ok(MeanFieldState {
        lattice,
        order,
        coeffs,
        time: 0.0,
    })
}

/// Recorded order-parameter samples of a mean-field run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeanFieldSeries {
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    /// Local order per spatial node, when requested.
    pub local: Option<Vec<Vec<f64>>>,
}

impl MeanFieldSeries {
    /// CSV with columns `t,r_global` and, if recorded, `local_<l>` per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t,r_global")?;
        if let Some(local) = self.local.as_ref().and_then(|v| v.first()) {
            for l in 0..local.len() {
                write!(out, ",local_{l}")?;
            }
        }
        writeln!(out)?;
        for (i, (t, r)) in self.times.iter().zip(&self.r).enumerate() {
            write!(out, "{},{}", fmt_f64(*t), fmt_f64(*r))?;
            if let Some(local) = &self.local {
                for v in &local[i] {
                    write!(out, ",{}", fmt_f64(*v))?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Right-hand side without the linear rotation `ikω ρ̂_k`.
fn nonlinear_term(lattice: &Lattice, order: usize, k: f64, y: &[Complex64], out: &mut [Complex64]) {
    let field = order_field(lattice, y, order);
    let stride = order + 1;
    let mx = lattice.m_x();
    out.par_chunks_mut(stride)
        .zip(y.par_chunks(stride))
        .enumerate()
        .for_each(|(node, (o, c))| {
            let h = field[node % mx];
            let hc = h.conj();
            o[0] = ZERO;
            for q in 1..=order {
                let next = if q < order { c[q + 1] } else { ZERO };
                o[q] = (h * c[q - 1] - hc * next) * (0.5 * k * q as f64);
            }
        });
}

/// How the Fourier hierarchy is closed above the truncation order `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// `ρ̂_{M+1} = 0` and nothing else.
    Hard,
    /// `ρ̂_{M+1} = 0` plus a damping `−ν_k ρ̂_k` with
    /// `ν_k = strength · |K| · M · (k/M)^power`.
    ///
    /// Under synchronising coupling the conditional densities of locked
    /// oscillators sharpen without bound, and the hard-truncated system
    /// piles that cascade up at `k ≈ M` until it blows up. The damping
    /// absorbs the cascade at the top of the spectrum. It is proportional
    /// to `|K|`, so uncoupled rotation and the incoherent steady state are
    /// untouched. The default (`strength = 4`, `power = 8`) damps the first
    /// harmonic at rate below `10⁻¹¹ |K|` when `M = 64`.
    Filtered { strength: f64, power: i32 },
}

impl Default for Closure {
    fn default() -> Self {
        Closure::Filtered {
            strength: 4.0,
            power: 8,
        }
    }
}

impl Closure {
    fn damping(&self, q: usize, order: usize, k: f64) -> f64 {
        match *self {
            Closure::Hard => 0.0,
            Closure::Filtered { strength, power } => {
                let m = order as f64;
                strength * k.abs() * m * (q as f64 / m).powi(power)
            }
        }
    }
}

/// Lawson (integrating-factor) RK4 for the Galerkin system.
///
/// The rotation `ikω` and the closure damping are applied exactly through
/// `e^{(ikω − ν_k)τ}`, so the step size is limited by the coupling terms
/// only and the `K = 0` flow is reproduced to rounding.
struct LawsonStepper {
    /// `e^{ikω_j dt/2}` per coefficient.
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    stages: [Vec<Complex64>; 4],
    trial: Vec<Complex64>,
    dt: f64,
    k: f64,
}

impl LawsonStepper {
    fn new(lattice: &Lattice, order: usize, k: f64, dt: f64, closure: Closure) -> Self {
        let stride = order + 1;
        let len = lattice.len() * stride;
        let mut half = vec![ZERO; len];
        let mut full = vec![ZERO; len];
        let mx = lattice.m_x();
        for (idx, (h, f)) in half.iter_mut().zip(full.iter_mut()).enumerate() {
            let node = idx / stride;
            let q = idx % stride;
            let omega = lattice.omega.nodes[node / mx];
            let nu = closure.damping(q, order, k);
            *h = Complex64::from_polar((-nu * 0.5 * dt).exp(), q as f64 * omega * 0.5 * dt);
            *f = Complex64::from_polar((-nu * dt).exp(), q as f64 * omega * dt);
        }
        Self {
            half,
            full,
            stages: std::array::from_fn(|_| vec![ZERO; len]),
            trial: vec![ZERO; len],
            dt,
            k,
        }
    }

    fn step(&mut self, lattice: &Lattice, order: usize, y: &mut [Complex64]) {
        let dt = self.dt;
        let [a, b, c, d] = &mut self.stages;
        nonlinear_term(lattice, order, self.k, y, a);
        for i in 0..y.len() {
            self.trial[i] = self.half[i] * (y[i] + a[i] * (0.5 * dt));
        }
        nonlinear_term(lattice, order, self.k, &self.trial, b);
        for i in 0..y.len() {
            self.trial[i] = self.half[i] * y[i] + b[i] * (0.5 * dt);
        }
        nonlinear_term(lattice, order, self.k, &self.trial, c);
        for i in 0..y.len() {
            self.trial[i] = self.full[i] * y[i] + self.half[i] * c[i] * dt;
        }
        nonlinear_term(lattice, order, self.k, &self.trial, d);
        for i in 0..y.len() {
            y[i] = self.full[i] * (y[i] + a[i] * (dt / 6.0))
                + self.half[i] * (b[i] + c[i]) * (dt / 3.0)
                + d[i] * (dt / 6.0);
        }
    }
}

/// Largest accepted mean-field step.
pub const MAX_MEANFIELD_DT: f64 = 0.01;

/// Step size, horizon and output options for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    /// Also record the local order `|h(x_l)| / ∫W(x_l, y) dy`.
    pub record_local: bool,
    pub closure: Closure,
}

impl EvolveOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            record_stride: 1,
            record_local: false,
            closure: Closure::default(),
        }
    }

    pub fn record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn record_local(mut self, yes: bool) -> Self {
        self.record_local = yes;
        self
    }

    pub fn closure(mut self, closure: Closure) -> Self {
        self.closure = closure;
        self
    }
}

/// Integrate to `t_end` and record `r` every `record_stride` steps.
pub fn evolve(
    state: &mut MeanFieldState,
    k: f64,
    options: &EvolveOptions,
) -> Result<MeanFieldSeries> {
    let EvolveOptions {
        dt,
        t_end,
        record_stride,
        record_local,
        closure,
    } = *options;
    if !(dt > 0.0 && dt <= MAX_MEANFIELD_DT) {
        return invalid(format!(
            "mean-field dt = {dt} must lie in (0, {MAX_MEANFIELD_DT}]"
        ));
    }
    if !(t_end > 0.0 && t_end.is_finite()) || record_stride == 0 || !k.is_finite() {
        return invalid(format!(
            "bad run parameters T = {t_end}, stride = {record_stride}, K = {k}"
        ));
    }
    let order = state.order;
    let mut stepper = LawsonStepper::new(&state.lattice, order, k, dt, closure);
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let t0 = state.time;
    let mut series = MeanFieldSeries {
        local: record_local.then(Vec::new),
        ..Default::default()
    };
    let record = |s: &MeanFieldState, series: &mut MeanFieldSeries| {
        series.times.push(s.time);
        series.r.push(s.order_parameter().0);
        if let Some(local) = series.local.as_mut() {
            local.push(s.local_order());
        }
    };
    record(state, &mut series);
    for step in 1..=steps {
        stepper.step(&state.lattice, order, &mut state.coeffs);
        state.time = t0 + step as f64 * dt;
        if let Some((idx, v)) = state
            .coeffs
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.norm() <= BLOWUP_THRESHOLD))
        {
            let stride = order + 1;
            return Err(Error::Numerical(format!(
                "Galerkin coefficient k = {} at lattice node {} reached |ρ̂| = {} at t = {}; increase M or reduce dt",
                idx % stride,
                idx / stride,
                v.norm(),
                state.time
            )));
        }
        if step % record_stride == 0 || step == steps {
            record(state, &mut series);
        }
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    /// `K > K_c⁺`: the mode of `ζ_max` is unstable.
    UnstablePositiveBranch,
    /// `K < K_c⁻`: the mode of `ζ_min` is unstable.
    UnstableNegativeBranch,
}

/// Transition points from the closed-form spectrum when available, from a
/// 512-point Nyström spectrum otherwise.
pub fn graphon_transition_points(
    graphon: &Graphon,
    dist: &FrequencyDistribution,
) -> Result<TransitionPoints> {
    let spectrum = if graphon.is_builtin() {
        analytic_spectrum(graphon, DEFAULT_K_MAX)?
    } else {
        nystrom_spectrum(graphon, 512)?
    };
    transition_points(&spectrum, dist)
}

/// Linear stability of the incoherent state: stable iff `K_c⁻ ≤ K ≤ K_c⁺`.
pub fn stability_classify(
    graphon: &Graphon,
    dist: &FrequencyDistribution,
    k: f64,
) -> Result<Stability> {
    let tp = graphon_transition_points(graphon, dist)?;
    Ok(if k > tp.kc_plus {
        Stability::UnstablePositiveBranch
    } else if k < tp.kc_minus {
        Stability::UnstableNegativeBranch
    } else {
        Stability::Stable
    })
}

/// Stationary order parameter of the classical model with Cauchy
/// frequencies: `sqrt(1 − K_c/K)` above onset, zero below.
pub fn cauchy_locked_order(kc: f64, k: f64) -> f64 {
    if k <= kc {
        0.0
    } else {
        (1.0 - kc / k).sqrt()
    }
}

#[cfg(test)]
mod tests;
