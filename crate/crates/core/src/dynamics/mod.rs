//! Finite-`n` Kuramoto dynamics
//! `θ̇_i = ω_i + (K/n) Σ_j W_ij sin(θ_j − θ_i)` on weighted or sampled graphs.

mod coupling;
mod io;

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

pub use coupling::{apply_reference, CirculantWeights, CompleteGraph, Coupling};
pub use io::{read_phase_sidecar, write_phase_sidecar, write_trajectory_csv};

use crate::error::{invalid, Error, Result};
use crate::graphon::{norm_1n, NodeGrid};
use crate::rng::rng_from_seed;

/// Reduce a phase to `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Reduce a phase difference to `(−π, π]`.
fn wrap_difference(d: f64) -> f64 {
    let w = wrap_phase(d + PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorState {
    /// Phases in `[0, 2π)`.
    pub phases: Vec<f64>,
    pub time: f64,
}

impl OscillatorState {
    pub fn new(phases: Vec<f64>) -> Self {
        Self {
            phases: phases.into_iter().map(wrap_phase).collect(),
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Conditional phase density `ρ⁰(θ | ω, ξ)` for custom initial data.
pub type ConditionalDensity = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum InitialCondition {
    /// Uniform on the circle, independent of `(ω, ξ)`.
    Incoherent,
    /// Wrapped normal with mean `mean` and variance `1/concentration`.
    WrappedGaussian { concentration: f64, mean: f64 },
    /// `density(θ, ω, ξ)`, normalised in `θ` over `[0, 2π)`.
    Custom(ConditionalDensity),
}

impl std::fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Incoherent => write!(f, "Incoherent"),
            Self::WrappedGaussian {
                concentration,
                mean,
            } => {
                write!(
                    f,
                    "WrappedGaussian {{ concentration: {concentration}, mean: {mean} }}"
                )
            }
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Points used to tabulate custom conditional densities.
pub const CUSTOM_DENSITY_POINTS: usize = 512;

/// Tolerance on `∫ ρ⁰ dθ = 1` for custom densities.
pub const NORMALISATION_TOLERANCE: f64 = 1e-6;

/// Tabulate `density(·, ω, ξ)` on a periodic grid and check `∫ = 1`.
pub(crate) fn tabulate_density(
    density: &ConditionalDensity,
    omega: f64,
    xi: f64,
) -> Result<Vec<f64>> {
    let m = CUSTOM_DENSITY_POINTS;
    let h = TAU / m as f64;
    let values: Vec<f64> = (0..m).map(|a| density(a as f64 * h, omega, xi)).collect();
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return invalid(format!(
            "initial density value {v} at (ω = {omega}, ξ = {xi}) is not a nonnegative number"
        ));
    }
    // The periodic trapezoid rule is spectrally accurate for smooth densities.
    let mass = values.iter().sum::<f64>() * h;
    if (mass - 1.0).abs() > NORMALISATION_TOLERANCE {
        return invalid(format!(
            "initial density integrates to {mass} at (ω = {omega}, ξ = {xi}), expected 1"
        ));
    }
    Ok(values)
}

/// Draw from a tabulated periodic density by inverting its piecewise-linear CDF.
fn sample_tabulated<R: Rng>(values: &[f64], rng: &mut R) -> f64 {
    let m = values.len();
    let h = TAU / m as f64;
    let cells: Vec<f64> = (0..m)
        .map(|a| 0.5 * h * (values[a] + values[(a + 1) % m]))
        .collect();
    let total: f64 = cells.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (a, c) in cells.iter().enumerate() {
        if u < *c || a == m - 1 {
            let (f0, f1) = (values[a], values[(a + 1) % m]);
            // Solve f0 s + (f1 − f0) s²/(2h) = u for s ∈ [0, h].
            let slope = (f1 - f0) / h;
            let s = if slope.abs() < 1e-14 * f0.max(1.0) {
                if f0 > 0.0 {
                    u / f0
                } else {
                    0.5 * h
                }
            } else {
                let disc = (f0 * f0 + 2.0 * slope * u).max(0.0);
                (disc.sqrt() - f0) / slope
            };
            return wrap_phase(a as f64 * h + s.clamp(0.0, h));
        }
        u -= c;
    }
    unreachable!("loop returns on the last cell")
}

/// Initial phases drawn independently from `ρ⁰(· | ω_i, ξ_i)`.
pub fn sample_initial(
    ic: &InitialCondition,
    freqs: &[f64],
    grid: &NodeGrid,
    seed: u64,
) -> Result<OscillatorState> {
    let n = freqs.len();
    if n == 0 || grid.len() != n {
        return invalid(format!(
            "{} frequencies for a grid of {} nodes",
            n,
            grid.len()
        ));
    }
    let mut rng = rng_from_seed(seed);
    let phases = match ic {
        InitialCondition::Incoherent => (0..n).map(|_| rng.random::<f64>() * TAU).collect(),
        InitialCondition::WrappedGaussian {
            concentration,
            mean,
        } => {
            if !(*concentration > 0.0) {
                return invalid(format!("concentration {concentration} must be positive"));
            }
            if concentration.is_infinite() {
                vec![*mean; n]
            } else {
                let normal = Normal::new(*mean, concentration.recip().sqrt())
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                (0..n).map(|_| normal.sample(&mut rng)).collect()
            }
        }
        InitialCondition::Custom(density) => {
            let mut out = Vec::with_capacity(n);
            for (omega, xi) in freqs.iter().zip(grid.points()) {
                let table = tabulate_density(density, *omega, *xi)?;
                out.push(sample_tabulated(&table, &mut rng));
            }
            out
        }
    };
    Ok(OscillatorState::new(phases))
}

/// `(r, ψ)` with `r e^{iψ} = n⁻¹ Σ e^{iθ_j}`; `ψ = 0` when `r < 10⁻¹⁴`.
pub fn order_parameter(phases: &[f64]) -> (f64, f64) {
    let n = phases.len().max(1) as f64;
    let (s, c) = phases
        .iter()
        .fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
    let (s, c) = (s / n, c / n);
    let r = s.hypot(c);
    if r < 1e-14 {
        (r, 0.0)
    } else {
        (r, wrap_phase(s.atan2(c)))
    }
}

fn check_sizes(coupling: &dyn Coupling, phases: usize, freqs: usize) -> Result<()> {
    let n = coupling.size();
    if phases != n || freqs != n {
        return invalid(format!(
            "coupling is {n}×{n} but got {phases} phases and {freqs} frequencies"
        ));
    }
    Ok(())
}

/// Phase velocities.
///
/// Uses `sin(θ_j − θ_i) = sin θ_j cos θ_i − cos θ_j sin θ_i`, so the full
/// `O(n²)` weighted sum needs one sine and one cosine per node rather than
/// per pair.
pub fn rhs(phases: &[f64], freqs: &[f64], coupling: &dyn Coupling, k: f64) -> Result<Vec<f64>> {
    check_sizes(coupling, phases.len(), freqs.len())?;
    let mut work = Workspace::new(phases.len(), 1);
    let mut out = vec![0.0; phases.len()];
    work.velocity(phases, freqs, coupling, &[k], &mut out);
    Ok(out)
}

/// Phase velocities from the literal pairwise sum `Σ_j W_ij sin(θ_j − θ_i)`.
/// Slow; kept as the oracle for [`rhs`].
pub fn rhs_pairwise(
    phases: &[f64],
    freqs: &[f64],
    coupling: &dyn Coupling,
    k: f64,
) -> Result<Vec<f64>> {
    check_sizes(coupling, phases.len(), freqs.len())?;
    let n = phases.len();
    Ok((0..n)
        .map(|i| {
            let s: f64 = (0..n)
                .map(|j| coupling.weight(i, j) * (phases[j] - phases[i]).sin())
                .sum();
            freqs[i] + k / n as f64 * s
        })
        .collect())
}

/// Scratch buffers for a batch of `b` simulations sharing one coupling.
/// Phases of the batch are node-major: `θ[i * b + m]` is node `i` of member `m`.
struct Workspace {
    n: usize,
    batch: usize,
    trig: Vec<f64>,
    sums: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, batch: usize) -> Self {
        Self {
            n,
            batch,
            trig: vec![0.0; 2 * n * batch],
            sums: vec![0.0; 2 * n * batch],
        }
    }

    fn velocity(
        &mut self,
        phases: &[f64],
        freqs: &[f64],
        coupling: &dyn Coupling,
        ks: &[f64],
        out: &mut [f64],
    ) {
        let b = self.batch;
        for (t, th) in self.trig.chunks_exact_mut(2).zip(phases) {
            let (s, c) = th.sin_cos();
            t[0] = s;
            t[1] = c;
        }
        coupling.apply(&self.trig, 2 * b, &mut self.sums);
        let inv_n = 1.0 / self.n as f64;
        for (idx, o) in out.iter_mut().enumerate() {
            let (i, m) = (idx / b, idx % b);
            let (s, c) = (self.trig[2 * idx], self.trig[2 * idx + 1]);
            let (ws, wc) = (self.sums[2 * idx], self.sums[2 * idx + 1]);
            *o = freqs[i] + ks[m] * inv_n * (c * ws - s * wc);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub k: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub seed: u64,
}

/// Largest step accepted by [`SimConfig::validate`].
pub const MAX_DT: f64 = 0.1;

impl SimConfig {
    pub fn new(k: f64, t_end: f64) -> Self {
        Self {
            k,
            dt: 0.01,
            t_end,
            record_stride: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !self.k.is_finite() {
            problems.push(format!("K = {} must be finite", self.k));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            problems.push(format!("dt = {} must lie in (0, {MAX_DT}]", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            problems.push(format!("T = {} must be positive", self.t_end));
        }
        if self.record_stride == 0 {
            problems.push("record_stride must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            invalid(problems.join("; "))
        }
    }

    /// Number of RK4 steps; the last step lands on `T` up to rounding.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub time: f64,
    pub state: OscillatorState,
    pub r: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn order_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r).collect()
    }

    pub fn final_state(&self) -> Option<&OscillatorState> {
        self.records.last().map(|r| &r.state)
    }
}

/// Fixed-step RK4 for a batch of simulations that share frequencies and
/// coupling but differ in `K`.
pub struct BatchIntegrator<'a> {
    coupling: &'a dyn Coupling,
    freqs: &'a [f64],
    ks: Vec<f64>,
    dt: f64,
    work: Workspace,
    stages: [Vec<f64>; 4],
    trial: Vec<f64>,
}

impl<'a> BatchIntegrator<'a> {
    pub fn new(coupling: &'a dyn Coupling, freqs: &'a [f64], ks: &[f64], dt: f64) -> Result<Self> {
        let n = coupling.size();
        check_sizes(coupling, n, freqs.len())?;
        if ks.is_empty() {
            return invalid("batch needs at least one coupling strength");
        }
        if !(dt > 0.0 && dt <= MAX_DT) {
            return invalid(format!("dt = {dt} must lie in (0, {MAX_DT}]"));
        }
        let len = n * ks.len();
        Ok(Self {
            coupling,
            freqs,
            ks: ks.to_vec(),
            dt,
            work: Workspace::new(n, ks.len()),
            stages: std::array::from_fn(|_| vec![0.0; len]),
            trial: vec![0.0; len],
        })
    }

    pub fn batch(&self) -> usize {
        self.ks.len()
    }

    /// Advance node-major batch phases by one step and wrap them to `[0, 2π)`.
    pub fn step(&mut self, phases: &mut [f64]) -> Result<()> {
        let dt = self.dt;
        let freqs = self.freqs;
        let coupling = self.coupling;
        let b = self.ks.len();
        let f = freqs;
        let [k1, k2, k3, k4] = &mut self.stages;
        let ks = &self.ks;
        self.work.velocity(phases, f, coupling, ks, k1);
        for ((t, p), d) in self.trial.iter_mut().zip(phases.iter()).zip(k1.iter()) {
            *t = p + 0.5 * dt * d;
        }
        self.work.velocity(&self.trial, f, coupling, ks, k2);
        for ((t, p), d) in self.trial.iter_mut().zip(phases.iter()).zip(k2.iter()) {
            *t = p + 0.5 * dt * d;
        }
        self.work.velocity(&self.trial, f, coupling, ks, k3);
        for ((t, p), d) in self.trial.iter_mut().zip(phases.iter()).zip(k3.iter()) {
            *t = p + dt * d;
        }
        self.work.velocity(&self.trial, f, coupling, ks, k4);
        for (idx, p) in phases.iter_mut().enumerate() {
            let next = *p + dt / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx]);
            if !next.is_finite() {
                let (i, m) = (idx / b, idx % b);
                return Err(Error::Numerical(format!(
                    "non-finite phase at node {i} (K = {}) after RK4 step",
                    self.ks[m]
                )));
            }
            *p = wrap_phase(next);
        }
        Ok(())
    }
}

/// Integrate `state` to `config.t_end`, recording every `record_stride`
/// steps and at the final time.
pub fn integrate(
    state: &OscillatorState,
    freqs: &[f64],
    coupling: &dyn Coupling,
    config: &SimConfig,
) -> Result<Trajectory> {
    let mut records = Vec::new();
    integrate_observed(state, freqs, coupling, config, |time, phases| {
        let (r, psi) = order_parameter(phases);
        records.push(Record {
            time,
            state: OscillatorState {
                phases: phases.to_vec(),
                time,
            },
            r,
            psi,
        });
    })?;
    Ok(Trajectory { records })
}

/// Like [`integrate`], but hands each recorded `(t, phases)` to `observe`
/// instead of storing it.
pub fn integrate_observed<F: FnMut(f64, &[f64])>(
    state: &OscillatorState,
    freqs: &[f64],
    coupling: &dyn Coupling,
    config: &SimConfig,
    mut observe: F,
) -> Result<()> {
    config.validate()?;
    check_sizes(coupling, state.len(), freqs.len())?;
    let mut stepper = BatchIntegrator::new(coupling, freqs, &[config.k], config.dt)?;
    let mut phases: Vec<f64> = state.phases.iter().copied().map(wrap_phase).collect();
    let steps = config.steps();
    let t0 = state.time;
    observe(t0, &phases);
    for s in 1..=steps {
        stepper.step(&mut phases)?;
        if s % config.record_stride == 0 || s == steps {
            observe(t0 + s as f64 * config.dt, &phases);
        }
    }
    Ok(())
}

/// Integrate one initial state under several coupling strengths at once,
/// calling `observe(t, m, phases)` for each member `m` at recorded steps.
pub fn integrate_batch<F: FnMut(f64, usize, &[f64])>(
    state: &OscillatorState,
    freqs: &[f64],
    coupling: &dyn Coupling,
    ks: &[f64],
    dt: f64,
    t_end: f64,
    record_stride: usize,
    mut observe: F,
) -> Result<()> {
    let probe = SimConfig {
        k: ks.first().copied().unwrap_or(0.0),
        dt,
        t_end,
        record_stride,
        seed: 0,
    };
    probe.validate()?;
    check_sizes(coupling, state.len(), freqs.len())?;
    let b = ks.len();
    let mut stepper = BatchIntegrator::new(coupling, freqs, ks, dt)?;
    let mut phases: Vec<f64> = state
        .phases
        .iter()
        .flat_map(|p| std::iter::repeat_n(wrap_phase(*p), b))
        .collect();
    let mut member = vec![0.0; state.len()];
    let mut emit = |t: f64, phases: &[f64], observe: &mut F| {
        for m in 0..b {
            for (i, v) in member.iter_mut().enumerate() {
                *v = phases[i * b + m];
            }
            observe(t, m, &member);
        }
    };
    let steps = probe.steps();
    emit(state.time, &phases, &mut observe);
    for s in 1..=steps {
        stepper.step(&mut phases)?;
        if s % record_stride == 0 || s == steps {
            emit(state.time + s as f64 * dt, &phases, &mut observe);
        }
    }
    Ok(())
}

/// Fraction of the horizon averaged by [`steady_state_r`].
pub const STEADY_STATE_FRACTION: f64 = 0.2;

/// Mean of `r` over samples with `t ≥ t_end − 0.2 (t_end − t_start)`.
pub fn steady_state_r(times: &[f64], r: &[f64]) -> Result<f64> {
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return invalid("empty order-parameter series");
    };
    let cutoff = t1 - STEADY_STATE_FRACTION * (t1 - t0) - 1e-12;
    let tail: Vec<f64> = times
        .iter()
        .zip(r)
        .filter(|(t, _)| **t >= cutoff)
        .map(|(_, v)| *v)
        .collect();
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// `‖θ − θ'‖_{1,n}` of plain real differences.
pub fn phase_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return invalid(format!(
            "phase vectors of lengths {} and {}",
            a.len(),
            b.len()
        ));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm_1n(&d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingComparison {
    /// `sup_t ‖θ(t) − θ̃(t)‖_{1,n}` over recorded times.
    pub sup_distance: f64,
    /// `‖A − B‖_{2,n}` of the two coupling matrices.
    pub coupling_distance: f64,
}

/// Run the same initial data under two couplings in lockstep.
///
/// Both trajectories are stored wrapped; their difference is unwrapped
/// continuously step by step, so the distance is that of real-valued
/// solutions started from identical data.
pub fn compare_couplings(
    a: &dyn Coupling,
    b: &dyn Coupling,
    freqs: &[f64],
    initial: &OscillatorState,
    config: &SimConfig,
) -> Result<CouplingComparison> {
    config.validate()?;
    if a.size() != b.size() {
        return invalid(format!("couplings of sizes {} and {}", a.size(), b.size()));
    }
    check_sizes(a, initial.len(), freqs.len())?;
    let n = a.size();
    let mut diff_entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            diff_entries[i * n + j] = a.weight(i, j) - b.weight(i, j);
        }
    }
    let coupling_distance = crate::graphon::norm_2n(&diff_entries)?;
    drop(diff_entries);

    let mut sa = BatchIntegrator::new(a, freqs, &[config.k], config.dt)?;
    let mut sb = BatchIntegrator::new(b, freqs, &[config.k], config.dt)?;
    let mut pa: Vec<f64> = initial.phases.iter().copied().map(wrap_phase).collect();
    let mut pb = pa.clone();
    let mut unwrapped = vec![0.0; n];
    let mut sup: f64 = 0.0;
    let steps = config.steps();
    for s in 1..=steps {
        sa.step(&mut pa)?;
        sb.step(&mut pb)?;
        for ((d, x), y) in unwrapped.iter_mut().zip(&pa).zip(&pb) {
            *d += wrap_difference((x - y) - *d);
        }
        if s % config.record_stride == 0 || s == steps {
            sup = sup.max(norm_1n(&unwrapped)?);
        }
    }
    Ok(CouplingComparison {
        sup_distance: sup,
        coupling_distance,
    })
}
