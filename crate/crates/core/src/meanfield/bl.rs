//! Lower bound on the bounded Lipschitz distance between phase–frequency–
//! position measures, from a fixed dictionary of test functions.
//!
//! Each test function is a product `u(θ) v(ω) w(x)` with
//! `u ∈ {1, (1+cos θ)/2, (1+sin θ)/2, (1+cos 2θ)/2, (1+sin 2θ)/2}`,
//! `v ∈ {1, (1+tanh ω)/2}` and `w ∈ {1, x}`. Every factor takes values in
//! `[0, 1]`, so the product is Lipschitz with constant at most the sum of
//! the factor constants; dividing by `max(1, Σ L)` puts it in the unit ball
//! of the metric `sqrt(d_S(θ,θ')² + (ω−ω')² + (x−x')²)`. The largest
//! discrepancy over the dictionary is therefore a lower bound for the
//! bounded Lipschitz distance, not the distance itself.

use std::f64::consts::TAU;

use super::MeanFieldState;
use crate::error::{invalid, Result};

const PHASE_LIPSCHITZ: [f64; 5] = [0.0, 0.5, 0.5, 1.0, 1.0];
const FREQ_LIPSCHITZ: [f64; 2] = [0.0, 0.5];
const POSITION_LIPSCHITZ: [f64; 2] = [0.0, 1.0];

pub fn dictionary_size() -> usize {
    PHASE_LIPSCHITZ.len() * FREQ_LIPSCHITZ.len() * POSITION_LIPSCHITZ.len()
}

fn phase_factors(theta: f64) -> [f64; 5] {
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    [
        1.0,
        0.5 * (1.0 + c),
        0.5 * (1.0 + s),
        0.5 * (1.0 + c2),
        0.5 * (1.0 + s2),
    ]
}

fn freq_factors(omega: f64) -> [f64; 2] {
    [1.0, 0.5 * (1.0 + omega.tanh())]
}

fn position_factors(x: f64) -> [f64; 2] {
    [1.0, x]
}

fn scales() -> Vec<f64> {
    let mut out = Vec::with_capacity(dictionary_size());
    for lu in PHASE_LIPSCHITZ {
        for lv in FREQ_LIPSCHITZ {
            for lw in POSITION_LIPSCHITZ {
                out.push(1.0 / (lu + lv + lw).max(1.0));
            }
        }
    }
    out
}

/// Accumulate `weight · u_a(θ-part) v_b w_c` into `acc` in dictionary order,
/// given the phase expectations `phase[a]`.
fn accumulate(acc: &mut [f64], weight: f64, phase: &[f64; 5], freq: &[f64; 2], pos: &[f64; 2]) {
    let mut idx = 0;
    for u in phase {
        for v in freq {
            for w in pos {
                acc[idx] += weight * u * v * w;
                idx += 1;
            }
        }
    }
}

/// A measure on (phase, frequency, position) that can integrate the
/// dictionary.
pub trait TestMeasure {
    /// Integrals of the unscaled dictionary functions, in dictionary order.
    fn dictionary_integrals(&self) -> Vec<f64>;
}

/// Uniform weights on sample points `(θ_i, ω_i, ξ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<[f64; 3]>,
}

impl EmpiricalMeasure {
    pub fn new(phases: &[f64], freqs: &[f64], positions: &[f64]) -> Result<Self> {
        if phases.is_empty() || phases.len() != freqs.len() || phases.len() != positions.len() {
            return invalid(format!(
                "empirical measure needs equal nonzero lengths, got {}, {}, {}",
                phases.len(),
                freqs.len(),
                positions.len()
            ));
        }
        Ok(Self {
            points: phases
                .iter()
                .zip(freqs)
                .zip(positions)
                .map(|((t, w), x)| [*t, *w, *x])
                .collect(),
        })
    }
}

impl TestMeasure for EmpiricalMeasure {
    fn dictionary_integrals(&self) -> Vec<f64> {
        let mut acc = vec![0.0; dictionary_size()];
        let weight = 1.0 / self.points.len() as f64;
        for [t, w, x] in &self.points {
            accumulate(
                &mut acc,
                weight,
                &phase_factors(*t),
                &freq_factors(*w),
                &position_factors(*x),
            );
        }
        acc
    }
}

impl TestMeasure for MeanFieldState {
    fn dictionary_integrals(&self) -> Vec<f64> {
        let lattice = self.lattice();
        let mut acc = vec![0.0; dictionary_size()];
        let mx = lattice.m_x();
        for (j, (omega, wj)) in lattice
            .omega
            .nodes
            .iter()
            .zip(&lattice.omega.weights)
            .enumerate()
        {
            let fv = freq_factors(*omega);
            for (l, x) in lattice.x.iter().enumerate() {
                let (c1, c2) = (self.coeff(1, j, l) * TAU, self.coeff(2, j, l) * TAU);
                let phase = [
                    1.0,
                    0.5 * (1.0 + c1.re),
                    0.5 * (1.0 + c1.im),
                    0.5 * (1.0 + c2.re),
                    0.5 * (1.0 + c2.im),
                ];
                accumulate(&mut acc, wj / mx as f64, &phase, &fv, &position_factors(*x));
            }
        }
        acc
    }
}

/// Largest scaled dictionary discrepancy between two measures.
pub fn bl_distance_between(a: &dyn TestMeasure, b: &dyn TestMeasure) -> f64 {
    let (ia, ib) = (a.dictionary_integrals(), b.dictionary_integrals());
    ia.iter()
        .zip(&ib)
        .zip(scales())
        .map(|((x, y), s)| s * (x - y).abs())
        .fold(0.0, f64::max)
}

/// Dictionary lower bound on `d(μⁿ, μ)` between particle samples and a
/// mean-field state.
pub fn bl_distance_proxy(samples: &EmpiricalMeasure, state: &MeanFieldState) -> f64 {
    bl_distance_between(samples, state)
}
