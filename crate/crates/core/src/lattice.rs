//! Frequency-quadrature × spatial-midpoint lattice shared by the discretised
//! linear operator and the mean-field solver.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::frequency::{FrequencyDistribution, FrequencyQuadrature};
use crate::graphon::Graphon;

/// Discretisation of `∫∫ W(x, y) Z(ω, y) g(ω) dω dy`.
///
/// Lattice values are stored frequency-major: entry `(j, l)` lives at
/// `j * m_x + l`.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub omega: FrequencyQuadrature,
    /// Midpoints `(l − 1/2)/m_x`.
    pub x: Vec<f64>,
    /// `W(x_l, x_l')/m_x`, row-major `m_x × m_x` (cell averages for kernels
    /// with jumps).
    pub coupling: Vec<f64>,
}

impl Lattice {
    pub fn new(
        graphon: &Graphon,
        dist: &FrequencyDistribution,
        m_omega: usize,
        m_x: usize,
    ) -> Result<Self> {
        if m_x == 0 {
            return invalid("spatial grid must be non-empty");
        }
        let omega = dist.quadrature(m_omega)?;
        let x = (0..m_x).map(|l| (l as f64 + 0.5) / m_x as f64).collect();
        let scale = 1.0 / m_x as f64;
        let coupling = graphon
            .cell_matrix(m_x)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        Ok(Self { omega, x, coupling })
    }

    pub fn m_omega(&self) -> usize {
        self.omega.len()
    }

    pub fn m_x(&self) -> usize {
        self.x.len()
    }

    pub fn len(&self) -> usize {
        self.m_omega() * self.m_x()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frequency average `Σ_j w_j Z(ω_j, y_l)` for every `l`. `stride` and
    /// `offset` select one component when several values are interleaved per
    /// lattice node.
    pub fn frequency_average(
        &self,
        z: &[Complex64],
        stride: usize,
        offset: usize,
    ) -> Vec<Complex64> {
        let mx = self.m_x();
        let mut avg = vec![Complex64::new(0.0, 0.0); mx];
        for (j, w) in self.omega.weights.iter().enumerate() {
            for (l, a) in avg.iter_mut().enumerate() {
                *a += z[(j * mx + l) * stride + offset] * *w;
            }
        }
        avg
    }

    /// `𝒫[Z](x_l)` for every spatial node.
    pub fn apply_p(&self, z: &[Complex64], stride: usize, offset: usize) -> Vec<Complex64> {
        let avg = self.frequency_average(z, stride, offset);
        let mx = self.m_x();
        (0..mx)
            .map(|l| {
                self.coupling[l * mx..(l + 1) * mx]
                    .iter()
                    .zip(&avg)
                    .map(|(c, a)| a * *c)
                    .sum()
            })
            .collect()
    }
}
