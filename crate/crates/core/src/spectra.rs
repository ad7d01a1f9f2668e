//! Kernel-operator spectra, transition points and the eigenvalue branch of
//! the linearised operator around the incoherent state.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::frequency::FrequencyDistribution;
use crate::graphon::{Graphon, GraphonKind, RingShape};
use crate::lattice::Lattice;
use crate::quad;

/// Fourier modes reported by [`analytic_spectrum`] when no cutoff is given.
pub const DEFAULT_K_MAX: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumSource {
    Analytic,
    Nystrom(usize),
}

/// Eigenvalues of `𝒲[V](x) = ∫ W(x, y) V(y) dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpectrum {
    /// Ascending, with multiplicity.
    pub eigenvalues: Vec<f64>,
    /// Largest positive eigenvalue; `None` stands for `0⁺` (no positive one).
    pub zeta_max: Option<f64>,
    /// Smallest negative eigenvalue; `None` stands for `0⁻`.
    pub zeta_min: Option<f64>,
    /// Per-Fourier-mode eigenvalue `ζ_k`, `k = 0..=k_max`, for ring kernels
    /// from the analytic path.
    pub fourier: Option<Vec<f64>>,
    pub source: SpectrumSource,
}

impl KernelSpectrum {
    fn from_eigenvalues(
        mut eigenvalues: Vec<f64>,
        fourier: Option<Vec<f64>>,
        source: SpectrumSource,
    ) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let scale = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        // Values at rounding level are zeros of the operator (e.g. sin(kπ)
        // terms, or the null space of a low-rank Nyström matrix).
        let zero = 1e-9 * scale + 1e-14;
        let zeta_max = eigenvalues
            .iter()
            .copied()
            .filter(|&v| v > zero)
            .reduce(f64::max);
        let zeta_min = eigenvalues
            .iter()
            .copied()
            .filter(|&v| v < -zero)
            .reduce(f64::min);
        Self {
            eigenvalues,
            zeta_max,
            zeta_min,
            fourier,
            source,
        }
    }
}

/// Onset couplings `K_c^±` bounding the linear stability interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionPoints {
    /// `2/(π g(0) ζ_max)`, or `+∞`.
    pub kc_plus: f64,
    /// `2/(π g(0) ζ_min)`, or `−∞`.
    pub kc_minus: f64,
}

/// `ζ_k = 2 ∫₀^{1/2} G(d) cos(2πkd) dd` for a ring profile `G`.
fn ring_fourier(graphon: &Graphon, k: usize) -> f64 {
    let kf = k as f64;
    match graphon.kind() {
        GraphonKind::Constant { p } => {
            if k == 0 {
                *p
            } else {
                0.0
            }
        }
        GraphonKind::SmallWorld { p, r } => {
            if k == 0 {
                2.0 * r + p - 4.0 * r * p
            } else {
                (1.0 - 2.0 * p) * (2.0 * PI * kf * r).sin() / (PI * kf)
            }
        }
        GraphonKind::Ring(RingShape::Indicator { r }) => {
            if k == 0 {
                2.0 * r
            } else {
                (2.0 * PI * kf * r).sin() / (PI * kf)
            }
        }
        GraphonKind::Ring(RingShape::Exponential { kappa }) => {
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            2.0 * kappa * (1.0 - sign * (-kappa / 2.0).exp())
                / (kappa * kappa + 4.0 * PI * PI * kf * kf)
        }
        GraphonKind::Mollified { .. } => {
            // Piecewise linear profile; integrate each smooth piece.
            let pts = ramp_breakpoints(graphon);
            2.0 * pts
                .windows(2)
                .map(|w| {
                    let panels = 1 + 2 * k;
                    let h = (w[1] - w[0]) / panels as f64;
                    (0..panels)
                        .map(|i| {
                            let (nodes, weights) = quad::gauss_legendre_on(
                                16,
                                w[0] + i as f64 * h,
                                w[0] + (i + 1) as f64 * h,
                            );
                            nodes
                                .iter()
                                .zip(&weights)
                                .map(|(d, wt)| wt * graphon.profile(*d) * (2.0 * PI * kf * d).cos())
                                .sum::<f64>()
                        })
                        .sum::<f64>()
                })
                .sum::<f64>()
        }
        GraphonKind::Custom(_) => unreachable!("custom kernels have no analytic spectrum"),
    }
}

fn ramp_breakpoints(graphon: &Graphon) -> Vec<f64> {
    let mut pts = vec![0.0, 0.5];
    if let GraphonKind::Mollified { base, ramp, .. } = graphon.kind() {
        let r = match base.kind() {
            GraphonKind::SmallWorld { r, .. } | GraphonKind::Ring(RingShape::Indicator { r }) => *r,
            _ => unreachable!("mollified bases are plateau kernels"),
        };
        pts.extend([r - 0.5 * ramp, r + 0.5 * ramp]);
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Closed-form spectrum of a builtin ring kernel over Fourier modes
/// `|k| ≤ k_max`. Modes `k ≥ 1` have multiplicity two (`cos` and `sin`).
pub fn analytic_spectrum(graphon: &Graphon, k_max: usize) -> Result<KernelSpectrum> {
    if !graphon.is_builtin() {
        return Err(Error::Unsupported(format!(
            "{} has no closed-form spectrum; use the Nyström spectrum",
            graphon.label()
        )));
    }
    if let GraphonKind::Constant { p } = graphon.kind() {
        let fourier = (0..=k_max).map(|k| if k == 0 { *p } else { 0.0 }).collect();
        return Ok(KernelSpectrum::from_eigenvalues(
            vec![*p],
            Some(fourier),
            SpectrumSource::Analytic,
        ));
    }
    let fourier: Vec<f64> = (0..=k_max).map(|k| ring_fourier(graphon, k)).collect();
    let mut eigenvalues = vec![fourier[0]];
    for z in &fourier[1..] {
        eigenvalues.extend([*z, *z]);
    }
    Ok(KernelSpectrum::from_eigenvalues(
        eigenvalues,
        Some(fourier),
        SpectrumSource::Analytic,
    ))
}

/// Eigenvalues of the `m × m` matrix `W(x_i, x_j)/m` on the midpoint grid
/// `x_i = (i − 1/2)/m`. Kernels with jumps use cell averages instead of
/// point samples.
pub fn nystrom_spectrum(graphon: &Graphon, m: usize) -> Result<KernelSpectrum> {
    if m < 8 {
        return invalid(format!("Nyström size m = {m} must be at least 8"));
    }
    let scale = 1.0 / m as f64;
    let matrix =
        DMatrix::from_row_iterator(m, m, graphon.cell_matrix(m).into_iter().map(|v| v * scale));
    let eig = matrix.symmetric_eigenvalues();
    Ok(KernelSpectrum::from_eigenvalues(
        eig.iter().copied().collect(),
        None,
        SpectrumSource::Nystrom(m),
    ))
}

/// Rayleigh quotients of the Nyström matrix on the Fourier vectors
/// `cos(2πk x_i)`, `k = 0..=k_max`. For ring kernels the matrix is circulant
/// and these are exactly its eigenvalues, labelled by mode.
pub fn nystrom_fourier(graphon: &Graphon, m: usize, k_max: usize) -> Result<Vec<f64>> {
    if m < 8 {
        return invalid(format!("Nyström size m = {m} must be at least 8"));
    }
    if !graphon.is_ring() {
        return Err(Error::Unsupported(format!(
            "{} is not a ring kernel",
            graphon.label()
        )));
    }
    let scale = 1.0 / m as f64;
    let matrix =
        DMatrix::from_row_iterator(m, m, graphon.cell_matrix(m).into_iter().map(|v| v * scale));
    Ok((0..=k_max)
        .map(|k| {
            let v = DVector::from_fn(m, |i, _| {
                (2.0 * PI * k as f64 * (i as f64 + 0.5) / m as f64).cos()
            });
            let mv = &matrix * &v;
            v.dot(&mv) / v.dot(&v)
        })
        .collect())
}

/// `K(ζ) = 2/(π g(0) |ζ|)`, the onset coupling of the branch of `ζ`.
pub fn k_of_zeta(zeta: f64, dist: &FrequencyDistribution) -> Result<f64> {
    if zeta == 0.0 || !zeta.is_finite() {
        return invalid(format!("zeta = {zeta} must be finite and nonzero"));
    }
    Ok(2.0 / (PI * dist.g0() * zeta.abs()))
}

fn require_assumptions(dist: &FrequencyDistribution) -> Result<()> {
    if dist.assumptions_met() {
        Ok(())
    } else {
        Err(Error::AssumptionsUnmet(format!(
            "{} is not an even density nonincreasing on [0, ∞); the transition-point formulas do not apply",
            dist.label()
        )))
    }
}

pub fn transition_points(
    spectrum: &KernelSpectrum,
    dist: &FrequencyDistribution,
) -> Result<TransitionPoints> {
    require_assumptions(dist)?;
    let onset = |z: f64| 2.0 / (PI * dist.g0() * z);
    Ok(TransitionPoints {
        kc_plus: spectrum.zeta_max.map_or(f64::INFINITY, onset),
        kc_minus: spectrum.zeta_min.map_or(f64::NEG_INFINITY, onset),
    })
}

/// `D(λ) = ∫ g(ω)/(λ − iω) dω` off the imaginary axis.
pub fn d_lambda(dist: &FrequencyDistribution, lambda: Complex64) -> Result<Complex64> {
    if lambda.re == 0.0 || !lambda.re.is_finite() || !lambda.im.is_finite() {
        return invalid(format!(
            "D(λ) is singular on the imaginary axis (λ = {lambda})"
        ));
    }
    Ok(Complex64::new(
        dist.poisson_integral(lambda.re, lambda.im),
        dist.conjugate_poisson_integral(lambda.re, lambda.im),
    ))
}

/// Real eigenvalue `λ(ζ, K)` of the linearised operator on the mode `ζ`,
/// solving `D(λ) = 2/(ζK)`; `None` when `K ≤ K(ζ)` and only the continuous
/// spectrum remains.
///
/// Defined for `K ≥ 0`. The equation depends on `ζK` only, so the repulsive
/// branch is `λ(ζ, −K) = λ(−ζ, K)`.
pub fn solve_eigenvalue(dist: &FrequencyDistribution, zeta: f64, k: f64) -> Result<Option<f64>> {
    if zeta == 0.0 || !zeta.is_finite() {
        return invalid(format!(
            "zeta = {zeta} is not an eigenvalue of the linearised operator"
        ));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return invalid(format!("coupling K = {k} must be finite and nonnegative"));
    }
    require_assumptions(dist)?;
    if k == 0.0 || k <= k_of_zeta(zeta, dist)? {
        return Ok(None);
    }
    let target = 2.0 / (zeta.abs() * k);
    let residual = |x: f64| dist.poisson_integral(x, 0.0) - target;
    let mut lo = 1e-12;
    if residual(lo) <= 0.0 {
        return Ok(None);
    }
    let mut hi = 1.0;
    while residual(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical(format!(
                "no bracket for λ(ζ = {zeta}, K = {k})"
            )));
        }
    }
    // The Poisson integral decreases strictly in x.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(Some(zeta.signum() * 0.5 * (lo + hi)))
}

/// Spectral abscissa of the `m_ω m_x`-dimensional discretisation of
/// `T[Z] = iωZ + (K/2) 𝒫[Z]`.
pub fn discretized_t_abscissa(
    graphon: &Graphon,
    dist: &FrequencyDistribution,
    k: f64,
    m_omega: usize,
    m_x: usize,
) -> Result<f64> {
    if m_omega < 8 || m_x < 1 {
        return invalid(format!(
            "lattice {m_omega} × {m_x} too small (m_ω ≥ 8, m_x ≥ 1)"
        ));
    }
    if !k.is_finite() {
        return invalid(format!("coupling K = {k} must be finite"));
    }
    if k == 0.0 {
        // T = iΩ is diagonal and purely imaginary.
        return Ok(0.0);
    }
    let lattice = Lattice::new(graphon, dist, m_omega, m_x)?;
    let n = lattice.len();
    let mut t = DMatrix::<Complex64>::zeros(n, n);
    for (j, om) in lattice.omega.nodes.iter().enumerate() {
        for l in 0..m_x {
            let row = j * m_x + l;
            for (jp, w) in lattice.omega.weights.iter().enumerate() {
                for lp in 0..m_x {
                    let c = 0.5 * k * w * lattice.coupling[l * m_x + lp];
                    t[(row, jp * m_x + lp)] = Complex64::new(c, 0.0);
                }
            }
            t[(row, row)] += Complex64::new(0.0, *om);
        }
    }
    let eig = t
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("Schur decomposition of T did not converge".into()))?;
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// `∫∫ W dx dy`, a lower bound on `ζ_max` for nonnegative kernels.
pub fn zeta_l1_bound(graphon: &Graphon) -> Result<f64> {
    let lo = graphon.min_value();
    if lo < 0.0 {
        return invalid(format!(
            "{} takes negative values (min {lo}); the L¹ bound needs W ≥ 0",
            graphon.label()
        ));
    }
    Ok(graphon.integral())
}
