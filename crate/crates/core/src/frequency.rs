//! Intrinsic-frequency distributions.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::rng::{rng_from_seed, SimRng};

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SamplerFn = Arc<dyn Fn(&mut SimRng) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FrequencyKind {
    /// `g(ω) = Δ / (π (ω² + Δ²))`.
    Cauchy { delta: f64 },
    /// `g(ω) = exp(−ω²/(2σ²)) / (σ √(2π))`.
    Gaussian { sigma: f64 },
    Custom {
        name: String,
        density: DensityFn,
        sampler: Option<SamplerFn>,
        scale: f64,
    },
}

impl fmt::Debug for FrequencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cauchy { delta } => write!(f, "Cauchy {{ delta: {delta} }}"),
            Self::Gaussian { sigma } => write!(f, "Gaussian {{ sigma: {sigma} }}"),
            Self::Custom { name, .. } => write!(f, "Custom {{ name: {name:?} }}"),
        }
    }
}

/// A frequency density `g` together with the facts the stability theory needs.
#[derive(Debug, Clone)]
pub struct FrequencyDistribution {
    kind: FrequencyKind,
    g0: f64,
    assumptions_met: bool,
}

/// Quadrature nodes `ω_j` and weights `w_j` with `Σ w_j f(ω_j) ≈ ∫ f g dω`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FrequencyQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(w, c)| c * f(*w))
            .sum()
    }
}

impl FrequencyDistribution {
    pub fn cauchy(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return invalid(format!("Cauchy width {delta} must be positive"));
        }
        Ok(Self {
            kind: FrequencyKind::Cauchy { delta },
            g0: 1.0 / (PI * delta),
            assumptions_met: true,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return invalid(format!("Gaussian width {sigma} must be positive"));
        }
        Ok(Self {
            kind: FrequencyKind::Gaussian { sigma },
            g0: 1.0 / (sigma * (2.0 * PI).sqrt()),
            assumptions_met: true,
        })
    }

    /// User density with an optional sampler. `scale` is a typical width of
    /// `g`, used to place quadrature nodes. Evenness and monotonicity on
    /// `ℝ⁺` are probed on a grid; the result is reported by
    /// [`assumptions_met`](Self::assumptions_met).
    pub fn custom<G, S>(
        name: impl Into<String>,
        density: G,
        sampler: Option<S>,
        scale: f64,
    ) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(&mut SimRng) -> f64 + Send + Sync + 'static,
    {
        if !(scale > 0.0 && scale.is_finite()) {
            return invalid(format!("custom density scale {scale} must be positive"));
        }
        let g0 = density(0.0);
        let probe: Vec<f64> = (0..=400).map(|i| scale * 20.0 * i as f64 / 400.0).collect();
        let tol = 1e-12 * g0.abs().max(1.0);
        let nonneg = probe
            .iter()
            .all(|&w| density(w) >= 0.0 && density(-w) >= 0.0);
        let even = probe
            .iter()
            .all(|&w| (density(w) - density(-w)).abs() <= tol);
        let monotone = probe
            .windows(2)
            .all(|p| density(p[1]) <= density(p[0]) + tol);
        Ok(Self {
            kind: FrequencyKind::Custom {
                name: name.into(),
                density: Arc::new(density),
                sampler: sampler.map(|s| Arc::new(s) as SamplerFn),
                scale,
            },
            g0,
            assumptions_met: nonneg && even && monotone && g0 > 0.0,
        })
    }

    pub fn kind(&self) -> &FrequencyKind {
        &self.kind
    }

    /// `g(0)`.
    pub fn g0(&self) -> f64 {
        self.g0
    }

    /// Whether `g` is even and nonincreasing on `ℝ⁺` (probed for custom kinds).
    pub fn assumptions_met(&self) -> bool {
        self.assumptions_met
    }

    pub fn label(&self) -> String {
        match &self.kind {
            FrequencyKind::Cauchy { delta } => format!("cauchy:{delta}"),
            FrequencyKind::Gaussian { sigma } => format!("gaussian:{sigma}"),
            FrequencyKind::Custom { name, .. } => format!("custom:{name}"),
        }
    }

    /// Natural width used by the tangent map of the quadrature.
    pub fn scale(&self) -> f64 {
        match &self.kind {
            FrequencyKind::Cauchy { delta } => *delta,
            FrequencyKind::Gaussian { sigma } => *sigma,
            FrequencyKind::Custom { scale, .. } => *scale,
        }
    }

    pub fn density(&self, omega: f64) -> f64 {
        match &self.kind {
            FrequencyKind::Cauchy { delta } => delta / (PI * (omega * omega + delta * delta)),
            FrequencyKind::Gaussian { sigma } => {
                let z = omega / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            FrequencyKind::Custom { density, .. } => density(omega),
        }
    }

    /// Draw `n` IID frequencies from `g`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return invalid("sample size must be at least 1");
        }
        let mut rng = rng_from_seed(seed);
        match &self.kind {
            FrequencyKind::Cauchy { delta } => {
                // Inverse CDF; u ∈ [0, 1) keeps the argument off π/2.
                Ok((0..n)
                    .map(|_| delta * (PI * (rng.random::<f64>() - 0.5)).tan())
                    .collect())
            }
            FrequencyKind::Gaussian { sigma } => {
                let normal =
                    Normal::new(0.0, *sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
                Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
            }
            FrequencyKind::Custom {
                sampler: Some(s), ..
            } => Ok((0..n).map(|_| s(&mut rng)).collect()),
            FrequencyKind::Custom {
                name,
                sampler: None,
                ..
            } => Err(Error::Unsupported(format!(
                "custom density {name:?} has no sampler"
            ))),
        }
    }

    /// `m`-point rule for `∫ f(ω) g(ω) dω`.
    ///
    /// Uses the tangent map `ω = s tan u`, `u ∈ (−π/2, π/2)`, with `s` the
    /// distribution's width and Gauss–Legendre nodes in `u`. For the Cauchy
    /// density the mapped weight `g(ω) dω/du` is the constant `1/π`, so the
    /// rule is Gauss–Legendre in `u` and integrates resolvent kernels such
    /// as `x/(x² + ω²)` spectrally. The same map spreads nodes over the
    /// Gaussian's bulk and tails. Nodes are symmetric about zero.
    pub fn quadrature(&self, m: usize) -> Result<FrequencyQuadrature> {
        if m < 2 {
            return invalid(format!(
                "frequency quadrature needs at least 2 nodes, got {m}"
            ));
        }
        let (t, wt) = quad::gauss_legendre(m);
        let s = self.scale();
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for (ti, wi) in t.iter().zip(&wt) {
            let u = FRAC_PI_2 * ti;
            let c = u.cos();
            let omega = s * u.tan();
            let weight = match self.kind {
                FrequencyKind::Cauchy { .. } => 0.5 * wi,
                _ => wi * FRAC_PI_2 * s / (c * c) * self.density(omega),
            };
            nodes.push(omega);
            weights.push(weight);
        }
        Ok(FrequencyQuadrature { nodes, weights })
    }

    /// `∫ x / (x² + (ω − y)²) g(ω) dω` for `x ≠ 0`, by adaptive quadrature.
    ///
    /// The substitution `ω = y + |x| tan u` turns the Poisson kernel into
    /// the constant `sign(x)`, so the integrand stays smooth however small
    /// `|x|` is.
    pub fn poisson_integral(&self, x: f64, y: f64) -> f64 {
        let ax = x.abs();
        let f = |u: f64| self.density(y + ax * u.tan());
        let tol = 1e-13;
        x.signum()
            * (quad::adaptive(f, -FRAC_PI_2, 0.0, tol) + quad::adaptive(f, 0.0, FRAC_PI_2, tol))
    }

    /// `∫ (ω − y) / (x² + (ω − y)²) g(ω) dω` for `x ≠ 0`, with the same
    /// substitution as [`poisson_integral`](Self::poisson_integral).
    pub fn conjugate_poisson_integral(&self, x: f64, y: f64) -> f64 {
        let ax = x.abs();
        let f = |u: f64| u.tan() * self.density(y + ax * u.tan());
        let tol = 1e-13;
        quad::adaptive(f, -FRAC_PI_2, 0.0, tol) + quad::adaptive(f, 0.0, FRAC_PI_2, tol)
    }
}
