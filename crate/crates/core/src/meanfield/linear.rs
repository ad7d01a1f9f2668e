use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::lattice::Lattice;

/// Late-time exponential growth of the linearised first harmonic.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEstimate {
    /// Least-squares slope of `log ‖Z₁(t)‖` over the second half of the run.
    pub rate: f64,
    pub times: Vec<f64>,
    /// `log ‖Z₁(t)‖` relative to the initial norm.
    pub log_norm: Vec<f64>,
}

/// `‖Z‖² = Σ_j w_j m_x⁻¹ Σ_l |Z(ω_j, x_l)|²`, the discrete `L²(g dω dx)` norm.
fn weighted_norm(lattice: &Lattice, z: &[Complex64]) -> f64 {
    let mx = lattice.m_x();
    lattice
        .omega
        .weights
        .iter()
        .enumerate()
        .map(|(j, w)| {
            w * z[j * mx..(j + 1) * mx]
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
        / (mx as f64).sqrt()
}

fn coupling_term(lattice: &Lattice, k: f64, z: &[Complex64], out: &mut [Complex64]) {
    let p = lattice.apply_p(z, 1, 0);
    let mx = lattice.m_x();
    for (idx, o) in out.iter_mut().enumerate() {
        *o = p[idx % mx] * (0.5 * k);
    }
}

/// Integrate `∂_t Z = iωZ + (K/2) 𝒫[Z]` from `z0` (frequency-major lattice
/// layout) and estimate its growth rate.
///
/// Uses integrating-factor RK4 with the rotation applied exactly, and
/// rescales `Z` to unit norm after every step while accumulating the log.
pub fn linearized_evolve(
    z0: &[Complex64],
    lattice: &Lattice,
    k: f64,
    dt: f64,
    t_end: f64,
) -> Result<GrowthEstimate> {
    let n = lattice.len();
    if z0.len() != n {
        return invalid(format!(
            "initial field has {} entries, lattice has {n}",
            z0.len()
        ));
    }
    if !(dt > 0.0 && dt <= 0.1 && t_end > 0.0 && t_end.is_finite() && k.is_finite()) {
        return invalid(format!(
            "bad run parameters dt = {dt}, T = {t_end}, K = {k}"
        ));
    }
    let norm0 = weighted_norm(lattice, z0);
    if !(norm0 > 0.0 && norm0.is_finite()) {
        return invalid("initial field must be nonzero and finite");
    }
    let mx = lattice.m_x();
    let rot = |tau: f64| -> Vec<Complex64> {
        (0..n)
            .map(|idx| Complex64::from_polar(1.0, lattice.omega.nodes[idx / mx] * tau))
            .collect()
    };
    let (half, full) = (rot(0.5 * dt), rot(dt));
    let mut z: Vec<Complex64> = z0.iter().map(|v| v / norm0).collect();
    let zero = Complex64::new(0.0, 0.0);
    let (mut a, mut b, mut c, mut d, mut trial) = (
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
    );
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let mut log_acc = 0.0;
    let mut times = vec![0.0];
    let mut log_norm = vec![0.0];
    for s in 1..=steps {
        coupling_term(lattice, k, &z, &mut a);
        for i in 0..n {
            trial[i] = half[i] * (z[i] + a[i] * (0.5 * dt));
        }
        coupling_term(lattice, k, &trial, &mut b);
        for i in 0..n {
            trial[i] = half[i] * z[i] + b[i] * (0.5 * dt);
        }
        coupling_term(lattice, k, &trial, &mut c);
        for i in 0..n {
            trial[i] = full[i] * z[i] + half[i] * c[i] * dt;
        }
        coupling_term(lattice, k, &trial, &mut d);
        for i in 0..n {
            z[i] = full[i] * (z[i] + a[i] * (dt / 6.0))
                + half[i] * (b[i] + c[i]) * (dt / 3.0)
                + d[i] * (dt / 6.0);
        }
        let nz = weighted_norm(lattice, &z);
        if !(nz > 0.0 && nz.is_finite()) {
            return Err(crate::Error::Numerical(format!(
                "linearised field degenerated at t = {}",
                s as f64 * dt
            )));
        }
        log_acc += nz.ln();
        z.iter_mut().for_each(|v| *v /= nz);
        times.push(s as f64 * dt);
        log_norm.push(log_acc);
    }
    let start = times.partition_point(|t| *t < 0.5 * t_end);
    let rate = slope(&times[start..], &log_norm[start..]);
    Ok(GrowthEstimate {
        rate,
        times,
        log_norm,
    })
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
