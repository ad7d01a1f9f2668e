use super::*;
use crate::dynamics::{order_parameter, sample_initial, ConditionalDensity};
use crate::graphon::{make_grid, GridScheme};
use crate::spectra::solve_eigenvalue;
use std::sync::Arc;

fn classical() -> Graphon {
    Graphon::constant(1.0).unwrap()
}

fn cauchy() -> FrequencyDistribution {
    FrequencyDistribution::cauchy(0.5).unwrap()
}

#[test]
fn incoherent_initial_state() {
    let s = init_meanfield(
        &InitialCondition::Incoherent,
        &cauchy(),
        &classical(),
        8,
        16,
        8,
    )
    .unwrap();
    for j in 0..16 {
        for l in 0..8 {
            assert_eq!(s.coeff(0, j, l), Complex64::new(1.0 / TAU, 0.0));
            assert!((1..=8).all(|k| s.coeff(k, j, l) == ZERO));
        }
    }
    assert_eq!(s.order_parameter().0, 0.0);
}

#[test]
fn wrapped_gaussian_coefficients_decay_and_normalise() {
    let ic = InitialCondition::WrappedGaussian {
        concentration: 2.0,
        mean: 0.4,
    };
    let s = init_meanfield(&ic, &cauchy(), &classical(), 16, 8, 8).unwrap();
    let mags: Vec<f64> = (0..=16).map(|k| s.coeff(k, 3, 2).norm()).collect();
    assert!(mags.windows(2).all(|w| w[1] < w[0]));
    let m = 64;
    let h = TAU / m as f64;
    for j in 0..8 {
        for l in 0..8 {
            let mass: f64 = (0..m).map(|a| s.density(a as f64 * h, j, l)).sum::<f64>() * h;
            assert!((mass - 1.0).abs() < 1e-8);
        }
    }
    // r of a wrapped normal is exp(−1/(2c))
    let (r, psi) = s.order_parameter();
    assert!((r - (-0.25f64).exp()).abs() < 1e-12 && (psi - 0.4).abs() < 1e-12);
}

#[test]
fn custom_initial_density_matches_wrapped_gaussian_coefficients() {
    // Cardioid density (1 + cos(θ − 2πx))/(2π): ρ̂₁ = e^{2πix}/(4π), ρ̂_k = 0 for k ≥ 2.
    let density: ConditionalDensity =
        Arc::new(|t: f64, _w: f64, x: f64| (1.0 + (t - TAU * x).cos()) / TAU);
    let s = init_meanfield(
        &InitialCondition::Custom(density),
        &cauchy(),
        &classical(),
        4,
        8,
        8,
    )
    .unwrap();
    for l in 0..8 {
        let want = Complex64::from_polar(1.0 / (2.0 * TAU), TAU * s.lattice().x[l]);
        assert!((s.coeff(1, 2, l) - want).norm() < 1e-14);
        assert!(s.coeff(2, 2, l).norm() < 1e-14);
    }
    let bad: ConditionalDensity = Arc::new(|_, _, _| 0.5);
    assert!(init_meanfield(
        &InitialCondition::Custom(bad),
        &cauchy(),
        &classical(),
        4,
        8,
        8
    )
    .is_err());
}

#[test]
fn init_rejects_small_sizes() {
    assert!(init_meanfield(
        &InitialCondition::Incoherent,
        &cauchy(),
        &classical(),
        1,
        16,
        8
    )
    .is_err());
    assert!(init_meanfield(
        &InitialCondition::Incoherent,
        &cauchy(),
        &classical(),
        8,
        4,
        8
    )
    .is_err());
}

#[test]
fn incoherence_is_stationary() {
    let mut s = init_meanfield(
        &InitialCondition::Incoherent,
        &cauchy(),
        &classical(),
        16,
        16,
        8,
    )
    .unwrap();
    let before = s.coeffs().to_vec();
    evolve(
        &mut s,
        2.0,
        &EvolveOptions::new(0.01, 10.0).record_stride(100),
    )
    .unwrap();
    let drift = s
        .coeffs()
        .iter()
        .zip(&before)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-12);
}

#[test]
fn zero_coupling_rotates_each_harmonic() {
    let ic = InitialCondition::WrappedGaussian {
        concentration: 1.0,
        mean: 0.0,
    };
    let mut s = init_meanfield(&ic, &cauchy(), &classical(), 8, 16, 8).unwrap();
    let before = s.clone();
    evolve(
        &mut s,
        0.0,
        &EvolveOptions::new(0.01, 5.0).record_stride(100),
    )
    .unwrap();
    for k in 0..=8 {
        for j in 0..16 {
            let omega = s.lattice().omega.nodes[j];
            let want = before.coeff(k, j, 3) * Complex64::from_polar(1.0, k as f64 * omega * 5.0);
            assert!((s.coeff(k, j, 3) - want).norm() < 1e-10);
            assert!((s.coeff(k, j, 3).norm() - before.coeff(k, j, 3).norm()).abs() < 1e-10);
        }
    }
}

#[test]
fn mass_is_conserved() {
    let ic = InitialCondition::WrappedGaussian {
        concentration: 3.0,
        mean: 1.0,
    };
    let mut s = init_meanfield(
        &ic,
        &cauchy(),
        &Graphon::small_world(0.1, 0.25).unwrap(),
        16,
        16,
        16,
    )
    .unwrap();
    evolve(
        &mut s,
        3.0,
        &EvolveOptions::new(0.01, 2.0).record_stride(50),
    )
    .unwrap();
    assert!((0..16).all(|j| (0..16).all(|l| s.coeff(0, j, l) == Complex64::new(1.0 / TAU, 0.0))));
}

#[test]
fn classical_cauchy_saturates_at_self_consistent_order() {
    let ic = InitialCondition::WrappedGaussian {
        concentration: 1.0,
        mean: 0.0,
    };
    let mut s = init_meanfield(&ic, &cauchy(), &classical(), 64, 200, 8).unwrap();
    let series = evolve(
        &mut s,
        2.0,
        &EvolveOptions::new(0.01, 40.0).record_stride(100),
    )
    .unwrap();
    let r_end = *series.r.last().unwrap();
    assert!(
        (r_end - cauchy_locked_order(1.0, 2.0)).abs() < 0.02,
        "{r_end}"
    );
}

#[test]
fn small_perturbation_grows_then_saturates() {
    let eps = 1e-3;
    let density: ConditionalDensity =
        Arc::new(move |t: f64, _w: f64, _x: f64| (1.0 + 2.0 * eps * t.cos()) / TAU);
    let mut s = init_meanfield(
        &InitialCondition::Custom(density),
        &cauchy(),
        &classical(),
        64,
        200,
        8,
    )
    .unwrap();
    let series = evolve(
        &mut s,
        2.0,
        &EvolveOptions::new(0.01, 40.0).record_stride(100),
    )
    .unwrap();
    assert!(series.r[0] < 2e-3);
    assert!(
        (series.r.last().unwrap() - 0.5f64.sqrt()).abs() < 0.02,
        "{:?}",
        series.r.last()
    );
}

#[test]
fn blowup_is_reported() {
    // A deliberately under-resolved truncation driven hard.
    let ic = InitialCondition::WrappedGaussian {
        concentration: 1e6,
        mean: 0.0,
    };
    let mut s = init_meanfield(&ic, &cauchy(), &classical(), 2, 16, 8).unwrap();
    let err = evolve(
        &mut s,
        200.0,
        &EvolveOptions::new(0.01, 50.0)
            .record_stride(100)
            .closure(Closure::Hard),
    );
    assert!(matches!(err, Err(Error::Numerical(_))), "{err:?}");
}

#[test]
fn stability_classification_examples() {
    let g = FrequencyDistribution::gaussian(1.0).unwrap();
    assert_eq!(
        stability_classify(&classical(), &g, 1.5).unwrap(),
        Stability::Stable
    );
    assert_eq!(
        stability_classify(&classical(), &g, 1.7).unwrap(),
        Stability::UnstablePositiveBranch
    );
    let sw = Graphon::small_world(0.1, 0.25).unwrap();
    assert_eq!(
        stability_classify(&sw, &g, -10.0).unwrap(),
        Stability::Stable
    );
    assert_eq!(
        stability_classify(&sw, &g, -25.0).unwrap(),
        Stability::UnstableNegativeBranch
    );
}

#[test]
fn growth_rate_matches_cauchy_oracle() {
    let lattice = Lattice::new(&classical(), &cauchy(), 200, 8).unwrap();
    let z0 = vec![Complex64::new(1.0, 0.0); lattice.len()];
    let est = linearized_evolve(&z0, &lattice, 2.0, 0.01, 40.0).unwrap();
    assert!((est.rate - 0.5).abs() < 1e-2, "{}", est.rate);
    let sub = linearized_evolve(&z0, &lattice, 0.5, 0.01, 40.0).unwrap();
    assert!(sub.rate <= 1e-2, "{}", sub.rate);
    assert!(linearized_evolve(&vec![ZERO; lattice.len()], &lattice, 1.0, 0.01, 1.0).is_err());
}

#[test]
fn growth_rate_on_small_world_matches_spectral_branch() {
    let g = FrequencyDistribution::gaussian(1.0).unwrap();
    let sw = Graphon::small_world(0.1, 0.25).unwrap();
    let tp = graphon_transition_points(&sw, &g).unwrap();
    let k = 1.1 * tp.kc_plus;
    let want = solve_eigenvalue(&g, 0.5, k).unwrap().unwrap();
    let lattice = Lattice::new(&sw, &g, 200, 16).unwrap();
    let z0: Vec<Complex64> = (0..lattice.len())
        .map(|i| Complex64::new(1.0 + (i % 7) as f64 * 0.1, 0.0))
        .collect();
    let est = linearized_evolve(&z0, &lattice, k, 0.02, 200.0).unwrap();
    assert!(
        (est.rate / want - 1.0).abs() < 0.1,
        "{} vs {want}",
        est.rate
    );
}

#[test]
fn bl_proxy_examples() {
    let dist = FrequencyDistribution::gaussian(1.0).unwrap();
    let graphon = Graphon::small_world(0.1, 0.25).unwrap();
    let ic = InitialCondition::WrappedGaussian {
        concentration: 1.5,
        mean: 0.3,
    };
    let state = init_meanfield(&ic, &dist, &graphon, 8, 80, 32).unwrap();
    let n = 10_000;
    let grid = make_grid(n, GridScheme::Uniform, None).unwrap();
    let freqs = dist.sample(n, 1).unwrap();
    let phases = sample_initial(&ic, &freqs, &grid, 2).unwrap().phases;
    let empirical = EmpiricalMeasure::new(&phases, &freqs, grid.points()).unwrap();
    assert!(bl_distance_proxy(&empirical, &state) <= 0.05);
    assert_eq!(bl_distance_between(&empirical, &empirical), 0.0);

    let uniform =
        init_meanfield(&InitialCondition::Incoherent, &dist, &graphon, 8, 80, 32).unwrap();
    let point = EmpiricalMeasure::new(&[0.0], &[0.0], &[0.5]).unwrap();
    assert!(bl_distance_proxy(&point, &uniform) >= 0.2);
    assert!(EmpiricalMeasure::new(&[], &[], &[]).is_err());
    let _ = order_parameter(&phases);
}

#[test]
fn checkpoint_round_trip() {
    let ic = InitialCondition::WrappedGaussian {
        concentration: 2.0,
        mean: 0.1,
    };
    let mut s = init_meanfield(&ic, &cauchy(), &classical(), 6, 8, 8).unwrap();
    evolve(
        &mut s,
        1.5,
        &EvolveOptions::new(0.01, 0.5).record_stride(10),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &s.to_checkpoint()).unwrap();
    let cp = read_checkpoint(&buf[..]).unwrap();
    assert_eq!(cp, s.to_checkpoint());
    let back = MeanFieldState::from_checkpoint(cp, s.lattice().clone()).unwrap();
    assert_eq!(back.coeffs(), s.coeffs());
    assert!(read_checkpoint(&b"nonsense\n"[..]).is_err());
}

#[test]
fn series_csv_layout() {
    let ic = InitialCondition::WrappedGaussian {
        concentration: 2.0,
        mean: 0.0,
    };
    let mut s = init_meanfield(&ic, &cauchy(), &classical(), 6, 8, 8).unwrap();
    let series = evolve(
        &mut s,
        1.0,
        &EvolveOptions::new(0.01, 0.1)
            .record_stride(5)
            .record_local(true),
    )
    .unwrap();
    let mut buf = Vec::new();
    series.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("t,r_global,local_0,"));
    assert_eq!(header.split(',').count(), 10);
    assert_eq!(text.lines().count(), 4);
    // the classical local order equals the global one
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[2] - row[1]).abs() < 1e-12);
}

#[test]
fn truncation_orders_agree_on_supercritical_run() {
    let eps = 1e-3;
    let density: ConditionalDensity =
        Arc::new(move |t: f64, _w: f64, _x: f64| (1.0 + 2.0 * eps * t.cos()) / TAU);
    let ic = InitialCondition::Custom(density);
    let run = |order| {
        let mut s = init_meanfield(&ic, &cauchy(), &classical(), order, 200, 8).unwrap();
        evolve(
            &mut s,
            2.0,
            &EvolveOptions::new(0.01, 20.0).record_stride(10),
        )
        .unwrap()
        .r
    };
    let (a, b) = (run(32), run(64));
    let gap = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-3, "sup |r_32 - r_64| = {gap:e}");
}

#[test]
fn hard_closure_blows_up_where_filter_saturates() {
    let ic = InitialCondition::WrappedGaussian {
        concentration: 100.0,
        mean: 0.0,
    };
    let mut s = init_meanfield(&ic, &cauchy(), &classical(), 64, 64, 8).unwrap();
    let hard = EvolveOptions::new(0.01, 40.0)
        .record_stride(100)
        .closure(Closure::Hard);
    assert!(evolve(&mut s, 2.0, &hard).is_err());
}
