//! Cross-module checks: sampling, file round trips, and agreement between
//! the particle system, the mean-field solver and closed-form results.

use std::io::BufReader;

use kgraph::dynamics::{
    integrate, order_parameter, sample_initial, CompleteGraph, InitialCondition, SimConfig,
};
use kgraph::frequency::FrequencyDistribution;
use kgraph::graphon::{
    build_weighted_graph, make_grid, sample_random_graph, AdjacencyMatrix, Graphon, GridScheme,
    NodeGrid, WeightMatrix,
};
use kgraph::lattice::Lattice;
use kgraph::meanfield::{
    evolve, init_meanfield, read_checkpoint, write_checkpoint, EvolveOptions, MeanFieldState,
};
use kgraph::spectra::{analytic_spectrum, nystrom_spectrum, transition_points};

fn small_world() -> Graphon {
    Graphon::small_world(0.1, 0.25).unwrap()
}

#[test]
fn sampled_graph_density_matches_the_graphon_integral() {
    let g = small_world();
    let grid = make_grid(400, GridScheme::Uniform, None).unwrap();
    let a = sample_random_graph(&g, &grid, 7).unwrap();
    // Off-diagonal mean of the edge probabilities on this grid.
    let w = build_weighted_graph(&g, &grid);
    let n = grid.len();
    let mean: f64 = (0..n)
        .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
        .map(|(i, j)| w.get(i, j))
        .sum::<f64>()
        / (n * (n - 1)) as f64;
    assert!(
        (a.edge_density() - mean).abs() < 0.01,
        "{} vs {mean}",
        a.edge_density()
    );
    assert!((g.integral() - 0.5).abs() < 1e-12);
}

#[test]
fn graph_and_grid_files_round_trip() {
    let g = small_world();
    let grid = make_grid(30, GridScheme::IidUniform, Some(3)).unwrap();
    let again = NodeGrid::from_text(&grid.to_text()).unwrap();
    assert_eq!(again.points(), grid.points());

    let a = sample_random_graph(&g, &grid, 9).unwrap();
    let b = AdjacencyMatrix::from_text(&a.to_text()).unwrap();
    assert!((0..30).all(|i| (0..30).all(|j| a.get(i, j) == b.get(i, j))));

    let w = build_weighted_graph(&g, &grid);
    assert_eq!(WeightMatrix::from_text(&w.to_text()).unwrap(), w);
}

#[test]
fn restart_from_checkpoint_continues_the_same_run() {
    let g = small_world();
    let d = FrequencyDistribution::gaussian(1.0).unwrap();
    let ic = InitialCondition::WrappedGaussian {
        concentration: 1.0,
        mean: 0.3,
    };
    let options = EvolveOptions::new(0.01, 1.0).record_stride(50);

    let mut straight = init_meanfield(&ic, &d, &g, 16, 32, 8).unwrap();
    evolve(&mut straight, 2.0, &options).unwrap();
    evolve(&mut straight, 2.0, &options).unwrap();

    let mut first = init_meanfield(&ic, &d, &g, 16, 32, 8).unwrap();
    evolve(&mut first, 2.0, &options).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &first.to_checkpoint()).unwrap();
    let cp = read_checkpoint(BufReader::new(bytes.as_slice())).unwrap();
    let lattice = Lattice::new(&g, &d, 32, 8).unwrap();
    let mut resumed = MeanFieldState::from_checkpoint(cp, lattice).unwrap();
    evolve(&mut resumed, 2.0, &options).unwrap();

    assert_eq!(resumed.time(), straight.time());
    assert_eq!(resumed.coeffs(), straight.coeffs());
}

/// Free rotation from a wrapped normal with Gaussian frequencies:
/// `r(t) = exp(−1/(2κ)) exp(−σ²t²/2)`.
fn free_rotation_r(concentration: f64, sigma: f64, t: f64) -> f64 {
    (-0.5 / concentration - 0.5 * sigma * sigma * t * t).exp()
}

#[test]
fn free_rotation_agrees_across_particles_mean_field_and_closed_form() {
    let g = small_world();
    let d = FrequencyDistribution::gaussian(1.0).unwrap();
    let ic = InitialCondition::WrappedGaussian {
        concentration: 2.0,
        mean: 0.0,
    };

    let mut state = init_meanfield(&ic, &d, &g, 16, 200, 8).unwrap();
    let series = evolve(
        &mut state,
        0.0,
        &EvolveOptions::new(0.01, 2.0).record_stride(50),
    )
    .unwrap();
    for (t, r) in series.times.iter().zip(&series.r) {
        assert!(
            (r - free_rotation_r(2.0, 1.0, *t)).abs() < 1e-8,
            "t = {t}: {r}"
        );
    }

    let n = 20_000;
    let grid = make_grid(n, GridScheme::Uniform, None).unwrap();
    let freqs = d.sample(n, 1).unwrap();
    let initial = sample_initial(&ic, &freqs, &grid, 2).unwrap();
    // With K = 0 the weights never enter the velocity.
    let coupling = CompleteGraph::new(n);
    let config = SimConfig {
        k: 0.0,
        dt: 0.05,
        t_end: 2.0,
        record_stride: 10,
        seed: 0,
    };
    let trajectory = integrate(&initial, &freqs, &coupling, &config).unwrap();
    for rec in &trajectory.records {
        let want = free_rotation_r(2.0, 1.0, rec.time);
        assert!(
            (rec.r - want).abs() < 4.0 / (n as f64).sqrt(),
            "t = {}: {} vs {want}",
            rec.time,
            rec.r
        );
        assert_eq!(rec.r, order_parameter(&rec.state.phases).0);
    }
}

#[test]
fn nystrom_transition_points_converge_to_closed_form() {
    let d = FrequencyDistribution::gaussian(1.0).unwrap();
    for g in [
        small_world(),
        Graphon::ring_exponential(3.0).unwrap(),
        Graphon::ring_indicator(0.2).unwrap(),
    ] {
        let exact = transition_points(&analytic_spectrum(&g, 64).unwrap(), &d).unwrap();
        let approx = transition_points(&nystrom_spectrum(&g, 400).unwrap(), &d).unwrap();
        assert!(
            (approx.kc_plus / exact.kc_plus - 1.0).abs() < 1e-3,
            "{}: {approx:?} vs {exact:?}",
            g.label()
        );
        if exact.kc_minus.is_finite() {
            assert!(
                (approx.kc_minus / exact.kc_minus - 1.0).abs() < 1e-2,
                "{}: {approx:?} vs {exact:?}",
                g.label()
            );
        }
    }
}
