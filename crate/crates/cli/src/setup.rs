//! Per-replica randomness and coupling construction shared by the
//! particle-based commands.

use kgraph::dynamics::{
    sample_initial, CirculantWeights, CompleteGraph, Coupling, OscillatorState,
};
use kgraph::graphon::{
    build_weighted_graph, make_grid, sample_random_graph, GraphonKind, GridScheme, NodeGrid,
};
use kgraph::rng::{derive, stream};

use crate::config::{CouplingMode, ExperimentConfig};
use crate::error::CliResult;

/// Seed of replica `index`: the `index`-th SplitMix64 child of the base
/// seed. Graph, frequencies, phases and grid each take their own child of
/// the replica seed (see [`kgraph::rng::stream`]).
pub fn replica_seed(base: u64, index: usize) -> u64 {
    derive(base, index as u64)
}

/// Everything random about one particle run.
pub struct Replica {
    pub seed: u64,
    pub grid: NodeGrid,
    pub freqs: Vec<f64>,
    pub initial: OscillatorState,
    pub coupling: Box<dyn Coupling>,
}

impl Replica {
    pub fn new(config: &ExperimentConfig, n: usize, index: usize) -> CliResult<Self> {
        let seed = replica_seed(config.seed, index);
        let grid_seed = (config.grid == GridScheme::IidUniform).then(|| derive(seed, stream::GRID));
        let grid = make_grid(n, config.grid, grid_seed)?;
        let freqs = config.freq.sample(n, derive(seed, stream::FREQUENCIES))?;
        let initial = sample_initial(&config.initial, &freqs, &grid, derive(seed, stream::PHASES))?;
        let coupling = build_coupling(config, &grid, derive(seed, stream::GRAPH))?;
        Ok(Self {
            seed,
            grid,
            freqs,
            initial,
            coupling,
        })
    }
}

/// Realise the configured coupling on `grid`.
///
/// Weighted couplings pick the cheapest exact representation: the
/// complete graph for `W ≡ 1`, a circulant for ring kernels on the uniform
/// grid, a dense matrix otherwise.
pub fn build_coupling(
    config: &ExperimentConfig,
    grid: &NodeGrid,
    graph_seed: u64,
) -> CliResult<Box<dyn Coupling>> {
    let g = &config.graphon;
    Ok(match config.coupling {
        CouplingMode::Random => Box::new(sample_random_graph(g, grid, graph_seed)?),
        CouplingMode::Weighted => match g.kind() {
            GraphonKind::Constant { p } if *p == 1.0 => Box::new(CompleteGraph::new(grid.len())),
            _ if g.is_ring() && grid.scheme() == GridScheme::Uniform => {
                Box::new(CirculantWeights::from_ring(g, grid)?)
            }
            _ => Box::new(build_weighted_graph(g, grid)),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn replicas_are_reproducible_and_distinct() {
        let c = parse_config(
            "graphon = small_world:0.1:0.25\nfreq = gaussian:1\nic = wrapped_gaussian:1",
        )
        .unwrap();
        let a = Replica::new(&c, 64, 0).unwrap();
        let b = Replica::new(&c, 64, 0).unwrap();
        let other = Replica::new(&c, 64, 1).unwrap();
        assert_eq!(a.freqs, b.freqs);
        assert_eq!(a.initial, b.initial);
        assert_ne!(a.freqs, other.freqs);
        assert_ne!(a.seed, other.seed);
    }

    #[test]
    fn weighted_couplings_match_the_graphon() {
        for spec in [
            "constant:1",
            "constant:0.3",
            "small_world:0.1:0.25",
            "ring_exp:2",
        ] {
            let c = parse_config(&format!("graphon = {spec}\nfreq = cauchy:1")).unwrap();
            let grid = make_grid(20, GridScheme::Uniform, None).unwrap();
            let coupling = build_coupling(&c, &grid, 0).unwrap();
            let dense = build_weighted_graph(&c.graphon, &grid);
            for i in 0..20 {
                for j in 0..20 {
                    assert!(
                        (coupling.weight(i, j) - dense.get(i, j)).abs() < 1e-12,
                        "{spec} ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn random_coupling_is_a_sampled_graph() {
        let c = parse_config("graphon = constant:0.5\nfreq = cauchy:1\ncoupling = random").unwrap();
        let grid = make_grid(200, GridScheme::Uniform, None).unwrap();
        let coupling = build_coupling(&c, &grid, 7).unwrap();
        let ones = (0..200)
            .flat_map(|i| (0..200).map(move |j| (i, j)))
            .filter(|&(i, j)| coupling.weight(i, j) == 1.0)
            .count();
        let density = ones as f64 / (200.0 * 200.0);
        assert!((density - 0.5).abs() < 0.03, "{density}");
    }
}
