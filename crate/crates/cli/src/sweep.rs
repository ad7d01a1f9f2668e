//! K-sweeps and finite-size transition detection.

use std::path::{Path, PathBuf};

use kgraph::dynamics::{integrate_batch, order_parameter, steady_state_r};
use kgraph::meanfield::graphon_transition_points;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, num, plot_script, CsvTable, Metadata};
use crate::setup::Replica;

/// Multiple of `n^{-1/2}` separating coherent from incoherent `r∞`.
pub const FLOOR_FACTOR: f64 = 5.0;

pub const ESTIMATOR: &str = "first K with seed-mean r_inf above 5/sqrt(n); linear interpolation in (K, r_inf^2) between the bracketing grid points to r_inf^2 = floor^2";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    pub r_mean: f64,
    /// Sample standard deviation across seeds (0 for a single seed).
    pub r_std: f64,
    pub n: usize,
    /// `r∞` of each replica, in replica order.
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KcEstimate {
    Bracketed(f64),
    /// No grid point crosses the floor, or the first point is already
    /// above it.
    NotBracketed,
}

impl KcEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            KcEstimate::Bracketed(k) => Some(*k),
            KcEstimate::NotBracketed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by K.
    pub rows: Vec<SweepRow>,
    pub kc_hat: KcEstimate,
    pub kc_plus: f64,
    pub kc_minus: f64,
    pub floor: f64,
    pub replica_seeds: Vec<u64>,
}

/// `5/sqrt(n)`.
pub fn finite_size_floor(n: usize) -> f64 {
    FLOOR_FACTOR / (n as f64).sqrt()
}

/// Transition estimate from seed-mean `r∞` on an ascending K grid.
pub fn estimate_kc(ks: &[f64], r_means: &[f64], floor: f64) -> KcEstimate {
    match r_means.iter().position(|&r| r > floor) {
        Some(i) if i > 0 => {
            let (k0, k1) = (ks[i - 1], ks[i]);
            let (q0, q1) = (r_means[i - 1].powi(2), r_means[i].powi(2));
            let frac = (floor * floor - q0) / (q1 - q0);
            KcEstimate::Bracketed(k0 + frac.clamp(0.0, 1.0) * (k1 - k0))
        }
        _ => KcEstimate::NotBracketed,
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

/// `r∞` for every K of one replica. All K share the replica's graph,
/// frequencies and initial phases and are integrated as one batch.
fn replica_order(config: &ExperimentConfig, ks: &[f64], index: usize) -> CliResult<Vec<f64>> {
    let replica = Replica::new(config, config.n, index)?;
    let b = ks.len();
    let mut times = Vec::new();
    let mut series = vec![Vec::new(); b];
    integrate_batch(
        &replica.initial,
        &replica.freqs,
        replica.coupling.as_ref(),
        ks,
        config.dt,
        config.t_end,
        config.record_stride,
        |t, m, phases| {
            if m == 0 {
                times.push(t);
            }
            series[m].push(order_parameter(phases).0);
        },
    )
    .map_err(|e| {
        CliError::from(e).context(format_args!(
            "K in [{}, {}], seed {}",
            ks[0],
            ks[b - 1],
            replica.seed
        ))
    })?;
    series
        .iter()
        .map(|r| steady_state_r(&times, r).map_err(CliError::from))
        .collect()
}

pub fn run_sweep(config: &ExperimentConfig) -> CliResult<SweepResult> {
    let mut ks = config.k_values()?;
    ks.sort_by(f64::total_cmp);
    let per_replica: Vec<Vec<f64>> = (0..config.seeds)
        .into_par_iter()
        .map(|i| replica_order(config, &ks, i))
        .collect::<CliResult<_>>()?;
    let rows: Vec<SweepRow> = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let per_seed: Vec<f64> = per_replica.iter().map(|r| r[j]).collect();
            let (r_mean, r_std) = mean_std(&per_seed);
            SweepRow {
                k,
                r_mean,
                r_std,
                n: config.n,
                per_seed,
            }
        })
        .collect();
    let floor = finite_size_floor(config.n);
    let means: Vec<f64> = rows.iter().map(|r| r.r_mean).collect();
    let kc_hat = estimate_kc(&ks, &means, floor);
    let (kc_plus, kc_minus) = match graphon_transition_points(&config.graphon, &config.freq) {
        Ok(tp) => (tp.kc_plus, tp.kc_minus),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let replica_seeds = (0..config.seeds)
        .map(|i| crate::setup::replica_seed(config.seed, i))
        .collect();
    Ok(SweepResult {
        rows,
        kc_hat,
        kc_plus,
        kc_minus,
        floor,
        replica_seeds,
    })
}

impl SweepResult {
    fn metadata(&self, config: &ExperimentConfig) -> Metadata {
        let mut m = Metadata::for_config("sweep", config);
        m.push("n", config.n);
        m.push("seeds", self.replica_seeds.len());
        m.push("kc_plus_theory", num(self.kc_plus));
        m.push("kc_minus_theory", num(self.kc_minus));
        m.push("finite_size_floor", num(self.floor));
        m.push(
            "kc_hat",
            match self.kc_hat {
                KcEstimate::Bracketed(k) => num(k),
                KcEstimate::NotBracketed => "not bracketed".into(),
            },
        );
        m.push("kc_estimator", ESTIMATOR);
        m.push("r_inf", "mean of r over the final 20% of [0, T]");
        m
    }

    /// Summary table: one row per K.
    pub fn summary_table(&self, config: &ExperimentConfig) -> CsvTable {
        let mut t = CsvTable::new(
            self.metadata(config),
            &["K", "r_inf_mean", "r_inf_std", "n"],
        );
        for r in &self.rows {
            t.push_row(vec![num(r.k), num(r.r_mean), num(r.r_std), r.n.to_string()]);
        }
        t
    }

    /// One row per (K, replica).
    pub fn replica_table(&self, config: &ExperimentConfig) -> CsvTable {
        let mut t = CsvTable::new(self.metadata(config), &["K", "replica", "seed", "r_inf"]);
        for r in &self.rows {
            for (i, (v, seed)) in r.per_seed.iter().zip(&self.replica_seeds).enumerate() {
                t.push_row(vec![num(r.k), i.to_string(), seed.to_string(), num(*v)]);
            }
        }
        t
    }
}

/// Write a gnuplot script for the summary CSV `csv_name` next to it.
pub fn emit_plot_script(result: &SweepResult, dir: &Path, csv_name: &str) -> CliResult<PathBuf> {
    if result.rows.is_empty() {
        return Err(CliError::Config("refusing to plot an empty sweep".into()));
    }
    let stem = csv_name.trim_end_matches(".csv");
    let path = dir.join(format!("{stem}.gp"));
    let script = plot_script(
        csv_name,
        &format!("{stem}.png"),
        result.kc_plus,
        result.kc_hat.value(),
    );
    std::fs::write(&path, script).map_err(|e| CliError::from(e).context(path.display()))?;
    Ok(path)
}

/// Run the sweep and write `sweep.csv`, `sweep_replicas.csv` and `sweep.gp`
/// to the output directory.
pub fn sweep_command(config: &ExperimentConfig) -> CliResult<SweepResult> {
    let result = run_sweep(config)?;
    ensure_dir(&config.out)?;
    result
        .summary_table(config)
        .write_file(&config.out.join("sweep.csv"))?;
    result
        .replica_table(config)
        .write_file(&config.out.join("sweep_replicas.csv"))?;
    emit_plot_script(&result, &config.out, "sweep.csv")?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_interpolates_in_r_squared() {
        let ks = [1.0, 1.5, 2.0, 2.5];
        let floor = 0.1;
        // r² = 0.005 → 0.045 between 1.5 and 2.0; floor² = 0.01 is 1/8 of the way.
        let r = [0.01, 0.005f64.sqrt(), 0.045f64.sqrt(), 0.5];
        match estimate_kc(&ks, &r, floor) {
            KcEstimate::Bracketed(k) => assert!((k - 1.5625).abs() < 1e-12, "{k}"),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            estimate_kc(&ks, &[0.01; 4], floor),
            KcEstimate::NotBracketed
        );
        assert_eq!(estimate_kc(&ks, &[0.5; 4], floor), KcEstimate::NotBracketed);
    }

    #[test]
    fn mean_and_sample_deviation() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_sweep_is_not_plotted() {
        let r = SweepResult {
            rows: vec![],
            kc_hat: KcEstimate::NotBracketed,
            kc_plus: 1.0,
            kc_minus: f64::NEG_INFINITY,
            floor: 0.1,
            replica_seeds: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plot_script(&r, dir.path(), "sweep.csv").is_err());
    }
}
