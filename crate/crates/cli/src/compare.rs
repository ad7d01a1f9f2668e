//! Particle simulations against the mean-field solution from matched
//! initial data.

use kgraph::dynamics::{integrate_observed, order_parameter, SimConfig};
use kgraph::meanfield::{
    bl_distance_between, evolve, init_meanfield, EmpiricalMeasure, EvolveOptions, TestMeasure,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, num, CsvTable, Metadata};
use crate::setup::Replica;

/// Dictionary integrals of a mean-field state, kept after the state moves on.
struct Frozen(Vec<f64>);

impl TestMeasure for Frozen {
    fn dictionary_integrals(&self) -> Vec<f64> {
        self.0.clone()
    }
}

/// Mean-field reference: `r` on the sample grid and the dictionary
/// integrals at each checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldReference {
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    pub checkpoints: Vec<f64>,
    pub dictionary: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    /// `sup_t |r_particle(t) − r_meanfield(t)|` over the sample grid.
    pub sup_dr: f64,
    /// Distance proxy at each checkpoint.
    pub bl: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSummary {
    pub n: usize,
    pub median_sup_dr: f64,
    pub median_bl: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub k: f64,
    pub reference: MeanFieldReference,
    /// Ordered by `n`, then replica.
    pub rows: Vec<CompareRow>,
    pub summary: Vec<CompareSummary>,
}

/// `n^{-1/2}`, the size of sampling fluctuations of `r` for `n` particles.
pub fn monte_carlo_floor(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

fn steps_per(interval: f64, dt: f64) -> usize {
    (interval / dt).round() as usize
}

fn on_grid(t: f64, step: f64) -> bool {
    (t / step - (t / step).round()).abs() < 1e-9
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn meanfield_reference(config: &ExperimentConfig, k: f64) -> CliResult<MeanFieldReference> {
    let checkpoints = config.checkpoint_times();
    if let Some(t) = checkpoints.iter().find(|t| !on_grid(**t, config.sample_dt)) {
        return Err(CliError::Config(format!(
            "checkpoint {t} is not a multiple of sample_dt = {}",
            config.sample_dt
        )));
    }
    let mut state = init_meanfield(
        &config.initial,
        &config.freq,
        &config.graphon,
        config.order,
        config.m_omega,
        config.m_x,
    )?;
    let stride = steps_per(config.sample_dt, config.meanfield_dt);
    let mut times = vec![0.0];
    let mut r = vec![state.order_parameter().0];
    let mut dictionary = Vec::new();
    let mut stops: Vec<f64> = checkpoints.clone();
    stops.push(config.t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    for stop in stops {
        let span = stop - state.time();
        if span > 1e-12 {
            let options = EvolveOptions::new(config.meanfield_dt, span)
                .record_stride(stride)
                .closure(config.closure);
            let series = evolve(&mut state, k, &options)
                .map_err(|e| CliError::from(e).context("mean-field run"))?;
            times.extend(&series.times[1..]);
            r.extend(&series.r[1..]);
        }
        if checkpoints.iter().any(|c| (c - stop).abs() < 1e-12) {
            dictionary.push(state.dictionary_integrals());
        }
    }
    Ok(MeanFieldReference {
        times,
        r,
        checkpoints,
        dictionary,
    })
}

/// One particle run compared with the reference.
fn particle_row(
    config: &ExperimentConfig,
    k: f64,
    n: usize,
    replica: usize,
    reference: &MeanFieldReference,
) -> CliResult<CompareRow> {
    let rep = Replica::new(config, n, replica)?;
    let sim = SimConfig {
        k,
        dt: config.dt,
        t_end: config.t_end,
        record_stride: steps_per(config.sample_dt, config.dt),
        seed: rep.seed,
    };
    let mut sample = 0;
    let mut sup_dr: f64 = 0.0;
    let mut bl = Vec::new();
    let mut mismatch = None;
    integrate_observed(
        &rep.initial,
        &rep.freqs,
        rep.coupling.as_ref(),
        &sim,
        |t, phases| {
            match reference.times.get(sample) {
                Some(tr) if (tr - t).abs() < 1e-9 => {
                    sup_dr = sup_dr.max((order_parameter(phases).0 - reference.r[sample]).abs());
                }
                _ => mismatch = Some(t),
            }
            sample += 1;
            if let Some(c) = reference
                .checkpoints
                .iter()
                .position(|c| (c - t).abs() < 1e-9)
            {
                let particles = EmpiricalMeasure::new(phases, &rep.freqs, rep.grid.points())
                    .expect("matched lengths");
                bl.push(bl_distance_between(
                    &particles,
                    &Frozen(reference.dictionary[c].clone()),
                ));
            }
        },
    )
    .map_err(|e| CliError::from(e).context(format_args!("n = {n}, seed {}", rep.seed)))?;
    if let Some(t) = mismatch {
        return Err(CliError::Numerical(format!(
            "particle sample at t = {t} has no mean-field counterpart"
        )));
    }
    Ok(CompareRow {
        n,
        replica,
        seed: rep.seed,
        sup_dr,
        bl,
    })
}

pub fn run_compare(config: &ExperimentConfig) -> CliResult<CompareReport> {
    let ks = config.k_values()?;
    let [k] = ks[..] else {
        return Err(CliError::Config(format!(
            "compare needs a single K, got {} values",
            ks.len()
        )));
    };
    if config.n_ladder.is_empty() {
        return Err(CliError::Config("compare needs `n_ladder`".into()));
    }
    let reference = meanfield_reference(config, k)?;
    let jobs: Vec<(usize, usize)> = config
        .n_ladder
        .iter()
        .flat_map(|&n| (0..config.seeds).map(move |r| (n, r)))
        .collect();
    let rows: Vec<CompareRow> = jobs
        .par_iter()
        .map(|&(n, r)| particle_row(config, k, n, r, &reference))
        .collect::<CliResult<_>>()?;
    let summary = config
        .n_ladder
        .iter()
        .map(|&n| {
            let mine: Vec<&CompareRow> = rows.iter().filter(|r| r.n == n).collect();
            let sup: Vec<f64> = mine.iter().map(|r| r.sup_dr).collect();
            let median_bl = (0..reference.checkpoints.len())
                .map(|c| median(&mine.iter().map(|r| r.bl[c]).collect::<Vec<_>>()))
                .collect();
            CompareSummary {
                n,
                median_sup_dr: median(&sup),
                median_bl,
            }
        })
        .collect();
    Ok(CompareReport {
        k,
        reference,
        rows,
        summary,
    })
}

impl CompareReport {
    fn metadata(&self, config: &ExperimentConfig) -> Metadata {
        let mut m = Metadata::for_config("compare", config);
        m.push_f64("K", self.k);
        m.push(
            "checkpoints",
            self.reference
                .checkpoints
                .iter()
                .map(|t| num(*t))
                .collect::<Vec<_>>()
                .join(" "),
        );
        m.push("bl_distance", "dictionary lower bound on the bounded Lipschitz distance (proxy, not the exact distance)");
        m.push(
            "meanfield",
            format!(
                "M = {}, m_omega = {}, m_x = {}",
                config.order, config.m_omega, config.m_x
            ),
        );
        m
    }

    fn bl_columns(&self) -> Vec<String> {
        self.reference
            .checkpoints
            .iter()
            .map(|t| format!("bl_t{t}"))
            .collect()
    }

    /// Per-run table.
    pub fn runs_table(&self, config: &ExperimentConfig) -> CsvTable {
        let cols = self.bl_columns();
        let mut header = vec!["n", "replica", "seed", "sup_abs_dr"];
        header.extend(cols.iter().map(String::as_str));
        let mut t = CsvTable::new(self.metadata(config), &header);
        for r in &self.rows {
            let mut row = vec![
                r.n.to_string(),
                r.replica.to_string(),
                r.seed.to_string(),
                num(r.sup_dr),
            ];
            row.extend(r.bl.iter().map(|v| num(*v)));
            t.push_row(row);
        }
        t
    }

    /// Medians over replicas, one row per `n`.
    pub fn summary_table(&self, config: &ExperimentConfig) -> CsvTable {
        let cols = self.bl_columns();
        let mut header = vec!["n", "median_sup_abs_dr", "mc_floor"];
        header.extend(cols.iter().map(String::as_str));
        let mut t = CsvTable::new(self.metadata(config), &header);
        for s in &self.summary {
            let mut row = vec![
                s.n.to_string(),
                num(s.median_sup_dr),
                num(monte_carlo_floor(s.n)),
            ];
            row.extend(s.median_bl.iter().map(|v| num(*v)));
            t.push_row(row);
        }
        t
    }

    /// Mean-field `r(t)` on the sample grid.
    pub fn reference_table(&self, config: &ExperimentConfig) -> CsvTable {
        let mut t = CsvTable::new(self.metadata(config), &["t", "r_global"]);
        for (time, r) in self.reference.times.iter().zip(&self.reference.r) {
            t.push_row(vec![num(*time), num(*r)]);
        }
        t
    }
}

/// Run and write `compare_runs.csv`, `compare_summary.csv` and
/// `compare_meanfield.csv`.
pub fn compare_command(config: &ExperimentConfig) -> CliResult<CompareReport> {
    let report = run_compare(config)?;
    ensure_dir(&config.out)?;
    report
        .runs_table(config)
        .write_file(&config.out.join("compare_runs.csv"))?;
    report
        .summary_table(config)
        .write_file(&config.out.join("compare_summary.csv"))?;
    report
        .reference_table(config)
        .write_file(&config.out.join("compare_meanfield.csv"))?;
    Ok(report)
}
