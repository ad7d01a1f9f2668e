//! `spectra`, `simulate` and `meanfield`; `sweep` and `compare` live in
//! their own modules.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use kgraph::dynamics::{
    integrate_observed, order_parameter, write_phase_sidecar, OscillatorState, Record, SimConfig,
    Trajectory,
};
use kgraph::frequency::FrequencyDistribution;
use kgraph::graphon::Graphon;
use kgraph::meanfield::{
    evolve, graphon_transition_points, init_meanfield, stability_classify, write_checkpoint,
    EvolveOptions,
};
use kgraph::spectra::{analytic_spectrum, nystrom_fourier, nystrom_spectrum, transition_points};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, num, CsvTable, Metadata};
use crate::setup::Replica;

fn single_k(config: &ExperimentConfig, command: &str) -> CliResult<f64> {
    match config.k_values()?[..] {
        [k] => Ok(k),
        ref ks => Err(CliError::Config(format!(
            "{command} needs a single K, got {} values",
            ks.len()
        ))),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::from(e).context(path.display()))
}

/// Per-mode kernel eigenvalues, closed form against Nyström, with the
/// transition points in a footer.
pub fn spectra_table(
    graphon: &Graphon,
    dist: &FrequencyDistribution,
    kmax: usize,
    m: usize,
    meta: Metadata,
) -> CliResult<CsvTable> {
    let analytic = analytic_spectrum(graphon, kmax)?;
    let fourier = analytic
        .fourier
        .clone()
        .ok_or_else(|| CliError::Config(format!("{} has no Fourier modes", graphon.label())))?;
    let nystrom = nystrom_fourier(graphon, m, kmax)?;
    let mut t = CsvTable::new(meta, &["k", "zeta_analytic", "zeta_nystrom"]);
    for (k, (a, b)) in fourier.iter().zip(&nystrom).enumerate() {
        t.push_row(vec![k.to_string(), num(*a), num(*b)]);
    }
    let full = nystrom_spectrum(graphon, m)?;
    let tp = transition_points(&analytic, dist)?;
    let tp_nystrom = transition_points(&full, dist)?;
    t.footer.push(("kc_plus".into(), num(tp.kc_plus)));
    t.footer.push(("kc_minus".into(), num(tp.kc_minus)));
    t.footer
        .push(("kc_plus_nystrom".into(), num(tp_nystrom.kc_plus)));
    t.footer
        .push(("kc_minus_nystrom".into(), num(tp_nystrom.kc_minus)));
    Ok(t)
}

/// Write `spectra.csv`.
pub fn spectra_command(config: &ExperimentConfig) -> CliResult<CsvTable> {
    let mut meta = Metadata::for_config("spectra", config);
    meta.push("kmax", config.kmax);
    meta.push("nystrom_m", config.nystrom);
    meta.push("g0", num(config.freq.g0()));
    let table = spectra_table(
        &config.graphon,
        &config.freq,
        config.kmax,
        config.nystrom,
        meta,
    )?;
    ensure_dir(&config.out)?;
    table.write_file(&config.out.join("spectra.csv"))?;
    Ok(table)
}

/// One particle run per seed: `simulate_<i>.csv` with `t,r,psi`, plus the
/// binary phase sidecar `simulate_<i>.phases` when `snapshots` is set.
pub fn simulate_command(config: &ExperimentConfig) -> CliResult<Vec<CsvTable>> {
    let k = single_k(config, "simulate")?;
    ensure_dir(&config.out)?;
    let mut tables = Vec::new();
    for index in 0..config.seeds {
        let rep = Replica::new(config, config.n, index)?;
        let sim = SimConfig {
            k,
            dt: config.dt,
            t_end: config.t_end,
            record_stride: config.record_stride,
            seed: rep.seed,
        };
        let mut meta = Metadata::for_config("simulate", config);
        meta.push("replica", index);
        meta.push("seed", rep.seed);
        meta.push_f64("K", k);
        if let Ok(tp) = graphon_transition_points(&config.graphon, &config.freq) {
            meta.push_f64("kc_plus_theory", tp.kc_plus);
            meta.push_f64("kc_minus_theory", tp.kc_minus);
        }
        let mut table = CsvTable::new(meta, &["t", "r", "psi"]);
        let mut trajectory = Trajectory::default();
        integrate_observed(
            &rep.initial,
            &rep.freqs,
            rep.coupling.as_ref(),
            &sim,
            |t, phases| {
                let (r, psi) = order_parameter(phases);
                table.push_row(vec![num(t), num(r), num(psi)]);
                if config.snapshots {
                    let state = OscillatorState {
                        phases: phases.to_vec(),
                        time: t,
                    };
                    trajectory.records.push(Record {
                        time: t,
                        state,
                        r,
                        psi,
                    });
                }
            },
        )
        .map_err(|e| CliError::from(e).context(format_args!("K = {k}, seed {}", rep.seed)))?;
        table.write_file(&config.out.join(format!("simulate_{index}.csv")))?;
        if config.snapshots {
            let path = config.out.join(format!("simulate_{index}.phases"));
            let mut w = create(&path)?;
            write_phase_sidecar(&mut w, &trajectory)?;
            w.flush()?;
        }
        tables.push(table);
    }
    Ok(tables)
}

/// Mean-field run: `meanfield.csv` (`t, r_global`, optional `local_<l>`)
/// and the final state in `meanfield.ckpt`.
pub fn meanfield_command(config: &ExperimentConfig) -> CliResult<CsvTable> {
    let k = single_k(config, "meanfield")?;
    let mut state = init_meanfield(
        &config.initial,
        &config.freq,
        &config.graphon,
        config.order,
        config.m_omega,
        config.m_x,
    )?;
    let options = EvolveOptions::new(config.meanfield_dt, config.t_end)
        .record_stride(config.record_stride)
        .record_local(config.local)
        .closure(config.closure);
    let series = evolve(&mut state, k, &options)
        .map_err(|e| CliError::from(e).context(format_args!("K = {k}")))?;

    let mut meta = Metadata::for_config("meanfield", config);
    meta.push_f64("K", k);
    meta.push(
        "lattice",
        format!(
            "M = {}, m_omega = {}, m_x = {}",
            config.order, config.m_omega, config.m_x
        ),
    );
    if let Ok(tp) = graphon_transition_points(&config.graphon, &config.freq) {
        meta.push_f64("kc_plus_theory", tp.kc_plus);
        meta.push_f64("kc_minus_theory", tp.kc_minus);
    }
    if let Ok(s) = stability_classify(&config.graphon, &config.freq, k) {
        meta.push("incoherent_state", format!("{s:?}"));
    }
    if config.local {
        meta.push(
            "local_order",
            "|h(x_l)| divided by the row integral of W at x_l",
        );
    }
    let local_names: Vec<String> = (0..if config.local { config.m_x } else { 0 })
        .map(|l| format!("local_{l}"))
        .collect();
    let mut header = vec!["t", "r_global"];
    header.extend(local_names.iter().map(String::as_str));
    let mut table = CsvTable::new(meta, &header);
    for (i, (t, r)) in series.times.iter().zip(&series.r).enumerate() {
        let mut row = vec![num(*t), num(*r)];
        if let Some(local) = &series.local {
            row.extend(local[i].iter().map(|v| num(*v)));
        }
        table.push_row(row);
    }
    ensure_dir(&config.out)?;
    table.write_file(&config.out.join("meanfield.csv"))?;
    let path = config.out.join("meanfield.ckpt");
    let mut w = create(&path)?;
    write_checkpoint(&mut w, &state.to_checkpoint())?;
    w.flush()?;
    Ok(table)
}
