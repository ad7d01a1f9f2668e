use std::fs;
use std::path::Path;

use kgraph::dynamics::read_phase_sidecar;
use kgraph::meanfield::read_checkpoint;
use kgraph_cli::compare::{monte_carlo_floor, run_compare};
use kgraph_cli::main_with_args;
use kgraph_cli::parse_config;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["kgraph"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

/// Data rows of a CSV (metadata and footer `#` lines dropped).
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn meta(path: &Path, key: &str) -> Option<String> {
    let prefix = format!("# {key}: ");
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
}

#[test]
fn spectra_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let code = run(&[
        "spectra",
        "--graphon",
        "small_world:0.1:0.25",
        "--freq",
        "gaussian:1",
        "--kmax",
        "8",
        "--nystrom",
        "128",
        "--out",
        &out,
    ]);
    assert_eq!(code, 0);
    let csv = dir.path().join("spectra.csv");
    let table = rows(&csv);
    assert_eq!(table[0], ["k", "zeta_analytic", "zeta_nystrom"]);
    assert_eq!(table.len(), 10);
    let z0: f64 = table[1][1].parse().unwrap();
    assert!((z0 - 0.5).abs() < 1e-14);
    // K_c⁺ = 2/(π g(0) ζ₀) with g(0) = (2π)^{-1/2}.
    let g0 = (2.0 * std::f64::consts::PI).powf(-0.5);
    let want = 2.0 / (std::f64::consts::PI * g0 * 0.5);
    let kc: f64 = meta(&csv, "kc_plus").unwrap().parse().unwrap();
    assert!((kc - want).abs() < 1e-10, "{kc} vs {want}");
    assert!(meta(&csv, "kc_minus").is_some());
    assert_eq!(meta(&csv, "command").unwrap(), "spectra");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // config error
    let cfg = write_config(
        dir.path(),
        "graphon = smallworld:0.1:0.25\nfreq = gaussian:1\nK = 1\n",
    );
    assert_eq!(run(&["simulate", "--config", &cfg]), 2);
    assert_eq!(run(&["simulate", "--config", &cfg, "--set", "bogus=1"]), 2);
    assert_eq!(run(&["sweep", "--no-such-flag"]), 2);
    // i/o errors: missing config, output path occupied by a file
    assert_eq!(run(&["sweep", "--config", "/nonexistent/run.cfg"]), 4);
    let blocker = dir.path().join("occupied");
    fs::write(&blocker, "x").unwrap();
    let cfg = write_config(
        dir.path(),
        "graphon = constant:1\nfreq = cauchy:1\nn = 20\nK = 1\nT = 1\n",
    );
    assert_eq!(
        run(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            &blocker.display().to_string()
        ]),
        4
    );
    // numerical failure: under-resolved hard truncation driven hard
    let cfg = write_config(
        dir.path(),
        "graphon = constant:1\nfreq = cauchy:0.5\nK = 200\nT = 50\nM = 2\nm_omega = 16\nm_x = 8\nclosure = hard\nic = wrapped_gaussian:1000000\n",
    );
    let out = dir.path().join("mf").display().to_string();
    assert_eq!(run(&["meanfield", "--config", &cfg, "--out", &out]), 3);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn sweep_outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "graphon = small_world:0.1:0.25\nfreq = cauchy:0.5\ncoupling = random\nn = 150\nK = 1:5:1\nT = 10\nseeds = 2\nseed = 11\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            &a.display().to_string(),
            "--threads",
            "1"
        ]),
        0
    );
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            &b.display().to_string(),
            "--threads",
            "3"
        ]),
        0
    );
    for name in ["sweep.csv", "sweep_replicas.csv", "sweep.gp"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let summary = rows(&a.join("sweep.csv"));
    assert_eq!(summary[0], ["K", "r_inf_mean", "r_inf_std", "n"]);
    assert_eq!(summary.len(), 6);
    assert_eq!(rows(&a.join("sweep_replicas.csv")).len(), 11);
    assert!(fs::read_to_string(a.join("sweep.gp"))
        .unwrap()
        .contains("plot 'sweep.csv'"));
    assert_eq!(
        meta(&a.join("sweep.csv"), "config_sha256").unwrap().len(),
        64
    );
    // A different seed changes the data.
    let c = dir.path().join("c");
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            &c.display().to_string(),
            "--seed",
            "12"
        ]),
        0
    );
    assert_ne!(
        fs::read(a.join("sweep.csv")).unwrap(),
        fs::read(c.join("sweep.csv")).unwrap()
    );
}

#[test]
fn subcritical_sweep_is_not_bracketed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "graphon = constant:1\nfreq = cauchy:0.5\nn = 1000\nK = 0.2:0.6:0.2\nT = 60\nseeds = 2\n",
    );
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            &dir.path().display().to_string()
        ]),
        0
    );
    let csv = dir.path().join("sweep.csv");
    assert_eq!(meta(&csv, "kc_hat").unwrap(), "not bracketed");
    let floor = 5.0 / 1000f64.sqrt();
    for row in &rows(&csv)[1..] {
        let r: f64 = row[1].parse().unwrap();
        assert!(r <= floor, "r_inf {r} above the floor {floor}");
    }
}

#[test]
fn simulate_writes_trajectories_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "graphon = ring_indicator:0.2\nfreq = gaussian:0.5\nn = 40\nK = 3\nT = 2\ndt = 0.1\nrecord_stride = 5\nseeds = 2\nsnapshots = true\nic = wrapped_gaussian:4\n",
    );
    assert_eq!(
        run(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            &dir.path().display().to_string()
        ]),
        0
    );
    for i in 0..2 {
        let table = rows(&dir.path().join(format!("simulate_{i}.csv")));
        assert_eq!(table[0], ["t", "r", "psi"]);
        assert_eq!(table.len(), 1 + 5);
        let bytes = fs::read(dir.path().join(format!("simulate_{i}.phases"))).unwrap();
        let snaps = read_phase_sidecar(bytes.as_slice(), 40).unwrap();
        assert_eq!(snaps.len(), 5);
        let r_last: f64 = table[5][1].parse().unwrap();
        let (c, s) = snaps[4].iter().fold((0.0, 0.0), |(c, s), t| {
            (c + t.cos() / 40.0, s + t.sin() / 40.0)
        });
        assert!((r_last - (c * c + s * s).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn meanfield_writes_series_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "graphon = small_world:0.1:0.25\nfreq = gaussian:1\nK = 2\nT = 0.5\nM = 8\nm_omega = 16\nm_x = 8\nrecord_stride = 10\nlocal = true\nic = wrapped_gaussian:1\n",
    );
    assert_eq!(
        run(&[
            "meanfield",
            "--config",
            &cfg,
            "--out",
            &dir.path().display().to_string()
        ]),
        0
    );
    let table = rows(&dir.path().join("meanfield.csv"));
    assert_eq!(table[0][..3], ["t", "r_global", "local_0"]);
    assert_eq!(table[0].len(), 2 + 8);
    assert_eq!(table.len(), 1 + 6);
    let file = fs::File::open(dir.path().join("meanfield.ckpt")).unwrap();
    let cp = read_checkpoint(std::io::BufReader::new(file)).unwrap();
    assert_eq!((cp.order, cp.m_omega, cp.m_x), (8, 16, 8));
    assert!((cp.time - 0.5).abs() < 1e-12);
}

#[test]
fn compare_is_deterministic_and_free_rotation_matches_to_sampling_noise() {
    let text = "graphon = constant:1\nfreq = gaussian:1\nic = wrapped_gaussian:1\nK = 0\nT = 5\nsample_dt = 0.5\n\
                n_ladder = 500,2000\nseeds = 5\ncheckpoints = 2.5,5\nM = 16\nm_omega = 120\nm_x = 8\n";
    let config = parse_config(text).unwrap();
    let first = run_compare(&config).unwrap();
    let again = run_compare(&config).unwrap();
    assert_eq!(first, again);
    for s in &first.summary {
        let floor = monte_carlo_floor(s.n);
        assert!(
            s.median_sup_dr <= 2.0 * floor,
            "n = {}: {} > 2 × {floor}",
            s.n,
            s.median_sup_dr
        );
        assert_eq!(s.median_bl.len(), 2);
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), text);
    assert_eq!(
        run(&[
            "compare",
            "--config",
            &cfg,
            "--out",
            &dir.path().display().to_string()
        ]),
        0
    );
    let summary = rows(&dir.path().join("compare_summary.csv"));
    assert_eq!(
        summary[0],
        ["n", "median_sup_abs_dr", "mc_floor", "bl_t2.5", "bl_t5"]
    );
    assert_eq!(rows(&dir.path().join("compare_runs.csv")).len(), 1 + 10);
    assert_eq!(
        rows(&dir.path().join("compare_meanfield.csv")).len(),
        1 + 11
    );
}
