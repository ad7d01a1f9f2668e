//! Metadata headers, CSV rows and plot scripts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use kgraph::textio::fmt_f64;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// `# key: value` lines written ahead of every CSV header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("tool", format!("kgraph-cli {}", env!("CARGO_PKG_VERSION")));
        m.push("core", format!("kgraph {}", kgraph::VERSION));
        m.push("command", command);
        m
    }

    /// Metadata for a config-driven run: the config hash plus the specs.
    pub fn for_config(command: &str, config: &ExperimentConfig) -> Self {
        let mut m = Self::new(command);
        m.push("config_sha256", config_hash(config));
        m.push("graphon", &config.graphon_spec);
        m.push("freq", &config.freq_spec);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        // Newlines would break the header block.
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.entries.push((key.to_owned(), value));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, fmt_f64(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// SHA-256 of the canonical config with the output directory left out, so
/// the same experiment written to two places carries the same hash.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical: String = config
        .canonical()
        .lines()
        .filter(|l| !l.starts_with("out ="))
        .map(|l| format!("{l}\n"))
        .collect();
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// A CSV table: metadata block, mandatory header row, then rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub metadata: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// `# key: value` lines after the last row.
    pub footer: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new(metadata: Metadata, columns: &[&str]) -> Self {
        Self {
            metadata,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        self.metadata.write(out)?;
        writeln!(
            out,
            "{}",
            self.columns
                .iter()
                .map(|c| quote(c))
                .collect::<Vec<_>>()
                .join(",")
        )?;
        for row in &self.rows {
            writeln!(
                out,
                "{}",
                row.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",")
            )?;
        }
        for (k, v) in &self.footer {
            writeln!(out, "# {k}: {v}")?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> CliResult<()> {
        let file = fs::File::create(path).map_err(|e| CliError::from(e).context(path.display()))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Quote a field when it holds a comma, quote or line break.
fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

pub fn num(x: f64) -> String {
    fmt_f64(x)
}

/// Create `dir` (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::from(e).context(dir.display()))
}

/// A gnuplot script plotting `r∞` against `K` from `csv_name` (relative to
/// the script's directory), with the onset `K_c⁺` drawn as a vertical line
/// when it is finite.
pub fn plot_script(csv_name: &str, png_name: &str, kc_plus: f64, kc_hat: Option<f64>) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot script; run as `gnuplot sweep.gp` from this directory\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{png_name}'\n"));
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile commentschars '#'\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set xlabel 'K'\nset ylabel 'r_inf'\nset key top left\nset grid\n");
    let mut extra = String::new();
    if kc_plus.is_finite() {
        s.push_str(&format!("kc_plus = {}\n", fmt_f64(kc_plus)));
        s.push_str("set arrow 1 from kc_plus, graph 0 to kc_plus, graph 1 nohead dashtype 2 linecolor rgb 'red'\n");
        extra.push_str(", NaN with lines dashtype 2 linecolor rgb 'red' title 'theory K_c^+'");
    }
    if let Some(k) = kc_hat {
        s.push_str(&format!("kc_hat = {}\n", fmt_f64(k)));
        s.push_str("set arrow 2 from kc_hat, graph 0 to kc_hat, graph 1 nohead dashtype 3 linecolor rgb 'blue'\n");
        extra.push_str(", NaN with lines dashtype 3 linecolor rgb 'blue' title 'estimated K_c'");
    }
    s.push_str(&format!(
        "plot '{csv_name}' using 1:2:3 with yerrorlines pointtype 7 title 'r_inf (mean ± sd over seeds)'{extra}\n"
    ));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut meta = Metadata::new("test");
        meta.push("note", "a\nb");
        let mut t = CsvTable::new(meta, &["k", "value"]);
        t.push_row(vec!["1".into(), num(0.5)]);
        t.push_row(vec!["x,y".into(), "q\"".into()]);
        t.footer.push(("kc_plus".into(), "2".into()));
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tool: kgraph-cli"));
        assert!(lines.contains(&"# note: a b"));
        assert!(lines.contains(&"k,value"));
        assert!(lines.contains(&"1,5.0000000000000000e-1"));
        assert!(lines.contains(&"\"x,y\",\"q\"\"\""));
        assert_eq!(*lines.last().unwrap(), "# kc_plus: 2");
    }

    #[test]
    fn plot_script_is_deterministic_and_relative() {
        let a = plot_script("sweep.csv", "sweep.png", 2.0, Some(2.1));
        assert_eq!(a, plot_script("sweep.csv", "sweep.png", 2.0, Some(2.1)));
        assert!(a.contains("plot 'sweep.csv'"));
        assert!(a.contains("kc_plus = 2.0000000000000000e0"));
        assert!(!plot_script("s.csv", "s.png", f64::INFINITY, None).contains("kc_plus"));
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = crate::config::parse_config("graphon = constant:1\nfreq = cauchy:1").unwrap();
        let h = config_hash(&a);
        a.out = "/elsewhere".into();
        assert_eq!(h, config_hash(&a));
        a.n = 7;
        assert_ne!(h, config_hash(&a));
        assert_eq!(h.len(), 64);
    }
}
