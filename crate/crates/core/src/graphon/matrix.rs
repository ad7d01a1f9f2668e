use std::fmt::Write as _;

use rand::Rng;

use super::{Graphon, NodeGrid};
use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;
use crate::textio::{fmt_f64, parse_square};

/// Dense symmetric weights `W_ij = W(ξ_i, ξ_j)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl WeightMatrix {
    /// Wrap a row-major `n × n` array. Entries must be finite and symmetric.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return invalid("weight matrix must be non-empty");
        }
        if entries.len() != n * n {
            return invalid(format!("expected {} entries, got {}", n * n, entries.len()));
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
            return invalid(format!("non-finite weight {v}"));
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i * n + j] != entries[j * n + i] {
                    return invalid(format!("weights not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn to_text(&self) -> String {
        matrix_text(self.n, self.entries.iter().map(|v| fmt_f64(*v)))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (n, entries) = parse_square(text)?;
        Self::from_entries(n, entries).map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })
    }
}

/// `W_n = G(W, X_n)`: evaluate the graphon at every pair of grid points.
pub fn build_weighted_graph(graphon: &Graphon, grid: &NodeGrid) -> WeightMatrix {
    let x = grid.points();
    let n = x.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = graphon.value(x[i], x[j]);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    WeightMatrix { n, entries }
}

/// Symmetric 0/1 matrix with zero diagonal, stored as packed bit rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    /// `block_bytes[b * n + i]` holds `A_ij` for `j` in `8b..8b + 8`, bit
    /// `j − 8b`: the rows of one 8-column block stored contiguously.
    block_bytes: Vec<u8>,
    seed: Option<u64>,
}

impl AdjacencyMatrix {
    fn empty(n: usize, seed: Option<u64>) -> Self {
        let words_per_row = n.div_ceil(64);
        Self {
            n,
            words_per_row,
            bits: vec![0; n * words_per_row],
            block_bytes: Vec::new(),
            seed,
        }
    }

    /// Fill `block_bytes` once all edges are set.
    fn finish(mut self) -> Self {
        let n = self.n;
        let blocks = n.div_ceil(8);
        let mut bytes = vec![0u8; blocks * n];
        for i in 0..n {
            for (w, word) in self.row_words(i).iter().enumerate() {
                for (k, byte) in word.to_le_bytes().into_iter().enumerate() {
                    let b = 8 * w + k;
                    if b < blocks {
                        bytes[b * n + i] = byte;
                    }
                }
            }
        }
        self.block_bytes = bytes;
        self
    }

    /// Row bytes of the 8-column block `b`, one per row: bit `k` of entry
    /// `i` is `A_{i, 8b + k}`.
    pub fn block_column(&self, b: usize) -> &[u8] {
        &self.block_bytes[b * self.n..(b + 1) * self.n]
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words_per_row + j / 64] |= 1 << (j % 64);
    }

    /// Build from a row-major 0/1 array; it must be symmetric with zero diagonal.
    pub fn from_dense(n: usize, entries: &[u8]) -> Result<Self> {
        if n == 0 {
            return invalid("adjacency matrix must be non-empty");
        }
        if entries.len() != n * n {
            return invalid(format!("expected {} entries, got {}", n * n, entries.len()));
        }
        let mut a = Self::empty(n, None);
        for i in 0..n {
            for j in 0..n {
                let v = entries[i * n + j];
                if v > 1 {
                    return invalid(format!("adjacency entry {v} at ({i}, {j}) is not 0/1"));
                }
                if v != entries[j * n + i] {
                    return invalid(format!("adjacency not symmetric at ({i}, {j})"));
                }
                if i == j && v != 0 {
                    return invalid(format!("self-loop at node {i}"));
                }
                if v == 1 {
                    a.set(i, j);
                }
            }
        }
        Ok(a.finish())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words_per_row + j / 64] >> (j % 64)) & 1 == 1
    }

    /// Packed row `i`: bit `j % 64` of word `j / 64` is `A_ij`.
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_words(i)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Fraction of unordered pairs that are edges.
    pub fn edge_density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let pairs = self.n * (self.n - 1) / 2;
        self.edge_count() as f64 / pairs as f64
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if self.get(i, j) {
                    out[i * n + j] = 1.0;
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let n = self.n;
        let cells = (0..n * n).map(|k| if self.get(k / n, k % n) { "1" } else { "0" }.to_owned());
        matrix_text(n, cells)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (n, entries) = parse_square(text)?;
        let mut bytes = Vec::with_capacity(entries.len());
        for v in entries {
            if v == 0.0 {
                bytes.push(0);
            } else if v == 1.0 {
                bytes.push(1);
            } else {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("adjacency entry {v} is not 0/1"),
                });
            }
        }
        Self::from_dense(n, &bytes).map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })
    }
}

fn matrix_text(n: usize, cells: impl Iterator<Item = String>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{n}");
    for (k, c) in cells.enumerate() {
        s.push_str(&c);
        s.push(if (k + 1) % n == 0 { '\n' } else { ' ' });
    }
    s
}

/// W-random graph: each pair `{i, j}`, `i < j`, is an edge independently
/// with probability `W(ξ_i, ξ_j)`. Pairs are visited row by row over the
/// upper triangle, one uniform draw each.
pub fn sample_random_graph(
    graphon: &Graphon,
    grid: &NodeGrid,
    seed: u64,
) -> Result<AdjacencyMatrix> {
    let x = grid.points();
    let n = x.len();
    let mut rng = rng_from_seed(seed);
    let mut a = AdjacencyMatrix::empty(n, Some(seed));
    for i in 0..n {
        for j in i + 1..n {
            let p = graphon.value(x[i], x[j]);
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!(
                    "graphon value {p} at ({}, {}) is not a probability",
                    x[i], x[j]
                ));
            }
            if rng.random::<f64>() < p {
                a.set(i, j);
                a.set(j, i);
            }
        }
    }
    Ok(a.finish())
}

/// `‖A‖_{2,n} = sqrt(n⁻² Σ A_ij²)` for a row-major `n × n` array.
pub fn norm_2n(entries: &[f64]) -> Result<f64> {
    if entries.is_empty() {
        return invalid("norm of an empty matrix");
    }
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n * n != entries.len() {
        return invalid(format!(
            "{} entries do not form a square matrix",
            entries.len()
        ));
    }
    Ok((entries.iter().map(|a| a * a).sum::<f64>()).sqrt() / n as f64)
}

/// `‖v‖_{1,n} = sqrt(n⁻¹ Σ v_i²)`.
pub fn norm_1n(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return invalid("norm of an empty vector");
    }
    Ok((v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt())
}
