//! Matrix–vector products `Σ_j W_ij v_j` for the coupling structures the
//! simulator supports.
//!
//! Inputs carry `width` interleaved values per node (`input[j * width + c]`),
//! so one pass over a matrix row serves the sine and cosine sums of several
//! simulations sharing the graph.

use rayon::prelude::*;

use crate::graphon::{AdjacencyMatrix, Graphon, NodeGrid, WeightMatrix};

pub trait Coupling: Sync {
    fn size(&self) -> usize;

    fn weight(&self, i: usize, j: usize) -> f64;

    /// `out[i * width + c] = Σ_j W_ij input[j * width + c]`.
    fn apply(&self, input: &[f64], width: usize, out: &mut [f64]);
}

const LANES: usize = 4;

/// Dot product of `weights` with the interleaved columns of `input`.
///
/// Accumulates in four lanes by `j mod 4` and combines them as
/// `(a0 + a1) + (a2 + a3)`; every coupling that uses this kernel therefore
/// rounds identically for identical weights.
fn weighted_row(weights: &[f64], input: &[f64], width: usize, acc: &mut [f64], out: &mut [f64]) {
    acc.fill(0.0);
    for (j, w) in weights.iter().enumerate() {
        let lane = &mut acc[(j % LANES) * width..(j % LANES + 1) * width];
        let x = &input[j * width..(j + 1) * width];
        for (a, v) in lane.iter_mut().zip(x) {
            *a += w * v;
        }
    }
    for (c, o) in out.iter_mut().enumerate() {
        *o = (acc[c] + acc[width + c]) + (acc[2 * width + c] + acc[3 * width + c]);
    }
}

impl Coupling for WeightMatrix {
    fn size(&self) -> usize {
        self.n()
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }

    fn apply(&self, input: &[f64], width: usize, out: &mut [f64]) {
        out.par_chunks_mut(width).enumerate().for_each_init(
            || vec![0.0; LANES * width],
            |acc, (i, o)| weighted_row(self.row(i), input, width, acc, o),
        );
    }
}

/// All-to-all unit weights (`W ≡ 1`), the classical model.
///
/// Every row of the all-ones matrix gives the same sum, so it is computed
/// once with the dense kernel. The result is bit-identical to applying an
/// all-ones [`WeightMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompleteGraph {
    n: usize,
}

impl CompleteGraph {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl Coupling for CompleteGraph {
    fn size(&self) -> usize {
        self.n
    }

    fn weight(&self, _i: usize, _j: usize) -> f64 {
        1.0
    }

    fn apply(&self, input: &[f64], width: usize, out: &mut [f64]) {
        let ones = vec![1.0; self.n];
        let mut acc = vec![0.0; LANES * width];
        let mut total = vec![0.0; width];
        weighted_row(&ones, input, width, &mut acc, &mut total);
        for o in out.chunks_mut(width) {
            o.copy_from_slice(&total);
        }
    }
}

/// Circulant weights `W_ij = c[(j − i) mod n]`.
///
/// A ring kernel on the uniform grid is circulant, so only the first row is
/// stored; this keeps `n` in the tens of thousands within memory.
///
/// When the row is symmetric and constant on a few runs of offsets, as for
/// the small-world and ring-indicator kernels, each row sum is a short
/// combination of window sums taken from prefix sums, O(n) per product
/// instead of O(n²). Other rows use the dense kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantWeights {
    first_row: Vec<f64>,
    bands: Option<Vec<Band>>,
}

/// Offsets `lo..=hi` on both sides of the diagonal sharing one weight.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Band {
    lo: usize,
    hi: usize,
    value: f64,
}

/// Bands are used when there are at most `n / BAND_RATIO` of them.
const BAND_RATIO: usize = 16;

fn find_bands(row: &[f64]) -> Option<Vec<Band>> {
    let n = row.len();
    let half = n / 2;
    if n < BAND_RATIO || (1..=half).any(|d| row[d] != row[n - d]) {
        return None;
    }
    let mut bands: Vec<Band> = Vec::new();
    for (d, &value) in row[..=half].iter().enumerate() {
        match bands.last_mut() {
            Some(band) if band.value == value => band.hi = d,
            _ => bands.push(Band {
                lo: d,
                hi: d,
                value,
            }),
        }
    }
    bands.retain(|b| b.value != 0.0);
    (bands.len() <= n / BAND_RATIO).then_some(bands)
}

impl CirculantWeights {
    /// Sample a ring kernel at the offsets of the uniform grid `j/n`.
    /// Entries agree with [`build_weighted_graph`](crate::graphon::build_weighted_graph)
    /// on the uniform grid up to rounding of the grid differences.
    pub fn from_ring(graphon: &Graphon, grid: &NodeGrid) -> crate::Result<Self> {
        if !graphon.is_ring() || grid.scheme() != crate::graphon::GridScheme::Uniform {
            return Err(crate::Error::InvalidArgument(
                "circulant weights need a ring kernel on the uniform grid".into(),
            ));
        }
        let n = grid.len();
        let first_row = (0..n)
            .map(|k| graphon.value(0.0, k.min(n - k) as f64 / n as f64))
            .collect();
        Ok(Self::from_first_row(first_row))
    }

    pub fn from_first_row(first_row: Vec<f64>) -> Self {
        let bands = find_bands(&first_row);
        Self { first_row, bands }
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    /// Whether products go through window sums rather than the dense kernel.
    pub fn is_banded(&self) -> bool {
        self.bands.is_some()
    }

    /// Dense copy, for cross-checks and file output.
    pub fn to_weight_matrix(&self) -> crate::Result<WeightMatrix> {
        let n = self.first_row.len();
        let entries = (0..n * n)
            .map(|idx| self.weight(idx / n, idx % n))
            .collect();
        WeightMatrix::from_entries(n, entries)
    }

    fn apply_dense(&self, input: &[f64], width: usize, out: &mut [f64]) {
        let n = self.first_row.len();
        out.par_chunks_mut(width).enumerate().for_each_init(
            || (vec![0.0; n], vec![0.0; LANES * width]),
            |(row, acc), (i, o)| {
                // Row i is the first row rotated right by i.
                row[..i].copy_from_slice(&self.first_row[n - i..]);
                row[i..].copy_from_slice(&self.first_row[..n - i]);
                weighted_row(row, input, width, acc, o);
            },
        );
    }

    fn apply_banded(&self, bands: &[Band], input: &[f64], width: usize, out: &mut [f64]) {
        let n = self.first_row.len();
        // prefix[k] = Σ_{m<k} input[m mod n] for k ≤ 3n, so that every
        // window i ± d with d ≤ n/2 is a difference of two entries after
        // shifting indices by n.
        let mut prefix = vec![0.0; (3 * n + 1) * width];
        for k in 0..3 * n {
            let (head, tail) = prefix.split_at_mut((k + 1) * width);
            let src = &input[(k % n) * width..(k % n + 1) * width];
            for ((p, prev), x) in tail[..width].iter_mut().zip(&head[k * width..]).zip(src) {
                *p = prev + x;
            }
        }
        let window =
            |from: usize, to: usize, c: usize| prefix[to * width + c] - prefix[from * width + c];
        let half = n.is_multiple_of(2).then_some(n / 2);
        out.par_chunks_mut(width).enumerate().for_each(|(i, o)| {
            let centre = i + n;
            for (c, o) in o.iter_mut().enumerate() {
                let mut total = 0.0;
                for b in bands {
                    let mut sum = window(centre + b.lo, centre + b.hi + 1, c)
                        + window(centre - b.hi, centre - b.lo + 1, c);
                    if b.lo == 0 {
                        sum -= input[i * width + c];
                    }
                    if half == Some(b.hi) {
                        sum -= input[((i + b.hi) % n) * width + c];
                    }
                    total += b.value * sum;
                }
                *o = total;
            }
        });
    }
}

impl Coupling for CirculantWeights {
    fn size(&self) -> usize {
        self.first_row.len()
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        let n = self.first_row.len();
        self.first_row[(j + n - i) % n]
    }

    fn apply(&self, input: &[f64], width: usize, out: &mut [f64]) {
        match &self.bands {
            Some(bands) => self.apply_banded(bands, input, width, out),
            None => self.apply_dense(input, width, out),
        }
    }
}

const BLOCK: usize = 8;

impl Coupling for AdjacencyMatrix {
    fn size(&self) -> usize {
        self.n()
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        if self.get(i, j) {
            1.0
        } else {
            0.0
        }
    }

    /// Method of four Russians: for each block of 8 columns, tabulate the
    /// 256 subset sums of the block's inputs, then every row adds one table
    /// entry per block. This cuts the work of a 0/1 product about eightfold.
    ///
    /// Blocks are the outer loop so each table is used by a whole run of
    /// rows while it is still in cache. Every row still adds its blocks in
    /// increasing order, so the result does not depend on the row split.
    fn apply(&self, input: &[f64], width: usize, out: &mut [f64]) {
        let n = self.n();
        let blocks = n.div_ceil(BLOCK);
        let rows_per_task = n.div_ceil(rayon::current_num_threads()).max(512);
        out.par_chunks_mut(rows_per_task * width)
            .enumerate()
            .for_each_init(
                || vec![0.0; 256 * width],
                |table, (task, chunk)| {
                    chunk.fill(0.0);
                    let first_row = task * rows_per_task;
                    for b in 0..blocks {
                        fill_subset_sums(table, input, width, b, n);
                        let bytes = &self.block_column(b)[first_row..];
                        for (o, &byte) in chunk.chunks_exact_mut(width).zip(bytes) {
                            let byte = byte as usize;
                            if byte != 0 {
                                for (a, v) in
                                    o.iter_mut().zip(&table[byte * width..(byte + 1) * width])
                                {
                                    *a += v;
                                }
                            }
                        }
                    }
                },
            );
    }
}

/// `table[mask] = Σ_{bit k of mask} input[8b + k]` over the 256 masks.
fn fill_subset_sums(table: &mut [f64], input: &[f64], width: usize, b: usize, n: usize) {
    table[..width].fill(0.0);
    for mask in 1usize..256 {
        let low = mask.trailing_zeros() as usize;
        let j = b * BLOCK + low;
        let prev = mask & (mask - 1);
        let (head, tail) = table.split_at_mut(mask * width);
        let dst = &mut tail[..width];
        let src = &head[prev * width..(prev + 1) * width];
        if j < n {
            for ((d, s), x) in dst
                .iter_mut()
                .zip(src)
                .zip(&input[j * width..(j + 1) * width])
            {
                *d = s + x;
            }
        } else {
            dst.copy_from_slice(src);
        }
    }
}

/// Reference product straight from [`Coupling::weight`], in plain `j` order.
pub fn apply_reference(coupling: &dyn Coupling, input: &[f64], width: usize) -> Vec<f64> {
    let n = coupling.size();
    let mut out = vec![0.0; n * width];
    for i in 0..n {
        for j in 0..n {
            let w = coupling.weight(i, j);
            for c in 0..width {
                out[i * width + c] += w * input[j * width + c];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{build_weighted_graph, make_grid, sample_random_graph, GridScheme};
    use proptest::prelude::*;
    use rand::Rng;

    fn inputs(n: usize, width: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        (0..n * width)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn complete_graph_is_bit_identical_to_dense_ones() {
        let n = 37;
        let dense = WeightMatrix::from_entries(n, vec![1.0; n * n]).unwrap();
        let x = inputs(n, 6, 1);
        let mut a = vec![0.0; n * 6];
        let mut b = vec![0.0; n * 6];
        dense.apply(&x, 6, &mut a);
        CompleteGraph::new(n).apply(&x, 6, &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn circulant_is_bit_identical_to_its_dense_copy() {
        let g = Graphon::ring_exponential(3.0).unwrap();
        let grid = make_grid(50, GridScheme::Uniform, None).unwrap();
        let circ = CirculantWeights::from_ring(&g, &grid).unwrap();
        let dense = circ.to_weight_matrix().unwrap();
        let x = inputs(50, 2, 2);
        let mut a = vec![0.0; 100];
        let mut b = vec![0.0; 100];
        circ.apply(&x, 2, &mut a);
        dense.apply(&x, 2, &mut b);
        assert_eq!(a, b);
        // and agrees with the grid-evaluated matrix up to rounding
        let built = build_weighted_graph(&g, &grid);
        assert!(close(built.entries(), dense.entries(), 1e-15));
    }

    #[test]
    fn circulant_indicator_matches_grid_evaluation_exactly() {
        let g = Graphon::small_world(0.1, 0.25).unwrap();
        let grid = make_grid(64, GridScheme::Uniform, None).unwrap();
        let circ = CirculantWeights::from_ring(&g, &grid).unwrap();
        assert_eq!(
            circ.to_weight_matrix().unwrap(),
            build_weighted_graph(&g, &grid)
        );
    }

    #[test]
    fn banded_circulant_matches_reference() {
        for (spec, n) in [
            (Graphon::small_world(0.1, 0.25), 64),
            (Graphon::ring_indicator(0.2), 65),
        ] {
            let g = spec.unwrap();
            let grid = make_grid(n, GridScheme::Uniform, None).unwrap();
            let circ = CirculantWeights::from_ring(&g, &grid).unwrap();
            assert!(circ.is_banded());
            let x = inputs(n, 3, 5);
            let mut got = vec![0.0; n * 3];
            circ.apply(&x, 3, &mut got);
            assert!(close(&got, &apply_reference(&circ, &x, 3), 1e-12));
        }
        let exp = CirculantWeights::from_ring(
            &Graphon::ring_exponential(3.0).unwrap(),
            &make_grid(64, GridScheme::Uniform, None).unwrap(),
        )
        .unwrap();
        assert!(!exp.is_banded());
    }

    #[test]
    fn circulant_rejects_non_ring_setups() {
        let grid = make_grid(10, GridScheme::IidUniform, Some(1)).unwrap();
        assert!(CirculantWeights::from_ring(&Graphon::constant(0.5).unwrap(), &grid).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn banded_product_matches_reference(n in 48usize..200, width in 1usize..4, cut in 0.0f64..0.5, seed in any::<u64>()) {
            let half = n / 2;
            let edge = (cut * n as f64) as usize;
            let row: Vec<f64> = (0..n).map(|k| if k.min(n - k) <= edge { 0.9 } else if k.min(n - k) == half { 0.3 } else { 0.1 }).collect();
            let circ = CirculantWeights::from_first_row(row);
            prop_assert!(circ.is_banded());
            let x = inputs(n, width, seed);
            let mut got = vec![0.0; n * width];
            circ.apply(&x, width, &mut got);
            prop_assert!(close(&got, &apply_reference(&circ, &x, width), 1e-12));
        }

        #[test]
        fn adjacency_product_matches_reference(n in 1usize..150, width in 1usize..5, seed in any::<u64>()) {
            let grid = make_grid(n, GridScheme::Uniform, None).unwrap();
            let a = sample_random_graph(&Graphon::constant(0.4).unwrap(), &grid, seed).unwrap();
            let x = inputs(n, width, seed ^ 1);
            let mut got = vec![0.0; n * width];
            a.apply(&x, width, &mut got);
            prop_assert!(close(&got, &apply_reference(&a, &x, width), 1e-12));
        }

        #[test]
        fn dense_product_matches_reference(n in 1usize..60, width in 1usize..5, seed in any::<u64>()) {
            let grid = make_grid(n, GridScheme::IidUniform, Some(seed)).unwrap();
            let w = build_weighted_graph(&Graphon::ring_exponential(2.0).unwrap(), &grid);
            let x = inputs(n, width, seed ^ 2);
            let mut got = vec![0.0; n * width];
            w.apply(&x, width, &mut got);
            prop_assert!(close(&got, &apply_reference(&w, &x, width), 1e-12));
        }
    }
}
