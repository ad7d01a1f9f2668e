use std::fmt::Write as _;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;
use crate::textio::{content_lines, fmt_f64, parse_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    /// `ξ_i = i/n`, `i = 1..=n`.
    Uniform,
    /// Independent `Uniform(0, 1)` draws, sorted ascending.
    IidUniform,
}

/// Positions `ξ_i ∈ [0, 1]` of the oscillators on the graphon domain.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrid {
    points: Vec<f64>,
    scheme: GridScheme,
    seed: Option<u64>,
}

pub fn make_grid(n: usize, scheme: GridScheme, seed: Option<u64>) -> Result<NodeGrid> {
    if n == 0 {
        return invalid("grid size must be at least 1");
    }
    let points = match (scheme, seed) {
        (GridScheme::Uniform, None) => (1..=n).map(|i| i as f64 / n as f64).collect(),
        (GridScheme::IidUniform, Some(s)) => {
            let mut rng = rng_from_seed(s);
            let mut pts: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            pts.sort_by(f64::total_cmp);
            pts
        }
        (GridScheme::Uniform, Some(_)) => return invalid("uniform grids take no seed"),
        (GridScheme::IidUniform, None) => return invalid("iid_uniform grids require a seed"),
    };
    Ok(NodeGrid {
        points,
        scheme,
        seed,
    })
}

impl NodeGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 24);
        for p in &self.points {
            let _ = writeln!(s, "{}", fmt_f64(*p));
        }
        s
    }

    /// Parse one coordinate per line. The scheme is recorded as uniform when
    /// the points are exactly `i/n`, and as iid otherwise.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (ln, line) in content_lines(text) {
            let v = parse_f64(line, ln)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("grid point {v} outside [0, 1]"),
                });
            }
            points.push(v);
        }
        if points.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "empty grid file".into(),
            });
        }
        let n = points.len();
        let uniform = points
            .iter()
            .enumerate()
            .all(|(i, &p)| p == (i + 1) as f64 / n as f64);
        let scheme = if uniform {
            GridScheme::Uniform
        } else {
            GridScheme::IidUniform
        };
        Ok(Self {
            points,
            scheme,
            seed: None,
        })
    }
}
