use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::textio::fmt_f64;

const MAGIC: &str = "kgraph-meanfield-checkpoint";

/// Raw contents of a mean-field checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub order: usize,
    pub m_omega: usize,
    pub m_x: usize,
    pub time: f64,
    pub coeffs: Vec<Complex64>,
}

/// Text header followed by the coefficients as little-endian `f64`
/// (re, im) pairs:
///
/// ```text
/// kgraph-meanfield-checkpoint
/// M <order>
/// m_omega <m_ω>
/// m_x <m_x>
/// time <t>
/// data
/// <binary>
/// ```
pub fn write_checkpoint<W: Write>(mut out: W, cp: &Checkpoint) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "M {}", cp.order)?;
    writeln!(out, "m_omega {}", cp.m_omega)?;
    writeln!(out, "m_x {}", cp.m_x)?;
    writeln!(out, "time {}", fmt_f64(cp.time))?;
    writeln!(out, "data")?;
    for c in &cp.coeffs {
        out.write_all(&c.re.to_le_bytes())?;
        out.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(mut input: R) -> Result<Checkpoint> {
    let mut fields = Vec::new();
    for line_no in 1..=6 {
        let mut line = String::new();
        input.read_line(&mut line)?;
        fields.push((line_no, line.trim_end().to_owned()));
    }
    let bad = |line: usize, message: String| Error::Parse { line, message };
    if fields[0].1 != MAGIC {
        return Err(bad(1, format!("expected {MAGIC:?}")));
    }
    let value = |idx: usize, key: &str| -> Result<&str> {
        let (ln, text) = &fields[idx];
        text.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| bad(*ln, format!("expected `{key} <value>`, found {text:?}")))
    };
    let int = |idx: usize, key: &str| -> Result<usize> {
        value(idx, key)?
            .parse()
            .map_err(|_| bad(fields[idx].0, format!("bad {key}")))
    };
    let order = int(1, "M")?;
    let m_omega = int(2, "m_omega")?;
    let m_x = int(3, "m_x")?;
    let time = crate::textio::parse_f64(value(4, "time")?, 5)?;
    if fields[5].1 != "data" {
        return Err(bad(6, "expected `data`".into()));
    }
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    let count = m_omega * m_x * (order + 1);
    if body.len() != count * 16 {
        return Err(bad(
            7,
            format!(
                "binary block holds {} bytes, expected {}",
                body.len(),
                count * 16
            ),
        ));
    }
    let coeffs = body
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(Checkpoint {
        order,
        m_omega,
        m_x,
        time,
        coeffs,
    })
}
