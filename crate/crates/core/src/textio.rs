//! Plain-text number formatting shared by every file format in the crate.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which is
//! enough for an exact `f64` round trip.

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(token: &str, line: usize) -> Result<f64> {
    match token {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => token.parse::<f64>().map_err(|e| Error::Parse {
            line,
            message: format!("bad number {token:?}: {e}"),
        }),
    }
}

/// Iterate over the non-empty lines of `text` with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parse the `n` + `n` rows layout used by weight and adjacency files.
pub(crate) fn parse_square(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut lines = content_lines(text);
    let (l0, head) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty matrix file".into(),
    })?;
    let n: usize = head.parse().map_err(|_| Error::Parse {
        line: l0,
        message: format!("expected matrix size, found {head:?}"),
    })?;
    if n == 0 {
        return Err(Error::Parse {
            line: l0,
            message: "matrix size must be positive".into(),
        });
    }
    let mut entries = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (ln, line) in lines {
        if rows == n {
            return Err(Error::Parse {
                line: ln,
                message: "trailing rows after matrix".into(),
            });
        }
        let before = entries.len();
        for tok in line.split_whitespace() {
            entries.push(parse_f64(tok, ln)?);
        }
        if entries.len() - before != n {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected {n} entries, found {}", entries.len() - before),
            });
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("expected {n} rows, found {rows}"),
        });
    }
    Ok((n, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back = parse_f64(&fmt_f64(x), 1).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn square_parser_reports_line_numbers() {
        let err = parse_square("2\n1 2\n3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
