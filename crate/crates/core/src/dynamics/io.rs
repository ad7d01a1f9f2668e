use std::io::{Read, Write};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::textio::fmt_f64;

/// CSV with header `t,r,psi`, one row per record.
pub fn write_trajectory_csv<W: Write>(mut out: W, trajectory: &Trajectory) -> Result<()> {
    writeln!(out, "t,r,psi")?;
    for rec in &trajectory.records {
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(rec.time),
            fmt_f64(rec.r),
            fmt_f64(rec.psi)
        )?;
    }
    Ok(())
}

/// Binary phase snapshots: a little-endian `u64` record count, then `n`
/// little-endian `f64` phases per record.
pub fn write_phase_sidecar<W: Write>(mut out: W, trajectory: &Trajectory) -> Result<()> {
    out.write_all(&(trajectory.records.len() as u64).to_le_bytes())?;
    for rec in &trajectory.records {
        for p in &rec.state.phases {
            out.write_all(&p.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a sidecar written by [`write_phase_sidecar`] for `n` oscillators.
pub fn read_phase_sidecar<R: Read>(mut input: R, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut head = [0u8; 8];
    input.read_exact(&mut head)?;
    let count = u64::from_le_bytes(head) as usize;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if n == 0 || body.len() != count * n * 8 {
        return Err(Error::Parse {
            line: 0,
            message: format!(
                "sidecar holds {} bytes, expected {count} records of {n} phases",
                body.len()
            ),
        });
    }
    Ok(body
        .chunks_exact(n * 8)
        .map(|rec| {
            rec.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect()
        })
        .collect())
}
