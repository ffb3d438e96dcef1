use std::io::{BufRead, Read, Write};

use super::{RadialField, RadialGrid};
use crate::error::{LabError, Result};

const MAGIC: &[u8; 4] = b"RADF";

fn io_err(e: std::io::Error) -> LabError {
    LabError::Format(e.to_string())
}

/// Two columns `r u(r)`, one node per line, shortest round-trip formatting.
pub fn write_text(u: &RadialField, mut out: impl Write) -> Result<()> {
    writeln!(out, "# r u").map_err(io_err)?;
    for (r, v) in u.grid.nodes().iter().zip(&u.values) {
        writeln!(out, "{r:e} {v:e}").map_err(io_err)?;
    }
    Ok(())
}

pub fn read_text(input: impl BufRead) -> Result<RadialField> {
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let mut next = || -> Result<f64> {
            cols.next()
                .ok_or_else(|| LabError::Format(format!("line {}: expected two columns", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| LabError::Format(format!("line {}: {e}", lineno + 1)))
        };
        radii.push(next()?);
        values.push(next()?);
    }
    let n = radii.len();
    if n < RadialGrid::MIN_NODES || radii[0] != 0.0 {
        return Err(LabError::Format("expected a uniform grid starting at r = 0".into()));
    }
    let grid = RadialGrid::new(radii[n - 1], n)?;
    let h = grid.h();
    if radii.iter().enumerate().any(|(i, &r)| (r - grid.r(i)).abs() > 1e-9 * h) {
        return Err(LabError::Format("radii are not uniformly spaced".into()));
    }
    RadialField::new(grid, values)
}

/// `RADF`, node count (u64), R, then the values, all little-endian.
pub fn write_binary(u: &RadialField, mut out: impl Write) -> Result<()> {
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&(u.grid.n as u64).to_le_bytes()).map_err(io_err)?;
    out.write_all(&u.grid.rmax.to_le_bytes()).map_err(io_err)?;
    for v in &u.values {
        out.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_binary(mut input: impl Read) -> Result<RadialField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(LabError::Format("bad magic, not a radial field frame".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word).map_err(io_err)?;
    let n = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word).map_err(io_err)?;
    let grid = RadialGrid::new(f64::from_le_bytes(word), n)?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        input.read_exact(&mut word).map_err(io_err)?;
        values.push(f64::from_le_bytes(word));
    }
    RadialField::new(grid, values)
}
