//! Binary frame for cube fields and the axis slice in two-column text.

use std::io::{Read, Write};

use super::{CubeGrid, Field3D};
use crate::error::{LabError, Result};

const MAGIC: &[u8; 4] = b"F3DF";

fn io_err(e: std::io::Error) -> LabError {
    LabError::Format(e.to_string())
}

/// `F3DF`, L (f64), n (u64), then n³ values in i-major order, little-endian.
pub fn write_binary(u: &Field3D, mut out: impl Write) -> Result<()> {
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&u.grid.half_width().to_le_bytes()).map_err(io_err)?;
    out.write_all(&(u.grid.n() as u64).to_le_bytes()).map_err(io_err)?;
    let mut buf = Vec::with_capacity(8 * u.values.len());
    for v in &u.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf).map_err(io_err)
}

pub fn read_binary(mut input: impl Read) -> Result<Field3D> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(LabError::Format("not a 3D field frame".into()));
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8).map_err(io_err)?;
    let half_width = f64::from_le_bytes(b8);
    input.read_exact(&mut b8).map_err(io_err)?;
    let n = u64::from_le_bytes(b8) as usize;
    let grid = CubeGrid::new(half_width, n)?;
    let mut raw = vec![0u8; 8 * grid.len()];
    input.read_exact(&mut raw).map_err(io_err)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field3D::new(grid, values)
}

/// The +x axis slice as `r u(r)` lines, the radial text format.
pub fn write_axis_slice(u: &Field3D, mut out: impl Write) -> Result<()> {
    writeln!(out, "# r u").map_err(io_err)?;
    for (r, v) in u.axis_slice() {
        writeln!(out, "{r:e} {v:e}").map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_and_bad_magic() {
        let g = CubeGrid::new(2.5, 8).unwrap();
        let u = Field3D::from_fn(g, |x, y, z| x - 2.0 * y + z * z);
        let mut buf = Vec::new();
        write_binary(&u, &mut buf).unwrap();
        assert_eq!(read_binary(buf.as_slice()).unwrap(), u);
        buf[0] = b'X';
        assert!(read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn slice_starts_at_origin() {
        let g = CubeGrid::new(2.0, 8).unwrap();
        let u = Field3D::from_fn(g, |x, _, _| x);
        let mut buf = Vec::new();
        write_axis_slice(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(1).unwrap().starts_with("0e0 0e0"));
    }
}
