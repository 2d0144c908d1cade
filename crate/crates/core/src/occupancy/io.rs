//! Grid export: 16-bit PGM with a JSON sidecar, and plain CSV.
//!
//! PGM rows are written top-down in image order, i.e. the highest grid row
//! (furthest along the channel) first. Samples are `round(ratio * 65535)`,
//! big-endian as the PGM format requires.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::{GridSpec, OccupancyGrid};
use crate::error::{Error, Result};

/// Sidecar document accompanying a PGM export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub version: u32,
    pub spec: GridSpec,
    pub encoding: String,
}

impl GridMetadata {
    pub fn for_spec(spec: GridSpec) -> Self {
        Self { version: 1, spec, encoding: "pgm16-top-down".into() }
    }
}

pub fn write_pgm<W: Write>(grid: &OccupancyGrid, mut out: W) -> Result<()> {
    let (rows, cols) = grid.dims();
    write!(out, "P5\n{cols} {rows}\n65535\n")?;
    let mut buf = Vec::with_capacity(rows * cols * 2);
    for r in (0..rows).rev() {
        for &v in grid.row(r) {
            let q = (v * 65535.0).round() as u16;
            buf.extend_from_slice(&q.to_be_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let ch = byte[0] as char;
        if ch == '#' && tok.is_empty() {
            let mut skip = String::new();
            r.read_line(&mut skip)?;
            continue;
        }
        if ch.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(ch);
    }
    if tok.is_empty() {
        return Err(Error::Format("truncated PGM header".into()));
    }
    Ok(tok)
}

/// Reads a grid written by [`write_pgm`]; values are quantised to 1/65535.
pub fn read_pgm<R: Read>(input: R, meta: &GridMetadata) -> Result<OccupancyGrid> {
    let mut r = BufReader::new(input);
    if next_token(&mut r)? != "P5" {
        return Err(Error::Format("not a binary PGM".into()));
    }
    let parse = |t: String| t.parse::<usize>().map_err(|e| Error::Format(format!("PGM header: {e}")));
    let cols = parse(next_token(&mut r)?)?;
    let rows = parse(next_token(&mut r)?)?;
    let maxval = parse(next_token(&mut r)?)?;
    if maxval != 65535 || (rows, cols) != meta.spec.dims() {
        return Err(Error::Format(format!("PGM {cols}x{rows} max {maxval} does not match metadata")));
    }
    let mut raw = vec![0u8; rows * cols * 2];
    r.read_exact(&mut raw)?;
    let mut values = vec![0.0; rows * cols];
    for (i, px) in raw.chunks_exact(2).enumerate() {
        let (img_row, c) = (i / cols, i % cols);
        let r = rows - 1 - img_row;
        values[r * cols + c] = u16::from_be_bytes([px[0], px[1]]) as f64 / 65535.0;
    }
    OccupancyGrid::from_values(meta.spec, values)
}

/// One line per grid row, row 0 first.
pub fn write_csv<W: Write>(grid: &OccupancyGrid, mut out: W) -> Result<()> {
    for r in 0..grid.rows() {
        let line: Vec<String> = grid.row(r).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;

    #[test]
    fn pgm_round_trip_quantised() {
        let spec = GridSpec::new(0.25, 3, 5, Vec2::ZERO).unwrap();
        let mut g = OccupancyGrid::zeros(spec);
        g.set(0, 0, 1.0);
        g.set(2, 4, 0.5);
        g.set(1, 2, 0.123456);
        let mut bytes = Vec::new();
        write_pgm(&g, &mut bytes).unwrap();
        assert!(bytes.starts_with(b"P5\n5 3\n65535\n"));
        let back = read_pgm(&bytes[..], &GridMetadata::for_spec(spec)).unwrap();
        for (a, b) in g.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 0.5 / 65535.0);
        }
        assert_eq!(back.get(0, 0), 1.0);
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let spec = GridSpec::new(1.0, 2, 3, Vec2::ZERO).unwrap();
        let mut out = Vec::new();
        write_csv(&OccupancyGrid::zeros(spec), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0,0,0\n0,0,0\n");
    }
}
