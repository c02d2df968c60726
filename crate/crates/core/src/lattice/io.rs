//! Flat field records.
//!
//! Binary layout (little endian): `n: u32, m: u32, ℓ: f64, N: u32`, then
//! `mⁿ·N` pairs `(re: f64, im: f64)` in point-major order.
//!
//! CSV layout: a `n,m,period,fiber` header line and its values, then one line
//! per grid point with `re,im` interleaved over the fibre.

use super::{Field, Torus};
use crate::{Error, Result, C64};
use std::io::{BufRead, Read, Write};

pub fn write_header<W: Write>(w: &mut W, torus: &Torus, fiber: usize) -> Result<()> {
    w.write_all(&(torus.dim() as u32).to_le_bytes())?;
    w.write_all(&(torus.points_per_axis() as u32).to_le_bytes())?;
    w.write_all(&torus.period().to_le_bytes())?;
    w.write_all(&(fiber as u32).to_le_bytes())?;
    Ok(())
}

pub fn read_header<R: Read>(r: &mut R) -> Result<(Torus, usize)> {
    let n = read_u32(r)? as usize;
    let m = read_u32(r)? as usize;
    let period = read_f64(r)?;
    let fiber = read_u32(r)? as usize;
    Ok((Torus::new(n, m, period)?, fiber))
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Writes the values only (no header).
pub fn write_values<W: Write>(w: &mut W, f: &Field) -> Result<()> {
    for z in f.data() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_values<R: Read>(r: &mut R, torus: Torus, fiber: usize) -> Result<Field> {
    let len = torus.num_points() * fiber;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        data.push(C64::new(re, im));
    }
    Field::from_vec(torus, fiber, data)
}

pub fn write_binary<W: Write>(w: &mut W, f: &Field) -> Result<()> {
    write_header(w, f.torus(), f.fiber())?;
    write_values(w, f)
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<Field> {
    let (torus, fiber) = read_header(r)?;
    read_values(r, torus, fiber)
}

pub fn write_csv<W: Write>(w: &mut W, f: &Field) -> Result<()> {
    let t = f.torus();
    writeln!(w, "n,m,period,fiber")?;
    writeln!(w, "{},{},{:?},{}", t.dim(), t.points_per_axis(), t.period(), f.fiber())?;
    for p in 0..f.num_points() {
        let row: Vec<String> = f.at(p).iter().flat_map(|z| [format!("{:?}", z.re), format!("{:?}", z.im)]).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Field> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines.next().ok_or_else(|| Error::Format("unexpected end of record".into()))?.map_err(Error::from)
    };
    let head = next()?;
    if head.trim() != "n,m,period,fiber" {
        return Err(Error::Format(format!("bad header line {head:?}")));
    }
    let meta = next()?;
    let parts: Vec<&str> = meta.trim().split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Format(format!("bad header values {meta:?}")));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(e.to_string()));
    let n = parse_usize(parts[0])?;
    let m = parse_usize(parts[1])?;
    let period: f64 = parts[2].parse().map_err(|e: std::num::ParseFloatError| Error::Format(e.to_string()))?;
    let fiber = parse_usize(parts[3])?;
    let torus = Torus::new(n, m, period)?;
    let mut data = Vec::with_capacity(torus.num_points() * fiber);
    for _ in 0..torus.num_points() {
        let line = next()?;
        let vals: Vec<f64> = line
            .trim()
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| Error::Format(e.to_string())))
            .collect::<Result<_>>()?;
        if vals.len() != 2 * fiber {
            return Err(Error::Format(format!("row has {} values, expected {}", vals.len(), 2 * fiber)));
        }
        data.extend(vals.chunks(2).map(|c| C64::new(c[0], c[1])));
    }
    Field::from_vec(torus, fiber, data)
}
