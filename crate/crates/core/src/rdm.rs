//! `RDM1` binary interchange format for RD maps.
//!
//! ```text
//! offset  size          field
//! 0       4             magic "RDM1"
//! 4       4             rows (u32 LE, range bins)
//! 8       4             cols (u32 LE, Doppler bins)
//! 12      8             range resolution in m (f64 LE)
//! 20      8             velocity resolution in m/s (f64 LE)
//! 28      8·rows·cols   cell powers, f64 LE, row-major
//! ```
//!
//! Cells are `|Y|²` of the unnormalised windowed 2D DFT with the Doppler
//! axis centred (zero velocity at column `cols / 2`). Files round-trip
//! bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rd::RdMap;

pub const MAGIC: &[u8; 4] = b"RDM1";
const HEADER_LEN: usize = 28;

pub fn write_rdm<W: Write>(mut w: W, map: &RdMap) -> Result<()> {
    let rows = u32::try_from(map.range_bins).map_err(|_| Error::Format("too many rows".into()))?;
    let cols = u32::try_from(map.doppler_bins).map_err(|_| Error::Format("too many columns".into()))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * map.power.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    buf.extend_from_slice(&map.range_resolution_m.to_le_bytes());
    buf.extend_from_slice(&map.velocity_resolution_mps.to_le_bytes());
    for v in &map.power {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_rdm<R: Read>(mut r: R) -> Result<RdMap> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

fn decode(bytes: &[u8]) -> Result<RdMap> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic, expected RDM1".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let rows = u32_at(4);
    let cols = u32_at(8);
    let dr = f64_at(12);
    let dv = f64_at(20);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!("{rows}x{cols} map needs {expected} bytes, file has {}", bytes.len())));
    }
    let power = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    RdMap::new(power, rows, cols, dr, dv).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_rdm(path: impl AsRef<Path>, map: &RdMap) -> Result<()> {
    write_rdm(BufWriter::new(File::create(path)?), map)
}

pub fn load_rdm(path: impl AsRef<Path>) -> Result<RdMap> {
    read_rdm(BufReader::new(File::open(path)?))
}
