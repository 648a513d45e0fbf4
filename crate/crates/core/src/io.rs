//! Binary field format.
//!
//! Little-endian layout:
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 6     | magic `SPECF1`                            |
//! | 1     | dim (`u8`)                                |
//! | 4     | n (`u32`)                                 |
//! | 8     | box length (`f64`)                        |
//! | 1     | view tag (0 physical, 1 frequency)        |
//! | 8     | time (`f64`)                              |
//! | 16·n^dim | values as interleaved `(re, im)` `f64` pairs, row-major |
//!
//! Frequency-view values are stored in FFT order, like [`Field::values`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::{Error, Field, Grid, Real, Result, View};

pub const MAGIC: &[u8; 6] = b"SPECF1";
pub const HEADER_LEN: usize = 6 + 1 + 4 + 8 + 1 + 8;

pub fn write_field<T: Real, W: Write>(out: &mut W, field: &Field<T>, time: T) -> Result<()> {
    let grid = field.grid();
    out.write_all(MAGIC)?;
    out.write_all(&[grid.dim() as u8])?;
    out.write_all(&(grid.n() as u32).to_le_bytes())?;
    out.write_all(&grid.box_length().as_f64().to_le_bytes())?;
    out.write_all(&[field.view().tag()])?;
    out.write_all(&time.as_f64().to_le_bytes())?;
    for z in field.values() {
        out.write_all(&z.re.as_f64().to_le_bytes())?;
        out.write_all(&z.im.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn encode_field<T: Real>(field: &Field<T>, time: T) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * field.values().len());
    write_field(&mut buf, field, time).expect("writing to a Vec cannot fail");
    buf
}

/// Reads a field and its time stamp. A fresh [`Grid`] is built from the header.
pub fn read_field<T: Real, R: Read>(input: &mut R) -> Result<(Field<T>, T)> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header).map_err(|e| Error::Format(format!("short header: {e}")))?;
    if &header[..6] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let dim = header[6] as usize;
    let n = u32::from_le_bytes(header[7..11].try_into().unwrap()) as usize;
    let box_length = f64::from_le_bytes(header[11..19].try_into().unwrap());
    let view = View::from_tag(header[19])
        .ok_or_else(|| Error::Format(format!("unknown view tag {}", header[19])))?;
    let time = f64::from_le_bytes(header[20..28].try_into().unwrap());
    let grid = Grid::new(dim, n, T::of(box_length)).map_err(|e| Error::Format(e.to_string()))?;
    let mut raw = vec![0u8; 16 * grid.len()];
    input.read_exact(&mut raw).map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex::new(T::of(re), T::of(im))
        })
        .collect();
    Ok((Field::from_values(&grid, values, view)?, T::of(time)))
}

pub fn save_field<T: Real>(path: impl AsRef<Path>, field: &Field<T>, time: T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field, time)?;
    w.flush()?;
    Ok(())
}

pub fn load_field<T: Real>(path: impl AsRef<Path>) -> Result<(Field<T>, T)> {
    let mut r = BufReader::new(File::open(path)?);
    read_field(&mut r)
}
