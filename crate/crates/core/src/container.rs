//! Self-describing little-endian container of named integer attributes and
//! `f64` matrices. The byte layout is documented in `docs/container-format.md`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Real;

pub const MAGIC: [u8; 8] = *b"LRSRBIN\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub kind: String,
    pub attrs: Vec<(String, u64)>,
    pub arrays: Vec<(String, DMatrix<f64>)>,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn write_name<W: Write>(w: &mut W, name: &str) -> Result<()> {
    let len = u16::try_from(name.len()).map_err(|_| format_err("name longer than 65535 bytes"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    Ok(())
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_name<R: Read>(r: &mut R) -> Result<String> {
    let len = u16::from_le_bytes(read_exact(r)?) as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| format_err("name is not UTF-8"))
}

impl Container {
    pub fn new(kind: impl Into<String>) -> Self {
        Self { kind: kind.into(), attrs: Vec::new(), arrays: Vec::new() }
    }

    pub fn push_attr(&mut self, name: impl Into<String>, value: u64) {
        self.attrs.push((name.into(), value));
    }

    pub fn push_array<T: Real>(&mut self, name: impl Into<String>, m: &DMatrix<T>) {
        self.arrays.push((name.into(), m.map(|v| v.as_f64())));
    }

    pub fn attr(&self, name: &str) -> Result<u64> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| format_err(format!("missing attribute `{name}`")))
    }

    pub fn array<T: Real>(&self, name: &str) -> Result<DMatrix<T>> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.map(T::of))
            .ok_or_else(|| format_err(format!("missing array `{name}`")))
    }

    /// Fails unless the container kind is `kind`.
    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(format_err(format!("expected a `{kind}` container, found `{}`", self.kind)))
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        write_name(w, &self.kind)?;
        w.write_all(&(self.attrs.len() as u32).to_le_bytes())?;
        for (name, value) in &self.attrs {
            write_name(w, name)?;
            w.write_all(&value.to_le_bytes())?;
        }
        w.write_all(&(self.arrays.len() as u32).to_le_bytes())?;
        for (name, m) in &self.arrays {
            write_name(w, name)?;
            w.write_all(&(m.nrows() as u64).to_le_bytes())?;
            w.write_all(&(m.ncols() as u64).to_le_bytes())?;
            for v in m.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        if read_exact::<8, _>(r)? != MAGIC {
            return Err(format_err("bad magic"));
        }
        let version = u32::from_le_bytes(read_exact(r)?);
        if version != VERSION {
            return Err(format_err(format!("unsupported version {version}")));
        }
        let mut out = Container::new(read_name(r)?);
        let n_attrs = u32::from_le_bytes(read_exact(r)?);
        for _ in 0..n_attrs {
            let name = read_name(r)?;
            out.attrs.push((name, u64::from_le_bytes(read_exact(r)?)));
        }
        let n_arrays = u32::from_le_bytes(read_exact(r)?);
        for _ in 0..n_arrays {
            let name = read_name(r)?;
            let rows = u64::from_le_bytes(read_exact(r)?) as usize;
            let cols = u64::from_le_bytes(read_exact(r)?) as usize;
            let len = rows.checked_mul(cols).ok_or_else(|| format_err("array too large"))?;
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                data.push(f64::from_le_bytes(read_exact(r)?));
            }
            out.arrays.push((name, DMatrix::from_vec(rows, cols, data)));
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
