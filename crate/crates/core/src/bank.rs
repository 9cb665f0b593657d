//! Ordered collections of preliminary HR images with provenance labels.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::imaging::{io, ImagePlane};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Internal,
    External,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Internal => "internal",
            Method::External => "external",
        })
    }
}

/// Provenance of one bank member: the learning method, its variant index
/// (neighbour count `k` for internal, dictionary index for external) and the
/// input rotation in quarter turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BankLabel {
    pub method: Method,
    pub index: usize,
    pub rotation: u8,
}

impl fmt::Display for BankLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method {
            Method::Internal => write!(f, "internal_k{}_r{}", self.index, self.rotation),
            Method::External => write!(f, "external_d{}_r{}", self.index, self.rotation),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BankEntry<T> {
    pub label: BankLabel,
    pub image: ImagePlane<T>,
}

/// Same-sized preliminary HR images, in generation order.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBank<T> {
    entries: Vec<BankEntry<T>>,
}

impl<T: Real> ImageBank<T> {
    pub fn new(entries: Vec<BankEntry<T>>) -> Result<Self> {
        if let Some(first) = entries.first() {
            for e in &entries[1..] {
                if e.image.dims() != first.image.dims() {
                    return Err(mismatch(
                        format!("{:?} for every member", first.image.dims()),
                        format!("{:?} for {}", e.image.dims(), e.label),
                    ));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BankEntry<T>] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<BankEntry<T>> {
        self.entries
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.entries.first().map(|e| e.image.dims())
    }

    pub fn labels(&self) -> Vec<BankLabel> {
        self.entries.iter().map(|e| e.label).collect()
    }

    /// Concatenates two banks; member sizes must agree.
    pub fn concat(mut self, other: Self) -> Result<Self> {
        self.entries.extend(other.entries);
        Self::new(self.entries)
    }

    /// Members of one method, in the canonical order (ascending index, then
    /// rotation).
    pub fn ordered(&self, method: Method) -> Vec<&BankEntry<T>> {
        let mut v: Vec<_> = self.entries.iter().filter(|e| e.label.method == method).collect();
        v.sort_by_key(|e| (e.label.index, e.label.rotation));
        v
    }

    /// The first `n_int` internal and `n_ext` external members in canonical
    /// order.
    pub fn select(&self, n_int: usize, n_ext: usize) -> Result<Self> {
        let int = self.ordered(Method::Internal);
        let ext = self.ordered(Method::External);
        if n_int > int.len() || n_ext > ext.len() {
            return Err(Error::InsufficientSamples(format!(
                "requested {n_int} internal + {n_ext} external, bank holds {} + {}",
                int.len(),
                ext.len()
            )));
        }
        Self::new(
            int[..n_int]
                .iter()
                .chain(&ext[..n_ext])
                .map(|e| (*e).clone())
                .collect(),
        )
    }

    /// Writes one PNG per member plus `manifest.csv`
    /// (`filename,method,k,rotation`).
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut manifest = fs::File::create(dir.join("manifest.csv"))?;
        writeln!(manifest, "filename,method,k,rotation")?;
        for e in &self.entries {
            let name = format!("{}.png", e.label);
            io::write_png_gray(&e.image, dir.join(&name))?;
            writeln!(manifest, "{name},{},{},{}", e.label.method, e.label.index, e.label.rotation)?;
        }
        Ok(())
    }

    /// Reads a directory written by [`ImageBank::save_dir`] (8-bit samples).
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join("manifest.csv"))?;
        let mut entries = Vec::new();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Format(format!("bad manifest row `{line}`")));
            }
            let method = match f[1] {
                "internal" => Method::Internal,
                "external" => Method::External,
                other => return Err(Error::Format(format!("unknown method `{other}`"))),
            };
            let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(format!("`{s}`: {e}")));
            let label = BankLabel { method, index: parse(f[2])?, rotation: parse(f[3])? as u8 };
            let image = io::read_png::<T>(dir.join(f[0]))?.r;
            entries.push(BankEntry { label, image });
        }
        Self::new(entries)
    }
}
