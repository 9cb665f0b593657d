use nalgebra::DMatrix;

use crate::bank::{BankEntry, BankLabel, ImageBank};
use crate::error::{invalid, Error, Result};
use crate::imaging::ImagePlane;
use crate::Real;

/// Bank members vectorised row-major into the columns of an `n x J` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedMatrix<T: Real> {
    pub x: DMatrix<T>,
    pub labels: Vec<BankLabel>,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> StackedMatrix<T> {
    pub fn from_matrix(x: DMatrix<T>, labels: Vec<BankLabel>, width: usize, height: usize) -> Result<Self> {
        if x.nrows() != width * height {
            return Err(invalid("x", format!("{} rows for a {width}x{height} image", x.nrows())));
        }
        if labels.len() != x.ncols() {
            return Err(invalid("labels", format!("{} labels for {} columns", labels.len(), x.ncols())));
        }
        if x.ncols() < 2 {
            return Err(invalid("bank", format!("need at least 2 columns, got {}", x.ncols())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("stacked matrix".into()));
        }
        Ok(Self { x, labels, width, height })
    }

    pub fn n_pixels(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_images(&self) -> usize {
        self.x.ncols()
    }

    /// Inverse of [`stack_images`].
    pub fn unstack(&self) -> ImageBank<T> {
        unstack_matrix(&self.x, &self.labels, self.width, self.height)
    }
}

pub(crate) fn unstack_matrix<T: Real>(
    m: &DMatrix<T>,
    labels: &[BankLabel],
    width: usize,
    height: usize,
) -> ImageBank<T> {
    let entries = labels
        .iter()
        .enumerate()
        .map(|(j, &label)| BankEntry {
            label,
            image: ImagePlane::from_fn(width, height, |x, y| m[(y * width + x, j)]),
        })
        .collect();
    ImageBank::new(entries).expect("columns share one size")
}

pub fn stack_images<T: Real>(bank: &ImageBank<T>) -> Result<StackedMatrix<T>> {
    let (w, h) = bank.dims().ok_or(Error::Empty("image bank"))?;
    let n = w * h;
    let mut x = DMatrix::<T>::zeros(n, bank.len());
    for (j, e) in bank.entries().iter().enumerate() {
        x.column_mut(j).copy_from_slice(e.image.as_slice());
    }
    StackedMatrix::from_matrix(x, bank.labels(), w, h)
}
