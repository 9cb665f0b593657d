//! Derivative features on the enlarged plane and their PCA reduction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::container::Container;
use crate::error::{invalid, Error, Result};
use crate::imaging::{derivative_features, ImagePlane, PatchLayout};
use crate::linalg::symmetric_eigen;
use crate::Real;

pub const PIPELINE_KIND: &str = "feature_pipeline";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcaConfig {
    /// Fraction of training variance to retain.
    pub variance: f64,
    pub max_dim: usize,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self { variance: 0.999, max_dim: 30 }
    }
}

/// Four derivative filters followed by a PCA projection.
///
/// The projection is applied to uncentered features so a flat patch maps to
/// the zero vector; `mean` is kept for inspection.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePipeline<T: Real> {
    pub patch_size: usize,
    pub mean: DVector<T>,
    /// `d x 4p^2`, orthonormal rows.
    pub projection: DMatrix<T>,
    pub retained_variance: f64,
    /// True when the training features have zero variance.
    pub degenerate: bool,
}

/// Raw feature vectors (`4 p^2` rows, plane-major) of every patch in `layout`.
pub fn raw_features<T: Real>(img: &ImagePlane<T>, layout: &PatchLayout) -> DMatrix<T> {
    let planes = derivative_features(img);
    let n = layout.patch_len();
    let mut out = DMatrix::<T>::zeros(4 * n, layout.len());
    let mut buf = vec![T::zero(); n];
    for i in 0..layout.len() {
        let mut col = out.column_mut(i);
        for (c, plane) in planes.iter().enumerate() {
            layout.read(plane, i, &mut buf);
            for (j, &v) in buf.iter().enumerate() {
                col[c * n + j] = v;
            }
        }
    }
    out
}

/// PCA over raw feature columns: components sorted by descending variance,
/// keeping the fewest reaching `cfg.variance`, capped at `cfg.max_dim` and at
/// the numerical rank.
pub fn fit_feature_pipeline<T: Real>(raw: &DMatrix<T>, patch_size: usize, cfg: &PcaConfig) -> Result<FeaturePipeline<T>> {
    let (dim, n) = raw.shape();
    if dim != 4 * patch_size * patch_size {
        return Err(crate::error::mismatch(4 * patch_size * patch_size, dim));
    }
    if n == 0 {
        return Err(Error::InsufficientSamples("feature pipeline needs at least one sample".into()));
    }
    if !(cfg.variance > 0.0 && cfg.variance <= 1.0) {
        return Err(invalid("variance", format!("{} must lie in (0, 1]", cfg.variance)));
    }
    let mean = raw.column_mean();
    let mut centered = raw.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = (&centered * centered.transpose()) / T::of_usize(n);
    let (vals, vecs) = symmetric_eigen(&cov);
    let vals: Vec<f64> = vals.iter().map(|v| v.as_f64().max(0.0)).collect();
    let total: f64 = vals.iter().sum();
    // Relative to the raw second moment so rounding noise in the centering
    // does not count as variance.
    let energy = raw.norm_squared().as_f64() / n as f64;
    let floor = 1e-12 * energy.max(vals.first().copied().unwrap_or(0.0));
    let rank = if floor > 0.0 { vals.iter().take_while(|&&v| v > floor).count() } else { 0 };
    let mut d = 0;
    let mut kept = 0.0;
    while d < rank.min(cfg.max_dim) && kept < cfg.variance * total {
        kept += vals[d];
        d += 1;
    }
    let projection = DMatrix::from_fn(d, dim, |i, j| vecs[(j, i)]);
    Ok(FeaturePipeline {
        patch_size,
        mean,
        projection,
        retained_variance: if total > 0.0 { kept / total } else { 0.0 },
        degenerate: rank == 0,
    })
}

impl<T: Real> FeaturePipeline<T> {
    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn raw_dim(&self) -> usize {
        self.projection.ncols()
    }

    pub fn project(&self, raw: &DMatrix<T>) -> Result<DMatrix<T>> {
        if raw.nrows() != self.raw_dim() {
            return Err(crate::error::mismatch(self.raw_dim(), raw.nrows()));
        }
        Ok(&self.projection * raw)
    }

    pub fn to_container(&self) -> Container {
        let mut c = Container::new(PIPELINE_KIND);
        c.push_attr("patch_size", self.patch_size as u64);
        c.push_attr("d", self.dim() as u64);
        c.push_attr("degenerate", self.degenerate as u64);
        c.push_attr("retained_variance_bits", self.retained_variance.to_bits());
        c.push_array("mean", &DMatrix::from_column_slice(self.mean.len(), 1, self.mean.as_slice()));
        c.push_array("projection", &self.projection);
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(PIPELINE_KIND)?;
        let patch_size = c.attr("patch_size")? as usize;
        let mean: DMatrix<T> = c.array("mean")?;
        let projection: DMatrix<T> = c.array("projection")?;
        let raw = 4 * patch_size * patch_size;
        if mean.nrows() != raw || projection.ncols() != raw || projection.nrows() != c.attr("d")? as usize {
            return Err(Error::Format("feature pipeline shapes disagree".into()));
        }
        Ok(Self {
            patch_size,
            mean: DVector::from_column_slice(mean.as_slice()),
            projection,
            retained_variance: f64::from_bits(c.attr("retained_variance_bits")?),
            degenerate: c.attr("degenerate")? != 0,
        })
    }
}
