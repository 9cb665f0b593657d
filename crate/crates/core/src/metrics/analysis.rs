//! Error-attribute analyses: error maps, preference maps, overlap counts and
//! sparsity histograms.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::imaging::ImagePlane;
use crate::Real;

/// Default significance threshold in gray levels.
pub const DEFAULT_THRESHOLD: f64 = 7.0;

/// Per-pixel estimation error `sr - truth` in gray levels (0-255 scale).
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMap<T> {
    values: ImagePlane<T>,
}

impl<T: Real> ErrorMap<T> {
    /// Signed error map.
    pub fn signed(sr: &ImagePlane<T>, truth: &ImagePlane<T>) -> Result<Self> {
        let peak = T::of(255.0);
        Ok(Self { values: sr.zip_map(truth, |a, b| (a - b) * peak)? })
    }

    pub fn from_levels(values: ImagePlane<T>) -> Self {
        Self { values }
    }

    pub fn abs(&self) -> Self {
        Self { values: self.values.map(|v| v.abs()) }
    }

    pub fn values(&self) -> &ImagePlane<T> {
        &self.values
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    /// Number of entries with `|e| > t`.
    pub fn count_above(&self, t: T) -> usize {
        self.values.as_slice().iter().filter(|v| v.abs() > t).count()
    }
}

/// `|sr - truth|` per pixel, in gray levels.
pub fn abs_error_map<T: Real>(sr: &ImagePlane<T>, truth: &ImagePlane<T>) -> Result<ErrorMap<T>> {
    Ok(ErrorMap::signed(sr, truth)?.abs())
}

/// Binary map: 255 where the internal error is strictly smaller, else 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl PreferenceMap {
    pub fn to_plane<T: Real>(&self) -> ImagePlane<T> {
        ImagePlane::from_fn(self.width, self.height, |x, y| T::of(self.data[y * self.width + x] as f64))
    }

    /// Fraction of pixels preferring the internal estimate.
    pub fn internal_fraction(&self) -> f64 {
        self.data.iter().filter(|&&v| v == 255).count() as f64 / self.data.len() as f64
    }
}

pub fn preference_map<T: Real>(e_int: &ErrorMap<T>, e_ext: &ErrorMap<T>) -> Result<PreferenceMap> {
    e_int.values.ensure_same_dims(&e_ext.values)?;
    let (width, height) = e_int.dims();
    let data = e_int
        .values
        .as_slice()
        .iter()
        .zip(e_ext.values.as_slice())
        .map(|(a, b)| if a.abs() < b.abs() { 255 } else { 0 })
        .collect();
    Ok(PreferenceMap { width, height, data })
}

/// Counts of significant errors for two methods and their co-located overlap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverlapStats {
    pub c_int: usize,
    pub c_ext: usize,
    pub c_overlap: usize,
    pub threshold: f64,
}

pub fn overlap_stats<T: Real>(e_int: &ErrorMap<T>, e_ext: &ErrorMap<T>, t: T) -> Result<OverlapStats> {
    e_int.values.ensure_same_dims(&e_ext.values)?;
    let (mut c_int, mut c_ext, mut c_overlap) = (0, 0, 0);
    for (a, b) in e_int.values.as_slice().iter().zip(e_ext.values.as_slice()) {
        let (hi_a, hi_b) = (a.abs() > t, b.abs() > t);
        c_int += hi_a as usize;
        c_ext += hi_b as usize;
        c_overlap += (hi_a && hi_b) as usize;
    }
    Ok(OverlapStats { c_int, c_ext, c_overlap, threshold: t.as_f64() })
}

/// Distribution of per-map significant-error densities over `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityHistogram {
    /// Fraction of entries above the threshold, one per input map.
    pub densities: Vec<f64>,
    /// Maps falling in each equal-width bin.
    pub counts: Vec<usize>,
    /// `counts` normalised to sum to one.
    pub mass: Vec<f64>,
}

impl SparsityHistogram {
    pub fn bin_edges(&self) -> Vec<(f64, f64)> {
        let n = self.counts.len() as f64;
        (0..self.counts.len())
            .map(|i| (i as f64 / n, (i + 1) as f64 / n))
            .collect()
    }
}

pub fn sparsity_histogram<T: Real>(maps: &[ErrorMap<T>], t: T, bins: usize) -> Result<SparsityHistogram> {
    if maps.is_empty() {
        return Err(Error::Empty("error map list"));
    }
    if bins == 0 {
        return Err(invalid("bins", "must be positive"));
    }
    let mut counts = vec![0usize; bins];
    let mut densities = Vec::with_capacity(maps.len());
    for m in maps {
        let above = m.count_above(t);
        let total = m.values.len();
        densities.push(above as f64 / total as f64);
        // Integer binning keeps exact fractions on their bin's lower edge.
        let bin = (above * bins / total).min(bins - 1);
        counts[bin] += 1;
    }
    let mass = counts.iter().map(|&c| c as f64 / maps.len() as f64).collect();
    Ok(SparsityHistogram { densities, counts, mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn levels(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> ErrorMap<f64> {
        ErrorMap::from_levels(ImagePlane::from_fn(w, h, f))
    }

    #[test]
    fn abs_map_basics() {
        let truth = ImagePlane::<f64>::filled(3, 3, 0.5);
        assert!(abs_error_map(&truth, &truth).unwrap().values().as_slice().iter().all(|&v| v == 0.0));
        let mut sr = truth.clone();
        sr.set(1, 2, 0.5 - 12.0 / 255.0);
        let e = abs_error_map(&sr, &truth).unwrap();
        assert_eq!(e.count_above(0.0), 1);
        assert!((e.values().get(1, 2) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn abs_map_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = ImagePlane::from_fn(9, 7, |_, _| rng.random::<f64>());
        let b = ImagePlane::from_fn(9, 7, |_, _| rng.random::<f64>());
        let e = abs_error_map(&a, &b).unwrap();
        for y in 0..7 {
            for x in 0..9 {
                assert!((e.values().get(x, y) - (255.0 * (a.get(x, y) - b.get(x, y))).abs()).abs() < 1e-12);
            }
        }
        let c = ImagePlane::<f64>::filled(9, 8, 0.0);
        assert!(abs_error_map(&a, &c).is_err());
    }

    #[test]
    fn preference_rules() {
        let zero = levels(4, 4, |_, _| 0.0);
        let pos = levels(4, 4, |x, _| 1.0 + x as f64);
        assert!(preference_map(&zero, &pos).unwrap().data.iter().all(|&v| v == 255));
        assert!(preference_map(&pos, &pos).unwrap().data.iter().all(|&v| v == 0));
    }

    #[test]
    fn preference_matches_comparator_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = levels(10, 6, |_, _| rng.random_range(-20.0..20.0));
        let b = levels(10, 6, |_, _| rng.random_range(-20.0..20.0));
        let pm = preference_map(&a, &b).unwrap();
        for (i, &v) in pm.data.iter().enumerate() {
            let want = if a.values().as_slice()[i].abs() < b.values().as_slice()[i].abs() { 255 } else { 0 };
            assert_eq!(v, want);
        }
    }

    #[test]
    fn overlap_edge_cases() {
        let left = levels(8, 1, |x, _| if x < 4 { 10.0 } else { 0.0 });
        let right = levels(8, 1, |x, _| if x >= 4 { 10.0 } else { 0.0 });
        let s = overlap_stats(&left, &right, 7.0).unwrap();
        assert_eq!((s.c_int, s.c_ext, s.c_overlap), (4, 4, 0));
        let s = overlap_stats(&left, &left, 7.0).unwrap();
        assert_eq!((s.c_int, s.c_ext, s.c_overlap), (4, 4, 4));
    }

    #[test]
    fn overlap_matches_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (w, h) = (13, 11);
        let a = levels(w, h, |_, _| rng.random_range(-15.0..15.0));
        let b = levels(w, h, |_, _| rng.random_range(-15.0..15.0));
        let (mut ci, mut ce, mut co) = (0, 0, 0);
        for y in 0..h {
            for x in 0..w {
                let ai = a.values().get(x, y).abs() > 7.0;
                let bi = b.values().get(x, y).abs() > 7.0;
                ci += ai as usize;
                ce += bi as usize;
                co += (ai && bi) as usize;
            }
        }
        let s = overlap_stats(&a, &b, DEFAULT_THRESHOLD).unwrap();
        assert_eq!((s.c_int, s.c_ext, s.c_overlap), (ci, ce, co));
    }

    #[test]
    fn histogram_edge_cases() {
        let zeros = vec![levels(5, 5, |_, _| 0.0); 3];
        let h = sparsity_histogram(&zeros, 7.0, 10).unwrap();
        assert_eq!(h.mass[0], 1.0);
        // 10 of 100 entries above threshold lands in the [0.1, 0.2) bin.
        let tenth = levels(10, 10, |x, y| if y == 0 && x < 10 { 9.0 } else { 1.0 });
        let h = sparsity_histogram(&[tenth], 7.0, 10).unwrap();
        assert_eq!(h.counts[1], 1);
        assert!(sparsity_histogram::<f64>(&[], 7.0, 10).is_err());
    }

    #[test]
    fn histogram_recovers_planted_densities() {
        // Map i has exactly i*5 of 100 entries above threshold.
        let maps: Vec<_> = (0..20)
            .map(|i| levels(10, 10, move |x, y| if y * 10 + x < i * 5 { 30.0 } else { 0.0 }))
            .collect();
        let h = sparsity_histogram(&maps, 7.0, 10).unwrap();
        assert_eq!(h.counts, vec![2; 10]);
        for (i, d) in h.densities.iter().enumerate() {
            assert_eq!(*d, (i * 5) as f64 / 100.0);
        }
    }

    proptest! {
        #[test]
        fn overlap_bounded(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = levels(6, 6, |_, _| rng.random_range(0.0..20.0));
            let b = levels(6, 6, |_, _| rng.random_range(0.0..20.0));
            let s = overlap_stats(&a, &b, 7.0).unwrap();
            prop_assert!(s.c_overlap <= s.c_int.min(s.c_ext));
            let pm = preference_map(&a, &b).unwrap();
            prop_assert!(pm.data.iter().all(|&v| v == 0 || v == 255));
            let h = sparsity_histogram(&[a, b], 7.0, 7).unwrap();
            prop_assert!((h.mass.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
