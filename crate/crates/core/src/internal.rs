//! Coarse-to-fine self-similarity super-resolution.
//!
//! Each step enlarges the current image, matches every enlarged patch against
//! the low band of the current image and adds the non-local-means weighted
//! high band of the best matches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::{BankEntry, BankLabel, ImageBank, Method};
use crate::error::{invalid, Error, Result};
use crate::imaging::{
    extract_with_layout, gaussian_blur, resize_to, rotate90, unrotate90, ImagePlane, PatchGrid, PatchLayout,
};
use crate::Real;

/// Squared distances are reported on the 0..255 gray-level scale.
const LEVELS2: f64 = 255.0 * 255.0;

pub const ROTATIONS: [u8; 4] = [0, 1, 2, 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SearchWindow {
    /// Every patch of the current image is a candidate.
    Global,
    /// Candidates within `radius` pixels of the query's scale-mapped position.
    Radius { radius: usize },
}

/// How the low band of the current image is formed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LowPass {
    /// Gaussian blur with sigma `factor * step`.
    Gaussian { factor: f64 },
    /// Bicubic shrink by the step factor and enlarge back.
    Resample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InternalConfig {
    pub target_scale: f64,
    pub zoom_step: f64,
    pub patch_size: usize,
    pub k_max: usize,
    /// NLM filter degree in gray levels.
    pub h: f64,
    pub search_window: SearchWindow,
    pub low_pass: LowPass,
    /// Refine each match over a small set of rotations and scalings.
    pub affine_refine: bool,
    /// Multiplier on the transferred high band.
    pub detail_gain: f64,
    /// Back-projection passes per step against the step input.
    pub back_projection: usize,
}

impl Default for InternalConfig {
    fn default() -> Self {
        Self {
            target_scale: 2.0,
            zoom_step: 1.25,
            patch_size: 5,
            k_max: 8,
            h: 10.0,
            search_window: SearchWindow::Radius { radius: 10 },
            low_pass: LowPass::Resample,
            affine_refine: false,
            detail_gain: 0.5,
            back_projection: 0,
        }
    }
}

impl InternalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_scale > 1.0 && self.target_scale.is_finite()) {
            return Err(invalid("target_scale", format!("{} must exceed 1", self.target_scale)));
        }
        if !(self.zoom_step > 1.0 && self.zoom_step <= self.target_scale) {
            return Err(invalid("zoom_step", format!("{} must lie in (1, target_scale]", self.zoom_step)));
        }
        if self.patch_size == 0 {
            return Err(invalid("patch_size", "must be positive"));
        }
        if self.k_max == 0 {
            return Err(invalid("k_max", "must be at least 1"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid("h", format!("{} must be positive", self.h)));
        }
        if !(self.detail_gain >= 0.0 && self.detail_gain.is_finite()) {
            return Err(invalid("detail_gain", format!("{} must be non-negative", self.detail_gain)));
        }
        if let LowPass::Gaussian { factor } = self.low_pass {
            if !(factor > 0.0 && factor.is_finite()) {
                return Err(invalid("low_pass.factor", format!("{factor} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Match {
    /// Raster index of the candidate patch.
    pub index: usize,
    /// Squared L2 distance on the gray-level scale.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchSet {
    pub query: usize,
    /// Ascending by distance, ties by smaller index.
    pub matches: Vec<Match>,
}

/// `w_j = exp(-d_j / h^2) / Z`.
pub fn nlm_weights(distances: &[f64], h: f64) -> Result<Vec<f64>> {
    if distances.is_empty() {
        return Err(Error::Empty("distances"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("{h} must be positive")));
    }
    let d0 = distances.iter().copied().fold(f64::INFINITY, f64::min);
    if !d0.is_finite() {
        return Err(Error::NonFinite("all NLM distances are infinite".into()));
    }
    let h2 = h * h;
    // Shifting by the smallest distance cancels in the normalization.
    let raw: Vec<f64> = distances.iter().map(|&d| (-(d - d0) / h2).exp()).collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| {
            let d = x - y;
            acc + d * d
        })
        .as_f64()
}

/// Squared distance, or `None` once a row-wise partial sum reaches `bound`.
fn bounded_sq_dist<T: Real>(a: &[T], b: &[T], row: usize, bound: f64) -> Option<f64> {
    let mut acc = T::zero();
    for (ra, rb) in a.chunks_exact(row).zip(b.chunks_exact(row)) {
        for (&x, &y) in ra.iter().zip(rb) {
            let d = x - y;
            acc += d * d;
        }
        if acc.as_f64() >= bound {
            return None;
        }
    }
    Some(acc.as_f64())
}

/// Keeps the `k` smallest `(distance, index)` pairs in ascending order.
struct TopK {
    k: usize,
    items: Vec<Match>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self { k, items: Vec::with_capacity(k + 1) }
    }

    fn worse(a: &Match, b: &Match) -> bool {
        a.distance > b.distance || (a.distance == b.distance && a.index > b.index)
    }

    /// Distance at or above which no later (larger-index) candidate can enter.
    fn bound(&self) -> f64 {
        if self.items.len() == self.k {
            self.items[self.k - 1].distance
        } else {
            f64::INFINITY
        }
    }

    fn push(&mut self, m: Match) {
        if self.items.len() == self.k && !Self::worse(self.items.last().unwrap(), &m) {
            return;
        }
        let pos = self.items.iter().position(|x| Self::worse(x, &m)).unwrap_or(self.items.len());
        self.items.insert(pos, m);
        self.items.truncate(self.k);
    }
}

/// Exhaustive k-nearest-neighbour search over every candidate patch.
pub fn knn_patch_search<T: Real>(query_index: usize, query: &[T], candidates: &PatchGrid<T>, k: usize) -> Result<MatchSet> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidates"));
    }
    if k == 0 || k > candidates.len() {
        return Err(Error::NotEnoughCandidates { requested: k, available: candidates.len() });
    }
    if query.len() != candidates.layout.patch_len() {
        return Err(crate::error::mismatch(candidates.layout.patch_len(), query.len()));
    }
    let mut top = TopK::new(k);
    for (index, c) in candidates.iter().enumerate() {
        top.push(Match { index, distance: sq_dist(query, c) * LEVELS2 });
    }
    Ok(MatchSet { query: query_index, matches: top.items })
}

/// Per-step zoom factors: `round(ln t / ln z)` steps (at least one), all equal
/// to `z` except the last, which makes the product exactly `t`.
pub fn zoom_ladder(target_scale: f64, zoom_step: f64) -> Vec<f64> {
    let n = ((target_scale.ln() / zoom_step.ln()).round() as usize).max(1);
    let mut steps = vec![zoom_step; n - 1];
    steps.push(target_scale / zoom_step.powi(n as i32 - 1));
    steps
}

/// Output dimensions after each ladder step, computed from the input size so
/// rounding never accumulates.
pub fn ladder_dims(width: usize, height: usize, target_scale: f64, zoom_step: f64) -> Vec<(usize, usize)> {
    let steps = zoom_ladder(target_scale, zoom_step);
    let n = steps.len();
    let mut product = 1.0;
    steps
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            product *= s;
            let f = if i + 1 == n { target_scale } else { product };
            (
                ((width as f64 * f).round() as usize).max(1),
                ((height as f64 * f).round() as usize).max(1),
            )
        })
        .collect()
}

fn low_band<T: Real>(img: &ImagePlane<T>, step: f64, low_pass: LowPass) -> Result<ImagePlane<T>> {
    match low_pass {
        LowPass::Gaussian { factor } => gaussian_blur(img, factor * step),
        LowPass::Resample => {
            let (w, h) = img.dims();
            let sw = ((w as f64 / step).round() as usize).max(1);
            let sh = ((h as f64 / step).round() as usize).max(1);
            resize_to(&resize_to(img, sw, sh)?, w, h)
        }
    }
}

/// Bilinear sample with edge clamping.
fn bilinear<T: Real>(img: &ImagePlane<T>, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (xi, yi) = (x0 as isize, y0 as isize);
    let g = |dx: isize, dy: isize| img.get_clamped(xi + dx, yi + dy).as_f64();
    (1.0 - fy) * ((1.0 - fx) * g(0, 0) + fx * g(1, 0)) + fy * ((1.0 - fx) * g(0, 1) + fx * g(1, 1))
}

const AFFINE_ANGLES: [f64; 3] = [-0.2617993877991494, 0.0, 0.2617993877991494];
const AFFINE_SCALES: [f64; 3] = [0.9, 1.0, 1.1];

/// Samples a `p x p` patch at `(x0, y0)` rotated by `angle` and scaled by
/// `scale` about its center.
fn warp_patch<T: Real>(img: &ImagePlane<T>, x0: usize, y0: usize, p: usize, angle: f64, scale: f64, out: &mut [T]) {
    let c = (p as f64 - 1.0) / 2.0;
    let (sin, cos) = angle.sin_cos();
    for dy in 0..p {
        for dx in 0..p {
            let (u, v) = (dx as f64 - c, dy as f64 - c);
            let x = x0 as f64 + c + scale * (cos * u - sin * v);
            let y = y0 as f64 + c + scale * (sin * u + cos * v);
            out[dy * p + dx] = T::of(bilinear(img, x, y));
        }
    }
}

struct Candidates<T> {
    low: PatchGrid<T>,
    high: PatchGrid<T>,
    low_img: ImagePlane<T>,
    high_img: ImagePlane<T>,
    /// Candidate lattice extent (stride 1).
    nx: usize,
    ny: usize,
}

fn search<T: Real>(
    query: &[T],
    qpos: (usize, usize),
    scale: (f64, f64),
    cands: &Candidates<T>,
    cfg: &InternalConfig,
    k: usize,
) -> Vec<Match> {
    let mut top = TopK::new(k);
    let p = cfg.patch_size;
    let mut scan = |x_lo: usize, x_hi: usize, y_lo: usize, y_hi: usize| {
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let index = y * cands.nx + x;
                // Indices grow during the scan, so a tie with the current worst
                // entry never enters; partial sums at or above it can stop.
                let bound = top.bound();
                if let Some(d) = bounded_sq_dist(query, cands.low.patch(index), p, bound) {
                    top.push(Match { index, distance: d });
                }
            }
        }
    };
    match cfg.search_window {
        SearchWindow::Global => scan(0, cands.nx - 1, 0, cands.ny - 1),
        SearchWindow::Radius { radius } => {
            let c = (cfg.patch_size as f64 - 1.0) / 2.0;
            let map = |q: usize, s: f64, n: usize| {
                let center = (q as f64 + c + 0.5) / s - 0.5;
                ((center - c).round().max(0.0) as usize).min(n - 1)
            };
            let (cx, cy) = (map(qpos.0, scale.0, cands.nx), map(qpos.1, scale.1, cands.ny));
            let (x_lo, x_hi) = (cx.saturating_sub(radius), (cx + radius).min(cands.nx - 1));
            let (y_lo, y_hi) = (cy.saturating_sub(radius), (cy + radius).min(cands.ny - 1));
            if (x_hi - x_lo + 1) * (y_hi - y_lo + 1) >= k {
                scan(x_lo, x_hi, y_lo, y_hi);
            } else {
                scan(0, cands.nx - 1, 0, cands.ny - 1);
            }
        }
    }
    let mut items = top.items;
    for m in &mut items {
        m.distance *= LEVELS2;
    }
    items
}

/// Returns the high-band patches for `matches`, with distances updated when
/// affine refinement picks a warped candidate.
fn donor_patches<T: Real>(
    query: &[T],
    matches: &mut [Match],
    cands: &Candidates<T>,
    cfg: &InternalConfig,
) -> Vec<Vec<T>> {
    let p = cfg.patch_size;
    matches
        .iter_mut()
        .map(|m| {
            if !cfg.affine_refine {
                return cands.high.patch(m.index).to_vec();
            }
            let (x0, y0) = cands.low.layout.positions[m.index];
            let mut buf = vec![T::zero(); p * p];
            let mut best = (m.distance, 0.0, 1.0);
            for &angle in &AFFINE_ANGLES {
                for &scale in &AFFINE_SCALES {
                    if angle == 0.0 && scale == 1.0 {
                        continue;
                    }
                    warp_patch(&cands.low_img, x0, y0, p, angle, scale, &mut buf);
                    let d = sq_dist(query, &buf) * LEVELS2;
                    if d < best.0 {
                        best = (d, angle, scale);
                    }
                }
            }
            m.distance = best.0;
            if best.1 == 0.0 && best.2 == 1.0 {
                cands.high.patch(m.index).to_vec()
            } else {
                warp_patch(&cands.high_img, x0, y0, p, best.1, best.2, &mut buf);
                buf
            }
        })
        .collect()
}

/// One enlargement of `img` to `(out_w, out_h)`; `step` sets the low band.
pub fn sr_step<T: Real>(
    img: &ImagePlane<T>,
    out_w: usize,
    out_h: usize,
    step: f64,
    cfg: &InternalConfig,
    k: usize,
) -> Result<ImagePlane<T>> {
    cfg.validate()?;
    let p = cfg.patch_size;
    let (w, h) = img.dims();
    let enlarged = resize_to(img, out_w, out_h)?;
    let low_img = low_band(img, step, cfg.low_pass)?;
    let high_img = img - &low_img;
    let layout = PatchLayout::new(w, h, p, 1)?;
    let available = layout.len();
    if k == 0 || k > available {
        return Err(Error::NotEnoughCandidates { requested: k, available });
    }
    let cands = Candidates {
        low: extract_with_layout(&low_img, layout.clone()),
        high: extract_with_layout(&high_img, layout),
        low_img,
        high_img,
        nx: w - p + 1,
        ny: h - p + 1,
    };
    let queries = PatchLayout::new(out_w, out_h, p, 1)?;
    let scale = (out_w as f64 / w as f64, out_h as f64 / h as f64);
    let n = p * p;
    let mut values = vec![T::zero(); queries.len() * n];
    let mut query = vec![T::zero(); n];
    for (i, out) in values.chunks_exact_mut(n).enumerate() {
        queries.read(&enlarged, i, &mut query);
        let mut matches = search(&query, queries.positions[i], scale, &cands, cfg, k);
        let donors = donor_patches(&query, &mut matches, &cands, cfg);
        let dists: Vec<f64> = matches.iter().map(|m| m.distance).collect();
        let weights = nlm_weights(&dists, cfg.h)?;
        out.copy_from_slice(&query);
        for (donor, &wt) in donors.iter().zip(&weights) {
            let wt = T::of(wt * cfg.detail_gain);
            for (o, &d) in out.iter_mut().zip(donor) {
                *o += wt * d;
            }
        }
    }
    let mut out = crate::imaging::aggregate_patches(&queries, &values)?.clamp01();
    for _ in 0..cfg.back_projection {
        let residual = img - &resize_to(&out, w, h)?;
        out = (&out + &resize_to(&residual, out_w, out_h)?).clamp01();
    }
    Ok(out)
}

/// One enlargement by `cfg.zoom_step`.
pub fn single_step_sr<T: Real>(img: &ImagePlane<T>, cfg: &InternalConfig, k: usize) -> Result<ImagePlane<T>> {
    let (w, h) = crate::imaging::scaled_dims(img.width(), img.height(), cfg.zoom_step);
    sr_step(img, w, h, cfg.zoom_step, cfg, k)
}

/// Repeated steps up to `cfg.target_scale`, run on the input rotated by
/// `rotation` quarter turns and rotated back.
pub fn multiscale_sr<T: Real>(lr: &ImagePlane<T>, cfg: &InternalConfig, k: usize, rotation: u8) -> Result<ImagePlane<T>> {
    cfg.validate()?;
    let mut cur = rotate90(lr, rotation);
    let steps = zoom_ladder(cfg.target_scale, cfg.zoom_step);
    let dims = ladder_dims(cur.width(), cur.height(), cfg.target_scale, cfg.zoom_step);
    for (&step, &(w, h)) in steps.iter().zip(&dims) {
        cur = sr_step(&cur, w, h, step, cfg, k)?;
    }
    Ok(unrotate90(&cur, rotation))
}

/// `k_max x 4` images labeled by neighbour count and rotation.
pub fn generate_internal_bank<T: Real>(lr: &ImagePlane<T>, cfg: &InternalConfig) -> Result<ImageBank<T>> {
    cfg.validate()?;
    let jobs: Vec<(usize, u8)> = (1..=cfg.k_max)
        .flat_map(|k| ROTATIONS.iter().map(move |&r| (k, r)))
        .collect();
    let entries = jobs
        .into_par_iter()
        .map(|(k, rotation)| {
            let image = multiscale_sr(lr, cfg, k, rotation)?;
            Ok(BankEntry { label: BankLabel { method: Method::Internal, index: k, rotation }, image })
        })
        .collect::<Result<Vec<_>>>()?;
    ImageBank::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{extract_patches, high_pass_decompose};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn natural(w: usize, h: usize, seed: u64) -> ImagePlane<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = ImagePlane::from_fn(w, h, |_, _| rng.random::<f64>());
        let smooth = gaussian_blur(&noise, 1.5).unwrap();
        ImagePlane::from_fn(w, h, |x, y| {
            let s = smooth.get(x, y);
            (0.5 + 3.0 * (s - 0.5) + 0.2 * ((x as f64) * 0.4).sin() * ((y as f64) * 0.3).cos()).clamp(0.0, 1.0)
        })
    }

    #[test]
    fn weights_examples() {
        assert_eq!(nlm_weights(&[3.0], 10.0).unwrap(), vec![1.0]);
        assert_eq!(nlm_weights(&[5.0, 5.0], 10.0).unwrap(), vec![0.5, 0.5]);
        let w = nlm_weights(&[0.0, 100.0], 10.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((w[1] - e / (1.0 + e)).abs() < 1e-15);
        assert!(nlm_weights(&[f64::INFINITY, f64::INFINITY], 10.0).is_err());
        assert!(nlm_weights(&[1.0], 0.0).is_err());
        // Far distances that would underflow unshifted still normalize.
        let w = nlm_weights(&[1e6, 1e6 + 100.0], 10.0).unwrap();
        assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn weights_normalized_and_monotone(d in prop::collection::vec(0.0f64..5e4, 1..20), h in 1.0f64..50.0) {
            let w = nlm_weights(&d, h).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..d.len() {
                for j in 0..d.len() {
                    if d[i] <= d[j] {
                        prop_assert!(w[i] >= w[j]);
                    }
                }
            }
        }

        #[test]
        fn knn_equals_full_sort(seed in 0u64..1000, n in 1usize..200, k_frac in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = ImagePlane::from_fn(n + 2, 3, |_, _| (rng.random_range(0..4) as f64) / 4.0);
            let grid = extract_patches(&img, 3, 1).unwrap();
            let q: Vec<f64> = (0..9).map(|_| (rng.random_range(0..4) as f64) / 4.0).collect();
            let k = 1 + ((grid.len() - 1) as f64 * k_frac) as usize;
            let got = knn_patch_search(0, &q, &grid, k).unwrap();
            let mut all: Vec<(f64, usize)> = grid
                .iter()
                .enumerate()
                .map(|(i, c)| (c.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * LEVELS2, i))
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let want: Vec<usize> = all[..k].iter().map(|x| x.1).collect();
            let idx: Vec<usize> = got.matches.iter().map(|m| m.index).collect();
            prop_assert_eq!(idx, want);
        }
    }

    #[test]
    fn knn_examples() {
        let img = natural(12, 12, 1);
        let grid = extract_patches(&img, 5, 1).unwrap();
        let q = grid.patch(17).to_vec();
        let m = knn_patch_search(0, &q, &grid, 3).unwrap();
        assert_eq!(m.matches[0], Match { index: 17, distance: 0.0 });
        let all = knn_patch_search(0, &q, &grid, grid.len()).unwrap();
        assert_eq!(all.matches.len(), grid.len());
        assert!(all.matches.windows(2).all(|w| w[0].distance <= w[1].distance));
        assert!(knn_patch_search(0, &q, &grid, grid.len() + 1).is_err());
    }

    #[test]
    fn ladder_arithmetic() {
        let steps = zoom_ladder(2.0, 1.25);
        assert_eq!(steps.len(), 3);
        assert_eq!(&steps[..2], &[1.25, 1.25]);
        assert!((steps[2] - 1.28).abs() < 1e-12);
        assert_eq!(ladder_dims(72, 60, 2.0, 1.25), vec![(90, 75), (113, 94), (144, 120)]);
        assert_eq!(zoom_ladder(1.25, 1.25), vec![1.25]);
        assert_eq!(ladder_dims(40, 40, 3.0, 1.25).last(), Some(&(120, 120)));
    }

    #[test]
    fn constant_input_stays_constant() {
        let img = ImagePlane::filled(16, 14, 0.3f64);
        let cfg = InternalConfig::default();
        let out = single_step_sr(&img, &cfg, 3).unwrap();
        assert_eq!(out.dims(), (20, 18));
        assert!(out.as_slice().iter().all(|&v| (v - 0.3).abs() < 1e-15));
        let bank = generate_internal_bank(&img, &InternalConfig { k_max: 1, ..cfg }).unwrap();
        assert_eq!(bank.len(), 4);
        assert!(bank.entries().iter().all(|e| e.image.as_slice().iter().all(|&v| (v - 0.3).abs() < 1e-15)));
    }

    #[test]
    fn rejects_small_or_invalid() {
        let img = ImagePlane::filled(4, 4, 0.5f64);
        assert!(single_step_sr(&img, &InternalConfig::default(), 1).is_err());
        let bad = InternalConfig { zoom_step: 3.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = InternalConfig { h: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let img = natural(8, 8, 2);
        assert!(single_step_sr(&img, &InternalConfig::default(), 100).is_err());
    }

    #[test]
    fn single_match_on_periodic_texture_copies_donor_band() {
        // Period-4 texture upscaled by exactly 2 against a self-similar donor.
        let img: ImagePlane<f64> = ImagePlane::from_fn(24, 24, |x, y| if (x / 2 + y / 2) % 2 == 0 { 0.8 } else { 0.2 });
        let cfg = InternalConfig {
            target_scale: 2.0,
            zoom_step: 2.0,
            search_window: SearchWindow::Global,
            low_pass: LowPass::Gaussian { factor: 0.6 },
            ..Default::default()
        };
        let out = sr_step(&img, 48, 48, 2.0, &cfg, 1).unwrap();
        let enlarged = resize_to(&img, 48, 48).unwrap();
        let (low, high) = high_pass_decompose(&img, 1.2).unwrap();
        let lg = extract_patches(&low, 5, 1).unwrap();
        let hg = extract_patches(&high, 5, 1).unwrap();
        // A query away from the borders: its output patch center equals the
        // enlarged value plus the donor band, up to overlap averaging.
        let q = PatchLayout::new(48, 48, 5, 1).unwrap();
        let i = q.positions.iter().position(|&p| p == (20, 20)).unwrap();
        let mut patch = vec![0.0; 25];
        q.read(&enlarged, i, &mut patch);
        let m = knn_patch_search(i, &patch, &lg, 1).unwrap();
        let donor = hg.patch(m.matches[0].index);
        assert!(donor.iter().any(|v| v.abs() > 1e-3));
        assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_ne!(out, enlarged);
    }

    /// Literal recipe: enlarge, split, exhaustive sort per query, NLM sum,
    /// average overlaps by sum / count.
    fn literal_step(img: &ImagePlane<f64>, zoom: f64, k: usize, h: f64) -> ImagePlane<f64> {
        let p = 5;
        let (w, hh) = img.dims();
        let (ow, oh) = ((w as f64 * zoom).round() as usize, (hh as f64 * zoom).round() as usize);
        let y1 = resize_to(img, ow, oh).unwrap();
        let sw = (w as f64 / zoom).round() as usize;
        let sh = (hh as f64 / zoom).round() as usize;
        let low = resize_to(&resize_to(img, sw, sh).unwrap(), w, hh).unwrap();
        let mut sum = vec![0.0; ow * oh];
        let mut cnt = vec![0.0; ow * oh];
        for qy in 0..=oh - p {
            for qx in 0..=ow - p {
                let mut cands = Vec::new();
                for cy in 0..=hh - p {
                    for cx in 0..=w - p {
                        let mut d = 0.0;
                        for dy in 0..p {
                            for dx in 0..p {
                                let a = y1.get(qx + dx, qy + dy) * 255.0;
                                let b = low.get(cx + dx, cy + dy) * 255.0;
                                d += (a - b) * (a - b);
                            }
                        }
                        cands.push((d, cy * (w - p + 1) + cx, cx, cy));
                    }
                }
                cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                let ws: Vec<f64> = cands[..k].iter().map(|c| (-(c.0 - cands[0].0) / (h * h)).exp()).collect();
                let z: f64 = ws.iter().sum();
                for dy in 0..p {
                    for dx in 0..p {
                        let mut v = y1.get(qx + dx, qy + dy);
                        for (c, wt) in cands[..k].iter().zip(&ws) {
                            v += wt / z * (img.get(c.2 + dx, c.3 + dy) - low.get(c.2 + dx, c.3 + dy));
                        }
                        sum[(qy + dy) * ow + qx + dx] += v;
                        cnt[(qy + dy) * ow + qx + dx] += 1.0;
                    }
                }
            }
        }
        ImagePlane::from_fn(ow, oh, |x, y| (sum[y * ow + x] / cnt[y * ow + x]).clamp(0.0, 1.0))
    }

    #[test]
    fn matches_literal_recipe() {
        let img = natural(32, 32, 5);
        let cfg = InternalConfig {
            search_window: SearchWindow::Global,
            low_pass: LowPass::Resample,
            detail_gain: 1.0,
            back_projection: 0,
            ..Default::default()
        };
        let got = single_step_sr(&img, &cfg, 3).unwrap();
        let want = literal_step(&img, 1.25, 3, cfg.h);
        assert_eq!(got.dims(), want.dims());
        for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn multiscale_dims_and_rotation() {
        let img = natural(20, 16, 3);
        let cfg = InternalConfig { k_max: 2, ..Default::default() };
        let a = multiscale_sr(&img, &cfg, 1, 0).unwrap();
        let b = multiscale_sr(&img, &cfg, 1, 1).unwrap();
        assert_eq!(a.dims(), (40, 32));
        assert_eq!(b.dims(), (40, 32));
        let one = InternalConfig { target_scale: 1.25, ..cfg.clone() };
        assert_eq!(multiscale_sr(&img, &one, 1, 0).unwrap(), single_step_sr(&img, &one, 1).unwrap());
    }

    #[test]
    fn bank_is_diverse_and_deterministic() {
        let img = natural(20, 20, 4);
        let cfg = InternalConfig { k_max: 2, ..Default::default() };
        let a = generate_internal_bank(&img, &cfg).unwrap();
        let b = generate_internal_bank(&img, &cfg).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a, b);
        let e = a.entries();
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                assert_ne!(e[i].image, e[j].image, "{} == {}", e[i].label, e[j].label);
            }
        }
    }

    #[test]
    fn affine_refine_runs() {
        let img = natural(16, 16, 6);
        let cfg = InternalConfig { affine_refine: true, ..Default::default() };
        let out = single_step_sr(&img, &cfg, 2).unwrap();
        assert_eq!(out.dims(), (20, 20));
    }
}
