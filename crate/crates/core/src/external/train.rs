//! Variance-sorted training groups and coupled dictionary training through
//! the depth-one encoder.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lista::{encode_parts, DictionaryPair, Encoded};
use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::thin_svd;
use crate::Real;

/// Aligned LR feature / HR target columns with the HR patch variance used
/// for grouping.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchPairs<T: Real> {
    /// `d x N`.
    pub features: DMatrix<T>,
    /// `n_hr x N`.
    pub targets: DMatrix<T>,
    pub variances: Vec<f64>,
}

impl<T: Real> PatchPairs<T> {
    pub fn new(features: DMatrix<T>, targets: DMatrix<T>, variances: Vec<f64>) -> Result<Self> {
        let n = features.ncols();
        if targets.ncols() != n {
            return Err(mismatch(n, targets.ncols()));
        }
        if variances.len() != n {
            return Err(mismatch(n, variances.len()));
        }
        Ok(Self { features, targets, variances })
    }

    pub fn len(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingGroup<T: Real> {
    pub index: usize,
    pub features: DMatrix<T>,
    pub targets: DMatrix<T>,
}

impl<T: Real> TrainingGroup<T> {
    pub fn len(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `[start, end)` ranges of `m` equal groups over `n` sorted samples, each
/// overlapping its neighbour by about `overlap` of the group size.
///
/// Group size is `ceil(n / (m - (m - 1) overlap))`; group `i` starts at
/// `floor(i (n - g) / (m - 1))`.
pub fn group_bounds(n: usize, m: usize, overlap: f64) -> Result<Vec<(usize, usize)>> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(invalid("overlap", format!("{overlap} must lie in [0, 1)")));
    }
    if n < m {
        return Err(Error::InsufficientSamples(format!("{n} samples cannot form {m} groups")));
    }
    if m == 1 {
        return Ok(vec![(0, n)]);
    }
    let g = ((n as f64 / (m as f64 - (m as f64 - 1.0) * overlap)).ceil() as usize).min(n);
    Ok((0..m)
        .map(|i| {
            let start = i * (n - g) / (m - 1);
            (start, start + g)
        })
        .collect())
}

/// Sorts samples by HR variance (descending, ties by index) and cuts `m`
/// overlapping contiguous groups.
pub fn build_training_groups<T: Real>(pairs: &PatchPairs<T>, m: usize, overlap: f64) -> Result<Vec<TrainingGroup<T>>> {
    let bounds = group_bounds(pairs.len(), m, overlap)?;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs.variances[b].total_cmp(&pairs.variances[a]).then(a.cmp(&b)));
    Ok(bounds
        .into_iter()
        .enumerate()
        .map(|(index, (s, e))| {
            let idx = &order[s..e];
            TrainingGroup {
                index,
                features: pairs.features.select_columns(idx),
                targets: pairs.targets.select_columns(idx),
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Dictionary size `K`.
    pub atoms: usize,
    pub epochs: usize,
    /// Ridge weight on `D_h` (per sample).
    pub ridge: f64,
    /// Fraction of first-stage coefficients above the initial threshold.
    pub init_sparsity: f64,
    /// Gradient passes over the encoder parameters per epoch.
    pub grad_steps: usize,
    pub kmeans_iters: usize,
    pub theta_min: f64,
    pub reseed_dead_atoms: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            atoms: 256,
            epochs: 20,
            ridge: 1e-4,
            init_sparsity: 0.1,
            grad_steps: 2,
            kmeans_iters: 5,
            theta_min: 1e-4,
            reseed_dead_atoms: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedDictionary<T: Real> {
    pub dict: DictionaryPair<T>,
    /// Objective after initialization (index 0) and after each epoch.
    pub losses: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Params<T: Real> {
    theta: DVector<T>,
    w_e: DMatrix<T>,
    w_d: DMatrix<T>,
}

struct Problem<'a, T: Real> {
    y: &'a DMatrix<T>,
    x: &'a DMatrix<T>,
    ridge: f64,
    theta_min: T,
}

struct Eval<T: Real> {
    loss: f64,
    enc: Encoded<T>,
    /// `D Z - X`.
    residual: DMatrix<T>,
}

impl<T: Real> Problem<'_, T> {
    fn n(&self) -> usize {
        self.y.ncols()
    }

    fn solve_dh(&self, z: &DMatrix<T>) -> Result<DMatrix<T>> {
        let k = z.nrows();
        let reg = T::of(self.ridge * self.n() as f64);
        let a = z * z.transpose() + DMatrix::<T>::identity(k, k) * reg;
        let b = z * self.x.transpose();
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::NonFinite("ridge system is not positive definite".into()))?;
        Ok(chol.solve(&b).transpose())
    }

    fn eval(&self, p: &Params<T>, d_h: &DMatrix<T>) -> Eval<T> {
        let enc = encode_parts(self.y, &p.theta, &p.w_e, &p.w_d);
        let residual = d_h * &enc.z - self.x;
        let fit = residual.norm_squared().as_f64() / self.n() as f64;
        let loss = fit + self.ridge * d_h.norm_squared().as_f64();
        Eval { loss, enc, residual }
    }

    /// Gradients of the data term with respect to `(W_e, W_d, theta)`.
    fn gradients(&self, p: &Params<T>, d_h: &DMatrix<T>, ev: &Eval<T>) -> (DMatrix<T>, DMatrix<T>, DVector<T>) {
        let Encoded { u, a, v, .. } = &ev.enc;
        let scale = T::of(2.0 / self.n() as f64);
        let gz = d_h.transpose() * &ev.residual * scale;
        let k = p.theta.len();
        let active = |m: &DMatrix<T>, i: usize, j: usize| m[(i, j)].abs() > p.theta[i];
        let gv = DMatrix::from_fn(k, gz.ncols(), |i, j| if active(v, i, j) { gz[(i, j)] } else { T::zero() });
        let g_wd = &gv * a.transpose();
        let ga = p.w_d.transpose() * &gv;
        let ga_masked = DMatrix::from_fn(k, ga.ncols(), |i, j| if active(u, i, j) { ga[(i, j)] } else { T::zero() });
        let gu = &gv + &ga_masked;
        let g_we = &gu * self.y.transpose();
        let sign = |m: &DMatrix<T>, i: usize, j: usize| if m[(i, j)] > T::zero() { T::one() } else { -T::one() };
        let g_theta = DVector::from_fn(k, |i, _| {
            let mut acc = T::zero();
            for j in 0..gv.ncols() {
                acc -= gv[(i, j)] * sign(v, i, j) + ga_masked[(i, j)] * sign(u, i, j);
            }
            acc
        });
        (g_we, g_wd, g_theta)
    }
}

#[derive(Clone, Copy)]
enum Block {
    Encode,
    Lateral,
    Threshold,
}

fn block_step<T: Real>(p: &Params<T>, block: Block, grads: &(DMatrix<T>, DMatrix<T>, DVector<T>), eta: T, theta_min: T) -> (Params<T>, f64) {
    let mut q = p.clone();
    let moved = match block {
        Block::Encode => {
            q.w_e = &p.w_e - &grads.0 * eta;
            (&q.w_e - &p.w_e).norm_squared()
        }
        Block::Lateral => {
            q.w_d = &p.w_d - &grads.1 * eta;
            (&q.w_d - &p.w_d).norm_squared()
        }
        Block::Threshold => {
            q.theta = (&p.theta - &grads.2 * eta).map(|t| t.max(theta_min));
            (&q.theta - &p.theta).norm_squared()
        }
    };
    (q, moved.as_f64())
}

/// One backtracking projected-gradient step on `block`; returns the new
/// parameters only if the objective decreases sufficiently.
fn descend<T: Real>(
    prob: &Problem<'_, T>,
    p: &Params<T>,
    d_h: &DMatrix<T>,
    cur: &Eval<T>,
    block: Block,
    step: &mut f64,
) -> Option<(Params<T>, Eval<T>)> {
    let grads = prob.gradients(p, d_h, cur);
    let (g_norm, p_norm) = match block {
        Block::Encode => (grads.0.norm().as_f64(), p.w_e.norm().as_f64()),
        Block::Lateral => (grads.1.norm().as_f64(), p.w_d.norm().as_f64()),
        Block::Threshold => (grads.2.norm().as_f64(), p.theta.norm().as_f64()),
    };
    if !(g_norm > 0.0 && g_norm.is_finite()) {
        return None;
    }
    let mut eta = if *step > 0.0 { 2.0 * *step } else { 0.05 * p_norm.max(1e-3) / g_norm };
    for _ in 0..40 {
        let (q, moved) = block_step(p, block, &grads, T::of(eta), prob.theta_min);
        if moved == 0.0 {
            return None;
        }
        let ev = prob.eval(&q, d_h);
        if ev.loss.is_finite() && ev.loss <= cur.loss - 1e-4 * moved / eta {
            *step = eta;
            return Some((q, ev));
        }
        eta *= 0.5;
    }
    *step = eta;
    None
}

/// k-means++ seeding followed by Lloyd iterations; columns are centers.
fn kmeans<T: Real>(y: &DMatrix<T>, k: usize, iters: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    let (d, n) = y.shape();
    let dist2 = |c: &DMatrix<T>, ci: usize, j: usize| -> f64 {
        (0..d)
            .map(|r| {
                let t = (c[(r, ci)] - y[(r, j)]).as_f64();
                t * t
            })
            .sum()
    };
    let mut centers = DMatrix::<T>::zeros(d, k);
    centers.set_column(0, &y.column(rng.random_range(0..n)));
    let mut best: Vec<f64> = (0..n).map(|j| dist2(&centers, 0, j)).collect();
    for ci in 1..k {
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (j, &b) in best.iter().enumerate() {
                if r < b {
                    pick = j;
                    break;
                }
                r -= b;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.set_column(ci, &y.column(pick));
        for (j, b) in best.iter_mut().enumerate() {
            *b = b.min(dist2(&centers, ci, j));
        }
    }
    for _ in 0..iters {
        let mut sums = DMatrix::<T>::zeros(d, k);
        let mut counts = vec![0usize; k];
        for j in 0..n {
            let c = (0..k)
                .map(|ci| (dist2(&centers, ci, j), ci))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap()
                .1;
            counts[c] += 1;
            let mut col = sums.column_mut(c);
            col += y.column(j);
        }
        for ci in 0..k {
            if counts[ci] > 0 {
                centers.set_column(ci, &(sums.column(ci) / T::of_usize(counts[ci])));
            }
        }
    }
    centers
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let i = ((q * v.len() as f64) as usize).min(v.len() - 1);
    *v.select_nth_unstable_by(i, |a, b| a.total_cmp(b)).1
}

/// Coupled training on one group; the recorded objective
/// `||X - D_h Z||^2 / N + ridge ||D_h||^2` never increases between epochs.
pub fn train_dictionary_pair<T: Real>(group: &TrainingGroup<T>, cfg: &TrainConfig) -> Result<TrainedDictionary<T>> {
    let (d, n) = group.features.shape();
    let k = cfg.atoms;
    if k == 0 {
        return Err(invalid("atoms", "must be at least 1"));
    }
    if n < k {
        return Err(Error::InsufficientSamples(format!("{n} samples for {k} atoms")));
    }
    if group.targets.ncols() != n {
        return Err(mismatch(n, group.targets.ncols()));
    }
    if !(cfg.ridge > 0.0) {
        return Err(invalid("ridge", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (group.index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let y = &group.features;
    let prob = Problem { y, x: &group.targets, ridge: cfg.ridge, theta_min: T::of(cfg.theta_min) };

    let mut w = if d > 0 { kmeans(y, k, cfg.kmeans_iters, &mut rng) } else { DMatrix::zeros(0, k) };
    for (ci, mut col) in w.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm > T::zero() {
            col /= norm;
        } else if d > 0 {
            col.fill(T::zero());
            col[ci % d] = T::one();
        }
    }
    let sigma = if d > 0 { thin_svd(&w).1[0].as_f64() } else { 0.0 };
    let c = if sigma > 0.0 { 1.0 / (sigma * sigma) } else { 1.0 };
    let ct = T::of(c);
    let w_e = w.transpose() * ct;
    let w_d = DMatrix::<T>::identity(k, k) - w.transpose() * &w * ct;
    let u = &w_e * y;
    let theta0 = quantile(u.iter().map(|v| v.abs().as_f64()).collect(), 1.0 - cfg.init_sparsity).max(cfg.theta_min);
    let mut params = Params { theta: DVector::from_element(k, T::of(theta0)), w_e, w_d };

    let check = |loss: f64, epoch: usize| {
        if loss.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("training loss of group {} at epoch {epoch}", group.index)))
        }
    };
    let mut d_h = prob.solve_dh(&encode_parts(y, &params.theta, &params.w_e, &params.w_d).z)?;
    let mut cur = prob.eval(&params, &d_h);
    check(cur.loss, 0)?;
    let mut losses = vec![cur.loss];
    let mut steps = [0.0f64; 3];

    for epoch in 1..=cfg.epochs {
        d_h = prob.solve_dh(&cur.enc.z)?;
        cur = prob.eval(&params, &d_h);
        for _ in 0..cfg.grad_steps {
            for (bi, block) in [Block::Encode, Block::Lateral, Block::Threshold].into_iter().enumerate() {
                if let Some((q, ev)) = descend(&prob, &params, &d_h, &cur, block, &mut steps[bi]) {
                    params = q;
                    cur = ev;
                }
            }
        }
        if cfg.reseed_dead_atoms && d > 0 {
            if let Some((q, dh, ev)) = reseed(&prob, &params, &cur, c, theta0)? {
                if ev.loss <= cur.loss {
                    params = q;
                    d_h = dh;
                    cur = ev;
                }
            }
        }
        check(cur.loss, epoch)?;
        log::debug!("group {} epoch {epoch}: loss {:.6e}", group.index, cur.loss);
        losses.push(cur.loss);
    }
    let dict = DictionaryPair::new(d_h, params.theta, params.w_e, params.w_d)?;
    Ok(TrainedDictionary { dict, losses })
}

/// Points atoms never used by the current codes at the worst-reconstructed
/// samples and re-solves `D_h`.
fn reseed<T: Real>(
    prob: &Problem<'_, T>,
    p: &Params<T>,
    cur: &Eval<T>,
    c: f64,
    theta0: f64,
) -> Result<Option<(Params<T>, DMatrix<T>, Eval<T>)>> {
    let z = &cur.enc.z;
    let dead: Vec<usize> = (0..z.nrows()).filter(|&i| z.row(i).iter().all(|&v| v == T::zero())).collect();
    if dead.is_empty() {
        return Ok(None);
    }
    let mut worst: Vec<(f64, usize)> = cur
        .residual
        .column_iter()
        .enumerate()
        .map(|(j, r)| (r.norm_squared().as_f64(), j))
        .collect();
    worst.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut q = p.clone();
    let mut changed = false;
    for (&atom, &(_, sample)) in dead.iter().zip(worst.iter()) {
        let col = prob.y.column(sample);
        let norm = col.norm();
        if norm == T::zero() {
            continue;
        }
        let dir = col / norm;
        q.w_e.set_row(atom, &(dir.transpose() * T::of(c)));
        q.w_d.row_mut(atom).fill(T::zero());
        q.w_d.column_mut(atom).fill(T::zero());
        q.w_d[(atom, atom)] = T::of(1.0 - c);
        q.theta[atom] = T::of(theta0);
        changed = true;
    }
    if !changed {
        return Ok(None);
    }
    let enc = encode_parts(prob.y, &q.theta, &q.w_e, &q.w_d);
    let d_h = prob.solve_dh(&enc.z)?;
    let ev = prob.eval(&q, &d_h);
    Ok(Some((q, d_h, ev)))
}
