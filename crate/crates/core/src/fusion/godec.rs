//! Alternating rank / cardinality projections for `X = L + S + G`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::project::{hard_threshold_card, rank_r_project, Projector};
use super::stack::StackedMatrix;
use crate::container::Container;
use crate::error::{invalid, Error, Result};
use crate::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GodecConfig {
    /// Rank bound on `L`.
    pub rank: usize,
    /// Cardinality bound on `S`; `None` uses `ceil(card_fraction * n * J)`.
    pub k_card: Option<usize>,
    pub card_fraction: f64,
    /// Relative change of the residual norm that ends the iteration.
    pub eps: f64,
    pub max_iter: usize,
    pub projector: Projector,
    /// Seed for the randomized projector.
    pub seed: u64,
}

impl Default for GodecConfig {
    fn default() -> Self {
        Self {
            rank: 1,
            k_card: None,
            card_fraction: 0.05,
            eps: 1e-7,
            max_iter: 200,
            projector: Projector::default(),
            seed: 0,
        }
    }
}

impl GodecConfig {
    pub fn resolved_k_card(&self, n: usize, j: usize) -> usize {
        self.k_card
            .unwrap_or_else(|| (self.card_fraction * (n * j) as f64).ceil() as usize)
    }
}

/// Result of [`godec`]: `x = low_rank + sparse + noise`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition<T: Real> {
    pub low_rank: DMatrix<T>,
    pub sparse: DMatrix<T>,
    pub noise: DMatrix<T>,
    pub rank: usize,
    pub k_card: usize,
    pub iterations: usize,
    /// `||X - L - S||_F` of the returned iterate.
    pub residual_norm: T,
    /// Residual norm after each iteration.
    pub history: Vec<T>,
    /// False when `max_iter` ran out before the stopping rule fired.
    pub converged: bool,
}

impl<T: Real> Decomposition<T> {
    /// `L + S + G`, which reproduces the input up to rounding.
    pub fn compose(&self) -> DMatrix<T> {
        &self.low_rank + (&self.sparse + &self.noise)
    }

    pub fn sparse_nnz(&self) -> usize {
        self.sparse.iter().filter(|v| **v != T::zero()).count()
    }

    /// Header `(n, J, r, k_card, iterations)` plus the `L`, `S`, `G` matrices.
    pub fn to_container(&self) -> Container {
        let mut c = Container::new(DECOMPOSITION_KIND);
        let (n, j) = self.low_rank.shape();
        for (name, v) in [("n", n), ("J", j), ("r", self.rank), ("k_card", self.k_card), ("iterations", self.iterations)] {
            c.push_attr(name, v as u64);
        }
        c.push_attr("converged", self.converged as u64);
        c.push_array("L", &self.low_rank);
        c.push_array("S", &self.sparse);
        c.push_array("G", &self.noise);
        c.push_array("history", &DMatrix::from_column_slice(self.history.len(), 1, &self.history));
        c.push_array("residual_norm", &DMatrix::from_element(1, 1, self.residual_norm));
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(DECOMPOSITION_KIND)?;
        let low_rank: DMatrix<T> = c.array("L")?;
        let shape = (c.attr("n")? as usize, c.attr("J")? as usize);
        if low_rank.shape() != shape {
            return Err(Error::Format("L shape disagrees with header".into()));
        }
        Ok(Self {
            low_rank,
            sparse: c.array("S")?,
            noise: c.array("G")?,
            rank: c.attr("r")? as usize,
            k_card: c.attr("k_card")? as usize,
            iterations: c.attr("iterations")? as usize,
            residual_norm: c.array::<T>("residual_norm")?[(0, 0)],
            history: c.array::<T>("history")?.iter().copied().collect(),
            converged: c.attr("converged")? != 0,
        })
    }
}

pub const DECOMPOSITION_KIND: &str = "decomposition";

/// Splits `X - L` into the sparse part (support of the `k` largest entries)
/// and the dense residual, so `S + G` equals `X - L` exactly.
fn split_residual<T: Real>(residual: &DMatrix<T>, k: usize) -> (DMatrix<T>, DMatrix<T>) {
    let sparse = hard_threshold_card(residual, k);
    let noise = residual.zip_map(&sparse, |r, s| if s != T::zero() { T::zero() } else { r });
    (sparse, noise)
}

pub fn godec<T: Real>(x: &StackedMatrix<T>, cfg: &GodecConfig) -> Result<Decomposition<T>> {
    let m = &x.x;
    let (n, j) = m.shape();
    if cfg.rank == 0 {
        return Err(invalid("rank", "must be at least 1"));
    }
    let k = cfg.resolved_k_card(n, j);
    if k >= n * j {
        return Err(invalid("k_card", format!("{k} must be below n*J = {}", n * j)));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("godec input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eps = T::of(cfg.eps);
    let floor = T::of(64.0) * T::default_epsilon() * m.norm();

    let mut sparse = DMatrix::<T>::zeros(n, j);
    let mut best: Option<(DMatrix<T>, DMatrix<T>, DMatrix<T>, T, usize)> = None;
    let mut history = Vec::new();
    let mut converged = false;
    let mut prev = T::infinity();

    for t in 1..=cfg.max_iter {
        let low = rank_r_project(&(m - &sparse), cfg.rank, &cfg.projector, &mut rng);
        let residual = m - &low;
        let (s, noise) = split_residual(&residual, k);
        sparse = s;
        let obj = noise.norm();
        history.push(obj);
        if best.as_ref().is_none_or(|b| obj <= b.3) {
            best = Some((low, sparse.clone(), noise, obj, t));
        }
        let change = (prev - obj).abs();
        if obj <= floor || (prev.is_finite() && change <= eps * prev) {
            converged = true;
            break;
        }
        prev = obj;
    }
    let (low_rank, sparse, noise, residual_norm, _) = best.expect("max_iter >= 1");
    if !converged {
        log::warn!(
            "godec stopped at max_iter={} without meeting eps={} (residual {})",
            cfg.max_iter,
            cfg.eps,
            residual_norm.as_f64()
        );
    }
    Ok(Decomposition {
        low_rank,
        sparse,
        noise,
        rank: cfg.rank,
        k_card: k,
        iterations: history.len(),
        residual_norm,
        history,
        converged,
    })
}
