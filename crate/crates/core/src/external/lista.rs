//! Depth-one learned ISTA encoder and the coupled dictionary it feeds.

use nalgebra::{DMatrix, DVector};

use crate::container::Container;
use crate::error::{invalid, mismatch, Error, Result};
use crate::Real;

pub const DICTIONARY_KIND: &str = "dictionary_pair";

/// `D_h` decodes codes to HR residual patches; `(theta, W_e, W_d)` encode
/// LR features.
#[derive(Clone, Debug, PartialEq)]
pub struct DictionaryPair<T: Real> {
    /// `n_hr x K`.
    pub d_h: DMatrix<T>,
    /// Length `K`, positive.
    pub theta: DVector<T>,
    /// `K x d`.
    pub w_e: DMatrix<T>,
    /// `K x K`.
    pub w_d: DMatrix<T>,
}

impl<T: Real> DictionaryPair<T> {
    pub fn new(d_h: DMatrix<T>, theta: DVector<T>, w_e: DMatrix<T>, w_d: DMatrix<T>) -> Result<Self> {
        let k = theta.len();
        if d_h.ncols() != k {
            return Err(mismatch(k, d_h.ncols()));
        }
        if w_e.nrows() != k {
            return Err(mismatch(k, w_e.nrows()));
        }
        if w_d.shape() != (k, k) {
            return Err(mismatch(k * k, w_d.len()));
        }
        if theta.iter().any(|&t| t <= T::zero()) {
            return Err(invalid("theta", "must be positive"));
        }
        let finite = |m: &DMatrix<T>| m.iter().all(|v| v.is_finite());
        if !(finite(&d_h) && finite(&w_e) && finite(&w_d) && theta.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("dictionary pair".into()));
        }
        Ok(Self { d_h, theta, w_e, w_d })
    }

    pub fn n_atoms(&self) -> usize {
        self.theta.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.w_e.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.d_h.nrows()
    }

    pub fn to_container(&self) -> Container {
        let mut c = Container::new(DICTIONARY_KIND);
        c.push_attr("K", self.n_atoms() as u64);
        c.push_attr("d", self.feature_dim() as u64);
        c.push_attr("n_hr", self.output_dim() as u64);
        c.push_array("D_h", &self.d_h);
        c.push_array("theta", &DMatrix::from_column_slice(self.n_atoms(), 1, self.theta.as_slice()));
        c.push_array("W_e", &self.w_e);
        c.push_array("W_d", &self.w_d);
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(DICTIONARY_KIND)?;
        let theta: DMatrix<T> = c.array("theta")?;
        let pair = Self::new(
            c.array("D_h")?,
            DVector::from_column_slice(theta.as_slice()),
            c.array("W_e")?,
            c.array("W_d")?,
        )?;
        let dims = (c.attr("K")? as usize, c.attr("d")? as usize, c.attr("n_hr")? as usize);
        if dims != (pair.n_atoms(), pair.feature_dim(), pair.output_dim()) {
            return Err(Error::Format("dictionary header disagrees with arrays".into()));
        }
        Ok(pair)
    }
}

/// `sign(v) * max(|v| - theta, 0)`.
pub fn soft_threshold<T: Real>(v: T, theta: T) -> T {
    if v > theta {
        v - theta
    } else if v < -theta {
        v + theta
    } else {
        T::zero()
    }
}

fn shrink_rows<T: Real>(m: &DMatrix<T>, theta: &DVector<T>) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| soft_threshold(m[(i, j)], theta[i]))
}

/// Intermediate quantities of a batch encode, one column per sample.
pub(crate) struct Encoded<T: Real> {
    /// `W_e Y`.
    pub u: DMatrix<T>,
    /// `S(u)`.
    pub a: DMatrix<T>,
    /// `u + W_d a`.
    pub v: DMatrix<T>,
    /// `S(v)`.
    pub z: DMatrix<T>,
}

pub(crate) fn encode_parts<T: Real>(y: &DMatrix<T>, theta: &DVector<T>, w_e: &DMatrix<T>, w_d: &DMatrix<T>) -> Encoded<T> {
    let u = w_e * y;
    let a = shrink_rows(&u, theta);
    let v = &u + w_d * &a;
    let z = shrink_rows(&v, theta);
    Encoded { u, a, v, z }
}

/// Codes of every feature column: `S(W_e y + W_d S(W_e y))`.
pub fn lista_encode_batch<T: Real>(features: &DMatrix<T>, dict: &DictionaryPair<T>) -> Result<DMatrix<T>> {
    if features.nrows() != dict.feature_dim() {
        return Err(mismatch(dict.feature_dim(), features.nrows()));
    }
    Ok(encode_parts(features, &dict.theta, &dict.w_e, &dict.w_d).z)
}

pub fn lista_encode<T: Real>(feature: &DVector<T>, dict: &DictionaryPair<T>) -> Result<DVector<T>> {
    let m = DMatrix::from_column_slice(feature.len(), 1, feature.as_slice());
    let z = lista_encode_batch(&m, dict)?;
    Ok(DVector::from_column_slice(z.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_dict(k: usize, d: usize, n: usize, rng: &mut ChaCha8Rng) -> DictionaryPair<f64> {
        DictionaryPair::new(
            DMatrix::from_fn(n, k, |_, _| rng.sample(StandardNormal)),
            DVector::from_fn(k, |_, _| rng.random_range(0.05..0.5)),
            DMatrix::from_fn(k, d, |_, _| rng.sample(StandardNormal)),
            DMatrix::from_fn(k, k, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal)),
        )
        .unwrap()
    }

    #[test]
    fn matches_two_stage_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let dict = random_dict(16, 8, 5, &mut rng);
            let y = DVector::from_fn(8, |_, _| rng.sample(StandardNormal));
            let z = lista_encode(&y, &dict).unwrap();
            let st = |v: f64, t: f64| v.signum() * (v.abs() - t).max(0.0);
            let mut first = vec![0.0; 16];
            for i in 0..16 {
                let u: f64 = (0..8).map(|j| dict.w_e[(i, j)] * y[j]).sum();
                first[i] = st(u, dict.theta[i]);
            }
            for i in 0..16 {
                let u: f64 = (0..8).map(|j| dict.w_e[(i, j)] * y[j]).sum();
                let lat: f64 = (0..16).map(|j| dict.w_d[(i, j)] * first[j]).sum();
                assert!((z[i] - st(u + lat, dict.theta[i])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut dict = random_dict(6, 4, 3, &mut rng);
        let y = DVector::from_fn(4, |_, _| rng.sample(StandardNormal));
        dict.w_d.fill(0.0);
        let z = lista_encode(&y, &dict).unwrap();
        let u = &dict.w_e * &y;
        for i in 0..6 {
            assert_eq!(z[i], soft_threshold(u[i], dict.theta[i]));
        }
        dict.theta.fill(1e6);
        assert!(lista_encode(&y, &dict).unwrap().iter().all(|&v| v == 0.0));
        assert!(lista_encode(&DVector::zeros(3), &dict).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        let ok = (DMatrix::<f64>::zeros(3, 2), DVector::from_element(2, 0.1), DMatrix::zeros(2, 4), DMatrix::zeros(2, 2));
        assert!(DictionaryPair::new(ok.0.clone(), ok.1.clone(), ok.2.clone(), ok.3.clone()).is_ok());
        assert!(DictionaryPair::new(DMatrix::zeros(3, 3), ok.1.clone(), ok.2.clone(), ok.3.clone()).is_err());
        assert!(DictionaryPair::new(ok.0.clone(), DVector::from_element(2, 0.0), ok.2.clone(), ok.3.clone()).is_err());
        assert!(DictionaryPair::new(ok.0.clone(), ok.1.clone(), ok.2.clone(), DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn container_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dict = random_dict(7, 5, 9, &mut rng);
        let mut buf = Vec::new();
        dict.to_container().write_to(&mut buf).unwrap();
        let back = DictionaryPair::<f64>::from_container(&Container::read_from(&mut buf.as_slice()).unwrap()).unwrap();
        assert_eq!(back, dict);
    }

    proptest! {
        #[test]
        fn soft_threshold_properties(v in -10.0f64..10.0, w in -10.0f64..10.0, t in 0.0f64..5.0) {
            prop_assert_eq!(soft_threshold(-v, t), -soft_threshold(v, t));
            if v.abs() <= t {
                prop_assert_eq!(soft_threshold(v, t), 0.0);
            }
            prop_assert!((soft_threshold(v, t) - soft_threshold(w, t)).abs() <= (v - w).abs() + 1e-14 * (v.abs() + w.abs() + t));
        }
    }
}
