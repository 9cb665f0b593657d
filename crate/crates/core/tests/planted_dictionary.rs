use lrsr_core::external::{lista_encode_batch, train_dictionary_pair, TrainConfig, TrainingGroup};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Features `W* z`, targets `D* z` with 2-sparse `z`.
fn planted(n: usize, w: &DMatrix<f64>, d: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> TrainingGroup<f64> {
    let k = w.ncols();
    let mut z = DMatrix::<f64>::zeros(k, n);
    for j in 0..n {
        let a = rng.random_range(0..k);
        let mut b = rng.random_range(0..k - 1);
        if b >= a {
            b += 1;
        }
        for i in [a, b] {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            z[(i, j)] = sign * rng.random_range(1.0..2.0);
        }
    }
    TrainingGroup { index: 0, features: w * &z, targets: d * &z }
}

#[test]
fn planted_dictionary_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (dim, n_hr, k) = (20, 36, 12);
    let mut w = DMatrix::<f64>::from_fn(dim, k, |_, _| rng.sample(StandardNormal));
    for mut c in w.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    let d = DMatrix::<f64>::from_fn(n_hr, k, |_, _| rng.sample(StandardNormal));
    let train = planted(3000, &w, &d, &mut rng);
    let held = planted(500, &w, &d, &mut rng);
    let cfg = TrainConfig { atoms: k, epochs: 50, ridge: 1e-6, ..Default::default() };
    let t = train_dictionary_pair(&train, &cfg).unwrap();
    for pair in t.losses.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9);
    }
    let z = lista_encode_batch(&held.features, &t.dict).unwrap();
    let resid = (&t.dict.d_h * z - &held.targets).norm_squared() / held.targets.norm_squared();
    assert!(resid < 0.05, "held-out residual energy {resid}");
}
