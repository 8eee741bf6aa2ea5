//! Givens QR on randomly drawn real-domain channels of every size up to 240x240.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sekbest::channel::draw_channel;
use sekbest::numerics::{qr_givens, real_channel, RealMatrix};

const TOL: f64 = 1e-9;

fn check(a: &RealMatrix, sorted: bool) {
    let f = qr_givens(a, sorted).unwrap();
    let n = a.cols();
    let qr = f.q.matmul(&f.r).unwrap();
    let reference = a.permute_columns(&f.column_order).unwrap();
    assert!(qr.max_abs_diff(&reference) < TOL, "reconstruction {}x{}", a.rows(), n);
    let gram = f.q.transpose().matmul(&f.q).unwrap();
    assert!(gram.max_abs_diff(&RealMatrix::identity(n)) < TOL, "orthogonality {}x{}", a.rows(), n);
    for i in 0..n {
        assert!(f.r[(i, i)] > 0.0);
        for j in 0..i {
            assert_eq!(f.r[(i, j)], 0.0);
        }
    }
}

#[test]
fn thousand_random_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(240);
    for trial in 0..1000 {
        // Every fifth matrix is full size; the rest cover the range.
        let n = if trial % 5 == 0 { 120 } else { rng.random_range(1..=120) };
        let h = draw_channel(n, n, &mut rng).unwrap();
        check(&real_channel(&h), trial % 2 == 1);
    }
}

#[test]
fn tall_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n_t = rng.random_range(1..=40);
        let n_r = n_t + rng.random_range(0..=20);
        let h = draw_channel(n_t, n_r, &mut rng).unwrap();
        check(&real_channel(&h), false);
        check(&real_channel(&h), true);
    }
}
