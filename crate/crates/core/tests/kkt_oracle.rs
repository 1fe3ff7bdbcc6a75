//! Bordered solves against a dense LU of the full saddle-point matrix.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use volfem::saddle::{kkt_residuals, solve_bordered};

use common::{dense_solve, random_system};

#[test]
fn matches_dense_lu_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let n = rng.gen_range(2..=200);
        let sys = random_system(&mut rng, n);
        let (v, p) = solve_bordered(&sys).unwrap();
        let (vd, pd) = dense_solve(&sys);
        let scale = vd.iter().fold(pd.abs(), |m, x| m.max(x.abs())).max(1.0);
        let diff = v.iter().zip(&vd).fold((p - pd).abs(), |m, (a, b)| m.max((a - b).abs()));
        assert!(diff / scale < 1e-10, "n = {n}: {diff}");
        let (rm, rc) = kkt_residuals(&sys, &v, p);
        assert!(rm < 1e-10 && rc < 1e-10, "n = {n}: {rm} {rc}");
    }
}
