//! Shared by the oracle and acceptance targets.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use volfem::saddle::BorderedSystem;
use volfem::sparse::CsrMatrix;

/// Random sparse SPD matrix: diagonally dominant with a few off-diagonal couplings.
pub fn random_system(rng: &mut impl Rng, n: usize) -> BorderedSystem {
    let mut t = Vec::new();
    let mut diag = vec![0.1; n];
    for i in 0..n {
        for _ in 0..4 {
            let j = rng.gen_range(0..n);
            if j != i {
                let w: f64 = rng.gen_range(-1.0..1.0);
                t.extend([(i, j, w), (j, i, w)]);
                diag[i] += w.abs();
                diag[j] += w.abs();
            }
        }
    }
    t.extend(diag.iter().enumerate().map(|(i, d)| (i, i, *d)));
    BorderedSystem {
        matrix: CsrMatrix::from_triplets(n, &t),
        row: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        rhs: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        h: rng.gen_range(-1.0..1.0),
    }
}

pub fn dense_solve(sys: &BorderedSystem) -> (Vec<f64>, f64) {
    let n = sys.row.len();
    let mut k = DMatrix::<f64>::zeros(n + 1, n + 1);
    for (i, row) in sys.matrix.to_dense().iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            k[(i, j)] = *v;
        }
        k[(i, n)] = sys.row[i];
        k[(n, i)] = sys.row[i];
    }
    let mut f = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        f[i] = sys.rhs[i];
    }
    f[n] = sys.h;
    let x = k.lu().solve(&f).expect("nonsingular KKT matrix");
    (x.iter().take(n).copied().collect(), x[n])
}

