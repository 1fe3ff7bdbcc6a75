//! Small-matrix algebra: cofactors, the determinant differential, and
//! spectral powers of symmetric matrices.

use volfem::tensor::{cofactor, det_directional_derivative, green_st_venant, sym_matrix_power, Mat2, Mat3};

fn main() {
    let a = Mat2::from_fn(|i, j| [[1.2, 0.3], [-0.1, 0.9]][i][j]);
    let h = Mat2::from_fn(|i, j| [[0.0, 1.0], [0.5, -0.2]][i][j]);
    let eps = 1e-6;
    let fd = ((a + h.scale(eps)).det() - (a - h.scale(eps)).det()) / (2.0 * eps);
    println!("det A = {:.6}, cof A = {:?}", a.det(), cofactor(&a).entries);
    println!("d det[H]: exact {:.9}, central difference {:.9}", det_directional_derivative(&a, &h), fd);

    let b = Mat3::from_fn(|i, j| if i == j { 1.0 + 0.1 * i as f64 } else { 0.05 });
    println!("3D: A cof(A)ᵀ = det(A) I? {:?}", (b * cofactor(&b).transpose()).entries);

    let e = green_st_venant(&Mat2::from_fn(|i, j| if i == j { 0.1 } else { 0.02 }));
    let c = e.scale(2.0).add(&volfem::tensor::Sym2::identity());
    let half = sym_matrix_power(&c, 0.5).unwrap();
    let back = half.as_matrix().transpose() * *half.as_matrix();
    println!("C^(1/2) squared vs C: {:?} vs {:?}", back.entries, c.as_matrix().entries);
    match sym_matrix_power(&volfem::tensor::Sym2::diag([1.0, -1.0]), 0.5) {
        Ok(_) => println!("unexpected"),
        Err(err) => println!("negative eigenvalue rejected: {err}"),
    }
}
