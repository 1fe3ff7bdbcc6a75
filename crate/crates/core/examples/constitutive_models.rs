//! Stress and tangent of the three reference models at one strain, then the
//! finite-difference derivative suite for each.

use volfem::material::{energy_density, first_piola, second_piola, MaterialModel};
use volfem::studies::{material_fd_suite, reference_models};
use volfem::tensor::{green_st_venant, Mat2};

fn main() {
    let grad_u = Mat2::from_fn(|i, j| [[0.08, 0.03], [-0.02, 0.05]][i][j]);
    let e = green_st_venant(&grad_u);
    for model in reference_models() {
        let w = energy_density(&model, &e).unwrap();
        let s = second_piola(&model, &e).unwrap();
        let p = first_piola(&model, &grad_u).unwrap();
        println!("{:6} W = {w:.6e}  S = {:?}  P = {:?}", model.name(), s.as_matrix().entries, p.entries);
    }
    for model in reference_models() {
        let c = material_fd_suite(&model, 200, 42).unwrap();
        println!(
            "{:6} stress err {:.1e} | tangent err {:.1e} | piola err {:.1e} | pass {}",
            model.name(),
            c.stress.max_rel_error,
            c.tangent.max_rel_error,
            c.first_piola.max_rel_error,
            c.passes()
        );
    }
    // Invalid parameters are rejected up front.
    println!("{:?}", MaterialModel::stvk(-1.0, 1.0).err());
}
