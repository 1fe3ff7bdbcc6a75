//! Finite-element operators on a square: mass, diffusion, internal force,
//! and the volume-constraint row checked against the enclosed volume.

use volfem::fem::{
    assemble_constraint_row, assemble_diffusion, assemble_internal_force, assemble_mass, enclosed_volume, interpolate,
    min_det, stored_energy, DofMap,
};
use volfem::material::MaterialModel;
use volfem::mesh::{Mesh, Side};
use volfem::sparse::dot;

fn main() {
    let mesh = Mesh::structured_square(12, 12, &[Side::Left]).unwrap();
    let dofs = DofMap::new(&mesh);
    let mass = assemble_mass(&mesh);
    let stiff = assemble_diffusion(&mesh, 1.0);
    let ones = interpolate(&mesh, |_| [1.0, 0.0]);
    println!("{} dofs ({} clamped), mass nnz {}, diffusion nnz {}", dofs.num_dofs(), dofs.dirichlet_dofs().len(), mass.nnz(), stiff.nnz());
    println!("1ᵀM1 = {:.12} (area)", dot(&ones, &mass.mul_vec(&ones)));

    let mut u = interpolate(&mesh, |[x, y]| [0.05 * x * y, -0.03 * x * x]);
    dofs.zero_dirichlet(&mut u);
    let mut v = interpolate(&mesh, |[x, y]| [x * (3.0 * y).sin(), x * y]);
    dofs.zero_dirichlet(&mut v);

    let b = assemble_constraint_row(&mesh, &u);
    let h = 1e-5;
    let shifted = |s: f64| -> Vec<f64> { u.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
    let fd = (enclosed_volume(&mesh, &shifted(h)) - enclosed_volume(&mesh, &shifted(-h))) / (2.0 * h);
    println!("b(u)·v = {:.12}, d/ds volume = {:.12}", dot(&b, &v), fd);

    let model = MaterialModel::stvk(1.0, 2.0).unwrap();
    let r = assemble_internal_force(&mesh, &model, &u).unwrap();
    let fd = (stored_energy(&mesh, &model, &shifted(h)).unwrap() - stored_energy(&mesh, &model, &shifted(-h)).unwrap()) / (2.0 * h);
    println!("-r(u)·v = {:.10}, d/ds energy = {:.10}", -dot(&r, &v), fd);
    println!("volume {:.8}, min det Φ {:.6}", enclosed_volume(&mesh, &u), min_det(&mesh, &u));
}
