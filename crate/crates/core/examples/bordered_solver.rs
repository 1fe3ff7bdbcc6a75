//! An SPD system with one constraint row: solve, check the KKT residuals,
//! then reuse the factorization for a second row.

use volfem::fem::{assemble_constraint_row, assemble_diffusion, assemble_mass, DofMap};
use volfem::mesh::{Mesh, Side};
use volfem::saddle::{kkt_residuals, recover_multiplier, BorderedSolver, BorderedSystem};

fn main() {
    let mesh = Mesh::structured_square(16, 16, &[Side::Left]).unwrap();
    let dofs = DofMap::new(&mesh);
    let dt = 1e-2;
    let a = assemble_mass(&mesh).linear_combination(1.0, &assemble_diffusion(&mesh, 1.0), dt).eliminate(dofs.dirichlet_dofs());
    let mut row = assemble_constraint_row(&mesh, &dofs.zeros());
    dofs.zero_dirichlet(&mut row);
    let mut rhs: Vec<f64> = (0..dofs.num_dofs()).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
    dofs.zero_dirichlet(&mut rhs);

    let solver = BorderedSolver::new(&a).unwrap();
    let (v, p) = solver.solve(&row, &rhs, 0.0).unwrap();
    let sys = BorderedSystem { matrix: a, row: row.clone(), rhs: rhs.clone(), h: 0.0 };
    let (rm, rc) = kkt_residuals(&sys, &v, p);
    println!("multiplier {p:.6e}; relative residuals momentum {rm:.1e}, constraint {rc:.1e}");

    let (_, p2) = solver.solve(&row, &rhs, 0.1).unwrap();
    println!("prescribed flux 0.1 -> multiplier {p2:.6e}");

    let c = 3.25;
    println!("recovered pressure from traction c·n: {:.15}", recover_multiplier(&mesh, |_, n| [c * n[0], c * n[1]]));
}
