//! The multiplier against the pressure reconstructed from the boundary
//! traction, under refinement. On the frame the clamped and loaded parts of
//! the boundary never touch; on the clamped square they meet at corners and
//! convergence is slower.

use volfem::mesh::{Mesh, Side};
use volfem::studies::{pressure_refinement, smooth_pulse_config};

fn main() {
    let cfg = smooth_pulse_config(2.0, 0.2);
    let frame = pressure_refinement(&cfg, &[8, 16, 32], |n| Mesh::structured_frame(n, 0.375, 0.625)).unwrap();
    println!("frame : discrepancy {:?} orders {:?}", frame.discrepancy, frame.orders);
    let square = pressure_refinement(&cfg, &[8, 16, 32], |n| Mesh::structured_square(n, n, &[Side::Left])).unwrap();
    println!("square: discrepancy {:?} orders {:?}", square.discrepancy, square.orders);
}
