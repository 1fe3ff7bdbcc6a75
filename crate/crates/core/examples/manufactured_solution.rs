//! Convergence against a manufactured solution of the linearized problem.

use volfem::studies::mms_convergence;

fn main() {
    let r = mms_convergence(&[8, 16, 32], 1.0, 0.25).unwrap();
    for l in &r.levels {
        println!("n = {:3}  dt = {:.2e}  |v - v*| = {:.3e}  |p - p*| = {:.3e}", l.cells, l.dt, l.velocity_error, l.pressure_error);
    }
    println!("orders: velocity {:?}, pressure {:?}", r.velocity_orders, r.pressure_orders);
}
