//! Contraction of the fixed-point map: bisects for the largest step size at
//! which every iteration still contracts, then halves it twice.

use volfem::mesh::{Mesh, Side};
use volfem::studies::{contraction_study, smooth_pulse_config};

fn main() {
    let mesh = Mesh::structured_square(8, 8, &[Side::Left]).unwrap();
    let cfg = smooth_pulse_config(0.5, 0.05);
    let r = contraction_study(&mesh, &cfg, 1e-3, 10.0, 12).unwrap();
    println!("dt* = {:.4} after {} bisection steps", r.dt_star, r.bisection_steps);
    for (dt, ratio) in &r.levels {
        println!("  dt {dt:.4}: max ratio {ratio:.4}");
    }
    println!("contracting {}, non-increasing {}", r.all_contracting(), r.non_increasing());
}
