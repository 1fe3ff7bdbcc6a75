//! The "beat" preset: a periodic boundary traction on a block clamped on one
//! side. The enclosed volume stays fixed while the pressure responds.

use volfem::config::RunConfig;
use volfem::stepper::{Simulator, TerminationReason};

fn main() {
    let cfg = RunConfig::preset("beat").unwrap();
    let mesh = cfg.mesh.build().unwrap();
    let mut sim = Simulator::new(&mesh, cfg.sim.clone()).unwrap();
    let mut worst = 0.0_f64;
    let out = sim
        .run(sim.rest_state(), |row, _| {
            worst = worst.max(row.volume_drift.abs());
            if (row.t * 1000.0).round() as i64 % 50 == 0 {
                println!("t {:.3}  p {:+.5e}  kinetic {:.3e}  fp iters {}", row.t, row.pressure, row.kinetic, row.fp_iters);
            }
        })
        .unwrap();
    assert_eq!(out.reason, TerminationReason::ReachedTEnd);
    println!("{} steps, max |volume drift| {worst:.2e}, max contraction {:.3}", out.rows.len() - 1, out.max_contraction);
}
