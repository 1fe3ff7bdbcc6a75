//! The continuation alternative: a large crushing traction ends the run
//! early. Bisects on the load amplitude for the smallest one that does.

use volfem::config::{LoadSpec, RunConfig};
use volfem::stepper::{Simulator, TerminationReason};

fn outcome(amplitude: f64, t_end: f64) -> TerminationReason {
    let mut cfg = RunConfig::preset("crush").unwrap();
    cfg.mesh = volfem::config::MeshSource::Square { nx: 8, ny: 8, dirichlet: vec![volfem::mesh::Side::Left] };
    cfg.sim.t_end = t_end;
    cfg.load = LoadSpec::Crush { amplitude, ramp: 0.05 };
    cfg.apply_loads();
    let mesh = cfg.mesh.build().unwrap();
    let mut sim = Simulator::new(&mesh, cfg.sim).unwrap();
    sim.run(sim.rest_state(), |_, _| {}).unwrap().reason
}

fn main() {
    let preset = RunConfig::preset("crush").unwrap();
    let mesh = preset.mesh.build().unwrap();
    let mut sim = Simulator::new(&mesh, preset.sim.clone()).unwrap();
    let out = sim.run(sim.rest_state(), |_, _| {}).unwrap();
    println!("crush preset: {:?} (exit code {})", out.reason, out.reason.exit_code());

    let t_end = 0.1;
    let (mut lo, mut hi) = (1.0, 1e6);
    assert_eq!(outcome(lo, t_end), TerminationReason::ReachedTEnd);
    while hi / lo > 1.1 {
        let mid = (lo * hi).sqrt();
        match outcome(mid, t_end) {
            TerminationReason::ReachedTEnd => lo = mid,
            _ => hi = mid,
        }
    }
    println!("on 8x8 up to t = {t_end}: survives amplitude {lo:.3e}, fails at {hi:.3e} with {:?}", outcome(hi, t_end));
}
