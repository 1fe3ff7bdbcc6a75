//! Fractional norms in time and the scaling probes.

use volfem::estlab::{
    fractional_norm, holder_embedding_check, lipschitz_scaling_probe, probe_fields, SampledSignal, SignalFamily,
};
use volfem::mesh::{Mesh, Side};
use volfem::stepper::SimConfig;
use volfem::studies::reference_models;

fn main() {
    let ts = [1.0, 0.1, 0.01, 0.001];
    for n in [101, 201, 401, 801] {
        let s = SampledSignal::from_fn(1.0, n, |t| t).unwrap();
        println!("‖t‖ in W^(0.4,4)(0,1) with {n} samples: {:.6}", fractional_norm(&s, 0.4, 4.0).unwrap());
    }
    for fam in [SignalFamily::Linear, SignalFamily::Smooth, SignalFamily::Brownian { seed: 3 }] {
        let r = holder_embedding_check(&fam, 0.6, 3.0, &ts).unwrap();
        println!("{:>12}: sup|φ-φ(0)| / ‖φ‖ decays like T^{:.3}", fam.name(), r.slope);
    }
    let mesh = Mesh::structured_square(8, 8, &[Side::Left]).unwrap();
    let (v1, v2) = probe_fields(&mesh, 1.0);
    for model in reference_models() {
        let r = lipschitz_scaling_probe(&SimConfig::new(model.clone()), &mesh, &v1, &v2, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
        println!("{:6} slopes: force {:.3}, boundary {:.3}, constraint {:.3}", model.name(), r.force.slope, r.boundary.slope, r.constraint.slope);
    }
    print!("{}", holder_embedding_check(&SignalFamily::Linear, 0.9, 4.0, &ts).unwrap().to_csv());
}
