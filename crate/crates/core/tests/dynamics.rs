use std::sync::Arc;

use volfem::fem::{assemble_constraint_row, enclosed_volume, interpolate};
use volfem::material::MaterialModel;
use volfem::mesh::{Mesh, Side};
use volfem::sparse::dot;
use volfem::stepper::{ConstraintMode, SimConfig, Simulator, StepError};

fn kicked(mode: ConstraintMode, model: MaterialModel) -> (Vec<f64>, Vec<f64>) {
    let mesh = Mesh::structured_square(8, 8, &[Side::Left]).unwrap();
    let mut cfg = SimConfig::new(model);
    cfg.constraint_mode = mode;
    cfg.kappa = 0.2;
    let mut sim = Simulator::new(&mesh, cfg).unwrap();
    let mut state = sim.rest_state();
    state.v = interpolate(&mesh, |[x, y]| [0.3 * x * (3.0 * y).sin(), 0.2 * x * x]);
    sim.dofs().zero_dirichlet(&mut state.v);
    let mut energy = Vec::new();
    let mut volume = Vec::new();
    for _ in 0..60 {
        let (k, w) = sim.energies(&state).unwrap();
        energy.push(k + w);
        volume.push(enclosed_volume(&mesh, &state.u));
        state = sim.step(&state, 5e-3).unwrap().0;
    }
    (energy, volume)
}

#[test]
fn unloaded_motion_dissipates_energy() {
    for mode in [ConstraintMode::Split, ConstraintMode::FrozenGeometry] {
        for model in volfem::studies::reference_models() {
            let (energy, volume) = kicked(mode, model.clone());
            // the first step projects the kick onto the volume-preserving motions
            for w in energy[1..].windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} {:?}: {} > {}", model.name(), mode, w[1], w[0]);
            }
            assert!(energy.last().unwrap() < &(0.9 * energy[1]));
            for v in &volume {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn constraint_modes_agree() {
    let a = kicked(ConstraintMode::Split, MaterialModel::stvk(1.0, 2.0).unwrap()).0;
    let b = kicked(ConstraintMode::FrozenGeometry, MaterialModel::stvk(1.0, 2.0).unwrap()).0;
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
    }
}

#[test]
fn discrete_flux_vanishes_at_step_midpoint() {
    let mesh = Mesh::structured_square(6, 6, &[Side::Left, Side::Bottom]).unwrap();
    let mut cfg = SimConfig::new(MaterialModel::fung(0.0, 1.0, 2.0).unwrap());
    cfg.boundary_load = Arc::new(|x, n, t| [3.0 * t * x[1] * n[0], -2.0 * t * x[0] * n[1]]);
    let mut sim = Simulator::new(&mesh, cfg).unwrap();
    let mut state = sim.rest_state();
    let dt = 4e-3;
    for _ in 0..20 {
        let next = sim.step(&state, dt).unwrap().0;
        let mid: Vec<f64> = state.u.iter().zip(&next.v).map(|(a, b)| a + 0.5 * dt * b).collect();
        assert!(dot(&assemble_constraint_row(&mesh, &mid), &next.v).abs() < 1e-9);
        state = next;
    }
    assert!(state.v.iter().any(|x| x.abs() > 1e-4));
}

#[test]
fn incompatible_start_is_rejected() {
    let mesh = Mesh::structured_square(4, 4, &[Side::Left]).unwrap();
    let cfg = SimConfig::new(MaterialModel::stvk(1.0, 1.0).unwrap());
    let mut sim = Simulator::new(&mesh, cfg).unwrap();
    let mut state = sim.rest_state();
    state.v = interpolate(&mesh, |[x, _]| [x, 0.0]);
    assert!(matches!(sim.run(state, |_, _| {}), Err(StepError::IncompatibleInitialData(_))));
}
