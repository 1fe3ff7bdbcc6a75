//! Implicit Euler in time with an inner fixed-point loop for the nonlinear
//! terms.
//!
//! Each step solves, for `v⁺` and the pressure `p⁺`,
//!
//! ```text
//! M (v⁺ − vⁿ)/dt + K v⁺ + p⁺ b(u_c) = f + g + r(u⁺),    b(u_c) · v⁺ = 0,
//! u⁺ = uⁿ + dt v⁺,  u_c = uⁿ + (dt/2) v⁺,
//! ```
//!
//! by iterating a linear bordered solve with the nonlinear terms evaluated at
//! the previous iterate. The constraint geometry `u_c` is the step midpoint:
//! in two dimensions the enclosed volume is quadratic along `uⁿ + s v`, so
//! `vol(u⁺) − vol(uⁿ) = dt b(u_c) · v⁺` holds exactly and the discrete volume
//! is conserved to solver tolerance.

use thiserror::Error;

use crate::fem::{
    assemble_body_load, assemble_constraint_row, assemble_diffusion, assemble_internal_force,
    assemble_internal_force_jacobian, assemble_mass, assemble_neumann_load, element_gradient,
    enclosed_volume, mass_norm, min_det, pressure_boundary_term, stored_energy, zero_body_load,
    zero_boundary_load, BodyLoad, BoundaryLoad, DofMap, NodalField,
};
use crate::material::{first_piola, MaterialError, MaterialModel};
use crate::mesh::{BoundaryTag, Mesh};
use crate::saddle::{BorderedSolver, SaddleError};
use crate::sparse::{dot, CsrMatrix};
use crate::tensor::Mat2;

#[derive(Debug, Error)]
pub enum StepError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Saddle(#[from] SaddleError),
    #[error("fixed-point iteration diverged after {iterations} iterations (last increment {increment:e})")]
    FixedPointDiverged { iterations: usize, increment: f64 },
    #[error("deformation lost invertibility at t = {t} (min det {min_det:e})")]
    InvertibilityLost { t: f64, min_det: f64 },
    #[error("initial data violates compatibility: {0}")]
    IncompatibleInitialData(String),
}

/// How the constraint enters each linear solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Row `b(0)` with the geometric correction moved to the right-hand side.
    Split,
    /// Row `b(u_c)` of the current iterate, zero right-hand side.
    FrozenGeometry,
}

impl ConstraintMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper_split" => Some(Self::Split),
            "frozen_geometry" => Some(Self::FrozenGeometry),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Split => "paper_split",
            Self::FrozenGeometry => "frozen_geometry",
        }
    }
}

#[derive(Clone)]
pub struct SimConfig {
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub constraint_mode: ConstraintMode,
    pub newton_accel: bool,
    pub dt_min: f64,
    pub material: MaterialModel,
    pub body_load: BodyLoad,
    pub boundary_load: BoundaryLoad,
    /// Density. Only 1 is supported.
    pub rho: f64,
    /// Linearize about the reference configuration: zero stress, constraint
    /// row `b(0)`.
    pub linear: bool,
}

impl std::fmt::Debug for SimConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimConfig")
            .field("kappa", &self.kappa)
            .field("dt", &self.dt)
            .field("t_end", &self.t_end)
            .field("fp_tol", &self.fp_tol)
            .field("fp_max_iters", &self.fp_max_iters)
            .field("constraint_mode", &self.constraint_mode)
            .field("newton_accel", &self.newton_accel)
            .field("dt_min", &self.dt_min)
            .field("material", &self.material)
            .field("linear", &self.linear)
            .finish_non_exhaustive()
    }
}

impl SimConfig {
    /// Defaults: κ = 1, dt = 1e-3, t_end = 0.1, fp_tol = 1e-10, no loads.
    pub fn new(material: MaterialModel) -> Self {
        Self {
            kappa: 1.0,
            dt: 1e-3,
            t_end: 0.1,
            fp_tol: 1e-10,
            fp_max_iters: 60,
            constraint_mode: ConstraintMode::Split,
            newton_accel: false,
            dt_min: 1e-6,
            material,
            body_load: zero_body_load(),
            boundary_load: zero_boundary_load(),
            rho: 1.0,
            linear: false,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let bad = |m: &str| Err(StepError::Config(m.to_string()));
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad("sim.kappa must be > 0");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("sim.dt must be > 0");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("sim.t_end must be >= 0");
        }
        if !(self.fp_tol > 0.0) {
            return bad("sim.fp_tol must be > 0");
        }
        if self.fp_max_iters < 2 {
            return bad("sim.fp_max_iters must be >= 2");
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt) {
            return bad("sim.dt_min must be in (0, sim.dt)");
        }
        if self.rho != 1.0 {
            return bad("sim.rho must be 1");
        }
        self.material.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: NodalField,
    pub v: NodalField,
    pub p: f64,
}

impl State {
    pub fn rest(dofs: &DofMap) -> Self {
        Self { t: 0.0, u: dofs.zeros(), v: dofs.zeros(), p: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub fp_iterations: usize,
    pub final_increment: f64,
    pub contraction_ratios: Vec<f64>,
    /// `(vol(u⁺) − vol(uⁿ)) / vol(uⁿ)` over this step.
    pub volume_drift: f64,
    pub min_det: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminationReason {
    ReachedTEnd,
    /// The fixed point kept diverging down to `dt_min` when stepping from `t`.
    BlowUp { t: f64 },
    InvertibilityLost { t: f64 },
}

impl TerminationReason {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ReachedTEnd => 0,
            Self::BlowUp { .. } => 2,
            Self::InvertibilityLost { .. } => 3,
        }
    }
}

/// One accepted step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub pressure: f64,
    pub volume: f64,
    pub volume_drift: f64,
    pub min_det: f64,
    pub kinetic: f64,
    pub strain: f64,
    pub fp_iters: usize,
    pub pressure_consistency: f64,
}

pub const SERIES_HEADER: &str =
    "t,pressure,volume,volume_drift,min_det,kinetic,strain,fp_iters,pressure_consistency";

impl SeriesRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}",
            self.t,
            self.pressure,
            self.volume,
            self.volume_drift,
            self.min_det,
            self.kinetic,
            self.strain,
            self.fp_iters,
            self.pressure_consistency
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<SeriesRow>,
    pub reason: TerminationReason,
    pub final_state: State,
    /// Largest contraction ratio over all accepted steps.
    pub max_contraction: f64,
}

struct FixedPoint {
    v: NodalField,
    p: f64,
    ratios: Vec<f64>,
    iterations: usize,
    increment: f64,
    converged: bool,
}

/// Owns the mesh-dependent operators and the factorization for the
/// current `dt`.
pub struct Simulator<'m> {
    mesh: &'m Mesh,
    dofs: DofMap,
    cfg: SimConfig,
    mass: CsrMatrix,
    diffusion: CsrMatrix,
    rest_row: NodalField,
    cached: Option<(f64, BorderedSolver)>,
}

impl<'m> Simulator<'m> {
    pub fn new(mesh: &'m Mesh, cfg: SimConfig) -> Result<Self, StepError> {
        cfg.validate()?;
        let dofs = DofMap::new(mesh);
        let mass = assemble_mass(mesh);
        let diffusion = assemble_diffusion(mesh, cfg.kappa);
        let mut rest_row = assemble_constraint_row(mesh, &dofs.zeros());
        dofs.zero_dirichlet(&mut rest_row);
        Ok(Self { mesh, dofs, cfg, mass, diffusion, rest_row, cached: None })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn rest_state(&self) -> State {
        State::rest(&self.dofs)
    }

    fn operator(&self, dt: f64) -> CsrMatrix {
        self.mass.linear_combination(1.0 / dt, &self.diffusion, 1.0)
    }

    fn solver_for(&mut self, dt: f64) -> Result<&BorderedSolver, StepError> {
        let stale = !matches!(&self.cached, Some((d, _)) if *d == dt);
        if stale {
            let a = self.operator(dt).eliminate(self.dofs.dirichlet_dofs());
            self.cached = Some((dt, BorderedSolver::new(&a)?));
        }
        Ok(&self.cached.as_ref().unwrap().1)
    }

    fn advance(&self, u: &[f64], v: &[f64], scale: f64) -> NodalField {
        u.iter().zip(v).map(|(a, b)| a + scale * b).collect()
    }

    /// Contraction ratios of the fixed-point map over `iterations` sweeps from
    /// `state`, without the divergence cut-off. A non-finite increment ends
    /// the sweep with an infinite ratio.
    pub fn probe_contraction(&mut self, state: &State, dt: f64, iterations: usize) -> Result<Vec<f64>, StepError> {
        let saved = self.cfg.fp_max_iters;
        self.cfg.fp_max_iters = iterations;
        let out = self.fixed_point(state, dt, false);
        self.cfg.fp_max_iters = saved;
        match out {
            Ok(fp) => Ok(fp.ratios),
            Err(StepError::Material(_)) => Ok(vec![f64::INFINITY]),
            Err(e) => Err(e),
        }
    }

    fn fixed_point(&mut self, state: &State, dt: f64, strict: bool) -> Result<FixedPoint, StepError> {
        let mut base = self.mass.mul_vec(&state.v);
        base.iter_mut().for_each(|x| *x /= dt);
        let body = assemble_body_load(self.mesh, &self.cfg.body_load, state.t + dt);
        let traction = assemble_neumann_load(self.mesh, &self.cfg.boundary_load, state.t + dt);
        for i in 0..base.len() {
            base[i] += body[i] + traction[i];
        }

        let mut v_a = state.v.clone();
        let mut p_a = state.p;
        let mut ratios = Vec::new();
        let mut prev_inc = f64::INFINITY;
        let mut growth = 0;
        let mut converged = false;
        let mut iterations = 0;
        let mut increment = f64::INFINITY;

        while iterations < self.cfg.fp_max_iters {
            iterations += 1;
            // the linear model freezes every nonlinear term at the reference state
            let (u_a, u_c) = if self.cfg.linear {
                (self.dofs.zeros(), self.dofs.zeros())
            } else {
                (self.advance(&state.u, &v_a, dt), self.advance(&state.u, &v_a, 0.5 * dt))
            };
            let force = assemble_internal_force(self.mesh, &self.cfg.material, &u_a)?;
            let mut rhs: Vec<f64> = base.iter().zip(&force).map(|(a, b)| a + b).collect();
            let (mut row, h) = match self.cfg.constraint_mode {
                ConstraintMode::Split => {
                    let correction = pressure_boundary_term(self.mesh, &u_c, p_a);
                    rhs.iter_mut().zip(&correction).for_each(|(r, c)| *r += c);
                    let mut b_c = assemble_constraint_row(self.mesh, &u_c);
                    self.dofs.zero_dirichlet(&mut b_c);
                    let h = dot(&self.rest_row, &v_a) - dot(&b_c, &v_a);
                    (self.rest_row.clone(), h)
                }
                ConstraintMode::FrozenGeometry => (assemble_constraint_row(self.mesh, &u_c), 0.0),
            };
            self.dofs.zero_dirichlet(&mut row);

            let (v_next, p_next) = if self.cfg.newton_accel && !self.cfg.linear {
                let jac = assemble_internal_force_jacobian(self.mesh, &self.cfg.material, &u_a)?;
                let jv = jac.mul_vec(&v_a);
                rhs.iter_mut().zip(&jv).for_each(|(r, j)| *r -= dt * j);
                self.dofs.zero_dirichlet(&mut rhs);
                let a = self.operator(dt).linear_combination(1.0, &jac, -dt).eliminate(self.dofs.dirichlet_dofs());
                match BorderedSolver::new(&a) {
                    Ok(s) => s.solve(&row, &rhs, h)?,
                    Err(_) => {
                        return Err(StepError::FixedPointDiverged { iterations, increment });
                    }
                }
            } else {
                self.dofs.zero_dirichlet(&mut rhs);
                self.solver_for(dt)?.solve(&row, &rhs, h)?
            };

            let dv: Vec<f64> = v_next.iter().zip(&v_a).map(|(a, b)| a - b).collect();
            increment = mass_norm(&self.mass, &dv) + (p_next - p_a).abs();
            if !increment.is_finite() {
                if strict {
                    return Err(StepError::FixedPointDiverged { iterations, increment });
                }
                ratios.push(f64::INFINITY);
                break;
            }
            if prev_inc.is_finite() {
                ratios.push(if prev_inc > 0.0 { increment / prev_inc } else { 0.0 });
                growth = if increment > prev_inc { growth + 1 } else { 0 };
                if strict && growth >= 3 {
                    return Err(StepError::FixedPointDiverged { iterations, increment });
                }
            }
            v_a = v_next;
            p_a = p_next;
            prev_inc = increment;
            if increment <= self.cfg.fp_tol {
                converged = true;
                break;
            }
        }
        Ok(FixedPoint { v: v_a, p: p_a, ratios, iterations, increment, converged })
    }


    /// One implicit step of size `dt` from `state`.
    pub fn step(&mut self, state: &State, dt: f64) -> Result<(State, StepReport), StepError> {
        let fp = self.fixed_point(state, dt, true)?;
        if !fp.converged {
            return Err(StepError::FixedPointDiverged { iterations: fp.iterations, increment: fp.increment });
        }
        let (v_a, p_a, iterations, increment, ratios) = (fp.v, fp.p, fp.iterations, fp.increment, fp.ratios);
        let t_next = state.t + dt;
        let u_next = self.advance(&state.u, &v_a, dt);
        let det_min = min_det(self.mesh, &u_next);
        if !(det_min > 0.0) {
            return Err(StepError::InvertibilityLost { t: t_next, min_det: det_min });
        }
        let vol_before = enclosed_volume(self.mesh, &state.u);
        let vol_after = enclosed_volume(self.mesh, &u_next);
        let report = StepReport {
            fp_iterations: iterations,
            final_increment: increment,
            contraction_ratios: ratios,
            volume_drift: (vol_after - vol_before) / vol_before,
            min_det: det_min,
        };
        Ok((State { t: t_next, u: u_next, v: v_a, p: p_a }, report))
    }

    /// Checks the discrete compatibility conditions at the initial time: the
    /// Neumann balance `κ ∂v/∂n + σ n + p cof(Φ) n = g` at every Γ_N
    /// quadrature point and `b(u) · v = 0`, both to 1e-8.
    pub fn check_compatibility(&self, state: &State) -> Result<(), StepError> {
        const TOL: f64 = 1e-8;
        let u_geo = self.geometry(state);
        for (i, &x) in state.u.iter().chain(&state.v).enumerate() {
            let d = i % self.dofs.num_dofs();
            if self.dofs.is_dirichlet(d) && x != 0.0 {
                return Err(StepError::IncompatibleInitialData(format!("dof {d} is Dirichlet but nonzero")));
            }
        }
        let mut worst = 0.0_f64;
        for (e, x, n, flux) in self.neumann_fluxes(state)? {
            let g = (self.cfg.boundary_load)(x, n, state.t);
            let cof_n = (Mat2::identity() + element_gradient(self.mesh, self.mesh.edge_triangle(e), &u_geo))
                .cofactor()
                .mul_vec(&n);
            for c in 0..2 {
                worst = worst.max((flux[c] + state.p * cof_n[c] - g[c]).abs());
            }
        }
        if worst > TOL {
            return Err(StepError::IncompatibleInitialData(format!(
                "Neumann balance residual {worst:e} at t = {}",
                state.t
            )));
        }
        let flow = dot(&assemble_constraint_row(self.mesh, &u_geo), &state.v);
        if flow.abs() > TOL {
            return Err(StepError::IncompatibleInitialData(format!("boundary flux of v is {flow:e}")));
        }
        Ok(())
    }

    /// `(edge, x, n, κ ∇v n + σ(∇u) n)` at each Γ_N Gauss point, gradients
    /// taken from the adjacent element.
    fn geometry<'s>(&self, state: &'s State) -> std::borrow::Cow<'s, [f64]> {
        if self.cfg.linear {
            std::borrow::Cow::Owned(self.dofs.zeros())
        } else {
            std::borrow::Cow::Borrowed(&state.u)
        }
    }

    fn neumann_fluxes(&self, state: &State) -> Result<Vec<(usize, [f64; 2], [f64; 2], [f64; 2])>, StepError> {
        const POINTS: [f64; 2] = [0.211_324_865_405_187_13, 0.788_675_134_594_812_9];
        let u_geo = self.geometry(state);
        let mut out = Vec::new();
        for e in self.mesh.edges_tagged(BoundaryTag::Neumann) {
            let tri = self.mesh.edge_triangle(e);
            let n = self.mesh.edge_normal(e);
            let sigma = first_piola(&self.cfg.material, &element_gradient(self.mesh, tri, &u_geo))?;
            let grad_v = element_gradient(self.mesh, tri, &state.v).scale(self.cfg.kappa);
            let flux = (grad_v + sigma).mul_vec(&n);
            let [a, b] = self.mesh.boundary_edges()[e].nodes;
            let (pa, pb) = (self.mesh.nodes()[a], self.mesh.nodes()[b]);
            for s in POINTS {
                out.push((e, [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])], n, flux));
            }
        }
        Ok(out)
    }

    /// The pressure implied by the Neumann condition,
    /// `−(1/|Γ_N|) ∫ det(Φ)⁻¹ Φᵀ (κ ∂v/∂n + σ n − g) · n`.
    pub fn pressure_from_traction(&self, state: &State) -> Result<f64, StepError> {
        let u_geo = self.geometry(state);
        let m = min_det(self.mesh, &u_geo);
        if !(m > 0.0) {
            return Err(StepError::InvertibilityLost { t: state.t, min_det: m });
        }
        let mut total = 0.0;
        for (e, x, n, flux) in self.neumann_fluxes(state)? {
            let g = (self.cfg.boundary_load)(x, n, state.t);
            let phi = Mat2::identity() + element_gradient(self.mesh, self.mesh.edge_triangle(e), &u_geo);
            let w = phi.transpose().mul_vec(&[flux[0] - g[0], flux[1] - g[1]]);
            total += 0.5 * self.mesh.edge_length(e) * (w[0] * n[0] + w[1] * n[1]) / phi.det();
        }
        Ok(-total / self.mesh.neumann_length())
    }

    /// `|p_formula − p|`, see [`Self::pressure_from_traction`].
    pub fn pressure_consistency(&self, state: &State) -> Result<f64, StepError> {
        Ok((self.pressure_from_traction(state)? - state.p).abs())
    }

    /// `(½ vᵀ M v, Σ_e |e| W(E_e))`.
    pub fn energies(&self, state: &State) -> Result<(f64, f64), StepError> {
        let kinetic = 0.5 * dot(&state.v, &self.mass.mul_vec(&state.v));
        Ok((kinetic, stored_energy(self.mesh, &self.cfg.material, &state.u)?))
    }

    fn row(&self, state: &State, volume0: f64, fp_iters: usize) -> Result<SeriesRow, StepError> {
        let volume = enclosed_volume(self.mesh, &state.u);
        let (kinetic, strain) = self.energies(state)?;
        Ok(SeriesRow {
            t: state.t,
            pressure: state.p,
            volume,
            volume_drift: (volume - volume0) / volume0,
            min_det: min_det(self.mesh, &state.u),
            kinetic,
            strain,
            fp_iters,
            pressure_consistency: self.pressure_consistency(state)?,
        })
    }

    /// Advances `initial` to `t_end`. Rejected steps are retried with half the
    /// step size; once `dt_min` is undercut the run ends in
    /// [`TerminationReason::BlowUp`]. After an accepted step the step size
    /// doubles back towards `cfg.dt`. `observer` sees every row as soon as it
    /// is final, starting with the initial state.
    pub fn run(
        &mut self,
        initial: State,
        mut observer: impl FnMut(&SeriesRow, &State),
    ) -> Result<RunOutcome, StepError> {
        self.check_compatibility(&initial)?;
        let volume0 = enclosed_volume(self.mesh, &initial.u);
        let first = self.row(&initial, volume0, 0)?;
        observer(&first, &initial);
        let mut rows = vec![first];
        let mut state = initial;
        let mut dt = self.cfg.dt;
        let mut max_contraction = 0.0_f64;
        let t_end = self.cfg.t_end;
        let reason = loop {
            let remaining = t_end - state.t;
            if remaining <= 1e-12 * t_end.max(1.0) {
                break TerminationReason::ReachedTEnd;
            }
            // avoid a sliver step at the end
            let h = if remaining < 1.5 * dt { remaining } else { dt };
            match self.step(&state, h) {
                Ok((next, report)) => {
                    max_contraction = report.contraction_ratios.iter().copied().fold(max_contraction, f64::max);
                    let row = self.row(&next, volume0, report.fp_iterations)?;
                    observer(&row, &next);
                    rows.push(row);
                    state = next;
                    dt = (2.0 * dt).min(self.cfg.dt);
                }
                Err(StepError::FixedPointDiverged { .. }) | Err(StepError::Material(_)) => {
                    dt = 0.5 * h;
                    if dt < self.cfg.dt_min {
                        break TerminationReason::BlowUp { t: state.t };
                    }
                }
                Err(StepError::InvertibilityLost { t, .. }) => {
                    break TerminationReason::InvertibilityLost { t };
                }
                Err(e) => return Err(e),
            }
        };
        Ok(RunOutcome { rows, reason, final_state: state, max_contraction })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interpolate;
    use crate::mesh::Side;
    use std::sync::Arc;

    fn pulse_config(amplitude: f64) -> SimConfig {
        let mut cfg = SimConfig::new(MaterialModel::stvk(1.0, 1.0).unwrap());
        cfg.t_end = 0.02;
        cfg.dt = 2e-3;
        cfg.boundary_load = Arc::new(move |x, n, t| {
            let s = amplitude * (std::f64::consts::PI * t / 0.04).sin().powi(2) * x[0];
            [s * n[0], s * n[1] + 0.5 * s]
        });
        cfg
    }

    #[test]
    fn config_validation_messages() {
        let mut cfg = SimConfig::new(MaterialModel::stvk(1.0, 1.0).unwrap());
        cfg.kappa = -1.0;
        assert_eq!(cfg.validate().unwrap_err().to_string(), "invalid configuration: sim.kappa must be > 0");
        let mut cfg = SimConfig::new(MaterialModel::stvk(1.0, 1.0).unwrap());
        cfg.dt_min = cfg.dt;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn equilibrium_stays_at_rest() {
        let mesh = Mesh::structured_square(6, 6, &[Side::Left]).unwrap();
        let mut cfg = SimConfig::new(MaterialModel::stvk(1.0, 1.0).unwrap());
        cfg.t_end = 0.01;
        let mut sim = Simulator::new(&mesh, cfg).unwrap();
        let out = sim.run(sim.rest_state(), |_, _| {}).unwrap();
        assert_eq!(out.reason, TerminationReason::ReachedTEnd);
        assert_eq!(out.rows.len(), 11);
        let s = &out.final_state;
        assert!(s.u.iter().chain(&s.v).all(|x| x.abs() < 1e-12) && s.p.abs() < 1e-12);
        for w in out.rows.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn pulse_conserves_volume_in_both_modes() {
        let mesh = Mesh::structured_square(6, 6, &[Side::Left]).unwrap();
        let mut finals = Vec::new();
        for mode in [ConstraintMode::Split, ConstraintMode::FrozenGeometry] {
            let mut cfg = pulse_config(0.5);
            cfg.constraint_mode = mode;
            let mut sim = Simulator::new(&mesh, cfg).unwrap();
            let mut state = sim.rest_state();
            for _ in 0..10 {
                let (next, report) = sim.step(&state, 2e-3).unwrap();
                assert_eq!(report.contraction_ratios.len(), report.fp_iterations - 1);
                assert!(report.volume_drift.abs() < 1e-12);
                let u_c: Vec<f64> = state.u.iter().zip(&next.v).map(|(a, b)| a + 1e-3 * b).collect();
                let flow = dot(&assemble_constraint_row(&mesh, &u_c), &next.v);
                assert!(flow.abs() <= 10.0 * 1e-10 * (1.0 + crate::sparse::norm(&next.v)));
                state = next;
            }
            assert!(state.v.iter().any(|x| x.abs() > 1e-3));
            finals.push(state);
        }
        let dv: Vec<f64> = finals[0].v.iter().zip(&finals[1].v).map(|(a, b)| a - b).collect();
        let sim = Simulator::new(&mesh, pulse_config(0.5)).unwrap();
        assert!(mass_norm(sim.mass(), &dv) <= 1e-9);
    }

    #[test]
    fn newton_acceleration_reaches_same_state_faster() {
        let mesh = Mesh::structured_square(5, 5, &[Side::Left]).unwrap();
        let mut plain = Simulator::new(&mesh, pulse_config(2.0)).unwrap();
        let mut cfg = pulse_config(2.0);
        cfg.newton_accel = true;
        let mut newton = Simulator::new(&mesh, cfg).unwrap();
        let (mut a, mut b) = (plain.rest_state(), newton.rest_state());
        for _ in 0..5 {
            let (na, ra) = plain.step(&a, 4e-3).unwrap();
            let (nb, rb) = newton.step(&b, 4e-3).unwrap();
            assert!(rb.fp_iterations <= ra.fp_iterations);
            a = na;
            b = nb;
        }
        let dv: Vec<f64> = a.v.iter().zip(&b.v).map(|(x, y)| x - y).collect();
        assert!(mass_norm(plain.mass(), &dv) < 1e-9);
    }

    #[test]
    fn energies_examples() {
        let mesh = Mesh::structured_square(4, 4, &[Side::Left]).unwrap();
        let (mu, lambda) = (1.0, 2.0);
        let sim = Simulator::new(&mesh, SimConfig::new(MaterialModel::stvk(mu, lambda).unwrap())).unwrap();
        assert_eq!(sim.energies(&sim.rest_state()).unwrap(), (0.0, 0.0));
        let mut s = sim.rest_state();
        s.v = interpolate(&mesh, |_| [0.6, 0.8]);
        assert!((sim.energies(&s).unwrap().0 - 0.5).abs() < 1e-14);
        s.u = interpolate(&mesh, |p| [0.2 * p[0], 0.0]);
        let e = 0.22;
        let expect = mu * e * e + 0.5 * lambda * e * e;
        assert!((sim.energies(&s).unwrap().1 - expect).abs() < 1e-14);
    }

    #[test]
    fn pressure_consistency_cases() {
        let mesh = Mesh::structured_square(4, 4, &[Side::Left]).unwrap();
        let sim = Simulator::new(&mesh, SimConfig::new(MaterialModel::stvk(1.0, 1.0).unwrap())).unwrap();
        assert_eq!(sim.pressure_consistency(&sim.rest_state()).unwrap(), 0.0);
        let mut s = sim.rest_state();
        s.u = interpolate(&mesh, |p| [-1.5 * p[0], 0.0]);
        assert!(matches!(sim.pressure_consistency(&s), Err(StepError::InvertibilityLost { .. })));
    }

    #[test]
    fn incompatible_initial_data_is_rejected() {
        let mesh = Mesh::structured_square(4, 4, &[Side::Left]).unwrap();
        let mut cfg = SimConfig::new(MaterialModel::stvk(1.0, 1.0).unwrap());
        cfg.boundary_load = Arc::new(|_, _, _| [0.0, 1.0]);
        let mut sim = Simulator::new(&mesh, cfg).unwrap();
        let rest = sim.rest_state();
        assert!(matches!(sim.run(rest, |_, _| {}), Err(StepError::IncompatibleInitialData(_))));
        // a pure normal load is balanced by the initial pressure
        let mut cfg = SimConfig::new(MaterialModel::stvk(1.0, 1.0).unwrap());
        cfg.boundary_load = Arc::new(|_, n, _| [3.0 * n[0], 3.0 * n[1]]);
        cfg.t_end = 0.005;
        let mut sim = Simulator::new(&mesh, cfg).unwrap();
        let mut rest = sim.rest_state();
        rest.p = 3.0;
        let out = sim.run(rest, |_, _| {}).unwrap();
        assert_eq!(out.reason, TerminationReason::ReachedTEnd);
        assert!((out.final_state.p - 3.0).abs() < 1e-9);
        assert!(out.final_state.v.iter().all(|x| x.abs() < 1e-9));
    }
}
