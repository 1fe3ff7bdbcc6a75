//! Verification studies: convergence under refinement, contraction of the
//! fixed-point map, and finite-difference checks of the constitutive laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{manufactured_pressure, manufactured_velocity, LoadSpec, RunConfig};
use crate::material::{
    energy_density, first_piola, first_piola_derivative, second_piola, second_piola_derivative,
    MaterialError, MaterialModel,
};
use crate::mesh::{Mesh, MeshError, Side};
use crate::stepper::{SimConfig, Simulator, StepError, TerminationReason};
use crate::tensor::{green_st_venant, Mat2, Sym2};

/// Least-squares slope of `log y` against `log x`, with its `r²`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Observed orders between consecutive levels of a halving sequence.
pub fn pairwise_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

// Degree-5 rule on the reference triangle (barycentric a, b, b), weights sum to 1.
const DUNAVANT7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.059_715_871_789_770, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.470_142_064_105_115, 0.059_715_871_789_770], 0.132_394_152_788_506),
    ([0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.797_426_985_353_087, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.101_286_507_323_456, 0.797_426_985_353_087], 0.125_939_180_544_827),
];

/// `‖v_h − v‖_{L²}` for a P1 field against a closed-form function.
pub fn l2_error(mesh: &Mesh, field: &[f64], exact: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let mut total = 0.0;
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|i| mesh.nodes()[i]);
        for (bary, w) in DUNAVANT7 {
            let mut x = [0.0; 2];
            let mut vh = [0.0; 2];
            for k in 0..3 {
                for c in 0..2 {
                    x[c] += bary[k] * p[k][c];
                    vh[c] += bary[k] * field[2 * tri[k] + c];
                }
            }
            let ve = exact(x);
            total += w * mesh.area(e) * ((vh[0] - ve[0]).powi(2) + (vh[1] - ve[1]).powi(2));
        }
    }
    total.sqrt()
}

#[derive(Debug, Clone)]
pub struct MmsLevel {
    pub cells: usize,
    pub h: f64,
    pub dt: f64,
    pub velocity_error: f64,
    pub pressure_error: f64,
}

#[derive(Debug, Clone)]
pub struct MmsReport {
    pub levels: Vec<MmsLevel>,
    pub velocity_orders: Vec<f64>,
    pub pressure_orders: Vec<f64>,
}

impl MmsReport {
    pub fn min_velocity_order(&self) -> f64 {
        self.velocity_orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_pressure_order(&self) -> f64 {
        self.pressure_orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Manufactured linear problem on `n × n` squares clamped on the left, with
/// `dt = h²` and errors measured at `t_end`.
pub fn mms_convergence(cells: &[usize], kappa: f64, t_end: f64) -> Result<MmsReport, StepError> {
    let mut levels = Vec::new();
    for &n in cells {
        let mesh = Mesh::structured_square(n, n, &[Side::Left]).map_err(|e| StepError::Config(e.to_string()))?;
        let h = 1.0 / n as f64;
        let steps = (t_end / (h * h)).ceil() as usize;
        let dt = t_end / steps as f64;
        let mut cfg = SimConfig::new(MaterialModel::StVenantKirchhoff { mu: 1.0, lambda: 1.0 });
        cfg.kappa = kappa;
        cfg.linear = true;
        cfg.dt = dt;
        cfg.dt_min = dt / 4.0;
        cfg.t_end = t_end;
        let load = LoadSpec::Manufactured { kappa };
        cfg.body_load = load.body(0.0);
        cfg.boundary_load = load.boundary();
        let mut sim = Simulator::new(&mesh, cfg)?;
        let mut state = sim.rest_state();
        for _ in 0..steps {
            state = sim.step(&state, dt)?.0;
        }
        levels.push(MmsLevel {
            cells: n,
            h,
            dt,
            velocity_error: l2_error(&mesh, &state.v, |x| manufactured_velocity(x, state.t)),
            pressure_error: (state.p - manufactured_pressure(state.t)).abs(),
        });
    }
    let v: Vec<f64> = levels.iter().map(|l| l.velocity_error).collect();
    let p: Vec<f64> = levels.iter().map(|l| l.pressure_error).collect();
    Ok(MmsReport { velocity_orders: pairwise_orders(&v), pressure_orders: pairwise_orders(&p), levels })
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub cells: Vec<usize>,
    pub discrepancy: Vec<f64>,
    pub pressure: Vec<f64>,
    pub orders: Vec<f64>,
}

/// Runs `base` to `base.t_end` on `mesh_for(n)` for each `n` and records the
/// pressure-consistency discrepancy of the final state.
pub fn pressure_refinement(
    base: &SimConfig,
    cells: &[usize],
    mesh_for: impl Fn(usize) -> Result<Mesh, MeshError>,
) -> Result<ConsistencyReport, StepError> {
    let mut discrepancy = Vec::new();
    let mut pressure = Vec::new();
    for &n in cells {
        let mesh = mesh_for(n).map_err(|e| StepError::Config(e.to_string()))?;
        let mut sim = Simulator::new(&mesh, base.clone())?;
        let out = sim.run(sim.rest_state(), |_, _| {})?;
        if out.reason != TerminationReason::ReachedTEnd {
            return Err(StepError::Config(format!("refinement run on {n}×{n} ended with {:?}", out.reason)));
        }
        discrepancy.push(sim.pressure_consistency(&out.final_state)?);
        pressure.push(out.final_state.p);
    }
    Ok(ConsistencyReport { orders: pairwise_orders(&discrepancy), cells: cells.to_vec(), discrepancy, pressure })
}

/// The smooth loading used by the pressure and contraction studies: the
/// beat traction on a square of the given size.
pub fn smooth_pulse_config(amplitude: f64, t_end: f64) -> SimConfig {
    let mut c = RunConfig::base();
    c.load = LoadSpec::Beat { amplitude, period: 2.0 * t_end };
    c.sim.t_end = t_end;
    c.sim.dt = t_end / 20.0;
    c.sim.dt_min = c.sim.dt / 1024.0;
    c.apply_loads();
    c.sim
}

#[derive(Debug, Clone)]
pub struct ContractionReport {
    /// Largest step found to contract, by bisection.
    pub dt_star: f64,
    /// `(dt, max ratio)` at `dt*`, `dt*/2`, `dt*/4`.
    pub levels: Vec<(f64, f64)>,
    pub bisection_steps: usize,
}

impl ContractionReport {
    pub fn all_contracting(&self) -> bool {
        self.levels.iter().all(|&(_, r)| r < 1.0)
    }

    pub fn non_increasing(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

/// Prepares a loaded state by running `cfg` to `cfg.t_end`, then measures
/// the fixed-point contraction from it as a function of `dt`. The threshold
/// `dt*` is bisected in log scale between `dt_lo` (contracting) and
/// `dt_hi` (not contracting).
pub fn contraction_study(
    mesh: &Mesh,
    cfg: &SimConfig,
    dt_lo: f64,
    dt_hi: f64,
    iterations: usize,
) -> Result<ContractionReport, StepError> {
    let mut sim = Simulator::new(mesh, cfg.clone())?;
    let start = sim.run(sim.rest_state(), |_, _| {})?.final_state;
    let mut max_ratio = |dt: f64| -> Result<f64, StepError> {
        let ratios = sim.probe_contraction(&start, dt, iterations)?;
        Ok(ratios.iter().copied().fold(0.0, f64::max))
    };
    if max_ratio(dt_lo)? >= 1.0 {
        return Err(StepError::Config(format!("no contraction at dt = {dt_lo}")));
    }
    let (mut lo, mut hi) = (dt_lo, dt_hi);
    let mut steps = 0;
    if max_ratio(hi)? < 1.0 {
        lo = hi;
    } else {
        while hi / lo > 1.05 {
            let mid = (lo * hi).sqrt();
            if max_ratio(mid)? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
        }
    }
    let mut levels = Vec::new();
    for k in 0..3 {
        let dt = lo / f64::from(1 << k);
        levels.push((dt, max_ratio(dt)?));
    }
    Ok(ContractionReport { dt_star: lo, levels, bisection_steps: steps })
}

/// Worst relative error and worst observed order of one derivative check.
#[derive(Debug, Clone, Copy, Default)]
pub struct DerivativeCheck {
    pub max_rel_error: f64,
    pub min_order: f64,
    /// States whose finite-difference error is already at roundoff for both
    /// step sizes (the derivative is reproduced exactly).
    pub exact_states: usize,
}

impl DerivativeCheck {
    fn new() -> Self {
        Self { max_rel_error: 0.0, min_order: f64::INFINITY, exact_states: 0 }
    }

    pub fn passes(&self, rel_tol: f64, min_order: f64) -> bool {
        self.max_rel_error <= rel_tol && self.min_order >= min_order
    }
}

#[derive(Debug, Clone)]
pub struct MaterialCheck {
    pub model: MaterialModel,
    pub states: usize,
    /// `Σ̌ = ∂W/∂E`.
    pub stress: DerivativeCheck,
    /// `∂Σ̌/∂E`.
    pub tangent: DerivativeCheck,
    /// `σ′`.
    pub first_piola: DerivativeCheck,
}

impl MaterialCheck {
    pub fn passes(&self) -> bool {
        [self.stress, self.tangent, self.first_piola].iter().all(|c| c.passes(1e-6, 1.9))
    }
}

/// Step for the relative-error criterion.
pub const FD_STEP: f64 = 1e-5;
/// Step pair used to observe the convergence order; large enough that the
/// truncation error dominates roundoff.
pub const FD_ORDER_STEPS: (f64, f64) = (2e-3, 1e-3);
/// Relative error treated as exact agreement.
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

fn record(check: &mut DerivativeCheck, err_at: impl Fn(f64) -> f64) {
    check.max_rel_error = check.max_rel_error.max(err_at(FD_STEP));
    let (e1, e2) = (err_at(FD_ORDER_STEPS.0), err_at(FD_ORDER_STEPS.1));
    if e1 <= ROUNDOFF_FLOOR && e2 <= ROUNDOFF_FLOOR {
        check.exact_states += 1;
    } else {
        check.min_order = check.min_order.min((e1 / e2).log2());
    }
}

fn random_sym(rng: &mut impl Rng, amp: f64) -> Sym2 {
    let (a, b, c) = (rng.gen_range(-amp..amp), rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
    Sym2::from_fn(|i, j| match (i, j) {
        (0, 0) => a,
        (1, 1) => c,
        _ => b,
    })
}

fn random_matrix(rng: &mut impl Rng, amp: f64) -> Mat2 {
    Mat2::from_fn(|_, _| rng.gen_range(-amp..amp))
}

/// Central-difference checks of `Σ̌`, `∂Σ̌/∂E` and `σ′` over `states` random
/// displacement gradients with entries in `[-0.2, 0.2]`, each paired with a
/// random direction.
pub fn material_fd_suite(model: &MaterialModel, states: usize, seed: u64) -> Result<MaterialCheck, MaterialError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stress = DerivativeCheck::new();
    let mut tangent = DerivativeCheck::new();
    let mut piola = DerivativeCheck::new();
    for _ in 0..states {
        let grad_u = random_matrix(&mut rng, 0.2);
        let e = green_st_venant(&grad_u);
        let dir_e = random_sym(&mut rng, 1.0);
        let dir_u = random_matrix(&mut rng, 1.0);

        let s = second_piola(model, &e)?;
        let exact = s.ddot(&dir_e);
        let scale = s.as_matrix().norm() * dir_e.as_matrix().norm();
        let w_at = |h: f64| energy_density(model, &e.add(&dir_e.scale(h)));
        let mut err = Vec::new();
        for h in [FD_STEP, FD_ORDER_STEPS.0, FD_ORDER_STEPS.1] {
            let fd = (w_at(h)? - w_at(-h)?) / (2.0 * h);
            err.push((h, (fd - exact).abs() / scale.max(f64::MIN_POSITIVE)));
        }
        record(&mut stress, |h| lookup(&err, h));

        let exact = second_piola_derivative(model, &e)?.apply(dir_e.as_matrix());
        let mut err = Vec::new();
        for h in [FD_STEP, FD_ORDER_STEPS.0, FD_ORDER_STEPS.1] {
            let plus = second_piola(model, &e.add(&dir_e.scale(h)))?;
            let minus = second_piola(model, &e.sub(&dir_e.scale(h)))?;
            let fd = (plus.into_matrix() - minus.into_matrix()).scale(0.5 / h);
            err.push((h, (fd - exact).norm() / exact.norm().max(f64::MIN_POSITIVE)));
        }
        record(&mut tangent, |h| lookup(&err, h));

        let exact = first_piola_derivative(model, &grad_u, &dir_u)?;
        let mut err = Vec::new();
        for h in [FD_STEP, FD_ORDER_STEPS.0, FD_ORDER_STEPS.1] {
            let plus = first_piola(model, &(grad_u + dir_u.scale(h)))?;
            let minus = first_piola(model, &(grad_u - dir_u.scale(h)))?;
            let fd = (plus - minus).scale(0.5 / h);
            err.push((h, (fd - exact).norm() / exact.norm().max(f64::MIN_POSITIVE)));
        }
        record(&mut piola, |h| lookup(&err, h));
    }
    Ok(MaterialCheck { model: model.clone(), states, stress, tangent, first_piola: piola })
}

fn lookup(table: &[(f64, f64)], h: f64) -> f64 {
    table.iter().find(|(k, _)| *k == h).map(|(_, e)| *e).unwrap()
}

/// The three models exercised by `checkmat` and the acceptance suite.
pub fn reference_models() -> Vec<MaterialModel> {
    vec![
        MaterialModel::StVenantKirchhoff { mu: 1.0, lambda: 2.0 },
        MaterialModel::Fung { w0: 0.0, beta: 1.0, gamma: 2.0 },
        MaterialModel::ogden(&[(0.5, 2.5), (0.2, -1.5)]).expect("valid Ogden terms"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let x = [1.0, 0.1, 0.01, 0.001];
        let y: Vec<f64> = x.iter().map(|t: &f64| 3.0 * t.powf(0.65)).collect();
        let (s, r2) = log_log_fit(&x, &y);
        assert!((s - 0.65).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert_eq!(pairwise_orders(&[4.0, 1.0, 0.25]), vec![2.0, 2.0]);
    }

    #[test]
    fn l2_error_of_exact_linear_field_is_zero() {
        let mesh = Mesh::structured_square(3, 3, &[Side::Left]).unwrap();
        let f = crate::fem::interpolate(&mesh, |p| [p[0] - 2.0 * p[1], 1.0]);
        assert!(l2_error(&mesh, &f, |p| [p[0] - 2.0 * p[1], 1.0]) < 1e-15);
        // ∫ 1 over the square
        assert!((l2_error(&mesh, &f, |p| [p[0] - 2.0 * p[1], 0.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn material_suite_passes_on_small_sample() {
        for m in reference_models() {
            let c = material_fd_suite(&m, 20, 9).unwrap();
            assert!(c.passes(), "{c:?}");
        }
    }

    #[test]
    fn mms_coarse_levels_converge() {
        let r = mms_convergence(&[4, 8], 1.0, 0.1).unwrap();
        assert!(r.levels[1].velocity_error < r.levels[0].velocity_error);
    }
}
