//! Discrete probes of the functional estimates behind the analysis:
//! fractional Sobolev norms in time, the Hölder embedding, the elementary
//! `T`-power bounds, and the `T`-scaling of the nonlinear terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::fem::{
    assemble_internal_force, assemble_mass, constraint_rhs_h, element_gradient, interpolate,
    nonlinear_boundary_rhs, DofMap, NodalField,
};
use crate::material::MaterialError;
use crate::mesh::Mesh;
use crate::sparse::{dot, norm, EnvelopeCholesky, SparseError};
use crate::stepper::SimConfig;
use crate::studies::log_log_fit;
use crate::tensor::{Mat2, Mat3};

#[derive(Debug, Error)]
pub enum EstError {
    #[error("invalid exponent: gamma = {gamma}, p = {p}")]
    InvalidExponent { gamma: f64, p: f64 },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("need at least 4 T values, got {0}")]
    TooFewTimes(usize),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Samples of a `dim`-valued function on a uniform grid over `[0, T]`.
#[derive(Debug, Clone)]
pub struct SampledSignal {
    t_end: f64,
    dim: usize,
    values: Vec<f64>,
    derivative: Option<Vec<f64>>,
}

impl SampledSignal {
    /// `values` is sample-major: sample `i` occupies `values[i*dim..(i+1)*dim]`.
    pub fn new(t_end: f64, dim: usize, values: Vec<f64>) -> Result<Self, EstError> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(EstError::InvalidSignal(format!("T must be positive, got {t_end}")));
        }
        if dim == 0 || values.len() % dim != 0 {
            return Err(EstError::InvalidSignal(format!("{} values do not split into dim {dim}", values.len())));
        }
        if values.len() / dim < 3 {
            return Err(EstError::InvalidSignal("need at least 3 samples".into()));
        }
        Ok(Self { t_end, dim, values, derivative: None })
    }

    pub fn from_fn(t_end: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self, EstError> {
        let h = t_end / (samples.max(1) - 1).max(1) as f64;
        Self::new(t_end, 1, (0..samples).map(|i| f(i as f64 * h)).collect())
    }

    pub fn from_vector_fn<const M: usize>(
        t_end: f64,
        samples: usize,
        f: impl Fn(f64) -> [f64; M],
    ) -> Result<Self, EstError> {
        let h = t_end / (samples.max(1) - 1).max(1) as f64;
        Self::new(t_end, M, (0..samples).flat_map(|i| f(i as f64 * h)).collect())
    }

    /// Attaches exact derivative samples, same layout as the values.
    pub fn with_derivative(mut self, derivative: Vec<f64>) -> Result<Self, EstError> {
        if derivative.len() != self.values.len() {
            return Err(EstError::InvalidSignal("derivative length differs from values".into()));
        }
        self.derivative = Some(derivative);
        Ok(self)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.t_end / (self.len() - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.len()).map(|i| i as f64 * h).collect()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn derivative(&self) -> Option<&[f64]> {
        self.derivative.as_deref()
    }

    /// `max_i |φ(t_i) − φ(0)|`.
    pub fn max_excursion(&self) -> f64 {
        let first = self.sample(0);
        (0..self.len()).map(|i| distance(self.sample(i), first)).fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|i| euclid(self.sample(i))).fold(0.0, f64::max)
    }

    /// Trapezoidal `‖φ‖_{L^p(0,T)}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_of(&self.values, self.dim, self.spacing(), p)
    }
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn trapezoid_weight(i: usize, n: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}

fn lp_of(values: &[f64], dim: usize, h: f64, p: f64) -> f64 {
    let n = values.len() / dim;
    let s: f64 = (0..n).map(|i| trapezoid_weight(i, n, h) * euclid(&values[i * dim..(i + 1) * dim]).powf(p)).sum();
    s.powf(1.0 / p)
}

fn check_exponent(gamma: f64, p: f64) -> Result<(), EstError> {
    if !(gamma > 0.0 && gamma < 1.0 && p >= 1.0 && p.is_finite()) {
        return Err(EstError::InvalidExponent { gamma, p });
    }
    Ok(())
}

/// `(‖φ‖_p^p + ∫∫ |φ(x)−φ(y)|^p / |x−y|^{1+γp})^{1/p}` with trapezoid
/// weights in both variables; pairs closer than one grid spacing are
/// dropped.
pub fn fractional_norm(s: &SampledSignal, gamma: f64, p: f64) -> Result<f64, EstError> {
    check_exponent(gamma, p)?;
    let n = s.len();
    let h = s.spacing();
    let lp = s.lp_norm(p).powf(p);
    let exponent = 1.0 + gamma * p;
    // Symmetric in (i, j): sum j > i and double.
    let semi: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let wi = trapezoid_weight(i, n, h);
            let xi = s.sample(i);
            let mut acc = 0.0;
            for j in i + 1..n {
                let d = distance(xi, s.sample(j));
                if d > 0.0 {
                    acc += trapezoid_weight(j, n, h) * d.powf(p) / (((j - i) as f64) * h).powf(exponent);
                }
            }
            wi * acc
        })
        .sum();
    Ok((lp + 2.0 * semi).powf(1.0 / p))
}

/// `‖φ‖_{W^{1,p}} = ‖φ‖_p + ‖φ̇‖_p`, using the attached derivative.
pub fn w1p_norm(s: &SampledSignal, p: f64) -> Result<f64, EstError> {
    let d = s.derivative().ok_or_else(|| EstError::InvalidSignal("no derivative attached".into()))?;
    Ok(s.lp_norm(p) + lp_of(d, s.dim, s.spacing(), p))
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub t_values: Vec<f64>,
    pub measured: Vec<f64>,
    pub slope: f64,
    pub r_squared: f64,
}

impl ScalingReport {
    pub fn fit(t_values: Vec<f64>, measured: Vec<f64>) -> Result<Self, EstError> {
        if t_values.len() < 4 || t_values.len() != measured.len() {
            return Err(EstError::TooFewTimes(t_values.len().min(measured.len())));
        }
        let (slope, r_squared) = if measured.iter().all(|m| *m > 0.0) {
            log_log_fit(&t_values, &measured)
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(Self { t_values, measured, slope, r_squared })
    }

    /// True when every measurement is exactly zero.
    pub fn is_identically_zero(&self) -> bool {
        self.measured.iter().all(|m| *m == 0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,measured,fit_slope,r2\n");
        for (t, m) in self.t_values.iter().zip(&self.measured) {
            out.push_str(&format!("{t:e},{m:e},{},{}\n", self.slope, self.r_squared));
        }
        out
    }
}

/// Signal generators indexed by the horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalFamily {
    /// `φ(t) = t`.
    Linear,
    /// `φ(t) = (sin t, 1 − cos t)`, not rescaled with `T`.
    Smooth,
    /// `√T · W(t/T)` for a standard Brownian path `W` drawn from `seed`.
    Brownian { seed: u64 },
}

impl SignalFamily {
    pub fn name(&self) -> String {
        match self {
            Self::Linear => "linear".into(),
            Self::Smooth => "smooth".into(),
            Self::Brownian { seed } => format!("brownian[{seed}]"),
        }
    }

    pub fn sample(&self, t_end: f64, samples: usize) -> Result<SampledSignal, EstError> {
        match *self {
            Self::Linear => SampledSignal::from_fn(t_end, samples, |t| t),
            Self::Smooth => SampledSignal::from_vector_fn(t_end, samples, |t| [t.sin(), 1.0 - t.cos()]),
            Self::Brownian { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let step = (1.0 / (samples.max(2) - 1) as f64).sqrt();
                let mut w = 0.0;
                let mut values = Vec::with_capacity(samples);
                values.push(0.0);
                for _ in 1..samples {
                    let z: f64 = rng.sample(StandardNormal);
                    w += step * z;
                    values.push(t_end.sqrt() * w);
                }
                SampledSignal::new(t_end, 1, values)
            }
        }
    }
}

/// Default grid size for the scaling probes.
pub const PROBE_SAMPLES: usize = 401;

/// `sup_t |φ(t) − φ(0)| / ‖φ‖_{W^{γ,p}(0,T)}` for each `T`, fitted against `T`.
/// Decay is expected at rate at least `γ − 1/p`.
pub fn holder_embedding_check(
    family: &SignalFamily,
    gamma: f64,
    p: f64,
    t_values: &[f64],
) -> Result<ScalingReport, EstError> {
    check_exponent(gamma, p)?;
    if gamma * p <= 1.0 {
        return Err(EstError::InvalidExponent { gamma, p });
    }
    let measured = t_values
        .iter()
        .map(|&t| {
            let s = family.sample(t, PROBE_SAMPLES)?;
            Ok(s.max_excursion() / fractional_norm(&s, gamma, p)?)
        })
        .collect::<Result<Vec<_>, EstError>>()?;
    ScalingReport::fit(t_values.to_vec(), measured)
}

/// Worst (smallest) slope over Brownian paths with seeds `0..paths`.
pub fn holder_worst_brownian(
    gamma: f64,
    p: f64,
    t_values: &[f64],
    paths: u64,
) -> Result<ScalingReport, EstError> {
    let reports = (0..paths)
        .into_par_iter()
        .map(|seed| holder_embedding_check(&SignalFamily::Brownian { seed }, gamma, p, t_values))
        .collect::<Result<Vec<_>, EstError>>()?;
    Ok(reports.into_iter().min_by(|a, b| a.slope.total_cmp(&b.slope)).expect("at least one path"))
}

/// Both sides of the elementary bounds for `φ ∈ W^{1,p}(0,T)`, `T ≤ 1`:
///
/// ```text
/// (a) ‖φ‖_∞   ≤ |φ(0)| + T^{1/p'} ‖φ̇‖_p
/// (b) ‖φ‖_p   ≤ T^{1/p} |φ(0)| + T ‖φ̇‖_p
/// (d) ‖φ‖_1,p ≤ T^{1/p} |φ(0)| + (1 + T) ‖φ̇‖_p
/// ```
///
/// The interpolation bound `‖φ‖_{α,p} ≤ T^{(1−α)/p} (|φ(0)| + ‖φ‖_{1,p})`
/// is only checked as a scaling law, see [`interpolation_scaling_check`].
#[derive(Debug, Clone, Copy)]
pub struct BasicEstimates {
    pub sup: (f64, f64),
    pub lp: (f64, f64),
    pub w1p: (f64, f64),
}

pub const ESTIMATE_SLACK: f64 = 1e-6;

impl BasicEstimates {
    /// Count of violated inequalities among (a), (b), (d).
    pub fn violations(&self) -> usize {
        [self.sup, self.lp, self.w1p].iter().filter(|(lhs, rhs)| *lhs > rhs * (1.0 + ESTIMATE_SLACK)).count()
    }
}

pub fn basic_estimates_check(s: &SampledSignal, p: f64) -> Result<BasicEstimates, EstError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(EstError::InvalidExponent { gamma: 1.0, p });
    }
    let t = s.t_end();
    if t > 1.0 {
        return Err(EstError::InvalidSignal(format!("T = {t} exceeds 1")));
    }
    let d = s.derivative().ok_or_else(|| EstError::InvalidSignal("no derivative attached".into()))?;
    let dot_p = lp_of(d, s.dim(), s.spacing(), p);
    let phi0 = euclid(s.sample(0));
    let lp = s.lp_norm(p);
    let dual = if p == 1.0 { 0.0 } else { 1.0 - 1.0 / p };
    let w1p = lp + dot_p;
    Ok(BasicEstimates {
        sup: (s.sup_norm(), phi0 + t.powf(dual) * dot_p),
        lp: (lp, t.powf(1.0 / p) * phi0 + t * dot_p),
        w1p: (w1p, t.powf(1.0 / p) * phi0 + (1.0 + t) * dot_p),
    })
}

/// Random cubic `φ(t) = Σ c_k t^k` with `c_k ∈ [−1, 1]` and its derivative,
/// sampled on `[0, T]`.
pub fn random_polynomial_signal(rng: &mut impl Rng, t_end: f64, samples: usize) -> Result<SampledSignal, EstError> {
    let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let f = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    let df = |t: f64| c[1] + t * (2.0 * c[2] + t * 3.0 * c[3]);
    let s = SampledSignal::from_fn(t_end, samples, f)?;
    let derivative = s.times().into_iter().map(df).collect();
    s.with_derivative(derivative)
}

/// `‖φ‖_{α,p} / (|φ(0)| + ‖φ‖_{1,p})` for `φ(t) = t` over the given `T`.
/// The bound predicts decay at rate at least `(1−α)/p`.
pub fn interpolation_scaling_check(p: f64, alpha: f64, t_values: &[f64]) -> Result<ScalingReport, EstError> {
    let measured = t_values
        .iter()
        .map(|&t| {
            let s = SignalFamily::Linear.sample(t, PROBE_SAMPLES)?.with_derivative(vec![1.0; PROBE_SAMPLES])?;
            Ok(fractional_norm(&s, alpha, p)? / (euclid(s.sample(0)) + w1p_norm(&s, p)?))
        })
        .collect::<Result<Vec<_>, EstError>>()?;
    ScalingReport::fit(t_values.to_vec(), measured)
}

/// Smooth probe velocities vanishing on `x = 0`, scaled by `amplitude`.
pub fn probe_fields(mesh: &Mesh, amplitude: f64) -> (NodalField, NodalField) {
    use std::f64::consts::PI;
    let dofs = DofMap::new(mesh);
    let mut v1 = interpolate(mesh, |[x, y]| [amplitude * x * (PI * y).cos(), amplitude * x * (PI * x).sin()]);
    let mut v2 = interpolate(mesh, |[x, y]| [0.5 * amplitude * x * (PI * y).sin(), amplitude * x * x * (PI * y).cos()]);
    dofs.zero_dirichlet(&mut v1);
    dofs.zero_dirichlet(&mut v2);
    (v1, v2)
}

#[derive(Debug, Clone)]
pub struct LipschitzReport {
    /// `‖r(T v₁) − r(T v₂)‖` in the mass-dual norm.
    pub force: ScalingReport,
    /// Euclidean norm of the difference of boundary terms (stress plus
    /// unit-pressure part).
    pub boundary: ScalingReport,
    /// `|H(v₁) − H(v₂)|` with `u_i = T v_i`.
    pub constraint: ScalingReport,
}

/// Sets `u_i = T v_i` and measures the differences of the nonlinear terms.
pub fn lipschitz_scaling_probe(
    cfg: &SimConfig,
    mesh: &Mesh,
    v1: &[f64],
    v2: &[f64],
    t_values: &[f64],
) -> Result<LipschitzReport, EstError> {
    let dofs = DofMap::new(mesh);
    let mass = EnvelopeCholesky::factor(&assemble_mass(mesh).eliminate(dofs.dirichlet_dofs()))?;
    let mut force = Vec::new();
    let mut boundary = Vec::new();
    let mut constraint = Vec::new();
    for &t in t_values {
        let u1: Vec<f64> = v1.iter().map(|x| t * x).collect();
        let u2: Vec<f64> = v2.iter().map(|x| t * x).collect();
        let mut dr: Vec<f64> = assemble_internal_force(mesh, &cfg.material, &u1)?
            .iter()
            .zip(assemble_internal_force(mesh, &cfg.material, &u2)?)
            .map(|(a, b)| a - b)
            .collect();
        dofs.zero_dirichlet(&mut dr);
        force.push(dot(&dr, &mass.solve(&dr)?).max(0.0).sqrt());
        let (b1, b2) = (nonlinear_boundary_rhs(mesh, &cfg.material, &u1, 1.0)?, nonlinear_boundary_rhs(mesh, &cfg.material, &u2, 1.0)?);
        let db: Vec<f64> = (0..b1.stress.len())
            .map(|i| (b1.stress[i] + b1.pressure[i]) - (b2.stress[i] + b2.pressure[i]))
            .collect();
        boundary.push(norm(&db));
        constraint.push((constraint_rhs_h(mesh, &u1, v1) - constraint_rhs_h(mesh, &u2, v2)).abs());
    }
    Ok(LipschitzReport {
        force: ScalingReport::fit(t_values.to_vec(), force)?,
        boundary: ScalingReport::fit(t_values.to_vec(), boundary)?,
        constraint: ScalingReport::fit(t_values.to_vec(), constraint)?,
    })
}

#[derive(Debug, Clone)]
pub struct CofactorReport {
    /// `max_e ‖cof Φ(u₁) − cof Φ(u₂)‖ / max_e ‖∇u₁ − ∇u₂‖` per pair; 0 for equal fields.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// Per-element Frobenius norms, maximized over elements.
pub fn cofactor_lipschitz_check(pairs: &[(NodalField, NodalField)], mesh: &Mesh) -> CofactorReport {
    let ratios: Vec<f64> = pairs
        .iter()
        .map(|(u1, u2)| {
            let (mut num, mut den) = (0.0_f64, 0.0_f64);
            for e in 0..mesh.num_triangles() {
                let (g1, g2) = (element_gradient(mesh, e, u1), element_gradient(mesh, e, u2));
                let c1 = (Mat2::identity() + g1).cofactor();
                let c2 = (Mat2::identity() + g2).cofactor();
                num = num.max((c1 - c2).norm());
                den = den.max((g1 - g2).norm());
            }
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        })
        .collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    CofactorReport { ratios, max_ratio }
}

fn random_in_ball(rng: &mut impl Rng, radius: f64) -> Mat3 {
    let g = Mat3::from_fn(|_, _| rng.sample(StandardNormal));
    let r = radius * rng.gen::<f64>().powf(1.0 / 9.0);
    g.scale(r / g.norm())
}

/// Largest `‖cof(I+A) − cof(I+B)‖ / (‖A−B‖ (1 + ‖A‖ + ‖B‖))` over `samples`
/// random pairs of 3×3 gradients in the Frobenius ball of `radius`.
pub fn cofactor_constant_3d(samples: usize, radius: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let (a, b) = (random_in_ball(&mut rng, radius), random_in_ball(&mut rng, radius));
        let diff = (a - b).norm();
        if diff == 0.0 {
            continue;
        }
        let dc = ((Mat3::identity() + a).cofactor() - (Mat3::identity() + b).cofactor()).norm();
        worst = worst.max(dc / (diff * (1.0 + a.norm() + b.norm())));
    }
    worst
}
