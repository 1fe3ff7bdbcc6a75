//! Hyperelastic strain energies written in the Green–Saint-Venant strain.
//!
//! Each [`MaterialModel`] gives the energy density `W(E)`, the second
//! Piola–Kirchhoff stress `Σ̌(E) = ∂W/∂E` and its derivative `∂Σ̌/∂E`.
//! The first Piola-type stress `σ(∇u) = Φ Σ̌(E(u))` and its directional
//! derivative are built on top of those.
//!
//! Units: stresses and energy densities in Pa. The solver uses a unit
//! density, so every equation is read in nondimensional form.

use thiserror::Error;

use crate::tensor::{
    deformation_gradient, green_st_venant, sym_matrix_power, Matrix, SymMatrix, Tensor4,
    TensorError,
};

/// Eigenvalue gap below which the Ogden tangent uses the analytic limit
/// `f'(μ)` instead of a divided difference.
pub const OGDEN_GAP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaterialError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid material parameter: {0}")]
    InvalidParameter(String),
}

/// One `c · trace((2E + I)^γ − I)` term of an Ogden energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OgdenTerm {
    pub coeff: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaterialModel {
    /// Saint Venant–Kirchhoff: `μ trace(E²) + λ/2 trace(E)²`.
    StVenantKirchhoff { mu: f64, lambda: f64 },
    /// Fung: `W₀ + β (exp(γ trace(E²)) − 1)`.
    Fung { w0: f64, beta: f64, gamma: f64 },
    /// Ogden: linear combination of `trace((2E + I)^γ − I)`.
    Ogden { terms: Vec<OgdenTerm> },
}

impl MaterialModel {
    pub fn stvk(mu: f64, lambda: f64) -> Result<Self, MaterialError> {
        Self::StVenantKirchhoff { mu, lambda }.validated()
    }

    pub fn fung(w0: f64, beta: f64, gamma: f64) -> Result<Self, MaterialError> {
        Self::Fung { w0, beta, gamma }.validated()
    }

    pub fn ogden(terms: &[(f64, f64)]) -> Result<Self, MaterialError> {
        Self::Ogden {
            terms: terms
                .iter()
                .map(|&(coeff, exponent)| OgdenTerm { coeff, exponent })
                .collect(),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, MaterialError> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |m: &str| Err(MaterialError::InvalidParameter(m.to_string()));
        match self {
            Self::StVenantKirchhoff { mu, lambda } => {
                if !(*mu > 0.0 && mu.is_finite()) {
                    return bad("stvk: mu must be > 0");
                }
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return bad("stvk: lambda must be >= 0");
                }
            }
            Self::Fung { w0, beta, gamma } => {
                if !(*w0 >= 0.0 && w0.is_finite()) {
                    return bad("fung: w0 must be >= 0");
                }
                if !(*beta > 0.0 && beta.is_finite()) {
                    return bad("fung: beta must be > 0");
                }
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return bad("fung: gamma must be > 0");
                }
            }
            Self::Ogden { terms } => {
                if terms.is_empty() {
                    return bad("ogden: at least one term is required");
                }
                if terms.iter().any(|t| !t.coeff.is_finite() || !t.exponent.is_finite()) {
                    return bad("ogden: non-finite term");
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::StVenantKirchhoff { .. } => "stvk",
            Self::Fung { .. } => "fung",
            Self::Ogden { .. } => "ogden",
        }
    }
}

fn stretch<const D: usize>(e: &SymMatrix<D>) -> SymMatrix<D> {
    e.scale(2.0).add(&SymMatrix::identity())
}

pub fn energy_density<const D: usize>(
    model: &MaterialModel,
    e: &SymMatrix<D>,
) -> Result<f64, MaterialError> {
    Ok(match model {
        MaterialModel::StVenantKirchhoff { mu, lambda } => {
            let tr = e.trace();
            mu * e.ddot(e) + 0.5 * lambda * tr * tr
        }
        MaterialModel::Fung { w0, beta, gamma } => w0 + beta * ((gamma * e.ddot(e)).exp() - 1.0),
        MaterialModel::Ogden { terms } => {
            let c = stretch(e);
            let mut w = 0.0;
            for t in terms {
                w += t.coeff * (sym_matrix_power(&c, t.exponent)?.trace() - D as f64);
            }
            w
        }
    })
}

pub fn second_piola<const D: usize>(
    model: &MaterialModel,
    e: &SymMatrix<D>,
) -> Result<SymMatrix<D>, MaterialError> {
    Ok(match model {
        MaterialModel::StVenantKirchhoff { mu, lambda } => e
            .scale(2.0 * mu)
            .add(&SymMatrix::identity().scale(lambda * e.trace())),
        MaterialModel::Fung { beta, gamma, .. } => {
            e.scale(2.0 * gamma * beta * (gamma * e.ddot(e)).exp())
        }
        MaterialModel::Ogden { terms } => {
            let c = stretch(e);
            let mut s = SymMatrix::zeros();
            for t in terms {
                let p = sym_matrix_power(&c, t.exponent - 1.0)?;
                s = s.add(&p.scale(2.0 * t.exponent * t.coeff));
            }
            s
        }
    })
}

pub fn second_piola_derivative<const D: usize>(
    model: &MaterialModel,
    e: &SymMatrix<D>,
) -> Result<Tensor4<D>, MaterialError> {
    Ok(match model {
        MaterialModel::StVenantKirchhoff { mu, lambda } => Tensor4::identity()
            .scale(2.0 * mu)
            .add(&Tensor4::outer(&Matrix::identity(), &Matrix::identity()).scale(*lambda)),
        MaterialModel::Fung { beta, gamma, .. } => {
            let em = e.into_matrix();
            let f = beta * (gamma * e.ddot(e)).exp();
            Tensor4::identity()
                .scale(2.0 * gamma)
                .add(&Tensor4::outer(&em, &em).scale(4.0 * gamma * gamma))
                .scale(f)
        }
        MaterialModel::Ogden { terms } => ogden_tangent(terms, e)?,
    })
}

/// Tangent of `E ↦ Σ_k c_k 2γ_k (2E + I)^{γ_k − 1}` in spectral form.
///
/// With `f(μ) = Σ_k c_k 2γ_k (2μ + 1)^{γ_k − 1}` and the eigenpairs
/// `(μ_i, v_i)` of `E`, the derivative applied to a symmetric `H` is
/// `Σ_ij Γ_ij (v_iᵀ H v_j) v_i v_jᵀ` where `Γ_ii = f'(μ_i)` and
/// `Γ_ij = (f(μ_i) − f(μ_j)) / (μ_i − μ_j)`. Gaps under [`OGDEN_GAP`]
/// use `f'(μ_i)`.
fn ogden_tangent<const D: usize>(
    terms: &[OgdenTerm],
    e: &SymMatrix<D>,
) -> Result<Tensor4<D>, MaterialError> {
    let eig = e.eigen();
    let requires_positive = |exp: f64| !(exp >= 0.0 && exp.fract() == 0.0);
    for &mu in &eig.values {
        let lam = 2.0 * mu + 1.0;
        if lam > crate::tensor::EIGENVALUE_FLOOR {
            continue;
        }
        for t in terms {
            let uses_second = t.exponent != 1.0 && requires_positive(t.exponent - 2.0);
            if requires_positive(t.exponent - 1.0) || uses_second {
                return Err(TensorError::NonPositiveEigenvalue { eigenvalue: lam, exponent: t.exponent }.into());
            }
        }
    }
    let f = |mu: f64| -> f64 {
        terms
            .iter()
            .map(|t| t.coeff * 2.0 * t.exponent * (2.0 * mu + 1.0).powf(t.exponent - 1.0))
            .sum()
    };
    let df = |mu: f64| -> f64 {
        terms
            .iter()
            .filter(|t| t.exponent != 1.0)
            .map(|t| {
                t.coeff * 4.0 * t.exponent * (t.exponent - 1.0) * (2.0 * mu + 1.0).powf(t.exponent - 2.0)
            })
            .sum()
    };
    let mut gamma = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            let (mi, mj) = (eig.values[i], eig.values[j]);
            gamma[i][j] = if i == j || (mi - mj).abs() < OGDEN_GAP {
                df(mi)
            } else {
                (f(mi) - f(mj)) / (mi - mj)
            };
        }
    }
    let v = &eig.vectors;
    let mut t = Tensor4::<D>::zeros();
    for i in 0..D {
        for j in 0..D {
            let g = gamma[i][j];
            if g == 0.0 {
                continue;
            }
            for a in 0..D {
                for b in 0..D {
                    let vab = v[i][a] * v[j][b];
                    for c in 0..D {
                        for d in 0..D {
                            // minor-symmetric in (c, d): only symmetric H is meaningful
                            let sym = 0.5 * (v[i][c] * v[j][d] + v[j][c] * v[i][d]);
                            t.entries[a][b][c][d] += g * vab * sym;
                        }
                    }
                }
            }
        }
    }
    Ok(t)
}

/// `σ(∇u) = Φ(u) Σ̌(E(u))`.
pub fn first_piola<const D: usize>(
    model: &MaterialModel,
    grad_u: &Matrix<D>,
) -> Result<Matrix<D>, MaterialError> {
    let phi = deformation_gradient(grad_u);
    let s = second_piola(model, &green_st_venant(grad_u))?;
    Ok(phi * s.into_matrix())
}

/// `σ'(∇u).∇v = ∇v Σ + Φ (∂Σ̌/∂E)(E'(u).v)` with
/// `E'(u).v = ½(Φᵀ∇v + ∇vᵀΦ)`.
pub fn first_piola_derivative<const D: usize>(
    model: &MaterialModel,
    grad_u: &Matrix<D>,
    grad_v: &Matrix<D>,
) -> Result<Matrix<D>, MaterialError> {
    let phi = deformation_gradient(grad_u);
    let e = green_st_venant(grad_u);
    let s = second_piola(model, &e)?;
    let de = (phi.transpose() * *grad_v).sym();
    let ds = second_piola_derivative(model, &e)?.apply(de.as_matrix());
    Ok(*grad_v * s.into_matrix() + phi * ds)
}

/// Tangent of `σ` as a tensor: `(T H) = σ'(∇u).H`. Used by the Jacobian
/// assembly so the per-element work is one tensor build.
pub fn first_piola_tangent<const D: usize>(
    model: &MaterialModel,
    grad_u: &Matrix<D>,
) -> Result<Tensor4<D>, MaterialError> {
    let mut t = Tensor4::<D>::zeros();
    for k in 0..D {
        for l in 0..D {
            let mut h = Matrix::<D>::zeros();
            h.entries[k][l] = 1.0;
            let col = first_piola_derivative(model, grad_u, &h)?;
            for i in 0..D {
                for j in 0..D {
                    t.entries[i][j][k][l] = col.entries[i][j];
                }
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Mat2, Sym2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<MaterialModel> {
        vec![
            MaterialModel::stvk(1.3, 0.7).unwrap(),
            MaterialModel::fung(0.2, 0.8, 1.4).unwrap(),
            MaterialModel::ogden(&[(0.6, 1.5), (0.3, -0.5)]).unwrap(),
        ]
    }

    fn random_sym(rng: &mut impl Rng, r: f64) -> Sym2 {
        Sym2::from_fn(|_, _| rng.gen_range(-r..r))
    }

    #[test]
    fn parameter_validation() {
        assert!(MaterialModel::stvk(0.0, 1.0).is_err());
        assert!(MaterialModel::stvk(1.0, -1.0).is_err());
        assert!(MaterialModel::stvk(1.0, 0.0).is_ok());
        assert!(MaterialModel::fung(-1.0, 1.0, 1.0).is_err());
        assert!(MaterialModel::fung(0.0, 0.0, 1.0).is_err());
        assert!(MaterialModel::fung(0.0, 1.0, 0.0).is_err());
        assert!(MaterialModel::ogden(&[]).is_err());
    }

    #[test]
    fn energy_examples() {
        let stvk = MaterialModel::stvk(1.0, 1.0).unwrap();
        assert_eq!(energy_density(&stvk, &Sym2::zeros()).unwrap(), 0.0);
        let fung = MaterialModel::fung(0.0, 1.0, 1.0).unwrap();
        assert_eq!(energy_density(&fung, &Sym2::zeros()).unwrap(), 0.0);
        let ogden = MaterialModel::ogden(&[(1.0, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let e = random_sym(&mut rng, 0.3);
            let w = energy_density(&ogden, &e).unwrap();
            assert!((w - 2.0 * e.trace()).abs() < 1e-13);
        }
    }

    #[test]
    fn stress_examples() {
        let stvk = MaterialModel::stvk(1.0, 1.0).unwrap();
        let s = second_piola(&stvk, &Sym2::identity()).unwrap();
        assert_eq!(s, Sym2::identity().scale(4.0));
        let fung = MaterialModel::fung(0.3, 2.0, 0.5).unwrap();
        assert_eq!(second_piola(&fung, &Sym2::zeros()).unwrap(), Sym2::zeros());
    }

    #[test]
    fn tangent_examples() {
        let stvk = MaterialModel::stvk(1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let e = random_sym(&mut rng, 0.5);
        assert_eq!(second_piola_derivative(&stvk, &e).unwrap(), Tensor4::identity().scale(2.0));
        let (beta, gamma) = (0.7, 1.9);
        let fung = MaterialModel::fung(0.0, beta, gamma).unwrap();
        let t = second_piola_derivative(&fung, &Sym2::zeros()).unwrap();
        assert_eq!(t, Tensor4::identity().scale(2.0 * gamma * beta));
    }

    #[test]
    fn first_piola_examples() {
        let stvk = MaterialModel::stvk(1.0, 1.0).unwrap();
        assert_eq!(first_piola(&stvk, &Mat2::zeros()).unwrap(), Mat2::zeros());
        let fung = MaterialModel::fung(1.0, 1.0, 1.0).unwrap();
        assert_eq!(first_piola(&fung, &Mat2::zeros()).unwrap(), Mat2::zeros());
        let (s, c) = 0.7_f64.sin_cos();
        let r = Mat2::new([[c, -s], [s, c]]);
        assert!(first_piola(&stvk, &(r - Mat2::identity())).unwrap().max_abs() < 1e-13);
        let ogden = MaterialModel::ogden(&[(1.0, 1.0)]).unwrap();
        let sigma = first_piola(&ogden, &Mat2::zeros()).unwrap();
        assert!((sigma - Mat2::identity().scale(2.0)).max_abs() < 1e-15);
    }

    #[test]
    fn first_piola_derivative_examples() {
        let stvk = MaterialModel::stvk(1.0, 0.0).unwrap();
        let h = Mat2::new([[0.3, -1.2], [0.5, 2.0]]);
        let d = first_piola_derivative(&stvk, &Mat2::zeros(), &h).unwrap();
        assert!((d - (h + h.transpose())).max_abs() < 1e-15);
        for m in models() {
            let g = Mat2::new([[0.1, 0.05], [-0.02, 0.08]]);
            assert_eq!(first_piola_derivative(&m, &g, &Mat2::zeros()).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn second_piola_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for m in models() {
            for _ in 0..200 {
                let e = random_sym(&mut rng, 0.25);
                let s = second_piola(&m, &e).unwrap().into_matrix();
                assert!((s - s.transpose()).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn first_piola_derivative_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for m in models() {
            for _ in 0..20 {
                let g = Mat2::from_fn(|_, _| rng.gen_range(-0.2..0.2));
                let a = Mat2::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                let b = Mat2::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                let (s, t) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let lhs = first_piola_derivative(&m, &g, &(a.scale(s) + b.scale(t))).unwrap();
                let rhs = first_piola_derivative(&m, &g, &a).unwrap().scale(s)
                    + first_piola_derivative(&m, &g, &b).unwrap().scale(t);
                assert!((lhs - rhs).max_abs() <= 1e-13 * (1.0 + lhs.max_abs()));
            }
        }
    }

    #[test]
    fn ogden_tangent_degenerate_limit_matches_fd() {
        let ogden = MaterialModel::ogden(&[(0.6, 1.5), (0.3, -0.5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for gap in [1e-3, 1e-6, 1e-8, 1e-10, 0.0] {
            let e = Sym2::diag([0.1, 0.1 + gap]);
            let t = second_piola_derivative(&ogden, &e).unwrap();
            for _ in 0..5 {
                let h = random_sym(&mut rng, 1.0);
                let step = 1e-5;
                let fd = second_piola(&ogden, &e.add(&h.scale(step)))
                    .unwrap()
                    .sub(&second_piola(&ogden, &e.sub(&h.scale(step))).unwrap())
                    .scale(0.5 / step);
                let exact = t.apply(h.as_matrix());
                assert!((exact - fd.into_matrix()).max_abs() <= 1e-6, "gap {gap}");
            }
        }
    }

    #[test]
    fn ogden_rejects_inverted_stretch() {
        let ogden = MaterialModel::ogden(&[(1.0, 0.5)]).unwrap();
        let e = Sym2::diag([-0.6, 0.1]);
        assert!(energy_density(&ogden, &e).is_err());
        assert!(second_piola(&ogden, &e).is_err());
    }

    #[test]
    fn tangent_tensor_matches_directional_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for m in models() {
            let g = Mat2::from_fn(|_, _| rng.gen_range(-0.2..0.2));
            let t = first_piola_tangent(&m, &g).unwrap();
            let h = Mat2::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let d = first_piola_derivative(&m, &g, &h).unwrap();
            assert!((t.apply(&h) - d).max_abs() < 1e-13);
        }
    }
}
