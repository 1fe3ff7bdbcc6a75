//! Small dense matrix kinematics: deformation gradient, Green strain,
//! cofactor/determinant calculus and spectral powers of symmetric matrices.
//!
//! Everything here is a value type over `[[f64; D]; D]` with `D` either 2
//! or 3. The 2D case is what the solver uses; the 3D case is kept for the
//! pure algebra (cofactor Lipschitz probes, determinant identities).

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use thiserror::Error;

/// Eigenvalues at or below this are treated as non-positive by
/// [`sym_matrix_power`] when the exponent needs a positive spectrum.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TensorError {
    #[error("non-positive eigenvalue {eigenvalue:e} for exponent {exponent}")]
    NonPositiveEigenvalue { eigenvalue: f64, exponent: f64 },
}

struct DimCheck<const D: usize>;

impl<const D: usize> DimCheck<D> {
    const OK: () = assert!(D == 2 || D == 3, "only d = 2 and d = 3 are supported");
}

/// A `D x D` real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix<const D: usize> {
    pub entries: [[f64; D]; D],
}

pub type Mat2 = Matrix<2>;
pub type Mat3 = Matrix<3>;

impl<const D: usize> Default for Matrix<D> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const D: usize> Matrix<D> {
    pub const fn new(entries: [[f64; D]; D]) -> Self {
        #[allow(clippy::let_unit_value)]
        let () = DimCheck::<D>::OK;
        Self { entries }
    }

    pub const fn zeros() -> Self {
        Self::new([[0.0; D]; D])
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                m.entries[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn diag(values: [f64; D]) -> Self {
        Self::from_fn(|i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Outer product `a ⊗ b`, i.e. `(a ⊗ b)_ij = a_i b_j`.
    pub fn outer(a: &[f64; D], b: &[f64; D]) -> Self {
        Self::from_fn(|i, j| a[i] * b[j])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.entries[j][i])
    }

    pub fn trace(&self) -> f64 {
        (0..D).map(|i| self.entries[i][i]).sum()
    }

    /// Frobenius pairing `A : B = trace(Aᵀ B)`.
    pub fn ddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            for j in 0..D {
                s += self.entries[i][j] * other.entries[i][j];
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j| s * self.entries[i][j])
    }

    pub fn mul_vec(&self, v: &[f64; D]) -> [f64; D] {
        let mut out = [0.0; D];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..D).map(|j| self.entries[i][j] * v[j]).sum();
        }
        out
    }

    pub fn det(&self) -> f64 {
        let a = &self.entries;
        match D {
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            3 => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
            _ => unreachable!(),
        }
    }

    /// Cofactor matrix, written as a polynomial in the entries so it is
    /// defined for singular matrices as well. For invertible `A` it equals
    /// `det(A) A^{-T}`.
    pub fn cofactor(&self) -> Self {
        let a = &self.entries;
        match D {
            2 => Self::from_fn(|i, j| {
                let (r, c) = (1 - i, 1 - j);
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[r][c]
            }),
            3 => Self::from_fn(|i, j| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                // cyclic index choice folds the checkerboard sign into the minor
                a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]
            }),
            _ => unreachable!(),
        }
    }

    /// Inverse through the cofactor; `None` when `det == 0`.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(self.cofactor().transpose().scale(1.0 / det))
    }

    /// Symmetric part `½(A + Aᵀ)`.
    pub fn sym(&self) -> SymMatrix<D> {
        SymMatrix::from_fn(|i, j| 0.5 * (self.entries[i][j] + self.entries[j][i]))
    }
}

impl<const D: usize> Index<(usize, usize)> for Matrix<D> {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i][j]
    }
}

impl<const D: usize> IndexMut<(usize, usize)> for Matrix<D> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i][j]
    }
}

impl<const D: usize> Add for Matrix<D> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.entries[i][j] + rhs.entries[i][j])
    }
}

impl<const D: usize> Sub for Matrix<D> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.entries[i][j] - rhs.entries[i][j])
    }
}

impl<const D: usize> Neg for Matrix<D> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const D: usize> Mul for Matrix<D> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..D).map(|k| self.entries[i][k] * rhs.entries[k][j]).sum())
    }
}

impl<const D: usize> Mul<f64> for Matrix<D> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

/// A symmetric matrix. Construction always symmetrizes, so
/// `entries[i][j] == entries[j][i]` holds bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMatrix<const D: usize>(Matrix<D>);

pub type Sym2 = SymMatrix<2>;
pub type Sym3 = SymMatrix<3>;

impl<const D: usize> SymMatrix<D> {
    /// Builds from the upper triangle of `f`; the lower triangle is mirrored.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::<D>::zeros();
        for i in 0..D {
            for j in i..D {
                let v = f(i, j);
                m.entries[i][j] = v;
                m.entries[j][i] = v;
            }
        }
        Self(m)
    }

    /// Symmetrizes an arbitrary matrix.
    pub fn from_matrix(m: &Matrix<D>) -> Self {
        m.sym()
    }

    pub fn zeros() -> Self {
        Self(Matrix::zeros())
    }

    pub fn identity() -> Self {
        Self(Matrix::identity())
    }

    pub fn diag(values: [f64; D]) -> Self {
        Self(Matrix::diag(values))
    }

    pub fn as_matrix(&self) -> &Matrix<D> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<D> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.entries[i][j]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn ddot(&self, other: &Self) -> f64 {
        self.0.ddot(&other.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0 + other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0 - other.0)
    }

    /// Spectral decomposition by cyclic Jacobi rotations.
    pub fn eigen(&self) -> SymEigen<D> {
        jacobi_eigen(&self.0)
    }
}

/// Eigenvalues and orthonormal eigenvectors; `vectors[k]` pairs with `values[k]`.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen<const D: usize> {
    pub values: [f64; D],
    pub vectors: [[f64; D]; D],
}

impl<const D: usize> SymEigen<D> {
    /// Reassembles `Σ_k f(λ_k) v_k v_kᵀ`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix<D> {
        let mut out = Matrix::<D>::zeros();
        for k in 0..D {
            let w = f(self.values[k]);
            out = out + Matrix::outer(&self.vectors[k], &self.vectors[k]).scale(w);
        }
        out.sym()
    }
}

fn jacobi_eigen<const D: usize>(a: &Matrix<D>) -> SymEigen<D> {
    let mut m = *a;
    let mut v = Matrix::<D>::identity();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..D {
            for q in (p + 1)..D {
                off += m.entries[p][q] * m.entries[p][q];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..D {
            for q in (p + 1)..D {
                let apq = m.entries[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.entries[q][q] - m.entries[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..D {
                    let mkp = m.entries[k][p];
                    let mkq = m.entries[k][q];
                    m.entries[k][p] = c * mkp - s * mkq;
                    m.entries[k][q] = s * mkp + c * mkq;
                }
                for k in 0..D {
                    let mpk = m.entries[p][k];
                    let mqk = m.entries[q][k];
                    m.entries[p][k] = c * mpk - s * mqk;
                    m.entries[q][k] = s * mpk + c * mqk;
                }
                for k in 0..D {
                    let vkp = v.entries[k][p];
                    let vkq = v.entries[k][q];
                    v.entries[k][p] = c * vkp - s * vkq;
                    v.entries[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut values = [0.0; D];
    let mut vectors = [[0.0; D]; D];
    for k in 0..D {
        values[k] = m.entries[k][k];
        for i in 0..D {
            vectors[k][i] = v.entries[i][k];
        }
    }
    SymEigen { values, vectors }
}

/// Fourth-order tensor acting on matrices by `(T H)_ij = Σ_kl T_ijkl H_kl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor4<const D: usize> {
    pub entries: [[[[f64; D]; D]; D]; D],
}

impl<const D: usize> Default for Tensor4<D> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const D: usize> Tensor4<D> {
    pub fn zeros() -> Self {
        Self { entries: [[[[0.0; D]; D]; D]; D] }
    }

    /// The order-4 identity, `𝕀 H = H`.
    pub fn identity() -> Self {
        let mut t = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                t.entries[i][j][i][j] = 1.0;
            }
        }
        t
    }

    /// `(A ⊗ B) H = (B : H) A`.
    pub fn outer(a: &Matrix<D>, b: &Matrix<D>) -> Self {
        let mut t = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                for k in 0..D {
                    for l in 0..D {
                        t.entries[i][j][k][l] = a.entries[i][j] * b.entries[k][l];
                    }
                }
            }
        }
        t
    }

    pub fn apply(&self, h: &Matrix<D>) -> Matrix<D> {
        Matrix::from_fn(|i, j| {
            let mut s = 0.0;
            for k in 0..D {
                for l in 0..D {
                    s += self.entries[i][j][k][l] * h.entries[k][l];
                }
            }
            s
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut t = *self;
        t.for_each_mut(|x| *x *= s);
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = *self;
        for i in 0..D {
            for j in 0..D {
                for k in 0..D {
                    for l in 0..D {
                        t.entries[i][j][k][l] += other.entries[i][j][k][l];
                    }
                }
            }
        }
        t
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for a in self.entries.iter_mut() {
            for b in a.iter_mut() {
                for c in b.iter_mut() {
                    for x in c.iter_mut() {
                        f(x);
                    }
                }
            }
        }
    }
}

/// `Φ = I + ∇u`.
pub fn deformation_gradient<const D: usize>(grad_u: &Matrix<D>) -> Matrix<D> {
    Matrix::identity() + *grad_u
}

/// Green–Saint-Venant strain `E = ½(ΦᵀΦ − I)`.
pub fn green_st_venant<const D: usize>(grad_u: &Matrix<D>) -> SymMatrix<D> {
    let phi = deformation_gradient(grad_u);
    let c = phi.transpose() * phi;
    SymMatrix::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        0.5 * (c.entries[i][j] - delta)
    })
}

pub fn cofactor<const D: usize>(a: &Matrix<D>) -> Matrix<D> {
    a.cofactor()
}

/// Differential of `det` at `A` in direction `H`: `cof(A) : H`.
pub fn det_directional_derivative<const D: usize>(a: &Matrix<D>, h: &Matrix<D>) -> f64 {
    a.cofactor().ddot(h)
}

fn is_nonneg_integer(gamma: f64) -> bool {
    gamma >= 0.0 && gamma.fract() == 0.0
}

/// `S^γ = Q diag(λ_i^γ) Qᵀ`. Exponents other than non-negative integers
/// need every eigenvalue above [`EIGENVALUE_FLOOR`].
pub fn sym_matrix_power<const D: usize>(
    s: &SymMatrix<D>,
    gamma: f64,
) -> Result<SymMatrix<D>, TensorError> {
    let eig = s.eigen();
    if is_nonneg_integer(gamma) {
        let n = gamma as i32;
        return Ok(eig.map(|l| l.powi(n)));
    }
    if let Some(&bad) = eig.values.iter().find(|&&l| l <= EIGENVALUE_FLOOR) {
        return Err(TensorError::NonPositiveEigenvalue { eigenvalue: bad, exponent: gamma });
    }
    Ok(eig.map(|l| l.powf(gamma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix<const D: usize>(rng: &mut impl Rng, r: f64) -> Matrix<D> {
        Matrix::from_fn(|_, _| rng.gen_range(-r..r))
    }

    fn rotation(theta: f64) -> Mat2 {
        let (s, c) = theta.sin_cos();
        Mat2::new([[c, -s], [s, c]])
    }

    fn random_spd<const D: usize>(rng: &mut impl Rng) -> SymMatrix<D> {
        let a = random_matrix::<D>(rng, 1.0);
        let m = a.transpose() * a + Matrix::identity().scale(0.5);
        m.sym()
    }

    #[test]
    fn deformation_gradient_cases() {
        assert_eq!(deformation_gradient(&Mat2::zeros()), Mat2::identity());
        let f = deformation_gradient(&Mat2::diag([0.1, -0.1]));
        assert_eq!(f, Mat2::diag([1.1, 0.9]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let g = random_matrix::<2>(&mut rng, 3.0);
            let d = deformation_gradient(&g) - g;
            assert!((d - Mat2::identity()).max_abs() < 1e-15);
        }
    }

    #[test]
    fn green_strain_cases() {
        assert_eq!(green_st_venant(&Mat2::zeros()), Sym2::zeros());
        let e = green_st_venant(&Mat2::diag([0.2, 0.0]));
        assert!((e.get(0, 0) - 0.22).abs() < 1e-15);
        assert_eq!(e.get(0, 1), 0.0);
        assert_eq!(e.get(1, 1), 0.0);
    }

    #[test]
    fn green_strain_vanishes_on_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let r = rotation(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
            let e = green_st_venant(&(r - Mat2::identity()));
            assert!(e.as_matrix().max_abs() <= 1e-13);
        }
    }

    #[test]
    fn cofactor_small_cases() {
        assert_eq!(Mat2::identity().cofactor(), Mat2::identity());
        assert_eq!(Mat2::diag([2.0, 3.0]).cofactor(), Mat2::diag([3.0, 2.0]));
        let a = Mat2::new([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(a.cofactor(), Mat2::new([[4.0, -3.0], [-2.0, 1.0]]));
        assert_eq!(Mat3::identity().cofactor(), Mat3::identity());
    }

    fn inverse_oracle<const D: usize>(a: &Matrix<D>) -> Matrix<D> {
        // Gauss-Jordan with partial pivoting, independent of the cofactor path.
        let mut m = a.entries;
        let mut inv = Matrix::<D>::identity().entries;
        for col in 0..D {
            let piv = (col..D)
                .max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap())
                .unwrap();
            m.swap(col, piv);
            inv.swap(col, piv);
            let d = m[col][col];
            for j in 0..D {
                m[col][j] /= d;
                inv[col][j] /= d;
            }
            for r in 0..D {
                if r != col {
                    let f = m[r][col];
                    for j in 0..D {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
        Matrix::new(inv)
    }

    #[test]
    fn cofactor_matches_det_inverse_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_matrix::<2>(&mut rng, 2.0) + Mat2::identity();
            let oracle = inverse_oracle(&a).transpose().scale(a.det());
            assert!((a.cofactor() - oracle).norm() <= 1e-12 * (1.0 + oracle.norm()));
            let b = random_matrix::<3>(&mut rng, 2.0) + Mat3::identity();
            let oracle = inverse_oracle(&b).transpose().scale(b.det());
            assert!((b.cofactor() - oracle).norm() <= 1e-12 * (1.0 + oracle.norm()));
        }
    }

    #[test]
    fn cofactor_handles_singular_3x3() {
        let a = Mat3::new([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]]);
        assert_eq!(a.det(), 0.0);
        let c = a.cofactor();
        // A cof(A)ᵀ = det(A) I = 0
        assert!((a * c.transpose()).max_abs() < 1e-14);
    }

    #[test]
    fn cofactor_homogeneity_and_det_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let s = rng.gen_range(-3.0..3.0);
            let a2 = random_matrix::<2>(&mut rng, 2.0);
            assert!(((a2.scale(s)).cofactor() - a2.cofactor().scale(s)).max_abs() < 1e-13);
            assert!((a2.cofactor().det() - a2.det()).abs() < 1e-12);
            let a3 = random_matrix::<3>(&mut rng, 2.0);
            assert!(((a3.scale(s)).cofactor() - a3.cofactor().scale(s * s)).max_abs() < 1e-12);
            assert!((a3.cofactor().det() - a3.det().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn det_derivative_cases() {
        assert_eq!(det_directional_derivative(&Mat2::identity(), &Mat2::identity()), 2.0);
        assert_eq!(det_directional_derivative(&Mat2::identity(), &Mat2::zeros()), 0.0);
    }

    #[test]
    fn det_derivative_matches_central_differences_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_matrix::<3>(&mut rng, 1.5);
            let h = random_matrix::<3>(&mut rng, 1.0);
            let exact = det_directional_derivative(&a, &h);
            let fd = |step: f64| {
                ((a + h.scale(step)).det() - (a - h.scale(step)).det()) / (2.0 * step)
            };
            let e1 = (fd(1e-2) - exact).abs();
            let e2 = (fd(5e-3) - exact).abs();
            // det is cubic in d = 3, so the central difference error is exactly O(h²)
            if e2 > 1e-12 {
                assert!((e1 / e2).log2() >= 1.9, "order {}", (e1 / e2).log2());
            }
            assert!(e2 < 1e-3);
        }
    }

    #[test]
    fn det_derivative_exact_in_2d() {
        // det is quadratic in d = 2, so the central difference is exact
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let a = random_matrix::<2>(&mut rng, 1.5);
            let h = random_matrix::<2>(&mut rng, 1.0);
            let step = 1e-3;
            let fd = ((a + h.scale(step)).det() - (a - h.scale(step)).det()) / (2.0 * step);
            assert!((fd - det_directional_derivative(&a, &h)).abs() < 1e-10);
        }
    }

    #[test]
    fn power_cases() {
        let p = sym_matrix_power(&Sym2::identity(), 0.37).unwrap();
        assert!((p.into_matrix() - Mat2::identity()).max_abs() < 1e-15);
        let p = sym_matrix_power(&Sym2::diag([4.0, 9.0]), 0.5).unwrap();
        assert!((p.into_matrix() - Mat2::diag([2.0, 3.0])).max_abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let s = random_spd::<3>(&mut rng);
            let sq = s.into_matrix() * s.into_matrix();
            let p = sym_matrix_power(&s, 2.0).unwrap();
            assert!((p.into_matrix() - sq).max_abs() <= 1e-12 * (1.0 + sq.max_abs()));
        }
    }

    #[test]
    fn power_rejects_nonpositive_spectrum() {
        let s = Sym2::diag([1.0, -0.5]);
        assert!(matches!(
            sym_matrix_power(&s, 0.5),
            Err(TensorError::NonPositiveEigenvalue { .. })
        ));
        assert!(sym_matrix_power(&Sym2::diag([1.0, 0.0]), -1.0).is_err());
        // integer powers stay defined
        let p = sym_matrix_power(&s, 2.0).unwrap();
        assert!((p.get(1, 1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn power_semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let s = random_spd::<2>(&mut rng);
            let (g1, g2) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let lhs = sym_matrix_power(&s, g1 + g2).unwrap().into_matrix();
            let rhs = sym_matrix_power(&s, g1).unwrap().into_matrix()
                * sym_matrix_power(&s, g2).unwrap().into_matrix();
            assert!((lhs - rhs).max_abs() <= 1e-10 * (1.0 + lhs.max_abs()));
        }
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let a = random_matrix::<3>(&mut rng, 2.0).sym();
            let back = a.eigen().map(|l| l);
            assert!((back.into_matrix() - a.into_matrix()).max_abs() < 1e-13);
        }
    }

    #[test]
    fn tensor4_identity_and_outer() {
        let h = Mat2::new([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(Tensor4::identity().apply(&h), h);
        let ii = Tensor4::outer(&Mat2::identity(), &Mat2::identity());
        assert_eq!(ii.apply(&h), Mat2::identity().scale(5.0));
    }
}
