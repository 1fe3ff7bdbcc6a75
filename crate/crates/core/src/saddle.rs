//! SPD systems bordered by one constraint row.
//!
//! ```text
//! [ A   b ] [v]   [rhs]
//! [ bᵀ  0 ] [p] = [ h ]
//! ```
//!
//! Solved by the Schur complement on the scalar multiplier, with one
//! factorization of `A` shared by both back-substitutions.

use thiserror::Error;

use crate::mesh::{BoundaryTag, Mesh};
use crate::sparse::{dot, CsrMatrix, EnvelopeCholesky, SparseError};

#[derive(Debug, Error)]
pub enum SaddleError {
    #[error("singular matrix: {0}")]
    SingularMatrix(#[from] SparseError),
    #[error("degenerate constraint: b·A⁻¹b = {schur:e} for |b|² = {row_norm_sq:e}")]
    DegenerateConstraint { schur: f64, row_norm_sq: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

/// `A v + p b = rhs`, `b · v = h`.
#[derive(Debug, Clone)]
pub struct BorderedSystem {
    pub matrix: CsrMatrix,
    pub row: Vec<f64>,
    pub rhs: Vec<f64>,
    pub h: f64,
}

/// Relative threshold on `b · A⁻¹ b` below which the constraint is treated
/// as invisible to the operator.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;

/// A factored `A`, reusable across right-hand sides and constraint rows.
#[derive(Debug, Clone)]
pub struct BorderedSolver {
    factor: EnvelopeCholesky,
}

impl BorderedSolver {
    pub fn new(matrix: &CsrMatrix) -> Result<Self, SaddleError> {
        Ok(Self { factor: EnvelopeCholesky::factor(matrix)? })
    }

    pub fn size(&self) -> usize {
        self.factor.size()
    }

    /// Plain `A⁻¹ rhs`.
    pub fn solve_unconstrained(&self, rhs: &[f64]) -> Result<Vec<f64>, SaddleError> {
        Ok(self.factor.solve(rhs)?)
    }

    pub fn solve(&self, row: &[f64], rhs: &[f64], h: f64) -> Result<(Vec<f64>, f64), SaddleError> {
        let n = self.size();
        for len in [row.len(), rhs.len()] {
            if len != n {
                return Err(SaddleError::Dimension { expected: n, found: len });
            }
        }
        let x1 = self.factor.solve(rhs)?;
        let x2 = self.factor.solve(row)?;
        let schur = dot(row, &x2);
        let row_norm_sq = dot(row, row);
        if !(schur > DEGENERACY_THRESHOLD * row_norm_sq) {
            return Err(SaddleError::DegenerateConstraint { schur, row_norm_sq });
        }
        let p = (dot(row, &x1) - h) / schur;
        let v = x1.iter().zip(&x2).map(|(a, b)| a - p * b).collect();
        Ok((v, p))
    }
}

pub fn solve_bordered(sys: &BorderedSystem) -> Result<(Vec<f64>, f64), SaddleError> {
    BorderedSolver::new(&sys.matrix)?.solve(&sys.row, &sys.rhs, sys.h)
}

/// Relative KKT residuals `(‖A v + p b − rhs‖ / ‖rhs‖, |b·v − h| / max(|h|, ‖b‖‖v‖))`,
/// with denominators floored at 1.
pub fn kkt_residuals(sys: &BorderedSystem, v: &[f64], p: f64) -> (f64, f64) {
    let av = sys.matrix.mul_vec(v);
    let r: Vec<f64> = av.iter().zip(&sys.row).zip(&sys.rhs).map(|((a, b), f)| a + p * b - f).collect();
    let scale = crate::sparse::norm(&sys.rhs).max(1.0);
    let c_scale = sys.h.abs().max(crate::sparse::norm(&sys.row) * crate::sparse::norm(v)).max(1.0);
    (crate::sparse::norm(&r) / scale, (dot(&sys.row, v) - sys.h).abs() / c_scale)
}

/// `(1/|Γ_N|) ∫_{Γ_N} g · n`: the constant pressure whose normal traction
/// is the best fit to `g`. Two-point Gauss per edge.
pub fn recover_multiplier(mesh: &Mesh, g: impl Fn([f64; 2], [f64; 2]) -> [f64; 2]) -> f64 {
    const POINTS: [f64; 2] = [0.211_324_865_405_187_13, 0.788_675_134_594_812_9];
    let mut total = 0.0;
    for e in mesh.edges_tagged(BoundaryTag::Neumann) {
        let [a, b] = mesh.boundary_edges()[e].nodes;
        let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
        let n = mesh.edge_normal(e);
        let half = 0.5 * mesh.edge_length(e);
        for s in POINTS {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let gv = g(x, n);
            total += half * (gv[0] * n[0] + gv[1] * n[1]);
        }
    }
    total / mesh.neumann_length()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Side;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut impl Rng, n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 0.5));
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    t.extend([(i, j, v), (j, i, v), (i, i, v.abs()), (j, j, v.abs())]);
                }
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn identity_hand_case() {
        let sys = BorderedSystem {
            matrix: CsrMatrix::identity(2),
            row: vec![1.0, 0.0],
            rhs: vec![0.0, 0.0],
            h: 1.0,
        };
        let (v, p) = solve_bordered(&sys).unwrap();
        assert_eq!(v, vec![1.0, 0.0]);
        assert_eq!(p, -1.0);
    }

    #[test]
    fn inactive_constraint_gives_zero_multiplier() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_spd(&mut rng, 30);
        let rhs: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let row: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let solver = BorderedSolver::new(&a).unwrap();
        let free = solver.solve_unconstrained(&rhs).unwrap();
        let (v, p) = solver.solve(&row, &rhs, dot(&row, &free)).unwrap();
        assert!(p.abs() < 1e-12);
        for (x, y) in v.iter().zip(&free) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_and_singular_are_reported() {
        let sys = BorderedSystem {
            matrix: CsrMatrix::identity(3),
            row: vec![0.0; 3],
            rhs: vec![1.0; 3],
            h: 0.0,
        };
        assert!(matches!(solve_bordered(&sys), Err(SaddleError::DegenerateConstraint { .. })));
        let bad = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(BorderedSolver::new(&bad), Err(SaddleError::SingularMatrix(_))));
    }

    #[test]
    fn row_scaling_rescales_multiplier_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_spd(&mut rng, 40);
        let rhs: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let row: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let solver = BorderedSolver::new(&a).unwrap();
        let (v1, p1) = solver.solve(&row, &rhs, 0.3).unwrap();
        let s = 3.5;
        let scaled: Vec<f64> = row.iter().map(|x| s * x).collect();
        let (v2, p2) = solver.solve(&scaled, &rhs, s * 0.3).unwrap();
        assert!((p2 - p1 / s).abs() < 1e-12 * (1.0 + p1.abs()));
        for (x, y) in v1.iter().zip(&v2) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn solution_minimizes_energy_on_constraint_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 25;
        let a = random_spd(&mut rng, n);
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (v, _) = solve_bordered(&BorderedSystem { matrix: a.clone(), row: row.clone(), rhs: rhs.clone(), h: 0.7 })
            .unwrap();
        let objective = |x: &[f64]| 0.5 * dot(x, &a.mul_vec(x)) - dot(&rhs, x);
        let base = objective(&v);
        for _ in 0..50 {
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = dot(&w, &row) / dot(&row, &row);
            w.iter_mut().zip(&row).for_each(|(x, r)| *x -= c * r);
            let moved: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x + 1e-3 * y).collect();
            assert!(objective(&moved) >= base);
        }
    }

    #[test]
    fn multiplier_recovery_cases() {
        let m = Mesh::structured_square(4, 4, &[Side::Left]).unwrap();
        assert!((recover_multiplier(&m, |_, n| [2.5 * n[0], 2.5 * n[1]]) - 2.5).abs() < 1e-14);
        assert!(recover_multiplier(&m, |_, n| [-n[1], n[0]]).abs() < 1e-15);
        let right = Mesh::structured_square(4, 4, &[Side::Left, Side::Top, Side::Bottom]).unwrap();
        assert!((recover_multiplier(&right, |_, _| [1.0, 0.0]) - 1.0).abs() < 1e-14);
    }
}
