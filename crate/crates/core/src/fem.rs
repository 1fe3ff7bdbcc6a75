//! P1 vector finite-element assembly.
//!
//! Degrees of freedom are interleaved: node `i` owns `2i` (x) and `2i + 1`
//! (y). On P1 triangles `∇u`, `σ(∇u)`, `det Φ` and `cof Φ` are constant per
//! element, so every volume integral below is exact. Edge integrals use
//! two-point Gauss, which is exact for the P1 × P1 products that appear.
//!
//! The σ-terms of the momentum equation and of the Neumann condition are
//! merged into the integrated-by-parts residual `−∫ σ : ∇φ`; the boundary
//! part `−∫_{Γ_N} σ n · φ` is still available on its own for tests.

use std::sync::Arc;

use rayon::prelude::*;

use crate::material::{
    energy_density, first_piola, first_piola_tangent, MaterialError, MaterialModel,
};
use crate::mesh::{BoundaryTag, Mesh};
use crate::sparse::CsrMatrix;
use crate::tensor::{green_st_venant, Mat2};

/// Nodal vector field, interleaved `[x₀, y₀, x₁, y₁, …]`.
pub type NodalField = Vec<f64>;

/// Volume force `f(x, t)`.
pub type BodyLoad = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

/// Boundary traction `g(x, n, t)` on Γ_N; `n` is the outward normal of the
/// edge being integrated.
pub type BoundaryLoad = Arc<dyn Fn([f64; 2], [f64; 2], f64) -> [f64; 2] + Send + Sync>;

pub fn zero_body_load() -> BodyLoad {
    Arc::new(|_, _| [0.0, 0.0])
}

pub fn zero_boundary_load() -> BoundaryLoad {
    Arc::new(|_, _, _| [0.0, 0.0])
}

const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_13, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

/// Dirichlet bookkeeping: the constrained dofs are exactly those of nodes
/// lying on a Γ_D edge.
#[derive(Debug, Clone)]
pub struct DofMap {
    num_nodes: usize,
    dirichlet: Vec<usize>,
    fixed: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let num_nodes = mesh.num_nodes();
        let mut fixed = vec![false; 2 * num_nodes];
        let mut dirichlet = Vec::new();
        for n in mesh.dirichlet_nodes() {
            for c in 0..2 {
                fixed[2 * n + c] = true;
                dirichlet.push(2 * n + c);
            }
        }
        Self { num_nodes, dirichlet, fixed }
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.num_nodes
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        2 * node + component
    }

    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    pub fn zero_dirichlet(&self, v: &mut [f64]) {
        for &d in &self.dirichlet {
            v[d] = 0.0;
        }
    }

    pub fn zeros(&self) -> NodalField {
        vec![0.0; self.num_dofs()]
    }
}

/// Interpolates a vector function at the nodes.
pub fn interpolate(mesh: &Mesh, f: impl Fn([f64; 2]) -> [f64; 2]) -> NodalField {
    mesh.nodes().iter().flat_map(|&p| f(p)).collect()
}

/// Constant `∇u` on `triangle`: `(∇u)_ab = ∂u_a/∂x_b`.
pub fn element_gradient(mesh: &Mesh, triangle: usize, u: &[f64]) -> Mat2 {
    let g = mesh.shape_gradients(triangle);
    let tri = mesh.triangles()[triangle];
    let mut m = Mat2::zeros();
    for k in 0..3 {
        for a in 0..2 {
            for b in 0..2 {
                m.entries[a][b] += u[2 * tri[k] + a] * g[k][b];
            }
        }
    }
    m
}

fn triangle_dofs(tri: &[usize; 3]) -> [usize; 6] {
    [2 * tri[0], 2 * tri[0] + 1, 2 * tri[1], 2 * tri[1] + 1, 2 * tri[2], 2 * tri[2] + 1]
}

fn element_triplets(
    mesh: &Mesh,
    kernel: impl Fn(usize) -> [[f64; 6]; 6] + Send + Sync,
) -> Vec<(usize, usize, f64)> {
    let blocks: Vec<[[f64; 6]; 6]> = (0..mesh.num_triangles()).into_par_iter().map(kernel).collect();
    let mut t = Vec::with_capacity(36 * blocks.len());
    for (e, block) in blocks.iter().enumerate() {
        let dofs = triangle_dofs(&mesh.triangles()[e]);
        for r in 0..6 {
            for c in 0..6 {
                if block[r][c] != 0.0 {
                    t.push((dofs[r], dofs[c], block[r][c]));
                }
            }
        }
    }
    t
}

/// Consistent mass matrix, `M_ij = ∫ φ_i · φ_j` (unit density).
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let t = element_triplets(mesh, |e| {
        let a = mesh.area(e);
        let mut k = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                let m = if i == j { a / 6.0 } else { a / 12.0 };
                for c in 0..2 {
                    k[2 * i + c][2 * j + c] = m;
                }
            }
        }
        k
    });
    CsrMatrix::from_triplets(2 * mesh.num_nodes(), &t)
}

/// Damping stiffness, `K_ij = κ ∫ ∇φ_i : ∇φ_j`.
pub fn assemble_diffusion(mesh: &Mesh, kappa: f64) -> CsrMatrix {
    let t = element_triplets(mesh, |e| {
        let a = mesh.area(e);
        let g = mesh.shape_gradients(e);
        let mut k = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                let v = kappa * a * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                for c in 0..2 {
                    k[2 * i + c][2 * j + c] = v;
                }
            }
        }
        k
    });
    CsrMatrix::from_triplets(2 * mesh.num_nodes(), &t)
}

/// Internal force `r_i = −∫_Ω σ(∇u) : ∇φ_i`. This is the negative
/// gradient of the stored energy `Σ_e |e| W(E_e)`.
pub fn assemble_internal_force(
    mesh: &Mesh,
    model: &MaterialModel,
    u: &[f64],
) -> Result<NodalField, MaterialError> {
    let per_element: Vec<Result<[f64; 6], MaterialError>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|e| {
            let sigma = first_piola(model, &element_gradient(mesh, e, u))?;
            let g = mesh.shape_gradients(e);
            let a = mesh.area(e);
            let mut r = [0.0; 6];
            for i in 0..3 {
                for c in 0..2 {
                    r[2 * i + c] = -a * (sigma.entries[c][0] * g[i][0] + sigma.entries[c][1] * g[i][1]);
                }
            }
            Ok(r)
        })
        .collect();
    let mut out = vec![0.0; 2 * mesh.num_nodes()];
    for (e, r) in per_element.into_iter().enumerate() {
        let r = r?;
        for (k, d) in triangle_dofs(&mesh.triangles()[e]).into_iter().enumerate() {
            out[d] += r[k];
        }
    }
    Ok(out)
}

/// Derivative of [`assemble_internal_force`] at `u`. Symmetric, since the
/// internal force is an energy gradient.
pub fn assemble_internal_force_jacobian(
    mesh: &Mesh,
    model: &MaterialModel,
    u: &[f64],
) -> Result<CsrMatrix, MaterialError> {
    let blocks: Vec<Result<[[f64; 6]; 6], MaterialError>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|e| {
            let tangent = first_piola_tangent(model, &element_gradient(mesh, e, u))?;
            let g = mesh.shape_gradients(e);
            let a = mesh.area(e);
            let mut k = [[0.0; 6]; 6];
            for j in 0..3 {
                for c in 0..2 {
                    // σ'(∇u) applied to ∇(φ_j e_c) = e_c ⊗ ∇φ_j
                    let mut col = Mat2::zeros();
                    for p in 0..2 {
                        for q in 0..2 {
                            col.entries[p][q] = tangent.entries[p][q][c][0] * g[j][0]
                                + tangent.entries[p][q][c][1] * g[j][1];
                        }
                    }
                    for i in 0..3 {
                        for r in 0..2 {
                            k[2 * i + r][2 * j + c] =
                                -a * (col.entries[r][0] * g[i][0] + col.entries[r][1] * g[i][1]);
                        }
                    }
                }
            }
            Ok(k)
        })
        .collect();
    let mut t = Vec::with_capacity(36 * blocks.len());
    for (e, b) in blocks.into_iter().enumerate() {
        let b = b?;
        let dofs = triangle_dofs(&mesh.triangles()[e]);
        for r in 0..6 {
            for c in 0..6 {
                t.push((dofs[r], dofs[c], b[r][c]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(2 * mesh.num_nodes(), &t))
}

/// Stored energy `Σ_e |e| W(E(∇u_e))`.
pub fn stored_energy(mesh: &Mesh, model: &MaterialModel, u: &[f64]) -> Result<f64, MaterialError> {
    let parts: Vec<Result<f64, MaterialError>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|e| Ok(mesh.area(e) * energy_density(model, &green_st_venant(&element_gradient(mesh, e, u)))?))
        .collect();
    let mut s = 0.0;
    for p in parts {
        s += p?;
    }
    Ok(s)
}

/// `∫_Ω f · φ_i`, edge-midpoint rule (exact for quadratic integrands).
pub fn assemble_body_load(mesh: &Mesh, f: &BodyLoad, t: f64) -> NodalField {
    let mut out = vec![0.0; 2 * mesh.num_nodes()];
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.area(e);
        let p: Vec<[f64; 2]> = tri.iter().map(|&i| mesh.nodes()[i]).collect();
        for m in 0..3 {
            let (i, j) = (m, (m + 1) % 3);
            let mid = [0.5 * (p[i][0] + p[j][0]), 0.5 * (p[i][1] + p[j][1])];
            let fv = f(mid, t);
            for &k in &[i, j] {
                for c in 0..2 {
                    out[2 * tri[k] + c] += a / 3.0 * 0.5 * fv[c];
                }
            }
        }
    }
    out
}

/// Calls `visit(edge, x, n, weight, [φ_a, φ_b])` at the Gauss points of
/// every Γ_N edge; `weight` already includes the edge length.
fn for_each_neumann_point(mesh: &Mesh, mut visit: impl FnMut(usize, [f64; 2], [f64; 2], f64, [f64; 2])) {
    for e in mesh.edges_tagged(BoundaryTag::Neumann) {
        let [a, b] = mesh.boundary_edges()[e].nodes;
        let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
        let len = mesh.edge_length(e);
        let n = mesh.edge_normal(e);
        for &(s, w) in &GAUSS2 {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            visit(e, x, n, w * len, [1.0 - s, s]);
        }
    }
}

/// `l_i = ∫_{Γ_N} g · φ_i`.
pub fn assemble_neumann_load(mesh: &Mesh, g: &BoundaryLoad, t: f64) -> NodalField {
    let mut out = vec![0.0; 2 * mesh.num_nodes()];
    for_each_neumann_point(mesh, |e, x, n, w, phi| {
        let gv = g(x, n, t);
        let nodes = mesh.boundary_edges()[e].nodes;
        for k in 0..2 {
            for c in 0..2 {
                out[2 * nodes[k] + c] += w * phi[k] * gv[c];
            }
        }
    });
    out
}

/// Adds `scale · ∫_{edge} (M n) · φ_i` for every Γ_N edge, with `M` the
/// per-edge matrix returned by `edge_matrix` (constant along the edge).
fn accumulate_edge_flux(mesh: &Mesh, out: &mut [f64], mut edge_vector: impl FnMut(usize, [f64; 2]) -> [f64; 2]) {
    for e in mesh.edges_tagged(BoundaryTag::Neumann) {
        let [a, b] = mesh.boundary_edges()[e].nodes;
        let w = edge_vector(e, mesh.edge_normal(e));
        let half = 0.5 * mesh.edge_length(e);
        for node in [a, b] {
            out[2 * node] += half * w[0];
            out[2 * node + 1] += half * w[1];
        }
    }
}

/// Constraint row `b(u)`, with `b(u) · v = ∫_{Γ_N} v · cof(Φ(u)) n`. The
/// same vector is the pressure column of the discrete momentum equation.
pub fn assemble_constraint_row(mesh: &Mesh, u: &[f64]) -> NodalField {
    let mut out = vec![0.0; 2 * mesh.num_nodes()];
    accumulate_edge_flux(mesh, &mut out, |e, n| {
        let phi = Mat2::identity() + element_gradient(mesh, mesh.edge_triangle(e), u);
        phi.cofactor().mul_vec(&n)
    });
    out
}

/// `∫_Ω det(I + ∇u)`; exact for P1.
pub fn enclosed_volume(mesh: &Mesh, u: &[f64]) -> f64 {
    (0..mesh.num_triangles())
        .map(|e| mesh.area(e) * (Mat2::identity() + element_gradient(mesh, e, u)).det())
        .sum()
}

/// Per-element `det Φ`.
pub fn element_dets(mesh: &Mesh, u: &[f64]) -> Vec<f64> {
    (0..mesh.num_triangles())
        .map(|e| (Mat2::identity() + element_gradient(mesh, e, u)).det())
        .collect()
}

/// `min_e det Φ(∇u|_e)`: the invertibility monitor.
pub fn min_det(mesh: &Mesh, u: &[f64]) -> f64 {
    element_dets(mesh, u).into_iter().fold(f64::INFINITY, f64::min)
}

/// The two boundary contributions of the nonlinear Neumann datum
/// `−σ(∇u) n + 𝔭 (I − cof Φ(u)) n`, assembled against `φ_i` on Γ_N.
#[derive(Debug, Clone)]
pub struct BoundaryRhs {
    /// `−∫_{Γ_N} σ(∇u) n · φ_i`. Already contained in
    /// [`assemble_internal_force`]; exposed for checks only.
    pub stress: NodalField,
    /// `𝔭 ∫_{Γ_N} (I − cof Φ(u)) n · φ_i`, the part the solver adds.
    pub pressure: NodalField,
}

pub fn nonlinear_boundary_rhs(
    mesh: &Mesh,
    model: &MaterialModel,
    u: &[f64],
    p: f64,
) -> Result<BoundaryRhs, MaterialError> {
    let mut stress = vec![0.0; 2 * mesh.num_nodes()];
    let mut err = None;
    accumulate_edge_flux(mesh, &mut stress, |e, n| {
        match first_piola(model, &element_gradient(mesh, mesh.edge_triangle(e), u)) {
            Ok(s) => {
                let t = s.mul_vec(&n);
                [-t[0], -t[1]]
            }
            Err(x) => {
                err = Some(x);
                [0.0, 0.0]
            }
        }
    });
    if let Some(x) = err {
        return Err(x);
    }
    Ok(BoundaryRhs { stress, pressure: pressure_boundary_term(mesh, u, p) })
}

/// `𝔭 ∫_{Γ_N} (I − cof Φ(u)) n · φ_i`, i.e. `𝔭 (b(0) − b(u))`.
pub fn pressure_boundary_term(mesh: &Mesh, u: &[f64], p: f64) -> NodalField {
    let mut out = vec![0.0; 2 * mesh.num_nodes()];
    if p == 0.0 {
        return out;
    }
    accumulate_edge_flux(mesh, &mut out, |e, n| {
        let phi = Mat2::identity() + element_gradient(mesh, mesh.edge_triangle(e), u);
        let m = Mat2::identity() - phi.cofactor();
        let w = m.mul_vec(&n);
        [p * w[0], p * w[1]]
    });
    out
}

/// `H(v) = ∫_{Γ_N} v · (I − cof Φ(u)) n`.
pub fn constraint_rhs_h(mesh: &Mesh, u: &[f64], v: &[f64]) -> f64 {
    pressure_boundary_term(mesh, u, 1.0).iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `‖v‖_M = sqrt(vᵀ M v)`.
pub fn mass_norm(mass: &CsrMatrix, v: &[f64]) -> f64 {
    let mv = mass.mul_vec(v);
    mv.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

/// Row sums of the consistent mass matrix (the lumped mass).
pub fn lumped_mass(mass: &CsrMatrix) -> Vec<f64> {
    (0..mass.size()).map(|i| mass.row(i).map(|(_, v)| v).sum()).collect()
}
