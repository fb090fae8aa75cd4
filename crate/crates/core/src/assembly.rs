//! Global operators of the weak form on the clamped BFS space.
//!
//! With `(·,·)` the L² pairing on the basin:
//!
//! * `D`:  `(∇u, ∇v)`
//! * `A`:  `(Δu, Δv)`
//! * `B₀`: `b₀(u, v) = −(u_x, v)` (equal to the skew half-difference on the clamped space)
//! * `b(ψ; v, w) = (Δψ, v_y w_x − v_x w_y)`
//!
//! Matrix rows index test functions and columns index trial functions, so
//! `(M x)_i = form(x, φ_i)`.
//!
//! Cell contributions are computed in parallel and scattered serially in
//! cell order, so the result does not depend on the thread count.

use std::sync::Arc;

use rayon::prelude::*;

use crate::element::{CellBasis, QuadratureRule, ReferenceBasis, ShapeValues, LOCAL_DOFS};
use crate::error::{QgError, Result};
use crate::field::{Jet, PointField, SmoothField};
use crate::mesh::{DofKind, DofMap, RectMesh};
use crate::sparse::{CsrMatrix, SparsityPattern};
use crate::timestepper::State;

type LocalMatrix = [[f64; LOCAL_DOFS]; LOCAL_DOFS];
type LocalVector = [f64; LOCAL_DOFS];

const NO_SLOT: u32 = u32::MAX;

/// Physical parameters of the equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    /// Diffusion coefficient ν.
    pub nu: f64,
    /// Inverse Rossby number μ.
    pub mu: f64,
}

/// Mesh, DOF map, shape tables and the shared sparsity pattern.
#[derive(Debug)]
pub struct Discretization {
    pub mesh: RectMesh,
    pub dofmap: DofMap,
    pub basis: ReferenceBasis,
    /// Physical shape tables; identical for every cell of the uniform mesh.
    pub cell: CellBasis,
    pattern: Arc<SparsityPattern>,
    cell_dofs: Vec<[Option<usize>; LOCAL_DOFS]>,
    /// Value-array slot of local entry `(a, b)` for each cell.
    slots: Vec<[u32; LOCAL_DOFS * LOCAL_DOFS]>,
}

impl Discretization {
    pub fn new(mesh: RectMesh) -> Self {
        Self::with_rule(mesh, QuadratureRule::assembly_default())
    }

    pub fn with_rule(mesh: RectMesh, rule: QuadratureRule) -> Self {
        let dofmap = DofMap::new(&mesh);
        let basis = ReferenceBasis::new(rule);
        let cell = basis.physical(mesh.hx, mesh.hy);

        let mut cell_dofs = Vec::with_capacity(mesh.n_cells());
        for j in 0..mesh.ny {
            for i in 0..mesh.nx {
                cell_dofs.push(dofmap.cell_dofs(i, j));
            }
        }

        let n = dofmap.n_free();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in &cell_dofs {
            for a in dofs.iter().flatten() {
                rows[*a].extend(dofs.iter().flatten());
            }
        }
        let pattern = Arc::new(SparsityPattern::from_rows(n, rows));
        assert!(pattern.nnz() < NO_SLOT as usize, "pattern too large for u32 slots");

        let slots = cell_dofs
            .iter()
            .map(|dofs| {
                let mut s = [NO_SLOT; LOCAL_DOFS * LOCAL_DOFS];
                for (a, ga) in dofs.iter().enumerate() {
                    for (b, gb) in dofs.iter().enumerate() {
                        if let (Some(ga), Some(gb)) = (ga, gb) {
                            s[a * LOCAL_DOFS + b] = pattern.find(*ga, *gb).unwrap() as u32;
                        }
                    }
                }
                s
            })
            .collect();

        Self {
            mesh,
            dofmap,
            basis,
            cell,
            pattern,
            cell_dofs,
            slots,
        }
    }

    pub fn n_free(&self) -> usize {
        self.dofmap.n_free()
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn cell_dofs(&self, cell: usize) -> &[Option<usize>; LOCAL_DOFS] {
        &self.cell_dofs[cell]
    }

    /// Local coefficients of cell `cell`; clamped DOFs read as zero.
    #[inline]
    pub fn gather(&self, cell: usize, x: &[f64]) -> LocalVector {
        let dofs = &self.cell_dofs[cell];
        std::array::from_fn(|k| dofs[k].map_or(0.0, |g| x[g]))
    }

    fn scatter_matrix(&self, locals: impl IntoIterator<Item = (usize, LocalMatrix)>) -> CsrMatrix {
        let mut m = CsrMatrix::zeros(self.pattern.clone());
        let values = m.values_mut();
        for (cell, local) in locals {
            let slots = &self.slots[cell];
            for a in 0..LOCAL_DOFS {
                for b in 0..LOCAL_DOFS {
                    let s = slots[a * LOCAL_DOFS + b];
                    if s != NO_SLOT {
                        values[s as usize] += local[a][b];
                    }
                }
            }
        }
        m
    }

    fn scatter_vector(&self, locals: impl IntoIterator<Item = (usize, LocalVector)>) -> Vec<f64> {
        let mut r = vec![0.0; self.n_free()];
        for (cell, local) in locals {
            for (k, g) in self.cell_dofs[cell].iter().enumerate() {
                if let Some(g) = g {
                    r[*g] += local[k];
                }
            }
        }
        r
    }

    /// Same local matrix on every cell (uniform mesh, constant coefficients).
    fn assemble_uniform(&self, local: LocalMatrix) -> CsrMatrix {
        self.scatter_matrix((0..self.mesh.n_cells()).map(|c| (c, local)))
    }

    /// `(∇u, ∇v)` over free DOFs.
    pub fn assemble_gradgrad(&self) -> CsrMatrix {
        self.assemble_uniform(local_gradgrad(&self.cell))
    }

    /// `(Δu, Δv)` over free DOFs.
    pub fn assemble_biharmonic(&self) -> CsrMatrix {
        self.assemble_uniform(local_biharmonic(&self.cell))
    }

    /// `b₀(u, v) = −(u_x, v)` over free DOFs.
    pub fn assemble_b0(&self) -> CsrMatrix {
        self.assemble_uniform(local_b0(&self.cell))
    }

    /// `(M x)_i = (u, φ_i)`, the L² mass matrix.
    pub fn assemble_mass(&self) -> CsrMatrix {
        self.assemble_uniform(local_mass(&self.cell))
    }

    /// Physical coordinates of quadrature point `q` of cell `c`.
    #[inline]
    pub fn quad_point(&self, cell: usize, q: usize) -> (f64, f64) {
        let (i, j) = (cell % self.mesh.nx, cell / self.mesh.nx);
        let (ox, oy) = self.mesh.cell_origin(i, j);
        let (xi, eta) = self.cell.points[q];
        (ox + xi * self.mesh.hx, oy + eta * self.mesh.hy)
    }

    /// Load vector `μ (F(·, t), φ_i)`.
    pub fn assemble_load(&self, f: &dyn PointField, t: f64, mu: f64) -> Result<Vec<f64>> {
        let cb = &self.cell;
        let locals: Result<Vec<(usize, LocalVector)>> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let mut local = [0.0; LOCAL_DOFS];
                for (q, (s, w)) in cb.tables.iter().zip(&cb.weights).enumerate() {
                    let (x, y) = self.quad_point(c, q);
                    let value = f.value(x, y, t);
                    if !value.is_finite() {
                        return Err(QgError::NonFiniteLoad { x, y, t, value });
                    }
                    let wf = w * mu * value;
                    for k in 0..LOCAL_DOFS {
                        local[k] += wf * s.v[k];
                    }
                }
                Ok((c, local))
            })
            .collect();
        Ok(self.scatter_vector(locals?))
    }

    /// `r_i = b(ψ; v, φ_i)` for every test function.
    pub fn apply_trilinear(&self, psi: &[f64], v: &[f64]) -> Vec<f64> {
        let cb = &self.cell;
        let locals: Vec<(usize, LocalVector)> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let pc = self.gather(c, psi);
                let vc = self.gather(c, v);
                let mut local = [0.0; LOCAL_DOFS];
                for (s, w) in cb.tables.iter().zip(&cb.weights) {
                    let lap = eval_laplacian(s, &pc);
                    let vj = s.eval(&vc);
                    let (ax, ay) = (w * lap * vj.dy, -w * lap * vj.dx);
                    for k in 0..LOCAL_DOFS {
                        local[k] += ax * s.dx[k] + ay * s.dy[k];
                    }
                }
                (c, local)
            })
            .collect();
        self.scatter_vector(locals)
    }

    /// `b(ψ; v, w)` as a scalar.
    pub fn trilinear(&self, psi: &[f64], v: &[f64], w: &[f64]) -> f64 {
        crate::sparse::dot(&self.apply_trilinear(psi, v), w)
    }

    /// Derivative of `Ψ ↦ b(Ψ; Ψ, ·)`: entry `(i, j)` is
    /// `b(φ_j; Ψ, φ_i) + b(Ψ; φ_j, φ_i)`.
    pub fn assemble_trilinear_jacobian(&self, psi: &[f64]) -> CsrMatrix {
        let cb = &self.cell;
        let locals: Vec<(usize, LocalMatrix)> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let pc = self.gather(c, psi);
                let mut local = [[0.0; LOCAL_DOFS]; LOCAL_DOFS];
                for (s, w) in cb.tables.iter().zip(&cb.weights) {
                    let p = s.eval(&pc);
                    let lap = p.laplacian();
                    // cross_i = Ψ_y ∂xφ_i − Ψ_x ∂yφ_i
                    let cross: LocalVector = std::array::from_fn(|i| p.dy * s.dx[i] - p.dx * s.dy[i]);
                    for i in 0..LOCAL_DOFS {
                        let (wx, wy) = (w * lap * s.dx[i], w * lap * s.dy[i]);
                        let wc = w * cross[i];
                        let row = &mut local[i];
                        for j in 0..LOCAL_DOFS {
                            row[j] += wc * s.laplacian(j) + s.dy[j] * wx - s.dx[j] * wy;
                        }
                    }
                }
                (c, local)
            })
            .collect();
        self.scatter_matrix(locals)
    }

    /// Hermite interpolant of `field(·, t)` on the free DOFs.
    pub fn interpolate(&self, field: &dyn SmoothField, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free()];
        let m = &self.mesh;
        for j in 0..=m.ny {
            for i in 0..=m.nx {
                let node = m.node_index(i, j);
                let (x, y) = m.node_coords(i, j);
                let jet = field.jet(x, y, t);
                for kind in DofKind::ALL {
                    if let Some(g) = self.dofmap.global(node, kind) {
                        out[g] = hermite_nodal_value(&jet, kind);
                    }
                }
            }
        }
        out
    }

    /// Largest nodal Hermite datum of `field` on boundary nodes; zero for
    /// fields compatible with the clamped condition.
    pub fn boundary_incompatibility(&self, field: &dyn SmoothField, t: f64) -> f64 {
        let m = &self.mesh;
        let mut worst = 0.0f64;
        for j in 0..=m.ny {
            for i in 0..=m.nx {
                if !m.is_boundary_node(i, j) {
                    continue;
                }
                let (x, y) = m.node_coords(i, j);
                let jet = field.jet(x, y, t);
                for kind in DofKind::ALL {
                    worst = worst.max(hermite_nodal_value(&jet, kind).abs());
                }
            }
        }
        worst
    }

    /// Evaluate the discrete field with coefficients `x` at a physical point.
    pub fn evaluate(&self, x: &[f64], px: f64, py: f64) -> Option<Jet> {
        let ((i, j), (xi, eta)) = self.mesh.locate(px, py)?;
        let c = self.gather(self.mesh.cell_index(i, j), x);
        let s = ShapeValues::reference(xi, eta).to_physical(self.mesh.hx, self.mesh.hy);
        Some(s.eval(&c))
    }
}

/// Hermite nodal functional `kind` applied to a jet. The twist needs the
/// mixed derivative, which a [`Jet`] carries.
#[inline]
fn hermite_nodal_value(jet: &Jet, kind: DofKind) -> f64 {
    match kind {
        DofKind::Value => jet.v,
        DofKind::Dx => jet.dx,
        DofKind::Dy => jet.dy,
        DofKind::Dxy => jet.dxy,
    }
}

#[inline]
fn eval_laplacian(s: &ShapeValues, c: &LocalVector) -> f64 {
    (0..LOCAL_DOFS).map(|k| c[k] * s.laplacian(k)).sum()
}

fn local_bilinear(cb: &CellBasis, form: impl Fn(&ShapeValues, usize, usize) -> f64) -> LocalMatrix {
    let mut local = [[0.0; LOCAL_DOFS]; LOCAL_DOFS];
    for (s, w) in cb.tables.iter().zip(&cb.weights) {
        for (i, row) in local.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e += w * form(s, i, j);
            }
        }
    }
    local
}

pub fn local_gradgrad(cb: &CellBasis) -> LocalMatrix {
    local_bilinear(cb, |s, i, j| s.dx[i] * s.dx[j] + s.dy[i] * s.dy[j])
}

pub fn local_biharmonic(cb: &CellBasis) -> LocalMatrix {
    local_bilinear(cb, |s, i, j| s.laplacian(i) * s.laplacian(j))
}

/// Row = test function `i`, column = trial function `j`: `−(∂xφ_j, φ_i)`.
pub fn local_b0(cb: &CellBasis) -> LocalMatrix {
    local_bilinear(cb, |s, i, j| -s.dx[j] * s.v[i])
}

pub fn local_mass(cb: &CellBasis) -> LocalMatrix {
    local_bilinear(cb, |s, i, j| s.v[i] * s.v[j])
}

/// Constant-in-time operators of the scheme.
#[derive(Clone, Debug)]
pub struct Operators {
    /// `(∇u, ∇v)`
    pub gradgrad: CsrMatrix,
    /// `(Δu, Δv)`
    pub biharmonic: CsrMatrix,
    /// `−(u_x, v)`
    pub b0: CsrMatrix,
}

impl Operators {
    pub fn assemble(disc: &Discretization) -> Self {
        Self {
            gradgrad: disc.assemble_gradgrad(),
            biharmonic: disc.assemble_biharmonic(),
            b0: disc.assemble_b0(),
        }
    }

    /// `D/Δt + νA + μB₀`
    pub fn linear_part(&self, dt: f64, params: Params) -> CsrMatrix {
        let mut m = CsrMatrix::zeros(self.gradgrad.pattern().clone());
        m.add_scaled(1.0 / dt, &self.gradgrad);
        m.add_scaled(params.nu, &self.biharmonic);
        m.add_scaled(params.mu, &self.b0);
        m
    }
}

/// Residual of one backward Euler step.
#[derive(Clone, Debug)]
pub struct Residual {
    pub values: Vec<f64>,
    pub t: f64,
}

impl Residual {
    pub fn norm(&self) -> f64 {
        crate::sparse::norm2(&self.values)
    }
}

/// `R(Ψⁿ) = D(Ψⁿ − Ψⁿ⁻¹)/Δt + νAΨⁿ + b(Ψⁿ; Ψⁿ, ·) + μB₀Ψⁿ − μF`.
///
/// `load` is the assembled `μ(F(tₙ), φ_i)`.
pub fn residual(
    disc: &Discretization,
    ops: &Operators,
    prev: &State,
    cur: &State,
    dt: f64,
    params: Params,
    load: &[f64],
) -> Result<Residual> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(QgError::Config(format!("time step must be positive, got {dt}")));
    }
    let n = disc.n_free();
    let diff: Vec<f64> = cur
        .coeffs
        .iter()
        .zip(&prev.coeffs)
        .map(|(a, b)| (a - b) / dt)
        .collect();
    let mut r = ops.gradgrad.mul_vec(&diff);
    let a = ops.biharmonic.mul_vec(&cur.coeffs);
    let b0 = ops.b0.mul_vec(&cur.coeffs);
    let nl = disc.apply_trilinear(&cur.coeffs, &cur.coeffs);
    for i in 0..n {
        r[i] += params.nu * a[i] + nl[i] + params.mu * b0[i] - load[i];
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(QgError::Diverged { t: cur.t });
    }
    Ok(Residual { values: r, t: cur.t })
}

/// `J = D/Δt + νA + μB₀ + ∂_Ψ b(Ψ; Ψ, ·)`.
pub fn jacobian(disc: &Discretization, ops: &Operators, cur: &State, dt: f64, params: Params) -> CsrMatrix {
    jacobian_from_linear(disc, &ops.linear_part(dt, params), cur)
}

/// Jacobian given a precomputed `D/Δt + νA + μB₀`.
pub fn jacobian_from_linear(disc: &Discretization, linear: &CsrMatrix, cur: &State) -> CsrMatrix {
    let mut j = linear.clone();
    j.add_scaled(1.0, &disc.assemble_trilinear_jacobian(&cur.coeffs));
    j
}
