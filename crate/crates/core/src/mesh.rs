//! Uniform rectangular partition of the basin and the Hermite DOF numbering.
//!
//! Every node carries four Hermite degrees of freedom, ordered
//! `(value, ∂x, ∂y, ∂xy)`. On the clamped boundary all four are eliminated,
//! which leaves exactly the discrete space of functions with `ψ = ∂ₙψ = 0`.

use crate::error::{QgError, Result};

/// Number of Hermite degrees of freedom per node.
pub const DOFS_PER_NODE: usize = 4;

/// Hermite degree-of-freedom kinds at a node, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DofKind {
    Value = 0,
    Dx = 1,
    Dy = 2,
    Dxy = 3,
}

impl DofKind {
    pub const ALL: [DofKind; 4] = [DofKind::Value, DofKind::Dx, DofKind::Dy, DofKind::Dxy];
}

#[derive(Clone, Debug, PartialEq)]
pub struct RectMesh {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl RectMesh {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(QgError::Config("basin extents must be finite".into()));
        }
        if x1 <= x0 || y1 <= y0 {
            return Err(QgError::Config(format!(
                "degenerate basin [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(QgError::Config(format!(
                "mesh {nx}x{ny} has no interior nodes; need nx, ny >= 2"
            )));
        }
        Ok(Self {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
            hx: (x1 - x0) / nx as f64,
            hy: (y1 - y0) / ny as f64,
        })
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn node_coords(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x0 + i as f64 * self.hx,
            self.y0 + j as f64 * self.hy,
        )
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Lower-left corner of cell `(i, j)`.
    #[inline]
    pub fn cell_origin(&self, i: usize, j: usize) -> (f64, f64) {
        self.node_coords(i, j)
    }

    /// Cell index `j * nx + i`, row-major in x.
    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Cell containing the point, with the local reference coordinates.
    /// Points on the outer boundary are assigned to the adjacent cell.
    pub fn locate(&self, x: f64, y: f64) -> Option<((usize, usize), (f64, f64))> {
        let tol = 1e-12;
        let sx = (x - self.x0) / self.hx;
        let sy = (y - self.y0) / self.hy;
        if sx < -tol || sy < -tol || sx > self.nx as f64 + tol || sy > self.ny as f64 + tol {
            return None;
        }
        let i = (sx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (sy.floor().max(0.0) as usize).min(self.ny - 1);
        let xi = (sx - i as f64).clamp(0.0, 1.0);
        let eta = (sy - j as f64).clamp(0.0, 1.0);
        Some(((i, j), (xi, eta)))
    }
}

/// Global numbering of the free (interior) Hermite DOFs.
#[derive(Clone, Debug)]
pub struct DofMap {
    /// `None` marks a clamped boundary DOF.
    global: Vec<Option<usize>>,
    n_free: usize,
    nx: usize,
    ny: usize,
}

impl DofMap {
    pub fn new(mesh: &RectMesh) -> Self {
        let mut global = vec![None; DOFS_PER_NODE * mesh.n_nodes()];
        let mut next = 0;
        for j in 0..=mesh.ny {
            for i in 0..=mesh.nx {
                if mesh.is_boundary_node(i, j) {
                    continue;
                }
                let node = mesh.node_index(i, j);
                for k in 0..DOFS_PER_NODE {
                    global[DOFS_PER_NODE * node + k] = Some(next);
                    next += 1;
                }
            }
        }
        Self {
            global,
            n_free: next,
            nx: mesh.nx,
            ny: mesh.ny,
        }
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_total(&self) -> usize {
        self.global.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.global.iter().filter(|g| g.is_none()).count()
    }

    #[inline]
    pub fn global(&self, node: usize, kind: DofKind) -> Option<usize> {
        self.global[DOFS_PER_NODE * node + kind as usize]
    }

    /// Free indices of the 16 local DOFs of cell `(i, j)`.
    ///
    /// Local order: corners `(0,0), (1,0), (0,1), (1,1)`, each with
    /// `(value, ∂x, ∂y, ∂xy)`.
    pub fn cell_dofs(&self, i: usize, j: usize) -> [Option<usize>; 16] {
        let mut out = [None; 16];
        for (c, (di, dj)) in CORNERS.iter().enumerate() {
            let node = (j + dj) * (self.nx + 1) + (i + di);
            for k in 0..DOFS_PER_NODE {
                out[DOFS_PER_NODE * c + k] = self.global[DOFS_PER_NODE * node + k];
            }
        }
        out
    }

    /// Node-major `(node, kind)` for a free index.
    pub fn locate_free(&self, free: usize) -> Option<(usize, DofKind)> {
        self.global
            .iter()
            .position(|g| *g == Some(free))
            .map(|p| (p / DOFS_PER_NODE, DofKind::ALL[p % DOFS_PER_NODE]))
    }

    pub fn mesh_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

/// Cell corner offsets in local order.
pub const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];
