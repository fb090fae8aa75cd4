//! Bogner-Fox-Schmit bicubic Hermite element on the reference square `[0,1]²`.
//!
//! The 16 local functions are tensor products of the cubic Hermite pairs
//! `{H₀₀, H₁₀, H₀₁, H₁₁}`. Local index `4·corner + kind` with corners
//! `(0,0), (1,0), (0,1), (1,1)` and kinds `(value, ∂ξ, ∂η, ∂ξη)`, matching
//! the node-major global numbering of [`crate::mesh::DofMap`].

use crate::field::Jet;

pub const LOCAL_DOFS: usize = 16;

/// Tensor Gauss-Legendre rule on `[0,1]²`. Weights sum to 1.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub points_per_dir: usize,
}

/// Gauss-Legendre nodes and weights on `[0,1]`.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

impl QuadratureRule {
    pub fn gauss_legendre(n: usize) -> Self {
        let (x, w) = gauss_legendre_1d(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push((x[i], x[j]));
                weights.push(w[i] * w[j]);
            }
        }
        Self {
            points,
            weights,
            points_per_dir: n,
        }
    }

    /// The 5×5 rule used for assembly; exact for degree 9 per direction.
    pub fn assembly_default() -> Self {
        Self::gauss_legendre(5)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Values and derivatives 0..=2 of the four cubic Hermite functions
/// `[H₀₀, H₁₀, H₀₁, H₁₁]` (value at 0, slope at 0, value at 1, slope at 1).
#[inline]
pub fn hermite_1d(t: f64) -> [[f64; 3]; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        [1.0 - 3.0 * t2 + 2.0 * t3, -6.0 * t + 6.0 * t2, -6.0 + 12.0 * t],
        [t - 2.0 * t2 + t3, 1.0 - 4.0 * t + 3.0 * t2, -4.0 + 6.0 * t],
        [3.0 * t2 - 2.0 * t3, 6.0 * t - 6.0 * t2, 6.0 - 12.0 * t],
        [-t2 + t3, -2.0 * t + 3.0 * t2, -2.0 + 6.0 * t],
    ]
}

/// Shape function values and derivatives of all 16 local functions at one point.
#[derive(Clone, Copy, Debug)]
pub struct ShapeValues {
    pub v: [f64; LOCAL_DOFS],
    pub dx: [f64; LOCAL_DOFS],
    pub dy: [f64; LOCAL_DOFS],
    pub dxx: [f64; LOCAL_DOFS],
    pub dxy: [f64; LOCAL_DOFS],
    pub dyy: [f64; LOCAL_DOFS],
}

impl ShapeValues {
    const ZERO: ShapeValues = ShapeValues {
        v: [0.0; LOCAL_DOFS],
        dx: [0.0; LOCAL_DOFS],
        dy: [0.0; LOCAL_DOFS],
        dxx: [0.0; LOCAL_DOFS],
        dxy: [0.0; LOCAL_DOFS],
        dyy: [0.0; LOCAL_DOFS],
    };

    /// Reference-cell values at `(ξ, η)`.
    pub fn reference(xi: f64, eta: f64) -> Self {
        let hx = hermite_1d(xi);
        let hy = hermite_1d(eta);
        let mut s = Self::ZERO;
        for k in 0..LOCAL_DOFS {
            let (fx, fy) = tensor_factors(k);
            let (a, b) = (&hx[fx], &hy[fy]);
            s.v[k] = a[0] * b[0];
            s.dx[k] = a[1] * b[0];
            s.dy[k] = a[0] * b[1];
            s.dxx[k] = a[2] * b[0];
            s.dxy[k] = a[1] * b[1];
            s.dyy[k] = a[0] * b[2];
        }
        s
    }

    /// Map reference values to a physical `hx × hy` cell, folding in the
    /// Hermite DOF scaling so coefficients are physical nodal derivatives.
    pub fn to_physical(&self, hx: f64, hy: f64) -> Self {
        let scale = physical_dof_scaling(hx, hy);
        let mut s = Self::ZERO;
        for k in 0..LOCAL_DOFS {
            let c = scale[k];
            s.v[k] = c * self.v[k];
            s.dx[k] = c * self.dx[k] / hx;
            s.dy[k] = c * self.dy[k] / hy;
            s.dxx[k] = c * self.dxx[k] / (hx * hx);
            s.dxy[k] = c * self.dxy[k] / (hx * hy);
            s.dyy[k] = c * self.dyy[k] / (hy * hy);
        }
        s
    }

    #[inline]
    pub fn laplacian(&self, k: usize) -> f64 {
        self.dxx[k] + self.dyy[k]
    }

    /// Evaluate the field with local coefficients `c`.
    #[inline]
    pub fn eval(&self, c: &[f64; LOCAL_DOFS]) -> Jet {
        let mut j = Jet::default();
        for k in 0..LOCAL_DOFS {
            let ck = c[k];
            j.v += ck * self.v[k];
            j.dx += ck * self.dx[k];
            j.dy += ck * self.dy[k];
            j.dxx += ck * self.dxx[k];
            j.dxy += ck * self.dxy[k];
            j.dyy += ck * self.dyy[k];
        }
        j
    }
}

/// Indices into [`hermite_1d`] of the x- and y-factors of local function `k`.
#[inline]
pub fn tensor_factors(k: usize) -> (usize, usize) {
    let corner = k / 4;
    let kind = k % 4;
    let (a, b) = (corner & 1, corner >> 1);
    let (kx, ky) = (kind & 1, kind >> 1);
    (2 * a + kx, 2 * b + ky)
}

/// Hermite DOFs transform as `1, hx, hy, hx·hy` under the affine cell map.
pub fn physical_dof_scaling(hx: f64, hy: f64) -> [f64; LOCAL_DOFS] {
    let per_node = [1.0, hx, hy, hx * hy];
    std::array::from_fn(|k| per_node[k % 4])
}

/// Shape tables at every point of a quadrature rule on the reference cell.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub rule: QuadratureRule,
    pub tables: Vec<ShapeValues>,
}

impl ReferenceBasis {
    pub fn new(rule: QuadratureRule) -> Self {
        let tables = rule
            .points
            .iter()
            .map(|&(xi, eta)| ShapeValues::reference(xi, eta))
            .collect();
        Self { rule, tables }
    }

    /// Tables on a physical cell of size `hx × hy`; weights include the cell area.
    pub fn physical(&self, hx: f64, hy: f64) -> CellBasis {
        let area = hx * hy;
        CellBasis {
            points: self.rule.points.clone(),
            weights: self.rule.weights.iter().map(|w| w * area).collect(),
            tables: self.tables.iter().map(|t| t.to_physical(hx, hy)).collect(),
            hx,
            hy,
        }
    }
}

/// Physical shape tables shared by every cell of a uniform mesh.
#[derive(Clone, Debug)]
pub struct CellBasis {
    /// Reference coordinates of the quadrature points.
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub tables: Vec<ShapeValues>,
    pub hx: f64,
    pub hy: f64,
}

impl CellBasis {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Local reference coefficients interpolating a field given by its Hermite
/// data `(f, f_ξ, f_η, f_ξη)` at the four reference corners.
pub fn hermite_coefficients(data: impl Fn(f64, f64) -> [f64; 4]) -> [f64; LOCAL_DOFS] {
    let mut c = [0.0; LOCAL_DOFS];
    for (corner, (a, b)) in crate::mesh::CORNERS.iter().enumerate() {
        let d = data(*a as f64, *b as f64);
        c[4 * corner..4 * corner + 4].copy_from_slice(&d);
    }
    c
}
