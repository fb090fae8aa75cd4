//! Element and assembly checks against independent constructions.

use qgfem::assembly::{local_b0, local_biharmonic, local_gradgrad, local_mass, Discretization, Operators};
use qgfem::element::ShapeValues;
use qgfem::field::{Jet, SmoothField};
use qgfem::mesh::RectMesh;

/// Monomial `c·x^px·y^py`; `c = 0` marks a vanished derivative.
#[derive(Clone, Copy)]
struct Mono {
    c: f64,
    px: i32,
    py: i32,
}

impl Mono {
    fn dx(self) -> Mono {
        Mono {
            c: self.c * self.px as f64,
            px: (self.px - 1).max(0),
            py: self.py,
        }
    }
    fn dy(self) -> Mono {
        Mono {
            c: self.c * self.py as f64,
            px: self.px,
            py: (self.py - 1).max(0),
        }
    }
    fn at(self, x: f64, y: f64) -> f64 {
        self.c * x.powi(self.px) * y.powi(self.py)
    }
}

/// Exact `∫∫ a·b` over `[0,hx]×[0,hy]`.
fn integral(a: Mono, b: Mono, hx: f64, hy: f64) -> f64 {
    let (p, q) = (a.px + b.px + 1, a.py + b.py + 1);
    a.c * b.c * hx.powi(p) / p as f64 * hy.powi(q) / q as f64
}

fn invert(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col];
        for j in 0..n {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                for j in 0..n {
                    m[r][j] -= f * m[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// BFS basis in monomial coordinates: `C[a][i]` is the weight of monomial
/// `a` in shape function `i` (local index `4·corner + kind`).
fn monomial_basis(hx: f64, hy: f64) -> (Vec<Mono>, Vec<Vec<f64>>) {
    let monos: Vec<Mono> = (0..4)
        .flat_map(|py| (0..4).map(move |px| Mono { c: 1.0, px, py }))
        .collect();
    let corners = [(0.0, 0.0), (hx, 0.0), (0.0, hy), (hx, hy)];
    let mut v = vec![vec![0.0; 16]; 16];
    for (c, &(x, y)) in corners.iter().enumerate() {
        for (a, &m) in monos.iter().enumerate() {
            v[4 * c][a] = m.at(x, y);
            v[4 * c + 1][a] = m.dx().at(x, y);
            v[4 * c + 2][a] = m.dy().at(x, y);
            v[4 * c + 3][a] = m.dx().dy().at(x, y);
        }
    }
    (monos, invert(v))
}

fn oracle_matrix(hx: f64, hy: f64, form: impl Fn(Mono, Mono) -> f64) -> Vec<Vec<f64>> {
    let (monos, c) = monomial_basis(hx, hy);
    let mut g = vec![vec![0.0; 16]; 16];
    for i in 0..16 {
        for j in 0..16 {
            for (a, &ma) in monos.iter().enumerate() {
                for (b, &mb) in monos.iter().enumerate() {
                    g[i][j] += c[a][i] * c[b][j] * form(ma, mb);
                }
            }
        }
    }
    g
}

fn assert_close(actual: &[[f64; 16]; 16], expected: &[Vec<f64>], tol: f64, what: &str) {
    let scale = expected.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..16 {
        for j in 0..16 {
            let d = (actual[i][j] - expected[i][j]).abs();
            assert!(d <= tol * scale, "{what}[{i}][{j}]: {} vs {}", actual[i][j], expected[i][j]);
        }
    }
}

#[test]
fn local_matrices_match_monomial_oracle() {
    let (hx, hy) = (0.5, 0.25);
    let disc = Discretization::new(RectMesh::new(0.0, 1.0, 0.0, 1.0, 2, 4).unwrap());
    let cb = &disc.cell;

    // rows index the test function i, columns the trial function j
    let mass = oracle_matrix(hx, hy, |a, b| integral(b, a, hx, hy));
    let grad = oracle_matrix(hx, hy, |a, b| {
        integral(a.dx(), b.dx(), hx, hy) + integral(a.dy(), b.dy(), hx, hy)
    });
    let bih = oracle_matrix(hx, hy, |a, b| {
        let la = [a.dx().dx(), a.dy().dy()];
        let lb = [b.dx().dx(), b.dy().dy()];
        la.iter().flat_map(|&p| lb.iter().map(move |&q| integral(p, q, hx, hy))).sum()
    });
    let b0 = oracle_matrix(hx, hy, |a, b| -integral(b.dx(), a, hx, hy));

    assert_close(&local_mass(cb), &mass, 1e-12, "mass");
    assert_close(&local_gradgrad(cb), &grad, 1e-12, "gradgrad");
    assert_close(&local_biharmonic(cb), &bih, 1e-12, "biharmonic");
    assert_close(&local_b0(cb), &b0, 1e-12, "b0");
}

struct Bicubic([[f64; 4]; 4]);

impl SmoothField for Bicubic {
    fn jet(&self, x: f64, y: f64, _t: f64) -> Jet {
        let mut j = Jet::default();
        for (a, row) in self.0.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                let m = Mono {
                    c,
                    px: a as i32,
                    py: b as i32,
                };
                j.v += m.at(x, y);
                j.dx += m.dx().at(x, y);
                j.dy += m.dy().at(x, y);
                j.dxx += m.dx().dx().at(x, y);
                j.dxy += m.dx().dy().at(x, y);
                j.dyy += m.dy().dy().at(x, y);
            }
        }
        j
    }
}

#[test]
fn interior_cell_reproduces_bicubics() {
    // on a 3×3 mesh only the centre cell has no clamped node
    let disc = Discretization::new(RectMesh::new(0.0, 1.5, -0.3, 0.6, 3, 3).unwrap());
    let field = Bicubic([
        [0.3, -1.2, 0.7, 2.0],
        [1.1, 0.4, -0.9, 0.25],
        [-0.6, 1.8, 0.05, -1.4],
        [0.9, -0.35, 1.3, 0.8],
    ]);
    let coeffs = disc.interpolate(&field, 0.0);
    let m = &disc.mesh;
    let (ox, oy) = m.cell_origin(1, 1);
    let cell = m.cell_index(1, 1);
    let local = disc.gather(cell, &coeffs);
    let mut h2 = 0.0;
    for (k, &(xi, eta)) in disc.cell.points.iter().enumerate() {
        let e = disc.cell.tables[k].eval(&local) - field.jet(ox + xi * m.hx, oy + eta * m.hy, 0.0);
        h2 += disc.cell.weights[k] * e.laplacian().powi(2);
        for d in [e.v, e.dx, e.dy, e.dxx, e.dxy, e.dyy] {
            assert!(d.abs() <= 1e-12, "pointwise error {d}");
        }
    }
    assert!(h2.sqrt() <= 1e-12, "broken H2 error {}", h2.sqrt());
}

fn lcg(seed: u64) -> impl FnMut() -> f64 {
    let mut s = seed;
    move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

#[test]
fn discrete_fields_are_c1_and_clamped() {
    let disc = Discretization::new(RectMesh::new(0.0, 1.0, -1.0, 1.0, 4, 6).unwrap());
    let m = &disc.mesh;
    let mut rnd = lcg(7);
    let x: Vec<f64> = (0..disc.n_free()).map(|_| rnd()).collect();
    let at = |i: usize, j: usize, xi: f64, eta: f64| {
        ShapeValues::reference(xi, eta)
            .to_physical(m.hx, m.hy)
            .eval(&disc.gather(m.cell_index(i, j), &x))
    };
    for s in [0.0, 0.17, 0.5, 0.83, 1.0] {
        // vertical edges
        for j in 0..m.ny {
            for i in 0..m.nx - 1 {
                let (l, r) = (at(i, j, 1.0, s), at(i + 1, j, 0.0, s));
                for (a, b) in [(l.v, r.v), (l.dx, r.dx), (l.dy, r.dy)] {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            let (l, r) = (at(0, j, 0.0, s), at(m.nx - 1, j, 1.0, s));
            for v in [l.v, l.dx, l.dy, r.v, r.dx, r.dy] {
                assert!(v.abs() < 1e-12);
            }
        }
        // horizontal edges
        for i in 0..m.nx {
            for j in 0..m.ny - 1 {
                let (b, t) = (at(i, j, s, 1.0), at(i, j + 1, s, 0.0));
                for (p, q) in [(b.v, t.v), (b.dx, t.dx), (b.dy, t.dy)] {
                    assert!((p - q).abs() < 1e-12);
                }
            }
            let (b, t) = (at(i, 0, s, 0.0), at(i, m.ny - 1, s, 1.0));
            for v in [b.v, b.dx, b.dy, t.v, t.dx, t.dy] {
                assert!(v.abs() < 1e-12);
            }
        }
    }
}

fn cholesky_succeeds(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

#[test]
fn gradgrad_and_biharmonic_are_spd() {
    let disc = Discretization::new(RectMesh::new(0.0, 1.0, -1.0, 1.0, 4, 5).unwrap());
    let ops = Operators::assemble(&disc);
    for (name, m) in [("D", &ops.gradgrad), ("A", &ops.biharmonic)] {
        let scale = m.max_abs();
        assert!(m.symmetry_defect(1.0) <= 1e-14 * scale, "{name} not symmetric");
        assert!(cholesky_succeeds(&m.to_dense()), "{name} not positive definite");
    }
}
