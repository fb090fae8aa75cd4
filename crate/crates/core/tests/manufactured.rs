//! The manufactured forcing against derivatives computed independently
//! from `sin²z = (1 − cos 2z)/2`.

use std::f64::consts::PI;

use proptest::prelude::*;
use qgfem::field::SmoothField;
use qgfem::problems::{manufactured_forcing, ManufacturedSolution};

/// `dᵏ/dzᵏ sin²(πz)` for k = 0..4.
fn s(z: f64) -> [f64; 5] {
    let (c, sn) = ((2.0 * PI * z).cos(), (2.0 * PI * z).sin());
    [
        0.5 * (1.0 - c),
        PI * sn,
        2.0 * PI * PI * c,
        -4.0 * PI.powi(3) * sn,
        -8.0 * PI.powi(4) * c,
    ]
}

fn amp(t: f64) -> (f64, f64) {
    let n = 1.0 - (-0.1f64).exp();
    ((1.0 - (-t).exp()) / n, (-t).exp() / n)
}

/// Residual of `−∂tΔψ + νΔ²ψ − J(ψ, Δψ) − μψ_x − μF`, with its magnitude scale.
fn strong_residual(x: f64, y: f64, t: f64, nu: f64, mu: f64) -> (f64, f64) {
    let (a, da) = amp(t);
    let (sx, sy) = (s(x), s(y));
    let lap = |k: f64| k * (sx[2] * sy[0] + sx[0] * sy[2]);
    let lap_x = a * (sx[3] * sy[0] + sx[1] * sy[2]);
    let lap_y = a * (sx[2] * sy[1] + sx[0] * sy[3]);
    let bilap = a * (sx[4] * sy[0] + 2.0 * sx[2] * sy[2] + sx[0] * sy[4]);
    let (psi_x, psi_y) = (a * sx[1] * sy[0], a * sx[0] * sy[1]);
    let jac = psi_y * lap_x - psi_x * lap_y;
    let f = manufactured_forcing(x, y, t, nu, mu).unwrap();
    let terms = [-lap(da), nu * bilap, -jac, -mu * psi_x, -mu * f];
    (terms.iter().sum(), terms.iter().map(|v| v.abs()).sum::<f64>().max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn forcing_closes_the_equation(
        x in 0.0f64..1.0, y in 0.0f64..1.0, t in 0.0f64..0.2,
        nu in 1e-3f64..10.0, mu in 1.0f64..1e4,
    ) {
        let (r, scale) = strong_residual(x, y, t, nu, mu);
        prop_assert!(r.abs() <= 1e-8 * scale, "residual {r} scale {scale}");
    }
}

#[test]
fn solution_jet_matches_independent_derivatives() {
    for &(x, y, t) in &[(0.1, 0.2, 0.03), (0.77, 0.4, 0.1), (0.5, 0.5, 0.0), (0.95, 0.05, 0.15)] {
        let (a, _) = amp(t);
        let (sx, sy) = (s(x), s(y));
        let j = ManufacturedSolution.jet(x, y, t);
        let want = [
            a * sx[0] * sy[0],
            a * sx[1] * sy[0],
            a * sx[0] * sy[1],
            a * sx[2] * sy[0],
            a * sx[1] * sy[1],
            a * sx[0] * sy[2],
        ];
        let got = [j.v, j.dx, j.dy, j.dxx, j.dxy, j.dyy];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "{g} vs {w}");
        }
    }
}

#[test]
fn derivative_table_matches_finite_differences() {
    let h = 1e-5;
    for z in [0.13, 0.5, 0.71] {
        let d = s(z);
        let (p, m) = (s(z + h), s(z - h));
        for k in 0..4 {
            let fd = (p[k] - m[k]) / (2.0 * h);
            assert!((fd - d[k + 1]).abs() <= 1e-6 * d[k + 1].abs().max(1.0), "order {}", k + 1);
        }
    }
}
