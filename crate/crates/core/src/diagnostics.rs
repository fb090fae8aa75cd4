//! Norms, errors against analytic fields, convergence orders, energy
//! histories, decay-rate fits and steady-state detection.

use rayon::prelude::*;

use crate::assembly::{Discretization, Operators};
use crate::element::QuadratureRule;
use crate::error::{QgError, Result};
use crate::field::SmoothField;
use crate::timestepper::{Observer, State};

/// Gauss points per direction for error integrals. The error is not a
/// polynomial, so this is finer than the assembly rule.
pub const ERROR_RULE_POINTS: usize = 8;

/// `‖v‖`, `‖∇v‖` and the broken `‖Δv‖` (accumulated cell by cell).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub h1_semi: f64,
    pub h2_broken: f64,
}

impl NormReport {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l2, self.h1_semi, self.h2_broken]
    }
}

/// Norms of the discrete field. The integrands are polynomials of degree
/// ≤ 6 per direction, so the assembly rule is exact.
pub fn norms(state: &State, disc: &Discretization) -> NormReport {
    let cb = &disc.cell;
    let sums = (0..disc.mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let lc = disc.gather(c, &state.coeffs);
            let mut acc = [0.0; 3];
            for (s, w) in cb.tables.iter().zip(&cb.weights) {
                let j = s.eval(&lc);
                acc[0] += w * j.v * j.v;
                acc[1] += w * (j.dx * j.dx + j.dy * j.dy);
                acc[2] += w * j.laplacian().powi(2);
            }
            acc
        })
        .collect::<Vec<_>>();
    finish(sums)
}

/// Norms of `ψ_h − ψ(·, t)`.
pub fn error_norms(state: &State, disc: &Discretization, exact: &dyn SmoothField, t: f64) -> NormReport {
    error_norms_with_rule(state, disc, exact, t, QuadratureRule::gauss_legendre(ERROR_RULE_POINTS))
}

pub fn error_norms_with_rule(
    state: &State,
    disc: &Discretization,
    exact: &dyn SmoothField,
    t: f64,
    rule: QuadratureRule,
) -> NormReport {
    let m = &disc.mesh;
    let cb = crate::element::ReferenceBasis::new(rule).physical(m.hx, m.hy);
    let sums = (0..m.n_cells())
        .into_par_iter()
        .map(|c| {
            let lc = disc.gather(c, &state.coeffs);
            let (ox, oy) = m.cell_origin(c % m.nx, c / m.nx);
            let mut acc = [0.0; 3];
            for ((s, w), &(xi, eta)) in cb.tables.iter().zip(&cb.weights).zip(&cb.points) {
                let e = s.eval(&lc) - exact.jet(ox + xi * m.hx, oy + eta * m.hy, t);
                acc[0] += w * e.v * e.v;
                acc[1] += w * (e.dx * e.dx + e.dy * e.dy);
                acc[2] += w * e.laplacian().powi(2);
            }
            acc
        })
        .collect::<Vec<_>>();
    finish(sums)
}

fn finish(cells: Vec<[f64; 3]>) -> NormReport {
    let mut total = [0.0; 3];
    for c in cells {
        for k in 0..3 {
            total[k] += c[k];
        }
    }
    NormReport {
        l2: total[0].sqrt(),
        h1_semi: total[1].sqrt(),
        h2_broken: total[2].sqrt(),
    }
}

/// Rows of `(h, errors)`; `h` may also be a time step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EocTable {
    pub rows: Vec<EocRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EocRow {
    pub h: f64,
    pub errors: Vec<f64>,
}

impl EocTable {
    pub fn push(&mut self, h: f64, errors: Vec<f64>) {
        self.rows.push(EocRow { h, errors });
    }
}

/// Observed orders `log(e_k/e_{k+1}) / log(h_k/h_{k+1})` per refinement pair
/// and per error column; `log₂` of the ratio when `h` halves.
pub fn eoc(table: &EocTable) -> Result<Vec<Vec<f64>>> {
    if table.rows.len() < 2 {
        return Err(QgError::Config("EOC needs at least two rows".into()));
    }
    for (k, row) in table.rows.iter().enumerate() {
        if row.errors.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(QgError::EocUndefined { row: k });
        }
    }
    table
        .rows
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            if !(b.h < a.h && b.h > 0.0) {
                return Err(QgError::Config(format!(
                    "EOC rows must have strictly decreasing h ({} then {})",
                    a.h, b.h
                )));
            }
            let lh = (a.h / b.h).ln();
            Ok(a.errors
                .iter()
                .zip(&b.errors)
                .map(|(ea, eb)| (ea / eb).ln() / lh)
                .collect())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    /// `‖∇ψ_h‖`
    pub grad_norm: f64,
    /// `‖Δψ_h‖`
    pub delta_norm: f64,
}

/// Observer recording `‖∇ψ_h‖` and `‖Δψ_h‖` from the assembled operators.
pub struct EnergyRecorder<'a> {
    ops: &'a Operators,
    pub history: Vec<EnergySample>,
}

impl<'a> EnergyRecorder<'a> {
    pub fn new(ops: &'a Operators) -> Self {
        Self {
            ops,
            history: Vec::new(),
        }
    }

    pub fn grad_history(&self) -> Vec<(f64, f64)> {
        self.history.iter().map(|s| (s.t, s.grad_norm)).collect()
    }
}

impl Observer for EnergyRecorder<'_> {
    fn observe(&mut self, _step: usize, t: f64, state: &State) -> Result<()> {
        self.history.push(EnergySample {
            t,
            grad_norm: self.ops.gradgrad.bilinear(&state.coeffs, &state.coeffs).max(0.0).sqrt(),
            delta_norm: self
                .ops
                .biharmonic
                .bilinear(&state.coeffs, &state.coeffs)
                .max(0.0)
                .sqrt(),
        });
        Ok(())
    }
}

/// Default trailing fraction of samples used by [`decay_rate`].
pub const DEFAULT_DECAY_WINDOW: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Least-squares slope of `ln(energy)` against `t`.
    pub rate: f64,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
}

/// Fit `ln e(t) ≈ a + rate·t` over the trailing `window_fraction` of samples.
pub fn decay_rate(history: &[(f64, f64)], window_fraction: f64) -> Result<DecayFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(QgError::Config(format!(
            "decay window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    let n = history.len();
    let take = ((n as f64 * window_fraction).ceil() as usize).clamp(2.min(n), n);
    if take < 2 {
        return Err(QgError::Config("decay fit needs at least two samples".into()));
    }
    let window = &history[n - take..];
    for &(t, e) in window {
        if !(e > 0.0) {
            return Err(QgError::FitDomain { t, value: e });
        }
    }
    let m = window.len() as f64;
    let (st, sy) = window
        .iter()
        .fold((0.0, 0.0), |(a, b), &(t, e)| (a + t, b + e.ln()));
    let (tm, ym) = (st / m, sy / m);
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, e) in window {
        let (dt, dy) = (t - tm, e.ln() - ym);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(QgError::Config("decay fit needs distinct sample times".into()));
    }
    let rate = sty / stt;
    let ss_res: f64 = window
        .iter()
        .map(|&(t, e)| {
            let r = e.ln() - (ym + rate * (t - tm));
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit { rate, r_squared })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub steady: bool,
    /// Mean energy over the window.
    pub plateau: f64,
    /// `(max − min) / |mean|` over the window.
    pub variation: f64,
}

/// Trailing duration (time units) examined by the steady-state check.
pub const DEFAULT_STEADY_WINDOW: f64 = 1.0;
/// Relative spread below which a history counts as steady.
pub const DEFAULT_STEADY_TOL: f64 = 1e-3;

/// Steady iff the relative spread of the trailing `window` samples is ≤ `tol`.
pub fn steady_state(history: &[(f64, f64)], window: usize, tol: f64) -> Result<SteadyState> {
    if window == 0 || window > history.len() {
        return Err(QgError::Config(format!(
            "steady-state window {window} outside 1..={}",
            history.len()
        )));
    }
    let w = &history[history.len() - window..];
    let (lo, hi, sum) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), &(_, e)| {
        (lo.min(e), hi.max(e), s + e)
    });
    let mean = sum / window as f64;
    let variation = if mean != 0.0 {
        (hi - lo) / mean.abs()
    } else if hi == lo {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SteadyState {
        steady: variation <= tol,
        plateau: mean,
        variation,
    })
}

/// Number of trailing samples covering the last `duration` of a history.
pub fn window_for_duration(history: &[(f64, f64)], duration: f64) -> usize {
    let Some(&(t_last, _)) = history.last() else {
        return 0;
    };
    history.iter().filter(|(t, _)| *t >= t_last - duration - 1e-12).count()
}

/// Rayleigh quotient `xᵀAx / xᵀDx = ‖Δv‖² / ‖∇v‖²` of the discrete field `v`.
pub fn rayleigh_quotient(ops: &Operators, x: &[f64]) -> f64 {
    ops.biharmonic.bilinear(x, x) / ops.gradgrad.bilinear(x, x)
}
