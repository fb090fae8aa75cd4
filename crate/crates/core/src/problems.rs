//! Problem descriptors and the built-in scenarios: manufactured solution,
//! free decay, and the wind-driven gyre.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::Params;
use crate::error::{QgError, Result};
use crate::field::{sin_squared_derivs, Jet, PointField, SinSquaredBump, SmoothField, Zero};
use crate::timestepper::SolverConfig;

/// Right-hand side `F` of the equation (multiplied by `μ` in the load).
#[derive(Clone)]
pub enum Forcing {
    Zero,
    /// `F = sin(πy)`, the idealized wind stress curl.
    WindSinY,
    /// Forcing that makes [`ManufacturedSolution`] exact.
    Manufactured,
    User(Arc<dyn PointField + Send>),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Forcing {
    pub fn name(&self) -> &'static str {
        match self {
            Forcing::Zero => "zero",
            Forcing::WindSinY => "wind-sin-y",
            Forcing::Manufactured => "manufactured",
            Forcing::User(_) => "user",
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Forcing::Manufactured | Forcing::User(_))
    }
}

impl FromStr for Forcing {
    type Err = QgError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Forcing::Zero),
            "wind" | "wind-sin-y" | "sin-y" => Ok(Forcing::WindSinY),
            "manufactured" => Ok(Forcing::Manufactured),
            other => Err(QgError::Config(format!("unknown forcing '{other}'"))),
        }
    }
}

#[derive(Clone)]
pub enum InitialCondition {
    Zero,
    /// `ψ₀ = sin²(πx) sin²(πy)`
    SinSquared,
    /// The manufactured solution at `t = 0` (identically zero).
    Manufactured,
    User(Arc<dyn SmoothField + Send>),
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Zero => "zero",
            InitialCondition::SinSquared => "sin-squared",
            InitialCondition::Manufactured => "manufactured",
            InitialCondition::User(_) => "user",
        }
    }

    pub fn field(&self) -> Arc<dyn SmoothField + Send> {
        match self {
            InitialCondition::Zero => Arc::new(Zero),
            InitialCondition::SinSquared => Arc::new(SinSquaredBump::default()),
            InitialCondition::Manufactured => Arc::new(ManufacturedSolution),
            InitialCondition::User(f) => f.clone(),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = QgError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitialCondition::Zero),
            "sin-squared" | "sin2" => Ok(InitialCondition::SinSquared),
            "manufactured" => Ok(InitialCondition::Manufactured),
            other => Err(QgError::Config(format!("unknown initial condition '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    /// Diffusion coefficient.
    pub nu: f64,
    /// Inverse Rossby number.
    pub mu: f64,
    pub forcing: Forcing,
    pub initial: InitialCondition,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(QgError::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(QgError::Config(format!("mu must be nonnegative, got {}", self.mu)));
        }
        if matches!(self.forcing, Forcing::Manufactured) && self.mu == 0.0 {
            return Err(QgError::Config("manufactured forcing needs mu > 0".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Params {
        Params {
            nu: self.nu,
            mu: self.mu,
        }
    }

    pub fn mesh(&self) -> Result<crate::mesh::RectMesh> {
        crate::mesh::RectMesh::new(self.x0, self.x1, self.y0, self.y1, self.nx, self.ny)
    }

    /// Pointwise forcing bound to this spec's `ν, μ`.
    pub fn forcing_field(&self) -> Result<Arc<dyn PointField + Send>> {
        Ok(match &self.forcing {
            Forcing::Zero => Arc::new(Zero),
            Forcing::WindSinY => Arc::new(|_x: f64, y: f64, _t: f64| (PI * y).sin()),
            Forcing::Manufactured => {
                if self.mu == 0.0 {
                    return Err(QgError::Config("manufactured forcing needs mu > 0".into()));
                }
                Arc::new(ManufacturedForcing {
                    nu: self.nu,
                    mu: self.mu,
                })
            }
            Forcing::User(f) => f.clone(),
        })
    }
}

/// Time amplitude normalization: `ψ(T) = sin²(πx) sin²(πy)` at `T = 0.1`.
const MMS_T_REF: f64 = 0.1;

/// `ψ(x, y, t) = (1 − e^{−t}) / (1 − e^{−0.1}) · sin²(πx) sin²(πy)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ManufacturedSolution;

impl ManufacturedSolution {
    pub fn amplitude(t: f64) -> f64 {
        (1.0 - (-t).exp()) / (1.0 - (-MMS_T_REF).exp())
    }

    pub fn amplitude_rate(t: f64) -> f64 {
        (-t).exp() / (1.0 - (-MMS_T_REF).exp())
    }

    /// Spatial derivatives of `S = sin²(πx) sin²(πy)` used by the forcing:
    /// `(S_x, S_y, ΔS, ∂xΔS, ∂yΔS, Δ²S)`.
    fn shape_derivs(x: f64, y: f64) -> [f64; 6] {
        let a = sin_squared_derivs(x);
        let b = sin_squared_derivs(y);
        let lap = a[2] * b[0] + a[0] * b[2];
        let lap_x = a[3] * b[0] + a[1] * b[2];
        let lap_y = a[2] * b[1] + a[0] * b[3];
        let bilap = a[4] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[4];
        [a[1] * b[0], a[0] * b[1], lap, lap_x, lap_y, bilap]
    }

    /// `Δψ` and `∂tΔψ`
    pub fn laplacian_and_rate(x: f64, y: f64, t: f64) -> (f64, f64) {
        let d = Self::shape_derivs(x, y);
        (Self::amplitude(t) * d[2], Self::amplitude_rate(t) * d[2])
    }

    pub fn bilaplacian(x: f64, y: f64, t: f64) -> f64 {
        Self::amplitude(t) * Self::shape_derivs(x, y)[5]
    }

    /// `J(ψ, Δψ) = ψ_y ∂x(Δψ) − ψ_x ∂y(Δψ)`.
    pub fn jacobian_term(x: f64, y: f64, t: f64) -> f64 {
        let c = Self::amplitude(t);
        let d = Self::shape_derivs(x, y);
        c * c * (d[1] * d[3] - d[0] * d[4])
    }
}

impl SmoothField for ManufacturedSolution {
    fn jet(&self, x: f64, y: f64, t: f64) -> Jet {
        SinSquaredBump {
            amplitude: Self::amplitude(t),
        }
        .jet(x, y, t)
    }
}

/// Forcing for which [`ManufacturedSolution`] solves the discretized weak form
/// `(∂t∇ψ, ∇χ) + ν(Δψ, Δχ) + b(ψ; ψ, χ) + μ b₀(ψ, χ) = μ(F, χ)`.
///
/// Integrating by parts against clamped test functions gives the strong form
/// `−∂tΔψ + νΔ²ψ − J(ψ, Δψ) − μ∂xψ = μF`; note the advection sign, since
/// `(J(ψ, Δψ), χ) = −b(ψ; ψ, χ)`.
pub fn manufactured_forcing(x: f64, y: f64, t: f64, nu: f64, mu: f64) -> Result<f64> {
    if mu == 0.0 {
        return Err(QgError::Config("manufactured forcing needs mu > 0".into()));
    }
    Ok(manufactured_forcing_unchecked(x, y, t, nu, mu))
}

#[inline]
fn manufactured_forcing_unchecked(x: f64, y: f64, t: f64, nu: f64, mu: f64) -> f64 {
    let c = ManufacturedSolution::amplitude(t);
    let dc = ManufacturedSolution::amplitude_rate(t);
    let d = ManufacturedSolution::shape_derivs(x, y);
    let rate = dc * d[2];
    let bilap = c * d[5];
    let jac = c * c * (d[1] * d[3] - d[0] * d[4]);
    let psi_x = c * d[0];
    (-rate + nu * bilap - jac - mu * psi_x) / mu
}

#[derive(Clone, Copy, Debug)]
pub struct ManufacturedForcing {
    pub nu: f64,
    pub mu: f64,
}

impl PointField for ManufacturedForcing {
    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        manufactured_forcing_unchecked(x, y, t, self.nu, self.mu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioName {
    Convergence,
    Decay,
    Attractor,
}

impl FromStr for ScenarioName {
    type Err = QgError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convergence" => Ok(Self::Convergence),
            "decay" => Ok(Self::Decay),
            "attractor" => Ok(Self::Attractor),
            other => Err(QgError::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Convergence => "convergence",
            Self::Decay => "decay",
            Self::Attractor => "attractor",
        })
    }
}

/// Values that replace scenario defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub newton_tol: Option<f64>,
}

/// Default `ν` sweep for the free-decay scenario.
pub const DECAY_NU_SWEEP: [f64; 3] = [1.6667, 0.16667, 0.016667];
/// Default `μ` sweep for the free-decay scenario.
pub const DECAY_MU_SWEEP: [f64; 3] = [10.0, 100.0, 1000.0];
/// Default `ν` sweep for the wind-driven scenario.
pub const ATTRACTOR_NU_SWEEP: [f64; 3] = [1.0, 0.01, 0.0001];
/// Below this viscosity the wind-driven scenario uses the smaller time step.
pub const ATTRACTOR_SMALL_NU: f64 = 1e-2;
/// Times at which the wind-driven scenario writes snapshots.
pub const ATTRACTOR_SNAPSHOT_TIMES: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

/// Default time step of the wind-driven scenario at viscosity `nu`.
pub fn attractor_dt(nu: f64) -> f64 {
    if nu < ATTRACTOR_SMALL_NU {
        1e-3
    } else {
        1e-2
    }
}

/// Built-in scenario with defaults, then `overrides` applied.
pub fn scenario(name: ScenarioName, overrides: &Overrides) -> Result<(ProblemSpec, SolverConfig)> {
    let (mut spec, mut cfg) = match name {
        ScenarioName::Convergence => (
            ProblemSpec {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
                nx: 16,
                ny: 16,
                nu: 1.6667,
                mu: 1e3,
                forcing: Forcing::Manufactured,
                initial: InitialCondition::Manufactured,
            },
            SolverConfig {
                dt: 1e-3,
                t_end: 0.1,
                ..Default::default()
            },
        ),
        ScenarioName::Decay => (
            ProblemSpec {
                x0: 0.0,
                x1: 1.0,
                y0: -1.0,
                y1: 1.0,
                nx: 128,
                ny: 256,
                nu: DECAY_NU_SWEEP[0],
                mu: DECAY_MU_SWEEP[2],
                forcing: Forcing::Zero,
                initial: InitialCondition::SinSquared,
            },
            SolverConfig {
                dt: 1e-3,
                t_end: 0.1,
                ..Default::default()
            },
        ),
        ScenarioName::Attractor => (
            ProblemSpec {
                x0: 0.0,
                x1: 1.0,
                y0: -1.0,
                y1: 1.0,
                nx: 32,
                ny: 64,
                nu: ATTRACTOR_NU_SWEEP[0],
                mu: 100.0,
                forcing: Forcing::WindSinY,
                initial: InitialCondition::Zero,
            },
            SolverConfig {
                dt: 1e-2,
                t_end: 4.0,
                ..Default::default()
            },
        ),
    };
    apply_overrides(&mut spec, &mut cfg, overrides);
    if matches!(name, ScenarioName::Attractor) && overrides.dt.is_none() {
        cfg.dt = attractor_dt(spec.nu);
    }
    spec.validate()?;
    cfg.validate()?;
    Ok((spec, cfg))
}

pub fn apply_overrides(spec: &mut ProblemSpec, cfg: &mut SolverConfig, o: &Overrides) {
    if let Some(v) = o.nu {
        spec.nu = v;
    }
    if let Some(v) = o.mu {
        spec.mu = v;
    }
    if let Some(v) = o.nx {
        spec.nx = v;
    }
    if let Some(v) = o.ny {
        spec.ny = v;
    }
    if let Some(v) = o.dt {
        cfg.dt = v;
    }
    if let Some(v) = o.t_end {
        cfg.t_end = v;
    }
    if let Some(v) = o.newton_tol {
        cfg.newton_tol = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_matches_symbolic_values() {
        // frozen from an independent sympy evaluation of the strong form
        let cases = [
            ((0.3, 0.7, 0.05), -0.589_587_320_905_328_23),
            ((0.3, 0.7, 0.0), 0.083_905_643_620_055_205),
            ((0.2, 0.45, 0.1), -3.220_028_865_070_316_0),
        ];
        for ((x, y, t), expected) in cases {
            let f = manufactured_forcing(x, y, t, 1.6667, 1000.0).unwrap();
            assert!((f - expected).abs() <= 1e-13 * expected.abs().max(1.0), "{f} vs {expected}");
        }
    }

    #[test]
    fn manufactured_forcing_needs_mu() {
        assert!(manufactured_forcing(0.1, 0.2, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn forcing_at_t0_is_pure_time_derivative() {
        let (nu, mu) = (1.6667, 1e3);
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.5), (0.9, 0.33)] {
            let (_, rate) = ManufacturedSolution::laplacian_and_rate(x, y, 0.0);
            let f = manufactured_forcing(x, y, 0.0, nu, mu).unwrap();
            assert!((f - (-rate / mu)).abs() <= 1e-15 * (rate / mu).abs().max(1e-300));
        }
    }

    #[test]
    fn jacobian_term_vanishes_on_diagonal() {
        for k in 0..20 {
            let z = 0.05 * k as f64;
            let j = ManufacturedSolution::jacobian_term(z, z, 0.07);
            assert!(j.abs() < 1e-9, "{j}");
        }
    }

    #[test]
    fn manufactured_solution_clamped_and_zero_at_start() {
        let m = ManufacturedSolution;
        for k in 0..=50 {
            let s = k as f64 / 50.0;
            for t in [0.0, 0.05, 0.1, 1.0] {
                for (x, y) in [(s, 0.0), (s, 1.0), (0.0, s), (1.0, s)] {
                    let j = m.jet(x, y, t);
                    assert!(j.v.abs() <= 1e-14 && j.dx.abs() <= 1e-14 && j.dy.abs() <= 1e-14);
                }
                assert_eq!(m.jet(s, 0.5, 0.0).v, 0.0);
            }
        }
        assert!((ManufacturedSolution::amplitude(0.1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scenarios_have_expected_defaults() {
        let (s, c) = scenario(ScenarioName::Convergence, &Overrides::default()).unwrap();
        assert_eq!((s.x0, s.x1, s.y0, s.y1), (0.0, 1.0, 0.0, 1.0));
        assert_eq!((s.nu, s.mu, c.dt, c.t_end), (1.6667, 1e3, 1e-3, 0.1));
        assert!(matches!(s.forcing, Forcing::Manufactured));

        let (s, c) = scenario(ScenarioName::Decay, &Overrides::default()).unwrap();
        assert_eq!((s.y0, s.y1), (-1.0, 1.0));
        assert_eq!(s.mesh().unwrap().hx, 2f64.powi(-7));
        assert_eq!(s.mesh().unwrap().hy, 2f64.powi(-7));
        assert!(matches!(s.forcing, Forcing::Zero));
        assert!(matches!(s.initial, InitialCondition::SinSquared));
        assert_eq!((c.dt, c.t_end), (1e-3, 0.1));

        let (s, c) = scenario(ScenarioName::Attractor, &Overrides::default()).unwrap();
        assert_eq!((s.mu, s.nu, c.dt, c.t_end), (100.0, 1.0, 1e-2, 4.0));
        assert_eq!(s.mesh().unwrap().hx, 2f64.powi(-5));
        assert!(matches!(s.initial, InitialCondition::Zero));
        assert!(matches!(s.forcing, Forcing::WindSinY));

        let small = Overrides {
            nu: Some(1e-4),
            ..Default::default()
        };
        assert_eq!(scenario(ScenarioName::Attractor, &small).unwrap().1.dt, 1e-3);
        assert_eq!(attractor_dt(0.01), 1e-2);
    }

    #[test]
    fn overrides_applied_last_and_validated() {
        let o = Overrides {
            nu: Some(0.01),
            nx: Some(8),
            dt: Some(2e-3),
            ..Default::default()
        };
        let (s, c) = scenario(ScenarioName::Attractor, &o).unwrap();
        assert_eq!((s.nu, s.nx, c.dt), (0.01, 8, 2e-3));
        let bad = Overrides {
            nu: Some(-1.0),
            ..Default::default()
        };
        assert!(scenario(ScenarioName::Decay, &bad).is_err());
        assert!("unknown".parse::<ScenarioName>().is_err());
    }
}
