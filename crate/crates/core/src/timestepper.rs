//! Backward Euler in time with a full Newton solve per step.

use crate::assembly::{jacobian_from_linear, residual, Discretization, Operators, Params};
use crate::error::{QgError, Result};
use crate::field::{PointField, SmoothField};
use crate::linsolve::{LinearSolverKind, SparseLuSolver};
use crate::sparse::{norm2, CsrMatrix};

/// Largest boundary Hermite datum tolerated in an initial condition.
pub const INITIAL_BOUNDARY_TOL: f64 = 1e-10;

/// Absolute residual floor.
pub const ABSOLUTE_FLOOR: f64 = 1e-14;

/// A Newton update this small relative to the iterate means the iteration
/// has reached round-off.
pub const STAGNATION_STEP: f64 = 1e-14;

/// Coefficients of `ψ_h` over the free DOFs at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub coeffs: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn zeros(n: usize, t: f64) -> Self {
        Self {
            coeffs: vec![0.0; n],
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.coeffs.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Relative residual reduction that ends a Newton solve.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub linear_solver: LinearSolverKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 0.1,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            linear_solver: LinearSolverKind::SparseLu,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(QgError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(QgError::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol < 1.0) {
            return Err(QgError::Config(format!(
                "newton_tol must lie in (0, 1), got {}",
                self.newton_tol
            )));
        }
        if self.newton_max_iter < 1 {
            return Err(QgError::Config("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Step sizes of the uniform grid on `[0, t_end]`; the last one is
    /// shortened when `t_end` is not a multiple of `dt`.
    pub fn time_grid(&self) -> (Vec<f64>, bool) {
        let ratio = self.t_end / self.dt;
        let n_full = (ratio + 1e-9).floor() as usize;
        let mut steps = vec![self.dt; n_full];
        let covered = n_full as f64 * self.dt;
        let rest = self.t_end - covered;
        let shortened = rest > 1e-9 * self.dt;
        if shortened {
            steps.push(rest);
        }
        (steps, shortened)
    }
}

/// Hermite interpolant of the initial stream function.
pub fn initial_state(psi0: &dyn SmoothField, disc: &Discretization) -> Result<State> {
    let bad = disc.boundary_incompatibility(psi0, 0.0);
    if bad > INITIAL_BOUNDARY_TOL {
        return Err(QgError::Config(format!(
            "initial condition violates clamped boundary data (max nodal datum {bad:e})"
        )));
    }
    Ok(State {
        coeffs: disc.interpolate(psi0, 0.0),
        t: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    /// Residual evaluations up to and including the converged one.
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub index: usize,
    pub t: f64,
    pub dt: f64,
    pub newton_iterations: usize,
    pub final_residual: f64,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_state: State,
    pub steps: Vec<StepRecord>,
    pub shortened_final_step: bool,
}

impl RunSummary {
    pub fn max_newton_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.newton_iterations).max().unwrap_or(0)
    }
}

/// Receives `(step index, time, state)`; index 0 is the initial state.
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, state: &State) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(usize, f64, &State) -> Result<()>,
{
    fn observe(&mut self, step: usize, t: f64, state: &State) -> Result<()> {
        self(step, t, state)
    }
}

/// One solver instance: discretization, operators and a factorization plan.
pub struct TimeStepper<'a> {
    disc: &'a Discretization,
    ops: Operators,
    params: Params,
    cfg: SolverConfig,
    solver: SparseLuSolver,
}

impl<'a> TimeStepper<'a> {
    pub fn new(disc: &'a Discretization, params: Params, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if !(params.nu > 0.0) || !(params.mu >= 0.0) {
            return Err(QgError::Config(format!(
                "need nu > 0 and mu >= 0, got nu = {}, mu = {}",
                params.nu, params.mu
            )));
        }
        let ops = Operators::assemble(disc);
        let solver = match cfg.linear_solver {
            LinearSolverKind::SparseLu => SparseLuSolver::new(disc.pattern().clone())?,
        };
        Ok(Self {
            disc,
            ops,
            params,
            cfg,
            solver,
        })
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn discretization(&self) -> &Discretization {
        self.disc
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn params(&self) -> Params {
        self.params
    }

    /// Advance `prev` by `dt`. `load` is `μ(F(prev.t + dt), φ_i)`.
    pub fn step(&self, prev: &State, dt: f64, load: &[f64]) -> Result<(State, NewtonReport)> {
        let linear = self.ops.linear_part(dt, self.params);
        self.step_with_linear(prev, dt, load, &linear)
    }

    fn step_with_linear(
        &self,
        prev: &State,
        dt: f64,
        load: &[f64],
        linear: &CsrMatrix,
    ) -> Result<(State, NewtonReport)> {
        if !prev.is_finite() {
            return Err(QgError::Diverged { t: prev.t });
        }
        let t = prev.t + dt;
        let mut cur = State {
            coeffs: prev.coeffs.clone(),
            t,
        };
        let mut r = residual(self.disc, &self.ops, prev, &cur, dt, self.params, load)?;
        let r0 = r.norm();
        let mut history = vec![r0];
        // relative to the larger of the initial residual and the data
        let target = (self.cfg.newton_tol * r0.max(norm2(load))).max(ABSOLUTE_FLOOR);

        for iteration in 1..=self.cfg.newton_max_iter {
            let rn = *history.last().unwrap();
            if rn <= target {
                return Ok((
                    cur,
                    NewtonReport {
                        iterations: iteration,
                        residual_history: history,
                        dt,
                    },
                ));
            }
            if iteration == self.cfg.newton_max_iter {
                break;
            }
            let jac = jacobian_from_linear(self.disc, linear, &cur);
            let rhs: Vec<f64> = r.values.iter().map(|v| -v).collect();
            let delta = self.solver.solve(&jac, &rhs)?;
            for (c, d) in cur.coeffs.iter_mut().zip(&delta) {
                *c += d;
            }
            r = residual(self.disc, &self.ops, prev, &cur, dt, self.params, load)?;
            history.push(r.norm());
            if norm2(&delta) <= STAGNATION_STEP * norm2(&cur.coeffs) {
                return Ok((
                    cur,
                    NewtonReport {
                        iterations: iteration + 1,
                        residual_history: history,
                        dt,
                    },
                ));
            }
        }
        Err(QgError::NewtonFailure {
            t,
            iterations: self.cfg.newton_max_iter,
            history,
        })
    }

    /// March from `initial` to `t_end`, notifying observers at every level.
    pub fn run(
        &self,
        initial: State,
        forcing: &dyn PointField,
        time_dependent_forcing: bool,
        observers: &mut [&mut dyn Observer],
    ) -> Result<RunSummary> {
        let (grid, shortened) = self.cfg.time_grid();
        for obs in observers.iter_mut() {
            obs.observe(0, initial.t, &initial)?;
        }
        let mut state = initial;
        let mut steps = Vec::with_capacity(grid.len());
        let mut static_load: Option<Vec<f64>> = None;
        let mut linear: Option<(f64, CsrMatrix)> = None;

        for (k, &dt) in grid.iter().enumerate() {
            let index = k + 1;
            let t_next = state.t + dt;
            let load = if time_dependent_forcing {
                self.disc.assemble_load(forcing, t_next, self.params.mu)?
            } else {
                if static_load.is_none() {
                    static_load = Some(self.disc.assemble_load(forcing, t_next, self.params.mu)?);
                }
                static_load.clone().unwrap()
            };
            if linear.as_ref().map(|(h, _)| *h) != Some(dt) {
                linear = Some((dt, self.ops.linear_part(dt, self.params)));
            }
            let (next, report) = self
                .step_with_linear(&state, dt, &load, &linear.as_ref().unwrap().1)
                .map_err(|e| QgError::Step {
                    index,
                    source: Box::new(e),
                })?;
            steps.push(StepRecord {
                index,
                t: next.t,
                dt,
                newton_iterations: report.iterations,
                final_residual: *report.residual_history.last().unwrap(),
            });
            state = next;
            for obs in observers.iter_mut() {
                obs.observe(index, state.t, &state)?;
            }
        }
        Ok(RunSummary {
            final_state: state,
            steps,
            shortened_final_step: shortened,
        })
    }
}
