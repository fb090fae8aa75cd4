//! Single runs and study members, independent of argument parsing and
//! file layout.

use crate::assembly::Discretization;
use crate::diagnostics::{
    decay_rate, eoc, error_norms, steady_state, window_for_duration, DecayFit, EnergyRecorder, EnergySample, EocTable,
    NormReport, SteadyState,
};
use crate::error::Result;
use crate::problems::{ManufacturedSolution, ProblemSpec};
use crate::timestepper::{initial_state, Observer, RunSummary, SolverConfig, TimeStepper};

/// Expected spatial orders in L², H¹ and broken H².
pub const SPATIAL_ORDERS: [f64; 3] = [4.0, 3.0, 2.0];
/// Expected temporal order (checked on the H¹ error).
pub const TEMPORAL_ORDER: f64 = 1.0;
pub const DEFAULT_SPATIAL_BAND: f64 = 0.25;
pub const DEFAULT_TEMPORAL_BAND: f64 = 0.15;
/// A history is bounded when its maximum stays below this multiple of its median.
pub const BLOWUP_FACTOR: f64 = 10.0;

pub struct RunResult {
    pub summary: RunSummary,
    pub energy: Vec<EnergySample>,
}

impl RunResult {
    pub fn grad_history(&self) -> Vec<(f64, f64)> {
        self.energy.iter().map(|s| (s.t, s.grad_norm)).collect()
    }
}

/// March `spec` on `disc` from its initial condition, recording `‖∇ψ_h‖`
/// and `‖Δψ_h‖` and notifying `extra` observers.
pub fn simulate(
    disc: &Discretization,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    extra: &mut [&mut dyn Observer],
) -> Result<RunResult> {
    spec.validate()?;
    let stepper = TimeStepper::new(disc, spec.params(), cfg.clone())?;
    let initial = initial_state(&*spec.initial.field(), disc)?;
    let forcing = spec.forcing_field()?;
    let mut recorder = EnergyRecorder::new(stepper.operators());
    let summary = {
        let mut all: Vec<&mut dyn Observer> = Vec::with_capacity(extra.len() + 1);
        all.push(&mut recorder);
        for o in extra.iter_mut() {
            all.push(&mut **o);
        }
        stepper.run(initial, &*forcing, spec.forcing.is_time_dependent(), &mut all)?
    };
    Ok(RunResult {
        summary,
        energy: recorder.history,
    })
}

/// Final-time error of a manufactured-solution run.
pub struct ConvergenceSample {
    pub errors: NormReport,
    pub max_newton_iterations: usize,
}

pub fn manufactured_error(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<ConvergenceSample> {
    let disc = Discretization::new(spec.mesh()?);
    let run = simulate(&disc, spec, cfg, &mut [])?;
    let fin = &run.summary.final_state;
    Ok(ConvergenceSample {
        errors: error_norms(fin, &disc, &ManufacturedSolution, fin.t),
        max_newton_iterations: run.summary.max_newton_iterations(),
    })
}

/// EOCs of the last row, or `None` for a single-row table.
pub fn trailing_eoc(table: &EocTable) -> Result<Option<Vec<f64>>> {
    if table.rows.len() < 2 {
        return Ok(None);
    }
    Ok(eoc(table)?.pop())
}

/// `|observed − expected| ≤ band` for every pair; NaN fails.
pub fn within_band(observed: &[f64], expected: &[f64], band: f64) -> bool {
    observed.len() == expected.len() && observed.iter().zip(expected).all(|(o, e)| (o - e).abs() <= band)
}

pub fn decay_member(spec: &ProblemSpec, cfg: &SolverConfig, window: f64) -> Result<(RunResult, DecayFit)> {
    let disc = Discretization::new(spec.mesh()?);
    let run = simulate(&disc, spec, cfg, &mut [])?;
    let fit = decay_rate(&run.grad_history(), window)?;
    Ok((run, fit))
}

#[derive(Clone, Copy, Debug)]
pub struct AttractorVerdict {
    pub steady: SteadyState,
    pub max_energy: f64,
    pub median_energy: f64,
    pub bounded: bool,
}

/// Steady-state and blow-up checks over an energy history.
pub fn attractor_verdict(history: &[(f64, f64)], window_duration: f64, tol: f64) -> Result<AttractorVerdict> {
    let window = window_for_duration(history, window_duration).max(1);
    let steady = steady_state(history, window, tol)?;
    let mut e: Vec<f64> = history.iter().map(|&(_, e)| e).collect();
    let max_energy = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    e.sort_by(f64::total_cmp);
    let n = e.len();
    let median_energy = if n % 2 == 1 { e[n / 2] } else { 0.5 * (e[n / 2 - 1] + e[n / 2]) };
    let bounded = max_energy.is_finite() && max_energy <= BLOWUP_FACTOR * median_energy;
    Ok(AttractorVerdict {
        steady,
        max_energy,
        median_energy,
        bounded,
    })
}
