//! Command-line front end: `convergence`, `decay`, `attractor` and `custom`.
//!
//! Settings are resolved as flag > config file > scenario default. The output
//! directory falls back to `$QGFEM_OUT`, then `./qgfem-out`. Every run
//! directory receives `manifest.txt` before any other file.
//!
//! Exit status: 0 success, 1 usage or I/O error, 2 EOC outside its band,
//! 3 solver failure (including failed sweep members).

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::assembly::Discretization;
use crate::diagnostics::{EocTable, DEFAULT_DECAY_WINDOW, DEFAULT_STEADY_TOL, DEFAULT_STEADY_WINDOW};
use crate::error::{QgError, Result};
use crate::linsolve::{set_solver_threads, LinearSolverKind};
use crate::problems::{
    apply_overrides, attractor_dt, scenario, Forcing, InitialCondition, Overrides, ProblemSpec, ScenarioName,
    ATTRACTOR_NU_SWEEP, ATTRACTOR_SNAPSHOT_TIMES, DECAY_MU_SWEEP, DECAY_NU_SWEEP,
};
use crate::timestepper::{Observer, SolverConfig};

use commands::{
    attractor_verdict, decay_member, manufactured_error, simulate, trailing_eoc, within_band, DEFAULT_SPATIAL_BAND,
    DEFAULT_TEMPORAL_BAND, SPATIAL_ORDERS, TEMPORAL_ORDER,
};
use config::ConfigFile;
use output::{fmt17, join_list, write_energy_csv, CsvWriter, RunManifest, SnapshotWriter};

pub const OUT_ENV: &str = "QGFEM_OUT";
pub const DEFAULT_OUT: &str = "qgfem-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BAND: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

pub const DEFAULT_LEVELS: [usize; 4] = [4, 8, 16, 32];
/// Mesh used by the temporal study unless `--nx` is given.
pub const DEFAULT_TEMPORAL_MESH: usize = 64;

#[derive(Parser, Debug)]
#[command(
    name = "qgfem",
    version,
    about = "Bicubic Hermite finite elements for the stream-function quasi-geostrophic equation"
)]
pub struct Cli {
    /// Output directory [default: $QGFEM_OUT, then ./qgfem-out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key = value file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for assembly and factorization (0 = all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Viscosity
    #[arg(long)]
    pub nu: Option<f64>,
    /// Forcing and beta-term scale
    #[arg(long)]
    pub mu: Option<f64>,
    /// Cells in x
    #[arg(long)]
    pub nx: Option<usize>,
    /// Cells in y
    #[arg(long)]
    pub ny: Option<usize>,
    /// Time step
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Relative Newton residual tolerance
    #[arg(long)]
    pub newton_tol: Option<f64>,
    /// Newton iteration cap
    #[arg(long)]
    pub newton_max_iter: Option<usize>,
    /// Recorded in the manifest
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Manufactured-solution error study in h (or in dt with --dts)
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        /// Meshes nx = ny, increasing powers of two
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
        /// Decreasing time steps at a fixed mesh
        #[arg(long, value_delimiter = ',')]
        dts: Vec<f64>,
        /// Allowed deviation of the trailing EOCs
        #[arg(long)]
        band: Option<f64>,
    },
    /// Unforced decay sweep over nu and mu
    Decay {
        #[command(flatten)]
        common: CommonArgs,
        /// Viscosities of the sweep, comma separated
        #[arg(long, value_delimiter = ',')]
        nu_sweep: Vec<f64>,
        /// Forcing scales of the sweep, comma separated
        #[arg(long, value_delimiter = ',')]
        mu_sweep: Vec<f64>,
        /// Trailing fraction of samples used by the rate fit
        #[arg(long)]
        window: Option<f64>,
    },
    /// Wind-driven runs with energy history and snapshots
    Attractor {
        #[command(flatten)]
        common: CommonArgs,
        /// Viscosities of the sweep, comma separated
        #[arg(long, value_delimiter = ',')]
        nu_sweep: Vec<f64>,
        /// Trailing time span examined by the steady-state check
        #[arg(long)]
        steady_window: Option<f64>,
        /// Relative energy variation allowed within the window
        #[arg(long)]
        steady_tol: Option<f64>,
    },
    /// Single run with user-chosen domain, forcing and initial data
    Custom {
        #[command(flatten)]
        common: CommonArgs,
        /// Domain extents, default (0,1)²
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        x1: Option<f64>,
        #[arg(long)]
        y0: Option<f64>,
        #[arg(long)]
        y1: Option<f64>,
        /// zero | wind-sin-y | manufactured
        #[arg(long)]
        forcing: Option<String>,
        /// zero | sin-squared | manufactured
        #[arg(long)]
        initial: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    BandViolation,
    MemberFailures,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => EXIT_OK,
            Outcome::BandViolation => EXIT_BAND,
            Outcome::MemberFailures => EXIT_SOLVER,
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_solver_failure() {
                EXIT_SOLVER
            } else {
                EXIT_USAGE
            }
        }
    }
}

struct Context {
    file: ConfigFile,
    out: PathBuf,
    threads: usize,
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let out = match file.pick(cli.out.clone(), "out")? {
        Some(p) => p,
        None => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
    };
    let threads = file.pick(cli.threads, "threads")?.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| QgError::Config(format!("thread pool: {e}")))?;
    set_solver_threads(pool.current_num_threads());
    let ctx = Context { file, out, threads };

    pool.install(|| match &cli.command {
        Command::Convergence {
            common,
            levels,
            dts,
            band,
        } => cmd_convergence(&ctx, common, levels, dts, *band),
        Command::Decay {
            common,
            nu_sweep,
            mu_sweep,
            window,
        } => cmd_decay(&ctx, common, nu_sweep, mu_sweep, *window),
        Command::Attractor {
            common,
            nu_sweep,
            steady_window,
            steady_tol,
        } => cmd_attractor(&ctx, common, nu_sweep, *steady_window, *steady_tol),
        Command::Custom {
            common,
            x0,
            x1,
            y0,
            y1,
            forcing,
            initial,
        } => cmd_custom(&ctx, common, [*x0, *x1, *y0, *y1], forcing.clone(), initial.clone()),
    })
}

impl Context {
    fn overrides(&self, c: &CommonArgs) -> Result<Overrides> {
        let f = &self.file;
        Ok(Overrides {
            nu: f.pick(c.nu, "nu")?,
            mu: f.pick(c.mu, "mu")?,
            nx: f.pick(c.nx, "nx")?,
            ny: f.pick(c.ny, "ny")?,
            dt: f.pick(c.dt, "dt")?,
            t_end: f.pick(c.t_end, "t-end")?,
            newton_tol: f.pick(c.newton_tol, "newton-tol")?,
        })
    }

    /// Settings of [`SolverConfig`] that [`Overrides`] does not carry.
    fn finish_cfg(&self, c: &CommonArgs, cfg: &mut SolverConfig) -> Result<()> {
        if let Some(n) = self.file.pick(c.newton_max_iter, "newton-max-iter")? {
            cfg.newton_max_iter = n;
        }
        if let Some(kind) = self.file.get::<LinearSolverKind>("linear-solver")? {
            cfg.linear_solver = kind;
        }
        cfg.validate()
    }

    fn manifest(
        &self,
        command: &str,
        c: &CommonArgs,
        spec: &ProblemSpec,
        cfg: &SolverConfig,
        dir: &Path,
        extra: Vec<(String, String)>,
    ) -> Result<RunManifest> {
        Ok(RunManifest {
            command: command.to_string(),
            spec: spec.clone(),
            cfg: cfg.clone(),
            out: dir.to_path_buf(),
            seed: self.file.pick(c.seed, "seed")?.unwrap_or(0),
            threads: self.threads,
            extra,
        })
    }
}

fn member_dir(root: &Path, nu: f64, mu: f64) -> PathBuf {
    root.join(format!("nu{nu}_mu{mu}"))
}

fn cmd_convergence(
    ctx: &Context,
    common: &CommonArgs,
    levels: &[usize],
    dts: &[f64],
    band: Option<f64>,
) -> Result<Outcome> {
    let mut ov = ctx.overrides(common)?;
    let dts = ctx.file.pick_list(dts, "dts")?.unwrap_or_default();
    let temporal = !dts.is_empty();
    let levels = ctx.file.pick_list(levels, "levels")?.unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
    if temporal {
        if dts.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(QgError::Config("--dts must be strictly decreasing".into()));
        }
        let n = ov.nx.unwrap_or(DEFAULT_TEMPORAL_MESH);
        ov.nx = Some(n);
        ov.ny = Some(ov.ny.unwrap_or(n));
    } else if levels.is_empty()
        || levels.iter().any(|n| !n.is_power_of_two() || *n < 2)
        || levels.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(QgError::Config(
            "--levels must be strictly increasing powers of two, at least 2".into(),
        ));
    }
    let band = ctx
        .file
        .pick(band, "band")?
        .unwrap_or(if temporal { DEFAULT_TEMPORAL_BAND } else { DEFAULT_SPATIAL_BAND });
    let (spec, mut cfg) = scenario(ScenarioName::Convergence, &ov)?;
    ctx.finish_cfg(common, &mut cfg)?;

    let mut extra = vec![("band".to_string(), band.to_string())];
    if temporal {
        extra.push(("dts".into(), join_list(&dts)));
    } else {
        extra.push(("levels".into(), join_list(&levels)));
    }
    ctx.manifest("convergence", common, &spec, &cfg, &ctx.out, extra)?
        .write(&ctx.out)?;

    let first = if temporal { "dt" } else { "h" };
    let mut csv = CsvWriter::create(
        &ctx.out.join("eoc.csv"),
        &[first, "e_l2", "e_h1", "e_h2", "eoc_l2", "eoc_h1", "eoc_h2"],
    )?;
    let members: Vec<(ProblemSpec, SolverConfig, f64)> = if temporal {
        dts.iter()
            .map(|&dt| (spec.clone(), SolverConfig { dt, ..cfg.clone() }, dt))
            .collect()
    } else {
        levels
            .iter()
            .map(|&n| {
                let s = ProblemSpec { nx: n, ny: n, ..spec.clone() };
                (s, cfg.clone(), (spec.x1 - spec.x0) / n as f64)
            })
            .collect()
    };

    let mut table = EocTable::default();
    for (s, c, key) in &members {
        eprintln!("convergence: nx={} ny={} dt={}", s.nx, s.ny, c.dt);
        let sample = manufactured_error(s, c)?;
        table.push(*key, sample.errors.as_array().to_vec());
        let mut cells = vec![fmt17(*key)];
        cells.extend(sample.errors.as_array().map(fmt17));
        match trailing_eoc(&table)? {
            Some(e) => cells.extend(e.iter().map(|v| fmt17(*v))),
            None => cells.extend(std::iter::repeat_n(String::new(), 3)),
        }
        csv.row(&cells)?;
    }

    let ok = match trailing_eoc(&table)? {
        None => true,
        Some(e) if temporal => {
            println!("temporal EOC (L2, H1, H2): {e:.3?}; H1 expected {TEMPORAL_ORDER} ± {band}");
            within_band(&e[1..2], &[TEMPORAL_ORDER], band)
        }
        Some(e) => {
            println!("spatial EOC (L2, H1, H2): {e:.3?}; expected {SPATIAL_ORDERS:?} ± {band}");
            within_band(&e, &SPATIAL_ORDERS, band)
        }
    };
    Ok(if ok { Outcome::Success } else { Outcome::BandViolation })
}

/// Sweep values: an explicit flag value, then a listed sweep (flag or file),
/// then a scalar from the file, then `default`.
fn sweep_values(
    ctx: &Context,
    flag: Option<f64>,
    listed: &[f64],
    key: &str,
    list_key: &str,
    default: &[f64],
) -> Result<Vec<f64>> {
    if let Some(v) = flag {
        return Ok(vec![v]);
    }
    if let Some(list) = ctx.file.pick_list(listed, list_key)? {
        return Ok(list);
    }
    Ok(match ctx.file.get::<f64>(key)? {
        Some(v) => vec![v],
        None => default.to_vec(),
    })
}

fn cmd_decay(
    ctx: &Context,
    common: &CommonArgs,
    nu_sweep: &[f64],
    mu_sweep: &[f64],
    window: Option<f64>,
) -> Result<Outcome> {
    let ov = ctx.overrides(common)?;
    let nus = sweep_values(ctx, common.nu, nu_sweep, "nu", "nu-sweep", &DECAY_NU_SWEEP)?;
    let mus = sweep_values(ctx, common.mu, mu_sweep, "mu", "mu-sweep", &DECAY_MU_SWEEP)?;
    let window = ctx.file.pick(window, "window")?.unwrap_or(DEFAULT_DECAY_WINDOW);
    let (spec, mut cfg) = scenario(ScenarioName::Decay, &ov)?;
    ctx.finish_cfg(common, &mut cfg)?;
    let extra = vec![
        ("nu-sweep".to_string(), join_list(&nus)),
        ("mu-sweep".to_string(), join_list(&mus)),
        ("window".to_string(), window.to_string()),
    ];
    ctx.manifest("decay", common, &spec, &cfg, &ctx.out, extra)?
        .write(&ctx.out)?;

    let mut rates = CsvWriter::create(&ctx.out.join("decay_rates.csv"), &["nu", "mu", "rate", "r2", "status"])?;
    let mut failures = 0;
    for &mu in &mus {
        for &nu in &nus {
            let member = ProblemSpec { nu, mu, ..spec.clone() };
            let dir = member_dir(&ctx.out, nu, mu);
            let extra = vec![("window".to_string(), window.to_string())];
            ctx.manifest("decay", common, &member, &cfg, &dir, extra)?.write(&dir)?;
            eprintln!("decay: nu={nu} mu={mu}");
            match decay_member(&member, &cfg, window) {
                Ok((run, fit)) => {
                    write_energy_csv(&dir.join("energy.csv"), &run.energy)?;
                    rates.row(&[fmt17(nu), fmt17(mu), fmt17(fit.rate), fmt17(fit.r_squared), "ok".into()])?;
                    println!("nu={nu} mu={mu} rate={:.6} r2={:.6}", fit.rate, fit.r_squared);
                }
                Err(e) if e.is_solver_failure() || matches!(e, QgError::FitDomain { .. }) => {
                    eprintln!("decay member nu={nu} mu={mu} failed: {e}");
                    failures += 1;
                    rates.row(&[fmt17(nu), fmt17(mu), "NaN".into(), "NaN".into(), "failed".into()])?;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(if failures > 0 { Outcome::MemberFailures } else { Outcome::Success })
}

/// Per-member time steps: `--dt`, then a `member-dt` list from the file,
/// then a file `dt`, then the viscosity-dependent default.
fn member_time_steps(ctx: &Context, common: &CommonArgs, nus: &[f64], dt: Option<f64>) -> Result<Vec<f64>> {
    if common.dt.is_none() {
        if let Some(list) = ctx.file.get_list::<f64>("member-dt")? {
            if list.len() != nus.len() {
                return Err(QgError::Config(format!(
                    "member-dt has {} entries for {} sweep members",
                    list.len(),
                    nus.len()
                )));
            }
            return Ok(list);
        }
    }
    Ok(nus.iter().map(|&nu| dt.unwrap_or_else(|| attractor_dt(nu))).collect())
}

fn cmd_attractor(
    ctx: &Context,
    common: &CommonArgs,
    nu_sweep: &[f64],
    steady_window: Option<f64>,
    steady_tol: Option<f64>,
) -> Result<Outcome> {
    let ov = ctx.overrides(common)?;
    let nus = sweep_values(ctx, common.nu, nu_sweep, "nu", "nu-sweep", &ATTRACTOR_NU_SWEEP)?;
    let window = ctx.file.pick(steady_window, "steady-window")?.unwrap_or(DEFAULT_STEADY_WINDOW);
    let tol = ctx.file.pick(steady_tol, "steady-tol")?.unwrap_or(DEFAULT_STEADY_TOL);
    let (spec, mut cfg) = scenario(ScenarioName::Attractor, &ov)?;
    ctx.finish_cfg(common, &mut cfg)?;
    let dts = member_time_steps(ctx, common, &nus, ov.dt)?;
    for &dt in &dts {
        SolverConfig { dt, ..cfg.clone() }.validate()?;
    }
    let settings = vec![
        ("steady-window".to_string(), window.to_string()),
        ("steady-tol".to_string(), tol.to_string()),
    ];
    let mut extra = vec![
        ("nu-sweep".to_string(), join_list(&nus)),
        ("member-dt".to_string(), join_list(&dts)),
    ];
    extra.extend(settings.iter().cloned());
    ctx.manifest("attractor", common, &spec, &cfg, &ctx.out, extra)?
        .write(&ctx.out)?;

    let mut times = vec![0.0];
    times.extend(ATTRACTOR_SNAPSHOT_TIMES.iter().filter(|&&t| t <= cfg.t_end * (1.0 + 1e-12)));

    let mut summary = CsvWriter::create(
        &ctx.out.join("attractor_summary.csv"),
        &[
            "nu",
            "mu",
            "steady",
            "plateau",
            "variation",
            "max_energy",
            "median_energy",
            "bounded",
            "status",
        ],
    )?;
    let mut failures = 0;
    for (&nu, &dt) in nus.iter().zip(&dts) {
        let member = ProblemSpec { nu, ..spec.clone() };
        let cfg = SolverConfig { dt, ..cfg.clone() };
        let dir = member_dir(&ctx.out, nu, member.mu);
        ctx.manifest("attractor", common, &member, &cfg, &dir, settings.clone())?
            .write(&dir)?;
        eprintln!("attractor: nu={nu} mu={}", member.mu);
        let disc = Discretization::new(member.mesh()?);
        let mut snaps = SnapshotWriter::new(&disc, &dir, times.clone());
        let result = simulate(&disc, &member, &cfg, &mut [&mut snaps as &mut dyn Observer]);
        match result {
            Ok(run) => {
                write_energy_csv(&dir.join("energy.csv"), &run.energy)?;
                let v = attractor_verdict(&run.grad_history(), window, tol)?;
                summary.row(&[
                    fmt17(nu),
                    fmt17(member.mu),
                    v.steady.steady.to_string(),
                    fmt17(v.steady.plateau),
                    fmt17(v.steady.variation),
                    fmt17(v.max_energy),
                    fmt17(v.median_energy),
                    v.bounded.to_string(),
                    "ok".into(),
                ])?;
                println!(
                    "nu={nu} mu={} steady={} variation={:.3e} bounded={}",
                    member.mu, v.steady.steady, v.steady.variation, v.bounded
                );
            }
            Err(e) if e.is_solver_failure() => {
                eprintln!("attractor member nu={nu} failed: {e}");
                failures += 1;
                let mut cells = vec![fmt17(nu), fmt17(member.mu)];
                cells.extend(std::iter::repeat_n("NaN".to_string(), 6));
                cells.push("failed".into());
                summary.row(&cells)?;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(if failures > 0 { Outcome::MemberFailures } else { Outcome::Success })
}

fn cmd_custom(
    ctx: &Context,
    common: &CommonArgs,
    domain: [Option<f64>; 4],
    forcing: Option<String>,
    initial: Option<String>,
) -> Result<Outcome> {
    let f = &ctx.file;
    let pick_f = |v: Option<f64>, key: &str, default: f64| -> Result<f64> { Ok(f.pick(v, key)?.unwrap_or(default)) };
    let forcing: Forcing = match f.pick(forcing, "forcing")? {
        Some(s) => s.parse()?,
        None => Forcing::Zero,
    };
    let initial: InitialCondition = match f.pick(initial, "initial")? {
        Some(s) => s.parse()?,
        None => InitialCondition::Zero,
    };
    let mut spec = ProblemSpec {
        x0: pick_f(domain[0], "x0", 0.0)?,
        x1: pick_f(domain[1], "x1", 1.0)?,
        y0: pick_f(domain[2], "y0", 0.0)?,
        y1: pick_f(domain[3], "y1", 1.0)?,
        nx: 16,
        ny: 16,
        nu: 1.0,
        mu: 100.0,
        forcing,
        initial,
    };
    let mut cfg = SolverConfig::default();
    apply_overrides(&mut spec, &mut cfg, &ctx.overrides(common)?);
    spec.validate()?;
    ctx.finish_cfg(common, &mut cfg)?;
    ctx.manifest("custom", common, &spec, &cfg, &ctx.out, Vec::new())?
        .write(&ctx.out)?;

    let disc = Discretization::new(spec.mesh()?);
    let mut snaps = SnapshotWriter::new(&disc, &ctx.out, vec![0.0, cfg.t_end]);
    let run = simulate(&disc, &spec, &cfg, &mut [&mut snaps as &mut dyn Observer])?;
    write_energy_csv(&ctx.out.join("energy.csv"), &run.energy)?;
    let last = run.energy.last().expect("history includes t = 0");
    println!(
        "t={} grad_norm={:.6e} delta_norm={:.6e} steps={} max_newton={}",
        last.t,
        last.grad_norm,
        last.delta_norm,
        run.summary.steps.len(),
        run.summary.max_newton_iterations()
    );
    Ok(Outcome::Success)
}
