//! Run manifests, CSV tables and field snapshots.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::assembly::Discretization;
use crate::diagnostics::EnergySample;
use crate::error::Result;
use crate::mesh::DofKind;
use crate::problems::ProblemSpec;
use crate::timestepper::{Observer, SolverConfig, State};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Fixed 17-significant-digit rendering used in every CSV.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Resolved inputs of one run, written before any of its outputs.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub command: String,
    pub spec: ProblemSpec,
    pub cfg: SolverConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
    /// Command-specific settings (levels, sweeps, bands).
    pub extra: Vec<(String, String)>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let s = &self.spec;
        let c = &self.cfg;
        let mut text = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(text, "{k} = {v}");
        };
        kv("version", env!("CARGO_PKG_VERSION").to_string());
        kv("command", self.command.clone());
        kv("out", self.out.display().to_string());
        kv("threads", self.threads.to_string());
        kv("seed", self.seed.to_string());
        kv("x0", s.x0.to_string());
        kv("x1", s.x1.to_string());
        kv("y0", s.y0.to_string());
        kv("y1", s.y1.to_string());
        kv("nx", s.nx.to_string());
        kv("ny", s.ny.to_string());
        kv("nu", s.nu.to_string());
        kv("mu", s.mu.to_string());
        kv("forcing", s.forcing.name().to_string());
        kv("initial", s.initial.name().to_string());
        kv("dt", c.dt.to_string());
        kv("t-end", c.t_end.to_string());
        kv("newton-tol", c.newton_tol.to_string());
        kv("newton-max-iter", c.newton_max_iter.to_string());
        kv("linear-solver", c.linear_solver.to_string());
        for (k, v) in &self.extra {
            kv(k, v.clone());
        }
        text
    }

    /// Creates `dir` and writes the manifest into it.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.render())?;
        Ok(path)
    }
}

/// Comma-joined list in manifest/config syntax.
pub fn join_list<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Line-buffered CSV file that is flushed after every row, so a failed run
/// leaves the rows written so far.
pub struct CsvWriter {
    inner: BufWriter<fs::File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut inner = BufWriter::new(fs::File::create(path)?);
        writeln!(inner, "{}", header.join(","))?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        writeln!(self.inner, "{}", cells.join(","))?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_energy_csv(path: &Path, history: &[EnergySample]) -> Result<()> {
    let mut w = CsvWriter::create(path, &["t", "grad_norm", "delta_norm"])?;
    for s in history {
        w.row(&[fmt17(s.t), fmt17(s.grad_norm), fmt17(s.delta_norm)])?;
    }
    Ok(())
}

/// Nodal `(x, y, ψ, ψ_x, ψ_y)` in node order (`x` fastest).
pub fn nodal_values(disc: &Discretization, state: &State) -> Vec<[f64; 5]> {
    let m = &disc.mesh;
    let coeff = |node, kind| disc.dofmap.global(node, kind).map_or(0.0, |g| state.coeffs[g]);
    let mut rows = Vec::with_capacity(m.n_nodes());
    for j in 0..=m.ny {
        for i in 0..=m.nx {
            let node = m.node_index(i, j);
            let (x, y) = m.node_coords(i, j);
            rows.push([
                x,
                y,
                coeff(node, DofKind::Value),
                coeff(node, DofKind::Dx),
                coeff(node, DofKind::Dy),
            ]);
        }
    }
    rows
}

/// Writes `<stem>.vtk` (legacy structured points, nodal ψ) and `<stem>.csv`.
pub fn write_snapshot(dir: &Path, stem: &str, disc: &Discretization, state: &State) -> Result<()> {
    let m = &disc.mesh;
    let rows = nodal_values(disc, state);

    let mut vtk = BufWriter::new(fs::File::create(dir.join(format!("{stem}.vtk")))?);
    writeln!(vtk, "# vtk DataFile Version 3.0")?;
    writeln!(vtk, "stream function t={}", state.t)?;
    writeln!(vtk, "ASCII")?;
    writeln!(vtk, "DATASET STRUCTURED_POINTS")?;
    writeln!(vtk, "DIMENSIONS {} {} 1", m.nx + 1, m.ny + 1)?;
    let (x0, y0) = m.node_coords(0, 0);
    writeln!(vtk, "ORIGIN {} {} 0", fmt17(x0), fmt17(y0))?;
    writeln!(vtk, "SPACING {} {} 1", fmt17(m.hx), fmt17(m.hy))?;
    writeln!(vtk, "POINT_DATA {}", rows.len())?;
    writeln!(vtk, "SCALARS psi double 1")?;
    writeln!(vtk, "LOOKUP_TABLE default")?;
    for r in &rows {
        writeln!(vtk, "{}", fmt17(r[2]))?;
    }
    vtk.flush()?;

    let mut csv = CsvWriter::create(&dir.join(format!("{stem}.csv")), &["x", "y", "psi", "psi_x", "psi_y"])?;
    for r in &rows {
        csv.row(&r.map(fmt17))?;
    }
    Ok(())
}

/// Observer writing a snapshot the first time `t` reaches each requested time.
pub struct SnapshotWriter<'a> {
    disc: &'a Discretization,
    dir: PathBuf,
    times: Vec<f64>,
    next: usize,
    pub written: Vec<PathBuf>,
}

impl<'a> SnapshotWriter<'a> {
    pub fn new(disc: &'a Discretization, dir: &Path, mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        Self {
            disc,
            dir: dir.to_path_buf(),
            times,
            next: 0,
            written: Vec::new(),
        }
    }
}

impl Observer for SnapshotWriter<'_> {
    fn observe(&mut self, _step: usize, t: f64, state: &State) -> Result<()> {
        while let Some(&target) = self.times.get(self.next) {
            if t < target - 1e-9 * target.abs().max(1.0) {
                break;
            }
            let stem = format!("snapshot_t{target}");
            write_snapshot(&self.dir, &stem, self.disc, state)?;
            self.written.push(self.dir.join(format!("{stem}.csv")));
            self.next += 1;
        }
        Ok(())
    }
}
