//! Run orchestration and file output: the per-step CSV series and legacy
//! VTK snapshots.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::fem::element_dets;
use crate::mesh::Mesh;
use crate::stepper::{RunOutcome, SeriesRow, Simulator, State, StepError, SERIES_HEADER};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Step(#[from] StepError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

/// Append-only CSV of [`SeriesRow`]s, flushed after every row so that an
/// interrupted run leaves a readable prefix.
pub struct SeriesWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl SeriesWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, OutputError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = Self { path, out: BufWriter::new(file) };
        w.line(SERIES_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<(), OutputError> {
        writeln!(self.out, "{s}").and_then(|_| self.out.flush()).map_err(io_err(&self.path))
    }

    pub fn push(&mut self, row: &SeriesRow) -> Result<(), OutputError> {
        self.line(&row.to_csv())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Legacy VTK (ASCII, unstructured grid) text for one state.
pub fn snapshot_text(mesh: &Mesh, state: &State) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let n = mesh.num_nodes();
    let m = mesh.num_triangles();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nvolfem t={:e}\nASCII\nDATASET UNSTRUCTURED_GRID", state.t);
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {m} {}", 4 * m);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    for (name, field) in [("displacement", &state.u), ("velocity", &state.v)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for i in 0..n {
            let _ = writeln!(s, "{:e} {:e} 0", field[2 * i], field[2 * i + 1]);
        }
    }
    let _ = writeln!(s, "CELL_DATA {m}\nSCALARS det_phi double 1\nLOOKUP_TABLE default");
    for d in element_dets(mesh, &state.u) {
        let _ = writeln!(s, "{d:e}");
    }
    s
}

pub fn write_snapshot(mesh: &Mesh, state: &State, path: impl AsRef<Path>) -> Result<(), OutputError> {
    let path = path.as_ref();
    fs::write(path, snapshot_text(mesh, state)).map_err(io_err(path))
}

/// What a finished scenario left behind.
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub outcome: RunOutcome,
    pub csv: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

/// Builds the mesh, runs the simulation from rest and writes the CSV series
/// plus snapshots every `output.snapshot_every` accepted steps (the final
/// state is always written when snapshots are enabled).
pub fn execute(cfg: &RunConfig) -> Result<ScenarioOutcome, OutputError> {
    cfg.validate()?;
    let mesh = cfg.mesh.build().map_err(ConfigError::from)?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join(&cfg.output.csv_name);
    let mut series = SeriesWriter::create(&csv)?;
    let mut sim = Simulator::new(&mesh, cfg.sim.clone())?;
    let every = cfg.output.snapshot_every;
    let mut snapshots = Vec::new();
    let mut failure = None;
    let mut step = 0usize;
    let outcome = sim.run(sim.rest_state(), |row, state| {
        if failure.is_some() {
            return;
        }
        let mut emit = || -> Result<(), OutputError> {
            series.push(row)?;
            if every > 0 && step % every == 0 {
                let path = dir.join(format!("snapshot_{step:05}.vtk"));
                write_snapshot(&mesh, state, &path)?;
                snapshots.push(path);
            }
            Ok(())
        };
        if let Err(e) = emit() {
            failure = Some(e);
        }
        step += 1;
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if every > 0 && (step - 1) % every != 0 {
        let path = dir.join(format!("snapshot_{:05}.vtk", step - 1));
        write_snapshot(&mesh, &outcome.final_state, &path)?;
        snapshots.push(path);
    }
    Ok(ScenarioOutcome { outcome, csv, snapshots })
}

/// Process exit code for a scenario: 0 reached `t_end`, 2 blow-up,
/// 3 invertibility lost, 1 any error (reported on stderr).
pub fn run_scenario(cfg: &RunConfig) -> i32 {
    match execute(cfg) {
        Ok(done) => {
            let code = done.outcome.reason.exit_code();
            eprintln!("{:?}; {} rows -> {}", done.outcome.reason, done.outcome.rows.len(), done.csv.display());
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interpolate;
    use crate::fem::DofMap;
    use crate::mesh::Side;

    #[test]
    fn two_triangle_zero_state() {
        let mesh = Mesh::structured_square(1, 1, &[Side::Left]).unwrap();
        let text = snapshot_text(&mesh, &State::rest(&DofMap::new(&mesh)));
        assert!(text.contains("POINTS 4 double"));
        assert!(text.contains("CELLS 2 8"));
        assert!(text.contains("CELL_TYPES 2"));
        let point_data = text.split("POINT_DATA").nth(1).unwrap();
        let vec_lines = point_data.lines().filter(|l| *l == "0e0 0e0 0").count();
        assert_eq!(vec_lines, 8);
    }

    #[test]
    fn dilation_det_in_cell_data() {
        let mesh = Mesh::structured_square(3, 3, &[Side::Left]).unwrap();
        let mut state = State::rest(&DofMap::new(&mesh));
        state.u = interpolate(&mesh, |x| [0.1 * x[0], 0.1 * x[1]]);
        let text = snapshot_text(&mesh, &state);
        let dets: Vec<f64> =
            text.lines().skip_while(|l| !l.starts_with("LOOKUP_TABLE")).skip(1).map(|l| l.parse().unwrap()).collect();
        assert_eq!(dets.len(), 18);
        assert!(dets.iter().all(|d| (d - 1.21).abs() < 1e-12));
    }

    #[test]
    fn equilibrium_scenario_exits_zero() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::preset("equilibrium").unwrap();
        cfg.output.dir = dir.path().to_path_buf();
        cfg.output.snapshot_every = 20;
        assert_eq!(run_scenario(&cfg), 0);
        let csv = fs::read_to_string(dir.path().join("series.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SERIES_HEADER));
        assert_eq!(lines.count(), 51);
        // steps 0, 20, 40 and the final one
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 5);
    }

    #[test]
    fn unwritable_output_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let mut cfg = RunConfig::preset("equilibrium").unwrap();
        cfg.output.dir = blocker.join("sub");
        assert_eq!(run_scenario(&cfg), 1);
    }
}
