//! A run driven by a config file, writing the CSV series and VTK snapshots.

use volfem::config::RunConfig;
use volfem::output::execute;

fn main() {
    let dir = std::env::temp_dir().join("volfem-config-run");
    let text = format!(
        "# pulse on a Fung block\n\
         mesh.nx = 10\nmesh.ny = 10\nmesh.dirichlet = left\n\
         material.model = fung\nmaterial.w0 = 0\nmaterial.beta = 1\nmaterial.gamma = 2\n\
         sim.dt = 0.005\nsim.t_end = 0.1\nsim.constraint_mode = frozen_geometry\n\
         load.kind = beat\nload.amplitude = 0.3\nload.period = 0.2\n\
         output.dir = {}\noutput.snapshot_every = 5\n",
        dir.display()
    );
    let cfg = RunConfig::parse(&text).unwrap();
    let done = execute(&cfg).unwrap();
    println!("{:?}: {} rows in {}", done.outcome.reason, done.outcome.rows.len(), done.csv.display());
    println!("{} snapshots, last {}", done.snapshots.len(), done.snapshots.last().unwrap().display());
    println!("{:?}", RunConfig::parse("sim.kappa = -1").err().map(|e| e.to_string()));
}
