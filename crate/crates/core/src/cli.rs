//! Command-line front end. The binary is a one-line wrapper around [`main_with`].

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::estlab::{
    basic_estimates_check, cofactor_constant_3d, cofactor_lipschitz_check, holder_embedding_check,
    holder_worst_brownian, interpolation_scaling_check, lipschitz_scaling_probe, probe_fields,
    random_polynomial_signal, EstError, ScalingReport, SignalFamily,
};
use crate::mesh::{Mesh, Side};
use crate::output::run_scenario;
use crate::stepper::SimConfig;
use crate::studies::{material_fd_suite, mms_convergence, reference_models};

#[derive(Debug, Parser)]
#[command(name = "volfem", version, about = "Volume-constrained damped elastodynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario from a config file, or a built-in preset by name
    /// (equilibrium, beat, crush, mms-linear).
    Solve {
        config: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Manufactured-solution convergence on k successively halved squares starting at 8×8.
    Mms {
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long = "t-end", default_value_t = 0.25)]
        t_end: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Run one of the estimate probes.
    Estlab {
        probe: Probe,
        #[arg(long = "T-list", value_delimiter = ',', default_values_t = [1.0, 0.1, 0.01, 0.001])]
        t_list: Vec<f64>,
        /// Directory for the CSV reports.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference checks of a constitutive model's derivatives.
    Checkmat {
        model: ModelChoice,
        #[arg(long, default_value_t = 200)]
        states: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Probe {
    Holder,
    Basic,
    Interpolation,
    Lipschitz,
    Cofactor,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelChoice {
    Stvk,
    Fung,
    Ogden,
    All,
}

/// Sizes the global rayon pool from `SOLVER_THREADS` (unset or 0 = rayon's default).
pub fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SOLVER_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("SOLVER_THREADS must be an integer, got '{raw}'"))?;
    if n > 0 {
        // A pool may already exist (tests); that is not an error for the caller.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Loads `source` as a file if it exists, otherwise as a preset name.
pub fn resolve_config(source: &str, overrides: &Overrides) -> Result<RunConfig, String> {
    let mut cfg = if Path::new(source).exists() {
        RunConfig::load_file(source).map_err(|e| format!("{source}: {e}"))?
    } else {
        RunConfig::preset(source).map_err(|e| format!("{source}: not a file, and {e}"))?
    };
    if let Some(dt) = overrides.dt {
        cfg.sim.dt = dt;
        cfg.sim.dt_min = cfg.sim.dt_min.min(dt / 2.0);
    }
    if let Some(t) = overrides.t_end {
        cfg.sim.t_end = t;
    }
    if let Some(out) = &overrides.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 1;
    }
    match cli.command {
        Command::Solve { config, overrides } => match resolve_config(&config, &overrides) {
            Ok(cfg) => run_scenario(&cfg),
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Mms { levels, t_end, kappa } => mms(levels, t_end, kappa),
        Command::Estlab { probe, t_list, out } => match estlab(probe, &t_list, out.as_deref()) {
            Ok(true) => 0,
            Ok(false) => 4,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Checkmat { model, states, seed } => checkmat(model, states, seed),
    }
}

fn mms(levels: usize, t_end: f64, kappa: f64) -> i32 {
    if levels < 2 {
        eprintln!("error: --levels must be at least 2");
        return 1;
    }
    let cells: Vec<usize> = (0..levels).map(|k| 8 << k).collect();
    match mms_convergence(&cells, kappa, t_end) {
        Ok(r) => {
            println!("cells,h,dt,velocity_l2,pressure_abs");
            for l in &r.levels {
                println!("{},{:e},{:e},{:e},{:e}", l.cells, l.h, l.dt, l.velocity_error, l.pressure_error);
            }
            println!("velocity orders {:?}", r.velocity_orders);
            println!("pressure orders {:?}", r.pressure_orders);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn verdict(name: &str, pass: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn save(out: Option<&Path>, name: &str, report: &ScalingReport) -> Result<(), EstError> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join(format!("{name}.csv")), report.to_csv()))
            .map_err(|e| EstError::InvalidSignal(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

/// Runs `probe`, prints one PASS/FAIL line per check, returns whether all passed.
pub fn estlab(probe: Probe, t_list: &[f64], out: Option<&Path>) -> Result<bool, EstError> {
    let mut ok = true;
    match probe {
        Probe::Holder => {
            for (gamma, p) in [(0.9, 4.0), (0.6, 3.0), (0.3, 4.0)] {
                let floor = gamma - 1.0 / p - 0.05;
                for fam in [SignalFamily::Linear, SignalFamily::Smooth] {
                    let r = holder_embedding_check(&fam, gamma, p, t_list)?;
                    let name = format!("holder_{}_g{gamma}_p{p}", fam.name());
                    save(out, &name, &r)?;
                    ok &= verdict(&name, r.slope >= floor, format!("slope {:.4} (floor {floor:.2})", r.slope));
                }
                let r = holder_worst_brownian(gamma, p, t_list, 20)?;
                let name = format!("holder_brownian_g{gamma}_p{p}");
                save(out, &name, &r)?;
                ok &= verdict(&name, r.slope >= floor, format!("worst slope {:.4} over 20 paths (floor {floor:.2})", r.slope));
            }
        }
        Probe::Basic => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            let mut violations = 0;
            for _ in 0..100 {
                let t = rng.gen_range(0.01..=1.0);
                let p = rng.gen_range(1.0..6.0);
                let s = random_polynomial_signal(&mut rng, t, 2001)?;
                violations += basic_estimates_check(&s, p)?.violations();
            }
            ok &= verdict("basic_estimates", violations == 0, format!("{violations} violations over 100 signals"));
        }
        Probe::Interpolation => {
            for (p, alpha) in [(2.0, 0.5), (4.0, 0.3)] {
                let r = interpolation_scaling_check(p, alpha, t_list)?;
                let name = format!("interpolation_p{p}_a{alpha}");
                save(out, &name, &r)?;
                let floor = (1.0 - alpha) / p - 0.05;
                ok &= verdict(&name, r.slope >= floor, format!("slope {:.4} (floor {floor:.3})", r.slope));
            }
        }
        Probe::Lipschitz => {
            let mesh = Mesh::structured_square(8, 8, &[Side::Left]).expect("static mesh");
            let (v1, v2) = probe_fields(&mesh, 1.0);
            for model in reference_models() {
                let r = lipschitz_scaling_probe(&SimConfig::new(model.clone()), &mesh, &v1, &v2, t_list)?;
                for (part, rep) in [("force", &r.force), ("boundary", &r.boundary), ("constraint", &r.constraint)] {
                    let name = format!("lipschitz_{}_{part}", model.name());
                    save(out, &name, rep)?;
                    let pass = if part == "force" { (0.9..=1.1).contains(&rep.slope) } else { rep.slope >= 0.9 };
                    ok &= verdict(&name, pass, format!("slope {:.4}, r2 {:.6}", rep.slope, rep.r_squared));
                }
            }
        }
        Probe::Cofactor => {
            use rand::{Rng, SeedableRng};
            let mesh = Mesh::structured_square(6, 6, &[Side::Left]).expect("static mesh");
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
            let pairs: Vec<_> = (0..20)
                .map(|_| {
                    let mut f = || (0..2 * mesh.num_nodes()).map(|_| rng.gen_range(-0.5..0.5)).collect::<Vec<f64>>();
                    (f(), f())
                })
                .collect();
            let r = cofactor_lipschitz_check(&pairs, &mesh);
            let spread = r.ratios.iter().map(|q| (q - 1.0).abs()).fold(0.0, f64::max);
            ok &= verdict("cofactor_2d", spread < 1e-12, format!("max |ratio − 1| = {spread:e}"));
            let (a, b) = (cofactor_constant_3d(20_000, 2.0, 1), cofactor_constant_3d(40_000, 2.0, 2));
            let drift = (a - b).abs() / a;
            ok &= verdict("cofactor_3d", drift <= 0.1, format!("C = {a:.4} / {b:.4} under doubling ({:.1}%)", 100.0 * drift));
        }
    }
    Ok(ok)
}

fn checkmat(choice: ModelChoice, states: usize, seed: u64) -> i32 {
    let wanted = |name: &str| match choice {
        ModelChoice::All => true,
        ModelChoice::Stvk => name == "stvk",
        ModelChoice::Fung => name == "fung",
        ModelChoice::Ogden => name == "ogden",
    };
    let mut ok = true;
    for model in reference_models().into_iter().filter(|m| wanted(m.name())) {
        match material_fd_suite(&model, states, seed) {
            Ok(c) => {
                for (what, d) in [("stress", c.stress), ("tangent", c.tangent), ("first_piola", c.first_piola)] {
                    let order = if d.min_order.is_finite() { format!("{:.3}", d.min_order) } else { "exact".into() };
                    ok &= verdict(
                        &format!("{}_{what}", model.name()),
                        d.passes(1e-6, 1.9),
                        format!("rel err {:.2e}, order {order}, {} exact of {states}", d.max_rel_error, d.exact_states),
                    );
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", model.name());
                return 1;
            }
        }
    }
    if ok {
        0
    } else {
        4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from(["volfem", "estlab", "holder", "--T-list", "1,0.1,0.01,0.001"]).unwrap();
        match cli.command {
            Command::Estlab { t_list, .. } => assert_eq!(t_list, vec![1.0, 0.1, 0.01, 0.001]),
            _ => panic!(),
        }
        let cli = Cli::try_parse_from(["volfem", "solve", "beat", "--dt", "0.002", "--t-end", "0.1"]).unwrap();
        match cli.command {
            Command::Solve { overrides, .. } => {
                assert_eq!(overrides.dt, Some(0.002));
                assert_eq!(overrides.t_end, Some(0.1));
            }
            _ => panic!(),
        }
        assert!(Cli::try_parse_from(["volfem", "mms", "--levels"]).is_err());
    }

    #[test]
    fn overrides_apply_to_presets() {
        let o = Overrides { dt: Some(0.01), t_end: Some(0.02), out: Some("elsewhere".into()) };
        let cfg = resolve_config("equilibrium", &o).unwrap();
        assert_eq!(cfg.sim.dt, 0.01);
        assert_eq!(cfg.sim.t_end, 0.02);
        assert_eq!(cfg.output.dir, PathBuf::from("elsewhere"));
        assert!(resolve_config("no-such-thing", &Overrides::default()).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with(["volfem", "checkmat", "stvk", "--states", "5"]), 0);
        assert_eq!(main_with(["volfem", "solve", "missing-preset"]), 1);
        assert_eq!(main_with(["volfem", "mms", "--levels", "1"]), 1);
    }
}
