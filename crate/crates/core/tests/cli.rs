use std::process::Command;

fn volfem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_volfem"))
}

#[test]
fn exit_codes_follow_termination() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eq");
    let st = volfem().args(["solve", "equilibrium", "--out"]).arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.starts_with("t,pressure,volume,volume_drift,min_det,kinetic,strain,fp_iters,pressure_consistency\n"));

    let st = volfem().args(["solve", "crush", "--out"]).arg(dir.path().join("crush")).status().unwrap();
    assert!(matches!(st.code(), Some(2) | Some(3)));
}

#[test]
fn config_errors_exit_one_with_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "sim.kappa = -1\n").unwrap();
    let out = volfem().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sim.kappa must be > 0"));

    std::fs::write(&cfg, "sim.kapa = 1\n").unwrap();
    let out = volfem().arg("solve").arg(&cfg).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key 'sim.kapa'"));
}

#[test]
fn runs_are_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pulse.cfg");
    std::fs::write(
        &cfg,
        "mesh.nx = 6\nmesh.ny = 6\nsim.dt = 0.005\nsim.t_end = 0.05\nload.kind = beat\nload.amplitude = 0.4\nload.period = 0.1\n",
    )
    .unwrap();
    let mut csvs = Vec::new();
    for (k, threads) in ["1", "1", "4", "0"].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let st = volfem().env("SOLVER_THREADS", threads).arg("solve").arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert_eq!(st.code(), Some(0));
        csvs.push(std::fs::read(out.join("series.csv")).unwrap());
    }
    assert!(csvs.iter().all(|c| *c == csvs[0]));
}

#[test]
fn probes_and_checks_report_pass() {
    let out = volfem().args(["checkmat", "all", "--states", "50"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 9);

    let dir = tempfile::tempdir().unwrap();
    let out = volfem().args(["estlab", "lipschitz", "--T-list", "0.1,0.01,0.001,0.0001", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("lipschitz_stvk_force.csv")).unwrap();
    assert!(csv.starts_with("T,measured,fit_slope,r2\n"));

    let out = volfem().args(["estlab", "holder", "--T-list", "1,0.1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mms_prints_orders() {
    let out = volfem().args(["mms", "--levels", "2", "--t-end", "0.05"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("velocity orders"));
}
