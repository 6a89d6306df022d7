use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nads(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nads"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NADS_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_grischkowsky() {
    let dir = tempfile::tempdir().unwrap();
    let o = nads(&["check", "--scenario", "grischkowsky", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("frequency form") && text.contains("-> ok"));
    let first = text.lines().nth(1).unwrap();
    assert!(first.trim_start().starts_with("0   0") && first.ends_with("ok"), "{first}");
    let csv = fs::read_to_string(dir.path().join("out/adiabaticity.csv")).unwrap();
    assert!(csv.starts_with("n,k,worst_ratio,worst_time,satisfied\n0,0,"));
    assert_eq!(csv.lines().count(), 1 + 14);
    assert!(csv.lines().nth(1).unwrap().ends_with(",true"));
}

#[test]
fn check_honours_n_max() {
    let dir = tempfile::tempdir().unwrap();
    let o = nads(&["check", "--scenario", "grischkowsky", "--n-max", "1", "--out", "o"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("o/adiabaticity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
}

#[test]
fn simulate_zero_field_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = nads(&["simulate", "--scenario", "zero-field", "--out", "sim"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let pops = fs::read_to_string(dir.path().join("sim/populations.csv")).unwrap();
    let mut lines = pops.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,p_g,p_e,p_G_real,p_G_virtual,p_E_real,p_E_virtual,intensity,integrated_intensity"
    );
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((v[1] - 1.0).abs() < 1e-12 && v[2].abs() < 1e-12, "{line}");
        assert!((v[3] - 1.0).abs() < 1e-12 && v[4] == 0.0 && v[5] == 0.0 && v[6] == 0.0);
        rows += 1;
    }
    assert_eq!(rows, 501);
    let traj = fs::read_to_string(dir.path().join("sim/trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,re_cg,im_cg,re_ce,im_ce\n"));
    assert!(dir.path().join("sim/summary.txt").is_file());
}

#[test]
fn simulate_scenario_file_in_full_field_mode() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("weak.nads");
    fs::write(
        &file,
        "[system]\nomega_e = 3.0\n[pulse]\nshape = gaussian\npeak_rabi = 0.05\nduration = 20\ncarrier = 2.5\n\
         [grid]\nt_start = -60\nt_end = 60\nsteps = 241\n",
    )
    .unwrap();
    for mode in ["rotating-frame", "full-field"] {
        let out = format!("sim-{mode}");
        let o = nads(&["simulate", "--scenario", file.to_str().unwrap(), "--mode", mode, "--out", &out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains(mode));
    }
}

#[test]
fn dressed_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = nads(&["dressed", "--scenario", "grischkowsky", "--out", "d"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let q = fs::read_to_string(dir.path().join("d/nads_quantities.csv")).unwrap();
    assert_eq!(q.lines().count(), 4002);
    let c = fs::read_to_string(dir.path().join("d/nads_components.csv")).unwrap();
    assert!(c.starts_with("t,re_G_real,im_G_real,re_G_virtual"));
}

#[test]
fn collapse_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["collapse", "--scenario", "grischkowsky", "--trajectories", "10000", "--seed", "42", "--out", out];
    let a = nads(&args("a"), dir.path());
    let b = nads(&args("b"), dir.path());
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    let (ea, eb) = (
        fs::read(dir.path().join("a/ensemble.csv")).unwrap(),
        fs::read(dir.path().join("b/ensemble.csv")).unwrap(),
    );
    assert_eq!(ea, eb);
    assert_eq!(String::from_utf8(ea).unwrap().lines().count(), 10_001);
    assert!(stdout(&a).contains("pointer correlation: 1.000000"));
    assert!(dir.path().join("a/dwell_histogram.csv").is_file());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nads"))
        .args(["check", "--scenario", "grischkowsky"])
        .current_dir(dir.path())
        .env("NADS_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env/adiabaticity.csv").is_file());
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "t,a,b\n0,1,2\n1,2,3\n2,1.5,0.5\n").unwrap();
    let o = nads(&["plot", "--input", "d.csv", "--columns", "a,b", "--out", "p.svg"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("p.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 2);

    let o = nads(&["plot", "--input", "d.csv", "--columns", "missing", "--out", "q.svg"], dir.path());
    assert!(!o.status.success());
    assert!(!dir.path().join("q.svg").exists());
}

#[test]
fn failures_are_one_line_and_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.nads");
    fs::write(&bad, "[system]\nomega_e = 1\n[pulse]\nshape = gaussian\npeak_rabi = 1\nduration = 1\ncarrier = 0.5\n[grid]\nt_start = 0\nt_end = 1\nsteps = 1\n").unwrap();
    let o = nads(&["check", "--scenario", bad.to_str().unwrap(), "--out", "never"], dir.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("grid.steps"));
    assert!(!dir.path().join("never").exists());

    let o = nads(&["collapse", "--scenario", "zero-field", "--out", "none"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("[mc]"));
    assert!(!dir.path().join("none").exists());

    let o = nads(&["simulate", "--scenario", "no-such-scenario", "--out", "x"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error: "));
}
