use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hamclosure"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check `{name}`"))
}

#[test]
fn burby_levels_one_to_six_pass() {
    let o = run(&["verify", "--family", "burby", "--levels", "1..6", "--json"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let r = json(&o);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["passed"], true);
    let checks = r["checks"].as_array().unwrap();
    // alpha and beta cells: sum over m of m^2 (m + 1)
    let cells = checks.iter().filter(|c| c["group"].as_str().unwrap().ends_with("flatness")).count();
    assert_eq!(cells, (1..=6).map(|m| m * m * (m + 1)).sum::<usize>());
    assert!(r["inputs_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn waterbag_passes_with_gamma_identity() {
    let o = run(&["verify", "--family", "waterbag", "--heights", "1,1,-2", "--json"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let r = json(&o);
    let g = check(&r, "gamma");
    assert_eq!(g["passed"], true);
    assert!(g["detail"].as_str().unwrap().contains("waterbag(Lambda=1/4)"), "{g}");
}

#[test]
fn degenerate_waterbag_is_an_input_error() {
    let o = run(&["verify", "--family", "waterbag", "--heights", "1,-1,1,-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma_2"), "{}", stderr(&o));
}

#[test]
fn generic_with_mismatched_metric_fails_with_residuals() {
    let o = run(&[
        "verify", "--family", "generic", "--mu2", "nu2*nu3^2", "--metric", "1,0,0;0,1,0;0,0,1", "--json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert_eq!(r["passed"], false);
    let failed: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert_eq!(failed.len(), 7);
    assert!(failed.iter().all(|c| c["residual"].as_str().is_some_and(|s| s.contains("nu"))));

    // the same mu2 with its own metric is a Burby level
    let o = run(&["verify", "--family", "generic", "--mu2", "nu2*nu3^2", "--metric", "0,0,1;0,1,0;1,0,0"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn foreign_flags_are_rejected() {
    let o = run(&["verify", "--family", "burby", "--level", "2", "--kappa", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kappa"));
}

#[test]
fn show_burby_level_three() {
    let o = run(&["closure", "show", "--family", "burby", "--level", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for line in ["mu1 = 1 * nu1*nu3 + 1/2 * nu2^2", "mu2 = 1 * nu2*nu3^2", "mu3 = 1/4 * nu3^4", "mu4 = 0"] {
        assert!(out.lines().any(|l| l == line), "missing `{line}` in\n{out}");
    }
}

#[test]
fn show_fourfield_kappa_zero() {
    let o = run(&["closure", "show", "--family", "fourfield", "--kappa", "0", "--json"]);
    assert!(o.status.success());
    let r = json(&o);
    let mu: Vec<&str> = r["values"]["mu"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(mu[1], "1 * Gamma2^3");
    assert!(mu[2..].iter().all(|m| *m == "0"));
}

#[test]
fn casimir_inversions_round_trip() {
    for branch in ["plus", "minus"] {
        let o = run(&["closure", "casimir", "--family", "burby", "--level", "4", "--branch", branch, "--json"]);
        assert!(o.status.success(), "{}", stdout(&o));
        let r = json(&o);
        assert_eq!(r["values"]["casimirs"].as_array().unwrap().len(), 6);
        assert_eq!(r["checks"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn equation_of_state_burby_level_two() {
    let o = run(&["closure", "eos", "--family", "burby", "--level", "2", "--mu", "0.5,0.2", "--json"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let r = json(&o);
    let nu: Vec<f64> = r["values"]["nu"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    // mu_1 = nu1 nu2, mu_2 = nu2^3 / 3
    let nu2 = 0.6f64.cbrt();
    assert!((nu[1] - nu2).abs() < 1e-14);
    assert!((nu[0] - 0.5 / nu2).abs() < 1e-14);
    let closed = r["values"]["closure_moments"].as_array().unwrap();
    assert!(closed.iter().all(|v| v.as_f64().unwrap() == 0.0));
}

#[test]
fn langmuir_frequency_within_one_percent() {
    let dir = TempDir::new().unwrap();
    let o = bin()
        .args(["simulate", "--json", "--config"])
        .arg(config("langmuir.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    let r = json(&o);
    let w = r["values"]["frequency"].as_f64().unwrap();
    assert!((w - 1.0).abs() < 0.01, "omega = {w}");
    let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,H,C_mass,C_psi,momentum,field_energy");
    let snap = fs::read_to_string(dir.path().join("snapshots/step_00002000.txt")).unwrap();
    assert!(snap.starts_with("# hamclosure snapshot\n# format 1\n# nx 64\n# N 2\n# t 2.00000000000000000e1\n"));
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk["inputs_digest"], r["inputs_digest"]);
}

#[test]
fn multidelta_casimirs_conserved() {
    let dir = TempDir::new().unwrap();
    let o = bin()
        .args(["simulate", "--json", "--config"])
        .arg(config("multidelta2.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    let r = json(&o);
    for k in ["H", "C_mass", "C_psi", "C_1", "C_2", "momentum"] {
        let d = r["drifts"][k].as_f64().unwrap();
        assert!(d < 1e-6, "{k}: {d}");
    }
    let header = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(header.starts_with("t,H,C_mass,C_psi,C_1,C_2,momentum,field_energy\n"));
}

#[test]
fn huge_time_step_warns_and_fails() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(config("langmuir.toml")).unwrap().replace("dt = 0.01", "dt = 50.0").replace("t_end = 20.0", "t_end = 500.0");
    let cfg = write(dir.path(), "huge.toml", &text);
    let o = bin().args(["simulate", "--json", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("out")).output().unwrap();
    assert_ne!(o.status.code(), Some(0));
    let r = json(&o);
    assert!(r["warnings"][0].as_str().unwrap().contains("CFL"), "{r}");
    assert_eq!(check(&r, "time step")["passed"], false);
    assert_eq!(check(&r, "completed")["passed"], false);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let mut csv = vec![];
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = bin().args(["simulate", "--config"]).arg(config("multidelta2.toml")).arg("--out").arg(&out).output().unwrap();
        assert!(o.status.success());
        csv.push((
            fs::read(out.join("diagnostics.csv")).unwrap(),
            fs::read(out.join("snapshots/step_00000200.txt")).unwrap(),
        ));
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let dir = TempDir::new().unwrap();
    let mut csv = vec![];
    for flag in [None, Some("--sequential")] {
        let out = dir.path().join(format!("{flag:?}"));
        let mut cmd = bin();
        cmd.args(flag).args(["simulate", "--config"]).arg(config("multidelta2.toml")).arg("--out").arg(&out);
        assert!(cmd.output().unwrap().status.success());
        csv.push(fs::read(out.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(config("langmuir.toml")).unwrap().replace("nx = 64", "nx = 64\ncells = 3");
    let cfg = write(dir.path(), "bad.toml", &text);
    let o = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cells"), "{}", stderr(&o));
}

fn compare(fluid: &Path, streams: &Path, out: &Path) -> Output {
    bin()
        .args(["compare", "--json", "--fluid"])
        .arg(fluid)
        .arg("--streams")
        .arg(streams)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn matched_two_stream_data_agrees() {
    let dir = TempDir::new().unwrap();
    let o = compare(&config("two_stream_fluid.toml"), &config("two_stream_kinetic.toml"), dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let r = json(&o);
    for n in 0..4 {
        assert!(r["drifts"][format!("P{n}")].as_f64().unwrap() < 1e-6);
    }
    assert_eq!(r["values"]["window_end"].as_f64().unwrap(), 1.0);
    assert!(dir.path().join("compare.csv").exists());
}

#[test]
fn mismatched_background_density_fails_immediately() {
    let dir = TempDir::new().unwrap();
    let fluid = fs::read_to_string(config("two_stream_fluid.toml")).unwrap() + "\n[initial]\nn0 = 1.0\nnu = [0.1, 1.0]\n";
    let fluid = write(dir.path(), "fluid.toml", &fluid);
    let kin = fs::read_to_string(config("two_stream_kinetic.toml")).unwrap().replace("n0 = 1.0", "n0 = 1.5");
    let kin = write(dir.path(), "kin.toml", &kin);
    let o = compare(&fluid, &kin, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n0"), "{}", stderr(&o));
    assert!(!dir.path().join("out/compare.csv").exists());
}

const ONE_BEAM: &str = r#"
[grid]
length = "2pi"
nx = 64
[integrator]
dt = 0.01
t_end = 4.0
breaking_slope = -5.0
"#;

#[test]
fn single_stream_matches_cold_fluid_exactly() {
    let dir = TempDir::new().unwrap();
    let kin = ONE_BEAM.replace("t_end = 4.0", "t_end = 2.0")
        + "[streams]\nn0 = 1.0\nfractions = [1.0]\nvelocities = [0.3]\n[[streams.perturbation]]\nstream = 1\nfield = \"density\"\namplitude = 0.05\n";
    let fluid = ONE_BEAM.replace("t_end = 4.0", "t_end = 2.0")
        + "[closure]\nfamily = \"cold\"\n[initial]\nn0 = 1.0\nu = 0.3\n[[initial.perturbation]]\nfield = \"density\"\namplitude = 0.05\n";
    let o = compare(&write(dir.path(), "f.toml", &fluid), &write(dir.path(), "k.toml", &kin), dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let r = json(&o);
    for n in 0..4 {
        assert_eq!(r["drifts"][format!("P{n}")].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn wave_breaking_truncates_the_window() {
    let dir = TempDir::new().unwrap();
    let kin = ONE_BEAM.to_string()
        + "[streams]\nn0 = 1.0\nfractions = [1.0]\nvelocities = [0.3]\n[[streams.perturbation]]\nstream = 1\nfield = \"velocity\"\namplitude = 1.2\n";
    let fluid = ONE_BEAM.to_string()
        + "[closure]\nfamily = \"cold\"\n[initial]\nn0 = 1.0\nu = 0.3\n[[initial.perturbation]]\nfield = \"velocity\"\namplitude = 1.2\n";
    let o = compare(&write(dir.path(), "f.toml", &fluid), &write(dir.path(), "k.toml", &kin), dir.path());
    let r = json(&o);
    let end = r["values"]["window_end"].as_f64().unwrap();
    assert!(end > 0.1 && end < 4.0, "window end {end}");
    assert!(r["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("wave breaking")));
    assert!(o.status.success(), "{}", stdout(&o));
}
