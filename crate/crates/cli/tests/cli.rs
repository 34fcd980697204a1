use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use killing_flow_cli::{load_config, parse_config, write_config, ScenarioConfig};
use proptest::prelude::*;
use tempfile::TempDir;

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("presets")
        .join(format!("{name}.toml"))
}

fn kgflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgflow"))
        .args(args)
        .env("KGFLOW_LOG", "error")
        .output()
        .expect("binary runs")
}

fn run_preset(cmd: &str, name: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = preset(name);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    kgflow(&args)
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

fn report(out: &Path) -> toml::Value {
    fs::read_to_string(out.join("report.toml")).unwrap().parse().unwrap()
}

#[test]
fn presets_load_with_expected_contact_data() {
    let s = load_config(&preset("grim_reaper")).unwrap().resolve().unwrap();
    assert!((s.phi0 - 1f64.sin()).abs() < 1e-15);
    for name in ["helicoid", "orthogonal_relax", "exp_warp_1d"] {
        let s = load_config(&preset(name)).unwrap().resolve().unwrap();
        assert!(s.phi0 < 1.0);
    }
}

#[test]
fn flow_relaxes_orthogonal_bump() {
    let tmp = TempDir::new().unwrap();
    let out = run_preset("flow", "orthogonal_relax", tmp.path(), &["--resolution", "17"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert_eq!(r["stop_reason"].as_str(), Some("steady"));
    let series = fs::read_to_string(tmp.path().join("series.csv")).unwrap();
    assert!(series.starts_with("t,max_ut,max_W,min_W,energy,dissipation_residual\n"));
    assert!(!series.contains('\r'));
    let e = csv_column(&series, "energy");
    assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let t = csv_column(&series, "t");
    assert!(t.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn flow_outputs_are_listed_and_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let extra = ["--resolution", "33", "--dt", "0.01"];
    for dir in [&a, &b] {
        let out = run_preset("flow", "grim_reaper", dir.path(), &extra);
        assert_eq!(out.status.code(), Some(0));
    }
    let manifest = report(a.path())["manifest"].as_array().unwrap().clone();
    assert!(!manifest.is_empty());
    for entry in &manifest {
        let name = Path::new(entry.as_str().unwrap()).file_name().unwrap().to_owned();
        let pa = a.path().join(&name);
        let bytes = fs::read(&pa).unwrap();
        assert!(!bytes.is_empty(), "{}", pa.display());
        assert_eq!(bytes, fs::read(b.path().join(&name)).unwrap(), "{}", pa.display());
    }
}

#[test]
fn grim_reaper_snapshot_starts_at_the_profile() {
    let tmp = TempDir::new().unwrap();
    let out = run_preset(
        "flow",
        "grim_reaper",
        tmp.path(),
        &["--resolution", "33", "--dt", "0.01"],
    );
    assert_eq!(out.status.code(), Some(0));
    let first = fs::read_to_string(tmp.path().join("snapshot_00000.csv")).unwrap();
    let mut lines = first.lines();
    assert_eq!(lines.next(), Some("x1,u"));
    assert!(lines.any(|l| l == "0,0"));
}

#[test]
fn soliton_recovers_unit_speed() {
    let tmp = TempDir::new().unwrap();
    let out = run_preset("soliton", "grim_reaper", tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let speed = fs::read_to_string(tmp.path().join("speed.csv")).unwrap();
    let c = csv_column(&speed, "speed")[0];
    assert!((c - 1.0).abs() < 1e-2, "{c}");
    let v = fs::read_to_string(tmp.path().join("soliton.csv")).unwrap();
    assert!(v.starts_with("x1,u\n"));
}

#[test]
fn speed_reports_the_bound() {
    let tmp = TempDir::new().unwrap();
    let out = run_preset("speed", "helicoid", tmp.path(), &["--resolution", "17"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("speed.csv")).unwrap();
    assert!(csv_column(&text, "speed")[0].abs() < 1e-2);
}

#[test]
fn verify_passes_on_every_preset() {
    for (name, n) in [
        ("grim_reaper", "65"),
        ("helicoid", "17"),
        ("orthogonal_relax", "17"),
        ("exp_warp_1d", "33"),
    ] {
        let tmp = TempDir::new().unwrap();
        let out = run_preset("verify", name, tmp.path(), &["--resolution", n]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        assert!(tmp.path().join("verify.csv").exists());
    }
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.toml");
    let out = kgflow(&["flow", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let text = fs::read_to_string(preset("grim_reaper"))
        .unwrap()
        .replace("sin(1)", "1");
    let cfg = write_scenario(tmp.path(), &text);
    let out = kgflow(&["flow", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.phi"));

    let cfg = write_scenario(tmp.path(), "[geometry]\nkind = \"euclidean\"\n[domain\n");
    let out = kgflow(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn non_convergence_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(preset("grim_reaper")).unwrap();
    let text = text.replace("[run]", "[run]\nmax_iter = 1\ntol = 1e-15");
    let cfg = write_scenario(tmp.path(), &text);
    let out_dir = tmp.path().join("out");
    let out = kgflow(&[
        "soliton",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out_dir.join("residual_history.csv").exists());
}

#[test]
fn divergence_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let text = r#"
[geometry]
kind = "euclidean"

[domain]
lo = [0.0]
hi = [1.0]
resolution = [33]

[problem]
u0 = "0.5*sin(7*x1)"

[run]
scheme = "explicit"
auto_cfl = false
dt = 0.05
t_end = 50.0
"#;
    let cfg = write_scenario(tmp.path(), text);
    let out_dir = tmp.path().join("out");
    let out = kgflow(&[
        "flow",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_subcommand_is_rejected() {
    let out = kgflow(&["bogus", "--config", "x.toml"]);
    assert_ne!(out.status.code(), Some(0));
}

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        8usize..200,
        1e-5..1e-1f64,
        0.1..10.0f64,
        -0.9..0.9f64,
        prop::sample::select(vec!["x1", "sin(x1)", "-log(cos(x1))", "x1^2/2 - 0.1"]),
    )
        .prop_map(|(n, dt, t_end, phi, u0)| {
            let text = format!(
                "[geometry]\nkind = \"euclidean\"\n[domain]\nlo = [-1.0]\nhi = [1.0]\nresolution = [{n}]\n\
                 [problem]\nu0 = \"{u0}\"\nphi = \"{phi:?}\"\n[run]\ndt = {dt:?}\nt_end = {t_end:?}\n"
            );
            parse_config(&text).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_round_trips(cfg in arb_config()) {
        let tmp = TempDir::new().unwrap();
        let path = tmp.path().join("c.toml");
        std::fs::write(&path, write_config(&cfg)).unwrap();
        prop_assert_eq!(load_config(&path).unwrap(), cfg);
    }
}
