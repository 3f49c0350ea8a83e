use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use num_complex::Complex64;
use polyaxial::grid::{Alpha, AxisRule, Field, TensorGrid};
use polyaxial::io::{read_field, write_field};
use serde_json::Value;

fn pax(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pax"))
        .args(args)
        .current_dir(dir)
        .env_remove("PAX_SEED")
        .output()
        .unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"
alpha = [0.5]
[grid]
radius = 10.0
nodes = 64
[function]
name = "gaussian"
t = 1.0
"#;

#[test]
fn verify_hpw_on_bundled_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    let o = pax(&["verify", "hpw", "--config", &cfg("gaussian_n1_a0.cfg"), "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    let ratio = v["certificates"][0]["ratio"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() < 1e-6, "{ratio}");
}

#[test]
fn admissibility_failure_reports_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "bad.cfg",
        &format!("{SMALL}\n[multiplier]\nprofile = \"gaussian_ray\"\nc = 1.0\np = 1.0\n"),
    );
    let o = pax(&["verify", "admissibility", "--config", &c, "--json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let dev = v["certificates"][0]["max_deviation"].as_f64().unwrap();
    assert!((dev - 0.75).abs() < 1e-5, "{dev}");
    assert_eq!(v["certificates"][0]["admissible"], false);
}

#[test]
fn missing_sections_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = pax(&["verify", "donoho-stark", "--config", &cfg("gaussian_n1_a0.cfg")], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("multiplier"));
    let c = write(dir.path(), "broken.cfg", "alpha = [0.0]\n[grid]\nradius = 'ten'\nnodes = 8\n");
    assert_eq!(pax(&["verify", "hpw", "--config", &c], dir.path()).status.code(), Some(2));
    assert_eq!(pax(&["verify", "hpw"], dir.path()).status.code(), Some(2));
    assert_eq!(pax(&["verify", "nonsense", "--config", &c], dir.path()).status.code(), Some(2));
}

#[test]
fn transform_round_trip_and_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let g = Arc::new(TensorGrid::uniform(Alpha::new(vec![0.5]).unwrap(), 10.0, 64, AxisRule::GaussJacobi).unwrap());
    let f = Field::from_real_fn(g.clone(), |x| (1.0 + x[0] * x[0]) * (-0.5 * x[0] * x[0]).exp());
    let input = dir.path().join("f.paxf");
    write_field(&input, &f).unwrap();
    for (src, dst) in [("f.paxf", "ff.paxf"), ("ff.paxf", "fff.paxf")] {
        let o = pax(&["transform", "--in", src, "--out", dst], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("plancherel_defect="));
    }
    let back = read_field(&dir.path().join("fff.paxf"), None).unwrap();
    assert!(back.max_abs_diff(&f).unwrap() < 1e-5);

    write_field(&dir.path().join("z.paxf"), &Field::zeros(g)).unwrap();
    let o = pax(&["transform", "--in", "z.paxf", "--out", "zz.paxf", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(read_field(&dir.path().join("zz.paxf"), None).unwrap().is_zero());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["plancherel_defect"].is_null());
}

#[test]
fn malformed_field_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.paxf"), b"PAXF\x01\x00").unwrap();
    assert_eq!(pax(&["transform", "--in", "junk.paxf"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("junk.csv"), "x1,re,im\n0.1,1,0\n").unwrap();
    let c = write(dir.path(), "small.cfg", SMALL);
    assert_eq!(pax(&["transform", "--config", &c, "--in", "junk.csv"], dir.path()).status.code(), Some(2));
    assert_eq!(pax(&["transform", "--in", "missing.paxf"], dir.path()).status.code(), Some(2));
}

#[test]
fn csv_output_and_input() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "small.cfg", SMALL);
    let o = pax(&["transform", "--config", &c, "--out", "ff.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("ff.csv")).unwrap();
    assert!(text.starts_with("x1,re,im\n"));
    assert_eq!(text.lines().count(), 65);
    let o = pax(&["transform", "--config", &c, "--in", "ff.csv", "--out", "back.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn field_operations() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "ops.cfg",
        &format!(
            "{SMALL}\n[multiplier]\nprofile = \"gaussian_ray\"\nc = 2.0\np = 1.0\n\
             [translation]\nx = [1.0]\n[apply]\nsigma = 0.5\nform = \"convolution\"\n\
             [convolve]\nname = \"gaussian\"\nt = 2.0\n"
        ),
    );
    for cmd in ["translate", "convolve", "multiplier-apply"] {
        let out = format!("{cmd}.paxf");
        let o = pax(&[cmd, "--config", &c, "--out", &out, "--threads", "2"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let f = read_field(&dir.path().join(&out), None).unwrap();
        assert!(!f.is_zero());
        assert!(f.values().iter().all(|v: &Complex64| v.is_finite()));
    }
    // translate without x
    let c2 = write(dir.path(), "nox.cfg", SMALL);
    assert_eq!(pax(&["translate", "--config", &c2], dir.path()).status.code(), Some(2));
}

#[test]
fn suite_exit_codes_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(pax(&["suite", empty.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let sab = configs().join("sabotaged");
    let out = dir.path().join("out");
    let o = pax(&["suite", sab.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("config,check,status,"));
    assert!(summary.lines().any(|l| l.starts_with("nonadmissible_hpw,hpw,fail")), "{summary}");
    let cert: Value = serde_json::from_slice(&std::fs::read(out.join("nonadmissible_hpw.hpw.json")).unwrap()).unwrap();
    assert_eq!(cert["certificates"][1]["refused"], true);

    let mixed = dir.path().join("mixed");
    std::fs::create_dir(&mixed).unwrap();
    write(&mixed, "ok.cfg", SMALL);
    write(&mixed, "bad.cfg", "alpha = [0.0]\n");
    let o = pax(&["suite", mixed.to_str().unwrap(), "--out", dir.path().join("o2").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_random_sets_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "ds.cfg",
        &format!(
            "{SMALL}\n[multiplier]\nprofile = \"gaussian_ray\"\nc = 2.0\np = 1.0\n\
             [sets]\ne_box = [[0.0, 2.0]]\ns_sigma = [1.0, 5.0]\n[verify]\nrandom_sets = 5\n"
        ),
    );
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_pax"))
            .args(["verify", "donoho-stark", "--config", &c, "--json"])
            .env("PAX_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let (a, b, other) = (run("7"), run("7"), run("8"));
    assert_eq!(a, b);
    assert_ne!(a, other);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["certificates"].as_array().unwrap().len(), 6);
    let o = Command::new(env!("CARGO_BIN_EXE_pax"))
        .args(["verify", "donoho-stark", "--config", &c])
        .env("PAX_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
