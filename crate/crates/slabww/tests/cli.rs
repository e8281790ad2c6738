use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slabww"))
}

fn benchmark_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/azurv1_impulse.cfg")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env("RUST_LOG", "error").output().unwrap()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

fn small_cfg(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(benchmark_cfg()).unwrap().replace("histories = 100000", "histories = 4000");
    let p = dir.join("small.cfg");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn analog_benchmark_writes_twenty_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .args(["run", "azurv1_impulse.cfg", "--mode", "analog", "--seed", "1", "--out", out.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&out.join("flux.csv")), 20 * 201);
    let header = fs::read_to_string(out.join("flux.csv")).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "step,t,cell,x_center,value");
    assert!(!out.join("windows.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rho"], 2.5);
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["steps"].as_array().unwrap().len(), 20);
}

#[test]
fn window_modes_write_window_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path());
    let out = dir.path().join("cn");
    let o = run(&["run", cfg.to_str().unwrap(), "--mode", "ww-losm-cn", "--rho", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let windows = fs::read_to_string(out.join("windows.csv")).unwrap();
    assert!(windows.starts_with("step,t,cell,x_center,value,center_raw,center_modified,floor,ceiling\n"));
    for f in ["windows_midstep.csv", "aux.csv", "aux_midstep.csv", "f_midstep_filtered.csv"] {
        assert_eq!(data_rows(&out.join(f)), 20 * 201, "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rho"], 3.0);
    assert_eq!(manifest["config"]["weight_windows"]["rho"], 3.0);
}

#[test]
fn preset_name_and_rerun_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&[
            "run",
            "azurv1_impulse",
            "--mode",
            "ww-previous",
            "--histories",
            "3000",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["flux.csv", "sigma.csv", "particles.csv", "windows.csv", "f_raw.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let o = run(&["run", "azurv1_impulse", "--mode", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected one of analog"));
    assert_eq!(run(&["run", "azurv1_impulse", "--mode", "ww-reference"]).status.code(), Some(1));
    assert_eq!(run(&["run", "/nonexistent/config.cfg"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn invalid_config_values_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(benchmark_cfg()).unwrap().replace("rho = 2.5", "rho = 0.5");
    let p = dir.path().join("bad.cfg");
    fs::write(&p, text).unwrap();
    let o = run(&["run", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
}

#[test]
fn reference_roundtrip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path());
    let reference = dir.path().join("ref.csv");
    let o = run(&["reference", cfg.to_str().unwrap(), "--out", reference.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&reference), 21 * 201);

    let out = dir.path().join("wr");
    let o = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--mode",
        "ww-reference",
        "--reference",
        reference.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("windows.csv").exists());
    assert_eq!(data_rows(&out.join("relerr_census.csv")), 20 * 201);

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, "cell_index,x_center,phi\n0,0.0,1.0\n").unwrap();
    let o = run(&["run", cfg.to_str().unwrap(), "--mode", "ww-reference", "--reference", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`t`"));

    let truncated = dir.path().join("short.csv");
    let text = fs::read_to_string(&reference).unwrap();
    let keep: Vec<&str> = text.lines().take(1 + 10 * 201).collect();
    fs::write(&truncated, keep.join("\n") + "\n").unwrap();
    let o = run(&["run", cfg.to_str().unwrap(), "--mode", "ww-reference", "--reference", truncated.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path());
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["run", cfg.to_str().unwrap(), "--mode", "analog", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
