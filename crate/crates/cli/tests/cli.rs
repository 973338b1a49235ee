use std::path::Path;
use std::process::{Command, Output};

fn mellg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mellg"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "\
[mesh]
kind = box
lengths = 2, 2, 2
divisions = 2, 2, 2
dirichlet = z_min
neumann = z_max

[physical]
length_scale_m = 3e-9
applied_field_a_per_m = 0, 1000, 0
traction_n_per_m2 = 0, 100, 0
gravity = true

[time]
theta = 0.7
time_step_s = 1e-13
final_time_s = 5e-13

[initial]
kind = hot
seed = 5

[output]
dir = results
name = small
";

#[test]
fn verify_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mellg(&["verify"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 9, "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn run_writes_one_row_per_step() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("small.ini"), SMALL).unwrap();
    let out = mellg(&["run", "small.ini"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("small: 5 steps"), "{}", stdout(&out));
    let csv = std::fs::read_to_string(tmp.path().join("results/small.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(csv.starts_with("t,x_mag_avg,"));
}

#[test]
fn run_honours_overrides_and_step_limit() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("small.ini"), SMALL).unwrap();
    let out = mellg(
        &["run", "small.ini", "--set", "output.name=other", "--set", "output.snapshot_stride=1", "--steps", "2"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(tmp.path().join("results/other.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(tmp.path().join("results/other_000002.vtk").exists());
}

#[test]
fn missing_config_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mellg(&["run", "missing.ini"], tmp.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("missing.ini"), "{}", stderr(&out));
}

#[test]
fn bad_config_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.ini"), SMALL.replace("seed = 5", "seed = 5\ncolour = red")).unwrap();
    let out = mellg(&["run", "bad.ini"], tmp.path());
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("colour") && err.contains("line"), "{err}");
}

#[test]
fn bad_override_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("small.ini"), SMALL).unwrap();
    let out = mellg(&["run", "small.ini", "--set", "time.theta"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn unknown_preset_and_subcommand_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mellg(&["preset", "nope"], tmp.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("applied_field"), "{}", stderr(&out));
    let out = mellg(&["frobnicate"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn preset_dump_writes_loadable_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mellg(&["preset", "theta_sweep", "--dump", "--out", "dump"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let files: Vec<_> = std::fs::read_dir(tmp.path().join("dump")).unwrap().collect();
    assert_eq!(files.len(), 7);
    let first = stdout(&out).lines().next().unwrap().to_string();
    let info = mellg(&["mesh-info", &first], tmp.path());
    assert!(info.status.success(), "{}", stderr(&info));
    assert!(stdout(&info).contains("nodes: 27"), "{}", stdout(&info));
}

#[test]
fn preset_runs_with_step_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mellg(
        &["preset", "constraint_sweep", "mesh.divisions=1,1,1", "--steps", "2", "--out", "cs"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csvs = std::fs::read_dir(tmp.path().join("cs"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 4);
    assert_eq!(stdout(&out).lines().filter(|l| l.contains(": 2 steps")).count(), 4);
}

#[test]
fn mesh_info_reads_msh() {
    let tmp = tempfile::tempdir().unwrap();
    let msh = "\
$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
2
1 2 2 1 1 1 2 3
2 4 2 10 10 1 2 3 4
$EndElements
";
    std::fs::write(tmp.path().join("tet.msh"), msh).unwrap();
    let out = mellg(&["mesh-info", "tet.msh"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("nodes: 4") && text.contains("tets: 1"), "{text}");
    assert!(text.contains("dirichlet: 1 faces, area 5.000000e-1"), "{text}");
}

#[test]
fn thread_count_must_be_positive() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mellg"))
        .arg("verify")
        .current_dir(tmp.path())
        .env("MELLG_THREADS", "0")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("MELLG_THREADS"));
    let out = Command::new(env!("CARGO_BIN_EXE_mellg"))
        .arg("verify")
        .current_dir(tmp.path())
        .env("MELLG_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}
