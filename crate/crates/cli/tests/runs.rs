use std::fs;
use std::path::Path;
use std::process::Command as Process;

use rwrange_lab::{run, verify, Command, ExperimentConfig};

fn config(command: Command, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(command);
    cfg.output_dir = Some(dir.to_path_buf());
    cfg.seed = 5;
    cfg
}

fn small(command: Command, dir: &Path) -> ExperimentConfig {
    let mut cfg = config(command, dir);
    match command {
        Command::Simulate => {
            cfg.n = Some(64);
            cfg.samples = Some(10);
        }
        Command::Tails => {
            cfg.d = 5;
            cfg.n = Some(128);
            cfg.samples = Some(1500);
            cfg.chunk = 400;
        }
        Command::Variance => {
            cfg.d = 6;
            cfg.n_grid = Some(vec![64, 128]);
            cfg.samples = Some(500);
        }
        Command::Clt => {
            cfg.n = Some(128);
            cfg.samples = Some(1000);
        }
        Command::Decompose => {
            cfg.kind = rwrange_core::ObservableKind::EffectiveResistance;
            cfg.n = Some(128);
            cfg.samples = Some(40);
            cfg.levels = 3;
        }
        Command::Capacity => {
            cfg.d = 4;
            cfg.n = Some(300);
            cfg.samples = Some(2);
            cfg.trials_per_point = 3;
            cfg.chunk = 1;
        }
        Command::OracleCheck => {
            cfg.max_n = 64;
            cfg.instances = 20;
        }
    }
    cfg
}

const ALL: [Command; 7] = [
    Command::Simulate,
    Command::Tails,
    Command::Variance,
    Command::Clt,
    Command::Decompose,
    Command::Capacity,
    Command::OracleCheck,
];

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn every_command_writes_versioned_csv_and_manifest() {
    for command in ALL {
        let tmp = tempfile::tempdir().unwrap();
        let out = run(&small(command, tmp.path())).unwrap();
        assert!(out.ok, "{command}: {}", out.summary);
        assert!(out.manifest.complete);
        let files = csv_files(tmp.path());
        assert!(!files.is_empty(), "{command}");
        for (name, bytes) in files {
            let text = String::from_utf8(bytes).unwrap();
            let first = text.lines().next().unwrap();
            assert!(first.starts_with("# rwrange-lab v0.1.0 schema="), "{name}: {first}");
            assert!(out.manifest.files.contains_key(&name));
        }
        assert!(verify(tmp.path()).unwrap().is_empty());
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    for command in ALL {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let mut one = small(command, a.path());
        one.threads = Some(1);
        let mut many = small(command, b.path());
        many.threads = Some(4);
        many.chunk = 7;
        run(&one).unwrap();
        run(&many).unwrap();
        assert_eq!(csv_files(a.path()), csv_files(b.path()), "{command}");
    }
}

#[test]
fn interrupted_runs_resume_to_identical_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(Command::Tails, tmp.path());
    let first = run(&cfg).unwrap();
    let reference = csv_files(tmp.path());

    // lose one chunk and the final outputs, as if interrupted
    let chunk = first.manifest.files.keys().find(|k| k.starts_with("chunks/")).unwrap().clone();
    fs::remove_file(tmp.path().join(&chunk)).unwrap();
    fs::remove_file(tmp.path().join("samples.csv")).unwrap();
    let again = run(&cfg).unwrap();
    assert_eq!(csv_files(tmp.path()), reference);
    assert_eq!(again.manifest.completed, first.manifest.completed);
}

#[test]
fn verify_detects_edits() {
    let tmp = tempfile::tempdir().unwrap();
    run(&small(Command::Clt, tmp.path())).unwrap();
    let path = tmp.path().join("clt.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push('\n');
    fs::write(&path, text).unwrap();
    assert_eq!(verify(tmp.path()).unwrap(), vec!["clt.csv".to_string()]);
}

#[test]
fn capacity_summary_reports_radius_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&small(Command::Capacity, tmp.path())).unwrap();
    let drift = out.summary["radius_drift"].as_f64().unwrap();
    assert!((0.0..0.5).contains(&drift), "{}", out.summary);
    let text = fs::read_to_string(tmp.path().join("capacity.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "d,set_size,radius_factor,trials,estimate,std_error");
    assert_eq!(text.lines().count(), 2 + 2 * 2);
}

#[test]
fn decomposition_identity_holds_in_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&small(Command::Decompose, tmp.path())).unwrap();
    assert_eq!(out.summary["identity_violations"], 0);
    let text = fs::read_to_string(tmp.path().join("decomposition.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "kind,d,n,k,l,value,seed,stream");
    assert_eq!(text.lines().count(), 2 + 40 * 7);
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_rwrange-lab"))
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let status = binary().args(["tails", "--d", "7", "--n", "64", "--samples", "10"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let out = binary()
        .args(["oracle-check", "--max-n", "32", "--instances", "5", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["cut_mismatches"], 0);

    assert!(binary().arg("verify").arg(tmp.path()).status().unwrap().success());
    fs::write(tmp.path().join("oracle_check.csv"), "edited").unwrap();
    assert_eq!(binary().arg("verify").arg(tmp.path()).status().unwrap().code(), Some(1));
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let status = binary()
        .env("RWRANGE_OUT", tmp.path())
        .args(["simulate", "--d", "4", "--n", "16", "--samples", "3"])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(tmp.path().join("walks.bin").exists());
    assert!(tmp.path().join("manifest.json").exists());
}
