use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_classical-dj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tables_check_against_builtin_golden() {
    let o = run(&["tables", "--check"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains(
        "64 cells verified (n1-basis: 8, n1-algorithm: 8, n2-basis: 32, n2-algorithm: 16)"
    ));
}

#[test]
fn tables_only_filter() {
    let o = run(&["tables", "--only", "n1-basis"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("== n1-basis"));
    assert_eq!(text.matches("== ").count(), 1);
    assert!(text.contains("1 0 | (-1,0) I_135 | (0,1) I_45"));
}

#[test]
fn corrupted_golden_reports_first_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tables.txt");
    let golden = include_str!("../golden/tables.txt");
    fs::write(&path, golden.replacen("(-1,-1) I_-x", "(-1,-1) I_x", 1)).unwrap();
    let o = run(&["tables", "--check", "--golden", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(
        err.contains("golden mismatch in table n1-algorithm, row 4"),
        "{err}"
    );
    assert!(err.contains("C_f"), "{err}");
}

#[test]
fn run_reports_recovered_function() {
    let o = run(&["run", "--n", "2", "--f", "0101", "--mode", "realistic"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("verdict: balanced"));
    assert!(text.contains("recovered: f_0101"));
    assert!(text.contains("I_-y"));
}

#[test]
fn run_json_is_one_document() {
    let o = run(&["run", "--params", "1,0,1", "--mode", "ideal", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["recovered"], "1001");
    assert_eq!(v["verdict"], "balanced");
    assert_eq!(v["species"][1]["direction"], "I_-y");
}

#[test]
fn promise_violation_is_a_usage_error() {
    let o = run(&["run", "--n", "2", "--f", "0001", "--mode", "quantum"]);
    assert_ne!(code(&o), 0);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("promise"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# two-bit run\nf = 0000\nmode = realistic\n").unwrap();
    let cfg = path.to_str().unwrap();
    let o = run(&["run", "--config", cfg]);
    assert!(stdout(&o).contains("verdict: constant"));
    let o = run(&["run", "--config", cfg, "--f", "1010"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("recovered: f_1010"));
    fs::write(&path, "f = 0000\nnpoints = many\n").unwrap();
    let o = run(&["run", "--config", cfg]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("npoints"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["run"])), 1);
    assert_eq!(code(&run(&["run", "--f", "01", "--params", "0,1"])), 1);
    assert_eq!(code(&run(&["run", "--f", "0101", "--offsets", "0"])), 1);
    assert_eq!(code(&run(&["spectrum", "--f", "01", "--out", ""])), 1);
    assert_eq!(
        code(&run(&[
            "spectrum", "--f", "01", "--mode", "quantum", "--out", "x"
        ])),
        1
    );
}

#[test]
fn sabotaged_precession_is_detected() {
    let o = run(&[
        "run",
        "--f",
        "0101",
        "--mode",
        "realistic",
        "--sabotage-precession",
    ]);
    assert_eq!(code(&o), 2);
    let o = run(&["crosscheck", "--sabotage-precession"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("FAIL n=2 f_0101 realistic"));
}

#[test]
fn crosscheck_passes() {
    let o = run(&["crosscheck"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("crosscheck: 58/58 passed"));
}

fn spectrum_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn spectrum_output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&[
            "spectrum",
            "--f",
            "1001",
            "--basis",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let fa = spectrum_files(a.path());
    assert_eq!(fa, spectrum_files(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"fid.csv"));
    assert!(names.contains(&"spectrum.csv"));
    assert!(names.contains(&"basis_10-01_spectrum.csv"));
    assert_eq!(names.len(), 3 + 8);

    let spectrum = fs::read_to_string(a.path().join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("freq_hz,real,imag,magnitude,phase_deg\n"));
    assert_eq!(spectrum.lines().count(), 4001);
    let fid = fs::read_to_string(a.path().join("fid.csv")).unwrap();
    assert!(fid.starts_with("t_s,real,imag\n"));
}

#[test]
fn realistic_sequence_file_matches_golden() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&[
        "spectrum",
        "--f",
        "0101",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let seq = fs::read_to_string(d.path().join("sequence.txt")).unwrap();
    assert_eq!(seq, include_str!("../golden/sequence_f0101_realistic.txt"));
}
