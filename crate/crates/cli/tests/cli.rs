use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn juggernaut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_juggernaut")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn crash_run_passes_and_decides_by_c1() {
    let o = juggernaut(&["run", "--n", "5", "--t_s", "2", "--t_i", "1", "--strategy", "crash"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.matches("by C1").count(), 3, "{out}");
    assert!(!out.contains("fail "), "{out}");
}

#[test]
fn forgery_run_reports_c1_out_of_contract() {
    let o = juggernaut(&["run", "--n", "5", "--t-s", "2", "--t-i", "1", "--setting", "sabotaged", "--strategy", "forger"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for p in ["jug.agreement", "jug.validity", "jug.termination"] {
        assert!(out.contains(&format!("pass            {p}")), "{out}");
    }
    assert!(out.contains("out-of-contract jug.c1_only"), "{out}");
}

#[test]
fn bad_resilience_is_a_usage_error() {
    let o = juggernaut(&["run", "--t_s", "1", "--t_i", "2", "--n", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t_i"), "{}", stderr(&o));
}

#[test]
fn unknown_key_in_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.txt");
    fs::write(&file, "[scenario]\nn = 4\nt_s = 1\nt_i = 1\nspeed = 3\n").unwrap();
    let o = juggernaut(&["run", "-c", path(&file)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key `speed`"), "{}", stderr(&o));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.txt");
    fs::write(&file, "[scenario]\nprotocol = sync\nn = 4\nt_s = 1\nt_i = 1\n").unwrap();
    let o = juggernaut(&["run", "-c", path(&file), "--n", "5", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("sync n=5 t_s=1 t_i=1 authenticated adv=none seed=9"), "{}", stdout(&o));
}

#[test]
fn failure_exits_one_and_its_witness_reproduces_it() {
    let args = ["--protocol", "gc_sab_star", "--setting", "sabotaged", "--t_inner_sab", "2", "--inputs", "0,1,0,1"];
    let o = juggernaut(&[&["run"][..], &args, &["--strategy", "equivocate"]].concat());
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("fail            gc.termination"), "{out}");
    let witness = out.split("witness:\n").nth(1).expect("witness printed");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("witness.txt");
    fs::write(&file, witness).unwrap();
    let again = juggernaut(&["run", "-c", path(&file)]);
    assert_eq!(again.status.code(), Some(1));
    assert!(stdout(&again).contains("fail            gc.termination"));
    let replay = juggernaut(&["replay", path(&file)]);
    assert_eq!(replay.status.code(), Some(0));
    assert!(stdout(&replay).ends_with("identical\n"));
}

#[test]
fn recorded_transcript_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.txt");
    let transcript = dir.path().join("t.json");
    fs::write(
        &scenario,
        "[scenario]\nprotocol = juggernaut\nn = 4\nt_s = 1\nt_i = 1\nsetting = sabotaged\nseed = 11\n\
         inputs = random:2\nrecord = true\n[adversary]\nstrategy = random\n",
    )
    .unwrap();
    let run = juggernaut(&["run", "-c", path(&scenario), "--transcript", path(&transcript)]);
    assert_eq!(run.status.code(), Some(0));
    let replay = juggernaut(&["replay", path(&scenario), "--transcript", path(&transcript)]);
    assert_eq!(replay.status.code(), Some(0), "{}", stdout(&replay));

    // Another seed gives another transcript.
    let other = juggernaut(&["run", "-c", path(&scenario), "--seed", "12", "--transcript", path(&transcript)]);
    assert_eq!(other.status.code(), Some(0));
    let replay = juggernaut(&["replay", path(&scenario), "--transcript", path(&transcript)]);
    assert_eq!(replay.status.code(), Some(1));
    assert!(stdout(&replay).contains("diverged"));
}

#[test]
fn metrics_files_are_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let o = juggernaut(&["run", "--metrics", path(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# juggernaut-metrics v1");
    assert_eq!(lines.len(), 3);
    let header: Vec<&str> = lines[1].split(',').collect();
    let row: Vec<&str> = lines[2].split(',').collect();
    let ba_sab = header.iter().position(|h| *h == "bytes_ba_sab").unwrap();
    assert_eq!(row[ba_sab], "0");

    let json = dir.path().join("m.json");
    let o = juggernaut(&["run", "--metrics", path(&json), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&json).unwrap();
    assert!(text.starts_with("{\"format\":\"juggernaut-metrics\",\"version\":1}\n"));

    let o = juggernaut(&["run", "--metrics", path(&json), "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let o = juggernaut(&[
        "sweep",
        "--sizes",
        "4:1:1,5:2:1",
        "--settings",
        "both",
        "--strategies",
        "crash,equivocate",
        "--seeds",
        "0..3",
        "--metrics",
        path(&csv),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("24 runs, 0 with failures"), "{}", stdout(&o));
    // Version line, column line, one row per run.
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 26);
}

#[test]
fn enumerate_custom_space_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let o = juggernaut(&[
        "enumerate",
        "--protocol",
        "gc_auth_star",
        "--inputs",
        "0,0,1,1",
        "--phases",
        "0/1",
        "--matrix",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("gc_auth_star/authenticated: 81 runs, 0 failures"), "{}", stdout(&o));
    let matrix = fs::read_to_string(dir.path().join("gc_auth_star-authenticated.csv")).unwrap();
    assert_eq!(matrix.lines().count(), 82);
    assert!(matrix.starts_with("index,pattern,script,gc.validity"));
}

#[test]
fn enumerate_refuses_large_systems() {
    let o = juggernaut(&["enumerate", "--n", "7", "--t_s", "3", "--phases", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n <= 5"), "{}", stderr(&o));
}
