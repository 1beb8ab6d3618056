// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::sync::{Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use duostress::kernels::catalog;

const BIN: &str = env!("CARGO_BIN_EXE_duostress");

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|p| p.into_inner())
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run duostress")
}

fn spawn(args: &[&str]) -> Child {
    Command::new(BIN)
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn duostress")
}

fn signal(child: &Child, sig: i32) {
    // SAFETY: plain kill(2) on our own child.
    let rc = unsafe { libc::kill(child.id() as libc::pid_t, sig) };
    assert_eq!(rc, 0);
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_marks_absent_kernels() {
    let o = run(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), catalog().len());
    assert!(lines.contains(&"ocall"));
    assert!(lines.contains(&"ackermann"));
    assert!(lines.contains(&"decimal64 (not ported)"));
    assert!(lines.contains(&"rand48 (not ported)"));
}

#[test]
fn verify_all_passes() {
    let o = run(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), catalog().iter().filter(|s| s.is_ported()).count());
    assert!(text.lines().all(|l| l.contains("host PASS isolated PASS")));
}

#[test]
fn usage_errors_exit_2() {
    let o = run(&["stress", "--sgx-cpu", "1", "--load", "50"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("100%"), "{}", stderr(&o));

    for args in [
        &["stress", "--timeout", "5", "--bogo-budget", "9"][..],
        &["stress", "--frobnicate"],
        &["stress", "--cpu-method", "nosuch", "--bogo-budget", "1"],
        &["stress", "--cpu-method", "decimal64", "--bogo-budget", "1"],
        &["compare", "--load", "50", "--bogo-budget", "1"],
        &["stress", "--timeout", "soon"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_artifact_fails() {
    let o = run(&["verify", "--artifact", "/nonexistent/libx.so"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot load kernel artifact"));
}

#[test]
fn host_partial_load_runs() {
    let _s = serial();
    let o = run(&["stress", "--cpu", "1", "--load", "50", "--cpu-method", "gcd", "--timeout", "0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("host gcd"));
}

#[test]
fn metrics_brief_is_line_oriented() {
    let _s = serial();
    let o = run(&[
        "stress", "--sgx-cpu", "2", "--sgx-cpu-method", "crc16", "--bogo-budget", "500",
        "--metrics-brief",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for l in lines {
        let f: Vec<_> = l.split(' ').collect();
        assert_eq!(f.len(), 4, "{l}");
        assert_eq!(f[0], "crc16");
        assert_eq!(f[1], "500");
        f[2].parse::<f64>().unwrap();
        f[3].parse::<f64>().unwrap();
    }
}

#[test]
fn stress_writes_record_report() {
    let _s = serial();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "stress", "--cpu", "1", "--cpu-method", "pi", "--bogo-budget", "100", "--out",
        out.to_str().unwrap(), "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["records"][0]["bogo_ops"], 100);
    assert_eq!(v["records"][0]["stop_cause"], "BUDGET");
}

#[test]
fn transitions_csv_schema() {
    let _s = serial();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(&["transitions", "--count", "1000000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert_eq!(lines[1], "mode,workers,transitions,wall_seconds");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("SINGLE_CORE,1,1000000,"));
    assert!(lines[3].starts_with("ALL_CORES,"));
    for l in &lines[2..] {
        assert_eq!(l.split(',').nth(2), Some("1000000"));
    }
}

#[test]
fn compare_emits_ratio_row() {
    let _s = serial();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = run(&[
        "compare", "--cpu", "1", "--cpu-method", "gcd", "--timeout", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        duostress::metrics::COMPARISON_COLUMNS.to_vec()
    );
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "gcd");
    let ratio: f64 = rows[0][4].parse().unwrap();
    assert!(ratio > 0.0);
}

fn wait_with_timeout(mut child: Child, limit: Duration) -> Output {
    let start = Instant::now();
    loop {
        if child.try_wait().unwrap().is_some() {
            return child.wait_with_output().unwrap();
        }
        if start.elapsed() > limit {
            let _ = child.kill();
            panic!("child did not exit within {limit:?}");
        }
        thread::sleep(Duration::from_millis(10));
    }
}

fn interrupted_run(sig: i32, out: &Path) -> Output {
    let child = spawn(&[
        "stress", "--sgx-cpu", "1", "--sgx-cpu-method", "sieve", "--timeout", "10", "--out",
        out.to_str().unwrap(),
    ]);
    thread::sleep(Duration::from_millis(500));
    signal(&child, sig);
    wait_with_timeout(child, Duration::from_secs(5))
}

#[test]
fn sigint_stops_gracefully() {
    let _s = serial();
    for sig in [libc::SIGINT, libc::SIGTERM] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        let o = interrupted_run(sig, &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = fs::read_to_string(&out).unwrap();
        let row = text.lines().nth(2).unwrap();
        let f: Vec<_> = row.split(',').collect();
        assert_eq!(f[9], "SIGNAL", "{row}");
        let wall: f64 = f[5].parse().unwrap();
        // The signal lands about 0.5 s into a 10 s run, after process start-up.
        assert!(wall > 0.2 && wall < 1.5, "wall {wall}");
    }
}

#[test]
fn double_sigint_forces_exit_without_report() {
    let _s = serial();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    // A 0.3 s delay per boundary crossing keeps the drain after the first
    // interrupt (exit crossing, then a verify round trip) near a second
    // long, so the second interrupt reliably lands while it is pending.
    let child = spawn(&[
        "stress", "--sgx-cpu", "1", "--sgx-cpu-method", "sieve", "--timeout", "10",
        "--transition-delay-ns", "300000000", "--out", out.to_str().unwrap(),
    ]);
    thread::sleep(Duration::from_millis(600));
    signal(&child, libc::SIGINT);
    thread::sleep(Duration::from_millis(100));
    signal(&child, libc::SIGINT);
    let o = wait_with_timeout(child, Duration::from_secs(5));
    assert_eq!(o.status.code(), Some(130));
    assert!(!out.exists());
}
