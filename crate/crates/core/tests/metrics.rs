// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::time::Duration;

use duostress::boundary::Domain;
use duostress::metrics::{
    aggregate, compare, emit, ComparisonReport, ComparisonRow, Environment, Format, Mode, Report,
    StressReport, TransitionReport, TransitionRow, COMPARISON_COLUMNS,
};
use duostress::runner::{RunLimit, RunRecord, StopCause, TransitionRecord};
use duostress::Error;
use proptest::prelude::*;

const HASH: &str = "0123456789abcdef0123456789abcdef0123456789abcdef0123456789abcdef";

fn env() -> Environment {
    Environment {
        cpu_model: "Test CPU @ 1.00GHz".into(),
        cores: 4,
        content_hash: HASH.into(),
        version: "0.1.0".into(),
        timestamp: "2026-01-01T00:00:00Z".into(),
    }
}

fn record(domain: Domain, worker: usize, bogo: u64, wall: f64) -> RunRecord {
    RunRecord {
        worker_index: worker,
        core: Some(worker),
        kernel_id: "gcd".into(),
        domain,
        limit: RunLimit::Duration(Duration::from_secs(5)),
        bogo_ops: bogo,
        wall_seconds: wall,
        transitions: if domain == Domain::Isolated { 1 } else { 0 },
        verified: true,
        stop_cause: StopCause::Timeout,
        content_hash: HASH.into(),
    }
}

fn row(host: f64, iso: f64) -> ComparisonRow {
    let ops = 1_000_000;
    let h = aggregate(&[record(Domain::Host, 0, ops, ops as f64 / host)]).unwrap();
    let i = aggregate(&[record(Domain::Isolated, 0, ops, ops as f64 / iso)]).unwrap();
    compare(&h, &i).unwrap()
}

#[test]
fn parity_row_csv_formatting() {
    let report = ComparisonReport::new(vec![row(500.0, 500.0)], env()).unwrap();
    let csv = report.to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some(COMPARISON_COLUMNS.join(",").as_str()));
    let data = lines.next().unwrap();
    assert!(data.contains(",1.000000,"), "{data}");
    assert_eq!(
        data,
        format!("gcd,SINGLE_CORE,500.000000,500.000000,1.000000,1,5.000000,{HASH}")
    );
    assert_eq!(lines.next(), None);
}

#[test]
fn budget_rows_leave_duration_empty() {
    let mut r = record(Domain::Host, 0, 100, 1.0);
    r.limit = RunLimit::Budget(100);
    let mut i = r.clone();
    i.domain = Domain::Isolated;
    let row = compare(&aggregate(&[r]).unwrap(), &aggregate(&[i]).unwrap()).unwrap();
    assert_eq!(row.bogo_budget, Some(100));
    let csv = ComparisonReport::new(vec![row], env()).unwrap().to_csv().unwrap();
    let data = csv.lines().nth(2).unwrap();
    assert!(data.ends_with(&format!(",1,,{HASH}")), "{data}");
}

#[test]
fn json_carries_schema_and_environment() {
    let report = ComparisonReport::new(vec![row(380.0, 100.0)], env()).unwrap();
    let json = report.to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["mode"], "SINGLE_CORE");
    assert_eq!(v["environment"]["content_hash"], HASH);
    assert_eq!(v["environment"]["cores"], 4);
    assert!(json.contains("\"ratio\": 0.263158"), "{json}");
    assert!(json.contains("\"host_bogo_per_s\": 380.000000"));
}

#[test]
fn anomalous_rows_are_kept_and_noted() {
    let report = ComparisonReport::new(vec![row(100.0, 120.0), row(100.0, 90.0)], env()).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows[0].anomalous && report.rows[0].ratio > 1.0);
    assert!(!report.rows[1].anomalous);
    assert_eq!(report.notes.len(), 1);
    assert!(report.notes[0].contains("anomalous"));
}

#[test]
fn report_rejects_foreign_hash() {
    let mut e = env();
    e.content_hash = "f".repeat(64);
    assert!(matches!(
        ComparisonReport::new(vec![row(1.0, 1.0)], e),
        Err(Error::HashMismatch { .. })
    ));
}

#[test]
fn emit_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let report = ComparisonReport::new(vec![row(123.456, 120.001), row(9.0, 3.0)], env()).unwrap();
    for format in [Format::Csv, Format::Json] {
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        emit(&report, format, &a).unwrap();
        emit(&report, format, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}

#[test]
fn unwritable_path_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let report = ComparisonReport::new(vec![row(1.0, 1.0)], env()).unwrap();
    let bad = dir.path().join("missing-dir").join("r.csv");
    assert!(matches!(emit(&report, Format::Csv, &bad), Err(Error::Io(_))));
    assert!(matches!(emit(&report, Format::Json, dir.path()), Err(Error::Io(_))));
}

#[test]
fn transition_report_schema() {
    let recs = |n: usize, t: u64| -> Vec<TransitionRecord> {
        (0..n)
            .map(|i| TransitionRecord {
                worker_index: i,
                transitions: t,
                wall_seconds: 0.5 + i as f64,
            })
            .collect()
    };
    let rows = vec![
        TransitionRow::from_records(Mode::SingleCore, &recs(1, 1000)).unwrap(),
        TransitionRow::from_records(Mode::AllCores, &recs(4, 1000)).unwrap(),
    ];
    assert_eq!(rows[1].wall_seconds, 3.5);
    let report = TransitionReport::new(rows, env());
    let csv = report.to_csv().unwrap();
    assert_eq!(
        csv,
        "# schema=1\nmode,workers,transitions,wall_seconds\n\
         SINGLE_CORE,1,1000,0.500000\nALL_CORES,4,1000,3.500000\n"
    );
    let json = report.to_json().unwrap();
    assert_eq!(TransitionReport::from_json(&json).unwrap().to_json().unwrap(), json);

    let mut uneven = recs(2, 1000);
    uneven[1].transitions = 999;
    assert!(TransitionRow::from_records(Mode::AllCores, &uneven).is_err());
}

#[test]
fn stress_report_lists_workers() {
    let recs = vec![record(Domain::Isolated, 0, 100, 2.0), record(Domain::Isolated, 1, 300, 2.0)];
    let report = StressReport::new(&recs, env());
    let csv = report.to_csv().unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[3],
        format!("1,1,gcd,isolated,300,2.000000,150.000000,1,true,TIMEOUT,{HASH}")
    );
}

fn arb_rate() -> impl Strategy<Value = f64> {
    1e-3f64..1e9
}

proptest! {
    #[test]
    fn ratio_is_scale_invariant(h in arb_rate(), i in arb_rate(), c in 1e-3f64..1e3) {
        let base = record(Domain::Host, 0, 0, 1.0);
        let mk = |domain, rate: f64| {
            let mut r = base.clone();
            r.domain = domain;
            r.bogo_ops = 1_000_000;
            r.wall_seconds = 1_000_000.0 / rate;
            aggregate(&[r]).unwrap()
        };
        let r1 = compare(&mk(Domain::Host, h), &mk(Domain::Isolated, i)).unwrap();
        let r2 = compare(&mk(Domain::Host, h * c), &mk(Domain::Isolated, i * c)).unwrap();
        prop_assert!((r1.ratio - r2.ratio).abs() <= 1e-12 * r1.ratio);
        prop_assert!(r1.ratio > 0.0);
    }

    #[test]
    fn json_round_trip_is_byte_identical(
        rates in proptest::collection::vec((arb_rate(), arb_rate()), 0..6),
        cpu in "[ -~]{0,40}",
    ) {
        let rows: Vec<_> = rates.iter().map(|&(h, i)| row(h, i)).collect();
        let mut e = env();
        e.cpu_model = cpu;
        let report = ComparisonReport::new(rows, e).unwrap();
        let first = report.to_json().unwrap();
        let parsed = ComparisonReport::from_json(&first).unwrap();
        prop_assert_eq!(parsed.to_json().unwrap(), first.clone());
        prop_assert_eq!(parsed.to_csv().unwrap(), report.to_csv().unwrap());
    }

    #[test]
    fn aggregation_is_linear(
        a in proptest::collection::vec((0u64..1_000_000_000, 0.01f64..100.0), 1..8),
        b in proptest::collection::vec((0u64..1_000_000_000, 0.01f64..100.0), 1..8),
    ) {
        let mk = |v: &[(u64, f64)]| -> Vec<RunRecord> {
            v.iter().enumerate().map(|(i, &(bogo, wall))| record(Domain::Host, i, bogo, wall)).collect()
        };
        let (ra, rb) = (mk(&a), mk(&b));
        let union: Vec<_> = ra.iter().chain(rb.iter()).cloned().collect();
        let (ga, gb, gu) = (aggregate(&ra).unwrap(), aggregate(&rb).unwrap(), aggregate(&union).unwrap());
        prop_assert_eq!(gu.total_bogo_ops, ga.total_bogo_ops + gb.total_bogo_ops);
        let sum = ga.bogo_per_s_sum + gb.bogo_per_s_sum;
        prop_assert!((gu.bogo_per_s_sum - sum).abs() <= 1e-9 * sum.max(1.0));
        prop_assert_eq!(gu.per_worker.len(), ra.len() + rb.len());
    }

    #[test]
    fn render_is_deterministic(rates in proptest::collection::vec((arb_rate(), arb_rate()), 1..5)) {
        let rows: Vec<_> = rates.iter().map(|&(h, i)| row(h, i)).collect();
        let report = ComparisonReport::new(rows, env()).unwrap();
        for f in [Format::Csv, Format::Json] {
            prop_assert_eq!(report.render(f).unwrap(), report.clone().render(f).unwrap());
        }
    }
}
