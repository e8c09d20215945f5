use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpprep::bench::synth::{generate, Family};
use fpprep::bench::{CompressionReport, CSV_HEADER};

fn fpprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpprep"))
        .args(args)
        .output()
        .expect("run fpprep")
}

fn write_csv(dir: &Path, values: &[f64]) -> PathBuf {
    let path = dir.join("data.csv");
    let mut text = String::from("id,fare\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{i},{v}\n"));
    }
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_check_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), &[1.0, 1.5]);
    let out = fpprep(&["ingest-check", "--input", s(&input), "--column", "fare"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rows: 2"));
    assert!(text.contains("total 63"), "{text}");
}

#[test]
fn sweep_csv_schema_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), &generate(Family::Gaussian, 100, 1));
    let out = fpprep(&[
        "sweep",
        "--input",
        s(&input),
        "--column",
        "fare",
        "--technique",
        "evenness,bins",
        "--d-range",
        "2:4",
        "--bins-k",
        "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.count(), 6);

    let json = dir.path().join("r.json");
    let out = fpprep(&[
        "sweep",
        "--input",
        s(&input),
        "--column",
        "1",
        "--limit",
        "50",
        "--format",
        "json",
        "--d-range",
        "3",
        "--output",
        s(&json),
        "--timing",
    ]);
    assert!(out.status.success());
    let report = CompressionReport::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.n, 50);
    assert_eq!(report.rows.len(), 4 + 3);
    assert!(report.rows.iter().all(|r| r.wall_ms.is_some()));
    assert!(report
        .rows
        .iter()
        .filter(|r| r.is_ok())
        .all(|r| r.roundtrip_ok == Some(true)));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), &generate(Family::MultiRegion, 120, 2));
    let out = fpprep(&[
        "verify",
        "--input",
        s(&input),
        "--column",
        "fare",
        "--d-range",
        "1:10",
        "--checked",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.contains(" 0 failed"), "{text}");
}

#[test]
fn compress_decompress_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let values = generate(Family::FareLike, 200, 3);
    let input = write_csv(dir.path(), &values);
    let container = dir.path().join("out.fpp");
    let archive = dir.path().join("out.fpgd");
    let out = fpprep(&[
        "compress",
        "--input",
        s(&input),
        "--column",
        "fare",
        "--technique",
        "evenness",
        "--d",
        "5",
        "--output",
        s(&container),
        "--gd-output",
        s(&archive),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let restored = dir.path().join("back.csv");
    assert!(
        fpprep(&["decompress", "--input", s(&container), "--output", s(&restored)])
            .status
            .success()
    );
    let back: Vec<f64> = std::fs::read_to_string(&restored)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(
        back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );

    let out = fpprep(&["decompress", "--input", s(&archive)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 201);
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), &[1.0, 2.0]);
    let out = fpprep(&["sweep", "--input", s(&input), "--column", "tip"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tip"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "fare\n1.0\n-1.5\n").unwrap();
    let out = fpprep(&["ingest-check", "--input", s(&bad), "--column", "fare"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a container").unwrap();
    assert_eq!(
        fpprep(&["decompress", "--input", s(&junk)]).status.code(),
        Some(2)
    );
    assert!(!fpprep(&[
        "sweep",
        "--input",
        s(&input),
        "--column",
        "fare",
        "--d-range",
        "0:3"
    ])
    .status
    .success());
}
