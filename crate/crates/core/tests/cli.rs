use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fastsvt::io::decode_netpbm;
use fastsvt::sparse::read_matrix_market;
use serde_json::Value;

fn fastsvt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastsvt")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn synth_lowrank(dir: &Path, m: usize, n: usize, rank: usize) -> PathBuf {
    let out = dir.join("synth");
    let o = fastsvt(&[
        "synth", "--kind", "lowrank", "--m", &m.to_string(), "--n", &n.to_string(), "--rank",
        &rank.to_string(), "--seed", "1", "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("matrix.mtx")
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = fastsvt(&["complete", "--input", p(&dir.path().join("absent.mtx")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn bad_parameters_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = synth_lowrank(dir.path(), 30, 20, 2);
    assert_eq!(fastsvt(&["svd", "--input", p(&mtx), "--k", "0"]).status.code(), Some(2));
    assert_eq!(fastsvt(&["complete", "--input", p(&mtx), "--strategy", "reuse-v"]).status.code(), Some(2));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "k = 2\nbogus = true\n").unwrap();
    let o = fastsvt(&["svd", "--config", p(&cfg), "--input", p(&mtx)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    let out = dir.path().join("capped");
    let o = fastsvt(&["svd", "--input", p(&mtx), "--algo", "oracle", "--k", "2", "--oracle-cap", "10", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn flags_win_over_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = synth_lowrank(dir.path(), 40, 30, 5);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "k = 2\nalgo = \"pi\"\np = 1\n").unwrap();
    let out = dir.path().join("svd");
    let o = fastsvt(&["svd", "--config", p(&cfg), "--input", p(&mtx), "--k", "4", "--out", p(&out)]);
    assert!(o.status.success());
    let s = std::fs::read_to_string(out.join("s.txt")).unwrap();
    assert_eq!(s.lines().count(), 4);
    let resolved = &summary(&out)["config"];
    assert!(resolved.to_string().contains("\"pi\""), "{resolved}");
}

#[test]
fn svd_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = synth_lowrank(dir.path(), 50, 40, 6);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = fastsvt(&["svd", "--input", p(&mtx), "--algo", "bki", "--k", "3", "--seed", "9", "--out", p(&out)]);
        assert!(o.status.success());
        (std::fs::read(out.join("s.txt")).unwrap(), std::fs::read(out.join("u.mtx")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn synthetic_completion_converges() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = synth_lowrank(dir.path(), 200, 200, 10);
    let out = dir.path().join("complete");
    let o = fastsvt(&["complete", "--input", p(&mtx), "--train-fraction", "0.5", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["converged"], Value::Bool(true), "{s}");
    let (a, _) = read_matrix_market(&mtx).unwrap();
    let scale = a.values().iter().map(|v| v.abs()).sum::<f64>() / a.nnz() as f64;
    let mae = s["metrics"]["mae"].as_f64().unwrap();
    assert!(mae < 0.01 * scale, "mae {mae} vs value scale {scale}");
    assert!(out.join("trace.csv").exists());
}

#[test]
fn image_completion_writes_the_recovered_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("img");
    let o = fastsvt(&["complete", "--input", p(&fixture("image64.ppm")), "--pixel-fraction", "0.2", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let img = decode_netpbm(&std::fs::read(out.join("recovered.ppm")).unwrap()).unwrap();
    assert_eq!((img.width, img.height, img.channels), (64, 64, 3));
    let mae = summary(&out)["metrics"]["mae"].as_f64().unwrap();
    assert!(mae.is_finite() && mae < 255.0);
}

#[test]
fn bench_reports_speedups_against_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = synth_lowrank(dir.path(), 80, 60, 4);
    let out = dir.path().join("bench");
    let o = fastsvt(&[
        "bench", "--input", p(&mtx), "--runs", "basic:2,pi:2,bki:2", "--k", "3", "--repetitions", "3", "--out", p(&out),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let base: f64 = rows[0][5].parse().unwrap();
    for r in &rows {
        let t: f64 = r[5].parse().unwrap();
        let sp: f64 = r[8].parse().unwrap();
        // Times are printed to the microsecond, so the ratio is only checked to 2%.
        assert!((sp - base / t).abs() <= 0.02 * sp, "{r:?}");
    }
    assert_eq!(std::fs::read_to_string(out.join("bench.txt")).unwrap().lines().count(), 4);
}

#[test]
fn metrics_of_a_matrix_against_itself_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = synth_lowrank(dir.path(), 20, 15, 2);
    let out = dir.path().join("m");
    let o = fastsvt(&["metrics", "--truth", p(&mtx), "--pred", p(&mtx), "--out", p(&out)]);
    assert!(o.status.success());
    assert_eq!(summary(&out)["metrics"]["mae"].as_f64(), Some(0.0));
}

fn small_ratings(dir: &Path) -> PathBuf {
    // 60 users x 40 items, rank-2 preferences, about half the pairs rated; ids are offset.
    let mut text = String::new();
    for u in 0..60usize {
        for i in 0..40usize {
            if (u * 7 + i * 3) % 5 < 3 {
                let x = 3.0 + ((u % 6) as f64 - 2.5) * ((i % 4) as f64 - 1.5) / 4.0 + ((u + i) % 3) as f64 / 3.0;
                text.push_str(&format!("{}\t{}\t{}\t0\n", 1000 + u, 50 + i, (2.0 * x).round() / 2.0));
            }
        }
    }
    let path = dir.join("ratings.tsv");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn held_out_mae_matches_the_predictions_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_ratings(dir.path());
    let out = dir.path().join("r");
    let o = fastsvt(&["complete", "--input", p(&input), "--delta", "1.5", "--i-max", "100", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("predictions.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("row,col,truth,prediction"));
    let (mut sum, mut count) = (0.0, 0usize);
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (user, item): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        assert!((1000..1060).contains(&user) && (50..90).contains(&item), "{line}");
        sum += (f[2].parse::<f64>().unwrap() - f[3].parse::<f64>().unwrap()).abs();
        count += 1;
    }
    let s = summary(&out);
    assert_eq!(s["metrics"]["split"]["test"].as_u64(), Some(count as u64));
    let mae = s["metrics"]["mae"].as_f64().unwrap();
    assert!((sum / count as f64 - mae).abs() <= 1e-12 * mae, "{} vs {mae}", sum / count as f64);
}

#[test]
fn divergence_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_ratings(dir.path());
    let o = fastsvt(&["complete", "--input", p(&input), "--delta", "500", "--out", p(&dir.path().join("d"))]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reduce delta"));
}
