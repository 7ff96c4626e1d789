use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn polygauss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polygauss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn column(text: &str, col: usize) -> Vec<f64> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

fn write_sequence(path: &Path, values: &[f64]) {
    let mut s = String::from("index,time,value\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{i},{i}.0,{v:?}\n"));
    }
    fs::write(path, s).unwrap();
}

fn write_ensemble(path: &Path, records: &[Vec<f64>]) {
    let mut s = String::from("rep,index,value\n");
    for (r, rec) in records.iter().enumerate() {
        for (i, v) in rec.iter().enumerate() {
            s.push_str(&format!("{r},{i},{v:?}\n"));
        }
    }
    fs::write(path, s).unwrap();
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&polygauss(&["--help"])), 0);
    assert_eq!(code(&polygauss(&[])), 1);
    assert_eq!(code(&polygauss(&["frobnicate"])), 1);
}

#[test]
fn gen_signal_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = polygauss(&["gen-signal", "--n", "60", "--dt", "0.15", "--paper-signal", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("index,time,value\n"));
    let g = column(&text, 2);
    let t = column(&text, 1);
    assert_eq!(g.len(), 60);
    assert!((g[0] - 1.786_566_092_485_493_1).abs() < 1e-12);
    assert!((t[59] - 59.0 * 0.15).abs() < 1e-12);
}

#[test]
fn gen_signal_custom_components_and_bad_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = polygauss(&[
        "gen-signal", "--n", "4", "--dt", "1", "--component", "2,0,0,0", "--component", "1,-0.5,0,0",
        "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = column(&fs::read_to_string(&out).unwrap(), 2);
    for (n, v) in g.iter().enumerate() {
        let want = 2.0 + (-0.5 * n as f64).exp();
        assert!((v - want).abs() < 1e-12);
    }
    assert_eq!(code(&polygauss(&["gen-signal", "--n", "0", "--dt", "1", "--paper-signal", "--out", p(&out)])), 1);
    assert_eq!(code(&polygauss(&["gen-signal", "--n", "5", "--dt", "1", "--component", "1,2", "--out", p(&out)])), 1);
}

#[test]
fn transform_fixed_orders() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    let out = dir.path().join("y.csv");
    write_sequence(&input, &[1.0, 0.0, 0.0]);

    let o = polygauss(&["transform", "--in", p(&input), "--order", "2", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let y = column(&fs::read_to_string(&out).unwrap(), 2);
    for (a, b) in y.iter().zip([5.0 / 6.0, 1.0 / 3.0, -1.0 / 6.0]) {
        assert!((a - b).abs() < 1e-12, "{y:?}");
    }

    let o = polygauss(&["transform", "--in", p(&input), "--order", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    let y = column(&fs::read_to_string(&out).unwrap(), 2);
    for (a, b) in y.iter().zip([1.0, 0.0, 0.0]) {
        assert!((a - b).abs() < 1e-10);
    }

    assert_eq!(code(&polygauss(&["transform", "--in", p(&input), "--order", "0", "--out", p(&out)])), 1);
    assert_eq!(code(&polygauss(&["transform", "--in", p(&input), "--order", "4", "--out", p(&out)])), 1);
}

#[test]
fn transform_auto_prints_choice() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    let out = dir.path().join("y.csv");
    polygauss(&["gen-signal", "--n", "60", "--dt", "0.15", "--paper-signal", "--out", p(&g)]);
    let o = polygauss(&["transform", "--in", p(&g), "--order", "auto", "--sigma2", "0.0245", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("chosen J = "));
    assert!(stdout.lines().filter(|l| l.contains(',')).count() > 30);
    // auto without a noise variance is a usage error
    assert_eq!(code(&polygauss(&["transform", "--in", p(&g), "--order", "auto", "--out", p(&out)])), 1);
}

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = dir.path().join("y.csv");
    assert_eq!(code(&polygauss(&["transform", "--in", p(&missing), "--order", "1", "--out", p(&out)])), 3);
    assert_eq!(code(&polygauss(&["test", "--in", p(&missing), "--out-dir", p(dir.path())])), 3);
}

#[test]
fn test_rejects_degenerate_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zeros.csv");
    write_ensemble(&input, &vec![vec![0.0; 60]; 16]);
    let o = polygauss(&["test", "--in", p(&input), "--out-dir", p(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn test_too_few_frames() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("short.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let records: Vec<Vec<f64>> = (0..4).map(|_| (0..60).map(|_| rng.sample(StandardNormal)).collect()).collect();
    write_ensemble(&input, &records);
    let o = polygauss(&["test", "--in", p(&input), "--out-dir", p(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn test_detects_phase_coupled_triad() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("triad.csv");
    let out_dir = dir.path().join("out");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = |b: f64| 2.0 * std::f64::consts::PI * b / 64.0;
    let records: Vec<Vec<f64>> = (0..64)
        .map(|_| {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let b: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            (0..64)
                .map(|n| {
                    let t = n as f64;
                    let e: f64 = rng.sample(StandardNormal);
                    (w(9.0) * t + a).cos() + (w(5.0) * t + b).cos() + (w(14.0) * t + a + b).cos() + 0.5 * e
                })
                .collect()
        })
        .collect();
    write_ensemble(&input, &records);
    let o = polygauss(&["test", "--in", p(&input), "--out-dir", p(&out_dir), "--threads", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let pfa: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("PFA = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(pfa < 0.01, "{stdout}");
    for f in ["report.json", "histogram.csv", "bicoherence.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["replications"], 64);
    let bic = fs::read_to_string(out_dir.join("bicoherence.csv")).unwrap();
    assert_eq!(bic.lines().count(), 1 + 240);
}

#[test]
fn simulate_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = polygauss(&["simulate", "--paper", "--reps", "8", "--out-dir", p(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn simulate_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = [None, Some("1"), Some("3")]
        .iter()
        .enumerate()
        .map(|(i, threads)| {
            let out = dir.path().join(format!("run{i}"));
            let mut args = vec!["simulate", "--paper", "--reps", "40", "--seed", "1", "--out-dir", p(&out)];
            if let Some(t) = threads {
                args.extend(["--threads", t]);
            }
            let o = polygauss(&args);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            (o.stdout, dir_contents(&out))
        })
        .collect();
    assert_eq!(runs[0].1.len(), 1 + 4 * 4);
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn simulate_single_replication() {
    let dir = tempfile::tempdir().unwrap();
    let o = polygauss(&["simulate", "--noise", "gaussian", "--reps", "1", "--seed", "3", "--out-dir", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 1);
    assert!(summary[0]["pfa_input"].is_null());
}

#[test]
fn simulate_rejects_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = p(dir.path());
    assert_eq!(code(&polygauss(&["simulate", "--noise", "cauchy", "--seed", "1", "--out-dir", d])), 1);
    assert_eq!(code(&polygauss(&["simulate", "--order", "many", "--seed", "1", "--out-dir", d])), 1);
    assert_eq!(code(&polygauss(&["simulate", "--paper", "--n", "10", "--seed", "1", "--out-dir", d])), 1);
    assert_eq!(code(&polygauss(&["simulate", "--snr-db", "inf", "--reps", "8", "--seed", "1", "--out-dir", d])), 2);
}
