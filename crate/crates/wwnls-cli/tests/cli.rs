use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wwnls(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wwnls"))
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn close(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| close(v, w, tol)))
        }
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(v, w)| close(v, w, tol)),
        _ => a == b,
    }
}

#[test]
fn critical_bonds_printed() {
    let d = tempfile::tempdir().unwrap();
    let o = wwnls(d.path(), &["resonance", "critical", "--k0", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("b0=0.2240838"), "{s}");
    assert!(s.contains("b1=0.2396825"), "{s}");
    for f in ["critical.json", "config.json", "metadata.json"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
    let meta = json(&d.path().join("metadata.json"));
    for key in ["version", "config_hash", "wall_time_s"] {
        assert!(meta.get(key).is_some(), "{key}");
    }
}

#[test]
fn config_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let o = wwnls(d.path(), &["resonance", "critical"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--k0"));

    let o = wwnls(d.path(), &["sim", "run", "--k0", "2", "--b", "0", "--eps", "0.2", "--dt", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("dt"), "{}", stderr(&o));

    let o = wwnls(d.path(), &["dispersion", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Usage"));

    let o = wwnls(d.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn numeric_failure_exits_three() {
    let d = tempfile::tempdir().unwrap();
    let o = wwnls(d.path(), &["resonance", "scan", "--k0", "2", "--b", "0.005", "--k-max", "20"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("k_max"));
}

#[test]
fn io_failure_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let file = d.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = wwnls(&file.join("sub"), &["dispersion", "--b", "0.1"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "metadata.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: [&[&str]; 4] = [
        &["kernels", "dump", "--k0", "2", "--b", "0.1", "--eps", "0.1", "--n", "64", "--random", "20", "--seed", "3"],
        &["twi", "run", "--k0", "2", "--b", "0.1", "--t-end", "2"],
        &["resonance", "scan", "--k0", "2", "--b", "0.2"],
        &["sim", "error-scan", "--k0", "2", "--b", "0,0.01", "--eps", "0.2,0.15", "--horizon", "eps"],
    ];
    for args in runs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(code(&wwnls(a.path(), args)), 0, "{args:?}");
        assert_eq!(code(&wwnls(b.path(), args)), 0);
        let (fa, fb) = (data_files(a.path()), data_files(b.path()));
        assert!(!fa.is_empty());
        assert!(fa == fb, "{args:?} differs");
    }
}

#[test]
fn persisted_config_reproduces_metrics() {
    let a = tempfile::tempdir().unwrap();
    let o = wwnls(a.path(), &["sim", "run", "--k0", "2", "--b", "0", "--eps", "0.2", "--t-end", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("config.json");
    let o = wwnls(b.path(), &["--config", cfg.to_str().unwrap(), "sim", "run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (ma, mb) = (json(&a.path().join("metrics.json")), json(&b.path().join("metrics.json")));
    assert!(close(&ma, &mb, 1e-12), "{ma} vs {mb}");
    assert_eq!(
        json(&a.path().join("metadata.json"))["config_hash"],
        json(&b.path().join("metadata.json"))["config_hash"]
    );
}

#[test]
fn flags_override_config_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    fs::write(&cfg, r#"{"k0": 2.0, "b": 0.3, "n": 64, "tau_end": 0.5}"#).unwrap();
    let out = d.path().join("run");
    let o = wwnls(&out, &["--config", cfg.to_str().unwrap(), "nls", "run", "--b", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = json(&out.join("config.json"));
    assert_eq!(c["params"]["b"], 0.1);
    assert_eq!(c["params"]["n"], 64);
    assert_eq!(c["params"]["k0"], 2.0);

    fs::write(&cfg, "[1, 2]").unwrap();
    assert_eq!(code(&wwnls(&out, &["--config", cfg.to_str().unwrap(), "nls", "run"])), 2);
}

fn read_records(bytes: &[u8]) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut i = 0;
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
    while i < bytes.len() {
        let n = u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap()) as usize;
        i += 8;
        out.push((0..n).map(|j| (f(&bytes[i + 16 * j..i + 16 * j + 8]), f(&bytes[i + 16 * j + 8..i + 16 * j + 16]))).collect());
        i += 16 * n;
    }
    out
}

#[test]
fn binary_matches_csv() {
    let args = ["nls", "run", "--k0", "2", "--b", "0", "--n", "64", "--tau-end", "0.5", "--stride", "10"];
    let c = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&wwnls(c.path(), &args)), 0);
    let mut bargs = vec!["--format", "binary"];
    bargs.extend(args);
    assert_eq!(code(&wwnls(b.path(), &bargs)), 0);
    let recs = read_records(&fs::read(b.path().join("nls.bin")).unwrap());
    assert!(!recs.is_empty());
    assert!(recs.iter().all(|r| r.len() == 64));

    let mut rd = csv::Reader::from_path(c.path().join("nls.csv")).unwrap();
    let h = rd.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|x| x == name).unwrap();
    let (re, im) = (col("re"), col("im"));
    let rows: Vec<(f64, f64)> = rd
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[re].parse().unwrap(), r[im].parse().unwrap())
        })
        .collect();
    let flat: Vec<(f64, f64)> = recs.into_iter().flatten().collect();
    assert_eq!(rows.len(), flat.len());
    for (x, y) in rows.iter().zip(&flat) {
        assert_eq!(x, y);
    }
}

#[test]
fn plot_data_emitted() {
    let d = tempfile::tempdir().unwrap();
    let o = wwnls(d.path(), &["--emit-plot-data", "resonance", "scan", "--k0", "2", "--b", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for i in 1..=9 {
        let p = d.path().join(format!("resonance_panel{i}.csv"));
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("k,"), "{}", p.display());
    }
}

#[test]
fn json_format_tables() {
    let d = tempfile::tempdir().unwrap();
    let o = wwnls(d.path(), &["--format", "json", "dispersion", "--b", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&d.path().join("dispersion.json"));
    let first = &v.as_array().unwrap()[0];
    for key in ["k", "omega", "sigma"] {
        assert!(first.get(key).is_some());
    }
}

#[test]
fn every_subcommand_runs() {
    let cases: [&[&str]; 8] = [
        &["dispersion", "--b", "0.2"],
        &["resonance", "stability", "--k0", "2"],
        &["twi", "run", "--k0", "2", "--b", "0.05", "--t-end", "1"],
        &["twi", "run", "--synthetic=1,-1,-1", "--t-end", "1"],
        &["nls", "run", "--k0", "2", "--b", "0", "--n", "64", "--tau-end", "0.2"],
        &["wavepacket", "build", "--k0", "2", "--b", "0", "--eps", "0.2"],
        &["sim", "run", "--k0", "2", "--b", "0", "--eps", "0.2", "--t-end", "0.5"],
        &["sim", "residual-scan", "--k0", "2", "--b", "0", "--eps", "0.2,0.1"],
    ];
    for args in cases {
        let d = tempfile::tempdir().unwrap();
        let o = wwnls(d.path(), args);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        assert!(d.path().join("metadata.json").exists());
    }
}
