use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn depthcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthcd"))
        .args(args)
        .env_remove("DEPTHCD_THREADS")
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

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Bivariate rows on a smooth deterministic pattern, centered near `(cx, cy)`.
fn study_csv(cx: f64, cy: f64, n: usize, phase: f64) -> String {
    let mut out = String::from("a,b\n");
    for i in 0..n {
        let t = i as f64 * 0.7 + phase;
        out.push_str(&format!(
            "{:.4},{:.4}\n",
            cx + t.sin(),
            cy + 0.5 * t.sin() + (1.3 * t).cos()
        ));
    }
    out
}

fn synth(dir: &Path) -> PathBuf {
    let out = dir.join("faa");
    let o = depthcd(&["synth", "faa-like", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn depth_of_a_point() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "x.csv", "x\n1\n2\n3\n4\n5\n");
    let o = depthcd(&["depth", s(&f), "--point", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("depth      0.6"), "{}", stdout(&o));

    let f2 = write(dir.path(), "xy.csv", &study_csv(0.0, 0.0, 20, 0.0));
    let out = dir.path().join("d.json");
    let o = depthcd(&[
        "depth",
        s(&f2),
        "--point",
        "50,50",
        "--depth",
        "simplicial",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&out);
    assert_eq!(j["depth"], 0.0);
    assert_eq!(j["centrality"], 0.0);
    assert_eq!(j["n"], 20);
    assert_eq!(j["format_version"], 1);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.csv", "x,y\n1,2\n3,NaN\n5,6\n");
    let o = depthcd(&["depth", s(&bad), "--point", "1,2"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains('3'), "{}", stderr(&o));

    let f = write(dir.path(), "x.csv", "x\n1\n2\n3\n4\n5\n");
    assert_eq!(code(&depthcd(&["depth", s(&f), "--point", "1,2"])), 3);

    let faa = synth(dir.path());
    let o = depthcd(&[
        "fuse",
        s(&faa.join("airbus_distance.csv")),
        s(&faa.join("boeing.csv")),
        "--B",
        "300",
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));

    let o = depthcd(&["simulate", "normla"]);
    assert_eq!(code(&o), 5);
    assert!(stderr(&o).contains("normal"), "{}", stderr(&o));

    assert_eq!(code(&depthcd(&["fuse", s(&f), "--scheme", "fisherr"])), 5);
}

#[test]
fn hotelling_at_the_sample_mean() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "x.csv",
        "a,b\n1,2\n2,1\n3,5\n4,3\n5,4\n6,7\n7,6\n8,9\n9,8\n10,10\n",
    );
    let out = dir.path().join("b.json");
    let o = depthcd(&[
        "baseline",
        s(&f),
        "--method",
        "hotelling",
        "--null",
        "5.5,5.5",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = json(&out)["pvalue"].as_f64().unwrap();
    assert!((p - 1.0).abs() < 1e-12, "{p}");
}

#[test]
fn self_null_gives_a_large_pvalue() {
    let dir = TempDir::new().unwrap();
    let text = study_csv(1.0, 2.0, 40, 0.3);
    let f = write(dir.path(), "s.csv", &text);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let mean: Vec<String> = (0..2)
        .map(|j| (rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).to_string())
        .collect();
    let out = dir.path().join("f.json");
    let o = depthcd(&["fuse", s(&f), "--null", &mean.join(","), "--B", "500", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&out);
    assert!(j["combined_pvalue"].as_f64().unwrap() >= 0.9, "{j}");
    assert!(j["studies"][0]["pvalue"].as_f64().unwrap() >= 0.9);
}

fn fuse_args<'a>(faa: &'a str, out: &'a str, region: &'a str) -> Vec<&'a str> {
    vec![
        "fuse",
        faa,
        "--null",
        "15.85,432",
        "--B",
        "400",
        "--region-level",
        "0.9",
        "--region-resolution",
        "31",
        "--seed",
        "7",
        "--out",
        out,
        "--region-csv",
        region,
    ]
}

#[test]
fn fuse_output_is_independent_of_threads_and_replays() {
    let dir = TempDir::new().unwrap();
    let faa = synth(dir.path());
    let file = faa.join("faa_like.csv");
    let mut bytes = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("fuse{threads}.json"));
        let region = dir.path().join(format!("region{threads}.csv"));
        let mut args = fuse_args(s(&file), s(&out), s(&region));
        args.extend(["--threads", threads]);
        let o = depthcd(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        bytes.push((std::fs::read(&out).unwrap(), std::fs::read(&region).unwrap()));
    }
    assert!(bytes[0] == bytes[1], "fuse output differs across thread counts");

    let out = dir.path().join("replayed.json");
    let region = dir.path().join("replayed.csv");
    let o = depthcd(&[
        "replay",
        s(&dir.path().join("fuse1.json")),
        "--out",
        s(&out),
        "--region-csv",
        s(&region),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read(&out).unwrap() == bytes[0].0);
    assert!(std::fs::read(&region).unwrap() == bytes[0].1);

    let j = json(&dir.path().join("fuse1.json"));
    assert_eq!(j["studies"].as_array().unwrap().len(), 2);
    let p = j["combined_pvalue"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(j["config"]["command"], "fuse");
    let header = String::from_utf8(bytes[0].1.clone()).unwrap();
    assert!(header.starts_with("theta_1,theta_2,value,inside\n"));
}

#[test]
fn simulate_output_is_independent_of_threads_and_replays() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = depthcd(&[
            "simulate",
            "chisq",
            "--reps",
            "100",
            "--B",
            "200",
            "--mc-draws",
            "10000",
            "--seed",
            "3",
            "--out",
            s(&out),
            "--threads",
            threads,
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let files = ["calibration.csv", "pvalues.csv", "manifest.json"];
    let read = |d: &Path| files.map(|f| std::fs::read(d.join(f)).unwrap());
    let a = run("one", "1");
    let b = run("two", "2");
    assert!(read(&a) == read(&b), "simulate output differs across thread counts");

    let c = dir.path().join("replayed");
    let o = depthcd(&["replay", s(&a.join("manifest.json")), "--out", s(&c)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(read(&a) == read(&c));
    let csv = String::from_utf8(std::fs::read(a.join("calibration.csv")).unwrap()).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn faa_like_end_to_end() {
    let dir = TempDir::new().unwrap();
    let faa = synth(dir.path());
    for f in [
        "airbus.csv",
        "boeing.csv",
        "airbus_distance.csv",
        "faa_like.csv",
        "manifest.json",
    ] {
        assert!(faa.join(f).exists(), "{f}");
    }
    let out = dir.path().join("direct.json");
    let o = depthcd(&[
        "fuse",
        s(&faa.join("airbus.csv")),
        s(&faa.join("boeing.csv")),
        "--null",
        "15.85,432",
        "--B",
        "400",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&out);
    for st in j["studies"].as_array().unwrap() {
        assert!((0.0..=1.0).contains(&st["pvalue"].as_f64().unwrap()));
    }

    let out = dir.path().join("indirect.json");
    let o = depthcd(&[
        "fuse",
        s(&faa.join("airbus_distance.csv")),
        s(&faa.join("boeing.csv")),
        "--map",
        "select:1",
        "--map",
        "identity",
        "--null",
        "15.85,432",
        "--B",
        "400",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&out);
    assert_eq!(j["dim"], 2);
    assert!((0.0..=1.0).contains(&j["combined_pvalue"].as_f64().unwrap()));

    let out = dir.path().join("pooled.json");
    let o = depthcd(&[
        "baseline",
        s(&faa.join("faa_like.csv")),
        "--method",
        "hotelling",
        "--null",
        "15.85,432",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!((0.0..=1.0).contains(&json(&out)["pvalue"].as_f64().unwrap()));
}

/// Standard normal pairs from a splitmix stream and Box-Muller.
fn gaussian_study(seed: u64, n: usize, mu: [f64; 2]) -> String {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    // Scrambling the start keeps streams of nearby seeds from overlapping.
    let mut state = mix(seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let mut unif = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        (mix(state) >> 11) as f64 / (1u64 << 53) as f64 + 0.5 / (1u64 << 53) as f64
    };
    let mut out = String::from("a,b\n");
    for _ in 0..n {
        let r = (-2.0 * unif().ln()).sqrt();
        let t = std::f64::consts::TAU * unif();
        out.push_str(&format!(
            "{},{}\n",
            mu[0] + r * t.cos(),
            mu[1] + 0.5 * r * t.cos() + r * t.sin()
        ));
    }
    out
}

#[test]
fn common_mean_pvalues_are_roughly_uniform() {
    let dir = TempDir::new().unwrap();
    let runs = 30;
    let mut p: Vec<f64> = (0..runs)
        .map(|r| {
            let a = write(dir.path(), "a.csv", &gaussian_study(2 * r, 30, [1.0, -1.0]));
            let b = write(dir.path(), "b.csv", &gaussian_study(2 * r + 1, 40, [1.0, -1.0]));
            let out = dir.path().join("f.json");
            let seed = r.to_string();
            let o = depthcd(&[
                "fuse",
                s(&a),
                s(&b),
                "--null",
                "1,-1",
                "--B",
                "300",
                "--seed",
                &seed,
                "--out",
                s(&out),
            ]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
            json(&out)["combined_pvalue"].as_f64().unwrap()
        })
        .collect();
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    let ks = p
        .iter()
        .enumerate()
        .map(|(i, v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
        .fold(0.0, f64::max);
    // The 1% critical value for 30 draws is about 0.29.
    assert!(ks < 0.29, "KS distance {ks}: {p:?}");
}

#[test]
fn scenario_can_be_given_as_a_flag() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let o = depthcd(&[
        "simulate",
        "--scenario",
        "normal",
        "--methods",
        "gd",
        "--reps",
        "100",
        "--mc-draws",
        "5000",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("calibration.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("gd"), "{csv}");
}
