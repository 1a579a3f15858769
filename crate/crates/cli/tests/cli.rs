use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const GBM: &[&str] = &[
    "model=gbm", "a=1", "lambda0=1", "delta=2", "mu=0", "sigma2=0.01", "y0=0.5",
];

fn shawkes(args: &[&str], sets: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shawkes"));
    cmd.args(args);
    for s in sets {
        cmd.args(["--set", s]);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn simulate_into(dir: &Path, horizon: &str, seed: &str) {
    let out = shawkes(
        &["simulate", "--horizon", horizon, "--seed", seed, "--out", &dir.display().to_string()],
        GBM,
    );
    ok(&out);
}

#[test]
fn same_seed_same_bytes() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate_into(&a, "40", "11");
    simulate_into(&b, "40", "11");
    for f in ["events.csv", "contagion.csv", "manifest.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let fit = |dir: &Path| {
        let out = shawkes(
            &[
                "infer", "--events", &path(&a, "events.csv"),
                "--manifest", &path(&a, "manifest.txt"),
                "--model", "gbm", "--iters", "200", "--burnin", "50",
                "--seed", "5", "--save-latent", "--out", &dir.display().to_string(),
            ],
            &[],
        );
        ok(&out);
    };
    let (c, d) = (tmp.path().join("c"), tmp.path().join("d"));
    fit(&c);
    fit(&d);
    for f in ["chain.csv", "summary.csv", "acceptance.csv", "manifest.txt"] {
        assert_eq!(fs::read(c.join(f)).unwrap(), fs::read(d.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn different_seeds_differ() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate_into(&a, "40", "1");
    simulate_into(&b, "40", "2");
    assert_ne!(fs::read(a.join("events.csv")).unwrap(), fs::read(b.join("events.csv")).unwrap());
}

#[test]
fn missing_parameter_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = shawkes(
        &["simulate", "--horizon", "10", "--out", &tmp.path().display().to_string()],
        &["a=1", "lambda0=1", "model=constant", "psi=0.5"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("delta"), "{}", stderr(&out));
}

#[test]
fn flags_override_set_which_overrides_the_file() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("run.cfg");
    fs::write(&file, "# base\nmodel = constant\npsi = 0\na = 1\nlambda0 = 1\ndelta = 1\nhorizon = 5\n").unwrap();
    let out_dir = tmp.path().join("o");
    let out = shawkes(
        &[
            "simulate", "--config", &file.display().to_string(), "--horizon", "7",
            "--seed", "3", "--out", &out_dir.display().to_string(),
        ],
        &["horizon=6", "a=2"],
    );
    ok(&out);
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("config.horizon=7\n"), "{manifest}");
    assert!(manifest.contains("config.a=2\n"), "{manifest}");
    assert!(manifest.contains("config.delta=1\n"), "{manifest}");
    assert!(manifest.contains("seed=3\n"), "{manifest}");
}

#[test]
fn empty_event_file_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let events = tmp.path().join("events.csv");
    fs::write(&events, "t\n").unwrap();
    let out = shawkes(
        &["infer", "--events", &events.display().to_string(), "--horizon", "10",
          "--out", &path(tmp.path(), "o")],
        &["model=constant"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("no events"), "{}", stderr(&out));
}

#[test]
fn unsorted_events_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let events = tmp.path().join("events.csv");
    fs::write(&events, "t\n2\n1\n").unwrap();
    let out = shawkes(
        &["infer", "--events", &events.display().to_string(), "--horizon", "10",
          "--out", &path(tmp.path(), "o")],
        &[],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn poisson_replicate_counts() {
    // psi = 0 with lambda0 = a leaves a homogeneous Poisson process of rate 2.
    let tmp = TempDir::new().unwrap();
    let out = shawkes(
        &["simulate", "--replicates", "10000", "--horizon", "10", "--seed", "21",
          "--out", &tmp.path().display().to_string()],
        &["model=constant", "psi=0", "a=2", "lambda0=2", "delta=1"],
    );
    ok(&out);
    let mut reader = csv::Reader::from_path(tmp.path().join("replicates.csv")).unwrap();
    let counts: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap()[1].parse().unwrap())
        .collect();
    assert_eq!(counts.len(), 10_000);
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!((mean - 20.0).abs() < 4.0 * se, "mean {mean}, se {se}");
    assert!((var / 20.0 - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn horizon_comes_from_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let sim = tmp.path().join("sim");
    simulate_into(&sim, "33.5", "4");
    let fit = tmp.path().join("fit");
    let out = shawkes(
        &["infer", "--events", &path(&sim, "events.csv"),
          "--manifest", &path(&sim, "manifest.txt"),
          "--model", "constant", "--iters", "50", "--burnin", "10", "--seed", "1",
          "--out", &fit.display().to_string()],
        &[],
    );
    ok(&out);
    let manifest = fs::read_to_string(fit.join("manifest.txt")).unwrap();
    assert!(manifest.contains("config.horizon=33.5\n"), "{manifest}");

    let out = shawkes(
        &["infer", "--events", &path(&sim, "events.csv"), "--model", "constant",
          "--out", &fit.display().to_string()],
        &[],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("horizon"), "{}", stderr(&out));
}

#[test]
fn em_check_agrees_with_gibbs() {
    let tmp = TempDir::new().unwrap();
    let sim = tmp.path().join("sim");
    simulate_into(&sim, "100", "8");
    let out_dir = tmp.path().join("em");
    let out = shawkes(
        &["em-check", "--events", &path(&sim, "events.csv"),
          "--manifest", &path(&sim, "manifest.txt"),
          "--out", &out_dir.display().to_string()],
        &["a=1", "lambda0=1", "delta=2", "psi=0.5", "em.iterations=5"],
    );
    ok(&out);
    let mut reader = csv::Reader::from_path(out_dir.join("em_check.csv")).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    let worst: f64 = row[1].parse().unwrap();
    assert!(worst < 1e-14, "{worst}");
    let trace = fs::read_to_string(out_dir.join("em_psi.csv")).unwrap();
    assert_eq!(trace.lines().count(), 7);
}

#[test]
fn rescaling_and_renewal_reports() {
    let tmp = TempDir::new().unwrap();
    let sim = tmp.path().join("sim");
    simulate_into(&sim, "200", "9");
    let out_dir = tmp.path().join("diag");
    let mut sets = GBM.to_vec();
    sets.extend(["horizon=200", "renewal.points=20", "renewal.paths=200"]);
    let out = shawkes(
        &["diagnose", "--rescaling", &path(&sim, "events.csv"), &path(&sim, "contagion.csv"),
          "--renewal", "--seed", "2", "--out", &out_dir.display().to_string()],
        &sets,
    );
    ok(&out);
    let mut reader = csv::Reader::from_path(out_dir.join("rescaling.csv")).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    let p: f64 = row[2].parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
    let renewal = fs::read_to_string(out_dir.join("renewal.csv")).unwrap();
    assert!(renewal.starts_with("t,mean_intensity,mc_mean,mc_se\n"));
    assert_eq!(renewal.lines().count(), 21);
}

#[test]
fn small_geweke_run() {
    let tmp = TempDir::new().unwrap();
    let out = shawkes(
        &["diagnose", "--geweke", "--model", "gamma", "--rounds", "200", "--seed", "4",
          "--out", &tmp.path().display().to_string()],
        &[],
    );
    ok(&out);
    let mut reader = csv::Reader::from_path(tmp.path().join("geweke.csv")).unwrap();
    let zs: Vec<f64> = reader.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert!(!zs.is_empty());
    assert!(zs.iter().all(|z| z.is_finite()));
}

#[test]
fn diagnose_without_a_report_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = shawkes(&["diagnose", "--out", &tmp.path().display().to_string()], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_writes_timings() {
    let tmp = TempDir::new().unwrap();
    let out = shawkes(
        &["bench", "--events", "1e2,1e3", "--runs", "1", "--thinning-limit", "1e2",
          "--seed", "1", "--out", &tmp.path().display().to_string()],
        &[],
    );
    ok(&out);
    let text = fs::read_to_string(tmp.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "events,horizon,simulate_secs,thinning_secs");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("100,") && !lines[1].ends_with(','));
    assert!(lines[2].starts_with("1000,") && lines[2].ends_with(','));
}
