use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pnbm_core::synthetic::{movielens_like, planted_clusters, SyntheticSpec};
use pnbm_core::RatingDataset;

const FIXTURE: &str = "1\t10\t4.0\n1\t20\t2.0\n2\t10\t5.0\n2\t30\t1.0\n";

fn pnbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnbm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_tsv(path: &Path, ds: &RatingDataset) {
    let body: String = ds
        .triplets()
        .iter()
        .map(|r| format!("{}\t{}\t{}\n", r.user + 1, r.item + 1, r.value))
        .collect();
    fs::write(path, body).unwrap();
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Env {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Env {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Env { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn small_data(&self) -> PathBuf {
        let path = self.path("small.tsv");
        write_tsv(&path, &planted_clusters(60, 16, 4, 3));
        path
    }
}

#[test]
fn ingest_prints_summary() {
    let env = Env::new();
    let data = env.path("fx.tsv");
    fs::write(&data, FIXTURE).unwrap();
    let out = pnbm(&["ingest", "--data", p(&data)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next(), Some("users=2 items=3 ratings=4 density=66.67%"));
}

#[test]
fn missing_file_is_an_input_error() {
    let out = pnbm(&["ingest", "--data", "/nonexistent/ratings.tsv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/ratings.tsv"));
}

#[test]
fn single_epoch_on_fixture() {
    let env = Env::new();
    let data = env.path("fx.tsv");
    fs::write(&data, FIXTURE).unwrap();
    let mut config = pnbm_cli::ExperimentConfig::from_profile("pnbm").unwrap();
    (config.train_frac, config.valid_frac, config.test_frac) = (0.5, 0.25, 0.25);
    config.epochs = 1;
    let cfg = env.path("fx.toml");
    fs::write(&cfg, config.to_toml()).unwrap();
    let run = env.path("run");
    let out = pnbm(&["train", "--data", p(&data), "--config", p(&cfg), "--out", p(&run)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let history = fs::read_to_string(run.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
}

#[test]
fn training_is_reproducible_from_echoed_config() {
    let env = Env::new();
    let data = env.small_data();
    let before = fs::read(&data).unwrap();
    let (a, b) = (env.path("a"), env.path("b"));
    let first = pnbm(&["train", "--data", p(&data), "--profile", "mpnbm", "--epochs", "3", "--seed", "4", "--out", p(&a)]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let again = pnbm(&["train", "--config", p(&a.join("config.toml")), "--out", p(&b)]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    for file in ["history.csv", "checkpoint.bin", "config.toml"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    assert_eq!(fs::read(&data).unwrap(), before, "input file untouched");
}

#[test]
fn evaluate_matches_history_and_plumbs_k() {
    let env = Env::new();
    let data = env.small_data();
    let run = env.path("run");
    assert!(pnbm(&["train", "--data", p(&data), "--profile", "regsim", "--epochs", "4", "--out", p(&run)])
        .status
        .success());
    let history = fs::read_to_string(run.join("history.csv")).unwrap();
    let best_valid = history
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);

    let rep = env.path("valid");
    let out = pnbm(&["evaluate", "--run", p(&run), "--on", "valid", "--out", p(&rep)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(rep.join("report.json")).unwrap()).unwrap();
    assert!((json["rmse"].as_f64().unwrap() - best_valid).abs() < 1e-12);
    assert!(rep.join("report.txt").exists());

    let rmse_at = |k: &str| {
        let dir = env.path(&format!("k{k}"));
        assert!(pnbm(&["evaluate", "--run", p(&run), "--k", k, "--out", p(&dir)]).status.success());
        let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
        v["rmse"].as_f64().unwrap()
    };
    assert_ne!(rmse_at("1"), rmse_at("200"));

    let out = pnbm(&["evaluate", "--run", p(&run), "--baseline-checkpoint", p(&run.join("checkpoint.bin"))]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split_whitespace().nth(2), Some("0.00"), "{text}");
}

#[test]
fn checkpoint_from_another_corpus_is_a_mismatch() {
    let env = Env::new();
    let data = env.small_data();
    let run = env.path("run");
    assert!(pnbm(&["train", "--data", p(&data), "--profile", "pnbm", "--epochs", "1", "--out", p(&run)])
        .status
        .success());
    let other = env.path("other.tsv");
    write_tsv(&other, &planted_clusters(60, 20, 4, 3));
    let split_dir = env.path("other_split");
    assert!(pnbm(&["split", "--data", p(&other), "--out", p(&split_dir)]).status.success());
    let out = pnbm(&[
        "evaluate",
        "--checkpoint",
        p(&run.join("checkpoint.bin")),
        "--split",
        p(&split_dir),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn divergence_keeps_partial_history() {
    let env = Env::new();
    let data = env.small_data();
    let run = env.path("run");
    let out = pnbm(&["train", "--data", p(&data), "--profile", "pnbm", "--beta", "1e300", "--out", p(&run)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let history = fs::read_to_string(run.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,objective,valid_rmse,test_rmse,seconds"));
}

#[test]
fn static_profiles_are_not_trainable() {
    let env = Env::new();
    let data = env.small_data();
    let out = pnbm(&["train", "--data", p(&data), "--profile", "pcc", "--out", p(&env.path("run"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_slice_and_model() {
    let env = Env::new();
    let data = env.path("ml.tsv");
    write_tsv(
        &data,
        &movielens_like(&SyntheticSpec {
            users: 120,
            items: 80,
            min_ratings_per_user: 5,
            mean_extra_ratings: 10.0,
            ..SyntheticSpec::default()
        }),
    );
    let out_dir = env.path("sweep");
    let out = pnbm(&[
        "sweep", "--data", p(&data), "--slices", "1", "--profiles", "pcc,cos", "--out", p(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for col in ["users", "items", "ratings", "density"] {
        assert!(header.split(',').any(|c| c == col));
    }
    assert_eq!(csv.lines().count(), 1 + 2);
    assert!(out_dir.join("slice_00.json").exists());

    let tiny = env.path("tiny.tsv");
    write_tsv(&tiny, &planted_clusters(20, 8, 2, 1));
    let out = pnbm(&["sweep", "--data", p(&tiny), "--slices", "2", "--profiles", "pcc", "--out", p(&env.path("s2"))]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn stability_reads_history() {
    let env = Env::new();
    let hist = env.path("h.csv");
    let mut body = String::from("epoch,objective,valid_rmse,test_rmse,seconds\n");
    for (e, v) in [1.0, 0.9, 0.8, 0.8, 0.85].iter().enumerate() {
        body.push_str(&format!("{},1,{v},{v},\n", e + 1));
    }
    fs::write(&hist, body).unwrap();
    let out = pnbm(&["stability", "--history", p(&hist)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "epsilon=3 zeta=2 censored=false converged=true\n");
}

#[test]
fn protocol_mode_reports_inc_against_baseline() {
    let env = Env::new();
    let data = env.small_data();
    let out_dir = env.path("proto");
    let out = pnbm(&[
        "evaluate", "--data", p(&data), "--profiles", "pcc,cos", "--baseline", "pcc", "--repeats", "2", "--out",
        p(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(reports[0]["inc_percent"].as_f64(), Some(0.0));
    assert_eq!(reports[1]["per_repeat"].as_array().unwrap().len(), 2);
}
