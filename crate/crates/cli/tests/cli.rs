use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ltcrank(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltcrank"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("LTCRANK_DATA")
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = ltcrank(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

/// Data rows of a CSV written by the tool, with the manifest comments dropped.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn manifest_line(path: &Path, key: &str) -> String {
    let prefix = format!("# {key}: ");
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
        .unwrap()
}

#[test]
fn baselines_table_has_every_predictor() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["baselines"]);
    let table = rows(&dir.path().join("table1.csv"));
    assert_eq!(table[0], ["predictor", "sft_cms", "sft_rag", "sft_cbqa"]);
    assert_eq!(table.len(), 9);
    let sc = table.iter().find(|r| r[0] == "ppl_sc").unwrap();
    for (got, want) in sc[1..].iter().zip([0.703, 0.622, 0.609]) {
        assert!((got.parse::<f64>().unwrap() - want).abs() <= 0.02, "{got}");
    }
    assert!(dir.path().join("table1.json").exists());
}

#[test]
fn task_selection_narrows_the_table() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["baselines", "--task", "sft_cms"]);
    let table = rows(&dir.path().join("table1.csv"));
    assert!(table.iter().all(|r| r.len() == 2));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(ltcrank(dir.path(), &["baselines", "--task", ""]).status.code(), Some(2));
    assert_eq!(ltcrank(dir.path(), &["baselines", "--bogus"]).status.code(), Some(2));
    assert_eq!(ltcrank(dir.path(), &["ltc", "--backbone", "svm"]).status.code(), Some(2));
    assert_eq!(ltcrank(dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn missing_dataset_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = ltcrank(dir.path(), &["--dataset", missing.to_str().unwrap(), "baselines"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

fn ingest_report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("ingest.json")).unwrap()).unwrap()
}

#[test]
fn data_env_var_picks_the_dataset() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["ingest"]);
    let canonical = ingest_report(dir.path())["manifest"]["dataset_sha256"].clone();

    // drop the last model so the checksum must change
    let text = fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let smaller = dir.path().join("smaller.csv");
    fs::write(&smaller, lines[..lines.len() - 1].join("\n") + "\n").unwrap();

    let run = dir.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_ltcrank"))
        .arg("--out")
        .arg(&run)
        .args(["baselines", "--task", "sft_rag"])
        .env("LTCRANK_DATA", &smaller)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let seen = manifest_line(&run.join("table1.csv"), "dataset_sha256");
    assert_ne!(serde_json::Value::from(seen.as_str()), canonical);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("table1.json")).unwrap()).unwrap();
    assert_eq!(json["manifest"]["dataset_sha256"], seen.as_str());
}

#[test]
fn raw_perplexity_input_is_inverted() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["ingest"]);
    let text = fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let ppl: Vec<usize> = header
        .split(',')
        .enumerate()
        .filter(|(_, h)| h.starts_with("ppl_"))
        .map(|(i, _)| i)
        .collect();
    let mut raw = vec![header.to_string()];
    for line in lines {
        let mut f: Vec<String> = line.split(',').map(str::to_string).collect();
        for &i in &ppl {
            f[i] = (1.0 / f[i].parse::<f64>().unwrap()).to_string();
        }
        raw.push(f.join(","));
    }
    let raw_path = dir.path().join("raw.csv");
    fs::write(&raw_path, raw.join("\n") + "\n").unwrap();

    let back = dir.path().join("back");
    ok(&back, &["--dataset", raw_path.to_str().unwrap(), "--raw-perplexity", "ingest"]);
    let (a, b) = (ingest_report(dir.path()), ingest_report(&back));
    for (x, y) in a["report"]["proxies"].as_array().unwrap().iter().zip(b["report"]["proxies"].as_array().unwrap()) {
        for key in ["min", "max"] {
            assert!((x[key].as_f64().unwrap() - y[key].as_f64().unwrap()).abs() < 1e-12, "{x} {y}");
        }
    }
    // without the flag the same file fails validation
    let o = ltcrank(&dir.path().join("bad"), &["--dataset", raw_path.to_str().unwrap(), "ingest"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reruns_with_one_seed_are_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(out, &["--seed-base", "7", "ltc", "--runs", "1", "--backbone", "mlp"]);
    }
    for name in ["ltc_mlp_sft_cms_runs.csv", "ltc_mlp_sft_cms_summary.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_eq!(manifest_line(&a.join("ltc_mlp_sft_cms_runs.csv"), "seeds"), "7");
    assert!(a.join("models/ltc_mlp_sft_cms_seed7.json").exists());
}

fn summary_mean(path: &Path, task: &str) -> f64 {
    rows(path).iter().find(|r| r[0] == task).unwrap()[1].parse().unwrap()
}

#[test]
fn boosted_comparator_same_and_cross_task() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--jobs", "4", "ltc", "--no-dumps"]);
    let same = summary_mean(&dir.path().join("ltc_gbdt_sft_cms_summary.csv"), "sft_cms");
    assert!((0.70..=0.81).contains(&same), "{same}");
    ok(dir.path(), &["ltc", "--no-dumps", "--train", "sft_rag", "--eval", "sft_cms"]);
    let cross = summary_mean(&dir.path().join("ltc_gbdt_sft_rag_summary.csv"), "sft_cms");
    assert!((cross - 0.734).abs() <= 0.05, "{cross}");
    assert!(!dir.path().join("models").exists());
}

#[test]
fn importance_favours_kshot_rag() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["figures", "importance"]);
    let table = rows(&dir.path().join("importance.csv"));
    for task in ["sft_cms", "sft_rag", "sft_cbqa"] {
        let best = table[1..]
            .iter()
            .filter(|r| r[0] == task)
            .max_by(|a, b| a[3].parse::<f64>().unwrap().total_cmp(&b[3].parse().unwrap()))
            .unwrap();
        assert_eq!(best[1], "kshot_rag", "{task}");
    }
    let svg = fs::read_to_string(dir.path().join("importance.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("# command: figures importance"));
}

#[test]
fn perplexity_buckets_fall_with_the_gap() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["figures", "buckets", "--task", "sft_cms", "--predictor", "ppl_clm,kshot_rag"]);
    let table = rows(&dir.path().join("buckets_sft_cms.csv"));
    let clm: Vec<f64> = table.iter().filter(|r| r[0] == "ppl_clm").map(|r| r[5].parse().unwrap()).collect();
    assert_eq!(clm.len(), 5);
    assert!(clm[4] < clm[0], "{clm:?}");
    assert!(dir.path().join("buckets_sft_cms.svg").exists());
}

#[test]
fn ranking_commands_write_their_files() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(p, &["figures", "recall", "--task", "sft_rag", "--predictor", "kshot_rag", "--k", "1"]);
    let curve = rows(&p.join("recall_top1_sft_rag.csv"));
    // held-out curves run over the 20 test models of each split
    assert_eq!(curve.len(), 21);
    assert_eq!(curve.last().unwrap()[2], "1.0000");

    ok(p, &["rank", "--task", "sft_cbqa", "--predictor", "gbdt", "--rank-all"]);
    let ranking = rows(&p.join("ranking_gbdt_sft_cbqa.csv"));
    assert_eq!(ranking.len(), 51);
    assert!(p.join("recall_gbdt_sft_cbqa.csv").exists());

    ok(p, &["grouped", "--task", "sft_cms", "--factor", "objective", "--proxy", "ppl_sc"]);
    assert!(p.join("grouped_objective_ppl_sc_sft_cms.csv").exists());
    ok(p, &["figures", "grouped", "--task", "sft_cms", "--proxy", "kshot_rag"]);
    assert!(p.join("grouped_objective_kshot_rag_sft_cms.svg").exists());
}
