mod common;

use std::fs;

use common::{biotwin, ok, p, small_corpus, stderr};
use serde_json::Value;

fn manifest(dir: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("run_manifest.json")).unwrap()).unwrap()
}

fn table_rows(path: &std::path::Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(String::from).collect()
}

#[test]
fn default_generate_writes_161_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("corpus");
    ok(&["generate", "--seed", "1", "-o", p(&out)]);
    assert_eq!(fs::read_dir(out.join("traces")).unwrap().count(), 161);
    let m = manifest(&out);
    assert_eq!(m["command"], "generate");
    assert_eq!(m["seed"], 1);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 162);
    let corpus: Value = serde_json::from_str(&fs::read_to_string(out.join("corpus.json")).unwrap()).unwrap();
    assert_eq!(corpus["total_samples"], 123_786);
}

#[test]
fn empty_spec_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("empty.toml");
    fs::write(&spec, "quiet_period_s = 1.0\nseed = 0\nentries = []\n").unwrap();
    let out = biotwin(&["generate", "--spec", p(&spec), "-o", p(&tmp.path().join("c"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[empty-input]"), "{}", stderr(&out));
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = small_corpus(&tmp.path().join("a"));
    let b = small_corpus(&tmp.path().join("b"));
    for entry in fs::read_dir(a.join("traces")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join("traces").join(&name)).unwrap(), fs::read(b.join("traces").join(&name)).unwrap());
    }
    assert_eq!(fs::read(a.join("corpus.json")).unwrap(), fs::read(b.join("corpus.json")).unwrap());
}

#[test]
fn unknown_model_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path());
    let out = biotwin(&["train-static", "--corpus", p(&corpus), "--model", "svm", "-o", p(&tmp.path().join("m"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[unknown-model]"), "{}", stderr(&out));
}

#[test]
fn forest_search_picks_params_from_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path());
    let out = tmp.path().join("rf");
    ok(&["train-static", "--corpus", p(&corpus), "--model", "rf", "--n-iter", "4", "--k-folds", "3", "-o", p(&out)]);
    let search: Value = serde_json::from_str(&fs::read_to_string(out.join("search.json")).unwrap()).unwrap();
    let best = &search["best"];
    assert!([100, 200, 300].contains(&best["n_estimators"].as_u64().unwrap()));
    assert!([4, 6, 8, 10].contains(&best["max_depth"].as_u64().unwrap()));
    assert!([2, 5, 10].contains(&best["min_samples_split"].as_u64().unwrap()));
    assert!([1, 2, 4].contains(&best["min_samples_leaf"].as_u64().unwrap()));
    assert_eq!(search["scores"].as_array().unwrap().len(), 4);
    // 12 experiments at 80/20
    assert_eq!(table_rows(&out.join("scatter.tsv")).len(), 3);
    for f in ["model.json", "metrics.tsv", "residuals.tsv", "histogram.tsv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path());
    let config = tmp.path().join("static.toml");
    fs::write(&config, "[nn]\nepochs = 7\nbatch_size = 4\n").unwrap();
    let out = tmp.path().join("nn");
    ok(&[
        "train-static",
        "--corpus",
        p(&corpus),
        "--model",
        "nn",
        "--config",
        p(&config),
        "--epochs",
        "3",
        "-o",
        p(&out),
    ]);
    let m = manifest(&out);
    let nn = &m["invocation"]["config"]["nn"];
    assert_eq!(nn["epochs"], 3);
    assert_eq!(nn["batch_size"], 4);
    // initial loss plus one row per epoch
    assert_eq!(table_rows(&out.join("history.tsv")).len(), 4);
}

#[test]
fn bad_config_file_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path());
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "[nn]\nepochs = \"many\"\n").unwrap();
    let out = biotwin(&["train-static", "--corpus", p(&corpus), "--model", "nn", "--config", p(&config), "-o", "x"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[config]"), "{}", stderr(&out));
}

#[test]
fn one_experiment_corpus_is_too_small() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("one.toml");
    let one = common::SMALL_SPEC.replacen("count = 4", "count = 1", 1);
    let one = one.split("[[entries]]").take(2).collect::<Vec<_>>().join("[[entries]]");
    fs::write(&spec, one).unwrap();
    let corpus = tmp.path().join("c");
    ok(&["generate", "--spec", p(&spec), "-o", p(&corpus)]);
    let out = biotwin(&["train-static", "--corpus", p(&corpus), "--model", "rf", "-o", p(&tmp.path().join("m"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[corpus-too-small]"), "{}", stderr(&out));
}

#[test]
fn zero_epochs_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path());
    let out = biotwin(&["train-dynamic", "--corpus", p(&corpus), "--epochs", "0", "-o", p(&tmp.path().join("d"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[invalid-config]"), "{}", stderr(&out));
}

#[test]
fn dynamic_training_forecast_and_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path());
    let model = tmp.path().join("lstm");
    ok(&["train-dynamic", "--corpus", p(&corpus), "-o", p(&model)]);
    assert_eq!(table_rows(&model.join("history.tsv")).len(), 31);
    let artifact = model.join("model.json");

    let trace = corpus.join("traces/exp_0000_S1.tsv");
    let len = table_rows(&trace).len();
    let tf = tmp.path().join("tf");
    ok(&["forecast", "--model", p(&artifact), "--trace", p(&trace), "--mode", "teacher_forced", "-o", p(&tf)]);
    let rows = table_rows(&tf.join("forecast.tsv"));
    assert_eq!(rows.len(), len - 10);
    assert_eq!(table_rows(&tf.join("forecast_zoom.tsv")), rows[..100].to_vec());
    let first: Vec<&str> = rows[0].split('\t').collect();
    assert_eq!(first[0], "0.400000");
    assert_eq!(first[3], "teacher_forced");

    // autoregressive rollouts from flat traces stay inside the scaler range ±0.5
    let art: Value = serde_json::from_str(&fs::read_to_string(&artifact).unwrap()).unwrap();
    let scaler = &art["artifact"]["scaler"];
    let (lo, hi) = (scaler["observed_min"].as_f64().unwrap(), scaler["observed_max"].as_f64().unwrap());
    let span = hi - lo;
    for frac in [0.0, 0.1, 0.5, 1.0] {
        let level = lo + frac * span;
        let flat = tmp.path().join("flat.tsv");
        let body: String = (0..200).map(|i| format!("{:.6}\t{level:e}\n", i as f64 * 0.04)).collect();
        fs::write(&flat, format!("time_s\tforce_N\n{body}")).unwrap();
        let ar = tmp.path().join("ar");
        ok(&["forecast", "--model", p(&artifact), "--trace", p(&flat), "--mode", "autoregressive", "-o", p(&ar)]);
        for row in table_rows(&ar.join("forecast.tsv")) {
            let pred: f64 = row.split('\t').nth(2).unwrap().parse().unwrap();
            let scaled = (pred - lo) / span;
            assert!((-0.5..=1.5).contains(&scaled), "level {frac}: scaled prediction {scaled}");
        }
    }

    let ev = tmp.path().join("ev");
    ok(&["evaluate", "--model", p(&artifact), "--corpus", p(&corpus), "-o", p(&ev)]);
    let metrics = fs::read_to_string(ev.join("metrics.tsv")).unwrap();
    assert!(metrics.contains("r2_scaled"));
}

#[test]
fn forecast_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path());
    let rf = tmp.path().join("rf");
    ok(&["train-static", "--corpus", p(&corpus), "--model", "rf", "--no-search", "-o", p(&rf)]);
    let trace = corpus.join("traces/exp_0000_S1.tsv");
    let out = biotwin(&["forecast", "--model", p(&rf.join("model.json")), "--trace", p(&trace), "-o", "f"]);
    assert!(stderr(&out).starts_with("error[incompatible-artifact]"), "{}", stderr(&out));

    let model = tmp.path().join("lstm");
    ok(&["train-dynamic", "--corpus", p(&corpus), "--epochs", "1", "-o", p(&model)]);
    let missing = tmp.path().join("missing.tsv");
    let out = biotwin(&["forecast", "--model", p(&model.join("model.json")), "--trace", p(&missing), "-o", "f"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[missing-file]"), "{}", stderr(&out));
    let out =
        biotwin(&["forecast", "--model", p(&model.join("model.json")), "--trace", p(&trace), "--mode", "x", "-o", "f"]);
    assert!(stderr(&out).starts_with("error[invalid-config]"), "{}", stderr(&out));
}

#[test]
fn replay_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path());
    let nn = tmp.path().join("nn");
    ok(&["train-static", "--corpus", p(&corpus), "--model", "nn-baseline", "--seed", "4", "-o", p(&nn)]);
    let again = tmp.path().join("again");
    ok(&["replay", p(&nn.join("run_manifest.json")), "-o", p(&again)]);
    for f in ["model.json", "metrics.tsv", "scatter.tsv", "residuals.tsv", "history.tsv"] {
        assert_eq!(fs::read(nn.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
    let m = manifest(&again);
    assert_eq!(m["seed"], 4);
    assert_eq!(m["invocation"]["model"], "nn-baseline");
}
