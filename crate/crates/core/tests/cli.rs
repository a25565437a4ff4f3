use std::path::Path;
use std::process::{Command, Output};

use parc::config::Manifest;
use parc::data::RawTable;
use parc::mip::{build_tracking_milp, parse_lp, FeatureBox};
use parc::parc::ParcModel;
use parc::predictor::{predict, r2_score};
use tempfile::TempDir;

fn parc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = parc(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines_with<'a>(text: &'a str, prefix: &str) -> Vec<&'a str> {
    text.lines().filter(|l| l.starts_with(prefix)).collect()
}

fn synth_nl(dir: &Path, n: &str) {
    ok(dir, &["synth", "--experiment", "nonlinear", "--n-samples", n, "--out", "nl.csv"]);
}

#[test]
fn fit_then_predict_reproduces_training_metrics() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_nl(d, "200");
    let fit_out = ok(d, &["fit", "--data", "nl.csv", "--target", "y", "--k", "4", "--model", "m.json"]);
    let eval_out = ok(d, &["evaluate", "--model", "m.json", "--data", "nl.csv", "--label", "train"]);
    assert_eq!(lines_with(&fit_out, "train "), eval_out.lines().collect::<Vec<_>>());

    ok(d, &["predict", "--model", "m.json", "--data", "nl.csv", "--out", "p.csv"]);
    let data = RawTable::read_csv(d.join("nl.csv")).unwrap();
    let preds = RawTable::read_csv(d.join("p.csv")).unwrap();
    assert_eq!(preds.headers, ["region", "y"]);
    let y: Vec<f64> = data.rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let y_hat: Vec<f64> = preds.rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let r2 = r2_score(&y, &y_hat).unwrap();
    assert!(fit_out.contains(&format!("train r2 y {r2}\n")), "{fit_out}");

    let model = ParcModel::load(d.join("m.json")).unwrap();
    for (row, p) in data.rows.iter().zip(&preds.rows) {
        let x: Vec<f64> = row[..2].iter().map(|v| v.parse().unwrap()).collect();
        let direct = predict(&model, &x);
        assert_eq!(p[0], direct.region.to_string());
        assert_eq!(p[1].parse::<f64>().unwrap(), direct.numeric[0]);
    }
}

#[test]
fn reruns_are_byte_identical_and_manifests_record_them() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [a.path(), b.path()] {
        ok(d, &["--seed", "3", "synth", "--experiment", "pwa", "--n-samples", "150", "--out", "pwa.csv"]);
        ok(d, &["--seed", "3", "fit", "--data", "pwa.csv", "--target", "y", "--k", "6", "--model", "m.json"]);
    }
    for f in ["pwa.csv", "m.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let text = std::fs::read_to_string(a.path().join("m.json.manifest.json")).unwrap();
    let m: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(m.command, "fit");
    assert_eq!(m.seed, 3);
    assert_eq!(m.config.parc.k, 6);
    assert_eq!(m.inputs.len(), 1);
    assert_eq!(m.outputs[0].sha256.len(), 64);

    // replaying from the manifest alone gives the same model
    let c = TempDir::new().unwrap();
    std::fs::copy(a.path().join("pwa.csv"), c.path().join("pwa.csv")).unwrap();
    std::fs::copy(a.path().join("m.json.manifest.json"), c.path().join("run.json")).unwrap();
    ok(c.path(), &["--config", "run.json", "fit", "--data", "pwa.csv", "--model", "m.json"]);
    assert_eq!(std::fs::read(a.path().join("m.json")).unwrap(), std::fs::read(c.path().join("m.json")).unwrap());
}

#[test]
fn flags_override_the_config_file() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_nl(d, "120");
    std::fs::write(
        d.join("run.toml"),
        "[data]\ntargets = [\"y\"]\n[parc]\nk = 3\nseparation = \"voronoi\"\nalpha = 0.5\n",
    )
    .unwrap();
    ok(d, &["--config", "run.toml", "fit", "--data", "nl.csv", "--k", "2", "--model", "m.json"]);
    let model = ParcModel::load(d.join("m.json")).unwrap();
    assert_eq!(model.config.k, 2);
    assert_eq!(model.config.alpha, 0.5);
    assert_eq!(model.config.separation.to_string(), "voronoi");
}

#[test]
fn errors_are_one_machine_readable_line() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cases: [(&[&str], &str, i32); 4] = [
        (&["fit", "--data", "missing.csv", "--target", "y", "--model", "m.json"], "io", 1),
        (&["fit", "--nope"], "usage", 2),
        (&["synth", "--experiment", "bogus", "--out", "x.csv"], "invalid_argument", 1),
        (&["--config", "bad.toml", "synth", "--out", "x.csv"], "config", 1),
    ];
    std::fs::write(d.join("bad.toml"), "[parc]\nunknown_key = 1\n").unwrap();
    for (args, kind, code) in cases {
        let out = parc(d, args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with(&format!("parc: error[{kind}]: ")), "{err}");
    }
}

#[test]
fn export_lp_matches_the_library_encoding() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_nl(d, "150");
    ok(d, &["fit", "--data", "nl.csv", "--target", "y", "--k", "3", "--model", "m.json"]);
    ok(d, &["export-lp", "--model", "m.json", "--y-ref", "1.5", "--box-expand", "0.1", "--out", "t.lp"]);
    let model = ParcModel::load(d.join("m.json")).unwrap();
    let bx = FeatureBox::from_model(&model, 0.1).unwrap();
    let expected = build_tracking_milp(&model, &[1.5], &bx).unwrap();
    let text = std::fs::read_to_string(d.join("t.lp")).unwrap();
    assert_eq!(parse_lp(&text).unwrap(), expected);
}

#[test]
fn optimize_reports_a_point_in_the_box() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_nl(d, "200");
    ok(d, &["fit", "--data", "nl.csv", "--target", "y", "--k", "3", "--model", "m.json"]);
    let out = ok(
        d,
        &["optimize", "--model", "m.json", "--y-ref", "1.2", "--out", "o.json", "--export-lp", "o.lp", "--node-limit", "500"],
    );
    assert!(out.starts_with("status Optimal\n"), "{out}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("o.json")).unwrap()).unwrap();
    let model = ParcModel::load(d.join("m.json")).unwrap();
    let x: Vec<f64> = v["x_star"].as_array().unwrap().iter().map(|p| p[1].as_f64().unwrap()).collect();
    assert!(FeatureBox::from_model(&model, 0.05).unwrap().contains(&x, 1e-9));
    let eps = v["epsilon"].as_f64().unwrap();
    let y_hat = predict(&model, &x).numeric[0];
    assert!(((y_hat - 1.2).abs() - eps).abs() < 1e-6, "{y_hat} {eps}");
    assert!(d.join("o.lp").exists());
}

#[test]
fn categorical_columns_round_trip_through_the_cli() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let mut csv = String::from("x,shade,label,y\n");
    for k in 0..120 {
        let x = f64::from(k) / 60.0 - 1.0;
        let shade = ["red", "green", "blue"][k as usize % 3];
        let label = if x > 0.0 { "high" } else { "low" };
        let y = if shade == "red" { 2.0 * x } else { -x };
        csv.push_str(&format!("{x},{shade},{label},{y}\n"));
    }
    std::fs::write(d.join("mixed.csv"), csv).unwrap();
    ok(d, &["fit", "--data", "mixed.csv", "--target", "label,y", "--k", "2", "--model", "m.json"]);
    let model = ParcModel::load(d.join("m.json")).unwrap();
    assert_eq!(model.n_features(), 3);
    ok(d, &["predict", "--model", "m.json", "--data", "mixed.csv", "--out", "p.csv"]);
    let preds = RawTable::read_csv(d.join("p.csv")).unwrap();
    assert_eq!(preds.headers, ["region", "y", "label"]);
    assert!(preds.rows.iter().all(|r| r[2] == "high" || r[2] == "low"));
    let out = ok(d, &["evaluate", "--model", "m.json", "--data", "mixed.csv", "--results", "r.csv"]);
    assert!(out.contains("eval accuracy label "));
    ok(d, &["evaluate", "--model", "m.json", "--data", "mixed.csv", "--results", "r.csv", "--label", "again"]);
    let results = RawTable::read_csv(d.join("r.csv")).unwrap();
    assert_eq!(results.headers[0], "label");
    assert_eq!(results.rows.len(), 6);
}

#[test]
fn select_k_and_benchmark_run_small_grids() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_nl(d, "120");
    let out = ok(
        d,
        &["select-k", "--data", "nl.csv", "--target", "y", "--k-min", "1", "--k-max", "3", "--folds", "3", "--model", "best.json"],
    );
    assert_eq!(lines_with(&out, "K ").len(), 3);
    let best: usize = lines_with(&out, "best K ")[0][7..].parse().unwrap();
    assert_eq!(ParcModel::load(d.join("best.json")).unwrap().config.k, best);

    let out = ok(
        d,
        &[
            "benchmark", "--experiment", "nonlinear", "--repetitions", "1", "--ks", "1,2", "--sigmas", "1", "--modes",
            "softmax", "--n-samples", "100", "--out", "b.csv",
        ],
    );
    assert_eq!(out.lines().count(), 3);
    let table = RawTable::read_csv(d.join("b.csv")).unwrap();
    assert_eq!(table.rows.len(), 2);
    let std_col = table.column_index("train_r2_std").unwrap();
    assert!(table.rows.iter().all(|r| r[std_col].parse::<f64>().unwrap() == 0.0));
}
