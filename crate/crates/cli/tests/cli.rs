use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbs-spectra"))
}

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn close(v: &Value, expected: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - expected).abs() <= tol
}

#[test]
fn pressure_examples() {
    let golden = json(&run(&[
        "pressure",
        path(&model("golden-mean.json")),
        "--oracle-depth",
        "40",
    ]));
    assert!(close(&golden["pressure"], 0.4812118251, 1e-10));
    assert!(golden["oracle"]["max_deviation"].as_f64().unwrap() < 1e-12);

    let p1 = json(&run(&["pressure", path(&model("p1-third.json"))]));
    assert!(close(&p1["pressure"], 0.0, 1e-12));
}

#[test]
fn malformed_models_exit_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("{\"transition\": [[1,1],[1,1]]", "malformed JSON"),
        (
            r#"{"transition": [[1,1],[1,1]], "potential": {"order": 1}}"#,
            "potential.values",
        ),
        (
            r#"{"transition": [[1,1],[1,1]], "potential": {"order": 1, "values": {"1": 0, "3": 1}}}"#,
            "\"3\"",
        ),
    ];
    for (k, (text, needle)) in cases.iter().enumerate() {
        let file = dir.path().join(format!("bad{k}.json"));
        std::fs::write(&file, text).unwrap();
        let out = run(&["pressure", path(&file)]);
        assert_eq!(out.status.code(), Some(2));
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle), "{stderr}");
    }
    assert_eq!(
        run(&["pressure", "/nonexistent/model.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn spectrum_summary_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let summary = json(&run(&[
        "spectrum",
        path(&model("p1-third.json")),
        "--out",
        path(&csv),
    ]));
    assert!(close(&summary["alpha_min"], 0.405465, 1e-6));
    assert!(close(&summary["alpha_max"], 1.098612, 1e-6));
    assert!(close(&summary["peak"]["E"], std::f64::consts::LN_2, 1e-6));
    assert!(close(&summary["measure_entropy"], 0.636514, 1e-6));
    assert_eq!(summary["degenerate"], false);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,alpha,beta,E,flags"));
    assert_eq!(lines.count(), 161);

    let constant = json(&run(&["spectrum", path(&model("full2-constant.json"))]));
    assert_eq!(constant["degenerate"], true);
    assert!(close(
        &constant["alpha_min"],
        constant["alpha_max"].as_f64().unwrap(),
        1e-12
    ));

    let grid = ["--qmin", "-5", "--qmax", "5", "--qstep", "0.5"];
    let direct = run(&[&["spectrum", path(&model("l3-full2.json"))][..], &grid].concat());
    let recoded_model = dir.path().join("recoded.json");
    assert!(run(&[
        "recode",
        path(&model("l3-full2.json")),
        "--out",
        path(&recoded_model)
    ])
    .status
    .success());
    let recoded = run(&[&["spectrum", path(&recoded_model)][..], &grid].concat());
    let (a, b) = (json(&direct), json(&recoded));
    for key in [
        "alpha_min",
        "alpha_max",
        "topological_entropy",
        "measure_entropy",
    ] {
        assert!(close(&a[key], b[key].as_f64().unwrap(), 1e-10), "{key}");
    }
}

#[test]
fn bad_grid_is_an_argument_error() {
    let out = run(&["spectrum", path(&model("p1-third.json")), "--qstep", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_verdicts_exit_zero() {
    let eq = json(&run(&[
        "compare",
        path(&model("p1-third.json")),
        path(&model("p2-third.json")),
    ]));
    assert_eq!(eq["verdict"], "equal");

    let integer_grid = ["--qmin", "0", "--qmax", "3", "--qstep", "1"];
    let (f, g) = (model("p1-third.json"), model("p1-quarter.json"));
    let args = [&["compare", path(&f), path(&g)][..], &integer_grid].concat();
    let distinct = json(&run(&args));
    assert_eq!(distinct["verdict"], "distinct");
    assert_eq!(distinct["witness"]["q"], 2.0);

    let dir = tempfile::tempdir().unwrap();
    let swapped = dir.path().join("swapped.json");
    std::fs::write(
        &swapped,
        r#"{"transition": [[1,1],[1,1]], "potential": {"order": 2, "values": {"11": 0.6, "12": -0.4, "21": 0.2, "22": 0.1}}}"#,
    )
    .unwrap();
    let original = dir.path().join("original.json");
    std::fs::write(
        &original,
        r#"{"transition": [[1,1],[1,1]], "potential": {"order": 2, "values": {"11": 0.1, "12": 0.2, "21": -0.4, "22": 0.6}}}"#,
    )
    .unwrap();
    let eq = json(&run(&["compare", path(&original), path(&swapped)]));
    assert_eq!(eq["verdict"], "equal");
}

#[test]
fn classify_emits_a_parseable_twin() {
    let report = json(&run(&["classify", path(&model("p1-third.json"))]));
    assert_eq!(report["in_e"], false);
    assert_eq!(report["detected"]["kind"], "P1");
    let dir = tempfile::tempdir().unwrap();
    let twin = dir.path().join("twin.json");
    std::fs::write(&twin, report["twin"].to_string()).unwrap();
    let eq = json(&run(&[
        "compare",
        path(&model("p1-third.json")),
        path(&twin),
    ]));
    assert_eq!(eq["verdict"], "equal");
    let twin_report = json(&run(&["classify", path(&twin)]));
    assert_eq!(twin_report["detected"]["kind"], "P2");

    let golden = json(&run(&["classify", path(&model("golden-mean-tilted.json"))]));
    assert_eq!(golden["strong_rigid"], true);

    let ring = json(&run(&["classify", path(&model("ring3.json"))]));
    assert_eq!(ring["case"], "general");
    assert_eq!(ring["condition_a1"], true);
    assert!(ring["in_e"].is_null());
}

#[test]
fn gibbs_audit_examples_and_cap() {
    let audit = json(&run(&[
        "gibbs-audit",
        path(&model("p1-third.json")),
        "--depth",
        "12",
    ]));
    assert!(close(&audit["constant"], 2.0, 1e-10));
    assert!(close(&audit["observed_min"], 0.5, 1e-10));
    assert!(close(&audit["observed_max"], 2.0, 1e-10));

    let constant = json(&run(&["gibbs-audit", path(&model("full2-constant.json"))]));
    assert!(close(&constant["constant"], 1.0, 1e-10));

    let dir = tempfile::tempdir().unwrap();
    let full4 = dir.path().join("full4.json");
    std::fs::write(
        &full4,
        r#"{"transition": [[1,1,1,1],[1,1,1,1],[1,1,1,1],[1,1,1,1]], "potential": {"order": 1, "values": {"1": 0, "2": 0, "3": 0, "4": 0}}}"#,
    )
    .unwrap();
    assert_eq!(
        run(&["gibbs-audit", path(&full4), "--depth", "40"])
            .status
            .code(),
        Some(5)
    );
}

#[test]
fn sample_is_deterministic_and_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let (h1, h2) = (dir.path().join("h1.csv"), dir.path().join("h2.csv"));
    let args = |h: &Path| {
        vec![
            "sample".to_string(),
            path(&model("p1-third.json")).to_string(),
            "--n".into(),
            "2000".into(),
            "--trials".into(),
            "2000".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            path(h).to_string(),
        ]
    };
    let first = bin().args(args(&h1)).output().unwrap();
    let second = bin().args(args(&h2)).output().unwrap();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read(&h1).unwrap(), std::fs::read(&h2).unwrap());

    let summary = json(&first);
    let (mean, se) = (
        summary["mean"].as_f64().unwrap(),
        summary["std_error"].as_f64().unwrap(),
    );
    assert!((mean - 0.636514).abs() <= 3.0 * se + 1e-12);

    let text = std::fs::read_to_string(&h1).unwrap();
    assert!(text.starts_with("bucket_low,bucket_high,count\n"));
    let total: u64 = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 2000);

    let uniform = json(&run(&[
        "sample",
        path(&model("p1-half.json")),
        "--n",
        "500",
        "--trials",
        "200",
    ]));
    assert_eq!(uniform["std_error"], 0.0);
}

#[test]
fn every_bundled_model_validates_and_recodes() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("models")).unwrap() {
        let file = entry.unwrap().path();
        json(&run(&["pressure", path(&file)]));
        let recoded = dir.path().join("recoded.json");
        let out = run(&["recode", path(&file), "--out", path(&recoded)]);
        assert!(out.status.success());
        let again = json(&run(&["pressure", path(&recoded)]));
        let original = json(&run(&["pressure", path(&file)]));
        assert!(
            close(
                &again["pressure"],
                original["pressure"].as_f64().unwrap(),
                1e-10
            ),
            "{}",
            file.display()
        );
    }
}
