use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn opinionfit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opinionfit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn printed_objective(o: &Output) -> String {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("objective ").map(str::to_owned))
        .expect("objective line")
}

const RECORDS: &str = "\
blog_id,period,post_id,comment_score,comment_likes,post_likes
b1,1,p1,0.8,3,5
b1,1,p1,0.2,1,5
b1,2,p2,0.5,0,2
b2,1,p3,0.4,2,1
b2,2,p4,0.9,1,4
";

#[test]
fn aggregate_writes_panel_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("records.csv"), RECORDS).unwrap();
    let o = opinionfit(&["aggregate", "records.csv", "panel.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("B = 2, T = 2"));
    assert!(stdout(&o).contains("b1,1,2"));
    let panel = fs::read_to_string(dir.path().join("panel.csv")).unwrap();
    // Blog 1, period 1: one post with comments (0.8, 3 likes) and (0.2, 1 like).
    assert!(panel.lines().nth(1).unwrap().starts_with("b1,0.65,"), "{panel}");
}

#[test]
fn aggregate_missing_cell_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let records: String = RECORDS
        .lines()
        .filter(|l| !l.starts_with("b2,2"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(dir.path().join("records.csv"), records).unwrap();
    let o = opinionfit(&["aggregate", "records.csv", "panel.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("blog b2") && stderr(&o).contains("period 2"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn aggregate_empty_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("records.csv"), "").unwrap();
    let o = opinionfit(&["aggregate", "records.csv", "panel.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_then_eval_reproduces_objective() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("models")).unwrap();
    let o = opinionfit(
        &[
            "fit",
            "bundled",
            "fdg",
            "--lag",
            "0",
            "--t-est",
            "10",
            "--seed",
            "1",
            "--out",
            "models/fdg.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let objective = printed_objective(&o);
    assert!(objective.parse::<f64>().unwrap() <= 0.2005);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("models/fdg.json")).unwrap()).unwrap();
    assert_eq!(json["family"], "fdg");
    assert!(json["A"].is_null() && json["X"].is_null() && json["W"].is_array());

    let o = opinionfit(&["eval", "bundled", "models", "--out", "table.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,lag,sum_of_residuals,mae,mape,rmse_in,rmse_t11,rmse_t12,rmse_out"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2], objective);

    let heat = fs::read_to_string(dir.path().join("table_fdg_lag0_W.csv")).unwrap();
    assert!(
        heat.lines().skip(1).any(|l| l.split(',').skip(1).any(|v| v == "0")),
        "{heat}"
    );
}

#[test]
fn fit_rejects_bad_specs() {
    let dir = tempfile::tempdir().unwrap();
    let o = opinionfit(&["fit", "bundled", "fdgm", "--lag", "0", "--out", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = opinionfit(&["fit", "bundled", "voter", "--out", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    for t_est in ["13", "2"] {
        let o = opinionfit(
            &["fit", "bundled", "fdg", "--t-est", t_est, "--out", "m.json"],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(1));
    }
}

#[test]
fn repo_predictions_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let fit = |out: &str| {
        opinionfit(
            &[
                "fit", "bundled", "repo", "--lag", "2", "--starts", "16", "--seed", "7", "--out", out,
            ],
            dir.path(),
        )
    };
    let a = fit("a.json");
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(printed_objective(&a).parse::<f64>().unwrap() <= 0.0703);
    fit("b.json");
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );

    let o = opinionfit(
        &["predict", "a.json", "bundled", "--horizon", "2", "--out", "pred.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let pred = fs::read_to_string(dir.path().join("pred.csv")).unwrap();
    assert_eq!(pred.lines().count(), 15);
    assert!(stdout(&o).contains("rmse t11") && stdout(&o).contains("rmse t12"));

    let o = opinionfit(
        &["predict", "a.json", "bundled", "--horizon", "0", "--out", "empty.csv"],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("empty.csv")).unwrap(),
        "blog_id,t,predicted\n"
    );
}

#[test]
fn reduced_epo_forecast_errors_match_table() {
    let dir = tempfile::tempdir().unwrap();
    opinionfit(&["fit", "bundled", "repo", "--out", "repo.json"], dir.path());
    let o = opinionfit(
        &["predict", "repo.json", "bundled", "--horizon", "2", "--out", "pred.csv"],
        dir.path(),
    );
    let out = stdout(&o);
    let value = |key: &str| -> f64 {
        out.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!((value("rmse t11") - 0.1346).abs() < 2e-3, "{out}");
    assert!((value("rmse t12") - 0.1457).abs() < 2e-3, "{out}");
}

#[test]
fn fdg_one_step_forecast_is_w_times_last_column() {
    let dir = tempfile::tempdir().unwrap();
    opinionfit(
        &["fit", "bundled", "fdg", "--starts", "1", "--out", "fdg.json"],
        dir.path(),
    );
    let o = opinionfit(
        &["simulate", "fdg.json", "bundled", "--horizon", "1", "--out", "sim.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = opinionfit(
        &["predict", "fdg.json", "bundled", "--horizon", "1", "--out", "pred.csv"],
        dir.path(),
    );
    assert!(o.status.success());
    let sim = fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    let pred = fs::read_to_string(dir.path().join("pred.csv")).unwrap();
    for (s, p) in sim.lines().skip(1).zip(pred.lines().skip(1)) {
        let s: Vec<&str> = s.split(',').collect();
        let p: Vec<&str> = p.split(',').collect();
        assert_eq!(s[1], p[0]);
        assert_eq!(s[3], p[2]);
    }
}

#[test]
fn diagnose_writes_long_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = opinionfit(
        &["diagnose", "bundled", "--tau-max", "3", "--out", "mu.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("mu.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "tau,blog_id,t,mu");
    let row = csv.lines().find(|l| l.starts_with("0,blog1,2,")).unwrap();
    let mu: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((mu - 0.819721).abs() < 1e-5);

    opinionfit(
        &["diagnose", "bundled", "--tau-max", "0", "--out", "mu0.csv"],
        dir.path(),
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("mu0.csv")).unwrap().lines().count(),
        1 + 7 * 11
    );
}

#[test]
fn diagnose_constant_panel_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("flat.csv"),
        "blog_id,p1,p2,p3\nb1,0.5,0.5,0.5\nb2,0.5,0.5,0.5\n",
    )
    .unwrap();
    let o = opinionfit(&["diagnose", "flat.csv", "--out", "mu.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn eval_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("empty")).unwrap();
    let o = opinionfit(&["eval", "bundled", "empty", "--out", "t.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    fs::create_dir(dir.path().join("bad")).unwrap();
    fs::write(dir.path().join("bad/broken.json"), "{ not json").unwrap();
    let o = opinionfit(&["eval", "bundled", "bad", "--out", "t.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.json"), "{}", stderr(&o));
}
