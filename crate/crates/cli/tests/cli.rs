use std::path::Path;
use std::process::{Command, Output};

fn riskbai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskbai")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn experiment_smoke_has_one_row_per_estimator_and_budget() {
    let o = riskbai(&["run-experiment", "--instance", "lomax-cvar", "--trials", "40", "--budgets", "500,1000"]);
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"estimator") && header.contains(&"T"), "{header:?}");
    let list = stdout(&riskbai(&["list-instances"]));
    let block = list.split("lomax-cvar").nth(1).unwrap();
    let estimators = block.lines().find(|l| l.trim_start().starts_with("estimators:")).unwrap();
    let families = estimators.split(':').nth(1).unwrap().split(", ").count();
    assert_eq!(rows(&text).len(), 2 * families);
}

#[test]
fn reruns_and_worker_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let o = riskbai(&[
            "run-experiment", "--instance", "mixed-cvar", "--trials", "60", "--budgets", "800", "--workers", workers,
            "--seed", "7", "--out", p,
        ]);
        stdout(&o);
        std::fs::read(&path).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "8"));
}

#[test]
fn invalid_config_fails_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.toml");
    std::fs::write(
        &path,
        "trials = 10\nbudgets = [500]\n\n[objective]\nalpha = 0.95\nxi1 = 1.0\nxi2 = 0.0\n\n[[arms]]\nkind = \"lomax\"\nmean = 1.0\nshape = 0.5\n\n[[arms]]\nkind = \"exponential\"\nmean = 1.0\n",
    )
    .unwrap();
    let o = riskbai(&["run-experiment", "--config", path.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("shape"), "{err}");
    assert!(!Path::new(&dir.path().join("out.csv")).exists());
}

#[test]
fn unknown_flag_is_rejected() {
    assert!(!riskbai(&["run-experiment", "--instance", "lomax-cvar", "--bogus"]).status.success());
    assert!(!riskbai(&["compute-bounds"]).status.success());
}

#[test]
fn bounds_csv_has_expected_rows() {
    let text = stdout(&riskbai(&[
        "compute-bounds", "--moment-b", "2", "--moment-v", "1", "--delta", "1", "--alpha", "0.05", "--n", "2000",
    ]));
    assert_eq!(text.lines().next(), Some("name,value,validity_threshold"));
    let r = rows(&text);
    for name in ["v_emp", "empirical_cvar", "truncated_cvar", "median_of_cvars", "truncated_mean"] {
        let row = r.iter().find(|row| row[0] == name).unwrap_or_else(|| panic!("missing {name}"));
        let v: f64 = row[1].parse().unwrap();
        assert!(v.is_finite() && v >= 0.0, "{name} = {v}");
    }
    let with_instance = stdout(&riskbai(&["compute-bounds", "--dist", "lomax:mean=1,shape=1.8", "--p", "1.7", "--delta", "0.1", "--instance", "lomax-cvar"]));
    assert!(with_instance.contains("sr_truncation,"), "{with_instance}");
}

#[test]
fn demo_kl_shrinks_while_objective_grows() {
    let text = stdout(&riskbai(&["demo-lower-bound"]));
    let r = rows(&text);
    assert_eq!(r[0][0], "base");
    let base: f64 = r[0][3].parse().unwrap();
    let kl: Vec<f64> = r[1..].iter().map(|row| row[2].parse().unwrap()).collect();
    assert!(kl.windows(2).all(|w| w[1] < w[0]), "{kl:?}");
    let last: f64 = r.last().unwrap()[3].parse().unwrap();
    assert!(last > 10.0 * base, "{last} vs {base}");

    let text = stdout(&riskbai(&["demo-lower-bound", "--base", "exponential:mean=1", "--index", "1.5", "--b", "0.5,2"]));
    let r = rows(&text);
    assert!(r[1][5].starts_with("inadmissible"), "{text}");
    assert_eq!(r[2][5], "ok");
}

#[test]
fn validation_reports_each_n() {
    let text = stdout(&riskbai(&[
        "validate-concentration", "--dist", "exponential:mean=1", "--n", "50,100", "--delta", "1", "--batches", "2000",
    ]));
    let r = rows(&text);
    assert_eq!(r.len(), 2);
    for row in &r {
        assert_eq!(row.len(), 9);
        assert!(["pass", "inconclusive"].contains(&row[8].as_str()), "{row:?}");
    }
}

#[test]
fn list_names_builtins() {
    let text = stdout(&riskbai(&["list-instances"]));
    for name in ["lomax-mean", "lomax-cvar", "mixed-cvar"] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}
