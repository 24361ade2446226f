use std::process::Command;

use souvlaki::cli::run_with;
use souvlaki::rational;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(std::iter::once("souvlaki").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    out
}

/// Header line plus CSV records as maps from column name to field.
fn csv_rows(text: &str) -> (String, Vec<Vec<(String, String)>>) {
    let (header, body) = text.split_once('\n').unwrap();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let names: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = reader
        .records()
        .map(|r| names.iter().cloned().zip(r.unwrap().iter().map(str::to_owned)).collect())
        .collect();
    (header.to_owned(), rows)
}

fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == name).unwrap_or_else(|| panic!("no column {name}")).1
}

#[test]
fn build_exports_a_sorted_edge_list() {
    let out = ok(&["build", "--K", "3", "--export", "edges"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("# souvlaki v1 K=3 d=7"));
    let edges: Vec<&str> = lines.collect();
    let spine = souvlaki::assembly::spine_truncation(3, 7, Default::default(), 1 << 22).unwrap();
    assert_eq!(edges.len(), spine.graph.edge_count());
    assert!(edges.windows(2).all(|w| w[0] < w[1]));
    for e in edges.iter().take(100) {
        let (a, b) = e.split_once(' ').unwrap();
        assert!(a < b);
        a.parse::<souvlaki::assembly::CanonicalVertex>().unwrap();
        b.parse::<souvlaki::assembly::CanonicalVertex>().unwrap();
    }
}

#[test]
fn census_reports_the_t2_probability() {
    let out = ok(&["census", "--n", "2", "--d", "7"]);
    let (header, rows) = csv_rows(&out);
    assert!(header.starts_with("# souvlaki v1 census n=2 d=7"));
    assert_eq!(field(&rows[0], "p_kn_census"), "686/6706");
    assert_eq!(rational::parse(field(&rows[0], "p_kn")).unwrap(), rational::frac(686, 6706));
    assert_eq!(field(&rows[0], "agrees"), "true");
    assert_eq!(field(&rows[1], "u_k"), "1112");
}

#[test]
fn flow_modes_agree() {
    let analytic = ok(&["flow", "--k", "2", "--mode", "analytic"]);
    let exact = ok(&["flow", "--k", "2", "--mode", "exact"]);
    let (_, a) = csv_rows(&analytic);
    let (_, e) = csv_rows(&exact);
    assert_eq!(field(&a[0], "E_total"), "18523/486");
    assert_eq!(a, e);
    let range = ok(&["flow", "--k", "1..3"]);
    assert_eq!(csv_rows(&range).1.len(), 3);
}

fn is_ratio(s: &str) -> bool {
    let digits = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
    matches!(s.trim_start_matches('-').split_once('/'), Some((p, q)) if digits(p) && digits(q))
}

#[test]
fn numeric_fields_parse_back_losslessly() {
    let outputs = [
        ok(&["census", "--n", "3"]),
        ok(&["flow", "--k", "1..4"]),
        ok(&["resist", "--K", "2", "--trees", "bfs,wilson", "--seed", "4"]),
        ok(&["walk", "--seed", "2", "--starts", "3", "--runs", "50"]),
    ];
    let mut reals = 0;
    for out in &outputs {
        for row in csv_rows(out).1 {
            for (name, value) in row {
                if is_ratio(&value) {
                    let q = rational::parse(&value).unwrap_or_else(|| panic!("{name}={value}"));
                    // The census ratio is printed unreduced on purpose.
                    if name != "p_kn_census" {
                        assert_eq!(rational::format(&q), value, "{name}");
                    }
                } else if value.contains('e') && value.parse::<f64>().is_ok() {
                    let x: f64 = value.parse().unwrap();
                    assert_eq!(rational::format_real(x), value, "{name}");
                    reals += 1;
                }
            }
        }
    }
    assert!(reals > 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["walk", "--seed", "7", "--starts", "5", "--runs", "200"][..],
        &["lwc", "--seed", "7", "--samples", "100"],
        &["mtp", "--seed", "7", "--functions", "3"],
        &["delta", "--k", "1", "--mode", "sampled", "--samples", "1000", "--seed", "7"],
        &["export", "--K", "2", "--part", "full"],
    ] {
        assert_eq!(ok(args), ok(args), "{args:?}");
    }
    let jsonl = ok(&["walk", "--seed", "7", "--starts", "2", "--runs", "20", "--format", "jsonl"]);
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["souvlaki"], "v1");
    assert!(first["header"].as_str().unwrap().contains("seed=7"));
}

#[test]
fn flag_errors_exit_two_with_usage() {
    for args in [
        &["build", "--K", "2", "--d", "5"][..],
        &["walk", "--n", "2"],
        &["flow", "--k", "x"],
        &["census", "--bogus"],
        &["resist", "--K", "2", "--trees", "wilson"],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(err.contains("Usage") || err.contains("usage"), "{args:?}: {err}");
    }
}

#[test]
fn budget_and_help_exit_codes() {
    assert_eq!(run(&["build", "--n", "2", "--budget", "10"]).0, 3);
    assert_eq!(run(&["build", "--budget", "0", "--n", "1"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["census", "--help"]).0, 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# defaults\nn = 2\nbudget = 10\n").unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["--config", p, "build"]).0, 3);
    let out = ok(&["--config", p, "build", "--budget", "100000"]);
    assert!(out.starts_with("# souvlaki v1 build n=2"));
    std::fs::write(&path, "nonsense = 1\n").unwrap();
    assert_eq!(run(&["--config", p, "census", "--n", "1"]).0, 2);
}

#[test]
fn budget_environment_variable_is_a_default() {
    let exe = env!("CARGO_BIN_EXE_souvlaki");
    let status = Command::new(exe).args(["build", "--n", "2"]).env("SOUVLAKI_BUDGET", "10").output().unwrap();
    assert_eq!(status.status.code(), Some(3));
    let status = Command::new(exe)
        .args(["build", "--n", "2", "--budget", "100000"])
        .env("SOUVLAKI_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8(status.stdout).unwrap().contains("8470"));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("census.csv");
    let stdout = ok(&["census", "--n", "2"]);
    let written = ok(&["census", "--n", "2", "--out", path.to_str().unwrap()]);
    assert!(written.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
}
