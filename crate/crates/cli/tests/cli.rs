use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cyclekit_core::report::Table;
use tempfile::TempDir;

fn cyclekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclekit"))
        .args(args)
        .current_dir(dir)
        .env_remove("CYCLEKIT_FIXTURES")
        .output()
        .expect("binary runs")
}

fn read_table(path: &Path) -> Table {
    Table::read_csv(fs::File::open(path).unwrap()).unwrap()
}

const PLAN: &str = "\
country,kind,start,length,trend_growth,noise_sigma,recovery_quarters,peak,duration,amplitude,recovery_fraction
US,plucking,1970Q1,200,0.5,0.05,8,1990Q1,3,2.0,1.0
US,plucking,1970Q1,200,0.5,0.05,8,2002Q1,4,4.0,1.0
US,plucking,1970Q1,200,0.5,0.05,8,2013Q1,3,1.5,1.0
DE,permanent_drop,1970Q1,200,0.5,0.05,8,1989Q3,3,3.0,0.0
DE,permanent_drop,1970Q1,200,0.5,0.05,8,2001Q1,4,2.0,0.0
DE,permanent_drop,1970Q1,200,0.5,0.05,8,2012Q3,3,1.0,0.0
";

fn simulated(dir: &Path) -> PathBuf {
    fs::write(dir.join("plan.csv"), PLAN).unwrap();
    let out = cyclekit(dir, &["simulate", "--spec", "plan.csv", "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.join("panel.csv");
    fs::write(&path, out.stdout).unwrap();
    path
}

#[test]
fn fixture_report_has_six_regression_columns_and_durations() {
    let tmp = TempDir::new().unwrap();
    let out = cyclekit(tmp.path(), &["report", "--fixture", "table_a1", "--out-dir", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&tmp.path().join("out/unemployment_regressions.csv"));
    assert_eq!(t.headers.len(), 7);
    assert_eq!(t.rows[0][0], "Constant");
    assert_eq!(t.rows[4][0], "Observations");
    assert_eq!(t.rows[4][1], "62");
    let d = read_table(&tmp.path().join("out/durations.csv"));
    let get = |k: &str| d.rows.iter().find(|r| r[0] == k).unwrap()[1].clone();
    assert_eq!(get("max_expansion_quarters"), "114");
    assert!(get("longest_expansion").starts_with("AU 1991Q2-2019Q4"));
}

#[test]
fn date_on_monotone_panel_is_empty_and_succeeds() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("country,variable,quarter,value\n");
    for i in 0..60 {
        csv.push_str(&format!("XX,gdp,{}Q{},{}\n", 1980 + i / 4, i % 4 + 1, 100.0 + i as f64));
    }
    fs::write(tmp.path().join("mono.csv"), csv).unwrap();
    let out = cyclekit(tmp.path(), &["date", "--input", "mono.csv", "--out-dir", "out"]);
    assert!(out.status.success());
    let t = read_table(&tmp.path().join("out/chronology.csv"));
    assert_eq!(t.headers, ["country", "kind", "quarter"]);
    assert!(t.rows.is_empty());
}

#[test]
fn output_regressions_without_gdp_fail_with_input_status() {
    let tmp = TempDir::new().unwrap();
    let out = cyclekit(tmp.path(), &["regress", "--table", "2", "--fixture", "table_a1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing input"));
}

#[test]
fn fixture_directory_override() {
    let tmp = TempDir::new().unwrap();
    let fixtures = tmp.path().join("fx");
    fs::create_dir(&fixtures).unwrap();
    let bundled = include_str!("../../core/fixtures/table_a1.csv");
    let kept: Vec<&str> = bundled.lines().filter(|l| !l.starts_with("US,")).collect();
    fs::write(fixtures.join("table_a1.csv"), kept.join("\n")).unwrap();
    let run = |dir: &Path| {
        Command::new(env!("CARGO_BIN_EXE_cyclekit"))
            .args(["regress", "--table", "1"])
            .args(["--fixture", "table_a1"])
            .current_dir(tmp.path())
            .env("CYCLEKIT_FIXTURES", dir)
            .output()
            .unwrap()
    };
    let out = run(&fixtures);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read_csv(out.stdout.as_slice()).unwrap();
    let n = &t.rows[4];
    assert!(n[1].parse::<usize>().unwrap() < 62);
    assert_eq!(n[3], "39", "remaining group untouched");

    let missing = run(&tmp.path().join("nowhere"));
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("table_a1.csv"));
}

#[test]
fn repeated_runs_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let panel = simulated(tmp.path());
    let again = cyclekit(tmp.path(), &["simulate", "--spec", "plan.csv", "--seed", "7"]);
    assert_eq!(fs::read(&panel).unwrap(), again.stdout);

    for dir in ["a", "b"] {
        let out = cyclekit(tmp.path(), &["report", "--fixture", "table_a1", "--input", "panel.csv", "--out-dir", dir]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 9);
    for n in names {
        assert_eq!(fs::read(tmp.path().join("a").join(&n)).unwrap(), fs::read(tmp.path().join("b").join(&n)).unwrap());
    }
}

#[test]
fn emitted_tables_round_trip() {
    let tmp = TempDir::new().unwrap();
    simulated(tmp.path());
    let out = cyclekit(tmp.path(), &["report", "--fixture", "table_a1", "--input", "panel.csv", "--out-dir", "out"]);
    assert!(out.status.success());
    for entry in fs::read_dir(tmp.path().join("out")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let t = Table::read_csv(text.as_bytes()).unwrap();
        assert_eq!(t.to_csv_string(), text, "{}", path.display());
    }
}

#[test]
fn failed_report_leaves_no_files() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.csv"), "country,variable,quarter,value\nUS,gdp,2000Q5,1\n").unwrap();
    let out = cyclekit(tmp.path(), &["report", "--fixture", "table_a1", "--input", "bad.csv", "--out-dir", "out"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv") && err.contains("line 2"), "{err}");
    let out_dir = tmp.path().join("out");
    assert!(!out_dir.exists() || fs::read_dir(out_dir).unwrap().next().is_none());
}

#[test]
fn degenerate_regressor_is_a_numerical_failure() {
    let tmp = TempDir::new().unwrap();
    let panel = simulated(tmp.path());
    let mut csv = fs::read_to_string(&panel).unwrap();
    for line in csv.clone().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        csv.push_str(&format!("{},unemployment_rate,{},5\n", f[0], f[2]));
    }
    fs::write(&panel, csv).unwrap();
    let out = cyclekit(tmp.path(), &["regress", "--table", "1", "--input", "panel.csv"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_selectors_are_rejected() {
    let tmp = TempDir::new().unwrap();
    for args in [
        &["regress", "--table", "3", "--fixture", "table_a1"][..],
        &["regress", "--table", "1", "--fixture", "table_a1", "--group", "nordic"],
        &["regress", "--table", "1", "--fixture", "table_a1", "--lag", "3"],
        &["filter", "--input", "x.csv", "--horizons", "12:4"],
    ] {
        let out = cyclekit(tmp.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn markdown_tables_carry_the_star_note() {
    let tmp = TempDir::new().unwrap();
    let out = cyclekit(tmp.path(), &["regress", "--table", "1", "--fixture", "table_a1", "--format", "markdown"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("|  | du_expansion (all)"));
    assert!(text.contains("1%, 5% and 10%"));
}
