mod common;

use std::path::Path;
use std::process::{Command, Output};

use curveforge::estimation::{Instrument, PricePanel};
use curveforge::io::{read_panel, write_panel};
use curveforge::models::{G2Params, G2State, ModelParams, ModelState};
use curveforge::montecarlo::{regular_schedule, synth_panel};

use common::*;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curveforge"))
        .current_dir(dir)
        .env_remove("CURVEFORGE_OUTPUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn curve_csv(date: &str) -> String {
    let mut s = String::from("date,maturity_years,discount_factor\n");
    for (t, df) in high_rate_curve().pillars() {
        s.push_str(&format!("{date},{t},{df}\n"));
    }
    s
}

const G2: &str = "a=0.13\nb=0.3526\nsigma=0.2062\neta=0.4892\nrho=-0.99\n";

/// Synthetic G2++ fixture: curve, parameters and 30 weeks of states.
fn g2_fixture(dir: &Path) {
    write(dir, "curve.csv", &curve_csv("2010-01-04"));
    write(dir, "g2.txt", G2);
    let o = run(
        dir,
        &["--output-dir", "fx", "synth", "--model", "g2pp", "--params", "g2.txt", "--curve", "curve.csv",
          "--instrument", "A=2022-01-04", "--instrument", "B=2030-01-04", "--count", "30"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn surface_has_fourteen_maturity_columns() {
    let dir = tempfile::tempdir().unwrap();
    g2_fixture(dir.path());
    let o = run(
        dir.path(),
        &["--output-dir", "out", "surface", "--model", "g2pp", "--params", "g2.txt", "--states", "fx/states.csv",
          "--curve", "curve.csv", "--flat-extrapolation"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(dir.path().join("out/surface.csv"));
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 15);
    assert_eq!(header[0], "date");
    assert_eq!(header[1], "P_1m");
    assert_eq!(header[14], "P_25y");
    assert_eq!(text.lines().count(), 31);
}

#[test]
fn monotone_curve_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "curve.csv", &curve_csv("2014-01-06"));
    let o = run(dir.path(), &["--output-dir", "out", "check-arbitrage", "--curve", "curve.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let violations = read(dir.path().join("out/violations.csv"));
    assert_eq!(violations.lines().count(), 1, "{violations}");
    assert!(dir.path().join("out/arbitrage_report.txt").exists());
}

#[test]
fn inverted_curve_is_reported_with_success_status() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "curve.csv",
        "date,maturity_years,discount_factor\n2014-01-06,0.25,0.99\n2014-01-06,1,0.95\n2014-01-06,2,0.96\n",
    );
    let o = run(dir.path(), &["--output-dir", "out", "check-arbitrage", "--curve", "curve.csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(dir.path().join("out/violations.csv")).lines().count(), 2);
}

#[test]
fn oracle_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["one", "two"] {
        let o = run(dir.path(), &["--output-dir", out, "oracle", "--model", "vasicek", "--seed", "7", "--paths", "5000"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let one = read(dir.path().join("one/oracle.csv"));
    assert_eq!(one, read(dir.path().join("two/oracle.csv")));
    assert!(one.lines().count() >= 3);
}

#[test]
fn panel_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let anchor = date("2010-01-04");
    let synth = synth_panel(
        &ModelParams::G2pp(G2Params::new(0.13, 0.3526, 0.2062, 0.4892, -0.99).unwrap()),
        Some(&high_rate_curve()),
        anchor,
        &regular_schedule(anchor, 7, 200),
        &[
            Instrument { id: "A".into(), maturity: date("2022-01-04") },
            Instrument { id: "B".into(), maturity: date("2030-01-04") },
        ],
        &ModelState::Factors(G2State::new(0.0, 0.0, 0.0)),
        11,
    )
    .unwrap();
    let path = dir.path().join("panel.csv");
    write_panel(&path, &synth.panel).unwrap();
    let back: PricePanel = read_panel(&path, None).unwrap();
    assert_eq!(back.observations().len(), 200);
    for (a, b) in back.observations().iter().zip(synth.panel.observations()) {
        assert_eq!(a.date, b.date);
        for (id, q) in &a.quotes {
            assert_eq!(q.price.to_bits(), b.quotes[id].price.to_bits());
            assert_eq!(q.negotiated, b.quotes[id].negotiated);
        }
    }
    assert_eq!(back, synth.panel);
}

#[test]
fn bad_panel_rows_are_named_by_line() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "panel.csv",
        "date,instrument_id,price,maturity\n2010-01-04,Z,0.9,2020-01-04\n2010-01-11,Z,1.5,2020-01-04\n2010-01-18,Z,abc,2020-01-04\n",
    );
    let o = run(dir.path(), &["--output-dir", "out", "fit-ml", "--model", "vasicek", "--panel", "panel.csv"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("line 4"), "{err}");
    assert!(!dir.path().join("out/params.txt").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "panel.csv", "date,instrument_id,price,maturity\n2010-01-04,Z,0.9,2020-01-04\n");
    let o = run(dir.path(), &["fit-ml", "--model", "holee", "--panel", "panel.csv"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(dir.path(), &["no-such-command"])), 2);
    assert_eq!(code(&run(dir.path(), &["price", "--model", "vasicek"])), 2);
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
}

#[test]
fn price_command_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.txt", "model=vasicek\na=1.7051\nb=0.0937\nsigma=0.3721\n");
    write(dir.path(), "s.txt", "t=0\nr=0.05\n");
    let o = run(
        dir.path(),
        &["--output-dir", "out", "price", "--model", "vasicek", "--params", "p.txt", "--state", "s.txt", "--maturity", "5"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(dir.path().join("out/price.txt"));
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("price="))
        .unwrap_or_else(|| panic!("no price in {text}"))
        .trim()
        .parse()
        .unwrap();
    let expected = curveforge::models::VasicekParams::new(1.7051, 0.0937, 0.3721).unwrap().price(0.05, 0.0, 5.0).unwrap();
    assert_eq!(value, expected);
}

#[test]
fn config_file_is_overridden_by_flags_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.conf", "# oracle settings\nmodel = vasicek\npaths = 2000\nseed = 3\n");
    let o = run(dir.path(), &["--output-dir", "out", "--config", "run.conf", "oracle", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let log = read(dir.path().join("out/run_log.jsonl"));
    let entry: serde_json::Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert_eq!(entry["command"], "oracle");
    assert_eq!(entry["seed"], 5);
    assert_eq!(entry["config_hash"].as_str().unwrap().len(), 64);
    assert!(entry["results"].is_object());
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_curveforge"))
        .current_dir(dir.path())
        .env("CURVEFORGE_OUTPUT_DIR", "from-env")
        .args(["oracle", "--model", "hullwhite", "--paths", "1000", "--maturities", "1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("from-env/oracle.csv").exists());
}

#[test]
fn calibrate_writes_summary_rows() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "curve.csv", &curve_csv("2014-01-06"));
    let curve = high_rate_curve();
    let hw = curveforge::models::HullWhiteParams::new(0.0813, 0.0215).unwrap();
    let mut xs = String::from("date,maturity_years,zero_price,short_rate\n");
    for (k, day) in ["2014-01-13", "2014-01-20"].iter().enumerate() {
        let t = 7.0 * (k + 1) as f64 / 365.0;
        for tau in [1.0, 2.0, 5.0, 10.0, 20.0] {
            xs.push_str(&format!("{day},{tau},{},0.095\n", hw.price(&curve, 0.095, t, t + tau).unwrap()));
        }
    }
    write(dir.path(), "xs.csv", &xs);
    let o = run(
        dir.path(),
        &["--output-dir", "out", "calibrate", "--model", "hullwhite", "--cross-section", "xs.csv", "--curve", "curve.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(dir.path().join("out/calibration_summary.csv"));
    assert!(summary.starts_with("date,param_name,value,objective,converged\n"));
    assert!(summary.lines().any(|l| l.starts_with("mean,a,")), "{summary}");
    assert_eq!(summary.lines().filter(|l| l.starts_with("2014-01-")).count(), 4);
}

#[test]
fn bootstrap_builds_curve_from_bonds() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "bonds.csv",
        "id,face,coupon_rate,frequency,maturity,first_coupon\n\
         B6,100,0,1,2014-07-05,2014-07-05\n\
         Z1,100,0,1,2015-01-05,2015-01-05\n\
         C2,100,0.05,1,2016-01-05,2015-01-05\n\
         C5,100,0.06,2,2019-01-05,2014-07-05\n",
    );
    write(dir.path(), "quotes.csv", "id,settlement,price\nB6,2014-01-06,98\nZ1,2014-01-06,96\nC2,2014-01-06,99.5\nC5,2014-01-06,101\n");
    let o = run(dir.path(), &["--output-dir", "out", "bootstrap", "--bonds", "bonds.csv", "--quotes", "quotes.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curves = curveforge::io::read_curves(&dir.path().join("out/curve.csv")).unwrap();
    assert_eq!(curves.len(), 1);
    assert_eq!(curves[0].date, date("2014-01-06"));
    assert!(curves[0].curve.pillars().len() >= 4);
}
