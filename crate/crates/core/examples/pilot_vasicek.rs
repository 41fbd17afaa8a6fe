//! Replication study behind the Vasicek recovery tolerances.
//!
//! Simulates 100 weekly series of 2000 observations of an on-the-run zero
//! that rolls into a new bond every 5 years, fits each by maximum likelihood
//! and writes the estimates and relative errors to
//! `tests/fixtures/pilot_vasicek.csv`.
//!
//! A single long bond identifies only `sigma / a`, and a constant short tenor
//! leaves `b` to the sample mean of the rate; the rolled bond sweeps the time
//! to maturity through both regimes.
//!
//! Run with `cargo run --release -p curveforge --example pilot_vasicek`.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use curveforge::curve::year_fraction;
use curveforge::estimation::{fit_ml, AlignedPanel, FitConfig};
use curveforge::io::atomic_write;
use curveforge::models::{ModelKind, ModelParams, VasicekParams};
use curveforge::montecarlo::{regular_schedule, simulate_ou, StreamKey};

const TRUTH: (f64, f64, f64) = (1.7, 0.09, 0.37);
const ROLL_YEARS: f64 = 5.0;
const REPLICATIONS: u64 = 100;
const FIRST_SEED: u64 = 1000;

/// Maturity of the bond on the run at `t`: the next multiple of the roll
/// period at least one week away.
fn on_the_run(t: f64) -> f64 {
    ((t + 7.0 / 365.0) / ROLL_YEARS).ceil() * ROLL_YEARS
}

fn panel(p: &VasicekParams, seed: u64) -> curveforge::Result<AlignedPanel> {
    let start = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
    let dates = regular_schedule(start, 7, 2000);
    let times: Vec<f64> = dates.iter().map(|d| year_fraction(start, *d).map(|y| y.value())).collect::<Result<_, _>>()?;
    let rates = simulate_ou(p.a, p.b, p.sigma, p.b, &times, &mut StreamKey::new(seed).path(0))?;
    let maturities: Vec<Vec<f64>> = times.iter().map(|&t| vec![on_the_run(t)]).collect();
    let prices = times
        .iter()
        .zip(&rates)
        .zip(&maturities)
        .map(|((&t, &r), m)| p.price(r, t, m[0]).map(|v| vec![v]))
        .collect::<Result<_, _>>()?;
    Ok(AlignedPanel { ids: vec!["ZROLL".into()], dates, times, maturities, prices })
}

fn main() -> curveforge::Result<()> {
    let truth = VasicekParams::new(TRUTH.0, TRUTH.1, TRUTH.2)?;
    let mut csv = String::from("seed,a_hat,b_hat,sigma_hat,rel_a,rel_b,rel_sigma\n");
    let mut errs = Vec::new();
    for i in 0..REPLICATIONS {
        let seed = FIRST_SEED + i;
        let fit = fit_ml(ModelKind::Vasicek, &panel(&truth, seed)?, None, &FitConfig::default())?;
        let ModelParams::Vasicek(p) = fit.params else { unreachable!() };
        let rel = ((p.a / TRUTH.0 - 1.0).abs(), (p.b / TRUTH.1 - 1.0).abs(), (p.sigma / TRUTH.2 - 1.0).abs());
        writeln!(csv, "{seed},{},{},{},{},{},{}", p.a, p.b, p.sigma, rel.0, rel.1, rel.2).unwrap();
        errs.push(rel);
    }
    let q = |f: fn(&(f64, f64, f64)) -> f64| {
        let mut v: Vec<f64> = errs.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v[(v.len() * 9) / 10 - 1]
    };
    println!("90th percentile relative error: a {:.4}, b {:.4}, sigma {:.4}", q(|e| e.0), q(|e| e.1), q(|e| e.2));
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pilot_vasicek.csv");
    atomic_write(&out, csv.as_bytes())
}
