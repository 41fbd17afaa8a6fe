#![allow(dead_code)]

use chrono::NaiveDate;
use curveforge::curve::{year_fraction, DiscountCurve};
use curveforge::estimation::AlignedPanel;
use curveforge::models::VasicekParams;
use curveforge::montecarlo::{regular_schedule, simulate_ou, StreamKey};

pub fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

pub const PILLARS: [f64; 9] = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0];

/// Flat continuously compounded curve.
pub fn flat_curve(rate: f64) -> DiscountCurve {
    DiscountCurve::flat(rate, &PILLARS).unwrap()
}

/// Upward-sloping curve with yields from 9% to 10%. High enough that G2++
/// paths at the reference parameters keep prices below one.
pub fn high_rate_curve() -> DiscountCurve {
    let pillars: Vec<(f64, f64)> = PILLARS
        .iter()
        .map(|&t| (t, (-(0.09 + 0.01 * (1.0 - (-t / 5.0).exp())) * t).exp()))
        .collect();
    DiscountCurve::new(&pillars).unwrap()
}

pub const ROLL_YEARS: f64 = 5.0;

/// Maturity of the on-the-run zero at `t` (rolls every 5 years).
pub fn on_the_run(t: f64) -> f64 {
    ((t + 7.0 / 365.0) / ROLL_YEARS).ceil() * ROLL_YEARS
}

/// Weekly series of 2000 prices of the rolled zero under Vasicek `p`,
/// starting from `r = b`. Same generator as the pilot study.
pub fn rolled_vasicek_panel(p: &VasicekParams, seed: u64) -> AlignedPanel {
    let start = date("2010-01-04");
    let dates = regular_schedule(start, 7, 2000);
    let times: Vec<f64> = dates.iter().map(|d| year_fraction(start, *d).unwrap().value()).collect();
    let rates = simulate_ou(p.a, p.b, p.sigma, p.b, &times, &mut StreamKey::new(seed).path(0)).unwrap();
    let maturities: Vec<Vec<f64>> = times.iter().map(|&t| vec![on_the_run(t)]).collect();
    let prices = times
        .iter()
        .zip(&rates)
        .zip(&maturities)
        .map(|((&t, &r), m)| vec![p.price(r, t, m[0]).unwrap()])
        .collect();
    AlignedPanel { ids: vec!["ZROLL".into()], dates, times, maturities, prices }
}

/// Writes `text` to `dir/name` and returns the path.
pub fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}
