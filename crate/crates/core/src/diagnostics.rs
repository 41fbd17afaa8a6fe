//! Static-arbitrage audit, the G2++ maturity derivative and price surfaces.

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::models::{G2Params, G2State, ModelParams, StateSeries};

/// Surface maturities in years with their column labels.
pub const SURFACE_GRID: [(f64, &str); 14] = [
    (1.0 / 12.0, "1m"),
    (2.0 / 12.0, "2m"),
    (3.0 / 12.0, "3m"),
    (6.0 / 12.0, "6m"),
    (9.0 / 12.0, "9m"),
    (1.0, "1y"),
    (2.0, "2y"),
    (3.0, "3y"),
    (5.0, "5y"),
    (7.0, "7y"),
    (10.0, "10y"),
    (15.0, "15y"),
    (20.0, "20y"),
    (25.0, "25y"),
];

/// Pair of maturities whose prices increase with maturity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub tau_low: f64,
    pub tau_high: f64,
    pub p_low: f64,
    pub p_high: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArbitrageReport {
    pub violations: Vec<Violation>,
    /// Maturities where `∂P/∂T` changes sign.
    pub derivative_sign_changes: Vec<f64>,
}

impl ArbitrageReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every pair `i < j` (adjacent or not) with `P_i < P_j`.
pub fn check_monotone(prices: &[(f64, f64)]) -> Result<ArbitrageReport> {
    if let Some(w) = prices.windows(2).find(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Ordering(format!(
            "maturities must be strictly increasing ({} then {})",
            w[0].0, w[1].0
        )));
    }
    if let Some(p) = prices.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::Domain(format!("price {} at τ = {} not positive", p.1, p.0)));
    }
    let mut violations = Vec::new();
    for (i, lo) in prices.iter().enumerate() {
        for hi in &prices[i + 1..] {
            if lo.1 < hi.1 {
                violations.push(Violation {
                    tau_low: lo.0,
                    tau_high: hi.0,
                    p_low: lo.1,
                    p_high: hi.1,
                });
            }
        }
    }
    Ok(ArbitrageReport {
        violations,
        derivative_sign_changes: Vec::new(),
    })
}

/// `dV/dτ = σ²B_a² + η²B_b² + 2ρση B_a B_b`.
fn v_prime(p: &G2Params, tau: f64) -> f64 {
    let (ba, bb) = p.loadings(tau);
    (p.sigma * ba).powi(2) + (p.eta * bb).powi(2) + 2.0 * p.rho * p.sigma * p.eta * ba * bb
}

/// Analytic `∂P(t,T)/∂T` of the G2++ price.
///
/// The log-derivative is `-f^M(0,T) + ½(V'(T-t) - V'(T)) - e^{-a(T-t)}x -
/// e^{-b(T-t)}y`; the result is that times `P(t,T)`.
#[allow(non_snake_case)]
pub fn g2pp_dPdT(params: &G2Params, curve: &DiscountCurve, state: &G2State, maturity: f64) -> Result<f64> {
    let price = params.price(curve, state, maturity)?;
    Ok(price * g2pp_log_slope(params, curve, state, maturity)?)
}

/// `∂ ln P(t,T)/∂T` of the G2++ price.
pub fn g2pp_log_slope(params: &G2Params, curve: &DiscountCurve, state: &G2State, maturity: f64) -> Result<f64> {
    let tau = maturity - state.t;
    if !(tau > 0.0) {
        return Err(Error::Ordering(format!("maturity {maturity} not after t = {}", state.t)));
    }
    Ok(-curve.instantaneous_forward(maturity)? + 0.5 * (v_prime(params, tau) - v_prime(params, maturity))
        - (-params.a * tau).exp() * state.x
        - (-params.b * tau).exp() * state.y)
}

/// Full audit of a G2++ curve at `state` on the given maturity grid.
pub fn audit_g2pp(
    params: &G2Params,
    curve: &DiscountCurve,
    state: &G2State,
    maturities: &[f64],
) -> Result<ArbitrageReport> {
    let prices: Vec<(f64, f64)> = maturities
        .iter()
        .map(|&m| params.price(curve, state, m).map(|p| (m, p)))
        .collect::<Result<_>>()?;
    let mut report = check_monotone(&prices)?;
    let slope = |m: f64| g2pp_log_slope(params, curve, state, m);
    for w in maturities.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (mut flo, fhi) = (slope(lo)?, slope(hi)?);
        if flo == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let fm = slope(mid)?;
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        report.derivative_sign_changes.push(0.5 * (lo + hi));
    }
    Ok(report)
}

/// Result of the deterministic state search for an increasing price curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageWitness {
    pub state: G2State,
    pub maturity: f64,
    /// `∂P/∂T` at the witness.
    pub dp_dt: f64,
    /// Configurations scanned.
    pub scanned: usize,
}

/// Scans opposite-sign states `x, y ∈ [-0.2, 0.2]` (step 0.02) at time `t`
/// and maturities `t + [1, 25]` (step 0.25) for the largest positive
/// `∂P/∂T`. Returns `None` when the slope is never positive.
pub fn search_increasing_prices(params: &G2Params, curve: &DiscountCurve, t: f64) -> Result<Option<ArbitrageWitness>> {
    let levels: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.02).collect();
    let maturities: Vec<f64> = (0..=96).map(|i| t + 1.0 + i as f64 * 0.25).collect();
    let mut best: Option<ArbitrageWitness> = None;
    let mut scanned = 0;
    for &x in &levels {
        for &y in &levels {
            if !(x * y < 0.0) {
                continue;
            }
            let state = G2State::new(x, y, t);
            for &m in &maturities {
                scanned += 1;
                let d = g2pp_dPdT(params, curve, &state, m)?;
                if d > 0.0 && best.as_ref().map_or(true, |b| d > b.dp_dt) {
                    best = Some(ArbitrageWitness { state, maturity: m, dp_dt: d, scanned: 0 });
                }
            }
        }
    }
    Ok(best.map(|mut b| {
        b.scanned = scanned;
        b
    }))
}

/// Model prices on [`SURFACE_GRID`] for every date of a state series.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSurface {
    pub dates: Vec<NaiveDate>,
    pub maturities: Vec<f64>,
    /// `values[d][j]`; `None` marks a cell that could not be priced.
    pub values: Vec<Vec<Option<f64>>>,
}

impl PriceSurface {
    pub fn labels() -> Vec<String> {
        SURFACE_GRID.iter().map(|(_, l)| format!("P_{l}")).collect()
    }

    /// Monotonicity check of each row over its available cells.
    pub fn violations(&self) -> Result<Vec<(NaiveDate, Violation)>> {
        let mut out = Vec::new();
        for (date, row) in self.dates.iter().zip(&self.values) {
            let pts: Vec<(f64, f64)> = self
                .maturities
                .iter()
                .zip(row)
                .filter_map(|(&m, v)| v.map(|p| (m, p)))
                .collect();
            out.extend(check_monotone(&pts)?.violations.into_iter().map(|v| (*date, v)));
        }
        Ok(out)
    }
}

/// Prices every state × grid maturity. A failing cell, or a price outside
/// (0, 1], is recorded as missing without affecting the rest.
pub fn build_surface(
    params: &ModelParams,
    states: &StateSeries,
    curve: Option<&DiscountCurve>,
) -> Result<PriceSurface> {
    if states.is_empty() {
        return Err(Error::Precondition("surface needs at least one state".into()));
    }
    let maturities: Vec<f64> = SURFACE_GRID.iter().map(|g| g.0).collect();
    let values = states
        .states
        .par_iter()
        .map(|s| {
            maturities
                .iter()
                .map(|&tau| {
                    params
                        .price(curve, s, s.t() + tau)
                        .ok()
                        .filter(|p| *p > 0.0 && *p <= 1.0)
                })
                .collect()
        })
        .collect();
    Ok(PriceSurface {
        dates: states.dates.clone(),
        maturities,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_g2() -> G2Params {
        G2Params::new(0.13, 0.3526, 0.2062, 0.4892, -0.99).unwrap()
    }

    #[test]
    fn monotone_sequences() {
        assert!(check_monotone(&[(1.0, 0.95), (2.0, 0.90), (3.0, 0.85)]).unwrap().is_clean());
        let r = check_monotone(&[(1.0, 0.90), (2.0, 0.95)]).unwrap();
        assert_eq!(r.violations, vec![Violation { tau_low: 1.0, tau_high: 2.0, p_low: 0.90, p_high: 0.95 }]);
        let r = check_monotone(&[(1.0, 0.90), (2.0, 0.80), (3.0, 0.95)]).unwrap();
        assert_eq!(r.violations.len(), 2);
        assert!(matches!(check_monotone(&[(2.0, 0.9), (1.0, 0.95)]), Err(Error::Ordering(_))));
    }

    #[test]
    fn zero_state_slope_is_market_slope() {
        let curve = DiscountCurve::flat(0.04, &[1.0, 10.0, 30.0]).unwrap();
        let p = G2Params::new(0.13, 0.3526, 0.2062, 0.4892, 0.0).unwrap();
        let s = G2State::new(0.0, 0.0, 0.0);
        for m in [0.5, 3.0, 17.0] {
            let d = g2pp_dPdT(&p, &curve, &s, m).unwrap();
            assert!(d < 0.0);
            assert!((d + 0.04 * (-0.04 * m).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let curve = DiscountCurve::flat(0.05, &[1.0, 30.0]).unwrap();
        let s = G2State::new(0.03, -0.02, 1.5);
        let p = paper_g2();
        for m in [2.0, 4.5, 9.0, 20.0] {
            let h = 1e-5;
            let fd = (p.price(&curve, &s, m + h).unwrap() - p.price(&curve, &s, m - h).unwrap()) / (2.0 * h);
            let d = g2pp_dPdT(&p, &curve, &s, m).unwrap();
            assert!(((d - fd) / d).abs() < 1e-6, "{m}: {d} vs {fd}");
        }
    }

    #[test]
    fn opposite_sign_states_give_increasing_prices() {
        let curve = DiscountCurve::flat(0.05, &[0.25, 30.0]).unwrap();
        let w = search_increasing_prices(&paper_g2(), &curve, 1.0).unwrap().expect("witness");
        assert!(w.dp_dt > 0.0);
        assert!(w.state.x * w.state.y < 0.0);
        let grid: Vec<f64> = (0..10).map(|i| w.maturity - 0.05 + i as f64 * 0.01).collect();
        let report = audit_g2pp(&paper_g2(), &curve, &w.state, &grid).unwrap();
        assert!(!report.is_clean());
    }

    #[test]
    fn surface_first_row_is_market_curve_at_zero_state() {
        let curve = DiscountCurve::flat(0.04, &[0.25, 30.0]).unwrap();
        let mut states = StateSeries::default();
        states.push("2013-01-05".parse().unwrap(), crate::models::ModelState::Factors(G2State::new(0.0, 0.0, 0.0)));
        let s = build_surface(&ModelParams::G2pp(paper_g2()), &states, Some(&curve)).unwrap();
        assert_eq!(s.values[0].len(), 14);
        for (v, m) in s.values[0].iter().zip(&s.maturities) {
            assert!((v.unwrap() - curve.discount(*m).unwrap()).abs() < 1e-12);
        }
    }
}
