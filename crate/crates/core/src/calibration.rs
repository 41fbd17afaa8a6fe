//! Cross-sectional least-squares calibration of Ho-Lee and Hull-White.

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::curve::{year_fraction, DiscountCurve};
use crate::error::{Error, Result};
use crate::models::{HoLeeParams, HullWhiteFormula, HullWhiteParams, ModelKind, ModelParams};
use crate::optimize::{golden_section, nelder_mead, NelderMeadOptions};

pub const SPEED_RANGE: (f64, f64) = (1e-4, 5.0);
pub const VOL_RANGE: (f64, f64) = (1e-5, 2.0);

/// Initial curve together with the date it was observed on.
#[derive(Debug, Clone, PartialEq)]
pub struct DatedCurve {
    pub date: NaiveDate,
    pub curve: DiscountCurve,
}

/// Which initial curve a cross-section is calibrated against.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    /// One curve held fixed for every date.
    Fixed(DatedCurve),
    /// The most recent curve dated strictly before each cross-section.
    PerDate(Vec<DatedCurve>),
}

impl CurveSource {
    pub fn for_date(&self, asof: NaiveDate) -> Result<&DatedCurve> {
        match self {
            CurveSource::Fixed(c) => Ok(c),
            CurveSource::PerDate(curves) => curves
                .iter()
                .filter(|c| c.date < asof)
                .max_by_key(|c| c.date)
                .ok_or_else(|| Error::Precondition(format!("no curve dated before {asof}"))),
        }
    }
}

/// One day's zero prices.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub asof: NaiveDate,
    /// `(τ, P)`: time to maturity in years and zero price.
    pub quotes: Vec<(f64, f64)>,
    /// Short-rate proxy on `asof`.
    pub short_rate: f64,
}

impl CrossSection {
    fn validate(&self, model: ModelKind) -> Result<()> {
        let min = match model {
            ModelKind::HoLee => 1,
            ModelKind::HullWhite => 2,
            other => return Err(Error::Usage(format!("{other} is not calibrated cross-sectionally"))),
        };
        if self.quotes.len() < min {
            return Err(Error::Precondition(format!(
                "{model} needs at least {min} quote(s) on {}, got {}",
                self.asof,
                self.quotes.len()
            )));
        }
        let mut taus: Vec<f64> = self.quotes.iter().map(|q| q.0).collect();
        if let Some(&bad) = taus.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::Precondition(format!("maturity τ = {bad} not after {}", self.asof)));
        }
        taus.sort_by(f64::total_cmp);
        if let Some(w) = taus.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Precondition(format!("maturity τ = {} quoted twice on {}", w[0], self.asof)));
        }
        if let Some(q) = self.quotes.iter().find(|q| !(q.1 > 0.0 && q.1 <= 1.0)) {
            return Err(Error::Domain(format!("price {} outside (0, 1]", q.1)));
        }
        Ok(())
    }
}

/// Short-rate proxy `-ln P(0.25) / 0.25` read off a curve built from the
/// day's own quotes.
pub fn short_rate_proxy(quotes: &[(f64, f64)]) -> Result<f64> {
    let mut pillars = quotes.to_vec();
    pillars.sort_by(|a, b| a.0.total_cmp(&b.0));
    let curve = DiscountCurve::new(&pillars)?.with_flat_extrapolation(true);
    Ok(-curve.log_discount(0.25)? / 0.25)
}

/// Residual weighting of the least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weights proportional to time to maturity, normalized to mean 1.
    Maturity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub weighting: Weighting,
    pub hull_white_formula: HullWhiteFormula,
    pub optimizer: NelderMeadOptions,
    /// Bracket width at which golden-section search stops (in log σ).
    pub golden_tolerance: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            weighting: Weighting::Uniform,
            hull_white_formula: HullWhiteFormula::Standard,
            optimizer: NelderMeadOptions {
                max_iterations: 4_000,
                x_tolerance: 1e-11,
                f_tolerance: 1e-24,
                initial_step: 0.5,
            },
            golden_tolerance: 1e-12,
        }
    }
}

/// Weighted mean squared price error of `params` on a cross-section
/// observed at `t` years after the curve date.
pub fn ls_objective(
    params: &ModelParams,
    xs: &CrossSection,
    t: f64,
    curve: &DiscountCurve,
    config: &CalibrationConfig,
) -> Result<f64> {
    let mean_tau = xs.quotes.iter().map(|q| q.0).sum::<f64>() / xs.quotes.len() as f64;
    let mut acc = 0.0;
    for &(tau, market) in &xs.quotes {
        let model = match params {
            ModelParams::HoLee(p) => p.price(curve, xs.short_rate, t, t + tau)?,
            ModelParams::HullWhite(p) => {
                p.price_with(curve, xs.short_rate, t, t + tau, config.hull_white_formula)?
            }
            other => {
                return Err(Error::Usage(format!("{} is not calibrated cross-sectionally", other.kind())))
            }
        };
        let w = match config.weighting {
            Weighting::Uniform => 1.0,
            Weighting::Maturity => tau / mean_tau,
        };
        acc += w * (market - model).powi(2);
    }
    Ok(acc / xs.quotes.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub asof: NaiveDate,
    pub params: ModelParams,
    pub objective: f64,
    pub converged: bool,
    pub evaluations: usize,
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

/// Least-squares fit of Ho-Lee (golden section on log σ) or Hull-White
/// (multi-start Nelder-Mead on log a, log σ) to one cross-section.
pub fn calibrate(
    model: ModelKind,
    xs: &CrossSection,
    curve: &DatedCurve,
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    xs.validate(model)?;
    let t = year_fraction(curve.date, xs.asof)?.value();
    if !(t > 0.0) {
        return Err(Error::Precondition(format!(
            "cross-section {} must be dated after the curve ({}): at t = 0 volatility is not identifiable",
            xs.asof, curve.date
        )));
    }
    let c = &curve.curve;
    // surface curve-span problems as errors rather than infinite objectives
    ls_objective(&ModelParams::HoLee(HoLeeParams { sigma: 0.01 }), xs, t, c, config)?;

    match model {
        ModelKind::HoLee => {
            let mut evaluations = 0;
            let mut f = |u: f64| {
                evaluations += 1;
                ls_objective(&ModelParams::HoLee(HoLeeParams { sigma: u.exp() }), xs, t, c, config)
                    .unwrap_or(f64::INFINITY)
            };
            let (lo, hi) = (VOL_RANGE.0.ln(), VOL_RANGE.1.ln());
            // coarse scan guards against a non-unimodal objective
            const SCAN: usize = 64;
            let h = (hi - lo) / SCAN as f64;
            let best = (0..=SCAN)
                .map(|i| (i, f(lo + i as f64 * h)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            let a = lo + best.saturating_sub(1) as f64 * h;
            let b = lo + (best + 1).min(SCAN) as f64 * h;
            let (u, fu) = golden_section(&mut f, a, b, config.golden_tolerance);
            let sigma = u.exp();
            let objective = fu;
            Ok(CalibrationResult {
                asof: xs.asof,
                params: ModelParams::HoLee(HoLeeParams { sigma }),
                objective,
                converged: objective.is_finite()
                    && u - lo > 10.0 * config.golden_tolerance
                    && hi - u > 10.0 * config.golden_tolerance,
                evaluations,
            })
        }
        ModelKind::HullWhite => {
            let objective = |u: &[f64]| {
                let (a, s) = (u[0].exp(), u[1].exp());
                if !in_range(a, SPEED_RANGE) || !in_range(s, VOL_RANGE) {
                    return f64::INFINITY;
                }
                ls_objective(&ModelParams::HullWhite(HullWhiteParams { a, sigma: s }), xs, t, c, config)
                    .unwrap_or(f64::INFINITY)
            };
            let starts = [0.003f64, 0.03, 0.3, 3.0]
                .iter()
                .flat_map(|&a| [0.005f64, 0.1].map(move |s| [a.ln(), s.ln()]))
                .collect::<Vec<_>>();
            let runs: Vec<_> = starts
                .iter()
                .map(|x0| nelder_mead(objective, x0, &config.optimizer))
                .collect();
            let evaluations = runs.iter().map(|r| r.evaluations).sum();
            let best = runs
                .iter()
                .min_by(|a, b| a.f.total_cmp(&b.f))
                .expect("eight starts");
            if !best.f.is_finite() {
                return Err(Error::OptimizationFailed {
                    restarts: starts.len(),
                    best_objective: best.f,
                    best_point: best.x.iter().map(|u| u.exp()).collect(),
                });
            }
            Ok(CalibrationResult {
                asof: xs.asof,
                params: ModelParams::HullWhite(HullWhiteParams {
                    a: best.x[0].exp(),
                    sigma: best.x[1].exp(),
                }),
                objective: best.f,
                converged: best.converged,
                evaluations,
            })
        }
        other => Err(Error::Usage(format!("{other} is not calibrated cross-sectionally"))),
    }
}

/// Mean and standard deviation of one parameter across a series.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: &'static str,
    pub mean: f64,
    /// Unbiased (n−1) estimate; absent for a single record.
    pub sd: Option<f64>,
    pub n: usize,
}

/// Outcome of one date of a batch calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub asof: NaiveDate,
    pub outcome: std::result::Result<CalibrationResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSeries {
    pub records: Vec<SeriesRecord>,
    pub summary: Vec<ParamSummary>,
}

impl CalibrationSeries {
    pub fn successes(&self) -> impl Iterator<Item = &CalibrationResult> {
        self.records.iter().filter_map(|r| r.outcome.as_ref().ok())
    }
}

/// Mean and unbiased standard deviation of a list of values.
pub fn summarize(name: &'static str, values: &[f64]) -> ParamSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    });
    ParamSummary { name, mean, sd, n }
}

/// Independent calibration of each cross-section. Single-date failures are
/// recorded; the series fails only when every date fails.
pub fn calibrate_series(
    model: ModelKind,
    sections: &[CrossSection],
    curves: &CurveSource,
    config: &CalibrationConfig,
) -> Result<CalibrationSeries> {
    if sections.is_empty() {
        return Err(Error::Precondition("no cross-sections to calibrate".into()));
    }
    let mut records: Vec<SeriesRecord> = sections
        .par_iter()
        .map(|xs| SeriesRecord {
            asof: xs.asof,
            outcome: curves
                .for_date(xs.asof)
                .and_then(|c| calibrate(model, xs, c, config))
                .map_err(|e| e.to_string()),
        })
        .collect();
    records.sort_by_key(|r| r.asof);
    let ok: Vec<&CalibrationResult> = records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    if ok.is_empty() {
        let first = records[0].outcome.as_ref().err().cloned().unwrap_or_default();
        return Err(Error::NoSolution(format!(
            "calibration failed on all {} dates; first error: {first}",
            records.len()
        )));
    }
    let names: Vec<&'static str> = ok[0].params.named_values().iter().map(|(n, _)| *n).collect();
    let summary = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let vals: Vec<f64> = ok.iter().map(|r| r.params.named_values()[i].1).collect();
            summarize(name, &vals)
        })
        .collect();
    Ok(CalibrationSeries { records, summary })
}
