use chrono::NaiveDate;
use rayon::prelude::*;

use super::likelihood::{g2pp_states, loglik_g2pp, loglik_vasicek, vasicek_states, LogLik};
use super::panel::{AlignedPanel, PricePanel};
use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::models::{G2Params, ModelKind, ModelParams, ModelState, StateSeries, VasicekParams};
use crate::montecarlo::StreamKey;
use crate::optimize::{nelder_mead, NelderMeadOptions};

/// Correlation magnitude reachable by the optimizer.
pub const RHO_LIMIT: f64 = 0.9999;

const SPEED_BOUNDS: (f64, f64) = (1e-4, 50.0);
const LEVEL_BOUNDS: (f64, f64) = (1e-6, 5.0);
const VOL_BOUNDS: (f64, f64) = (1e-8, 10.0);
const BOUNDARY_MARGIN: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Best and runner-up restarts must agree to this in log-likelihood.
    pub agreement_tolerance: f64,
    pub optimizer: NelderMeadOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 16,
            seed: 0,
            agreement_tolerance: 1e-4,
            optimizer: NelderMeadOptions {
                max_iterations: 4_000,
                x_tolerance: 1e-7,
                f_tolerance: 1e-9,
                initial_step: 0.3,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
    /// Restarts that ended at a finite objective.
    pub successful_restarts: usize,
    pub converged: bool,
    /// The optimum sits at the edge of the admissible parameter box.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub loglik: LogLik,
    pub states: StateSeries,
    pub report: OptimizerReport,
}

/// Bounds of each transformed coordinate.
fn bounds(model: ModelKind) -> Vec<(f64, f64)> {
    let ln = |(lo, hi): (f64, f64)| (f64::ln(lo), f64::ln(hi));
    match model {
        ModelKind::Vasicek => vec![ln(SPEED_BOUNDS), ln(LEVEL_BOUNDS), ln(VOL_BOUNDS)],
        ModelKind::G2pp => vec![
            ln(SPEED_BOUNDS),
            ln(SPEED_BOUNDS),
            ln(VOL_BOUNDS),
            ln(VOL_BOUNDS),
            (-RHO_LIMIT.atanh(), RHO_LIMIT.atanh()),
        ],
        other => panic!("{other} is not estimated by maximum likelihood"),
    }
}

/// Maps transformed coordinates to parameters.
fn decode(model: ModelKind, u: &[f64]) -> Option<ModelParams> {
    if u.iter().zip(bounds(model)).any(|(v, (lo, hi))| !(*v >= lo && *v <= hi)) {
        return None;
    }
    match model {
        ModelKind::Vasicek => Some(ModelParams::Vasicek(VasicekParams {
            a: u[0].exp(),
            b: u[1].exp(),
            sigma: u[2].exp(),
        })),
        ModelKind::G2pp => Some(ModelParams::G2pp(G2Params {
            a: u[0].exp(),
            b: u[1].exp(),
            sigma: u[2].exp(),
            eta: u[3].exp(),
            rho: u[4].tanh().clamp(-RHO_LIMIT, RHO_LIMIT),
        })),
        _ => None,
    }
}

fn encode(params: &ModelParams) -> Vec<f64> {
    match *params {
        ModelParams::Vasicek(p) => vec![p.a.ln(), p.b.ln(), p.sigma.ln()],
        ModelParams::G2pp(p) => vec![
            p.a.ln(),
            p.b.ln(),
            p.sigma.ln(),
            p.eta.ln(),
            p.rho.clamp(-RHO_LIMIT, RHO_LIMIT).atanh(),
        ],
        _ => unreachable!("only ML models are encoded"),
    }
}

fn loglik(params: &ModelParams, curve: Option<&DiscountCurve>, data: &AlignedPanel) -> Result<LogLik> {
    match (params, curve) {
        (ModelParams::Vasicek(p), _) => loglik_vasicek(p, data),
        (ModelParams::G2pp(p), Some(c)) => loglik_g2pp(p, c, data),
        (ModelParams::G2pp(_), None) => Err(Error::Precondition("G2++ fit needs a curve".into())),
        _ => Err(Error::Precondition("model is not estimated by maximum likelihood".into())),
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Mean-reversion speed from the lag-one autoregression of a series.
fn ar1_speed(xs: &[f64], dt: f64, fallback: f64) -> f64 {
    let (m, _) = mean_sd(xs);
    let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    let phi = num / den;
    if phi > 0.0 && phi < 1.0 {
        (-phi.ln() / dt).clamp(0.01, 10.0)
    } else {
        fallback
    }
}

fn increments_sd(xs: &[f64], dt: f64) -> f64 {
    let d: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    mean_sd(&d).1 / dt.sqrt()
}

/// Moment-matched starting point: states are inverted at a trial parameter
/// set, moments of the states update the trial, and the cycle repeats.
fn initial_guess(model: ModelKind, curve: Option<&DiscountCurve>, data: &AlignedPanel) -> ModelParams {
    let dt = (data.times[data.len() - 1] - data.times[0]) / (data.len() - 1) as f64;
    match model {
        ModelKind::Vasicek => {
            let mut p = VasicekParams { a: 1.0, b: 0.05, sigma: 0.1 };
            for _ in 0..3 {
                let Ok(r) = vasicek_states(&p, data) else { break };
                let (mean, _) = mean_sd(&r);
                let next = VasicekParams {
                    a: ar1_speed(&r, dt, p.a),
                    b: mean.clamp(1e-3, 1.0),
                    sigma: increments_sd(&r, dt).clamp(1e-4, 5.0),
                };
                if !next.sigma.is_finite() {
                    break;
                }
                p = next;
            }
            ModelParams::Vasicek(p)
        }
        ModelKind::G2pp => {
            let mut p = G2Params { a: 0.1, b: 0.5, sigma: 0.1, eta: 0.1, rho: 0.0 };
            if let Some(c) = curve {
                for _ in 0..3 {
                    let Ok(s) = g2pp_states(&p, c, data) else { break };
                    let xs: Vec<f64> = s.iter().map(|s| s.x).collect();
                    let ys: Vec<f64> = s.iter().map(|s| s.y).collect();
                    let dx: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
                    let dy: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
                    let (mx, sx) = mean_sd(&dx);
                    let (my, sy) = mean_sd(&dy);
                    let cov = dx.iter().zip(&dy).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
                        / (dx.len() as f64 - 1.0).max(1.0);
                    let rho = (cov / (sx * sy)).clamp(-0.9, 0.9);
                    let next = G2Params {
                        a: p.a,
                        b: p.b,
                        sigma: (sx / dt.sqrt()).clamp(1e-4, 5.0),
                        eta: (sy / dt.sqrt()).clamp(1e-4, 5.0),
                        rho: if rho.is_finite() { rho } else { 0.0 },
                    };
                    if !(next.sigma.is_finite() && next.eta.is_finite()) {
                        break;
                    }
                    p = next;
                }
            }
            ModelParams::G2pp(p)
        }
        _ => unreachable!(),
    }
}

/// Starting point of restart `index`: the guess itself first, then positive
/// parameters scaled uniformly within [0.5x, 2x] and the correlation
/// coordinate shifted uniformly within ±0.5.
fn restart_point(model: ModelKind, guess: &[f64], key: &StreamKey, index: usize) -> Vec<f64> {
    if index == 0 {
        return guess.to_vec();
    }
    let mut rng = key.path(index as u64);
    let bounds = bounds(model);
    guess
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let v = if model == ModelKind::G2pp && i == 4 {
                u + (rng.uniform() - 0.5)
            } else {
                u + (0.5 + 1.5 * rng.uniform()).ln()
            };
            v.clamp(bounds[i].0 + BOUNDARY_MARGIN, bounds[i].1 - BOUNDARY_MARGIN)
        })
        .collect()
}

struct RestartOutcome {
    x: Vec<f64>,
    neg_loglik: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

/// Maximum-likelihood fit of a Vasicek (one instrument) or G2++ (two
/// instruments) model to an aligned price panel.
pub fn fit_ml(
    model: ModelKind,
    data: &AlignedPanel,
    curve: Option<&DiscountCurve>,
    config: &FitConfig,
) -> Result<FitResult> {
    if !matches!(model, ModelKind::Vasicek | ModelKind::G2pp) {
        return Err(Error::Usage(format!("{model} is calibrated, not estimated by ML")));
    }
    if data.instrument_count() != model.factors() {
        return Err(Error::Precondition(format!(
            "{model} needs exactly {} instrument(s), got {}",
            model.factors(),
            data.instrument_count()
        )));
    }
    if model == ModelKind::G2pp && curve.is_none() {
        return Err(Error::Precondition("G2++ estimation needs an initial curve".into()));
    }
    if data.len() < 2 {
        return Err(Error::Precondition("need at least 2 observations".into()));
    }
    if config.restarts == 0 {
        return Err(Error::Precondition("need at least one restart".into()));
    }

    let guess = encode(&initial_guess(model, curve, data));
    let key = StreamKey::new(config.seed);
    let objective = |u: &[f64]| -> f64 {
        match decode(model, u) {
            Some(p) => loglik(&p, curve, data).map(|l| -l.total).unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    };
    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|i| {
            let x0 = restart_point(model, &guess, &key, i);
            let r = nelder_mead(objective, &x0, &config.optimizer);
            RestartOutcome {
                x: r.x,
                neg_loglik: r.f,
                iterations: r.iterations,
                evaluations: r.evaluations,
                converged: r.converged,
            }
        })
        .collect();

    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let mut finite: Vec<&RestartOutcome> = outcomes.iter().filter(|o| o.neg_loglik.is_finite()).collect();
    finite.sort_by(|a, b| a.neg_loglik.total_cmp(&b.neg_loglik));
    let Some(best) = finite.first() else {
        let best = outcomes
            .iter()
            .min_by(|a, b| a.neg_loglik.total_cmp(&b.neg_loglik))
            .expect("at least one restart");
        return Err(Error::OptimizationFailed {
            restarts: config.restarts,
            best_objective: -best.neg_loglik,
            best_point: best.x.clone(),
        });
    };

    let params = decode(model, &best.x).expect("finite objective implies admissible point");
    let loglik = loglik(&params, curve, data)?;
    let agree = finite
        .get(1)
        .map_or(true, |second| (second.neg_loglik - best.neg_loglik).abs() <= config.agreement_tolerance);
    let at_boundary = best
        .x
        .iter()
        .zip(bounds(model))
        .any(|(v, (lo, hi))| v - lo < BOUNDARY_MARGIN || hi - v < BOUNDARY_MARGIN);

    Ok(FitResult {
        params,
        loglik,
        states: filtered_states(&params, curve, data)?,
        report: OptimizerReport {
            iterations,
            evaluations,
            restarts: config.restarts,
            successful_restarts: finite.len(),
            converged: best.converged && agree,
            at_boundary,
        },
    })
}

/// States implied by the observed prices under `params`.
pub fn filtered_states(
    params: &ModelParams,
    curve: Option<&DiscountCurve>,
    data: &AlignedPanel,
) -> Result<StateSeries> {
    let states: Vec<ModelState> = match (params, curve) {
        (ModelParams::Vasicek(p), _) => vasicek_states(p, data)?
            .into_iter()
            .zip(&data.times)
            .map(|(r, &t)| ModelState::ShortRate { t, r })
            .collect(),
        (ModelParams::G2pp(p), Some(c)) => g2pp_states(p, c, data)?
            .into_iter()
            .map(ModelState::Factors)
            .collect(),
        _ => return Err(Error::Precondition("unsupported model/curve combination".into())),
    };
    Ok(StateSeries {
        dates: data.dates.clone(),
        states,
    })
}

/// Aligns a panel for `model` and fits it.
///
/// Times are measured from `anchor`: the curve date for G2++, typically the
/// first observation for Vasicek.
pub fn fit_panel(
    model: ModelKind,
    panel: &PricePanel,
    anchor: NaiveDate,
    curve: Option<&DiscountCurve>,
    config: &FitConfig,
) -> Result<FitResult> {
    let ids: Vec<&str> = panel.instruments().iter().map(|i| i.id.as_str()).collect();
    if ids.len() != model.factors() {
        return Err(Error::Precondition(format!(
            "{model} needs exactly {} instrument(s) in the panel, found {}",
            model.factors(),
            ids.len()
        )));
    }
    let data = panel.aligned(&ids, anchor)?;
    fit_ml(model, &data, curve, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms_round_trip() {
        let p = ModelParams::G2pp(G2Params::new(0.13, 0.3526, 0.2062, 0.4892, -0.99).unwrap());
        let back = decode(ModelKind::G2pp, &encode(&p)).unwrap();
        let (ModelParams::G2pp(a), ModelParams::G2pp(b)) = (p, back) else { panic!() };
        assert!((a.a - b.a).abs() < 1e-15 && (a.rho - b.rho).abs() < 1e-12);
    }

    #[test]
    fn out_of_box_points_rejected() {
        assert!(decode(ModelKind::Vasicek, &[0.0, 0.0, 10.0]).is_none());
        assert!(decode(ModelKind::G2pp, &[0.0, 0.0, 0.0, 0.0, 6.0]).is_none());
    }

    #[test]
    fn restart_points_stay_in_range() {
        let key = StreamKey::new(3);
        let guess = vec![0.5f64.ln(), 0.05f64.ln(), 0.1f64.ln()];
        for i in 1..50 {
            let x = restart_point(ModelKind::Vasicek, &guess, &key, i);
            for (u, g) in x.iter().zip(&guess) {
                let ratio = (u - g).exp();
                assert!((0.5..=2.0).contains(&ratio));
            }
        }
        assert_eq!(restart_point(ModelKind::Vasicek, &guess, &key, 0), guess);
    }
}
