use rayon::prelude::*;

use super::rng::{PathRng, StreamKey};
use super::sim::{McEstimate, OuStep, SimConfig, MAX_ABS_RHO};
use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::models::{G2State, ModelParams, ModelState};

/// Minimum number of steps per unit of time to maturity.
pub const MIN_STEPS: f64 = 50.0;

/// Trapezoidal integral of a path started at `x0` and advanced `n` times.
#[inline]
fn trapezoid(x0: f64, n: usize, h: f64, mut next: impl FnMut(f64) -> f64) -> f64 {
    let mut x = x0;
    let mut acc = 0.5 * x0;
    for i in 0..n {
        x = next(x);
        acc += if i + 1 == n { 0.5 * x } else { x };
    }
    acc * h
}

/// Monte-Carlo estimate of `E[exp(-∫_t^T r du)]` from the state `state0` at
/// time `t = state0.t()`.
///
/// State processes are sampled with exact transitions and the path integral
/// is taken by the trapezoidal rule. Deterministic parts of the short rate
/// (the curve-fitting shift of the HJM-family models) are integrated in
/// closed form.
pub fn mc_zero_price(
    params: &ModelParams,
    curve: Option<&DiscountCurve>,
    state0: &ModelState,
    maturity: f64,
    config: &SimConfig,
) -> Result<McEstimate> {
    let t = state0.t();
    let tau = maturity - t;
    if !(tau > 0.0) {
        return Err(Error::Ordering(format!("maturity {maturity} not after t = {t}")));
    }
    if tau > config.horizon * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "time to maturity {tau} exceeds the simulation horizon {}",
            config.horizon
        )));
    }
    if config.step > tau / MIN_STEPS {
        return Err(Error::Resolution(format!(
            "step {} coarser than τ/{MIN_STEPS} = {}",
            config.step,
            tau / MIN_STEPS
        )));
    }
    let n = (tau / config.step - 1e-9).ceil() as usize;
    let h = tau / n as f64;
    let key = StreamKey::new(config.seed);
    let need_curve = || {
        curve.ok_or_else(|| Error::Precondition(format!("{} needs an initial curve", params.kind())))
    };

    let samples: Vec<f64> = match (params, state0) {
        (ModelParams::Vasicek(p), ModelState::ShortRate { r, .. }) => {
            let step = OuStep::new(p.a, p.b, p.sigma, h);
            let r0 = *r;
            run(&key, config.n_paths, move |rng| {
                (-trapezoid(r0, n, h, |x| step.advance(x, rng.normal()))).exp()
            })
        }
        (ModelParams::HoLee(p), ModelState::ShortRate { r, .. }) => {
            let curve = need_curve()?;
            let s2 = p.sigma * p.sigma;
            let shift = -(curve.log_discount(maturity)? - curve.log_discount(t)?)
                - curve.instantaneous_forward(t)? * tau
                + 0.5 * s2 * ((maturity.powi(3) - t.powi(3)) / 3.0 - t * t * tau);
            let dw = p.sigma * h.sqrt();
            let r0 = *r;
            run(&key, config.n_paths, move |rng| {
                (-shift - trapezoid(r0, n, h, |x| x + dw * rng.normal())).exp()
            })
        }
        (ModelParams::HullWhite(p), ModelState::ShortRate { r, .. }) => {
            let curve = need_curve()?;
            let (a, s2) = (p.a, p.sigma * p.sigma);
            let alpha_t = curve.instantaneous_forward(t)? + s2 / (2.0 * a * a) * (-(-a * t).exp_m1()).powi(2);
            let (ea_t, ea_m) = ((-a * t).exp(), (-a * maturity).exp());
            let shift = -(curve.log_discount(maturity)? - curve.log_discount(t)?)
                + s2 / (2.0 * a * a)
                    * (tau - 2.0 * (ea_t - ea_m) / a + (ea_t * ea_t - ea_m * ea_m) / (2.0 * a));
            let step = OuStep::new(a, 0.0, p.sigma, h);
            let x0 = *r - alpha_t;
            run(&key, config.n_paths, move |rng| {
                (-shift - trapezoid(x0, n, h, |x| step.advance(x, rng.normal()))).exp()
            })
        }
        (ModelParams::G2pp(p), ModelState::Factors(s)) => {
            let curve = need_curve()?;
            if p.rho.abs() > MAX_ABS_RHO {
                return Err(Error::Boundary(format!("|rho| = {} exceeds {MAX_ABS_RHO}", p.rho.abs())));
            }
            let shift = -(curve.log_discount(maturity)? - curve.log_discount(t)?)
                + 0.5 * (p.v_tau(maturity) - p.v_tau(t));
            let law = p.transition(&G2State::new(0.0, 0.0, 0.0), h)?;
            let l = law.cholesky()?;
            let (da, db) = ((-p.a * h).exp(), (-p.b * h).exp());
            let (x0, y0) = (s.x, s.y);
            run(&key, config.n_paths, move |rng| {
                let (mut x, mut y) = (x0, y0);
                let mut acc = 0.5 * (x + y);
                for i in 0..n {
                    let (z1, z2) = (rng.normal(), rng.normal());
                    x = x * da + l[0][0] * z1;
                    y = y * db + l[1][0] * z1 + l[1][1] * z2;
                    acc += if i + 1 == n { 0.5 * (x + y) } else { x + y };
                }
                (-shift - acc * h).exp()
            })
        }
        _ => {
            return Err(Error::Precondition(format!(
                "state shape does not match the {} model",
                params.kind()
            )))
        }
    };
    Ok(McEstimate::from_samples(&samples))
}

fn run<F>(key: &StreamKey, n_paths: usize, path_value: F) -> Vec<f64>
where
    F: Fn(&mut PathRng) -> f64 + Sync + Send,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| path_value(&mut key.path(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{HoLeeParams, HullWhiteParams, VasicekParams};

    fn cfg(n: usize, step: f64, seed: u64) -> SimConfig {
        SimConfig::new(n, step, 30.0, seed).unwrap()
    }

    #[test]
    fn deterministic_vasicek_discounting() {
        let p = ModelParams::Vasicek(VasicekParams { a: 1.0, b: 0.05, sigma: 0.0 });
        let s = ModelState::ShortRate { t: 0.0, r: 0.05 };
        let est = mc_zero_price(&p, None, &s, 4.0, &cfg(100, 1.0 / 252.0, 1)).unwrap();
        assert!((est.value - (-0.2f64).exp()).abs() < 1e-13);
        assert!(est.stderr < 1e-15);
    }

    #[test]
    fn coarse_step_rejected() {
        let p = ModelParams::Vasicek(VasicekParams::new(1.0, 0.05, 0.01).unwrap());
        let s = ModelState::ShortRate { t: 0.0, r: 0.05 };
        let err = mc_zero_price(&p, None, &s, 1.0, &cfg(10, 0.05, 1)).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn curve_required_for_hjm_models() {
        let p = ModelParams::HoLee(HoLeeParams::new(0.01).unwrap());
        let s = ModelState::ShortRate { t: 0.0, r: 0.05 };
        assert!(mc_zero_price(&p, None, &s, 1.0, &cfg(10, 0.01, 1)).is_err());
    }

    #[test]
    fn small_sample_agrees_with_closed_forms() {
        let curve = DiscountCurve::flat(0.04, &[0.25, 1.0, 5.0, 10.0, 30.0]).unwrap();
        let cases = [
            (ModelParams::Vasicek(VasicekParams::new(0.5, 0.05, 0.02).unwrap()), ModelState::ShortRate { t: 0.0, r: 0.03 }, 2.0),
            (ModelParams::HoLee(HoLeeParams::new(0.02).unwrap()), ModelState::ShortRate { t: 1.0, r: 0.045 }, 3.0),
            (ModelParams::HullWhite(HullWhiteParams::new(0.2, 0.02).unwrap()), ModelState::ShortRate { t: 0.5, r: 0.035 }, 2.5),
        ];
        for (p, s, m) in cases {
            let est = mc_zero_price(&p, Some(&curve), &s, m, &cfg(5_000, 1.0 / 100.0, 3)).unwrap();
            let exact = p.price(Some(&curve), &s, m).unwrap();
            assert!(est.z_score(exact) < 4.0, "{p:?}: {est:?} vs {exact}");
        }
    }

    #[test]
    fn seeded_runs_identical() {
        let p = ModelParams::Vasicek(VasicekParams::new(1.7, 0.09, 0.37).unwrap());
        let s = ModelState::ShortRate { t: 0.0, r: 0.05 };
        let a = mc_zero_price(&p, None, &s, 1.0, &cfg(500, 0.01, 7)).unwrap();
        let b = mc_zero_price(&p, None, &s, 1.0, &cfg(500, 0.01, 7)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn path_values_independent_of_path_count() {
        let p = ModelParams::Vasicek(VasicekParams::new(1.7, 0.09, 0.37).unwrap());
        let s = ModelState::ShortRate { t: 0.0, r: 0.05 };
        let small = mc_zero_price(&p, None, &s, 1.0, &cfg(1, 0.01, 7)).unwrap();
        let key = StreamKey::new(7);
        let step = OuStep::new(1.7, 0.09, 0.37, 0.01);
        let mut rng = key.path(0);
        let direct = (-trapezoid(0.05, 100, 0.01, |x| step.advance(x, rng.normal()))).exp();
        assert_eq!(small.value, direct);
    }
}
