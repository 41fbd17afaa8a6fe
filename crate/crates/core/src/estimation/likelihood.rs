//! Exact log-likelihood of observed zero prices.
//!
//! Prices are mapped to model states by exact inversion of the affine price
//! formula. The transition density of the states is gaussian, and the change
//! of variables from states to prices contributes `-ln|J_k|` per observation,
//! where `J_k = ∂P_k/∂X_k`.

use super::panel::AlignedPanel;
use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::models::{decay_factor, G2Params, G2State, VasicekParams};

/// Log-likelihood with its two components: `total = density - log_jacobian`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLik {
    pub total: f64,
    /// Sum of state transition log densities.
    pub density: f64,
    /// Sum of `ln|J_k|` over the conditional terms.
    pub log_jacobian: f64,
}

/// Observation spacing used by the likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    /// Gaps taken from the observation times.
    Irregular,
    /// Every gap equals the given step.
    Regular(f64),
}

impl Spacing {
    fn gap(&self, panel: &AlignedPanel, k: usize) -> f64 {
        match *self {
            Spacing::Irregular => panel.times[k] - panel.times[k - 1],
            Spacing::Regular(dt) => dt,
        }
    }
}

fn check_panel(panel: &AlignedPanel, arity: usize) -> Result<()> {
    if panel.instrument_count() != arity {
        return Err(Error::Precondition(format!(
            "likelihood needs exactly {arity} instrument(s), panel has {}",
            panel.instrument_count()
        )));
    }
    let n = panel.len();
    if panel.dates.len() != n
        || panel.prices.len() != n
        || panel.maturities.len() != n
        || panel.prices.iter().chain(&panel.maturities).any(|r| r.len() != arity)
    {
        return Err(Error::Precondition("panel columns have inconsistent lengths".into()));
    }
    if panel.len() < 2 {
        return Err(Error::Precondition(format!(
            "likelihood needs at least 2 observations (got {})",
            panel.len()
        )));
    }
    if let Some((&t, _)) = panel
        .times
        .iter()
        .zip(&panel.maturities)
        .find(|(&t, ms)| ms.iter().any(|&m| m <= t))
    {
        return Err(Error::Precondition(format!(
            "observation at t = {t} is not before every maturity"
        )));
    }
    Ok(())
}

/// Short rates implied by a single-instrument panel.
pub fn vasicek_states(params: &VasicekParams, panel: &AlignedPanel) -> Result<Vec<f64>> {
    panel
        .times
        .iter()
        .zip(&panel.prices)
        .zip(&panel.maturities)
        .map(|((&t, p), m)| params.invert_state(p[0], t, m[0]))
        .collect()
}

pub fn loglik_vasicek(params: &VasicekParams, panel: &AlignedPanel) -> Result<LogLik> {
    loglik_vasicek_with(params, panel, Spacing::Irregular)
}

pub fn loglik_vasicek_with(
    params: &VasicekParams,
    panel: &AlignedPanel,
    spacing: Spacing,
) -> Result<LogLik> {
    check_panel(panel, 1)?;
    let rates = vasicek_states(params, panel)?;
    let mut density = 0.0;
    let mut log_jacobian = 0.0;
    for k in 1..panel.len() {
        let dt = spacing.gap(panel, k);
        if !(dt > 0.0) {
            return Err(Error::DegenerateStep(format!(
                "non-positive gap {dt} before observation {k}"
            )));
        }
        let law = params.transition(rates[k - 1], dt)?;
        let lp = law.log_pdf(rates[k]);
        if !(law.variance > 0.0) || !lp.is_finite() {
            return Err(Error::DegenerateStep(format!(
                "transition density not finite at observation {k} (variance {:e})",
                law.variance
            )));
        }
        density += lp;
        let b = decay_factor(params.a, panel.maturities[k][0] - panel.times[k]);
        log_jacobian += (b * panel.prices[k][0]).ln();
    }
    Ok(LogLik {
        total: density - log_jacobian,
        density,
        log_jacobian,
    })
}

/// Factor states implied by a two-instrument panel.
pub fn g2pp_states(
    params: &G2Params,
    curve: &DiscountCurve,
    panel: &AlignedPanel,
) -> Result<Vec<G2State>> {
    panel
        .times
        .iter()
        .zip(&panel.prices)
        .zip(&panel.maturities)
        .map(|((&t, p), m)| params.invert_states(curve, [p[0], p[1]], t, [m[0], m[1]]))
        .collect()
}

/// `|det ∂(P1,P2)/∂(x,y)|` at one observation.
pub fn g2pp_jacobian(params: &G2Params, prices: [f64; 2], taus: [f64; 2]) -> f64 {
    let (a1, b1) = params.loadings(taus[0]);
    let (a2, b2) = params.loadings(taus[1]);
    prices[0] * prices[1] * (a1 * b2 - a2 * b1).abs()
}

pub fn loglik_g2pp(params: &G2Params, curve: &DiscountCurve, panel: &AlignedPanel) -> Result<LogLik> {
    loglik_g2pp_with(params, curve, panel, Spacing::Irregular)
}

pub fn loglik_g2pp_with(
    params: &G2Params,
    curve: &DiscountCurve,
    panel: &AlignedPanel,
    spacing: Spacing,
) -> Result<LogLik> {
    check_panel(panel, 2)?;
    let states = g2pp_states(params, curve, panel)?;
    let mut density = 0.0;
    let mut log_jacobian = 0.0;
    for k in 1..panel.len() {
        let dt = spacing.gap(panel, k);
        if !(dt > 0.0) {
            return Err(Error::DegenerateStep(format!(
                "non-positive gap {dt} before observation {k}"
            )));
        }
        let law = params.transition(&states[k - 1], dt)?;
        let lp = law.log_pdf([states[k].x, states[k].y])?;
        if !lp.is_finite() {
            return Err(Error::DegenerateStep(format!(
                "transition density not finite at observation {k}"
            )));
        }
        density += lp;
        let t = panel.times[k];
        let m = &panel.maturities[k];
        let taus = [m[0] - t, m[1] - t];
        let j = g2pp_jacobian(params, [panel.prices[k][0], panel.prices[k][1]], taus);
        if !(j > 0.0) {
            return Err(Error::Conditioning(format!("singular Jacobian at observation {k}")));
        }
        log_jacobian += j.ln();
    }
    Ok(LogLik {
        total: density - log_jacobian,
        density,
        log_jacobian,
    })
}
