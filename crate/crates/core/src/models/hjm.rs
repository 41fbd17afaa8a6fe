//! HJM drift restriction and the Ho-Lee / Hull-White curve-fitted prices.

use super::decay_factor;
use crate::curve::DiscountCurve;
use crate::error::{ensure_ordered, Error, Result};

/// Deterministic forward-rate volatility `σ(s, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolatilityStructure {
    /// `σ(s,u) = σ` (Ho-Lee).
    Constant { sigma: f64 },
    /// `σ(s,u) = σ e^{-a(u-s)}` (Hull-White).
    Damped { a: f64, sigma: f64 },
}

impl VolatilityStructure {
    pub fn at(&self, s: f64, u: f64) -> f64 {
        match *self {
            VolatilityStructure::Constant { sigma } => sigma,
            VolatilityStructure::Damped { a, sigma } => sigma * (-a * (u - s)).exp(),
        }
    }

    /// `∫_s^t σ(s,u) du`.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        match *self {
            VolatilityStructure::Constant { sigma } => sigma * (t - s),
            VolatilityStructure::Damped { a, sigma } => sigma * decay_factor(a, t - s),
        }
    }
}

/// No-arbitrage drift `α(s,t) = σ(s,t) ∫_s^t σ(s,u) du`.
pub fn hjm_drift(vol: &VolatilityStructure, s: f64, t: f64) -> Result<f64> {
    if t < s {
        return Err(Error::Ordering(format!("drift needs s <= t (got s = {s}, t = {t})")));
    }
    Ok(vol.at(s, t) * vol.integral(s, t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoLeeParams {
    pub sigma: f64,
}

impl HoLeeParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("Ho-Lee sigma must be positive (got {sigma})")));
        }
        Ok(HoLeeParams { sigma })
    }

    pub fn volatility(&self) -> VolatilityStructure {
        VolatilityStructure::Constant { sigma: self.sigma }
    }

    /// `P^M(0,T)/P^M(0,t) exp((T-t) f^M(0,t) - σ²/2 t (T-t)² - (T-t) r)`.
    pub fn price(&self, curve: &DiscountCurve, r: f64, t: f64, maturity: f64) -> Result<f64> {
        ensure_ordered(t, maturity)?;
        let tau = maturity - t;
        let ratio = curve.log_discount(maturity)? - curve.log_discount(t)?;
        let f0t = curve.instantaneous_forward(t)?;
        let s2 = self.sigma * self.sigma;
        Ok((ratio + tau * f0t - 0.5 * s2 * t * tau * tau - tau * r).exp())
    }
}

/// Which damping factor multiplies the variance term of the Hull-White price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HullWhiteFormula {
    /// `1 - e^{-2at}`.
    #[default]
    Standard,
    /// `1 - e^{-2t}`, reproducing the formula as printed in the source text.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullWhiteParams {
    pub a: f64,
    pub sigma: f64,
}

impl HullWhiteParams {
    pub fn new(a: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("sigma", sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("Hull-White {name} must be positive (got {v})")));
            }
        }
        Ok(HullWhiteParams { a, sigma })
    }

    pub fn volatility(&self) -> VolatilityStructure {
        VolatilityStructure::Damped { a: self.a, sigma: self.sigma }
    }

    pub fn price(&self, curve: &DiscountCurve, r: f64, t: f64, maturity: f64) -> Result<f64> {
        self.price_with(curve, r, t, maturity, HullWhiteFormula::Standard)
    }

    /// `P^M(0,T)/P^M(0,t) exp(B f^M(0,t) - σ²/(4a) (1 - e^{-2at}) B² - B r)`.
    pub fn price_with(
        &self,
        curve: &DiscountCurve,
        r: f64,
        t: f64,
        maturity: f64,
        formula: HullWhiteFormula,
    ) -> Result<f64> {
        ensure_ordered(t, maturity)?;
        let HullWhiteParams { a, sigma } = *self;
        let b = decay_factor(a, maturity - t);
        let ratio = curve.log_discount(maturity)? - curve.log_discount(t)?;
        let f0t = curve.instantaneous_forward(t)?;
        let damping = match formula {
            HullWhiteFormula::Standard => -(-2.0 * a * t).exp_m1(),
            HullWhiteFormula::Printed => -(-2.0 * t).exp_m1(),
        };
        let convexity = sigma * sigma / (4.0 * a) * damping * b * b;
        Ok((ratio + b * f0t - convexity - b * r).exp())
    }
}
