use super::{decay_factor, Gaussian1};
use crate::error::{ensure_ordered, Error, Result};

/// Vasicek short rate `dr = a(b - r)dt + σ dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VasicekParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
}

impl VasicekParams {
    pub fn new(a: f64, b: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("sigma", sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("Vasicek {name} must be positive (got {v})")));
            }
        }
        Ok(VasicekParams { a, b, sigma })
    }

    /// Affine coefficients `(A, B)` with `P(t,T) = A e^{-B r}`.
    pub fn ab(&self, t: f64, maturity: f64) -> Result<(f64, f64)> {
        ensure_ordered(t, maturity)?;
        let tau = maturity - t;
        Ok((self.log_a_coef(tau).exp(), decay_factor(self.a, tau)))
    }

    fn log_a_coef(&self, tau: f64) -> f64 {
        let VasicekParams { a, b, sigma } = *self;
        let big_b = decay_factor(a, tau);
        (b - sigma * sigma / (2.0 * a * a)) * (big_b - tau) - sigma * sigma * big_b * big_b / (4.0 * a)
    }

    /// Zero-coupon price at `t` for maturity `maturity` given short rate `r`.
    pub fn price(&self, r: f64, t: f64, maturity: f64) -> Result<f64> {
        ensure_ordered(t, maturity)?;
        let tau = maturity - t;
        Ok((self.log_a_coef(tau) - decay_factor(self.a, tau) * r).exp())
    }

    /// Exact conditional law of `r_{s+Δ}` given `r_s`.
    pub fn transition(&self, r_s: f64, dt: f64) -> Result<Gaussian1> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("transition step must be positive (got {dt})")));
        }
        let VasicekParams { a, b, sigma } = *self;
        let decay = (-a * dt).exp();
        let mean = r_s * decay + b * (1.0 - decay);
        // σ²(1 - e^{-2aΔ})/(2a), written with expm1 for small aΔ
        let variance = -sigma * sigma * (-2.0 * a * dt).exp_m1() / (2.0 * a);
        Ok(Gaussian1 { mean, variance })
    }

    /// Short rate reproducing `price` at `(t, maturity)`.
    pub fn invert_state(&self, price: f64, t: f64, maturity: f64) -> Result<f64> {
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::Domain(format!("price must be positive (got {price})")));
        }
        ensure_ordered(t, maturity)?;
        if maturity == t {
            return Err(Error::SingularInversion(
                "cannot infer the short rate from a matured bond".into(),
            ));
        }
        let tau = maturity - t;
        Ok((self.log_a_coef(tau) - price.ln()) / decay_factor(self.a, tau))
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.a)
    }
}
