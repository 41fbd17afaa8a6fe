use super::{decay_factor, Gaussian2};
use crate::curve::DiscountCurve;
use crate::error::{ensure_ordered, Error, Result};

/// Determinant threshold below which the two-bond inversion is refused.
pub const INVERSION_DET_MIN: f64 = 1e-14;

/// G2++ parameters: `dx = -a x dt + σ dW1`, `dy = -b y dt + η dW2`,
/// `dW1 dW2 = ρ dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Params {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub eta: f64,
    pub rho: f64,
}

/// Factor values observed at time `t` (years from the curve anchor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2State {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl G2State {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        G2State { x, y, t }
    }
}

impl G2Params {
    pub fn new(a: f64, b: f64, sigma: f64, eta: f64, rho: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("sigma", sigma), ("eta", eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("G2++ {name} must be positive (got {v})")));
            }
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::Domain(format!("G2++ rho must lie in [-1, 1] (got {rho})")));
        }
        Ok(G2Params { a, b, sigma, eta, rho })
    }

    /// Variance of `∫_t^T (x + y) du`, a function of `T - t` only.
    pub fn v(&self, t: f64, maturity: f64) -> Result<f64> {
        ensure_ordered(t, maturity)?;
        Ok(self.v_tau(maturity - t))
    }

    // constant terms folded into expm1 so that V(t,t) = 0 exactly
    pub(crate) fn v_tau(&self, tau: f64) -> f64 {
        let G2Params { a, b, sigma, eta, rho } = *self;
        let single = |k: f64, vol: f64| {
            vol * vol / (k * k)
                * (tau + 2.0 * (-k * tau).exp_m1() / k - (-2.0 * k * tau).exp_m1() / (2.0 * k))
        };
        let cross = 2.0 * rho * sigma * eta / (a * b)
            * (tau + (-a * tau).exp_m1() / a + (-b * tau).exp_m1() / b
                - (-(a + b) * tau).exp_m1() / (a + b));
        single(a, sigma) + single(b, eta) + cross
    }

    /// Exponent `A(t,T)` of the curve-fitted price.
    pub(crate) fn a_exponent(&self, state: &G2State, maturity: f64) -> f64 {
        let tau = maturity - state.t;
        0.5 * (self.v_tau(tau) - self.v_tau(maturity) + self.v_tau(state.t))
            - decay_factor(self.a, tau) * state.x
            - decay_factor(self.b, tau) * state.y
    }

    /// Zero-coupon price `P^M(0,T)/P^M(0,t) exp(A(t,T))`.
    pub fn price(&self, curve: &DiscountCurve, state: &G2State, maturity: f64) -> Result<f64> {
        ensure_ordered(state.t, maturity)?;
        let ratio = curve.log_discount(maturity)? - curve.log_discount(state.t)?;
        Ok((ratio + self.a_exponent(state, maturity)).exp())
    }

    /// Exact bivariate law of `(x, y)` after a step `dt`.
    pub fn transition(&self, state: &G2State, dt: f64) -> Result<Gaussian2> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("transition step must be positive (got {dt})")));
        }
        let G2Params { a, b, sigma, eta, rho } = *self;
        let var_x = -sigma * sigma * (-2.0 * a * dt).exp_m1() / (2.0 * a);
        let var_y = -eta * eta * (-2.0 * b * dt).exp_m1() / (2.0 * b);
        let cov = -rho * sigma * eta * (-(a + b) * dt).exp_m1() / (a + b);
        Ok(Gaussian2 {
            mean: [state.x * (-a * dt).exp(), state.y * (-b * dt).exp()],
            cov: [[var_x, cov], [cov, var_y]],
        })
    }

    /// Loadings `(B_a(τ), B_b(τ))` of the log price on `(x, y)`, negated.
    pub fn loadings(&self, tau: f64) -> (f64, f64) {
        (decay_factor(self.a, tau), decay_factor(self.b, tau))
    }

    /// Recovers `(x, y)` at time `t` from two zero prices with distinct
    /// maturities by solving the linear system in log prices.
    pub fn invert_states(
        &self,
        curve: &DiscountCurve,
        prices: [f64; 2],
        t: f64,
        maturities: [f64; 2],
    ) -> Result<G2State> {
        if maturities[0] == maturities[1] {
            return Err(Error::Conditioning("both maturities coincide".into()));
        }
        for (&p, &m) in prices.iter().zip(&maturities) {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Domain(format!("price must be positive (got {p})")));
            }
            if !(m > t) {
                return Err(Error::Ordering(format!("maturity {m} not after t = {t}")));
            }
        }
        let zero = G2State::new(0.0, 0.0, t);
        let log_t = curve.log_discount(t)?;
        let mut rhs = [0.0; 2];
        let mut rows = [(0.0, 0.0); 2];
        for i in 0..2 {
            let k = curve.log_discount(maturities[i])? - log_t + self.a_exponent(&zero, maturities[i]);
            // k - ln P = B_a x + B_b y
            rhs[i] = k - prices[i].ln();
            rows[i] = self.loadings(maturities[i] - t);
        }
        let det = rows[0].0 * rows[1].1 - rows[1].0 * rows[0].1;
        if !(det.abs() >= INVERSION_DET_MIN) {
            return Err(Error::Conditioning(format!(
                "inversion determinant {det:e} below {INVERSION_DET_MIN:e}"
            )));
        }
        let x = (rhs[0] * rows[1].1 - rhs[1] * rows[0].1) / det;
        let y = (rows[0].0 * rhs[1] - rows[1].0 * rhs[0]) / det;
        Ok(G2State::new(x, y, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn paper() -> G2Params {
        G2Params::new(0.1300, 0.3526, 0.2062, 0.4892, -0.99).unwrap()
    }

    fn curve() -> DiscountCurve {
        DiscountCurve::new(&[(0.25, 0.99), (1.0, 0.96), (5.0, 0.80), (10.0, 0.62), (30.0, 0.25)])
            .unwrap()
    }

    #[test]
    fn v_vanishes_on_empty_interval() {
        assert_eq!(paper().v(3.0, 3.0).unwrap(), 0.0);
        assert!(paper().v(3.0, 2.0).is_err());
    }

    #[test]
    fn v_decouples_without_correlation() {
        let mut p = paper();
        p.rho = 0.0;
        let only_x = G2Params { eta: 1e-300, ..p };
        let only_y = G2Params { sigma: 1e-300, ..p };
        let v = p.v(0.0, 7.0).unwrap();
        let parts = only_x.v(0.0, 7.0).unwrap() + only_y.v(0.0, 7.0).unwrap();
        assert!((v - parts).abs() < 1e-14);
    }

    #[test]
    fn v_matches_integral_form() {
        // Simpson quadrature of the integral representation
        let p = paper();
        let (t, m) = (0.0, 5.0);
        let integrand = |u: f64| {
            let ea = 1.0 - (-p.a * (m - u)).exp();
            let eb = 1.0 - (-p.b * (m - u)).exp();
            p.sigma * p.sigma / (p.a * p.a) * ea * ea
                + p.eta * p.eta / (p.b * p.b) * eb * eb
                + 2.0 * p.rho * p.sigma * p.eta / (p.a * p.b) * ea * eb
        };
        let n = 20_000;
        let h = (m - t) / n as f64;
        let mut s = integrand(t) + integrand(m);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * integrand(t + i as f64 * h);
        }
        let quad = s * h / 3.0;
        assert!((p.v(t, m).unwrap() - quad).abs() < 1e-8);
    }

    #[test]
    fn initial_curve_fit() {
        let c = curve();
        let p = paper();
        let s = G2State::new(0.0, 0.0, 0.0);
        for (tau, df) in c.pillars() {
            assert!((p.price(&c, &s, tau).unwrap() - df).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_at_maturity() {
        let c = curve();
        let s = G2State::new(0.3, -0.2, 2.0);
        assert_eq!(paper().price(&c, &s, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn curve_span_is_enforced() {
        let c = curve();
        let s = G2State::new(0.0, 0.0, 1.0);
        assert!(matches!(
            paper().price(&c, &s, 31.0),
            Err(Error::Extrapolation { .. })
        ));
    }

    #[test]
    fn transition_sums_to_short_rate_variance() {
        let p = paper();
        let dt = 0.7;
        let g = p.transition(&G2State::new(0.1, -0.2, 0.0), dt).unwrap();
        let total = g.cov[0][0] + g.cov[1][1] + 2.0 * g.cov[0][1];
        let (a, b) = (p.a, p.b);
        let expected = p.sigma * p.sigma / (2.0 * a) * (1.0 - (-2.0 * a * dt).exp())
            + p.eta * p.eta / (2.0 * b) * (1.0 - (-2.0 * b * dt).exp())
            + 2.0 * p.rho * p.sigma * p.eta / (a + b) * (1.0 - (-(a + b) * dt).exp());
        assert!((total - expected).abs() < 1e-14);
        assert!((g.mean[0] - 0.1 * (-a * dt).exp()).abs() < 1e-15);
        assert!(p.transition(&G2State::new(0.0, 0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn perfect_correlation_covariance_is_psd() {
        for rho in [-1.0, 1.0] {
            let p = G2Params::new(0.4, 0.4, 0.2, 0.3, rho).unwrap();
            let g = p.transition(&G2State::new(0.0, 0.0, 0.0), 3.0).unwrap();
            let det = g.cov[0][0] * g.cov[1][1] - g.cov[0][1] * g.cov[1][0];
            assert!(det.abs() < 1e-15);
            let p = G2Params::new(0.13, 0.35, 0.2, 0.3, rho).unwrap();
            let g = p.transition(&G2State::new(0.0, 0.0, 0.0), 3.0).unwrap();
            let det = g.cov[0][0] * g.cov[1][1] - g.cov[0][1] * g.cov[1][0];
            assert!(det >= 0.0);
        }
    }

    #[test]
    fn inversion_round_trip() {
        let (c, p) = (curve(), paper());
        let truth = G2State::new(0.04, -0.03, 1.5);
        let m = [13.5, 21.5];
        let prices = [p.price(&c, &truth, m[0]).unwrap(), p.price(&c, &truth, m[1]).unwrap()];
        let got = p.invert_states(&c, prices, 1.5, m).unwrap();
        assert!((got.x - truth.x).abs() < 1e-10);
        assert!((got.y - truth.y).abs() < 1e-10);
        for i in 0..2 {
            assert!((p.price(&c, &got, m[i]).unwrap() - prices[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn equal_speeds_are_singular() {
        let p = G2Params::new(0.3, 0.3, 0.2, 0.2, 0.1).unwrap();
        let err = p.invert_states(&curve(), [0.9, 0.8], 0.0, [2.0, 5.0]).unwrap_err();
        assert!(matches!(err, Error::Conditioning(_)));
        let err = paper().invert_states(&curve(), [0.9, 0.8], 0.0, [2.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::Conditioning(_)));
    }

    #[test]
    fn log_price_affine_in_factors() {
        let (c, p) = (curve(), paper());
        let lp = |x: f64, y: f64| p.price(&c, &G2State::new(x, y, 1.0), 8.0).unwrap().ln();
        let base = lp(0.0, 0.0);
        let (ba, bb) = p.loadings(7.0);
        assert!((lp(0.02, -0.05) - (base - 0.02 * ba + 0.05 * bb)).abs() < 1e-13);
        assert!(((lp(0.04, -0.1) - base) - 2.0 * (lp(0.02, -0.05) - base)).abs() < 1e-13);
    }
}
