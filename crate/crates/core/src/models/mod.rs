//! Closed-form zero-coupon prices for the four gaussian models.

mod g2pp;
mod hjm;
mod vasicek;

use std::fmt;
use std::str::FromStr;

pub use g2pp::{G2Params, G2State, INVERSION_DET_MIN};
pub use hjm::{hjm_drift, HoLeeParams, HullWhiteFormula, HullWhiteParams, VolatilityStructure};
pub use vasicek::VasicekParams;

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};

/// `(1 - e^{-c τ}) / c`.
pub fn decay_factor(c: f64, tau: f64) -> f64 {
    -(-c * tau).exp_m1() / c
}

/// Univariate normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1 {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian1 {
    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = x - self.mean;
        -0.5 * ((2.0 * std::f64::consts::PI * self.variance).ln() + z * z / self.variance)
    }
}

/// Bivariate normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Gaussian2 {
    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    /// Log density; fails when the covariance is not positive definite.
    pub fn log_pdf(&self, point: [f64; 2]) -> Result<f64> {
        let det = self.det();
        if !(det > 0.0 && self.cov[0][0] > 0.0) {
            return Err(Error::Boundary(format!(
                "covariance not positive definite (det = {det:e})"
            )));
        }
        let dx = point[0] - self.mean[0];
        let dy = point[1] - self.mean[1];
        let quad = (self.cov[1][1] * dx * dx - 2.0 * self.cov[0][1] * dx * dy
            + self.cov[0][0] * dy * dy)
            / det;
        Ok(-(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad)
    }

    /// Lower Cholesky factor `[[l11, 0], [l21, l22]]`.
    pub fn cholesky(&self) -> Result<[[f64; 2]; 2]> {
        let l11 = self.cov[0][0].sqrt();
        let l21 = if l11 > 0.0 { self.cov[1][0] / l11 } else { 0.0 };
        let rem = self.cov[1][1] - l21 * l21;
        // tolerate rounding at |ρ| = 1
        if !(rem >= -1e-12 * self.cov[1][1].abs().max(f64::MIN_POSITIVE)) || self.cov[0][0] < 0.0 {
            return Err(Error::Boundary(format!(
                "covariance numerically not positive semi-definite (residual {rem:e})"
            )));
        }
        Ok([[l11, 0.0], [l21, rem.max(0.0).sqrt()]])
    }
}

/// Model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Vasicek,
    G2pp,
    HoLee,
    HullWhite,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Vasicek,
        ModelKind::G2pp,
        ModelKind::HoLee,
        ModelKind::HullWhite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Vasicek => "vasicek",
            ModelKind::G2pp => "g2pp",
            ModelKind::HoLee => "holee",
            ModelKind::HullWhite => "hullwhite",
        }
    }

    pub fn needs_curve(self) -> bool {
        !matches!(self, ModelKind::Vasicek)
    }

    pub fn factors(self) -> usize {
        match self {
            ModelKind::G2pp => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vasicek" => Ok(ModelKind::Vasicek),
            "g2pp" | "g2++" => Ok(ModelKind::G2pp),
            "holee" | "ho-lee" => Ok(ModelKind::HoLee),
            "hullwhite" | "hull-white" => Ok(ModelKind::HullWhite),
            other => Err(Error::Usage(format!("unknown model '{other}'"))),
        }
    }
}

/// Parameters of any supported model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Vasicek(VasicekParams),
    G2pp(G2Params),
    HoLee(HoLeeParams),
    HullWhite(HullWhiteParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Vasicek(_) => ModelKind::Vasicek,
            ModelParams::G2pp(_) => ModelKind::G2pp,
            ModelParams::HoLee(_) => ModelKind::HoLee,
            ModelParams::HullWhite(_) => ModelKind::HullWhite,
        }
    }

    /// `(name, value)` pairs in a fixed order.
    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        match *self {
            ModelParams::Vasicek(p) => vec![("a", p.a), ("b", p.b), ("sigma", p.sigma)],
            ModelParams::G2pp(p) => vec![
                ("a", p.a),
                ("b", p.b),
                ("sigma", p.sigma),
                ("eta", p.eta),
                ("rho", p.rho),
            ],
            ModelParams::HoLee(p) => vec![("sigma", p.sigma)],
            ModelParams::HullWhite(p) => vec![("a", p.a), ("sigma", p.sigma)],
        }
    }

    /// Builds parameters from named values, e.g. parsed from a key=value file.
    pub fn from_named(kind: ModelKind, get: impl Fn(&str) -> Option<f64>) -> Result<Self> {
        let need = |k: &str| {
            get(k).ok_or_else(|| Error::Usage(format!("missing {kind} parameter '{k}'")))
        };
        Ok(match kind {
            ModelKind::Vasicek => {
                ModelParams::Vasicek(VasicekParams::new(need("a")?, need("b")?, need("sigma")?)?)
            }
            ModelKind::G2pp => ModelParams::G2pp(G2Params::new(
                need("a")?,
                need("b")?,
                need("sigma")?,
                need("eta")?,
                need("rho")?,
            )?),
            ModelKind::HoLee => ModelParams::HoLee(HoLeeParams::new(need("sigma")?)?),
            ModelKind::HullWhite => {
                ModelParams::HullWhite(HullWhiteParams::new(need("a")?, need("sigma")?)?)
            }
        })
    }

    /// Closed-form zero-coupon price at `state` for `maturity`.
    pub fn price(
        &self,
        curve: Option<&DiscountCurve>,
        state: &ModelState,
        maturity: f64,
    ) -> Result<f64> {
        let need_curve = || {
            curve.ok_or_else(|| {
                Error::Precondition(format!("{} pricing needs an initial curve", self.kind()))
            })
        };
        match (self, state) {
            (ModelParams::Vasicek(p), ModelState::ShortRate { t, r }) => p.price(*r, *t, maturity),
            (ModelParams::G2pp(p), ModelState::Factors(s)) => p.price(need_curve()?, s, maturity),
            (ModelParams::HoLee(p), ModelState::ShortRate { t, r }) => {
                p.price(need_curve()?, *r, *t, maturity)
            }
            (ModelParams::HullWhite(p), ModelState::ShortRate { t, r }) => {
                p.price(need_curve()?, *r, *t, maturity)
            }
            _ => Err(Error::Precondition(format!(
                "state shape does not match the {} model",
                self.kind()
            ))),
        }
    }
}

/// Model state at an observation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelState {
    ShortRate { t: f64, r: f64 },
    Factors(G2State),
}

impl ModelState {
    pub fn t(&self) -> f64 {
        match self {
            ModelState::ShortRate { t, .. } => *t,
            ModelState::Factors(s) => s.t,
        }
    }
}

/// Dated sequence of model states, e.g. the filtered states of a fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateSeries {
    pub dates: Vec<chrono::NaiveDate>,
    pub states: Vec<ModelState>,
}

impl StateSeries {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, date: chrono::NaiveDate, state: ModelState) {
        self.dates.push(date);
        self.states.push(state);
    }

    pub fn iter(&self) -> impl Iterator<Item = (chrono::NaiveDate, &ModelState)> {
        self.dates.iter().copied().zip(&self.states)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian2_matches_independent_product() {
        let g = Gaussian2 { mean: [0.1, -0.2], cov: [[0.04, 0.0], [0.0, 0.09]] };
        let a = Gaussian1 { mean: 0.1, variance: 0.04 };
        let b = Gaussian1 { mean: -0.2, variance: 0.09 };
        let p = [0.05, 0.1];
        assert!((g.log_pdf(p).unwrap() - (a.log_pdf(p[0]) + b.log_pdf(p[1]))).abs() < 1e-13);
    }

    #[test]
    fn singular_covariance_is_boundary() {
        let g = Gaussian2 { mean: [0.0; 2], cov: [[1.0, 1.0], [1.0, 1.0]] };
        assert!(matches!(g.log_pdf([0.0, 0.0]), Err(Error::Boundary(_))));
        let l = g.cholesky().unwrap();
        assert!((l[1][0] - 1.0).abs() < 1e-15 && l[1][1] == 0.0);
    }

    #[test]
    fn model_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("cir".parse::<ModelKind>().is_err());
    }

    #[test]
    fn unit_price_at_maturity_for_every_model() {
        let curve = DiscountCurve::flat(0.04, &[1.0, 30.0]).unwrap();
        let cases = [
            (
                ModelParams::Vasicek(VasicekParams::new(1.7051, 0.0937, 0.3721).unwrap()),
                ModelState::ShortRate { t: 2.0, r: 0.3 },
            ),
            (
                ModelParams::G2pp(G2Params::new(0.13, 0.3526, 0.2062, 0.4892, -0.99).unwrap()),
                ModelState::Factors(G2State::new(0.1, -0.1, 2.0)),
            ),
            (
                ModelParams::HoLee(HoLeeParams::new(0.3071).unwrap()),
                ModelState::ShortRate { t: 2.0, r: -0.01 },
            ),
            (
                ModelParams::HullWhite(HullWhiteParams::new(0.0813, 0.0215).unwrap()),
                ModelState::ShortRate { t: 2.0, r: 0.07 },
            ),
        ];
        for (p, s) in cases {
            assert_eq!(p.price(Some(&curve), &s, 2.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn state_shape_mismatch_rejected() {
        let p = ModelParams::HoLee(HoLeeParams::new(0.1).unwrap());
        let curve = DiscountCurve::flat(0.04, &[1.0, 30.0]).unwrap();
        let s = ModelState::Factors(G2State::new(0.0, 0.0, 0.0));
        assert!(p.price(Some(&curve), &s, 3.0).is_err());
        let s = ModelState::ShortRate { t: 0.0, r: 0.0 };
        assert!(p.price(None, &s, 3.0).is_err());
    }
}
