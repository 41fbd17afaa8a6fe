use chrono::NaiveDate;

use super::bond::{ytm_from_price, zero_price_from_yield, CouponBond};
use super::daycount::year_fraction;
use crate::error::{Error, Result};

/// Longest maturity accepted as the short anchor of an initial curve.
pub const SHORT_ANCHOR_MAX: f64 = 0.5;

/// Initial term structure `T -> P^M(0,T)`.
///
/// Interpolation is log-linear in discount factors, so the instantaneous
/// forward is piecewise constant between knots. The knot `(0, 1)` is always
/// present.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    times: Vec<f64>,
    log_dfs: Vec<f64>,
    flat_extrapolation: bool,
}

impl DiscountCurve {
    /// Builds a curve from `(τ, P)` pillars with `τ > 0` strictly increasing.
    pub fn new(pillars: &[(f64, f64)]) -> Result<Self> {
        if pillars.is_empty() {
            return Err(Error::Precondition("curve needs at least one pillar".into()));
        }
        let mut times = Vec::with_capacity(pillars.len() + 1);
        let mut log_dfs = Vec::with_capacity(pillars.len() + 1);
        times.push(0.0);
        log_dfs.push(0.0);
        for &(tau, df) in pillars {
            if !tau.is_finite() || !df.is_finite() {
                return Err(Error::Domain(format!("non-finite pillar ({tau}, {df})")));
            }
            if !(df > 0.0 && df <= 1.0) {
                return Err(Error::Domain(format!(
                    "discount factor {df} at τ = {tau} outside (0, 1]"
                )));
            }
            let last = *times.last().unwrap();
            if tau == 0.0 && times.len() == 1 {
                if df != 1.0 {
                    return Err(Error::Domain(format!("P(0,0) must be 1 (got {df})")));
                }
                continue;
            }
            if tau <= last {
                return Err(Error::Ordering(format!(
                    "pillar maturities must be strictly increasing ({tau} after {last})"
                )));
            }
            times.push(tau);
            log_dfs.push(df.ln());
        }
        if times.len() < 2 {
            return Err(Error::Precondition("curve needs a pillar beyond τ = 0".into()));
        }
        Ok(DiscountCurve {
            times,
            log_dfs,
            flat_extrapolation: false,
        })
    }

    /// Flat curve `exp(-y t)` sampled at the given pillars.
    pub fn flat(y: f64, pillars: &[f64]) -> Result<Self> {
        let p: Vec<_> = pillars
            .iter()
            .map(|&t| (t, zero_price_from_yield(y, t)))
            .collect();
        DiscountCurve::new(&p)
    }

    /// Continue the last segment's forward beyond the final pillar.
    pub fn with_flat_extrapolation(mut self, enabled: bool) -> Self {
        self.flat_extrapolation = enabled;
        self
    }

    pub fn flat_extrapolation(&self) -> bool {
        self.flat_extrapolation
    }

    /// Pillars as `(τ, P)`, excluding the implicit `(0, 1)` knot.
    pub fn pillars(&self) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.log_dfs)
            .skip(1)
            .map(|(&t, &l)| (t, l.exp()))
            .collect()
    }

    pub fn max_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn check_span(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || (t > self.max_time() && !self.flat_extrapolation) {
            return Err(Error::Extrapolation {
                t,
                max: self.max_time(),
            });
        }
        Ok(())
    }

    /// Index `i` of the segment `[times[i], times[i+1])` containing `t`
    /// (right-continuous at knots; the last segment extends to +∞).
    fn segment(&self, t: f64) -> usize {
        let n = self.times.len();
        let idx = self.times.partition_point(|&k| k <= t);
        idx.saturating_sub(1).min(n - 2)
    }

    fn segment_forward(&self, i: usize) -> f64 {
        -(self.log_dfs[i + 1] - self.log_dfs[i]) / (self.times[i + 1] - self.times[i])
    }

    /// `ln P^M(0,t)`.
    pub fn log_discount(&self, t: f64) -> Result<f64> {
        self.check_span(t)?;
        let i = self.segment(t);
        if t == self.times[i] {
            return Ok(self.log_dfs[i]);
        }
        Ok(self.log_dfs[i] - self.segment_forward(i) * (t - self.times[i]))
    }

    /// `P^M(0,t)`.
    pub fn discount(&self, t: f64) -> Result<f64> {
        Ok(self.log_discount(t)?.exp())
    }

    /// Instantaneous forward `f^M(0,t) = -d ln P^M(0,t)/dt`; right limit at knots.
    pub fn instantaneous_forward(&self, t: f64) -> Result<f64> {
        self.check_span(t)?;
        Ok(self.segment_forward(self.segment(t)))
    }

    /// Knots where consecutive pillar discount factors fail to decrease.
    pub fn non_decreasing_pillars(&self) -> Vec<(f64, f64)> {
        self.times
            .windows(2)
            .zip(self.log_dfs.windows(2))
            .skip(1)
            .filter(|(_, l)| l[1] >= l[0])
            .map(|(t, l)| (t[1], l[1].exp()))
            .collect()
    }
}

/// Settings for turning bond quotes into zero prices.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuoteConvention {
    /// Quotes are clean; accrued interest is added before solving for yield.
    pub clean_prices: bool,
}

/// A market quote for a coupon bond, per 100 face.
#[derive(Debug, Clone, PartialEq)]
pub struct BondQuote {
    pub bond: CouponBond,
    pub settlement: NaiveDate,
    pub price: f64,
}

/// Zero price of a quote: its yield applied over the time to maturity.
pub fn quote_to_zero(quote: &BondQuote, convention: QuoteConvention) -> Result<(f64, f64)> {
    let mut price = quote.price;
    if convention.clean_prices {
        price += quote.bond.accrued_interest(quote.settlement)?;
    }
    let y = ytm_from_price(&quote.bond, quote.settlement, price * quote.bond.face / 100.0)
        .map_err(|e| match e {
            Error::NoSolution(m) => Error::NoSolution(format!("{}: {m}", quote.bond.id)),
            other => other,
        })?;
    let tau = year_fraction(quote.settlement, quote.bond.maturity)?.value();
    Ok((tau, zero_price_from_yield(y, tau)))
}

/// Builds `P^M(0,·)` from coupon-bond quotes sharing one settlement date.
pub fn build_initial_curve(quotes: &[BondQuote], convention: QuoteConvention) -> Result<DiscountCurve> {
    if quotes.len() < 2 {
        return Err(Error::Precondition(format!(
            "initial curve needs at least 2 quotes (got {})",
            quotes.len()
        )));
    }
    let settlement = quotes[0].settlement;
    if let Some(q) = quotes.iter().find(|q| q.settlement != settlement) {
        return Err(Error::Precondition(format!(
            "quote {} settles {} but the curve settles {settlement}",
            q.bond.id, q.settlement
        )));
    }
    let mut pillars = quotes
        .iter()
        .map(|q| quote_to_zero(q, convention))
        .collect::<Result<Vec<_>>>()?;
    pillars.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = pillars.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Ambiguity(format!(
            "two quotes share maturity τ = {}",
            w[0].0
        )));
    }
    if pillars[0].0 > SHORT_ANCHOR_MAX {
        return Err(Error::Precondition(format!(
            "shortest quote τ = {} exceeds the short-anchor limit {SHORT_ANCHOR_MAX}",
            pillars[0].0
        )));
    }
    DiscountCurve::new(&pillars)
}
