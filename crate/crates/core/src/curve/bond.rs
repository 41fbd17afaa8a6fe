use chrono::{Months, NaiveDate};

use super::daycount::year_fraction;
use crate::error::{Error, Result};

const YTM_BRACKET: (f64, f64) = (-0.5, 2.0);
const YTM_TOLERANCE: f64 = 1e-10;
const YTM_MAX_ITER: usize = 200;

/// Coupon payments per year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frequency {
    Annual,
    SemiAnnual,
    Quarterly,
    Monthly,
}

impl Frequency {
    pub fn per_year(self) -> u32 {
        match self {
            Frequency::Annual => 1,
            Frequency::SemiAnnual => 2,
            Frequency::Quarterly => 4,
            Frequency::Monthly => 12,
        }
    }

    fn months(self) -> u32 {
        12 / self.per_year()
    }
}

impl TryFrom<u32> for Frequency {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Frequency::Annual),
            2 => Ok(Frequency::SemiAnnual),
            4 => Ok(Frequency::Quarterly),
            12 => Ok(Frequency::Monthly),
            other => Err(Error::Domain(format!(
                "coupon frequency must be one of 1, 2, 4, 12 (got {other})"
            ))),
        }
    }
}

/// Fixed-coupon bullet bond.
#[derive(Debug, Clone, PartialEq)]
pub struct CouponBond {
    pub id: String,
    pub face: f64,
    pub coupon_rate: f64,
    pub frequency: Frequency,
    pub maturity: NaiveDate,
    /// Issue date or first coupon date; no coupon is scheduled before it.
    pub first_coupon: NaiveDate,
}

/// A dated payment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CashFlow {
    pub date: NaiveDate,
    pub amount: f64,
}

impl CouponBond {
    pub fn new(
        id: impl Into<String>,
        face: f64,
        coupon_rate: f64,
        frequency: Frequency,
        maturity: NaiveDate,
        first_coupon: NaiveDate,
    ) -> Result<Self> {
        if !(face > 0.0 && face.is_finite()) {
            return Err(Error::Domain(format!("face must be positive (got {face})")));
        }
        if !(coupon_rate >= 0.0 && coupon_rate.is_finite()) {
            return Err(Error::Domain(format!(
                "coupon rate must be non-negative (got {coupon_rate})"
            )));
        }
        if first_coupon > maturity {
            return Err(Error::Ordering(format!(
                "first coupon {first_coupon} after maturity {maturity}"
            )));
        }
        Ok(CouponBond {
            id: id.into(),
            face,
            coupon_rate,
            frequency,
            maturity,
            first_coupon,
        })
    }

    /// Zero-coupon bond paying `face` at maturity.
    pub fn zero(id: impl Into<String>, face: f64, maturity: NaiveDate) -> Result<Self> {
        CouponBond::new(id, face, 0.0, Frequency::Annual, maturity, maturity)
    }

    fn coupon_amount(&self) -> f64 {
        self.face * self.coupon_rate / self.frequency.per_year() as f64
    }

    /// Coupon dates counted back from maturity, oldest first.
    fn coupon_dates(&self) -> Vec<NaiveDate> {
        let step = self.frequency.months();
        let mut dates = Vec::new();
        for k in 0u32.. {
            let Some(d) = self.maturity.checked_sub_months(Months::new(k * step)) else {
                break;
            };
            if d < self.first_coupon {
                break;
            }
            dates.push(d);
        }
        dates.reverse();
        dates
    }

    /// Full schedule: one coupon per date, face added to the last one.
    pub fn cash_flows(&self) -> Vec<CashFlow> {
        let coupon = self.coupon_amount();
        let dates = self.coupon_dates();
        let last = dates.len() - 1;
        dates
            .into_iter()
            .enumerate()
            .map(|(i, date)| CashFlow {
                date,
                amount: if i == last { coupon + self.face } else { coupon },
            })
            .collect()
    }

    /// Cash flows strictly after `settlement`.
    pub fn remaining_cash_flows(&self, settlement: NaiveDate) -> Vec<CashFlow> {
        self.cash_flows()
            .into_iter()
            .filter(|cf| cf.date > settlement)
            .collect()
    }

    /// Linear accrued coupon since the previous coupon date.
    pub fn accrued_interest(&self, settlement: NaiveDate) -> Result<f64> {
        let next = self
            .remaining_cash_flows(settlement)
            .first()
            .map(|cf| cf.date)
            .ok_or_else(|| Error::Domain(format!("bond {} has matured", self.id)))?;
        let prev = next
            .checked_sub_months(Months::new(self.frequency.months()))
            .ok_or_else(|| Error::Domain("coupon date out of range".into()))?;
        if settlement <= prev || self.coupon_rate == 0.0 {
            return Ok(0.0);
        }
        let elapsed = year_fraction(prev, settlement)?.value();
        let period = year_fraction(prev, next)?.value();
        Ok(self.coupon_amount() * elapsed / period)
    }

    /// Remaining (time, amount) pairs in ACT/365 years from `settlement`.
    pub fn timed_cash_flows(&self, settlement: NaiveDate) -> Result<Vec<(f64, f64)>> {
        self.remaining_cash_flows(settlement)
            .into_iter()
            .map(|cf| Ok((year_fraction(settlement, cf.date)?.value(), cf.amount)))
            .collect()
    }
}

/// Discount factor `exp(-y τ)` for a continuously compounded yield.
pub fn zero_price_from_yield(y: f64, tau: f64) -> f64 {
    (-y * tau).exp()
}

/// Price of the flows under a flat continuously compounded yield.
pub fn price_from_yield(flows: &[(f64, f64)], y: f64) -> f64 {
    flows.iter().map(|&(t, c)| c * (-y * t).exp()).sum()
}

/// Continuously compounded yield equating the bond's remaining cash flows
/// to `price` (per 100 face, dirty).
pub fn ytm_from_price(bond: &CouponBond, settlement: NaiveDate, price: f64) -> Result<f64> {
    if !(price > 0.0 && price.is_finite()) {
        return Err(Error::Domain(format!("price must be positive (got {price})")));
    }
    let flows = bond.timed_cash_flows(settlement)?;
    if flows.is_empty() {
        return Err(Error::Domain(format!(
            "bond {} has no cash flows after {settlement}",
            bond.id
        )));
    }
    solve_yield(&flows, price)
}

/// Bisection-safeguarded Newton iteration on the fixed bracket.
pub(crate) fn solve_yield(flows: &[(f64, f64)], price: f64) -> Result<f64> {
    let f = |y: f64| price_from_yield(flows, y) - price;
    let df = |y: f64| -flows.iter().map(|&(t, c)| t * c * (-y * t).exp()).sum::<f64>();

    let (mut lo, mut hi) = YTM_BRACKET;
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo.abs() < YTM_TOLERANCE {
        return Ok(lo);
    }
    if f_hi.abs() < YTM_TOLERANCE {
        return Ok(hi);
    }
    // price is decreasing in y, so a root needs f(lo) > 0 > f(hi)
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoSolution(format!(
            "no sign change for price {price} on yield bracket [{lo}, {hi}]"
        )));
    }

    let mut y = 0.5 * (lo + hi);
    for _ in 0..YTM_MAX_ITER {
        let fy = f(y);
        if fy.abs() < YTM_TOLERANCE {
            return Ok(y);
        }
        if fy > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let slope = df(y);
        let newton = y - fy / slope;
        y = if slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    let fy = f(y);
    if fy.abs() < YTM_TOLERANCE {
        Ok(y)
    } else {
        Err(Error::NoSolution(format!(
            "yield iteration stalled at y = {y} with residual {fy:e}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn schedule_ends_at_maturity_with_face() {
        let bond = CouponBond::new(
            "B",
            100.0,
            0.05,
            Frequency::SemiAnnual,
            date("2025-09-28"),
            date("2015-09-28"),
        )
        .unwrap();
        let flows = bond.cash_flows();
        assert_eq!(flows.len(), 21);
        assert!(flows.windows(2).all(|w| w[0].date < w[1].date));
        let last = flows.last().unwrap();
        assert_eq!(last.date, date("2025-09-28"));
        assert!((last.amount - 102.5).abs() < 1e-12);
        assert_eq!(flows[0].date, date("2015-09-28"));
    }

    #[test]
    fn month_end_schedule_does_not_drift() {
        let bond = CouponBond::new(
            "M",
            100.0,
            0.04,
            Frequency::Quarterly,
            date("2020-08-31"),
            date("2019-01-01"),
        )
        .unwrap();
        let dates: Vec<_> = bond.cash_flows().iter().map(|c| c.date).collect();
        assert!(dates.contains(&date("2020-05-31")));
        assert!(dates.contains(&date("2020-02-29")));
        assert!(dates.contains(&date("2019-11-30")));
    }

    #[test]
    fn invalid_frequency_rejected() {
        assert!(Frequency::try_from(3).is_err());
        assert_eq!(Frequency::try_from(12).unwrap(), Frequency::Monthly);
    }

    #[test]
    fn par_zero_at_zero_rate() {
        let bond = CouponBond::zero("Z", 100.0, date("2011-01-04")).unwrap();
        let y = ytm_from_price(&bond, date("2010-01-04"), 100.0).unwrap();
        assert!(y.abs() < 1e-12);
    }

    #[test]
    fn zero_bond_inversion() {
        let bond = CouponBond::zero("Z", 100.0, date("2012-01-04")).unwrap();
        let settle = date("2010-01-04");
        let tau = year_fraction(settle, bond.maturity).unwrap().value();
        assert!((tau - 730.0 / 365.0).abs() < 1e-15);
        let price = 100.0 * (-0.05 * tau).exp();
        let y = ytm_from_price(&bond, settle, price).unwrap();
        assert!((y - 0.05).abs() < 1e-10);
    }

    #[test]
    fn coupon_bond_round_trip() {
        let settle = date("2010-01-04");
        let bond = CouponBond::new(
            "C",
            100.0,
            0.05,
            Frequency::Annual,
            date("2012-01-04"),
            date("2011-01-04"),
        )
        .unwrap();
        // brute-force discounting of the two flows at a flat 6%
        let t1: f64 = 365.0 / 365.0;
        let t2: f64 = 730.0 / 365.0;
        let price = 5.0 * (-0.06 * t1).exp() + 105.0 * (-0.06 * t2).exp();
        let y = ytm_from_price(&bond, settle, price).unwrap();
        assert!((y - 0.06).abs() < 1e-8);
    }

    #[test]
    fn non_positive_price_is_domain_error() {
        let bond = CouponBond::zero("Z", 100.0, date("2011-01-04")).unwrap();
        let err = ytm_from_price(&bond, date("2010-01-04"), 0.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn price_outside_bracket_has_no_solution() {
        let bond = CouponBond::zero("Z", 100.0, date("2011-01-04")).unwrap();
        // needs y below -0.5
        let err = ytm_from_price(&bond, date("2010-01-04"), 200.0).unwrap_err();
        assert!(matches!(err, Error::NoSolution(_)));
    }

    #[test]
    fn matured_bond_rejected() {
        let bond = CouponBond::zero("Z", 100.0, date("2011-01-04")).unwrap();
        assert!(ytm_from_price(&bond, date("2011-01-04"), 99.0).is_err());
    }

    #[test]
    fn zero_price_examples() {
        assert_eq!(zero_price_from_yield(0.3, 0.0), 1.0);
        assert!((zero_price_from_yield(0.05, 1.0) - 0.951_229_424_500_714).abs() < 1e-15);
        // exp(-0.937), evaluated independently
        assert!((zero_price_from_yield(0.0937, 10.0) - 0.391_801_478_449_000_15).abs() < 1e-13);
    }

    #[test]
    fn accrued_interest_is_linear_in_period() {
        let bond = CouponBond::new(
            "A",
            100.0,
            0.06,
            Frequency::SemiAnnual,
            date("2015-07-01"),
            date("2010-01-01"),
        )
        .unwrap();
        assert_eq!(bond.accrued_interest(date("2013-01-01")).unwrap(), 0.0);
        let ai = bond.accrued_interest(date("2013-04-01")).unwrap();
        let expected = 3.0 * 90.0 / 181.0;
        assert!((ai - expected).abs() < 1e-12);
    }
}
