//! Day counts, coupon-bond cash flows, yields and the initial discount curve.

mod bond;
mod daycount;
mod discount;

pub use bond::{
    price_from_yield, ytm_from_price, zero_price_from_yield, CashFlow, CouponBond, Frequency,
};
pub use daycount::{year_fraction, YearFraction};
pub use discount::{
    build_initial_curve, quote_to_zero, BondQuote, DiscountCurve, QuoteConvention,
    SHORT_ANCHOR_MAX,
};
