use std::fmt;
use std::ops::Add;

use chrono::NaiveDate;

use crate::error::{Error, Result};

const DAYS_PER_YEAR: f64 = 365.0;

/// ACT/365-fixed year fraction between two calendar dates.
///
/// Stored as a whole number of elapsed days so that sums over adjacent
/// intervals are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct YearFraction {
    days: i64,
}

impl YearFraction {
    pub const ZERO: YearFraction = YearFraction { days: 0 };

    pub fn from_days(days: i64) -> Result<Self> {
        if days < 0 {
            return Err(Error::Ordering(format!("negative day count {days}")));
        }
        Ok(YearFraction { days })
    }

    pub fn days(self) -> i64 {
        self.days
    }

    pub fn value(self) -> f64 {
        self.days as f64 / DAYS_PER_YEAR
    }
}

impl Add for YearFraction {
    type Output = YearFraction;

    fn add(self, rhs: YearFraction) -> YearFraction {
        YearFraction {
            days: self.days + rhs.days,
        }
    }
}

impl From<YearFraction> for f64 {
    fn from(yf: YearFraction) -> f64 {
        yf.value()
    }
}

impl fmt::Display for YearFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Year fraction from `d1` to `d2` under ACT/365-fixed.
pub fn year_fraction(d1: NaiveDate, d2: NaiveDate) -> Result<YearFraction> {
    if d1 > d2 {
        return Err(Error::Ordering(format!("{d1} is after {d2}")));
    }
    YearFraction::from_days((d2 - d1).num_days())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn identical_dates_give_zero() {
        let yf = year_fraction(date("2010-01-04"), date("2010-01-04")).unwrap();
        assert_eq!(yf.value(), 0.0);
    }

    #[test]
    fn one_calendar_year_without_leap_day() {
        let yf = year_fraction(date("2010-01-04"), date("2011-01-04")).unwrap();
        assert_eq!(yf.value(), 1.0);
    }

    #[test]
    fn brute_force_day_count() {
        let (start, end) = (date("2013-01-05"), date("2014-01-05"));
        let mut days = 0;
        let mut d = start;
        while d < end {
            d = d.succ_opt().unwrap();
            days += 1;
        }
        assert_eq!(days, 365);
        assert_eq!(year_fraction(start, end).unwrap().value(), 1.0);
    }

    #[test]
    fn leap_year_counts_actual_days() {
        let yf = year_fraction(date("2012-01-01"), date("2013-01-01")).unwrap();
        assert_eq!(yf.days(), 366);
    }

    #[test]
    fn reversed_dates_rejected() {
        let err = year_fraction(date("2011-01-04"), date("2010-01-04")).unwrap_err();
        assert!(matches!(err, Error::Ordering(_)));
    }

    #[test]
    fn additive_over_adjacent_intervals() {
        let (a, b, c) = (date("2010-03-17"), date("2012-02-29"), date("2019-11-02"));
        let whole = year_fraction(a, c).unwrap();
        let parts = year_fraction(a, b).unwrap() + year_fraction(b, c).unwrap();
        assert_eq!(whole, parts);
        assert_eq!(whole.value(), parts.value());
    }
}
