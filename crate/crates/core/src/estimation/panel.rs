use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::curve::year_fraction;
use crate::error::{Error, Result};

/// A zero-coupon instrument of the panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instrument {
    pub id: String,
    pub maturity: NaiveDate,
}

/// One observed zero price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelQuote {
    pub price: f64,
    /// The price comes from an actual trade rather than a computed vector.
    pub negotiated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub date: NaiveDate,
    pub quotes: BTreeMap<String, PanelQuote>,
}

/// Date × instrument table of observed zero prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    instruments: Vec<Instrument>,
    observations: Vec<Observation>,
}

impl PricePanel {
    pub fn new(instruments: Vec<Instrument>, mut observations: Vec<Observation>) -> Result<Self> {
        observations.sort_by_key(|o| o.date);
        if let Some(w) = observations.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Precondition(format!("date {} appears twice", w[0].date)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for inst in &instruments {
            if !seen.insert(inst.id.as_str()) {
                return Err(Error::Ambiguity(format!("instrument {} defined twice", inst.id)));
            }
        }
        let maturity: BTreeMap<&str, NaiveDate> =
            instruments.iter().map(|i| (i.id.as_str(), i.maturity)).collect();
        for obs in &observations {
            for (id, q) in &obs.quotes {
                let m = maturity.get(id.as_str()).ok_or_else(|| {
                    Error::Precondition(format!("quote on {} for unknown instrument {id}", obs.date))
                })?;
                if *m <= obs.date {
                    return Err(Error::Precondition(format!(
                        "instrument {id} quoted on {} at or after its maturity {m}",
                        obs.date
                    )));
                }
                if !(q.price > 0.0 && q.price <= 1.0) {
                    return Err(Error::Domain(format!(
                        "price {} of {id} on {} outside (0, 1]",
                        q.price, obs.date
                    )));
                }
            }
        }
        Ok(PricePanel { instruments, observations })
    }

    pub fn instruments(&self) -> &[Instrument] {
        &self.instruments
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn instrument(&self, id: &str) -> Option<&Instrument> {
        self.instruments.iter().find(|i| i.id == id)
    }

    /// Gaps in years between consecutive observation dates.
    pub fn gaps(&self) -> Vec<f64> {
        self.observations
            .windows(2)
            .map(|w| (w[1].date - w[0].date).num_days() as f64 / 365.0)
            .collect()
    }

    /// Keeps only negotiated quotes, dropping dates left empty.
    pub fn negotiated_only(&self) -> PricePanel {
        let observations = self
            .observations
            .iter()
            .filter_map(|o| {
                let quotes: BTreeMap<_, _> = o
                    .quotes
                    .iter()
                    .filter(|(_, q)| q.negotiated)
                    .map(|(k, q)| (k.clone(), *q))
                    .collect();
                (!quotes.is_empty()).then(|| Observation { date: o.date, quotes })
            })
            .collect();
        PricePanel {
            instruments: self.instruments.clone(),
            observations,
        }
    }

    /// Observations on which every listed instrument is quoted, with times
    /// measured in ACT/365 years from `anchor`.
    pub fn aligned(&self, ids: &[&str], anchor: NaiveDate) -> Result<AlignedPanel> {
        let mut fixed = Vec::with_capacity(ids.len());
        for id in ids {
            let inst = self
                .instrument(id)
                .ok_or_else(|| Error::Precondition(format!("unknown instrument {id}")))?;
            fixed.push(year_fraction(anchor, inst.maturity)?.value());
        }
        let mut out = AlignedPanel {
            ids: ids.iter().map(|s| s.to_string()).collect(),
            dates: Vec::new(),
            times: Vec::new(),
            maturities: Vec::new(),
            prices: Vec::new(),
        };
        for obs in &self.observations {
            let row: Option<Vec<f64>> = ids.iter().map(|id| obs.quotes.get(*id).map(|q| q.price)).collect();
            if let Some(row) = row {
                out.dates.push(obs.date);
                out.times.push(year_fraction(anchor, obs.date)?.value());
                out.maturities.push(fixed.clone());
                out.prices.push(row);
            }
        }
        Ok(out)
    }
}

/// Price series of a fixed set of instruments on common dates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    pub ids: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Observation times, years from the anchor.
    pub times: Vec<f64>,
    /// `maturities[k][i]`: maturity of instrument `i` at observation `k`,
    /// years from the anchor. Rows repeat for fixed-maturity bonds and move
    /// with the date for constant-tenor series.
    pub maturities: Vec<Vec<f64>>,
    /// `prices[k][i]`: price of instrument `i` at observation `k`.
    pub prices: Vec<Vec<f64>>,
}

impl AlignedPanel {
    /// Builds a panel of constant-tenor series: instrument `i` observed at
    /// time `t` matures at `t + tenors[i]`.
    pub fn constant_tenor(
        ids: Vec<String>,
        dates: Vec<NaiveDate>,
        times: Vec<f64>,
        tenors: &[f64],
        prices: Vec<Vec<f64>>,
    ) -> AlignedPanel {
        let maturities = times.iter().map(|t| tenors.iter().map(|m| t + m).collect()).collect();
        AlignedPanel { ids, dates, times, maturities, prices }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn instrument_count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Same data with every price multiplied by `c`.
    pub fn scaled(&self, c: f64) -> AlignedPanel {
        let mut out = self.clone();
        out.prices.iter_mut().flatten().for_each(|p| *p *= c);
        out
    }

    /// Same data with instrument columns in reverse order.
    pub fn reversed_instruments(&self) -> AlignedPanel {
        let mut out = self.clone();
        out.ids.reverse();
        out.maturities.iter_mut().for_each(|r| r.reverse());
        out.prices.iter_mut().for_each(|r| r.reverse());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn obs(d: &str, quotes: &[(&str, f64, bool)]) -> Observation {
        Observation {
            date: date(d),
            quotes: quotes
                .iter()
                .map(|&(id, price, negotiated)| (id.to_string(), PanelQuote { price, negotiated }))
                .collect(),
        }
    }

    fn instruments() -> Vec<Instrument> {
        vec![
            Instrument { id: "A".into(), maturity: date("2025-09-28") },
            Instrument { id: "B".into(), maturity: date("2033-01-15") },
        ]
    }

    #[test]
    fn sorts_and_aligns() {
        let panel = PricePanel::new(
            instruments(),
            vec![
                obs("2010-01-13", &[("A", 0.5, true), ("B", 0.3, false)]),
                obs("2010-01-06", &[("A", 0.5, true), ("B", 0.3, true)]),
                obs("2010-01-20", &[("B", 0.31, true)]),
            ],
        )
        .unwrap();
        assert_eq!(panel.observations()[0].date, date("2010-01-06"));
        assert_eq!(panel.gaps(), vec![7.0 / 365.0, 7.0 / 365.0]);
        let both = panel.aligned(&["A", "B"], date("2010-01-06")).unwrap();
        assert_eq!(both.len(), 2);
        assert_eq!(both.times, vec![0.0, 7.0 / 365.0]);
        let negotiated = panel.negotiated_only().aligned(&["B"], date("2010-01-06")).unwrap();
        assert_eq!(negotiated.dates, vec![date("2010-01-06"), date("2010-01-20")]);
    }

    #[test]
    fn rejects_invalid_panels() {
        assert!(PricePanel::new(instruments(), vec![obs("2010-01-06", &[("A", 1.5, true)])]).is_err());
        assert!(PricePanel::new(instruments(), vec![obs("2010-01-06", &[("C", 0.5, true)])]).is_err());
        assert!(PricePanel::new(instruments(), vec![obs("2026-01-06", &[("A", 0.9, true)])]).is_err());
        assert!(PricePanel::new(
            instruments(),
            vec![obs("2010-01-06", &[("A", 0.5, true)]), obs("2010-01-06", &[("A", 0.5, true)])]
        )
        .is_err());
    }
}
