use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::rng::StreamKey;
use super::sim::{simulate_g2, simulate_ou};
use crate::curve::{year_fraction, DiscountCurve};
use crate::error::{Error, Result};
use crate::estimation::{Instrument, Observation, PanelQuote, PricePanel};
use crate::models::{ModelParams, ModelState, StateSeries};

/// Simulated panel together with the states that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPanel {
    pub panel: PricePanel,
    pub states: StateSeries,
}

/// Simulates model states on `schedule` and prices every instrument with the
/// closed form.
///
/// Times are ACT/365 years from `anchor`; `state0` is the state on the first
/// schedule date. Transitions are exact for any gap, so irregular schedules
/// are simulated without bias. Every generated row is checked to invert back
/// to its state, which surfaces ill-posed instrument sets (e.g. equal
/// maturities for G2++) at generation time.
pub fn synth_panel(
    params: &ModelParams,
    curve: Option<&DiscountCurve>,
    anchor: NaiveDate,
    schedule: &[NaiveDate],
    instruments: &[Instrument],
    state0: &ModelState,
    seed: u64,
) -> Result<SyntheticPanel> {
    let Some(&first) = schedule.first() else {
        return Err(Error::Precondition("empty observation schedule".into()));
    };
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Ordering("observation schedule must be strictly increasing".into()));
    }
    let last = *schedule.last().unwrap();
    if let Some(i) = instruments.iter().find(|i| i.maturity <= last) {
        return Err(Error::Precondition(format!(
            "instrument {} matures on {} before the schedule ends",
            i.id, i.maturity
        )));
    }
    let times: Vec<f64> = schedule
        .iter()
        .map(|d| year_fraction(anchor, *d).map(|y| y.value()))
        .collect::<Result<_>>()?;
    let grid: Vec<f64> = times.iter().map(|t| t - times[0]).collect();
    let maturities: Vec<f64> = instruments
        .iter()
        .map(|i| year_fraction(anchor, i.maturity).map(|y| y.value()))
        .collect::<Result<_>>()?;
    let mut rng = StreamKey::new(seed).path(0);

    let states: Vec<ModelState> = match (params, state0) {
        (ModelParams::Vasicek(p), ModelState::ShortRate { r, .. }) => {
            if instruments.len() != 1 {
                return Err(Error::Precondition("a Vasicek panel has exactly one instrument".into()));
            }
            simulate_ou(p.a, p.b, p.sigma, *r, &grid, &mut rng)?
                .into_iter()
                .zip(&times)
                .map(|(r, &t)| ModelState::ShortRate { t, r })
                .collect()
        }
        (ModelParams::G2pp(p), ModelState::Factors(s)) => {
            if instruments.len() != 2 {
                return Err(Error::Precondition("a G2++ panel has exactly two instruments".into()));
            }
            if curve.is_none() {
                return Err(Error::Precondition("G2++ panel needs an initial curve".into()));
            }
            let mut s0 = *s;
            s0.t = times[0];
            simulate_g2(p, &s0, &grid, &mut rng)?
                .into_iter()
                .zip(&times)
                .map(|(mut s, &t)| {
                    s.t = t;
                    ModelState::Factors(s)
                })
                .collect()
        }
        _ => {
            return Err(Error::Precondition(format!(
                "synthetic panels cover Vasicek and G2++ with matching states, got {}",
                params.kind()
            )))
        }
    };

    let mut observations = Vec::with_capacity(schedule.len());
    for (date, state) in schedule.iter().zip(&states) {
        let prices: Vec<f64> = maturities
            .iter()
            .map(|&m| params.price(curve, state, m))
            .collect::<Result<_>>()?;
        check_inversion(params, curve, state, &prices, &maturities)?;
        let quotes: BTreeMap<String, PanelQuote> = instruments
            .iter()
            .zip(&prices)
            .map(|(i, &price)| (i.id.clone(), PanelQuote { price, negotiated: true }))
            .collect();
        observations.push(Observation { date: *date, quotes });
    }
    let panel = PricePanel::new(instruments.to_vec(), observations)?;
    debug_assert_eq!(panel.observations()[0].date, first);
    Ok(SyntheticPanel {
        panel,
        states: StateSeries {
            dates: schedule.to_vec(),
            states,
        },
    })
}

fn check_inversion(
    params: &ModelParams,
    curve: Option<&DiscountCurve>,
    state: &ModelState,
    prices: &[f64],
    maturities: &[f64],
) -> Result<()> {
    match (params, state) {
        (ModelParams::Vasicek(p), ModelState::ShortRate { t, .. }) => {
            p.invert_state(prices[0], *t, maturities[0])?;
        }
        (ModelParams::G2pp(p), ModelState::Factors(s)) => {
            let curve = curve.expect("checked by caller");
            p.invert_states(curve, [prices[0], prices[1]], s.t, [maturities[0], maturities[1]])?;
        }
        _ => {}
    }
    Ok(())
}

/// Dates every `days` days starting at `start`.
pub fn regular_schedule(start: NaiveDate, days: i64, count: usize) -> Vec<NaiveDate> {
    (0..count as i64)
        .map(|k| start + chrono::Duration::days(k * days))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{G2Params, G2State, VasicekParams};

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn vasicek_prices_invert_to_states() {
        let p = ModelParams::Vasicek(VasicekParams::new(1.7, 0.09, 0.37).unwrap());
        let start = date("2010-01-04");
        let inst = vec![Instrument { id: "Z".into(), maturity: date("2060-01-04") }];
        let sched = regular_schedule(start, 7, 50);
        let out = synth_panel(&p, None, start, &sched, &inst, &ModelState::ShortRate { t: 0.0, r: 0.09 }, 5)
            .unwrap();
        let ModelParams::Vasicek(v) = p else { unreachable!() };
        let m = year_fraction(start, inst[0].maturity).unwrap().value();
        for (obs, (_, s)) in out.panel.observations().iter().zip(out.states.iter()) {
            let ModelState::ShortRate { t, r } = *s else { panic!() };
            let back = v.invert_state(obs.quotes["Z"].price, t, m).unwrap();
            assert!((back - r).abs() < 1e-10);
        }
    }

    #[test]
    fn equal_maturities_rejected_at_generation() {
        let p = ModelParams::G2pp(G2Params::new(0.13, 0.3526, 0.2062, 0.4892, -0.99).unwrap());
        let curve = DiscountCurve::flat(0.05, &[0.25, 5.0, 30.0]).unwrap();
        let start = date("2010-01-04");
        let inst = vec![
            Instrument { id: "A".into(), maturity: date("2025-09-28") },
            Instrument { id: "B".into(), maturity: date("2025-09-28") },
        ];
        let err = synth_panel(
            &p,
            Some(&curve),
            start,
            &regular_schedule(start, 7, 5),
            &inst,
            &ModelState::Factors(G2State::new(0.0, 0.0, 0.0)),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Conditioning(_)));
    }
}
