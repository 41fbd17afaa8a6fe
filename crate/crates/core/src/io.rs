//! CSV and key=value file formats.
//!
//! Every reader validates the whole file and reports all offending lines at
//! once. Floats are written in Rust's shortest round-trip form, so every
//! output re-ingests without loss.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationSeries, CrossSection, DatedCurve};
use crate::curve::{BondQuote, CouponBond, DiscountCurve, Frequency};
use crate::diagnostics::{PriceSurface, Violation};
use crate::error::{Error, Result};
use crate::estimation::{Instrument, Observation, PanelQuote, PricePanel};
use crate::models::{G2State, ModelState, StateSeries};

/// Writes `bytes` to a temporary file beside `path`, then renames it into
/// place, so a partial file never appears at the final path.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn ingestion(path: &Path, problems: Vec<String>) -> Error {
    Error::Ingestion {
        path: path.display().to_string(),
        problems,
    }
}

/// Deserializes every row, collecting per-line problems, then lets
/// `check` validate each parsed row.
fn read_rows<T, F>(path: &Path, required: &[&str], mut check: F) -> Result<Vec<(u64, T)>>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(&T) -> std::result::Result<(), String>,
{
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|h| !headers.iter().any(|x| x == *h))
        .collect();
    if !missing.is_empty() {
        return Err(ingestion(
            path,
            vec![format!("line 1: header lacks column(s) {}", missing.join(", "))],
        ));
    }
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                problems.push(format!("line {line}: {}", csv_message(&e)));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        match record.deserialize::<T>(Some(&headers)) {
            Ok(row) => match check(&row) {
                Ok(()) => rows.push((line, row)),
                Err(msg) => problems.push(format!("line {line}: {msg}")),
            },
            Err(e) => problems.push(format!("line {line}: {}", csv_message(&e))),
        }
    }
    if problems.is_empty() {
        Ok(rows)
    } else {
        Err(ingestion(path, problems))
    }
}

fn csv_message(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    }
}

fn price_in_range(p: f64) -> std::result::Result<(), String> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(format!("price {p} outside (0, 1]"))
    }
}

fn csv_bytes<F>(write: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        write(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

// ---------------------------------------------------------------- bonds

#[derive(Debug, Deserialize, Serialize)]
struct BondRow {
    id: String,
    face: f64,
    coupon_rate: f64,
    frequency: u32,
    maturity: NaiveDate,
    first_coupon: NaiveDate,
}

/// Bond definitions: `id,face,coupon_rate,frequency,maturity,first_coupon`.
pub fn read_bonds(path: &Path) -> Result<Vec<CouponBond>> {
    let rows = read_rows::<BondRow, _>(
        path,
        &["id", "face", "coupon_rate", "frequency", "maturity", "first_coupon"],
        |r| {
            let freq = Frequency::try_from(r.frequency).map_err(|e| e.to_string())?;
            CouponBond::new(r.id.clone(), r.face, r.coupon_rate, freq, r.maturity, r.first_coupon)
                .map(|_| ())
                .map_err(|e| e.to_string())
        },
    )?;
    let mut seen = BTreeMap::new();
    let mut problems = Vec::new();
    let mut bonds = Vec::new();
    for (line, r) in rows {
        if let Some(prev) = seen.insert(r.id.clone(), line) {
            problems.push(format!("line {line}: bond {} already defined on line {prev}", r.id));
            continue;
        }
        let freq = Frequency::try_from(r.frequency)?;
        bonds.push(CouponBond::new(r.id, r.face, r.coupon_rate, freq, r.maturity, r.first_coupon)?);
    }
    if !problems.is_empty() {
        return Err(ingestion(path, problems));
    }
    Ok(bonds)
}

pub fn write_bonds(path: &Path, bonds: &[CouponBond]) -> Result<()> {
    let bytes = csv_bytes(|w| {
        for b in bonds {
            w.serialize(BondRow {
                id: b.id.clone(),
                face: b.face,
                coupon_rate: b.coupon_rate,
                frequency: b.frequency.per_year(),
                maturity: b.maturity,
                first_coupon: b.first_coupon,
            })?;
        }
        Ok(())
    })?;
    atomic_write(path, &bytes)
}

#[derive(Debug, Deserialize)]
struct QuoteRow {
    id: String,
    settlement: NaiveDate,
    price: f64,
}

/// Bond quotes per 100 face: `id,settlement,price`.
pub fn read_quotes(path: &Path, bonds: &[CouponBond]) -> Result<Vec<BondQuote>> {
    let by_id: BTreeMap<&str, &CouponBond> = bonds.iter().map(|b| (b.id.as_str(), b)).collect();
    let rows = read_rows::<QuoteRow, _>(path, &["id", "settlement", "price"], |r| {
        if !by_id.contains_key(r.id.as_str()) {
            return Err(format!("unknown bond {}", r.id));
        }
        if !(r.price > 0.0 && r.price.is_finite()) {
            return Err(format!("price {} must be positive", r.price));
        }
        Ok(())
    })?;
    Ok(rows
        .into_iter()
        .map(|(_, r)| BondQuote {
            bond: by_id[r.id.as_str()].clone(),
            settlement: r.settlement,
            price: r.price,
        })
        .collect())
}

// ---------------------------------------------------------------- panel

#[derive(Debug, Deserialize, Serialize)]
struct PanelRow {
    date: NaiveDate,
    instrument_id: String,
    price: f64,
    #[serde(default)]
    maturity: Option<NaiveDate>,
    #[serde(default, deserialize_with = "flag")]
    negotiated: Option<bool>,
}

fn flag<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<bool>, D::Error> {
    let s: Option<String> = Option::deserialize(d)?;
    match s.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("") => Ok(None),
        Some("true" | "1" | "yes" | "y") => Ok(Some(true)),
        Some("false" | "0" | "no" | "n") => Ok(Some(false)),
        Some(other) => Err(serde::de::Error::custom(format!("invalid negotiated flag '{other}'"))),
    }
}

/// Long-format panel: `date,instrument_id,price[,maturity][,negotiated]`.
///
/// Instrument maturities come from the `maturity` column, or from `bonds`
/// when the column is absent. Quotes without a `negotiated` value count as
/// negotiated.
pub fn read_panel(path: &Path, bonds: Option<&[CouponBond]>) -> Result<PricePanel> {
    let rows = read_rows::<PanelRow, _>(path, &["date", "instrument_id", "price"], |r| price_in_range(r.price))?;
    let mut problems = Vec::new();
    let mut maturities: BTreeMap<String, NaiveDate> = bonds
        .unwrap_or_default()
        .iter()
        .map(|b| (b.id.clone(), b.maturity))
        .collect();
    let mut order: Vec<String> = Vec::new();
    let mut by_date: BTreeMap<NaiveDate, BTreeMap<String, PanelQuote>> = BTreeMap::new();
    for (line, r) in &rows {
        match (r.maturity, maturities.get(&r.instrument_id)) {
            (Some(m), Some(&known)) if m != known => problems.push(format!(
                "line {line}: maturity {m} of {} conflicts with {known}",
                r.instrument_id
            )),
            (Some(m), None) => {
                maturities.insert(r.instrument_id.clone(), m);
            }
            (None, None) => problems.push(format!(
                "line {line}: no maturity known for {} (add a maturity column or a bonds file)",
                r.instrument_id
            )),
            _ => {}
        }
        if let Some(&m) = maturities.get(&r.instrument_id) {
            if m <= r.date {
                problems.push(format!(
                    "line {line}: {} quoted on {} at or after maturity {m}",
                    r.instrument_id, r.date
                ));
            }
        }
        if !order.contains(&r.instrument_id) {
            order.push(r.instrument_id.clone());
        }
        let quote = PanelQuote {
            price: r.price,
            negotiated: r.negotiated.unwrap_or(true),
        };
        if by_date.entry(r.date).or_default().insert(r.instrument_id.clone(), quote).is_some() {
            problems.push(format!("line {line}: duplicate quote for {} on {}", r.instrument_id, r.date));
        }
    }
    if !problems.is_empty() {
        return Err(ingestion(path, problems));
    }
    let instruments = order
        .into_iter()
        .map(|id| Instrument { maturity: maturities[&id], id })
        .collect();
    let observations = by_date
        .into_iter()
        .map(|(date, quotes)| Observation { date, quotes })
        .collect();
    PricePanel::new(instruments, observations)
}

pub fn write_panel(path: &Path, panel: &PricePanel) -> Result<()> {
    let bytes = csv_bytes(|w| {
        w.write_record(["date", "instrument_id", "price", "maturity", "negotiated"])?;
        for obs in panel.observations() {
            for inst in panel.instruments() {
                if let Some(q) = obs.quotes.get(&inst.id) {
                    w.write_record([
                        obs.date.to_string(),
                        inst.id.clone(),
                        q.price.to_string(),
                        inst.maturity.to_string(),
                        q.negotiated.to_string(),
                    ])?;
                }
            }
        }
        Ok(())
    })?;
    atomic_write(path, &bytes)
}

// ---------------------------------------------------------------- curves

#[derive(Debug, Deserialize, Serialize)]
struct CurveRow {
    date: NaiveDate,
    maturity_years: f64,
    discount_factor: f64,
}

/// Dated curves: `date,maturity_years,discount_factor`, one curve per date.
pub fn read_curves(path: &Path) -> Result<Vec<DatedCurve>> {
    let rows = read_rows::<CurveRow, _>(path, &["date", "maturity_years", "discount_factor"], |r| {
        price_in_range(r.discount_factor)?;
        if r.maturity_years > 0.0 {
            Ok(())
        } else {
            Err(format!("maturity {} must be positive", r.maturity_years))
        }
    })?;
    let mut grouped: BTreeMap<NaiveDate, Vec<(f64, f64)>> = BTreeMap::new();
    for (_, r) in rows {
        grouped.entry(r.date).or_default().push((r.maturity_years, r.discount_factor));
    }
    let mut problems = Vec::new();
    let mut curves = Vec::new();
    for (date, mut pillars) in grouped {
        pillars.sort_by(|a, b| a.0.total_cmp(&b.0));
        match DiscountCurve::new(&pillars) {
            Ok(curve) => curves.push(DatedCurve { date, curve }),
            Err(e) => problems.push(format!("curve {date}: {e}")),
        }
    }
    if !problems.is_empty() {
        return Err(ingestion(path, problems));
    }
    if curves.is_empty() {
        return Err(ingestion(path, vec!["no curve rows".into()]));
    }
    Ok(curves)
}

pub fn write_curve(path: &Path, curve: &DatedCurve) -> Result<()> {
    let bytes = csv_bytes(|w| {
        for (tau, df) in curve.curve.pillars() {
            w.serialize(CurveRow {
                date: curve.date,
                maturity_years: tau,
                discount_factor: df,
            })?;
        }
        Ok(())
    })?;
    atomic_write(path, &bytes)
}

// ---------------------------------------------------------------- cross-sections

#[derive(Debug, Deserialize)]
struct CrossRow {
    date: NaiveDate,
    maturity_years: f64,
    zero_price: f64,
    #[serde(default)]
    short_rate: Option<f64>,
}

/// Dated cross-sections: `date,maturity_years,zero_price[,short_rate]`.
///
/// Without a `short_rate` value the proxy `-ln P(0.25)/0.25` from that
/// day's own quotes is used.
pub fn read_cross_sections(path: &Path) -> Result<Vec<CrossSection>> {
    let rows = read_rows::<CrossRow, _>(path, &["date", "maturity_years", "zero_price"], |r| {
        price_in_range(r.zero_price)?;
        if r.maturity_years > 0.0 {
            Ok(())
        } else {
            Err(format!("maturity {} must be positive", r.maturity_years))
        }
    })?;
    let mut grouped: BTreeMap<NaiveDate, (Vec<(f64, f64)>, Option<f64>)> = BTreeMap::new();
    for (_, r) in rows {
        let e = grouped.entry(r.date).or_default();
        e.0.push((r.maturity_years, r.zero_price));
        if r.short_rate.is_some() {
            e.1 = r.short_rate;
        }
    }
    let mut problems = Vec::new();
    let mut out = Vec::new();
    for (asof, (quotes, rate)) in grouped {
        let short_rate = match rate {
            Some(r) => r,
            None => match crate::calibration::short_rate_proxy(&quotes) {
                Ok(r) => r,
                Err(e) => {
                    problems.push(format!("{asof}: no short-rate proxy: {e}"));
                    continue;
                }
            },
        };
        out.push(CrossSection { asof, quotes, short_rate });
    }
    if !problems.is_empty() {
        return Err(ingestion(path, problems));
    }
    Ok(out)
}

pub fn write_cross_sections(path: &Path, sections: &[CrossSection]) -> Result<()> {
    let bytes = csv_bytes(|w| {
        w.write_record(["date", "maturity_years", "zero_price", "short_rate"])?;
        for xs in sections {
            for (tau, p) in &xs.quotes {
                w.write_record([
                    xs.asof.to_string(),
                    tau.to_string(),
                    p.to_string(),
                    xs.short_rate.to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    atomic_write(path, &bytes)
}

// ---------------------------------------------------------------- states

/// State series: `date,t,r` for short-rate models, `date,t,x,y` for G2++.
pub fn read_states(path: &Path) -> Result<StateSeries> {
    #[derive(Deserialize)]
    struct Row {
        date: NaiveDate,
        t: f64,
        r: Option<f64>,
        x: Option<f64>,
        y: Option<f64>,
    }
    let rows = read_rows::<Row, _>(path, &["date", "t"], |r| match (r.r, r.x, r.y) {
        (Some(_), None, None) | (None, Some(_), Some(_)) => Ok(()),
        _ => Err("need either r or both x and y".into()),
    })?;
    let mut states = StateSeries::default();
    for (_, r) in rows {
        let s = match r.r {
            Some(rate) => ModelState::ShortRate { t: r.t, r: rate },
            None => ModelState::Factors(G2State::new(r.x.unwrap(), r.y.unwrap(), r.t)),
        };
        states.push(r.date, s);
    }
    if states.dates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ingestion(path, vec!["state dates must be strictly increasing".into()]));
    }
    Ok(states)
}

pub fn write_states(path: &Path, states: &StateSeries) -> Result<()> {
    let g2 = matches!(states.states.first(), Some(ModelState::Factors(_)));
    let bytes = csv_bytes(|w| {
        if g2 {
            w.write_record(["date", "t", "x", "y"])?;
        } else {
            w.write_record(["date", "t", "r"])?;
        }
        for (date, s) in states.iter() {
            match s {
                ModelState::ShortRate { t, r } => {
                    w.write_record([date.to_string(), t.to_string(), r.to_string()])?
                }
                ModelState::Factors(f) => w.write_record([
                    date.to_string(),
                    f.t.to_string(),
                    f.x.to_string(),
                    f.y.to_string(),
                ])?,
            }
        }
        Ok(())
    })?;
    atomic_write(path, &bytes)
}

// ---------------------------------------------------------------- outputs

pub fn write_surface(path: &Path, surface: &PriceSurface) -> Result<()> {
    let bytes = csv_bytes(|w| {
        let mut header = vec!["date".to_string()];
        header.extend(PriceSurface::labels());
        w.write_record(&header)?;
        for (date, row) in surface.dates.iter().zip(&surface.values) {
            let mut rec = vec![date.to_string()];
            rec.extend(row.iter().map(|v| v.map(|p| p.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    atomic_write(path, &bytes)
}

pub fn read_surface(path: &Path) -> Result<PriceSurface> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut expected = vec!["date".to_string()];
    expected.extend(PriceSurface::labels());
    if headers.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(ingestion(path, vec![format!("line 1: header must be {}", expected.join(","))]));
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut problems = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let date = match rec[0].parse::<NaiveDate>() {
            Ok(d) => d,
            Err(e) => {
                problems.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let row: std::result::Result<Vec<Option<f64>>, String> = rec
            .iter()
            .skip(1)
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>().map(Some).map_err(|e| format!("line {line}: {e}"))
                }
            })
            .collect();
        match row {
            Ok(r) => {
                dates.push(date);
                values.push(r);
            }
            Err(p) => problems.push(p),
        }
    }
    if !problems.is_empty() {
        return Err(ingestion(path, problems));
    }
    Ok(PriceSurface {
        dates,
        maturities: crate::diagnostics::SURFACE_GRID.iter().map(|g| g.0).collect(),
        values,
    })
}

/// Violations CSV `tau_low,tau_high,p_low,p_high`, with a leading `date`
/// column when the rows come from a dated surface.
pub fn write_violations(path: &Path, rows: &[(Option<NaiveDate>, Violation)], dated: bool) -> Result<()> {
    let bytes = csv_bytes(|w| {
        let mut header = vec!["tau_low", "tau_high", "p_low", "p_high"];
        if dated {
            header.insert(0, "date");
        }
        w.write_record(&header)?;
        for (date, v) in rows {
            let mut rec = vec![
                v.tau_low.to_string(),
                v.tau_high.to_string(),
                v.p_low.to_string(),
                v.p_high.to_string(),
            ];
            if dated {
                rec.insert(0, date.map(|d| d.to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    atomic_write(path, &bytes)
}

/// Calibration summary `date,param_name,value,objective,converged`; failed
/// dates get an empty value and `converged = false`. Summary statistics
/// follow as rows dated `mean` and `sd`.
pub fn write_calibration_summary(path: &Path, series: &CalibrationSeries) -> Result<()> {
    let bytes = csv_bytes(|w| {
        w.write_record(["date", "param_name", "value", "objective", "converged"])?;
        for rec in &series.records {
            match &rec.outcome {
                Ok(r) => {
                    for (name, value) in r.params.named_values() {
                        w.write_record([
                            rec.asof.to_string(),
                            name.to_string(),
                            value.to_string(),
                            r.objective.to_string(),
                            r.converged.to_string(),
                        ])?;
                    }
                }
                Err(_) => w.write_record([rec.asof.to_string(), String::new(), String::new(), String::new(), "false".into()])?,
            }
        }
        for s in &series.summary {
            w.write_record(["mean".into(), s.name.to_string(), s.mean.to_string(), String::new(), String::new()])?;
            w.write_record([
                "sd".into(),
                s.name.to_string(),
                s.sd.map(|v| v.to_string()).unwrap_or_default(),
                String::new(),
                String::new(),
            ])?;
        }
        Ok(())
    })?;
    atomic_write(path, &bytes)
}

// ---------------------------------------------------------------- key=value

/// Flat `key=value` text; `#` starts a comment, blank lines are ignored.
pub fn parse_key_values(text: &str) -> std::result::Result<BTreeMap<String, String>, Vec<String>> {
    let mut out = BTreeMap::new();
    let mut problems = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                out.insert(k.trim().to_string(), v.trim().to_string());
            }
            _ => problems.push(format!("line {}: expected key=value", i + 1)),
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(problems)
    }
}

pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    parse_key_values(&text).map_err(|p| ingestion(path, p))
}

pub fn format_key_values<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> String {
    pairs.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}
