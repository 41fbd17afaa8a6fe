//! Command-line front end.
//!
//! Exit status: 0 success, 1 domain error (bad data, no solution, failed
//! numerics), 2 usage error (bad flags, wrong model for the command).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::calibration::{calibrate_series, CalibrationConfig, CurveSource, DatedCurve, Weighting};
use crate::curve::{build_initial_curve, DiscountCurve, QuoteConvention};
use crate::diagnostics::{audit_g2pp, build_surface, check_monotone, g2pp_dPdT, SURFACE_GRID};
use crate::error::{Error, Result};
use crate::estimation::{fit_panel, FitConfig, Instrument};
use crate::io;
use crate::models::{
    G2Params, G2State, HoLeeParams, HullWhiteFormula, HullWhiteParams, ModelKind, ModelParams, ModelState,
    VasicekParams,
};
use crate::montecarlo::{mc_zero_price, regular_schedule, synth_panel, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "curveforge", version, about = "Gaussian term-structure models from bond prices")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Directory receiving every output file.
    #[arg(long, global = true, env = "CURVEFORGE_OUTPUT_DIR", default_value = "curveforge-out")]
    pub output_dir: PathBuf,

    /// key=value file of flag defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the initial discount curve from coupon-bond quotes.
    Bootstrap(BootstrapArgs),
    /// Maximum-likelihood fit of Vasicek or G2++ to a price panel.
    FitMl(FitArgs),
    /// Least-squares calibration of Ho-Lee or Hull-White per date.
    Calibrate(CalibrateArgs),
    /// Closed-form zero-coupon price at one state.
    Price(PriceArgs),
    /// Model prices on the 1m..25y grid for a series of states.
    Surface(SurfaceArgs),
    /// Report maturity pairs whose prices increase with maturity.
    CheckArbitrage(ArbitrageArgs),
    /// Compare closed-form prices with Monte-Carlo estimates.
    Oracle(OracleArgs),
    /// Simulate a synthetic price panel.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    /// `id,face,coupon_rate,frequency,maturity,first_coupon`.
    #[arg(long)]
    bonds: PathBuf,
    /// `id,settlement,price` (per 100 face, one settlement date).
    #[arg(long)]
    quotes: PathBuf,
    /// Quotes are clean prices; accrued interest is added.
    #[arg(long)]
    clean_prices: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    /// `date,instrument_id,price[,maturity][,negotiated]`.
    #[arg(long)]
    panel: PathBuf,
    /// Bond file supplying maturities when the panel has no maturity column.
    #[arg(long)]
    bonds: Option<PathBuf>,
    /// Initial curve (required for G2++).
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    flat_extrapolation: bool,
    /// Use only negotiated quotes.
    #[arg(long)]
    negotiated_only: bool,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4000)]
    max_iterations: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    /// `date,maturity_years,zero_price[,short_rate]`.
    #[arg(long)]
    cross_section: PathBuf,
    /// `date,maturity_years,discount_factor`.
    #[arg(long)]
    curve: PathBuf,
    /// Calibrate each date against the latest curve dated before it.
    #[arg(long)]
    per_date_curve: bool,
    /// Curve date to hold fixed (default: earliest in the file).
    #[arg(long)]
    curve_date: Option<NaiveDate>,
    #[arg(long)]
    flat_extrapolation: bool,
    /// Hull-White with the (1 - e^{-2t}) variance factor as printed.
    #[arg(long)]
    printed_formula: bool,
    /// Weight squared errors by time to maturity.
    #[arg(long)]
    maturity_weights: bool,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    /// key=value parameter file.
    #[arg(long)]
    params: PathBuf,
    /// key=value state file: `t` and `r`, or `t`, `x` and `y`.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    maturity: f64,
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    flat_extrapolation: bool,
    #[arg(long)]
    printed_formula: bool,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    #[arg(long)]
    params: PathBuf,
    /// `date,t,r` or `date,t,x,y`.
    #[arg(long)]
    states: PathBuf,
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    flat_extrapolation: bool,
}

#[derive(Debug, Args)]
pub struct ArbitrageArgs {
    /// Surface CSV to audit row by row.
    #[arg(long)]
    surface: Option<PathBuf>,
    /// Curve CSV whose pillars are audited (or the G2++ initial curve).
    #[arg(long)]
    curve: Option<PathBuf>,
    /// With `--params` and `--state`: audit a G2++ model curve.
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    flat_extrapolation: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    /// Parameters (default: the reference set of the model).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    state: Option<PathBuf>,
    /// Initial curve (default: flat 4%).
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    flat_extrapolation: bool,
    /// Comma-separated maturities in years.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0])]
    maturities: Vec<f64>,
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    #[arg(long, default_value_t = 1.0 / 252.0)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    #[arg(long)]
    params: PathBuf,
    /// Initial state (default: r = b for Vasicek, zero factors for G2++).
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    flat_extrapolation: bool,
    /// First observation date (default: the curve date, else 2010-01-04).
    #[arg(long)]
    start: Option<NaiveDate>,
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    step_days: i64,
    /// Instruments as ID=YYYY-MM-DD (one for Vasicek, two for G2++).
    #[arg(long = "instrument", value_parser = parse_instrument, required = true)]
    instruments: Vec<Instrument>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse::<ModelKind>().map_err(|e| e.to_string())
}

fn parse_instrument(s: &str) -> std::result::Result<Instrument, String> {
    let (id, date) = s.split_once('=').ok_or("expected ID=YYYY-MM-DD")?;
    let maturity = date.trim().parse::<NaiveDate>().map_err(|e| e.to_string())?;
    Ok(Instrument { id: id.trim().to_string(), maturity })
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status. Messages go to stdout/stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let (cli, argv) = match parse_with_config(&argv) {
        Ok(x) => x,
        Err(ParseFailure::Clap(e)) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
        Err(ParseFailure::Config(e)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(&cli, &argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_DOMAIN,
            }
        }
    }
}

enum ParseFailure {
    Clap(clap::Error),
    Config(Error),
}

/// Parses the command line, then re-parses it with `--config` entries
/// inserted right after the subcommand so explicit flags override them.
/// Config path and subcommand position from the global options, read
/// before clap so that required flags may come from the config file.
fn locate_config(strings: &[String]) -> (Option<PathBuf>, Option<usize>) {
    let mut config = None;
    let mut i = 1;
    while i < strings.len() {
        let a = strings[i].as_str();
        match a {
            "--config" | "--output-dir" => {
                if a == "--config" {
                    config = strings.get(i + 1).map(PathBuf::from);
                }
                i += 2;
                continue;
            }
            _ if a.starts_with("--config=") => config = Some(PathBuf::from(&a["--config=".len()..])),
            _ if a.starts_with('-') => {}
            _ => return (config, Some(i)),
        }
        i += 1;
    }
    (config, None)
}

fn parse_with_config(argv: &[OsString]) -> std::result::Result<(Cli, Vec<String>), ParseFailure> {
    let strings: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let (config, sub_at) = locate_config(&strings);
    let (Some(path), Some(sub_at)) = (config, sub_at) else {
        let matches = Cli::command().try_get_matches_from(argv).map_err(ParseFailure::Clap)?;
        let cli = Cli::from_arg_matches(&matches).map_err(ParseFailure::Clap)?;
        return Ok((cli, strings));
    };
    let kv = io::read_key_values(&path).map_err(ParseFailure::Config)?;
    let at = sub_at + 1;
    let mut injected = Vec::new();
    for (k, v) in &kv {
        let flag = format!("--{}", k.replace('_', "-"));
        match v.as_str() {
            "true" => injected.push(flag),
            "false" => {}
            _ => {
                injected.push(flag);
                injected.push(v.clone());
            }
        }
    }
    let mut merged = strings[..at].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&strings[at..]);
    let matches = Cli::command().try_get_matches_from(&merged).map_err(ParseFailure::Clap)?;
    let cli = Cli::from_arg_matches(&matches).map_err(ParseFailure::Clap)?;
    Ok((cli, merged))
}

fn load_curve(path: &Path, flat: bool) -> Result<DatedCurve> {
    let mut curves = io::read_curves(path)?;
    if curves.len() != 1 {
        return Err(Error::Usage(format!(
            "{} holds {} curve dates; this command needs exactly one",
            path.display(),
            curves.len()
        )));
    }
    let mut c = curves.remove(0);
    c.curve = c.curve.with_flat_extrapolation(flat);
    Ok(c)
}

fn optional_curve(path: Option<&PathBuf>, flat: bool) -> Result<Option<DatedCurve>> {
    path.map(|p| load_curve(p, flat)).transpose()
}

/// Numeric entries of a key=value file. A `model` entry, if present, must
/// name `kind`.
fn numeric_file(kind: ModelKind, path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (k, v) in io::read_key_values(path)? {
        if k == "model" {
            let named: ModelKind = v.parse()?;
            if named != kind {
                return Err(Error::Usage(format!("{} is for {named}, not {kind}", path.display())));
            }
            continue;
        }
        let x = v
            .parse::<f64>()
            .map_err(|_| Error::Usage(format!("{}: '{k}' = '{v}' is not a number", path.display())))?;
        out.insert(k, x);
    }
    Ok(out)
}

fn load_params(kind: ModelKind, path: &Path) -> Result<ModelParams> {
    let values = numeric_file(kind, path)?;
    ModelParams::from_named(kind, |k| values.get(k).copied())
}

fn load_state(kind: ModelKind, path: &Path) -> Result<ModelState> {
    let v = numeric_file(kind, path)?;
    let get = |k: &str| {
        v.get(k)
            .copied()
            .ok_or_else(|| Error::Usage(format!("state file {} lacks '{k}'", path.display())))
    };
    Ok(match kind {
        ModelKind::G2pp => ModelState::Factors(G2State::new(get("x")?, get("y")?, get("t")?)),
        _ => ModelState::ShortRate { t: get("t")?, r: get("r")? },
    })
}

fn price_with_formula(
    params: &ModelParams,
    curve: Option<&DiscountCurve>,
    state: &ModelState,
    maturity: f64,
    printed: bool,
) -> Result<f64> {
    match (params, state, curve) {
        (ModelParams::HullWhite(p), ModelState::ShortRate { t, r }, Some(c)) if printed => {
            p.price_with(c, *r, *t, maturity, HullWhiteFormula::Printed)
        }
        _ => params.price(curve, state, maturity),
    }
}

struct Outputs<'a> {
    dir: &'a Path,
}

impl Outputs<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    let out = Outputs { dir: &cli.output_dir };
    std::fs::create_dir_all(out.dir)?;
    let (name, seed, results) = match &cli.command {
        Command::Bootstrap(a) => ("bootstrap", None, bootstrap(a, &out)?),
        Command::FitMl(a) => ("fit-ml", Some(a.seed), fit_ml(a, &out)?),
        Command::Calibrate(a) => ("calibrate", None, calibrate(a, &out)?),
        Command::Price(a) => ("price", None, price(a, &out)?),
        Command::Surface(a) => ("surface", None, surface(a, &out)?),
        Command::CheckArbitrage(a) => ("check-arbitrage", None, check_arbitrage(a, &out)?),
        Command::Oracle(a) => ("oracle", Some(a.seed), oracle(a, &out)?),
        Command::Synth(a) => ("synth", Some(a.seed), synth(a, &out)?),
    };
    append_run_log(out.dir, name, argv, seed, results)
}

/// Hash of the effective invocation, output location excluded.
fn config_hash(argv: &[String]) -> String {
    let mut h = Sha256::new();
    let mut skip = false;
    for a in argv.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--output-dir" {
            skip = true;
            continue;
        }
        if a.starts_with("--output-dir=") {
            continue;
        }
        h.update(a.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn append_run_log(dir: &Path, command: &str, argv: &[String], seed: Option<u64>, results: Value) -> Result<()> {
    let path = dir.join("run_log.jsonl");
    let mut text = std::fs::read_to_string(&path).unwrap_or_default();
    let entry = json!({
        "command": command,
        "argv": argv,
        "config_hash": config_hash(argv),
        "seed": seed,
        "results": results,
    });
    text.push_str(&serde_json::to_string(&entry)?);
    text.push('\n');
    io::atomic_write(&path, text.as_bytes())
}

fn bootstrap(a: &BootstrapArgs, out: &Outputs) -> Result<Value> {
    let bonds = io::read_bonds(&a.bonds)?;
    let quotes = io::read_quotes(&a.quotes, &bonds)?;
    let curve = build_initial_curve(&quotes, QuoteConvention { clean_prices: a.clean_prices })?;
    let dated = DatedCurve { date: quotes[0].settlement, curve };
    io::write_curve(&out.path("curve.csv"), &dated)?;
    let pillars = dated.curve.pillars();
    println!("curve dated {} with {} pillars -> {}", dated.date, pillars.len(), out.path("curve.csv").display());
    if !dated.curve.non_decreasing_pillars().is_empty() {
        println!("warning: discount factors increase between some pillars");
    }
    Ok(json!({ "curve_date": dated.date.to_string(), "pillars": pillars.len() }))
}

fn fit_ml(a: &FitArgs, out: &Outputs) -> Result<Value> {
    if !matches!(a.model, ModelKind::Vasicek | ModelKind::G2pp) {
        return Err(Error::Usage(format!("fit-ml accepts vasicek or g2pp, not {}", a.model)));
    }
    let bonds = a.bonds.as_ref().map(|p| io::read_bonds(p)).transpose()?;
    let mut panel = io::read_panel(&a.panel, bonds.as_deref())?;
    if a.negotiated_only {
        panel = panel.negotiated_only();
    }
    let curve = optional_curve(a.curve.as_ref(), a.flat_extrapolation)?;
    if a.model == ModelKind::G2pp && curve.is_none() {
        return Err(Error::Usage("fit-ml --model g2pp needs --curve".into()));
    }
    let first = panel
        .observations()
        .first()
        .ok_or_else(|| Error::Precondition("empty panel".into()))?
        .date;
    let anchor = curve.as_ref().map_or(first, |c| c.date);
    let mut config = FitConfig { restarts: a.restarts, seed: a.seed, ..FitConfig::default() };
    config.optimizer.max_iterations = a.max_iterations;
    let fit = fit_panel(a.model, &panel, anchor, curve.as_ref().map(|c| &c.curve), &config)?;

    let mut pairs: Vec<(&str, String)> = vec![("model", a.model.name().to_string())];
    pairs.extend(fit.params.named_values().into_iter().map(|(k, v)| (k, v.to_string())));
    io::atomic_write(&out.path("params.txt"), io::format_key_values(pairs).as_bytes())?;
    io::write_states(&out.path("states.csv"), &fit.states)?;
    let report = json!({
        "model": a.model.name(),
        "anchor": anchor.to_string(),
        "observations": fit.states.len(),
        "params": fit.params.named_values().into_iter().collect::<BTreeMap<_, _>>(),
        "loglik": fit.loglik.total,
        "log_density": fit.loglik.density,
        "log_jacobian": fit.loglik.log_jacobian,
        "iterations": fit.report.iterations,
        "evaluations": fit.report.evaluations,
        "restarts": fit.report.restarts,
        "successful_restarts": fit.report.successful_restarts,
        "converged": fit.report.converged,
        "at_boundary": fit.report.at_boundary,
    });
    io::atomic_write(&out.path("fit_report.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    for (k, v) in fit.params.named_values() {
        println!("{k} = {v}");
    }
    println!("loglik = {} (converged: {}, at boundary: {})", fit.loglik.total, fit.report.converged, fit.report.at_boundary);
    Ok(report)
}

fn calibrate(a: &CalibrateArgs, out: &Outputs) -> Result<Value> {
    if !matches!(a.model, ModelKind::HoLee | ModelKind::HullWhite) {
        return Err(Error::Usage(format!("calibrate accepts holee or hullwhite, not {}", a.model)));
    }
    let sections = io::read_cross_sections(&a.cross_section)?;
    let mut curves = io::read_curves(&a.curve)?;
    for c in &mut curves {
        c.curve = c.curve.clone().with_flat_extrapolation(a.flat_extrapolation);
    }
    let source = if a.per_date_curve {
        CurveSource::PerDate(curves)
    } else {
        let chosen = match a.curve_date {
            Some(d) => curves
                .into_iter()
                .find(|c| c.date == d)
                .ok_or_else(|| Error::Usage(format!("no curve dated {d} in {}", a.curve.display())))?,
            None => curves.into_iter().next().expect("reader returns at least one curve"),
        };
        CurveSource::Fixed(chosen)
    };
    let config = CalibrationConfig {
        weighting: if a.maturity_weights { Weighting::Maturity } else { Weighting::Uniform },
        hull_white_formula: if a.printed_formula { HullWhiteFormula::Printed } else { HullWhiteFormula::Standard },
        ..CalibrationConfig::default()
    };
    let series = calibrate_series(a.model, &sections, &source, &config)?;
    io::write_calibration_summary(&out.path("calibration_summary.csv"), &series)?;
    let failed = series.records.iter().filter(|r| r.outcome.is_err()).count();
    for r in &series.records {
        if let Err(e) = &r.outcome {
            eprintln!("{}: {e}", r.asof);
        }
    }
    let mut summary = BTreeMap::new();
    for s in &series.summary {
        println!("{}: mean {} sd {}", s.name, s.mean, s.sd.map_or("n/a".to_string(), |v| v.to_string()));
        summary.insert(s.name, json!({ "mean": s.mean, "sd": s.sd, "n": s.n }));
    }
    Ok(json!({ "dates": series.records.len(), "failed": failed, "summary": summary }))
}

fn price(a: &PriceArgs, out: &Outputs) -> Result<Value> {
    let params = load_params(a.model, &a.params)?;
    let state = load_state(a.model, &a.state)?;
    let curve = optional_curve(a.curve.as_ref(), a.flat_extrapolation)?;
    let c = curve.as_ref().map(|c| &c.curve);
    let p = price_with_formula(&params, c, &state, a.maturity, a.printed_formula)?;
    let mut pairs = vec![
        ("model", a.model.name().to_string()),
        ("maturity", a.maturity.to_string()),
        ("price", p.to_string()),
    ];
    let mut result = json!({ "price": p });
    if let (ModelParams::G2pp(g), ModelState::Factors(s), Some(c)) = (&params, &state, c) {
        let d = g2pp_dPdT(g, c, s, a.maturity)?;
        pairs.push(("dPdT", d.to_string()));
        result["dPdT"] = json!(d);
    }
    io::atomic_write(&out.path("price.txt"), io::format_key_values(pairs).as_bytes())?;
    println!("P = {p}");
    Ok(result)
}

fn surface(a: &SurfaceArgs, out: &Outputs) -> Result<Value> {
    let params = load_params(a.model, &a.params)?;
    let states = io::read_states(&a.states)?;
    let curve = optional_curve(a.curve.as_ref(), a.flat_extrapolation)?;
    let surface = build_surface(&params, &states, curve.as_ref().map(|c| &c.curve))?;
    io::write_surface(&out.path("surface.csv"), &surface)?;
    let missing = surface.values.iter().flatten().filter(|v| v.is_none()).count();
    println!("{} dates x {} maturities, {missing} missing cells", surface.dates.len(), SURFACE_GRID.len());
    Ok(json!({ "dates": surface.dates.len(), "columns": SURFACE_GRID.len(), "missing": missing }))
}

fn check_arbitrage(a: &ArbitrageArgs, out: &Outputs) -> Result<Value> {
    let mut text = String::new();
    let (rows, dated, sign_changes) = if let Some(path) = &a.surface {
        let s = io::read_surface(path)?;
        let v = s.violations()?;
        (v.into_iter().map(|(d, v)| (Some(d), v)).collect::<Vec<_>>(), true, Vec::new())
    } else if let (Some(params), Some(state)) = (&a.params, &a.state) {
        let model = a.model.unwrap_or(ModelKind::G2pp);
        if model != ModelKind::G2pp {
            return Err(Error::Usage("model-curve audit supports g2pp only".into()));
        }
        let curve = a.curve.as_ref().ok_or_else(|| Error::Usage("g2pp audit needs --curve".into()))?;
        let curve = load_curve(curve, a.flat_extrapolation)?;
        let ModelParams::G2pp(g) = load_params(model, params)? else { unreachable!() };
        let ModelState::Factors(s) = load_state(model, state)? else { unreachable!() };
        let grid: Vec<f64> = SURFACE_GRID.iter().map(|g| s.t + g.0).collect();
        let report = audit_g2pp(&g, &curve.curve, &s, &grid)?;
        (report.violations.into_iter().map(|v| (None, v)).collect(), false, report.derivative_sign_changes)
    } else if let Some(path) = &a.curve {
        let mut rows = Vec::new();
        for c in io::read_curves(path)? {
            let report = check_monotone(&c.curve.pillars())?;
            rows.extend(report.violations.into_iter().map(|v| (Some(c.date), v)));
        }
        (rows, true, Vec::new())
    } else {
        return Err(Error::Usage("check-arbitrage needs --surface, --curve, or --params with --state".into()));
    };
    io::write_violations(&out.path("violations.csv"), &rows, dated)?;
    if rows.is_empty() {
        text.push_str("no price inversions\n");
    }
    for (d, v) in &rows {
        let prefix = d.map(|d| format!("{d}: ")).unwrap_or_default();
        text.push_str(&format!(
            "{prefix}P({}) = {} < P({}) = {}\n",
            v.tau_low, v.p_low, v.tau_high, v.p_high
        ));
    }
    for t in &sign_changes {
        text.push_str(&format!("dP/dT changes sign at T = {t}\n"));
    }
    io::atomic_write(&out.path("arbitrage_report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(json!({ "violations": rows.len(), "derivative_sign_changes": sign_changes }))
}

/// Reference parameters and state of each model for the oracle command.
fn reference_setup(kind: ModelKind) -> (ModelParams, ModelState) {
    let short = |r| ModelState::ShortRate { t: 0.0, r };
    match kind {
        ModelKind::Vasicek => (ModelParams::Vasicek(VasicekParams { a: 1.7051, b: 0.0937, sigma: 0.3721 }), short(0.05)),
        ModelKind::G2pp => (
            ModelParams::G2pp(G2Params { a: 0.13, b: 0.3526, sigma: 0.2062, eta: 0.4892, rho: -0.99 }),
            ModelState::Factors(G2State::new(0.0, 0.0, 0.0)),
        ),
        ModelKind::HoLee => (ModelParams::HoLee(HoLeeParams { sigma: 0.0232 }), short(0.04)),
        ModelKind::HullWhite => (ModelParams::HullWhite(HullWhiteParams { a: 0.0813, sigma: 0.0215 }), short(0.04)),
    }
}

fn oracle(a: &OracleArgs, out: &Outputs) -> Result<Value> {
    let (default_params, default_state) = reference_setup(a.model);
    let params = a.params.as_ref().map_or(Ok(default_params), |p| load_params(a.model, p))?;
    let state = a.state.as_ref().map_or(Ok(default_state), |p| load_state(a.model, p))?;
    let curve = match &a.curve {
        Some(p) => load_curve(p, a.flat_extrapolation)?.curve,
        None => DiscountCurve::flat(0.04, &[0.25, 1.0, 5.0, 10.0, 30.0])?,
    };
    let horizon = a.maturities.iter().fold(0.0f64, |m, &x| m.max(x - state.t()));
    let config = SimConfig::new(a.paths, a.step, horizon.max(a.step), a.seed)?;
    let mut rows = Vec::new();
    let mut buf = String::from("model,maturity,closed_form,mc_value,mc_stderr,z_score\n");
    for &m in &a.maturities {
        let exact = params.price(Some(&curve), &state, m)?;
        let est = mc_zero_price(&params, Some(&curve), &state, m, &config)?;
        let z = est.z_score(exact);
        buf.push_str(&format!("{},{m},{exact},{},{},{z}\n", a.model.name(), est.value, est.stderr));
        println!("T = {m}: closed {exact}, MC {} ± {} (z = {z:.3})", est.value, est.stderr);
        rows.push(json!({ "maturity": m, "closed_form": exact, "mc_value": est.value, "z_score": z }));
    }
    io::atomic_write(&out.path("oracle.csv"), buf.as_bytes())?;
    Ok(json!({ "cases": rows }))
}

fn synth(a: &SynthArgs, out: &Outputs) -> Result<Value> {
    if !matches!(a.model, ModelKind::Vasicek | ModelKind::G2pp) {
        return Err(Error::Usage(format!("synth accepts vasicek or g2pp, not {}", a.model)));
    }
    let params = load_params(a.model, &a.params)?;
    let curve = optional_curve(a.curve.as_ref(), a.flat_extrapolation)?;
    let start = a
        .start
        .or(curve.as_ref().map(|c| c.date))
        .unwrap_or(NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"));
    let anchor = curve.as_ref().map_or(start, |c| c.date);
    let state = match &a.state {
        Some(p) => load_state(a.model, p)?,
        None => match params {
            ModelParams::Vasicek(v) => ModelState::ShortRate { t: 0.0, r: v.b },
            _ => ModelState::Factors(G2State::new(0.0, 0.0, 0.0)),
        },
    };
    if a.step_days < 1 || a.count < 2 {
        return Err(Error::Usage("synth needs --count >= 2 and --step-days >= 1".into()));
    }
    let schedule = regular_schedule(start, a.step_days, a.count);
    let synth = synth_panel(&params, curve.as_ref().map(|c| &c.curve), anchor, &schedule, &a.instruments, &state, a.seed)?;
    io::write_panel(&out.path("panel.csv"), &synth.panel)?;
    io::write_states(&out.path("states.csv"), &synth.states)?;
    println!("{} observations -> {}", schedule.len(), out.path("panel.csv").display());
    Ok(json!({ "observations": schedule.len(), "instruments": a.instruments.len() }))
}
