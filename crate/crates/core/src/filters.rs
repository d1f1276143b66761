//! One-sided cycle extraction on log series: Hamilton's regression filter,
//! its Quast-Wolters multi-horizon average, and a one-sided HP filter.
//! Every estimate at `t` uses observations up to `t` only.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dot, lstsq, solve_pentadiagonal_spd, Matrix, RowAccumulator};
use crate::timeseries::{Quarter, QuarterlySeries, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterKind {
    Hamilton,
    #[default]
    QuastWolters,
    HpOneSided,
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::Hamilton => "hamilton",
            FilterKind::QuastWolters => "qw",
            FilterKind::HpOneSided => "hp",
        })
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamilton" => Ok(FilterKind::Hamilton),
            "qw" | "quast_wolters" => Ok(FilterKind::QuastWolters),
            "hp" | "hp_one_sided" => Ok(FilterKind::HpOneSided),
            _ => Err(Error::Invalid(format!("unknown filter kind {s:?}"))),
        }
    }
}

/// How medium-run forecasts for the trend measure are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForecastModel {
    /// Regress the level at `s` on the `lags` levels ending `horizon`
    /// quarters earlier (the Hamilton projection).
    DirectLevels,
    /// Fit an AR(`lags`) with constant to quarterly log growth and iterate
    /// it forward from the origin.
    #[default]
    IteratedGrowth,
}

impl FromStr for ForecastModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(ForecastModel::DirectLevels),
            "iterated" => Ok(ForecastModel::IteratedGrowth),
            _ => Err(Error::Invalid(format!("unknown forecast model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub lags: usize,
    pub horizon: usize,
    pub horizons: RangeInclusive<usize>,
    /// Observations needed before the first cycle value is reported.
    pub min_window: usize,
    pub kind: FilterKind,
    pub hp_lambda: f64,
    pub forecast: ForecastModel,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig::new(4, 8, 4..=12, FilterKind::default())
    }
}

impl FilterConfig {
    /// Config with `min_window` at its default, `lags + horizon + 20`,
    /// raised if the horizon set needs more.
    pub fn new(lags: usize, horizon: usize, horizons: RangeInclusive<usize>, kind: FilterKind) -> Self {
        let required = 2 * lags + (*horizons.end()).max(horizon) + 1;
        FilterConfig {
            lags,
            horizon,
            min_window: (lags + horizon + 20).max(required),
            horizons,
            kind,
            hp_lambda: 1600.0,
            forecast: ForecastModel::default(),
        }
    }

    /// Plain Hamilton filter (single horizon).
    pub fn hamilton(lags: usize, horizon: usize) -> Self {
        FilterConfig::new(lags, horizon, horizon..=horizon, FilterKind::Hamilton)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Invalid(m));
        if self.lags < 1 || self.horizon < 1 {
            return fail("lags and horizon must be at least 1".into());
        }
        if self.horizons.is_empty() || *self.horizons.start() < 1 {
            return fail(format!("empty or zero horizon set {:?}", self.horizons));
        }
        let max_h = (*self.horizons.end()).max(self.horizon);
        let needed = 2 * self.lags + max_h + 1;
        if self.min_window < needed {
            return fail(format!("min_window {} below {needed} (2*lags + max horizon + 1)", self.min_window));
        }
        if !(self.hp_lambda.is_finite() && self.hp_lambda > 0.0) {
            return fail(format!("hp_lambda must be positive, got {}", self.hp_lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    /// Cycle in per cent (100 x log deviation), starting at `first_valid`.
    pub cycle: QuarterlySeries,
    pub first_valid: Quarter,
}

impl FilterOutput {
    pub fn at(&self, q: Quarter) -> Option<f64> {
        self.cycle.get(q)
    }
}

fn check_input(y: &QuarterlySeries, cfg: &FilterConfig) -> Result<()> {
    cfg.validate()?;
    if y.transform() != Transform::Log {
        return Err(Error::Invalid(format!("{}: filters expect a log series", y.label())));
    }
    if y.len() < cfg.min_window {
        return Err(Error::InsufficientData { needed: cfg.min_window, available: y.len() });
    }
    Ok(())
}

fn output(y: &QuarterlySeries, first: usize, cycle: Vec<f64>) -> Result<FilterOutput> {
    let first_valid = y.quarter_at(first);
    Ok(FilterOutput { cycle: y.with_values(first_valid, cycle, Transform::Level)?, first_valid })
}

fn lag_row(y: &[f64], end: usize, lags: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(lags + 1);
    row.push(1.0);
    row.extend((0..lags).map(|j| y[end - j]));
    row
}

/// Expanding-window horizon-`h` residuals for `t` in `first..n`, per cent.
fn hamilton_residuals(y: &[f64], h: usize, lags: usize, first: usize) -> Vec<f64> {
    let mut acc = RowAccumulator::new(lags + 1);
    let mut out = Vec::with_capacity(y.len() - first);
    for t in (h + lags - 1)..y.len() {
        let x = lag_row(y, t - h, lags);
        acc.push(&x, y[t]);
        if t >= first {
            let (beta, _) = acc.solve();
            out.push(100.0 * (y[t] - dot(&x, &beta)));
        }
    }
    out
}

/// Hamilton cycle at `cfg.horizon`.
pub fn hamilton_cycle(y: &QuarterlySeries, cfg: &FilterConfig) -> Result<FilterOutput> {
    check_input(y, cfg)?;
    let first = cfg.min_window - 1;
    output(y, first, hamilton_residuals(y.values(), cfg.horizon, cfg.lags, first))
}

/// Mean of the Hamilton residuals over `cfg.horizons`.
pub fn quast_wolters_cycle(y: &QuarterlySeries, cfg: &FilterConfig) -> Result<FilterOutput> {
    check_input(y, cfg)?;
    let first = cfg.min_window - 1;
    let mut sum = vec![0.0; y.len() - first];
    for h in cfg.horizons.clone() {
        for (s, r) in sum.iter_mut().zip(hamilton_residuals(y.values(), h, cfg.lags, first)) {
            *s += r;
        }
    }
    let count = cfg.horizons.clone().count() as f64;
    output(y, first, sum.into_iter().map(|s| s / count).collect())
}

/// Two-sided HP trend of `y`, i.e. the solution of `(I + lambda D'D) tau = y`.
pub fn hp_trend(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 3 {
        return Ok(y.to_vec());
    }
    let mut d0 = vec![1.0; n];
    let mut d1 = vec![0.0; n - 1];
    let mut d2 = vec![0.0; n - 2];
    for r in 0..n - 2 {
        let c = [1.0, -2.0, 1.0];
        for a in 0..3 {
            d0[r + a] += lambda * c[a] * c[a];
            if a < 2 {
                d1[r + a] += lambda * c[a] * c[a + 1];
            }
        }
        d2[r] += lambda * c[0] * c[2];
    }
    solve_pentadiagonal_spd(&d0, &d1, &d2, y).ok_or(Error::Singular)
}

/// End-point deviation from an HP trend fitted to each sample `y[..=t]`.
pub fn hp_one_sided_cycle(y: &QuarterlySeries, cfg: &FilterConfig) -> Result<FilterOutput> {
    check_input(y, cfg)?;
    let v = y.values();
    let first = cfg.min_window - 1;
    let mut out = Vec::with_capacity(v.len() - first);
    for t in first..v.len() {
        let tau = hp_trend(&v[..=t], cfg.hp_lambda)?;
        out.push(100.0 * (v[t] - tau[t]));
    }
    output(y, first, out)
}

/// Dispatch on `cfg.kind`.
pub fn cycle(y: &QuarterlySeries, cfg: &FilterConfig) -> Result<FilterOutput> {
    match cfg.kind {
        FilterKind::Hamilton => hamilton_cycle(y, cfg),
        FilterKind::QuastWolters => quast_wolters_cycle(y, cfg),
        FilterKind::HpOneSided => hp_one_sided_cycle(y, cfg),
    }
}

fn origin_index(y: &QuarterlySeries, origin: Quarter, cfg: &FilterConfig) -> Result<usize> {
    cfg.validate()?;
    if y.transform() != Transform::Log {
        return Err(Error::Invalid(format!("{}: forecasts expect a log series", y.label())));
    }
    let o = y.index_of(origin).ok_or_else(|| Error::Coverage { series: y.label(), quarter: origin })?;
    if o + 1 < cfg.min_window {
        return Err(Error::InsufficientData { needed: cfg.min_window, available: o + 1 });
    }
    Ok(o)
}

/// Direct projection of the log level `horizon` quarters past `origin`,
/// estimated on observations through `origin`.
pub fn direct_forecast(y: &QuarterlySeries, origin: Quarter, horizon: usize, cfg: &FilterConfig) -> Result<f64> {
    let o = origin_index(y, origin, cfg)?;
    let v = y.values();
    let l = cfg.lags;
    let first = horizon + l - 1;
    if o < first || o + 1 - first < l + 1 {
        return Err(Error::InsufficientData { needed: first + l + 1, available: o + 1 });
    }
    let rows: Vec<Vec<f64>> = (first..=o).map(|s| lag_row(v, s - horizon, l)).collect();
    let x = Matrix::from_rows(&rows);
    let (beta, _) = lstsq(&x, &v[first..=o]);
    Ok(dot(&lag_row(v, o, l), &beta))
}

/// Iterated AR(`lags`) forecast on log growth rates, added to the level at
/// `origin`.
pub fn ar_growth_forecast(y: &QuarterlySeries, origin: Quarter, horizon: usize, cfg: &FilterConfig) -> Result<f64> {
    let o = origin_index(y, origin, cfg)?;
    let v = y.values();
    let l = cfg.lags;
    let d: Vec<f64> = v[..=o].windows(2).map(|w| w[1] - w[0]).collect();
    // d[i] is growth into quarter i + 1; regress d[i] on d[i-1..i-l].
    if d.len() < 2 * l + 1 {
        return Err(Error::InsufficientData { needed: 2 * l + 2, available: o + 1 });
    }
    let row = |hist: &[f64], i: usize| -> Vec<f64> {
        let mut r = Vec::with_capacity(l + 1);
        r.push(1.0);
        r.extend((1..=l).map(|j| hist[i - j]));
        r
    };
    let rows: Vec<Vec<f64>> = (l..d.len()).map(|i| row(&d, i)).collect();
    let (beta, _) = lstsq(&Matrix::from_rows(&rows), &d[l..]);
    let mut hist = d;
    let mut level = v[o];
    for _ in 0..horizon {
        let i = hist.len();
        let g = dot(&row(&hist, i), &beta);
        hist.push(g);
        level += g;
    }
    Ok(level)
}

/// Forecast with the model selected in `cfg.forecast`.
pub fn forecast(y: &QuarterlySeries, origin: Quarter, horizon: usize, cfg: &FilterConfig) -> Result<f64> {
    match cfg.forecast {
        ForecastModel::DirectLevels => direct_forecast(y, origin, horizon, cfg),
        ForecastModel::IteratedGrowth => ar_growth_forecast(y, origin, horizon, cfg),
    }
}
