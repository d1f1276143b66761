//! Recession episodes and the asymmetry regressions run on them.
//!
//! An episode is one peak-to-trough recession plus the expansion that
//! follows it. Two pairings are estimated:
//!
//! * the size of an expansion on the depth of the recession before it;
//! * the depth of a recession on the size of the expansion before it.
//!
//! Under plucking the first slope is negative and the second is near zero.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use log::warn;

use crate::dating::EpisodeDates;
use crate::error::{Error, Result};
use crate::filters::{forecast, FilterConfig, FilterOutput};
use crate::ols::{fit_bivariate, RegressionResult};
use crate::timeseries::{Panel, Quarter, QuarterlySeries, Variable};

/// Countries with the most flexible labour markets.
pub const FLEXIBLE_COUNTRIES: [&str; 4] = ["AU", "CA", "GB", "US"];

pub fn is_flexible(country: &str) -> bool {
    FLEXIBLE_COUNTRIES.contains(&country)
}

fn split_quarter() -> Quarter {
    Quarter::new(1990, 1).expect("valid quarter")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleEpisode {
    pub country: String,
    pub peak: Quarter,
    pub trough: Quarter,
    pub next_peak: Option<Quarter>,
    pub prev_trough: Option<Quarter>,
    pub u_peak: Option<f64>,
    pub u_trough: Option<f64>,
    pub u_next_peak: Option<f64>,
    /// Percentage points.
    pub du_recession: Option<f64>,
    pub du_expansion: Option<f64>,
    /// Per cent, from the output cycle.
    pub dy_recession: Option<f64>,
    pub dy_expansion: Option<f64>,
    pub trend_gr: Option<f64>,
    pub flexible_group: bool,
    pub pre_1990: bool,
    pub recession_duration: i64,
    /// Trough to next peak.
    pub expansion_duration: Option<i64>,
    /// Previous trough to this peak.
    pub prior_expansion_duration: Option<i64>,
}

impl CycleEpisode {
    fn from_dates(d: &EpisodeDates) -> Self {
        CycleEpisode {
            country: d.country.clone(),
            peak: d.peak,
            trough: d.trough,
            next_peak: d.next_peak,
            prev_trough: d.prev_trough,
            u_peak: None,
            u_trough: None,
            u_next_peak: None,
            du_recession: None,
            du_expansion: None,
            dy_recession: None,
            dy_expansion: None,
            trend_gr: None,
            flexible_group: is_flexible(&d.country),
            pre_1990: d.peak < split_quarter(),
            recession_duration: d.trough.since(d.peak),
            expansion_duration: d.next_peak.map(|n| n.since(d.trough)),
            prior_expansion_duration: d.prev_trough.map(|p| d.peak.since(p)),
        }
    }

    pub fn dates(&self) -> EpisodeDates {
        EpisodeDates {
            country: self.country.clone(),
            peak: self.peak,
            trough: self.trough,
            next_peak: self.next_peak,
            prev_trough: self.prev_trough,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Computed,
    TableA1Fixture,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Computed => "computed",
            Provenance::TableA1Fixture => "table_a1_fixture",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodePanel {
    episodes: Vec<CycleEpisode>,
    provenance: Provenance,
}

impl EpisodePanel {
    /// Sorts by (country, peak) and checks ordering and uniqueness.
    pub fn new(mut episodes: Vec<CycleEpisode>, provenance: Provenance) -> Result<Self> {
        episodes.sort_by(|a, b| (&a.country, a.peak).cmp(&(&b.country, b.peak)));
        for e in &episodes {
            if e.trough <= e.peak || e.next_peak.is_some_and(|n| n <= e.trough) {
                return Err(Error::Invalid(format!("{} {}: turning points out of order", e.country, e.peak)));
            }
        }
        for w in episodes.windows(2) {
            if w[0].country == w[1].country && w[0].peak == w[1].peak {
                return Err(Error::Invalid(format!("duplicate episode {} {}", w[0].country, w[0].peak)));
            }
        }
        Ok(EpisodePanel { episodes, provenance })
    }

    pub fn episodes(&self) -> &[CycleEpisode] {
        &self.episodes
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// The episode whose following expansion ends at `e.peak`, if any.
    fn predecessor(&self, e: &CycleEpisode) -> Option<&CycleEpisode> {
        self.episodes.iter().find(|p| p.country == e.country && p.next_peak == Some(e.peak))
    }
}

/// Series the episode fields are computed from; any may be absent.
#[derive(Debug, Clone, Default)]
pub struct EpisodeInputs<'a> {
    pub unemployment: Option<&'a Panel>,
    /// Output cycles keyed by country.
    pub output_cycles: Option<&'a BTreeMap<String, FilterOutput>>,
    /// Log GDP keyed by country, for the trend measure.
    pub log_gdp: Option<&'a BTreeMap<String, QuarterlySeries>>,
    pub filter: FilterConfig,
}

fn unemployment_series<'a>(panel: &'a Panel, country: &str) -> Result<&'a QuarterlySeries> {
    panel
        .get(country, &Variable::UnemploymentRate)
        .ok_or_else(|| Error::MissingInput(format!("no unemployment_rate series for {country}")))
}

/// One episode per dated recession, with every field the inputs allow.
pub fn build_episodes(dates: &[EpisodeDates], inputs: &EpisodeInputs) -> Result<EpisodePanel> {
    let mut out = Vec::with_capacity(dates.len());
    for d in dates {
        let mut e = CycleEpisode::from_dates(d);
        if let Some(panel) = inputs.unemployment {
            let u = unemployment_series(panel, &d.country)?;
            let (up, ut) = (u.at(d.peak)?, u.at(d.trough)?);
            e.u_peak = Some(up);
            e.u_trough = Some(ut);
            e.du_recession = Some(ut - up);
            if let Some(n) = d.next_peak {
                let un = u.at(n)?;
                e.u_next_peak = Some(un);
                e.du_expansion = Some(un - ut);
            }
        }
        if let Some(cycles) = inputs.output_cycles {
            match cycles.get(&d.country) {
                Some(c) => {
                    let (cp, ct) = (c.at(d.peak), c.at(d.trough));
                    e.dy_recession = cp.zip(ct).map(|(p, t)| t - p);
                    e.dy_expansion = ct.zip(d.next_peak.and_then(|n| c.at(n))).map(|(t, n)| n - t);
                }
                None => warn!("{}: no output cycle, output changes left empty", d.country),
            }
        }
        if let Some(y) = inputs.log_gdp.and_then(|m| m.get(&d.country)) {
            match trend_growth_effect(y, d.peak, &inputs.filter) {
                Ok(t) => e.trend_gr = Some(t.value),
                Err(Error::InsufficientData { .. } | Error::Coverage { .. }) => {}
                Err(err) => return Err(err),
            }
        }
        out.push(e);
    }
    EpisodePanel::new(out, Provenance::Computed)
}

/// Unemployment changes with both endpoints moved `lag` quarters later.
pub fn lagged_du(episode: &CycleEpisode, unemployment: &Panel, lag: usize) -> Result<(f64, Option<f64>)> {
    if lag > 2 {
        return Err(Error::Invalid(format!("lag {lag} outside 0..=2")));
    }
    let u = unemployment_series(unemployment, &episode.country)?;
    let l = lag as i64;
    let ut = u.at(episode.trough.add(l))?;
    let rec = ut - u.at(episode.peak.add(l))?;
    let exp = match episode.next_peak {
        Some(n) => Some(u.at(n.add(l))? - ut),
        None => None,
    };
    Ok((rec, exp))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastLeg {
    pub origin: Quarter,
    pub horizon: usize,
    pub target: Quarter,
    /// Log level.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendEffect {
    /// Made at the peak, 20 quarters ahead.
    pub at_peak: ForecastLeg,
    /// Made 12 quarters after the peak, 8 quarters ahead.
    pub after: ForecastLeg,
    /// Per cent; negative when the recession lowered the medium-run path.
    pub value: f64,
}

/// Medium-run trend damage around a peak: the forecast for peak+20 made
/// three years after the peak minus the one made at the peak.
pub fn trend_growth_effect(y: &QuarterlySeries, peak: Quarter, cfg: &FilterConfig) -> Result<TrendEffect> {
    let origin = peak.add(12);
    if y.index_of(peak).is_none() || y.index_of(origin).is_none() {
        let available = y.index_of(peak).map_or(0, |_| y.end().since(peak) as usize);
        return Err(Error::InsufficientData { needed: 12, available });
    }
    let leg = |origin: Quarter, horizon: usize| -> Result<ForecastLeg> {
        Ok(ForecastLeg { origin, horizon, target: origin.add(horizon as i64), value: forecast(y, origin, horizon, cfg)? })
    };
    let at_peak = leg(peak, 20)?;
    let after = leg(origin, 8)?;
    debug_assert_eq!(at_peak.target, after.target);
    Ok(TrendEffect { at_peak, after, value: 100.0 * (after.value - at_peak.value) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Group {
    #[default]
    All,
    Flexible,
    Remaining,
}

impl Group {
    pub fn admits(self, country: &str) -> bool {
        match self {
            Group::All => true,
            Group::Flexible => is_flexible(country),
            Group::Remaining => !is_flexible(country),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::All => "all",
            Group::Flexible => "flexible",
            Group::Remaining => "remaining",
        })
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Group::All),
            "flexible" => Ok(Group::Flexible),
            "remaining" => Ok(Group::Remaining),
            _ => Err(Error::Invalid(format!("unknown group {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sample {
    #[default]
    Full,
    Pre1990,
    Post1990,
    ShortRecessions,
    LongRecessions,
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sample::Full => "full",
            Sample::Pre1990 => "pre1990",
            Sample::Post1990 => "post1990",
            Sample::ShortRecessions => "short",
            Sample::LongRecessions => "long",
        })
    }
}

impl FromStr for Sample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Sample::Full),
            "pre1990" => Ok(Sample::Pre1990),
            "post1990" => Ok(Sample::Post1990),
            "short" | "short_recessions" => Ok(Sample::ShortRecessions),
            "long" | "long_recessions" => Ok(Sample::LongRecessions),
            _ => Err(Error::Invalid(format!("unknown sample {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Selection {
    pub group: Group,
    pub sample: Sample,
    /// Quarters by which unemployment endpoints are shifted (0..=2).
    pub lag: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median recession duration over the whole panel; the short/long split
/// puts ties with the short group.
pub fn median_recession_duration(panel: &EpisodePanel) -> Option<f64> {
    let mut d: Vec<f64> = panel.episodes().iter().map(|e| e.recession_duration as f64).collect();
    (!d.is_empty()).then(|| median(&mut d))
}

fn admit(e: &CycleEpisode, sel: &Selection, median: f64) -> bool {
    sel.group.admits(&e.country)
        && match sel.sample {
            Sample::Full => true,
            Sample::Pre1990 => e.pre_1990,
            Sample::Post1990 => !e.pre_1990,
            Sample::ShortRecessions => e.recession_duration as f64 <= median,
            Sample::LongRecessions => e.recession_duration as f64 > median,
        }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// Expansion change on the preceding recession change.
    ExpansionOnRecession,
    /// Recession change on the preceding expansion change.
    RecessionOnExpansion,
    /// Trend damage on the recession's output change.
    TrendOnRecession,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::ExpansionOnRecession => "expansion_on_recession",
            Relation::RecessionOnExpansion => "recession_on_expansion",
            Relation::TrendOnRecession => "trend_on_recession",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub country: String,
    /// Peak of the episode that supplies the dependent variable.
    pub peak: Quarter,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub relation: Relation,
    pub result: RegressionResult,
    pub points: Vec<ScatterPoint>,
}

fn fit_points(relation: Relation, points: Vec<ScatterPoint>) -> Result<PairFit> {
    if points.len() < 3 {
        return Err(Error::TooFewObservations { needed: 3, available: points.len() });
    }
    let x: Vec<f64> = points.iter().map(|p| p.x).collect();
    let y: Vec<f64> = points.iter().map(|p| p.y).collect();
    Ok(PairFit { relation, result: fit_bivariate(&x, &y)?, points })
}

/// Collect (x, y) pairs. `same` pairs fields of one episode, `chained`
/// takes x from the predecessor and y from the episode itself.
fn collect(
    panel: &EpisodePanel,
    sel: &Selection,
    x_of: impl Fn(&CycleEpisode) -> Option<f64>,
    y_of: impl Fn(&CycleEpisode) -> Option<f64>,
    chained: bool,
) -> Vec<ScatterPoint> {
    let med = median_recession_duration(panel).unwrap_or(0.0);
    panel
        .episodes()
        .iter()
        .filter(|e| admit(e, sel, med))
        .filter_map(|e| {
            let x = if chained { x_of(panel.predecessor(e)?)? } else { x_of(e)? };
            Some(ScatterPoint { country: e.country.clone(), peak: e.peak, x, y: y_of(e)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnemploymentRegressions {
    pub expansion_on_recession: PairFit,
    pub recession_on_expansion: PairFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRegressions {
    pub expansion_on_recession: PairFit,
    pub recession_on_expansion: PairFit,
    pub trend_on_recession: PairFit,
}

fn relagged(panel: &EpisodePanel, lag: usize, unemployment: Option<&Panel>) -> Result<EpisodePanel> {
    if lag == 0 {
        return Ok(panel.clone());
    }
    let u = unemployment.ok_or_else(|| Error::MissingInput("lagged regressions need unemployment series".into()))?;
    let mut eps = panel.episodes().to_vec();
    for e in &mut eps {
        let (rec, exp) = lagged_du(e, u, lag)?;
        e.du_recession = Some(rec);
        e.du_expansion = exp;
    }
    EpisodePanel::new(eps, panel.provenance())
}

/// Unemployment pairings for one group/sample/lag selection.
pub fn run_unemployment_regressions(
    panel: &EpisodePanel,
    sel: &Selection,
    unemployment: Option<&Panel>,
) -> Result<UnemploymentRegressions> {
    let panel = relagged(panel, sel.lag, unemployment)?;
    let rec = |e: &CycleEpisode| e.du_recession;
    let exp = |e: &CycleEpisode| e.du_expansion;
    Ok(UnemploymentRegressions {
        expansion_on_recession: fit_points(Relation::ExpansionOnRecession, collect(&panel, sel, rec, exp, false))?,
        recession_on_expansion: fit_points(Relation::RecessionOnExpansion, collect(&panel, sel, exp, rec, true))?,
    })
}

/// Output-cycle pairings plus trend damage on recession depth.
pub fn run_output_regressions(panel: &EpisodePanel, sel: &Selection) -> Result<OutputRegressions> {
    let rec = |e: &CycleEpisode| e.dy_recession;
    let exp = |e: &CycleEpisode| e.dy_expansion;
    let trend = |e: &CycleEpisode| e.trend_gr;
    Ok(OutputRegressions {
        expansion_on_recession: fit_points(Relation::ExpansionOnRecession, collect(panel, sel, rec, exp, false))?,
        recession_on_expansion: fit_points(Relation::RecessionOnExpansion, collect(panel, sel, exp, rec, true))?,
        trend_on_recession: fit_points(Relation::TrendOnRecession, collect(panel, sel, rec, trend, false))?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongestExpansion {
    pub country: String,
    pub start: Quarter,
    pub end: Quarter,
    pub quarters: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurationStats {
    pub recessions: usize,
    pub mean_recession: f64,
    pub median_recession: f64,
    pub max_recession: i64,
    pub expansions: usize,
    pub mean_expansion: f64,
    pub median_expansion: f64,
    pub max_expansion: i64,
    /// Mean of expansion plus the recession that ends it.
    pub mean_cycle: f64,
    pub longest_expansion: Option<LongestExpansion>,
}

/// Recession lengths come from every episode; expansions are the known
/// ones leading into each peak.
pub fn duration_stats(panel: &EpisodePanel) -> Result<DurationStats> {
    if panel.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, available: 0 });
    }
    let eps = panel.episodes();
    let mut rec: Vec<f64> = eps.iter().map(|e| e.recession_duration as f64).collect();
    let exp_eps: Vec<&CycleEpisode> = eps.iter().filter(|e| e.prior_expansion_duration.is_some()).collect();
    let mut exp: Vec<f64> = exp_eps.iter().map(|e| e.prior_expansion_duration.unwrap() as f64).collect();
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let cycles: Vec<f64> = exp_eps
        .iter()
        .map(|e| (e.prior_expansion_duration.unwrap() + e.recession_duration) as f64)
        .collect();
    let longest = exp_eps
        .iter()
        .copied()
        .max_by_key(|e| (e.prior_expansion_duration.unwrap(), std::cmp::Reverse(e.peak)))
        .map(|e| {
            let quarters = e.prior_expansion_duration.unwrap();
            LongestExpansion { country: e.country.clone(), start: e.peak.add(-quarters), end: e.peak, quarters }
        });
    Ok(DurationStats {
        recessions: rec.len(),
        mean_recession: mean(&rec),
        median_recession: median(&mut rec),
        max_recession: eps.iter().map(|e| e.recession_duration).max().unwrap_or(0),
        expansions: exp.len(),
        mean_expansion: mean(&exp),
        median_expansion: if exp.is_empty() { f64::NAN } else { median(&mut exp) },
        max_expansion: longest.as_ref().map_or(0, |l| l.quarters),
        mean_cycle: mean(&cycles),
        longest_expansion: longest,
    })
}

/// One printed row of the recession timeline fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureRow {
    pub country: String,
    pub peak: Quarter,
    pub trough: Quarter,
    pub duration_recession: i64,
    pub duration_expansion: i64,
    pub u_peak: f64,
    pub u_trough: f64,
    pub u_next_peak: f64,
    pub y_peak: f64,
    pub y_trough: f64,
    pub y_next_peak: f64,
}

const BUNDLED_TABLE_A1: &str = include_str!("../fixtures/table_a1.csv");

pub fn bundled_table_a1() -> Vec<FixtureRow> {
    read_table_a1(BUNDLED_TABLE_A1.as_bytes()).expect("bundled fixture parses")
}

pub fn read_table_a1<R: Read>(reader: R) -> Result<Vec<FixtureRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names = [
        "country", "peak", "trough", "duration_recession", "duration_expansion", "u_peak", "u_trough", "u_next_peak",
        "y_peak", "y_trough", "y_next_peak",
    ];
    let idx: Vec<usize> = names
        .iter()
        .map(|n| headers.iter().position(|h| h == *n).ok_or_else(|| Error::MissingColumn((*n).into())))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| rec.get(idx[i]).unwrap_or("");
        let perr = |i: usize, e: &dyn fmt::Display| Error::Parse { line, message: format!("{}: {e}", names[i]) };
        let q = |i: usize| f(i).parse::<Quarter>().map_err(|e| perr(i, &e));
        let n = |i: usize| f(i).parse::<f64>().map_err(|e| perr(i, &e));
        let d = |i: usize| f(i).parse::<i64>().map_err(|e| perr(i, &e));
        rows.push(FixtureRow {
            country: f(0).to_string(),
            peak: q(1)?,
            trough: q(2)?,
            duration_recession: d(3)?,
            duration_expansion: d(4)?,
            u_peak: n(5)?,
            u_trough: n(6)?,
            u_next_peak: n(7)?,
            y_peak: n(8)?,
            y_trough: n(9)?,
            y_next_peak: n(10)?,
        });
    }
    rows.sort_by(|a, b| (&a.country, a.peak).cmp(&(&b.country, b.peak)));
    Ok(rows)
}

/// Episodes from the fixture. Each country's last recession is treated as
/// having a censored expansion. Recession lengths are computed from the
/// dates; the printed preceding-expansion lengths are kept.
pub fn fixture_panel(rows: &[FixtureRow]) -> Result<EpisodePanel> {
    let mut eps = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let next = rows.get(i + 1).filter(|n| n.country == r.country);
        let prev = i.checked_sub(1).map(|j| &rows[j]).filter(|p| p.country == r.country);
        let dates = EpisodeDates {
            country: r.country.clone(),
            peak: r.peak,
            trough: r.trough,
            next_peak: next.map(|n| n.peak),
            prev_trough: prev.map(|p| p.trough),
        };
        let mut e = CycleEpisode::from_dates(&dates);
        e.u_peak = Some(r.u_peak);
        e.u_trough = Some(r.u_trough);
        e.du_recession = Some(r.u_trough - r.u_peak);
        if next.is_some() {
            e.u_next_peak = Some(r.u_next_peak);
            e.du_expansion = Some(r.u_next_peak - r.u_trough);
        }
        e.prior_expansion_duration = Some(r.duration_expansion);
        eps.push(e);
    }
    EpisodePanel::new(eps, Provenance::TableA1Fixture)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub country: String,
    pub peak: Quarter,
    pub field: &'static str,
    pub printed: f64,
    pub derived: f64,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {} printed {} but dates/neighbouring rows give {}", self.country, self.peak, self.field, self.printed, self.derived)
    }
}

/// Cross-check printed durations against dates and next-peak values
/// against the following row.
pub fn fixture_discrepancies(rows: &[FixtureRow]) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    let mut push = |r: &FixtureRow, field, printed: f64, derived: f64| {
        if (printed - derived).abs() > 1e-9 {
            out.push(Discrepancy { country: r.country.clone(), peak: r.peak, field, printed, derived });
        }
    };
    for (i, r) in rows.iter().enumerate() {
        push(r, "duration_recession", r.duration_recession as f64, r.trough.since(r.peak) as f64);
        if let Some(p) = i.checked_sub(1).map(|j| &rows[j]).filter(|p| p.country == r.country) {
            push(r, "duration_expansion", r.duration_expansion as f64, r.peak.since(p.trough) as f64);
        }
        if let Some(n) = rows.get(i + 1).filter(|n| n.country == r.country) {
            push(r, "u_next_peak", r.u_next_peak, n.u_peak);
            push(r, "y_next_peak", r.y_next_peak, n.y_peak);
        }
    }
    out
}
