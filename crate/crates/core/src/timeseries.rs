//! Calendar quarters, quarterly series and the panel container.
//!
//! Panels are read from long-format CSV (`country,variable,quarter,value`).
//! Series are always contiguous: a missing quarter is an error, never
//! interpolated, because the filters index observations by lag.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    year: i32,
    q: u8,
}

impl Quarter {
    pub fn new(year: i32, q: u8) -> Result<Self> {
        if !(1..=4).contains(&q) {
            return Err(Error::MalformedQuarter(format!("{year}Q{q}")));
        }
        Ok(Quarter { year, q })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn q(self) -> u8 {
        self.q
    }

    fn ordinal(self) -> i64 {
        self.year as i64 * 4 + (self.q as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Self {
        Quarter {
            year: ord.div_euclid(4) as i32,
            q: (ord.rem_euclid(4) + 1) as u8,
        }
    }

    /// Shift by `n` quarters (negative moves back in time).
    pub fn add(self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }

    /// Number of quarters from `earlier` to `self`.
    pub fn since(self, earlier: Quarter) -> i64 {
        self.ordinal() - earlier.ordinal()
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}Q{}", self.year, self.q)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_quarter(s)
    }
}

/// Decode `YYYYQn`.
pub fn parse_quarter(text: &str) -> Result<Quarter> {
    let bad = || Error::MalformedQuarter(text.to_string());
    let b = text.as_bytes();
    if b.len() != 6 || b[4] != b'Q' || !b[..4].iter().all(u8::is_ascii_digit) {
        return Err(bad());
    }
    let year: i32 = text[..4].parse().map_err(|_| bad())?;
    let q = match b[5] {
        d @ b'1'..=b'4' => d - b'0',
        _ => return Err(bad()),
    };
    Quarter::new(year, q)
}

/// Quarters from `b` to `a`; positive when `a` is later.
pub fn quarter_diff(a: Quarter, b: Quarter) -> i64 {
    a.since(b)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Gdp,
    UnemploymentRate,
    /// Gross value added of one industry; the slug is opaque.
    Gva(String),
}

impl Variable {
    pub fn industry(&self) -> Option<&str> {
        match self {
            Variable::Gva(slug) => Some(slug),
            _ => None,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Gdp => f.write_str("gdp"),
            Variable::UnemploymentRate => f.write_str("unemployment_rate"),
            Variable::Gva(slug) => write!(f, "gva_{slug}"),
        }
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gdp" => Ok(Variable::Gdp),
            "unemployment_rate" => Ok(Variable::UnemploymentRate),
            _ => match s.strip_prefix("gva_") {
                Some(slug) if !slug.is_empty() => Ok(Variable::Gva(slug.to_string())),
                _ => Err(Error::Invalid(format!("unknown variable {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Level,
    Log,
}

/// A contiguous run of quarterly observations for one country and variable.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterlySeries {
    country: String,
    variable: Variable,
    start: Quarter,
    values: Vec<f64>,
    transform: Transform,
}

impl QuarterlySeries {
    pub fn new(
        country: impl Into<String>,
        variable: Variable,
        start: Quarter,
        values: Vec<f64>,
        transform: Transform,
    ) -> Result<Self> {
        let country = country.into();
        if values.is_empty() {
            return Err(Error::Invalid(format!("{country}/{variable}: empty series")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{country}/{variable}")));
        }
        Ok(QuarterlySeries { country, variable, start, values, transform })
    }

    pub fn country(&self) -> &str {
        &self.country
    }

    pub fn variable(&self) -> &Variable {
        &self.variable
    }

    pub fn start(&self) -> Quarter {
        self.start
    }

    pub fn end(&self) -> Quarter {
        self.start.add(self.values.len() as i64 - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.country, self.variable)
    }

    pub fn index_of(&self, q: Quarter) -> Option<usize> {
        let i = q.since(self.start);
        (0..self.values.len() as i64).contains(&i).then_some(i as usize)
    }

    pub fn quarter_at(&self, index: usize) -> Quarter {
        self.start.add(index as i64)
    }

    pub fn get(&self, q: Quarter) -> Option<f64> {
        self.index_of(q).map(|i| self.values[i])
    }

    /// Value at `q`, or a coverage error naming this series.
    pub fn at(&self, q: Quarter) -> Result<f64> {
        self.get(q).ok_or_else(|| Error::Coverage { series: self.label(), quarter: q })
    }

    pub fn iter(&self) -> impl Iterator<Item = (Quarter, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.quarter_at(i), v))
    }

    /// Same country and variable, different values and start.
    pub fn with_values(&self, start: Quarter, values: Vec<f64>, transform: Transform) -> Result<Self> {
        Self::new(self.country.clone(), self.variable.clone(), start, values, transform)
    }

    /// Observations up to and including `end`.
    pub fn truncate_to(&self, end: Quarter) -> Result<Self> {
        let i = self.index_of(end).ok_or_else(|| Error::Coverage { series: self.label(), quarter: end })?;
        self.with_values(self.start, self.values[..=i].to_vec(), self.transform)
    }
}

/// Natural log of a strictly positive level series.
pub fn to_log(series: &QuarterlySeries) -> Result<QuarterlySeries> {
    if series.transform != Transform::Level {
        return Err(Error::Invalid(format!("{} is already log-transformed", series.label())));
    }
    if let Some((q, v)) = series.iter().find(|&(_, v)| v <= 0.0) {
        return Err(Error::NonPositive { context: format!("{} at {q}", series.label()), value: v });
    }
    let logged = series.values.iter().map(|v| v.ln()).collect();
    series.with_values(series.start, logged, Transform::Log)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKey {
    pub country: String,
    pub variable: Variable,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Panel {
    series: BTreeMap<SeriesKey, QuarterlySeries>,
}

impl Panel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, series: QuarterlySeries) -> Result<()> {
        let key = SeriesKey { country: series.country.clone(), variable: series.variable.clone() };
        if self.series.contains_key(&key) {
            return Err(Error::DuplicateSeries(series.label()));
        }
        self.series.insert(key, series);
        Ok(())
    }

    pub fn get(&self, country: &str, variable: &Variable) -> Option<&QuarterlySeries> {
        self.series.get(&SeriesKey { country: country.to_string(), variable: variable.clone() })
    }

    pub fn iter(&self) -> impl Iterator<Item = &QuarterlySeries> {
        self.series.values()
    }

    /// All series of one variable, in country order.
    pub fn variable<'a>(&'a self, variable: &'a Variable) -> impl Iterator<Item = &'a QuarterlySeries> + 'a {
        self.series.values().filter(move |s| &s.variable == variable)
    }

    pub fn countries(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.series.keys().map(|k| k.country.as_str()).collect();
        out.dedup();
        out
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

const HEADER: [&str; 4] = ["country", "variable", "quarter", "value"];

pub fn load_csv(path: impl AsRef<Path>) -> Result<Panel> {
    read_csv(File::open(path)?)
}

/// Parse a long-format panel. Row order does not matter.
pub fn read_csv<R: Read>(reader: R) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 4];
    for (slot, name) in cols.iter_mut().zip(HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut rows: BTreeMap<SeriesKey, BTreeMap<Quarter, f64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(cols[i]).unwrap_or("");
        let parse_err = |message: String| Error::Parse { line, message };

        let country = field(0).to_string();
        if country.is_empty() {
            return Err(parse_err("empty country".into()));
        }
        let variable: Variable = field(1).parse().map_err(|e: Error| parse_err(e.to_string()))?;
        let quarter = parse_quarter(field(2)).map_err(|e| parse_err(e.to_string()))?;
        let raw = field(3);
        let value: f64 = raw.parse().map_err(|_| parse_err(format!("non-numeric value {raw:?}")))?;
        if !value.is_finite() {
            return Err(parse_err(format!("non-finite value {raw:?}")));
        }
        if variable == Variable::Gdp && value <= 0.0 {
            return Err(Error::NonPositive { context: format!("line {line}: {country}/gdp at {quarter}"), value });
        }

        let key = SeriesKey { country, variable };
        let obs = rows.entry(key.clone()).or_default();
        if obs.insert(quarter, value).is_some() {
            return Err(Error::Duplicate {
                line,
                series: format!("{}/{}", key.country, key.variable),
                quarter,
            });
        }
    }

    let mut panel = Panel::new();
    for (key, obs) in rows {
        let label = format!("{}/{}", key.country, key.variable);
        let start = *obs.keys().next().expect("series has at least one row");
        let mut prev = start;
        for &q in obs.keys().skip(1) {
            if q.since(prev) != 1 {
                return Err(Error::Gap { series: label, after: prev, next: q });
            }
            prev = q;
        }
        let values = obs.into_values().collect();
        panel.insert(QuarterlySeries::new(key.country, key.variable, start, values, Transform::Level)?)?;
    }
    Ok(panel)
}

pub fn write_csv<W: Write>(panel: &Panel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for s in panel.iter() {
        for (q, v) in s.iter() {
            w.write_record([s.country(), &s.variable().to_string(), &q.to_string(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
