//! Plain tables for everything the pipeline emits, rendered as CSV or
//! Markdown. Numbers are printed to four decimals.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::dating::{episodes_from_turns, CycleChronology, EpisodeDates, TurnKind};
use crate::episodes::{
    run_output_regressions, run_unemployment_regressions, Discrepancy, DurationStats, EpisodePanel, Group, PairFit,
    Sample, Selection,
};
use crate::error::{Error, Result};
use crate::filters::FilterOutput;
use crate::ols::RegressionResult;
use crate::sector::SectorRegressionPair;
use crate::timeseries::{Panel, Quarter};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
        let headers = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Table { headers, rows })
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
        s.push_str(&line(&self.headers));
        s.push_str(&line(&vec!["---".to_string(); self.headers.len()]));
        for r in &self.rows {
            s.push_str(&line(r));
        }
        s
    }
}

pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt4(v: Option<f64>) -> String {
    v.map(fmt4).unwrap_or_default()
}

fn coef(r: &RegressionResult, k: usize) -> String {
    format!("{}{}", fmt4(r.coefficients[k]), r.stars[k])
}

fn se(r: &RegressionResult, k: usize) -> String {
    format!("({})", fmt4(r.robust_se[k]))
}

/// Regression columns stacked as constant, slope, observations, adj. R^2.
pub fn regression_table(slope_label: &str, columns: &[(String, &RegressionResult)]) -> Table {
    let mut t = Table::new(std::iter::once(String::new()).chain(columns.iter().map(|(l, _)| l.clone())));
    let row = |label: &str, f: &dyn Fn(&RegressionResult) -> String| -> Vec<String> {
        std::iter::once(label.to_string()).chain(columns.iter().map(|(_, r)| f(r))).collect()
    };
    t.push(row("Constant", &|r| coef(r, 0)));
    t.push(row("", &|r| se(r, 0)));
    t.push(row(slope_label, &|r| coef(r, 1)));
    t.push(row("", &|r| se(r, 1)));
    t.push(row("Observations", &|r| r.n_obs.to_string()));
    t.push(row("Adjusted R2", &|r| fmt4(r.adj_r2)));
    t
}

pub const STAR_NOTE: &str = "***, ** and * denote significance at the 1%, 5% and 10% levels; robust standard errors in parentheses.";

/// Six columns: expansion-on-recession then recession-on-expansion, each
/// for all countries, the flexible group and the rest.
pub fn unemployment_table(
    panel: &EpisodePanel,
    sample: Sample,
    lag: usize,
    unemployment: Option<&Panel>,
) -> Result<(Table, Vec<PairFit>)> {
    let groups = [Group::All, Group::Flexible, Group::Remaining];
    let mut fits = Vec::new();
    for g in groups {
        fits.push(run_unemployment_regressions(panel, &Selection { group: g, sample, lag }, unemployment)?);
    }
    let mut cols = Vec::new();
    let mut out = Vec::new();
    for (i, f) in fits.iter().enumerate() {
        cols.push((format!("du_expansion ({})", groups[i]), &f.expansion_on_recession.result));
    }
    for (i, f) in fits.iter().enumerate() {
        cols.push((format!("du_recession ({})", groups[i]), &f.recession_on_expansion.result));
    }
    let table = regression_table("Previous phase du", &cols);
    for f in fits {
        out.push(f.expansion_on_recession);
        out.push(f.recession_on_expansion);
    }
    Ok((table, out))
}

/// Three columns: expansion change, recession change and trend damage.
pub fn output_table(panel: &EpisodePanel, sel: &Selection) -> Result<(Table, Vec<PairFit>)> {
    let f = run_output_regressions(panel, sel)?;
    let cols = [
        ("dy_expansion".to_string(), &f.expansion_on_recession.result),
        ("dy_recession".to_string(), &f.recession_on_expansion.result),
        ("trend_gr".to_string(), &f.trend_on_recession.result),
    ];
    let table = regression_table("Previous phase dy", &cols);
    Ok((table, vec![f.expansion_on_recession, f.recession_on_expansion, f.trend_on_recession]))
}

pub fn scatter_table(fits: &[PairFit]) -> Table {
    let mut t = Table::new(["relation", "country", "peak", "x", "y"]);
    for f in fits {
        for p in &f.points {
            t.push([f.relation.to_string(), p.country.clone(), p.peak.to_string(), fmt4(p.x), fmt4(p.y)]);
        }
    }
    t
}

pub fn chronology_table(chronologies: &[CycleChronology]) -> Table {
    let mut t = Table::new(["country", "kind", "quarter"]);
    for c in chronologies {
        for p in &c.points {
            t.push([c.country.clone(), p.kind.to_string(), p.quarter.to_string()]);
        }
    }
    t
}

/// Turning points per country from a `country,kind,quarter` CSV, checked
/// for alternation.
pub fn read_chronology_csv<R: Read>(reader: R) -> Result<BTreeMap<String, Vec<(TurnKind, Quarter)>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |n: &str| headers.iter().position(|h| h == n).ok_or_else(|| Error::MissingColumn(n.into()));
    let (ci, ki, qi) = (col("country")?, col("kind")?, col("quarter")?);
    let mut out: BTreeMap<String, Vec<(TurnKind, Quarter)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let perr = |e: Error| Error::Parse { line, message: e.to_string() };
        let kind: TurnKind = rec.get(ki).unwrap_or("").parse().map_err(perr)?;
        let quarter: Quarter = rec.get(qi).unwrap_or("").parse().map_err(perr)?;
        out.entry(rec.get(ci).unwrap_or("").to_string()).or_default().push((kind, quarter));
    }
    for (country, turns) in &mut out {
        turns.sort_by_key(|t| t.1);
        for w in turns.windows(2) {
            if w[0].0 == w[1].0 || w[0].1 == w[1].1 {
                return Err(Error::Invalid(format!("{country}: turning points at {} and {} do not alternate", w[0].1, w[1].1)));
            }
        }
    }
    Ok(out)
}

pub fn episode_dates_from(turns: &BTreeMap<String, Vec<(TurnKind, Quarter)>>) -> Vec<EpisodeDates> {
    turns.iter().flat_map(|(c, t)| episodes_from_turns(c, t)).collect()
}

pub fn filter_table(outputs: &BTreeMap<String, FilterOutput>) -> Table {
    let mut t = Table::new(["country", "quarter", "cycle"]);
    for (country, o) in outputs {
        for (q, v) in o.cycle.iter() {
            t.push([country.clone(), q.to_string(), fmt4(v)]);
        }
    }
    t
}

pub fn episodes_table(panel: &EpisodePanel) -> Table {
    let mut t = Table::new([
        "country", "peak", "trough", "next_peak", "recession_duration", "expansion_duration", "prior_expansion_duration",
        "du_recession", "du_expansion", "dy_recession", "dy_expansion", "trend_gr", "flexible_group", "pre_1990",
    ]);
    let opt_q = |q: Option<Quarter>| q.map(|q| q.to_string()).unwrap_or_default();
    let opt_i = |v: Option<i64>| v.map(|v| v.to_string()).unwrap_or_default();
    for e in panel.episodes() {
        t.push([
            e.country.clone(),
            e.peak.to_string(),
            e.trough.to_string(),
            opt_q(e.next_peak),
            e.recession_duration.to_string(),
            opt_i(e.expansion_duration),
            opt_i(e.prior_expansion_duration),
            opt4(e.du_recession),
            opt4(e.du_expansion),
            opt4(e.dy_recession),
            opt4(e.dy_expansion),
            opt4(e.trend_gr),
            e.flexible_group.to_string(),
            e.pre_1990.to_string(),
        ]);
    }
    t
}

pub fn sector_table(pairs: &[SectorRegressionPair]) -> Table {
    let mut t = Table::new([
        "industry", "beta_recovery", "se_recovery", "n_recovery", "beta_bust", "se_bust", "n_bust", "pooled",
    ]);
    for p in pairs {
        t.push([
            p.industry.clone(),
            format!("{}{}", fmt4(p.beta_recovery()), p.recovery.stars[1]),
            fmt4(p.recovery.slope_se()),
            p.recovery.n_obs.to_string(),
            format!("{}{}", fmt4(p.beta_bust()), p.bust.stars[1]),
            fmt4(p.bust.slope_se()),
            p.bust.n_obs.to_string(),
            p.pooled.to_string(),
        ]);
    }
    t
}

pub fn duration_table(s: &DurationStats) -> Table {
    let mut t = Table::new(["statistic", "value"]);
    let mut put = |k: &str, v: String| t.push([k.to_string(), v]);
    put("recessions", s.recessions.to_string());
    put("mean_recession_quarters", fmt4(s.mean_recession));
    put("median_recession_quarters", fmt4(s.median_recession));
    put("max_recession_quarters", s.max_recession.to_string());
    put("expansions", s.expansions.to_string());
    put("mean_expansion_quarters", fmt4(s.mean_expansion));
    put("median_expansion_quarters", fmt4(s.median_expansion));
    put("max_expansion_quarters", s.max_expansion.to_string());
    put("mean_cycle_quarters", fmt4(s.mean_cycle));
    if let Some(l) = &s.longest_expansion {
        put("longest_expansion", format!("{} {}-{} ({} quarters)", l.country, l.start, l.end, l.quarters));
    }
    t
}

pub fn discrepancy_table(d: &[Discrepancy]) -> Table {
    let mut t = Table::new(["country", "peak", "field", "printed", "derived"]);
    for x in d {
        t.push([x.country.clone(), x.peak.to_string(), x.field.to_string(), x.printed.to_string(), x.derived.to_string()]);
    }
    t
}
