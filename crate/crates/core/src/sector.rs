//! Industry-level asymmetry: cyclical value added at aggregate troughs and
//! at the following peaks, regressed both ways per industry.

use std::collections::BTreeMap;

use log::warn;

use crate::dating::EpisodeDates;
use crate::error::{Error, Result};
use crate::filters::{hamilton_cycle, FilterConfig, FilterKind, FilterOutput};
use crate::ols::{fit_bivariate, RegressionResult};
use crate::timeseries::{to_log, Panel, Quarter, Transform};

/// (country, industry slug)
pub type SectorKey = (String, String);

/// Single-horizon Hamilton cycle for every GVA series in `gva`, whatever
/// `cfg.kind` says. Series too short for the filter are skipped with a
/// warning.
pub fn sector_cycles(gva: &Panel, cfg: &FilterConfig) -> Result<BTreeMap<SectorKey, FilterOutput>> {
    let cfg = FilterConfig { kind: FilterKind::Hamilton, ..cfg.clone() };
    let mut out = BTreeMap::new();
    for s in gva.iter() {
        let Some(industry) = s.variable().industry() else { continue };
        let logged = match s.transform() {
            Transform::Log => s.clone(),
            Transform::Level => to_log(s)?,
        };
        match hamilton_cycle(&logged, &cfg) {
            Ok(c) => {
                out.insert((s.country().to_string(), industry.to_string()), c);
            }
            Err(Error::InsufficientData { needed, available }) => {
                warn!("{}: skipped, {available} quarters but the filter needs {needed}", s.label());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorEpisode {
    pub country: String,
    pub industry: String,
    pub peak: Quarter,
    pub trough: Quarter,
    pub next_peak: Option<Quarter>,
    /// Cyclical GVA at the trough, per cent.
    pub r: Option<f64>,
    /// Cyclical GVA at the next peak, per cent.
    pub e: Option<f64>,
}

/// Cross every industry cycle with its country's aggregate recession dates.
pub fn build_sector_episodes(dates: &[EpisodeDates], cycles: &BTreeMap<SectorKey, FilterOutput>) -> Vec<SectorEpisode> {
    let mut out = Vec::new();
    for ((country, industry), c) in cycles {
        for d in dates.iter().filter(|d| &d.country == country) {
            out.push(SectorEpisode {
                country: country.clone(),
                industry: industry.clone(),
                peak: d.peak,
                trough: d.trough,
                next_peak: d.next_peak,
                r: c.at(d.trough),
                e: d.next_peak.and_then(|n| c.at(n)),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorRegressionPair {
    /// Industry slug, or `all` when industries are pooled.
    pub industry: String,
    /// Peak value on the preceding trough value.
    pub recovery: RegressionResult,
    /// Trough value on the preceding peak value.
    pub bust: RegressionResult,
    /// Observations pooled across countries.
    pub pooled: bool,
}

impl SectorRegressionPair {
    pub fn beta_recovery(&self) -> f64 {
        self.recovery.slope()
    }

    pub fn beta_bust(&self) -> f64 {
        self.bust.slope()
    }
}

const MIN_OBS: usize = 3;

/// Both regressions per industry (or once over everything when
/// `by_industry` is false), pooling countries. Industries with fewer than
/// three usable pairs in either direction are skipped with a warning.
pub fn sector_regressions(episodes: &[SectorEpisode], by_industry: bool) -> Result<Vec<SectorRegressionPair>> {
    let mut groups: BTreeMap<&str, Vec<&SectorEpisode>> = BTreeMap::new();
    for e in episodes {
        groups.entry(if by_industry { e.industry.as_str() } else { "all" }).or_default().push(e);
    }
    let mut out = Vec::new();
    for (industry, eps) in groups {
        let (mut rx, mut ry, mut bx, mut by) = (vec![], vec![], vec![], vec![]);
        for e in &eps {
            if let (Some(r), Some(x)) = (e.r, e.e) {
                rx.push(r);
                ry.push(x);
            }
            let next = eps.iter().find(|n| {
                n.country == e.country && n.industry == e.industry && Some(n.peak) == e.next_peak
            });
            if let (Some(x), Some(r)) = (e.e, next.and_then(|n| n.r)) {
                bx.push(x);
                by.push(r);
            }
        }
        if rx.len() < MIN_OBS || bx.len() < MIN_OBS {
            warn!("{industry}: skipped, {} recovery and {} bust pairs (need {MIN_OBS})", rx.len(), bx.len());
            continue;
        }
        out.push(SectorRegressionPair {
            industry: industry.to_string(),
            recovery: fit_bivariate(&rx, &ry)?,
            bust: fit_bivariate(&bx, &by)?,
            pooled: true,
        });
    }
    Ok(out)
}
