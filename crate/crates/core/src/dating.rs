//! Quarterly turning-point dating (Bry-Boschan as adapted by Harding and
//! Pagan): local extrema within a `window`-quarter radius, forced
//! alternation, then censoring of phases shorter than `min_phase` and
//! cycles shorter than `min_cycle`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::timeseries::{Quarter, QuarterlySeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseSpec {
    pub window: usize,
    pub min_phase: usize,
    pub min_cycle: usize,
}

impl PhaseSpec {
    pub fn new(window: usize, min_phase: usize, min_cycle: usize) -> Result<Self> {
        if window < 1 || min_phase < 1 || min_cycle < 2 * min_phase {
            return Err(Error::Invalid(format!(
                "phase spec needs window >= 1, min_phase >= 1, min_cycle >= 2*min_phase (got {window}, {min_phase}, {min_cycle})"
            )));
        }
        Ok(PhaseSpec { window, min_phase, min_cycle })
    }
}

impl Default for PhaseSpec {
    fn default() -> Self {
        PhaseSpec { window: 2, min_phase: 2, min_cycle: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TurnKind {
    Peak,
    Trough,
}

impl TurnKind {
    pub fn opposite(self) -> Self {
        match self {
            TurnKind::Peak => TurnKind::Trough,
            TurnKind::Trough => TurnKind::Peak,
        }
    }
}

impl fmt::Display for TurnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TurnKind::Peak => "peak",
            TurnKind::Trough => "trough",
        })
    }
}

impl FromStr for TurnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peak" => Ok(TurnKind::Peak),
            "trough" => Ok(TurnKind::Trough),
            _ => Err(Error::Invalid(format!("unknown turning point kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint {
    pub kind: TurnKind,
    pub quarter: Quarter,
    /// Series value at `quarter`.
    pub value: f64,
}

/// Alternating peaks and troughs for one country.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleChronology {
    pub country: String,
    pub points: Vec<TurningPoint>,
    pub sample_start: Quarter,
    pub sample_end: Quarter,
}

/// The phase in progress at the end of the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenPhase {
    Expansion { since: Quarter },
    Recession { since: Quarter },
}

/// Dates of one recession plus its neighbouring expansions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeDates {
    pub country: String,
    pub peak: Quarter,
    pub trough: Quarter,
    /// Next peak; `None` while the following expansion is still running.
    pub next_peak: Option<Quarter>,
    /// Trough that opened the preceding expansion, if observed.
    pub prev_trough: Option<Quarter>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseRow {
    pub peak: Quarter,
    pub trough: Quarter,
    pub recession_duration: i64,
    /// Quarters from the previous trough (or the sample start) to the peak.
    pub expansion_duration: i64,
    /// The expansion began before the sample did.
    pub expansion_censored: bool,
}

impl CycleChronology {
    /// Check alternation, ordering, peak/trough values and spacing rules.
    pub fn validate(&self, spec: &PhaseSpec) -> std::result::Result<(), String> {
        let p = &self.points;
        for w in p.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.kind == b.kind {
                return Err(format!("two consecutive {}s at {} and {}", a.kind, a.quarter, b.quarter));
            }
            if b.quarter <= a.quarter {
                return Err(format!("quarters not increasing at {}", b.quarter));
            }
            let (peak, trough) = if a.kind == TurnKind::Peak { (a, b) } else { (b, a) };
            if !(peak.value > trough.value) {
                return Err(format!("peak {} not above trough {}", peak.quarter, trough.quarter));
            }
            if (b.quarter.since(a.quarter) as usize) < spec.min_phase {
                return Err(format!("phase {}..{} shorter than {}", a.quarter, b.quarter, spec.min_phase));
            }
        }
        for w in p.windows(3) {
            if (w[2].quarter.since(w[0].quarter) as usize) < spec.min_cycle {
                return Err(format!("cycle {}..{} shorter than {}", w[0].quarter, w[2].quarter, spec.min_cycle));
            }
        }
        Ok(())
    }

    pub fn peaks(&self) -> impl Iterator<Item = &TurningPoint> {
        self.points.iter().filter(|p| p.kind == TurnKind::Peak)
    }

    pub fn troughs(&self) -> impl Iterator<Item = &TurningPoint> {
        self.points.iter().filter(|p| p.kind == TurnKind::Trough)
    }

    pub fn open_phase(&self) -> Option<OpenPhase> {
        self.points.last().map(|p| match p.kind {
            TurnKind::Peak => OpenPhase::Recession { since: p.quarter },
            TurnKind::Trough => OpenPhase::Expansion { since: p.quarter },
        })
    }

    pub fn episode_dates(&self) -> Vec<EpisodeDates> {
        let quarters: Vec<(TurnKind, Quarter)> = self.points.iter().map(|p| (p.kind, p.quarter)).collect();
        episodes_from_turns(&self.country, &quarters)
    }
}

/// Pair an alternating turn list into recession episodes. A trailing peak
/// without trough (ongoing recession) yields no episode.
pub fn episodes_from_turns(country: &str, turns: &[(TurnKind, Quarter)]) -> Vec<EpisodeDates> {
    let mut out = Vec::new();
    for (i, &(kind, peak)) in turns.iter().enumerate() {
        if kind != TurnKind::Peak {
            continue;
        }
        let Some(&(TurnKind::Trough, trough)) = turns.get(i + 1) else { continue };
        let next_peak = match turns.get(i + 2) {
            Some(&(TurnKind::Peak, q)) => Some(q),
            _ => None,
        };
        let prev_trough = match i.checked_sub(1).map(|j| turns[j]) {
            Some((TurnKind::Trough, q)) => Some(q),
            _ => None,
        };
        out.push(EpisodeDates { country: country.to_string(), peak, trough, next_peak, prev_trough });
    }
    out
}

/// Interior local extrema. A peak beats every value up to `window`
/// quarters earlier strictly and is not exceeded by any value up to
/// `window` quarters later (so a flat top dates to its first quarter);
/// troughs mirror this. Quarters within `window` of either end are censored.
pub fn find_candidates(series: &QuarterlySeries, spec: &PhaseSpec) -> Result<Vec<TurningPoint>> {
    let y = series.values();
    let w = spec.window;
    let needed = 2 * w + 1;
    if y.len() < needed {
        return Err(Error::InsufficientData { needed, available: y.len() });
    }
    let mut out = Vec::new();
    for t in w..y.len() - w {
        let peak = (1..=w).all(|k| y[t] > y[t - k] && y[t] >= y[t + k]);
        let trough = (1..=w).all(|k| y[t] < y[t - k] && y[t] <= y[t + k]);
        let kind = match (peak, trough) {
            (true, _) => TurnKind::Peak,
            (_, true) => TurnKind::Trough,
            _ => continue,
        };
        out.push(TurningPoint { kind, quarter: series.quarter_at(t), value: y[t] });
    }
    Ok(out)
}

fn amplitude(a: &TurningPoint, b: &TurningPoint) -> f64 {
    match a.kind {
        TurnKind::Peak => a.value - b.value,
        TurnKind::Trough => b.value - a.value,
    }
}

/// Force alternation and the phase/cycle length rules.
///
/// Same-kind runs keep the higher peak (lower trough), earliest on ties.
/// Then, while any rule is violated, the adjacent peak/trough pair whose
/// removal would cure a violation and has the smallest peak-to-trough
/// amplitude is dropped.
pub fn enforce_rules(candidates: &[TurningPoint], spec: &PhaseSpec) -> Vec<TurningPoint> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|p| p.quarter);

    let mut pts: Vec<TurningPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        match pts.last_mut() {
            Some(last) if last.kind == p.kind => {
                let better = match p.kind {
                    TurnKind::Peak => p.value > last.value,
                    TurnKind::Trough => p.value < last.value,
                };
                if better {
                    *last = p;
                }
            }
            _ => pts.push(p),
        }
    }

    loop {
        let mut offending: Vec<usize> = Vec::new();
        for i in 0..pts.len().saturating_sub(1) {
            let gap = pts[i + 1].quarter.since(pts[i].quarter) as usize;
            if gap < spec.min_phase || amplitude(&pts[i], &pts[i + 1]) <= 0.0 {
                offending.push(i);
            }
        }
        for i in 0..pts.len().saturating_sub(2) {
            if (pts[i + 2].quarter.since(pts[i].quarter) as usize) < spec.min_cycle {
                offending.push(i);
                offending.push(i + 1);
            }
        }
        let Some(drop) = offending
            .into_iter()
            .min_by(|&a, &b| {
                amplitude(&pts[a], &pts[a + 1])
                    .total_cmp(&amplitude(&pts[b], &pts[b + 1]))
                    .then(a.cmp(&b))
            })
        else {
            break;
        };
        pts.drain(drop..drop + 2);
    }
    pts
}

pub fn date_cycles(series: &QuarterlySeries, spec: &PhaseSpec) -> Result<CycleChronology> {
    let candidates = find_candidates(series, spec)?;
    Ok(CycleChronology {
        country: series.country().to_string(),
        points: enforce_rules(&candidates, spec),
        sample_start: series.start(),
        sample_end: series.end(),
    })
}

pub fn phase_table(chronology: &CycleChronology) -> Vec<PhaseRow> {
    let p = &chronology.points;
    let mut rows = Vec::new();
    for i in 0..p.len() {
        if p[i].kind != TurnKind::Peak || i + 1 >= p.len() {
            continue;
        }
        let (peak, trough) = (p[i].quarter, p[i + 1].quarter);
        let prev_trough = i.checked_sub(1).map(|j| p[j].quarter);
        let exp_start = prev_trough.unwrap_or(chronology.sample_start);
        rows.push(PhaseRow {
            peak,
            trough,
            recession_duration: trough.since(peak),
            expansion_duration: peak.since(exp_start),
            expansion_censored: prev_trough.is_none(),
        });
    }
    rows
}
