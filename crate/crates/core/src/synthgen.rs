//! Seeded synthetic quarterly series with planted recessions.
//!
//! Log levels in per cent are `trend_growth * t + gap_t + noise_t`. The gap
//! is piecewise linear: each recession pulls it down over `duration`
//! quarters so the level itself falls by `amplitude`; what happens in the
//! following expansion depends on the [`DgpKind`]. Noise is white on
//! log-differences and accumulates.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dating::{CycleChronology, TurnKind, TurningPoint};
use crate::error::{Error, Result};
use crate::timeseries::{Panel, Quarter, QuarterlySeries, Transform, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgpKind {
    TrendOnly,
    /// Stationary AR(1) gap driven by `noise_sigma`; no planted recessions.
    ArCycle,
    /// Each drop is reversed by `recovery_fraction` in the next expansion.
    Plucking,
    /// Each drop is preceded by a boom of the same size; nothing recovers.
    BoomBust,
    /// Drops are never reversed.
    PermanentDrop,
}

impl fmt::Display for DgpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DgpKind::TrendOnly => "trend_only",
            DgpKind::ArCycle => "ar_cycle",
            DgpKind::Plucking => "plucking",
            DgpKind::BoomBust => "boom_bust",
            DgpKind::PermanentDrop => "permanent_drop",
        })
    }
}

impl FromStr for DgpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "trend_only" => DgpKind::TrendOnly,
            "ar_cycle" => DgpKind::ArCycle,
            "plucking" => DgpKind::Plucking,
            "boom_bust" => DgpKind::BoomBust,
            "permanent_drop" => DgpKind::PermanentDrop,
            _ => return Err(Error::Invalid(format!("unknown DGP kind {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedRecession {
    /// Peak quarter; the trough is `duration` quarters later.
    pub start: Quarter,
    pub duration: usize,
    /// Peak-to-trough fall of the log level, per cent.
    pub amplitude: f64,
    pub recovery_fraction: f64,
}

/// Where the expansion ramp (plucking recovery or pre-recession boom)
/// sits inside its expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryTiming {
    AfterTrough { delay: usize },
    BeforeNextPeak { lead: usize },
}

impl Default for RecoveryTiming {
    fn default() -> Self {
        RecoveryTiming::AfterTrough { delay: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub country: String,
    pub variable: Variable,
    pub start: Quarter,
    pub base_level: f64,
    pub kind: DgpKind,
    /// Per cent per quarter.
    pub trend_growth: f64,
    /// Per cent; standard deviation of the log-difference shocks.
    pub noise_sigma: f64,
    pub recessions: Vec<PlannedRecession>,
    /// Length of each recovery or boom ramp.
    pub recovery_quarters: usize,
    pub timing: RecoveryTiming,
    /// Persistence of the `ArCycle` gap.
    pub ar_phi: f64,
    pub seed: u64,
}

impl DgpSpec {
    pub fn new(country: impl Into<String>, kind: DgpKind, seed: u64) -> Self {
        DgpSpec {
            country: country.into(),
            variable: Variable::Gdp,
            start: Quarter::new(1970, 1).expect("valid quarter"),
            base_level: 100.0,
            kind,
            trend_growth: 0.5,
            noise_sigma: 0.0,
            recessions: Vec::new(),
            recovery_quarters: 8,
            timing: RecoveryTiming::default(),
            ar_phi: 0.8,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub levels: QuarterlySeries,
    /// Natural log of `levels`, computed without the round trip.
    pub log: QuarterlySeries,
    pub chronology: CycleChronology,
    /// Permanent level shift (per cent, negative = loss) booked at each trough.
    pub permanent_shifts: Vec<(Quarter, f64)>,
    /// Deterministic gap to the no-recession path, per cent.
    pub gap: Vec<f64>,
}

impl Synthetic {
    pub fn end_gap(&self) -> f64 {
        *self.gap.last().expect("non-empty")
    }
}

/// Contribution at `t` of a linear move of `total` spread over `len`
/// quarters after `from`.
fn ramp(t: usize, from: usize, len: usize, total: f64) -> f64 {
    if t <= from {
        0.0
    } else if t >= from + len {
        total
    } else {
        total * (t - from) as f64 / len as f64
    }
}

struct Placed {
    peak: usize,
    trough: usize,
    drop: f64,
    rec: PlannedRecession,
}

fn ramp_window(
    seg_start: usize,
    seg_end: usize,
    rq: usize,
    timing: RecoveryTiming,
) -> Result<usize> {
    let from = match timing {
        RecoveryTiming::AfterTrough { delay } => seg_start + delay,
        RecoveryTiming::BeforeNextPeak { lead } => seg_end
            .checked_sub(lead + rq)
            .ok_or_else(|| Error::Invalid(format!("ramp ending {lead} quarters before quarter {seg_end} starts before the sample")))?,
    };
    if from < seg_start || from + rq > seg_end {
        return Err(Error::Invalid(format!(
            "ramp over quarters {from}..{} does not fit in expansion {seg_start}..{seg_end}",
            from + rq
        )));
    }
    Ok(from)
}

pub fn generate(spec: &DgpSpec, length: usize) -> Result<Synthetic> {
    if length < 40 {
        return Err(Error::Invalid(format!("length {length} below 40")));
    }
    if !(spec.base_level > 0.0 && spec.base_level.is_finite()) {
        return Err(Error::Invalid("base level must be positive".into()));
    }
    if !(spec.noise_sigma >= 0.0 && spec.trend_growth.is_finite()) {
        return Err(Error::Invalid("noise sigma must be non-negative".into()));
    }
    let no_recessions = matches!(spec.kind, DgpKind::TrendOnly | DgpKind::ArCycle);
    if no_recessions && !spec.recessions.is_empty() {
        return Err(Error::Invalid(format!("{} takes no recessions", spec.kind)));
    }
    if spec.kind == DgpKind::ArCycle && !(spec.ar_phi.abs() < 1.0) {
        return Err(Error::Invalid(format!("ar_phi {} not stationary", spec.ar_phi)));
    }
    if !no_recessions && spec.recovery_quarters < 1 {
        return Err(Error::Invalid("recovery_quarters must be at least 1".into()));
    }

    let g = spec.trend_growth;
    let mut placed: Vec<Placed> = Vec::with_capacity(spec.recessions.len());
    for rec in &spec.recessions {
        if !(rec.amplitude > 0.0) || rec.duration < 1 || !(0.0..=1.0).contains(&rec.recovery_fraction) {
            return Err(Error::Invalid(format!("bad recession at {}: {rec:?}", rec.start)));
        }
        let peak = rec.start.since(spec.start);
        let trough = peak + rec.duration as i64;
        if peak < 1 || trough >= length as i64 {
            return Err(Error::Invalid(format!("recession at {} outside the sample", rec.start)));
        }
        if let Some(prev) = placed.last() {
            if peak <= prev.trough as i64 {
                return Err(Error::Invalid(format!("recession at {} overlaps the previous one", rec.start)));
            }
        }
        placed.push(Placed {
            peak: peak as usize,
            trough: trough as usize,
            drop: rec.amplitude + g * rec.duration as f64,
            rec: *rec,
        });
    }

    let mut gap = vec![0.0; length];
    let mut shifts = Vec::new();
    let rq = spec.recovery_quarters;
    for (i, p) in placed.iter().enumerate() {
        for (t, v) in gap.iter_mut().enumerate() {
            *v += ramp(t, p.peak, p.rec.duration, -p.drop);
        }
        let seg_end = placed.get(i + 1).map_or(length - 1, |n| n.peak);
        let seg_start = if i == 0 { 0 } else { placed[i - 1].trough };
        let permanent = match spec.kind {
            DgpKind::Plucking => {
                let from = ramp_window(p.trough, seg_end, rq, spec.timing)?;
                let up = p.rec.recovery_fraction * p.drop;
                for (t, v) in gap.iter_mut().enumerate() {
                    *v += ramp(t, from, rq, up);
                }
                up - p.drop
            }
            DgpKind::BoomBust => {
                let from = ramp_window(seg_start, p.peak, rq, spec.timing)?;
                for (t, v) in gap.iter_mut().enumerate() {
                    *v += ramp(t, from, rq, p.drop);
                }
                0.0
            }
            _ => -p.drop,
        };
        shifts.push((spec.start.add(p.trough as i64), permanent));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shocks: Vec<f64> = if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Invalid(e.to_string()))?;
        (0..length).map(|t| if t == 0 { 0.0 } else { normal.sample(&mut rng) }).collect()
    } else {
        vec![0.0; length]
    };

    let mut log_pct = Vec::with_capacity(length);
    let mut acc = 0.0;
    for t in 0..length {
        let stochastic = if spec.kind == DgpKind::ArCycle {
            acc = spec.ar_phi * acc + shocks[t];
            acc
        } else {
            acc += shocks[t];
            acc
        };
        log_pct.push(g * t as f64 + gap[t] + stochastic);
    }

    let ln_base = spec.base_level.ln();
    let log_values: Vec<f64> = log_pct.iter().map(|v| ln_base + v / 100.0).collect();
    let level_values: Vec<f64> = log_pct.iter().map(|v| spec.base_level * (v / 100.0).exp()).collect();
    let levels = QuarterlySeries::new(&spec.country, spec.variable.clone(), spec.start, level_values, Transform::Level)?;
    let log = QuarterlySeries::new(&spec.country, spec.variable.clone(), spec.start, log_values.clone(), Transform::Log)?;

    let mut points = Vec::with_capacity(2 * placed.len());
    for p in &placed {
        for (kind, t) in [(TurnKind::Peak, p.peak), (TurnKind::Trough, p.trough)] {
            points.push(TurningPoint { kind, quarter: spec.start.add(t as i64), value: log_values[t] });
        }
    }
    let chronology = CycleChronology {
        country: spec.country.clone(),
        points,
        sample_start: spec.start,
        sample_end: spec.start.add(length as i64 - 1),
    };
    Ok(Synthetic { levels, log, chronology, permanent_shifts: shifts, gap })
}

/// Read a simulation plan: one row per planted recession, columns
/// `country,kind,start,length,trend_growth,noise_sigma,recovery_quarters,peak,duration,amplitude,recovery_fraction`.
/// Rows for a country without recessions leave the last four fields empty.
/// Countries are seeded `seed`, `seed + 1`, ... in order of first appearance.
pub fn read_plan<R: Read>(reader: R, seed: u64) -> Result<Vec<(DgpSpec, usize)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let names = [
        "country", "kind", "start", "length", "trend_growth", "noise_sigma", "recovery_quarters", "peak", "duration",
        "amplitude", "recovery_fraction",
    ];
    let idx: Vec<usize> = names.iter().map(|n| col(n)).collect::<Result<_>>()?;

    let mut out: Vec<(DgpSpec, usize)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let perr = |what: &str, e: &dyn fmt::Display| Error::Parse { line, message: format!("{what}: {e}") };
        let num = |i: usize| -> Result<f64> { field(i).parse::<f64>().map_err(|e| perr(names[i], &e)) };
        let int = |i: usize| -> Result<usize> { field(i).parse::<usize>().map_err(|e| perr(names[i], &e)) };

        let country = field(0).to_string();
        let kind: DgpKind = field(1).parse().map_err(|e: Error| perr("kind", &e))?;
        let start: Quarter = field(2).parse().map_err(|e: Error| perr("start", &e))?;
        let length = int(3)?;
        let mut spec = DgpSpec::new(&country, kind, 0);
        spec.start = start;
        spec.trend_growth = num(4)?;
        spec.noise_sigma = num(5)?;
        spec.recovery_quarters = int(6)?;

        let pos = match out.iter().position(|(s, _)| s.country == country) {
            Some(p) => {
                let (prev, prev_len) = &out[p];
                if prev.kind != spec.kind || prev.start != spec.start || *prev_len != length
                    || prev.trend_growth != spec.trend_growth || prev.noise_sigma != spec.noise_sigma
                    || prev.recovery_quarters != spec.recovery_quarters
                {
                    return Err(Error::Parse { line, message: format!("{country}: settings differ from earlier rows") });
                }
                p
            }
            None => {
                spec.seed = seed.wrapping_add(out.len() as u64);
                out.push((spec, length));
                out.len() - 1
            }
        };
        if !field(7).is_empty() {
            let peak: Quarter = field(7).parse().map_err(|e: Error| perr("peak", &e))?;
            out[pos].0.recessions.push(PlannedRecession {
                start: peak,
                duration: int(8)?,
                amplitude: num(9)?,
                recovery_fraction: num(10)?,
            });
        }
    }
    for (spec, _) in &mut out {
        spec.recessions.sort_by_key(|r| r.start);
    }
    Ok(out)
}

/// Generate every planned country into one level panel.
pub fn generate_panel(plan: &[(DgpSpec, usize)]) -> Result<(Panel, Vec<Synthetic>)> {
    let mut panel = Panel::new();
    let mut out = Vec::with_capacity(plan.len());
    for (spec, length) in plan {
        let s = generate(spec, *length)?;
        panel.insert(s.levels.clone())?;
        out.push(s);
    }
    Ok((panel, out))
}
