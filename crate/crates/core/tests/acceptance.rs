//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each (with indented sub-checks), and exits non-zero if any failed.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use cyclekit_core::dating::{date_cycles, CycleChronology, EpisodeDates, PhaseSpec};
use cyclekit_core::episodes::{
    build_episodes, bundled_table_a1, duration_stats, fixture_panel, run_output_regressions,
    run_unemployment_regressions, trend_growth_effect, EpisodeInputs, Group, Sample, Selection,
};
use cyclekit_core::filters::{cycle, hamilton_cycle, quast_wolters_cycle, FilterConfig, FilterKind};
use cyclekit_core::linalg::Matrix;
use cyclekit_core::ols::fit_ols;
use cyclekit_core::report::output_table;
use cyclekit_core::sector::{build_sector_episodes, sector_cycles, sector_regressions};
use cyclekit_core::synthgen::{generate, DgpKind, DgpSpec, PlannedRecession, RecoveryTiming};
use cyclekit_core::timeseries::{parse_quarter, Panel, Quarter, QuarterlySeries, Transform, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn new() -> Self {
        Criterion { checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push((ok, what.into()));
    }

    /// Reported, never counted against the criterion.
    fn soft(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push((true, format!("{} [soft: {}]", what.into(), if ok { "ok" } else { "mismatch" })));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.0)
    }
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn start() -> Quarter {
    parse_quarter("1950Q1").unwrap()
}

// 1 ---------------------------------------------------------------------

fn unemployment_fixture() -> Criterion {
    let mut c = Criterion::new();
    let panel = fixture_panel(&bundled_table_a1()).unwrap();
    let fit = |g| run_unemployment_regressions(&panel, &Selection { group: g, sample: Sample::Full, lag: 0 }, None).unwrap();
    let (all, flex, rem) = (fit(Group::All), fit(Group::Flexible), fit(Group::Remaining));

    let f = &flex.expansion_on_recession.result;
    c.check(
        within(f.slope(), -0.8040, 0.15) && f.slope_p() < 0.01,
        format!("flexible expansion-on-recession slope {:.4} (target -0.8040 +-0.15), p {:.4} < 0.01", f.slope(), f.slope_p()),
    );
    let a = &all.expansion_on_recession.result;
    c.check(
        a.slope() < 0.0 && within(a.slope(), -0.6045, 0.15),
        format!("all-country expansion-on-recession slope {:.4} (target -0.6045 +-0.15)", a.slope()),
    );
    let r = &rem.expansion_on_recession.result;
    c.check(
        within(r.slope(), -0.4868, 0.20) && r.slope_p() >= 0.05,
        format!("remaining expansion-on-recession slope {:.4} (target -0.4868 +-0.20), p {:.4} >= 0.05", r.slope(), r.slope_p()),
    );
    for (name, fit) in [("all", &all), ("flexible", &flex), ("remaining", &rem)] {
        let x = &fit.recession_on_expansion.result;
        c.check(
            x.slope_p() >= 0.05,
            format!("{name} recession-on-expansion slope {:.4}, |t| {:.3}, p {:.4} >= 0.05", x.slope(), x.t_stats[1].abs(), x.slope_p()),
        );
    }
    let counts = [
        (a.n_obs, 60),
        (f.n_obs, 25),
        (r.n_obs, 35),
        (all.recession_on_expansion.result.n_obs, 61),
        (flex.recession_on_expansion.result.n_obs, 25),
        (rem.recession_on_expansion.result.n_obs, 36),
    ];
    let ok = counts.iter().all(|&(n, t)| (n as i64 - t).abs() <= 4);
    let shown: Vec<String> = counts.iter().map(|(n, t)| format!("{n}/{t}")).collect();
    c.check(ok, format!("observation counts ours/published {} within +-4", shown.join(" ")));
    c
}

// 2 ---------------------------------------------------------------------

fn durations() -> Criterion {
    let mut c = Criterion::new();
    let s = duration_stats(&fixture_panel(&bundled_table_a1()).unwrap()).unwrap();
    c.check(in_range(s.mean_recession, 3.4, 3.8), format!("mean recession {:.4} in [3.4, 3.8]", s.mean_recession));
    c.check(in_range(s.mean_expansion, 21.0, 24.0), format!("mean expansion {:.4} in [21, 24]", s.mean_expansion));
    let l = s.longest_expansion.unwrap();
    c.check(
        l.quarters == 114 && l.country == "AU" && l.start.to_string() == "1991Q2" && l.end.to_string() == "2019Q4",
        format!("longest expansion {} {}-{} = {} quarters", l.country, l.start, l.end, l.quarters),
    );
    c
}

// 3 ---------------------------------------------------------------------

// Trend-only stretch before the first recession, long enough that the
// filter and forecast regressions are estimated on clean data.
const OUTPUT_BURN: i64 = 200;
const SECTOR_BURN: i64 = 160;

fn output_panel(kind: DgpKind, recovery: f64, seed: u64) -> (Vec<CycleChronology>, BTreeMap<String, QuarterlySeries>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pattern = [1.0, 1.0, 3.0, 3.0, 1.0];
    let mut chrons = Vec::new();
    let mut logs = BTreeMap::new();
    for i in 0..12 {
        let country = format!("C{i:02}");
        let mut spec = DgpSpec::new(&country, kind, seed * 100 + i);
        spec.start = start();
        spec.trend_growth = 0.5;
        spec.noise_sigma = 0.05;
        spec.recovery_quarters = 8;
        for k in 0..5 {
            let peak = OUTPUT_BURN + 48 * k + rng.random_range(-4..=4);
            spec.recessions.push(PlannedRecession {
                start: start().add(peak),
                duration: 3,
                amplitude: pattern[k as usize] * rng.random_range(0.8..1.2),
                recovery_fraction: recovery,
            });
        }
        let s = generate(&spec, (OUTPUT_BURN + 5 * 48 + 30) as usize).unwrap();
        chrons.push(s.chronology);
        logs.insert(country, s.log);
    }
    (chrons, logs)
}

fn output_regressions_on(chrons: &[CycleChronology], logs: &BTreeMap<String, QuarterlySeries>) -> cyclekit_core::episodes::OutputRegressions {
    let cfg = FilterConfig::default();
    let cycles = logs.iter().map(|(c, y)| (c.clone(), quast_wolters_cycle(y, &cfg).unwrap())).collect();
    let dates: Vec<_> = chrons.iter().flat_map(|c| c.episode_dates()).collect();
    let inputs = EpisodeInputs { output_cycles: Some(&cycles), log_gdp: Some(logs), filter: cfg, ..Default::default() };
    let panel = build_episodes(&dates, &inputs).unwrap();
    run_output_regressions(&panel, &Selection::default()).unwrap()
}

fn output_synthetic() -> Criterion {
    let mut c = Criterion::new();
    let (chrons, logs) = output_panel(DgpKind::Plucking, 1.0, 1);
    let pl = output_regressions_on(&chrons, &logs);
    let s3 = pl.expansion_on_recession.result.slope();
    let s4 = pl.recession_on_expansion.result.slope();
    c.check(in_range(s3, -1.1, -0.9), format!("plucking: expansion-on-recession slope {s3:.4} in [-1.1, -0.9]"));
    c.check(in_range(s4, -0.1, 0.1), format!("plucking: recession-on-expansion slope {s4:.4} in [-0.1, 0.1]"));

    let (chrons, logs) = output_panel(DgpKind::PermanentDrop, 0.0, 2);
    let pd = output_regressions_on(&chrons, &logs);
    let s3 = pd.expansion_on_recession.result.slope();
    let s5 = pd.trend_on_recession.result.slope();
    c.check(in_range(s3, -0.1, 0.1), format!("permanent drop: expansion-on-recession slope {s3:.4} in [-0.1, 0.1]"));
    c.check(in_range(s5, 0.9, 1.1), format!("permanent drop: trend-on-recession slope {s5:.4} in [0.9, 1.1]"));

    // End-to-end on a partial-recovery panel standing in for user data:
    // dated from the series, then the three-column output table.
    let (_, logs) = output_panel(DgpKind::Plucking, 0.5, 3);
    let cfg = FilterConfig::default();
    let chrons: Vec<_> = logs.values().map(|y| date_cycles(y, &PhaseSpec::default()).unwrap()).collect();
    let cycles = logs.iter().map(|(c, y)| (c.clone(), cycle(y, &cfg).unwrap())).collect();
    let dates: Vec<_> = chrons.iter().flat_map(|c| c.episode_dates()).collect();
    let inputs = EpisodeInputs { output_cycles: Some(&cycles), log_gdp: Some(&logs), filter: cfg, ..Default::default() };
    let panel = build_episodes(&dates, &inputs).unwrap();
    let (table, fits) = output_table(&panel, &Selection::default()).unwrap();
    c.check(table.headers.len() == 4 && table.rows.len() == 6, "pipeline emits a three-column output table");
    let (a, b, t) = (fits[0].result.slope(), fits[1].result.slope(), fits[2].result.slope());
    c.soft(
        a < 0.0 && b.abs() < 0.3 && t > 0.0,
        format!("slope signs on partial-recovery pipeline run: {a:.4} (-), {b:.4} (~0), {t:.4} (+)"),
    );
    c
}

// 4 ---------------------------------------------------------------------

fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().copied().chain((0..n).map(|j| if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, p);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                let pivot = m[col].clone();
                for (v, pv) in m[r].iter_mut().zip(pivot) {
                    *v -= f * pv;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, k) = (x.len(), x[0].len());
    let xtx: Vec<Vec<f64>> = (0..k).map(|a| (0..k).map(|b| (0..n).map(|i| x[i][a] * x[i][b]).sum()).collect()).collect();
    let xty: Vec<f64> = (0..k).map(|a| (0..n).map(|i| x[i][a] * y[i]).sum()).collect();
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let e: Vec<f64> = (0..n).map(|i| y[i] - (0..k).map(|a| x[i][a] * beta[a]).sum::<f64>()).collect();
    let meat: Vec<Vec<f64>> =
        (0..k).map(|a| (0..k).map(|b| (0..n).map(|i| e[i] * e[i] * x[i][a] * x[i][b]).sum()).collect()).collect();
    let scale = n as f64 / (n - k) as f64;
    let se = (0..k)
        .map(|a| {
            let v: f64 = (0..k).flat_map(|b| (0..k).map(move |c| (b, c))).map(|(b, c)| inv[a][b] * meat[b][c] * inv[c][a]).sum();
            (v * scale).sqrt()
        })
        .collect();
    (beta, se)
}

fn ols_oracle_equivalence() -> Criterion {
    let mut c = Criterion::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_b, mut worst_se) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let k = rng.random_range(1..=4);
        let n = rng.random_range(k + 2..=50);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| std::iter::once(1.0).chain((1..k).map(|_| rng.random_range(-3.0..3.0))).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| r.iter().sum::<f64>() + rng.random_range(-1.0..1.0) * (1.0 + r.last().unwrap().abs()))
            .collect();
        let fit = fit_ols(&Matrix::from_rows(&x), &y).unwrap();
        let (beta, se) = ols_oracle(&x, &y);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300).max(1.0);
        for j in 0..k {
            worst_b = worst_b.max(rel(fit.coefficients[j], beta[j]));
            worst_se = worst_se.max(rel(fit.robust_se[j], se[j]));
        }
    }
    c.check(worst_b <= 1e-10, format!("max relative coefficient error {worst_b:.2e} <= 1e-10"));
    c.check(worst_se <= 1e-10, format!("max relative HC1 SE error {worst_se:.2e} <= 1e-10"));
    c
}

// 5 ---------------------------------------------------------------------

fn dating_suite() -> Criterion {
    let mut c = Criterion::new();
    let spec = PhaseSpec::default();
    let (mut planted, mut found, mut valid) = (0usize, 0usize, 0usize);
    let panels = 500;
    for seed in 0..panels {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut dgp = DgpSpec::new("XX", DgpKind::Plucking, seed);
        dgp.start = start();
        dgp.noise_sigma = rng.random_range(0.0..=0.1);
        dgp.recovery_quarters = 6;
        let mut t = 40;
        for _ in 0..3 {
            let duration = rng.random_range(2..=4);
            dgp.recessions.push(PlannedRecession {
                start: start().add(t),
                duration,
                amplitude: rng.random_range(1.0..3.0),
                recovery_fraction: 1.0,
            });
            t += duration as i64 + rng.random_range(16..28);
        }
        let s = generate(&dgp, t as usize + 20).unwrap();
        let chron = date_cycles(&s.log, &spec).unwrap();
        if chron.validate(&spec).is_ok() {
            valid += 1;
        }
        for p in &s.chronology.points {
            planted += 1;
            if chron.points.iter().any(|d| d.kind == p.kind && d.quarter == p.quarter) {
                found += 1;
            }
        }
    }
    let share = found as f64 / planted as f64;
    c.check(share >= 0.95, format!("{found}/{planted} planted turning points recovered exactly ({:.2}%) >= 95%", 100.0 * share));
    c.check(valid == panels as usize, format!("{valid}/{panels} chronologies satisfy alternation/min-phase/min-cycle"));
    c
}

// 6 ---------------------------------------------------------------------

fn noisy_log(seed: u64, n: usize) -> QuarterlySeries {
    let mut dgp = DgpSpec::new("XX", DgpKind::Plucking, seed);
    dgp.start = start();
    dgp.noise_sigma = 0.3;
    dgp.recessions.push(PlannedRecession { start: start().add(50), duration: 3, amplitude: 2.0, recovery_fraction: 1.0 });
    generate(&dgp, n).unwrap().log
}

fn filter_identities() -> Criterion {
    let mut c = Criterion::new();
    let cfg = FilterConfig::default();
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let y = noisy_log(seed, 100);
        let qw = quast_wolters_cycle(&y, &cfg).unwrap();
        let outs: Vec<_> = (4..=12)
            .map(|h| hamilton_cycle(&y, &FilterConfig { horizon: h, kind: FilterKind::Hamilton, ..cfg.clone() }).unwrap())
            .collect();
        for (i, v) in qw.cycle.values().iter().enumerate() {
            let m = outs.iter().map(|o| o.cycle.values()[i]).sum::<f64>() / 9.0;
            worst = worst.max((v - m).abs());
        }
    }
    c.check(worst <= 1e-12, format!("quast-wolters vs mean of nine hamilton horizons: max diff {worst:.2e} <= 1e-12"));

    let mut worst = 0.0f64;
    for (a, b) in [(4.6, 0.005), (0.0, 0.01), (2.3, -0.002), (7.0, 0.0)] {
        let y = QuarterlySeries::new("XX", Variable::Gdp, start(), (0..90).map(|t| a + b * t as f64).collect(), Transform::Log)
            .unwrap();
        for kind in [FilterKind::Hamilton, FilterKind::QuastWolters, FilterKind::HpOneSided] {
            let out = cycle(&y, &FilterConfig { kind, ..cfg.clone() }).unwrap();
            worst = out.cycle.values().iter().fold(worst, |w, v| w.max(v.abs()));
        }
    }
    c.check(worst <= 1e-8, format!("linear log-trends: max |cycle| {worst:.2e} <= 1e-8 for all filters"));

    let mut exact = true;
    for seed in 0..5 {
        let y = noisy_log(100 + seed, 90);
        for kind in [FilterKind::Hamilton, FilterKind::QuastWolters, FilterKind::HpOneSided] {
            let k = FilterConfig { kind, ..cfg.clone() };
            let full = cycle(&y, &k).unwrap();
            for cut in [40, 55, 70, 89] {
                let short = cycle(&y.truncate_to(y.quarter_at(cut)).unwrap(), &k).unwrap();
                exact &= short.cycle.values() == &full.cycle.values()[..short.cycle.len()];
            }
        }
    }
    c.check(exact, "one-sidedness: truncated samples reproduce earlier cycle values bit for bit");
    c
}

// 7 ---------------------------------------------------------------------

fn trend_measure() -> Criterion {
    let mut c = Criterion::new();
    let cfg = FilterConfig::default();
    let mut worst = 0.0f64;
    for g in [0.0, 0.25, 0.5, 1.0] {
        let s = generate(&DgpSpec { start: start(), trend_growth: g, ..DgpSpec::new("XX", DgpKind::TrendOnly, 0) }, 140).unwrap();
        for p in [40, 60, 80, 100] {
            worst = worst.max(trend_growth_effect(&s.log, start().add(p), &cfg).unwrap().value.abs());
        }
    }
    c.check(worst <= 1e-8, format!("recession-free trends: max |effect| {worst:.2e} <= 1e-8"));

    for g in [0.0, 0.5] {
        let mut spec = DgpSpec::new("XX", DgpKind::PermanentDrop, 0);
        spec.start = start();
        spec.trend_growth = g;
        let peak = start().add(80);
        spec.recessions.push(PlannedRecession { start: peak, duration: 1, amplitude: 3.0 - g, recovery_fraction: 0.0 });
        let s = generate(&spec, 140).unwrap();
        let shift = s.permanent_shifts[0].1;
        let t = trend_growth_effect(&s.log, peak, &cfg).unwrap();
        c.check(
            within(t.value, shift, 0.5),
            format!("planted {shift:.1}% permanent drop at growth {g}: measured {:.4} within +-0.5", t.value),
        );
        let target = peak.add(20);
        c.check(
            t.at_peak.target == target && t.after.target == target && t.at_peak.origin == peak && t.after.origin == peak.add(12),
            format!("legs {}+{} and {}+{} both target {target}", t.at_peak.origin, t.at_peak.horizon, t.after.origin, t.after.horizon),
        );
    }
    c
}

// 8 ---------------------------------------------------------------------

fn sector_panel(seed: u64) -> (Panel, Vec<EpisodeDates>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pattern = [1.0, 1.0, 3.0, 3.0, 1.0];
    let mut panel = Panel::new();
    let mut dates = Vec::new();
    let d = 8usize;
    for ci in 0..12u64 {
        let country = format!("C{ci:02}");
        let mut peaks = Vec::new();
        let mut p = SECTOR_BURN;
        for _ in 0..8 {
            peaks.push(p);
            p += d as i64 + rng.random_range(16..32);
        }
        let length = p as usize + 20;
        let amps: Vec<f64> = (0..8).map(|k| pattern[(k + ci as usize) % 5] * rng.random_range(0.8..1.2)).collect();
        let mut chron = None;
        for (slug, kind) in [("manufacturing", DgpKind::Plucking), ("construction", DgpKind::BoomBust)] {
            let mut spec = DgpSpec::new(&country, kind, seed * 1000 + ci * 2 + (kind == DgpKind::BoomBust) as u64);
            spec.variable = Variable::Gva(slug.into());
            spec.start = start();
            spec.noise_sigma = 0.05;
            spec.recovery_quarters = 3;
            spec.timing = RecoveryTiming::BeforeNextPeak { lead: 5 };
            for (k, &pk) in peaks.iter().enumerate() {
                spec.recessions.push(PlannedRecession {
                    start: start().add(pk),
                    duration: d,
                    amplitude: amps[k],
                    recovery_fraction: 1.0,
                });
            }
            let s = generate(&spec, length).unwrap();
            chron.get_or_insert(s.chronology);
            panel.insert(s.levels).unwrap();
        }
        dates.extend(chron.unwrap().episode_dates());
    }
    (panel, dates)
}

fn sector_suite() -> Criterion {
    let mut c = Criterion::new();
    let (panel, dates) = sector_panel(8);
    let cycles = sector_cycles(&panel, &FilterConfig::hamilton(4, 8)).unwrap();
    let eps = build_sector_episodes(&dates, &cycles);
    let pairs = sector_regressions(&eps, true).unwrap();
    let get = |slug: &str| pairs.iter().find(|p| p.industry == slug).unwrap();
    let boom = get("construction");
    c.check(
        in_range(boom.beta_recovery(), -0.15, 0.15),
        format!("boom-bust: recovery slope {:.4} in [-0.15, 0.15]", boom.beta_recovery()),
    );
    c.check(
        in_range(boom.beta_bust(), -1.15, -0.85),
        format!("boom-bust: bust slope {:.4} in [-1.15, -0.85]", boom.beta_bust()),
    );
    let pl = get("manufacturing");
    c.check(
        in_range(pl.beta_recovery(), -1.1, -0.9),
        format!("full recovery: recovery slope {:.4} in [-1.1, -0.9]", pl.beta_recovery()),
    );
    c
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let criteria: [(&str, fn() -> Criterion); 8] = [
        ("1 unemployment regressions on the recession-timeline fixture", unemployment_fixture),
        ("2 duration statistics from the fixture", durations),
        ("3 output regressions on synthetic plucking / permanent-drop panels", output_synthetic),
        ("4 OLS oracle equivalence", ols_oracle_equivalence),
        ("5 dating property suite", dating_suite),
        ("6 filter identities", filter_identities),
        ("7 trend-scarring measure", trend_measure),
        ("8 sector regressions on synthetic GVA", sector_suite),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let c = run();
        let ok = c.passed();
        failed += usize::from(!ok);
        println!("{} criterion {name}", if ok { "PASS" } else { "FAIL" });
        for (ok, what) in &c.checks {
            println!("    {} {what}", if *ok { "ok  " } else { "FAIL" });
        }
    }
    println!("acceptance: {} of 8 criteria passed in {:.1}s", 8 - failed, t0.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
