use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};
use cyclekit_core::dating::{date_cycles, CycleChronology, EpisodeDates, PhaseSpec, TurnKind};
use cyclekit_core::episodes::{
    build_episodes, bundled_table_a1, duration_stats, fixture_discrepancies, fixture_panel, read_table_a1,
    run_unemployment_regressions, EpisodeInputs, EpisodePanel, FixtureRow, Group, Sample, Selection,
};
use cyclekit_core::filters::{cycle, FilterConfig, FilterOutput};
use cyclekit_core::report::{
    chronology_table, discrepancy_table, duration_table, episode_dates_from, episodes_table, filter_table, fmt4,
    output_table, read_chronology_csv, regression_table, scatter_table, sector_table, unemployment_table, Table,
};
use cyclekit_core::sector::{build_sector_episodes, sector_cycles, sector_regressions, SectorEpisode};
use cyclekit_core::synthgen::{generate_panel, read_plan};
use cyclekit_core::timeseries::{self, to_log, Panel, QuarterlySeries, Variable};
use cyclekit_core::Error;

use crate::emit::{emit, Artifact};
use crate::{Cli, Command, SourceArgs};

pub const FIXTURE_ENV: &str = "CYCLEKIT_FIXTURES";

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(Error::from).with_context(|| format!("opening {}", path.display()))
}

fn load_panel(path: &Path) -> Result<Panel> {
    timeseries::read_csv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_fixture(name: &str) -> Result<Vec<FixtureRow>> {
    if name != "table_a1" {
        return Err(Error::Invalid(format!("unknown fixture {name:?} (available: table_a1)")).into());
    }
    match std::env::var_os(FIXTURE_ENV) {
        Some(dir) => {
            let path = Path::new(&dir).join(format!("{name}.csv"));
            read_table_a1(open(&path)?).with_context(|| format!("reading {}", path.display()))
        }
        None => Ok(bundled_table_a1()),
    }
}

fn fixture_chronology(rows: &[FixtureRow]) -> Table {
    let mut t = Table::new(["country", "kind", "quarter"]);
    for r in rows {
        t.push([r.country.clone(), TurnKind::Peak.to_string(), r.peak.to_string()]);
        t.push([r.country.clone(), TurnKind::Trough.to_string(), r.trough.to_string()]);
    }
    t
}

struct Dated {
    table: Table,
    dates: Vec<EpisodeDates>,
}

/// Recession dates from a chronology file if given, else by dating every
/// GDP series in `panel`.
fn dated(panel: Option<&Panel>, chronology: Option<&Path>, spec: &PhaseSpec) -> Result<Dated> {
    if let Some(path) = chronology {
        let turns = read_chronology_csv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
        let mut table = Table::new(["country", "kind", "quarter"]);
        for (c, ts) in &turns {
            for (k, q) in ts {
                table.push([c.clone(), k.to_string(), q.to_string()]);
            }
        }
        return Ok(Dated { table, dates: episode_dates_from(&turns) });
    }
    let gdp: Vec<&QuarterlySeries> = panel.map(|p| p.variable(&Variable::Gdp).collect()).unwrap_or_default();
    if gdp.is_empty() {
        return Err(Error::MissingInput("dating needs gdp rows in --input or a --chronology file".into()).into());
    }
    let chrons = gdp
        .iter()
        .map(|s| date_cycles(s, spec).with_context(|| format!("dating {}", s.label())))
        .collect::<Result<Vec<CycleChronology>>>()?;
    Ok(Dated { table: chronology_table(&chrons), dates: chrons.iter().flat_map(|c| c.episode_dates()).collect() })
}

/// Everything derived from an input panel.
struct Computed {
    dated: Dated,
    cycles: BTreeMap<String, FilterOutput>,
    episodes: EpisodePanel,
    has_unemployment: bool,
    has_gdp: bool,
}

fn compute(panel: &Panel, chronology: Option<&Path>, src: &SourceArgs) -> Result<Computed> {
    let spec = src.phase.spec()?;
    let cfg = src.filter.config()?;
    let dated = dated(Some(panel), chronology, &spec)?;
    let logs: BTreeMap<String, QuarterlySeries> = panel
        .variable(&Variable::Gdp)
        .map(|s| Ok((s.country().to_string(), to_log(s)?)))
        .collect::<Result<_>>()?;
    let cycles = output_cycles(&logs, &cfg)?;
    let has_unemployment = panel.variable(&Variable::UnemploymentRate).next().is_some();
    let has_gdp = !logs.is_empty();
    let inputs = EpisodeInputs {
        unemployment: has_unemployment.then_some(panel),
        output_cycles: has_gdp.then_some(&cycles),
        log_gdp: has_gdp.then_some(&logs),
        filter: cfg,
    };
    let episodes = build_episodes(&dated.dates, &inputs).context("building episodes")?;
    Ok(Computed { dated, cycles, episodes, has_unemployment, has_gdp })
}

fn output_cycles(logs: &BTreeMap<String, QuarterlySeries>, cfg: &FilterConfig) -> Result<BTreeMap<String, FilterOutput>> {
    logs.iter()
        .map(|(c, y)| Ok((c.clone(), cycle(y, cfg).with_context(|| format!("filtering {c}/gdp"))?)))
        .collect()
}

fn unemployment_artifacts(
    panel: &EpisodePanel,
    group: Option<Group>,
    sample: Sample,
    lag: usize,
    unemployment: Option<&Panel>,
) -> Result<Vec<Artifact>> {
    let (table, fits) = match group {
        None => unemployment_table(panel, sample, lag, unemployment)?,
        Some(group) => {
            let f = run_unemployment_regressions(panel, &Selection { group, sample, lag }, unemployment)?;
            let t = regression_table(
                "Previous phase du",
                &[
                    (format!("du_expansion ({group})"), &f.expansion_on_recession.result),
                    (format!("du_recession ({group})"), &f.recession_on_expansion.result),
                ],
            );
            (t, vec![f.expansion_on_recession, f.recession_on_expansion])
        }
    };
    Ok(vec![
        Artifact::regression("unemployment_regressions", table),
        Artifact::csv("unemployment_scatter", scatter_table(&fits)),
    ])
}

fn sector_episode_table(eps: &[SectorEpisode]) -> Table {
    let mut t = Table::new(["country", "industry", "peak", "trough", "next_peak", "r", "e"]);
    let o = |v: Option<f64>| v.map(fmt4).unwrap_or_default();
    for e in eps {
        t.push([
            e.country.clone(),
            e.industry.clone(),
            e.peak.to_string(),
            e.trough.to_string(),
            e.next_peak.map(|q| q.to_string()).unwrap_or_default(),
            o(e.r),
            o(e.e),
        ]);
    }
    t
}

fn sector_artifacts(gva: &Panel, dates: &[EpisodeDates], cfg: &FilterConfig, pooled: bool) -> Result<Vec<Artifact>> {
    let cycles = sector_cycles(gva, cfg)?;
    let eps = build_sector_episodes(dates, &cycles);
    let pairs = sector_regressions(&eps, !pooled)?;
    if pairs.is_empty() {
        log::warn!("no industry had enough recession/expansion pairs");
    }
    Ok(vec![Artifact::table("sector", sector_table(&pairs)), Artifact::csv("sector_episodes", sector_episode_table(&eps))])
}

pub fn run(cli: &Cli) -> Result<()> {
    let out_dir = cli.out_dir.as_deref();
    let artifacts = match &cli.command {
        Command::Date { input, variable, phase } => {
            let spec = phase.spec()?;
            let panel = load_panel(input)?;
            let chrons = panel
                .variable(variable)
                .map(|s| date_cycles(s, &spec).with_context(|| format!("dating {}", s.label())))
                .collect::<Result<Vec<_>>>()?;
            vec![Artifact::csv("chronology", chronology_table(&chrons))]
        }
        Command::Filter { input, filter } => {
            let cfg = filter.config()?;
            let panel = load_panel(input)?;
            let logs = panel
                .variable(&Variable::Gdp)
                .map(|s| Ok((s.country().to_string(), to_log(s)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            vec![Artifact::csv("cycles", filter_table(&output_cycles(&logs, &cfg)?))]
        }
        Command::Episodes(src) => {
            let panel = match (&src.fixture, &src.input) {
                (Some(name), _) => fixture_panel(&load_fixture(name)?)?,
                (None, Some(input)) => compute(&load_panel(input)?, src.chronology.as_deref(), src)?.episodes,
                (None, None) => return Err(Error::MissingInput("episodes need --input or --fixture".into()).into()),
            };
            vec![Artifact::table("episodes", episodes_table(&panel))]
        }
        Command::Regress { table, group, sample, lag, source } => {
            let panel = source.input.as_deref().map(load_panel).transpose()?;
            let lag = *lag as usize;
            if *table == 1 {
                let episodes = match (&source.fixture, &panel) {
                    (Some(name), _) => fixture_panel(&load_fixture(name)?)?,
                    (None, Some(p)) if p.variable(&Variable::UnemploymentRate).next().is_some() => {
                        compute(p, source.chronology.as_deref(), source)?.episodes
                    }
                    _ => {
                        return Err(Error::MissingInput(
                            "unemployment regressions need unemployment_rate rows in --input or --fixture table_a1".into(),
                        )
                        .into())
                    }
                };
                unemployment_artifacts(&episodes, *group, *sample, lag, panel.as_ref())?
            } else {
                let p = panel
                    .as_ref()
                    .filter(|p| p.variable(&Variable::Gdp).next().is_some())
                    .ok_or_else(|| Error::MissingInput("output regressions need gdp rows in --input".into()))?;
                if lag != 0 {
                    return Err(Error::Invalid("--lag applies to the unemployment regressions only".into()).into());
                }
                let c = compute(p, source.chronology.as_deref(), source)?;
                let sel = Selection { group: group.unwrap_or_default(), sample: *sample, lag: 0 };
                let (t, fits) = output_table(&c.episodes, &sel)?;
                vec![Artifact::regression("output_regressions", t), Artifact::csv("output_scatter", scatter_table(&fits))]
            }
        }
        Command::Sector { input, chronology, pooled, lags, horizon, phase } => {
            let gva = load_panel(input)?;
            let d = dated(Some(&gva), chronology.as_deref(), &phase.spec()?)?;
            sector_artifacts(&gva, &d.dates, &FilterConfig::hamilton(*lags, *horizon), *pooled)?
        }
        Command::Simulate { spec, seed, chronology_out } => {
            let plan = read_plan(open(spec)?, *seed).with_context(|| format!("reading {}", spec.display()))?;
            let (panel, synth) = generate_panel(&plan)?;
            let mut buf = Vec::new();
            timeseries::write_csv(&panel, &mut buf)?;
            let chrons: Vec<CycleChronology> = synth.into_iter().map(|s| s.chronology).collect();
            if let Some(path) = chronology_out {
                std::fs::write(path, chronology_table(&chrons).to_csv_string())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            vec![Artifact::text("panel", String::from_utf8(buf).expect("csv is utf-8"))]
        }
        Command::Report { source, gva, sample } => {
            if out_dir.is_none() {
                return Err(Error::Invalid("report writes several files; pass --out-dir".into()).into());
            }
            report(source, gva.as_deref(), *sample)?
        }
    };
    emit(&artifacts, cli.format, out_dir)
}

/// Every table the inputs allow. Nothing is written unless all of them
/// succeed.
fn report(src: &SourceArgs, gva: Option<&Path>, sample: Sample) -> Result<Vec<Artifact>> {
    if src.fixture.is_none() && src.input.is_none() && gva.is_none() {
        return Err(Error::MissingInput("report needs --fixture, --input or --gva".into()).into());
    }
    let mut out = Vec::new();
    let mut durations = None;
    if let Some(name) = &src.fixture {
        let rows = load_fixture(name)?;
        let fp = fixture_panel(&rows)?;
        out.push(Artifact::csv("fixture_chronology", fixture_chronology(&rows)));
        out.extend(unemployment_artifacts(&fp, None, sample, 0, None)?);
        durations = Some(duration_stats(&fp)?);
        out.push(Artifact::csv("fixture_discrepancies", discrepancy_table(&fixture_discrepancies(&rows))));
    }

    let panel = src.input.as_deref().map(load_panel).transpose()?;
    let mut dates = None;
    if let Some(p) = &panel {
        let c = compute(p, src.chronology.as_deref(), src)?;
        out.push(Artifact::csv("chronology", c.dated.table.clone()));
        if c.has_gdp {
            out.push(Artifact::csv("cycles", filter_table(&c.cycles)));
        }
        out.push(Artifact::table("episodes", episodes_table(&c.episodes)));
        if c.has_gdp {
            let (t, fits) = output_table(&c.episodes, &Selection { sample, ..Default::default() })?;
            out.push(Artifact::regression("output_regressions", t));
            out.push(Artifact::csv("output_scatter", scatter_table(&fits)));
        }
        if src.fixture.is_none() {
            if c.has_unemployment {
                out.extend(unemployment_artifacts(&c.episodes, None, sample, 0, Some(p))?);
            }
            durations = Some(duration_stats(&c.episodes)?);
        }
        dates = Some(c.dated.dates);
    }

    if let Some(path) = gva {
        let g = load_panel(path)?;
        let dates = match dates {
            Some(d) => d,
            None => dated(Some(&g), src.chronology.as_deref(), &src.phase.spec()?)?.dates,
        };
        out.extend(sector_artifacts(&g, &dates, &FilterConfig::hamilton(src.filter.lags, src.filter.horizon), false)?);
    }
    if let Some(d) = durations {
        out.push(Artifact::table("durations", duration_table(&d)));
    }
    Ok(out)
}
