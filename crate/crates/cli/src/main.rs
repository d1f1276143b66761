use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyclekit_core::episodes::{Group, Sample};
use cyclekit_core::{Error, FilterConfig, FilterKind, ForecastModel, PhaseSpec, Variable};

mod emit;
mod run;

#[derive(Parser, Debug)]
#[command(name = "cyclekit", version, about = "Business-cycle dating, cyclical filters and asymmetry regressions for quarterly panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Table format. Scatter and panel files are always CSV.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write every artifact into this directory instead of printing the
    /// main table to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Date peaks and troughs in every series of one variable.
    Date {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "gdp")]
        variable: Variable,
        #[command(flatten)]
        phase: PhaseArgs,
    },
    /// Cyclical component of log GDP per country.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// One row per recession with unemployment and output changes.
    Episodes(SourceArgs),
    /// Asymmetry regressions on unemployment (1) or output (2).
    Regress {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        table: u8,
        /// Restrict to one country group; the unemployment table shows all
        /// three when omitted.
        #[arg(long)]
        group: Option<Group>,
        #[arg(long, default_value = "full")]
        sample: Sample,
        /// Shift unemployment endpoints this many quarters later.
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
        lag: u8,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Industry regressions of cyclical value added at peaks and troughs.
    Sector {
        /// Panel with gva_<industry> rows (and gdp rows if no chronology).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        chronology: Option<PathBuf>,
        /// Pool all industries into one regression pair.
        #[arg(long)]
        pooled: bool,
        #[arg(long, default_value_t = 4)]
        lags: usize,
        #[arg(long, default_value_t = 8)]
        horizon: usize,
        #[command(flatten)]
        phase: PhaseArgs,
    },
    /// Generate a synthetic level panel from a plan CSV.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the planted chronology here.
        #[arg(long)]
        chronology_out: Option<PathBuf>,
    },
    /// Run the whole pipeline and write every table into --out-dir.
    Report {
        #[command(flatten)]
        source: SourceArgs,
        /// GVA panel for the industry regressions.
        #[arg(long)]
        gva: Option<PathBuf>,
        #[arg(long, default_value = "full")]
        sample: Sample,
    },
}

#[derive(Args, Debug, Clone)]
pub struct PhaseArgs {
    #[arg(long, default_value_t = 2)]
    window: usize,
    #[arg(long, default_value_t = 2)]
    min_phase: usize,
    #[arg(long, default_value_t = 5)]
    min_cycle: usize,
}

impl PhaseArgs {
    fn spec(&self) -> cyclekit_core::Result<PhaseSpec> {
        PhaseSpec::new(self.window, self.min_phase, self.min_cycle)
    }
}

#[derive(Args, Debug, Clone)]
pub struct FilterArgs {
    #[arg(long, default_value = "qw")]
    kind: FilterKind,
    #[arg(long, default_value_t = 4)]
    lags: usize,
    /// Horizon for the single-horizon filter and the trend measure.
    #[arg(long, default_value_t = 8)]
    horizon: usize,
    /// Horizon range averaged by the qw filter, as FROM:TO.
    #[arg(long, default_value = "4:12", value_parser = parse_range)]
    horizons: RangeInclusive<usize>,
    #[arg(long, default_value_t = 1600.0)]
    lambda: f64,
    #[arg(long)]
    min_window: Option<usize>,
    /// Forecast model for the trend measure: iterated or direct.
    #[arg(long, default_value = "iterated")]
    forecast: ForecastModel,
}

impl FilterArgs {
    fn config(&self) -> cyclekit_core::Result<FilterConfig> {
        let mut cfg = FilterConfig::new(self.lags, self.horizon, self.horizons.clone(), self.kind);
        cfg.hp_lambda = self.lambda;
        cfg.forecast = self.forecast;
        if let Some(w) = self.min_window {
            cfg.min_window = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected FROM:TO, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok(a..=b)
}

/// Where episode data comes from: a panel, an optional chronology, and/or
/// the bundled recession fixture.
#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Long-format panel with gdp and/or unemployment_rate rows.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Turning points as country,kind,quarter; dated from GDP when omitted.
    #[arg(long)]
    chronology: Option<PathBuf>,
    /// Named fixture (table_a1); CYCLEKIT_FIXTURES overrides its directory.
    #[arg(long)]
    fixture: Option<String>,
    #[command(flatten)]
    phase: PhaseArgs,
    #[command(flatten)]
    filter: FilterArgs,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().filter_map(|e| e.downcast_ref::<Error>()).any(Error::is_numerical);
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
