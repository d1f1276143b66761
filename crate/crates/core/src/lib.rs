//! Business-cycle toolkit for quarterly macro panels: turning-point dating,
//! one-sided cycle filters, robust OLS, and the episode and sector
//! regressions used to test for plucking asymmetry.

pub mod dating;
pub mod episodes;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod ols;
pub mod report;
pub mod sector;
pub mod synthgen;
pub mod timeseries;

pub use dating::{date_cycles, CycleChronology, EpisodeDates, PhaseSpec, TurnKind, TurningPoint};
pub use error::{Error, Result};
pub use filters::{FilterConfig, FilterKind, FilterOutput, ForecastModel};
pub use ols::{fit_ols, CovarianceKind, RegressionResult, Stars};
pub use timeseries::{parse_quarter, quarter_diff, Panel, Quarter, QuarterlySeries, Transform, Variable};
