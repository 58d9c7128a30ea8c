//! Command-line harness for `grdpg`: configuration, Monte Carlo drivers and
//! reports.

pub mod args;
pub mod config;
pub mod report;
pub mod run;

pub use config::RunConfig;
pub use report::RunReport;
pub use run::{execute, run};
