//! Command-line flags. Every flag is optional so that a config file can
//! supply it instead; [`Cli::into_config`] layers flags over the file.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::{Command, Diagnostic, Format, Method, RunConfig, Statistic};

#[derive(Debug, Parser)]
#[command(name = "grdpg", version, about = "Predictive-subsampling estimation and testing for GRDPG networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Monte Carlo estimation error on simulated mixed-membership graphs.
    SimulateEstimate(Flags),
    /// Monte Carlo level and power of the two-sample tests.
    SimulateTest(Flags),
    /// Estimate from an edge list.
    Estimate(Flags),
    /// Test whether two edge lists share a probability matrix.
    Test(Flags),
    /// Regime checks and empirical rate diagnostics on a simulated model.
    Diagnostics(Flags),
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// TOML file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of nodes of the simulated model.
    #[arg(short, long)]
    pub n: Option<usize>,
    /// Embedding dimension.
    #[arg(short, long)]
    pub d: Option<usize>,
    /// Number of positive eigenvalues of the simulated model.
    #[arg(short, long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Dirichlet concentration of the memberships.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Perturbations of the alternative, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,
    #[arg(long = "method", value_enum, value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Subsample exponents, m = ceil((log n)^(1+a)); comma separated.
    #[arg(short, long, value_delimiter = ',', allow_negative_numbers = true)]
    pub a: Vec<f64>,
    /// Subsample size, used when no exponent is given.
    #[arg(short, long)]
    pub m: Option<usize>,
    /// Bootstrap replicates per test.
    #[arg(short = 'B', long)]
    pub bootstrap: Option<usize>,
    #[arg(long, value_enum)]
    pub statistic: Option<Statistic>,
    /// Monte Carlo replications.
    #[arg(short, long)]
    pub reps: Option<usize>,
    /// Nominal level of the reject column.
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(short, long = "input")]
    pub inputs: Vec<PathBuf>,
    /// Report destination; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (0 = all cores). Never changes the numbers produced.
    #[arg(long, env = "GRDPG_THREADS")]
    pub threads: Option<usize>,
    /// Edge-list node indices start at 1.
    #[arg(long)]
    pub one_based: bool,
    /// Drop nodes with fewer neighbours before estimating.
    #[arg(long)]
    pub min_degree: Option<usize>,
    /// Use the true probability matrix in place of sampled graphs.
    #[arg(long)]
    pub noiseless: bool,
    /// Test each simulated graph against itself.
    #[arg(long)]
    pub self_test: bool,
    /// Leave the timing section out of the report.
    #[arg(long)]
    pub no_timings: bool,
    /// Write estimated latent positions (estimate only) as CSV.
    #[arg(long)]
    pub embedding_out: Option<PathBuf>,
    #[arg(long = "diagnostic", value_enum, value_delimiter = ',')]
    pub diagnostics: Vec<Diagnostic>,
    /// Subsample sizes for the subgraph-rate diagnostic.
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Vec<usize>,
    /// Trials for the eigenvalue-scaling diagnostic.
    #[arg(long)]
    pub trials: Option<usize>,
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        let (command, f) = match self.command {
            Sub::SimulateEstimate(f) => (Command::SimulateEstimate, f),
            Sub::SimulateTest(f) => (Command::SimulateTest, f),
            Sub::Estimate(f) => (Command::Estimate, f),
            Sub::Test(f) => (Command::Test, f),
            Sub::Diagnostics(f) => (Command::Diagnostics, f),
        };
        let base = match &f.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let over = RunConfig {
            command: Some(command),
            seed: f.seed,
            n: f.n,
            d: f.d,
            p: f.p,
            rho: f.rho,
            alpha: f.alpha,
            epsilon: f.epsilon,
            methods: f.methods,
            a: f.a,
            m: f.m,
            bootstrap: f.bootstrap,
            statistic: f.statistic,
            reps: f.reps,
            level: f.level,
            inputs: f.inputs,
            output: f.output,
            format: f.format,
            threads: f.threads,
            one_based: flag(f.one_based),
            min_degree: f.min_degree,
            noiseless: flag(f.noiseless),
            self_test: flag(f.self_test),
            no_timings: flag(f.no_timings),
            embedding_out: f.embedding_out,
            diagnostics: f.diagnostics,
            m_grid: f.m_grid,
            trials: f.trials,
        };
        // a file may name a different command; the subcommand wins
        Ok(base.overlay(over))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_flags() {
        let cli = Cli::try_parse_from([
            "grdpg", "simulate-test", "--seed", "4", "-n", "500", "--epsilon", "0,0.1", "--method", "predsub,puresub",
            "-a", "2.25", "--self-test",
        ])
        .unwrap();
        let cfg = cli.into_config().unwrap();
        assert_eq!(cfg.command, Some(Command::SimulateTest));
        assert_eq!(cfg.epsilon, vec![0.0, 0.1]);
        assert_eq!(cfg.methods, vec![Method::Predsub, Method::Puresub]);
        assert_eq!(cfg.self_test, Some(true));
        assert_eq!(cfg.one_based, None);
    }
}
