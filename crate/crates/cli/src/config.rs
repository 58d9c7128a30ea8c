//! Run configuration: a TOML file merged with command-line flags, flags
//! taking precedence.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use grdpg::testing::StatisticKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SimulateEstimate,
    SimulateTest,
    Estimate,
    Test,
    Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ase,
    Predsub,
    Puresub,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnostic {
    Coherence,
    Condition,
    EigenScaling,
    Assumptions,
    ErrorCurve,
    SubgraphRate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Frobenius,
    TwoToInfinity,
}

impl From<Statistic> for StatisticKind {
    fn from(s: Statistic) -> Self {
        match s {
            Statistic::Frobenius => StatisticKind::Frobenius,
            Statistic::TwoToInfinity => StatisticKind::TwoToInfinity,
        }
    }
}

/// Every field is optional so a file and flags can be layered; `resolve`
/// fills defaults and validates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: Option<u64>,

    pub n: Option<usize>,
    pub d: Option<usize>,
    /// Number of positive eigenvalues of `B`; unconstrained when absent.
    pub p: Option<usize>,
    pub rho: Option<f64>,
    /// Dirichlet concentration of memberships.
    pub alpha: Option<f64>,
    pub epsilon: Vec<f64>,

    pub methods: Vec<Method>,
    /// Subsample exponents; `m = ⌈(log n)^(1+a)⌉`.
    pub a: Vec<f64>,
    pub m: Option<usize>,
    pub bootstrap: Option<usize>,
    pub statistic: Option<Statistic>,
    pub reps: Option<usize>,
    /// Nominal test level for the reject column.
    pub level: Option<f64>,

    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub one_based: Option<bool>,
    pub min_degree: Option<usize>,
    /// Feed the true `P` instead of sampled graphs.
    pub noiseless: Option<bool>,
    /// Test a graph against itself.
    pub self_test: Option<bool>,
    pub no_timings: Option<bool>,
    /// Write the estimated latent positions of `estimate` here as CSV.
    pub embedding_out: Option<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
    /// Subsample sizes for the subgraph rate diagnostic.
    pub m_grid: Vec<usize>,
    pub trials: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(mut self, over: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(
                if over.$f.is_some() { self.$f = over.$f; }
            )*};
        }
        macro_rules! take_vec {
            ($($f:ident),*) => {$(
                if !over.$f.is_empty() { self.$f = over.$f; }
            )*};
        }
        take!(command, seed, n, d, p, rho, alpha, m, bootstrap, statistic, reps, level, output, format, threads);
        take!(one_based, min_degree, noiseless, self_test, no_timings, embedding_out, trials);
        take_vec!(epsilon, methods, a, inputs, diagnostics, m_grid);
        self
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let Some(command) = self.command else { bail!("no command given") };
        let Some(seed) = self.seed else { bail!("a seed is required (--seed or `seed` in the config file)") };
        let level = self.level.unwrap_or(0.05);
        if !(0.0..=1.0).contains(&level) {
            bail!("level {level} outside [0, 1]");
        }
        Ok(Resolved {
            command,
            seed,
            d: self.d.unwrap_or(5),
            alpha: self.alpha.unwrap_or(0.5),
            epsilon: if self.epsilon.is_empty() { vec![0.0] } else { self.epsilon.clone() },
            methods: if self.methods.is_empty() { vec![Method::Predsub] } else { self.methods.clone() },
            bootstrap: self.bootstrap.unwrap_or(100),
            statistic: self.statistic.map_or(StatisticKind::Frobenius, Into::into),
            reps: self.reps.unwrap_or(1),
            level,
            format: self.format.unwrap_or_default(),
            threads: self.threads.unwrap_or(0),
            one_based: self.one_based.unwrap_or(false),
            noiseless: self.noiseless.unwrap_or(false),
            self_test: self.self_test.unwrap_or(false),
            timings: !self.no_timings.unwrap_or(false),
            trials: self.trials.unwrap_or(100),
        })
    }

    /// The model size, required for simulation commands.
    pub fn model_n(&self) -> Result<usize> {
        self.n.context("model size n is required")
    }

    pub fn model_rho(&self) -> Result<f64> {
        self.rho.context("sparsity rho is required")
    }
}

/// Defaults applied; the remaining optional fields stay on [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Resolved {
    pub command: Command,
    pub seed: u64,
    pub d: usize,
    pub alpha: f64,
    pub epsilon: Vec<f64>,
    pub methods: Vec<Method>,
    pub bootstrap: usize,
    pub statistic: StatisticKind,
    pub reps: usize,
    pub level: f64,
    pub format: Format,
    pub threads: usize,
    pub one_based: bool,
    pub noiseless: bool,
    pub self_test: bool,
    pub timings: bool,
    pub trials: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = toml::from_str("seed = 3\nn = 100\nmethods = [\"ase\"]\nrho = 0.1").unwrap();
        let flags = RunConfig { n: Some(200), methods: vec![Method::Predsub], ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.seed, Some(3));
        assert_eq!(merged.n, Some(200));
        assert_eq!(merged.rho, Some(0.1));
        assert_eq!(merged.methods, vec![Method::Predsub]);
    }

    #[test]
    fn seed_is_mandatory() {
        let cfg = RunConfig { command: Some(Command::SimulateEstimate), ..Default::default() };
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 1").is_err());
    }
}
