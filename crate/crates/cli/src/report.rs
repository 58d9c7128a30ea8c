//! Machine-readable run reports.
//!
//! Everything that depends on wall-clock time or on the worker count lives
//! in [`Timings`], so a report without that section is a pure function of
//! the configuration.

use std::collections::BTreeMap;
use std::io::Write;

use anyhow::Result;
use grdpg::eval::{mean_sd, DiagnosticsReport};
use grdpg::testing::Normalizers;
use serde::{Deserialize, Serialize};

use crate::config::{Command, Format, Method, RunConfig};

/// One replicate of one method at one subsample size (and perturbation).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub rep: usize,
    pub method: Option<Method>,
    pub a: Option<f64>,
    pub m: Option<usize>,
    pub epsilon: Option<f64>,
    /// Nodes after any filtering.
    pub n: usize,
    /// `‖P̂ − P‖_F / ‖P‖_F`.
    pub error: Option<f64>,
    pub two_inf_error: Option<f64>,
    pub subgraph_two_inf_error: Option<f64>,
    pub p_hat: Option<usize>,
    pub q_hat: Option<usize>,
    /// Second input's signature, for tests.
    pub p_hat_2: Option<usize>,
    pub q_hat_2: Option<usize>,
    /// Out-of-sample nodes with no edge into the subsample.
    pub isolated: Option<usize>,
    pub observed: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    pub r_f: Option<f64>,
    pub r_two_inf: Option<f64>,
    pub ratio_f: Option<f64>,
    pub ratio_two_inf: Option<f64>,
    pub ratio_s: Option<f64>,
}

impl Record {
    pub fn with_normalizers(mut self, z: &Normalizers) -> Self {
        self.r_f = Some(z.r_f);
        self.r_two_inf = Some(z.r_two_inf);
        self.ratio_f = Some(z.ratio_f);
        self.ratio_two_inf = Some(z.ratio_two_inf);
        self.ratio_s = z.ratio_s;
        self
    }

    fn group(&self) -> GroupKey {
        GroupKey { method: self.method, a: self.a, m: self.m, epsilon: self.epsilon }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupKey {
    pub method: Option<Method>,
    pub a: Option<f64>,
    pub m: Option<usize>,
    pub epsilon: Option<f64>,
}

/// Summary over the records sharing a [`GroupKey`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    #[serde(flatten)]
    pub key: GroupKey,
    pub count: usize,
    pub mean_error: Option<f64>,
    /// Sample standard deviation, unrounded.
    pub sd_error: Option<f64>,
    pub mean_two_inf_error: Option<f64>,
    pub rejection_rate: Option<f64>,
    pub mean_p_value: Option<f64>,
}

fn mean_and_sd(values: Vec<f64>) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let (m, s) = mean_sd(&values);
    (Some(m), Some(s))
}

/// Group records by method, `a`, `m` and `ε` in order of first appearance.
pub fn group_indices(records: &[Record]) -> Vec<(GroupKey, Vec<usize>)> {
    let mut groups: Vec<(GroupKey, Vec<usize>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let key = r.group();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, idx)) => idx.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    groups
}

pub fn aggregate(records: &[Record]) -> Vec<Aggregate> {
    group_indices(records)
        .into_iter()
        .map(|(key, idx)| {
            let col = |f: &dyn Fn(&Record) -> Option<f64>| idx.iter().filter_map(|&i| f(&records[i])).collect::<Vec<_>>();
            let (mean_error, sd_error) = mean_and_sd(col(&|r| r.error));
            let decisions = col(&|r| r.reject.map(|x| if x { 1.0 } else { 0.0 }));
            Aggregate {
                key,
                count: idx.len(),
                mean_error,
                sd_error,
                mean_two_inf_error: mean_and_sd(col(&|r| r.two_inf_error)).0,
                rejection_rate: mean_and_sd(decisions).0,
                mean_p_value: mean_and_sd(col(&|r| r.p_value)).0,
            }
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordTiming {
    /// Wall seconds for the whole replicate of this method.
    pub seconds: f64,
    pub stages: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub threads: usize,
    pub total_seconds: f64,
    /// Aligned with [`RunReport::records`].
    pub records: Vec<RecordTiming>,
    /// Mean seconds per aggregate group, aligned with
    /// [`RunReport::aggregates`].
    pub mean_seconds: Vec<f64>,
}

/// Subsample size derived from an exponent, echoed so that runs given `a`
/// show the `m` they actually used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedSize {
    pub a: f64,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub command: Command,
    /// The merged configuration, minus the output path and thread count.
    pub config: RunConfig,
    pub derived_m: Vec<DerivedSize>,
    pub records: Vec<Record>,
    pub aggregates: Vec<Aggregate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<DiagnosticsReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn new(config: &RunConfig, seed: u64, command: Command) -> Self {
        let mut echo = config.clone();
        echo.output = None;
        echo.threads = None;
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            command,
            config: echo,
            derived_m: Vec::new(),
            records: Vec::new(),
            aggregates: Vec::new(),
            diagnostics: None,
            timings: None,
        }
    }

    /// Fill `aggregates` (and the mean timings, when present) from the
    /// records.
    pub fn finish(&mut self) {
        self.aggregates = aggregate(&self.records);
        if let Some(t) = &mut self.timings {
            t.mean_seconds = group_indices(&self.records)
                .into_iter()
                .map(|(_, idx)| idx.iter().map(|&i| t.records[i].seconds).sum::<f64>() / idx.len() as f64)
                .collect();
        }
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)?;
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                if let Some(diag) = &self.diagnostics {
                    for row in diagnostic_rows(diag) {
                        w.serialize(row)?;
                    }
                } else {
                    for r in &self.records {
                        w.serialize(r)?;
                    }
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// Flat view of a diagnostics report for CSV output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub kind: String,
    pub key: String,
    pub x: Option<f64>,
    pub value: f64,
}

pub fn diagnostic_rows(diag: &DiagnosticsReport) -> Vec<DiagnosticRow> {
    let mut rows = Vec::new();
    for (k, s) in &diag.scalars {
        rows.push(DiagnosticRow { kind: "scalar".into(), key: k.clone(), x: None, value: s.value });
    }
    for (k, c) in &diag.curves {
        for (&x, &y) in c.x.iter().zip(&c.y) {
            rows.push(DiagnosticRow { kind: "curve".into(), key: k.clone(), x: Some(x), value: y });
        }
    }
    for (k, &ok) in &diag.checks {
        rows.push(DiagnosticRow { kind: "check".into(), key: k.clone(), x: None, value: if ok { 1.0 } else { 0.0 } });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(rep: usize, a: f64, err: f64, reject: bool) -> Record {
        Record { rep, method: Some(Method::Predsub), a: Some(a), m: Some(10), error: Some(err), reject: Some(reject), ..Default::default() }
    }

    #[test]
    fn aggregates_group_in_first_appearance_order() {
        let recs = vec![rec(0, 2.0, 0.1, true), rec(0, 1.0, 0.5, false), rec(1, 2.0, 0.3, false)];
        let agg = aggregate(&recs);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].key.a, Some(2.0));
        assert_eq!(agg[0].count, 2);
        assert!((agg[0].mean_error.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(agg[0].rejection_rate, Some(0.5));
        assert_eq!(agg[1].sd_error, Some(0.0));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let cfg = RunConfig { seed: Some(1), a: vec![0.1 + 0.2], ..Default::default() };
        let mut rep = RunReport::new(&cfg, 1, Command::SimulateEstimate);
        rep.records = vec![rec(0, 1.0 / 3.0, std::f64::consts::PI / 7.0, true)];
        rep.timings = Some(Timings { records: vec![RecordTiming::default()], ..Default::default() });
        rep.finish();
        let mut buf = Vec::new();
        rep.write(Format::Json, &mut buf).unwrap();
        let back: RunReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let mut rep = RunReport::new(&RunConfig::default(), 0, Command::SimulateTest);
        rep.records = (0..4).map(|r| rec(r, 2.0, 0.1, false)).collect();
        let mut buf = Vec::new();
        rep.write(Format::Csv, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<Record> = rd.deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(rows, rep.records);
    }
}
