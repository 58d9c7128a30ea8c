//! The five commands. Each returns a [`RunReport`]; nothing here prints.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use grdpg::eval::{
    self, assumption_report, condition_number, eigen_scaling_check, error_curve, error_curve_report, log_log_slope,
    model_coherence, subgraph_rate, AssumptionThresholds, CurveOptions, DiagnosticsReport,
};
use grdpg::graph::{
    common_degree_filter, degree_filter, extract_blocks, generate_mmsb, generate_mmsb_with_signature, load_edge_list,
    perturbed_model, sample_adjacency, uniform_subsample, EdgeListOptions,
};
use grdpg::lowrank::{model_eigenvalues, model_spectrum, relative_frob_error};
use grdpg::predsub::predsub_with_subsample;
use grdpg::spectral::{align_orthogonal, two_to_infinity, EigsOptions};
use grdpg::testing::{predsub_test, puresub_test, TestParams, TestReport};
use grdpg::{ase, par, rng, subsample_size, Embedding, LowRankP, ProbabilityModel, SparseGraph};
use nalgebra::DMatrix;

use crate::config::{Command, Diagnostic, Method, Resolved, RunConfig};
use crate::report::{DerivedSize, Record, RecordTiming, RunReport, Timings};

/// Stream tags under the master seed. Each consumer gets its own key, so
/// adding a method or a grid point never shifts another one's draws.
pub mod seeds {
    pub const MODEL: u64 = 1000;
    pub const GRAPH: u64 = 1001;
    pub const SUBSAMPLE: u64 = 1002;
    pub const TEST: u64 = 1003;
    pub const DIAGNOSTIC: u64 = 1004;
}

/// Seed of the subsample used for replicate `rep`, size index `k`.
pub fn subsample_seed(seed: u64, rep: usize, k: usize) -> u64 {
    rng::derive(seed, &[seeds::SUBSAMPLE, rep as u64, k as u64])
}

type Row = (Record, RecordTiming);

/// Run a configuration and return its report.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let r = cfg.resolve()?;
    let start = Instant::now();
    let mut report = par::with_threads(r.threads, || -> Result<RunReport> {
        let mut report = RunReport::new(cfg, r.seed, r.command);
        let rows = match r.command {
            Command::SimulateEstimate => simulate_estimate(cfg, &r, &mut report)?,
            Command::SimulateTest => simulate_test(cfg, &r, &mut report)?,
            Command::Estimate => estimate(cfg, &r, &mut report)?,
            Command::Test => test(cfg, &r, &mut report)?,
            Command::Diagnostics => diagnostics(cfg, &r, &mut report)?,
        };
        let (records, timings): (Vec<Record>, Vec<RecordTiming>) = rows.into_iter().unzip();
        report.records = records;
        report.timings = Some(Timings { threads: par::current_threads(), records: timings, ..Default::default() });
        Ok(report)
    })?;
    if let Some(t) = &mut report.timings {
        t.total_seconds = start.elapsed().as_secs_f64();
    }
    report.finish();
    if !r.timings {
        report.timings = None;
    }
    Ok(report)
}

/// Run and write the report to the configured output (or `stdout`).
pub fn execute(cfg: &RunConfig) -> Result<RunReport> {
    let report = run(cfg)?;
    let format = cfg.format.unwrap_or_default();
    match &cfg.output {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            report.write(format, BufWriter::new(f))?;
        }
        None => report.write(format, std::io::stdout().lock())?,
    }
    Ok(report)
}

/// `(a, m)` pairs from the exponent grid, or the explicit `m`.
fn sizes(cfg: &RunConfig, n: usize, report: &mut RunReport) -> Vec<(Option<f64>, usize)> {
    if !cfg.a.is_empty() {
        let out: Vec<_> = cfg.a.iter().map(|&a| (Some(a), subsample_size(n, a))).collect();
        report.derived_m = out.iter().map(|&(a, m)| DerivedSize { a: a.unwrap_or_default(), m }).collect();
        out
    } else {
        cfg.m.map(|m| vec![(None, m)]).unwrap_or_default()
    }
}

fn require_sizes(sizes: &[(Option<f64>, usize)], what: &str) -> Result<()> {
    ensure!(!sizes.is_empty(), "{what} needs a subsample size: give -a/--a or -m/--m");
    Ok(())
}

fn build_model(cfg: &RunConfig, r: &Resolved) -> Result<ProbabilityModel> {
    let (n, rho) = (cfg.model_n()?, cfg.model_rho()?);
    let seed = rng::derive(r.seed, &[seeds::MODEL]);
    let model = match cfg.p {
        Some(p) => generate_mmsb_with_signature(n, r.d, p, rho, r.alpha, seed),
        None => generate_mmsb(n, r.d, rho, r.alpha, seed),
    };
    model.context("generating the probability model")
}

fn load(path: &Path, r: &Resolved) -> Result<SparseGraph> {
    load_edge_list(path, EdgeListOptions { one_based: r.one_based, n: None })
        .with_context(|| format!("reading edge list {}", path.display()))
}

fn base(rep: usize, method: Method, a: Option<f64>, m: Option<usize>, n: usize) -> Record {
    Record { rep, method: Some(method), a, m, n, ..Default::default() }
}

fn with_signature(mut rec: Record, e: &Embedding) -> Record {
    rec.p_hat = Some(e.p());
    rec.q_hat = Some(e.q());
    rec
}

/// `‖X̂W − X‖_{2→∞}` with `W` fitted on all rows.
fn aligned_two_inf(x_hat: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
    let (w, _) = align_orthogonal(x_hat, x)?;
    Ok(two_to_infinity(&(x_hat * w - x)))
}

fn timing(seconds: f64, stages: &[(&str, f64)]) -> RecordTiming {
    RecordTiming { seconds, stages: stages.iter().map(|&(k, v)| (k.to_string(), v)).collect() }
}

fn simulate_estimate(cfg: &RunConfig, r: &Resolved, report: &mut RunReport) -> Result<Vec<Row>> {
    let t = Instant::now();
    let model = build_model(cfg, r)?;
    let generation = t.elapsed().as_secs_f64();
    let n = model.n();
    let sizes = sizes(cfg, n, report);
    if r.methods.iter().any(|m| *m != Method::Ase) {
        require_sizes(&sizes, "subsampling")?;
    }
    let canonical = model_spectrum(&model, r.d)?.0.into_x();
    let eigs = EigsOptions::default();

    let per_rep = par::try_map_range(r.reps, |rep| -> Result<Vec<Row>> {
        let t = Instant::now();
        let graph = (!r.noiseless).then(|| sample_adjacency(&model, rng::derive(r.seed, &[seeds::GRAPH, rep as u64])));
        let sampling = t.elapsed().as_secs_f64() + generation;
        let mut rows = Vec::new();
        for &method in &r.methods {
            let ctx = || format!("replicate {rep}, method {method:?}");
            match method {
                Method::Ase => {
                    let t = Instant::now();
                    let emb = match &graph {
                        Some(g) => ase(g, r.d),
                        None => ase(&model, r.d),
                    }
                    .with_context(ctx)?;
                    let secs = t.elapsed().as_secs_f64();
                    let mut rec = with_signature(base(rep, method, None, Some(n), n), &emb);
                    rec.error = Some(relative_frob_error(&LowRankP::from_embedding(&emb), &model)?);
                    rec.two_inf_error = Some(aligned_two_inf(emb.x(), &canonical)?);
                    rows.push((rec, timing(secs, &[("generation", sampling), ("embedding", secs)])));
                }
                Method::Predsub => {
                    for (k, &(a, m)) in sizes.iter().enumerate() {
                        let t = Instant::now();
                        let s = uniform_subsample(n, m, subsample_seed(r.seed, rep, k)).with_context(ctx)?;
                        let res = match &graph {
                            Some(g) => predsub_with_subsample(g, &s, r.d, &eigs),
                            None => predsub_with_subsample(&model, &s, r.d, &eigs),
                        }
                        .with_context(ctx)?;
                        let secs = t.elapsed().as_secs_f64();
                        let errs = eval::estimate_errors(&res, &model, &canonical).with_context(ctx)?;
                        let mut rec = with_signature(base(rep, method, a, Some(m), n), &res.embedding);
                        rec.error = Some(errs.relative_frob);
                        rec.two_inf_error = Some(errs.two_inf);
                        rec.subgraph_two_inf_error = Some(errs.subgraph_two_inf);
                        rec.isolated = Some(res.isolated);
                        let st = res.timings;
                        let stages = [
                            ("generation", sampling),
                            ("subsample", st.sample),
                            ("embedding", st.eig),
                            ("out_of_sample", st.out_of_sample + st.assemble),
                        ];
                        rows.push((rec, timing(secs, &stages)));
                    }
                }
                Method::Puresub => {
                    for (k, &(a, m)) in sizes.iter().enumerate() {
                        let t = Instant::now();
                        let s = uniform_subsample(n, m, subsample_seed(r.seed, rep, k)).with_context(ctx)?;
                        let p_s = model.restrict(s.sample());
                        let emb = match &graph {
                            Some(g) => ase(&extract_blocks(g, &s)?.0, r.d),
                            None => ase(&p_s, r.d),
                        }
                        .with_context(ctx)?;
                        let secs = t.elapsed().as_secs_f64();
                        let mut rec = with_signature(base(rep, method, a, Some(m), n), &emb);
                        rec.error = Some(relative_frob_error(&LowRankP::from_embedding(&emb), &p_s)?);
                        let x_s = model_spectrum(&p_s, r.d).with_context(ctx)?.0;
                        rec.subgraph_two_inf_error = Some(aligned_two_inf(emb.x(), x_s.x())?);
                        rows.push((rec, timing(secs, &[("generation", sampling), ("embedding", secs)])));
                    }
                }
            }
        }
        Ok(rows)
    })?;
    Ok(per_rep.into_iter().flatten().collect())
}

fn test_record(rep: usize, method: Method, a: Option<f64>, m: usize, n: usize, t: &TestReport, level: f64) -> Row {
    let mut rec = base(rep, method, a, Some(m), n).with_normalizers(&t.normalizers);
    rec.p_hat = Some(t.signatures[0].0);
    rec.q_hat = Some(t.signatures[0].1);
    rec.p_hat_2 = Some(t.signatures[1].0);
    rec.q_hat_2 = Some(t.signatures[1].1);
    rec.observed = Some(t.observed);
    rec.p_value = Some(t.p_value);
    rec.reject = Some(t.rejects(level));
    let tm = t.timings;
    (rec, timing(tm.estimate + tm.bootstrap, &[("estimate", tm.estimate), ("bootstrap", tm.bootstrap)]))
}

fn params(r: &Resolved, m: usize) -> TestParams {
    TestParams::new(m, r.d, r.bootstrap).with_statistic(r.statistic)
}

fn simulate_test(cfg: &RunConfig, r: &Resolved, report: &mut RunReport) -> Result<Vec<Row>> {
    let model = build_model(cfg, r)?;
    let n = model.n();
    let sizes = sizes(cfg, n, report);
    require_sizes(&sizes, "testing")?;
    if r.methods.contains(&Method::Ase) {
        bail!("ase is an estimator only; tests take --method predsub or puresub");
    }
    if r.noiseless && r.methods.contains(&Method::Puresub) {
        bail!("puresub tests need sampled graphs; drop --noiseless");
    }
    let mut rows = Vec::new();
    for (ei, &eps) in r.epsilon.iter().enumerate() {
        let alt = perturbed_model(&model, eps).with_context(|| format!("perturbing by epsilon = {eps}"))?;
        let per_rep = par::try_map_range(r.reps, |rep| -> Result<Vec<Row>> {
            let draw = |j: u64, p: &ProbabilityModel| {
                sample_adjacency(p, rng::derive(r.seed, &[seeds::GRAPH, ei as u64, rep as u64, j]))
            };
            let graphs = (!r.noiseless).then(|| {
                let g1 = draw(1, &model);
                let g2 = if r.self_test { g1.clone() } else { draw(2, &alt) };
                (g1, g2)
            });
            let mut out = Vec::new();
            for &method in &r.methods {
                for (k, &(a, m)) in sizes.iter().enumerate() {
                    let ctx = || format!("epsilon {eps}, replicate {rep}, method {method:?}, m = {m}");
                    let seed = rng::derive(r.seed, &[seeds::TEST, ei as u64, rep as u64, k as u64]);
                    let p = params(r, m);
                    let t = match (&graphs, method) {
                        (Some((g1, g2)), Method::Predsub) => predsub_test(g1, g2, &p, seed),
                        (Some((g1, g2)), _) => puresub_test(g1, g2, &p, seed),
                        (None, _) => {
                            let other = if r.self_test { &model } else { &alt };
                            predsub_test(&model, other, &p, seed)
                        }
                    }
                    .with_context(ctx)?;
                    let (mut rec, tm) = test_record(rep, method, a, m, n, &t, r.level);
                    rec.epsilon = Some(eps);
                    out.push((rec, tm));
                }
            }
            Ok(out)
        })?;
        rows.extend(per_rep.into_iter().flatten());
    }
    Ok(rows)
}

fn write_embedding(path: &Path, x: &DMatrix<f64>, nodes: &[usize]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(f));
    let mut header = vec!["node".to_string()];
    header.extend((1..=x.ncols()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (row, &node) in nodes.iter().enumerate() {
        let mut rec = vec![node.to_string()];
        rec.extend(x.row(row).iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn estimate(cfg: &RunConfig, r: &Resolved, report: &mut RunReport) -> Result<Vec<Row>> {
    ensure!(cfg.inputs.len() == 1, "estimate takes exactly one --input, got {}", cfg.inputs.len());
    let raw = load(&cfg.inputs[0], r)?;
    let (g, nodes) = match cfg.min_degree {
        Some(k) => {
            let (g, map) = degree_filter(&raw, k);
            (g, map.new_to_old)
        }
        None => {
            let n = raw.n();
            (raw, (0..n).collect())
        }
    };
    let n = g.n();
    let sizes = sizes(cfg, n, report);
    let eigs = EigsOptions::default();
    let mut rows = Vec::new();
    let mut embeddings: Vec<(DMatrix<f64>, Vec<usize>)> = Vec::new();
    for &method in &r.methods {
        let ctx = || format!("method {method:?}");
        match method {
            Method::Ase => {
                let t = Instant::now();
                let emb = ase(&g, r.d).with_context(ctx)?;
                let secs = t.elapsed().as_secs_f64();
                rows.push((with_signature(base(0, method, None, Some(n), n), &emb), timing(secs, &[("embedding", secs)])));
                embeddings.push((emb.into_x(), nodes.clone()));
            }
            Method::Predsub | Method::Puresub => {
                require_sizes(&sizes, "subsampling")?;
                for (k, &(a, m)) in sizes.iter().enumerate() {
                    let t = Instant::now();
                    let s = uniform_subsample(n, m, subsample_seed(r.seed, 0, k)).with_context(ctx)?;
                    let rec = base(0, method, a, Some(m), n);
                    if method == Method::Predsub {
                        let res = predsub_with_subsample(&g, &s, r.d, &eigs).with_context(ctx)?;
                        let secs = t.elapsed().as_secs_f64();
                        let mut rec = with_signature(rec, &res.embedding);
                        rec.isolated = Some(res.isolated);
                        let st = res.timings;
                        let stages = [("subsample", st.sample), ("embedding", st.eig), ("out_of_sample", st.out_of_sample + st.assemble)];
                        rows.push((rec, timing(secs, &stages)));
                        embeddings.push((res.embedding.into_x(), nodes.clone()));
                    } else {
                        let emb = ase(&extract_blocks(&g, &s)?.0, r.d).with_context(ctx)?;
                        let secs = t.elapsed().as_secs_f64();
                        rows.push((with_signature(rec, &emb), timing(secs, &[("embedding", secs)])));
                        embeddings.push((emb.into_x(), s.sample().iter().map(|&v| nodes[v]).collect()));
                    }
                }
            }
        }
    }
    if let Some(path) = &cfg.embedding_out {
        ensure!(embeddings.len() == 1, "--embedding-out needs exactly one estimate, the run produced {}", embeddings.len());
        let (x, ids) = &embeddings[0];
        write_embedding(path, x, ids)?;
    }
    Ok(rows)
}

fn test(cfg: &RunConfig, r: &Resolved, report: &mut RunReport) -> Result<Vec<Row>> {
    ensure!(cfg.inputs.len() == 2, "test takes exactly two --input files, got {}", cfg.inputs.len());
    let a = load(&cfg.inputs[0], r)?;
    let b = load(&cfg.inputs[1], r)?;
    let (a, b) = match cfg.min_degree {
        Some(k) => {
            let (a, b, _) = common_degree_filter(&a, &b, k);
            (a, b)
        }
        None => (a, b),
    };
    ensure!(a.n() == b.n(), "node-count mismatch: {} nodes against {} (use --min-degree to intersect)", a.n(), b.n());
    ensure!(!r.methods.contains(&Method::Ase), "ase is an estimator only; tests take --method predsub or puresub");
    let n = a.n();
    let sizes = sizes(cfg, n, report);
    require_sizes(&sizes, "testing")?;
    let mut rows = Vec::new();
    for &method in &r.methods {
        for (k, &(sa, m)) in sizes.iter().enumerate() {
            let seed = rng::derive(r.seed, &[seeds::TEST, 0, 0, k as u64]);
            let p = params(r, m);
            let t = match method {
                Method::Predsub => predsub_test(&a, &b, &p, seed),
                _ => puresub_test(&a, &b, &p, seed),
            }
            .with_context(|| format!("method {method:?}, m = {m}"))?;
            rows.push(test_record(0, method, sa, m, n, &t, r.level));
        }
    }
    Ok(rows)
}

fn diagnostics(cfg: &RunConfig, r: &Resolved, report: &mut RunReport) -> Result<Vec<Row>> {
    let model = build_model(cfg, r)?;
    let n = model.n();
    let sizes = sizes(cfg, n, report);
    let m = sizes.first().map(|&(_, m)| m);
    let selected = if cfg.diagnostics.is_empty() {
        vec![Diagnostic::Coherence, Diagnostic::Condition, Diagnostic::Assumptions]
    } else {
        cfg.diagnostics.clone()
    };
    let dseed = |k: u64| rng::derive(r.seed, &[seeds::DIAGNOSTIC, k]);
    let mut diag = DiagnosticsReport::default();
    let mut rows = Vec::new();
    for which in selected {
        let ctx = || format!("diagnostic {which:?}");
        match which {
            Diagnostic::Coherence => {
                diag.scalar("coherence", model_coherence(&model).with_context(ctx)?, "incoherent eigenvectors, sqrt(n) max row norm");
            }
            Diagnostic::Condition => {
                let ev = model_eigenvalues(&model);
                ensure!(ev.len() >= r.d, "model has {} eigenvalues, fewer than d = {}", ev.len(), r.d);
                diag.scalar("condition_number", condition_number(&ev[..r.d]).with_context(ctx)?, "bounded condition number");
            }
            Diagnostic::EigenScaling => {
                let m = m.context("eigen-scaling needs a subsample size (-a or -m)")?;
                let chk = eigen_scaling_check(&model, m, r.trials, dseed(0)).with_context(ctx)?;
                let note = "subsampled singular values scale by n/m";
                diag.scalar("eigen_scaling_max_deviation", chk.max(), note);
                diag.scalar("eigen_scaling_mean_deviation", chk.mean(), note);
                let x = (0..chk.deviations.len()).map(|t| t as f64).collect();
                diag.curve("eigen_scaling_deviations", x, chk.deviations.clone(), note);
                let eps = r.epsilon.iter().copied().find(|&e| e > 0.0);
                if let Some(eps) = eps {
                    let within = chk.count_within(eps);
                    diag.scalar("eigen_scaling_fraction_within_epsilon", within as f64 / r.trials.max(1) as f64, note);
                }
            }
            Diagnostic::Assumptions => {
                let m = m.unwrap_or_else(|| subsample_size(n, 2.0));
                diag.merge(assumption_report(&model, r.d, m, &AssumptionThresholds::default()));
            }
            Diagnostic::ErrorCurve => {
                ensure!(!cfg.a.is_empty(), "error-curve needs an exponent grid (-a)");
                let opts = CurveOptions {
                    noiseless: r.noiseless,
                    include_full: r.methods.contains(&Method::Ase),
                    eigs: EigsOptions::default(),
                };
                let curve = error_curve(&model, r.d, &cfg.a, r.reps, dseed(1), &opts).with_context(ctx)?;
                let mut curve_report = error_curve_report(&curve);
                // wall-clock entries belong to the timing section, which
                // already carries them per record
                curve_report.curves.retain(|k, _| !k.starts_with("seconds"));
                curve_report.scalars.retain(|k, _| !k.ends_with("seconds"));
                diag.merge(curve_report);
                for row in &curve {
                    let method = if row.a.is_some() { Method::Predsub } else { Method::Ase };
                    for (rep, (e, &secs)) in row.errors.iter().zip(&row.seconds).enumerate() {
                        let mut rec = base(rep, method, row.a, Some(row.m), n);
                        rec.error = Some(e.relative_frob);
                        rec.two_inf_error = Some(e.two_inf);
                        rec.subgraph_two_inf_error = Some(e.subgraph_two_inf);
                        rows.push((rec, timing(secs, &[])));
                    }
                }
            }
            Diagnostic::SubgraphRate => {
                ensure!(cfg.m_grid.len() >= 2, "subgraph-rate needs at least two sizes in --m-grid");
                let rate = subgraph_rate(&model, r.d, &cfg.m_grid, r.reps, dseed(2)).with_context(ctx)?;
                let x: Vec<f64> = rate.iter().map(|t| t.0 as f64).collect();
                let mean: Vec<f64> = rate.iter().map(|t| t.1).collect();
                let note = "subgraph rate sqrt(log m / m)";
                diag.curve("subgraph_rate_mean", x.clone(), mean.clone(), note);
                diag.curve("subgraph_rate_sd", x.clone(), rate.iter().map(|t| t.2).collect(), note);
                let slope = log_log_slope(&x, &mean);
                diag.scalar("subgraph_rate_slope", slope, note);
                diag.check("subgraph_rate_slope_in_range", (-0.65..=-0.35).contains(&slope));
            }
        }
    }
    report.diagnostics = Some(diag);
    Ok(rows)
}
