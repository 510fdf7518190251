//! Desk-scale experiments: criterion correlations, integration error and local emulation.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{criterion_full, CriterionKind, Design};
use crate::emulator::{
    composite_mle, estimate_lengthscales, fit_shared_model, EstimationConfig, GpHyperParams, Kriging,
    DEFAULT_NUGGET,
};
use crate::error::{Error, Result};
use crate::io::{fmt17, metadata_line};
use crate::lattice::{coprime_residues, lattice_criterion, LatticeSpec};
use crate::optim::{
    korobov_search, llhd_search, random_lhd, sa_optimize_lhd, LlhdSearchConfig, SaConfig,
};
use crate::rlhd::{random_shift, rlhd_points, RlhdSpec};
use crate::rng::{derive_seed, rng_from_seed};
use crate::testfns::{FunctionName, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "lhd")]
    Lhd,
    #[serde(rename = "olhd-wd")]
    OlhdWd,
    #[serde(rename = "llhd-wd")]
    LlhdWd,
    #[serde(rename = "llhd-ws2")]
    LlhdWs2,
    #[serde(rename = "plhd")]
    Plhd,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lhd,
        Method::OlhdWd,
        Method::LlhdWd,
        Method::LlhdWs2,
        Method::Plhd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lhd => "lhd",
            Method::OlhdWd => "olhd-wd",
            Method::LlhdWd => "llhd-wd",
            Method::LlhdWs2 => "llhd-ws2",
            Method::Plhd => "plhd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == lower)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown design method `{s}`")))
    }
}

/// Settings shared by the benchmark design generators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorBudget {
    pub sa_iterations: usize,
    pub llhd_iterations: usize,
}

impl Default for GeneratorBudget {
    fn default() -> Self {
        Self {
            sa_iterations: 2000,
            llhd_iterations: 2000,
        }
    }
}

/// Design of `n` points in `d` dimensions from `method`, randomized by `seed`.
pub fn generate(method: Method, n: usize, d: usize, seed: u64, budget: &GeneratorBudget) -> Result<Design> {
    Ok(match method {
        Method::Lhd => random_lhd(n, d, seed),
        Method::OlhdWd => {
            sa_optimize_lhd(&SaConfig::new(n, d, CriterionKind::Wd, seed).iterations(budget.sa_iterations))?.design
        }
        Method::LlhdWd | Method::LlhdWs2 => {
            let kind = if method == Method::LlhdWd {
                CriterionKind::Wd
            } else {
                CriterionKind::Ws2
            };
            let cfg = LlhdSearchConfig::new(n as u64, d, kind, seed).iterations(budget.llhd_iterations);
            llhd_search(&cfg)?.spec.points()
        }
        Method::Plhd => {
            let (spec, _, _) = korobov_search(n as u64, d, CriterionKind::Wd)?;
            randomly_shifted(&spec, seed)?.points()
        }
    })
}

fn randomly_shifted(spec: &LatticeSpec, seed: u64) -> Result<LatticeSpec> {
    let mut rng = rng_from_seed(seed);
    let delta = (0..spec.d())
        .map(|_| rng.gen_range(0..spec.n()) as i64)
        .collect();
    LatticeSpec::new(spec.n(), spec.v().to_vec(), delta)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub functions: Vec<FunctionName>,
    pub methods: Vec<Method>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub budget: GeneratorBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrationRow {
    pub function: FunctionName,
    pub method: Method,
    pub n: usize,
    pub replicate: usize,
    pub error: f64,
}

fn cell_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(seed, |s, &p| derive_seed(s, p))
}

/// Absolute error of the sample mean against the reference mean for every
/// (function, method, n, replicate) cell, in that order.
pub fn integration_benchmark(config: &IntegrationConfig) -> Result<Vec<IntegrationRow>> {
    if config.replicates == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    let functions: Vec<(TestFunction, f64)> = config
        .functions
        .iter()
        .map(|&name| {
            let f = TestFunction::with_default_dim(name);
            let mean = f
                .reference_mean()
                .ok_or_else(|| Error::Unsupported(format!("{name} has no reference mean")))?
                .value;
            Ok((f, mean))
        })
        .collect::<Result<_>>()?;
    // power generators are deterministic per (n, d); search them once
    let mut korobov: HashMap<(usize, usize), LatticeSpec> = HashMap::new();
    if config.methods.contains(&Method::Plhd) {
        for (f, _) in &functions {
            for &n in &config.n_grid {
                if let std::collections::hash_map::Entry::Vacant(e) = korobov.entry((n, f.d)) {
                    e.insert(korobov_search(n as u64, f.d, CriterionKind::Wd)?.0);
                }
            }
        }
    }
    let mut cells = Vec::new();
    for (fi, (f, mean)) in functions.iter().enumerate() {
        for (mi, &method) in config.methods.iter().enumerate() {
            for (ni, &n) in config.n_grid.iter().enumerate() {
                for r in 0..config.replicates {
                    cells.push((fi, f, *mean, mi, method, ni, n, r));
                }
            }
        }
    }
    cells
        .par_iter()
        .map(|&(fi, f, mean, _, method, _, n, r)| {
            // seeds depend on the function, n and replicate but not the method, so methods are
            // compared on common random numbers where they share a generator
            let seed = cell_seed(config.seed, &[fi as u64, n as u64, r as u64]);
            let x = match method {
                Method::Plhd => randomly_shifted(&korobov[&(n, f.d)], seed)?.points(),
                _ => generate(method, n, f.d, seed, &config.budget)?,
            };
            let estimate = x.rows().map(|row| f.eval(row)).sum::<f64>() / n as f64;
            Ok(IntegrationRow {
                function: f.name,
                method,
                n,
                replicate: r,
                error: (estimate - mean).abs(),
            })
        })
        .collect()
}

pub fn write_integration_csv<W: Write>(w: W, config: &IntegrationConfig, rows: &[IntegrationRow]) -> Result<()> {
    let mut w = w;
    let cfg = serde_json::to_string(config)?;
    writeln!(w, "{}", metadata_line(config.seed, &cfg))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["function", "method", "n", "replicate", "error"])?;
    for r in rows {
        out.write_record([
            r.function.to_string(),
            r.method.to_string(),
            r.n.to_string(),
            r.replicate.to_string(),
            fmt17(r.error),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Median of the errors in one (function, method, n) cell.
pub fn median_error(rows: &[IntegrationRow], function: FunctionName, method: Method, n: usize) -> Option<f64> {
    let mut e: Vec<f64> = rows
        .iter()
        .filter(|r| r.function == function && r.method == method && r.n == n)
        .map(|r| r.error)
        .collect();
    median(&mut e)
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    Some(if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    })
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub const STUDY_KINDS: [CriterionKind; 4] = [
    CriterionKind::Ws,
    CriterionKind::Wp,
    CriterionKind::Wd,
    CriterionKind::Ws2,
];

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationStudy {
    pub kinds: [CriterionKind; 4],
    /// Correlations over random lattice LHDs with distinct generator entries.
    pub llhd: [[f64; 4]; 4],
    /// Correlations over random LHDs.
    pub lhd: [[f64; 4]; 4],
    /// Criterion values per design, in `kinds` order.
    pub llhd_values: Vec<[f64; 4]>,
    pub lhd_values: Vec<[f64; 4]>,
}

fn corr_matrix4(values: &[[f64; 4]]) -> [[f64; 4]; 4] {
    let cols: Vec<Vec<f64>> = (0..4).map(|k| values.iter().map(|v| v[k]).collect()).collect();
    let mut out = [[1.0; 4]; 4];
    for a in 0..4 {
        for b in a + 1..4 {
            let r = pearson(&cols[a], &cols[b]);
            out[a][b] = r;
            out[b][a] = r;
        }
    }
    out
}

/// Correlations between WS, WP, WD and WS2 over `num_designs` random lattice LHDs and as many
/// random LHDs.
pub fn correlation_study(n: usize, d: usize, num_designs: usize, seed: u64) -> Result<CorrelationStudy> {
    if num_designs < 2 {
        return Err(Error::InvalidParameter("need at least two designs".into()));
    }
    let residues = coprime_residues(n as u64)?;
    if d > residues.len() {
        return Err(Error::InvalidParameter(format!(
            "d = {d} exceeds the {} admissible distinct generator entries",
            residues.len()
        )));
    }
    let llhd_values: Vec<[f64; 4]> = (0..num_designs)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(cell_seed(seed, &[1, t as u64]));
            let v: Vec<u64> = sample(&mut rng, residues.len(), d)
                .into_iter()
                .map(|i| residues[i])
                .collect();
            let spec = LatticeSpec::unshifted(n as u64, v)?;
            let mut out = [0.0; 4];
            for (slot, kind) in out.iter_mut().zip(STUDY_KINDS) {
                *slot = lattice_criterion(&spec, kind)?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let lhd_values: Vec<[f64; 4]> = (0..num_designs)
        .into_par_iter()
        .map(|t| {
            let x = random_lhd(n, d, cell_seed(seed, &[2, t as u64]));
            let mut out = [0.0; 4];
            for (slot, kind) in out.iter_mut().zip(STUDY_KINDS) {
                *slot = criterion_full(&x, kind)?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(CorrelationStudy {
        kinds: STUDY_KINDS,
        llhd: corr_matrix4(&llhd_values),
        lhd: corr_matrix4(&lhd_values),
        llhd_values,
        lhd_values,
    })
}

pub fn write_correlation_csv<W: Write>(mut w: W, study: &CorrelationStudy, seed: u64, config: &str) -> Result<()> {
    writeln!(w, "{}", metadata_line(seed, config))?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["family".to_string(), "criterion".to_string()];
    header.extend(study.kinds.iter().map(|k| k.to_string()));
    out.write_record(&header)?;
    for (family, m) in [("llhd", &study.llhd), ("lhd", &study.lhd)] {
        for (a, row) in m.iter().enumerate() {
            let mut rec = vec![family.to_string(), study.kinds[a].to_string()];
            rec.extend(row.iter().map(|&x| fmt17(x)));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmulationConfig {
    pub function: FunctionName,
    /// Desired number of RLHD points; `n` is chosen so the expected size matches.
    pub n_target: usize,
    pub m: u64,
    pub q_window: usize,
    pub windows: usize,
    pub n_test: usize,
    pub seed: u64,
    pub llhd_iterations: usize,
    pub max_evals: usize,
}

impl EmulationConfig {
    pub fn new(function: FunctionName, n_target: usize, m: u64, n_test: usize, seed: u64) -> Self {
        Self {
            function,
            n_target,
            m,
            q_window: 50,
            windows: 10,
            n_test,
            seed,
            llhd_iterations: 2000,
            max_evals: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmReport {
    pub rmse: f64,
    /// Largest absolute residual over the training sites.
    pub training_residual: f64,
    pub points: usize,
    pub theta: Vec<f64>,
    /// Factorizations used by the fitted models (excluding lengthscale estimation).
    pub decompositions: usize,
    pub estimation_evaluations: usize,
    pub estimate_secs: f64,
    pub fit_secs: f64,
    pub predict_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmulationReport {
    pub function: FunctionName,
    pub n: u64,
    pub m: u64,
    pub v: Vec<u64>,
    pub delta: Vec<i64>,
    pub rlhd: ArmReport,
    pub pd: ArmReport,
}

fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    (pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64).sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Grid resolution giving an expected RLHD size of about `n_target`.
pub fn resolution_for(n_target: usize, m: u64, d: usize) -> u64 {
    let n = ((n_target as f64).ln() + (d as f64 - 1.0) * (m as f64).ln()) / d as f64;
    (n.exp().round() as u64).max(m)
}

/// RLHD local emulation against the partitioned-design baseline (`2^d` half-width cells, one
/// random LHD and one maximum-likelihood kriging model per cell) with the same point budget.
pub fn emulation_benchmark(config: &EmulationConfig) -> Result<EmulationReport> {
    emulation_benchmark_with(&TestFunction::with_default_dim(config.function), config)
}

/// [`emulation_benchmark`] on an explicit function, e.g. one with a non-default domain.
pub fn emulation_benchmark_with(f: &TestFunction, config: &EmulationConfig) -> Result<EmulationReport> {
    let d = f.d;
    let m = config.m;
    let n = resolution_for(config.n_target, m, d);

    // local generator from the lattice search at size m
    let search = LlhdSearchConfig::new(m, d, CriterionKind::Wd, derive_seed(config.seed, 1))
        .iterations(config.llhd_iterations);
    let v = llhd_search(&search)?.spec.v().to_vec();
    let delta = random_shift(m, d, derive_seed(config.seed, 2));
    let spec = RlhdSpec::new(n, m, v.clone(), delta.clone())?;
    let (x, _) = rlhd_points(&spec)?;
    let y: Vec<f64> = (0..x.n()).into_par_iter().map(|r| f.eval(x.row(r))).collect();

    let mut trng = rng_from_seed(derive_seed(config.seed, 3));
    let test: Vec<f64> = (0..config.n_test * d).map(|_| trng.gen::<f64>()).collect();
    let test = Design::new(config.n_test, d, test)?;
    let truth: Vec<f64> = test.rows().map(|r| f.eval(r)).collect();

    // RLHD arm
    let t0 = Instant::now();
    let mut est_cfg = EstimationConfig::new(derive_seed(config.seed, 4));
    est_cfg.q_window = config.q_window;
    est_cfg.windows = config.windows;
    est_cfg.max_evals = config.max_evals;
    let est = estimate_lengthscales(&spec, &y, &est_cfg)?;
    let t1 = Instant::now();
    let model = fit_shared_model(&spec, &y, &est.params)?;
    let t2 = Instant::now();
    let pred: Vec<f64> = model.predict_batch(&test).iter().map(|p| p.mean).collect();
    let t3 = Instant::now();
    let train_pred: Vec<f64> = model.predict_batch(&x).iter().map(|p| p.mean).collect();
    let rlhd = ArmReport {
        rmse: rmse(&pred, &truth),
        training_residual: max_abs_diff(&train_pred, &y),
        points: x.n(),
        theta: est.params.theta.clone(),
        decompositions: model.decompositions(),
        estimation_evaluations: est.evaluations,
        estimate_secs: (t1 - t0).as_secs_f64(),
        fit_secs: (t2 - t1).as_secs_f64(),
        predict_secs: (t3 - t2).as_secs_f64(),
    };

    let pd = partitioned_baseline(f, x.n(), config, &test, &truth)?;
    Ok(EmulationReport {
        function: f.name,
        n,
        m,
        v,
        delta,
        rlhd,
        pd,
    })
}

fn cell_of(x: &[f64]) -> usize {
    x.iter()
        .enumerate()
        .map(|(k, &v)| if v >= 0.5 { 1 << k } else { 0 })
        .sum()
}

fn partitioned_baseline(
    f: &TestFunction,
    budget: usize,
    config: &EmulationConfig,
    test: &Design,
    truth: &[f64],
) -> Result<ArmReport> {
    let d = f.d;
    let cells = 1usize << d;
    let per_cell = (budget / cells).max(3);
    let t0 = Instant::now();
    let fitted: Vec<(Kriging, crate::emulator::WindowFit, Design, Vec<f64>, usize)> = (0..cells)
        .into_par_iter()
        .map(|c| {
            let local = random_lhd(per_cell, d, cell_seed(config.seed, &[5, c as u64]));
            let pts: Vec<f64> = local
                .as_slice()
                .iter()
                .enumerate()
                .map(|(idx, &u)| 0.5 * (u + ((c >> (idx % d)) & 1) as f64))
                .collect();
            let sites = Design::new(per_cell, d, pts)?;
            let y: Vec<f64> = sites.rows().map(|r| f.eval(r)).collect();
            let (params, _, evals, _) =
                composite_mle(&sites, std::slice::from_ref(&y), &vec![0.25; d], DEFAULT_NUGGET, config.max_evals)?;
            let k = Kriging::fit(&sites, &params)?;
            let fit = k.window(&y);
            Ok((k, fit, sites, y, evals))
        })
        .collect::<Result<_>>()?;
    let t1 = Instant::now();
    let pred: Vec<f64> = test
        .rows()
        .map(|r| {
            let (k, fit, ..) = &fitted[cell_of(r)];
            k.predict(fit, r).mean
        })
        .collect();
    let t2 = Instant::now();
    let mut training_residual: f64 = 0.0;
    for (k, fit, sites, y, _) in &fitted {
        for (s, row) in sites.rows().enumerate() {
            training_residual = training_residual.max((k.predict(fit, row).mean - y[s]).abs());
        }
    }
    Ok(ArmReport {
        rmse: rmse(&pred, truth),
        training_residual,
        points: per_cell * cells,
        theta: fitted[0].0.params().theta.clone(),
        decompositions: fitted.iter().map(|t| t.0.decompositions()).sum(),
        estimation_evaluations: fitted.iter().map(|t| t.4).sum(),
        estimate_secs: (t1 - t0).as_secs_f64(),
        fit_secs: 0.0,
        predict_secs: (t2 - t1).as_secs_f64(),
    })
}

pub fn write_emulation_csv<W: Write>(mut w: W, config: &EmulationConfig, reports: &[EmulationReport]) -> Result<()> {
    let cfg = serde_json::to_string(config)?;
    writeln!(w, "{}", metadata_line(config.seed, &cfg))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "function",
        "arm",
        "points",
        "rmse",
        "training_residual",
        "decompositions",
        "estimation_evaluations",
        "estimate_secs",
        "fit_secs",
        "predict_secs",
    ])?;
    for r in reports {
        for (arm, a) in [("rlhd", &r.rlhd), ("pd", &r.pd)] {
            out.write_record([
                r.function.to_string(),
                arm.to_string(),
                a.points.to_string(),
                fmt17(a.rmse),
                fmt17(a.training_residual),
                a.decompositions.to_string(),
                a.estimation_evaluations.to_string(),
                format!("{:.3}", a.estimate_secs),
                format!("{:.3}", a.fit_secs),
                format!("{:.3}", a.predict_secs),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Lengthscales from plain maximum likelihood on one design, for callers without an RLHD.
pub fn mle_params(sites: &Design, y: &[f64], max_evals: usize) -> Result<GpHyperParams> {
    let theta0 = vec![0.25; sites.d()];
    Ok(composite_mle(sites, &[y.to_vec()], &theta0, DEFAULT_NUGGET, max_evals)?.0)
}
