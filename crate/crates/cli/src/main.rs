use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use latticelhd::bench::{
    correlation_study, emulation_benchmark, integration_benchmark, write_correlation_csv,
    write_emulation_csv, write_integration_csv, EmulationConfig, GeneratorBudget, IntegrationConfig,
    Method,
};
use latticelhd::design::criterion_full;
use latticelhd::emulator::{estimate_lengthscales, fit_shared_model, EstimationConfig, GpHyperParams};
use latticelhd::io::{fmt17, load_design, load_values, metadata_line, read_design_csv, write_design_csv, write_table, Sidecar};
use latticelhd::lattice::gaussian_reduce;
use latticelhd::optim::{korobov_search, llhd_search, random_lhd, sa_optimize_lhd_with, LlhdSearchConfig, SaConfig};
use latticelhd::rlhd::{random_shift, rlhd_points, RlhdSpec};
use latticelhd::rng::derive_seed;
use latticelhd::testfns::FunctionName;
use latticelhd::{CriterionKind, Design, Error};
use log::{info, warn};

#[derive(Parser)]
#[command(name = "latticelhd", version, about = "Lattice-based Latin hypercube designs and local GP emulation")]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a design and write it as CSV (plus a JSON sidecar for lattice designs).
    Generate(GenerateArgs),
    /// Criterion values of a design file.
    Evaluate(EvaluateArgs),
    /// Planar lattice reduction of a two-dimensional generator.
    Reduce(ReduceArgs),
    /// Correlations between WS, WP, WD and WS2 over random designs.
    CorrStudy(CorrArgs),
    /// Integration error of design families on test functions.
    BenchIntegrate(IntegrateArgs),
    /// Local emulation on an RLHD against the partitioned baseline.
    BenchEmulate(EmulateBenchArgs),
    /// Fit the shared local model on an RLHD and predict at test points.
    Emulate(EmulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenMethod {
    Lhd,
    Olhd,
    Llhd,
    Plhd,
    SlicedLlhd,
    Rlhd,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    method: GenMethod,
    #[arg(long)]
    n: u64,
    /// Dimension (taken from --v when given).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value = "WD")]
    criterion: CriterionKind,
    #[arg(long, alias = "iterations", default_value_t = 2000)]
    iters: usize,
    /// Restarts of the lattice search (default scales with the budget).
    #[arg(long)]
    restarts: Option<usize>,
    /// Number of slices for sliced-llhd.
    #[arg(long)]
    slices: Option<u64>,
    /// Window size of an RLHD.
    #[arg(long)]
    m: Option<u64>,
    /// Generator of an RLHD (default: lattice search at size m).
    #[arg(long, value_delimiter = ',')]
    v: Option<Vec<u64>>,
    /// Integer shift of an RLHD (default: random).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    delta: Option<Vec<i64>>,
    /// Initial temperature of the annealer.
    #[arg(long, default_value_t = 10.0)]
    temperature: f64,
    /// Cooling factor of the annealer.
    #[arg(long, default_value_t = 0.95)]
    cooling: f64,
    /// Stride of `iter,criterion_best` progress lines on stderr (0 disables).
    #[arg(long, default_value_t = 100)]
    progress_every: usize,
    /// Sidecar path (default: the output path with a .json extension).
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    design: PathBuf,
    /// Criteria to compute (default: all).
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<CriterionKind>>,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    n: u64,
    /// Two generator entries, e.g. `1,7`.
    #[arg(long, value_delimiter = ',')]
    v: Vec<u64>,
}

#[derive(Args)]
struct CorrArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, default_value_t = 1000)]
    designs: usize,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long, value_delimiter = ',', default_value = "borehole")]
    functions: Vec<FunctionName>,
    #[arg(long, value_delimiter = ',', default_value = "lhd,olhd-wd,llhd-wd,llhd-ws2,plhd")]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    #[arg(long, default_value_t = 2000)]
    sa_iterations: usize,
    #[arg(long, default_value_t = 2000)]
    llhd_iterations: usize,
}

#[derive(Args)]
struct EmulateBenchArgs {
    #[arg(long, default_value = "ackley")]
    function: FunctionName,
    #[arg(long, default_value_t = 2000)]
    n_target: usize,
    #[arg(long, default_value_t = 100)]
    m: u64,
    /// Points per lengthscale-estimation window.
    #[arg(long, default_value_t = 50)]
    q_window: usize,
    #[arg(long, default_value_t = 10)]
    windows: usize,
    #[arg(long, default_value_t = 200)]
    n_test: usize,
    /// Number of replicate seeds, derived from --seed.
    #[arg(long, default_value_t = 1)]
    replicates: usize,
}

#[derive(Args)]
struct EmulateArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    sidecar: PathBuf,
    #[arg(long)]
    outputs: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Prediction file (alternative to --out).
    #[arg(long)]
    pred: Option<PathBuf>,
    /// `auto` or comma-separated lengthscales.
    #[arg(long, default_value = "auto")]
    theta: String,
    #[arg(long, default_value_t = 50)]
    q_window: usize,
    #[arg(long, default_value_t = 10)]
    windows: usize,
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn config_text(parts: &[(&str, String)]) -> String {
    parts
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn progress(stride: usize, trace: &[f64]) {
    if stride == 0 {
        return;
    }
    let mut err = io::stderr().lock();
    for (t, c) in trace.iter().enumerate() {
        if (t + 1) % stride == 0 || t + 1 == trace.len() {
            let _ = writeln!(err, "{},{}", t + 1, fmt17(*c));
        }
    }
}

fn generate(cli: &Cli, a: &GenerateArgs) -> anyhow::Result<()> {
    let d = match (&a.d, &a.v) {
        (Some(d), _) => *d,
        (None, Some(v)) => v.len(),
        (None, None) => bail!(Error::InvalidParameter("--d is required".into())),
    };
    if a.n == 0 || d == 0 {
        bail!(Error::InvalidParameter("--n and --d must be positive".into()));
    }
    let seed = cli.seed;
    let cfg = config_text(&[
        ("method", a.method.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()),
        ("n", a.n.to_string()),
        ("d", d.to_string()),
        ("criterion", a.criterion.to_string()),
        ("iters", a.iters.to_string()),
        ("restarts", format!("{:?}", a.restarts)),
        ("slices", format!("{:?}", a.slices)),
        ("m", format!("{:?}", a.m)),
        ("v", format!("{:?}", a.v)),
        ("delta", format!("{:?}", a.delta)),
    ]);
    let meta = metadata_line(seed, &cfg);
    let llhd_config = || {
        let mut c = LlhdSearchConfig::new(a.n, d, a.criterion, seed).iterations(a.iters);
        if let Some(q) = a.restarts {
            c = c.restarts(q);
        }
        c
    };
    let (design, sidecar): (Design, Option<Sidecar>) = match a.method {
        GenMethod::Lhd => (random_lhd(a.n as usize, d, seed), None),
        GenMethod::Olhd => {
            let mut c = SaConfig::new(a.n as usize, d, a.criterion, seed).iterations(a.iters);
            c.initial_temp = a.temperature;
            c.cooling = a.cooling;
            let stride = a.progress_every;
            let mut err = io::stderr().lock();
            let res = sa_optimize_lhd_with(&c, |t, best| {
                if stride > 0 && ((t + 1) % stride == 0 || t + 1 == a.iters) {
                    let _ = writeln!(err, "{},{}", t + 1, fmt17(best));
                }
            })?;
            info!("annealing: {} -> {}", res.initial_criterion, res.criterion);
            (res.design, None)
        }
        GenMethod::Llhd | GenMethod::SlicedLlhd => {
            let mut c = llhd_config();
            if a.method == GenMethod::SlicedLlhd {
                let s = a
                    .slices
                    .ok_or_else(|| Error::InvalidParameter("sliced-llhd needs --slices".into()))?;
                c = c.sliced(s);
            }
            let res = llhd_search(&c)?;
            progress(a.progress_every, &res.trace);
            info!("lattice search: {} restarts, best {} = {}", res.restarts, a.criterion, res.criterion);
            let kind = if a.method == GenMethod::Llhd { "llhd" } else { "sliced-llhd" };
            let mut s = Sidecar::for_lattice(kind, &res.spec);
            s.criterion = Some(a.criterion);
            s.value = Some(res.criterion);
            s.seed = Some(seed);
            s.layout = Some(res.layout.clone());
            (res.spec.points(), Some(s))
        }
        GenMethod::Plhd => {
            let (spec, design, value) = korobov_search(a.n, d, a.criterion)?;
            let mut s = Sidecar::for_lattice("plhd", &spec);
            s.criterion = Some(a.criterion);
            s.value = Some(value);
            (design, Some(s))
        }
        GenMethod::Rlhd => {
            let m = a
                .m
                .ok_or_else(|| Error::InvalidParameter("rlhd needs --m".into()))?;
            let v = match &a.v {
                Some(v) => v.clone(),
                None => {
                    let c = LlhdSearchConfig::new(m, d, a.criterion, derive_seed(seed, 1)).iterations(a.iters);
                    let res = llhd_search(&c)?;
                    progress(a.progress_every, &res.trace);
                    res.spec.v().to_vec()
                }
            };
            let delta = match &a.delta {
                Some(delta) => delta.clone(),
                None => random_shift(m, d, derive_seed(seed, 2)),
            };
            let spec = RlhdSpec::new(a.n, m, v, delta)?;
            let (x, _) = rlhd_points(&spec)?;
            let mut s = Sidecar::for_rlhd(&spec);
            s.seed = Some(seed);
            (x, Some(s))
        }
    };
    write_design_csv(open_out(cli.out.as_deref())?, &design, Some(&meta))?;
    if let Some(s) = sidecar {
        let path = a
            .sidecar
            .clone()
            .or_else(|| cli.out.as_ref().map(|p| p.with_extension("json")));
        match path {
            Some(p) => s.save(&p)?,
            None => warn!("design written to stdout; pass --sidecar to keep the lattice parameters"),
        }
    }
    Ok(())
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> anyhow::Result<()> {
    let x = load_design(&a.design).with_context(|| format!("cannot read {}", a.design.display()))?;
    let kinds = a.criteria.clone().unwrap_or_else(|| CriterionKind::ALL.to_vec());
    let mut out = open_out(cli.out.as_deref())?;
    writeln!(out, "criterion,value")?;
    for k in kinds {
        writeln!(out, "{k},{}", fmt17(criterion_full(&x, k)?))?;
    }
    out.flush()?;
    Ok(())
}

fn reduce(cli: &Cli, a: &ReduceArgs) -> anyhow::Result<()> {
    if a.v.len() != 2 {
        bail!(Error::InvalidParameter(format!("--v needs two entries, got {}", a.v.len())));
    }
    let r = gaussian_reduce(a.n, [a.v[0], a.v[1]])?;
    let mut out = open_out(cli.out.as_deref())?;
    writeln!(out, "a1,a2,b1,b2,y,z,separation,fill")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        r.a[0],
        r.a[1],
        r.b[0],
        r.b[1],
        fmt17(r.y),
        fmt17(r.z),
        fmt17(r.separation()),
        fmt17(r.fill())
    )?;
    out.flush()?;
    Ok(())
}

fn corr_study(cli: &Cli, a: &CorrArgs) -> anyhow::Result<()> {
    let study = correlation_study(a.n, a.d, a.designs, cli.seed)?;
    let cfg = config_text(&[
        ("n", a.n.to_string()),
        ("d", a.d.to_string()),
        ("designs", a.designs.to_string()),
    ]);
    write_correlation_csv(open_out(cli.out.as_deref())?, &study, cli.seed, &cfg)?;
    Ok(())
}

fn bench_integrate(cli: &Cli, a: &IntegrateArgs) -> anyhow::Result<()> {
    let cfg = IntegrationConfig {
        functions: a.functions.clone(),
        methods: a.methods.clone(),
        n_grid: a.n_grid.clone(),
        replicates: a.replicates,
        seed: cli.seed,
        budget: GeneratorBudget {
            sa_iterations: a.sa_iterations,
            llhd_iterations: a.llhd_iterations,
        },
    };
    let rows = integration_benchmark(&cfg)?;
    write_integration_csv(open_out(cli.out.as_deref())?, &cfg, &rows)?;
    Ok(())
}

fn bench_emulate(cli: &Cli, a: &EmulateBenchArgs) -> anyhow::Result<()> {
    if a.replicates == 0 {
        bail!(Error::InvalidParameter("need at least one replicate".into()));
    }
    let mut base = EmulationConfig::new(a.function, a.n_target, a.m, a.n_test, cli.seed);
    base.q_window = a.q_window;
    base.windows = a.windows;
    let mut reports = Vec::new();
    for r in 0..a.replicates {
        let mut c = base.clone();
        c.seed = derive_seed(cli.seed, r as u64);
        let rep = emulation_benchmark(&c)?;
        info!(
            "replicate {r}: RLHD RMSE {} ({} points), PD RMSE {}",
            rep.rlhd.rmse, rep.rlhd.points, rep.pd.rmse
        );
        reports.push(rep);
    }
    write_emulation_csv(open_out(cli.out.as_deref())?, &base, &reports)?;
    Ok(())
}

fn emulate(cli: &Cli, a: &EmulateArgs) -> anyhow::Result<()> {
    let spec = Sidecar::load(&a.sidecar)
        .with_context(|| format!("cannot read {}", a.sidecar.display()))?
        .rlhd_spec()?;
    let x = load_design(&a.design).with_context(|| format!("cannot read {}", a.design.display()))?;
    let (expect, _) = rlhd_points(&spec)?;
    let same = x.n() == expect.n()
        && x.d() == expect.d()
        && x.as_slice().iter().zip(expect.as_slice()).all(|(p, q)| (p - q).abs() < 1e-9);
    if !same {
        bail!(Error::InvalidDesign(format!(
            "{} does not hold the {} points of the sidecar design in enumeration order",
            a.design.display(),
            expect.n()
        )));
    }
    let y = load_values(&a.outputs).with_context(|| format!("cannot read {}", a.outputs.display()))?;
    let params = if a.theta.eq_ignore_ascii_case("auto") {
        let mut c = EstimationConfig::new(cli.seed);
        c.q_window = a.q_window;
        c.windows = a.windows;
        let est = estimate_lengthscales(&spec, &y, &c)?;
        info!("estimated lengthscales {:?} in {} evaluations", est.params.theta, est.evaluations);
        est.params
    } else {
        let theta = a
            .theta
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad lengthscale `{t}`")))
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        GpHyperParams::with_theta(theta)?
    };
    let model = fit_shared_model(&spec, &y, &params)?;
    let test = read_design_csv(File::open(&a.test).with_context(|| format!("cannot open {}", a.test.display()))?)?;
    if test.d() != spec.d() {
        bail!(Error::InvalidDesign(format!(
            "test points have {} columns, design has {}",
            test.d(),
            spec.d()
        )));
    }
    let pred = model.predict_batch(&test);
    let cfg = config_text(&[
        ("sidecar", a.sidecar.display().to_string()),
        ("theta", format!("{:?}", params.theta)),
    ]);
    let out = open_out(a.pred.as_deref().or(cli.out.as_deref()))?;
    write_table(
        out,
        &["mean", "variance"],
        pred.iter().map(|p| vec![p.mean, p.variance]),
        Some(&metadata_line(cli.seed, &cfg)),
    )?;
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!(Error::InvalidParameter("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Reduce(a) => reduce(cli, a),
        Command::CorrStudy(a) => corr_study(cli, a),
        Command::BenchIntegrate(a) => bench_integrate(cli, a),
        Command::BenchEmulate(a) => bench_emulate(cli, a),
        Command::Emulate(a) => emulate(cli, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
