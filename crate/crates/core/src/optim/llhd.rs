//! Generator-vector search for lattice LHDs: restart-based random search, power (Korobov)
//! generators, and the sliced objective.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{CriterionKind, Design, DEFAULT_POWER};
use crate::error::{Error, Result};
use crate::lattice::{
    coprime_residues, gcd, lattice_criterion_of, BivariateCache, LatticeSpec, PairTerm, PairTrial,
};
use crate::rng::{derive_seed, rng_from_seed};

/// Search settings. `restarts = None` uses `max(T / (5·p(n)·d), 1)`.
#[derive(Debug, Clone)]
pub struct LlhdSearchConfig {
    pub n: u64,
    pub d: usize,
    /// Total iterations over all restarts.
    pub iterations: usize,
    pub restarts: Option<usize>,
    pub kind: CriterionKind,
    /// Optimize `c(full) + c(slice 0)` for this many slices instead of `c(full)`.
    pub slices: Option<u64>,
    pub power: f64,
    pub seed: u64,
}

impl LlhdSearchConfig {
    pub fn new(n: u64, d: usize, kind: CriterionKind, seed: u64) -> Self {
        Self {
            n,
            d,
            iterations: 2000,
            restarts: None,
            kind,
            slices: None,
            power: DEFAULT_POWER,
            seed,
        }
    }

    pub fn iterations(mut self, t: usize) -> Self {
        self.iterations = t;
        self
    }

    pub fn restarts(mut self, q: usize) -> Self {
        self.restarts = Some(q);
        self
    }

    pub fn sliced(mut self, s: u64) -> Self {
        self.slices = Some(s);
        self
    }
}

/// Column layout of a generator vector: `optimized` searched columns followed by `blocks`
/// verbatim copies of `P(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorLayout {
    pub optimized: usize,
    pub blocks: usize,
    pub block_len: usize,
}

#[derive(Debug, Clone)]
pub struct LlhdResult {
    pub spec: LatticeSpec,
    /// Objective of the full generator vector.
    pub criterion: f64,
    pub layout: GeneratorLayout,
    pub restarts: usize,
    /// Index of the restart that produced the result.
    pub best_restart: usize,
    /// Best-so-far objective of the winning restart, one entry per iteration.
    pub trace: Vec<f64>,
}

/// Outcome of one restart, over the optimized columns only.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub v: Vec<u64>,
    pub criterion: f64,
    pub trace: Vec<f64>,
}

struct Plan {
    residues: Vec<u64>,
    layout: GeneratorLayout,
    restarts: usize,
    per_restart: usize,
}

fn plan(config: &LlhdSearchConfig) -> Result<Plan> {
    if config.n < 3 {
        return Err(Error::InvalidParameter(format!(
            "lattice search needs n >= 3, got {}",
            config.n
        )));
    }
    if config.d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    if !matches!(
        config.kind,
        CriterionKind::Ws
            | CriterionKind::Wa
            | CriterionKind::Wp
            | CriterionKind::Wd
            | CriterionKind::Ws2
            | CriterionKind::Wf2
    ) {
        return Err(Error::Unsupported(format!(
            "lattice search does not support {}",
            config.kind
        )));
    }
    if let Some(s) = config.slices {
        if s == 0 || config.n % s != 0 || config.n / s < 2 {
            return Err(Error::InvalidParameter(format!(
                "slice count {s} must divide n = {} leaving at least two points per slice",
                config.n
            )));
        }
    }
    let residues = coprime_residues(config.n)?;
    let p = residues.len();
    let blocks = if config.d > p { config.d / p } else { 0 };
    let layout = GeneratorLayout {
        optimized: config.d - blocks * p,
        blocks,
        block_len: p,
    };
    let restarts = config
        .restarts
        .unwrap_or_else(|| (config.iterations / (5 * p * config.d)).max(1));
    if restarts == 0 {
        return Err(Error::InvalidParameter("restart count must be at least 1".into()));
    }
    Ok(Plan {
        residues,
        layout,
        restarts,
        per_restart: config.iterations / restarts,
    })
}

/// Objective over generator vectors with single-entry trial moves.
enum Objective {
    Full {
        n: u64,
        kind: CriterionKind,
        power: f64,
        v: Vec<u64>,
        pending: Option<(usize, u64)>,
    },
    Bivariate {
        cache: Option<BivariateCache>,
        term: PairTerm,
        n: u64,
        pending: Option<PairTrial>,
    },
    Sliced {
        n: u64,
        s: u64,
        kind: CriterionKind,
        power: f64,
        v: Vec<u64>,
        pending: Option<(usize, u64)>,
    },
}

fn sliced_value(n: u64, s: u64, v: &[u64], kind: CriterionKind, power: f64) -> Result<f64> {
    Ok(criterion_of(n, v, kind, power)? + criterion_of(n / s, v, kind, power)?)
}

/// Lattice criterion tolerant of fewer than two columns for bivariate kinds (value 0).
fn criterion_of(n: u64, v: &[u64], kind: CriterionKind, power: f64) -> Result<f64> {
    if kind.is_bivariate() && v.len() < 2 {
        return Ok(0.0);
    }
    let v: Vec<u64> = v.iter().map(|x| x % n).collect();
    lattice_criterion_of(n, &v, kind, power)
}

impl Objective {
    fn new(config: &LlhdSearchConfig) -> Self {
        match (config.slices, config.kind) {
            (Some(s), kind) => Objective::Sliced {
                n: config.n,
                s,
                kind,
                power: config.power,
                v: Vec::new(),
                pending: None,
            },
            (None, CriterionKind::Ws2) | (None, CriterionKind::Wf2) => Objective::Bivariate {
                cache: None,
                term: if config.kind == CriterionKind::Ws2 {
                    PairTerm::Separation
                } else {
                    PairTerm::Fill
                },
                n: config.n,
                pending: None,
            },
            (None, kind) => Objective::Full {
                n: config.n,
                kind,
                power: config.power,
                v: Vec::new(),
                pending: None,
            },
        }
    }

    fn reset(&mut self, start: &[u64]) -> Result<f64> {
        match self {
            Objective::Full {
                n, kind, power, v, ..
            } => {
                *v = start.to_vec();
                criterion_of(*n, v, *kind, *power)
            }
            Objective::Sliced {
                n,
                s,
                kind,
                power,
                v,
                ..
            } => {
                *v = start.to_vec();
                sliced_value(*n, *s, v, *kind, *power)
            }
            Objective::Bivariate { cache, term, n, .. } => {
                if start.len() < 2 {
                    *cache = None;
                    return Ok(0.0);
                }
                let c = BivariateCache::new(*n, start, *term)?;
                let total = c.total();
                *cache = Some(c);
                Ok(total)
            }
        }
    }

    fn trial(&mut self, k: usize, new_vk: u64) -> Result<f64> {
        match self {
            Objective::Full {
                n,
                kind,
                power,
                v,
                pending,
            } => {
                let old = std::mem::replace(&mut v[k], new_vk);
                let value = criterion_of(*n, v, *kind, *power);
                v[k] = old;
                *pending = Some((k, new_vk));
                value
            }
            Objective::Sliced {
                n,
                s,
                kind,
                power,
                v,
                pending,
            } => {
                let old = std::mem::replace(&mut v[k], new_vk);
                let value = sliced_value(*n, *s, v, *kind, *power);
                v[k] = old;
                *pending = Some((k, new_vk));
                value
            }
            Objective::Bivariate { cache, pending, .. } => match cache {
                None => Ok(0.0),
                Some(c) => {
                    let t = c.trial(k, new_vk)?;
                    let total = t.total();
                    *pending = Some(t);
                    Ok(total)
                }
            },
        }
    }

    fn accept(&mut self) {
        match self {
            Objective::Full { v, pending, .. } | Objective::Sliced { v, pending, .. } => {
                if let Some((k, x)) = pending.take() {
                    v[k] = x;
                }
            }
            Objective::Bivariate { cache, pending, .. } => {
                if let (Some(c), Some(t)) = (cache.as_mut(), pending.take()) {
                    c.apply(t);
                }
            }
        }
    }
}

/// Draws an element of `residues` not in `current`. `None` when every residue is in use.
fn draw_replacement(rng: &mut impl Rng, residues: &[u64], current: &[u64]) -> Option<u64> {
    let p = residues.len();
    if p >= 2 * current.len() {
        loop {
            let x = residues[rng.gen_range(0..p)];
            if !current.contains(&x) {
                return Some(x);
            }
        }
    }
    let free: Vec<u64> = residues
        .iter()
        .copied()
        .filter(|x| !current.contains(x))
        .collect();
    if free.is_empty() {
        None
    } else {
        Some(free[rng.gen_range(0..free.len())])
    }
}

/// Restart `restart` of the search, run in isolation on its derived seed.
pub fn llhd_restart(config: &LlhdSearchConfig, restart: usize) -> Result<RestartOutcome> {
    let plan = plan(config)?;
    run_restart(config, &plan, restart)
}

fn run_restart(config: &LlhdSearchConfig, plan: &Plan, restart: usize) -> Result<RestartOutcome> {
    let mut rng = rng_from_seed(derive_seed(config.seed, restart as u64 + 1));
    let residues = &plan.residues;
    let dd = plan.layout.optimized;
    let mut v: Vec<u64> = sample(&mut rng, residues.len(), dd)
        .into_iter()
        .map(|i| residues[i])
        .collect();
    let mut objective = Objective::new(config);
    let mut best = objective.reset(&v)?;
    let mut trace = Vec::with_capacity(plan.per_restart);
    for _ in 0..plan.per_restart {
        if dd > 0 {
            let k = rng.gen_range(0..dd);
            if let Some(x) = draw_replacement(&mut rng, residues, &v) {
                let c = objective.trial(k, x)?;
                if c <= best {
                    objective.accept();
                    v[k] = x;
                    best = c;
                }
            }
        }
        trace.push(best);
    }
    Ok(RestartOutcome {
        v,
        criterion: best,
        trace,
    })
}

/// Random search over generators; never enumerates the design points.
pub fn llhd_search(config: &LlhdSearchConfig) -> Result<LlhdResult> {
    let plan = plan(config)?;
    let outcomes: Vec<RestartOutcome> = (0..plan.restarts)
        .into_par_iter()
        .map(|q| run_restart(config, &plan, q))
        .collect::<Result<_>>()?;
    // first restart wins ties
    let (best_restart, best) = outcomes
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.criterion < a.1.criterion { b } else { a })
        .expect("at least one restart");

    let mut v = best.v;
    for _ in 0..plan.layout.blocks {
        v.extend_from_slice(&plan.residues);
    }
    let mut rng = rng_from_seed(config.seed);
    let delta: Vec<i64> = (0..config.d)
        .map(|_| rng.gen_range(0..config.n) as i64)
        .collect();
    let spec = LatticeSpec::new(config.n, v, delta)?;
    let criterion = if plan.layout.blocks == 0 {
        best.criterion
    } else {
        match config.slices {
            Some(s) => sliced_value(config.n, s, spec.v(), config.kind, config.power)?,
            None => criterion_of(config.n, spec.v(), config.kind, config.power)?,
        }
    };
    Ok(LlhdResult {
        spec,
        criterion,
        layout: plan.layout,
        restarts: plan.restarts,
        best_restart,
        trace: best.trace,
    })
}

/// [`llhd_search`] followed by enumeration of the winning design.
pub fn llhd_optimize(config: &LlhdSearchConfig) -> Result<(LatticeSpec, Design, LlhdResult)> {
    let result = llhd_search(config)?;
    let design = result
        .spec
        .points()
        .with_provenance("llhd", Some(config.seed));
    Ok((result.spec.clone(), design, result))
}

/// Power generator `(1, g, g², …) mod n`.
pub fn power_generator(n: u64, d: usize, g: u64) -> Vec<u64> {
    let mut v = Vec::with_capacity(d);
    let mut x = 1 % n;
    for _ in 0..d {
        v.push(x);
        x = ((x as u128 * g as u128) % n as u128) as u64;
    }
    v
}

/// Exhaustive search over power generators `g ∈ {1, …, n-1}` coprime to `n`, zero shift.
/// Ties go to the smallest `g`.
pub fn korobov_search(n: u64, d: usize, kind: CriterionKind) -> Result<(LatticeSpec, Design, f64)> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "power generator search needs n >= 3, got {n}"
        )));
    }
    let candidates: Vec<u64> = (1..n).filter(|&g| gcd(g, n) == 1).collect();
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|&g| criterion_of(n, &power_generator(n, d, g), kind, DEFAULT_POWER))
        .collect::<Result<_>>()?;
    let (best_i, best) = values
        .iter()
        .copied()
        .enumerate()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("g = 1 is always a candidate");
    let spec = LatticeSpec::unshifted(n, power_generator(n, d, candidates[best_i]))?;
    let design = spec.points().with_provenance("plhd", None);
    Ok((spec, design, best))
}

/// `c(full) + c(slice 0)` for `s` slices; every slice gives the same value.
pub fn sliced_objective(spec: &LatticeSpec, s: u64, kind: CriterionKind) -> Result<f64> {
    let n = spec.n();
    if s == 0 || n % s != 0 {
        return Err(Error::InvalidParameter(format!(
            "slice count {s} does not divide n = {n}"
        )));
    }
    sliced_value(n, s, spec.v(), kind, DEFAULT_POWER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{criterion_full, validate_lhd, LHD_TOL};
    use crate::lattice::{lattice_criterion, slice_extract};

    #[test]
    fn n8_d2_finds_the_only_pair() {
        let cfg = LlhdSearchConfig::new(8, 2, CriterionKind::Wd, 3).iterations(50);
        let res = llhd_search(&cfg).unwrap();
        let mut v = res.spec.v().to_vec();
        v.sort();
        assert_eq!(v, vec![1, 3]);
        let want = lattice_criterion(&LatticeSpec::unshifted(8, vec![1, 3]).unwrap(), CriterionKind::Wd).unwrap();
        assert!((res.criterion - want).abs() < 1e-12);
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = LlhdSearchConfig::new(101, 5, CriterionKind::Ws2, 17).iterations(600);
        let a = llhd_search(&cfg).unwrap();
        let b = llhd_search(&cfg).unwrap();
        assert_eq!(a.spec, b.spec);
        assert_eq!(a.criterion, b.criterion);
    }

    #[test]
    fn distinct_entries_and_lhd_output() {
        for kind in [CriterionKind::Ws, CriterionKind::Wa, CriterionKind::Wp, CriterionKind::Wd, CriterionKind::Ws2, CriterionKind::Wf2] {
            let cfg = LlhdSearchConfig::new(53, 4, kind, 1).iterations(300);
            let (spec, design, res) = llhd_optimize(&cfg).unwrap();
            let p = coprime_residues(53).unwrap();
            let mut v = spec.v().to_vec();
            assert!(v.iter().all(|x| p.contains(x)));
            v.sort();
            v.dedup();
            assert_eq!(v.len(), 4);
            assert!(validate_lhd(&design, LHD_TOL));
            assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
            let full = criterion_full(&design, kind).unwrap();
            // the fill oracle is a grid search, exact only to the grid spacing
            let tol = if kind == CriterionKind::Wf2 { 6.0 * 3e-3 } else { 1e-9 * full };
            assert!((full - res.criterion).abs() < tol, "{kind}");
        }
    }

    #[test]
    fn supplement_blocks_when_d_exceeds_p() {
        // P(10) = {1, 3}
        let cfg = LlhdSearchConfig::new(10, 5, CriterionKind::Wd, 2).iterations(40);
        let res = llhd_search(&cfg).unwrap();
        assert_eq!(
            res.layout,
            GeneratorLayout {
                optimized: 1,
                blocks: 2,
                block_len: 2
            }
        );
        assert_eq!(&res.spec.v()[1..], &[1, 3, 1, 3]);
        let want = lattice_criterion(&res.spec, CriterionKind::Wd).unwrap();
        assert!((res.criterion - want).abs() < 1e-12);
    }

    #[test]
    fn restart_merge_is_min_of_isolated_runs() {
        let cfg = LlhdSearchConfig::new(97, 4, CriterionKind::Wd, 5)
            .iterations(400)
            .restarts(4);
        let res = llhd_search(&cfg).unwrap();
        let runs: Vec<_> = (0..4).map(|q| llhd_restart(&cfg, q).unwrap()).collect();
        let min = runs.iter().map(|r| r.criterion).fold(f64::INFINITY, f64::min);
        assert_eq!(res.criterion, min);
        assert_eq!(res.spec.v(), runs[res.best_restart].v.as_slice());
    }

    #[test]
    fn default_restart_count() {
        // p(100) = 20, T / (5·20·4) = 25
        let cfg = LlhdSearchConfig::new(100, 4, CriterionKind::Wd, 1).iterations(10_000);
        assert_eq!(llhd_search(&cfg).unwrap().restarts, 25);
        let cfg = LlhdSearchConfig::new(100, 4, CriterionKind::Wd, 1).iterations(10);
        assert_eq!(llhd_search(&cfg).unwrap().restarts, 1);
    }

    #[test]
    fn korobov_is_exhaustive_minimum() {
        for kind in [CriterionKind::Wd, CriterionKind::Ws, CriterionKind::Ws2] {
            let (spec, _, best) = korobov_search(7, 3, kind).unwrap();
            let oracle = (1..7)
                .map(|g| {
                    let x = LatticeSpec::unshifted(7, power_generator(7, 3, g)).unwrap().points();
                    criterion_full(&x, kind).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(((best - oracle) / oracle).abs() < 1e-9, "{kind}");
            assert_eq!(korobov_search(7, 3, kind).unwrap().0, spec);
        }
        let ones = LatticeSpec::unshifted(7, power_generator(7, 3, 1)).unwrap();
        assert!(lattice_criterion(&ones, CriterionKind::Wd).unwrap().is_finite());
    }

    #[test]
    fn sliced_objective_examples() {
        let spec = LatticeSpec::unshifted(12, vec![1, 5]).unwrap();
        let full = lattice_criterion(&spec, CriterionKind::Wd).unwrap();
        assert!((sliced_objective(&spec, 1, CriterionKind::Wd).unwrap() - 2.0 * full).abs() < 1e-12);
        assert!(sliced_objective(&spec, 5, CriterionKind::Wd).is_err());

        let spec = LatticeSpec::unshifted(4, vec![1]).unwrap();
        let four = criterion_full(&spec.points(), CriterionKind::Wd).unwrap();
        let two = criterion_full(&Design::new(2, 1, vec![0.125, 0.625]).unwrap(), CriterionKind::Wd).unwrap();
        assert!((sliced_objective(&spec, 2, CriterionKind::Wd).unwrap() - (four + two)).abs() < 1e-12);

        let spec = LatticeSpec::new(24, vec![1, 5, 7], vec![3, 0, 11]).unwrap();
        let base = sliced_objective(&spec, 3, CriterionKind::Ws).unwrap();
        for j in 0..3 {
            let slice = slice_extract(&spec, 3, j).unwrap();
            let c = lattice_criterion(&spec, CriterionKind::Ws).unwrap()
                + criterion_full(&slice.points(), CriterionKind::Ws).unwrap();
            assert!((c - base).abs() < 1e-9);
        }
    }

    #[test]
    fn sliced_search_runs() {
        let cfg = LlhdSearchConfig::new(60, 3, CriterionKind::Wd, 9)
            .iterations(200)
            .sliced(4);
        let res = llhd_search(&cfg).unwrap();
        let want = sliced_objective(&res.spec, 4, CriterionKind::Wd).unwrap();
        assert!((res.criterion - want).abs() < 1e-12);
        assert!(LlhdSearchConfig::new(60, 3, CriterionKind::Wd, 9).sliced(7).iterations(5).slices.is_some());
        assert!(llhd_search(&LlhdSearchConfig::new(60, 3, CriterionKind::Wd, 9).sliced(7)).is_err());
    }

    #[test]
    fn rejects_unsupported() {
        assert!(llhd_search(&LlhdSearchConfig::new(2, 1, CriterionKind::Wd, 0)).is_err());
        assert!(llhd_search(&LlhdSearchConfig::new(11, 2, CriterionKind::Rs, 0)).is_err());
    }
}
