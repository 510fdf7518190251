//! Random Latin hypercubes and simulated annealing over column swaps.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::design::{criterion_full_with, log_sum_exp, CriterionKind, CriterionOptions, Design, DEFAULT_POWER};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, DesignRng};

/// Resum cached pair terms after this many committed swaps (at least).
const RESUM_MIN: usize = 64;

fn random_levels(n: usize, d: usize, rng: &mut DesignRng) -> Vec<u32> {
    let mut levels = vec![0u32; n * d];
    let mut perm: Vec<u32> = (0..n as u32).collect();
    for k in 0..d {
        perm.shuffle(rng);
        for (i, &p) in perm.iter().enumerate() {
            levels[i * d + k] = p;
        }
    }
    levels
}

fn levels_to_design(n: usize, d: usize, levels: &[u32]) -> Design {
    let points = levels
        .iter()
        .map(|&l| (2 * l as u64 + 1) as f64 / (2 * n) as f64)
        .collect();
    Design::new(n, d, points)
        .expect("stratum centres lie in the unit cube")
        .assume_lhd()
}

/// Random centred LHD: each column an independent uniform permutation of the stratum centres.
pub fn random_lhd(n: usize, d: usize, seed: u64) -> Design {
    assert!(n >= 1 && d >= 1, "random_lhd needs n >= 1 and d >= 1");
    let mut rng = rng_from_seed(seed);
    levels_to_design(n, d, &random_levels(n, d, &mut rng))
}

/// Per-pair cache maintained by [`SwapState`].
#[derive(Debug, Clone)]
enum PairCache {
    /// Integer squared distances plus their multiset (WS, RS).
    Separation {
        sq: Vec<u64>,
        multiset: BTreeMap<u64, u32>,
    },
    /// Log-terms summed relative to a reference (WA, AS, WP).
    LogSum {
        log_terms: Vec<f64>,
        sq: Vec<u64>,
        reference: f64,
        sum: f64,
        /// Largest running sum since the last re-accumulation; rounding error scales with it.
        peak: f64,
    },
    /// `prod(0.75 * kernel) - 1` per pair (WD).
    Discrepancy { excess: Vec<f64>, sum: f64 },
}

#[derive(Debug, Clone)]
struct Pending {
    i: usize,
    j: usize,
    k: usize,
    value: f64,
    /// (pair index, new integer squared distance or 0, new cached term)
    updates: Vec<(usize, u64, f64)>,
    sum: f64,
}

/// Incremental criterion state of an LHD under column swaps.
///
/// Levels are the integer strata `0..n`; all distances are exact integers in units of `1/n`.
/// A swap of entries `(i,k)` and `(j,k)` only changes the `2(n-2)` pairs touching `i` or `j`,
/// so [`SwapState::try_swap`] costs O(nd) (O(n log n) for the separation multiset).
#[derive(Debug, Clone)]
pub struct SwapState {
    n: usize,
    d: usize,
    kind: CriterionKind,
    power: f64,
    levels: Vec<u32>,
    cache: PairCache,
    value: f64,
    pending: Option<Pending>,
    commits_since_resum: usize,
}

impl SwapState {
    pub fn new(design: &Design, kind: CriterionKind) -> Result<Self> {
        Self::with_power(design, kind, DEFAULT_POWER)
    }

    /// Builds the state from a centred LHD.
    pub fn with_power(design: &Design, kind: CriterionKind, power: f64) -> Result<Self> {
        let (n, d) = (design.n(), design.d());
        if n < 2 {
            return Err(Error::InvalidDesign("swap state needs at least two points".into()));
        }
        let mut levels = Vec::with_capacity(n * d);
        for &x in design.as_slice() {
            let l = x * n as f64 - 0.5;
            let r = l.round();
            if (l - r).abs() > 1e-9 {
                return Err(Error::InvalidDesign(format!(
                    "coordinate {x} is not a stratum centre for n = {n}"
                )));
            }
            levels.push(r as u32);
        }
        Self::from_levels(n, d, levels, kind, power)
    }

    fn from_levels(n: usize, d: usize, levels: Vec<u32>, kind: CriterionKind, power: f64) -> Result<Self> {
        let cache = match kind {
            CriterionKind::Ws | CriterionKind::Rs => PairCache::Separation {
                sq: Vec::new(),
                multiset: BTreeMap::new(),
            },
            CriterionKind::Wa | CriterionKind::As | CriterionKind::Wp => PairCache::LogSum {
                log_terms: Vec::new(),
                sq: Vec::new(),
                reference: 0.0,
                sum: 0.0,
                peak: 0.0,
            },
            CriterionKind::Wd => PairCache::Discrepancy {
                excess: Vec::new(),
                sum: 0.0,
            },
            other => {
                return Err(Error::Unsupported(format!(
                    "column-swap annealing does not support {other}"
                )))
            }
        };
        let mut state = Self {
            n,
            d,
            kind,
            power,
            levels,
            cache,
            value: 0.0,
            pending: None,
            commits_since_resum: 0,
        };
        state.rebuild();
        Ok(state)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn kind(&self) -> CriterionKind {
        self.kind
    }

    pub fn design(&self) -> Design {
        levels_to_design(self.n, self.d, &self.levels)
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * self.n + b
    }

    fn wrap_metric(&self) -> bool {
        !matches!(self.kind, CriterionKind::Rs | CriterionKind::As)
    }

    fn level_gap(&self, a: u32, b: u32) -> u64 {
        let diff = a.abs_diff(b) as u64;
        if self.wrap_metric() {
            diff.min(self.n as u64 - diff)
        } else {
            diff
        }
    }

    fn sq_dist(&self, levels: &[u32], i: usize, j: usize) -> u64 {
        let (d, ri, rj) = (self.d, i * self.d, j * self.d);
        (0..d)
            .map(|k| {
                let g = self.level_gap(levels[ri + k], levels[rj + k]);
                g * g
            })
            .sum()
    }

    /// Log of the per-pair term of WA/AS (`-(p/2) ln(dist²)`) or WP (`-2 Σ ln w`).
    fn log_term(&self, levels: &[u32], i: usize, j: usize, sq: u64) -> f64 {
        let nf = self.n as f64;
        match self.kind {
            CriterionKind::Wp => (0..self.d)
                .map(|k| {
                    let g = self.level_gap(levels[i * self.d + k], levels[j * self.d + k]);
                    2.0 * (nf / g as f64).ln()
                })
                .sum(),
            _ => -0.5 * self.power * (sq as f64 / (nf * nf)).ln(),
        }
    }

    fn wd_excess(&self, levels: &[u32], i: usize, j: usize) -> f64 {
        let nf = self.n as f64;
        let log: f64 = (0..self.d)
            .map(|k| {
                let t = levels[i * self.d + k].abs_diff(levels[j * self.d + k]) as f64 / nf;
                (0.75 * (1.5 - t * (1.0 - t))).ln()
            })
            .sum();
        log.exp_m1()
    }

    /// Recomputes every cached pair term and the criterion from the levels.
    fn rebuild(&mut self) {
        let n = self.n;
        let levels = std::mem::take(&mut self.levels);
        let mut cache = std::mem::replace(
            &mut self.cache,
            PairCache::Discrepancy {
                excess: Vec::new(),
                sum: 0.0,
            },
        );
        match &mut cache {
            PairCache::Separation { sq, multiset } => {
                *sq = vec![0; n * n];
                multiset.clear();
                for i in 0..n {
                    for j in i + 1..n {
                        let s = self.sq_dist(&levels, i, j);
                        sq[i * n + j] = s;
                        *multiset.entry(s).or_insert(0) += 1;
                    }
                }
            }
            PairCache::LogSum {
                log_terms,
                sq,
                reference,
                sum,
                peak,
            } => {
                *sq = vec![0; n * n];
                *log_terms = vec![f64::NEG_INFINITY; n * n];
                for i in 0..n {
                    for j in i + 1..n {
                        let s = self.sq_dist(&levels, i, j);
                        sq[i * n + j] = s;
                        log_terms[i * n + j] = self.log_term(&levels, i, j, s);
                    }
                }
                *reference = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                *sum = log_terms.iter().map(|l| (l - *reference).exp()).sum();
                *peak = *sum;
            }
            PairCache::Discrepancy { excess, sum } => {
                *excess = vec![0.0; n * n];
                for i in 0..n {
                    for j in i + 1..n {
                        excess[i * n + j] = self.wd_excess(&levels, i, j);
                    }
                }
                *sum = excess.iter().sum();
            }
        }
        self.levels = levels;
        self.cache = cache;
        self.value = self.value_from_cache(None);
        self.commits_since_resum = 0;
    }

    fn value_from_sum(&self, sum: f64, reference: f64) -> f64 {
        let nf = self.n as f64;
        match self.kind {
            CriterionKind::Wa | CriterionKind::As => ((sum.ln() + reference) / self.power).exp(),
            CriterionKind::Wp => {
                let npairs = nf * (nf - 1.0) / 2.0;
                ((sum.ln() + reference - npairs.ln()) / self.d as f64).exp()
            }
            CriterionKind::Wd => {
                let d = self.d as f64;
                let diag = nf * (d * 1.125f64.ln()).exp_m1();
                let sq = (diag + 2.0 * sum) / (nf * nf) * (4.0f64 / 3.0).powi(self.d as i32);
                sq.max(0.0).sqrt()
            }
            _ => unreachable!("separation kinds use the multiset"),
        }
    }

    fn value_from_cache(&self, min_sq: Option<u64>) -> f64 {
        match &self.cache {
            PairCache::Separation { multiset, .. } => {
                let m = min_sq.unwrap_or_else(|| *multiset.keys().next().expect("at least one pair"));
                self.n as f64 / (m as f64).sqrt()
            }
            PairCache::LogSum { reference, sum, .. } => self.value_from_sum(*sum, *reference),
            PairCache::Discrepancy { sum, .. } => self.value_from_sum(*sum, 0.0),
        }
    }

    /// Criterion after swapping entries `(i,k)` and `(j,k)`, leaving the state unchanged until
    /// [`SwapState::commit`]. `i == j` is a no-op.
    pub fn try_swap(&mut self, i: usize, j: usize, k: usize) -> f64 {
        assert!(i < self.n && j < self.n && k < self.d, "swap index out of range");
        self.pending = None;
        if i == j || self.levels[i * self.d + k] == self.levels[j * self.d + k] {
            return self.value;
        }
        let d = self.d;
        let mut trial = self.levels.clone();
        trial.swap(i * d + k, j * d + k);
        let mut updates = Vec::with_capacity(2 * self.n);
        for h in 0..self.n {
            if h == i || h == j {
                continue;
            }
            for a in [i, j] {
                let idx = self.pair_index(a, h);
                let (sq, term) = match self.cache {
                    PairCache::Separation { .. } => (self.sq_dist(&trial, a, h), 0.0),
                    PairCache::LogSum { .. } => {
                        let sq = self.sq_dist(&trial, a, h);
                        (sq, self.log_term(&trial, a, h, sq))
                    }
                    PairCache::Discrepancy { .. } => (0, self.wd_excess(&trial, a, h)),
                };
                updates.push((idx, sq, term));
            }
        }
        let (value, sum) = match &mut self.cache {
            PairCache::Separation { sq, multiset } => {
                for &(idx, _, _) in &updates {
                    multiset_remove(multiset, sq[idx]);
                }
                for &(_, s, _) in &updates {
                    *multiset.entry(s).or_insert(0) += 1;
                }
                let min = *multiset.keys().next().expect("at least one pair");
                for &(_, s, _) in &updates {
                    multiset_remove(multiset, s);
                }
                for &(idx, _, _) in &updates {
                    *multiset.entry(sq[idx]).or_insert(0) += 1;
                }
                (self.n as f64 / (min as f64).sqrt(), 0.0)
            }
            PairCache::LogSum {
                log_terms,
                reference,
                sum,
                peak,
                ..
            } => {
                let max_new = updates.iter().map(|u| u.2).fold(f64::NEG_INFINITY, f64::max);
                let reference = *reference;
                let mut s = *sum;
                let mut added = 0.0;
                if max_new <= reference + 600.0 {
                    for &(idx, _, t) in &updates {
                        let a = (t - reference).exp();
                        added += a;
                        s += a - (log_terms[idx] - reference).exp();
                    }
                }
                // overflow against the reference, or cancellation of the dominant terms
                if max_new > reference + 600.0 || s < 1e-6 * peak.max(added) {
                    let mut logs = log_terms.clone();
                    for &(idx, _, t) in &updates {
                        logs[idx] = t;
                    }
                    let r = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let s = (log_sum_exp(&logs) - r).exp();
                    let v = self.value_from_sum(s, r);
                    self.pending = Some(Pending {
                        i,
                        j,
                        k,
                        value: v,
                        updates,
                        sum: f64::NAN,
                    });
                    return v;
                }
                (self.value_from_sum(s, reference), s)
            }
            PairCache::Discrepancy { excess, sum } => {
                let mut s = *sum;
                for &(idx, _, t) in &updates {
                    s += t - excess[idx];
                }
                (self.value_from_sum(s, 0.0), s)
            }
        };
        self.pending = Some(Pending {
            i,
            j,
            k,
            value,
            updates,
            sum,
        });
        value
    }

    /// Applies the swap evaluated by the last [`SwapState::try_swap`].
    pub fn commit(&mut self) {
        let Some(p) = self.pending.take() else {
            return;
        };
        let d = self.d;
        self.levels.swap(p.i * d + p.k, p.j * d + p.k);
        let mut needs_rebuild = false;
        match &mut self.cache {
            PairCache::Separation { sq, multiset } => {
                for &(idx, s, _) in &p.updates {
                    multiset_remove(multiset, sq[idx]);
                    *multiset.entry(s).or_insert(0) += 1;
                    sq[idx] = s;
                }
            }
            PairCache::LogSum {
                log_terms,
                sq,
                sum,
                peak,
                ..
            } => {
                for &(idx, s, t) in &p.updates {
                    log_terms[idx] = t;
                    sq[idx] = s;
                }
                if p.sum.is_nan() {
                    needs_rebuild = true;
                } else {
                    *sum = p.sum;
                    *peak = peak.max(p.sum);
                }
            }
            PairCache::Discrepancy { excess, sum } => {
                for &(idx, _, t) in &p.updates {
                    excess[idx] = t;
                }
                *sum = p.sum;
            }
        }
        self.value = p.value;
        self.commits_since_resum += 1;
        if needs_rebuild || self.commits_since_resum >= self.n.max(RESUM_MIN) {
            self.resum();
        }
    }

    /// Convenience: evaluate and apply a swap, returning the new criterion.
    pub fn swap(&mut self, i: usize, j: usize, k: usize) -> f64 {
        let v = self.try_swap(i, j, k);
        self.commit();
        v
    }

    /// Re-accumulates the running sum from the cached terms to clear drift.
    fn resum(&mut self) {
        match &mut self.cache {
            PairCache::Separation { .. } => {}
            PairCache::LogSum {
                log_terms,
                reference,
                sum,
                peak,
                ..
            } => {
                *reference = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                *sum = log_terms.iter().map(|l| (l - *reference).exp()).sum();
                *peak = *sum;
            }
            PairCache::Discrepancy { excess, sum } => *sum = excess.iter().sum(),
        }
        self.value = self.value_from_cache(None);
        self.commits_since_resum = 0;
    }
}

fn multiset_remove(set: &mut BTreeMap<u64, u32>, key: u64) {
    match set.get_mut(&key) {
        Some(c) if *c > 1 => *c -= 1,
        Some(_) => {
            set.remove(&key);
        }
        None => debug_assert!(false, "removing absent key {key}"),
    }
}

/// Simulated annealing settings. Defaults follow `q = 0.95`, `r = 10`, `T = 2000`.
#[derive(Debug, Clone)]
pub struct SaConfig {
    pub n: usize,
    pub d: usize,
    pub iterations: usize,
    /// Temperature decay per iteration.
    pub cooling: f64,
    /// Initial temperature.
    pub initial_temp: f64,
    /// Replace `initial_temp` by the spread of the criterion over random swaps.
    pub auto_temp: bool,
    pub kind: CriterionKind,
    pub power: f64,
    pub seed: u64,
}

impl SaConfig {
    pub fn new(n: usize, d: usize, kind: CriterionKind, seed: u64) -> Self {
        Self {
            n,
            d,
            iterations: 2000,
            cooling: 0.95,
            initial_temp: 10.0,
            auto_temp: false,
            kind,
            power: DEFAULT_POWER,
            seed,
        }
    }

    pub fn iterations(mut self, t: usize) -> Self {
        self.iterations = t;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cooling must lie in (0,1), got {}",
                self.cooling
            )));
        }
        if !(self.initial_temp > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial temperature must be positive, got {}",
                self.initial_temp
            )));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("n and d must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SaResult {
    pub design: Design,
    pub criterion: f64,
    pub initial_criterion: f64,
    /// Best-so-far criterion after each iteration.
    pub trace: Vec<f64>,
    pub temperature: f64,
}

pub fn sa_optimize_lhd(config: &SaConfig) -> Result<SaResult> {
    sa_optimize_lhd_with(config, |_, _| {})
}

/// Column-swap annealing; `observer(t, best)` is called after every iteration.
pub fn sa_optimize_lhd_with(
    config: &SaConfig,
    mut observer: impl FnMut(usize, f64),
) -> Result<SaResult> {
    config.validate()?;
    let (n, d) = (config.n, config.d);
    let mut rng = rng_from_seed(config.seed);
    let levels = random_levels(n, d, &mut rng);
    if n < 2 {
        let design = levels_to_design(n, d, &levels);
        return Ok(SaResult {
            design,
            criterion: f64::NAN,
            initial_criterion: f64::NAN,
            trace: Vec::new(),
            temperature: config.initial_temp,
        });
    }
    let mut state = SwapState::from_levels(n, d, levels, config.kind, config.power)?;
    let initial = state.value();
    let temperature = if config.auto_temp {
        auto_temperature(&state, config.seed).unwrap_or(config.initial_temp)
    } else {
        config.initial_temp
    };

    let mut best = initial;
    let mut best_levels = state.levels.clone();
    let mut trace = Vec::with_capacity(config.iterations);
    let mut temp = temperature;
    for t in 1..=config.iterations {
        temp *= config.cooling;
        let k = rng.gen_range(0..d);
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let current = state.value();
        let trial = state.try_swap(i, j, k);
        let delta = trial - current;
        let accept = delta <= 0.0 || (temp > 0.0 && rng.gen::<f64>() < (-delta / temp).exp());
        if accept {
            state.commit();
            if trial < best {
                best = trial;
                best_levels.copy_from_slice(&state.levels);
            }
        }
        trace.push(best);
        observer(t, best);
    }
    let design = levels_to_design(n, d, &best_levels);
    // the running value carries rounding from many incremental updates
    let opts = CriterionOptions { power: config.power, ..CriterionOptions::default() };
    let criterion = criterion_full_with(&design, config.kind, &opts)?;
    Ok(SaResult {
        design,
        criterion,
        initial_criterion: initial,
        trace,
        temperature,
    })
}

/// Standard deviation of the criterion over 50 random single swaps of the start design.
fn auto_temperature(state: &SwapState, seed: u64) -> Option<f64> {
    let mut rng = rng_from_seed(derive_seed(seed, 0x7e3a));
    let mut probe = state.clone();
    let values: Vec<f64> = (0..50)
        .map(|_| {
            let k = rng.gen_range(0..probe.d);
            let i = rng.gen_range(0..probe.n);
            let j = rng.gen_range(0..probe.n);
            probe.try_swap(i, j, k)
        })
        .filter(|v| v.is_finite())
        .collect();
    if values.len() < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (var > 0.0).then(|| var.sqrt())
}
