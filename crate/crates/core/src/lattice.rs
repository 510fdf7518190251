//! Good-lattice-point Latin hypercube designs.
//!
//! A spec `(n, v, δ)` describes the `n` points `frac(i·v/n + δ/n + 1/(2n))`, `i = 0..n`.
//! Differences between its points only depend on `i - j`, which collapses every pairwise
//! criterion to a single loop over difference classes, and every bivariate projection is a
//! planar lattice whose shortest vector and covering radius follow from a reduced basis.

use serde::{Deserialize, Serialize};

use crate::design::{log_sum_exp, wd_kernel, CriterionKind, Design, DEFAULT_POWER, DIRECT_PRODUCT_MAX_DIM};
use crate::error::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m as i128) as u64)
}

/// Positive integers below `n/2` that are coprime to `n`, ascending.
pub fn coprime_residues(n: u64) -> Result<Vec<u64>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "coprime residues need n >= 3, got {n}"
        )));
    }
    Ok((1..)
        .take_while(|k| 2 * k < n)
        .filter(|&k| gcd(k, n) == 1)
        .collect())
}

fn check_generator(n: u64, v: &[u64]) -> Result<()> {
    for &vk in v {
        if gcd(vk % n, n) != 1 {
            return Err(Error::NotCoprime {
                value: vk,
                modulus: n,
            });
        }
    }
    Ok(())
}

/// Raw serialized form; validated through `TryFrom`.
#[derive(Deserialize)]
struct RawLatticeSpec {
    n: u64,
    v: Vec<u64>,
    delta: Vec<i64>,
    #[serde(default = "one")]
    delta_den: u64,
}

fn one() -> u64 {
    1
}

impl TryFrom<RawLatticeSpec> for LatticeSpec {
    type Error = Error;

    fn try_from(raw: RawLatticeSpec) -> Result<Self> {
        Self::with_rational_shift(raw.n, raw.v, raw.delta, raw.delta_den)
    }
}

/// `(n, v, δ)` with `gcd(v_k, n) = 1`.
///
/// The shift is an integer vector for ordinary designs. Slices of a design are lattice
/// designs with a fractional shift, so the shift is kept as `delta / delta_den`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLatticeSpec")]
pub struct LatticeSpec {
    n: u64,
    v: Vec<u64>,
    delta: Vec<i64>,
    delta_den: u64,
}

impl LatticeSpec {
    /// Integer shift; entries of `v` are reduced mod `n` and `delta` is reduced mod `n`.
    pub fn new(n: u64, v: Vec<u64>, delta: Vec<i64>) -> Result<Self> {
        Self::with_rational_shift(n, v, delta, 1)
    }

    /// Zero shift.
    pub fn unshifted(n: u64, v: Vec<u64>) -> Result<Self> {
        let d = v.len();
        Self::new(n, v, vec![0; d])
    }

    pub fn with_rational_shift(n: u64, v: Vec<u64>, delta: Vec<i64>, delta_den: u64) -> Result<Self> {
        if n == 0 || delta_den == 0 {
            return Err(Error::InvalidParameter("n and the shift denominator must be positive".into()));
        }
        if v.is_empty() {
            return Err(Error::InvalidParameter("generator vector is empty".into()));
        }
        if v.len() != delta.len() {
            return Err(Error::InvalidParameter(format!(
                "generator has {} entries but shift has {}",
                v.len(),
                delta.len()
            )));
        }
        check_generator(n, &v)?;
        let period = (n * delta_den) as i64;
        let mut delta: Vec<i64> = delta.into_iter().map(|x| x.rem_euclid(period)).collect();
        let mut delta_den = delta_den;
        let g = delta
            .iter()
            .fold(delta_den, |acc, &x| gcd(acc, x.unsigned_abs()));
        if g > 1 {
            delta_den /= g;
            delta.iter_mut().for_each(|x| *x /= g as i64);
        }
        let v = v.into_iter().map(|x| x % n).collect();
        Ok(Self {
            n,
            v,
            delta,
            delta_den,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> usize {
        self.v.len()
    }

    pub fn v(&self) -> &[u64] {
        &self.v
    }

    /// Shift numerators; the shift is `delta()[k] / delta_den()`.
    pub fn delta(&self) -> &[i64] {
        &self.delta
    }

    pub fn delta_den(&self) -> u64 {
        self.delta_den
    }

    /// Integer shift, when the spec has one.
    pub fn integer_delta(&self) -> Option<&[i64]> {
        (self.delta_den == 1).then_some(self.delta.as_slice())
    }

    /// Generator folded into `{1, …, ⌊n/2⌋}`.
    ///
    /// `v_k` and `n - v_k` give mirror-image columns with identical wrap-around criteria,
    /// but not the same point set.
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        for vk in &mut out.v {
            *vk = (*vk).min(self.n - *vk);
        }
        out
    }

    /// Points of the design, row `i` being index `i`.
    pub fn points(&self) -> Design {
        lattice_points(self)
    }
}

/// Enumerates `frac(i·v/n + δ/n + 1/(2n))` for `i = 0..n` in exact integer arithmetic.
pub fn lattice_points(spec: &LatticeSpec) -> Design {
    let n = spec.n as u128;
    let den = spec.delta_den as u128;
    let modulus = 2 * n * den;
    let d = spec.d();
    let mut points = Vec::with_capacity(spec.n as usize * d);
    for i in 0..n {
        for (&vk, &dk) in spec.v.iter().zip(&spec.delta) {
            let num = (2 * (i * vk as u128 * den + dk as u128) + den) % modulus;
            points.push(num as f64 / modulus as f64);
        }
    }
    let design = Design::new(spec.n as usize, d, points).expect("lattice points lie in the unit cube");
    if spec.delta_den == 1 {
        design.assume_lhd()
    } else {
        design
    }
}

/// Per-coordinate integer wrap distances `min(h·v_k mod n, n - h·v_k mod n)` for `h = 1..n`.
struct DifferenceClasses<'a> {
    n: u64,
    v: &'a [u64],
    residues: Vec<u64>,
    h: u64,
}

impl<'a> DifferenceClasses<'a> {
    fn new(n: u64, v: &'a [u64]) -> Self {
        Self {
            n,
            v,
            residues: vec![0; v.len()],
            h: 0,
        }
    }

    /// Advances to the next class and returns the integer wrap distances, or `None` after `h = n-1`.
    fn next_class(&mut self) -> Option<impl Iterator<Item = u64> + '_> {
        self.h += 1;
        if self.h >= self.n {
            return None;
        }
        let n = self.n;
        for (r, &vk) in self.residues.iter_mut().zip(self.v) {
            *r += vk;
            if *r >= n {
                *r -= n;
            }
        }
        Some(self.residues.iter().map(move |&r| r.min(n - r)))
    }
}

/// Lattice shortcut for a criterion of `spec`. Never reads the shift.
///
/// WS, WA, WP and WD use one loop over the `n - 1` difference classes; WS2/RS2 and WF2 use
/// planar basis reduction per coordinate pair (RS2 coincides with WS2 on lattice designs).
pub fn lattice_criterion(spec: &LatticeSpec, kind: CriterionKind) -> Result<f64> {
    lattice_criterion_of(spec.n, &spec.v, kind, DEFAULT_POWER)
}

pub(crate) fn lattice_criterion_of(n: u64, v: &[u64], kind: CriterionKind, power: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "lattice criteria need n >= 2, got {n}"
        )));
    }
    check_generator(n, v)?;
    let d = v.len();
    let nf = n as f64;
    let log_domain = d > DIRECT_PRODUCT_MAX_DIM;
    let mut classes = DifferenceClasses::new(n, v);
    Ok(match kind {
        CriterionKind::Ws => {
            let mut min_sq = u128::MAX;
            while let Some(w) = classes.next_class() {
                min_sq = min_sq.min(w.map(|x| (x as u128) * (x as u128)).sum());
            }
            nf / (min_sq as f64).sqrt()
        }
        CriterionKind::Wa => {
            let mut logs = Vec::with_capacity(n as usize - 1);
            let n2 = nf * nf;
            while let Some(w) = classes.next_class() {
                let sq: u128 = w.map(|x| (x as u128) * (x as u128)).sum();
                logs.push(-0.5 * power * (sq as f64 / n2).ln());
            }
            (((nf / 2.0).ln() + log_sum_exp(&logs)) / power).exp()
        }
        CriterionKind::Wp => {
            if log_domain {
                let mut logs = Vec::with_capacity(n as usize - 1);
                while let Some(w) = classes.next_class() {
                    logs.push(w.map(|x| 2.0 * (nf / x as f64).ln()).sum());
                }
                ((log_sum_exp(&logs) - (nf - 1.0).ln()) / d as f64).exp()
            } else {
                let mut sum = 0.0;
                while let Some(w) = classes.next_class() {
                    sum += w.map(|x| (nf / x as f64).powi(2)).product::<f64>();
                }
                (sum / (nf - 1.0)).powf(1.0 / d as f64)
            }
        }
        CriterionKind::Wd => {
            // class h = 0 (equivalently h = n) contributes 1.5^d
            let sq = if log_domain {
                let mut sum = (d as f64 * 1.125f64.ln()).exp();
                while let Some(w) = classes.next_class() {
                    sum += w
                        .map(|x| (0.75 * wd_kernel(x as f64 / nf)).ln())
                        .sum::<f64>()
                        .exp();
                }
                (sum / nf - 1.0) * (4.0f64 / 3.0).powi(d as i32)
            } else {
                let mut sum = 1.5f64.powi(d as i32);
                while let Some(w) = classes.next_class() {
                    sum += w.map(|x| wd_kernel(x as f64 / nf)).product::<f64>();
                }
                sum / nf - (4.0f64 / 3.0).powi(d as i32)
            };
            sq.max(0.0).sqrt()
        }
        CriterionKind::Ws2 | CriterionKind::Rs2 => ws2_fast(n, v)?,
        CriterionKind::Wf2 => wf2_fast(n, v)?,
        CriterionKind::Rs | CriterionKind::As => {
            return Err(Error::Unsupported(format!(
                "{kind} has no lattice shortcut; evaluate the enumerated points instead"
            )))
        }
    })
}

/// `v̄₂ = v₂·v₁⁻¹ mod n`, so that `(n, v, δ)` and `(n, (1, v̄₂), δ)` have the same points.
pub fn canonical_2d(n: u64, v: [u64; 2]) -> Result<u64> {
    check_generator(n, &v)?;
    let inv = mod_inverse(v[0] % n, n).ok_or(Error::NotCoprime {
        value: v[0],
        modulus: n,
    })?;
    Ok(((v[1] % n) as u128 * inv as u128 % n as u128) as u64)
}

/// Output of planar Gaussian (Lagrange) reduction for the lattice `{(1, v̄₂), (0, n)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    /// Shortest nonzero lattice vector.
    pub a: [i64; 2],
    pub b: [i64; 2],
    /// `a·b / ‖a‖²`
    pub y: f64,
    /// `‖b - y·a‖ / ‖a‖`
    pub z: f64,
    pub n: u64,
    pub iterations: usize,
}

impl ReducedBasis {
    pub fn norm_a(&self) -> f64 {
        (norm_sq(self.a) as f64).sqrt()
    }

    pub fn norm_a_sq(&self) -> i128 {
        norm_sq(self.a)
    }

    /// Minimum wrap-around distance between points of the planar design.
    pub fn separation(&self) -> f64 {
        self.norm_a() / self.n as f64
    }

    /// Wrap-around fill distance (covering radius on the torus) of the planar design.
    pub fn fill(&self) -> f64 {
        let (y, z) = (self.y.abs(), self.z);
        let z2 = z * z;
        let c = z2 - y + y * y;
        (z2 + c * c).sqrt() / (2.0 * z) * self.separation()
    }
}

fn dot(a: [i64; 2], b: [i64; 2]) -> i128 {
    a[0] as i128 * b[0] as i128 + a[1] as i128 * b[1] as i128
}

fn norm_sq(a: [i64; 2]) -> i128 {
    dot(a, a)
}

/// Nearest integer to `num/den` (`den > 0`), halves rounded toward zero.
fn round_half_toward_zero(num: i128, den: i128) -> i128 {
    let q = (2 * num.abs() + den - 1) / (2 * den);
    if num < 0 {
        -q
    } else {
        q
    }
}

fn size_reduce(a: [i64; 2], b: [i64; 2]) -> [i64; 2] {
    let q = round_half_toward_zero(dot(a, b), norm_sq(a));
    [
        (b[0] as i128 - q * a[0] as i128) as i64,
        (b[1] as i128 - q * a[1] as i128) as i64,
    ]
}

/// Reduces the basis of the planar lattice generated by a 2-D lattice design.
pub fn gaussian_reduce(n: u64, v: [u64; 2]) -> Result<ReducedBasis> {
    let vbar = canonical_2d(n, v)?;
    let mut a = [1i64, vbar as i64];
    let mut b = size_reduce(a, [0, n as i64]);
    let mut iterations = 1;
    while norm_sq(b) < norm_sq(a) {
        (a, b) = (b, a);
        b = size_reduce(a, b);
        iterations += 1;
    }
    let na = norm_sq(a) as f64;
    let y = dot(a, b) as f64 / na;
    let perp = [b[0] as f64 - y * a[0] as f64, b[1] as f64 - y * a[1] as f64];
    let z = (perp[0] * perp[0] + perp[1] * perp[1]).sqrt() / na.sqrt();
    Ok(ReducedBasis {
        a,
        b,
        y,
        z,
        n,
        iterations,
    })
}

/// Per-pair quantity summed by the bivariate criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairTerm {
    /// Reciprocal separation distance, `n / ‖a‖`.
    Separation,
    /// Wrap-around fill distance.
    Fill,
}

impl PairTerm {
    fn eval(self, n: u64, vk: u64, vl: u64) -> Result<f64> {
        let basis = gaussian_reduce(n, [vk, vl])?;
        Ok(match self {
            PairTerm::Separation => n as f64 / basis.norm_a(),
            PairTerm::Fill => basis.fill(),
        })
    }
}

/// Cached per-pair terms of WS2 or WF2 so that changing one generator entry costs `d - 1`
/// reductions.
#[derive(Debug, Clone)]
pub struct BivariateCache {
    n: u64,
    v: Vec<u64>,
    term: PairTerm,
    /// `terms[k * d + l]`, symmetric, diagonal unused
    terms: Vec<f64>,
    total: f64,
}

/// A proposed single-entry change, not yet applied.
#[derive(Debug, Clone)]
pub struct PairTrial {
    k: usize,
    value: u64,
    row: Vec<f64>,
    total: f64,
}

impl PairTrial {
    pub fn total(&self) -> f64 {
        self.total
    }
}

impl BivariateCache {
    pub fn new(n: u64, v: &[u64], term: PairTerm) -> Result<Self> {
        check_generator(n, v)?;
        let d = v.len();
        let v: Vec<u64> = v.iter().map(|x| x % n).collect();
        let mut terms = vec![0.0; d * d];
        for k in 0..d {
            for l in k + 1..d {
                let t = term.eval(n, v[k], v[l])?;
                terms[k * d + l] = t;
                terms[l * d + k] = t;
            }
        }
        let mut cache = Self {
            n,
            v,
            term,
            terms,
            total: 0.0,
        };
        cache.total = cache.sum_terms(None);
        Ok(cache)
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn v(&self) -> &[u64] {
        &self.v
    }

    /// Fixed-order sum over `k < l`, optionally with row `k` replaced.
    fn sum_terms(&self, replaced: Option<(usize, &[f64])>) -> f64 {
        let d = self.v.len();
        let mut total = 0.0;
        for k in 0..d {
            for l in k + 1..d {
                total += match replaced {
                    Some((r, row)) if r == k => row[l],
                    Some((r, row)) if r == l => row[k],
                    _ => self.terms[k * d + l],
                };
            }
        }
        total
    }

    /// Value after replacing `v[k]` by `new_vk`, without modifying the cache.
    pub fn trial(&self, k: usize, new_vk: u64) -> Result<PairTrial> {
        let d = self.v.len();
        if k >= d {
            return Err(Error::InvalidParameter(format!("coordinate {k} out of range for d = {d}")));
        }
        check_generator(self.n, &[new_vk])?;
        let new_vk = new_vk % self.n;
        if self.v.iter().enumerate().any(|(l, &x)| l != k && x == new_vk) {
            return Err(Error::DuplicateEntry(new_vk));
        }
        let mut row = vec![0.0; d];
        for (l, slot) in row.iter_mut().enumerate() {
            if l != k {
                *slot = self.term.eval(self.n, new_vk, self.v[l])?;
            }
        }
        let total = self.sum_terms(Some((k, &row)));
        Ok(PairTrial {
            k,
            value: new_vk,
            row,
            total,
        })
    }

    pub fn apply(&mut self, trial: PairTrial) {
        let d = self.v.len();
        let k = trial.k;
        self.v[k] = trial.value;
        for l in 0..d {
            if l != k {
                self.terms[k * d + l] = trial.row[l];
                self.terms[l * d + k] = trial.row[l];
            }
        }
        self.total = trial.total;
    }

    /// Replaces `v[k]` and returns the new total.
    pub fn update(&mut self, k: usize, new_vk: u64) -> Result<f64> {
        let trial = self.trial(k, new_vk)?;
        self.apply(trial);
        Ok(self.total)
    }
}

fn bivariate_fast(n: u64, v: &[u64], term: PairTerm) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::InvalidParameter(
            "bivariate criteria need at least two dimensions".into(),
        ));
    }
    Ok(BivariateCache::new(n, v, term)?.total())
}

/// Sum over coordinate pairs of the reciprocal wrap-around separation distance.
pub fn ws2_fast(n: u64, v: &[u64]) -> Result<f64> {
    bivariate_fast(n, v, PairTerm::Separation)
}

/// Sum over coordinate pairs of the wrap-around fill distance.
pub fn wf2_fast(n: u64, v: &[u64]) -> Result<f64> {
    bivariate_fast(n, v, PairTerm::Fill)
}

/// Slice `j` of `s`: the rows `i` with `i mod s = j`, as an `(n/s)`-point lattice spec.
///
/// The slice shift `(j·v + δ)/s + 1/(2s) - 1/2` is fractional in general.
pub fn slice_extract(spec: &LatticeSpec, s: u64, j: u64) -> Result<LatticeSpec> {
    if s == 0 || spec.n % s != 0 {
        return Err(Error::InvalidParameter(format!(
            "slice count {s} does not divide n = {}",
            spec.n
        )));
    }
    if j >= s {
        return Err(Error::InvalidParameter(format!("slice index {j} out of range for s = {s}")));
    }
    let den = spec.delta_den as i64;
    let (si, ji) = (s as i64, j as i64);
    let delta = spec
        .v
        .iter()
        .zip(&spec.delta)
        .map(|(&vk, &dk)| 2 * den * ji * vk as i64 + 2 * dk + den * (1 - si))
        .collect();
    LatticeSpec::with_rational_shift(spec.n / s, spec.v.clone(), delta, 2 * spec.delta_den * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{criterion_full, is_stratified, validate_lhd, LHD_TOL};

    #[test]
    fn coprime_residue_examples() {
        assert_eq!(coprime_residues(8).unwrap(), vec![1, 3]);
        assert_eq!(coprime_residues(7).unwrap(), vec![1, 2, 3]);
        assert_eq!(coprime_residues(12).unwrap(), vec![1, 5]);
        assert!(coprime_residues(2).is_err());
    }

    #[test]
    fn points_of_small_specs() {
        let x = LatticeSpec::unshifted(5, vec![1, 2]).unwrap().points();
        let expect = [[0.1, 0.1], [0.3, 0.5], [0.5, 0.9], [0.7, 0.3], [0.9, 0.7]];
        for (i, row) in expect.iter().enumerate() {
            for k in 0..2 {
                assert!((x.get(i, k) - row[k]).abs() < 1e-15);
            }
        }
        assert!(validate_lhd(&x, LHD_TOL));

        let x = LatticeSpec::unshifted(2, vec![1]).unwrap().points();
        assert_eq!(x.column(0), vec![0.25, 0.75]);

        let shifted = LatticeSpec::new(5, vec![1, 2], vec![1, 0]).unwrap().points();
        let base = LatticeSpec::unshifted(5, vec![1, 2]).unwrap().points();
        for i in 0..5 {
            assert!((shifted.get(i, 0) - (base.get(i, 0) + 0.2).fract()).abs() < 1e-15);
            assert_eq!(shifted.get(i, 1), base.get(i, 1));
        }
    }

    #[test]
    fn rejects_non_coprime_generators() {
        assert!(matches!(
            LatticeSpec::unshifted(6, vec![1, 2]),
            Err(Error::NotCoprime { value: 2, modulus: 6 })
        ));
        assert!(LatticeSpec::new(5, vec![1, 2], vec![0]).is_err());
    }

    #[test]
    fn shift_is_canonicalized() {
        let a = LatticeSpec::new(5, vec![1, 2], vec![-1, 7]).unwrap();
        assert_eq!(a.delta(), &[4, 2]);
        assert_eq!(a.canonical().v(), &[1, 2]);
        assert_eq!(LatticeSpec::unshifted(5, vec![4, 3]).unwrap().canonical().v(), &[1, 2]);
    }

    #[test]
    fn lattice_criterion_examples() {
        let spec = LatticeSpec::unshifted(5, vec![1, 2]).unwrap();
        let ws = lattice_criterion(&spec, CriterionKind::Ws).unwrap();
        assert!((ws - 2.2360680).abs() < 1e-7);
        let two = LatticeSpec::unshifted(2, vec![1]).unwrap();
        let wd = lattice_criterion(&two, CriterionKind::Wd).unwrap();
        assert!((wd - 0.2041241).abs() < 1e-7);
        let shifted = LatticeSpec::new(5, vec![1, 2], vec![3, 4]).unwrap();
        for kind in [CriterionKind::Ws, CriterionKind::Wa, CriterionKind::Wp, CriterionKind::Wd] {
            assert_eq!(
                lattice_criterion(&spec, kind).unwrap(),
                lattice_criterion(&shifted, kind).unwrap()
            );
            let full = criterion_full(&spec.points(), kind).unwrap();
            let fast = lattice_criterion(&spec, kind).unwrap();
            assert!(((full - fast) / full).abs() < 1e-9, "{kind}: {full} vs {fast}");
        }
        assert!(lattice_criterion(&spec, CriterionKind::Rs).is_err());
    }

    #[test]
    fn canonical_2d_examples() {
        assert_eq!(canonical_2d(5, [2, 3]).unwrap(), 4);
        assert_eq!(canonical_2d(5, [1, 2]).unwrap(), 2);
        assert_eq!(canonical_2d(5, [3, 3]).unwrap(), 1);
        assert!(canonical_2d(6, [2, 1]).is_err());
        assert_eq!(mod_inverse(2, 5), Some(3));
        assert_eq!(mod_inverse(2, 6), None);
    }

    #[test]
    fn reduction_examples() {
        let b = gaussian_reduce(5, [1, 2]).unwrap();
        assert_eq!(b.norm_a_sq(), 5);
        assert!((b.separation() - 0.4472136).abs() < 1e-7);
        assert_eq!((b.y, b.z), (0.0, 1.0));

        let b = gaussian_reduce(7, [1, 3]).unwrap();
        assert_eq!(b.norm_a_sq(), 5);
        assert!((b.separation() - 0.3194383).abs() < 1e-7);

        let b = gaussian_reduce(5, [1, 1]).unwrap();
        assert_eq!(b.norm_a_sq(), 2);
        assert!((b.separation() - 0.2828427).abs() < 1e-7);
        assert!((b.y - 0.5).abs() < 1e-15 && (b.z - 2.5).abs() < 1e-12);
    }

    #[test]
    fn half_ties_round_toward_zero() {
        assert_eq!(round_half_toward_zero(5, 2), 2);
        assert_eq!(round_half_toward_zero(-5, 2), -2);
        assert_eq!(round_half_toward_zero(7, 5), 1);
        assert_eq!(round_half_toward_zero(8, 5), 2);
        assert_eq!(round_half_toward_zero(-8, 5), -2);
        assert_eq!(round_half_toward_zero(0, 5), 0);
    }

    #[test]
    fn ws2_examples() {
        assert!((ws2_fast(5, &[1, 2]).unwrap() - 2.2360680).abs() < 1e-7);
        assert!((ws2_fast(7, &[1, 2, 3]).unwrap() - 9.3915).abs() < 1e-4);
        assert!(ws2_fast(7, &[1]).is_err());
    }

    #[test]
    fn wf2_examples() {
        assert!((wf2_fast(5, &[1, 2]).unwrap() - 0.31623).abs() < 1e-5);
        assert!((wf2_fast(5, &[1, 1]).unwrap() - 0.36770).abs() < 1e-5);
        let direct = 6.5 / 5.0 * 2f64.sqrt() / 5.0;
        assert!((wf2_fast(5, &[1, 1]).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn cache_updates() {
        let mut cache = BivariateCache::new(7, &[1, 2, 3], PairTerm::Separation).unwrap();
        let before = cache.total();
        assert_eq!(cache.update(1, 2).unwrap(), before);
        assert!(matches!(cache.trial(2, 1), Err(Error::DuplicateEntry(1))));
        assert!(cache.trial(2, 7).is_err());
        let after = cache.update(2, 4).unwrap();
        assert_eq!(after, ws2_fast(7, &[1, 2, 4]).unwrap());
    }

    #[test]
    fn slice_examples() {
        let parent = LatticeSpec::unshifted(4, vec![1]).unwrap();
        let s0 = slice_extract(&parent, 2, 0).unwrap();
        assert_eq!(s0.points().column(0), vec![0.125, 0.625]);
        assert!(is_stratified(&s0.points()));
        let s1 = slice_extract(&parent, 2, 1).unwrap();
        assert_eq!(s1.points().column(0), vec![0.375, 0.875]);
        for kind in [CriterionKind::Ws, CriterionKind::Wa, CriterionKind::Wp, CriterionKind::Wd] {
            let a = criterion_full(&s0.points(), kind).unwrap();
            let b = criterion_full(&s1.points(), kind).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(slice_extract(&parent, 3, 0).is_err());
        assert!(slice_extract(&parent, 2, 2).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = LatticeSpec::new(5, vec![1, 2], vec![3, 4]).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<LatticeSpec>(&json).unwrap(), spec);
        assert!(serde_json::from_str::<LatticeSpec>(r#"{"n":6,"v":[2],"delta":[0]}"#).is_err());
    }
}
