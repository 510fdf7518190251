//! Point sets in the unit hypercube and the definitional (all-pairs) space-filling criteria.
//!
//! Everything here is O(n²d) and serves as the reference that the lattice
//! shortcuts and the incremental optimizer states are checked against.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when certifying Latin hypercube structure.
pub const LHD_TOL: f64 = 1e-12;

/// Default exponent of the approximate separation criteria (WA, AS).
pub const DEFAULT_POWER: f64 = 50.0;

/// Default grid resolution used when WF2 is evaluated definitionally.
pub const DEFAULT_FILL_RESOLUTION: usize = 256;

/// Products over coordinates switch to log domain above this dimension.
pub const DIRECT_PRODUCT_MAX_DIM: usize = 20;

/// How a design was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
}

/// `n` points in `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    n: usize,
    d: usize,
    points: Vec<f64>,
    lhd: bool,
    provenance: Option<Provenance>,
}

impl Design {
    /// Builds a design from row-major coordinates. Every coordinate must be finite and in `[0,1]`.
    pub fn new(n: usize, d: usize, points: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDesign("dimension must be at least 1".into()));
        }
        if points.len() != n * d {
            return Err(Error::InvalidDesign(format!(
                "expected {} coordinates for a {n}x{d} design, got {}",
                n * d,
                points.len()
            )));
        }
        if let Some((idx, x)) = points
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < 0.0 || **x > 1.0)
        {
            return Err(Error::InvalidDesign(format!(
                "coordinate ({}, {}) = {x} lies outside [0,1]",
                idx / d,
                idx % d
            )));
        }
        Ok(Self {
            n,
            d,
            points,
            lhd: false,
            provenance: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidDesign("rows have differing lengths".into()));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.points[i * self.d + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, k)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    /// Projection onto the given columns, in the given order.
    pub fn project(&self, cols: &[usize]) -> Design {
        let points = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&k| r[k]))
            .collect();
        Design {
            n: self.n,
            d: cols.len(),
            points,
            lhd: self.lhd,
            provenance: self.provenance.clone(),
        }
    }

    /// Whether the design has been certified as a centered LHD.
    pub fn is_lhd(&self) -> bool {
        self.lhd
    }

    /// Runs [`validate_lhd`] and records the outcome.
    pub fn certify_lhd(mut self) -> Self {
        self.lhd = self.n > 0 && validate_lhd(&self, LHD_TOL);
        self
    }

    pub(crate) fn assume_lhd(mut self) -> Self {
        self.lhd = true;
        self
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, generator: impl Into<String>, seed: Option<u64>) -> Self {
        self.provenance = Some(Provenance {
            generator: generator.into(),
            seed,
        });
        self
    }
}

/// Wrap-around distance of a scalar: distance to the nearest integer.
pub fn wrap_dist_1d(z: f64) -> f64 {
    (z - z.round()).abs()
}

/// Wrap-around (toroidal) Euclidean distance between two points.
pub fn wrap_dist(a: &[f64], b: &[f64]) -> f64 {
    wrap_sq_dist(a, b).sqrt()
}

fn wrap_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let w = wrap_dist_1d(x - y);
            w * w
        })
        .sum()
}

fn euclid_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// True iff every column, sorted, equals `{(2i-1)/(2n)}` within `tol` per entry.
pub fn validate_lhd(design: &Design, tol: f64) -> bool {
    let n = design.n();
    if n == 0 {
        return false;
    }
    (0..design.d()).all(|k| {
        let mut col = design.column(k);
        col.sort_by(f64::total_cmp);
        col.iter()
            .enumerate()
            .all(|(i, &x)| (x - (2 * i + 1) as f64 / (2 * n) as f64).abs() <= tol)
    })
}

/// True iff every column places exactly one point in each of the `n` strata `[i/n, (i+1)/n)`.
///
/// Unlike [`validate_lhd`] the points need not sit at stratum centers.
pub fn is_stratified(design: &Design) -> bool {
    let n = design.n();
    (0..design.d()).all(|k| {
        let mut seen = vec![false; n];
        design.rows().all(|r| {
            let s = ((r[k] * n as f64).floor() as usize).min(n - 1);
            !std::mem::replace(&mut seen[s], true)
        })
    })
}

/// Space-filling criteria. All are lower-is-better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CriterionKind {
    /// Reciprocal wrap-around separation distance.
    Ws,
    /// Approximate (power-sum) wrap-around separation distance.
    Wa,
    /// Wrap-around projective separation distance.
    Wp,
    /// Wrap-around L2 discrepancy.
    Wd,
    /// Reciprocal Euclidean separation distance.
    Rs,
    /// Approximate (power-sum) Euclidean separation distance.
    As,
    /// Sum of WS over bivariate projections.
    Ws2,
    /// Sum of RS over bivariate projections.
    Rs2,
    /// Sum of wrap-around fill distance over bivariate projections.
    Wf2,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 9] = [
        CriterionKind::Ws,
        CriterionKind::Wa,
        CriterionKind::Wp,
        CriterionKind::Wd,
        CriterionKind::Rs,
        CriterionKind::As,
        CriterionKind::Ws2,
        CriterionKind::Rs2,
        CriterionKind::Wf2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::Ws => "WS",
            CriterionKind::Wa => "WA",
            CriterionKind::Wp => "WP",
            CriterionKind::Wd => "WD",
            CriterionKind::Rs => "RS",
            CriterionKind::As => "AS",
            CriterionKind::Ws2 => "WS2",
            CriterionKind::Rs2 => "RS2",
            CriterionKind::Wf2 => "WF2",
        }
    }

    pub fn is_bivariate(self) -> bool {
        matches!(
            self,
            CriterionKind::Ws2 | CriterionKind::Rs2 | CriterionKind::Wf2
        )
    }

    /// Criteria built on the wrap-around metric (shift invariant on the torus).
    pub fn is_wrap(self) -> bool {
        !matches!(
            self,
            CriterionKind::Rs | CriterionKind::As | CriterionKind::Rs2
        )
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CriterionKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown criterion `{s}`")))
    }
}

/// Tunables of the definitional criteria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionOptions {
    /// Exponent of WA and AS.
    pub power: f64,
    /// Grid resolution for WF2 projections.
    pub fill_resolution: usize,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        Self {
            power: DEFAULT_POWER,
            fill_resolution: DEFAULT_FILL_RESOLUTION,
        }
    }
}

/// Definitional value of `kind` over all pairs of points.
pub fn criterion_full(design: &Design, kind: CriterionKind) -> Result<f64> {
    criterion_full_with(design, kind, &CriterionOptions::default())
}

pub fn criterion_full_with(
    design: &Design,
    kind: CriterionKind,
    opts: &CriterionOptions,
) -> Result<f64> {
    let (n, d) = (design.n(), design.d());
    if n < 2 && kind != CriterionKind::Wd {
        return Err(Error::InvalidDesign(format!(
            "{kind} needs at least two points, got {n}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidDesign("design is empty".into()));
    }
    if kind.is_bivariate() && d < 2 {
        return Err(Error::InvalidDesign(format!(
            "{kind} needs at least two dimensions"
        )));
    }
    Ok(match kind {
        CriterionKind::Ws => separation(design, wrap_sq_dist),
        CriterionKind::Rs => separation(design, euclid_sq_dist),
        CriterionKind::Wa => power_sum(design, opts.power, wrap_sq_dist),
        CriterionKind::As => power_sum(design, opts.power, euclid_sq_dist),
        CriterionKind::Wp => projective(design, d > DIRECT_PRODUCT_MAX_DIM),
        CriterionKind::Wd => wrap_discrepancy(design, d > DIRECT_PRODUCT_MAX_DIM),
        CriterionKind::Ws2 => bivariate_sum(design, |p| Ok(separation(p, wrap_sq_dist)))?,
        CriterionKind::Rs2 => bivariate_sum(design, |p| Ok(separation(p, euclid_sq_dist)))?,
        CriterionKind::Wf2 => {
            bivariate_sum(design, |p| fill_distance_grid(p, opts.fill_resolution, true))?
        }
    })
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn separation(design: &Design, metric: fn(&[f64], &[f64]) -> f64) -> f64 {
    let min_sq = pairs(design.n())
        .map(|(i, j)| metric(design.row(i), design.row(j)))
        .fold(f64::INFINITY, f64::min);
    1.0 / min_sq.sqrt()
}

fn power_sum(design: &Design, power: f64, metric: fn(&[f64], &[f64]) -> f64) -> f64 {
    // log-sum-exp over -(p/2) ln(dist^2)
    let logs: Vec<f64> = pairs(design.n())
        .map(|(i, j)| -0.5 * power * metric(design.row(i), design.row(j)).ln())
        .collect();
    (log_sum_exp(&logs) / power).exp()
}

pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

fn projective(design: &Design, log_domain: bool) -> f64 {
    let (n, d) = (design.n(), design.d());
    let npairs = (n * (n - 1) / 2) as f64;
    if log_domain {
        let logs: Vec<f64> = pairs(n)
            .map(|(i, j)| {
                design
                    .row(i)
                    .iter()
                    .zip(design.row(j))
                    .map(|(a, b)| -2.0 * wrap_dist_1d(a - b).ln())
                    .sum()
            })
            .collect();
        ((log_sum_exp(&logs) - npairs.ln()) / d as f64).exp()
    } else {
        let sum: f64 = pairs(n)
            .map(|(i, j)| {
                design
                    .row(i)
                    .iter()
                    .zip(design.row(j))
                    .map(|(a, b)| wrap_dist_1d(a - b).powi(-2))
                    .product::<f64>()
            })
            .sum();
        (sum / npairs).powf(1.0 / d as f64)
    }
}

/// `1.25 + w(u + 1/2)^2`, the per-coordinate kernel of the wrap-around discrepancy.
pub fn wd_kernel(u: f64) -> f64 {
    let w = wrap_dist_1d(u + 0.5);
    1.25 + w * w
}

fn wrap_discrepancy(design: &Design, log_domain: bool) -> f64 {
    let (n, d) = (design.n(), design.d());
    let nn = (n * n) as f64;
    // Each pair contributes its excess over (4/3)^d, so the cancellation that makes WD small
    // happens term by term instead of once between two sums of size n^2 (4/3)^d.
    let excess = |i: usize, j: usize| -> f64 {
        let pairs = design.row(i).iter().zip(design.row(j));
        if log_domain {
            pairs.map(|(a, b)| (0.75 * wd_kernel(a - b)).ln()).sum::<f64>().exp_m1()
        } else {
            pairs.map(|(a, b)| 0.75 * wd_kernel(a - b)).product::<f64>() - 1.0
        }
    };
    let diag = n as f64 * (d as f64 * 1.125f64.ln()).exp_m1();
    let off: f64 = pairs(n).map(|(i, j)| excess(i, j)).sum();
    let sq = (diag + 2.0 * off) / nn * (4.0f64 / 3.0).powi(d as i32);
    sq.max(0.0).sqrt()
}

fn bivariate_sum(design: &Design, mut f: impl FnMut(&Design) -> Result<f64>) -> Result<f64> {
    let d = design.d();
    let mut total = 0.0;
    for k in 0..d {
        for l in k + 1..d {
            total += f(&design.project(&[k, l]))?;
        }
    }
    Ok(total)
}

/// Grid-search fill distance: the largest distance from any grid node to its nearest design point.
///
/// With `wrap` the torus metric and a `resolution^d` periodic grid are used; otherwise the
/// grid includes both faces, `(resolution+1)^d` nodes. The result undershoots the supremum by
/// at most `sqrt(d)/(2*resolution)`.
pub fn fill_distance_grid(design: &Design, resolution: usize, wrap: bool) -> Result<f64> {
    let d = design.d();
    if d > 3 {
        return Err(Error::Unsupported(format!(
            "grid fill distance is limited to d <= 3, got d = {d}"
        )));
    }
    if resolution < 16 {
        return Err(Error::InvalidParameter(format!(
            "fill distance resolution must be at least 16, got {resolution}"
        )));
    }
    if design.n() == 0 {
        return Err(Error::InvalidDesign("design is empty".into()));
    }
    let buckets = Buckets::new(design, wrap);
    let per_axis = if wrap { resolution } else { resolution + 1 };
    let total = per_axis.pow(d as u32);
    let mut q = vec![0.0; d];
    let mut worst = 0.0f64;
    for flat in 0..total {
        let mut rem = flat;
        for qk in q.iter_mut() {
            *qk = (rem % per_axis) as f64 / resolution as f64;
            rem /= per_axis;
        }
        worst = worst.max(buckets.nearest_sq(&q));
    }
    Ok(worst.sqrt())
}

/// Uniform cell grid over the unit cube for nearest-point queries in d <= 3.
struct Buckets<'a> {
    design: &'a Design,
    wrap: bool,
    cells: usize,
    members: Vec<Vec<usize>>,
}

impl<'a> Buckets<'a> {
    fn new(design: &'a Design, wrap: bool) -> Self {
        let d = design.d();
        let cells = ((design.n() as f64).powf(1.0 / d as f64).round() as usize).clamp(1, 256);
        let mut members = vec![Vec::new(); cells.pow(d as u32)];
        for (i, r) in design.rows().enumerate() {
            let idx = r.iter().rev().fold(0, |acc, &x| acc * cells + Self::cell_of(x, cells));
            members[idx].push(i);
        }
        Self {
            design,
            wrap,
            cells,
            members,
        }
    }

    fn cell_of(x: f64, cells: usize) -> usize {
        ((x * cells as f64).floor() as usize).min(cells - 1)
    }

    fn dist_sq(&self, q: &[f64], i: usize) -> f64 {
        if self.wrap {
            wrap_sq_dist(q, self.design.row(i))
        } else {
            euclid_sq_dist(q, self.design.row(i))
        }
    }

    fn nearest_sq(&self, q: &[f64]) -> f64 {
        let d = q.len();
        let c = self.cells as i64;
        let home: Vec<i64> = q.iter().map(|&x| Self::cell_of(x, self.cells) as i64).collect();
        let mut best = f64::INFINITY;
        let mut r = 0i64;
        loop {
            let covers_all = if self.wrap { 2 * r + 1 >= c } else { r >= c };
            if covers_all {
                return (0..self.design.n())
                    .map(|i| self.dist_sq(q, i))
                    .fold(f64::INFINITY, f64::min);
            }
            // visit the shell of cells at Chebyshev distance exactly r
            let side = 2 * r + 1;
            for flat in 0..side.pow(d as u32) {
                let mut rem = flat;
                let mut on_shell = false;
                let mut idx = 0i64;
                let mut valid = true;
                let mut mult = 1i64;
                for &h in home.iter() {
                    let off = rem % side - r;
                    rem /= side;
                    on_shell |= off.abs() == r;
                    let mut cell = h + off;
                    if self.wrap {
                        cell = cell.rem_euclid(c);
                    } else if cell < 0 || cell >= c {
                        valid = false;
                    }
                    idx += cell * mult;
                    mult *= c;
                }
                if !on_shell || !valid {
                    continue;
                }
                for &i in &self.members[idx as usize] {
                    best = best.min(self.dist_sq(q, i));
                }
            }
            let reach = r as f64 / self.cells as f64;
            if best <= reach * reach {
                return best;
            }
            r += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d1(xs: &[f64]) -> Design {
        Design::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    fn lattice_5_12() -> Design {
        Design::from_rows(&[
            vec![0.1, 0.1],
            vec![0.3, 0.5],
            vec![0.5, 0.9],
            vec![0.7, 0.3],
            vec![0.9, 0.7],
        ])
        .unwrap()
    }

    #[test]
    fn wrap_distance_examples() {
        assert_eq!(wrap_dist_1d(0.5), 0.5);
        assert!((wrap_dist_1d(0.9) - 0.1).abs() < 1e-15);
        assert!((wrap_dist_1d(-0.3) - 0.3).abs() < 1e-15);
        assert!((wrap_dist_1d(3.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lhd_validation() {
        assert!(validate_lhd(&d1(&[0.25, 0.75]), LHD_TOL));
        assert!(!validate_lhd(&d1(&[0.25, 0.25]), LHD_TOL));
        assert!(validate_lhd(&lattice_5_12(), LHD_TOL));
        assert!(lattice_5_12().certify_lhd().is_lhd());
    }

    #[test]
    fn rejects_points_outside_cube() {
        assert!(Design::new(2, 1, vec![0.2, 1.2]).is_err());
        assert!(Design::new(2, 1, vec![0.2, f64::NAN]).is_err());
        assert!(Design::new(2, 2, vec![0.2, 0.3, 0.4]).is_err());
    }

    #[test]
    fn criterion_examples() {
        let two = d1(&[0.25, 0.75]);
        let wd = criterion_full(&two, CriterionKind::Wd).unwrap();
        assert!((wd - (5.5f64 / 4.0 - 4.0 / 3.0).sqrt()).abs() < 1e-12);
        assert!((wd - 0.2041241).abs() < 1e-7);
        assert!((criterion_full(&two, CriterionKind::Wa).unwrap() - 2.0).abs() < 1e-12);
        assert!((criterion_full(&two, CriterionKind::Wp).unwrap() - 4.0).abs() < 1e-12);
        let ws = criterion_full(&lattice_5_12(), CriterionKind::Ws).unwrap();
        assert!((ws - 5f64.sqrt()).abs() < 1e-9);
        assert!((ws - 2.2360680).abs() < 1e-7);
    }

    #[test]
    fn small_discrepancy_keeps_its_digits() {
        // rank-1 lattice n = 168, v = (13, 61); exact WD^2 = 166003/4779565056
        let n = 168usize;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| [13, 61].iter().map(|&v| ((i * v % n) as f64 + 0.5) / n as f64).collect())
            .collect();
        let x = Design::from_rows(&rows).unwrap();
        let exact = (166003.0f64 / 4779565056.0).sqrt();
        let wd = criterion_full(&x, CriterionKind::Wd).unwrap();
        assert!((wd - exact).abs() <= 1e-11 * exact, "{wd} vs {exact}");
    }

    #[test]
    fn coincident_points_give_infinity() {
        let dup = Design::from_rows(&[vec![0.2, 0.3], vec![0.2, 0.3], vec![0.6, 0.9]]).unwrap();
        assert_eq!(criterion_full(&dup, CriterionKind::Ws).unwrap(), f64::INFINITY);
        assert_eq!(criterion_full(&dup, CriterionKind::Wa).unwrap(), f64::INFINITY);
        let shared = Design::from_rows(&[vec![0.2, 0.3], vec![0.2, 0.7]]).unwrap();
        assert_eq!(criterion_full(&shared, CriterionKind::Wp).unwrap(), f64::INFINITY);
        assert!(criterion_full(&shared, CriterionKind::Ws).unwrap().is_finite());
    }

    #[test]
    fn bivariate_needs_two_dims() {
        assert!(criterion_full(&d1(&[0.25, 0.75]), CriterionKind::Ws2).is_err());
        assert!(criterion_full(&d1(&[0.5]), CriterionKind::Ws).is_err());
    }

    #[test]
    fn criterion_names_round_trip() {
        for k in CriterionKind::ALL {
            assert_eq!(k.name().parse::<CriterionKind>().unwrap(), k);
        }
        assert!("XX".parse::<CriterionKind>().is_err());
    }

    #[test]
    fn fill_distance_examples() {
        let centre = Design::new(1, 2, vec![0.5, 0.5]).unwrap();
        let f = fill_distance_grid(&centre, 64, true).unwrap();
        assert!((f - 0.5f64.sqrt()).abs() < 2f64.sqrt() / 128.0);
        let f = fill_distance_grid(&d1(&[0.5]), 64, false).unwrap();
        assert!((f - 0.5).abs() < 1.0 / 128.0);
        let f = fill_distance_grid(&lattice_5_12(), 1000, true).unwrap();
        assert!((f - 0.31623).abs() < 2f64.sqrt() / 2000.0 + 1e-5);
    }

    #[test]
    fn fill_distance_rejects_high_dim_and_coarse_grids() {
        let x = Design::new(1, 4, vec![0.5; 4]).unwrap();
        assert!(matches!(fill_distance_grid(&x, 32, true), Err(Error::Unsupported(_))));
        assert!(fill_distance_grid(&d1(&[0.5]), 8, true).is_err());
    }

    #[test]
    fn bucketed_fill_matches_brute_force() {
        let rows: Vec<Vec<f64>> = (0..37)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.618_034).fract(), (t * 0.414_213 + 0.1).fract(), (t * 0.732 + 0.3).fract()]
            })
            .collect();
        let x = Design::from_rows(&rows).unwrap();
        for wrap in [true, false] {
            let res = 20;
            let per_axis = if wrap { res } else { res + 1 };
            let mut brute = 0.0f64;
            for a in 0..per_axis {
                for b in 0..per_axis {
                    for c in 0..per_axis {
                        let q = [a as f64 / res as f64, b as f64 / res as f64, c as f64 / res as f64];
                        let m = x
                            .rows()
                            .map(|r| if wrap { wrap_sq_dist(&q, r) } else { euclid_sq_dist(&q, r) })
                            .fold(f64::INFINITY, f64::min);
                        brute = brute.max(m);
                    }
                }
            }
            let fast = fill_distance_grid(&x, res, wrap).unwrap();
            assert!((fast - brute.sqrt()).abs() < 1e-15, "wrap={wrap}");
        }
    }

    #[test]
    fn log_domain_matches_direct_at_threshold() {
        let d = DIRECT_PRODUCT_MAX_DIM;
        let n = 13;
        let points: Vec<f64> = (0..n)
            .flat_map(|i| (0..d).map(move |k| (((i * (1 + k % 12) + k) % n) as f64 + 0.5) / n as f64))
            .collect();
        let x = Design::new(n, d, points).unwrap();
        let (a, b) = (wrap_discrepancy(&x, false), wrap_discrepancy(&x, true));
        assert!(((a - b) / a).abs() < 1e-9, "{a} vs {b}");
        let (a, b) = (projective(&x, false), projective(&x, true));
        assert!(((a - b) / a).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn stratification_allows_off_center_points() {
        assert!(is_stratified(&d1(&[0.125, 0.625])));
        assert!(!validate_lhd(&d1(&[0.125, 0.625]), LHD_TOL));
        assert!(!is_stratified(&d1(&[0.125, 0.375])));
    }
}
