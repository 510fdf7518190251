//! Regularly repeated lattice designs: a lattice LHD of size `m` tiled with period `m/n` so
//! that every width-`m/n` window on the `1/n` grid holds an `m`-point local LHD.
//!
//! All geometry is in integer coordinates `c ∈ {0, …, n-1}^d`; the point is `(c + 1/2)/n`.
//! A coordinate vector belongs to the design iff `c ≡ i·v + δ (mod m)` for one residue `i`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::lattice::{gcd, mod_inverse};
use crate::rng::rng_from_seed;

/// Default bound on the number of points materialized by [`rlhd_points`].
pub const DEFAULT_SIZE_CAP: usize = 10_000_000;

#[derive(Deserialize)]
struct RawRlhdSpec {
    n: u64,
    m: u64,
    v: Vec<u64>,
    delta: Vec<i64>,
}

impl TryFrom<RawRlhdSpec> for RlhdSpec {
    type Error = Error;

    fn try_from(raw: RawRlhdSpec) -> Result<Self> {
        Self::new(raw.n, raw.m, raw.v, raw.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRlhdSpec")]
pub struct RlhdSpec {
    n: u64,
    m: u64,
    v: Vec<u64>,
    delta: Vec<i64>,
}

impl RlhdSpec {
    /// `v` is reduced mod `m` and `δ` mod `m` (only residues matter).
    pub fn new(n: u64, m: u64, v: Vec<u64>, delta: Vec<i64>) -> Result<Self> {
        if !(m > 1 && m <= n) {
            return Err(Error::InvalidParameter(format!(
                "need 1 < m <= n, got n = {n}, m = {m}"
            )));
        }
        if v.is_empty() || v.len() != delta.len() {
            return Err(Error::InvalidParameter(format!(
                "generator ({}) and shift ({}) must be non-empty and of equal length",
                v.len(),
                delta.len()
            )));
        }
        for &vk in &v {
            if gcd(vk % m, m) != 1 {
                return Err(Error::NotCoprime {
                    value: vk,
                    modulus: m,
                });
            }
        }
        let v = v.into_iter().map(|x| x % m).collect();
        let delta = delta.into_iter().map(|x| x.rem_euclid(m as i64)).collect();
        Ok(Self { n, m, v, delta })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn d(&self) -> usize {
        self.v.len()
    }

    pub fn v(&self) -> &[u64] {
        &self.v
    }

    /// Shift residues in `{0, …, m-1}`.
    pub fn delta(&self) -> &[i64] {
        &self.delta
    }

    /// Offset of residue `i` on axis `k`: `(i·v_k + δ_k) mod m`.
    fn offset(&self, i: u64, k: usize) -> u64 {
        ((i as u128 * self.v[k] as u128 + self.delta[k] as u128) % self.m as u128) as u64
    }

    /// Number of grid positions `o, o+m, … < n` on an axis with offset `o`.
    fn axis_count(&self, o: u64) -> u64 {
        if o >= self.n {
            0
        } else {
            (self.n - o).div_ceil(self.m)
        }
    }

    fn residue_count(&self, i: u64) -> u128 {
        (0..self.d())
            .map(|k| self.axis_count(self.offset(i, k)) as u128)
            .product()
    }

    /// Exact number of design points.
    pub fn size(&self) -> u128 {
        (0..self.m).map(|i| self.residue_count(i)).sum()
    }

    /// Residue of an integer coordinate vector, if it is a design point.
    pub fn residue_of(&self, key: &[u64]) -> Option<u64> {
        if key.len() != self.d() || key.iter().any(|&c| c >= self.n) {
            return None;
        }
        let m = self.m;
        let inv = mod_inverse(self.v[0], m)?;
        let diff = (key[0] % m + m - self.delta[0] as u64) % m;
        let i = (diff as u128 * inv as u128 % m as u128) as u64;
        (0..self.d())
            .all(|k| key[k] % m == self.offset(i, k))
            .then_some(i)
    }
}

/// Integer coordinate of a point: `round(x·n - 1/2)`.
pub fn point_key(x: &[f64], n: u64) -> Vec<u64> {
    x.iter()
        .map(|&xk| (xk * n as f64 - 0.5).round().clamp(0.0, (n - 1) as f64) as u64)
        .collect()
}

fn key_to_point(key: &[u64], n: u64, out: &mut Vec<f64>) {
    out.extend(key.iter().map(|&c| (2 * c + 1) as f64 / (2 * n) as f64));
}

/// Row lookup for the enumerated design, computed from the spec rather than stored.
///
/// Rows are ordered by residue `i`, then lexicographically by the per-axis grid steps `z`.
#[derive(Debug, Clone)]
pub struct PointIndex {
    spec: RlhdSpec,
    /// First row of each residue; `m + 1` entries.
    starts: Vec<u64>,
}

impl PointIndex {
    pub fn new(spec: &RlhdSpec) -> Self {
        let mut starts = Vec::with_capacity(spec.m as usize + 1);
        let mut acc = 0u64;
        starts.push(0);
        for i in 0..spec.m {
            acc += spec.residue_count(i) as u64;
            starts.push(acc);
        }
        Self {
            spec: spec.clone(),
            starts,
        }
    }

    pub fn len(&self) -> usize {
        *self.starts.last().expect("non-empty") as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row index of the point with integer coordinates `key`.
    pub fn get(&self, key: &[u64]) -> Option<usize> {
        let spec = &self.spec;
        let i = spec.residue_of(key)?;
        let mut row = 0u64;
        for (k, &c) in key.iter().enumerate() {
            let o = spec.offset(i, k);
            row = row * spec.axis_count(o) + (c - o) / spec.m;
        }
        Some((self.starts[i as usize] + row) as usize)
    }

    /// Row index of a point given in unit-cube coordinates.
    pub fn get_point(&self, x: &[f64]) -> Option<usize> {
        self.get(&point_key(x, self.spec.n))
    }
}

/// Visits every design point's integer coordinates in row order, without storing them.
pub fn for_each_point(spec: &RlhdSpec, mut f: impl FnMut(&[u64])) {
    let d = spec.d();
    let mut key = vec![0u64; d];
    let mut offsets = vec![0u64; d];
    for i in 0..spec.m {
        for k in 0..d {
            offsets[k] = spec.offset(i, k);
        }
        if offsets.iter().any(|&o| o >= spec.n) {
            continue;
        }
        key.copy_from_slice(&offsets);
        'grid: loop {
            f(&key);
            // odometer over axes, last axis fastest
            for k in (0..d).rev() {
                key[k] += spec.m;
                if key[k] < spec.n {
                    continue 'grid;
                }
                key[k] = offsets[k];
            }
            break;
        }
    }
}

pub fn rlhd_points(spec: &RlhdSpec) -> Result<(Design, PointIndex)> {
    rlhd_points_capped(spec, DEFAULT_SIZE_CAP)
}

/// Enumerates the design, refusing when it would hold more than `cap` points.
pub fn rlhd_points_capped(spec: &RlhdSpec, cap: usize) -> Result<(Design, PointIndex)> {
    let size = spec.size();
    if size > cap as u128 {
        return Err(Error::SizeCap {
            projected: size as f64,
            cap,
        });
    }
    let d = spec.d();
    let mut points = Vec::with_capacity(size as usize * d);
    for_each_point(spec, |key| key_to_point(key, spec.n, &mut points));
    let design = Design::new(size as usize, d, points)?.with_provenance("rlhd", None);
    Ok((design, PointIndex::new(spec)))
}

/// Uniform integer shift in `{0, …, m-1}^d`.
pub fn random_shift(m: u64, d: usize, seed: u64) -> Vec<i64> {
    let mut rng = rng_from_seed(seed);
    (0..d).map(|_| rng.gen_range(0..m) as i64).collect()
}

/// Expected design size over uniformly random shifts, `n^d / m^(d-1)`.
pub fn expected_size(n: u64, m: u64, d: usize) -> f64 {
    n as f64 * (n as f64 / m as f64).powi(d as i32 - 1)
}

/// The `m` design points inside the window `∏ [L_k, L_k + m)` (integer units).
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub corner: Vec<u64>,
    /// `m × d` integer coordinates, row `s` from residue `s`.
    pub keys: Vec<u64>,
    m: usize,
    d: usize,
    n: u64,
}

impl Window {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn key(&self, s: usize) -> &[u64] {
        &self.keys[s * self.d..(s + 1) * self.d]
    }

    /// Points in unit-cube coordinates.
    pub fn design(&self) -> Design {
        let mut pts = Vec::with_capacity(self.keys.len());
        key_to_point(&self.keys, self.n, &mut pts);
        Design::new(self.m, self.d, pts).expect("window points lie in the unit cube")
    }

    /// Integer offsets from the corner, in `{0, …, m-1}`.
    pub fn relative_keys(&self) -> Vec<u64> {
        self.keys
            .iter()
            .enumerate()
            .map(|(idx, &c)| c - self.corner[idx % self.d])
            .collect()
    }
}

fn check_corner(spec: &RlhdSpec, corner: &[u64]) -> Result<()> {
    if corner.len() != spec.d() {
        return Err(Error::InvalidParameter(format!(
            "corner has {} coordinates, design has {}",
            corner.len(),
            spec.d()
        )));
    }
    if let Some(&c) = corner.iter().find(|&&c| c + spec.m > spec.n) {
        return Err(Error::InvalidParameter(format!(
            "corner coordinate {c} leaves the unit cube (max {})",
            spec.n - spec.m
        )));
    }
    Ok(())
}

/// Window at an integer corner, computed in closed form.
pub fn local_window(spec: &RlhdSpec, corner: &[u64]) -> Result<Window> {
    check_corner(spec, corner)?;
    let (d, m) = (spec.d(), spec.m);
    let mut keys = Vec::with_capacity(m as usize * d);
    for s in 0..m {
        for (k, &l) in corner.iter().enumerate() {
            let o = (spec.offset(s, k) + m - l % m) % m;
            keys.push(l + o);
        }
    }
    Ok(Window {
        corner: corner.to_vec(),
        keys,
        m: m as usize,
        d,
        n: spec.n,
    })
}

/// Integer corner of a window given in unit-cube coordinates; rejects corners off the `1/n` grid.
pub fn corner_from_coords(spec: &RlhdSpec, l: &[f64]) -> Result<Vec<u64>> {
    let n = spec.n as f64;
    let corner = l
        .iter()
        .map(|&x| {
            let c = x * n;
            let r = c.round();
            if (c - r).abs() > 1e-9 || r < 0.0 {
                Err(Error::InvalidParameter(format!(
                    "window corner {x} is not on the 1/{} grid",
                    spec.n
                )))
            } else {
                Ok(r as u64)
            }
        })
        .collect::<Result<Vec<u64>>>()?;
    check_corner(spec, &corner)?;
    Ok(corner)
}

/// Whether the integer translation `shift` lies in `{z·m + i·v}`, i.e. whether windows whose
/// corners differ by `shift` hold the same relative configuration.
pub fn translate_member(spec: &RlhdSpec, shift: &[i64]) -> bool {
    if shift.len() != spec.d() {
        return false;
    }
    let m = spec.m as i64;
    let inv = mod_inverse(spec.v[0], spec.m).expect("v is coprime to m") as i128;
    let i = (shift[0].rem_euclid(m) as i128 * inv % m as i128) as i64;
    shift
        .iter()
        .zip(&spec.v)
        .all(|(&s, &vk)| s.rem_euclid(m) == ((i as i128 * vk as i128) % m as i128) as i64)
}

/// Corner in `{z·m + i·v} ∩ [0, n-m]^d` whose window centre is nearest to `x`.
///
/// Distance is the max-norm, so the chosen window contains `x` whenever any window does;
/// Euclidean distance breaks ties, then the smallest residue. For each residue the axes
/// separate, so each is solved by clamped rounding.
pub fn nearest_window_corner(spec: &RlhdSpec, x: &[f64]) -> Vec<u64> {
    let (n, m) = (spec.n, spec.m);
    let d = spec.d();
    let half = m as f64 / 2.0;
    let mut best: Option<((f64, f64), Vec<u64>)> = None;
    let mut corner = vec![0u64; d];
    'residue: for i in 0..m {
        let (mut cheb, mut dist) = (0.0f64, 0.0);
        for k in 0..d {
            let r = (i as u128 * spec.v[k] as u128 % m as u128) as u64;
            if r + m > n {
                continue 'residue;
            }
            let steps = (n - m - r) / m;
            let target = x[k] * n as f64 - half;
            let t = ((target - r as f64) / m as f64).round().clamp(0.0, steps as f64) as u64;
            corner[k] = r + t * m;
            let diff = (corner[k] as f64 - target) / n as f64;
            cheb = cheb.max(diff.abs());
            dist += diff * diff;
        }
        if best.as_ref().is_none_or(|(b, _)| (cheb, dist) < *b) {
            best = Some(((cheb, dist), corner.clone()));
        }
    }
    best.expect("residue 0 always has a corner").1
}

/// Corners of all windows sharing the configuration of the window at the origin.
pub fn translation_corners(spec: &RlhdSpec) -> Vec<Vec<u64>> {
    let (n, m, d) = (spec.n, spec.m, spec.d());
    let mut out = Vec::new();
    for i in 0..m {
        let r: Vec<u64> = (0..d)
            .map(|k| (i as u128 * spec.v[k] as u128 % m as u128) as u64)
            .collect();
        if r.iter().any(|&rk| rk + m > n) {
            continue;
        }
        let counts: Vec<u64> = r.iter().map(|&rk| (n - m - rk) / m + 1).collect();
        let mut z = vec![0u64; d];
        'grid: loop {
            out.push(r.iter().zip(&z).map(|(&rk, &zk)| rk + zk * m).collect());
            for k in (0..d).rev() {
                z[k] += 1;
                if z[k] < counts[k] {
                    continue 'grid;
                }
                z[k] = 0;
            }
            break;
        }
    }
    out
}
