//! Integration and emulation test functions on the unit cube, mapped affinely to their domains.
//!
//! Definitions and default constants:
//! - `prpeak` (Genz product peak): `Π (a⁻² + (x_k − u)²)⁻¹`, `a = 5`, `u = 0.5`, on `[0,1]^d`.
//! - `oscil` (Genz oscillatory): `cos(2πu + Σ a·x_k)`, `a = 5`, `u = 0.5`, on `[0,1]^d`.
//! - `gfunction` (Sobol' G): `Π (|4x_k − 2| + a_k)/(1 + a_k)`, `a_k = (k − 2)/2`, on `[0,1]^d`.
//! - `borehole`: water flow through a borehole, 8 inputs on their standard ranges.
//! - `ackley`: `−20 exp(−0.2 √(Σx²/d)) − exp(Σ cos(2πx)/d) + 20 + e` on `[−32.768, 32.768]^d`.
//! - `shekel`: `−Σ_{i≤10} (Σ_j (x_j − C_ji)² + β_i)⁻¹` on `[0,10]^4`.
//! - `michalewicz`: `−Σ sin(x_k) sin^{20}(k x_k²/π)` on `[0,π]^d`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionName {
    Prpeak,
    Gfunction,
    Borehole,
    Oscil,
    Ackley,
    Shekel,
    Michalewicz,
}

impl FunctionName {
    pub const ALL: [FunctionName; 7] = [
        FunctionName::Prpeak,
        FunctionName::Gfunction,
        FunctionName::Borehole,
        FunctionName::Oscil,
        FunctionName::Ackley,
        FunctionName::Shekel,
        FunctionName::Michalewicz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionName::Prpeak => "prpeak",
            FunctionName::Gfunction => "gfunction",
            FunctionName::Borehole => "borehole",
            FunctionName::Oscil => "oscil",
            FunctionName::Ackley => "ackley",
            FunctionName::Shekel => "shekel",
            FunctionName::Michalewicz => "michalewicz",
        }
    }

    /// Dimension used by the benchmarks.
    pub fn default_dim(self) -> usize {
        match self {
            FunctionName::Prpeak => 3,
            FunctionName::Gfunction => 5,
            FunctionName::Borehole => 8,
            FunctionName::Oscil => 12,
            FunctionName::Ackley => 3,
            FunctionName::Shekel => 4,
            FunctionName::Michalewicz => 6,
        }
    }

    fn fixed_dim(self) -> Option<usize> {
        match self {
            FunctionName::Borehole => Some(8),
            FunctionName::Shekel => Some(4),
            _ => None,
        }
    }
}

impl fmt::Display for FunctionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FunctionName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        FunctionName::ALL
            .into_iter()
            .find(|f| f.as_str() == lower)
            .ok_or(Error::UnknownFunction(s.to_string()))
    }
}

const GENZ_A: f64 = 5.0;
const GENZ_U: f64 = 0.5;
const MICHALEWICZ_M: i32 = 10;

const BOREHOLE_LOWER: [f64; 8] = [0.05, 100.0, 63_070.0, 990.0, 63.1, 700.0, 1_120.0, 9_855.0];
const BOREHOLE_UPPER: [f64; 8] = [0.15, 50_000.0, 115_600.0, 1_110.0, 116.0, 820.0, 1_680.0, 12_045.0];

const SHEKEL_BETA: [f64; 10] = [0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5];
const SHEKEL_C: [[f64; 10]; 4] = [
    [4.0, 1.0, 8.0, 6.0, 3.0, 2.0, 5.0, 8.0, 6.0, 7.0],
    [4.0, 1.0, 8.0, 6.0, 7.0, 9.0, 3.0, 1.0, 2.0, 3.6],
    [4.0, 1.0, 8.0, 6.0, 3.0, 2.0, 5.0, 8.0, 6.0, 7.0],
    [4.0, 1.0, 8.0, 6.0, 7.0, 9.0, 3.0, 1.0, 2.0, 3.6],
];

/// Randomly shifted rank-1 lattice rule used for the stored borehole mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeRule {
    pub points: u64,
    /// Power-generator base: `v = (1, g, g², …) mod points`.
    pub generator: u64,
    pub shift_seed: u64,
}

pub const BOREHOLE_RULE: LatticeRule = LatticeRule {
    points: 1_000_003,
    generator: BOREHOLE_GENERATOR,
    shift_seed: 20_240_601,
};
const BOREHOLE_GENERATOR: u64 = 232_074;
const BOREHOLE_MEAN: f64 = 77.651_152_377_476_42;

/// Where a reference mean comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MeanSource {
    Analytic,
    Lattice(LatticeRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceMean {
    pub value: f64,
    pub source: MeanSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub name: FunctionName,
    pub d: usize,
    /// Per-axis domain bounds; inputs in `[0,1]` are mapped affinely onto them.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TestFunction {
    pub fn new(name: FunctionName, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if let Some(fixed) = name.fixed_dim() {
            if d != fixed {
                return Err(Error::InvalidParameter(format!(
                    "{name} is defined only for d = {fixed}, got {d}"
                )));
            }
        }
        let (lower, upper) = match name {
            FunctionName::Prpeak | FunctionName::Oscil | FunctionName::Gfunction => (vec![0.0; d], vec![1.0; d]),
            FunctionName::Borehole => (BOREHOLE_LOWER.to_vec(), BOREHOLE_UPPER.to_vec()),
            FunctionName::Ackley => (vec![-32.768; d], vec![32.768; d]),
            FunctionName::Shekel => (vec![0.0; d], vec![10.0; d]),
            FunctionName::Michalewicz => (vec![0.0; d], vec![PI; d]),
        };
        Ok(Self {
            name,
            d,
            lower,
            upper,
        })
    }

    pub fn with_default_dim(name: FunctionName) -> Self {
        Self::new(name, name.default_dim()).expect("default dimension is valid")
    }

    pub fn by_name(name: &str, d: Option<usize>) -> Result<Self> {
        let name: FunctionName = name.parse()?;
        Self::new(name, d.unwrap_or(name.default_dim()))
    }

    /// Value at `x ∈ [0,1]^d`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::InvalidParameter(format!(
                "{} expects {} inputs, got {}",
                self.name,
                self.d,
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("input {v} outside [0,1]")));
        }
        Ok(self.eval(x))
    }

    /// [`TestFunction::evaluate`] without input checks.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let z = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&u, (&a, &b))| a + u * (b - a));
        match self.name {
            FunctionName::Prpeak => z
                .map(|t| 1.0 / (GENZ_A.powi(-2) + (t - GENZ_U).powi(2)))
                .product(),
            FunctionName::Oscil => (2.0 * PI * GENZ_U + GENZ_A * z.sum::<f64>()).cos(),
            FunctionName::Gfunction => z
                .enumerate()
                .map(|(k, t)| {
                    let a = (k as f64 + 1.0 - 2.0) / 2.0;
                    ((4.0 * t - 2.0).abs() + a) / (1.0 + a)
                })
                .product(),
            FunctionName::Borehole => {
                let v: Vec<f64> = z.collect();
                let (rw, r, tu, hu, tl, hl, l, kw) = (v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]);
                let lr = (r / rw).ln();
                2.0 * PI * tu * (hu - hl) / (lr * (1.0 + 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl))
            }
            FunctionName::Ackley => {
                let d = self.d as f64;
                let (mut sq, mut cs) = (0.0, 0.0);
                for t in z {
                    sq += t * t;
                    cs += (2.0 * PI * t).cos();
                }
                -20.0 * (-0.2 * (sq / d).sqrt()).exp() - (cs / d).exp() + 20.0 + E
            }
            FunctionName::Shekel => {
                let v: Vec<f64> = z.collect();
                -(0..10)
                    .map(|i| {
                        let s: f64 = (0..4).map(|j| (v[j] - SHEKEL_C[j][i]).powi(2)).sum();
                        1.0 / (s + SHEKEL_BETA[i])
                    })
                    .sum::<f64>()
            }
            FunctionName::Michalewicz => -z
                .enumerate()
                .map(|(k, t)| t.sin() * ((k as f64 + 1.0) * t * t / PI).sin().powi(2 * MICHALEWICZ_M))
                .sum::<f64>(),
        }
    }

    /// Mean over the unit cube, when known.
    pub fn reference_mean(&self) -> Option<ReferenceMean> {
        let d = self.d as i32;
        let analytic = |value| {
            Some(ReferenceMean {
                value,
                source: MeanSource::Analytic,
            })
        };
        match self.name {
            FunctionName::Prpeak => {
                let one = GENZ_A * ((GENZ_A * (1.0 - GENZ_U)).atan() + (GENZ_A * GENZ_U).atan());
                analytic(one.powi(d))
            }
            FunctionName::Oscil => {
                // Re[e^{2πiu} ((e^{ia} − 1)/(ia))^d]
                let (re1, im1) = (GENZ_A.sin() / GENZ_A, (1.0 - GENZ_A.cos()) / GENZ_A);
                let (modulus, arg) = ((re1 * re1 + im1 * im1).sqrt(), im1.atan2(re1));
                analytic(modulus.powi(d) * (2.0 * PI * GENZ_U + d as f64 * arg).cos())
            }
            FunctionName::Gfunction => analytic(1.0),
            FunctionName::Borehole => Some(ReferenceMean {
                value: BOREHOLE_MEAN,
                source: MeanSource::Lattice(BOREHOLE_RULE),
            }),
            _ => None,
        }
    }

    /// Domain point mapped to `x ∈ [0,1]^d`.
    pub fn to_domain(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&u, (&a, &b))| a + u * (b - a))
            .collect()
    }
}

/// Evaluates the named function at its default dimension (or `x.len()` when variable).
pub fn evaluate_function(name: &str, x: &[f64]) -> Result<f64> {
    TestFunction::by_name(name, Some(x.len()))?.evaluate(x)
}

/// Randomly shifted rank-1 lattice estimate of the mean of `f`.
pub fn lattice_rule_mean(f: &TestFunction, rule: &LatticeRule) -> f64 {
    use rand::Rng;
    use rayon::prelude::*;

    let n = rule.points;
    let gen = crate::optim::power_generator(n, f.d, rule.generator);
    let mut rng = crate::rng::rng_from_seed(rule.shift_seed);
    let shift: Vec<f64> = (0..f.d).map(|_| rng.gen::<f64>()).collect();
    let chunk = 1u64 << 14;
    let partial: Vec<f64> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut x = vec![0.0; f.d];
            let mut s = 0.0;
            for i in c * chunk..((c + 1) * chunk).min(n) {
                for (k, slot) in x.iter_mut().enumerate() {
                    let base = (i as u128 * gen[k] as u128 % n as u128) as f64 / n as f64;
                    *slot = (base + shift[k]).fract();
                }
                s += f.eval(&x);
            }
            s
        })
        .collect();
    partial.iter().sum::<f64>() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc_mean(f: &TestFunction, n: usize, seed: u64) -> f64 {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut x = vec![0.0; f.d];
        (0..n)
            .map(|_| {
                x.iter_mut().for_each(|v| *v = rng.gen());
                f.eval(&x)
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn ackley_vanishes_at_origin() {
        let f = TestFunction::with_default_dim(FunctionName::Ackley);
        assert!(f.evaluate(&[0.5, 0.5, 0.5]).unwrap().abs() < 1e-14);
        assert!(f.evaluate(&[0.1, 0.5, 0.5]).unwrap() > 0.1);
    }

    #[test]
    fn known_values() {
        let b = TestFunction::with_default_dim(FunctionName::Borehole);
        // all inputs at their lower bounds
        let lo = b.evaluate(&[0.0; 8]).unwrap();
        let lr = (100.0f64 / 0.05).ln();
        let want = 2.0 * PI * 63_070.0 * 290.0 / (lr * (1.0 + 2.0 * 1120.0 * 63_070.0 / (lr * 0.0025 * 9855.0) + 63_070.0 / 63.1));
        assert!((lo - want).abs() < 1e-9 * want);
        let s = TestFunction::with_default_dim(FunctionName::Shekel);
        assert!((s.evaluate(&[0.4; 4]).unwrap() + 10.536).abs() < 1e-3);
        let g = TestFunction::new(FunctionName::Gfunction, 2).unwrap();
        assert!((g.evaluate(&[0.5, 0.5]).unwrap() - (-0.5 / 0.5) * 0.0).abs() < 1e-15);
        let m = TestFunction::new(FunctionName::Michalewicz, 2).unwrap();
        let x = [2.20 / PI, 1.57 / PI];
        assert!((m.evaluate(&x).unwrap() + 1.8013).abs() < 1e-3);
    }

    #[test]
    fn analytic_means_match_monte_carlo() {
        for (name, d, tol) in [
            (FunctionName::Prpeak, 3, 0.02),
            (FunctionName::Oscil, 4, 0.01),
            (FunctionName::Gfunction, 5, 0.02),
        ] {
            let f = TestFunction::new(name, d).unwrap();
            let want = f.reference_mean().unwrap().value;
            let got = mc_mean(&f, 400_000, 1);
            assert!((got - want).abs() < tol * want.abs().max(1.0), "{name}: {got} vs {want}");
        }
    }

    #[test]
    fn borehole_reference_reproduces() {
        let f = TestFunction::with_default_dim(FunctionName::Borehole);
        let r = f.reference_mean().unwrap();
        let MeanSource::Lattice(rule) = r.source else {
            panic!("borehole mean comes from a lattice rule");
        };
        assert!(rule.points >= 1_000_000);
        assert!((lattice_rule_mean(&f, &rule) - r.value).abs() < 1e-9 * r.value);
        let other = LatticeRule { shift_seed: 7, ..rule };
        assert!((lattice_rule_mean(&f, &other) - r.value).abs() < 1e-5 * r.value);
        assert!((mc_mean(&f, 200_000, 3) - r.value).abs() < 0.01 * r.value);
    }

    #[test]
    fn name_and_dimension_errors() {
        assert!(matches!(evaluate_function("rosenbrock", &[0.5]), Err(Error::UnknownFunction(_))));
        assert!(TestFunction::new(FunctionName::Borehole, 3).is_err());
        assert!(TestFunction::with_default_dim(FunctionName::Prpeak).evaluate(&[0.5; 2]).is_err());
        assert!(TestFunction::with_default_dim(FunctionName::Prpeak).evaluate(&[0.5, 0.5, 1.5]).is_err());
        assert_eq!("OSCIL".parse::<FunctionName>().unwrap(), FunctionName::Oscil);
        assert!(evaluate_function("ackley", &[0.5; 5]).unwrap().abs() < 1e-14);
    }
}
