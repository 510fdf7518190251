use std::collections::BTreeSet;

use latticelhd::rlhd::{expected_size, local_window, rlhd_points, translate_member, RlhdSpec};
use latticelhd::rng::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

fn coprime_entry(m: u64, raw: u64) -> u64 {
    (raw % m..raw % m + m)
        .map(|x| x % m)
        .find(|&x| latticelhd::lattice::gcd(x, m) == 1)
        .unwrap()
}

fn spec_strategy() -> impl Strategy<Value = RlhdSpec> {
    (2u64..30, 0u64..40, 1usize..4, any::<u64>()).prop_map(|(m, extra, d, seed)| {
        let n = m + extra;
        let mut rng = rng_from_seed(seed);
        let v = (0..d).map(|_| coprime_entry(m, rng.gen())).collect();
        let delta = (0..d).map(|_| rng.gen_range(-50i64..50)).collect();
        RlhdSpec::new(n, m, v, delta).unwrap()
    })
}

fn keys(spec: &RlhdSpec) -> Vec<Vec<u64>> {
    let (x, _) = rlhd_points(spec).unwrap();
    let n = spec.n() as f64;
    x.rows()
        .map(|r| r.iter().map(|&c| (c * n - 0.5).round() as u64).collect())
        .collect()
}

fn random_corner(spec: &RlhdSpec, rng: &mut impl Rng) -> Vec<u64> {
    (0..spec.d()).map(|_| rng.gen_range(0..=spec.n() - spec.m())).collect()
}

fn relative(keys: &[Vec<u64>], corner: &[u64], m: u64) -> BTreeSet<Vec<u64>> {
    keys.iter()
        .filter(|k| k.iter().zip(corner).all(|(&c, &l)| c >= l && c < l + m))
        .map(|k| k.iter().zip(corner).map(|(&c, &l)| c - l).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn windows_match_enumeration_and_are_stratified(spec in spec_strategy(), seed in any::<u64>()) {
        let all = keys(&spec);
        let m = spec.m();
        let mut rng = rng_from_seed(seed);
        for _ in 0..50 {
            let corner = random_corner(&spec, &mut rng);
            let w = local_window(&spec, &corner).unwrap();
            let closed: BTreeSet<Vec<u64>> = (0..w.len())
                .map(|s| w.key(s).iter().zip(&corner).map(|(&c, &l)| c - l).collect())
                .collect();
            prop_assert_eq!(&closed, &relative(&all, &corner, m));
            prop_assert_eq!(closed.len() as u64, m);
            for k in 0..spec.d() {
                let strata: BTreeSet<u64> = closed.iter().map(|o| o[k]).collect();
                prop_assert_eq!(strata.len() as u64, m);
            }
        }
    }

    #[test]
    fn translation_law(spec in spec_strategy(), seed in any::<u64>()) {
        let all = keys(&spec);
        let m = spec.m();
        let mut rng = rng_from_seed(seed);
        for _ in 0..30 {
            let a = random_corner(&spec, &mut rng);
            let b = random_corner(&spec, &mut rng);
            let shift: Vec<i64> = a.iter().zip(&b).map(|(&x, &y)| x as i64 - y as i64).collect();
            let same = relative(&all, &a, m) == relative(&all, &b, m);
            prop_assert_eq!(same, translate_member(&spec, &shift));
        }
    }

    #[test]
    fn size_stays_near_its_expectation(spec in spec_strategy()) {
        let (n, m, d) = (spec.n(), spec.m(), spec.d() as i32);
        let (q, rho) = ((n / m) as f64, (n % m) as f64);
        let bound = rho * ((q + 1.0).powi(d) - q.powi(d) - d as f64 * q.powi(d - 1));
        let size = spec.size() as f64;
        prop_assert!((size - expected_size(n, m, spec.d())).abs() <= bound + 1e-9);
        prop_assert_eq!(keys(&spec).len() as f64, size);
    }
}

#[test]
fn mean_size_over_all_shifts_is_exact() {
    for (n, m, d) in [(4u64, 2u64, 2usize), (12, 3, 2), (7, 3, 3), (10, 4, 2)] {
        let mut total = 0u128;
        let mut count = 0u128;
        let mut delta = vec![0i64; d];
        loop {
            total += RlhdSpec::new(n, m, vec![1; d], delta.clone()).unwrap().size();
            count += 1;
            let mut k = 0;
            while k < d {
                delta[k] += 1;
                if delta[k] < m as i64 {
                    break;
                }
                delta[k] = 0;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        // n^d / m^(d-1) over m^d shifts, kept in integers
        assert_eq!(total * (m as u128).pow(d as u32 - 1), (n as u128).pow(d as u32) * count);
    }
}
