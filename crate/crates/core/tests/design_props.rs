use latticelhd::design::{wd_kernel, wrap_dist_1d};
use latticelhd::optim::random_lhd;
use latticelhd::rng::rng_from_seed;
use latticelhd::{criterion_full, CriterionKind, Design};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn wrap_separation_dominates_euclidean(n in 3usize..40, d in 1usize..6, seed in any::<u64>()) {
        let x = random_lhd(n, d, seed);
        let ws = criterion_full(&x, CriterionKind::Ws).unwrap();
        let rs = criterion_full(&x, CriterionKind::Rs).unwrap();
        prop_assert!(ws >= rs);
    }

    #[test]
    fn criteria_ignore_row_and_column_order(n in 3usize..25, d in 2usize..5, seed in any::<u64>()) {
        let x = random_lhd(n, d, seed);
        let mut rng = rng_from_seed(seed ^ 1);
        let mut rows: Vec<usize> = (0..n).collect();
        let mut cols: Vec<usize> = (0..d).collect();
        rows.shuffle(&mut rng);
        cols.shuffle(&mut rng);
        let pts: Vec<f64> = rows.iter().flat_map(|&i| cols.iter().map(move |&k| (i, k))).map(|(i, k)| x.get(i, k)).collect();
        let y = Design::new(n, d, pts).unwrap();
        for kind in CriterionKind::ALL {
            let (a, b) = (criterion_full(&x, kind).unwrap(), criterion_full(&y, kind).unwrap());
            prop_assert!(rel_close(a, b, 1e-12), "{kind}: {a} vs {b}");
        }
    }

    #[test]
    fn wrap_criteria_survive_torus_shifts(n in 3usize..30, d in 1usize..5, seed in any::<u64>()) {
        let x = random_lhd(n, d, seed);
        let mut rng = rng_from_seed(seed ^ 2);
        let s: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let pts: Vec<f64> = x.as_slice().iter().enumerate().map(|(idx, &v)| (v + s[idx % d]).fract()).collect();
        let y = Design::new(n, d, pts).unwrap();
        for kind in [CriterionKind::Ws, CriterionKind::Wa, CriterionKind::Wp, CriterionKind::Wd] {
            let (a, b) = (criterion_full(&x, kind).unwrap(), criterion_full(&y, kind).unwrap());
            prop_assert!(rel_close(a, b, 1e-9), "{kind}: {a} vs {b}");
        }
    }

    #[test]
    fn wd_kernel_closed_form(u in -1.0f64..=1.0) {
        let w = wrap_dist_1d(u + 0.5);
        prop_assert!((wd_kernel(u) - (1.25 + w * w)).abs() <= 1e-12);
        prop_assert!((wd_kernel(u) - (1.5 - u.abs() * (1.0 - u.abs()))).abs() <= 1e-12);
    }
}
