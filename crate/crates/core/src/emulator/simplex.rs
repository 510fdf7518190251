//! Derivative-free Nelder–Mead minimization with an evaluation budget.

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
}

/// Minimizes `f` from `x0`, with initial vertices `x0 + step·e_k`. Non-finite values rank last.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> SimplexResult {
    let dim = x0.len();
    let mut evals = 0;
    // past the budget, candidates are ranked last without calling `f`
    let mut eval = |x: &[f64], evals: &mut usize| {
        if *evals >= max_evals {
            return f64::INFINITY;
        }
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for k in 0..dim {
        let mut x = x0.to_vec();
        x[k] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let mut trace = Vec::new();
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);
    trace.push(simplex[0].1);

    while evals < max_evals {
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if worst.is_finite() && (worst - best).abs() <= tol * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[dim].1 {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                // shrink towards the best vertex
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    if evals >= max_evals {
                        break;
                    }
                    let x: Vec<f64> = vertex
                        .0
                        .iter()
                        .zip(&x_best)
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    let v = eval(&x, &mut evals);
                    *vertex = (x, v);
                }
            }
        }
        order(&mut simplex);
        trace.push(simplex[0].1);
    }
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        evaluations: evals,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock_within_budget() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let res = nelder_mead(f, &[-1.2, 1.0], 0.5, 2000, 1e-14);
        assert!(res.value < 1e-8, "{}", res.value);
        assert!(res.evaluations <= 2000);
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn respects_budget_and_infinite_regions() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::INFINITY } else { (x[0] - 2.0).powi(2) };
        let res = nelder_mead(f, &[1.0], 1.0, 30, 0.0);
        assert!(res.evaluations <= 30);
        assert!((res.x[0] - 2.0).abs() < 1e-2);
    }
}
