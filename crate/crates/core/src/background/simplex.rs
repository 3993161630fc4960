//! Nelder–Mead downhill simplex with restarts.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Converged when the best value improves by less than this over
    /// `window` iterations and the vertex values lie within it.
    pub tolerance: f64,
    pub window: usize,
    /// Restart around the best point after convergence, while restarts
    /// still improve by more than `tolerance`.
    pub max_restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iterations: 1000, tolerance: 1e-6, window: 10, max_restarts: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration (non-increasing).
    pub history: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0);
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;
    let mut scale = 1.0;

    for _restart in 0..=opts.max_restarts {
        let start_v = best_v;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_v));
        for j in 0..n {
            let mut x = best_x.clone();
            x[j] += scale * steps[j];
            let v = eval(&x);
            simplex.push((x, v));
        }
        let run_start = history.len();
        converged = false;

        while iterations < opts.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let worst = simplex[n].clone();
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
            };

            let xr = along(REFLECT);
            let vr = eval(&xr);
            if vr < simplex[0].1 {
                let xe = along(EXPAND);
                let ve = eval(&xe);
                simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
            } else if vr < simplex[n - 1].1 {
                simplex[n] = (xr, vr);
            } else {
                let (xc, vc) = if vr < worst.1 {
                    let xc = along(CONTRACT * REFLECT);
                    let vc = eval(&xc);
                    (xc, vc)
                } else {
                    let xc = along(-CONTRACT);
                    let vc = eval(&xc);
                    (xc, vc)
                };
                if vc < worst.1.min(vr) {
                    simplex[n] = (xc, vc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> =
                            x_best.iter().zip(&vertex.0).map(|(b, v)| b + SHRINK * (v - b)).collect();
                        let v = eval(&x);
                        *vertex = (x, v);
                    }
                }
            }
            iterations += 1;

            let (bx, bv) = simplex.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty simplex");
            if *bv < best_v {
                best_v = *bv;
                best_x = bx.clone();
            }
            history.push(best_v);

            // the best vertex alone can sit still for many iterations while
            // the rest of the simplex is still moving, so also require the
            // simplex to have collapsed in value
            let spread = simplex.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max) - best_v;
            let done = history.len() - run_start;
            if done > opts.window
                && history[history.len() - 1 - opts.window] - best_v < opts.tolerance
                && spread < opts.tolerance
            {
                converged = true;
                break;
            }
        }

        if iterations >= opts.max_iterations || start_v - best_v < opts.tolerance {
            break;
        }
        scale *= 0.5;
    }

    SimplexResult { x: best_x, value: best_v, iterations, evaluations, converged, history }
}
