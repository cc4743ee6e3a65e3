//! Nelder–Mead simplex minimization.

#[derive(Debug, Clone)]
pub struct SimplexOutcome<const D: usize> {
    pub x: [f64; D],
    pub f: f64,
    #[allow(dead_code)]
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `start` with initial edge lengths `steps`. Stops when
/// the largest coordinate spread of the simplex drops below `tol` or after
/// `max_iter` iterations.
pub fn minimize<const D: usize, F>(
    f: F,
    start: [f64; D],
    steps: [f64; D],
    tol: f64,
    max_iter: usize,
) -> SimplexOutcome<D>
where
    F: Fn(&[f64; D]) -> f64,
{
    let eval = |x: &[f64; D]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
    simplex.push((start, eval(&start)));
    for d in 0..D {
        let mut x = start;
        x[d] += steps[d];
        simplex.push((x, eval(&x)));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; D];
        for (x, _) in &simplex[..D] {
            for d in 0..D {
                centroid[d] += x[d] / D as f64;
            }
        }
        let worst = simplex[D];
        let along = |coef: f64| {
            let mut x = [0.0; D];
            for d in 0..D {
                x[d] = centroid[d] + coef * (worst.0[d] - centroid[d]);
            }
            x
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            simplex[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[D - 1].1 {
            simplex[D] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5);
            (x, eval(&x))
        } else {
            let x = along(0.5);
            (x, eval(&x))
        };
        if fc < fr.min(worst.1) {
            simplex[D] = (xc, fc);
            continue;
        }
        // Shrink towards the best vertex.
        let best = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            for (x, b) in vertex.0.iter_mut().zip(best) {
                *x = b + 0.5 * (*x - b);
            }
            vertex.1 = eval(&vertex.0);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    SimplexOutcome { x: simplex[0].0, f: simplex[0].1, iterations, converged }
}

fn diameter<const D: usize>(simplex: &[([f64; D], f64)]) -> f64 {
    (0..D)
        .map(|d| {
            let (lo, hi) =
                simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.0[d]), hi.max(v.0[d])));
            hi - lo
        })
        .fold(0.0, f64::max)
}
