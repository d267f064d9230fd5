//! Box-constrained Nelder-Mead minimizer.

/// Result of a [`nelder_mead`] run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Initial edge length as a fraction of each box width.
    pub initial_step: f64,
    /// Stop once the spread of vertex values falls below this.
    pub f_tolerance: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 200,
            initial_step: 0.05,
            f_tolerance: 1e-12,
        }
    }
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn finite_or_inf(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Vertices around `x0`; each edge points inward when `x0` sits on the upper bound.
fn initial_simplex(x0: &[f64], lo: &[f64], hi: &[f64], step: f64) -> Vec<Vec<f64>> {
    let n = x0.len();
    let mut out = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        let width = (hi[i] - lo[i]).max(f64::EPSILON);
        let h = step * width;
        v[i] = if x0[i] + h <= hi[i] {
            x0[i] + h
        } else {
            x0[i] - h
        };
        clamp_into(&mut v, lo, hi);
        out.push(v);
    }
    out
}

/// Smallest per-coordinate extent; zero once clamping flattens a direction.
fn spread(simplex: &[Vec<f64>]) -> f64 {
    let first = &simplex[0];
    (0..first.len())
        .map(|k| {
            simplex[1..]
                .iter()
                .map(|v| (v[k] - first[k]).abs())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x0`.
///
/// The returned point is never worse than `x0`. A collapsed simplex is
/// rebuilt around the current best vertex, as is one flattened against a bound.
pub fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    options: SimplexOptions,
) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut x_start = x0.to_vec();
    clamp_into(&mut x_start, lo, hi);
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        finite_or_inf(f(x))
    };
    if n == 0 {
        let fx = eval(&x_start);
        return SimplexResult {
            x: x_start,
            f: fx,
            evaluations,
        };
    }
    let mut simplex = initial_simplex(&x_start, lo, hi, options.initial_step);
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    // dimension-adapted coefficients; the textbook ones stall beyond a few dimensions
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    for _ in 0..options.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if values[n] - values[0] <= options.f_tolerance && values[n].is_finite() {
            break;
        }
        if spread(&simplex) < 1e-12 {
            let best = simplex[0].clone();
            simplex = initial_simplex(&best, lo, hi, options.initial_step);
            let f0 = values[0];
            values = std::iter::once(f0)
                .chain(simplex[1..].iter().map(|v| eval(v)))
                .collect();
            continue;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let towards = |coef: f64, from: &[f64]| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clamp_into(&mut p, lo, hi);
            p
        };

        let xr = towards(alpha, &simplex[n]);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = towards(gamma, &simplex[n]);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = towards(rho, &simplex[n]);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = towards(-rho, &simplex[n]);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    SimplexResult {
        x: simplex[best].clone(),
        f: values[best],
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let opts = SimplexOptions {
            max_iterations: 2000,
            ..Default::default()
        };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], opts);
        assert!(r.f < 1e-8, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2);
        let r = nelder_mead(f, &[0.5], &[0.0], &[1.0], SimplexOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn start_on_upper_bound_is_handled() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
        let r = nelder_mead(
            f,
            &[2.0, 2.0, 2.0],
            &[0.0; 3],
            &[2.0; 3],
            SimplexOptions::default(),
        );
        assert!(r.f < 1e-8, "{r:?}");
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (x[0] * 7.0).sin() + x[1].cos();
        let x0 = [0.4, 1.3];
        let r = nelder_mead(
            f,
            &x0,
            &[0.0, 0.0],
            &[2.0, 2.0],
            SimplexOptions {
                max_iterations: 5,
                ..Default::default()
            },
        );
        assert!(r.f <= f(&x0));
    }

    #[test]
    fn nan_values_are_avoided() {
        let f = |x: &[f64]| {
            if x[0] > 0.5 {
                f64::NAN
            } else {
                (x[0] - 0.2).powi(2)
            }
        };
        let r = nelder_mead(f, &[0.4], &[0.0], &[1.0], SimplexOptions::default());
        assert!(r.f < 1e-8 && r.f.is_finite());
    }
}
