//! Damped least-squares engine for offset-minus-dip curves.
//!
//! Every fitted model here has the shape `f(x) = tau - lambda * basis(x; q)`
//! where `basis` is a normalized bump controlled by a small nonlinear
//! parameter vector `q` (center and width per input dimension). For fixed
//! `q` the optimal `(tau, lambda)` is a weighted linear solve, so the damped
//! iteration runs over `q` alone with the linear pair profiled out at every
//! evaluation. This sidesteps the long degenerate valley that `(lambda,
//! tau)` form when the bump is much wider than the data window.
//!
//! Steps are only accepted when they do not increase the weighted cost, so
//! the final residual never exceeds the residual of the starting guess.

/// Solve the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting; `None` when the pivot collapses.
fn solve_small<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let mut pivot = col;
        for row in col + 1..N {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col];
        for row in col + 1..N {
            let factor = a[row][col] / pivot_row[col];
            for (dst, src) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= factor * src;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; N];
    for col in (0..N).rev() {
        let mut sum = b[col];
        for k in col + 1..N {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// One observation: input coordinates, target value, positive weight.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Point<const D: usize> {
    pub x: [f64; D],
    pub z: f64,
    pub w: f64,
}

/// The nonlinear part of an offset-minus-dip model.
pub(crate) trait DipBasis<const D: usize, const Q: usize> {
    /// Evaluate the normalized bump at `x` for nonlinear parameters `q`.
    fn eval(&self, x: &[f64; D], q: &[f64; Q]) -> f64;
    /// Clamp `q` back into its feasible region (widths positive).
    fn project(&self, q: &mut [f64; Q]);
    /// Magnitude scale per parameter, used for finite-difference steps.
    fn scales(&self) -> [f64; Q];
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DipFit<const Q: usize> {
    pub q: [f64; Q],
    pub tau: f64,
    pub lambda: f64,
    /// Weighted sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Optimal `(tau, lambda)` for fixed nonlinear parameters: a weighted 2x2
/// linear solve. Falls back to a flat fit when the bump is numerically
/// collinear with the constant offset.
pub(crate) fn solve_linear_part<B, const D: usize, const Q: usize>(
    basis: &B,
    points: &[Point<D>],
    q: &[f64; Q],
) -> (f64, f64)
where
    B: DipBasis<D, Q>,
{
    let (mut sw, mut swb, mut swbb, mut swz, mut swbz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for pt in points {
        let b = basis.eval(&pt.x, q);
        sw += pt.w;
        swb += pt.w * b;
        swbb += pt.w * b * b;
        swz += pt.w * pt.z;
        swbz += pt.w * b * pt.z;
    }
    // Minimize sum w (z - tau + lambda b)^2 over (tau, lambda).
    let det = sw * swbb - swb * swb;
    if !det.is_finite() || det.abs() <= 1e-12 * sw.abs() * swbb.abs() || sw <= 0.0 {
        let tau = if sw > 0.0 { swz / sw } else { 0.0 };
        return (tau, 0.0);
    }
    let tau = (swbb * swz - swb * swbz) / det;
    let lambda = (swb * swz - sw * swbz) / det;
    (tau, lambda)
}

fn profiled_cost<B, const D: usize, const Q: usize>(
    basis: &B,
    points: &[Point<D>],
    q: &[f64; Q],
) -> (f64, f64, f64)
where
    B: DipBasis<D, Q>,
{
    let (tau, lambda) = solve_linear_part(basis, points, q);
    let cost = points
        .iter()
        .map(|pt| {
            let r = pt.z - (tau - lambda * basis.eval(&pt.x, q));
            pt.w * r * r
        })
        .sum();
    (tau, lambda, cost)
}

fn residuals<B, const D: usize, const Q: usize>(
    basis: &B,
    points: &[Point<D>],
    q: &[f64; Q],
    tau: f64,
    lambda: f64,
    out: &mut [f64],
) where
    B: DipBasis<D, Q>,
{
    for (r, pt) in out.iter_mut().zip(points) {
        *r = pt.z - (tau - lambda * basis.eval(&pt.x, q));
    }
}

/// Damped Gauss-Newton over the nonlinear parameters with the linear pair
/// re-profiled at every candidate. Convergence is measured as relative
/// change across the full parameter set, linear pair included.
pub(crate) fn fit_dip<B, const D: usize, const Q: usize>(
    basis: &B,
    points: &[Point<D>],
    start: [f64; Q],
    max_iterations: usize,
    rel_tol: f64,
) -> DipFit<Q>
where
    B: DipBasis<D, Q>,
{
    let mut q = start;
    basis.project(&mut q);
    let (mut tau, mut lambda, mut cost) = profiled_cost(basis, points, &q);
    let scales = basis.scales();
    let n = points.len();
    let mut res = vec![0.0; n];
    let mut res_plus = vec![0.0; n];
    let mut res_minus = vec![0.0; n];
    let mut jac = vec![[0.0; Q]; n];

    let mut damping = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < max_iterations {
        iterations += 1;
        residuals(basis, points, &q, tau, lambda, &mut res);
        // Central-difference Jacobian of the profiled residual vector.
        for k in 0..Q {
            let h = 1e-7 * (q[k].abs() + scales[k]);
            let mut qp = q;
            qp[k] += h;
            basis.project(&mut qp);
            let (tp, lp) = solve_linear_part(basis, points, &qp);
            residuals(basis, points, &qp, tp, lp, &mut res_plus);
            let mut qm = q;
            qm[k] -= h;
            basis.project(&mut qm);
            let (tm, lm) = solve_linear_part(basis, points, &qm);
            residuals(basis, points, &qm, tm, lm, &mut res_minus);
            let denom = 2.0 * h;
            for i in 0..n {
                jac[i][k] = (res_plus[i] - res_minus[i]) / denom;
            }
        }
        let mut jtj = [[0.0; Q]; Q];
        let mut jtr = [0.0; Q];
        for i in 0..n {
            let w = points[i].w;
            for a in 0..Q {
                jtr[a] -= w * jac[i][a] * res[i];
                for b in 0..Q {
                    jtj[a][b] += w * jac[i][a] * jac[i][b];
                }
            }
        }

        loop {
            let mut a = jtj;
            for i in 0..Q {
                let d = jtj[i][i];
                a[i][i] += damping * if d > 0.0 { d } else { 1e-12 };
            }
            let Some(delta) = solve_small(a, jtr) else {
                damping *= 10.0;
                if damping > 1e14 {
                    break 'outer;
                }
                continue;
            };
            let mut candidate = q;
            for i in 0..Q {
                candidate[i] += delta[i];
            }
            basis.project(&mut candidate);
            let (ct, cl, ccost) = profiled_cost(basis, points, &candidate);
            if ccost.is_finite() && ccost <= cost {
                let rel = |new: f64, old: f64| (new - old).abs() / (old.abs() + 1e-12);
                let mut max_change = rel(ct, tau).max(rel(cl, lambda));
                for i in 0..Q {
                    max_change = max_change.max(rel(candidate[i], q[i]));
                }
                q = candidate;
                tau = ct;
                lambda = cl;
                cost = ccost;
                damping = (damping / 3.0).max(1e-12);
                if max_change < rel_tol {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            damping *= 10.0;
            if damping > 1e14 {
                // No descent direction at any damping: stationary point.
                converged = true;
                break 'outer;
            }
        }
    }

    DipFit {
        q,
        tau,
        lambda,
        cost,
        iterations,
        converged,
    }
}

/// Evaluate the profiled cost for a candidate without iterating; used to
/// rank multi-start seeds cheaply.
pub(crate) fn seed_cost<B, const D: usize, const Q: usize>(
    basis: &B,
    points: &[Point<D>],
    q: &[f64; Q],
) -> f64
where
    B: DipBasis<D, Q>,
{
    let mut projected = *q;
    basis.project(&mut projected);
    profiled_cost(basis, points, &projected).2
}
