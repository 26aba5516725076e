//! Dense regularized Newton minimization for the material-point problem.
//!
//! The tangent can turn indefinite along the damage-softening branch, so
//! directions come from `H + lambda D` with Marquardt scaling
//! `D = diag(|H_ii|)` and an adaptive damping parameter: `lambda` grows
//! when steps get rejected and decays on full steps. A backtracking line
//! search enforces energy decrease above the evaluation noise floor; once
//! the remaining decrease drops below that floor (the stiff regularized
//! dissipation reaches it long before the gradient tolerance), steps are
//! accepted on gradient contraction instead. Evaluations may reject a trial
//! point (infinite energy, chart breakdown), which counts as an energy
//! increase.

/// Objective with value-only and value+gradient+Hessian entry points.
/// `None` signals an inadmissible point.
pub(crate) trait DenseObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Option<f64>;
    fn value_grad_hess(&self, x: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)>;
    /// Additional stationarity residual checked at convergence (the
    /// Euler-Lagrange residual computed from closed forms). Defaults to 0.
    fn extra_residual(&self, _x: &[f64]) -> f64 {
        0.0
    }
    /// Magnitude of the largest terms inside the energy sum; the evaluation
    /// noise floor is `eps` times this (the stored energy cancels mu-sized
    /// terms).
    fn value_scale(&self) -> f64 {
        1.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOpts {
    pub max_iters: u32,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_halvings: u32,
}

impl NewtonOpts {
    /// Defaults scaled to the shear modulus: `tol_abs = 1e-9 mu`.
    pub fn for_scale(mu: f64) -> Self {
        NewtonOpts {
            max_iters: 50,
            tol_abs: 1e-9 * mu,
            tol_rel: 1e-10,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonReport {
    pub x: Vec<f64>,
    #[allow(dead_code)]
    pub value: f64,
    pub residual: f64,
    pub iters: u32,
}

#[derive(Debug, thiserror::Error)]
pub(crate) enum NewtonFailure {
    #[error("objective is inadmissible at the starting point")]
    BadStart,
    #[error("no energy decrease after {0} halvings")]
    LineSearchStalled(u32),
    #[error("no convergence within {0} iterations (residual {1:.3e})")]
    IterationsExhausted(u32, f64),
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// In-place LDL^T of a dense symmetric matrix (row-major, n x n).
/// Fails unless all pivots stay above `pivot_floor`.
fn ldlt(a: &mut [f64], n: usize, pivot_floor: f64) -> Result<(), ()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            let l = a[j * n + k];
            d -= l * l * a[k * n + k];
        }
        if !(d > pivot_floor) {
            return Err(());
        }
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k] * a[k * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

fn ldlt_solve(a: &[f64], n: usize, rhs: &mut [f64]) {
    for i in 0..n {
        for k in 0..i {
            rhs[i] -= a[i * n + k] * rhs[k];
        }
    }
    for i in 0..n {
        rhs[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            rhs[i] -= a[k * n + i] * rhs[k];
        }
    }
}

/// Descent direction from `H + lambda diag(|H_ii|)`; escalates `lambda`
/// until the factorization has positive pivots and the direction points
/// downhill. Returns the direction and the damping that produced it.
fn damped_direction(h: &[f64], g: &[f64], n: usize, lambda0: f64) -> (Vec<f64>, f64) {
    let diag_scale = (0..n)
        .map(|i| h[i * n + i].abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    let dscale: Vec<f64> = (0..n)
        .map(|i| h[i * n + i].abs().max(1e-10 * diag_scale))
        .collect();
    let mut lambda = lambda0;
    loop {
        let mut a = h.to_vec();
        for i in 0..n {
            a[i * n + i] += lambda * dscale[i];
        }
        if ldlt(&mut a, n, 1e-14 * diag_scale).is_ok() {
            let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
            ldlt_solve(&a, n, &mut dir);
            let slope: f64 = dir.iter().zip(g).map(|(d, gi)| d * gi).sum();
            if slope < 0.0 && dir.iter().all(|v| v.is_finite()) {
                return (dir, lambda);
            }
        }
        if lambda > 1e12 {
            // Scaled steepest descent as a last resort.
            return (g.iter().map(|v| -v / diag_scale).collect(), lambda);
        }
        lambda = if lambda == 0.0 { 1e-8 } else { lambda * 8.0 };
    }
}

pub(crate) fn minimize(
    obj: &dyn DenseObjective,
    x0: &[f64],
    opts: &NewtonOpts,
) -> Result<NewtonReport, NewtonFailure> {
    let n = obj.dim();
    let mut x = x0.to_vec();
    let (mut val, mut g, mut h) = obj.value_grad_hess(&x).ok_or(NewtonFailure::BadStart)?;
    let tol = opts.tol_abs + opts.tol_rel * norm(&g);
    let mut iters = 0;
    let mut lambda = 0.0_f64;
    loop {
        let residual = norm(&g).max(obj.extra_residual(&x));
        if std::env::var_os("PLASTODAM_NEWTON_TRACE").is_some() {
            eprintln!(
                "newton iter {iters}: val = {val:.12e} |g| = {:.3e} extra = {:.3e} lambda = {lambda:.1e}",
                norm(&g),
                obj.extra_residual(&x),
            );
        }
        if residual <= tol {
            return Ok(NewtonReport {
                x,
                value: val,
                residual,
                iters,
            });
        }
        if iters >= opts.max_iters {
            return Err(NewtonFailure::IterationsExhausted(iters, residual));
        }
        iters += 1;
        let (dir, lam) = damped_direction(&h, &g, n, lambda);
        lambda = lam;
        let noise = 32.0 * f64::EPSILON * (obj.value_scale() + val.abs());
        let pred: f64 = -0.5 * dir.iter().zip(&g).map(|(d, gi)| d * gi).sum::<f64>();
        let mut taken_alpha = None;
        if pred > 4.0 * noise {
            let mut alpha = 1.0;
            for _ in 0..=opts.max_halvings {
                let xt: Vec<f64> =
                    x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
                if let Some(vt) = obj.value(&xt) {
                    if vt < val - noise {
                        x = xt;
                        taken_alpha = Some(alpha);
                        break;
                    }
                }
                alpha *= 0.5;
            }
        } else {
            // Remaining decrease is below the evaluation noise: accept the
            // largest damped-Newton fraction that contracts the residual.
            let mut alpha = 1.0;
            for _ in 0..6 {
                let xt: Vec<f64> =
                    x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
                if let Some((vt, gt, ht)) = obj.value_grad_hess(&xt) {
                    if vt <= val + 4.0 * noise && norm(&gt) < 0.9 * norm(&g) {
                        x = xt;
                        val = vt;
                        g = gt;
                        h = ht;
                        taken_alpha = Some(alpha);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if let Some(alpha) = taken_alpha {
                lambda = update_lambda(lambda, alpha);
                continue;
            }
        }
        match taken_alpha {
            Some(alpha) => {
                let (v2, g2, h2) = obj
                    .value_grad_hess(&x)
                    .expect("accepted point must be admissible");
                val = v2;
                g = g2;
                h = h2;
                lambda = update_lambda(lambda, alpha);
            }
            None => {
                // Direction unusable at any step length: stiffen and retry
                // (counts as an iteration).
                if lambda > 1e10 {
                    return Err(NewtonFailure::LineSearchStalled(opts.max_halvings));
                }
                lambda = lambda.max(1e-6) * 30.0;
            }
        }
    }
}

fn update_lambda(lambda: f64, alpha: f64) -> f64 {
    if alpha >= 1.0 {
        let next = lambda * 0.25;
        if next < 1e-12 {
            0.0
        } else {
            next
        }
    } else if alpha <= 0.25 {
        lambda.max(1e-8) * 8.0
    } else {
        lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quartic;
    impl DenseObjective for Quartic {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> Option<f64> {
            // Rosenbrock with a rejection region mimicking det <= 0.
            if x[0] <= -1.5 {
                return None;
            }
            Some((1.0 - x[0]).powi(2) + 10.0 * (x[1] - x[0] * x[0]).powi(2))
        }
        fn value_grad_hess(&self, x: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
            let v = self.value(x)?;
            let g = vec![
                -2.0 * (1.0 - x[0]) - 40.0 * x[0] * (x[1] - x[0] * x[0]),
                20.0 * (x[1] - x[0] * x[0]),
            ];
            let h = vec![
                2.0 - 40.0 * (x[1] - 3.0 * x[0] * x[0]),
                -40.0 * x[0],
                -40.0 * x[0],
                20.0,
            ];
            Some((v, g, h))
        }
    }

    #[test]
    fn converges_on_rosenbrock() {
        let opts = NewtonOpts {
            max_iters: 200,
            tol_abs: 1e-10,
            tol_rel: 0.0,
            max_halvings: 30,
        };
        let rep = minimize(&Quartic, &[-1.2, 1.0], &opts).unwrap();
        assert!((rep.x[0] - 1.0).abs() < 1e-7);
        assert!((rep.x[1] - 1.0).abs() < 1e-7);
        assert!(rep.iters > 0);
    }

    #[test]
    fn ldlt_solves_spd_system() {
        let mut a = vec![4.0, 1.0, 1.0, 3.0];
        ldlt(&mut a, 2, 0.0).unwrap();
        let mut rhs = vec![1.0, 2.0];
        ldlt_solve(&a, 2, &mut rhs);
        // Solution of [[4,1],[1,3]] x = [1,2]
        assert!((rhs[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((rhs[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_matrix_gets_damped() {
        let h = vec![-1.0, 0.0, 0.0, -2.0];
        let g = vec![1.0, 1.0];
        let (dir, lambda) = damped_direction(&h, &g, 2, 0.0);
        let slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        assert!(slope < 0.0);
        assert!(lambda > 0.0);
    }
}
