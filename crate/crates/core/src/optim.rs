//! Shared numeric kernels: stable logistic primitives, a dense Cholesky
//! solver for small symmetric positive definite systems, and a damped
//! Newton fitter for binary logistic regression.

use crate::error::{Error, Result};

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow for large |x|.
pub fn log1pexp(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` in place for symmetric positive definite `A` stored
/// row-major (n x n). On return `b` holds the solution; `a` holds the
/// Cholesky factor. Fails if `A` is not positive definite.
pub fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::Numeric(
                        "matrix not positive definite; a ridge term (lambda > 0) guarantees solvability".into(),
                    ));
                }
                a[i * n + j] = sum.sqrt();
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= a[i * n + k] * b[k];
        }
        b[i] = sum / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in i + 1..n {
            sum -= a[k * n + i] * b[k];
        }
        b[i] = sum / a[i * n + i];
    }
    Ok(())
}

/// Mean negative log-likelihood of binary labels under `sigmoid(w . x)`,
/// plus an L2 ridge `0.5 * l2 * |w|^2`, with its exact gradient.
///
/// For label y in {0,1} and margin z = w . x the per-example loss is
/// `log(1 + e^z) - y z`, so the gradient is `(sigmoid(z) - y) x`.
pub fn logistic_loss_and_gradient(
    weights: &[f64],
    xs: &[Vec<f64>],
    ys: &[f64],
    l2: f64,
) -> (f64, Vec<f64>) {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty(), "logistic loss needs at least one example");
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for (x, &y) in xs.iter().zip(ys) {
        let z = dot(weights, x);
        loss += log1pexp(z) - y * z;
        let coeff = sigmoid(z) - y;
        for (g, &xi) in grad.iter_mut().zip(x) {
            *g += coeff * xi;
        }
    }
    loss /= n;
    for g in grad.iter_mut() {
        *g /= n;
    }
    for (g, &w) in grad.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    loss += 0.5 * l2 * dot(weights, weights);
    (loss, grad)
}

/// Convergence summary of a logistic fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFitReport {
    pub iterations: usize,
    pub final_loss: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Fits binary logistic regression by damped Newton iterations starting
/// from zero weights. Deterministic. Converged when the gradient norm
/// drops below `tol`; with `l2 > 0` the problem is strictly convex and
/// the optimum is unique.
pub fn fit_logistic(
    xs: &[Vec<f64>],
    ys: &[f64],
    l2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, LogisticFitReport)> {
    if xs.is_empty() {
        return Err(Error::Training("logistic fit on an empty example set".into()));
    }
    let dim = xs[0].len();
    let n = xs.len() as f64;
    let mut w = vec![0.0; dim];
    let (mut loss, mut grad) = logistic_loss_and_gradient(&w, xs, ys, l2);

    for iter in 0..max_iter {
        let grad_norm = dot(&grad, &grad).sqrt();
        if grad_norm < tol {
            return Ok((
                w,
                LogisticFitReport {
                    iterations: iter,
                    final_loss: loss,
                    grad_norm,
                    converged: true,
                },
            ));
        }

        // Hessian = (1/n) sum sig(z)(1-sig(z)) x x^T + l2 I, SPD for l2 > 0;
        // a tiny floor keeps it solvable when l2 = 0 on separable data.
        let mut h = vec![0.0; dim * dim];
        for x in xs {
            let z = dot(&w, x);
            let s = sigmoid(z);
            let c = (s * (1.0 - s)).max(1e-12) / n;
            for i in 0..dim {
                let cxi = c * x[i];
                for j in 0..=i {
                    h[i * dim + j] += cxi * x[j];
                }
            }
        }
        for i in 0..dim {
            for j in i + 1..dim {
                h[i * dim + j] = h[j * dim + i];
            }
            h[i * dim + i] += l2 + 1e-12;
        }
        let mut step = grad.clone();
        cholesky_solve(&mut h, &mut step, dim)?;

        // Backtracking line search on the Newton direction.
        let descent = dot(&grad, &step);
        let mut t = 1.0;
        let mut advanced = false;
        for _ in 0..40 {
            let trial: Vec<f64> = w.iter().zip(&step).map(|(wi, si)| wi - t * si).collect();
            let (trial_loss, trial_grad) = logistic_loss_and_gradient(&trial, xs, ys, l2);
            if trial_loss <= loss - 1e-4 * t * descent || trial_loss < loss {
                w = trial;
                loss = trial_loss;
                grad = trial_grad;
                advanced = true;
                break;
            }
            t *= 0.5;
        }
        if !advanced {
            // No further progress; report the point reached.
            let grad_norm = dot(&grad, &grad).sqrt();
            return Ok((
                w,
                LogisticFitReport {
                    iterations: iter + 1,
                    final_loss: loss,
                    grad_norm,
                    converged: grad_norm < tol,
                },
            ));
        }
    }

    let grad_norm = dot(&grad, &grad).sqrt();
    Ok((
        w,
        LogisticFitReport {
            iterations: max_iter,
            final_loss: loss,
            grad_norm,
            converged: grad_norm < tol,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        assert!(sigmoid(800.0) <= 1.0);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!((sigmoid(800.0) - 1.0).abs() < 1e-12);
        assert!(sigmoid(-800.0) < 1e-12);
    }

    #[test]
    fn log1pexp_matches_naive_in_safe_range() {
        for &x in &[-20.0f64, -3.0, 0.0, 1.5, 20.0] {
            let naive = (1.0f64 + x.exp()).ln();
            assert!((log1pexp(x) - naive).abs() < 1e-12);
        }
        assert_eq!(log1pexp(1000.0), 1000.0);
    }

    #[test]
    fn cholesky_solves_known_system() {
        // A = [[4,2],[2,3]], b = [10, 9] -> x = [1.5, 2].
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![10.0, 9.0];
        cholesky_solve(&mut a, &mut b, 2).unwrap();
        assert!((b[0] - 1.5).abs() < 1e-12);
        assert!((b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let mut a = vec![1.0, 2.0, 2.0, 1.0];
        let mut b = vec![1.0, 1.0];
        assert!(cholesky_solve(&mut a, &mut b, 2).is_err());
    }

    #[test]
    fn logistic_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let dim = 1 + rng.gen_range(0..5);
            let n = 1 + rng.gen_range(0..8);
            let xs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let ys: Vec<f64> = (0..n).map(|_| f64::from(rng.gen::<bool>())).collect();
            let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l2 = rng.gen_range(0.0..0.5);
            let (_, grad) = logistic_loss_and_gradient(&w, &xs, &ys, l2);
            let h = 1e-6;
            for d in 0..dim {
                let mut wp = w.clone();
                wp[d] += h;
                let mut wm = w.clone();
                wm[d] -= h;
                let (lp, _) = logistic_loss_and_gradient(&wp, &xs, &ys, l2);
                let (lm, _) = logistic_loss_and_gradient(&wm, &xs, &ys, l2);
                let fd = (lp - lm) / (2.0 * h);
                let denom = grad[d].abs().max(fd.abs()).max(1e-8);
                assert!(
                    ((grad[d] - fd) / denom).abs() < 1e-6,
                    "dim {d}: analytic {} vs fd {fd}",
                    grad[d]
                );
            }
        }
    }

    #[test]
    fn newton_fit_reaches_tiny_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![1.0, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                let p = sigmoid(0.5 + 1.5 * x[1] - 0.8 * x[2]);
                f64::from(rng.gen::<f64>() < p)
            })
            .collect();
        let (w, report) = fit_logistic(&xs, &ys, 1e-4, 1e-8, 100).unwrap();
        assert!(report.converged, "report: {report:?}");
        assert!(report.grad_norm < 1e-5);
        assert!(w[1] > 0.0 && w[2] < 0.0);
    }

    #[test]
    fn zero_weights_predict_half() {
        let w = vec![0.0; 3];
        let x = vec![1.0, 4.0, -7.0];
        assert_eq!(sigmoid(dot(&w, &x)), 0.5);
    }
}
