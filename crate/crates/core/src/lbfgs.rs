//! Bounded quasi-Newton ascent: limited-memory BFGS directions with iterates
//! projected onto a box, plus a backtracking Armijo line search. Used to
//! maximize acquisition functions and kernel hyperparameter posteriors.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::math::l2_norm;

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    /// Number of curvature pairs kept.
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the projected gradient norm falls below this.
    pub grad_tol: f64,
    /// Step halvings before the line search gives up.
    pub max_backtracks: u32,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { memory: 10, max_iters: 50, grad_tol: 1e-6, max_backtracks: 30 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Projected gradient norm reached the tolerance.
    pub converged: bool,
    /// The final value strictly improves on the start value.
    pub improved: bool,
}

fn clip(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

/// Gradient components that can still move the iterate inside the box.
fn projected_grad_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        let blocked = (x[i] >= upper[i] && g[i] < 0.0) || (x[i] <= lower[i] && g[i] > 0.0);
        if !blocked {
            s += g[i] * g[i];
        }
    }
    crate::math::sqrt(s)
}

/// Maximize `f` over the box `[lower, upper]`, starting from `x0` (clipped).
/// The objective writes its gradient into the provided slice and returns the
/// value. Evaluation count is not limited; callers bound work via
/// `max_iters`.
pub fn maximize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], cfg: &LbfgsConfig) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x0.len();
    debug_assert_eq!(lower.len(), dim);
    debug_assert_eq!(upper.len(), dim);

    let mut x = x0.to_vec();
    clip(&mut x, lower, upper);
    let mut g = alloc::vec![0.0; dim];
    // Internally minimize -f; flip value and gradient at the boundary.
    let mut eval = |x: &[f64], g: &mut [f64]| -> f64 {
        let v = f(x, g);
        for gi in g.iter_mut() {
            *gi = -*gi;
        }
        -v
    };

    let mut fx = eval(&x, &mut g);
    let start_value = fx;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..cfg.max_iters {
        if projected_grad_norm(&x, &g, lower, upper) <= cfg.grad_tol {
            converged = true;
            break;
        }
        iterations = iter + 1;

        // Two-loop recursion for the quasi-Newton direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(&mut q, -a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            axpy(&mut q, a - beta, s);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();

        let mut dd = dot(&g, &dir);
        if dd >= 0.0 {
            // Stale curvature; fall back to steepest descent.
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            dd = -dot(&g, &g);
            if dd == 0.0 {
                converged = true;
                break;
            }
        }

        let mut t = if history.is_empty() {
            (1.0 / l2_norm(&dir).max(1.0)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut x_new = alloc::vec![0.0; dim];
        let mut fx_new = fx;
        for _ in 0..cfg.max_backtracks {
            for i in 0..dim {
                x_new[i] = (x[i] + t * dir[i]).clamp(lower[i], upper[i]);
            }
            let step: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            if l2_norm(&step) == 0.0 {
                break;
            }
            fx_new = eval(&x_new, &mut q);
            // Armijo condition in its projected form.
            if fx_new <= fx + 1e-4 * dot(&g, &step) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }

        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = q.iter().zip(g.iter()).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * l2_norm(&s) * l2_norm(&y) {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new.clone();
        g.copy_from_slice(&q);
        fx = fx_new;
    }

    LbfgsOutcome {
        x,
        value: -fx,
        iterations,
        converged,
        improved: fx < start_value,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn axpy(out: &mut [f64], a: f64, v: &[f64]) {
    for (o, &x) in out.iter_mut().zip(v.iter()) {
        *o += a * x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_concave_quadratic_interior() {
        let target = [0.3, -0.7, 1.2];
        let out = maximize(
            |x, g| {
                let mut v = 0.0;
                for i in 0..3 {
                    let d = x[i] - target[i];
                    v -= d * d;
                    g[i] = -2.0 * d;
                }
                v
            },
            &[0.0, 0.0, 0.0],
            &[-2.0, -2.0, -2.0],
            &[2.0, 2.0, 2.0],
            &LbfgsConfig::default(),
        );
        for i in 0..3 {
            assert!((out.x[i] - target[i]).abs() < 1e-6);
        }
        assert!(out.converged);
        assert!(out.improved);
    }

    #[test]
    fn respects_box_when_peak_is_outside() {
        let out = maximize(
            |x, g| {
                g[0] = 1.0;
                x[0]
            },
            &[0.0],
            &[-1.0],
            &[1.0],
            &LbfgsConfig::default(),
        );
        assert!((out.x[0] - 1.0).abs() < 1e-12);
        assert!((out.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimizes_rosenbrock_via_negation() {
        let cfg = LbfgsConfig { max_iters: 400, ..Default::default() };
        let out = maximize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                let v = (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a);
                g[0] = -(-2.0 * (1.0 - a) - 400.0 * a * (b - a * a));
                g[1] = -(200.0 * (b - a * a));
                -v
            },
            &[-1.2, 1.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &cfg,
        );
        assert!((out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn flat_objective_converges_without_movement() {
        let out = maximize(
            |_x, g| {
                g.fill(0.0);
                0.0
            },
            &[0.5, 0.5],
            &[0.0, 0.0],
            &[1.0, 1.0],
            &LbfgsConfig::default(),
        );
        assert!(out.converged);
        assert!(!out.improved);
        assert_eq!(out.x, vec![0.5, 0.5]);
    }
}
