//! BFGS maximization with a strong-Wolfe line search.
//!
//! The optimizer works on the negated objective internally. Log-likelihoods
//! summed over a hundred or more transitions carry rounding noise near
//! `1e-13 * |f|`, which is larger than the objective change close to the
//! optimum, so the sufficient-decrease test allows a slack of that size.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_BRACKET: usize = 40;
const MAX_ZOOM: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimStatus {
    /// Gradient infinity-norm fell below the tolerance.
    GradTol,
    MaxIters,
    /// Some coordinate reached the parameter cap.
    Diverged,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub status: OptimStatus,
    /// Objective after each accepted step, starting at `x0`.
    #[allow(dead_code)]
    pub history: Vec<f64>,
}

pub(crate) struct Settings {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub param_cap: f64,
}

/// Noise floor for comparing objective values of magnitude `f`.
pub(crate) fn roundoff_slack(f: f64) -> f64 {
    1e-12 * (1.0 + f.abs())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Point {
    alpha: f64,
    phi: f64,
    dphi: f64,
    f: f64,
    grad: Vec<f64>,
}

/// Maximizes `eval`, which returns the objective and its gradient.
pub(crate) fn maximize<E>(
    mut eval: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
    x0: &[f64],
    settings: &Settings,
) -> Result<Outcome, E> {
    let d = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = eval(&x)?;
    let mut history = vec![f];
    let mut h = DMatrix::<f64>::identity(d, d);
    let mut fresh_h = true;
    let mut iterations = 0;

    let status = loop {
        if inf_norm(&g) <= settings.grad_tol {
            break OptimStatus::GradTol;
        }
        if x.iter().any(|v| v.abs() >= settings.param_cap) {
            break OptimStatus::Diverged;
        }
        if iterations >= settings.max_iters {
            break OptimStatus::MaxIters;
        }
        // ascent direction for f is descent for -f
        let gv = DVector::from_column_slice(&g);
        let mut p = &h * &gv;
        if p.dot(&gv) <= 0.0 {
            h = DMatrix::identity(d, d);
            fresh_h = true;
            p = gv.clone();
        }
        let step = match line_search(&mut eval, &x, f, &g, p.as_slice())? {
            Some(pt) => pt,
            None if !fresh_h => {
                h = DMatrix::identity(d, d);
                fresh_h = true;
                continue;
            }
            None => break OptimStatus::LineSearchFailed,
        };
        iterations += 1;
        let s = &p * step.alpha;
        let y = -(DVector::from_column_slice(&step.grad) - &gv);
        for (xi, si) in x.iter_mut().zip(s.iter()) {
            *xi += si;
        }
        f = step.f;
        g = step.grad;
        history.push(f);

        // update the inverse Hessian of -f
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            if fresh_h {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh_h = false;
        }
    };
    Ok(Outcome {
        x,
        f,
        grad: g,
        iterations,
        status,
        history,
    })
}

fn line_search<E>(
    eval: &mut impl FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
) -> Result<Option<Point>, E> {
    let phi0 = -f0;
    let dphi0 = -g0.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
    let slack = roundoff_slack(f0);
    let mut probe = |alpha: f64| -> Result<Point, E> {
        let xa: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect();
        let (f, grad) = eval(&xa)?;
        let dphi = -grad.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
        Ok(Point {
            alpha,
            phi: -f,
            dphi,
            f,
            grad,
        })
    };
    let armijo = |pt: &Point| pt.phi.is_finite() && pt.phi <= phi0 + C1 * pt.alpha * dphi0 + slack;
    let curvature = |pt: &Point| pt.dphi.abs() <= -C2 * dphi0;
    let accept = |pt: Point| if pt.phi <= phi0 + slack { Some(pt) } else { None };

    let mut prev = Point {
        alpha: 0.0,
        phi: phi0,
        dphi: dphi0,
        f: f0,
        grad: g0.to_vec(),
    };
    let mut alpha = 1.0;
    for i in 0..MAX_BRACKET {
        let cur = probe(alpha)?;
        if !armijo(&cur) || (i > 0 && cur.phi >= prev.phi) {
            return zoom(&mut probe, prev, cur, phi0, dphi0, slack).map(|o| o.and_then(accept));
        }
        if curvature(&cur) {
            return Ok(accept(cur));
        }
        if cur.dphi >= 0.0 {
            return zoom(&mut probe, cur, prev, phi0, dphi0, slack).map(|o| o.and_then(accept));
        }
        prev = cur;
        alpha *= 2.0;
    }
    Ok(None)
}

/// Nocedal-Wright zoom on the bracket between `lo` (satisfies sufficient
/// decrease) and `hi`.
fn zoom<E>(
    probe: &mut impl FnMut(f64) -> Result<Point, E>,
    mut lo: Point,
    mut hi: Point,
    phi0: f64,
    dphi0: f64,
    slack: f64,
) -> Result<Option<Point>, E> {
    for _ in 0..MAX_ZOOM {
        let alpha = interpolate(&lo, &hi);
        let cur = probe(alpha)?;
        if !(cur.phi.is_finite() && cur.phi <= phi0 + C1 * alpha * dphi0 + slack) || cur.phi >= lo.phi {
            hi = cur;
        } else {
            if cur.dphi.abs() <= -C2 * dphi0 {
                return Ok(Some(cur));
            }
            if cur.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        if (hi.alpha - lo.alpha).abs() <= 1e-16 * lo.alpha.abs().max(1.0) {
            break;
        }
    }
    // an interval this small means the objective is flat to rounding; take
    // the best point found if it made any progress
    Ok(if lo.alpha > 0.0 { Some(lo) } else { None })
}

/// Cubic interpolation minimizer inside the bracket, safeguarded toward
/// the middle.
fn interpolate(a: &Point, b: &Point) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha { (a.alpha, b.alpha) } else { (b.alpha, a.alpha) };
    let width = hi - lo;
    let mid = 0.5 * (lo + hi);
    if !(b.phi.is_finite() && b.dphi.is_finite()) {
        return mid;
    }
    let d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
    if t.is_finite() && t > lo + 0.1 * width && t < hi - 0.1 * width {
        t
    } else {
        mid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn settings() -> Settings {
        Settings {
            grad_tol: 1e-10,
            max_iters: 500,
            param_cap: 1e6,
        }
    }

    #[test]
    fn concave_quadratic() {
        // f = -(x-1)^2 - 10 (y+2)^2 - (x-1)(y+2)
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>), Infallible> {
            let (a, b) = (x[0] - 1.0, x[1] + 2.0);
            Ok((-a * a - 10.0 * b * b - a * b, vec![-2.0 * a - b, -20.0 * b - a]))
        };
        let out = maximize(f, &[0.0, 0.0], &settings()).unwrap();
        assert_eq!(out.status, OptimStatus::GradTol);
        assert!((out.x[0] - 1.0).abs() < 1e-9 && (out.x[1] + 2.0).abs() < 1e-9);
        assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn logistic_like_objective() {
        // sum of log-sigmoid terms plus a ridge; smooth and strictly concave
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>), Infallible> {
            let mut v = 0.0;
            let mut g = vec![0.0; 3];
            for (k, &c) in [1.0, -2.0, 0.5].iter().enumerate() {
                let z = c * x[k] + 0.3;
                v += -(1.0 + (-z).exp()).ln() - 0.1 * x[k] * x[k];
                g[k] = c / (1.0 + z.exp()) - 0.2 * x[k];
            }
            Ok((v, g))
        };
        let out = maximize(f, &[3.0, 3.0, -3.0], &settings()).unwrap();
        assert_eq!(out.status, OptimStatus::GradTol);
        assert!(inf_norm(&out.grad) <= 1e-10);
    }

    #[test]
    fn unbounded_objective_diverges() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>), Infallible> {
            Ok((-(-x[0]).exp(), vec![(-x[0]).exp()]))
        };
        let s = Settings {
            grad_tol: 1e-30,
            max_iters: 500,
            param_cap: 25.0,
        };
        let out = maximize(f, &[0.0], &s).unwrap();
        assert!(matches!(out.status, OptimStatus::Diverged | OptimStatus::GradTol | OptimStatus::LineSearchFailed));
        assert!(out.x[0] > 5.0);
    }

    #[test]
    fn zero_dimensional_problem_converges_immediately() {
        let f = |_: &[f64]| -> Result<(f64, Vec<f64>), Infallible> { Ok((-3.0, vec![])) };
        let out = maximize(f, &[], &settings()).unwrap();
        assert_eq!(out.status, OptimStatus::GradTol);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.f, -3.0);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>), Infallible> {
            let (a, b) = (x[0], x[1]);
            // Rosenbrock, negated
            let v = -((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2));
            let ga = 2.0 * (1.0 - a) + 400.0 * a * (b - a * a);
            let gb = -200.0 * (b - a * a);
            Ok((v, vec![ga, gb]))
        };
        let s = Settings {
            grad_tol: 1e-10,
            max_iters: 3,
            param_cap: 1e6,
        };
        let out = maximize(f, &[-1.2, 1.0], &s).unwrap();
        assert_eq!(out.status, OptimStatus::MaxIters);
        assert_eq!(out.iterations, 3);
    }
}
