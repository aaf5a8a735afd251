//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the largest absolute gradient component falls below this.
    pub gtol: f64,
    /// Stop when the relative objective decrease falls below this.
    pub ftol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iter: 2000,
            gtol: 1e-6,
            ftol: 64.0 * f64::EPSILON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::GradientTolerance | StopReason::FunctionTolerance)
    }

    pub fn name(self) -> &'static str {
        match self {
            StopReason::GradientTolerance => "gradient_tolerance",
            StopReason::FunctionTolerance => "function_tolerance",
            StopReason::MaxIterations => "max_iterations",
            StopReason::LineSearchFailed => "line_search_failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Objective at the start and after every accepted step.
    pub history: Vec<f64>,
    pub grad_inf_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

struct Point {
    step: f64,
    value: f64,
    grad: Vec<f64>,
    slope: f64,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 50;

/// Minimizer of the cubic through (a, fa, da) and (b, fb, db), if real.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn line_search<F>(f: &mut F, x: &[f64], f0: f64, d: &[f64], slope0: f64, init_step: f64) -> Option<Point>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut eval = |step: f64| {
        let (value, grad) = f(&axpy(x, step, d));
        let slope = dot(&grad, d);
        Point {
            step,
            value,
            grad,
            slope,
        }
    };
    let armijo = |p: &Point| p.value <= f0 + C1 * p.step * slope0;
    let curvature = |p: &Point| p.slope.abs() <= -C2 * slope0;

    let mut prev = Point {
        step: 0.0,
        value: f0,
        grad: Vec::new(),
        slope: slope0,
    };
    let mut step = init_step;
    let mut evals = 0;
    let (mut lo, mut hi) = loop {
        let p = eval(step);
        evals += 1;
        if !p.value.is_finite() {
            // overshoot into overflow; back off
            step *= 0.5;
            if evals >= MAX_LINE_EVALS {
                return None;
            }
            continue;
        }
        if !armijo(&p) || (evals > 1 && p.value >= prev.value) {
            break (prev, p);
        }
        if curvature(&p) {
            return Some(p);
        }
        if p.slope >= 0.0 {
            break (p, prev);
        }
        step = p.step * 2.0;
        prev = p;
        if evals >= MAX_LINE_EVALS {
            return None;
        }
    };

    while evals < MAX_LINE_EVALS {
        let (a, b) = (lo.step.min(hi.step), lo.step.max(hi.step));
        let width = b - a;
        if width < 1e-16 * b.max(1.0) {
            break;
        }
        let mid = 0.5 * (a + b);
        let trial = cubic_min(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope)
            .filter(|t| *t > a + 0.1 * width && *t < b - 0.1 * width)
            .unwrap_or(mid);
        let p = eval(trial);
        evals += 1;
        if !p.value.is_finite() || !armijo(&p) || p.value >= lo.value {
            hi = p;
        } else {
            if curvature(&p) {
                return Some(p);
            }
            if p.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    // accept the best sufficient-decrease point found, if any
    (lo.step > 0.0 && lo.value < f0).then_some(lo)
}

pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut value, mut grad) = f(&x);
    let mut history = vec![value];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    let stop = loop {
        if inf_norm(&grad) <= opts.gtol {
            break StopReason::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break StopReason::MaxIterations;
        }

        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 || !slope.is_finite() {
            pairs.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
        }
        let init_step = if pairs.is_empty() {
            (1.0 / dot(&grad, &grad).sqrt()).min(1.0)
        } else {
            1.0
        };

        let Some(next) = line_search(&mut f, &x, value, &dir, slope, init_step) else {
            break StopReason::LineSearchFailed;
        };
        iterations += 1;
        let x_new = axpy(&x, next.step, &dir);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&y, &y) {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let decrease = value - next.value;
        x = x_new;
        value = next.value;
        grad = next.grad;
        history.push(value);
        if decrease <= opts.ftol * value.abs().max(history[history.len() - 2].abs()).max(1.0) {
            break if inf_norm(&grad) <= opts.gtol {
                StopReason::GradientTolerance
            } else {
                StopReason::FunctionTolerance
            };
        }
    };

    LbfgsResult {
        grad_inf_norm: inf_norm(&grad),
        x,
        value,
        iterations,
        stop,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn solves_rosenbrock() {
        let r = minimize(rosenbrock, vec![-1.2, 1.0], &LbfgsOptions::default());
        assert!(r.stop.converged(), "{:?}", r.stop);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_converges_quickly() {
        let f = |x: &[f64]| {
            let v = x.iter().enumerate().map(|(i, xi)| (i as f64 + 1.0) * (xi - 2.0).powi(2)).sum();
            let g = x.iter().enumerate().map(|(i, xi)| 2.0 * (i as f64 + 1.0) * (xi - 2.0)).collect();
            (v, g)
        };
        let r = minimize(f, vec![0.0; 5], &LbfgsOptions::default());
        assert!(r.x.iter().all(|v| (v - 2.0).abs() < 1e-6));
        assert!(r.iterations < 30);
    }

    #[test]
    fn respects_max_iter() {
        let opts = LbfgsOptions {
            max_iter: 3,
            ..Default::default()
        };
        let r = minimize(rosenbrock, vec![-1.2, 1.0], &opts);
        assert_eq!(r.stop, StopReason::MaxIterations);
        assert_eq!(r.iterations, 3);
    }
}
