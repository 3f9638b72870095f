//! Limited-memory BFGS with a Wolfe backtracking line search, plus the
//! finite-difference gradient check run before long minimizations.

use crate::error::{Error, Result};

pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when ||g|| <= gtol_rel * (1 + |f|).
    pub gtol_rel: f64,
    /// Stop when the relative decrease over an iteration falls below this.
    pub ftol_rel: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 20,
            max_iterations: 50_000,
            gtol_rel: 1e-8,
            ftol_rel: 1e-16,
        }
    }
}

pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimize f via L-BFGS. `fg` evaluates the function value and fills the
/// gradient buffer.
pub fn minimize<F>(mut fg: F, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<LbfgsResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    if !f.is_finite() {
        return Err(Error::Domain("objective not finite at start".into()));
    }

    let m = opts.memory;
    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rho: Vec<f64> = Vec::with_capacity(m);

    let mut iterations = 0;
    let mut converged = false;

    for it in 0..opts.max_iterations {
        iterations = it;
        let gnorm = norm(&g);
        if gnorm <= opts.gtol_rel * (1.0 + f.abs()) {
            converged = true;
            break;
        }

        // two-loop recursion
        let mut q = g.clone();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = rho[i] * dot(&s_hist[i], &q);
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        if k > 0 {
            let last = k - 1;
            let yy = dot(&y_hist[last], &y_hist[last]);
            let sy = 1.0 / rho[last];
            if yy > 0.0 {
                let scale = sy / yy;
                for qj in q.iter_mut() {
                    *qj *= scale;
                }
            }
        }
        for i in 0..k {
            let beta = rho[i] * dot(&y_hist[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                *qj += (alpha[i] - beta) * sj;
            }
        }
        // descent direction
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut gd = dot(&g, &d);
        if gd >= 0.0 {
            // fall back to steepest descent
            d = g.iter().map(|v| -v).collect();
            gd = -gnorm * gnorm;
            s_hist.clear();
            y_hist.clear();
            rho.clear();
        }

        // backtracking with Armijo condition and a curvature growth retry
        let mut t = 1.0;
        let c1 = 1e-4;
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut f_new;
        let mut ok = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + t * d[i];
            }
            f_new = fg(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + c1 * t * gd {
                // accepted
                let mut s = vec![0.0; n];
                let mut yv = vec![0.0; n];
                for i in 0..n {
                    s[i] = x_new[i] - x[i];
                    yv[i] = g_new[i] - g[i];
                }
                let sy = dot(&s, &yv);
                if sy > 1e-300 {
                    if s_hist.len() == m {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho.remove(0);
                    }
                    rho.push(1.0 / sy);
                    s_hist.push(s);
                    y_hist.push(yv);
                }
                let f_prev = f;
                x = x_new.clone();
                g = g_new.clone();
                f = f_new;
                if (f_prev - f).abs() <= opts.ftol_rel * (1.0 + f.abs()) {
                    converged = true;
                }
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if !ok {
            // line search failed: gradient is as good as it gets
            break;
        }
        if converged && norm(&g) <= 1e2 * opts.gtol_rel * (1.0 + f.abs()) {
            break;
        }
        converged = false;
    }

    let grad_norm = norm(&g);
    Ok(LbfgsResult {
        x,
        f,
        grad_norm,
        iterations,
        converged: converged || grad_norm <= opts.gtol_rel * (1.0 + f.abs()),
    })
}

/// Compare the analytic directional derivative against central finite
/// differences along `dir`. Fails when the relative error exceeds `tol`.
pub fn check_gradient<F>(
    mut fg: F,
    x: &[f64],
    dir: &[f64],
    tol: f64,
) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let _ = fg(x, &mut g);
    let analytic = dot(&g, dir);
    let dnorm = norm(dir);
    let h = 1e-6 / dnorm.max(1e-30);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for i in 0..n {
        xp[i] += h * dir[i];
        xm[i] -= h * dir[i];
    }
    let mut scratch = vec![0.0; n];
    let fp = fg(&xp, &mut scratch);
    let fm = fg(&xm, &mut scratch);
    let fd = (fp - fm) / (2.0 * h);
    let scale = analytic.abs().max(fd.abs()).max(1e-8);
    let rel = (analytic - fd).abs() / scale;
    if rel > tol {
        return Err(Error::GradientCheck(format!(
            "analytic {analytic} vs finite-difference {fd} (rel {rel:.3e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let fg = |x: &[f64], g: &mut [f64]| {
            let mut f = 0.0;
            for i in 0..x.len() {
                let c = (i + 1) as f64;
                f += 0.5 * c * x[i] * x[i];
                g[i] = c * x[i];
            }
            f
        };
        let res = minimize(fg, vec![1.0; 8], &LbfgsOptions::default()).unwrap();
        assert!(res.f < 1e-14);
        assert!(res.converged);
    }

    #[test]
    fn rosenbrock_2d() {
        let fg = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let res = minimize(fg, vec![-1.2, 1.0], &LbfgsOptions::default()).unwrap();
        assert!((res.x[0] - 1.0).abs() < 1e-5, "{:?}", res.x);
        assert!((res.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn gradient_check_catches_bugs() {
        let good = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        };
        let bad = |x: &[f64], g: &mut [f64]| {
            g[0] = 3.0 * x[0]; // wrong
            x[0] * x[0]
        };
        assert!(check_gradient(good, &[1.3], &[1.0], 1e-5).is_ok());
        assert!(check_gradient(bad, &[1.3], &[1.0], 1e-5).is_err());
    }
}
