//! The gradient penalty families: logistic-log (Perona-Malik), power laws
//! with sublinear exponent, and tabulated user functions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Shape of the gradient penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GrowthKind {
    /// log(1 + p^2)
    PeronaMalik,
    /// |p|^a, optionally smoothed near the origin.
    Power,
    /// Piecewise-linear table of (p, value) samples on p >= 0, extended
    /// evenly and extrapolated linearly beyond the last sample.
    Custom(Vec<(f64, f64)>),
}

/// An even, nondecreasing penalty with sublinear growth exponent in [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFunction {
    pub kind: GrowthKind,
    /// Declared growth exponent.
    pub a: f64,
    /// Regularization scale for the nonsmooth power kinds. With
    /// smoothing e > 0 the power law evaluates to (p^2+e^2)^(a/2) - e^a,
    /// which vanishes at 0 and is C^2. With smoothing 0 and a = 0 the
    /// function degenerates to the support indicator 1_{p != 0}.
    pub smoothing: f64,
}

impl GrowthFunction {
    pub fn perona_malik() -> Self {
        GrowthFunction {
            kind: GrowthKind::PeronaMalik,
            a: 0.0,
            smoothing: 0.0,
        }
    }

    pub fn power(a: f64, smoothing: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(Error::Domain(format!(
                "growth exponent a must lie in [0,1), got {a}"
            )));
        }
        if smoothing < 0.0 {
            return Err(Error::Domain("smoothing must be >= 0".into()));
        }
        Ok(GrowthFunction {
            kind: GrowthKind::Power,
            a,
            smoothing,
        })
    }

    /// Sharp a = 0 power law: the indicator of {p != 0}. This is the
    /// representative for which the transition-layer identities are exact.
    pub fn counting() -> Self {
        GrowthFunction {
            kind: GrowthKind::Power,
            a: 0.0,
            smoothing: 0.0,
        }
    }

    pub fn custom(table: Vec<(f64, f64)>, declared_a: f64) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Validation("custom table needs >= 2 samples".into()));
        }
        let f = GrowthFunction {
            kind: GrowthKind::Custom(table),
            a: declared_a,
            smoothing: 0.0,
        };
        let violations = f.validate();
        if violations.is_empty() {
            Ok(f)
        } else {
            Err(Error::Validation(violations.join("; ")))
        }
    }

    /// phi(|p|).
    pub fn eval(&self, p: f64) -> f64 {
        let p = p.abs();
        match &self.kind {
            GrowthKind::PeronaMalik => (p * p).ln_1p(),
            GrowthKind::Power => {
                let e = self.smoothing;
                if e == 0.0 {
                    if p == 0.0 {
                        0.0
                    } else {
                        p.powf(self.a)
                    }
                } else {
                    (p * p + e * e).powf(self.a / 2.0) - e.powf(self.a)
                }
            }
            GrowthKind::Custom(table) => eval_table(table, p),
        }
    }

    /// phi'(p) (odd extension; 0 where the derivative does not exist).
    pub fn deriv(&self, p: f64) -> f64 {
        match &self.kind {
            GrowthKind::PeronaMalik => 2.0 * p / (1.0 + p * p),
            GrowthKind::Power => {
                let e = self.smoothing;
                let a = self.a;
                if e == 0.0 {
                    if a == 0.0 || p == 0.0 {
                        0.0
                    } else {
                        a * p.signum() * p.abs().powf(a - 1.0)
                    }
                } else {
                    a * p * (p * p + e * e).powf(a / 2.0 - 1.0)
                }
            }
            GrowthKind::Custom(table) => {
                let s = p.signum();
                let q = p.abs();
                s * table_slope(table, q)
            }
        }
    }

    /// phi''(p) for the smooth kinds; used by the profile Newton solver.
    pub fn second_deriv(&self, p: f64) -> f64 {
        match &self.kind {
            GrowthKind::PeronaMalik => {
                let q = 1.0 + p * p;
                2.0 * (1.0 - p * p) / (q * q)
            }
            GrowthKind::Power => {
                let e = self.smoothing;
                let a = self.a;
                if e == 0.0 {
                    if a == 0.0 || p == 0.0 {
                        0.0
                    } else {
                        a * (a - 1.0) * p.abs().powf(a - 2.0)
                    }
                } else {
                    let q = p * p + e * e;
                    a * q.powf(a / 2.0 - 1.0) + a * (a - 2.0) * p * p * q.powf(a / 2.0 - 2.0)
                }
            }
            GrowthKind::Custom(_) => 0.0,
        }
    }

    /// Admissibility checks: phi(0)=0, evenness by construction,
    /// monotone on sampled [0, inf), declared exponent in [0, 1).
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.eval(0.0).abs() > 1e-12 {
            v.push(format!("phi(0) = {} != 0", self.eval(0.0)));
        }
        if !(0.0..1.0).contains(&self.a) {
            v.push(format!("declared exponent {} outside [0,1)", self.a));
        }
        let mut prev = 0.0f64;
        let mut p = 1e-6;
        while p < 1e7 {
            let val = self.eval(p);
            if val < prev - 1e-12 * (1.0 + prev.abs()) {
                v.push(format!("phi not nondecreasing near p = {p}"));
                break;
            }
            if !val.is_finite() {
                v.push(format!("phi not finite at p = {p}"));
                break;
            }
            prev = val;
            p *= 2.0;
        }
        if let GrowthKind::Custom(table) = &self.kind {
            if table.windows(2).any(|w| w[1].0 <= w[0].0) {
                v.push("custom table abscissae not strictly increasing".into());
            }
        }
        v
    }
}

/// Shared piecewise-linear table evaluation (also used by jump costs).
pub(crate) fn eval_table_pub(table: &[(f64, f64)], p: f64) -> f64 {
    eval_table(table, p)
}

fn eval_table(table: &[(f64, f64)], p: f64) -> f64 {
    let n = table.len();
    if p <= table[0].0 {
        // extrapolate with the first segment slope through the first point
        let (p0, v0) = table[0];
        let (p1, v1) = table[1];
        let slope = (v1 - v0) / (p1 - p0);
        return v0 + slope * (p - p0);
    }
    for w in table.windows(2) {
        let (p0, v0) = w[0];
        let (p1, v1) = w[1];
        if p <= p1 {
            return v0 + (v1 - v0) * (p - p0) / (p1 - p0);
        }
    }
    let (p0, v0) = table[n - 2];
    let (p1, v1) = table[n - 1];
    v1 + (v1 - v0) / (p1 - p0) * (p - p1)
}

fn table_slope(table: &[(f64, f64)], p: f64) -> f64 {
    let n = table.len();
    for w in table.windows(2) {
        let (p0, v0) = w[0];
        let (p1, v1) = w[1];
        if p <= p1 {
            let _ = p0;
            return (v1 - v0) / (p1 - p0);
        }
    }
    let (p0, v0) = table[n - 2];
    let (p1, v1) = table[n - 1];
    (v1 - v0) / (p1 - p0)
}

/// Outcome of probing the growth exponent from the scaling ratio
/// log(phi(lambda p)/phi(p)) / log(lambda) along a geometric grid.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthExponentEstimate {
    /// Tail-extrapolated exponent. The raw ratio converges only like
    /// 1/log(p) for logarithmic families, so the tail is accelerated by
    /// quadratic extrapolation in 1/log(p).
    pub estimate: f64,
    /// Raw ratio at the largest sample.
    pub raw_tail: f64,
    /// (p, ratio) sequence for convergence inspection.
    pub sequence: Vec<(f64, f64)>,
    /// False when the estimate falls outside [0, 1).
    pub admissible: bool,
}

/// Estimate the growth exponent of `phi` by sampling the dilation ratio
/// on `p_grid` (increasing, geometric) and extrapolating the tail.
pub fn growth_exponent_estimate(
    phi: &GrowthFunction,
    lambda: f64,
    p_grid: &[f64],
) -> Result<GrowthExponentEstimate> {
    if lambda <= 0.0 || (lambda - 1.0).abs() < 1e-12 {
        return Err(Error::Domain("lambda must be positive and != 1".into()));
    }
    if p_grid.len() < 3 {
        return Err(Error::Domain("p grid needs >= 3 samples".into()));
    }
    if p_grid[p_grid.len() - 1] < 1e6 {
        return Err(Error::Domain("p grid tail must reach >= 1e6".into()));
    }
    let mut seq = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let num = phi.eval(lambda * p);
        let den = phi.eval(p);
        if den <= 0.0 || !num.is_finite() {
            return Err(Error::Divergence(format!(
                "phi ratio undefined at p = {p}"
            )));
        }
        seq.push((p, (num / den).ln() / lambda.ln()));
    }
    // quadratic extrapolation to x = 0 in x = 1/ln p, over a sliding window
    let extrap = |w: &[(f64, f64)]| -> f64 {
        let pts: Vec<(f64, f64)> = w.iter().map(|&(p, r)| (1.0 / p.ln(), r)).collect();
        let (x0, y0) = pts[0];
        let (x1, y1) = pts[1];
        let (x2, y2) = pts[2];
        // Lagrange value at x = 0
        y0 * (x1 * x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (x0 * x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (x0 * x1) / ((x2 - x0) * (x2 - x1))
    };
    let n = seq.len();
    let a_last = extrap(&seq[n - 3..n]);
    if n >= 4 {
        let a_prev = extrap(&seq[n - 4..n - 1]);
        if (a_last - a_prev).abs() > 1e-3 {
            return Err(Error::Divergence(format!(
                "exponent sequence not Cauchy at the tail: {a_prev} vs {a_last}"
            )));
        }
    }
    Ok(GrowthExponentEstimate {
        estimate: a_last,
        raw_tail: seq[n - 1].1,
        sequence: seq,
        admissible: a_last > -1e-3 && a_last < 1.0 - 1e-6,
    })
}

/// Default geometric probe grid 1e2..1e8.
pub fn default_p_grid() -> Vec<f64> {
    (2..=8).map(|k| 10f64.powi(k)).collect()
}

/// The jump-cost exponent (2+a)/(4-a) of the sharp-interface limit.
pub fn jump_exponent(a: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::Domain(format!("a must lie in [0,1), got {a}")));
    }
    Ok((2.0 + a) / (4.0 - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pm_values() {
        let phi = GrowthFunction::perona_malik();
        assert_eq!(phi.eval(0.0), 0.0);
        assert_relative_eq!(phi.eval(1.0), 2f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(phi.eval(-1.0), phi.eval(1.0));
    }

    #[test]
    fn power_half_unsmoothed() {
        let phi = GrowthFunction::power(0.5, 0.0).unwrap();
        assert_relative_eq!(phi.eval(4.0), 2.0, max_relative = 1e-12);
        assert_eq!(phi.eval(0.0), 0.0);
    }

    #[test]
    fn power_homogeneity() {
        let phi = GrowthFunction::power(0.7, 0.0).unwrap();
        for &p in &[0.3, 1.7, 42.0] {
            for &lam in &[2.0, 5.0, 11.0] {
                assert_relative_eq!(
                    phi.eval(lam * p),
                    lam.powf(0.7) * phi.eval(p),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn counting_is_support_indicator() {
        let phi = GrowthFunction::counting();
        assert_eq!(phi.eval(0.0), 0.0);
        assert_eq!(phi.eval(1e-300), 1.0);
        assert_eq!(phi.eval(-3.0), 1.0);
    }

    #[test]
    fn exponent_estimate_pm_is_zero() {
        let phi = GrowthFunction::perona_malik();
        let est = growth_exponent_estimate(&phi, 2.0, &default_p_grid()).unwrap();
        assert!(est.estimate.abs() <= 1e-3, "estimate = {}", est.estimate);
        assert!(est.admissible);
        // the raw tail is far from 0: acceleration is doing real work
        assert!(est.raw_tail > 1e-2);
    }

    #[test]
    fn exponent_estimate_power_exact() {
        let phi = GrowthFunction::power(0.5, 0.0).unwrap();
        let est = growth_exponent_estimate(&phi, 4.0, &default_p_grid()).unwrap();
        assert_relative_eq!(est.estimate, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn exponent_estimate_linear_flagged() {
        let table: Vec<(f64, f64)> = (0..40).map(|k| (k as f64 * 1e7, k as f64 * 1e7)).collect();
        let phi = GrowthFunction {
            kind: GrowthKind::Custom(table),
            a: 0.0,
            smoothing: 0.0,
        };
        let est = growth_exponent_estimate(&phi, 2.0, &default_p_grid()).unwrap();
        assert_relative_eq!(est.estimate, 1.0, epsilon = 1e-6);
        assert!(!est.admissible);
    }

    #[test]
    fn jump_exponent_values() {
        assert_relative_eq!(jump_exponent(0.0).unwrap(), 0.5);
        assert_relative_eq!(jump_exponent(0.5).unwrap(), 5.0 / 7.0, max_relative = 1e-14);
        assert!(jump_exponent(1.0).is_err());
        assert!(jump_exponent(-0.1).is_err());
    }

    #[test]
    fn jump_exponent_monotone_into_half_one() {
        let mut prev = -1.0;
        for k in 0..1000 {
            let a = k as f64 / 1000.0;
            let e = jump_exponent(a).unwrap();
            assert!(e > prev);
            assert!((0.5..1.0).contains(&e));
            prev = e;
        }
    }

    #[test]
    fn pm_deriv_matches_fd() {
        let phi = GrowthFunction::perona_malik();
        for &p in &[-2.0, -0.3, 0.7, 5.0] {
            let h = 1e-6;
            let fd = (phi.eval(p + h) - phi.eval(p - h)) / (2.0 * h);
            assert_relative_eq!(phi.deriv(p), fd, epsilon = 1e-8);
        }
    }
}
