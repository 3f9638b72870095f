//! Jump costs: even, subadditive, nondecreasing penalties of the jump
//! opening, with infinite slope at zero opening.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpKind {
    /// |t|^exponent with exponent in (0, 1].
    Power,
    /// |t|^(1/2), the limit cost at growth exponent 0.
    Sqrt,
    /// Piecewise-linear table on t >= 0, even extension, linear extrapolation.
    Custom(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpCost {
    pub kind: JumpKind,
    pub exponent: f64,
    /// Optional multiplicative prefactor; callers fold sigma_a in here
    /// when evaluating the limit functional.
    pub scale: f64,
}

impl JumpCost {
    pub fn sqrt() -> Self {
        JumpCost {
            kind: JumpKind::Sqrt,
            exponent: 0.5,
            scale: 1.0,
        }
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::Domain(format!(
                "jump exponent must lie in (0,1], got {exponent}"
            )));
        }
        Ok(JumpCost {
            kind: JumpKind::Power,
            exponent,
            scale: 1.0,
        })
    }

    pub fn custom(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Validation("custom table needs >= 2 samples".into()));
        }
        let theta = JumpCost {
            kind: JumpKind::Custom(table),
            exponent: f64::NAN,
            scale: 1.0,
        };
        let violations = theta.validate();
        if violations.is_empty() {
            Ok(theta)
        } else {
            Err(Error::Validation(violations.join("; ")))
        }
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// theta(|t|).
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        self.scale
            * match &self.kind {
                JumpKind::Sqrt => t.sqrt(),
                JumpKind::Power => {
                    if t == 0.0 {
                        0.0
                    } else {
                        t.powf(self.exponent)
                    }
                }
                JumpKind::Custom(table) => super::growth::eval_table_pub(table, t),
            }
    }

    /// Admissibility: theta(0)=0, nondecreasing, subadditive on a sample
    /// grid, and theta(t)/t increasing without bound as t -> 0+.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.eval(0.0).abs() > 1e-12 {
            v.push(format!("theta(0) = {} != 0", self.eval(0.0)));
        }
        let mut prev = 0.0f64;
        let mut t = 1e-9;
        while t < 1e6 {
            let val = self.eval(t);
            if val < prev - 1e-12 * (1.0 + prev.abs()) {
                v.push(format!("theta not nondecreasing near t = {t}"));
                break;
            }
            prev = val;
            t *= 4.0;
        }
        // subadditivity on a coarse grid
        'outer: for i in 1..=20 {
            for j in 1..=20 {
                let s = i as f64 * 0.25;
                let t = j as f64 * 0.25;
                if self.eval(s + t) > self.eval(s) + self.eval(t) + 1e-12 {
                    v.push(format!("theta not subadditive at ({s}, {t})"));
                    break 'outer;
                }
            }
        }
        // superlinearity at 0: theta(t)/t increasing as t decreases, up to a cap
        let mut ratios = Vec::new();
        let mut t = 1e-2;
        for _ in 0..12 {
            ratios.push(self.eval(t) / t);
            t *= 0.25;
        }
        let cap = 1e12;
        let increasing = ratios
            .windows(2)
            .all(|w| w[1] >= w[0] * (1.0 - 1e-9) || w[0] > cap);
        let unbounded = *ratios.last().unwrap() > ratios[0] * 1.5 || ratios[0] > cap;
        if !(increasing && unbounded) {
            v.push("theta(t)/t does not diverge as t -> 0+".into());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::growth::jump_exponent;
    use approx::assert_relative_eq;

    /// The shipped catalog: every cost the tests and pipelines reach for.
    fn catalog() -> Vec<JumpCost> {
        vec![
            JumpCost::sqrt(),
            JumpCost::power(jump_exponent(0.0).unwrap()).unwrap(),
            JumpCost::power(jump_exponent(0.5).unwrap()).unwrap(),
            JumpCost::power(jump_exponent(0.9).unwrap()).unwrap(),
            JumpCost::power(2.0 / 3.0).unwrap(),
        ]
    }

    #[test]
    fn catalog_is_admissible() {
        for theta in catalog() {
            assert!(theta.validate().is_empty(), "{:?}", theta);
        }
    }

    #[test]
    fn catalog_subadditive_on_fine_grid() {
        for theta in catalog() {
            for i in 0..100 {
                for j in 0..100 {
                    let s = i as f64 * 0.11;
                    let t = j as f64 * 0.11;
                    assert!(
                        theta.eval(s + t) <= theta.eval(s) + theta.eval(t) + 1e-12,
                        "violated at ({s},{t}) for {:?}",
                        theta.kind
                    );
                }
            }
        }
    }

    #[test]
    fn sqrt_values() {
        let theta = JumpCost::sqrt();
        assert_relative_eq!(theta.eval(4.0), 2.0);
        assert_relative_eq!(theta.eval(-2.0), 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn unit_exponent_fails_superlinearity() {
        let theta = JumpCost::power(1.0).unwrap();
        let v = theta.validate();
        assert!(v.iter().any(|m| m.contains("diverge")));
    }

    #[test]
    fn scaled_cost() {
        let theta = JumpCost::sqrt().scaled(3.0);
        assert_relative_eq!(theta.eval(1.0), 3.0);
    }
}
