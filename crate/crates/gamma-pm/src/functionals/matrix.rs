//! Symmetric 2x2 matrices and the two readings of |M| for the Hessian
//! penalty.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

/// How |M| is measured.
///
/// `SpectralRadius` is max(|lambda1|, |lambda2|) and is consistent with the
/// one-dimensional integrand (u'')^2. `PaperMax` is max over unit xi of
/// <M xi, xi> clamped at 0 (xi = 0 admissible), which vanishes on
/// negative-definite matrices; it is provided for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HessianNormMode {
    SpectralRadius,
    PaperMax,
}

impl SymmetricMatrix2 {
    pub fn new(m11: f64, m12: f64, m22: f64) -> Self {
        SymmetricMatrix2 { m11, m12, m22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        SymmetricMatrix2::new(a, 0.0, b)
    }

    /// Eigenvalues (min, max).
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mid = 0.5 * (self.m11 + self.m22);
        let rad = (0.5 * (self.m11 - self.m22)).hypot(self.m12);
        (mid - rad, mid + rad)
    }

    pub fn norm(&self, mode: HessianNormMode) -> f64 {
        let (lo, hi) = self.eigenvalues();
        match mode {
            HessianNormMode::SpectralRadius => lo.abs().max(hi.abs()),
            HessianNormMode::PaperMax => hi.max(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_radius_of_mixed_signs() {
        let m = SymmetricMatrix2::diag(2.0, -3.0);
        assert!((m.norm(HessianNormMode::SpectralRadius) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_both_modes() {
        let m = SymmetricMatrix2::diag(1.0, 1.0);
        assert!((m.norm(HessianNormMode::SpectralRadius) - 1.0).abs() < 1e-15);
        assert!((m.norm(HessianNormMode::PaperMax) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_definite_split() {
        let m = SymmetricMatrix2::diag(-1.0, -1.0);
        assert_eq!(m.norm(HessianNormMode::PaperMax), 0.0);
        assert!((m.norm(HessianNormMode::SpectralRadius) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_embedding() {
        for &c in &[-4.0, -0.5, 0.0, 0.5, 4.0] {
            let m = SymmetricMatrix2::diag(c, 0.0);
            assert!((m.norm(HessianNormMode::SpectralRadius) - c.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn off_diagonal_eigenvalues() {
        let m = SymmetricMatrix2::new(0.0, 1.0, 0.0);
        let (lo, hi) = m.eigenvalues();
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }
}
