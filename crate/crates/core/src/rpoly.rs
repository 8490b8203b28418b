//! Polynomials in the symbolic flag scale `R`, compared as `R → ∞`.

use std::cmp::Ordering;

/// Coefficient of `R^l` at index `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct RPoly {
    pub coeffs: Vec<f64>,
    /// Flush threshold applied at construction.
    pub zero_tol: f64,
    /// Relative comparison tolerance, see [`cmp_coeffs`].
    pub eq_tol: f64,
}

impl RPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self::with_tol(coeffs, 0.0, 0.0)
    }

    pub fn with_tol(mut coeffs: Vec<f64>, zero_tol: f64, eq_tol: f64) -> Self {
        for c in coeffs.iter_mut() {
            if c.abs() <= zero_tol {
                *c = 0.0;
            }
        }
        RPoly {
            coeffs,
            zero_tol,
            eq_tol,
        }
    }

    /// `nums[l] / den`, numerators flushed against `zero_tol` first; `err` is
    /// the absolute error level of the numerators and of `den`.
    pub fn ratio(nums: &[f64], den: f64, zero_tol: f64, err: f64) -> Self {
        let coeffs = nums
            .iter()
            .map(|&x| if x.abs() <= zero_tol { 0.0 } else { x / den })
            .collect();
        RPoly {
            coeffs,
            zero_tol,
            eq_tol: err / den.abs(),
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

pub fn sign_of(coeffs: &[f64]) -> i8 {
    for &c in coeffs.iter().rev() {
        if c > 0.0 {
            return 1;
        }
        if c < 0.0 {
            return -1;
        }
    }
    0
}

pub fn rpoly_sign(p: &RPoly) -> i8 {
    sign_of(&p.coeffs)
}

/// Lexicographic comparison from the top degree down. Coefficients `x`, `y`
/// compare equal when `|x − y| ≤ tol · (1 + max(|x|, |y|))`: a ratio `num / D`
/// computed from inputs with absolute error `e` is off by about `e (1 + |num / D|) / |D|`.
pub fn cmp_coeffs(a: &[f64], b: &[f64], tol: f64) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        if (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())) {
            continue;
        }
        return if x < y {
            Ordering::Less
        } else {
            Ordering::Greater
        };
    }
    Ordering::Equal
}

pub fn rpoly_cmp(p: &RPoly, q: &RPoly) -> Ordering {
    assert_eq!(p.coeffs.len(), q.coeffs.len(), "rpoly length mismatch");
    cmp_coeffs(&p.coeffs, &q.coeffs, p.eq_tol.max(q.eq_tol))
}

pub fn rpoly_less(p: &RPoly, q: &RPoly) -> bool {
    rpoly_cmp(p, q) == Ordering::Less
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signs() {
        assert_eq!(rpoly_sign(&RPoly::new(vec![5.0, -1.0])), -1);
        assert_eq!(rpoly_sign(&RPoly::new(vec![0.0, 0.0])), 0);
        assert_eq!(rpoly_sign(&RPoly::new(vec![-3.0, 0.0, 2.0])), 1);
        assert_eq!(rpoly_sign(&RPoly::with_tol(vec![1.0, 1e-12], 1e-9, 0.0)), 1);
    }

    #[test]
    fn ordering() {
        let a = RPoly::new(vec![1.0, 2.0]);
        let b = RPoly::new(vec![3.0, 2.0]);
        assert!(rpoly_less(&a, &b));
        assert!(!rpoly_less(
            &RPoly::new(vec![0.0, 1.0]),
            &RPoly::new(vec![9.0, 0.0])
        ));
        assert!(!rpoly_less(&a, &a));
        assert_eq!(rpoly_cmp(&a, &a), Ordering::Equal);
    }

    #[test]
    fn equality_scales_with_magnitude() {
        let a = [0.0, -101856.04276821659, 1.0];
        let b = [1.0, -101856.04276470403, 1.0];
        assert_eq!(cmp_coeffs(&a, &b, 3.4e-6), Ordering::Less);
        assert_eq!(cmp_coeffs(&a, &b, 0.0), Ordering::Less);
        assert_eq!(cmp_coeffs(&[0.0, 1.0], &[0.0, 1.0 + 1e-7], 1e-7), Ordering::Equal);
    }

    #[test]
    fn ratio_flushes_numerators() {
        let p = RPoly::ratio(&[1e-12, 3.0], -3.0, 1e-9, 1e-11);
        assert_eq!(p.coeffs, vec![0.0, -1.0]);
        assert!((p.eq_tol - 1e-11 / 3.0).abs() < 1e-25);
    }
}
