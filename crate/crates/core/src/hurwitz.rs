//! Routh–Hurwitz test for real polynomials.

use alloc::vec;
use alloc::vec::Vec;

/// Returns true when every root of `coeffs[0]·sⁿ + coeffs[1]·sⁿ⁻¹ + … + coeffs[n]`
/// has strictly negative real part.
///
/// Uses the Routh array; any zero or sign change in the first column (including
/// the degenerate zero-row cases) counts as not Hurwitz.
pub fn is_hurwitz(coeffs: &[f64]) -> bool {
    let Some(first) = coeffs.iter().position(|c| *c != 0.0) else {
        return false;
    };
    let coeffs = &coeffs[first..];
    if coeffs.iter().any(|c| !c.is_finite()) {
        return false;
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return true;
    }
    let sign = coeffs[0].signum();
    // Necessary condition: all coefficients share the leading sign.
    if coeffs.iter().any(|c| c * sign <= 0.0) {
        return false;
    }
    let width = degree / 2 + 1;
    let mut prev: Vec<f64> = coeffs.iter().step_by(2).copied().collect();
    let mut cur: Vec<f64> = coeffs.iter().skip(1).step_by(2).copied().collect();
    prev.resize(width, 0.0);
    cur.resize(width, 0.0);
    for _ in 0..degree {
        if cur[0] * sign <= 0.0 {
            return false;
        }
        let mut next = vec![0.0; width];
        for k in 0..width - 1 {
            next[k] = (cur[0] * prev[k + 1] - prev[0] * cur[k + 1]) / cur[0];
        }
        prev = cur;
        cur = next;
    }
    true
}

/// Monic quartic `s⁴ + k4 s³ + k3 s² + k2 s + k1` used by the outer linear law.
pub fn quartic_is_hurwitz(k1: f64, k2: f64, k3: f64, k4: f64) -> bool {
    is_hurwitz(&[1.0, k4, k3, k2, k1])
}
