//! Lyapunov function of the planar observer and its analytic decay envelope.

use alloc::vec::Vec;

use crate::linalg::{LinalgError, SymMatrix};
use crate::math::{abs, exp, Vec2};

/// `W = ½ cᵀ (H ⊗ I₂)⁻¹ c`, evaluated with one SPD solve per planar axis.
pub fn lyapunov_value(c: &[Vec2], h: &SymMatrix) -> Result<f64, LinalgError> {
    let cx: Vec<f64> = c.iter().map(|v| v.x).collect();
    let cy: Vec<f64> = c.iter().map(|v| v.y).collect();
    let sx = h.solve_spd(&cx)?;
    let sy = h.solve_spd(&cy)?;
    let quad: f64 = cx.iter().zip(&sx).map(|(a, b)| a * b).sum::<f64>()
        + cy.iter().zip(&sy).map(|(a, b)| a * b).sum::<f64>();
    Ok(0.5 * quad)
}

/// Constants of the comparison bound `Ẇ ≤ −q W + σ₀ e^{−λt}`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Envelope {
    pub w0: f64,
    /// `q = 2 g4 λ_min(H)`.
    pub q: f64,
    /// `σ₀ = γ n (σ₀ₓ + σ₀ᵧ)`.
    pub sigma0: f64,
    pub lambda: f64,
}

/// Relative tolerance under which `q` and `λ` are treated as equal.
const RATE_TIE: f64 = 1e-12;

impl Envelope {
    pub fn new(w0: f64, g4: f64, lambda_min_h: f64, gamma: f64, n: usize, sigma_x: f64, sigma_y: f64, lambda: f64) -> Self {
        Self {
            w0,
            q: 2.0 * g4 * lambda_min_h,
            sigma0: gamma * n as f64 * (sigma_x + sigma_y),
            lambda,
        }
    }

    /// Upper bound on `W(t)`.
    pub fn bound(&self, t: f64) -> f64 {
        let head = exp(-self.q * t) * self.w0;
        if self.sigma0 == 0.0 {
            return head;
        }
        let gap = self.lambda - self.q;
        if abs(gap) <= RATE_TIE * self.lambda.max(self.q) {
            head + 2.0 * self.sigma0 / (self.lambda * core::f64::consts::E) * exp(-0.5 * self.lambda * t)
        } else {
            head + 2.0 * self.sigma0 / abs(gap) * exp(-self.q.min(self.lambda) * t)
        }
    }

    /// The exact comparison solution the bound above dominates.
    pub fn comparison_solution(&self, t: f64) -> f64 {
        let head = exp(-self.q * t) * self.w0;
        let gap = self.lambda - self.q;
        if abs(gap) <= RATE_TIE * self.lambda.max(self.q) {
            head + self.sigma0 * t * exp(-self.q * t)
        } else {
            head + self.sigma0 * (exp(-self.q * t) - exp(-self.lambda * t)) / gap
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_matches_quadratic_form_in_s() {
        // c = H s  ⇒  cᵀ H⁻¹ c = sᵀ H s
        let h = SymMatrix::from_rows([[2.0, -1.0], [-1.0, 1.0]]).unwrap();
        let s = [Vec2::new(0.3, -1.0), Vec2::new(2.0, 0.5)];
        let c = h.kron_i2_mul(&s);
        let direct: f64 = c.iter().zip(&s).map(|(a, b)| a.dot(*b)).sum::<f64>() * 0.5;
        assert!((lyapunov_value(&c, &h).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn bound_dominates_comparison_solution() {
        for (q, lambda) in [(0.05, 0.1), (0.3, 0.1), (0.1, 0.1)] {
            let env = Envelope { w0: 12.0, q, sigma0: 40.0, lambda };
            for i in 0..=400 {
                let t = i as f64 * 0.5;
                assert!(env.comparison_solution(t) <= env.bound(t) + 1e-12, "q={q} t={t}");
            }
        }
    }

    #[test]
    fn pure_decay_without_forcing() {
        let env = Envelope::new(3.0, 0.1, 0.5, 15.0, 4, 0.0, 0.0, 0.1);
        assert!((env.bound(10.0) - 3.0 * (-1.0_f64).exp()).abs() < 1e-15);
    }
}
