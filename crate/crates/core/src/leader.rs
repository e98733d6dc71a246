//! Leader reference trajectories with exact derivatives up to fourth order.

use alloc::vec::Vec;

use crate::math::{abs, cos, sin, sqrt, Vec2};

/// Number of points used for the sampled supremum of custom trajectories.
pub const SIGMA_SAMPLES: usize = 10_000;

/// Highest polynomial degree accepted for custom trajectories.
pub const MAX_POLY_DEGREE: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub enum LeaderError {
    NonPositiveRadius(f64),
    ZeroRate,
    NonFinite,
    DegreeTooHigh { axis: char, degree: usize },
}

impl core::fmt::Display for LeaderError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LeaderError::NonPositiveRadius(r) => write!(f, "circle radius must be positive, got {r}"),
            LeaderError::ZeroRate => f.write_str("circle angular rate must be nonzero"),
            LeaderError::NonFinite => f.write_str("leader parameters must be finite"),
            LeaderError::DegreeTooHigh { axis, degree } => write!(
                f,
                "{axis} polynomial has degree {degree}, at most {MAX_POLY_DEGREE} is supported"
            ),
        }
    }
}

impl core::error::Error for LeaderError {}

/// Leader position and its first four time derivatives: `derivs[k]` is the
/// k-th derivative of `[x₀, y₀, z₀]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LeaderSample {
    pub derivs: [[f64; 3]; 5],
}

impl LeaderSample {
    pub fn position(&self) -> [f64; 3] {
        self.derivs[0]
    }

    /// Planar component of the k-th derivative.
    #[inline]
    pub fn xy(&self, k: usize) -> Vec2 {
        Vec2::new(self.derivs[k][0], self.derivs[k][1])
    }

    #[inline]
    pub fn z(&self, k: usize) -> f64 {
        self.derivs[k][2]
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum LeaderTrajectory {
    /// `[R sin ωt, −R cos ωt, h]`
    Circle { radius: f64, omega: f64, altitude: f64 },
    Fixed { point: [f64; 3] },
    /// Per-axis polynomials in t, lowest order first; constant altitude.
    Poly {
        coeffs_x: Vec<f64>,
        coeffs_y: Vec<f64>,
        z: f64,
    },
}

/// Upper bounds on the leader forcing seen by the planar observer.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SigmaBounds {
    pub x: f64,
    pub y: f64,
    /// True when the bound is a dense-sampling estimate over a finite horizon
    /// rather than a closed form.
    pub sampled: bool,
}

impl LeaderTrajectory {
    pub fn circle(radius: f64, omega: f64, altitude: f64) -> Result<Self, LeaderError> {
        let t = LeaderTrajectory::Circle { radius, omega, altitude };
        t.validate()?;
        Ok(t)
    }

    pub fn fixed(point: [f64; 3]) -> Result<Self, LeaderError> {
        let t = LeaderTrajectory::Fixed { point };
        t.validate()?;
        Ok(t)
    }

    pub fn poly(coeffs_x: Vec<f64>, coeffs_y: Vec<f64>, z: f64) -> Result<Self, LeaderError> {
        let t = LeaderTrajectory::Poly { coeffs_x, coeffs_y, z };
        t.validate()?;
        Ok(t)
    }

    /// Re-checks the constructor invariants; needed after deserialization.
    pub fn validate(&self) -> Result<(), LeaderError> {
        match self {
            LeaderTrajectory::Circle { radius, omega, altitude } => {
                if !(radius.is_finite() && omega.is_finite() && altitude.is_finite()) {
                    return Err(LeaderError::NonFinite);
                }
                if *radius <= 0.0 {
                    return Err(LeaderError::NonPositiveRadius(*radius));
                }
                if *omega == 0.0 {
                    return Err(LeaderError::ZeroRate);
                }
            }
            LeaderTrajectory::Fixed { point } => {
                if point.iter().any(|v| !v.is_finite()) {
                    return Err(LeaderError::NonFinite);
                }
            }
            LeaderTrajectory::Poly { coeffs_x, coeffs_y, z } => {
                for (axis, c) in [('x', coeffs_x), ('y', coeffs_y)] {
                    if c.len() > MAX_POLY_DEGREE + 1 {
                        return Err(LeaderError::DegreeTooHigh {
                            axis,
                            degree: c.len() - 1,
                        });
                    }
                    if c.iter().any(|v| !v.is_finite()) {
                        return Err(LeaderError::NonFinite);
                    }
                }
                if !z.is_finite() {
                    return Err(LeaderError::NonFinite);
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, t: f64) -> LeaderSample {
        let mut out = LeaderSample::default();
        match self {
            LeaderTrajectory::Circle { radius, omega, altitude } => {
                let (s, c) = (sin(omega * t), cos(omega * t));
                // Each differentiation multiplies by ω and advances the phase by π/2.
                let mut amp = *radius;
                let x_cycle = [s, c, -s, -c];
                let y_cycle = [-c, s, c, -s];
                for k in 0..5 {
                    out.derivs[k][0] = amp * x_cycle[k % 4];
                    out.derivs[k][1] = amp * y_cycle[k % 4];
                    amp *= omega;
                }
                out.derivs[0][2] = *altitude;
            }
            LeaderTrajectory::Fixed { point } => out.derivs[0] = *point,
            LeaderTrajectory::Poly { coeffs_x, coeffs_y, z } => {
                for k in 0..5 {
                    out.derivs[k][0] = poly_derivative(coeffs_x, k, t);
                    out.derivs[k][1] = poly_derivative(coeffs_y, k, t);
                }
                out.derivs[0][2] = *z;
            }
        }
        out
    }

    /// `sup |p⁽⁴⁾ + g3 p⁽³⁾ + g2 p̈ + g1 ṗ|` per planar axis.
    ///
    /// Closed form for circles and fixed points; polynomials are sampled at
    /// [`SIGMA_SAMPLES`] points over `[0, horizon]`.
    pub fn sigma_bounds(&self, g1: f64, g2: f64, g3: f64, horizon: f64) -> SigmaBounds {
        match self {
            LeaderTrajectory::Fixed { .. } => SigmaBounds { x: 0.0, y: 0.0, sampled: false },
            LeaderTrajectory::Circle { radius, omega, .. } => {
                let w = *omega;
                // Forcing is R·[(ω⁴ − g2ω²) sin + (g1ω − g3ω³) cos] up to phase.
                let a = w * w * w * w - g2 * w * w;
                let b = g1 * w - g3 * w * w * w;
                let amp = abs(*radius) * sqrt(a * a + b * b);
                SigmaBounds { x: amp, y: amp, sampled: false }
            }
            LeaderTrajectory::Poly { .. } => {
                let mut sup = [0.0_f64; 2];
                for i in 0..=SIGMA_SAMPLES {
                    let t = horizon * i as f64 / SIGMA_SAMPLES as f64;
                    let d = self.evaluate(t).derivs;
                    for (axis, s) in sup.iter_mut().enumerate() {
                        let f = d[4][axis] + g3 * d[3][axis] + g2 * d[2][axis] + g1 * d[1][axis];
                        *s = s.max(abs(f));
                    }
                }
                SigmaBounds { x: sup[0], y: sup[1], sampled: true }
            }
        }
    }
}

/// k-th derivative of Σ cᵢ tⁱ evaluated by Horner's rule.
fn poly_derivative(coeffs: &[f64], k: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for i in (k..coeffs.len()).rev() {
        let falling: f64 = ((i - k + 1)..=i).map(|m| m as f64).product();
        acc = acc * t + coeffs[i] * falling;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn circle_at_zero() {
        let l = LeaderTrajectory::circle(100.0, 0.1, 100.0).unwrap().evaluate(0.0);
        assert_eq!(l.derivs[0], [0.0, -100.0, 100.0]);
        assert!((l.derivs[1][0] - 10.0).abs() < 1e-12 && l.derivs[1][1].abs() < 1e-12);
        assert!(l.derivs[2][0].abs() < 1e-12 && (l.derivs[2][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_rejects_bad_parameters() {
        assert_eq!(
            LeaderTrajectory::circle(0.0, 0.1, 1.0),
            Err(LeaderError::NonPositiveRadius(0.0))
        );
        assert_eq!(LeaderTrajectory::circle(1.0, 0.0, 1.0), Err(LeaderError::ZeroRate));
    }

    #[test]
    fn fixed_is_time_invariant() {
        let l = LeaderTrajectory::fixed([0.0, 0.0, 50.0]).unwrap();
        assert_eq!(l.evaluate(0.0), l.evaluate(1e6));
        assert_eq!(l.evaluate(3.0).derivs[0], [0.0, 0.0, 50.0]);
        assert!(l.evaluate(3.0).derivs[1..].iter().flatten().all(|v| *v == 0.0));
        assert_eq!(l.sigma_bounds(0.125, 0.75, 0.85, 200.0), SigmaBounds { x: 0.0, y: 0.0, sampled: false });
    }

    #[test]
    fn poly_derivatives_exact() {
        // x = 1 + 2t + 3t² + t⁴
        let l = LeaderTrajectory::poly(vec![1.0, 2.0, 3.0, 0.0, 1.0], vec![], 5.0).unwrap();
        let d = l.evaluate(2.0).derivs;
        assert_eq!(d[0][0], 1.0 + 4.0 + 12.0 + 16.0);
        assert_eq!(d[1][0], 2.0 + 12.0 + 32.0);
        assert_eq!(d[2][0], 6.0 + 48.0);
        assert_eq!(d[3][0], 48.0);
        assert_eq!(d[4][0], 24.0);
        assert_eq!(d[0][2], 5.0);
    }

    #[test]
    fn poly_degree_limit() {
        let err = LeaderTrajectory::poly(vec![0.0; 8], vec![], 0.0).unwrap_err();
        assert_eq!(err, LeaderError::DegreeTooHigh { axis: 'x', degree: 7 });
    }
}
