//! Local tracking law based on non-regular feedback linearization.
//!
//! Yaw is regulated by a PD law. Altitude uses a bounded tanh law whose
//! intermediate thrust term `ū₁` stays strictly positive. With `ū₁` fixed, the
//! planar errors have relative degree four in `(u2, u3)`. Their derivatives up
//! to third order, and the drift `Ξ₂` of the fourth, are rebuilt in closed form
//! from the model. Nothing is differentiated numerically. The remaining
//! inputs cancel `Ξ₂` and leave `e⁽⁴⁾ = [ux, uy]`, which a linear law
//! stabilizes.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::hurwitz::quartic_is_hurwitz;
use crate::math::{abs, atan, cos, sec, sech2, sin, sqrt, tan, tanh, Mat2, Vec2};
use crate::plant::{ControlInput, QuadState};

/// Margin from ±π/2 at which roll or pitch is treated as singular.
pub const ATTITUDE_MARGIN: f64 = 1e-9;

/// Smallest admissible `ū₁`.
pub const MIN_THRUST_TERM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControllerError {
    AttitudeSingularity { phi: f64, theta: f64 },
    ThrustDegenerate { ubar: f64 },
}

impl core::fmt::Display for ControllerError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ControllerError::AttitudeSingularity { phi, theta } => write!(
                f,
                "attitude singularity: roll {phi:.6} rad, pitch {theta:.6} rad (limit ±π/2)"
            ),
            ControllerError::ThrustDegenerate { ubar } => {
                write!(f, "thrust term ū₁ = {ubar:e} is not positive")
            }
        }
    }
}

impl core::error::Error for ControllerError {}

/// Reference position and derivatives per axis: `x[k]` is the k-th derivative
/// of `x_id`, for k = 0..=4.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrackingRef {
    pub x: [f64; 5],
    pub y: [f64; 5],
    pub z: [f64; 5],
}

impl TrackingRef {
    #[inline]
    pub fn xy(&self, k: usize) -> Vec2 {
        Vec2::new(self.x[k], self.y[k])
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x[0], self.y[0], self.z[0]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControllerGains {
    pub k1z: f64,
    pub k2z: f64,
    pub k3z: f64,
    pub k1x: f64,
    pub k2x: f64,
    pub k3x: f64,
    pub k4x: f64,
    pub k1y: f64,
    pub k2y: f64,
    pub k3y: f64,
    pub k4y: f64,
    pub k1psi: f64,
    pub k2psi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControllerGainViolation {
    NotPositive(&'static str, f64),
    ThrustMargin { k1z_plus_k3z: f64, limit: f64 },
    NotHurwitz(char),
}

impl core::fmt::Display for ControllerGainViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ControllerGainViolation::NotPositive(name, v) => write!(f, "{name} > 0 violated ({name} = {v})"),
            ControllerGainViolation::ThrustMargin { k1z_plus_k3z, limit } => write!(
                f,
                "k1z + k3z < g - sup|z̈_id| violated ({k1z_plus_k3z} >= {limit})"
            ),
            ControllerGainViolation::NotHurwitz(axis) => write!(
                f,
                "s^4 + k4{axis} s^3 + k3{axis} s^2 + k2{axis} s + k1{axis} is not Hurwitz"
            ),
        }
    }
}

impl ControllerGains {
    /// Gains used for both simulated cases in the reference experiments.
    pub const REFERENCE: ControllerGains = ControllerGains {
        k1z: 1.0,
        k2z: 0.5,
        k3z: 0.5,
        k1x: 0.2,
        k2x: 1.6,
        k3x: 3.6,
        k4x: 3.2,
        k1y: 0.2,
        k2y: 1.6,
        k3y: 3.6,
        k4y: 3.2,
        k1psi: 0.5,
        k2psi: 0.5,
    };

    /// Lists every violated gain condition. `zdd_ref_sup` bounds `|z̈_id|`.
    pub fn validate(&self, g: f64, zdd_ref_sup: f64) -> Vec<ControllerGainViolation> {
        let mut out = Vec::new();
        let named = [
            ("k1z", self.k1z),
            ("k2z", self.k2z),
            ("k3z", self.k3z),
            ("k1x", self.k1x),
            ("k2x", self.k2x),
            ("k3x", self.k3x),
            ("k4x", self.k4x),
            ("k1y", self.k1y),
            ("k2y", self.k2y),
            ("k3y", self.k3y),
            ("k4y", self.k4y),
            ("k1psi", self.k1psi),
            ("k2psi", self.k2psi),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                out.push(ControllerGainViolation::NotPositive(name, v));
            }
        }
        let limit = g - zdd_ref_sup;
        if !(self.k1z + self.k3z < limit) {
            out.push(ControllerGainViolation::ThrustMargin {
                k1z_plus_k3z: self.k1z + self.k3z,
                limit,
            });
        }
        if !quartic_is_hurwitz(self.k1x, self.k2x, self.k3x, self.k4x) {
            out.push(ControllerGainViolation::NotHurwitz('x'));
        }
        if !quartic_is_hurwitz(self.k1y, self.k2y, self.k3y, self.k4y) {
            out.push(ControllerGainViolation::NotHurwitz('y'));
        }
        out
    }
}

/// Tracking errors and the analytically reconstructed drift terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorChain {
    /// `[e, ė, ë, e⁽³⁾]` for x.
    pub ex: [f64; 4],
    pub ey: [f64; 4],
    /// `[e, ė, ë, e⁽³⁾]` for z under the closed-loop altitude law.
    pub ez: [f64; 4],
    /// `[ū₁, dū₁/dt, d²ū₁/dt²]`.
    pub ubar: [f64; 3],
    pub xi1: Vec2,
    pub xi2: Vec2,
    /// Yaw acceleration commanded by the PD law, needed by `Ξ₂`.
    pub psi_ddot: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControlOutput {
    pub input: ControlInput,
    pub chain: ErrorChain,
    pub ux: f64,
    pub uy: f64,
}

/// PD yaw law `u4 = −k1ψ ψ − k2ψ ψ̇`.
#[inline]
pub fn yaw_control(psi: f64, psidot: f64, gains: &ControllerGains) -> f64 {
    -gains.k1psi * psi - gains.k2psi * psidot
}

fn check_attitude(s: &QuadState) -> Result<(), ControllerError> {
    let limit = FRAC_PI_2 - ATTITUDE_MARGIN;
    if !(abs(s.phi) < limit && abs(s.theta) < limit) {
        return Err(ControllerError::AttitudeSingularity {
            phi: s.phi,
            theta: s.theta,
        });
    }
    Ok(())
}

/// `[tan θ, tan φ / cos θ]`.
#[inline]
pub fn tilt_vector(phi: f64, theta: f64) -> Vec2 {
    Vec2::new(tan(theta), tan(phi) / cos(theta))
}

/// Jacobian of [`tilt_vector`] with respect to `(φ, θ)`.
pub fn m_matrix(phi: f64, theta: f64) -> Mat2 {
    let (sp, st) = (sec(phi), sec(theta));
    Mat2([[0.0, st * st], [sp * sp * st, tan(phi) * tan(theta) * st]])
}

/// Closed-form inverse of [`m_matrix`].
pub fn m_inverse(phi: f64, theta: f64) -> Mat2 {
    let (cp, ct) = (cos(phi), cos(theta));
    Mat2([
        [-0.25 * sin(2.0 * phi) * sin(2.0 * theta), cp * cp * ct],
        [ct * ct, 0.0],
    ])
}

/// Time derivative of [`m_matrix`] along `(φ̇, θ̇)`.
pub fn m_matrix_rate(phi: f64, theta: f64, phidot: f64, thetadot: f64) -> Mat2 {
    let (sp, st) = (sec(phi), sec(theta));
    let (tp, tt) = (tan(phi), tan(theta));
    Mat2([
        [0.0, 2.0 * thetadot * st * st * tt],
        [
            2.0 * phidot * sp * sp * tp * st + thetadot * sp * sp * tt * st,
            phidot * sp * sp * tt * st + thetadot * tp * (st * st * st + tt * tt * st),
        ],
    ])
}

/// `ë_z` of the closed altitude loop: `−k1z tanh(ė + k2z e) − k3z tanh ė`.
pub fn altitude_error_accel(e: f64, edot: f64, gains: &ControllerGains) -> f64 {
    -gains.k1z * tanh(edot + gains.k2z * e) - gains.k3z * tanh(edot)
}

/// Builds the full error chain for one vehicle tracking `r` with offset `delta`.
pub fn error_chain(
    s: &QuadState,
    r: &TrackingRef,
    delta: [f64; 3],
    gains: &ControllerGains,
    g: f64,
) -> Result<ErrorChain, ControllerError> {
    check_attitude(s)?;

    let ez0 = s.z - r.z[0] - delta[2];
    let ez1 = s.vz - r.z[1];
    let k = gains;
    let a = ez1 + k.k2z * ez0;
    let ubar0 = g + r.z[2] - k.k1z * tanh(a) - k.k3z * tanh(ez1);
    if !(ubar0 > MIN_THRUST_TERM) {
        return Err(ControllerError::ThrustDegenerate { ubar: ubar0 });
    }

    // Closed-loop altitude error and its derivatives.
    let (sa, se) = (sech2(a), sech2(ez1));
    let ez2 = altitude_error_accel(ez0, ez1, gains);
    let adot = ez2 + k.k2z * ez1;
    let ez3 = -k.k1z * sa * adot - k.k3z * se * ez2;
    let ubar1 = r.z[3] - k.k3z * se * ez2 - k.k1z * sa * adot;
    let ubar2 = r.z[4] + 2.0 * k.k1z * sa * adot * adot * tanh(a)
        - k.k1z * sa * (ez3 + k.k2z * ez2)
        + 2.0 * k.k3z * se * ez2 * ez2 * tanh(ez1)
        - k.k3z * se * ez3;

    let psi_ddot = yaw_control(s.psi, s.psidot, gains);
    let rot = Mat2::rotation(s.psi);
    let rot_d = (Mat2::QUARTER_TURN * rot).scale(s.psidot);
    let rot_dd = (Mat2::QUARTER_TURN * rot).scale(psi_ddot)
        + (Mat2::QUARTER_TURN * Mat2::QUARTER_TURN * rot).scale(s.psidot * s.psidot);

    let flip = Mat2::FLIP;
    let tilt = tilt_vector(s.phi, s.theta);
    let m = m_matrix(s.phi, s.theta);
    let m_d = m_matrix_rate(s.phi, s.theta, s.phidot, s.thetadot);
    let rates = Vec2::new(s.phidot, s.thetadot);

    let e0 = Vec2::new(s.x - r.x[0] - delta[0], s.y - r.y[0] - delta[1]);
    let e1 = Vec2::new(s.vx - r.x[1], s.vy - r.y[1]);
    let e2 = ubar0 * (rot * flip * tilt) - r.xy(2);

    let lead = rot.scale(ubar1) + rot_d.scale(ubar0);
    let xi1 = lead * flip * tilt;
    let m_rates = m * rates;
    let e3 = xi1 + ubar0 * (rot * flip * m_rates) - r.xy(3);

    let xi1_dot = (rot.scale(ubar2) + rot_d.scale(2.0 * ubar1) + rot_dd.scale(ubar0)) * flip * tilt
        + lead * flip * m_rates;
    let xi2 = xi1_dot
        + ((rot * flip * m).scale(ubar1) + (rot_d * flip * m).scale(ubar0) + (rot * flip * m_d).scale(ubar0))
            * rates;

    Ok(ErrorChain {
        ex: [e0.x, e1.x, e2.x, e3.x],
        ey: [e0.y, e1.y, e2.y, e3.y],
        ez: [ez0, ez1, ez2, ez3],
        ubar: [ubar0, ubar1, ubar2],
        xi1,
        xi2,
        psi_ddot,
    })
}

/// `u1 = ū₁ / (cos θ cos φ)`.
pub fn thrust_control(chain: &ErrorChain, s: &QuadState) -> Result<f64, ControllerError> {
    check_attitude(s)?;
    Ok(chain.ubar[0] / (cos(s.theta) * cos(s.phi)))
}

/// Linear outer law acting on the linearized planar errors.
pub fn outer_law(chain: &ErrorChain, gains: &ControllerGains) -> (f64, f64) {
    let [e, ed, edd, e3] = chain.ex;
    let ux = -gains.k1x * e - gains.k2x * ed - gains.k3x * edd - gains.k4x * e3;
    let [e, ed, edd, e3] = chain.ey;
    let uy = -gains.k1y * e - gains.k2y * ed - gains.k3y * edd - gains.k4y * e3;
    (ux, uy)
}

/// Roll and pitch accelerations that cancel `Ξ₂` and impose `e⁽⁴⁾ = [ux, uy]`.
pub fn attitude_control(
    chain: &ErrorChain,
    s: &QuadState,
    r: &TrackingRef,
    ux: f64,
    uy: f64,
) -> Result<(f64, f64), ControllerError> {
    check_attitude(s)?;
    let ubar = chain.ubar[0];
    if !(ubar > MIN_THRUST_TERM) {
        return Err(ControllerError::ThrustDegenerate { ubar });
    }
    let demand = r.xy(4) - chain.xi2 + Vec2::new(ux, uy);
    let inv = m_inverse(s.phi, s.theta) * Mat2::FLIP * Mat2::rotation(s.psi).transpose();
    let u = (1.0 / ubar) * (inv * demand);
    Ok((u.x, u.y))
}

/// Full control evaluation for one vehicle.
pub fn compute(
    s: &QuadState,
    r: &TrackingRef,
    delta: [f64; 3],
    gains: &ControllerGains,
    g: f64,
) -> Result<ControlOutput, ControllerError> {
    let chain = error_chain(s, r, delta, gains, g)?;
    let u1 = thrust_control(&chain, s)?;
    let (ux, uy) = outer_law(&chain, gains);
    let (u2, u3) = attitude_control(&chain, s, r, ux, uy)?;
    Ok(ControlOutput {
        input: ControlInput {
            u1,
            u2,
            u3,
            u4: chain.psi_ddot,
        },
        chain,
        ux,
        uy,
    })
}

/// Roll and pitch held at zero yaw with vanishing tracking errors.
pub fn steady_state_attitude(xdd: f64, ydd: f64, zdd: f64, g: f64) -> (f64, f64) {
    let vertical = g + zdd;
    let phi = atan(-ydd / sqrt(xdd * xdd + vertical * vertical));
    let theta = atan(xdd / vertical);
    (phi, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::STANDARD_GRAVITY as G;
    use core::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn hover_ref() -> TrackingRef {
        TrackingRef {
            x: [0.0; 5],
            y: [0.0; 5],
            z: [50.0, 0.0, 0.0, 0.0, 0.0],
        }
    }

    #[test]
    fn exact_hover_has_zero_chain() {
        let s = QuadState::at_rest([0.0, 0.0, 50.0], 0.0);
        let out = compute(&s, &hover_ref(), [0.0; 3], &ControllerGains::REFERENCE, G).unwrap();
        assert_eq!(out.chain.ubar, [G, 0.0, 0.0]);
        assert_eq!(out.chain.xi1, Vec2::ZERO);
        assert_eq!(out.chain.xi2, Vec2::ZERO);
        assert_eq!(out.input, ControlInput::hover(G));
        assert_eq!((out.ux, out.uy), (0.0, 0.0));
    }

    #[test]
    fn yaw_law_values() {
        let gains = ControllerGains::REFERENCE;
        assert_eq!(yaw_control(0.0, 0.0, &gains), 0.0);
        assert!((yaw_control(FRAC_PI_8, 0.0, &gains) + core::f64::consts::PI / 16.0).abs() < 1e-15);
    }

    #[test]
    fn thrust_compensates_tilt() {
        let chain = ErrorChain {
            ubar: [G, 0.0, 0.0],
            ..Default::default()
        };
        let level = QuadState::default();
        assert_eq!(thrust_control(&chain, &level).unwrap(), G);
        let pitched = QuadState {
            theta: FRAC_PI_4,
            ..Default::default()
        };
        let u1 = thrust_control(&chain, &pitched).unwrap();
        assert!((u1 - G * 2.0_f64.sqrt()).abs() < 1e-12);
        assert!((u1 - 13.873).abs() < 1e-3);
    }

    #[test]
    fn singular_attitude_is_rejected() {
        let s = QuadState {
            theta: FRAC_PI_2,
            ..Default::default()
        };
        let err = error_chain(&s, &hover_ref(), [0.0; 3], &ControllerGains::REFERENCE, G).unwrap_err();
        assert!(matches!(err, ControllerError::AttitudeSingularity { .. }));
        let near = QuadState {
            phi: -(FRAC_PI_2 - 0.5 * ATTITUDE_MARGIN),
            ..Default::default()
        };
        assert!(error_chain(&near, &hover_ref(), [0.0; 3], &ControllerGains::REFERENCE, G).is_err());
    }

    #[test]
    fn degenerate_thrust_is_rejected() {
        // Gains far outside the admissible set drive ū₁ negative.
        let gains = ControllerGains {
            k1z: 20.0,
            ..ControllerGains::REFERENCE
        };
        let s = QuadState::at_rest([0.0, 0.0, 100.0], 0.0);
        let err = error_chain(&s, &hover_ref(), [0.0; 3], &gains, G).unwrap_err();
        assert!(matches!(err, ControllerError::ThrustDegenerate { .. }));
    }

    #[test]
    fn m_inverse_is_inverse_at_sample_points() {
        for &(phi, theta) in &[(0.0, 0.0), (0.3, -0.7), (-1.2, 1.1), (1.39, 1.39)] {
            let prod = m_matrix(phi, theta) * m_inverse(phi, theta);
            assert!(prod.max_abs_diff(Mat2::IDENTITY) < 1e-12, "{phi} {theta}");
        }
    }

    #[test]
    fn steady_state_attitude_values() {
        assert_eq!(steady_state_attitude(0.0, 0.0, 0.0, G), (0.0, 0.0));
        let (_, theta) = steady_state_attitude(1.0, 0.0, 0.0, G);
        assert!((theta.to_degrees() - 5.8204).abs() < 1e-3);
        let (phi, theta) = steady_state_attitude(0.0, 1.0, 0.0, G);
        assert!((phi.to_degrees() + 5.8204).abs() < 1e-3);
        assert_eq!(theta, 0.0);
    }

    #[test]
    fn reference_gains_validate() {
        assert!(ControllerGains::REFERENCE.validate(G, 1.0).is_empty());
        let bad = ControllerGains {
            k1z: 9.0,
            ..ControllerGains::REFERENCE
        };
        assert!(matches!(
            bad.validate(G, 1.0)[..],
            [ControllerGainViolation::ThrustMargin { .. }]
        ));
        let unstable = ControllerGains {
            k4x: 0.1,
            ..ControllerGains::REFERENCE
        };
        assert_eq!(unstable.validate(G, 0.0), [ControllerGainViolation::NotHurwitz('x')]);
    }
}
