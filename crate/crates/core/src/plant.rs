//! Simplified quadrotor model driven by virtual inputs.
//!
//! Translational acceleration is the thrust acceleration `u1` along the body z
//! axis minus gravity; the three Euler angles are double integrators of
//! `u2..u4`.

use crate::math::{cos, sin};

/// Twelve-state rigid-body configuration of one vehicle. Angles are not wrapped.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct QuadState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub phidot: f64,
    pub thetadot: f64,
    pub psidot: f64,
}

impl QuadState {
    pub const LEN: usize = 12;

    /// Hovering at rest at `p` with the given yaw.
    pub fn at_rest(p: [f64; 3], psi: f64) -> Self {
        Self {
            x: p[0],
            y: p[1],
            z: p[2],
            psi,
            ..Self::default()
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_array(&self) -> [f64; 12] {
        [
            self.x,
            self.y,
            self.z,
            self.vx,
            self.vy,
            self.vz,
            self.phi,
            self.theta,
            self.psi,
            self.phidot,
            self.thetadot,
            self.psidot,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
            vx: v[3],
            vy: v[4],
            vz: v[5],
            phi: v[6],
            theta: v[7],
            psi: v[8],
            phidot: v[9],
            thetadot: v[10],
            psidot: v[11],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Virtual inputs: `u1` thrust acceleration (m/s²), `u2..u4` angular
/// accelerations of roll, pitch and yaw (rad/s²).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlInput {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

impl ControlInput {
    pub fn hover(g: f64) -> Self {
        Self { u1: g, ..Self::default() }
    }
}

/// Translational accelerations `[ẍ, ÿ, z̈]` for the given attitude and thrust.
pub fn translational_acceleration(s: &QuadState, u1: f64, g: f64) -> [f64; 3] {
    let (sphi, cphi) = (sin(s.phi), cos(s.phi));
    let (stheta, ctheta) = (sin(s.theta), cos(s.theta));
    let (spsi, cpsi) = (sin(s.psi), cos(s.psi));
    [
        u1 * (cpsi * stheta * cphi + spsi * sphi),
        u1 * (spsi * stheta * cphi - cpsi * sphi),
        u1 * ctheta * cphi - g,
    ]
}

/// Time derivative of the state, laid out like [`QuadState`].
pub fn state_derivative(s: &QuadState, u: &ControlInput, g: f64) -> QuadState {
    let [ax, ay, az] = translational_acceleration(s, u.u1, g);
    QuadState {
        x: s.vx,
        y: s.vy,
        z: s.vz,
        vx: ax,
        vy: ay,
        vz: az,
        phi: s.phidot,
        theta: s.thetadot,
        psi: s.psidot,
        phidot: u.u2,
        thetadot: u.u3,
        psidot: u.u4,
    }
}
