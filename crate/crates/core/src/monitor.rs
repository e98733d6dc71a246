//! Post-run checks of the closed-loop guarantees on a recorded trace.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::leader::LeaderSample;
use crate::math::abs;
use crate::sim::{Simulation, Trace, TraceSample};

/// Allowed ratio `W / envelope` before the Lyapunov check fails.
pub const LYAPUNOV_SLACK: f64 = 1.05;
/// Largest tolerated `‖c − (H ⊗ I₂) s‖`.
pub const STACKED_TOL: f64 = 1e-10;
/// Largest tolerated final `|ψ|` in radians.
pub const YAW_TOL: f64 = 1e-3;
/// Largest tolerated relative mismatch between `e⁽⁴⁾` and the outer law.
pub const FL_TOL: f64 = 1e-3;
/// Samples closer than this to either end of the run are excluded from the
/// linearization check.
pub const FL_EDGE: f64 = 5.0;

/// Central difference for the fourth derivative, accurate to O(h⁴).
pub const FOURTH_DIFF_STENCIL: [f64; 7] = [-1.0 / 6.0, 2.0, -6.5, 28.0 / 3.0, -6.5, 2.0, -1.0 / 6.0];

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonitorCheck {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl MonitorCheck {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn below(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            passed: value < limit,
        }
    }

    fn at_least(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            passed: value >= limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonitorReport {
    /// min ū₁ against `g − k1z − k3z − sup|z̈_id|` (itself positive).
    pub thrust: MonitorCheck,
    pub roll: MonitorCheck,
    pub pitch: MonitorCheck,
    pub yaw_final: MonitorCheck,
    pub linearization_x: MonitorCheck,
    pub linearization_y: MonitorCheck,
    /// Worst `W / envelope` over recorded samples.
    pub lyapunov: MonitorCheck,
    pub stacked_identity: MonitorCheck,
}

impl MonitorReport {
    pub fn checks(&self) -> [&MonitorCheck; 8] {
        [
            &self.thrust,
            &self.roll,
            &self.pitch,
            &self.yaw_final,
            &self.linearization_x,
            &self.linearization_y,
            &self.lyapunov,
            &self.stacked_identity,
        ]
    }

    pub fn all_passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

/// Per-axis linearization residual: `max |Δ⁴e/h⁴ − u| / max |u|` over the
/// window, taken across all agents.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LinearizationResidual {
    pub x: f64,
    pub y: f64,
    pub points: usize,
}

/// Compares the finite-difference fourth derivative of the recorded planar
/// errors with the commanded outer-law input at uniformly spaced samples
/// inside `[t_start, t_end]`.
pub fn linearization_residual(trace: &Trace, t_start: f64, t_end: f64) -> LinearizationResidual {
    let h = trace.dt * trace.record_stride as f64;
    // Only the uniformly spaced prefix (the last sample may be off-stride).
    let uniform = trace
        .samples
        .windows(2)
        .take_while(|w| abs((w[1].t - w[0].t) - h) <= 1e-9 * h.max(1.0))
        .count()
        + 1;
    let samples = &trace.samples[..uniform.min(trace.samples.len())];
    let inv_h4 = 1.0 / (h * h * h * h);
    let mut worst = [0.0_f64; 2];
    let mut scale = [0.0_f64; 2];
    let mut points = 0;
    if samples.len() < FOURTH_DIFF_STENCIL.len() {
        return LinearizationResidual::default();
    }
    for mid in 3..samples.len() - 3 {
        let t = samples[mid].t;
        if t < t_start || t > t_end {
            continue;
        }
        points += 1;
        for agent in 0..trace.n_agents {
            let mut fd = [0.0_f64; 2];
            for (w, s) in FOURTH_DIFF_STENCIL.iter().zip(&samples[mid - 3..=mid + 3]) {
                fd[0] += w * s.agents[agent].chain.ex[0];
                fd[1] += w * s.agents[agent].chain.ey[0];
            }
            let a = &samples[mid].agents[agent];
            let u = [a.ux, a.uy];
            for axis in 0..2 {
                worst[axis] = worst[axis].max(abs(fd[axis] * inv_h4 - u[axis]));
                scale[axis] = scale[axis].max(abs(u[axis]));
            }
        }
    }
    let rel = |k: usize| if scale[k] > 0.0 { worst[k] / scale[k] } else { worst[k] };
    LinearizationResidual {
        x: rel(0),
        y: rel(1),
        points,
    }
}

pub fn monitors(trace: &Trace, sim: &Simulation) -> MonitorReport {
    let sc = sim.scenario();
    let k = &sc.controller_gains;
    let thrust_bound = sc.gravity - k.k1z - k.k3z - sc.reference_zdd_bound();

    let yaw = trace
        .last()
        .map(|s| s.agents.iter().map(|a| abs(a.state.psi)).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);

    let t_end = trace.last().map(|s| s.t).unwrap_or(0.0);
    let fl = linearization_residual(trace, FL_EDGE, t_end - FL_EDGE);

    let lyapunov_ratio = trace
        .samples
        .iter()
        .map(|s| if s.envelope > 0.0 { s.lyapunov / s.envelope } else if s.lyapunov > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);

    let stacked = trace
        .samples
        .iter()
        .map(|s| s.stacked_residual)
        .fold(trace.stats.max_stacked_residual, f64::max);

    let mut thrust = MonitorCheck::at_least("min_ubar", trace.stats.min_ubar, thrust_bound);
    thrust.passed &= thrust_bound > 0.0;

    MonitorReport {
        thrust,
        roll: MonitorCheck::below("max_abs_roll", trace.stats.max_abs_phi, FRAC_PI_2),
        pitch: MonitorCheck::below("max_abs_pitch", trace.stats.max_abs_theta, FRAC_PI_2),
        yaw_final: MonitorCheck::below("final_abs_yaw", yaw, YAW_TOL),
        linearization_x: MonitorCheck::below("linearization_rel_x", fl.x, FL_TOL),
        linearization_y: MonitorCheck::below("linearization_rel_y", fl.y, FL_TOL),
        lyapunov: MonitorCheck::at_most("lyapunov_ratio", lyapunov_ratio, LYAPUNOV_SLACK),
        stacked_identity: MonitorCheck::below("stacked_residual", stacked, STACKED_TOL),
    }
}

/// Formation error norms of every agent at every recorded sample.
pub fn formation_error_norms(trace: &Trace) -> Vec<Vec<f64>> {
    trace
        .samples
        .iter()
        .map(|s| s.agents.iter().map(|a| a.formation_error_norm()).collect())
        .collect()
}

/// `max_i ‖pᵢ − p₀ − Δᵢ‖` at one sample.
pub fn max_formation_error(sample: &TraceSample) -> f64 {
    sample
        .agents
        .iter()
        .map(|a| a.formation_error_norm())
        .fold(0.0, f64::max)
}

/// Largest amount by which `max_i ‖ηᵢ‖` climbs above its running minimum over
/// the samples with `t ≥ t_from`. Zero for a non-increasing series.
pub fn max_error_rise(trace: &Trace, t_from: f64) -> f64 {
    let mut low = f64::INFINITY;
    let mut rise: f64 = 0.0;
    for s in trace.samples.iter().filter(|s| s.t >= t_from) {
        let e = max_formation_error(s);
        low = low.min(e);
        rise = rise.max(e - low);
    }
    rise
}

/// Worst observer disagreement with the leader at one sample:
/// `[‖ζ − ζ₀‖, ‖ζ̇ − ζ̇₀‖, ‖ζ̈ − ζ̈₀‖, |z_d − z₀|]`, each maximized over agents.
pub fn consensus_errors(sample: &TraceSample, leader: &LeaderSample) -> [f64; 4] {
    let mut out = [0.0_f64; 4];
    for a in &sample.agents {
        for (k, slot) in out.iter_mut().take(3).enumerate() {
            *slot = slot.max((a.xy.zeta[k] - leader.xy(k)).norm());
        }
        out[3] = out[3].max(abs(a.z.z_d - leader.z(0)));
    }
    out
}

/// Largest `|θ|` and `|φ|` over all agents on samples with `t ≥ t_from`.
pub fn max_tilt_after(trace: &Trace, t_from: f64) -> (f64, f64) {
    let mut theta: f64 = 0.0;
    let mut phi: f64 = 0.0;
    for s in trace.samples.iter().filter(|s| s.t >= t_from) {
        for a in &s.agents {
            theta = theta.max(abs(a.state.theta));
            phi = phi.max(abs(a.state.phi));
        }
    }
    (theta, phi)
}
