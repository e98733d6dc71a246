//! Distributed virtual references.
//!
//! Each follower runs a fourth-order planar observer with a time-decaying
//! adaptive gain, plus a cascaded altitude observer whose acceleration is
//! bounded by `h1 + h3`. Only neighbor states (and, for pinned agents, the
//! leader) enter the coupling terms.

use alloc::vec::Vec;

use crate::controller::TrackingRef;
use crate::graph::CommGraph;
use crate::hurwitz::is_hurwitz;
use crate::leader::{LeaderSample, LeaderTrajectory, SigmaBounds};
use crate::linalg::{LinalgError, SymMatrix};
use crate::math::{abs, exp, sech2, tanh, Vec2};
use crate::stiff::{StiffError, StiffSystem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObserverError {
    NegativeTime(f64),
    CouplingStep(StiffError),
    Reconstruct(LinalgError),
}

impl core::fmt::Display for ObserverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ObserverError::NegativeTime(t) => write!(f, "observer time must be nonnegative, got {t}"),
            ObserverError::CouplingStep(e) => write!(f, "observer coupling: {e}"),
            ObserverError::Reconstruct(e) => write!(f, "observer reconstruction: {e}"),
        }
    }
}

impl core::error::Error for ObserverError {}

/// Planar reference `ζ` and its first three derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct XYObserverState {
    pub zeta: [Vec2; 4],
}

impl XYObserverState {
    pub fn at_rest(p: Vec2) -> Self {
        Self {
            zeta: [p, Vec2::ZERO, Vec2::ZERO, Vec2::ZERO],
        }
    }
}

/// Altitude reference chain: `z_d` is the reference handed to the controller,
/// `z_a` its second-order prefilter and `z_b` the consensus estimate of z₀.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ZObserverState {
    pub z_d: f64,
    pub zdot_d: f64,
    pub z_a: f64,
    pub zdot_a: f64,
    pub z_b: f64,
}

impl ZObserverState {
    pub fn at_rest(z: f64) -> Self {
        Self {
            z_d: z,
            zdot_d: 0.0,
            z_a: z,
            zdot_a: 0.0,
            z_b: z,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ZObserverRates {
    pub zdd_d: f64,
    pub zdd_a: f64,
    pub zd_b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObserverGains {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g5x: f64,
    pub g5y: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    pub h5: f64,
    pub h6: f64,
}

impl ObserverGains {
    /// Gains used for both simulated cases in the reference experiments.
    pub const REFERENCE: ObserverGains = ObserverGains {
        g1: 0.125,
        g2: 0.75,
        g3: 0.85,
        g4: 0.1,
        g5x: 2.1,
        g5y: 2.1,
        gamma: 15.0,
        lambda: 0.1,
        h1: 0.5,
        h2: 0.5,
        h3: 0.5,
        h4: 0.5,
        h5: 0.5,
        h6: 1.0,
    };

    /// Bound on `|z̈_id|` guaranteed by the altitude observer.
    pub fn zdd_bound(&self) -> f64 {
        self.h1 + self.h3
    }

    /// Weighted sum `ζ⁽³⁾ + g3 ζ̈ + g2 ζ̇ + g1 ζ` of a derivative stack.
    #[inline]
    fn combine(&self, levels: &[Vec2; 4]) -> Vec2 {
        levels[3] + self.g3 * levels[2] + self.g2 * levels[1] + self.g1 * levels[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObserverGainViolation {
    NotPositive(&'static str, f64),
    /// g2·g3 > g1 fails.
    CubicNotHurwitz { g1: f64, g2g3: f64 },
    BelowSigma { axis: char, g5: f64, sigma: f64 },
    AltitudeBound { h1_plus_h3: f64, g: f64 },
}

impl core::fmt::Display for ObserverGainViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ObserverGainViolation::NotPositive(name, v) => write!(f, "{name} > 0 violated ({name} = {v})"),
            ObserverGainViolation::CubicNotHurwitz { g1, g2g3 } => {
                write!(f, "g2*g3 > g1 violated (g2*g3 = {g2g3}, g1 = {g1})")
            }
            ObserverGainViolation::BelowSigma { axis, g5, sigma } => {
                write!(f, "g5{axis} >= sigma0{axis} violated ({g5} < {sigma})")
            }
            ObserverGainViolation::AltitudeBound { h1_plus_h3, g } => {
                write!(f, "h1 + h3 < g violated ({h1_plus_h3} >= {g})")
            }
        }
    }
}

/// Checks every observer gain condition and lists the violations.
pub fn validate_observer_gains(gains: &ObserverGains, sigma: SigmaBounds, g: f64) -> Vec<ObserverGainViolation> {
    let mut out = Vec::new();
    let named = [
        ("g1", gains.g1),
        ("g2", gains.g2),
        ("g3", gains.g3),
        ("g4", gains.g4),
        ("gamma", gains.gamma),
        ("lambda", gains.lambda),
        ("h1", gains.h1),
        ("h2", gains.h2),
        ("h3", gains.h3),
        ("h4", gains.h4),
        ("h5", gains.h5),
        ("h6", gains.h6),
    ];
    for (name, v) in named {
        if !(v > 0.0 && v.is_finite()) {
            out.push(ObserverGainViolation::NotPositive(name, v));
        }
    }
    if !(gains.g2 * gains.g3 > gains.g1)
        || !is_hurwitz(&[1.0, gains.g3, gains.g2, gains.g1])
    {
        out.push(ObserverGainViolation::CubicNotHurwitz {
            g1: gains.g1,
            g2g3: gains.g2 * gains.g3,
        });
    }
    for (axis, g5, s) in [('x', gains.g5x, sigma.x), ('y', gains.g5y, sigma.y)] {
        if !(g5 >= s) {
            out.push(ObserverGainViolation::BelowSigma { axis, g5, sigma: s });
        }
    }
    if !(gains.h1 + gains.h3 < g) {
        out.push(ObserverGainViolation::AltitudeBound {
            h1_plus_h3: gains.h1 + gains.h3,
            g,
        });
    }
    out
}

fn leader_levels(leader: &LeaderSample) -> [Vec2; 4] {
    [leader.xy(0), leader.xy(1), leader.xy(2), leader.xy(3)]
}

/// Neighbor coupling `c_i` for every agent, summed level by level.
pub fn coupling(all: &[XYObserverState], leader: &LeaderSample, graph: &CommGraph, gains: &ObserverGains) -> Vec<Vec2> {
    let lead = leader_levels(leader);
    let weights = [gains.g1, gains.g2, gains.g3, 1.0];
    (0..all.len())
        .map(|i| {
            let own = &all[i].zeta;
            let mut c = Vec2::ZERO;
            for (level, &w) in weights.iter().enumerate() {
                let mut diff = Vec2::ZERO;
                for j in graph.neighbors(i) {
                    diff += own[level] - all[j].zeta[level];
                }
                if graph.leader_link(i) {
                    diff += own[level] - lead[level];
                }
                c += w * diff;
            }
            c
        })
        .collect()
}

/// Stacked sliding variable `s_i = ξ⁽³⁾ + g3 ξ̈ + g2 ξ̇ + g1 ξ` with `ξ = ζ_id − ζ₀`.
pub fn sliding_variable(all: &[XYObserverState], leader: &LeaderSample, gains: &ObserverGains) -> Vec<Vec2> {
    let lead = gains.combine(&leader_levels(leader));
    all.iter().map(|st| gains.combine(&st.zeta) - lead).collect()
}

/// Adaptive gain diagonal `g5 / (|c| + γ e^{−λt})` per axis.
#[inline]
pub fn adaptive_gain(c: Vec2, gains: &ObserverGains, t: f64) -> Vec2 {
    let floor = gains.gamma * exp(-gains.lambda * t);
    Vec2::new(gains.g5x / (abs(c.x) + floor), gains.g5y / (abs(c.y) + floor))
}

/// `(g4 + Q) c` per axis, the rate at which every sliding variable is pulled in.
#[inline]
pub fn correction(c: Vec2, gains: &ObserverGains, t: f64) -> Vec2 {
    let q = adaptive_gain(c, gains, t);
    Vec2::new((gains.g4 + q.x) * c.x, (gains.g4 + q.y) * c.y)
}

/// `ζ⁽⁴⁾` of one observer given its derivative stack and its coupling.
#[inline]
pub fn fourth_derivative(zeta: &[Vec2; 4], c: Vec2, gains: &ObserverGains, t: f64) -> Vec2 {
    -gains.g3 * zeta[3] - gains.g2 * zeta[2] - gains.g1 * zeta[1] - correction(c, gains, t)
}

/// Fourth derivative of each planar reference, returned together with the couplings.
pub fn xy_observer_terms(
    all: &[XYObserverState],
    leader: &LeaderSample,
    graph: &CommGraph,
    gains: &ObserverGains,
    t: f64,
) -> Result<(Vec<Vec2>, Vec<Vec2>), ObserverError> {
    if !(t >= 0.0) {
        return Err(ObserverError::NegativeTime(t));
    }
    let c = coupling(all, leader, graph, gains);
    let accel = all
        .iter()
        .zip(&c)
        .map(|(st, &ci)| fourth_derivative(&st.zeta, ci, gains, t))
        .collect();
    Ok((accel, c))
}

pub fn xy_observer_derivative(
    all: &[XYObserverState],
    leader: &LeaderSample,
    graph: &CommGraph,
    gains: &ObserverGains,
    t: f64,
) -> Result<Vec<Vec2>, ObserverError> {
    xy_observer_terms(all, leader, graph, gains, t).map(|(accel, _)| accel)
}

/// `s₀ = x₀⁽³⁾ + g3 ẍ₀ + g2 ẋ₀ + g1 x₀` for the leader.
pub fn leader_sliding(leader: &LeaderSample, gains: &ObserverGains) -> Vec2 {
    gains.combine(&leader_levels(leader))
}

/// Time derivative of [`leader_sliding`].
pub fn leader_sliding_rate(leader: &LeaderSample, gains: &ObserverGains) -> Vec2 {
    gains.combine(&[leader.xy(1), leader.xy(2), leader.xy(3), leader.xy(4)])
}

/// Rebuilds full observer stacks from `ζ, ζ̇, ζ̈` and the couplings.
///
/// The couplings are `c = (H ⊗ I₂) s` with `s` the sliding variables relative
/// to the leader, so one positive definite solve per axis recovers `s`, and
/// then `ζ⁽³⁾ = s + s₀ − g3 ζ̈ − g2 ζ̇ − g1 ζ`.
pub fn stacks_from_coupling(
    lower: &[[Vec2; 3]],
    c: &[Vec2],
    h: &SymMatrix,
    leader: &LeaderSample,
    gains: &ObserverGains,
) -> Result<Vec<XYObserverState>, LinalgError> {
    let s0 = leader_sliding(leader, gains);
    let cx: Vec<f64> = c.iter().map(|v| v.x).collect();
    let cy: Vec<f64> = c.iter().map(|v| v.y).collect();
    let sx = h.solve_spd(&cx)?;
    let sy = h.solve_spd(&cy)?;
    Ok(lower
        .iter()
        .enumerate()
        .map(|(i, &[z0, z1, z2])| {
            let s = Vec2::new(sx[i], sy[i]) + s0;
            XYObserverState {
                zeta: [z0, z1, z2, s - gains.g3 * z2 - gains.g2 * z1 - gains.g1 * z0],
            }
        })
        .collect())
}

/// One axis of the coupling dynamics `ċ = −H (g4 + Q(c)) c − b ṡ₀(t)`.
///
/// This subsystem depends only on the couplings and the leader. Once
/// `γ e^{−λt}` becomes small its Jacobian grows like `g5 / (γ e^{−λt})`, so it
/// is handed to an implicit integrator.
pub struct CouplingAxis<'a> {
    h: &'a SymMatrix,
    pinned: Vec<f64>,
    leader: &'a LeaderTrajectory,
    gains: &'a ObserverGains,
    axis: usize,
}

impl<'a> CouplingAxis<'a> {
    pub fn new(h: &'a SymMatrix, graph: &CommGraph, leader: &'a LeaderTrajectory, gains: &'a ObserverGains, axis: usize) -> Self {
        assert!(axis < 2, "planar axis index must be 0 or 1");
        Self {
            h,
            pinned: (0..graph.len()).map(|i| if graph.leader_link(i) { 1.0 } else { 0.0 }).collect(),
            leader,
            gains,
            axis,
        }
    }

    fn g5(&self) -> f64 {
        if self.axis == 0 {
            self.gains.g5x
        } else {
            self.gains.g5y
        }
    }

    fn floor(&self, t: f64) -> f64 {
        self.gains.gamma * exp(-self.gains.lambda * t)
    }
}

impl StiffSystem for CouplingAxis<'_> {
    fn dim(&self) -> usize {
        self.pinned.len()
    }

    fn rhs(&self, t: f64, c: &[f64], out: &mut [f64]) {
        let (g4, g5, floor) = (self.gains.g4, self.g5(), self.floor(t));
        let rate = leader_sliding_rate(&self.leader.evaluate(t), self.gains);
        let forcing = if self.axis == 0 { rate.x } else { rate.y };
        let n = self.dim();
        for i in 0..n {
            let row = self.h.row(i);
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * (g4 + g5 / (abs(c[j]) + floor)) * c[j];
            }
            out[i] = -acc - self.pinned[i] * forcing;
        }
    }

    fn jacobian(&self, t: f64, c: &[f64], out: &mut [f64]) {
        let (g4, g5, floor) = (self.gains.g4, self.g5(), self.floor(t));
        let n = self.dim();
        for j in 0..n {
            let d = abs(c[j]) + floor;
            let slope = g4 + g5 * floor / (d * d);
            for i in 0..n {
                out[i * n + j] = -self.h.get(i, j) * slope;
            }
        }
    }
}

#[inline]
fn z_reference_accel(z: &ZObserverState, gains: &ObserverGains) -> f64 {
    let b = z.zdot_d + gains.h2 * (z.z_d - z.z_a);
    -gains.h1 * tanh(b) - gains.h3 * tanh(z.zdot_d)
}

#[inline]
fn z_prefilter_accel(z: &ZObserverState, gains: &ObserverGains) -> f64 {
    -gains.h4 * (z.z_a - z.z_b) - gains.h5 * z.zdot_a
}

pub fn z_observer_derivative(zs: &[ZObserverState], z0: f64, graph: &CommGraph, gains: &ObserverGains) -> Vec<ZObserverRates> {
    (0..zs.len())
        .map(|i| {
            let own = &zs[i];
            let mut consensus: f64 = graph.neighbors(i).map(|j| own.z_b - zs[j].z_b).sum();
            if graph.leader_link(i) {
                consensus += own.z_b - z0;
            }
            ZObserverRates {
                zdd_d: z_reference_accel(own, gains),
                zdd_a: z_prefilter_accel(own, gains),
                zd_b: -gains.h6 * consensus,
            }
        })
        .collect()
}

/// `[z_d, ż_d, z̈_d, z_d⁽³⁾, z_d⁽⁴⁾]`, differentiating the tanh law in closed form.
pub fn z_reference_chain(z: &ZObserverState, gains: &ObserverGains) -> [f64; 5] {
    let h = gains;
    let b = z.zdot_d + h.h2 * (z.z_d - z.z_a);
    let (tb, tv) = (tanh(b), tanh(z.zdot_d));
    let (sb, sv) = (sech2(b), sech2(z.zdot_d));
    let zdd = -h.h1 * tb - h.h3 * tv;
    let zdd_a = z_prefilter_accel(z, gains);
    let bdot = zdd + h.h2 * (z.zdot_d - z.zdot_a);
    let z3 = -h.h1 * sb * bdot - h.h3 * sv * zdd;
    let bddot = z3 + h.h2 * (zdd - zdd_a);
    let z4 = -h.h1 * (sb * bddot - 2.0 * sb * tb * bdot * bdot) - h.h3 * (sv * z3 - 2.0 * sv * tv * zdd * zdd);
    [z.z_d, z.zdot_d, zdd, z3, z4]
}

/// Packages observer outputs as the reference fed to the local controller.
pub fn observer_to_tracking_ref(
    xy: &XYObserverState,
    xy4: Vec2,
    z: &ZObserverState,
    gains: &ObserverGains,
) -> TrackingRef {
    let zeta = &xy.zeta;
    TrackingRef {
        x: [zeta[0].x, zeta[1].x, zeta[2].x, zeta[3].x, xy4.x],
        y: [zeta[0].y, zeta[1].y, zeta[2].y, zeta[3].y, xy4.y],
        z: z_reference_chain(z, gains),
    }
}
