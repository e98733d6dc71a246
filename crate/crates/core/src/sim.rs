//! Scenario assembly and joint closed-loop integration.
//!
//! All plants and observers share one flat state vector, laid out per agent as
//! 12 vehicle states, 6 planar observer states (`ζ, ζ̇, ζ̈`) and 5 altitude
//! observer states, followed by the planar couplings `c` of every agent.
//! Carrying `c` instead of `ζ⁽³⁾` is an exact change of coordinates; `ζ⁽³⁾` is
//! rebuilt from it on every evaluation.
//!
//! The couplings obey their own closed equation whose stiffness grows without
//! bound as the adaptive gain floor `γ e^{−λt}` decays. They are advanced with
//! an L-stable implicit scheme over two half steps, and the remaining states
//! with classical RK4 reading the couplings at the RK4 stage times.

use alloc::vec;
use alloc::vec::Vec;

use crate::controller::{self, ControllerError, ControllerGainViolation, ControllerGains, ErrorChain, TrackingRef};
use crate::graph::{Assumption3Report, CommGraph};
use crate::integrator::Rk4;
use crate::leader::{LeaderError, LeaderSample, LeaderTrajectory, SigmaBounds};
use crate::linalg::SymMatrix;
use crate::lyapunov::{lyapunov_value, Envelope};
use crate::math::{abs, sqrt, Vec2};
use crate::observer::{
    self, CouplingAxis, ObserverError, ObserverGainViolation, ObserverGains, XYObserverState, ZObserverRates,
    ZObserverState,
};
use crate::stiff::RadauIIA;
use crate::plant::{self, ControlInput, QuadState};

/// Flat state entries per agent.
pub const AGENT_STRIDE: usize = 23;
const XY_OFFSET: usize = 12;
const Z_OFFSET: usize = 18;

/// Where each agent's reference comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ReferenceMode {
    /// Distributed observers provide the reference (the formation scheme).
    #[default]
    Observer,
    /// Every agent tracks the true leader plus its offset; observers still run
    /// but are not fed to the controllers.
    Ideal,
}

/// How the planar couplings are advanced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CouplingIntegrator {
    /// Radau IIA over two half steps; stable however small `γ e^{−λt}` gets.
    #[default]
    Implicit,
    /// The same RK4 step as every other state. Once `dt · g5 · λmax(H)`
    /// exceeds a few multiples of `γ e^{−λt}` this settles into a numerical
    /// limit cycle in `c` instead of converging.
    Explicit,
}

#[cfg(feature = "serde")]
fn default_gravity() -> f64 {
    crate::STANDARD_GRAVITY
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub graph: CommGraph,
    pub leader: LeaderTrajectory,
    /// Formation offsets Δᵢ, one per agent.
    pub deltas: Vec<[f64; 3]>,
    pub controller_gains: ControllerGains,
    pub observer_gains: ObserverGains,
    pub initial: Vec<QuadState>,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    #[cfg_attr(feature = "serde", serde(default = "default_gravity"))]
    pub gravity: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub reference: ReferenceMode,
    #[cfg_attr(feature = "serde", serde(default))]
    pub coupling_integrator: CouplingIntegrator,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioIssue {
    NonPositiveStep(f64),
    HorizonTooShort { dt: f64, t_final: f64 },
    ZeroStride,
    BadGravity(f64),
    DeltaCount { expected: usize, found: usize },
    InitialCount { expected: usize, found: usize },
    NonFiniteInitial(usize),
    InitialAttitude(usize),
    Graph(Assumption3Report),
    Leader(LeaderError),
    Controller(ControllerGainViolation),
    Observer(ObserverGainViolation),
}

impl core::fmt::Display for ScenarioIssue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ScenarioIssue::NonPositiveStep(dt) => write!(f, "dt must be positive, got {dt}"),
            ScenarioIssue::HorizonTooShort { dt, t_final } => {
                write!(f, "t_final ({t_final}) must be at least dt ({dt})")
            }
            ScenarioIssue::ZeroStride => f.write_str("record_stride must be at least 1"),
            ScenarioIssue::BadGravity(g) => write!(f, "gravity must be positive and finite, got {g}"),
            ScenarioIssue::DeltaCount { expected, found } => {
                write!(f, "expected {expected} formation offsets, found {found}")
            }
            ScenarioIssue::InitialCount { expected, found } => {
                write!(f, "expected {expected} initial states, found {found}")
            }
            ScenarioIssue::NonFiniteInitial(i) => write!(f, "initial state of agent {} is not finite", i + 1),
            ScenarioIssue::InitialAttitude(i) => {
                write!(f, "initial roll/pitch of agent {} must lie in (-pi/2, pi/2)", i + 1)
            }
            ScenarioIssue::Graph(r) => write!(
                f,
                "graph must be connected with a leader link (connected: {}, leader link: {}, lambda_min(H) = {:e})",
                r.connected, r.leader_reachable, r.lambda_min_h
            ),
            ScenarioIssue::Leader(e) => write!(f, "leader: {e}"),
            ScenarioIssue::Controller(v) => write!(f, "controller gains: {v}"),
            ScenarioIssue::Observer(v) => write!(f, "observer gains: {v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioError {
    pub issues: Vec<ScenarioIssue>,
}

impl core::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ScenarioError {}

impl Scenario {
    pub fn n_agents(&self) -> usize {
        self.graph.len()
    }

    /// Number of integration steps covering `[0, t_final]`.
    pub fn steps(&self) -> usize {
        libm::round(self.t_final / self.dt) as usize
    }

    /// Bound on `|z̈_id|` seen by the controllers in this mode.
    pub fn reference_zdd_bound(&self) -> f64 {
        match self.reference {
            ReferenceMode::Observer => self.observer_gains.zdd_bound(),
            ReferenceMode::Ideal => 0.0,
        }
    }

    pub fn sigma_bounds(&self) -> SigmaBounds {
        let o = &self.observer_gains;
        self.leader.sigma_bounds(o.g1, o.g2, o.g3, self.t_final)
    }

    /// Runs every validator and collects all failures.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut issues = Vec::new();
        let n = self.n_agents();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            issues.push(ScenarioIssue::NonPositiveStep(self.dt));
        } else if !(self.t_final.is_finite() && self.steps() >= 1) {
            issues.push(ScenarioIssue::HorizonTooShort {
                dt: self.dt,
                t_final: self.t_final,
            });
        }
        if self.record_stride == 0 {
            issues.push(ScenarioIssue::ZeroStride);
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            issues.push(ScenarioIssue::BadGravity(self.gravity));
        }
        if self.deltas.len() != n {
            issues.push(ScenarioIssue::DeltaCount {
                expected: n,
                found: self.deltas.len(),
            });
        }
        if self.initial.len() != n {
            issues.push(ScenarioIssue::InitialCount {
                expected: n,
                found: self.initial.len(),
            });
        }
        let limit = core::f64::consts::FRAC_PI_2 - controller::ATTITUDE_MARGIN;
        for (i, s) in self.initial.iter().enumerate() {
            if !s.is_finite() {
                issues.push(ScenarioIssue::NonFiniteInitial(i));
            } else if !(abs(s.phi) < limit && abs(s.theta) < limit) {
                issues.push(ScenarioIssue::InitialAttitude(i));
            }
        }
        let graph_report = self.graph.validate_assumption3();
        if !graph_report.passes() {
            issues.push(ScenarioIssue::Graph(graph_report));
        }
        match self.leader.validate() {
            Err(e) => issues.push(ScenarioIssue::Leader(e)),
            Ok(()) => {
                let sigma = self.sigma_bounds();
                issues.extend(
                    observer::validate_observer_gains(&self.observer_gains, sigma, self.gravity)
                        .into_iter()
                        .map(ScenarioIssue::Observer),
                );
            }
        }
        issues.extend(
            self.controller_gains
                .validate(self.gravity, self.reference_zdd_bound())
                .into_iter()
                .map(ScenarioIssue::Controller),
        );
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError { issues })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepErrorKind {
    Controller(ControllerError),
    Observer(ObserverError),
    NonFinite,
}

/// Failure during a derivative evaluation, tagged with agent (1-based in
/// messages) and time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepError {
    pub time: f64,
    pub agent: Option<usize>,
    pub kind: StepErrorKind,
}

impl core::fmt::Display for StepError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "t = {:.6} s", self.time)?;
        if let Some(i) = self.agent {
            write!(f, ", agent {}", i + 1)?;
        }
        match &self.kind {
            StepErrorKind::Controller(e) => write!(f, ": {e}"),
            StepErrorKind::Observer(e) => write!(f, ": {e}"),
            StepErrorKind::NonFinite => f.write_str(": state became non-finite"),
        }
    }
}

impl core::error::Error for StepError {}

/// Everything known about one agent at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AgentSample {
    pub state: QuadState,
    pub input: ControlInput,
    pub xy: XYObserverState,
    pub z: ZObserverState,
    pub reference: TrackingRef,
    pub chain: ErrorChain,
    pub ux: f64,
    pub uy: f64,
    /// `pᵢ − p₀ − Δᵢ`.
    pub formation_error: [f64; 3],
}

impl AgentSample {
    pub fn formation_error_norm(&self) -> f64 {
        norm3(self.formation_error)
    }
}

/// Full evaluation of the coupled system at `(t, y)`.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub leader: LeaderSample,
    pub agents: Vec<AgentSample>,
    pub coupling: Vec<Vec2>,
    /// Fourth derivative of each planar observer.
    pub zeta4: Vec<Vec2>,
    pub z_rates: Vec<ZObserverRates>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub agents: Vec<AgentSample>,
    pub coupling: Vec<Vec2>,
    /// Planar observer Lyapunov function.
    pub lyapunov: f64,
    pub envelope: f64,
    /// `‖c − (H ⊗ I₂) s‖`.
    pub stacked_residual: f64,
}

/// Extremes accumulated at every integration step, not just recorded ones.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunStats {
    pub steps: usize,
    pub min_ubar: f64,
    pub max_abs_phi: f64,
    pub max_abs_theta: f64,
    pub max_abs_zdd_ref: f64,
    pub max_stacked_residual: f64,
}

impl Default for RunStats {
    fn default() -> Self {
        Self {
            steps: 0,
            min_ubar: f64::INFINITY,
            max_abs_phi: 0.0,
            max_abs_theta: 0.0,
            max_abs_zdd_ref: 0.0,
            max_stacked_residual: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub n_agents: usize,
    pub dt: f64,
    pub record_stride: usize,
    pub samples: Vec<TraceSample>,
    pub stats: RunStats,
    /// Joint state at the last time reached.
    pub final_state: Vec<f64>,
}

impl Trace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }
}

/// A run that stopped early. The partial trace covers everything up to the
/// last successfully evaluated step.
#[derive(Clone, Debug)]
pub struct RunAbort {
    pub trace: Trace,
    pub error: StepError,
}

impl core::fmt::Display for RunAbort {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "run aborted at {}", self.error)
    }
}

impl core::error::Error for RunAbort {}

#[inline]
fn norm3(v: [f64; 3]) -> f64 {
    sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
}

/// Agent-level pieces of a joint state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Unpacked {
    pub quads: Vec<QuadState>,
    /// `ζ, ζ̇, ζ̈` of every planar observer.
    pub xy_lower: Vec<[Vec2; 3]>,
    pub zs: Vec<ZObserverState>,
    pub coupling: Vec<Vec2>,
}

/// A validated scenario plus the graph and bound constants derived from it.
#[derive(Clone, Debug)]
pub struct Simulation {
    scenario: Scenario,
    h: SymMatrix,
    lambda_min_h: f64,
    sigma: SigmaBounds,
    envelope: Envelope,
    radau: RadauIIA,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let h = scenario.graph.h_matrix();
        let lambda_min_h = h.min_eigenvalue();
        let sigma = scenario.sigma_bounds();
        let mut sim = Self {
            envelope: Envelope::new(0.0, 0.0, 0.0, 0.0, 0, 0.0, 0.0, 0.0),
            scenario,
            h,
            lambda_min_h,
            sigma,
            radau: RadauIIA::new(),
        };
        let c = sim.unpack(&sim.initial_state()).coupling;
        let w0 = lyapunov_value(&c, &sim.h).expect("validated graph has positive definite H");
        let o = &sim.scenario.observer_gains;
        sim.envelope = Envelope::new(
            w0,
            o.g4,
            lambda_min_h,
            o.gamma,
            sim.scenario.n_agents(),
            sigma.x,
            sigma.y,
            o.lambda,
        );
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn h_matrix(&self) -> &SymMatrix {
        &self.h
    }

    pub fn lambda_min_h(&self) -> f64 {
        self.lambda_min_h
    }

    pub fn sigma(&self) -> SigmaBounds {
        self.sigma
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    fn coupling_offset(&self) -> usize {
        self.scenario.n_agents() * AGENT_STRIDE
    }

    pub fn state_len(&self) -> usize {
        self.coupling_offset() + 2 * self.scenario.n_agents()
    }

    /// Vehicles at their initial states; each observer starts at rest on its
    /// own vehicle's position.
    pub fn initial_state(&self) -> Vec<f64> {
        let sc = &self.scenario;
        let mut y = vec![0.0; self.state_len()];
        let mut stacks = Vec::with_capacity(sc.n_agents());
        for (i, s) in sc.initial.iter().enumerate() {
            let base = i * AGENT_STRIDE;
            y[base..base + XY_OFFSET].copy_from_slice(&s.to_array());
            y[base + XY_OFFSET] = s.x;
            y[base + XY_OFFSET + 1] = s.y;
            let z = ZObserverState::at_rest(s.z);
            y[base + Z_OFFSET..base + AGENT_STRIDE].copy_from_slice(&[z.z_d, z.zdot_d, z.z_a, z.zdot_a, z.z_b]);
            stacks.push(XYObserverState::at_rest(Vec2::new(s.x, s.y)));
        }
        let c = observer::coupling(&stacks, &sc.leader.evaluate(0.0), &sc.graph, &sc.observer_gains);
        self.write_coupling(&mut y, &c);
        y
    }

    fn write_coupling(&self, y: &mut [f64], c: &[Vec2]) {
        let off = self.coupling_offset();
        for (i, ci) in c.iter().enumerate() {
            y[off + 2 * i] = ci.x;
            y[off + 2 * i + 1] = ci.y;
        }
    }

    /// Inverse of [`Simulation::unpack`].
    pub fn pack(&self, parts: &Unpacked) -> Vec<f64> {
        let mut y = vec![0.0; self.state_len()];
        for (i, chunk) in y[..self.coupling_offset()].chunks_exact_mut(AGENT_STRIDE).enumerate() {
            chunk[..XY_OFFSET].copy_from_slice(&parts.quads[i].to_array());
            let [a, b, c] = parts.xy_lower[i];
            chunk[XY_OFFSET..Z_OFFSET].copy_from_slice(&[a.x, a.y, b.x, b.y, c.x, c.y]);
            let z = &parts.zs[i];
            chunk[Z_OFFSET..].copy_from_slice(&[z.z_d, z.zdot_d, z.z_a, z.zdot_a, z.z_b]);
        }
        self.write_coupling(&mut y, &parts.coupling);
        y
    }

    pub fn unpack(&self, y: &[f64]) -> Unpacked {
        let n = self.scenario.n_agents();
        let off = self.coupling_offset();
        let mut out = Unpacked {
            quads: Vec::with_capacity(n),
            xy_lower: Vec::with_capacity(n),
            zs: Vec::with_capacity(n),
            coupling: y[off..off + 2 * n].chunks_exact(2).map(|v| Vec2::new(v[0], v[1])).collect(),
        };
        for chunk in y[..off].chunks_exact(AGENT_STRIDE) {
            out.quads.push(QuadState::from_slice(&chunk[..XY_OFFSET]));
            let v = &chunk[XY_OFFSET..Z_OFFSET];
            out.xy_lower
                .push([Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3]), Vec2::new(v[4], v[5])]);
            let z = &chunk[Z_OFFSET..];
            out.zs.push(ZObserverState {
                z_d: z[0],
                zdot_d: z[1],
                z_a: z[2],
                zdot_a: z[3],
                z_b: z[4],
            });
        }
        out
    }

    /// Reference handed to agent `i` under the configured mode.
    fn reference_for(
        &self,
        leader: &LeaderSample,
        xy: &XYObserverState,
        xy4: Vec2,
        z: &ZObserverState,
    ) -> TrackingRef {
        match self.scenario.reference {
            ReferenceMode::Observer => observer::observer_to_tracking_ref(xy, xy4, z, &self.scenario.observer_gains),
            ReferenceMode::Ideal => {
                let d = &leader.derivs;
                TrackingRef {
                    x: [d[0][0], d[1][0], d[2][0], d[3][0], d[4][0]],
                    y: [d[0][1], d[1][1], d[2][1], d[3][1], d[4][1]],
                    z: [d[0][2], d[1][2], d[2][2], d[3][2], d[4][2]],
                }
            }
        }
    }

    pub fn evaluate(&self, t: f64, y: &[f64]) -> Result<Snapshot, StepError> {
        let sc = &self.scenario;
        let o = &sc.observer_gains;
        let observer_err = |e| StepError {
            time: t,
            agent: None,
            kind: StepErrorKind::Observer(e),
        };
        if !(t >= 0.0) {
            return Err(observer_err(ObserverError::NegativeTime(t)));
        }
        let parts = self.unpack(y);
        let leader = sc.leader.evaluate(t);
        let xys = observer::stacks_from_coupling(&parts.xy_lower, &parts.coupling, &self.h, &leader, o)
            .map_err(|e| observer_err(ObserverError::Reconstruct(e)))?;
        let zeta4: Vec<Vec2> = xys
            .iter()
            .zip(&parts.coupling)
            .map(|(st, &c)| observer::fourth_derivative(&st.zeta, c, o, t))
            .collect();
        let z_rates = observer::z_observer_derivative(&parts.zs, leader.z(0), &sc.graph, o);
        let p0 = leader.position();
        let mut agents = Vec::with_capacity(parts.quads.len());
        for (i, s) in parts.quads.iter().enumerate() {
            let reference = self.reference_for(&leader, &xys[i], zeta4[i], &parts.zs[i]);
            let out = controller::compute(s, &reference, sc.deltas[i], &sc.controller_gains, sc.gravity).map_err(
                |e| StepError {
                    time: t,
                    agent: Some(i),
                    kind: StepErrorKind::Controller(e),
                },
            )?;
            let d = sc.deltas[i];
            agents.push(AgentSample {
                state: *s,
                input: out.input,
                xy: xys[i],
                z: parts.zs[i],
                reference,
                chain: out.chain,
                ux: out.ux,
                uy: out.uy,
                formation_error: [s.x - p0[0] - d[0], s.y - p0[1] - d[1], s.z - p0[2] - d[2]],
            });
        }
        Ok(Snapshot {
            t,
            leader,
            agents,
            coupling: parts.coupling,
            zeta4,
            z_rates,
        })
    }

    /// Writes the joint state derivative implied by `snap`.
    pub fn fill_derivative(&self, snap: &Snapshot, dy: &mut [f64]) {
        let sc = &self.scenario;
        let g = sc.gravity;
        for (i, (a, zr)) in snap.agents.iter().zip(&snap.z_rates).enumerate() {
            let out = &mut dy[i * AGENT_STRIDE..(i + 1) * AGENT_STRIDE];
            out[..XY_OFFSET].copy_from_slice(&plant::state_derivative(&a.state, &a.input, g).to_array());
            let zeta = &a.xy.zeta;
            out[XY_OFFSET..Z_OFFSET].copy_from_slice(&[zeta[1].x, zeta[1].y, zeta[2].x, zeta[2].y, zeta[3].x, zeta[3].y]);
            out[Z_OFFSET..].copy_from_slice(&[a.z.zdot_d, zr.zdd_d, a.z.zdot_a, zr.zdd_a, zr.zd_b]);
        }
        let o = &sc.observer_gains;
        let pulled: Vec<Vec2> = snap.coupling.iter().map(|&c| observer::correction(c, o, snap.t)).collect();
        let forcing = observer::leader_sliding_rate(&snap.leader, o);
        let hq = self.h.kron_i2_mul(&pulled);
        let rates: Vec<Vec2> = hq
            .iter()
            .enumerate()
            .map(|(i, &v)| if sc.graph.leader_link(i) { -v - forcing } else { -v })
            .collect();
        self.write_coupling(dy, &rates);
    }

    pub fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), StepError> {
        let snap = self.evaluate(t, y)?;
        self.fill_derivative(&snap, dy);
        Ok(())
    }

    /// Advances the couplings alone from `t` to `t + h`.
    pub fn advance_coupling(&self, t: f64, h: f64, c: &[Vec2]) -> Result<Vec<Vec2>, StepError> {
        let sc = &self.scenario;
        let mut out = c.to_vec();
        for axis in 0..2 {
            let sys = CouplingAxis::new(&self.h, &sc.graph, &sc.leader, &sc.observer_gains, axis);
            let mut v: Vec<f64> = c.iter().map(|ci| if axis == 0 { ci.x } else { ci.y }).collect();
            self.radau.step(&sys, t, h, &mut v).map_err(|e| StepError {
                time: t,
                agent: None,
                kind: StepErrorKind::Observer(ObserverError::CouplingStep(e)),
            })?;
            for (o, vi) in out.iter_mut().zip(v) {
                if axis == 0 {
                    o.x = vi;
                } else {
                    o.y = vi;
                }
            }
        }
        Ok(out)
    }
}

impl Simulation {
    fn record(&self, snap: &Snapshot) -> TraceSample {
        let lyapunov = lyapunov_value(&snap.coupling, &self.h).unwrap_or(f64::NAN);
        TraceSample {
            t: snap.t,
            agents: snap.agents.clone(),
            coupling: snap.coupling.clone(),
            lyapunov,
            envelope: self.envelope.bound(snap.t),
            stacked_residual: self.stacked_residual(snap),
        }
    }

    /// `‖c − (H ⊗ I₂) s‖` with both sides evaluated from the observer stacks:
    /// the neighbor-sum coupling against the stacked sliding form.
    fn stacked_residual(&self, snap: &Snapshot) -> f64 {
        let o = &self.scenario.observer_gains;
        let stacks: Vec<XYObserverState> = snap.agents.iter().map(|a| a.xy).collect();
        let local = observer::coupling(&stacks, &snap.leader, &self.scenario.graph, o);
        let hs = self.h.kron_i2_mul(&observer::sliding_variable(&stacks, &snap.leader, o));
        let sq: f64 = local
            .iter()
            .zip(&hs)
            .map(|(c, h)| {
                let d = *c - *h;
                d.dot(d)
            })
            .sum();
        sqrt(sq)
    }

    fn update_stats(&self, stats: &mut RunStats, snap: &Snapshot) {
        for a in &snap.agents {
            stats.min_ubar = stats.min_ubar.min(a.chain.ubar[0]);
            stats.max_abs_phi = stats.max_abs_phi.max(abs(a.state.phi));
            stats.max_abs_theta = stats.max_abs_theta.max(abs(a.state.theta));
            stats.max_abs_zdd_ref = stats.max_abs_zdd_ref.max(abs(a.reference.z[2]));
        }
        stats.max_stacked_residual = stats.max_stacked_residual.max(self.stacked_residual(snap));
    }

    /// Advances the joint state by one step, given the slope at `(t, y)`.
    fn advance(&self, rk: &mut Rk4, t: f64, y: &[f64], slope: &[f64]) -> Result<Vec<f64>, StepError> {
        let dt = self.scenario.dt;
        let mut next = y.to_vec();
        if self.scenario.coupling_integrator == CouplingIntegrator::Explicit {
            rk.step_with_slope(t, dt, &mut next, slope, |tau, ys, dy| self.derivative(tau, ys, dy))?;
            return self.finite_or_error(next, t + dt);
        }
        let c0 = self.unpack(y).coupling;
        let c_mid = self.advance_coupling(t, 0.5 * dt, &c0)?;
        let c_end = self.advance_coupling(t + 0.5 * dt, 0.5 * dt, &c_mid)?;
        let mut stage = y.to_vec();
        rk.step_with_slope(t, dt, &mut next, slope, |tau, ys, dy| {
            stage.copy_from_slice(ys);
            let c = if tau < t + 0.25 * dt {
                &c0
            } else if tau < t + 0.75 * dt {
                &c_mid
            } else {
                &c_end
            };
            self.write_coupling(&mut stage, c);
            self.derivative(tau, &stage, dy)
        })?;
        self.write_coupling(&mut next, &c_end);
        self.finite_or_error(next, t + dt)
    }

    fn finite_or_error(&self, y: Vec<f64>, time: f64) -> Result<Vec<f64>, StepError> {
        if y.iter().all(|v| v.is_finite()) {
            Ok(y)
        } else {
            Err(StepError {
                time,
                agent: None,
                kind: StepErrorKind::NonFinite,
            })
        }
    }

    /// One step of the coupled system from `(t, y)`.
    pub fn step(&self, y: &[f64], t: f64) -> Result<Vec<f64>, StepError> {
        let mut slope = vec![0.0; y.len()];
        self.derivative(t, y, &mut slope)?;
        self.advance(&mut Rk4::new(y.len()), t, y, &slope)
    }

    /// Integrates to `t_final`, recording every `record_stride` steps and at the end.
    #[allow(clippy::result_large_err)]
    pub fn run(&self) -> Result<Trace, RunAbort> {
        let sc = &self.scenario;
        let steps = sc.steps();
        let mut trace = Trace {
            n_agents: sc.n_agents(),
            dt: sc.dt,
            record_stride: sc.record_stride,
            samples: Vec::with_capacity(steps / sc.record_stride + 2),
            stats: RunStats::default(),
            final_state: Vec::new(),
        };
        let mut y = self.initial_state();
        let mut rk = Rk4::new(y.len());
        let mut slope = vec![0.0; y.len()];
        for k in 0..=steps {
            let t = k as f64 * sc.dt;
            let snap = match self.evaluate(t, &y) {
                Ok(s) => s,
                Err(error) => {
                    trace.final_state = y;
                    return Err(RunAbort { trace, error });
                }
            };
            self.update_stats(&mut trace.stats, &snap);
            if k % sc.record_stride == 0 || k == steps {
                trace.samples.push(self.record(&snap));
            }
            if k == steps {
                break;
            }
            self.fill_derivative(&snap, &mut slope);
            match self.advance(&mut rk, t, &y, &slope) {
                Ok(next) => y = next,
                Err(error) => {
                    trace.final_state = y;
                    return Err(RunAbort { trace, error });
                }
            }
            trace.stats.steps += 1;
        }
        trace.final_state = y;
        Ok(trace)
    }
}
