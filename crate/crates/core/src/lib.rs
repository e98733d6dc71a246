//! Leader-follower formation tracking for a team of quadrotors.
//!
//! Everything in this crate is pure computation over `alloc` collections: the
//! simplified rigid-body model, the non-regular feedback-linearization tracking
//! law, the distributed virtual-reference observers, the coupled fixed-step
//! integrator and the monitors that check each closed-loop guarantee on a
//! recorded trace. File formats, plotting and the command-line driver live in
//! the `formation-sim` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod controller;
pub mod graph;
pub mod hurwitz;
pub mod integrator;
pub mod leader;
pub mod linalg;
pub mod lyapunov;
pub mod math;
pub mod monitor;
pub mod observer;
pub mod plant;
pub mod presets;
pub mod sim;
pub mod stiff;

pub use controller::{ControlOutput, ControllerError, ControllerGains, ErrorChain, TrackingRef};
pub use graph::{Assumption3Report, CommGraph, GraphError};
pub use leader::{LeaderError, LeaderSample, LeaderTrajectory, SigmaBounds};
pub use linalg::SymMatrix;
pub use math::{Mat2, Vec2};
pub use monitor::MonitorReport;
pub use observer::{ObserverGains, XYObserverState, ZObserverState};
pub use plant::{ControlInput, QuadState};
pub use sim::{CouplingIntegrator, ReferenceMode, RunAbort, Scenario, ScenarioError, Simulation, Trace};

/// Default gravitational acceleration in m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;
