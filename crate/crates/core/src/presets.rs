//! The two reference experiments: four followers holding a 40 m square
//! around either a circling or a hovering leader.

use alloc::vec;
use core::f64::consts::PI;

use crate::controller::ControllerGains;
use crate::graph::CommGraph;
use crate::leader::LeaderTrajectory;
use crate::observer::ObserverGains;
use crate::plant::QuadState;
use crate::sim::{CouplingIntegrator, ReferenceMode, Scenario};
use crate::STANDARD_GRAVITY;

pub const DEFAULT_DT: f64 = 0.005;
pub const DEFAULT_T_FINAL: f64 = 200.0;
pub const DEFAULT_RECORD_STRIDE: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnknownPreset(pub u8);

impl core::fmt::Display for UnknownPreset {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "unknown preset {}; available presets are 1 and 2", self.0)
    }
}

impl core::error::Error for UnknownPreset {}

/// Ring 1-2-3-4-1 with only agent 1 hearing the leader.
pub fn reference_graph() -> CommGraph {
    CommGraph::ring(4, &[true, false, false, false]).expect("ring of four is valid")
}

fn common(leader: LeaderTrajectory) -> Scenario {
    Scenario {
        graph: reference_graph(),
        leader,
        deltas: vec![
            [20.0, 20.0, 0.0],
            [-20.0, 20.0, 0.0],
            [-20.0, -20.0, 0.0],
            [20.0, -20.0, 0.0],
        ],
        controller_gains: ControllerGains::REFERENCE,
        observer_gains: ObserverGains::REFERENCE,
        initial: vec![
            QuadState::at_rest([-10.0, 12.0, 0.0], PI / 8.0),
            QuadState::at_rest([40.0, -12.0, 5.0], PI / 2.0),
            QuadState::at_rest([20.0, 10.0, 6.0], PI),
            QuadState::at_rest([-20.0, 45.0, 7.0], PI / 5.0),
        ],
        dt: DEFAULT_DT,
        t_final: DEFAULT_T_FINAL,
        record_stride: DEFAULT_RECORD_STRIDE,
        gravity: STANDARD_GRAVITY,
        reference: ReferenceMode::Observer,
        coupling_integrator: CouplingIntegrator::Implicit,
    }
}

/// Leader circling at 100 m radius, 0.1 rad/s, 100 m altitude.
pub fn case1() -> Scenario {
    common(LeaderTrajectory::Circle {
        radius: 100.0,
        omega: 0.1,
        altitude: 100.0,
    })
}

/// Leader hovering at `[0, 0, 50]`.
pub fn case2() -> Scenario {
    common(LeaderTrajectory::Fixed { point: [0.0, 0.0, 50.0] })
}

pub fn preset(case: u8) -> Result<Scenario, UnknownPreset> {
    match case {
        1 => Ok(case1()),
        2 => Ok(case2()),
        other => Err(UnknownPreset(other)),
    }
}
