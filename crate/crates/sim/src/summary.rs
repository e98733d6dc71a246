use serde::Serialize;

use formation_core::leader::SigmaBounds;
use formation_core::lyapunov::Envelope;
use formation_core::monitor::{self, max_formation_error, MonitorReport};
use formation_core::sim::{RunStats, StepError};
use formation_core::{ReferenceMode, Simulation, Trace};

#[derive(Debug, Serialize)]
pub struct AgentFinal {
    pub agent: usize,
    pub formation_error: [f64; 3],
    pub formation_error_norm: f64,
    pub psi: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub completed: bool,
    /// Diagnostic of the failing step when the run stopped early.
    pub abort: Option<String>,
    pub reference: ReferenceMode,
    pub dt: f64,
    pub t_final: f64,
    pub t_reached: f64,
    pub samples: usize,
    pub lambda_min_h: f64,
    pub sigma: SigmaBounds,
    pub envelope: Envelope,
    pub stats: RunStats,
    pub max_formation_error: f64,
    pub final_agents: Vec<AgentFinal>,
    pub monitors: Option<MonitorReport>,
    pub all_monitors_passed: bool,
}

impl Summary {
    pub fn new(sim: &Simulation, trace: &Trace, abort: Option<&StepError>) -> Self {
        let sc = sim.scenario();
        let last = trace.last();
        let monitors = last.map(|_| monitor::monitors(trace, sim));
        let final_agents = last
            .map(|s| {
                s.agents
                    .iter()
                    .enumerate()
                    .map(|(i, a)| AgentFinal {
                        agent: i + 1,
                        formation_error: a.formation_error,
                        formation_error_norm: a.formation_error_norm(),
                        psi: a.state.psi,
                    })
                    .collect()
            })
            .unwrap_or_default();
        Self {
            completed: abort.is_none(),
            abort: abort.map(|e| e.to_string()),
            reference: sc.reference,
            dt: sc.dt,
            t_final: sc.t_final,
            t_reached: last.map_or(0.0, |s| s.t),
            samples: trace.samples.len(),
            lambda_min_h: sim.lambda_min_h(),
            sigma: sim.sigma(),
            envelope: *sim.envelope(),
            stats: trace.stats,
            max_formation_error: last.map_or(f64::NAN, max_formation_error),
            final_agents,
            all_monitors_passed: abort.is_none() && monitors.as_ref().is_some_and(|m| m.all_passed()),
            monitors,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}
