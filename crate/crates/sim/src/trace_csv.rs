//! Trace rows as CSV.
//!
//! Every number is written with Rust's shortest round-trip formatting, so a
//! value read back parses to the same bits and two identical runs give
//! byte-identical files.

use std::io::Write;

use formation_core::sim::{AgentSample, Trace, TraceSample};

const STATE_COLUMNS: [&str; 12] = [
    "x", "y", "z", "xdot", "ydot", "zdot", "phi", "theta", "psi", "phidot", "thetadot", "psidot",
];
const INPUT_COLUMNS: [&str; 4] = ["u1", "u2", "u3", "u4"];
const OBSERVER_COLUMNS: [&str; 9] = [
    "x_id", "y_id", "z_id", "xdot_id", "ydot_id", "zdot_id", "z_ia", "zdot_ia", "z_ib",
];

/// Columns written per agent.
pub const AGENT_COLUMNS: usize = STATE_COLUMNS.len() + INPUT_COLUMNS.len() + OBSERVER_COLUMNS.len() + 1;

pub fn column_count(n_agents: usize) -> usize {
    1 + n_agents * AGENT_COLUMNS + 2
}

/// `t`, then each agent's block suffixed with its 1-based index, then `W` and `W_bound`.
pub fn header(n_agents: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(column_count(n_agents));
    out.push("t".to_owned());
    for i in 1..=n_agents {
        for name in STATE_COLUMNS.iter().chain(&INPUT_COLUMNS).chain(&OBSERVER_COLUMNS) {
            out.push(format!("{name}_{i}"));
        }
        out.push(format!("eta_norm_{i}"));
    }
    out.push("W".to_owned());
    out.push("W_bound".to_owned());
    out
}

fn agent_values(a: &AgentSample, out: &mut Vec<f64>) {
    out.extend_from_slice(&a.state.to_array());
    let u = &a.input;
    out.extend_from_slice(&[u.u1, u.u2, u.u3, u.u4]);
    let [p, v, _, _] = a.xy.zeta;
    let z = &a.z;
    out.extend_from_slice(&[p.x, p.y, z.z_d, v.x, v.y, z.zdot_d, z.z_a, z.zdot_a, z.z_b]);
    out.push(a.formation_error_norm());
}

pub fn row(sample: &TraceSample) -> Vec<f64> {
    let mut out = Vec::with_capacity(column_count(sample.agents.len()));
    out.push(sample.t);
    for a in &sample.agents {
        agent_values(a, &mut out);
    }
    out.push(sample.lyapunov);
    out.push(sample.envelope);
    out
}

pub fn write<W: Write>(trace: &Trace, sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header(trace.n_agents))?;
    let mut fields = Vec::with_capacity(column_count(trace.n_agents));
    for s in &trace.samples {
        fields.clear();
        fields.extend(row(s).iter().map(|v| format!("{v:?}")));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_bytes(trace: &Trace) -> Vec<u8> {
    let mut buf = Vec::new();
    write(trace, &mut buf).expect("writing to memory cannot fail");
    buf
}
