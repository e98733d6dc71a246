//! Static SVG figures: top-down paths, formation error norms and attitudes.

use std::path::Path;

use plotters::prelude::*;

use formation_core::{QuadState, Scenario, Trace};

pub const PATH_SVG: &str = "path.svg";
pub const ERROR_SVG: &str = "error_norm.svg";
pub const ATTITUDE_SVG: &str = "attitudes.svg";

const SIZE: (u32, u32) = (900, 700);

#[derive(Debug, thiserror::Error)]
#[error("plotting {file} failed: {message}")]
pub struct PlotError {
    pub file: &'static str,
    pub message: String,
}

fn agent_color(i: usize) -> RGBColor {
    const PALETTE: [RGBColor; 6] = [
        RGBColor(31, 119, 180),
        RGBColor(255, 127, 14),
        RGBColor(44, 160, 44),
        RGBColor(214, 39, 40),
        RGBColor(148, 103, 189),
        RGBColor(140, 86, 75),
    ];
    PALETTE[i % PALETTE.len()]
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

/// Writes all three figures into `dir`.
pub fn write_all(dir: &Path, scenario: &Scenario, trace: &Trace) -> Result<(), PlotError> {
    paths(&dir.join(PATH_SVG), scenario, trace).map_err(|e| PlotError {
        file: PATH_SVG,
        message: e.to_string(),
    })?;
    error_norms(&dir.join(ERROR_SVG), trace).map_err(|e| PlotError {
        file: ERROR_SVG,
        message: e.to_string(),
    })?;
    attitudes(&dir.join(ATTITUDE_SVG), trace).map_err(|e| PlotError {
        file: ATTITUDE_SVG,
        message: e.to_string(),
    })
}

type DrawResult = Result<(), Box<dyn std::error::Error>>;
type AngleOf = fn(&QuadState) -> f64;

fn paths(file: &Path, scenario: &Scenario, trace: &Trace) -> DrawResult {
    let leader: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .map(|s| {
            let p = scenario.leader.evaluate(s.t).position();
            (p[0], p[1])
        })
        .collect();
    let agent_paths: Vec<Vec<(f64, f64)>> = (0..trace.n_agents)
        .map(|i| trace.samples.iter().map(|s| (s.agents[i].state.x, s.agents[i].state.y)).collect())
        .collect();
    let all = || leader.iter().chain(agent_paths.iter().flatten());
    let (x0, x1) = bounds(all().map(|p| p.0));
    let (y0, y1) = bounds(all().map(|p| p.1));

    let root = SVGBackend::new(file, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Paths (top view)", ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart.configure_mesh().x_desc("x [m]").y_desc("y [m]").draw()?;
    chart
        .draw_series(LineSeries::new(leader.iter().copied(), BLACK.stroke_width(2)))?
        .label("leader")
        .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], BLACK));
    for (i, path) in agent_paths.iter().enumerate() {
        let color = agent_color(i);
        chart
            .draw_series(LineSeries::new(path.iter().copied(), color))?
            .label(format!("agent {}", i + 1))
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
    }
    // Start points.
    let starts = leader.first().map(|p| (*p, BLACK)).into_iter().chain(
        agent_paths.iter().enumerate().filter_map(|(i, p)| p.first().map(|s| (*s, agent_color(i)))),
    );
    chart.draw_series(starts.map(|(p, color)| Cross::new(p, 6, color.stroke_width(2))))?;
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
    root.present()?;
    Ok(())
}

fn error_norms(file: &Path, trace: &Trace) -> DrawResult {
    let series: Vec<Vec<(f64, f64)>> = (0..trace.n_agents)
        .map(|i| trace.samples.iter().map(|s| (s.t, s.agents[i].formation_error_norm())).collect())
        .collect();
    let (t0, t1) = bounds(trace.times());
    let (_, top) = bounds(series.iter().flatten().map(|p| p.1));

    let root = SVGBackend::new(file, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Formation error norm", ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(t0..t1, 0.0..top)?;
    chart.configure_mesh().x_desc("t [s]").y_desc("|p_i - p_0 - delta_i| [m]").draw()?;
    for (i, s) in series.iter().enumerate() {
        let color = agent_color(i);
        chart
            .draw_series(LineSeries::new(s.iter().copied(), color))?
            .label(format!("agent {}", i + 1))
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
    }
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
    root.present()?;
    Ok(())
}

fn attitudes(file: &Path, trace: &Trace) -> DrawResult {
    let root = SVGBackend::new(file, (SIZE.0, 900)).into_drawing_area();
    root.fill(&WHITE)?;
    let panels = root.split_evenly((3, 1));
    let (t0, t1) = bounds(trace.times());
    let pick: [(&str, AngleOf); 3] = [("roll [deg]", |s| s.phi), ("pitch [deg]", |s| s.theta), ("yaw [deg]", |s| s.psi)];
    for (panel, (name, angle)) in panels.iter().zip(pick) {
        let series: Vec<Vec<(f64, f64)>> = (0..trace.n_agents)
            .map(|i| {
                trace
                    .samples
                    .iter()
                    .map(|s| (s.t, angle(&s.agents[i].state).to_degrees()))
                    .collect()
            })
            .collect();
        let (lo, hi) = bounds(series.iter().flatten().map(|p| p.1));
        let mut chart = ChartBuilder::on(panel)
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(55)
            .build_cartesian_2d(t0..t1, lo..hi)?;
        chart.configure_mesh().x_desc("t [s]").y_desc(name).draw()?;
        for (i, s) in series.iter().enumerate() {
            let color = agent_color(i);
            chart
                .draw_series(LineSeries::new(s.iter().copied(), color))?
                .label(format!("agent {}", i + 1))
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
        }
        chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
    }
    root.present()?;
    Ok(())
}
