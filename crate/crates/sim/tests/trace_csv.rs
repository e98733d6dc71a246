use formation_core::presets::case1;
use formation_core::Simulation;
use formation_sim::trace_csv;

fn short_trace() -> formation_core::Trace {
    let mut sc = case1();
    sc.t_final = 3.0;
    Simulation::new(sc).unwrap().run().unwrap()
}

#[test]
fn column_count_for_four_agents() {
    assert_eq!(trace_csv::column_count(4), 1 + 4 * 26 + 2);
    assert_eq!(trace_csv::header(4).len(), 107);
}

#[test]
fn header_names_are_stable() {
    let h = trace_csv::header(2);
    let expected_agent1 = [
        "x_1", "y_1", "z_1", "xdot_1", "ydot_1", "zdot_1", "phi_1", "theta_1", "psi_1", "phidot_1", "thetadot_1",
        "psidot_1", "u1_1", "u2_1", "u3_1", "u4_1", "x_id_1", "y_id_1", "z_id_1", "xdot_id_1", "ydot_id_1",
        "zdot_id_1", "z_ia_1", "zdot_ia_1", "z_ib_1", "eta_norm_1",
    ];
    assert_eq!(h[0], "t");
    assert_eq!(&h[1..27], &expected_agent1);
    assert_eq!(h[27], "x_2");
    assert_eq!(&h[h.len() - 2..], &["W", "W_bound"]);
}

#[test]
fn values_read_back_bit_for_bit() {
    let trace = short_trace();
    let bytes = trace_csv::to_bytes(&trace);
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    assert_eq!(reader.headers().unwrap().len(), 107);
    let mut rows = 0;
    let mut last_t = f64::NEG_INFINITY;
    for (record, sample) in reader.records().zip(&trace.samples) {
        let record = record.unwrap();
        let parsed: Vec<f64> = record.iter().map(|f| f.parse().unwrap()).collect();
        let expected = trace_csv::row(sample);
        assert_eq!(parsed.len(), expected.len());
        for (a, b) in parsed.iter().zip(&expected) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(parsed[0] > last_t);
        last_t = parsed[0];
        rows += 1;
    }
    assert_eq!(rows, trace.samples.len());
}

#[test]
fn observer_and_error_columns_match_the_sample() {
    let trace = short_trace();
    let h = trace_csv::header(4);
    let s = trace.last().unwrap();
    let row = trace_csv::row(s);
    let col = |name: &str| row[h.iter().position(|c| c == name).unwrap()];
    let a = &s.agents[2];
    assert_eq!(col("x_id_3"), a.xy.zeta[0].x);
    assert_eq!(col("ydot_id_3"), a.xy.zeta[1].y);
    assert_eq!(col("z_id_3"), a.z.z_d);
    assert_eq!(col("z_ib_3"), a.z.z_b);
    assert_eq!(col("eta_norm_3"), a.formation_error_norm());
    assert_eq!(col("W"), s.lyapunov);
    assert_eq!(col("W_bound"), s.envelope);
}
