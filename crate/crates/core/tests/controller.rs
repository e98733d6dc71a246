use formation_core::controller::{self, m_inverse, m_matrix, m_matrix_rate, ControlOutput};
use formation_core::integrator::Rk4;
use formation_core::plant::state_derivative;
use formation_core::{ControllerGains, Mat2, QuadState, TrackingRef, STANDARD_GRAVITY as G};
use proptest::prelude::*;

/// Reference whose every axis is a degree-6 polynomial in time, so all five
/// supplied derivative levels are mutually consistent.
#[derive(Clone, Copy, Debug)]
struct PolyRef {
    coeffs: [[f64; 7]; 3],
}

impl PolyRef {
    fn level(&self, axis: usize, k: usize, t: f64) -> f64 {
        let c = &self.coeffs[axis];
        let mut acc = 0.0;
        for i in (k..7).rev() {
            let falling: f64 = ((i - k + 1)..=i).map(|m| m as f64).product();
            acc = acc * t + c[i] * falling;
        }
        acc
    }

    fn at(&self, t: f64) -> TrackingRef {
        let mut r = TrackingRef::default();
        for k in 0..5 {
            r.x[k] = self.level(0, k, t);
            r.y[k] = self.level(1, k, t);
            r.z[k] = self.level(2, k, t);
        }
        r
    }
}

const DELTA: [f64; 3] = [20.0, -20.0, 0.0];

fn control(s: &QuadState, r: &PolyRef, t: f64) -> ControlOutput {
    controller::compute(s, &r.at(t), DELTA, &ControllerGains::REFERENCE, G).unwrap()
}

/// Closed-loop state at `t0 + offset`, integrated with small RK4 steps.
fn flow(s0: &QuadState, r: &PolyRef, t0: f64, offset: f64) -> QuadState {
    let n = 50;
    let h = offset / n as f64;
    let mut y = s0.to_array().to_vec();
    let mut rk = Rk4::new(12);
    for k in 0..n {
        let t = t0 + k as f64 * h;
        rk.step(t, h, &mut y, |t, y, dy| -> Result<(), ()> {
            let s = QuadState::from_slice(y);
            let u = control(&s, r, t).input;
            dy.copy_from_slice(&state_derivative(&s, &u, G).to_array());
            Ok(())
        })
        .unwrap();
    }
    QuadState::from_slice(&y)
}

/// Central difference of `probe` along the closed-loop trajectory through `s0` at `t0`.
fn along_flow(s0: &QuadState, r: &PolyRef, t0: f64, h: f64, probe: impl Fn(&ControlOutput) -> f64) -> f64 {
    let plus = flow(s0, r, t0, h);
    let minus = flow(s0, r, t0, -h);
    (probe(&control(&plus, r, t0 + h)) - probe(&control(&minus, r, t0 - h))) / (2.0 * h)
}

fn arb_state() -> impl Strategy<Value = QuadState> {
    (
        prop::array::uniform3(-5.0f64..5.0),
        prop::array::uniform3(-2.0f64..2.0),
        prop::array::uniform2(-0.6f64..0.6),
        -3.0f64..3.0,
        prop::array::uniform3(-0.5f64..0.5),
    )
        .prop_map(|(p, v, [phi, theta], psi, w)| QuadState {
            x: 20.0 + p[0],
            y: -20.0 + p[1],
            z: 50.0 + p[2],
            vx: v[0],
            vy: v[1],
            vz: v[2],
            phi,
            theta,
            psi,
            phidot: w[0],
            thetadot: w[1],
            psidot: w[2],
        })
}

fn arb_ref() -> impl Strategy<Value = PolyRef> {
    (
        prop::array::uniform7(-0.05f64..0.05),
        prop::array::uniform7(-0.05f64..0.05),
        prop::array::uniform7(-0.001f64..0.001),
    )
        .prop_map(|(x, y, z)| PolyRef { coeffs: [x, y, z] })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn m_times_inverse_is_identity(phi in -1.4f64..1.4, theta in -1.4f64..1.4) {
        let err = (m_matrix(phi, theta) * m_inverse(phi, theta)).max_abs_diff(Mat2::IDENTITY);
        prop_assert!(err < 1e-12, "phi={} theta={} err={}", phi, theta, err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn m_rate_matches_finite_difference(
        phi in -1.2f64..1.2,
        theta in -1.2f64..1.2,
        phidot in -2.0f64..2.0,
        thetadot in -2.0f64..2.0,
    ) {
        let h = 1e-6;
        let plus = m_matrix(phi + h * phidot, theta + h * thetadot);
        let minus = m_matrix(phi - h * phidot, theta - h * thetadot);
        let fd = (plus + minus.scale(-1.0)).scale(0.5 / h);
        let exact = m_matrix_rate(phi, theta, phidot, thetadot);
        let scale = 1.0 + exact.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(fd.max_abs_diff(exact) < 1e-6 * scale, "fd={:?} exact={:?}", fd, exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn error_chain_levels_are_successive_derivatives(s in arb_state(), r in arb_ref(), t in 0.0f64..1.0) {
        let h = 1e-3;
        let tol = 1e-5;
        let out = control(&s, &r, t);
        let c = out.chain;
        for level in 0..3 {
            let fx = along_flow(&s, &r, t, h, |o| o.chain.ex[level]);
            let fy = along_flow(&s, &r, t, h, |o| o.chain.ey[level]);
            let fz = along_flow(&s, &r, t, h, |o| o.chain.ez[level]);
            prop_assert!(close(fx, c.ex[level + 1], tol), "x level {}: {} vs {}", level, fx, c.ex[level + 1]);
            prop_assert!(close(fy, c.ey[level + 1], tol), "y level {}: {} vs {}", level, fy, c.ey[level + 1]);
            prop_assert!(close(fz, c.ez[level + 1], tol), "z level {}: {} vs {}", level, fz, c.ez[level + 1]);
        }
        for level in 0..2 {
            let fu = along_flow(&s, &r, t, h, |o| o.chain.ubar[level]);
            prop_assert!(close(fu, c.ubar[level + 1], tol), "ubar level {}: {} vs {}", level, fu, c.ubar[level + 1]);
        }
    }

    #[test]
    fn closed_loop_fourth_derivative_equals_outer_law(s in arb_state(), r in arb_ref(), t in 0.0f64..1.0) {
        let h = 1e-3;
        let out = control(&s, &r, t);
        let fx = along_flow(&s, &r, t, h, |o| o.chain.ex[3]);
        let fy = along_flow(&s, &r, t, h, |o| o.chain.ey[3]);
        prop_assert!(close(fx, out.ux, 1e-5), "{} vs {}", fx, out.ux);
        prop_assert!(close(fy, out.uy, 1e-5), "{} vs {}", fy, out.uy);
    }

    #[test]
    fn thrust_tilt_compensation(s in arb_state(), r in arb_ref()) {
        let out = control(&s, &r, 0.0);
        let expected = out.chain.ubar[0] / (s.theta.cos() * s.phi.cos());
        prop_assert!((out.input.u1 - expected).abs() < 1e-12 * expected);
    }
}

#[test]
fn forty_five_degree_pitch_thrust() {
    let s = QuadState {
        theta: core::f64::consts::FRAC_PI_4,
        z: 50.0,
        ..Default::default()
    };
    let r = TrackingRef {
        z: [50.0, 0.0, 0.0, 0.0, 0.0],
        ..Default::default()
    };
    let out = controller::compute(&s, &r, [0.0; 3], &ControllerGains::REFERENCE, G).unwrap();
    assert_eq!(out.chain.ubar[0], G);
    assert!((out.input.u1 - G * 2f64.sqrt()).abs() < 1e-12);
    assert!((out.input.u1 - 13.873).abs() < 1e-3);
}

#[test]
fn altitude_errors_converge_from_a_grid_of_starts() {
    // ë = −k1z tanh(ė + k2z e) − k3z tanh ė, from a deterministic spread of starts.
    let k = ControllerGains::REFERENCE;
    let mut rk = Rk4::new(2);
    for i in 0..10 {
        for j in 0..5 {
            let mut y = vec![-10.0 + 20.0 * i as f64 / 9.0, -10.0 + 20.0 * j as f64 / 4.0];
            for step in 0..20_000 {
                rk.step(step as f64 * 0.01, 0.01, &mut y, |_, y, dy| -> Result<(), ()> {
                    dy[0] = y[1];
                    dy[1] = controller::altitude_error_accel(y[0], y[1], &k);
                    let by_hand = -k.k1z * (y[1] + k.k2z * y[0]).tanh() - k.k3z * y[1].tanh();
                    assert!((dy[1] - by_hand).abs() < 1e-14);
                    Ok(())
                })
                .unwrap();
            }
            assert!(y[0].hypot(y[1]) < 1e-3, "{i},{j}: {y:?}");
        }
    }
}

#[test]
fn singular_attitude_is_reported() {
    let s = QuadState {
        theta: core::f64::consts::FRAC_PI_2,
        ..Default::default()
    };
    let err = controller::compute(&s, &TrackingRef::default(), [0.0; 3], &ControllerGains::REFERENCE, G).unwrap_err();
    assert!(matches!(err, controller::ControllerError::AttitudeSingularity { .. }));
}
