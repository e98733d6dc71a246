use formation_core::plant::{state_derivative, translational_acceleration};
use formation_core::{ControlInput, QuadState, STANDARD_GRAVITY as G};
use proptest::prelude::*;

proptest! {
    #[test]
    fn thrust_magnitude_is_preserved(
        phi in -1.5f64..1.5,
        theta in -1.5f64..1.5,
        psi in -6.3f64..6.3,
        u1 in 0.0f64..40.0,
    ) {
        let s = QuadState { phi, theta, psi, ..Default::default() };
        let [ax, ay, az] = translational_acceleration(&s, u1, G);
        let lhs = ax * ax + ay * ay + (az + G) * (az + G);
        prop_assert!((lhs - u1 * u1).abs() <= 1e-10 * (u1 * u1).max(1.0));
    }

    #[test]
    fn kinematic_rows_copy_velocities_and_inputs(
        v in prop::array::uniform12(-10.0f64..10.0),
        u in prop::array::uniform4(-10.0f64..10.0),
    ) {
        let s = QuadState::from_slice(&v);
        let input = ControlInput { u1: u[0], u2: u[1], u3: u[2], u4: u[3] };
        let d = state_derivative(&s, &input, G);
        prop_assert_eq!([d.x, d.y, d.z], [s.vx, s.vy, s.vz]);
        prop_assert_eq!([d.phi, d.theta, d.psi], [s.phidot, s.thetadot, s.psidot]);
        prop_assert_eq!([d.phidot, d.thetadot, d.psidot], [u[1], u[2], u[3]]);
    }

    #[test]
    fn yaw_rotates_the_horizontal_thrust(
        phi in -1.0f64..1.0,
        theta in -1.0f64..1.0,
        psi in -3.0f64..3.0,
    ) {
        let level = QuadState { phi, theta, ..Default::default() };
        let turned = QuadState { psi, ..level };
        let [x0, y0, z0] = translational_acceleration(&level, 9.0, G);
        let [x1, y1, z1] = translational_acceleration(&turned, 9.0, G);
        let (c, s) = (psi.cos(), psi.sin());
        prop_assert!((x1 - (c * x0 - s * y0)).abs() < 1e-12);
        prop_assert!((y1 - (s * x0 + c * y0)).abs() < 1e-12);
        prop_assert_eq!(z0, z1);
    }
}

#[test]
fn hover_is_an_equilibrium_at_any_position_and_yaw() {
    let s = QuadState::at_rest([3.0, -4.0, 50.0], 1.2);
    let d = state_derivative(&s, &ControlInput::hover(G), G);
    assert_eq!(d.to_array(), [0.0; 12]);
}
