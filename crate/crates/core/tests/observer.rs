use formation_core::integrator::Rk4;
use formation_core::leader::LeaderTrajectory;
use formation_core::observer::{
    coupling, sliding_variable, stacks_from_coupling, xy_observer_terms, z_observer_derivative, z_reference_chain,
    CouplingAxis, ZObserverRates,
};
use formation_core::stiff::StiffSystem;
use formation_core::{CommGraph, LeaderSample, ObserverGains, Vec2, XYObserverState, ZObserverState};
use proptest::prelude::*;

const GAINS: ObserverGains = ObserverGains::REFERENCE;

fn pinned_ring() -> CommGraph {
    CommGraph::ring(4, &[true, false, false, false]).unwrap()
}

fn arb_vec2(scale: f64) -> impl Strategy<Value = Vec2> {
    (-scale..scale, -scale..scale).prop_map(|(x, y)| Vec2::new(x, y))
}

fn arb_stacks() -> impl Strategy<Value = Vec<XYObserverState>> {
    prop::collection::vec(
        (arb_vec2(100.0), arb_vec2(10.0), arb_vec2(1.0), arb_vec2(1.0)).prop_map(|(a, b, c, d)| XYObserverState {
            zeta: [a, b, c, d],
        }),
        4,
    )
}

fn arb_leader_sample() -> impl Strategy<Value = LeaderSample> {
    prop::array::uniform5(prop::array::uniform3(-50.0f64..50.0)).prop_map(|derivs| LeaderSample { derivs })
}

fn shifted_sample(l: &LeaderSample) -> LeaderSample {
    let mut derivs = [[0.0; 3]; 5];
    derivs[..4].copy_from_slice(&l.derivs[1..]);
    LeaderSample { derivs }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn neighbor_sums_equal_stacked_form(stacks in arb_stacks(), leader in arb_leader_sample()) {
        let g = pinned_ring();
        let c = coupling(&stacks, &leader, &g, &GAINS);
        let hs = g.h_matrix().kron_i2_mul(&sliding_variable(&stacks, &leader, &GAINS));
        let residual: f64 = c.iter().zip(&hs).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
        prop_assert!(residual < 1e-10, "{}", residual);
    }

    #[test]
    fn stacks_rebuilt_from_coupling(stacks in arb_stacks(), leader in arb_leader_sample()) {
        let g = pinned_ring();
        let c = coupling(&stacks, &leader, &g, &GAINS);
        let lower: Vec<[Vec2; 3]> = stacks.iter().map(|s| [s.zeta[0], s.zeta[1], s.zeta[2]]).collect();
        let rebuilt = stacks_from_coupling(&lower, &c, &g.h_matrix(), &leader, &GAINS).unwrap();
        for (a, b) in rebuilt.iter().zip(&stacks) {
            prop_assert!((a.zeta[3] - b.zeta[3]).norm() < 1e-9, "{:?} vs {:?}", a.zeta[3], b.zeta[3]);
            prop_assert_eq!(&a.zeta[..3], &b.zeta[..3]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coupling_rate_is_the_derivative_of_the_coupling(stacks in arb_stacks(), t in 0.0f64..200.0) {
        let g = pinned_ring();
        let h = g.h_matrix();
        let traj = LeaderTrajectory::circle(100.0, 0.1, 100.0).unwrap();
        let leader = traj.evaluate(t);
        let (accel, c) = xy_observer_terms(&stacks, &leader, &g, &GAINS, t).unwrap();
        // Differentiating every level once shifts each stack up by one.
        let moved: Vec<XYObserverState> = stacks
            .iter()
            .zip(&accel)
            .map(|(s, a)| XYObserverState { zeta: [s.zeta[1], s.zeta[2], s.zeta[3], *a] })
            .collect();
        let expected = coupling(&moved, &shifted_sample(&leader), &g, &GAINS);
        for axis in 0..2 {
            let sys = CouplingAxis::new(&h, &g, &traj, &GAINS, axis);
            let cv: Vec<f64> = c.iter().map(|v| if axis == 0 { v.x } else { v.y }).collect();
            let mut rate = vec![0.0; 4];
            sys.rhs(t, &cv, &mut rate);
            for i in 0..4 {
                let e = if axis == 0 { expected[i].x } else { expected[i].y };
                prop_assert!((rate[i] - e).abs() < 1e-9 * (1.0 + e.abs()), "axis {} agent {}: {} vs {}", axis, i, rate[i], e);
            }
        }
    }

    #[test]
    fn coupling_jacobian_matches_finite_difference(
        c in prop::array::uniform4(-2.0f64..2.0),
        t in 0.0f64..60.0,
    ) {
        let g = pinned_ring();
        let h = g.h_matrix();
        let traj = LeaderTrajectory::circle(100.0, 0.1, 100.0).unwrap();
        let sys = CouplingAxis::new(&h, &g, &traj, &GAINS, 0);
        let mut jac = vec![0.0; 16];
        sys.jacobian(t, &c, &mut jac);
        // Keep the probe on one side of every kink at c = 0.
        let step = 1e-6 * c.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())).min(1.0);
        prop_assume!(step > 1e-12);
        for j in 0..4 {
            let (mut up, mut down) = (c.to_vec(), c.to_vec());
            up[j] += step;
            down[j] -= step;
            let (mut fu, mut fd) = (vec![0.0; 4], vec![0.0; 4]);
            sys.rhs(t, &up, &mut fu);
            sys.rhs(t, &down, &mut fd);
            for i in 0..4 {
                let num = (fu[i] - fd[i]) / (2.0 * step);
                prop_assert!((num - jac[i * 4 + j]).abs() < 1e-5 * (1.0 + num.abs()), "({},{}) {} vs {}", i, j, num, jac[i * 4 + j]);
            }
        }
    }

    #[test]
    fn altitude_chain_levels_are_successive_derivatives(
        z_d in 0.0f64..100.0,
        zdot_d in -3.0f64..3.0,
        z_a in 0.0f64..100.0,
        zdot_a in -3.0f64..3.0,
        z_b in 0.0f64..100.0,
    ) {
        let g = CommGraph::new(1, &[], &[true]).unwrap();
        let z0 = 50.0;
        let start = ZObserverState { z_d, zdot_d, z_a, zdot_a, z_b };
        let flow = |offset: f64| {
            let n = 40;
            let h = offset / n as f64;
            let mut y = vec![z_d, zdot_d, z_a, zdot_a, z_b];
            let mut rk = Rk4::new(5);
            for k in 0..n {
                rk.step(k as f64 * h, h, &mut y, |_, y, dy| -> Result<(), ()> {
                    let z = ZObserverState { z_d: y[0], zdot_d: y[1], z_a: y[2], zdot_a: y[3], z_b: y[4] };
                    let r: ZObserverRates = z_observer_derivative(&[z], z0, &g, &GAINS)[0];
                    dy.copy_from_slice(&[z.zdot_d, r.zdd_d, z.zdot_a, r.zdd_a, r.zd_b]);
                    Ok(())
                })
                .unwrap();
            }
            let z = ZObserverState { z_d: y[0], zdot_d: y[1], z_a: y[2], zdot_a: y[3], z_b: y[4] };
            z_reference_chain(&z, &GAINS)
        };
        let h = 2e-4;
        let (plus, minus) = (flow(h), flow(-h));
        let chain = z_reference_chain(&start, &GAINS);
        for k in 0..4 {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            prop_assert!((fd - chain[k + 1]).abs() < 1e-6 * (1.0 + chain[k + 1].abs()), "level {}: {} vs {}", k, fd, chain[k + 1]);
        }
    }
}

#[test]
fn single_pinned_agent_hand_evaluation() {
    // One agent at rest at x = 2 with the leader resting at the origin.
    let g = CommGraph::new(1, &[], &[true]).unwrap();
    let stacks = [XYObserverState::at_rest(Vec2::new(2.0, 0.0))];
    let t = 5.0;
    let (accel, c) = xy_observer_terms(&stacks, &LeaderSample::default(), &g, &GAINS, t).unwrap();
    let c_expected = GAINS.g1 * 2.0;
    assert_eq!(c[0], Vec2::new(c_expected, 0.0));
    let floor = 15.0 * (-0.1f64 * t).exp();
    let expected = -GAINS.g4 * c_expected - 2.1 * c_expected / (c_expected + floor);
    assert!((accel[0].x - expected).abs() < 1e-15);
    assert_eq!(accel[0].y, 0.0);
}

#[test]
fn altitude_consensus_decays_at_the_graph_rate() {
    let g = pinned_ring();
    let lmin = g.h_matrix().min_eigenvalue();
    let z0 = 50.0;
    let start = [0.0, 5.0, 6.0, 7.0];
    let initial_dev: f64 = start.iter().map(|z| (z - z0) * (z - z0)).sum::<f64>().sqrt();
    let mut y = start.to_vec();
    let mut rk = Rk4::new(4);
    let dt = 0.01;
    for k in 1..=3000 {
        rk.step((k - 1) as f64 * dt, dt, &mut y, |_, y, dy| -> Result<(), ()> {
            let zs: Vec<ZObserverState> = y.iter().map(|&z_b| ZObserverState { z_b, ..Default::default() }).collect();
            for (d, r) in dy.iter_mut().zip(z_observer_derivative(&zs, z0, &g, &GAINS)) {
                *d = r.zd_b;
            }
            Ok(())
        })
        .unwrap();
        let t = k as f64 * dt;
        let dev: f64 = y.iter().map(|z| (z - z0) * (z - z0)).sum::<f64>().sqrt();
        assert!(dev <= initial_dev * (-GAINS.h6 * lmin * t).exp() * (1.0 + 1e-9), "t={t}");
    }
    assert!(y.iter().all(|z| (z - z0).abs() < 0.2));
}
