//! Invariants checked over random configurations, parameters and strings.

use std::f64::consts::{PI, TAU};

use jacobi_orbits::geometry::{arc_length, christoffel, jacobi_metric, reconstruct_velocity, JacobiMetric, Metric, SphereChartMetric};
use jacobi_orbits::integrate::{rk4_step, simulate};
use jacobi_orbits::model::{accel, total_energy, DoublePendulum, MechParams, MechanicalSystem, State};
use jacobi_orbits::relaxation::{explicit_stability_bound, relax, relax_step_explicit, winding_number, DiscreteString, RelaxOptions};
use jacobi_orbits::Vec2;
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

fn pendulum() -> impl Strategy<Value = DoublePendulum<f64>> {
    (0.2..5.0, 0.2..5.0, 0.2..3.0, 0.2..3.0, 1.0..20.0)
        .prop_map(|(m1, m2, l1, l2, grav)| DoublePendulum::new(MechParams { m1, m2, l1, l2, grav }).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mass_matrix_is_symmetric_positive_definite(sys in pendulum(), q1 in angle(), q2 in angle()) {
        let m = sys.mass_matrix(&Vec2::new(q1, q2));
        prop_assert_eq!(m.0[0][1], m.0[1][0]);
        prop_assert!(m.0[0][0] > 0.0 && m.det() > 0.0);
        prop_assert!(m.sym_eigenvalues()[0] >= sys.min_mass_eigenvalue() * (1.0 - 1e-9));
    }

    #[test]
    fn gravity_vector_is_potential_gradient(sys in pendulum(), q1 in angle(), q2 in angle()) {
        let q = Vec2::new(q1, q2);
        let h = 1e-6;
        let g = sys.gravity_vector(&q);
        for k in 0..2 {
            let mut d = Vec2::zero();
            d[k] = h;
            let fd = (sys.potential(&(q + d)) - sys.potential(&(q - d))) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + g[k].abs()));
        }
    }

    #[test]
    fn mass_rate_minus_twice_coriolis_is_skew(sys in pendulum(), q1 in angle(), q2 in angle(), v1 in -5.0..5.0, v2 in -5.0..5.0) {
        let (q, qd) = (Vec2::new(q1, q2), Vec2::new(v1, v2));
        let dm = sys.mass_matrix_partials(&q);
        let c = sys.coriolis_matrix(&q, &qd);
        let n = |i: usize, j: usize| dm[0].0[i][j] * qd[0] + dm[1].0[i][j] * qd[1] - 2.0 * c.0[i][j];
        prop_assert!((n(0, 1) + n(1, 0)).abs() <= 1e-9);
        prop_assert!(n(0, 0).abs() <= 1e-9 && n(1, 1).abs() <= 1e-9);
    }

    #[test]
    fn jacobi_metric_is_conformal_to_inertia(q1 in angle(), q2 in angle(), margin in 0.1f64..50.0) {
        let sys = DoublePendulum::<f64>::default();
        let q = Vec2::new(q1, q2);
        let e = sys.potential(&q) + margin;
        let g = jacobi_metric(&q, e, &sys).g;
        let m = sys.mass_matrix(&q);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((g.0[i][j] - 2.0 * margin * m.0[i][j]).abs() <= 1e-9 * g.max_abs());
            }
        }
    }

    #[test]
    fn christoffel_symbols_are_symmetric(q1 in angle(), q2 in angle(), margin in 0.5..50.0) {
        let sys = DoublePendulum::<f64>::default();
        let q = Vec2::new(q1, q2);
        let e = sys.potential(&q) + margin;
        let c = christoffel(&JacobiMetric::new(&sys, e), &q).unwrap();
        for a in 0..2 {
            prop_assert!((c.gamma[a][0][1] - c.gamma[a][1][0]).abs() <= 1e-12 * (1.0 + c.max_abs()));
        }
    }

    #[test]
    fn reconstructed_velocity_has_requested_energy(
        q1 in angle(), q2 in angle(), margin in 0.01..50.0, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0,
    ) {
        prop_assume!(t1.abs() + t2.abs() > 1e-3);
        let sys = DoublePendulum::<f64>::default();
        let q = Vec2::new(q1, q2);
        let e = sys.potential(&q) + margin;
        let s = reconstruct_velocity(&q, &Vec2::new(t1, t2), e, &sys).unwrap();
        prop_assert!((total_energy(&sys, &s) - e).abs() <= 1e-10 * (1.0 + e.abs()));
        prop_assert!(s.qd.dot(&Vec2::new(t1, t2)) > 0.0);
    }

    #[test]
    fn length_is_reversal_invariant(a in angle(), b in angle(), c in angle(), d in angle(), margin in 1.0..30.0) {
        let sys = DoublePendulum::<f64>::default();
        let s = DiscreteString::open_line(Vec2::new(a, b) * 0.3, Vec2::new(c, d) * 0.3, 40).unwrap();
        let e = s.vertices().iter().map(|q| sys.potential(q)).fold(f64::MIN, f64::max) + margin;
        let m = JacobiMetric::new(&sys, e);
        let fwd = arc_length(&s, &m).length;
        let back = arc_length(&s.reversed(), &m).length;
        prop_assert!((fwd - back).abs() <= 1e-12 * fwd);
    }

    #[test]
    fn winding_survives_lattice_shifts(a in -3i32..=3, b in -3i32..=3, k1 in -2i32..=2, k2 in -2i32..=2, phase in angle()) {
        prop_assume!((a, b) != (0, 0));
        let s = DiscreteString::<f64>::closed_loop((a, b), 120, None).unwrap();
        let shifted = s.translated(Vec2::new(k1 as f64 * TAU + phase, k2 as f64 * TAU));
        prop_assert_eq!(winding_number(&s).unwrap().class, (a, b));
        prop_assert_eq!(winding_number(&shifted).unwrap().class, (a, b));
    }

    #[test]
    fn explicit_step_does_not_lengthen(amp in 0.05..0.5, harmonic in 1u32..4, margin in 5.0..40.0) {
        let sys = DoublePendulum::<f64>::default();
        let verts: Vec<Vec2<f64>> = (0..60)
            .map(|k| {
                let u = k as f64 / 59.0;
                Vec2::new(-0.5 + u, 0.3 - 0.6 * u) + Vec2::new(0.0, amp * (harmonic as f64 * PI * u).sin())
            })
            .collect();
        let s = DiscreteString::open(verts).unwrap();
        let e = s.vertices().iter().map(|q| sys.potential(q)).fold(f64::MIN, f64::max) + margin;
        let m = JacobiMetric::new(&sys, e);
        let dt = 0.5 * explicit_stability_bound(&s, &m);
        let next = relax_step_explicit(&s, &m, dt).unwrap();
        prop_assert!(arc_length(&next, &m).length <= arc_length(&s, &m).length * (1.0 + 1e-12));
    }

    #[test]
    fn rk4_step_is_deterministic(q1 in angle(), q2 in angle(), v1 in -3.0..3.0, v2 in -3.0..3.0) {
        let sys = DoublePendulum::<f64>::default();
        let s = State::new(Vec2::new(q1, q2), Vec2::new(v1, v2));
        let a = rk4_step(&s, 1e-3, &sys);
        let b = rk4_step(&s, 1e-3, &sys);
        prop_assert_eq!(a.q[0].to_bits(), b.q[0].to_bits());
        prop_assert_eq!(a.qd[1].to_bits(), b.qd[1].to_bits());
    }

    #[test]
    fn equations_of_motion_balance(sys in pendulum(), q1 in angle(), q2 in angle(), v1 in -3.0..3.0, v2 in -3.0..3.0) {
        let s = State::new(Vec2::new(q1, q2), Vec2::new(v1, v2));
        let qdd = accel(&sys, &s);
        let lhs = sys.mass_matrix(&s.q).mul_vec(&qdd) + sys.coriolis_matrix(&s.q, &s.qd).mul_vec(&s.qd) + sys.gravity_vector(&s.q);
        prop_assert!(lhs.norm() <= 1e-9 * (1.0 + sys.gravity_vector(&s.q).norm()));
    }
}

#[test]
fn sphere_chart_relaxes_to_a_great_circle() {
    // Latitude/longitude chart; the equator is a great circle.
    let (a, b) = (Vec2::new(0.0, -0.8), Vec2::new(0.0, 0.8));
    let verts = (0..80)
        .map(|k| {
            let u = k as f64 / 79.0;
            a + (b - a) * u + Vec2::new(0.4 * (PI * u).sin(), 0.0)
        })
        .collect();
    let s = DiscreteString::open(verts).unwrap();
    let (out, rep) = relax(&s, &SphereChartMetric, &RelaxOptions::default()).unwrap();
    assert!(rep.converged);
    let worst = out.vertices().iter().map(|q| q[0].abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5, "off the equator by {worst}");
    let len = arc_length(&out, &SphereChartMetric).length;
    assert!((len - 1.6).abs() < 1e-3, "length {len}");
}

#[test]
fn simulation_is_bitwise_reproducible() {
    let sys = DoublePendulum::<f64>::default();
    let s = State::new(Vec2::new(1.0, -0.4), Vec2::new(0.3, 2.0));
    let a = simulate(&s, 3.0, 1e-3, &sys).unwrap();
    let b = simulate(&s, 3.0, 1e-3, &sys).unwrap();
    assert_eq!(a.states, b.states);
    assert_eq!(a.energy_drift.to_bits(), b.energy_drift.to_bits());
}

#[test]
fn metric_partials_match_finite_differences() {
    let sys = DoublePendulum::<f64>::default();
    let q = Vec2::new(0.7, -1.1);
    let m = JacobiMetric::new(&sys, 10.0);
    let dg = m.partials(&q);
    let h = 1e-6;
    for k in 0..2 {
        let mut d = Vec2::zero();
        d[k] = h;
        let (p, n) = (m.eval(&(q + d)).g, m.eval(&(q - d)).g);
        for i in 0..2 {
            for j in 0..2 {
                let fd = (p.0[i][j] - n.0[i][j]) / (2.0 * h);
                assert!((fd - dg[k].0[i][j]).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}
