//! Fixed-step RK4 forward dynamics and event detection on sampled
//! trajectories: brake points, section crossings, and deviation from a
//! reference path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::model::{accel, total_energy, MechanicalSystem, State};
use crate::relaxation::DiscreteString;
use crate::scalar::{wrap_angle, Scalar};

/// Default integration step [s].
pub const DEFAULT_DT: f64 = 1e-3;

/// Uniformly sampled solution of the equations of motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<State<T>>,
    /// `max |H(t) − H(0)|`.
    pub energy_drift: T,
    /// `H(0)`.
    pub energy: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn configurations(&self) -> Vec<Vec2<T>> {
        self.states.iter().map(|s| s.q).collect()
    }

    /// Keeps samples `0..=end`.
    pub fn truncated(&self, end: usize) -> Self {
        let n = (end + 1).min(self.len());
        Self { times: self.times[..n].to_vec(), states: self.states[..n].to_vec(), ..self.clone() }
    }
}

#[inline]
fn deriv<T: Scalar, S: MechanicalSystem<T> + ?Sized>(sys: &S, s: &State<T>) -> (Vec2<T>, Vec2<T>) {
    (s.qd, accel(sys, s))
}

/// Classical fourth-order Runge–Kutta step of `(q̇, q̈)`.
pub fn rk4_step<T: Scalar, S: MechanicalSystem<T> + ?Sized>(s: &State<T>, dt: T, sys: &S) -> State<T> {
    rk4_step_with(s, dt, |x| deriv(sys, x))
}

/// RK4 step for an arbitrary second-order field `x ↦ (q̇, q̈)`.
pub(crate) fn rk4_step_with<T: Scalar>(s: &State<T>, dt: T, f: impl Fn(&State<T>) -> (Vec2<T>, Vec2<T>)) -> State<T> {
    let half = dt * T::lit(0.5);
    let two = T::lit(2.0);
    let sixth = dt / T::lit(6.0);
    let (k1q, k1v) = f(s);
    let s2 = State::new(s.q + k1q * half, s.qd + k1v * half);
    let (k2q, k2v) = f(&s2);
    let s3 = State::new(s.q + k2q * half, s.qd + k2v * half);
    let (k3q, k3v) = f(&s3);
    let s4 = State::new(s.q + k3q * dt, s.qd + k3v * dt);
    let (k4q, k4v) = f(&s4);
    State::new(
        s.q + (k1q + k2q * two + k3q * two + k4q) * sixth,
        s.qd + (k1v + k2v * two + k3v * two + k4v) * sixth,
    )
}

/// Integrates `duration` exactly in `ceil(duration/dt_max)` equal steps and
/// returns the end state.
pub fn propagate<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    s0: &State<T>,
    duration: T,
    dt_max: T,
    sys: &S,
) -> Result<State<T>> {
    propagate_with(s0, duration, dt_max, |x| deriv(sys, x))
}

pub(crate) fn propagate_with<T: Scalar>(
    s0: &State<T>,
    duration: T,
    dt_max: T,
    f: impl Fn(&State<T>) -> (Vec2<T>, Vec2<T>),
) -> Result<State<T>> {
    if !(duration >= T::zero()) || !(dt_max > T::zero()) {
        return Err(Error::InvalidArgument(format!("bad propagation interval {duration} / step {dt_max}")));
    }
    let n = (duration / dt_max).ceil().to_usize().unwrap_or(0).max(1);
    let h = duration / T::from_count(n);
    let mut s = *s0;
    for i in 0..n {
        s = rk4_step_with(&s, h, &f);
        if !s.is_finite() {
            return Err(Error::NonFinite { t: (h * T::from_count(i + 1)).to_f64_lossy() });
        }
    }
    Ok(s)
}

/// Fixed-step simulation with `floor(t_end/dt) + 1` samples.
pub fn simulate<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    s0: &State<T>,
    t_end: T,
    dt: T,
    sys: &S,
) -> Result<Trajectory<T>> {
    if !(t_end > T::zero()) || !(dt > T::zero()) {
        return Err(Error::InvalidArgument(format!("simulate needs t_end > 0 and dt > 0 (got {t_end}, {dt})")));
    }
    // Guard against t_end/dt landing a hair below an integer.
    let ratio = t_end / dt;
    let steps = (ratio + T::lit(1e-9) * ratio.max(T::one())).floor().to_usize().unwrap_or(0);
    let e0 = total_energy(sys, s0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut drift = T::zero();
    let mut s = *s0;
    times.push(T::zero());
    states.push(s);
    for i in 1..=steps {
        s = rk4_step(&s, dt, sys);
        let t = dt * T::from_count(i);
        if !s.is_finite() {
            return Err(Error::NonFinite { t: t.to_f64_lossy() });
        }
        drift = drift.max((total_energy(sys, &s) - e0).abs());
        times.push(t);
        states.push(s);
    }
    Ok(Trajectory { times, states, energy_drift: drift, energy: e0 })
}

/// Speed below which a velocity minimum counts as a stop:
/// `1e-4·√(2(E − U_min)/λ_min(M))`.
pub fn brake_threshold<T: Scalar, S: MechanicalSystem<T> + ?Sized>(energy: T, sys: &S) -> T {
    let (umin, _) = sys.potential_bounds();
    let scale = (T::lit(2.0) * (energy - umin).max(T::zero()) / sys.min_mass_eigenvalue()).sqrt();
    T::lit(1e-4) * scale
}

/// A zero-velocity event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakePoint<T> {
    pub time: T,
    pub q: Vec2<T>,
}

/// Local minima of `‖q̇‖` whose quadratically refined value lies below the
/// brake threshold. The refined configuration is a second-order Taylor
/// expansion from the nearest sample.
pub fn detect_brake_points<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    traj: &Trajectory<T>,
    sys: &S,
) -> Vec<BrakePoint<T>> {
    let n = traj.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let thr = brake_threshold(traj.energy, sys);
    let thr2 = thr * thr;
    let sp: Vec<T> = traj.states.iter().map(|s| s.qd.norm_squared()).collect();
    if n == 1 {
        if sp[0] <= thr2 {
            out.push(BrakePoint { time: traj.times[0], q: traj.states[0].q });
        }
        return out;
    }
    if sp[0] <= thr2 && sp[1] >= sp[0] {
        out.push(BrakePoint { time: traj.times[0], q: traj.states[0].q });
    }
    let half = T::lit(0.5);
    for i in 1..n - 1 {
        if !(sp[i] <= sp[i - 1] && sp[i] < sp[i + 1]) {
            continue;
        }
        // Parabola through the three samples of ‖q̇‖² (uniform spacing).
        let h = traj.times[i + 1] - traj.times[i];
        let a = (sp[i + 1] - T::lit(2.0) * sp[i] + sp[i - 1]) * half;
        let b = (sp[i + 1] - sp[i - 1]) * half;
        let (tau, vmin) = if a > T::zero() {
            let tau = (-b / (T::lit(2.0) * a)).max(-T::one()).min(T::one());
            (tau, (sp[i] + b * tau + a * tau * tau).max(T::zero()))
        } else {
            (T::zero(), sp[i])
        };
        if vmin > thr2 {
            continue;
        }
        let dt = tau * h;
        let s = traj.states[i];
        let q = s.q + s.qd * dt + accel(sys, &s) * (half * dt * dt);
        out.push(BrakePoint { time: traj.times[i] + dt, q });
    }
    if sp[n - 1] <= thr2 && sp[n - 2] > sp[n - 1] {
        out.push(BrakePoint { time: traj.times[n - 1], q: traj.states[n - 1].q });
    }
    out
}

/// Poincaré section `q[index] ≡ value (mod 2π)` crossed with `sign(q̇[index]) = direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section<T> {
    pub index: usize,
    pub value: T,
    /// `+1` or `−1`.
    pub direction: i8,
}

/// Crossing states interpolated inside each step: a cubic Hermite curve in
/// `q` (from the sampled positions and velocities) is solved for the exact
/// crossing time; velocities are interpolated linearly.
pub fn section_crossings<T: Scalar>(traj: &Trajectory<T>, section: &Section<T>) -> Result<Vec<(T, State<T>)>> {
    if section.index > 1 {
        return Err(Error::InvalidArgument(format!("joint index {} out of range", section.index)));
    }
    let j = section.index;
    let dir = if section.direction >= 0 { T::one() } else { -T::one() };
    let mut out = Vec::new();
    for w in 0..traj.len().saturating_sub(1) {
        let (s0, s1) = (traj.states[w], traj.states[w + 1]);
        // Distance to the nearest section copy, measured from s0.
        let base = s0.q[j] - wrap_angle(s0.q[j] - section.value);
        let f0 = s0.q[j] - base;
        let f1 = s1.q[j] - base;
        // Also consider the neighbouring copy for steps that cross ±π.
        for shift in [T::zero(), T::two_pi(), -T::two_pi()] {
            let (a, b) = (f0 - shift, f1 - shift);
            let crosses = if dir > T::zero() { a < T::zero() && b >= T::zero() } else { a > T::zero() && b <= T::zero() };
            if !crosses {
                continue;
            }
            let h = traj.times[w + 1] - traj.times[w];
            let target = base + shift;
            let hermite = |u: T| -> T {
                let u2 = u * u;
                let u3 = u2 * u;
                let h00 = T::lit(2.0) * u3 - T::lit(3.0) * u2 + T::one();
                let h10 = u3 - T::lit(2.0) * u2 + u;
                let h01 = -T::lit(2.0) * u3 + T::lit(3.0) * u2;
                let h11 = u3 - u2;
                h00 * s0.q[j] + h10 * h * s0.qd[j] + h01 * s1.q[j] + h11 * h * s1.qd[j] - target
            };
            // Bisection on the Hermite interpolant, seeded by the linear root.
            let (mut lo, mut hi) = (T::zero(), T::one());
            let flo = hermite(lo);
            for _ in 0..100 {
                let mid = (lo + hi) * T::lit(0.5);
                let fm = hermite(mid);
                if (fm < T::zero()) == (flo < T::zero()) && fm != T::zero() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= T::epsilon() {
                    break;
                }
            }
            let u = (lo + hi) * T::lit(0.5);
            let mut q = s0.q + (s1.q - s0.q) * u;
            q[j] = target;
            let qd = s0.qd + (s1.qd - s0.qd) * u;
            out.push((traj.times[w] + h * u, State::new(q, qd)));
        }
    }
    Ok(out)
}

/// Distance from `p` to segment `[a, b]`, comparing on the torus: `p` is
/// shifted by the multiple of `2π` that brings it closest to `a`.
pub(crate) fn torus_segment_distance<T: Scalar>(p: &Vec2<T>, a: &Vec2<T>, b: &Vec2<T>) -> T {
    let rel = (*p - *a).map(wrap_angle);
    let d = *b - *a;
    let l2 = d.norm_squared();
    let t = if l2 > T::zero() { (rel.dot(&d) / l2).max(T::zero()).min(T::one()) } else { T::zero() };
    (rel - d * t).norm()
}

/// Maximum distance of sampled configurations from a polyline. Matching
/// follows the curve: after a global search for the first sample, each later
/// sample is matched within a window of segments around the previous match.
pub fn path_deviation_points<T: Scalar>(points: &[Vec2<T>], curve: &DiscreteString<T>) -> T {
    let segs: Vec<(Vec2<T>, Vec2<T>)> = curve.segments().collect();
    let nseg = segs.len();
    if points.is_empty() || nseg == 0 {
        return T::zero();
    }
    let window = (nseg / 4).max(4) as isize;
    let nearest = |p: &Vec2<T>, range: &mut dyn Iterator<Item = isize>| -> (isize, T) {
        let mut best = (0isize, T::infinity());
        for i in range {
            let idx = if curve.is_closed() { i.rem_euclid(nseg as isize) } else { i };
            let (a, b) = segs[idx as usize];
            let d = torus_segment_distance(p, &a, &b);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    };
    let (mut last, mut worst) = nearest(&points[0], &mut (0..nseg as isize));
    for p in &points[1..] {
        let (lo, hi) = if curve.is_closed() {
            (last - window, last + window)
        } else {
            ((last - window).max(0), (last + window).min(nseg as isize - 1))
        };
        let (idx, d) = nearest(p, &mut (lo..=hi));
        last = idx;
        worst = worst.max(d);
    }
    worst
}

pub fn path_deviation<T: Scalar>(traj: &Trajectory<T>, curve: &DiscreteString<T>) -> T {
    path_deviation_points(&traj.configurations(), curve)
}

/// Forward simulation from the start of an open string compared with the
/// string itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracking<T> {
    /// Initial state: first vertex, end tangent scaled to energy `E`.
    pub initial: State<T>,
    /// Time of closest approach to the far endpoint.
    pub arrival_time: T,
    /// Distance to the far endpoint at that time.
    pub arrival_distance: T,
    /// Path deviation of the simulated path up to the closest approach.
    pub deviation: T,
    /// Time along the string from its reconstruction.
    pub string_time: T,
}

/// Simulates from the reconstructed initial velocity of an open string for
/// `horizon` times its reconstructed duration and measures how closely the
/// motion follows the string until it passes nearest to the far endpoint.
pub fn track_string<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    curve: &DiscreteString<T>,
    energy: T,
    horizon: T,
    dt: T,
    sys: &S,
) -> Result<Tracking<T>> {
    if curve.is_closed() {
        return Err(Error::InvalidArgument("tracking needs an open string".into()));
    }
    let times = crate::geometry::reconstruct_time(curve, energy, sys)?;
    let string_time = *times.last().ok_or(Error::InvalidString("empty string".into()))?;
    let initial = crate::geometry::reconstruct_velocity(&curve.vertices()[0], &curve.tangent(0), energy, sys)?;
    let traj = simulate(&initial, string_time * horizon, dt, sys)?;
    let target = curve.vertices()[curve.len() - 1];
    let (idx, arrival_distance) = traj
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (i, (s.q - target).norm()))
        .fold((0, T::infinity()), |a, b| if b.1 < a.1 { b } else { a });
    let deviation = path_deviation(&traj.truncated(idx), curve);
    Ok(Tracking { initial, arrival_time: traj.times[idx], arrival_distance, deviation, string_time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linearize, DoublePendulum, MechParams};
    use std::f64::consts::PI;

    fn unit() -> DoublePendulum<f64> {
        DoublePendulum::default()
    }

    #[test]
    fn equilibrium_is_fixed() {
        let sys = unit();
        let s = State::at_rest(Vec2::zero());
        assert_eq!(rk4_step(&s, 1e-3, &sys), s);
    }

    #[test]
    fn fourth_order_convergence() {
        let sys = unit();
        let s0 = State::new(Vec2::new(0.8, -0.5), Vec2::new(1.0, 2.0));
        // Reference: the same interval with 100 sub-steps.
        let h = 0.04;
        let reference = propagate(&s0, h, h / 100.0, &sys).unwrap();
        let err = |dt: f64| {
            let s = propagate(&s0, h, dt, &sys).unwrap();
            (s.q - reference.q).norm() + (s.qd - reference.qd).norm()
        };
        // Global error over a fixed interval: halving dt → ~1/16.
        let ratio = err(h / 4.0) / err(h / 8.0);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn time_reversal() {
        let sys = unit();
        let s0 = State::new(Vec2::new(0.3, 0.2), Vec2::new(-0.5, 1.1));
        let dt = 1e-2;
        let s1 = rk4_step(&s0, dt, &sys);
        let back = rk4_step(&State::new(s1.q, -s1.qd), dt, &sys);
        assert!((back.q - s0.q).norm() < 1e-9);
    }

    #[test]
    fn sample_count_is_exact() {
        let sys = unit();
        let s0 = State::new(Vec2::new(0.1, 0.0), Vec2::zero());
        let traj = simulate(&s0, 1.0, 1e-3, &sys).unwrap();
        assert_eq!(traj.len(), 1001);
        let traj = simulate(&s0, 0.0105, 1e-3, &sys).unwrap();
        assert_eq!(traj.len(), 11);
    }

    #[test]
    fn small_oscillation_period_matches_linear_mode() {
        let sys = unit();
        let lin = linearize(&Vec2::zero(), &sys).unwrap();
        let v = lin.direction(0) * 1e-3;
        let traj = simulate(&State::at_rest(v), 6.0, 1e-3, &sys).unwrap();
        let section = Section { index: 0, value: 0.0, direction: 1 };
        let c = section_crossings(&traj, &section).unwrap();
        assert!(c.len() >= 2);
        let period = c[1].0 - c[0].0;
        assert!((period - lin.period(0)).abs() / lin.period(0) < 0.01);
    }

    #[test]
    fn free_relative_equilibrium_spin() {
        // Without gravity, the stretched-out pendulum spinning about the
        // pivot with q̇2 = 0 is a relative equilibrium: q̇ stays constant.
        let sys = DoublePendulum::new(MechParams { grav: 0.0, ..MechParams::default() }).unwrap();
        let s0 = State::new(Vec2::new(0.0f64, 0.0), Vec2::new(1.3, 0.0));
        let traj = simulate(&s0, 2.0, 1e-3, &sys).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last.qd - s0.qd).norm() < 1e-10);
        assert!((last.q[0] - 2.6).abs() < 1e-9);
    }

    #[test]
    fn brake_points_of_linear_mode() {
        let sys = unit();
        let lin = linearize(&Vec2::zero(), &sys).unwrap();
        let amp = 0.01;
        let q0 = lin.direction(0) * amp;
        let traj = simulate(&State::at_rest(q0), 2.0 * lin.period(0), 1e-3, &sys).unwrap();
        let bp = detect_brake_points(&traj, &sys);
        assert_eq!(bp[0].time, 0.0);
        assert!(bp.len() >= 4, "found {}", bp.len());
        for (i, p) in bp.iter().enumerate() {
            let expected = if i % 2 == 0 { q0 } else { -q0 };
            assert!((p.q - expected).norm() < 1e-3 * amp.max(1.0) + 1e-4);
        }
        let half = lin.period(0) / 2.0;
        assert!((bp[1].time - half).abs() / half < 0.01);
    }

    #[test]
    fn no_brake_points_above_upright_energy() {
        let sys = unit();
        let s0 = crate::geometry::reconstruct_velocity(&Vec2::zero(), &Vec2::new(1.0, 0.0), 1.5 * 29.43, &sys).unwrap();
        let traj = simulate(&s0, 3.0, 1e-3, &sys).unwrap();
        assert!(detect_brake_points(&traj, &sys).is_empty());
    }

    fn uniform_rotation() -> Trajectory<f64> {
        let dt = 0.01;
        let n = 2000;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        let states = times.iter().map(|&t| State::new(Vec2::new(t, 0.0), Vec2::new(1.0, 0.0))).collect();
        Trajectory { times, states, energy_drift: 0.0, energy: 0.0 }
    }

    #[test]
    fn crossings_of_uniform_rotation() {
        let traj = uniform_rotation();
        let up = section_crossings(&traj, &Section { index: 0, value: PI, direction: 1 }).unwrap();
        // q1 = t over 20 s crosses π + 2πk for k = 0, 1, 2.
        assert_eq!(up.len(), 3);
        for (i, (t, s)) in up.iter().enumerate() {
            assert!((t - (PI + 2.0 * PI * i as f64)).abs() < 1e-9);
            assert!(wrap_angle(s.q[0] - PI).abs() <= 1e-9);
        }
        let down = section_crossings(&traj, &Section { index: 0, value: PI, direction: -1 }).unwrap();
        assert!(down.is_empty());
    }

    #[test]
    fn crossing_direction_partitions() {
        let sys = unit();
        let traj = simulate(&State::at_rest(Vec2::new(0.5, 0.2)), 5.0, 1e-3, &sys).unwrap();
        let sec = |d| Section { index: 1, value: 0.0, direction: d };
        let up = section_crossings(&traj, &sec(1)).unwrap();
        let down = section_crossings(&traj, &sec(-1)).unwrap();
        assert!(!up.is_empty() && !down.is_empty());
        assert!(up.iter().all(|(_, s)| s.qd[1] > 0.0 && s.q[1].abs() <= 1e-9));
        assert!(down.iter().all(|(_, s)| s.qd[1] < 0.0 && s.q[1].abs() <= 1e-9));
        let mut all: Vec<f64> = up.iter().chain(&down).map(|c| c.0).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.dedup();
        assert_eq!(all.len(), up.len() + down.len());
    }

    #[test]
    fn self_deviation_is_zero_and_shift_invariant() {
        let curve = DiscreteString::closed_loop((1, 2), 100, None).unwrap();
        let pts: Vec<Vec2<f64>> = curve.vertices().to_vec();
        assert!(path_deviation_points(&pts, &curve) <= 1e-12);
        let shift = Vec2::splat(2.0 * PI);
        let off = Vec2::new(0.0, 0.05);
        let pts2: Vec<Vec2<f64>> = pts.iter().map(|p| *p + off).collect();
        let d1 = path_deviation_points(&pts2, &curve);
        let pts3: Vec<Vec2<f64>> = pts2.iter().map(|p| *p + shift).collect();
        let d2 = path_deviation_points(&pts3, &curve.translated(shift));
        assert!((d1 - d2).abs() < 1e-12);
        assert!(d1 > 0.0);
    }
}
