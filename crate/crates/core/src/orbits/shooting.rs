//! Periodic orbits as a multiple-shooting boundary-value problem.
//!
//! Unknowns: the start states of `N` segments, the period `T`, and an
//! unfolding parameter `μ` that adds `μ·q̇` to the acceleration. Equations:
//! continuity between segments, periodicity modulo the class offset, the
//! energy at the first state, and a phase anchor fixing one coordinate of the
//! first state. Since `μ` changes the energy at a rate `2μ·T_kin`, a periodic
//! solution forces `μ = 0`; the parameter only makes the system square.

use crate::error::{Error, Result};
use crate::geometry::{reconstruct_time, reconstruct_velocity};
use crate::integrate::{brake_threshold, propagate, propagate_with};
use crate::linalg::Vec2;
use crate::model::{accel, total_energy, MechanicalSystem, State};
use crate::relaxation::DiscreteString;
use crate::scalar::Scalar;

use super::newton;
use super::{classify, closed_orbit_from_segments, validated, Orbit, OrbitKind, OrbitOptions};

/// Initial guess for the periodic solve: segment start states at `t = i·T/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSeed<T> {
    pub states: Vec<State<T>>,
    pub period: T,
    pub class: (i32, i32),
}

impl<T: Scalar> PeriodicSeed<T> {
    /// Segment starts by integrating forward from a single state.
    pub fn from_state<S: MechanicalSystem<T> + ?Sized>(
        state: State<T>,
        period: T,
        class: (i32, i32),
        segments: usize,
        dt: T,
        sys: &S,
    ) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(Error::PeriodCollapse { period: period.to_f64_lossy() });
        }
        let seg = period / T::from_count(segments);
        let mut states = vec![state];
        let mut s = state;
        for _ in 1..segments {
            s = propagate(&s, seg, dt, sys)?;
            states.push(s);
        }
        Ok(Self { states, period, class })
    }

    /// Segment starts interpolated from the samples of a converged orbit.
    /// Brake half paths are mirrored to a full period first.
    pub fn from_orbit(orbit: &Orbit<T>, segments: usize) -> Self {
        let (times, states, class) = if orbit.samples.is_closed() {
            (orbit.times.clone(), orbit.states(), orbit.samples.winding_class())
        } else {
            let fwd = orbit.states();
            let mut times = orbit.times.clone();
            let mut states = fwd.clone();
            for (t, s) in orbit.times.iter().zip(&fwd).rev().skip(1) {
                times.push(orbit.period - *t);
                states.push(State::new(s.q, -s.qd));
            }
            (times, states, (0, 0))
        };
        let offset = orbit.samples.closure_offset();
        let period = orbit.period;
        let at = |t: T| -> State<T> {
            let n = times.len();
            let idx = times.iter().rposition(|x| *x <= t).unwrap_or(0);
            let (t0, s0) = (times[idx], states[idx]);
            let (t1, s1) = if idx + 1 < n {
                (times[idx + 1], states[idx + 1])
            } else {
                (period, State::new(states[0].q + offset, states[0].qd))
            };
            let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { T::zero() };
            State::new(s0.q + (s1.q - s0.q) * w, s0.qd + (s1.qd - s0.qd) * w)
        };
        let states = (0..segments).map(|i| at(period * T::from_count(i) / T::from_count(segments))).collect();
        Self { states, period, class }
    }

    /// Segment starts from a relaxed closed string: configurations at the
    /// reconstructed times, velocities from the scaled tangents.
    pub fn from_string<S: MechanicalSystem<T> + ?Sized>(
        string: &DiscreteString<T>,
        energy: T,
        segments: usize,
        sys: &S,
    ) -> Result<Self> {
        if !string.is_closed() {
            return Err(Error::NotClosed);
        }
        let times = reconstruct_time(string, energy, sys)?;
        let period = *times.last().ok_or(Error::NotClosed)?;
        let n = string.len();
        let mut states = Vec::with_capacity(segments);
        for i in 0..segments {
            let t = period * T::from_count(i) / T::from_count(segments);
            let k = times[..n].iter().rposition(|x| *x <= t).unwrap_or(0);
            let w = if times[k + 1] > times[k] { (t - times[k]) / (times[k + 1] - times[k]) } else { T::zero() };
            let a = string.ext(k as isize);
            let b = string.ext(k as isize + 1);
            let q = a + (b - a) * w;
            let tangent = string.tangent(k % n) * (T::one() - w) + string.tangent((k + 1) % n) * w;
            states.push(reconstruct_velocity(&q, &tangent, energy, sys)?);
        }
        Ok(Self { states, period, class: string.winding_class() })
    }

    pub fn min_speed(&self) -> T {
        self.states.iter().fold(T::infinity(), |m, s| m.min(s.qd.norm()))
    }
}

/// Converged multiple-shooting solution.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PeriodicSolution<T> {
    pub states: Vec<State<T>>,
    pub period: T,
    pub unfolding: T,
    pub residual: T,
}

fn pack<T: Scalar>(seed: &PeriodicSeed<T>) -> Vec<T> {
    let mut x = Vec::with_capacity(4 * seed.states.len() + 2);
    for s in &seed.states {
        x.extend([s.q[0], s.q[1], s.qd[0], s.qd[1]]);
    }
    x.push(seed.period);
    x.push(T::zero());
    x
}

fn state_at<T: Scalar>(x: &[T], i: usize) -> State<T> {
    State::new(Vec2::new(x[4 * i], x[4 * i + 1]), Vec2::new(x[4 * i + 2], x[4 * i + 3]))
}

/// Solves the periodic BVP at energy `E` from `seed`. The phase anchor fixes
/// the coordinate of the first state that moves fastest in the seed.
pub(crate) fn solve_periodic<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    seed: &PeriodicSeed<T>,
    energy: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<PeriodicSolution<T>> {
    let n = seed.states.len();
    if n < 2 {
        return Err(Error::InvalidArgument("periodic seed needs at least two segments".into()));
    }
    let s0 = seed.states[0];
    let anchor = if s0.qd[0].abs() >= s0.qd[1].abs() { 0 } else { 1 };
    let anchor_value = s0.q[anchor];
    let offset = Vec2::new(T::lit(f64::from(seed.class.0)), T::lit(f64::from(seed.class.1))) * T::two_pi();
    let min_period = seed.period * T::lit(1e-3);
    let residual = |x: &[T]| -> Result<Vec<T>> {
        let period = x[4 * n];
        let mu = x[4 * n + 1];
        if !(period > min_period) {
            return Err(Error::PeriodCollapse { period: period.to_f64_lossy() });
        }
        let seg = period / T::from_count(n);
        let field = |s: &State<T>| (s.qd, accel(sys, s) + s.qd * mu);
        let mut f = Vec::with_capacity(4 * n + 2);
        for i in 0..n {
            let end = propagate_with(&state_at(x, i), seg, opts.dt, field)?;
            let next = if i + 1 < n {
                state_at(x, i + 1)
            } else {
                let first = state_at(x, 0);
                State::new(first.q + offset, first.qd)
            };
            f.extend([end.q[0] - next.q[0], end.q[1] - next.q[1], end.qd[0] - next.qd[0], end.qd[1] - next.qd[1]]);
        }
        let first = state_at(x, 0);
        f.push(total_energy(sys, &first) - energy);
        f.push(first.q[anchor] - anchor_value);
        Ok(f)
    };
    let x0 = pack(seed);
    let mut scale = Vec::with_capacity(x0.len());
    for s in &seed.states {
        let v = s.qd.norm().max(T::one());
        scale.extend([T::one(), T::one(), v, v]);
    }
    scale.push(seed.period.max(T::lit(0.1)));
    scale.push(T::one());
    let sol = newton::solve(residual, &x0, &scale, &opts.newton())?;
    let period = sol.x[4 * n];
    let unfolding = sol.x[4 * n + 1];
    if !(period > min_period) {
        return Err(Error::PeriodCollapse { period: period.to_f64_lossy() });
    }
    if unfolding.abs() > T::lit(1e-6) {
        return Err(Error::ValidationFailed(format!("unfolding parameter did not vanish ({unfolding})")));
    }
    Ok(PeriodicSolution {
        states: (0..n).map(|i| state_at(&sol.x, i)).collect(),
        period,
        unfolding,
        residual: sol.residual,
    })
}

/// Periodic orbit at energy `E` by multiple shooting from `seed`; the
/// returned orbit is classified and validated by forward simulation.
///
/// Seeds with a nonzero class re-converge to the toroidal orbit they came
/// from, which is how relaxed toroidal strings are refined.
pub fn find_disk<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    seed: &PeriodicSeed<T>,
    energy: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<Orbit<T>> {
    opts.validate()?;
    let threshold = brake_threshold(energy, sys);
    let min_speed = seed.min_speed();
    if !(min_speed > threshold) {
        return Err(Error::DegenerateSeed { min_speed: min_speed.to_f64_lossy(), threshold: threshold.to_f64_lossy() });
    }
    let seed = if seed.states.len() == opts.segments {
        seed.clone()
    } else {
        PeriodicSeed::from_state(seed.states[0], seed.period, seed.class, opts.segments, opts.dt, sys)?
    };
    let sol = solve_periodic(&seed, energy, sys, opts)?;
    let mut orbit = closed_orbit_from_segments(&sol.states, sol.period, seed.class, energy, sol.residual, sys, opts)?;
    let kind = classify(&orbit, sys, opts)?;
    orbit.kind = kind;
    if kind == OrbitKind::Brake || !(orbit.min_speed() > threshold) {
        // Converged onto an orbit that stops.
        return Err(Error::DegenerateSeed { min_speed: orbit.min_speed().to_f64_lossy(), threshold: threshold.to_f64_lossy() });
    }
    validated(orbit, sys, opts)
}
