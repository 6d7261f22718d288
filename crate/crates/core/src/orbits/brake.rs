//! Brake orbits: oscillations between two rest configurations on the level
//! set `U(q) = E`, grown from the linear normal modes.
//!
//! Starting at rest on the level set, time-reversal symmetry makes the motion
//! a brake orbit as soon as the velocity vanishes again. The unknowns are the
//! angle of the start point as seen from the stable equilibrium and the half
//! period; the residual is the velocity at the half period.

use crate::error::{Error, Result};
use crate::integrate::propagate;
use crate::linalg::Vec2;
use crate::model::{linearize, MechanicalSystem, State};
use crate::relaxation::DiscreteString;
use crate::scalar::Scalar;

use super::newton;
use super::{even_step, sample_flow, validated, Orbit, OrbitKind, OrbitOptions};

/// Warm start for the brake shooting problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakeGuess<T> {
    /// Angle of the start point around the stable equilibrium [rad].
    pub angle: T,
    pub half_period: T,
}

impl<T: Scalar> BrakeGuess<T> {
    /// Linear-mode guess: the eigenvector direction and half the linear period.
    pub fn from_mode<S: MechanicalSystem<T> + ?Sized>(mode: usize, sys: &S) -> Result<Self> {
        if !(1..=2).contains(&mode) {
            return Err(Error::InvalidArgument(format!("mode index must be 1 or 2 (got {mode})")));
        }
        let lin = linearize(&sys.stable_equilibrium(), sys)?;
        let v = lin.direction(mode - 1);
        Ok(Self { angle: v[1].atan2(v[0]), half_period: lin.period(mode - 1) * T::lit(0.5) })
    }

    /// Guess taken from a converged brake orbit.
    pub fn from_orbit<S: MechanicalSystem<T> + ?Sized>(orbit: &Orbit<T>, sys: &S) -> Self {
        let d = orbit.samples.vertices()[0] - sys.stable_equilibrium();
        Self { angle: d[1].atan2(d[0]), half_period: orbit.period * T::lit(0.5) }
    }
}

/// First point where the ray from the stable equilibrium at `angle` meets
/// `U(q) = E`.
pub fn equipotential_point<T: Scalar, S: MechanicalSystem<T> + ?Sized>(angle: T, energy: T, sys: &S) -> Result<Vec2<T>> {
    let c = sys.stable_equilibrium();
    let d = Vec2::new(angle.cos(), angle.sin());
    let f = |r: T| sys.potential(&(c + d * r)) - energy;
    if !(f(T::zero()) < T::zero()) {
        return Err(Error::EnergyOutOfRange {
            energy: energy.to_f64_lossy(),
            lo: sys.potential(&c).to_f64_lossy(),
            hi: sys.potential_bounds().1.to_f64_lossy(),
        });
    }
    let step = T::lit(0.005);
    let max_r = T::two_pi();
    let mut lo = T::zero();
    let mut hi = step;
    while f(hi) < T::zero() {
        lo = hi;
        hi += step;
        if hi > max_r {
            return Err(Error::SolveFailure(format!("ray at angle {angle} does not reach U = {energy}")));
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Keep the endpoint with the smaller level-set error.
    let r = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Ok(c + d * r)
}

fn check_energy<T: Scalar, S: MechanicalSystem<T> + ?Sized>(energy: T, sys: &S) -> Result<()> {
    let (umin, umax) = sys.potential_bounds();
    if !(energy > umin && energy < umax) {
        return Err(Error::EnergyOutOfRange { energy: energy.to_f64_lossy(), lo: umin.to_f64_lossy(), hi: umax.to_f64_lossy() });
    }
    Ok(())
}

/// Brake orbit of the given linear mode (1 = slow, 2 = fast) at energy `E`.
pub fn find_brake<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    mode: usize,
    energy: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<Orbit<T>> {
    check_energy(energy, sys)?;
    let guess = BrakeGuess::from_mode(mode, sys)?;
    find_brake_from(&guess, energy, sys, opts)
}

/// Brake orbit at energy `E` from an explicit warm start.
pub fn find_brake_from<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    guess: &BrakeGuess<T>,
    energy: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<Orbit<T>> {
    opts.validate()?;
    check_energy(energy, sys)?;
    let residual = |x: &[T]| -> Result<Vec<T>> {
        if !(x[1] > T::zero()) {
            return Err(Error::PeriodCollapse { period: (x[1] * T::lit(2.0)).to_f64_lossy() });
        }
        let q0 = equipotential_point(x[0], energy, sys)?;
        let s = propagate(&State::at_rest(q0), x[1], opts.dt, sys)?;
        Ok(vec![s.qd[0], s.qd[1]])
    };
    let x0 = [guess.angle, guess.half_period];
    let scale = [T::one(), guess.half_period.max(T::lit(0.1))];
    let sol = newton::solve(residual, &x0, &scale, &opts.newton())?;
    let (angle, half) = (sol.x[0], sol.x[1]);
    let a = equipotential_point(angle, energy, sys)?;
    let k = opts.samples;
    let times: Vec<T> = (0..k).map(|j| half * T::from_count(j) / T::from_count(k - 1)).collect();
    let start = State::at_rest(a);
    let mut states = vec![start];
    states.extend(sample_flow(&start, T::zero(), &times[1..], even_step(half / T::from_count(k - 1), opts.dt), sys)?);
    let b = states[k - 1].q;
    let orbit = Orbit {
        samples: DiscreteString::open(states.iter().map(|s| s.q).collect())?,
        times,
        velocities: states.iter().map(|s| s.qd).collect(),
        energy,
        period: half * T::lit(2.0),
        kind: OrbitKind::Brake,
        residual: sol.residual,
        brake_points: Some([a, b]),
        validation: None,
    };
    validated(orbit, sys, opts)
}

/// Unit direction of motion where the orbit passes closest to the stable
/// equilibrium, with its sign fixed so the first nonzero component is positive.
pub fn equilibrium_direction<T: Scalar, S: MechanicalSystem<T> + ?Sized>(orbit: &Orbit<T>, sys: &S) -> Vec2<T> {
    let c = sys.stable_equilibrium();
    let (idx, _) = orbit
        .samples
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, q)| (i, (*q - c).norm()))
        .fold((0, T::infinity()), |a, b| if b.1 < a.1 { b } else { a });
    let v = orbit.velocities[idx];
    let n = v.norm();
    let u = if n > T::zero() { v * (T::one() / n) } else { v };
    if u[0] < T::zero() || (u[0] == T::zero() && u[1] < T::zero()) {
        -u
    } else {
        u
    }
}
