//! Periodic orbits of the double pendulum: toroidal orbits from closed-string
//! relaxation, brake orbits grown from the linear modes, disk orbits from a
//! multiple-shooting boundary-value solve, energy continuation of families,
//! and classification.

mod brake;
mod continuation;
mod newton;
mod seeds;
mod shooting;
mod toroidal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{brake_threshold, detect_brake_points, path_deviation_points, propagate, simulate};
use crate::linalg::Vec2;
use crate::model::{MechanicalSystem, State};
use crate::relaxation::{path_winding, winding_number, DiscreteString, RelaxOptions, DEFAULT_VERTICES};
use crate::scalar::Scalar;

pub use brake::{equilibrium_direction, equipotential_point, find_brake, find_brake_from, BrakeGuess};
pub use continuation::{continue_family, OrbitFamily, Termination};
pub use seeds::{search_disk, DiskSearchReport};
pub use shooting::{find_disk, PeriodicSeed};
pub use toroidal::{find_toroidal, search_toroidal, search_toroidal_from, ToroidalSearch};

/// Orbit type per the classification of periodic orbits on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum OrbitKind {
    /// Nonzero winding numbers `(α₁, α₂)`.
    Toroidal { class: (i32, i32) },
    /// Contractible, never at rest.
    Disk,
    /// Oscillates between two zero-velocity configurations.
    Brake,
}

impl OrbitKind {
    pub fn name(&self) -> &'static str {
        match self {
            OrbitKind::Toroidal { .. } => "toroidal",
            OrbitKind::Disk => "disk",
            OrbitKind::Brake => "brake",
        }
    }

    pub fn winding_class(&self) -> (i32, i32) {
        match self {
            OrbitKind::Toroidal { class } => *class,
            _ => (0, 0),
        }
    }
}

/// Outcome of the independent forward-simulation check of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validation<T> {
    /// Closest return of the simulated configuration to the start (shifted
    /// by the class offset) within `[T/2, 1.1·T]`.
    pub closure: T,
    /// Velocity mismatch at that return, relative to the orbit's speed scale.
    pub velocity_mismatch: T,
    /// Energy drift over the run relative to `max(|E|, 1)`.
    pub energy_drift: T,
    /// Winding class of the simulated path up to the return.
    pub winding: Option<(i32, i32)>,
    /// Brake orbits only: max distance between `q(t)` and `q(T − t)`.
    pub symmetry: Option<T>,
    pub passed: bool,
}

/// A converged periodic solution.
///
/// Closed orbits store one period sampled at `t_k = k·T/K` in a closed
/// string; brake orbits store the half path between the two brake points in
/// an open string, sampled uniformly over `[0, T/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit<T> {
    pub samples: DiscreteString<T>,
    pub times: Vec<T>,
    pub velocities: Vec<Vec2<T>>,
    pub energy: T,
    pub period: T,
    pub kind: OrbitKind,
    /// Max periodicity or shooting defect of the solve.
    pub residual: T,
    pub brake_points: Option<[Vec2<T>; 2]>,
    pub validation: Option<Validation<T>>,
}

impl<T: Scalar> Orbit<T> {
    pub fn initial_state(&self) -> State<T> {
        State::new(self.samples.vertices()[0], self.velocities[0])
    }

    pub fn states(&self) -> Vec<State<T>> {
        self.samples.vertices().iter().zip(&self.velocities).map(|(q, v)| State::new(*q, *v)).collect()
    }

    pub fn winding_class(&self) -> (i32, i32) {
        self.kind.winding_class()
    }

    pub fn min_speed(&self) -> T {
        self.velocities.iter().fold(T::infinity(), |m, v| m.min(v.norm()))
    }

    pub fn max_speed(&self) -> T {
        self.velocities.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Configurations over one full period; a brake half path is mirrored.
    pub fn full_path(&self) -> Vec<Vec2<T>> {
        let v = self.samples.vertices();
        if self.samples.is_closed() {
            let mut p = v.to_vec();
            p.push(v[0] + self.samples.closure_offset());
            p
        } else {
            v.iter().chain(v.iter().rev().skip(1)).copied().collect()
        }
    }
}

/// Symmetric path distance between two orbits: the larger of the two
/// one-sided maximum deviations.
pub fn orbit_distance<T: Scalar>(a: &Orbit<T>, b: &Orbit<T>) -> T {
    path_deviation_points(a.samples.vertices(), &b.samples).max(path_deviation_points(b.samples.vertices(), &a.samples))
}

/// Settings shared by the orbit searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitOptions<T> {
    pub relax: RelaxOptions<T>,
    /// Vertices of relaxation strings.
    pub vertices: usize,
    /// Samples stored per orbit.
    pub samples: usize,
    /// Maximum RK4 step [s].
    pub dt: T,
    /// Multiple-shooting segments.
    pub segments: usize,
    /// Max defect for Newton convergence.
    pub newton_tol: T,
    pub newton_max_iter: usize,
    /// Central-difference step in scaled unknowns.
    pub fd_step: T,
    /// Largest relaxation residual still accepted as a shooting seed when the
    /// string has not met the relaxation thresholds.
    pub seed_residual: T,
    /// Refine relaxed toroidal strings by multiple shooting.
    pub polish: bool,
    pub closure_tol: T,
    pub velocity_tol: T,
    pub drift_tol: T,
    pub symmetry_tol: T,
    /// Max path deviation between consecutive family members [rad].
    pub trust_distance: T,
    pub max_halvings: usize,
    pub rng_seed: u64,
    /// Random initial states tried by the disk search.
    pub seed_attempts: usize,
    /// Simulation horizon scanned for near returns by the disk search [s].
    pub seed_horizon: T,
}

impl<T: Scalar> Default for OrbitOptions<T> {
    fn default() -> Self {
        Self {
            relax: RelaxOptions::default(),
            vertices: DEFAULT_VERTICES,
            samples: 200,
            dt: T::lit(crate::integrate::DEFAULT_DT),
            segments: 8,
            newton_tol: T::lit(1e-8),
            newton_max_iter: 40,
            fd_step: T::lit(1e-6),
            seed_residual: T::lit(1e-3),
            polish: true,
            closure_tol: T::lit(0.02),
            velocity_tol: T::lit(0.02),
            drift_tol: T::lit(1e-6),
            symmetry_tol: T::lit(1e-3),
            trust_distance: T::lit(0.2),
            max_halvings: 8,
            rng_seed: 0,
            seed_attempts: 200,
            seed_horizon: T::lit(12.0),
        }
    }
}

impl<T: Scalar> OrbitOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("newton_tol", self.newton_tol),
            ("fd_step", self.fd_step),
            ("seed_residual", self.seed_residual),
            ("closure_tol", self.closure_tol),
            ("velocity_tol", self.velocity_tol),
            ("drift_tol", self.drift_tol),
            ("symmetry_tol", self.symmetry_tol),
            ("trust_distance", self.trust_distance),
            ("seed_horizon", self.seed_horizon),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive (got {v})")));
            }
        }
        if self.segments < 2 {
            return Err(Error::InvalidArgument("segments must be at least 2".into()));
        }
        if self.samples < crate::relaxation::MIN_VERTICES || self.vertices < crate::relaxation::MIN_VERTICES {
            return Err(Error::TooFewVertices { got: self.samples.min(self.vertices), min: crate::relaxation::MIN_VERTICES });
        }
        Ok(())
    }

    pub(crate) fn newton(&self) -> newton::NewtonOptions<T> {
        newton::NewtonOptions { tol: self.newton_tol, max_iter: self.newton_max_iter, fd_step: self.fd_step, max_backtracks: 30 }
    }
}

/// Largest step not above `dt` that divides `span` evenly.
pub(crate) fn even_step<T: Scalar>(span: T, dt: T) -> T {
    let n = (span / dt).ceil().max(T::one());
    span / n
}

/// States at `times` (ascending, starting at or after `t0`) along the flow
/// from `start` at time `t0`.
pub(crate) fn sample_flow<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    start: &State<T>,
    t0: T,
    times: &[T],
    dt: T,
    sys: &S,
) -> Result<Vec<State<T>>> {
    let mut out = Vec::with_capacity(times.len());
    let mut s = *start;
    let mut t = t0;
    for &tk in times {
        s = propagate(&s, tk - t, dt, sys)?;
        t = tk;
        out.push(s);
    }
    Ok(out)
}

/// Builds a closed orbit from segment start states of a periodic solution:
/// each sample is propagated from the start of its own segment.
pub(crate) fn closed_orbit_from_segments<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    starts: &[State<T>],
    period: T,
    class: (i32, i32),
    energy: T,
    residual: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<Orbit<T>> {
    let k = opts.samples;
    let n = starts.len();
    let seg = period / T::from_count(n);
    let times: Vec<T> = (0..k).map(|j| period * T::from_count(j) / T::from_count(k)).collect();
    let mut states = Vec::with_capacity(k);
    let mut j = 0;
    for (i, start) in starts.iter().enumerate() {
        let t0 = seg * T::from_count(i);
        let end = if i + 1 == n { k } else { times.iter().position(|t| *t >= seg * T::from_count(i + 1)).unwrap_or(k) };
        states.extend(sample_flow(start, t0, &times[j..end.max(j)], opts.dt, sys)?);
        j = end.max(j);
    }
    let verts = states.iter().map(|s| s.q).collect();
    let samples = DiscreteString::closed(verts, class)?;
    let kind = if class == (0, 0) { OrbitKind::Disk } else { OrbitKind::Toroidal { class } };
    Ok(Orbit {
        samples,
        times,
        velocities: states.iter().map(|s| s.qd).collect(),
        energy,
        period,
        kind,
        residual,
        brake_points: None,
        validation: None,
    })
}

/// Forward-simulates one orbit from its initial state and checks return,
/// energy conservation, winding and (for brake orbits) time symmetry.
pub fn validate_orbit<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    orbit: &Orbit<T>,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<Validation<T>> {
    let period = orbit.period;
    if !(period > T::zero()) {
        return Err(Error::PeriodCollapse { period: period.to_f64_lossy() });
    }
    let s0 = orbit.initial_state();
    let h = even_step(period, opts.dt);
    let steps_per_period = (period / h).round().to_usize().unwrap_or(0);
    let traj = simulate(&s0, period * T::lit(1.1), h, sys)?;
    let offset = orbit.samples.closure_offset();
    let target = s0.q + offset;
    let first = steps_per_period / 2;
    let (ret, closure) = (first..traj.len())
        .map(|i| (i, (traj.states[i].q - target).norm()))
        .fold((first, T::infinity()), |a, b| if b.1 < a.1 { b } else { a });
    let speed_scale = match orbit.kind {
        OrbitKind::Brake => orbit.max_speed(),
        _ => s0.qd.norm(),
    }
    .max(T::epsilon());
    let velocity_mismatch = (traj.states[ret].qd - s0.qd).norm() / speed_scale;
    let energy_drift = traj.energy_drift / orbit.energy.abs().max(T::one());
    let path: Vec<Vec2<T>> = traj.states[..=ret].iter().map(|s| s.q).collect();
    let winding = path_winding(&path).ok().map(|w| w.class);
    let symmetry = if orbit.kind == OrbitKind::Brake {
        let n = steps_per_period.min(traj.len() - 1);
        Some((0..=n).map(|i| (traj.states[i].q - traj.states[n - i].q).norm()).fold(T::zero(), |m, d| m.max(d)))
    } else {
        None
    };
    let passed = closure <= opts.closure_tol
        && velocity_mismatch <= opts.velocity_tol
        && energy_drift <= opts.drift_tol
        && winding == Some(orbit.winding_class())
        && symmetry.map_or(true, |s| s <= opts.symmetry_tol);
    Ok(Validation { closure, velocity_mismatch, energy_drift, winding, symmetry, passed })
}

/// Runs [`validate_orbit`], stores the outcome, and fails with
/// `ValidationFailed` if any check does not pass.
pub(crate) fn validated<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    mut orbit: Orbit<T>,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<Orbit<T>> {
    let v = validate_orbit(&orbit, sys, opts)?;
    orbit.validation = Some(v);
    if !v.passed {
        return Err(Error::ValidationFailed(format!(
            "closure {:.3e} rad, velocity mismatch {:.3e}, drift {:.3e}, winding {:?} (want {:?}), symmetry {:?}",
            v.closure.to_f64_lossy(),
            v.velocity_mismatch.to_f64_lossy(),
            v.energy_drift.to_f64_lossy(),
            v.winding,
            orbit.winding_class(),
            v.symmetry.map(|s| s.to_f64_lossy()),
        )));
    }
    Ok(orbit)
}

/// Kind of a converged orbit: toroidal for nonzero winding, brake when one
/// period contains two stops with all energy potential, disk otherwise.
pub fn classify<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    orbit: &Orbit<T>,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<OrbitKind> {
    let class = if orbit.samples.is_closed() {
        let w = winding_number(&orbit.samples).map_err(|e| Error::Unclassifiable(e.to_string()))?;
        if w.class != orbit.samples.winding_class() {
            return Err(Error::Unclassifiable(format!(
                "sampled winding {:?} disagrees with stored class {:?}",
                w.class,
                orbit.samples.winding_class()
            )));
        }
        w.class
    } else {
        (0, 0)
    };
    if class != (0, 0) {
        return Ok(OrbitKind::Toroidal { class });
    }
    if !(orbit.period > T::zero()) {
        return Err(Error::Unclassifiable("non-positive period".into()));
    }
    let h = even_step(orbit.period, opts.dt);
    let traj = simulate(&orbit.initial_state(), orbit.period, h, sys)?;
    let tol = T::lit(1e-6) * orbit.energy.abs().max(T::one());
    let stops = detect_brake_points(&traj, sys)
        .into_iter()
        .filter(|b| b.time < orbit.period - h * T::lit(0.5))
        .filter(|b| (sys.potential(&b.q) - orbit.energy).abs() <= tol)
        .count();
    if stops >= 2 {
        return Ok(OrbitKind::Brake);
    }
    let thr = brake_threshold(orbit.energy, sys);
    let min_speed = traj.states.iter().fold(T::infinity(), |m, s| m.min(s.qd.norm()));
    if min_speed > thr {
        Ok(OrbitKind::Disk)
    } else {
        Err(Error::Unclassifiable(format!("contractible orbit stops {stops} time(s) per period")))
    }
}
