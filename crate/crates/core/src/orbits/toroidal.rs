//! Toroidal orbits: closed strings of a fixed winding class relaxed under the
//! Jacobi metric, then (optionally) refined by multiple shooting.
//!
//! The relaxed string alone is accurate to the discretization, which is not
//! enough to close a simulated period on unstable orbits; the shooting
//! refinement starts from the string and converges to the nearby exact orbit.

use crate::error::{Error, Result};
use crate::geometry::{reconstruct_time, reconstruct_velocity, JacobiMetric};
use crate::model::MechanicalSystem;
use crate::relaxation::{relax, winding_number, DiscreteString, RelaxReport};
use crate::scalar::Scalar;

use super::shooting::{solve_periodic, PeriodicSeed};
use super::{closed_orbit_from_segments, validated, Orbit, OrbitKind, OrbitOptions};

/// Result of a toroidal search, keeping the relaxation artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct ToroidalSearch<T> {
    pub orbit: Orbit<T>,
    pub string: DiscreteString<T>,
    pub report: RelaxReport<T>,
}

/// Toroidal orbit in class `(α₁, α₂)` at energy `E`, starting from the
/// canonical loop of the class.
pub fn find_toroidal<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    class: (i32, i32),
    energy: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<Orbit<T>> {
    search_toroidal(class, energy, sys, opts).map(|s| s.orbit)
}

pub fn search_toroidal<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    class: (i32, i32),
    energy: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<ToroidalSearch<T>> {
    if class == (0, 0) {
        return Err(Error::NullClassWithoutSeed);
    }
    let seed = DiscreteString::closed_loop(class, opts.vertices, None)?;
    search_toroidal_from(&seed, energy, sys, opts)
}

/// Toroidal search from an explicit closed string (e.g. a previous member of
/// a family).
pub fn search_toroidal_from<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    seed: &DiscreteString<T>,
    energy: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<ToroidalSearch<T>> {
    opts.validate()?;
    if !seed.is_closed() {
        return Err(Error::NotClosed);
    }
    let class = seed.winding_class();
    if class == (0, 0) {
        return Err(Error::NullClassWithoutSeed);
    }
    let metric = JacobiMetric::new(sys, energy);
    let (string, report) = relax(seed, &metric, &opts.relax)?;
    let accepted = report.converged || (opts.polish && report.final_residual <= opts.seed_residual);
    if !accepted {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            residual: report.final_residual.to_f64_lossy(),
        });
    }
    let w = winding_number(&string)?;
    if w.class != class {
        return Err(Error::ValidationFailed(format!("relaxed string winds {:?}, expected {class:?}", w.class)));
    }
    let orbit = if opts.polish {
        let seed = PeriodicSeed::from_string(&string, energy, opts.segments, sys)?;
        let sol = solve_periodic(&seed, energy, sys, opts)?;
        closed_orbit_from_segments(&sol.states, sol.period, class, energy, sol.residual, sys, opts)?
    } else {
        string_orbit(&string, energy, report.final_residual, sys)?
    };
    let orbit = validated(orbit, sys, opts)?;
    Ok(ToroidalSearch { orbit, string, report })
}

/// Orbit read directly off a relaxed string: reconstructed times and
/// tangent-scaled velocities at the vertices.
fn string_orbit<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    string: &DiscreteString<T>,
    energy: T,
    residual: T,
    sys: &S,
) -> Result<Orbit<T>> {
    let mut times = reconstruct_time(string, energy, sys)?;
    let period = times.pop().ok_or(Error::NotClosed)?;
    let velocities = (0..string.len())
        .map(|k| reconstruct_velocity(&string.vertices()[k], &string.tangent(k), energy, sys).map(|s| s.qd))
        .collect::<Result<Vec<_>>>()?;
    Ok(Orbit {
        samples: string.clone(),
        times,
        velocities,
        energy,
        period,
        kind: OrbitKind::Toroidal { class: string.winding_class() },
        residual,
        brake_points: None,
        validation: None,
    })
}
