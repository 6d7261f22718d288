//! Natural-parameter continuation of orbit families in the energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MechanicalSystem;
use crate::scalar::Scalar;

use super::brake::{find_brake_from, BrakeGuess};
use super::shooting::{find_disk, PeriodicSeed};
use super::toroidal::search_toroidal_from;
use super::{orbit_distance, Orbit, OrbitKind, OrbitOptions};

/// Why a continuation run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Termination {
    /// All requested steps were taken.
    Completed,
    /// The next energy would leave the range where the family can exist.
    EnergyLimit { energy: f64, limit: f64 },
    /// A step failed even after the maximum number of halvings.
    StepFailure { energy: f64, halvings: usize, reason: String },
}

/// Energy-ordered members of one orbit family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFamily<T> {
    pub members: Vec<Orbit<T>>,
    pub parameter_name: String,
    pub termination: Termination,
}

impl<T: Scalar> OrbitFamily<T> {
    pub fn energies(&self) -> Vec<T> {
        self.members.iter().map(|m| m.energy).collect()
    }

    /// Path deviation between consecutive members.
    pub fn continuity(&self) -> Vec<T> {
        self.members.windows(2).map(|w| orbit_distance(&w[0], &w[1])).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// `StepFailure` as an error, for callers that want `?` semantics.
    pub fn failure(&self) -> Option<Error> {
        match &self.termination {
            Termination::StepFailure { energy, halvings, reason } => {
                Some(Error::StepFailure { energy: *energy, halvings: *halvings, reason: reason.clone() })
            }
            _ => None,
        }
    }
}

fn resolve<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    prev: &Orbit<T>,
    energy: T,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<Orbit<T>> {
    match prev.kind {
        OrbitKind::Brake => find_brake_from(&BrakeGuess::from_orbit(prev, sys), energy, sys, opts),
        OrbitKind::Disk => find_disk(&PeriodicSeed::from_orbit(prev, opts.segments), energy, sys, opts),
        OrbitKind::Toroidal { .. } => search_toroidal_from(&prev.samples, energy, sys, opts).map(|s| s.orbit),
    }
}

/// Steps the energy by `ΔE` up to `steps` times, re-solving from the previous
/// member. A failed or discontinuous step (path deviation above the trust
/// distance) is retried with half the increment; the increment never drops
/// below `ΔE / 2^max_halvings`, and a failure at that size ends the family.
/// After a step that needed no halving the increment doubles again, up to
/// `ΔE`. Brake families stop before the energy reaches the potential maximum.
pub fn continue_family<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    start: &Orbit<T>,
    delta_e: T,
    steps: usize,
    sys: &S,
    opts: &OrbitOptions<T>,
) -> Result<OrbitFamily<T>> {
    opts.validate()?;
    if !delta_e.is_finite() {
        return Err(Error::InvalidArgument(format!("energy step must be finite (got {delta_e})")));
    }
    let (_, umax) = sys.potential_bounds();
    let mut members = vec![start.clone()];
    let mut step = delta_e;
    let min_step = delta_e.abs() / T::lit(2.0).powi(opts.max_halvings as i32);
    let mut termination = Termination::Completed;
    'outer: for _ in 0..steps {
        let prev = members.last().cloned().ok_or(Error::InvalidArgument("empty family".into()))?;
        let mut halvings = 0;
        loop {
            let target = prev.energy + step;
            if prev.kind == OrbitKind::Brake && target >= umax {
                termination = Termination::EnergyLimit { energy: target.to_f64_lossy(), limit: umax.to_f64_lossy() };
                break 'outer;
            }
            let attempt = resolve(&prev, target, sys, opts).and_then(|o| {
                let d = orbit_distance(&prev, &o);
                if o.kind != prev.kind {
                    Err(Error::ValidationFailed(format!("member changed kind to {}", o.kind.name())))
                } else if d > opts.trust_distance {
                    Err(Error::ValidationFailed(format!("path moved {d} rad, beyond the trust distance")))
                } else {
                    Ok(o)
                }
            });
            match attempt {
                Ok(o) => {
                    members.push(o);
                    if halvings == 0 {
                        let grown = step * T::lit(2.0);
                        step = if grown.abs() > delta_e.abs() { delta_e } else { grown };
                    }
                    break;
                }
                Err(_) if (step * T::lit(0.5)).abs() >= min_step && step != T::zero() => {
                    halvings += 1;
                    step *= T::lit(0.5);
                }
                Err(e) => {
                    termination = Termination::StepFailure {
                        energy: target.to_f64_lossy(),
                        halvings,
                        reason: e.to_string(),
                    };
                    break 'outer;
                }
            }
        }
    }
    Ok(OrbitFamily { members, parameter_name: "energy".into(), termination })
}
