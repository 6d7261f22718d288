//! String relaxation: a discretized curve evolves under the geodesic flow
//! `∂γ/∂t = γ'' + Γ(γ)γ'γ'` until the discrete geodesic residual vanishes.
//!
//! Open strings keep their endpoints pinned. Closed strings carry a winding
//! class and are stepped with cyclic stencils that add the closure offset at
//! the seam, so the class is preserved exactly.

mod string;

pub use string::{path_winding, winding_number, DiscreteString, LoopSeed, Winding, MIN_VERTICES, WINDING_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{arc_length, segment_lengths, tension_field, Metric};
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal, Vec2};
use crate::scalar::Scalar;

/// Default vertex count.
pub const DEFAULT_VERTICES: usize = 200;

/// Time-stepping scheme for the string PDE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Explicit,
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions<T> {
    pub scheme: Scheme,
    /// Pseudo-time step; `None` picks `100·Δs²` (semi-implicit) or half the
    /// stability bound (explicit).
    pub dt: Option<T>,
    pub max_iter: usize,
    /// Max geodesic residual for convergence.
    pub eps_geo: T,
    /// Convergence velocity `Σ‖γ_{t−1}(k) − γ_t(k)‖` for convergence.
    pub eps_vel: T,
    /// Check vertex distribution every this many iterations (0 disables).
    pub reparam_every: usize,
    /// Redistribute when max/min Riemannian segment length exceeds this.
    pub reparam_ratio: T,
}

impl<T: Scalar> Default for RelaxOptions<T> {
    fn default() -> Self {
        Self {
            scheme: Scheme::SemiImplicit,
            dt: None,
            max_iter: 100_000,
            eps_geo: T::lit(1e-6),
            eps_vel: T::lit(1e-10),
            reparam_every: 100,
            reparam_ratio: T::lit(1.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxReport<T> {
    pub iterations: usize,
    pub final_length: T,
    /// Riemannian length before each step.
    pub length_history: Vec<T>,
    /// `v(t)` after each step.
    pub convergence_velocity: Vec<T>,
    pub final_residual: T,
    pub converged: bool,
    /// Number of vertex redistributions performed.
    pub redistributions: usize,
}

/// Explicit stability bound `0.45·Δs²·min_k(λ_min(g)/λ_max(g))` at the
/// current vertices.
pub fn explicit_stability_bound<T: Scalar, M: Metric<T> + ?Sized>(s: &DiscreteString<T>, metric: &M) -> T {
    let ds = s.spacing();
    let ratio = s
        .vertices()
        .iter()
        .map(|q| {
            let ev = metric.eval(q).g.sym_eigenvalues();
            ev[0] / ev[1]
        })
        .fold(T::one(), |m, r| m.min(r));
    T::lit(0.45) * ds * ds * ratio.max(T::zero())
}

fn check_dt<T: Scalar>(dt: T) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("pseudo-time step must be positive, got {dt}")));
    }
    Ok(())
}

/// One explicit Euler step of the discrete string PDE.
pub fn relax_step_explicit<T: Scalar, M: Metric<T> + ?Sized>(
    s: &DiscreteString<T>,
    metric: &M,
    dt: T,
) -> Result<DiscreteString<T>> {
    check_dt(dt)?;
    let bound = explicit_stability_bound(s, metric);
    if dt > bound {
        return Err(Error::StabilityViolation { dt: dt.to_f64_lossy(), bound: bound.to_f64_lossy() });
    }
    let (lap, force) = tension_field(s, metric)?;
    Ok(apply_explicit(s, &lap, &force, dt))
}

fn apply_explicit<T: Scalar>(s: &DiscreteString<T>, lap: &[Vec2<T>], force: &[Vec2<T>], dt: T) -> DiscreteString<T> {
    let mut out = s.clone();
    let range = s.free_range();
    let verts = out.vertices_mut();
    for (i, k) in range.enumerate() {
        verts[k] += (lap[i] + force[i]) * dt;
    }
    out
}

/// One semi-implicit step: the second-difference term is implicit (a
/// tridiagonal, or cyclic tridiagonal, solve per coordinate) and the
/// Christoffel term explicit.
pub fn relax_step_implicit<T: Scalar, M: Metric<T> + ?Sized>(
    s: &DiscreteString<T>,
    metric: &M,
    dt: T,
) -> Result<DiscreteString<T>> {
    check_dt(dt)?;
    let (_, force) = tension_field(s, metric)?;
    apply_implicit(s, &force, dt)
}

fn apply_implicit<T: Scalar>(s: &DiscreteString<T>, force: &[Vec2<T>], dt: T) -> Result<DiscreteString<T>> {
    let ds = s.spacing();
    let r = dt / (ds * ds);
    let diag = T::one() + T::lit(2.0) * r;
    let off = -r;
    let mut out = s.clone();
    let n = s.len();
    let verts = s.vertices();
    for a in 0..2 {
        if s.is_closed() {
            let offset = s.closure_offset()[a];
            let mut rhs: Vec<T> = (0..n).map(|k| verts[k][a] + dt * force[k][a]).collect();
            // γ₋₁ = γ_{K−1} − offset, γ_K = γ₀ + offset
            rhs[0] -= r * offset;
            rhs[n - 1] += r * offset;
            let x = solve_cyclic_tridiagonal(off, diag, off, &rhs)?;
            for (k, v) in x.into_iter().enumerate() {
                out.vertices_mut()[k][a] = v;
            }
        } else {
            let m = n - 2;
            let mut rhs: Vec<T> = (0..m).map(|i| verts[i + 1][a] + dt * force[i][a]).collect();
            rhs[0] += r * verts[0][a];
            rhs[m - 1] += r * verts[n - 1][a];
            let x = solve_tridiagonal(off, diag, off, &rhs)?;
            for (i, v) in x.into_iter().enumerate() {
                out.vertices_mut()[i + 1][a] = v;
            }
        }
    }
    if out.vertices().iter().any(|v| !v.is_finite()) {
        return Err(Error::SolveFailure("non-finite vertex after implicit step".into()));
    }
    Ok(out)
}

/// Moves vertices along the current polyline so that consecutive vertices
/// are equally spaced in Riemannian length. Endpoints of open strings and
/// vertex 0 of closed strings stay put.
pub fn redistribute<T: Scalar, M: Metric<T> + ?Sized>(s: &DiscreteString<T>, metric: &M) -> DiscreteString<T> {
    let seg = segment_lengths(s, metric);
    let total: T = seg.iter().copied().sum();
    if !(total > T::zero()) {
        return s.clone();
    }
    let nseg = seg.len();
    let mut cum = Vec::with_capacity(nseg + 1);
    let mut c = T::zero();
    cum.push(c);
    for l in &seg {
        c += *l;
        cum.push(c);
    }
    let mut out = s.clone();
    let last_free = if s.is_closed() { s.len() } else { s.len() - 1 };
    let mut i = 0usize;
    for j in 1..last_free {
        let target = total * T::from_count(j) / T::from_count(nseg);
        while i + 1 < nseg && cum[i + 1] < target {
            i += 1;
        }
        let a = s.ext(i as isize);
        let b = s.ext(i as isize + 1);
        let w = if seg[i] > T::zero() { ((target - cum[i]) / seg[i]).max(T::zero()).min(T::one()) } else { T::zero() };
        out.vertices_mut()[j] = a + (b - a) * w;
    }
    out
}

fn spacing_ratio<T: Scalar, M: Metric<T> + ?Sized>(s: &DiscreteString<T>, metric: &M) -> T {
    let seg = segment_lengths(s, metric);
    let max = seg.iter().fold(T::zero(), |m, v| m.max(*v));
    let min = seg.iter().fold(T::infinity(), |m, v| m.min(*v));
    if min > T::zero() {
        max / min
    } else {
        T::infinity()
    }
}

/// Iterates relaxation steps until the max geodesic residual is at most
/// `eps_geo` and the convergence velocity at most `eps_vel`, or `max_iter`
/// steps have run. A report is returned either way; only collapse of a
/// closed string and metric degeneracy are errors.
pub fn relax<T: Scalar, M: Metric<T> + ?Sized>(
    s: &DiscreteString<T>,
    metric: &M,
    opts: &RelaxOptions<T>,
) -> Result<(DiscreteString<T>, RelaxReport<T>)> {
    s.validate()?;
    let mut cur = s.clone();
    let ds = cur.spacing();
    let explicit_dt = |c: &DiscreteString<T>| explicit_stability_bound(c, metric) * T::lit(0.5);
    let collapse_length = T::from_count(cur.len()) * T::lit(1e-6);
    let mut report = RelaxReport {
        iterations: 0,
        final_length: T::zero(),
        length_history: Vec::new(),
        convergence_velocity: Vec::new(),
        final_residual: T::infinity(),
        converged: false,
        redistributions: 0,
    };
    let mut last_velocity = T::infinity();
    loop {
        let (lap, force) = tension_field(&cur, metric)?;
        let residual = lap.iter().zip(&force).map(|(l, f)| (*l + *f).norm()).fold(T::zero(), |m, r| m.max(r));
        let length = arc_length(&cur, metric).length;
        report.final_residual = residual;
        report.final_length = length;
        if cur.is_closed() && length < collapse_length {
            return Err(Error::CollapseDetected { length: length.to_f64_lossy(), iterations: report.iterations });
        }
        if residual <= opts.eps_geo && last_velocity <= opts.eps_vel {
            report.converged = true;
            break;
        }
        if report.iterations >= opts.max_iter {
            break;
        }
        report.length_history.push(length);
        let next = match opts.scheme {
            Scheme::Explicit => {
                let dt = opts.dt.unwrap_or_else(|| explicit_dt(&cur));
                check_dt(dt)?;
                let bound = explicit_stability_bound(&cur, metric);
                if dt > bound {
                    return Err(Error::StabilityViolation { dt: dt.to_f64_lossy(), bound: bound.to_f64_lossy() });
                }
                apply_explicit(&cur, &lap, &force, dt)
            }
            Scheme::SemiImplicit => {
                let dt = opts.dt.unwrap_or(T::lit(100.0) * ds * ds);
                check_dt(dt)?;
                apply_implicit(&cur, &force, dt)?
            }
        };
        last_velocity = cur.vertices().iter().zip(next.vertices()).map(|(a, b)| (*a - *b).norm()).sum();
        report.convergence_velocity.push(last_velocity);
        cur = next;
        report.iterations += 1;
        if opts.reparam_every > 0
            && report.iterations % opts.reparam_every == 0
            && spacing_ratio(&cur, metric) > opts.reparam_ratio
        {
            cur = redistribute(&cur, metric);
            report.redistributions += 1;
            last_velocity = T::infinity();
        }
    }
    Ok((cur, report))
}
