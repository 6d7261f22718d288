//! Jacobi metric `2(E − U(q))·M(q)` and the Riemannian quantities built on
//! it: Christoffel symbols, arc length, the discrete geodesic residual, and
//! the reconstruction of time and velocity along a geodesic path.
//!
//! Where `E − U(q)` falls below the Hill-boundary clamp the conformal factor
//! is held at `2·ε_hill` and the evaluation is flagged degenerate.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::model::{MechanicalSystem, State};
use crate::relaxation::DiscreteString;
use crate::scalar::Scalar;

/// Metric at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEval<T> {
    pub g: Mat2<T>,
    pub g_inv: Mat2<T>,
    /// `2(E − U(q))` for the Jacobi metric (clamped when degenerate); 1 for test metrics.
    pub conformal_factor: T,
    pub degenerate: bool,
}

/// Christoffel symbols of the second kind, `gamma[a][b][c] = Γᵃ_bc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelEval<T> {
    pub gamma: [[[T; 2]; 2]; 2],
}

impl<T: Scalar> ChristoffelEval<T> {
    /// `Γᵃ_bc uᵇ vᶜ`.
    #[inline]
    pub fn contract(&self, u: &Vec2<T>, v: &Vec2<T>) -> Vec2<T> {
        let mut out = Vec2::zero();
        for a in 0..2 {
            let mut s = T::zero();
            for b in 0..2 {
                for c in 0..2 {
                    s += self.gamma[a][b][c] * u[b] * v[c];
                }
            }
            out[a] = s;
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.gamma.iter().flatten().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// A Riemannian metric on the 2-D configuration chart.
pub trait Metric<T: Scalar>: Sync {
    fn eval(&self, q: &Vec2<T>) -> MetricEval<T>;

    /// `[∂g/∂q1, ∂g/∂q2]`.
    fn partials(&self, q: &Vec2<T>) -> [Mat2<T>; 2];
}

/// Hill-boundary clamp width `1e-9·max(1, |E|)`.
pub fn hill_epsilon<T: Scalar>(energy: T) -> T {
    T::lit(1e-9) * energy.abs().max(T::one())
}

/// Jacobi metric of a mechanical system at fixed total energy.
#[derive(Debug, Clone, Copy)]
pub struct JacobiMetric<'a, T, S: ?Sized> {
    pub system: &'a S,
    pub energy: T,
}

impl<'a, T: Scalar, S: MechanicalSystem<T> + ?Sized> JacobiMetric<'a, T, S> {
    pub fn new(system: &'a S, energy: T) -> Self {
        Self { system, energy }
    }

    /// `E − U(q)`.
    pub fn margin(&self, q: &Vec2<T>) -> T {
        self.energy - self.system.potential(q)
    }
}

impl<T: Scalar, S: MechanicalSystem<T> + ?Sized> Metric<T> for JacobiMetric<'_, T, S> {
    fn eval(&self, q: &Vec2<T>) -> MetricEval<T> {
        let eps = hill_epsilon(self.energy);
        let margin = self.margin(q);
        let two = T::lit(2.0);
        let degenerate = !(margin > eps);
        let factor = if degenerate { two * eps } else { two * margin };
        let m = self.system.mass_matrix(q);
        let g = m.scale(factor);
        let g_inv = m.inverse().map(|mi| mi.scale(T::one() / factor)).unwrap_or_else(Mat2::zero);
        MetricEval { g, g_inv, conformal_factor: factor, degenerate }
    }

    fn partials(&self, q: &Vec2<T>) -> [Mat2<T>; 2] {
        let two = T::lit(2.0);
        let factor = two * self.margin(q);
        let m = self.system.mass_matrix(q);
        let dm = self.system.mass_matrix_partials(q);
        let du = self.system.gravity_vector(q);
        // ∂/∂qᵏ [2(E−U)M] = −2 ∂U/∂qᵏ M + 2(E−U) ∂M/∂qᵏ
        [0, 1].map(|k| m.scale(-two * du[k]) + dm[k].scale(factor))
    }
}

/// Flat metric `δᵢⱼ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanMetric;

impl<T: Scalar> Metric<T> for EuclideanMetric {
    fn eval(&self, _q: &Vec2<T>) -> MetricEval<T> {
        MetricEval { g: Mat2::identity(), g_inv: Mat2::identity(), conformal_factor: T::one(), degenerate: false }
    }

    fn partials(&self, _q: &Vec2<T>) -> [Mat2<T>; 2] {
        [Mat2::zero(); 2]
    }
}

/// Position-independent SPD metric.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMetric<T>(pub Mat2<T>);

impl<T: Scalar> Metric<T> for ConstantMetric<T> {
    fn eval(&self, _q: &Vec2<T>) -> MetricEval<T> {
        MetricEval {
            g: self.0,
            g_inv: self.0.inverse().unwrap_or_else(Mat2::zero),
            conformal_factor: T::one(),
            degenerate: false,
        }
    }

    fn partials(&self, _q: &Vec2<T>) -> [Mat2<T>; 2] {
        [Mat2::zero(); 2]
    }
}

/// Unit sphere in latitude/longitude chart, `q = (θ, φ)`, `g = diag(1, cos²θ)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SphereChartMetric;

impl<T: Scalar> Metric<T> for SphereChartMetric {
    fn eval(&self, q: &Vec2<T>) -> MetricEval<T> {
        let c2 = q[0].cos().powi(2);
        MetricEval {
            g: Mat2::new(T::one(), T::zero(), T::zero(), c2),
            g_inv: Mat2::new(T::one(), T::zero(), T::zero(), T::one() / c2),
            conformal_factor: T::one(),
            degenerate: c2 <= T::zero(),
        }
    }

    fn partials(&self, q: &Vec2<T>) -> [Mat2<T>; 2] {
        let d = -T::lit(2.0) * q[0].cos() * q[0].sin();
        [Mat2::new(T::zero(), T::zero(), T::zero(), d), Mat2::zero()]
    }
}

/// Convenience constructor mirroring the Jacobi metric at `(q, E)`.
pub fn jacobi_metric<T: Scalar, S: MechanicalSystem<T> + ?Sized>(q: &Vec2<T>, energy: T, sys: &S) -> MetricEval<T> {
    JacobiMetric::new(sys, energy).eval(q)
}

/// `Γᵃ_bc = ½ gᵃⁱ (∂_c g_ib + ∂_b g_ic − ∂_i g_bc)`.
pub fn christoffel<T: Scalar, M: Metric<T> + ?Sized>(metric: &M, q: &Vec2<T>) -> Result<ChristoffelEval<T>> {
    let ev = metric.eval(q);
    if ev.degenerate {
        return Err(degenerate_at(q, ev.conformal_factor / T::lit(2.0)));
    }
    let dg = metric.partials(q);
    Ok(christoffel_from(&ev.g_inv, &dg))
}

pub(crate) fn christoffel_from<T: Scalar>(g_inv: &Mat2<T>, dg: &[Mat2<T>; 2]) -> ChristoffelEval<T> {
    let half = T::lit(0.5);
    let mut first = [[[T::zero(); 2]; 2]; 2]; // [i][b][c]
    for i in 0..2 {
        for b in 0..2 {
            for c in b..2 {
                let v = dg[c].0[i][b] + dg[b].0[i][c] - dg[i].0[b][c];
                first[i][b][c] = v;
                first[i][c][b] = v;
            }
        }
    }
    let mut gamma = [[[T::zero(); 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in b..2 {
                let v = half * (g_inv.0[a][0] * first[0][b][c] + g_inv.0[a][1] * first[1][b][c]);
                gamma[a][b][c] = v;
                gamma[a][c][b] = v;
            }
        }
    }
    ChristoffelEval { gamma }
}

pub(crate) fn degenerate_at<T: Scalar>(q: &Vec2<T>, margin: T) -> Error {
    Error::DegenerateMetric { q1: q[0].to_f64_lossy(), q2: q[1].to_f64_lossy(), margin: margin.to_f64_lossy() }
}

/// Christoffel symbols of the Jacobi metric.
pub fn christoffel_jacobi<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    q: &Vec2<T>,
    energy: T,
    sys: &S,
) -> Result<ChristoffelEval<T>> {
    let metric = JacobiMetric::new(sys, energy);
    let ev = metric.eval(q);
    if ev.degenerate {
        return Err(degenerate_at(q, metric.margin(q)));
    }
    Ok(christoffel_from(&ev.g_inv, &metric.partials(q)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcLength<T> {
    pub length: T,
    /// Set when any segment midpoint fell inside the Hill-boundary clamp.
    pub degenerate: bool,
}

/// Riemannian length with the metric sampled at segment midpoints.
pub fn arc_length<T: Scalar, M: Metric<T> + ?Sized>(curve: &DiscreteString<T>, metric: &M) -> ArcLength<T> {
    let half = T::lit(0.5);
    let mut length = T::zero();
    let mut degenerate = false;
    for (a, b) in curve.segments() {
        let mid = (a + b) * half;
        let ev = metric.eval(&mid);
        degenerate |= ev.degenerate;
        let d = b - a;
        length += ev.g.quad(&d, &d).max(T::zero()).sqrt();
    }
    ArcLength { length, degenerate }
}

/// Segment-wise Riemannian lengths (midpoint rule), including the closing
/// segment of a closed string.
pub fn segment_lengths<T: Scalar, M: Metric<T> + ?Sized>(curve: &DiscreteString<T>, metric: &M) -> Vec<T> {
    let half = T::lit(0.5);
    curve
        .segments()
        .map(|(a, b)| {
            let d = b - a;
            metric.eval(&((a + b) * half)).g.quad(&d, &d).max(T::zero()).sqrt()
        })
        .collect()
}

/// Discrete tension field `γ'' + Γ(γ)γ'γ'` at every free vertex, using
/// central differences in the curve parameter.
pub(crate) fn tension_field<T: Scalar, M: Metric<T> + ?Sized>(
    curve: &DiscreteString<T>,
    metric: &M,
) -> Result<(Vec<Vec2<T>>, Vec<Vec2<T>>)> {
    let ds = curve.spacing();
    let inv_ds2 = T::one() / (ds * ds);
    let inv_2ds = T::one() / (T::lit(2.0) * ds);
    let two = T::lit(2.0);
    let free = curve.free_range();
    let mut lap = Vec::with_capacity(free.len());
    let mut force = Vec::with_capacity(free.len());
    for k in free {
        let prev = curve.ext(k as isize - 1);
        let cur = curve.vertices()[k];
        let next = curve.ext(k as isize + 1);
        let d2 = (next - cur * two + prev) * inv_ds2;
        let d1 = (next - prev) * inv_2ds;
        let gamma = christoffel(metric, &cur)?;
        lap.push(d2);
        force.push(gamma.contract(&d1, &d1));
    }
    Ok((lap, force))
}

/// Euclidean norms of the discrete geodesic-equation residual at each free
/// vertex (interior vertices of an open string, all vertices of a closed one).
pub fn geodesic_residual<T: Scalar, M: Metric<T> + ?Sized>(curve: &DiscreteString<T>, metric: &M) -> Result<Vec<T>> {
    let (lap, force) = tension_field(curve, metric)?;
    Ok(lap.iter().zip(&force).map(|(l, f)| (*l + *f).norm()).collect())
}

/// Scales a path tangent to the velocity with total energy `E`:
/// `q̇ = t·√(2(E − U(q)) / (tᵀ M t))`.
pub fn reconstruct_velocity<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    q: &Vec2<T>,
    tangent: &Vec2<T>,
    energy: T,
    sys: &S,
) -> Result<State<T>> {
    let margin = energy - sys.potential(q);
    if !(margin > T::zero()) {
        return Err(Error::InsufficientEnergy { margin: margin.to_f64_lossy() });
    }
    let mtt = sys.mass_matrix(q).quad(tangent, tangent);
    if !(mtt > T::zero()) || tangent.norm() == T::zero() {
        return Err(Error::ZeroTangent);
    }
    let scale = (T::lit(2.0) * margin / mtt).sqrt();
    Ok(State::new(*q, *tangent * scale))
}

/// Cumulative time along the curve, `dt = √(q'ᵀ M q' / (2(E − U))) ds`,
/// integrated with the trapezoidal rule from central-difference tangents.
///
/// Returns one timestamp per vertex; a closed string gets one extra entry,
/// the time to return to the first vertex (the period).
pub fn reconstruct_time<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    curve: &DiscreteString<T>,
    energy: T,
    sys: &S,
) -> Result<Vec<T>> {
    let n = curve.len();
    let ds = curve.spacing();
    let two = T::lit(2.0);
    let integrand: Vec<T> = (0..n)
        .map(|k| {
            let q = curve.vertices()[k];
            let margin = energy - sys.potential(&q);
            if !(margin > T::zero()) {
                return Err(Error::InsufficientEnergy { margin: margin.to_f64_lossy() });
            }
            let tangent = curve.tangent(k);
            Ok((sys.mass_matrix(&q).quad(&tangent, &tangent) / (two * margin)).sqrt())
        })
        .collect::<Result<_>>()?;
    let mut times = Vec::with_capacity(n + 1);
    let mut t = T::zero();
    times.push(t);
    let half = T::lit(0.5) * ds;
    for k in 1..n {
        t += half * (integrand[k - 1] + integrand[k]);
        times.push(t);
    }
    if curve.is_closed() {
        t += half * (integrand[n - 1] + integrand[0]);
        times.push(t);
    }
    Ok(times)
}
