//! Conservative mechanical systems in manipulator form
//! `M(q) q̈ + C(q, q̇) q̇ + g(q) = 0`, and the planar double pendulum.
//!
//! Angles follow the usual robotics convention: `q1` is measured from the
//! downward vertical, `q2` relative to the first link. Point masses sit at
//! the link tips. The zero level of the potential is the pivot height.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigen, Mat2, Vec2};
use crate::scalar::Scalar;

/// Physical parameters of the double pendulum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechParams<T> {
    pub m1: T,
    pub m2: T,
    pub l1: T,
    pub l2: T,
    pub grav: T,
}

impl<T: Scalar> Default for MechParams<T> {
    fn default() -> Self {
        Self {
            m1: T::one(),
            m2: T::one(),
            l1: T::one(),
            l2: T::one(),
            grav: T::lit(9.81),
        }
    }
}

impl<T: Scalar> MechParams<T> {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("m1", self.m1, false),
            ("m2", self.m2, false),
            ("l1", self.l1, false),
            ("l2", self.l2, false),
            ("grav", self.grav, true),
        ];
        for (name, v, allow_zero) in checks {
            let ok = v.is_finite() && if allow_zero { v >= T::zero() } else { v > T::zero() };
            if !ok {
                return Err(Error::InvalidParams(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Joint-space state: configuration and velocity. Angles are stored unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State<T> {
    pub q: Vec2<T>,
    pub qd: Vec2<T>,
}

impl<T: Scalar> State<T> {
    pub fn new(q: Vec2<T>, qd: Vec2<T>) -> Self {
        Self { q, qd }
    }

    pub fn at_rest(q: Vec2<T>) -> Self {
        Self { q, qd: Vec2::zero() }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.qd.is_finite()
    }
}

/// A conservative 2-DoF system in manipulator form.
///
/// Implementors provide the analytic mass matrix, its configuration
/// derivatives and the potential with its gradient and Hessian; the Coriolis
/// matrix follows from the mass-matrix partials.
pub trait MechanicalSystem<T: Scalar>: Send + Sync {
    fn mass_matrix(&self, q: &Vec2<T>) -> Mat2<T>;

    /// `[∂M/∂q1, ∂M/∂q2]`.
    fn mass_matrix_partials(&self, q: &Vec2<T>) -> [Mat2<T>; 2];

    fn potential(&self, q: &Vec2<T>) -> T;

    /// Generalized gravity forces `g(q) = ∂U/∂q`.
    fn gravity_vector(&self, q: &Vec2<T>) -> Vec2<T>;

    /// `∂g/∂q`, the stiffness of the potential.
    fn gravity_jacobian(&self, q: &Vec2<T>) -> Mat2<T>;

    /// Global minimum and maximum of the potential.
    fn potential_bounds(&self) -> (T, T);

    /// Configuration of the stable (minimum-potential) equilibrium.
    fn stable_equilibrium(&self) -> Vec2<T>;

    /// Lower bound of the smallest mass-matrix eigenvalue over all configurations.
    fn min_mass_eigenvalue(&self) -> T;

    /// Coriolis/centrifugal matrix built from Christoffel symbols of the
    /// first kind of `M`; satisfies `Ṁ − 2C` skew-symmetric.
    fn coriolis_matrix(&self, q: &Vec2<T>, qd: &Vec2<T>) -> Mat2<T> {
        let dm = self.mass_matrix_partials(q);
        let half = T::lit(0.5);
        let mut c = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = T::zero();
                for k in 0..2 {
                    s += half * (dm[k].0[i][j] + dm[j].0[i][k] - dm[i].0[j][k]) * qd[k];
                }
                c.0[i][j] = s;
            }
        }
        c
    }
}

/// Planar double pendulum with point masses at the link tips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePendulum<T> {
    params: MechParams<T>,
}

impl<T: Scalar> DoublePendulum<T> {
    pub fn new(params: MechParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &MechParams<T> {
        &self.params
    }

    /// Cartesian positions of the two point masses (y up, pivot at origin).
    pub fn cartesian(&self, q: &Vec2<T>) -> [Vec2<T>; 2] {
        let p = &self.params;
        let a = q[0];
        let b = q[0] + q[1];
        let p1 = Vec2::new(p.l1 * a.sin(), -p.l1 * a.cos());
        let p2 = p1 + Vec2::new(p.l2 * b.sin(), -p.l2 * b.cos());
        [p1, p2]
    }
}

impl<T: Scalar> Default for DoublePendulum<T> {
    fn default() -> Self {
        Self { params: MechParams::default() }
    }
}

impl<T: Scalar> MechanicalSystem<T> for DoublePendulum<T> {
    fn mass_matrix(&self, q: &Vec2<T>) -> Mat2<T> {
        let p = &self.params;
        let c2 = q[1].cos();
        let two = T::lit(2.0);
        let m22 = p.m2 * p.l2 * p.l2;
        let m12 = m22 + p.m2 * p.l1 * p.l2 * c2;
        let m11 = (p.m1 + p.m2) * p.l1 * p.l1 + m22 + two * p.m2 * p.l1 * p.l2 * c2;
        Mat2::symmetric(m11, m12, m22)
    }

    fn mass_matrix_partials(&self, q: &Vec2<T>) -> [Mat2<T>; 2] {
        let p = &self.params;
        let h = p.m2 * p.l1 * p.l2 * q[1].sin();
        [Mat2::zero(), Mat2::symmetric(-T::lit(2.0) * h, -h, T::zero())]
    }

    fn potential(&self, q: &Vec2<T>) -> T {
        let p = &self.params;
        -(p.m1 + p.m2) * p.grav * p.l1 * q[0].cos() - p.m2 * p.grav * p.l2 * (q[0] + q[1]).cos()
    }

    fn gravity_vector(&self, q: &Vec2<T>) -> Vec2<T> {
        let p = &self.params;
        let s12 = p.m2 * p.grav * p.l2 * (q[0] + q[1]).sin();
        Vec2::new((p.m1 + p.m2) * p.grav * p.l1 * q[0].sin() + s12, s12)
    }

    fn gravity_jacobian(&self, q: &Vec2<T>) -> Mat2<T> {
        let p = &self.params;
        let c12 = p.m2 * p.grav * p.l2 * (q[0] + q[1]).cos();
        Mat2::symmetric((p.m1 + p.m2) * p.grav * p.l1 * q[0].cos() + c12, c12, c12)
    }

    fn potential_bounds(&self) -> (T, T) {
        let p = &self.params;
        let a = (p.m1 + p.m2) * p.grav * p.l1 + p.m2 * p.grav * p.l2;
        (-a, a)
    }

    fn stable_equilibrium(&self) -> Vec2<T> {
        Vec2::zero()
    }

    fn min_mass_eigenvalue(&self) -> T {
        // M depends on q2 only; λ_min(q2) is smooth, so a fine scan plus a
        // small safety margin is a valid floor.
        let n = 720;
        let mut lo = T::infinity();
        for i in 0..n {
            let q2 = T::two_pi() * T::from_count(i) / T::from_count(n);
            lo = lo.min(self.mass_matrix(&Vec2::new(T::zero(), q2)).sym_eigenvalues()[0]);
        }
        lo * T::lit(0.999)
    }
}

pub fn kinetic_energy<T: Scalar, S: MechanicalSystem<T> + ?Sized>(sys: &S, s: &State<T>) -> T {
    T::lit(0.5) * sys.mass_matrix(&s.q).quad(&s.qd, &s.qd)
}

/// Hamiltonian `H = T + U`.
pub fn total_energy<T: Scalar, S: MechanicalSystem<T> + ?Sized>(sys: &S, s: &State<T>) -> T {
    kinetic_energy(sys, s) + sys.potential(&s.q)
}

/// Forward dynamics `q̈ = −M⁻¹(C q̇ + g)`.
pub fn accel<T: Scalar, S: MechanicalSystem<T> + ?Sized>(sys: &S, s: &State<T>) -> Vec2<T> {
    let m = sys.mass_matrix(&s.q);
    let c = sys.coriolis_matrix(&s.q, &s.qd);
    let rhs = -(c.mul_vec(&s.qd) + sys.gravity_vector(&s.q));
    // M is 2×2 SPD; Cramer's rule is exact enough and branch-free.
    let det = m.det();
    Vec2::new(
        (rhs[0] * m.0[1][1] - m.0[0][1] * rhs[1]) / det,
        (m.0[0][0] * rhs[1] - m.0[1][0] * rhs[0]) / det,
    )
}

/// Residual of the equations of motion for a candidate acceleration.
pub fn dynamics_residual<T: Scalar, S: MechanicalSystem<T> + ?Sized>(
    sys: &S,
    s: &State<T>,
    qdd: &Vec2<T>,
) -> Vec2<T> {
    sys.mass_matrix(&s.q).mul_vec(qdd) + sys.coriolis_matrix(&s.q, &s.qd).mul_vec(&s.qd) + sys.gravity_vector(&s.q)
}

/// Small-oscillation data at an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization<T> {
    pub equilibrium: Vec2<T>,
    pub mass_at_eq: Mat2<T>,
    pub stiffness_at_eq: Mat2<T>,
    /// Ascending, in rad/s.
    pub eigenfrequencies: [T; 2],
    /// Mass-normalized mode shapes, ordered like `eigenfrequencies`.
    pub eigenvectors: [Vec2<T>; 2],
}

impl<T: Scalar> Linearization<T> {
    pub fn period(&self, mode: usize) -> T {
        T::two_pi() / self.eigenfrequencies[mode]
    }

    /// Unit-length (Euclidean) direction of a mode shape.
    pub fn direction(&self, mode: usize) -> Vec2<T> {
        let v = self.eigenvectors[mode];
        v * (T::one() / v.norm())
    }
}

/// Linearizes the dynamics at `q_eq` and solves `K v = ω² M v`.
pub fn linearize<T: Scalar, S: MechanicalSystem<T> + ?Sized>(q_eq: &Vec2<T>, sys: &S) -> Result<Linearization<T>> {
    let g = sys.gravity_vector(q_eq);
    let scale = sys.potential_bounds().1.abs().max(T::one());
    let tol = T::lit(1e-10).max(T::lit(100.0) * T::epsilon() * scale);
    if g.norm() > tol {
        return Err(Error::NotAnEquilibrium { residual: g.norm().to_f64_lossy() });
    }
    let mass = sys.mass_matrix(q_eq);
    let stiffness = sys.gravity_jacobian(q_eq);
    let (vals, vecs) = generalized_eigen(&stiffness, &mass)
        .ok_or_else(|| Error::InvalidParams("mass matrix not positive definite".into()))?;
    // Negative ω² (unstable equilibrium) is reported as a negative frequency.
    let freq = vals.map(|l| if l >= T::zero() { l.sqrt() } else { -(-l).sqrt() });
    Ok(Linearization {
        equilibrium: *q_eq,
        mass_at_eq: mass,
        stiffness_at_eq: stiffness,
        eigenfrequencies: freq,
        eigenvectors: vecs,
    })
}
