use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::scalar::{wrap_angle, Scalar};

/// Minimum vertex count; the stencils need interior points on both sides.
pub const MIN_VERTICES: usize = 8;

/// Ordered vertices on the configuration torus, stored as unwrapped angles.
///
/// A closed string implicitly continues past its last vertex with the first
/// vertex shifted by the closure offset `2π·(α₁, α₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteString<T> {
    vertices: Vec<Vec2<T>>,
    closed: bool,
    winding: (i32, i32),
    spacing: T,
}

/// Seed loop added on top of the canonical representative of a class:
/// `center + (ax·cos(2πhu + φ), ay·sin(2πhu + φ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSeed<T> {
    pub center: Vec2<T>,
    pub amplitude: Vec2<T>,
    pub harmonic: u32,
    pub phase: T,
}

impl<T: Scalar> LoopSeed<T> {
    pub fn circle(center: Vec2<T>, radius: T) -> Self {
        Self { center, amplitude: Vec2::splat(radius), harmonic: 1, phase: T::zero() }
    }

    fn at(&self, u: T) -> Vec2<T> {
        let ang = T::two_pi() * T::from_count(self.harmonic as usize) * u + self.phase;
        self.center + Vec2::new(self.amplitude[0] * ang.cos(), self.amplitude[1] * ang.sin())
    }
}

impl<T: Scalar> DiscreteString<T> {
    /// Open string from explicit vertices; spacing `1/(K−1)`.
    pub fn open(vertices: Vec<Vec2<T>>) -> Result<Self> {
        let k = vertices.len();
        let s = Self { spacing: Self::default_spacing(k, false), vertices, closed: false, winding: (0, 0) };
        s.validate()?;
        Ok(s)
    }

    /// Closed string from explicit vertices and winding class; spacing `1/K`.
    pub fn closed(vertices: Vec<Vec2<T>>, winding: (i32, i32)) -> Result<Self> {
        let k = vertices.len();
        let s = Self { spacing: Self::default_spacing(k, true), vertices, closed: true, winding };
        s.validate()?;
        Ok(s)
    }

    fn default_spacing(k: usize, closed: bool) -> T {
        let n = if closed { k } else { k.saturating_sub(1) }.max(1);
        T::one() / T::from_count(n)
    }

    /// `K` vertices linearly interpolated from `qa` to `qb`.
    pub fn open_line(qa: Vec2<T>, qb: Vec2<T>, k: usize) -> Result<Self> {
        if k < MIN_VERTICES {
            return Err(Error::TooFewVertices { got: k, min: MIN_VERTICES });
        }
        let last = T::from_count(k - 1);
        let verts = (0..k)
            .map(|i| {
                if i == k - 1 {
                    qb
                } else {
                    qa + (qb - qa) * (T::from_count(i) / last)
                }
            })
            .collect();
        Self::open(verts)
    }

    /// Closed string in winding class `(α₁, α₂)`:
    /// `q(u) = 2πu·(α₁, α₂) + seed(u)`, `u = j/K`.
    pub fn closed_loop(winding: (i32, i32), k: usize, seed: Option<LoopSeed<T>>) -> Result<Self> {
        if k < MIN_VERTICES {
            return Err(Error::TooFewVertices { got: k, min: MIN_VERTICES });
        }
        if winding == (0, 0) && seed.map_or(true, |s| s.amplitude.norm() == T::zero()) {
            return Err(Error::NullClassWithoutSeed);
        }
        let dir = Vec2::new(T::lit(f64::from(winding.0)), T::lit(f64::from(winding.1))) * T::two_pi();
        let verts = (0..k)
            .map(|j| {
                let u = T::from_count(j) / T::from_count(k);
                let base = dir * u;
                match seed {
                    Some(s) => base + s.at(u),
                    None => base,
                }
            })
            .collect();
        Self::closed(verts, winding)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.vertices.len();
        if k < MIN_VERTICES {
            return Err(Error::TooFewVertices { got: k, min: MIN_VERTICES });
        }
        if !(self.spacing > T::zero()) {
            return Err(Error::InvalidString("spacing must be positive".into()));
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidString("non-finite vertex".into()));
        }
        let lens: Vec<T> = self.segments().map(|(a, b)| (b - a).norm()).collect();
        let mean = lens.iter().copied().sum::<T>() / T::from_count(lens.len());
        let bound = T::lit(10.0) * mean;
        if let Some(i) = lens.iter().position(|&l| l > bound) {
            return Err(Error::InvalidString(format!("segment {i} exceeds 10x the mean segment length")));
        }
        Ok(())
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub(crate) fn vertices_mut(&mut self) -> &mut [Vec2<T>] {
        &mut self.vertices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Stored winding class; `(0, 0)` for open strings.
    #[inline]
    pub fn winding_class(&self) -> (i32, i32) {
        self.winding
    }

    /// Curve-parameter spacing Δs.
    #[inline]
    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn closure_offset(&self) -> Vec2<T> {
        Vec2::new(T::lit(f64::from(self.winding.0)), T::lit(f64::from(self.winding.1))) * T::two_pi()
    }

    /// Vertex at any integer index; a closed string is extended periodically
    /// with the closure offset, an open string is clamped.
    pub fn ext(&self, i: isize) -> Vec2<T> {
        let k = self.vertices.len() as isize;
        if !self.closed {
            return self.vertices[i.clamp(0, k - 1) as usize];
        }
        let lap = i.div_euclid(k);
        let idx = i.rem_euclid(k) as usize;
        self.vertices[idx] + self.closure_offset() * T::lit(lap as f64)
    }

    /// Consecutive vertex pairs, including the seam segment when closed.
    pub fn segments(&self) -> impl Iterator<Item = (Vec2<T>, Vec2<T>)> + '_ {
        let k = self.vertices.len();
        let n = if self.closed { k } else { k.saturating_sub(1) };
        (0..n).map(move |i| (self.vertices[i], self.ext(i as isize + 1)))
    }

    /// Indices of the vertices that move during relaxation.
    pub fn free_range(&self) -> std::ops::Range<usize> {
        if self.closed {
            0..self.vertices.len()
        } else {
            1..self.vertices.len() - 1
        }
    }

    /// `dγ/ds` at vertex `k`: central difference, second-order one-sided at
    /// open ends.
    pub fn tangent(&self, k: usize) -> Vec2<T> {
        let n = self.vertices.len();
        let ds = self.spacing;
        let v = &self.vertices;
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        let inv = T::one() / (T::lit(2.0) * ds);
        if !self.closed && k == 0 {
            return (v[1] * four - v[0] * three - v[2]) * inv;
        }
        if !self.closed && k == n - 1 {
            return (v[n - 1] * three - v[n - 2] * four + v[n - 3]) * inv;
        }
        (self.ext(k as isize + 1) - self.ext(k as isize - 1)) * (T::one() / (T::lit(2.0) * ds))
    }

    /// Same point set traversed the other way. A closed string keeps its
    /// first vertex and negates its class.
    pub fn reversed(&self) -> Self {
        let k = self.vertices.len();
        if !self.closed {
            let mut v = self.vertices.clone();
            v.reverse();
            return Self { vertices: v, ..self.clone() };
        }
        let verts = (0..k).map(|j| self.ext(-(j as isize))).collect();
        Self { vertices: verts, closed: true, winding: (-self.winding.0, -self.winding.1), spacing: self.spacing }
    }

    pub fn translated(&self, by: Vec2<T>) -> Self {
        Self { vertices: self.vertices.iter().map(|v| *v + by).collect(), ..self.clone() }
    }
}

/// Winding numbers of a closed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub class: (i32, i32),
    /// Per-joint turn counts before rounding.
    pub raw: [f64; 2],
}

/// Tolerance on the distance of a raw winding number from an integer.
pub const WINDING_TOLERANCE: f64 = 0.01;

/// Winding numbers of a closed string, summing wrapped per-segment increments
/// (the seam segment included) so the result depends only on the vertices'
/// positions on the torus.
pub fn winding_number<T: Scalar>(s: &DiscreteString<T>) -> Result<Winding> {
    if !s.is_closed() {
        return Err(Error::NotClosed);
    }
    let mut total = [0.0f64; 2];
    for (a, b) in s.segments() {
        let d = b - a;
        for j in 0..2 {
            total[j] += wrap_angle(d[j]).to_f64_lossy();
        }
    }
    round_winding(total)
}

/// Winding numbers of a sampled path that is expected to return to its
/// start modulo `2π` (e.g. one simulated period).
pub fn path_winding<T: Scalar>(points: &[Vec2<T>]) -> Result<Winding> {
    if points.len() < 2 {
        return Err(Error::NotClosed);
    }
    let mut total = [0.0f64; 2];
    for w in points.windows(2) {
        let d = w[1] - w[0];
        for j in 0..2 {
            total[j] += wrap_angle(d[j]).to_f64_lossy();
        }
    }
    round_winding(total)
}

fn round_winding(total_angle: [f64; 2]) -> Result<Winding> {
    let raw = total_angle.map(|a| a / std::f64::consts::TAU);
    if raw.iter().any(|r| (r - r.round()).abs() > WINDING_TOLERANCE || !r.is_finite()) {
        return Err(Error::NonIntegerWinding { w1: raw[0], w2: raw[1] });
    }
    Ok(Winding { class: (raw[0].round() as i32, raw[1].round() as i32), raw })
}
