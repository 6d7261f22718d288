//! Serialized artifacts: orbit records (JSON), sample tables (CSV) and run
//! provenance.
//!
//! CSV numbers are written with 17 significant digits, which is enough for
//! an exact `f64` round trip. JSON numbers use the shortest representation
//! that parses back to the same `f64`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::Vec2;
use crate::model::MechParams;
use crate::orbits::{Orbit, OrbitKind, Validation};
use crate::relaxation::DiscreteString;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub tool: String,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(command: &str, config_hash: &str) -> Self {
        Self {
            command: command.into(),
            config_hash: config_hash.into(),
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Per-sample columns: normalized parameter, time, configuration, velocity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleColumns {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub qd1: Vec<f64>,
    pub qd2: Vec<f64>,
}

/// Orbit as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub schema_version: u32,
    pub kind: String,
    pub winding_class: [i32; 2],
    pub energy: f64,
    pub period: f64,
    pub residual: f64,
    /// `false` for brake half paths.
    pub closed: bool,
    pub params: MechParams<f64>,
    pub brake_points: Option<[[f64; 2]; 2]>,
    pub validation: Option<Validation<f64>>,
    pub samples: SampleColumns,
    pub provenance: Provenance,
}

fn arr(v: Vec2<f64>) -> [f64; 2] {
    [v[0], v[1]]
}

impl OrbitRecord {
    pub fn from_orbit(orbit: &Orbit<f64>, params: &MechParams<f64>, provenance: Provenance) -> Self {
        let n = orbit.samples.len();
        let closed = orbit.samples.is_closed();
        let denom = if closed { n } else { n.saturating_sub(1).max(1) } as f64;
        let q = orbit.samples.vertices();
        let (a, b) = orbit.winding_class();
        Self {
            schema_version: SCHEMA_VERSION,
            kind: orbit.kind.name().into(),
            winding_class: [a, b],
            energy: orbit.energy,
            period: orbit.period,
            residual: orbit.residual,
            closed,
            params: *params,
            brake_points: orbit.brake_points.map(|[a, b]| [arr(a), arr(b)]),
            validation: orbit.validation,
            samples: SampleColumns {
                s: (0..n).map(|k| k as f64 / denom).collect(),
                t: orbit.times.clone(),
                q1: q.iter().map(|v| v[0]).collect(),
                q2: q.iter().map(|v| v[1]).collect(),
                qd1: orbit.velocities.iter().map(|v| v[0]).collect(),
                qd2: orbit.velocities.iter().map(|v| v[1]).collect(),
            },
            provenance,
        }
    }

    pub fn to_orbit(&self) -> Result<Orbit<f64>, Error> {
        let c = &self.samples;
        let n = c.q1.len();
        if [c.s.len(), c.t.len(), c.q2.len(), c.qd1.len(), c.qd2.len()].iter().any(|&m| m != n) {
            return Err(Error::InvalidArgument("orbit record columns differ in length".into()));
        }
        let class = (self.winding_class[0], self.winding_class[1]);
        let kind = match self.kind.as_str() {
            "toroidal" => OrbitKind::Toroidal { class },
            "disk" => OrbitKind::Disk,
            "brake" => OrbitKind::Brake,
            other => return Err(Error::InvalidArgument(format!("unknown orbit kind {other:?}"))),
        };
        let verts: Vec<Vec2<f64>> = c.q1.iter().zip(&c.q2).map(|(a, b)| Vec2::new(*a, *b)).collect();
        let samples = if self.closed { DiscreteString::closed(verts, class)? } else { DiscreteString::open(verts)? };
        Ok(Orbit {
            samples,
            times: c.t.clone(),
            velocities: c.qd1.iter().zip(&c.qd2).map(|(a, b)| Vec2::new(*a, *b)).collect(),
            energy: self.energy,
            period: self.period,
            kind,
            residual: self.residual,
            brake_points: self.brake_points.map(|[a, b]| [Vec2::new(a[0], a[1]), Vec2::new(b[0], b[1])]),
            validation: self.validation,
        })
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let rec: Self = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if rec.schema_version != SCHEMA_VERSION {
            return Err(format!("{}: unsupported schema version {}", path.display(), rec.schema_version));
        }
        Ok(rec)
    }
}

/// Number format for CSV: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV table with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(std::fs::File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| num(*x)))?;
    }
    w.flush()
}

pub fn write_samples_csv(path: &Path, c: &SampleColumns) -> std::io::Result<()> {
    let rows = (0..c.q1.len()).map(|k| vec![c.s[k], c.t[k], c.q1[k], c.q2[k], c.qd1[k], c.qd2[k]]);
    write_csv(path, &["s", "t", "q1", "q2", "qd1", "qd2"], rows)
}

/// Reads the named numeric columns of a CSV file with a header row.
pub fn read_csv_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let header = r.headers().map_err(|e| format!("{}: {e}", path.display()))?.clone();
    let idx = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h.trim() == *n)
                .ok_or_else(|| format!("{}: missing column `{n}`", path.display()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        for (c, &i) in idx.iter().enumerate() {
            let cell = rec.get(i).unwrap_or("");
            let v = cell
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("{}: row {}: column `{}` is not a number ({cell:?})", path.display(), line + 2, names[c]))?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()
}
