//! Run configuration: a TOML document with one section per command, plus
//! `--set section.key=value` overrides applied before deserialization.
//!
//! ```toml
//! rng_seed = 0
//!
//! [params]          # m1, m2, l1, l2, grav (unit masses/lengths, 9.81 by default)
//! [output]          # dir
//! [relax]           # energy, qa, qb | closed + class, string and relaxation options
//! [simulate]        # q + qd | string + energy, t_end, dt
//! [orbit]           # kind, energy, class | mode | seed, name
//! [[jobs]]          # further independent orbit searches, run concurrently
//! [search]          # orbit search options
//! [continue]        # start, delta_e, steps
//! [verify]          # record
//! ```
//!
//! Energies are numbers or expressions in the potential bounds:
//! `"umin+20"`, `"1.5*umax"`, `"umax-0.5"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{DoublePendulum, MechParams, MechanicalSystem};
use crate::orbits::OrbitOptions;
use crate::relaxation::{RelaxOptions, Scheme};

/// Configuration problem, reported with exit code 64.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn missing(field: &str) -> ConfigError {
    ConfigError(format!("missing field `{field}`"))
}

/// An energy given as a number or as an expression in `umin`/`umax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergySpec {
    Value(f64),
    Expr(String),
}

impl EnergySpec {
    /// Evaluates `[coef*]sym[±offset]` with `sym` one of `umin`, `umax`.
    pub fn resolve(&self, umin: f64, umax: f64) -> Result<f64, String> {
        let text = match self {
            EnergySpec::Value(v) => return Ok(*v),
            EnergySpec::Expr(s) => s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase(),
        };
        if let Ok(v) = text.parse::<f64>() {
            return Ok(v);
        }
        let bad = || format!("cannot read energy expression {text:?} (expected e.g. \"umin+20\" or \"1.5*umax\")");
        let (coef, rest) = match text.split_once('*') {
            Some((c, r)) => (c.parse::<f64>().map_err(|_| bad())?, r),
            None => (1.0, text.as_str()),
        };
        let (sym, tail) = if let Some(t) = rest.strip_prefix("umin") {
            (umin, t)
        } else if let Some(t) = rest.strip_prefix("umax") {
            (umax, t)
        } else {
            return Err(bad());
        };
        let offset = if tail.is_empty() {
            0.0
        } else if tail.starts_with('+') || tail.starts_with('-') {
            tail.parse::<f64>().map_err(|_| bad())?
        } else {
            return Err(bad());
        };
        Ok(coef * sym + offset)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub grav: Option<f64>,
}

impl ParamsSection {
    pub fn params(&self) -> MechParams<f64> {
        let d = MechParams::default();
        MechParams {
            m1: self.m1.unwrap_or(d.m1),
            m2: self.m2.unwrap_or(d.m2),
            l1: self.l1.unwrap_or(d.l1),
            l2: self.l2.unwrap_or(d.l2),
            grav: self.grav.unwrap_or(d.grav),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Artifact directory, relative to the config file. Defaults to `out`.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxSection {
    pub energy: Option<EnergySpec>,
    pub qa: Option<[f64; 2]>,
    pub qb: Option<[f64; 2]>,
    pub closed: Option<bool>,
    pub class: Option<[i32; 2]>,
    pub vertices: Option<usize>,
    pub scheme: Option<Scheme>,
    pub dt: Option<f64>,
    pub max_iter: Option<usize>,
    pub eps_geo: Option<f64>,
    pub eps_vel: Option<f64>,
    pub reparam_every: Option<usize>,
    pub reparam_ratio: Option<f64>,
    /// Forward-simulate an open result from its reconstructed initial velocity.
    pub track: Option<bool>,
    /// Tracking run length in units of the reconstructed string time.
    pub track_horizon: Option<f64>,
    pub sim_dt: Option<f64>,
}

impl RelaxSection {
    pub fn options(&self) -> RelaxOptions<f64> {
        let d = RelaxOptions::default();
        RelaxOptions {
            scheme: self.scheme.unwrap_or(d.scheme),
            dt: self.dt.or(d.dt),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            eps_geo: self.eps_geo.unwrap_or(d.eps_geo),
            eps_vel: self.eps_vel.unwrap_or(d.eps_vel),
            reparam_every: self.reparam_every.unwrap_or(d.reparam_every),
            reparam_ratio: self.reparam_ratio.unwrap_or(d.reparam_ratio),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub q: Option<[f64; 2]>,
    pub qd: Option<[f64; 2]>,
    /// String CSV (as written by `relax`); the start state is its first vertex
    /// with the tangent scaled to `energy`.
    pub string: Option<PathBuf>,
    pub energy: Option<EnergySpec>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
}

/// One orbit search.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitJob {
    /// Subdirectory for this job's artifacts when several jobs run.
    pub name: Option<String>,
    /// `toroidal`, `brake` or `disk`.
    pub kind: Option<String>,
    pub energy: Option<EnergySpec>,
    pub class: Option<[i32; 2]>,
    pub mode: Option<usize>,
    /// Orbit record used as the shooting seed of a disk search.
    pub seed: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub samples: Option<usize>,
    pub dt: Option<f64>,
    pub segments: Option<usize>,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: Option<usize>,
    pub fd_step: Option<f64>,
    pub seed_residual: Option<f64>,
    pub polish: Option<bool>,
    pub closure_tol: Option<f64>,
    pub velocity_tol: Option<f64>,
    pub drift_tol: Option<f64>,
    pub symmetry_tol: Option<f64>,
    pub trust_distance: Option<f64>,
    pub max_halvings: Option<usize>,
    pub seed_attempts: Option<usize>,
    pub seed_horizon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinueSection {
    /// Orbit record of the first family member.
    pub start: Option<PathBuf>,
    pub delta_e: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub rng_seed: u64,
    pub params: ParamsSection,
    pub output: OutputSection,
    pub relax: RelaxSection,
    pub simulate: SimulateSection,
    pub orbit: Option<OrbitJob>,
    pub jobs: Vec<OrbitJob>,
    pub search: SearchSection,
    #[serde(rename = "continue")]
    pub continuation: ContinueSection,
    pub verify: VerifySection,
}

/// Sets `value` at a dotted key path, creating tables on the way; numeric
/// segments index into arrays.
fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError(format!("--set: malformed key {key:?}")));
    }
    let mut cur = root;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let next = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let next = match next {
            toml::Value::Array(items) => {
                let idx: usize = parts
                    .get(i + 1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| ConfigError(format!("--set: `{part}` is an array; index it as {part}.N")))?;
                if i + 2 == parts.len() {
                    let slot = items.get_mut(idx).ok_or_else(|| ConfigError(format!("--set: {part}[{idx}] does not exist")))?;
                    *slot = value;
                    return Ok(());
                }
                return set_path(
                    match items.get_mut(idx) {
                        Some(toml::Value::Table(t)) => t,
                        _ => return Err(ConfigError(format!("--set: {part}[{idx}] is not a table"))),
                    },
                    &parts[i + 2..].join("."),
                    value,
                );
            }
            other => other,
        };
        cur = match next {
            toml::Value::Table(t) => t,
            _ => return Err(ConfigError(format!("--set: `{part}` is not a table"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_override(spec: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("--set expects key=value (got {spec:?})")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}

impl RunConfig {
    /// Parses a config document and applies `--set` overrides. Without
    /// overrides, errors carry the line and column of the offending entry.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let cfg: RunConfig = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?
        } else {
            let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
            for spec in overrides {
                let (key, value) = parse_override(spec)?;
                set_path(&mut table, &key, value)?;
            }
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError(format!("after --set overrides: {}", e.to_string().trim_end())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// Field-level checks that do not depend on the command.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.params.params();
        p.validate().map_err(|e| ConfigError(format!("params: {e}")))?;
        let positive = [
            ("relax.dt", self.relax.dt),
            ("relax.eps_geo", self.relax.eps_geo),
            ("relax.eps_vel", self.relax.eps_vel),
            ("relax.reparam_ratio", self.relax.reparam_ratio),
            ("relax.track_horizon", self.relax.track_horizon),
            ("relax.sim_dt", self.relax.sim_dt),
            ("simulate.t_end", self.simulate.t_end),
            ("simulate.dt", self.simulate.dt),
            ("search.dt", self.search.dt),
            ("search.newton_tol", self.search.newton_tol),
            ("search.fd_step", self.search.fd_step),
            ("search.seed_residual", self.search.seed_residual),
            ("search.closure_tol", self.search.closure_tol),
            ("search.velocity_tol", self.search.velocity_tol),
            ("search.drift_tol", self.search.drift_tol),
            ("search.symmetry_tol", self.search.symmetry_tol),
            ("search.trust_distance", self.search.trust_distance),
            ("search.seed_horizon", self.search.seed_horizon),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ConfigError(format!("`{name}` must be a positive number (got {v})")));
                }
            }
        }
        let counts = [
            ("relax.max_iter", self.relax.max_iter),
            ("relax.reparam_every", self.relax.reparam_every),
            ("search.samples", self.search.samples),
            ("search.segments", self.search.segments),
            ("search.newton_max_iter", self.search.newton_max_iter),
            ("search.seed_attempts", self.search.seed_attempts),
        ];
        for (name, v) in counts {
            if v == Some(0) {
                return Err(ConfigError(format!("`{name}` must be at least 1")));
            }
        }
        if let Some(v) = self.continuation.delta_e {
            if !v.is_finite() {
                return Err(ConfigError(format!("`continue.delta_e` must be finite (got {v})")));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, job) in self.jobs.iter().enumerate() {
            let name = job.name.as_deref().ok_or_else(|| missing(&format!("jobs[{i}].name")))?;
            if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
                return Err(ConfigError(format!("`jobs[{i}].name` must be a plain directory name (got {name:?})")));
            }
            if !names.insert(name) {
                return Err(ConfigError(format!("`jobs[{i}].name` repeats {name:?}")));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<DoublePendulum<f64>, ConfigError> {
        DoublePendulum::new(self.params.params()).map_err(|e| ConfigError(format!("params: {e}")))
    }

    pub fn resolve_energy(&self, field: &str, spec: Option<&EnergySpec>) -> Result<f64, ConfigError> {
        let spec = spec.ok_or_else(|| missing(field))?;
        let sys = self.system()?;
        let (umin, umax) = sys.potential_bounds();
        let e = spec.resolve(umin, umax).map_err(|m| ConfigError(format!("`{field}`: {m}")))?;
        if !e.is_finite() {
            return Err(ConfigError(format!("`{field}` must be finite")));
        }
        Ok(e)
    }

    pub fn orbit_options(&self) -> OrbitOptions<f64> {
        let d = OrbitOptions::default();
        let s = &self.search;
        OrbitOptions {
            relax: self.relax.options(),
            vertices: self.relax.vertices.unwrap_or(d.vertices),
            samples: s.samples.unwrap_or(d.samples),
            dt: s.dt.unwrap_or(d.dt),
            segments: s.segments.unwrap_or(d.segments),
            newton_tol: s.newton_tol.unwrap_or(d.newton_tol),
            newton_max_iter: s.newton_max_iter.unwrap_or(d.newton_max_iter),
            fd_step: s.fd_step.unwrap_or(d.fd_step),
            seed_residual: s.seed_residual.unwrap_or(d.seed_residual),
            polish: s.polish.unwrap_or(d.polish),
            closure_tol: s.closure_tol.unwrap_or(d.closure_tol),
            velocity_tol: s.velocity_tol.unwrap_or(d.velocity_tol),
            drift_tol: s.drift_tol.unwrap_or(d.drift_tol),
            symmetry_tol: s.symmetry_tol.unwrap_or(d.symmetry_tol),
            trust_distance: s.trust_distance.unwrap_or(d.trust_distance),
            max_halvings: s.max_halvings.unwrap_or(d.max_halvings),
            rng_seed: self.rng_seed,
            seed_attempts: s.seed_attempts.unwrap_or(d.seed_attempts),
            seed_horizon: s.seed_horizon.unwrap_or(d.seed_horizon),
        }
    }

    /// SHA-256 of the effective configuration without the output section,
    /// so the same run written to another directory keeps its hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub(crate) fn require<T: Clone>(v: &Option<T>, field: &str) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| missing(field))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_expressions() {
        let (lo, hi) = (-29.43, 29.43);
        let r = |s: &str| EnergySpec::Expr(s.into()).resolve(lo, hi);
        assert_eq!(r("umin+20").unwrap(), -29.43 + 20.0);
        assert_eq!(r("1.5*umax").unwrap(), 1.5 * 29.43);
        assert_eq!(r(" UMAX - 0.5 ").unwrap(), 29.43 - 0.5);
        assert_eq!(r("-3.5").unwrap(), -3.5);
        assert_eq!(EnergySpec::Value(2.0).resolve(lo, hi).unwrap(), 2.0);
        for bad in ["umid", "2*", "umin*2", "umin+", "x*umax"] {
            assert!(r(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let text = "[relax]\nenergy = 1.0\n[[jobs]]\nname = \"a\"\nkind = \"brake\"\n";
        let cfg = RunConfig::parse(
            text,
            &["relax.energy=\"umin+20\"".into(), "relax.qa=[1.0, 2.0]".into(), "jobs.0.mode=2".into(), "rng_seed=7".into()],
        )
        .unwrap();
        assert_eq!(cfg.relax.energy, Some(EnergySpec::Expr("umin+20".into())));
        assert_eq!(cfg.relax.qa, Some([1.0, 2.0]));
        assert_eq!(cfg.jobs[0].mode, Some(2));
        assert_eq!(cfg.rng_seed, 7);
        // Bare words fall back to strings.
        let cfg = RunConfig::parse("", &["orbit.kind=brake".into()]).unwrap();
        assert_eq!(cfg.orbit.unwrap().kind.as_deref(), Some("brake"));
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::parse("[relax]\nenergyy = 3\n", &[]).unwrap_err();
        assert!(e.0.contains("energyy") && e.0.contains("line 2"), "{e}");
        let e = RunConfig::parse("[search]\nclosure_tol = -1.0\n", &[]).unwrap_err();
        assert!(e.0.contains("search.closure_tol"), "{e}");
        let e = RunConfig::parse("[[jobs]]\nkind = \"brake\"\n", &[]).unwrap_err();
        assert!(e.0.contains("jobs[0].name"), "{e}");
        assert!(RunConfig::parse("", &["novalue".into()]).is_err());
        let cfg = RunConfig::parse("", &[]).unwrap();
        let e = cfg.resolve_energy("relax.energy", cfg.relax.energy.as_ref()).unwrap_err();
        assert!(e.0.contains("relax.energy"));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::parse("[output]\ndir = \"a\"\n[relax]\nenergy = 1.0\n", &[]).unwrap();
        let b = RunConfig::parse("[output]\ndir = \"b\"\n[relax]\nenergy = 1.0\n", &[]).unwrap();
        let c = RunConfig::parse("[relax]\nenergy = 2.0\n", &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
