//! Command implementations. Each writes its artifacts into the output
//! directory and returns the process exit code.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Error;
use crate::geometry::{reconstruct_time, reconstruct_velocity, JacobiMetric};
use crate::integrate::{simulate, track_string, Tracking};
use crate::linalg::Vec2;
use crate::model::{total_energy, DoublePendulum, State};
use crate::orbits::{
    continue_family, find_brake, find_disk, search_disk, search_toroidal, validate_orbit, Orbit, OrbitKind, OrbitOptions,
    PeriodicSeed, Termination, Validation,
};
use crate::relaxation::{relax, DiscreteString, RelaxReport, DEFAULT_VERTICES};

use super::config::{require, ConfigError, OrbitJob, RunConfig};
use super::record::{read_csv_columns, write_csv, write_json, write_samples_csv, OrbitRecord, Provenance};
use super::svg::{torus_pieces, Plot, Series, BLUE, GRAY, ORANGE, PALETTE};
use super::{exit_code, CliError, EXIT_OK};

/// Shared state of one command run.
pub(crate) struct Ctx {
    pub cfg: RunConfig,
    /// Directory of the config file; relative paths resolve against it.
    pub base: PathBuf,
    pub out: PathBuf,
    pub command: &'static str,
}

impl Ctx {
    pub fn new(cfg: RunConfig, config_path: &Path, command: &'static str) -> Self {
        let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out = base.join(cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("out")));
        Self { cfg, base, out, command }
    }

    fn provenance(&self) -> Provenance {
        Provenance::new(self.command, &self.cfg.hash())
    }

    fn input(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io(dir))
}

fn save_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    write_json(path, v).map_err(io(path))
}

fn save_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io(path))
}

fn arr(v: Vec2<f64>) -> [f64; 2] {
    [v[0], v[1]]
}

/// Library errors raised while turning config values into inputs.
fn invalid_input(field: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Config(format!("`{field}`: {e}"))
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    provenance: Provenance,
    job: Option<&'a str>,
    error: String,
    error_kind: String,
    exit_code: i32,
}

fn error_kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

/// Writes `diagnostic.json` for a failed numerical step and returns its exit code.
fn fail(ctx: &Ctx, dir: &Path, job: Option<&str>, err: &Error) -> Result<i32, CliError> {
    let code = exit_code(err);
    save_json(
        &dir.join("diagnostic.json"),
        &Diagnostic { provenance: ctx.provenance(), job, error: err.to_string(), error_kind: error_kind(err), exit_code: code },
    )?;
    eprintln!("{}{}: {err}", ctx.command, job.map(|j| format!(" [{j}]")).unwrap_or_default());
    Ok(code)
}

fn config_plot(title: &str) -> Plot {
    let mut p = Plot::new(title, "q1 [rad]", "q2 [rad]");
    p.equal_aspect = true;
    p
}

/// Every `stride`-th point so that long histories stay plottable.
fn thin(values: &[f64]) -> Vec<[f64; 2]> {
    let stride = (values.len() / 2000).max(1);
    let mut pts: Vec<[f64; 2]> = values.iter().enumerate().step_by(stride).map(|(i, v)| [i as f64, *v]).collect();
    if let Some(last) = values.len().checked_sub(1) {
        if last % stride != 0 {
            pts.push([last as f64, values[last]]);
        }
    }
    pts
}

fn string_columns(s: &DiscreteString<f64>, energy: f64, sys: &DoublePendulum<f64>) -> Vec<Vec<f64>> {
    let n = s.len();
    let denom = if s.is_closed() { n } else { n - 1 } as f64;
    let times = reconstruct_time(s, energy, sys).unwrap_or_else(|_| vec![f64::NAN; n]);
    (0..n)
        .map(|k| {
            let q = s.vertices()[k];
            let qd = reconstruct_velocity(&q, &s.tangent(k), energy, sys).map(|st| st.qd).unwrap_or(Vec2::new(f64::NAN, f64::NAN));
            vec![k as f64 / denom, times[k], q[0], q[1], qd[0], qd[1]]
        })
        .collect()
}

#[derive(Serialize)]
struct RelaxArtifact<'a> {
    provenance: Provenance,
    energy: f64,
    closed: bool,
    winding_class: [i32; 2],
    vertices: usize,
    converged: bool,
    iterations: usize,
    final_length: f64,
    final_residual: f64,
    redistributions: usize,
    /// Reconstructed travel time along the string (the period if closed).
    duration: Option<f64>,
    tracking: Option<Tracking<f64>>,
    length_history: &'a [f64],
    convergence_velocity: &'a [f64],
}

pub(crate) fn cmd_relax(ctx: &Ctx) -> Result<i32, CliError> {
    let cfg = &ctx.cfg;
    let r = &cfg.relax;
    let sys = cfg.system()?;
    let energy = cfg.resolve_energy("relax.energy", r.energy.as_ref())?;
    let k = r.vertices.unwrap_or(DEFAULT_VERTICES);
    let closed = r.closed.unwrap_or(false);
    let seed = if closed {
        let c = require(&r.class, "relax.class")?;
        DiscreteString::closed_loop((c[0], c[1]), k, None).map_err(invalid_input("relax.class"))?
    } else {
        let qa = require(&r.qa, "relax.qa")?;
        let qb = require(&r.qb, "relax.qb")?;
        DiscreteString::open_line(Vec2::new(qa[0], qa[1]), Vec2::new(qb[0], qb[1]), k).map_err(invalid_input("relax.vertices"))?
    };
    create_dir(&ctx.out)?;
    let metric = JacobiMetric::new(&sys, energy);
    let (string, report): (DiscreteString<f64>, RelaxReport<f64>) = match relax(&seed, &metric, &r.options()) {
        Ok(v) => v,
        Err(e) => return fail(ctx, &ctx.out, None, &e),
    };
    let duration = reconstruct_time(&string, energy, &sys).ok().and_then(|t| t.last().copied());
    let sim_dt = r.sim_dt.unwrap_or(crate::integrate::DEFAULT_DT);
    let tracking = if !closed && report.converged && r.track.unwrap_or(true) {
        match track_string(&string, energy, r.track_horizon.unwrap_or(1.5), sim_dt, &sys) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("relax: tracking simulation failed: {e}");
                None
            }
        }
    } else {
        None
    };

    let csv = ctx.out.join("string.csv");
    write_csv(&csv, &["s", "t", "q1", "q2", "qd1", "qd2"], string_columns(&string, energy, &sys)).map_err(io(&csv))?;
    let (a, b) = string.winding_class();
    save_json(
        &ctx.out.join("report.json"),
        &RelaxArtifact {
            provenance: ctx.provenance(),
            energy,
            closed,
            winding_class: [a, b],
            vertices: string.len(),
            converged: report.converged,
            iterations: report.iterations,
            final_length: report.final_length,
            final_residual: report.final_residual,
            redistributions: report.redistributions,
            duration,
            tracking: tracking.clone(),
            length_history: &report.length_history,
            convergence_velocity: &report.convergence_velocity,
        },
    )?;

    let mut plot = config_plot(&format!("String relaxation at E = {energy:.4} J"));
    let path_of = |s: &DiscreteString<f64>| {
        let mut p: Vec<[f64; 2]> = s.vertices().iter().map(|v| arr(*v)).collect();
        if s.is_closed() {
            p.push(arr(s.vertices()[0] + s.closure_offset()));
        }
        p
    };
    plot.series.push(Series::line(path_of(&seed), GRAY).dashed());
    let ends = if closed { vec![] } else { vec![arr(string.vertices()[0]), arr(string.vertices()[string.len() - 1])] };
    plot.series.push(Series::line(path_of(&string), BLUE).with_markers(ends));
    if let Some(t) = &tracking {
        if let Ok(traj) = simulate(&t.initial, t.arrival_time, sim_dt, &sys) {
            plot.series.push(Series::line(traj.configurations().iter().map(|v| arr(*v)).collect(), ORANGE).dashed());
        }
    }
    save_text(&ctx.out.join("path.svg"), &plot.render())?;
    let mut hist = Plot::new("Riemannian length during relaxation", "iteration", "length");
    hist.series.push(Series::line(thin(&report.length_history), BLUE));
    save_text(&ctx.out.join("length.svg"), &hist.render())?;
    let logv: Vec<f64> = report.convergence_velocity.iter().map(|v| v.max(1e-300).log10()).collect();
    let mut vel = Plot::new("Convergence velocity", "iteration", "log10 v");
    vel.series.push(Series::line(thin(&logv), BLUE));
    save_text(&ctx.out.join("velocity.svg"), &vel.render())?;

    println!(
        "relax: {} after {} iterations, residual {:.3e}, length {:.6}",
        if report.converged { "converged" } else { "not converged" },
        report.iterations,
        report.final_residual,
        report.final_length
    );
    if let Some(t) = &tracking {
        println!(
            "relax: simulated path deviation {:.3e} rad, closest approach to the far end {:.3e} rad at t = {:.4} s",
            t.deviation, t.arrival_distance, t.arrival_time
        );
    }
    if report.converged {
        Ok(EXIT_OK)
    } else {
        Ok(exit_code(&Error::NoConvergence { iterations: report.iterations, residual: report.final_residual }))
    }
}

#[derive(Serialize)]
struct SimulateArtifact {
    provenance: Provenance,
    initial_q: [f64; 2],
    initial_qd: [f64; 2],
    t_end: f64,
    dt: f64,
    samples: usize,
    energy: f64,
    energy_drift: f64,
    relative_drift: f64,
}

pub(crate) fn cmd_simulate(ctx: &Ctx) -> Result<i32, CliError> {
    let cfg = &ctx.cfg;
    let sim = &cfg.simulate;
    let sys = cfg.system()?;
    let s0 = if let Some(path) = &sim.string {
        let energy = cfg.resolve_energy("simulate.energy", sim.energy.as_ref())?;
        let cols = read_csv_columns(&ctx.input(path), &["q1", "q2"]).map_err(|e| CliError::Config(format!("`simulate.string`: {e}")))?;
        let verts = cols[0].iter().zip(&cols[1]).map(|(a, b)| Vec2::new(*a, *b)).collect();
        let s = DiscreteString::open(verts).map_err(invalid_input("simulate.string"))?;
        reconstruct_velocity(&s.vertices()[0], &s.tangent(0), energy, &sys).map_err(invalid_input("simulate.energy"))?
    } else {
        let q = require(&sim.q, "simulate.q")?;
        let qd = require(&sim.qd, "simulate.qd")?;
        State::new(Vec2::new(q[0], q[1]), Vec2::new(qd[0], qd[1]))
    };
    let t_end = sim.t_end.unwrap_or(10.0);
    let dt = sim.dt.unwrap_or(crate::integrate::DEFAULT_DT);
    create_dir(&ctx.out)?;
    let traj = match simulate(&s0, t_end, dt, &sys) {
        Ok(t) => t,
        Err(e) => return fail(ctx, &ctx.out, None, &e),
    };
    let csv = ctx.out.join("trajectory.csv");
    let rows = traj.times.iter().zip(&traj.states).map(|(t, s)| vec![*t, s.q[0], s.q[1], s.qd[0], s.qd[1], total_energy(&sys, s)]);
    write_csv(&csv, &["t", "q1", "q2", "qd1", "qd2", "H"], rows).map_err(io(&csv))?;
    let relative_drift = traj.energy_drift / traj.energy.abs().max(1.0);
    save_json(
        &ctx.out.join("summary.json"),
        &SimulateArtifact {
            provenance: ctx.provenance(),
            initial_q: arr(s0.q),
            initial_qd: arr(s0.qd),
            t_end,
            dt,
            samples: traj.len(),
            energy: traj.energy,
            energy_drift: traj.energy_drift,
            relative_drift,
        },
    )?;
    let mut plot = Plot::new("Cartesian traces of the point masses", "x [m]", "y [m]");
    plot.equal_aspect = true;
    let (p1, p2): (Vec<[f64; 2]>, Vec<[f64; 2]>) = traj
        .states
        .iter()
        .map(|s| {
            let [a, b] = sys.cartesian(&s.q);
            (arr(a), arr(b))
        })
        .unzip();
    plot.series.push(Series::line(p1, BLUE).with_markers(vec![[0.0, 0.0]]));
    plot.series.push(Series::line(p2, ORANGE));
    save_text(&ctx.out.join("trace.svg"), &plot.render())?;
    let mut cplot = config_plot("Configuration path");
    cplot.series.push(Series::line(traj.configurations().iter().map(|v| arr(*v)).collect(), BLUE));
    save_text(&ctx.out.join("path.svg"), &cplot.render())?;
    println!(
        "simulate: {} samples, energy {:.10} J, energy drift {:.3e} J (relative {:.3e})",
        traj.len(),
        traj.energy,
        traj.energy_drift,
        relative_drift
    );
    Ok(EXIT_OK)
}

/// A validated orbit search ready to run.
enum Search {
    Toroidal { class: (i32, i32), energy: f64 },
    Brake { mode: usize, energy: f64 },
    Disk { energy: f64, seed: Option<Orbit<f64>> },
}

fn parse_job(ctx: &Ctx, job: &OrbitJob, field: &str) -> Result<Search, CliError> {
    let cfg = &ctx.cfg;
    let kind = require(&job.kind, &format!("{field}.kind"))?;
    let energy = cfg.resolve_energy(&format!("{field}.energy"), job.energy.as_ref())?;
    match kind.as_str() {
        "toroidal" => {
            let c = require(&job.class, &format!("{field}.class"))?;
            if c == [0, 0] {
                return Err(CliError::Config(format!("`{field}.class` must be nonzero for a toroidal search")));
            }
            Ok(Search::Toroidal { class: (c[0], c[1]), energy })
        }
        "brake" => {
            let mode = require(&job.mode, &format!("{field}.mode"))?;
            if !(1..=2).contains(&mode) {
                return Err(CliError::Config(format!("`{field}.mode` must be 1 or 2 (got {mode})")));
            }
            Ok(Search::Brake { mode, energy })
        }
        "disk" => {
            let seed = match &job.seed {
                Some(p) => {
                    let rec = OrbitRecord::read(&ctx.input(p)).map_err(|e| CliError::Config(format!("`{field}.seed`: {e}")))?;
                    Some(rec.to_orbit().map_err(invalid_input(&format!("{field}.seed")))?)
                }
                None => None,
            };
            Ok(Search::Disk { energy, seed })
        }
        other => Err(CliError::Config(format!("`{field}.kind` must be toroidal, brake or disk (got {other:?})"))),
    }
}

#[derive(Serialize)]
struct DiskSearchArtifact {
    provenance: Provenance,
    attempts: usize,
    solves: usize,
}

/// Search by-products written next to the orbit.
enum Extra {
    None,
    Relax(RelaxReport<f64>),
    Disk(DiskSearchArtifact),
}

fn orbit_plots(orbit: &Orbit<f64>, dir: &Path) -> Result<(), CliError> {
    let path: Vec<[f64; 2]> = orbit.full_path().iter().map(|v| arr(*v)).collect();
    let mut plot = config_plot(&format!("{} orbit at E = {:.4} J, T = {:.4} s", orbit.kind.name(), orbit.energy, orbit.period));
    let mut s = Series::line(path.clone(), BLUE);
    if let Some([a, b]) = orbit.brake_points {
        s = s.with_markers(vec![arr(a), arr(b)]);
    }
    plot.series.push(s);
    save_text(&dir.join("path.svg"), &plot.render())?;
    if let OrbitKind::Toroidal { class } = orbit.kind {
        let mut tile = config_plot(&format!("Toroidal orbit {class:?} on the torus tile"));
        let pi = std::f64::consts::PI;
        tile.x_range = Some((-pi, pi));
        tile.y_range = Some((-pi, pi));
        tile.series.push(Series { paths: torus_pieces(&path), ..Series::line(vec![], BLUE) });
        save_text(&dir.join("tile.svg"), &tile.render())?;
    }
    Ok(())
}

fn write_orbit(ctx: &Ctx, orbit: &Orbit<f64>, sys: &DoublePendulum<f64>, dir: &Path, stem: &str) -> Result<OrbitRecord, CliError> {
    let rec = OrbitRecord::from_orbit(orbit, sys.params(), ctx.provenance());
    save_json(&dir.join(format!("{stem}.json")), &rec)?;
    let csv = dir.join(format!("{stem}_samples.csv"));
    write_samples_csv(&csv, &rec.samples).map_err(io(&csv))?;
    Ok(rec)
}

fn run_search(ctx: &Ctx, search: &Search, dir: &Path, job: Option<&str>) -> Result<i32, CliError> {
    create_dir(dir)?;
    let sys = ctx.cfg.system()?;
    let opts = ctx.cfg.orbit_options();
    let result = match search {
        Search::Toroidal { class, energy } => search_toroidal(*class, *energy, &sys, &opts).map(|s| (s.orbit, Extra::Relax(s.report))),
        Search::Brake { mode, energy } => find_brake(*mode, *energy, &sys, &opts).map(|o| (o, Extra::None)),
        Search::Disk { energy, seed: Some(seed) } => {
            find_disk(&PeriodicSeed::from_orbit(seed, opts.segments), *energy, &sys, &opts).map(|o| (o, Extra::None))
        }
        Search::Disk { energy, seed: None } => search_disk(*energy, &sys, &opts)
            .map(|r| (r.orbit, Extra::Disk(DiskSearchArtifact { provenance: ctx.provenance(), attempts: r.attempts, solves: r.solves }))),
    };
    let orbit = match result {
        Ok((o, Extra::Relax(report))) => {
            save_json(&dir.join("relax_report.json"), &report)?;
            o
        }
        Ok((o, Extra::Disk(stats))) => {
            save_json(&dir.join("search.json"), &stats)?;
            o
        }
        Ok((o, Extra::None)) => o,
        Err(e) => return fail(ctx, dir, job, &e),
    };
    write_orbit(ctx, &orbit, &sys, dir, "orbit")?;
    orbit_plots(&orbit, dir)?;
    let (a, b) = orbit.winding_class();
    println!(
        "find-orbit{}: {} orbit, winding ({a},{b}), E = {:.6} J, T = {:.6} s, residual {:.3e}",
        job.map(|j| format!(" [{j}]")).unwrap_or_default(),
        orbit.kind.name(),
        orbit.energy,
        orbit.period,
        orbit.residual
    );
    Ok(EXIT_OK)
}

pub(crate) fn cmd_find_orbit(ctx: &Ctx) -> Result<i32, CliError> {
    let cfg = &ctx.cfg;
    let mut work: Vec<(Option<String>, PathBuf, Search)> = Vec::new();
    if let Some(job) = &cfg.orbit {
        let dir = match &job.name {
            Some(n) => ctx.out.join(n),
            None => ctx.out.clone(),
        };
        work.push((job.name.clone(), dir, parse_job(ctx, job, "orbit")?));
    }
    for (i, job) in cfg.jobs.iter().enumerate() {
        let name = require(&job.name, &format!("jobs[{i}].name"))?;
        work.push((Some(name.clone()), ctx.out.join(&name), parse_job(ctx, job, &format!("jobs[{i}]"))?));
    }
    if work.is_empty() {
        return Err(CliError::Config("missing field `orbit` (or a `[[jobs]]` list)".into()));
    }
    if work.len() == 1 {
        let (name, dir, search) = &work[0];
        return run_search(ctx, search, dir, name.as_deref());
    }
    // Independent searches, each writing only into its own directory.
    let codes: Vec<Result<i32, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = work
            .iter()
            .map(|(name, dir, search)| scope.spawn(move || run_search(ctx, search, dir, name.as_deref())))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(CliError::Io("search thread panicked".into())))).collect()
    });
    let mut overall = EXIT_OK;
    for c in codes {
        let c = c?;
        if overall == EXIT_OK {
            overall = c;
        }
    }
    Ok(overall)
}

#[derive(Serialize)]
struct FamilyManifest {
    provenance: Provenance,
    kind: String,
    parameter_name: String,
    delta_e: f64,
    steps: usize,
    members: Vec<String>,
    energies: Vec<f64>,
    periods: Vec<f64>,
    residuals: Vec<f64>,
    continuity: Vec<f64>,
    termination: Termination,
}

pub(crate) fn cmd_continue(ctx: &Ctx) -> Result<i32, CliError> {
    let cfg = &ctx.cfg;
    let c = &cfg.continuation;
    let start_path = require(&c.start, "continue.start")?;
    let delta_e = require(&c.delta_e, "continue.delta_e")?;
    let steps = require(&c.steps, "continue.steps")?;
    let rec = OrbitRecord::read(&ctx.input(&start_path)).map_err(|e| CliError::Config(format!("`continue.start`: {e}")))?;
    let start = rec.to_orbit().map_err(invalid_input("continue.start"))?;
    let sys = DoublePendulum::new(rec.params).map_err(invalid_input("continue.start"))?;
    let opts: OrbitOptions<f64> = cfg.orbit_options();
    create_dir(&ctx.out)?;
    let family = match continue_family(&start, delta_e, steps, &sys, &opts) {
        Ok(f) => f,
        Err(e) => return fail(ctx, &ctx.out, None, &e),
    };
    let mut names = Vec::new();
    let mut plot = config_plot(&format!("{} family, {} members", start.kind.name(), family.members.len()));
    for (i, m) in family.members.iter().enumerate() {
        let stem = format!("member_{i:03}");
        write_orbit(ctx, m, &sys, &ctx.out, &stem)?;
        names.push(format!("{stem}.json"));
        plot.series.push(Series::line(m.full_path().iter().map(|v| arr(*v)).collect(), PALETTE[i % PALETTE.len()]));
    }
    save_text(&ctx.out.join("overlay.svg"), &plot.render())?;
    save_json(
        &ctx.out.join("manifest.json"),
        &FamilyManifest {
            provenance: ctx.provenance(),
            kind: start.kind.name().into(),
            parameter_name: family.parameter_name.clone(),
            delta_e,
            steps,
            members: names,
            energies: family.energies(),
            periods: family.members.iter().map(|m| m.period).collect(),
            residuals: family.members.iter().map(|m| m.residual).collect(),
            continuity: family.continuity(),
            termination: family.termination.clone(),
        },
    )?;
    let last = family.members.last().map(|m| m.energy).unwrap_or(start.energy);
    println!("continue: {} members up to E = {:.6} J, termination {:?}", family.members.len(), last, family.termination);
    match family.failure() {
        Some(e) => {
            eprintln!("continue: {e}");
            Ok(exit_code(&e))
        }
        None => Ok(EXIT_OK),
    }
}

#[derive(Serialize)]
struct VerifyArtifact {
    provenance: Provenance,
    record: String,
    record_config_hash: String,
    kind: String,
    energy: f64,
    period: f64,
    validation: Validation<f64>,
    passed: bool,
}

pub(crate) fn cmd_verify(ctx: &Ctx) -> Result<i32, CliError> {
    let cfg = &ctx.cfg;
    let path = require(&cfg.verify.record, "verify.record")?;
    let rec = OrbitRecord::read(&ctx.input(&path)).map_err(|e| CliError::Config(format!("`verify.record`: {e}")))?;
    let orbit = rec.to_orbit().map_err(invalid_input("verify.record"))?;
    let sys = DoublePendulum::new(rec.params).map_err(invalid_input("verify.record"))?;
    let opts = cfg.orbit_options();
    create_dir(&ctx.out)?;
    let v = match validate_orbit(&orbit, &sys, &opts) {
        Ok(v) => v,
        Err(e) => return fail(ctx, &ctx.out, None, &e),
    };
    save_json(
        &ctx.out.join("verification.json"),
        &VerifyArtifact {
            provenance: ctx.provenance(),
            record: path.display().to_string(),
            record_config_hash: rec.provenance.config_hash.clone(),
            kind: rec.kind.clone(),
            energy: rec.energy,
            period: rec.period,
            validation: v,
            passed: v.passed,
        },
    )?;
    let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
    println!("verify: {} orbit, E = {:.6} J, T = {:.6} s", rec.kind, rec.energy, rec.period);
    println!("  closure           {:.3e} rad  {}", v.closure, mark(v.closure <= opts.closure_tol));
    println!("  velocity mismatch {:.3e}      {}", v.velocity_mismatch, mark(v.velocity_mismatch <= opts.velocity_tol));
    println!("  energy drift      {:.3e}      {}", v.energy_drift, mark(v.energy_drift <= opts.drift_tol));
    println!("  winding           {:?}  {}", v.winding, mark(v.winding == Some(orbit.winding_class())));
    if let Some(s) = v.symmetry {
        println!("  symmetry          {:.3e} rad  {}", s, mark(s <= opts.symmetry_tol));
    }
    println!("verify: {}", if v.passed { "PASS" } else { "FAIL" });
    if v.passed {
        Ok(EXIT_OK)
    } else {
        Ok(exit_code(&Error::ValidationFailed("record did not re-validate".into())))
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}
