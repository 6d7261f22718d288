//! End-to-end runs of the command-line tool and library workflows.

use std::path::Path;
use std::process::{Command, Output};

use jacobi_orbits::cli::record::OrbitRecord;
use jacobi_orbits::geometry::JacobiMetric;
use jacobi_orbits::integrate::track_string;
use jacobi_orbits::model::{DoublePendulum, MechanicalSystem};
use jacobi_orbits::relaxation::{relax, DiscreteString, RelaxOptions};
use jacobi_orbits::Vec2;
use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jacobi-orbits")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SHORT_HOP: &str = "[relax]\nenergy = \"umin+20\"\nqa = [-1.0, 0.5]\nqb = [0.19104510964544763, -0.0556774727096701]\ntrack = true\n";

#[test]
fn short_hop_string_follows_the_trajectory() {
    let sys = DoublePendulum::<f64>::default();
    let e = sys.potential_bounds().0 + 20.0;
    let s = DiscreteString::open_line(Vec2::new(-1.0, 0.5), Vec2::new(0.19104510964544763, -0.0556774727096701), 200).unwrap();
    let (out, rep) = relax(&s, &JacobiMetric::new(&sys, e), &RelaxOptions::default()).unwrap();
    assert!(rep.converged && rep.final_residual <= 1e-6);
    let tr = track_string(&out, e, 1.5, 1e-3, &sys).unwrap();
    assert!(tr.deviation <= 0.02, "deviation {}", tr.deviation);
    assert!((tr.arrival_time - 0.4).abs() < 0.01, "arrival {}", tr.arrival_time);
}

#[test]
fn relax_writes_artifacts_and_tracks() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hop.toml"), SHORT_HOP).unwrap();
    let o = run(dir.path(), &["relax", "hop.toml", "--set", "output.dir=\"hop\""]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["string.csv", "report.json", "path.svg", "length.svg", "velocity.svg"] {
        assert!(dir.path().join("hop").join(f).is_file(), "missing {f}");
    }
    let rep = json(&dir.path().join("hop/report.json"));
    assert_eq!(rep["converged"], true);
    assert!(rep["tracking"]["deviation"].as_f64().unwrap() <= 0.02);

    let sim = "[output]\ndir = \"sim\"\n[simulate]\nstring = \"hop/string.csv\"\nenergy = \"umin+20\"\nt_end = 0.4\n";
    std::fs::write(dir.path().join("sim.toml"), sim).unwrap();
    let o = run(dir.path(), &["simulate", "sim.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = json(&dir.path().join("sim/summary.json"));
    assert!(summary["energy_drift"].as_f64().unwrap() < 1e-6);
}

#[test]
fn unreachable_endpoints_report_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hop.toml"), SHORT_HOP).unwrap();
    let o = run(dir.path(), &["relax", "hop.toml", "--set", "relax.qb=[1.2,-0.8]"]);
    assert_eq!(code(&o), 2);
    let diag = json(&dir.path().join("out/diagnostic.json"));
    assert_eq!(diag["error_kind"], "DegenerateMetric");
    assert_eq!(diag["exit_code"], 2);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hop.toml"), SHORT_HOP).unwrap();
    let o = run(dir.path(), &["relax", "hop.toml", "--set", "relax.energy=\"umid+3\""]);
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("relax.energy"), "{}", stderr(&o));

    let o = run(dir.path(), &["relax", "hop.toml", "--set", "relax.max_iter=0"]);
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("relax.max_iter"), "{}", stderr(&o));

    let o = run(dir.path(), &["relax", "hop.toml", "--set", "relax.bogus=1"]);
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));

    let o = run(dir.path(), &["relax", "missing.toml"]);
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("missing.toml"), "{}", stderr(&o));

    let o = run(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn brake_search_above_the_potential_maximum_is_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[orbit]\nkind = \"brake\"\nmode = 1\nenergy = \"umax+1\"\n";
    std::fs::write(dir.path().join("b.toml"), cfg).unwrap();
    let o = run(dir.path(), &["find-orbit", "b.toml"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn orbit_record_continues_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let cfg = "[output]\ndir = \"orb\"\n[orbit]\nkind = \"brake\"\nmode = 2\nenergy = \"umin+1\"\n";
    std::fs::write(p.join("b.toml"), cfg).unwrap();
    let o = run(p, &["find-orbit", "b.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rec = OrbitRecord::read(&p.join("orb/orbit.json")).unwrap();
    assert_eq!(rec.kind, "brake");
    assert!(rec.brake_points.is_some());

    // A zero energy step repeats the start orbit.
    let fam = "[output]\ndir = \"fam\"\n[continue]\nstart = \"orb/orbit.json\"\ndelta_e = 0.0\nsteps = 2\n";
    std::fs::write(p.join("f.toml"), fam).unwrap();
    let o = run(p, &["continue", "f.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let man = json(&p.join("fam/manifest.json"));
    let energies = man["energies"].as_array().unwrap();
    assert_eq!(energies.len(), 3);
    assert!(energies.iter().all(|e| e.as_f64() == Some(rec.energy)));
    let last = OrbitRecord::read(&p.join("fam/member_002.json")).unwrap();
    assert!((last.period - rec.period).abs() < 1e-8);

    let ver = "[output]\ndir = \"ver\"\n[verify]\nrecord = \"fam/member_002.json\"\n";
    std::fs::write(p.join("v.toml"), ver).unwrap();
    let o = run(p, &["verify", "v.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&p.join("ver/verification.json"))["passed"], true);
}

#[test]
fn config_hash_ignores_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hop.toml"), SHORT_HOP).unwrap();
    assert_eq!(code(&run(dir.path(), &["relax", "hop.toml", "--set", "output.dir=\"a\""])), 0);
    assert_eq!(code(&run(dir.path(), &["relax", "hop.toml", "--set", "output.dir=\"b\""])), 0);
    let a = json(&dir.path().join("a/report.json"));
    let b = json(&dir.path().join("b/report.json"));
    assert_eq!(a["provenance"]["config_hash"], b["provenance"]["config_hash"]);
    let o = run(dir.path(), &["relax", "hop.toml", "--set", "output.dir=\"c\"", "--set", "relax.vertices=150"]);
    assert_eq!(code(&o), 0);
    let c = json(&dir.path().join("c/report.json"));
    assert_ne!(a["provenance"]["config_hash"], c["provenance"]["config_hash"]);
}
