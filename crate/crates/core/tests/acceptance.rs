//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Each criterion gathers check records from the bundled fixtures and passes
//! only if every gathered record passes.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::thread;

use leib_core::cli::Scene;
use leib_core::verify::{self, CheckRecord, Suite, VerifyConfig};

const FIXTURES: [&str; 3] = ["euclidean2", "sphere", "halfplane"];

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.scene.json"))
}

struct Fixture {
    name: &'static str,
    scene: Scene,
    checks: Vec<CheckRecord>,
}

impl Fixture {
    fn matching<'a>(
        &'a self,
        pred: impl Fn(&str) -> bool + 'a,
    ) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.checks.iter().filter(move |c| pred(&c.name))
    }
}

struct Criterion {
    number: usize,
    title: &'static str,
    records: Vec<CheckRecord>,
    requirements: usize,
    failures: Vec<String>,
}

impl Criterion {
    fn new(number: usize, title: &'static str) -> Self {
        Criterion {
            number,
            title,
            records: Vec::new(),
            requirements: 0,
            failures: Vec::new(),
        }
    }

    fn extend<'a>(&mut self, records: impl IntoIterator<Item = &'a CheckRecord>) {
        self.records.extend(records.into_iter().cloned());
    }

    fn require(&mut self, ok: bool, why: impl Into<String>) {
        self.requirements += 1;
        if !ok {
            self.failures.push(why.into());
        }
    }

    fn report(&self) -> bool {
        let bad: Vec<&CheckRecord> = self.records.iter().filter(|c| !c.pass).collect();
        let empty = self.records.is_empty() && self.requirements == 0;
        let pass = bad.is_empty() && self.failures.is_empty() && !empty;
        println!(
            "criterion {:>2} {}: {} ({} checks, {} requirements)",
            self.number,
            self.title,
            if pass { "PASS" } else { "FAIL" },
            self.records.len(),
            self.requirements
        );
        for c in bad {
            println!(
                "    failed {}: residual {:e} vs {:e} {:?}",
                c.name, c.max_residual, c.tolerance, c.detail
            );
        }
        for f in &self.failures {
            println!("    {f}");
        }
        if empty {
            println!("    no checks gathered");
        }
        pass
    }
}

fn strip_wall_time(report: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(report).expect("report is JSON");
    v.as_object_mut()
        .expect("report is an object")
        .remove("wall_time");
    v.to_string()
}

fn run_verify(name: &str) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_leib"))
        .args(["verify", "--seed", "42", "--scene"])
        .arg(fixture_path(name))
        .output()
        .expect("leib runs");
    (
        out.status.code(),
        String::from_utf8(out.stdout).expect("utf-8 report"),
    )
}

fn main() -> ExitCode {
    // The binary runs are independent of the in-process suite, so start them first.
    let runs: Vec<_> = FIXTURES
        .iter()
        .flat_map(|&name| (0..2).map(move |_| (name, thread::spawn(move || run_verify(name)))))
        .collect();

    let cfg = VerifyConfig::default();
    let fixtures: Vec<Fixture> = FIXTURES
        .iter()
        .map(|&name| {
            let scene = Scene::load(fixture_path(name)).expect("fixture loads");
            let checks = verify::scene_suite(&scene, Suite::All, &cfg);
            Fixture {
                name,
                scene,
                checks,
            }
        })
        .collect();
    let all = |pred: fn(&str) -> bool| {
        fixtures
            .iter()
            .flat_map(move |f| f.matching(pred))
            .collect::<Vec<_>>()
    };
    let mut criteria = Vec::new();

    let mut c = Criterion::new(1, "local/global equivalence, k in 1..=3, n in {2,3}");
    c.extend(all(|n| n.starts_with("leibniz.local_global.")));
    for f in &fixtures {
        for n in [2, 3] {
            for k in 1..=3 {
                let name = format!("leibniz.local_global.n{n}.k{k}");
                c.require(
                    f.checks.iter().any(|r| r.name == name),
                    format!("{}: missing {name}", f.name),
                );
            }
        }
    }
    criteria.push(c);

    let mut c = Criterion::new(
        2,
        "two-tensor expansion term multiset and sampled agreement",
    );
    c.extend(all(|n| {
        n.starts_with("leibniz.two_tensor_structure.") || n.ends_with(".k2")
    }));
    c.extend(&[verify::two_tensor_structure(3, &cfg)]);
    criteria.push(c);

    let mut c = Criterion::new(3, "one-form coboundary is the exterior derivative");
    c.extend(all(|n| n.starts_with("leibniz.one_form.")));
    criteria.push(c);

    let mut c = Criterion::new(4, "Christoffel identity; flat metric exactly zero");
    c.extend(all(|n| n.ends_with(".christoffel_identity")));
    for f in &fixtures {
        if let Some(r) = f.matching(|n| n.ends_with(".christoffel_identity")).next() {
            if f.name == "euclidean2" {
                c.require(
                    r.max_residual == 0.0,
                    format!("flat residual {:e} is not exactly zero", r.max_residual),
                );
            }
        } else {
            c.require(false, format!("{}: no Christoffel check", f.name));
        }
    }
    criteria.push(c);

    let mut c = Criterion::new(5, "connection identity with non-linear slots");
    c.extend(all(|n| n.ends_with(".connection_identity")));
    criteria.push(c);

    let mut c = Criterion::new(6, "coboundary squares to zero, k in 0..=2");
    c.extend(all(|n| n.starts_with("leibniz.d_squared.")));
    criteria.push(c);

    let mut c = Criterion::new(7, "locality under bump cut-offs");
    c.extend(all(|n| n.starts_with("leibniz.locality.")));
    criteria.push(c);

    let mut c = Criterion::new(
        8,
        "cocycle obstructions flag symmetric tensors, spare forms",
    );
    c.extend(all(|n| n.starts_with("leibniz.obstruction.")));
    criteria.push(c);

    let mut c = Criterion::new(
        9,
        "curvature identities, parallel metric, unit sphere value, corruption detector",
    );
    for f in fixtures.iter().filter(|f| f.name != "euclidean2") {
        let wanted = [
            ".bianchi",
            ".curvature_symmetries",
            ".parallel_metric",
            ".corruption_detected",
        ];
        for suffix in wanted {
            let found: Vec<_> = f
                .matching(move |n| n.starts_with("riemann.") && n.ends_with(suffix))
                .collect();
            c.require(!found.is_empty(), format!("{}: missing {suffix}", f.name));
            c.extend(found);
        }
    }
    let sphere = fixtures
        .iter()
        .find(|f| f.name == "sphere")
        .expect("sphere fixture");
    let value: Vec<_> = sphere
        .matching(|n| n.contains(".curvature_value.R1221"))
        .collect();
    c.require(!value.is_empty(), "sphere: missing R1221 value check");
    c.extend(value);
    criteria.push(c);

    let mut c = Criterion::new(
        10,
        "curvature coboundary formula against the cochain formula",
    );
    c.extend(all(|n| n.ends_with(".dr_formula")));
    criteria.push(c);

    let mut c = Criterion::new(
        11,
        "rank-1 first variation: exact vs differences, closed form",
    );
    c.extend(all(|n| n.starts_with("variation.rank1.exact_vs_numeric")));
    let euclid = fixtures
        .iter()
        .find(|f| f.name == "euclidean2")
        .expect("flat fixture");
    let closed: Vec<_> = euclid
        .matching(|n| n == "variation.rotation.sine_bump.closed_form")
        .collect();
    c.require(
        !closed.is_empty(),
        "flat: missing the rotation-form closed-form check",
    );
    c.extend(closed);
    criteria.push(c);

    let mut c = Criterion::new(
        12,
        "rank-2 first variation: exact vs differences, constant tensors stationary",
    );
    c.extend(all(|n| n.starts_with("variation.rank2.")));
    criteria.push(c);

    let mut c = Criterion::new(13, "geodesic residuals and the arc-length pairing");
    c.extend(all(|n| {
        n.contains(".geodesic.")
            || n.contains(".non_geodesic.")
            || n.contains(".arc_length_pairing")
    }));
    for (fixture, kind) in [
        ("euclidean2", ".geodesic."),
        ("halfplane", ".geodesic."),
        ("sphere", ".non_geodesic."),
    ] {
        let f = fixtures
            .iter()
            .find(|f| f.name == fixture)
            .expect("fixture");
        c.require(
            f.checks.iter().any(|r| r.name.contains(kind)),
            format!("{fixture}: missing {kind} check"),
        );
    }
    criteria.push(c);

    let mut c = Criterion::new(14, "verify reports are reproducible");
    let mut outputs: Vec<(&str, Option<i32>, String)> = Vec::new();
    for (name, handle) in runs {
        let (code, stdout) = handle.join().expect("verify thread");
        outputs.push((name, code, stdout));
    }
    for pair in outputs.chunks(2) {
        let [(name, code_a, a), (_, code_b, b)] = pair else {
            unreachable!("runs come in pairs")
        };
        c.require(
            *code_a == Some(0) && *code_b == Some(0),
            format!("{name}: exit codes {code_a:?}, {code_b:?}"),
        );
        c.require(
            strip_wall_time(a) == strip_wall_time(b),
            format!("{name}: reports differ"),
        );
        let fixture = fixtures.iter().find(|f| f.name == *name).expect("fixture");
        let report: serde_json::Value = serde_json::from_str(a).expect("report JSON");
        c.require(
            report["scene_hash"].as_str() == Some(fixture.scene.hash.as_str()),
            format!("{name}: report hash does not match the scene"),
        );
    }
    criteria.push(c);

    let mut ok = true;
    for c in &criteria {
        ok &= c.report();
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
