//! Interface contracts: CLI exit codes, fixture handling, report schema,
//! and property-based operator invariants.

use std::process::Command;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cstar_shift::algebra::{inner_product, AlgebraSignature, ModuleVector};
use cstar_shift::grid::{
    standard_shift, FiberSpec, GridSpec, GridTime, GridVector, TimeBound,
};

fn cshift() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cshift"))
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn exit_zero_on_passing_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    // horizon must cover the fixture's disguise window (4 units) so that the
    // canonical window probes lie in the reachable span
    let status = cshift()
        .args(["reconstruct", "--grid", "4", "--horizon", "4", "--fixture"])
        .arg(fixture("disguised_shift.json"))
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["schema_version"], 1);
    assert_eq!(parsed["command"], "reconstruct");
    assert_eq!(parsed["config"]["grid"], 4);
    assert_eq!(parsed["passed"], true);
    assert!(parsed["fiber"]["frame_size"].is_u64());
    let stages = parsed["stages"].as_array().unwrap();
    assert!(stages.iter().any(|s| s["stage"] == "equivalence_map"));
    for stage in stages {
        for check in stage["checks"].as_array().unwrap() {
            assert!(check["name"].is_string());
            assert!(check["residual"].is_number());
            assert!(check["tol"].is_number());
            assert!(check["pass"].is_boolean());
        }
    }
}

#[test]
fn exit_one_on_check_failure_with_report_written() {
    // the non-pure control must fail surjectivity but still write a report
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("failing.json");
    let status = cshift()
        .args(["reconstruct", "--grid", "4", "--horizon", "2", "--fixture"])
        .arg(fixture("nonpure_control.json"))
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["passed"], false);
}

#[test]
fn exit_two_on_empty_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let status = cshift()
        .args(["reconstruct", "--fixture"])
        .arg(&empty)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn exit_two_on_malformed_fixture_names_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"model\": \"disguised_shift\",\n  oops\n}").unwrap();
    let output = cshift()
        .args(["reconstruct", "--fixture"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 3"), "stderr was: {stderr}");
}

#[test]
fn exit_two_on_unknown_scenario() {
    let status = cshift()
        .args(["gallery", "--scenario", "does-not-exist"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn wold_fixture_runs_and_emits_decay_csv() {
    let dir = tempfile::tempdir().unwrap();
    let status = cshift()
        .args(["wold", "--grid", "4", "--horizon", "1", "--fixture"])
        .arg(fixture("wold_mixed.json"))
        .arg("--csv-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("pureness_decay.csv")).unwrap();
    assert!(csv.starts_with("x,value\n"));
}

#[test]
fn matrix_fiber_fixture_reconstructs() {
    let status = cshift()
        .args(["reconstruct", "--grid", "4", "--horizon", "4", "--fixture"])
        .arg(fixture("matrix_fiber.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

fn arbitrary_signature() -> impl Strategy<Value = AlgebraSignature> {
    prop::collection::vec(1usize..=2, 1..=2)
        .prop_map(|dims| AlgebraSignature::new(dims).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inner_product_is_hermitian(sig in arbitrary_signature(), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ModuleVector::random(&sig, 2, &mut rng);
        let y = ModuleVector::random(&sig, 2, &mut rng);
        let xy = inner_product(&x, &y).unwrap();
        let yx = inner_product(&y, &x).unwrap();
        prop_assert!(xy.star().sub(&yx).norm() <= 1e-12);
    }

    #[test]
    fn shifts_are_isometries_for_every_grid_time(
        sig in arbitrary_signature(),
        n in 1usize..6,
        t in 0u64..12,
        seed in 0u64..1000,
    ) {
        let spec = GridSpec::unilateral(n, FiberSpec::free(sig, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots: Vec<i64> = (0..8).collect();
        let f = GridVector::random(&spec, &slots, &mut rng).unwrap();
        let g = GridVector::random(&spec, &slots, &mut rng).unwrap();
        let s = standard_shift(&spec, GridTime::new(t)).unwrap();
        let lhs = s.apply(&f).inner_product(&s.apply(&g)).unwrap();
        let rhs = f.inner_product(&g).unwrap();
        prop_assert!(lhs.sub(&rhs).norm() <= 1e-12);
        // adjoint pairing
        let pair_l = s.apply(&f).inner_product(&g).unwrap();
        let pair_r = f.inner_product(&s.adjoint_apply(&g)).unwrap();
        prop_assert!(pair_l.sub(&pair_r).norm() <= 1e-12);
    }

    #[test]
    fn grid_vectors_round_trip_through_json(
        sig in arbitrary_signature(),
        seed in 0u64..1000,
    ) {
        let spec = GridSpec::unilateral(4, FiberSpec::free(sig, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = GridVector::random(&spec, &[0, 2, 5], &mut rng).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        let back: GridVector = serde_json::from_str(&text).unwrap();
        prop_assert!(back.sub(&v).norm() <= 1e-14);
    }

    #[test]
    fn interval_indicators_are_projections(
        a in 0u64..10,
        b in 0u64..10,
        seed in 0u64..1000,
    ) {
        let spec = GridSpec::unilateral(
            4,
            FiberSpec::free(AlgebraSignature::scalar(), 1),
        ).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots: Vec<i64> = (0..12).collect();
        let f = GridVector::random(&spec, &slots, &mut rng).unwrap();
        let p = cstar_shift::grid::indicator(
            &spec,
            GridTime::new(a),
            TimeBound::At(GridTime::new(b)),
        );
        let pf = p.apply(&f);
        prop_assert!(p.apply(&pf).sub(&pf).norm() == 0.0);
        prop_assert!(p.adjoint_apply(&f).sub(&p.apply(&f)).norm() == 0.0);
    }
}
