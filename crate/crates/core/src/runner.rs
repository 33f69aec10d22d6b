//! Command orchestration: fixtures, run configuration, and report assembly.
//!
//! The four commands are
//! * `reconstruct` — full pipeline from an abstract semigroup fixture to the
//!   standard-shift equivalence,
//! * `verify` — the identity suites only (projection calculus, window
//!   groups, averaging, convergence, shift relations),
//! * `wold` — unitary/pure splitting of a structured isometry fixture,
//! * `gallery` — the named counterexample scenarios.
//!
//! Runs are deterministic: the same [`RunConfig`] (including seed) yields a
//! byte-identical report.  Wall-clock timing is never part of the report for
//! that reason; callers who want it can measure around [`run`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraSignature;
use crate::cooper::{
    disguised_shift_semigroup, reconstruct, shift_with_unitary_block, standard_shift_semigroup,
    AbstractSemigroup, ReconstructConfig,
};
use crate::gallery;
use crate::grid::{FiberSpec, GridSpec, GridTime, GridVector};
use crate::report::{Check, Curve, Report, StageReport};
use crate::wold::{self, StructuredIsometry};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Reconstruct,
    Verify,
    Wold,
    Gallery,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Reconstruct => "reconstruct",
            Command::Verify => "verify",
            Command::Wold => "wold",
            Command::Gallery => "gallery",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// Slots per time unit (N).
    pub grid: usize,
    /// Observation horizon in whole units (K).
    pub horizon: u64,
    pub tol: f64,
    pub seed: u64,
    pub scenario: Option<String>,
    pub fixture: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub csv_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            grid: 8,
            horizon: 4,
            tol: crate::DEFAULT_TOL,
            seed: 7,
            scenario: None,
            fixture: None,
            report: None,
            csv_dir: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grid == 0 || self.horizon == 0 {
            return Err(Error::InvalidSpec("grid and horizon must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidSpec("tolerance must be > 0".into()));
        }
        Ok(())
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "command": self.command.name(),
            "grid": self.grid,
            "horizon": self.horizon,
            "tol": self.tol,
            "seed": self.seed,
            "scenario": self.scenario,
            "fixture": self.fixture.as_ref().map(|p| p.display().to_string()),
        })
    }
}

/// A model description loaded from JSON; every field except `model` has a
/// default so fixtures stay short.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFixture {
    /// One of `standard_shift`, `disguised_shift`, `shift_with_unitary_block`
    /// (semigroup models) or `pure_shift`, `unitary_plus_shift`,
    /// `bilateral_unitary` (single-isometry models).
    pub model: String,
    #[serde(default = "default_signature")]
    pub signature: Vec<usize>,
    #[serde(default = "default_rank")]
    pub fiber_rank: usize,
    /// Disguise width in whole units; 0 disables the disguise.
    #[serde(default)]
    pub disguise_window: u64,
    #[serde(default)]
    pub disguise_seed: Option<u64>,
    /// For `unitary_plus_shift`: how many fiber components are unitary.
    #[serde(default)]
    pub unitary_rank: usize,
    /// For `shift_with_unitary_block`: rotation speed of the phase summand.
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_signature() -> Vec<usize> {
    vec![1]
}
fn default_rank() -> usize {
    1
}
fn default_theta() -> f64 {
    0.37
}

impl ModelFixture {
    pub fn disguised_default() -> Self {
        Self {
            model: "disguised_shift".into(),
            signature: vec![1],
            fiber_rank: 1,
            disguise_window: 2,
            disguise_seed: None,
            unitary_rank: 0,
            theta: default_theta(),
        }
    }

    pub fn wold_default() -> Self {
        Self {
            model: "unitary_plus_shift".into(),
            signature: vec![1],
            fiber_rank: 3,
            disguise_window: 2,
            disguise_seed: None,
            unitary_rank: 1,
            theta: default_theta(),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim().is_empty() {
            return Err(Error::InvalidSpec(format!(
                "fixture {} is empty",
                path.display()
            )));
        }
        serde_json::from_str(&text).map_err(|e| {
            Error::InvalidSpec(format!(
                "fixture {} failed to parse at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    fn spec(&self, grid: usize) -> Result<GridSpec> {
        let sig = AlgebraSignature::new(self.signature.clone())?;
        GridSpec::unilateral(grid, FiberSpec::free(sig, self.fiber_rank))
    }

    pub fn semigroup(&self, grid: usize, seed: u64) -> Result<AbstractSemigroup> {
        let spec = self.spec(grid)?;
        let dseed = self.disguise_seed.unwrap_or(seed ^ 0x5eed);
        match self.model.as_str() {
            "standard_shift" => standard_shift_semigroup(&spec),
            "disguised_shift" => {
                let window = self.disguise_window.max(1);
                Ok(disguised_shift_semigroup(&spec, window, dseed)?.0)
            }
            "shift_with_unitary_block" => {
                if self.fiber_rank < 2 {
                    return Err(Error::InvalidSpec(
                        "shift_with_unitary_block needs fiber_rank >= 2".into(),
                    ));
                }
                shift_with_unitary_block(&spec, self.fiber_rank - 1, self.theta)
            }
            other => Err(Error::InvalidSpec(format!(
                "model '{other}' is not a semigroup model"
            ))),
        }
    }

    pub fn isometry(&self, grid: usize, seed: u64) -> Result<StructuredIsometry> {
        let dseed = self.disguise_seed.unwrap_or(seed ^ 0x5eed);
        match self.model.as_str() {
            "pure_shift" => StructuredIsometry::pure_shift(&self.spec(grid)?),
            "bilateral_unitary" => {
                let sig = AlgebraSignature::new(self.signature.clone())?;
                let spec = GridSpec::bilateral(grid, FiberSpec::free(sig, self.fiber_rank))?;
                StructuredIsometry::bilateral_unitary(&spec)
            }
            "unitary_plus_shift" => {
                let s = StructuredIsometry::unitary_plus_shift(
                    &self.spec(grid)?,
                    self.unitary_rank,
                    dseed,
                )?;
                if self.disguise_window > 0 {
                    s.disguised(self.disguise_window, dseed.wrapping_add(1))
                } else {
                    Ok(s)
                }
            }
            other => Err(Error::InvalidSpec(format!(
                "model '{other}' is not a single-isometry model"
            ))),
        }
    }
}

pub struct RunOutput {
    pub report: Report,
    pub curves: Vec<Curve>,
}

/// Execute a command.  Input problems (bad fixture, bad config) surface as
/// `Err`; check failures are recorded in the report with `passed = false`.
/// The report and any CSV curves are written to the configured paths.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let fixture = match &config.fixture {
        Some(path) => Some(ModelFixture::load(path)?),
        None => None,
    };

    let mut out = match config.command {
        Command::Reconstruct => run_reconstruct(config, fixture.as_ref(), false)?,
        Command::Verify => run_reconstruct(config, fixture.as_ref(), true)?,
        Command::Wold => run_wold(config, fixture.as_ref())?,
        Command::Gallery => run_gallery(config)?,
    };
    out.report.config = config.echo();

    if let Some(path) = &config.report {
        out.report.write(path)?;
    }
    if let Some(dir) = &config.csv_dir {
        for curve in &out.curves {
            curve.write(dir)?;
        }
    }
    Ok(out)
}

fn run_reconstruct(
    config: &RunConfig,
    fixture: Option<&ModelFixture>,
    identities_only: bool,
) -> Result<RunOutput> {
    let default_fixture = ModelFixture::disguised_default();
    let fixture = fixture.unwrap_or(&default_fixture);
    let sg = fixture.semigroup(config.grid, config.seed)?;
    let cfg = ReconstructConfig {
        horizon_units: config.horizon,
        samples: 10,
        seed: config.seed,
        tol: config.tol,
        surj_tol: 1e-8_f64.max(config.tol),
        frame_tol: 1e-8,
    };
    let command = if identities_only { "verify" } else { "reconstruct" };
    let mut report = Report::new(command, serde_json::Value::Null);
    let eq = reconstruct(&sg, &cfg)?;
    for stage in eq.stages {
        if identities_only
            && matches!(stage.stage.as_str(), "extract_multiplicity" | "equivalence_map")
        {
            continue;
        }
        report.push_stage(stage);
    }
    if !identities_only {
        report.fiber = eq.fiber;
    }
    Ok(RunOutput { report, curves: eq.curves })
}

fn run_wold(config: &RunConfig, fixture: Option<&ModelFixture>) -> Result<RunOutput> {
    let default_fixture = ModelFixture::wold_default();
    let fixture = fixture.unwrap_or(&default_fixture);
    let iso = fixture.isometry(config.grid, config.seed)?;
    let window_slots = config.horizon * config.grid as u64;
    let n_max = window_slots as usize + 4;

    let mut report = Report::new("wold", serde_json::Value::Null);
    match wold::decompose(&iso, window_slots, n_max, config.tol) {
        Ok(d) => {
            let mut stage = d.checks;
            stage.push(Check::exact(
                format!("stabilized_at_step_{}", d.stabilization_step),
                true,
            ));
            let ranks =
                wold::projection_block_ranks(&d.unitary_projection, iso.spec(), window_slots)?;
            let total_rank_per_slot: usize = iso
                .spec()
                .fiber
                .signature
                .block_dims()
                .iter()
                .map(|&nb| nb * nb * iso.spec().fiber.rank)
                .sum();
            stage.push(Check::exact(
                format!("unitary_block_ranks_{ranks:?}"),
                ranks.iter().sum::<usize>() <= window_slots as usize * total_rank_per_slot,
            ));
            report.push_stage(stage);

            // pureness decay of the three canonical probe classes
            let probes = wold_probe_classes(&iso)?;
            let table = wold::pureness_metric(&iso, &probes, n_max);
            let mut curve = Curve::new("pureness_decay");
            for (step, _) in table[0].iter().enumerate() {
                for row in &table {
                    curve.push(step as f64, row[step], None);
                }
            }
            let mut metric_stage = StageReport::new("pureness_metric");
            for (i, row) in table.iter().enumerate() {
                let last = *row.last().unwrap();
                metric_stage.push(Check::exact(
                    format!("probe_{i}_final_norm_{last:.3}"),
                    last.is_finite(),
                ));
            }
            report.push_stage(metric_stage);
            Ok(RunOutput { report, curves: vec![curve] })
        }
        Err(Error::Diagnostic(msg)) => {
            let mut stage = StageReport::new("wold_decomposition");
            stage.push(Check::exact(format!("stabilization_failed: {msg}"), false));
            report.push_stage(stage);
            Ok(RunOutput { report, curves: Vec::new() })
        }
        Err(e) => Err(e),
    }
}

fn wold_probe_classes(iso: &StructuredIsometry) -> Result<Vec<GridVector>> {
    let spec = iso.spec();
    let mut probes = Vec::new();
    for r in 0..spec.fiber.rank {
        let fv = spec.fiber.generator(r)?;
        if fv.norm() > 0.0 {
            probes.push(GridVector::single(spec, 1, fv)?);
        }
    }
    if probes.len() >= 2 {
        let mixed = probes[0].add(&probes[probes.len() - 1]);
        probes.push(mixed);
    }
    Ok(probes)
}

const GALLERY_SCENARIOS: &[&str] = &["interleave", "nondecex", "nonsc", "nonadex", "weyl"];

fn run_gallery(config: &RunConfig) -> Result<RunOutput> {
    let mut report = Report::new("gallery", serde_json::Value::Null);
    let mut curves = Vec::new();
    let scenarios: Vec<&str> = match config.scenario.as_deref() {
        Some(s) => {
            if !GALLERY_SCENARIOS.contains(&s) {
                return Err(Error::InvalidSpec(format!(
                    "unknown gallery scenario '{s}'; expected one of {GALLERY_SCENARIOS:?}"
                )));
            }
            vec![s]
        }
        None => GALLERY_SCENARIOS.to_vec(),
    };
    for s in scenarios {
        match s {
            "interleave" => gallery_interleave(config, &mut report)?,
            "nondecex" => gallery_nondecex(config, &mut report, &mut curves)?,
            "nonsc" => gallery_nonsc(config, &mut report, &mut curves)?,
            "nonadex" => gallery_nonadex(config, &mut report, &mut curves)?,
            "weyl" => gallery_weyl(config, &mut report)?,
            _ => unreachable!(),
        }
    }
    Ok(RunOutput { report, curves })
}

fn gallery_interleave(config: &RunConfig, report: &mut Report) -> Result<()> {
    let base_spec = GridSpec::unilateral(
        1,
        FiberSpec::free(AlgebraSignature::scalar(), 2),
    )?;
    let base = StructuredIsometry::unitary_plus_shift(&base_spec, 1, config.seed ^ 0x11)?;
    let sg = gallery::interleave(&base, config.grid)?;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let probes = crate::cooper::random_probes(
        sg.spec(),
        config.horizon * config.grid as u64,
        3,
        &mut rng,
    )?;
    let mut stage = gallery::verify_interleave_law(&sg, &probes, config.tol.min(1e-12));
    let res = gallery::interleave_is_shift(
        &FiberSpec::free(AlgebraSignature::scalar(), 1),
        config.grid,
        3,
        config.seed,
    )?;
    stage.record("fiber_shift_identification", res, config.tol.min(1e-12));
    report.push_stage(stage);
    Ok(())
}

fn gallery_nondecex(
    config: &RunConfig,
    report: &mut Report,
    curves: &mut Vec<Curve>,
) -> Result<()> {
    let truncation = 16usize;
    let mut stage = StageReport::new("nondecex");
    let mut all_one = true;
    let mut all_zero = true;
    for n in 0..=truncation {
        for m in 0..=truncation {
            let v = gallery::nondecex_check(truncation, n, m)?;
            if n == m {
                all_zero &= v == 0.0;
            } else {
                all_one &= v == 1.0;
            }
        }
    }
    stage.push(Check::exact("off_diagonal_exactly_one", all_one));
    stage.push(Check::exact("diagonal_exactly_zero", all_zero));
    let decay = gallery::nondecex_pointwise_decay(truncation)?;
    stage.push(Check::exact(
        "pointwise_decay_reaches_zero",
        *decay.last().unwrap() == 0.0,
    ));
    let mut curve = Curve::new("nondecex_pointwise_decay");
    for (i, v) in decay.iter().enumerate() {
        curve.push(i as f64, *v, None);
    }
    curves.push(curve);
    report.push_stage(stage);
    let _ = config;
    Ok(())
}

fn gallery_nonsc(
    config: &RunConfig,
    report: &mut Report,
    curves: &mut Vec<Curve>,
) -> Result<()> {
    let truncation = 8usize;
    let n_slots = (config.grid).max(truncation * (truncation + 1));
    let mut stage = StageReport::new("nonsc");
    let jump = gallery::nonsc_check(truncation, n_slots, GridTime::new(n_slots as u64 / 8))?;
    let bound = std::f64::consts::SQRT_2 - 0.05;
    stage.push(Check::new("jump_at_one_over_k", bound - jump.min(bound), 0.0));
    let mut curve = Curve::new("nonsc_residuals");
    for tau in [0u64, 1, 2, 4, (n_slots / 8) as u64, (n_slots / 4) as u64] {
        let r = gallery::nonsc_check(truncation, n_slots, GridTime::new(tau))?;
        let u = gallery::nonsc_uniform_probe(n_slots, GridTime::new(tau))?;
        curve.push(tau as f64 / n_slots as f64, r, Some(u));
    }
    let small = gallery::nonsc_uniform_probe(n_slots, GridTime::new(1))?;
    stage.record(
        "uniformly_continuous_probe_small_step",
        small,
        std::f64::consts::PI / n_slots as f64 + 0.05,
    );
    curves.push(curve);
    report.push_stage(stage);
    Ok(())
}

fn gallery_nonadex(
    config: &RunConfig,
    report: &mut Report,
    curves: &mut Vec<Curve>,
) -> Result<()> {
    let mut stage = StageReport::new("nonadex_shadow");
    let counts = [1usize, 4, 8, 16, 32];
    let points = gallery::nonadex_shadow(&counts, GridTime::new(2), config.grid.min(4), 2)?;
    let mut exact = true;
    let mut curve = Curve::new("nonadex_complement_fraction");
    for p in &points {
        exact &= p.complement_fraction == 1.0 / p.m as f64 && p.complement_norm == 1.0;
        curve.push(p.m as f64, p.complement_fraction, Some(p.complement_norm));
    }
    stage.push(Check::exact("complement_fraction_is_one_over_m", exact));
    let unitary = gallery::nonadex_unitary_case(4, config.grid.min(4))?;
    stage.push(Check::exact(
        "unmarked_ideal_gives_unitary_semigroup",
        unitary.passed(),
    ));
    curves.push(curve);
    report.push_stage(stage);
    Ok(())
}

fn gallery_weyl(config: &RunConfig, report: &mut Report) -> Result<()> {
    let mut stage = StageReport::new("weyl");
    let res = gallery::weyl_check(
        config.grid,
        GridTime::new(3),
        2.0 * std::f64::consts::PI,
        10,
        config.seed,
    )?;
    stage.record("phase_residual", res.max_residual, config.tol.min(1e-12));
    stage.push(Check::exact(
        format!(
            "convention_exp_minus_i_t_s_phase_{:+.6}{:+.6}i",
            res.expected_phase.re, res.expected_phase.im
        ),
        true,
    ));
    report.push_stage(stage);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_reconstruct_run_passes() {
        let mut config = RunConfig::new(Command::Reconstruct);
        config.grid = 4;
        config.horizon = 2;
        let out = run(&config).unwrap();
        assert!(out.report.passed, "{}", out.report.to_json().unwrap());
        assert!(out.report.fiber.is_some());
    }

    #[test]
    fn verify_run_skips_extraction_stages() {
        let mut config = RunConfig::new(Command::Verify);
        config.grid = 4;
        config.horizon = 2;
        let out = run(&config).unwrap();
        assert!(out.report.passed);
        assert!(out.report.stages.iter().all(|s| s.stage != "equivalence_map"));
        assert!(out.report.fiber.is_none());
    }

    #[test]
    fn gallery_weyl_scenario_only() {
        let mut config = RunConfig::new(Command::Gallery);
        config.scenario = Some("weyl".into());
        let out = run(&config).unwrap();
        assert!(out.report.passed);
        assert_eq!(out.report.stages.len(), 1);
    }

    #[test]
    fn unknown_scenario_is_an_input_error() {
        let mut config = RunConfig::new(Command::Gallery);
        config.scenario = Some("nope".into());
        assert!(matches!(run(&config), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn wold_run_with_default_fixture() {
        let mut config = RunConfig::new(Command::Wold);
        config.grid = 4;
        config.horizon = 1;
        let out = run(&config).unwrap();
        assert!(out.report.passed, "{}", out.report.to_json().unwrap());
        assert!(!out.curves.is_empty());
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let mut config = RunConfig::new(Command::Verify);
        config.grid = 4;
        config.horizon = 2;
        let a = run(&config).unwrap().report.to_json().unwrap();
        let b = run(&config).unwrap().report.to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_fixture_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json");
        std::fs::write(&path, "").unwrap();
        let mut config = RunConfig::new(Command::Reconstruct);
        config.fixture = Some(path);
        assert!(matches!(run(&config), Err(Error::InvalidSpec(_))));
    }
}
