//! Desk-scale counterexamples and constructions around the shift picture.
//!
//! * interleaving an arbitrary isometry with the cyclic shift on `[0,1)` to
//!   produce a continuous-time isometry semigroup, and the identification of
//!   the interleaved fiber shift with the standard right shift;
//! * the sequence-space example where the range projections `r_n` never
//!   converge (`||(r_n - r_m) f|| = 1` for all `n ≠ m`): unitary and pure
//!   parts need not exhaust the module;
//! * the thin-indicator function that breaks strong continuity of the
//!   pointwise shift on sequence spaces;
//! * a finite shadow of the ideal-restricted bilateral shift whose range
//!   complement concentrates on one marked coordinate (fraction `1/m`);
//! * the Weyl commutation relation between the bilateral grid shift and
//!   phase multiplication.
//!
//! True non-adjointability and non-decomposition are infinite-dimensional
//! phenomena; at finite scale this module reports the quantitative shadows
//! (K-uniform lower bounds, degeneration curves), never the theorems.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraElement, AlgebraSignature, ModuleVector};
use crate::cooper::random_probes;
use crate::grid::{
    bilateral_shift, multiplication_phase, sample_profile, standard_shift, FiberSpec,
    GridOperator, GridSpec, GridTime, GridVector, IndexKind,
};
use crate::report::{Check, StageReport};
use crate::wold::StructuredIsometry;
use crate::{Error, Result};

/// `s_t` on `L²[0,1) ⊗ Ĕ`, built by interleaving a base isometry `s̆` with
/// the cyclic shift `u_t` on the unit interval:
/// `s_t = (u_t ⊗ id)(1_{[0,1-frac)} ⊗ s̆^n + 1_{[1-frac,1)} ⊗ s̆^{n+1})`
/// with `n = ⌊t⌋` and `frac = t - n`.  Realized on a flattened unilateral
/// grid where slot `m = k·N + j` holds unit-interval slot `j` of sequence
/// index `k`.
pub struct InterleavedSemigroup {
    base: StructuredIsometry,
    spec: GridSpec,
}

impl InterleavedSemigroup {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn base(&self) -> &StructuredIsometry {
        &self.base
    }

    pub fn at(&self, t: GridTime) -> GridOperator {
        let base = self.base.clone();
        let base2 = self.base.clone();
        let n_slots = self.spec.slots_per_unit as u64;
        let tau = t.slots;
        GridOperator::from_fns(
            std::sync::Arc::new(move |v| interleaved_apply(&base, n_slots, v, tau, false)),
            std::sync::Arc::new(move |v| interleaved_apply(&base2, n_slots, v, tau, true)),
            tau,
        )
    }
}

fn split_by_unit_slot(
    v: &GridVector,
    base_spec: &GridSpec,
    n_slots: u64,
) -> Vec<(u64, GridVector)> {
    let n = n_slots as i64;
    let mut parts: Vec<Option<GridVector>> = vec![None; n_slots as usize];
    for (m, fv) in v.support() {
        let (j, k) = (m.rem_euclid(n), m.div_euclid(n));
        let part = parts[j as usize].get_or_insert_with(|| GridVector::zero(base_spec));
        part.set(k, fv.clone()).expect("base slot valid");
    }
    parts
        .into_iter()
        .enumerate()
        .filter_map(|(j, p)| p.map(|p| (j as u64, p)))
        .collect()
}

fn embed_at_unit_slot(
    out: &mut GridVector,
    base_vec: &GridVector,
    j: u64,
    n_slots: u64,
) {
    for (k, fv) in base_vec.support() {
        let m = k * n_slots as i64 + j as i64;
        let merged = match out.get(m) {
            Some(existing) => existing.add(fv),
            None => fv.clone(),
        };
        out.set(m, merged).expect("flattened slot valid");
    }
}

fn interleaved_apply(
    base: &StructuredIsometry,
    n_slots: u64,
    v: &GridVector,
    tau: u64,
    adjoint: bool,
) -> GridVector {
    let frac = tau % n_slots;
    let n_whole = (tau / n_slots) as usize;
    let mut out = GridVector::zero(v.spec());
    if !adjoint {
        // branch powers, then rotate the unit-interval coordinate by +frac
        for (j, part) in split_by_unit_slot(v, base.spec(), n_slots) {
            let power = if j < n_slots - frac { n_whole } else { n_whole + 1 };
            let moved = base.power(power).apply(&part);
            let j2 = (j + frac) % n_slots;
            embed_at_unit_slot(&mut out, &moved, j2, n_slots);
        }
    } else {
        // rotate by -frac first, then apply the branch adjoint powers
        let mut rotated = GridVector::zero(v.spec());
        for (m, fv) in v.support() {
            let n = n_slots as i64;
            let (j, k) = (m.rem_euclid(n), m.div_euclid(n));
            let j0 = (j - frac as i64).rem_euclid(n);
            rotated.set(k * n + j0, fv.clone()).expect("slot valid");
        }
        for (j, part) in split_by_unit_slot(&rotated, base.spec(), n_slots) {
            let power = if j < n_slots - frac { n_whole } else { n_whole + 1 };
            let moved = base.power(power).adjoint_apply(&part);
            embed_at_unit_slot(&mut out, &moved, j, n_slots);
        }
    }
    out
}

/// Interleave a base isometry (living on a sequence-index grid) with the
/// cyclic unit-interval shift at `n_slots` slots per unit.
pub fn interleave(base: &StructuredIsometry, n_slots: usize) -> Result<InterleavedSemigroup> {
    if base.spec().index_kind != IndexKind::Unilateral {
        return Err(Error::InvalidSpec("interleaving needs a unilateral base".into()));
    }
    let spec = GridSpec::unilateral(n_slots, base.spec().fiber.clone())?;
    Ok(InterleavedSemigroup { base: base.clone(), spec })
}

/// Exhaustive semigroup-law check over one period of grid pairs, split by
/// the two case branches of the composition (`frac_r + frac_t` below or at
/// least one unit).  A failing branch names its worst pair.
pub fn verify_interleave_law(
    sg: &InterleavedSemigroup,
    probes: &[GridVector],
    tol: f64,
) -> StageReport {
    let n = sg.spec().slots_per_unit as u64;
    let mut report = StageReport::new("interleave_semigroup_law");

    // s_0 = id and s_1 = id ⊗ s̆
    let mut anchor = 0.0_f64;
    let s1 = sg.at(GridTime::new(n));
    let breve = sg.base().power(1);
    for x in probes {
        anchor = anchor.max(sg.at(GridTime::ZERO).apply(x).sub(x).norm());
        let mut lifted = GridVector::zero(sg.spec());
        for (j, part) in split_by_unit_slot(x, sg.base().spec(), n) {
            embed_at_unit_slot(&mut lifted, &breve.apply(&part), j, n);
        }
        anchor = anchor.max(s1.apply(x).sub(&lifted).norm());
    }
    report.record("unit_times_act_as_base_powers", anchor, tol);

    let mut iso = 0.0_f64;
    let mut branch = [(0.0_f64, (0u64, 0u64)); 2];
    for r in 0..=n {
        let sr = sg.at(GridTime::new(r));
        for x in probes {
            let sx = sr.apply(x);
            iso = iso.max((sx.norm() - x.norm()).abs());
            iso = iso.max(sr.adjoint_apply(&sx).sub(x).norm());
        }
        for t in 0..=n {
            let which = usize::from((r % n) + (t % n) >= n);
            let st = sg.at(GridTime::new(t));
            let srt = sg.at(GridTime::new(r + t));
            for x in probes {
                let res = sr.apply(&st.apply(x)).sub(&srt.apply(x)).norm();
                if res > branch[which].0 {
                    branch[which] = (res, (r, t));
                }
            }
        }
    }
    report.record("isometry", iso, tol);
    for (which, label) in ["law_fractions_below_unit", "law_fractions_wrapping"]
        .iter()
        .enumerate()
    {
        let (res, (r, t)) = branch[which];
        let name = if res > tol {
            format!("{label}_failing_at_r{r}_t{t}")
        } else {
            (*label).to_string()
        };
        report.push(Check::new(name, res, tol));
    }
    report
}

/// Interleaving the one-sided fiber shift reproduces the standard right
/// shift under the slot identification `m = k·N + j`; returns the max
/// residual over grid times up to `horizon_units` and random probes.
pub fn interleave_is_shift(
    fiber: &FiberSpec,
    n_slots: usize,
    horizon_units: u64,
    seed: u64,
) -> Result<f64> {
    let base_spec = GridSpec::unilateral(1, fiber.clone())?;
    let base = StructuredIsometry::pure_shift(&base_spec)?;
    let sg = interleave(&base, n_slots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes = random_probes(sg.spec(), horizon_units * n_slots as u64, 5, &mut rng)?;
    let mut worst = 0.0_f64;
    for tau in 0..=horizon_units * n_slots as u64 {
        let lhs = sg.at(GridTime::new(tau));
        let rhs = standard_shift(sg.spec(), GridTime::new(tau))?;
        for x in &probes {
            worst = worst.max(lhs.apply(x).sub(&rhs.apply(x)).norm());
            worst = worst.max(lhs.adjoint_apply(x).sub(&rhs.adjoint_apply(x)).norm());
        }
    }
    Ok(worst)
}

/// Truncated sequence space `C_b(ℕ, H)` at `K` points: a grid module over
/// `ℬ = ℂ^K` (K scalar blocks) whose block-diagonal inner product realizes
/// the sup-over-k norm; grid slots are the `ℓ²` coordinate of `H`.
pub struct SequenceSpace {
    pub truncation: usize,
    pub spec: GridSpec,
}

impl SequenceSpace {
    pub fn new(truncation: usize, n_slots: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::InvalidSpec("truncation must be >= 1".into()));
        }
        let sig = AlgebraSignature::new(vec![1; truncation])?;
        let spec = GridSpec::unilateral(n_slots, FiberSpec::free(sig, 1))?;
        Ok(Self { truncation, spec })
    }

    /// Basis element living in block `k` only, placed at grid slot `slot`.
    pub fn block_unit(&self, k: usize, slot: i64, amplitude: f64) -> Result<GridVector> {
        let sig = &self.spec.fiber.signature;
        let mut blocks: Vec<nalgebra::DMatrix<Complex64>> =
            sig.block_dims().iter().map(|&d| nalgebra::DMatrix::zeros(d, d)).collect();
        blocks[k][(0, 0)] = Complex64::new(amplitude, 0.0);
        let e = AlgebraElement::new(sig.clone(), blocks)?;
        let fv = ModuleVector::new(sig.clone(), vec![e])?;
        GridVector::single(&self.spec, slot, fv)
    }

    /// The pointwise shift `s̆` (the same unilateral shift in every block).
    pub fn pointwise_shift(&self, slots: u64) -> Result<GridOperator> {
        standard_shift(&self.spec, GridTime::new(slots))
    }
}

/// `||(r_n - r_m) f||` for the witness `f(k) = e_k` (the k-th `ℓ²` basis
/// vector in sequence coordinate k) under the pointwise shift, in the
/// sup-over-k module norm.  Exactly 1 whenever `n ≠ m` (both `≤ K`): the
/// range projections never converge, so `f` sits in neither the unitary nor
/// the pure part asymptotically.
pub fn nondecex_check(truncation: usize, n: usize, m: usize) -> Result<f64> {
    if n > truncation || m > truncation {
        return Err(Error::InvalidSpec("n, m must be <= truncation".into()));
    }
    // one slot per unit: h = 1, so norms are exact
    let space = SequenceSpace::new(truncation, 1)?;
    let mut f = GridVector::zero(&space.spec);
    for k in 0..truncation {
        // f(k) = e_k: block k carries the basis vector at l2 index k
        f = f.add(&space.block_unit(k, k as i64, 1.0)?);
    }
    let range_proj = |steps: usize| -> Result<GridOperator> {
        let s = space.pointwise_shift(steps as u64)?;
        Ok(s.compose(&s.adjoint()))
    };
    let rn = range_proj(n)?;
    let rm = range_proj(m)?;
    Ok(rn.apply(&f).sub(&rm.apply(&f)).norm())
}

/// Per-coordinate pureness of the sequence shift: `||s̆†^j f|| = 0` once `j`
/// exceeds the support bound of every `f(k)` — each point is pure even
/// though the whole family refuses to decompose.
pub fn nondecex_pointwise_decay(truncation: usize) -> Result<Vec<f64>> {
    let space = SequenceSpace::new(truncation, 1)?;
    let mut f = GridVector::zero(&space.spec);
    for k in 0..truncation {
        f = f.add(&space.block_unit(k, k as i64, 1.0)?);
    }
    let s = space.pointwise_shift(1)?;
    let mut cur = f;
    let mut decay = vec![cur.norm()];
    for _ in 0..truncation {
        cur = s.adjoint_apply(&cur);
        decay.push(cur.norm());
    }
    Ok(decay)
}

/// The strong-continuity breaker: `g(k) = y·1_{[1/(k+1),1/k)} /
/// sqrt(1/k - 1/(k+1))`, thin normalized indicators marching into the
/// origin.  Returns `||s_t g - g||` in the sup-over-k norm; for `t ≥ 1/K`
/// the K-th indicator is shifted completely off itself and the result is
/// exactly `sqrt(2)·||y||`.
pub fn nonsc_check(truncation: usize, n_slots: usize, t: GridTime) -> Result<f64> {
    let g = nonsc_witness(truncation, n_slots)?;
    let space = SequenceSpace::new(truncation, n_slots)?;
    let s = space.pointwise_shift(t.slots)?;
    Ok(s.apply(&g).sub(&g).norm())
}

/// The witness vector `g` itself (each block normalized to norm 1).
pub fn nonsc_witness(truncation: usize, n_slots: usize) -> Result<GridVector> {
    let needed = truncation * (truncation + 1);
    if n_slots < needed {
        return Err(Error::InvalidSpec(format!(
            "grid too coarse to resolve the indicator at index {truncation}: \
             need n_slots >= K(K+1) = {needed}, got {n_slots}"
        )));
    }
    let space = SequenceSpace::new(truncation, n_slots)?;
    let h = space.spec.step();
    let mut g = GridVector::zero(&space.spec);
    for k in 1..=truncation {
        // slots j with 1/(k+1) <= j·h < 1/k
        let start = (n_slots as f64 / (k + 1) as f64).ceil() as i64;
        let end_f = n_slots as f64 / k as f64;
        let mut end = end_f.ceil() as i64;
        if (end_f - end_f.floor()).abs() < 1e-12 {
            end = end_f as i64; // exact endpoint is excluded
        }
        let count = (end - start).max(0);
        if count == 0 {
            return Err(Error::InvalidSpec(format!(
                "indicator at index {k} contains no grid slot"
            )));
        }
        let amplitude = 1.0 / (count as f64 * h).sqrt();
        for j in start..end {
            g = g.add(&space.block_unit(k - 1, j, amplitude)?);
        }
    }
    Ok(g)
}

/// Companion to [`nonsc_check`]: on uniformly continuous profiles the same
/// shift family IS continuous — returns `||s_t x - x||` for a sampled
/// Lipschitz profile, bounded by `Lip·t` plus boundary terms.
pub fn nonsc_uniform_probe(n_slots: usize, t: GridTime) -> Result<f64> {
    let spec = GridSpec::unilateral(n_slots, FiberSpec::free(AlgebraSignature::scalar(), 1))?;
    let y = ModuleVector::generator(&spec.fiber.signature, 1, 0);
    // sin(πx) on [0,1): vanishes at both ends, Lipschitz constant π
    let x = sample_profile(
        &spec,
        |u| Complex64::new((std::f64::consts::PI * u).sin(), 0.0),
        &y,
        GridTime::ZERO,
        GridTime::new(n_slots as u64),
    )?;
    let s = standard_shift(&spec, t)?;
    Ok(s.apply(&x).sub(&x).norm())
}

#[derive(Debug, Clone, Copy)]
pub struct ShadowPoint {
    pub m: usize,
    /// Fraction of the `ℬ_m` coordinates lying in `(s_t E)^⊥` (per slot of
    /// the freed window `[0, t)`).
    pub complement_fraction: f64,
    /// Norm of the complement projection (0 if the complement vanishes).
    pub complement_norm: f64,
}

/// Finite shadow of the ideal-restricted bilateral shift.  `ℬ_m = ℂ^m`
/// samples `C([0,1])` at m points with coordinate 0 marked; the ideal
/// `𝓘_m` consists of the unmarked coordinates.  On
/// `E = L²(ℝ₋, 𝓘_m) ⊕ L²(ℝ₊, ℬ_m)` the bilateral shift co-restricts to an
/// isometry semigroup whose range complement is `L²([0,t), 𝓘_m^⊥)` — a
/// single marked coordinate, so the per-ℬ fraction decays as `1/m` while
/// its norm stays 1.  (In the limit, with an essential ideal, the
/// complement is zero although the semigroup is not unitary; that
/// non-adjointability cannot occur at finite scale.)
pub fn nonadex_shadow(
    block_counts: &[usize],
    t: GridTime,
    n_slots: usize,
    window_units: u64,
) -> Result<Vec<ShadowPoint>> {
    if t.slots == 0 {
        return Err(Error::InvalidSpec("shadow needs t > 0".into()));
    }
    let mut points = Vec::with_capacity(block_counts.len());
    for &m in block_counts {
        if m == 0 {
            return Err(Error::InvalidSpec("block count must be >= 1".into()));
        }
        let sig = AlgebraSignature::new(vec![1; m])?;
        let spec = GridSpec::bilateral(n_slots, FiberSpec::free(sig.clone(), 1))?;
        let shift = bilateral_shift(&spec, t.slots as i64)?;
        let window = window_units as i64 * n_slots as i64;

        let unit = |k: usize, slot: i64| -> Result<GridVector> {
            let mut blocks: Vec<nalgebra::DMatrix<Complex64>> =
                sig.block_dims().iter().map(|&d| nalgebra::DMatrix::zeros(d, d)).collect();
            blocks[k][(0, 0)] = Complex64::new(1.0, 0.0);
            let e = AlgebraElement::new(sig.clone(), blocks)?;
            GridVector::single(&spec, slot, ModuleVector::new(sig.clone(), vec![e])?)
        };

        // generators of E in the window: negative slots only for the ideal
        // (coordinates 1..m), nonnegative slots for every coordinate
        let mut e_generators = Vec::new();
        for slot in -window..window {
            for k in 0..m {
                if slot < 0 && k == 0 {
                    continue;
                }
                e_generators.push(unit(k, slot)?);
            }
        }

        // probe coordinates at a slot inside the freed window [0, t)
        let probe_slot = 0i64;
        let mut in_complement = 0usize;
        let mut complement_norm = 0.0_f64;
        for k in 0..m {
            let x = unit(k, probe_slot)?;
            let mut pairing = 0.0_f64;
            for y in &e_generators {
                pairing = pairing.max(x.inner_product(&shift.apply(y))?.norm());
            }
            if pairing == 0.0 {
                in_complement += 1;
                // the complement projection acts as the identity on x
                complement_norm = 1.0;
            }
        }
        points.push(ShadowPoint {
            m,
            complement_fraction: in_complement as f64 / m as f64,
            complement_norm,
        });
    }
    Ok(points)
}

/// With no marked point (`𝓘 = ℬ`) the same construction is the plain
/// bilateral shift: fully unitary, recovered as such by the Wold machinery.
pub fn nonadex_unitary_case(m: usize, n_slots: usize) -> Result<StageReport> {
    let sig = AlgebraSignature::new(vec![1; m])?;
    let spec = GridSpec::bilateral(n_slots, FiberSpec::free(sig, 1))?;
    let s = StructuredIsometry::bilateral_unitary(&spec)?;
    let d = crate::wold::decompose(&s, 2 * n_slots as u64, 3, 1e-10)?;
    let mut report = d.checks;
    report.push(Check::exact(
        "stabilizes_immediately",
        d.stabilization_step == 0,
    ));
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct WeylResult {
    /// The commutator scalar predicted by the grid convention:
    /// `e^{-i·t·s}` with `s = s_slots·h` (shift moves support up, phase
    /// samples `e^{itx}` at `x = j·h`).
    pub expected_phase: Complex64,
    /// Max over probes of the deviation of the realized commutator from
    /// `expected_phase · id`.
    pub max_residual: f64,
}

/// Weyl commutation on the bilateral grid: the group commutator
/// `ŝ_s m_t ŝ_s⁻¹ m_t⁻¹` is the scalar `e^{-i·t·s}`.  The sign is fixed by
/// this implementation's conventions (right shift + forward-sampled phase)
/// and recorded in the result rather than assumed.
pub fn weyl_check(
    n_slots: usize,
    s: GridTime,
    t: f64,
    probe_count: usize,
    seed: u64,
) -> Result<WeylResult> {
    let spec = GridSpec::bilateral(n_slots, FiberSpec::free(AlgebraSignature::scalar(), 1))?;
    let shift = bilateral_shift(&spec, s.slots as i64)?;
    let phase = multiplication_phase(&spec, t);
    let h = spec.step();
    let expected = Complex64::new(0.0, -t * s.slots as f64 * h).exp();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = Vec::with_capacity(probe_count);
    let slots: Vec<i64> = (-8..8).collect();
    for _ in 0..probe_count {
        probes.push(GridVector::random(&spec, &slots, &mut rng)?);
    }
    let mut worst = 0.0_f64;
    for x in &probes {
        let y = shift.apply(&phase.apply(&shift.adjoint_apply(&phase.adjoint_apply(x))));
        worst = worst.max(y.sub(&x.scale(expected)).norm() / x.norm().max(1e-300));
    }
    Ok(WeylResult { expected_phase: expected, max_residual: worst })
}
