//! Discrete-time splitting of an adjointable isometry into its maximal
//! unitary and pure parts.
//!
//! For a single isometry `S`, the range projections `r_n = S^n S†^n`
//! decrease; their stabilized limit (probed on a finite window) is the
//! projection onto the maximal unitary part `E_u`, and its complement is the
//! pure part `E_p`.  At finite scale the two always sum to the identity on
//! the window; the asymptotic failure of `E_u ⊕ E_p = E` lives in the
//! gallery, not here.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraElement, ModuleVector};
use crate::cooper::WindowUnitary;
use crate::grid::{
    bilateral_shift, standard_shift, GridOperator, GridSpec, GridTime, GridVector, IndexKind,
};
use crate::report::StageReport;
use crate::{Error, Result};

/// A single adjointable isometry with a known block structure: a pointwise
/// unitary on the first `unitary_rank` fiber components, the one-slot right
/// shift on the rest, optionally hidden behind a window-local disguise.
#[derive(Clone)]
pub struct StructuredIsometry {
    spec: GridSpec,
    op: GridOperator,
    /// Construction-known oracle: how many fiber components carry the
    /// unitary part.
    pub unitary_rank: usize,
}

impl StructuredIsometry {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn operator(&self) -> &GridOperator {
        &self.op
    }

    /// `S^n`.
    pub fn power(&self, n: usize) -> GridOperator {
        let mut acc = GridOperator::identity();
        for _ in 0..n {
            acc = self.op.compose(&acc);
        }
        acc
    }

    /// The one-slot unilateral right shift: completely pure.
    pub fn pure_shift(spec: &GridSpec) -> Result<Self> {
        let op = standard_shift(spec, GridTime::new(1))?;
        Ok(Self { spec: spec.clone(), op, unitary_rank: 0 })
    }

    /// The one-slot bilateral shift: unitary, no pure part.
    pub fn bilateral_unitary(spec: &GridSpec) -> Result<Self> {
        let op = bilateral_shift(spec, 1)?;
        Ok(Self { spec: spec.clone(), op, unitary_rank: spec.fiber.rank })
    }

    /// Pointwise unitary on fiber components `< unitary_rank` (a seeded
    /// scalar unitary matrix acting across those components at every slot),
    /// direct-summed with the one-slot shift on the remaining components.
    pub fn unitary_plus_shift(spec: &GridSpec, unitary_rank: usize, seed: u64) -> Result<Self> {
        if spec.index_kind != IndexKind::Unilateral {
            return Err(Error::InvalidSpec("unitary_plus_shift needs a unilateral spec".into()));
        }
        if unitary_rank > spec.fiber.rank {
            return Err(Error::InvalidSpec("unitary_rank exceeds fiber rank".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = scalar_unitary(unitary_rank, &mut rng);
        let w_adj: Vec<Vec<Complex64>> = (0..unitary_rank)
            .map(|i| (0..unitary_rank).map(|j| w[j][i].conj()).collect())
            .collect();
        let shift = standard_shift(spec, GridTime::new(1))?;
        let u = unitary_rank;

        let mix = move |fv: &ModuleVector, m: &[Vec<Complex64>]| -> ModuleVector {
            let sig = fv.signature().clone();
            let entries: Vec<AlgebraElement> = (0..fv.rank())
                .map(|i| {
                    if i < u {
                        let mut acc = AlgebraElement::zero(&sig);
                        for (j, mj) in m.iter().enumerate().take(u) {
                            acc = acc.add(&fv.entry(j).scale(mj[i]));
                        }
                        acc
                    } else {
                        AlgebraElement::zero(&sig)
                    }
                })
                .collect();
            ModuleVector::new(sig, entries).expect("shapes unchanged")
        };

        let keep_high = move |fv: &ModuleVector| -> ModuleVector {
            let sig = fv.signature().clone();
            let entries: Vec<AlgebraElement> = (0..fv.rank())
                .map(|i| {
                    if i >= u {
                        fv.entry(i).clone()
                    } else {
                        AlgebraElement::zero(&sig)
                    }
                })
                .collect();
            ModuleVector::new(sig, entries).expect("shapes unchanged")
        };

        let slotmap = |f: Arc<dyn Fn(&ModuleVector) -> ModuleVector + Send + Sync>| {
            move |v: &GridVector| {
                let mut out = GridVector::zero(v.spec());
                for (j, fv) in v.support() {
                    let wv = f(fv);
                    if wv.norm() > 0.0 {
                        out.set(j, wv).expect("slot unchanged");
                    }
                }
                out
            }
        };

        let (wf, wa) = (w, w_adj);
        let kh = keep_high;
        let uni_fwd = slotmap(Arc::new({
            let wf = wf.clone();
            let mix = mix;
            move |fv: &ModuleVector| mix(fv, &wf)
        }));
        let uni_bwd = slotmap(Arc::new({
            move |fv: &ModuleVector| mix(fv, &wa)
        }));
        let high = slotmap(Arc::new(move |fv: &ModuleVector| kh(fv)));

        let (s1, s2) = (shift.clone(), shift);
        let (h1, h2) = (high.clone(), high);
        let apply: Arc<dyn Fn(&GridVector) -> GridVector + Send + Sync> =
            Arc::new(move |v| uni_fwd(v).add(&s1.apply(&h1(v))));
        let adj: Arc<dyn Fn(&GridVector) -> GridVector + Send + Sync> =
            Arc::new(move |v| uni_bwd(v).add(&h2(&s2.adjoint_apply(v))));
        let op = GridOperator::from_fns(apply, adj, 1);
        Ok(Self { spec: spec.clone(), op, unitary_rank })
    }

    /// Conjugate by a seeded window-local disguise unitary; the structural
    /// oracle (`unitary_rank`) is carried along unchanged.
    pub fn disguised(&self, window_units: u64, seed: u64) -> Result<Self> {
        let d = WindowUnitary::random(&self.spec, window_units, seed)?;
        let v = d.operator();
        let op = v.compose(&self.op).compose(&v.adjoint());
        Ok(Self { spec: self.spec.clone(), op, unitary_rank: self.unitary_rank })
    }
}

fn scalar_unitary(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Complex64>> {
    if n == 0 {
        return Vec::new();
    }
    // Gram-Schmidt on a complex Gaussian matrix, deterministic in the seed.
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    let r = (-2.0 * u1.ln()).sqrt();
                    let th = 2.0 * std::f64::consts::PI * u2;
                    Complex64::new(r * th.cos(), r * th.sin())
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        for prev in 0..k {
            let dot: Complex64 = (0..n).map(|i| cols[prev][i].conj() * cols[k][i]).sum();
            for i in 0..n {
                let sub = dot * cols[prev][i];
                cols[k][i] -= sub;
            }
        }
        let nrm: f64 = (0..n).map(|i| cols[k][i].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            cols[k][i] /= nrm;
        }
    }
    // return as row-major matrix m[i][j] acting on column vectors
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// `r_n = S^n S†^n` for `n = 0..=n_max`: the decreasing family of range
/// projections whose probe-limit is the unitary-part projection.
pub fn range_projections(s: &StructuredIsometry, n_max: usize) -> Vec<GridOperator> {
    (0..=n_max)
        .map(|n| {
            let sn = s.power(n);
            sn.compose(&sn.adjoint())
        })
        .collect()
}

#[derive(Debug)]
pub struct DecompositionResult {
    pub unitary_projection: GridOperator,
    pub pure_projection: GridOperator,
    /// Probe residual `max ||r_{n*+1} x - r_{n*} x||` at stabilization.
    pub residual: f64,
    pub stabilization_step: usize,
    pub checks: StageReport,
}

fn canonical_window_probes(spec: &GridSpec, window_slots: u64) -> Result<Vec<GridVector>> {
    let lo = match spec.index_kind {
        IndexKind::Unilateral => 0i64,
        IndexKind::Bilateral => -(window_slots as i64) / 2,
    };
    let mut probes = Vec::new();
    for j in lo..lo + window_slots as i64 {
        for r in 0..spec.fiber.rank {
            let fv = spec.fiber.generator(r)?;
            if fv.norm() > 0.0 {
                probes.push(GridVector::single(spec, j, fv)?);
            }
        }
    }
    Ok(probes)
}

/// Stabilize the range projections on canonical window probes and return
/// the unitary/pure projection pair with its verification checks.
pub fn decompose(
    s: &StructuredIsometry,
    window_slots: u64,
    n_max: usize,
    tol: f64,
) -> Result<DecompositionResult> {
    let probes = canonical_window_probes(s.spec(), window_slots)?;
    let rs = range_projections(s, n_max + 1);

    let mut stabilization = None;
    let mut trace = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut diff = 0.0_f64;
        for x in &probes {
            diff = diff.max(rs[n].apply(x).sub(&rs[n + 1].apply(x)).norm());
        }
        trace.push(diff);
        if diff <= tol {
            stabilization = Some((n, diff));
            break;
        }
    }
    let Some((step, residual)) = stabilization else {
        return Err(Error::Diagnostic(format!(
            "range projections did not stabilize within {n_max} steps; residual trace {trace:?}"
        )));
    };

    let unitary_projection = rs[step].clone();
    let pure_projection = GridOperator::identity().sub(&unitary_projection);

    let mut checks = StageReport::new("wold_decomposition");
    let mut monotone = 0.0_f64;
    let mut idem = 0.0_f64;
    let mut herm = 0.0_f64;
    let mut orth = 0.0_f64;
    let mut inv_u = 0.0_f64;
    let mut inv_p = 0.0_f64;
    let mut complete = 0.0_f64;
    let mut unit_restr = 0.0_f64;
    for x in &probes {
        // monotone decrease of <x, r_n x> in the positive cone
        for n in 0..step.min(rs.len() - 2) {
            let a = x.inner_product(&rs[n].apply(x)).expect("same spec");
            let b = x.inner_product(&rs[n + 1].apply(x)).expect("same spec");
            monotone = monotone.max((-a.sub(&b).min_hermitian_eigenvalue()).max(0.0));
        }
        let ux = unitary_projection.apply(x);
        let px = pure_projection.apply(x);
        idem = idem.max(unitary_projection.apply(&ux).sub(&ux).norm());
        herm = herm.max(unitary_projection.adjoint_apply(x).sub(&unitary_projection.apply(x)).norm());
        orth = orth.max(unitary_projection.apply(&px).norm());
        complete = complete.max(ux.add(&px).sub(x).norm());
        // invariance: S E_u ⊆ E_u and S† E_p ⊆ E_p
        let sux = s.op.apply(&ux);
        inv_u = inv_u.max(unitary_projection.apply(&sux).sub(&sux).norm());
        let spx = s.op.adjoint_apply(&px);
        inv_p = inv_p.max(pure_projection.apply(&spx).sub(&spx).norm());
        // the restriction of S to E_u is unitary: S S† = id there
        unit_restr = unit_restr.max(s.op.apply(&s.op.adjoint_apply(&ux)).sub(&ux).norm());
    }
    checks.record("range_projections_monotone", monotone, tol);
    checks.record("unitary_projection_idempotent", idem, tol);
    checks.record("unitary_projection_self_adjoint", herm, tol);
    checks.record("parts_orthogonal", orth, tol);
    checks.record("parts_sum_to_identity", complete, tol);
    checks.record("unitary_part_invariant", inv_u, tol);
    checks.record("pure_part_adjoint_invariant", inv_p, tol);
    checks.record("restriction_to_unitary_part_surjective", unit_restr, tol);

    Ok(DecompositionResult {
        unitary_projection,
        pure_projection,
        residual,
        stabilization_step: step,
        checks,
    })
}

/// Total complex rank (per algebra block) of a projection restricted to the
/// canonical window probes, recovered from its trace.
pub fn projection_block_ranks(
    p: &GridOperator,
    spec: &GridSpec,
    window_slots: u64,
) -> Result<Vec<usize>> {
    let lo = match spec.index_kind {
        IndexKind::Unilateral => 0i64,
        IndexKind::Bilateral => -(window_slots as i64) / 2,
    };
    let sig = &spec.fiber.signature;
    let mut traces = vec![0.0_f64; sig.num_blocks()];
    for j in lo..lo + window_slots as i64 {
        for e in 0..spec.fiber.rank {
            for (bi, &nb) in sig.block_dims().iter().enumerate() {
                for r in 0..nb {
                    for c in 0..nb {
                        let mut blocks: Vec<nalgebra::DMatrix<Complex64>> = sig
                            .block_dims()
                            .iter()
                            .map(|&d| nalgebra::DMatrix::zeros(d, d))
                            .collect();
                        blocks[bi][(r, c)] = Complex64::new(1.0, 0.0);
                        let mut entries =
                            vec![AlgebraElement::zero(sig); spec.fiber.rank];
                        entries[e] = AlgebraElement::new(sig.clone(), blocks)?;
                        let fv = ModuleVector::new(sig.clone(), entries)?;
                        let x = GridVector::single(spec, j, fv)?;
                        let px = p.apply(&x);
                        if let Some(out) = px.get(j) {
                            traces[bi] += out.entry(e).block(bi)[(r, c)].re;
                        }
                    }
                }
            }
        }
    }
    Ok(traces.iter().map(|t| t.round().max(0.0) as usize).collect())
}

/// Per-probe decay table `||S†^n x||` for `n = 0..=n_max`: the strong
/// convergence (or not) of the adjoint powers to zero.
pub fn pureness_metric(
    s: &StructuredIsometry,
    probes: &[GridVector],
    n_max: usize,
) -> Vec<Vec<f64>> {
    probes
        .iter()
        .map(|x| {
            let mut cur = x.clone();
            let mut row = vec![cur.norm()];
            for _ in 0..n_max {
                cur = s.op.adjoint_apply(&cur);
                row.push(cur.norm());
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSignature;
    use crate::grid::FiberSpec;

    fn spec_ranked(rank: usize) -> GridSpec {
        GridSpec::unilateral(4, FiberSpec::free(AlgebraSignature::scalar(), rank)).unwrap()
    }

    #[test]
    fn range_projections_start_at_identity_and_vanish_for_pure_shift() {
        let spec = spec_ranked(1);
        let s = StructuredIsometry::pure_shift(&spec).unwrap();
        let rs = range_projections(&s, 6);
        let probes = canonical_window_probes(&spec, 5).unwrap();
        for x in &probes {
            assert_eq!(rs[0].apply(x).sub(x).norm(), 0.0);
            // r_n kills anything supported below slot n
            assert_eq!(rs[6].apply(x).norm(), 0.0);
        }
    }

    #[test]
    fn pure_shift_decomposes_to_zero_unitary_part() {
        let spec = spec_ranked(2);
        let s = StructuredIsometry::pure_shift(&spec).unwrap();
        let d = decompose(&s, 4, 10, 1e-10).unwrap();
        assert!(d.checks.passed(), "{:?}", d.checks);
        let probes = canonical_window_probes(&spec, 4).unwrap();
        for x in &probes {
            assert!(d.unitary_projection.apply(x).norm() <= 1e-12);
            assert!(d.pure_projection.apply(x).sub(x).norm() <= 1e-12);
        }
        let ranks = projection_block_ranks(&d.unitary_projection, &spec, 4).unwrap();
        assert_eq!(ranks, vec![0]);
    }

    #[test]
    fn bilateral_unitary_decomposes_immediately() {
        let spec =
            GridSpec::bilateral(4, FiberSpec::free(AlgebraSignature::scalar(), 1)).unwrap();
        let s = StructuredIsometry::bilateral_unitary(&spec).unwrap();
        let d = decompose(&s, 4, 3, 1e-10).unwrap();
        assert_eq!(d.stabilization_step, 0);
        assert!(d.checks.passed());
        let probes = canonical_window_probes(&spec, 4).unwrap();
        for x in &probes {
            assert!(d.pure_projection.apply(x).norm() <= 1e-12);
        }
    }

    #[test]
    fn disguised_mixed_isometry_recovers_block_ranks() {
        // 1 unitary component + 2 shift components, hidden behind a window
        // disguise: the recovered unitary projection must have per-block
        // rank window_slots * unitary_rank (each block is 1-dimensional).
        let spec = spec_ranked(3);
        let s = StructuredIsometry::unitary_plus_shift(&spec, 1, 41)
            .unwrap()
            .disguised(2, 43)
            .unwrap();
        let window = 4u64;
        let d = decompose(&s, window, 16, 1e-10).unwrap();
        assert!(d.checks.passed(), "{:?}", d.checks);
        let ranks = projection_block_ranks(&d.unitary_projection, &spec, window).unwrap();
        assert_eq!(ranks, vec![window as usize * 1]);
        let pure_ranks = projection_block_ranks(&d.pure_projection, &spec, window).unwrap();
        assert_eq!(pure_ranks, vec![window as usize * 2]);
    }

    #[test]
    fn undisguised_mixed_isometry_projects_on_components() {
        let spec = spec_ranked(2);
        let s = StructuredIsometry::unitary_plus_shift(&spec, 1, 47).unwrap();
        let d = decompose(&s, 3, 10, 1e-10).unwrap();
        // unitary projection keeps component 0, kills component 1
        let e0 = GridVector::single(&spec, 1, ModuleVector::generator(&spec.fiber.signature, 2, 0))
            .unwrap();
        let e1 = GridVector::single(&spec, 1, ModuleVector::generator(&spec.fiber.signature, 2, 1))
            .unwrap();
        assert!(d.unitary_projection.apply(&e0).sub(&e0).norm() <= 1e-10);
        assert!(d.unitary_projection.apply(&e1).norm() <= 1e-10);
    }

    #[test]
    fn pureness_metric_classifies_three_probe_classes() {
        let spec = spec_ranked(2);
        let s = StructuredIsometry::unitary_plus_shift(&spec, 1, 53).unwrap();
        let sig = &spec.fiber.signature;
        let unitary_probe =
            GridVector::single(&spec, 2, ModuleVector::generator(sig, 2, 0)).unwrap();
        let shift_probe =
            GridVector::single(&spec, 2, ModuleVector::generator(sig, 2, 1)).unwrap();
        let mixed = unitary_probe.add(&shift_probe);
        let table = pureness_metric(&s, &[unitary_probe, shift_probe, mixed], 5);
        // unitary probe: constant norm
        for v in &table[0] {
            assert!((v - table[0][0]).abs() <= 1e-12);
        }
        // shift probe: exactly 0 once n exceeds the support bound
        assert!(table[1][3] == 0.0 && table[1][5] == 0.0);
        assert!(table[1][0] > 0.0);
        // mixed probe: plateaus at the norm of its unitary component
        let plateau = table[2].last().unwrap();
        assert!((plateau - table[0][0]).abs() <= 1e-12);
    }

    #[test]
    fn no_stabilization_reports_the_trace() {
        let spec = spec_ranked(1);
        let s = StructuredIsometry::pure_shift(&spec).unwrap();
        // window 8 but only 3 steps allowed: cannot stabilize
        let err = decompose(&s, 8, 3, 1e-10).unwrap_err();
        assert!(matches!(err, Error::Diagnostic(_)));
        assert!(err.to_string().contains("residual trace"));
    }
}
