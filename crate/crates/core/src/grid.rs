//! Finitely supported uniform-grid models of `L²(I, F)`.
//!
//! A [`GridVector`] is a finite map from slot indices to fiber vectors; slot
//! `j` stands for the interval `[j·h, (j+1)·h)` with `h = 1/N`.  Because the
//! grid is unbounded and supports are finite, shifts are exact isometries
//! with exact adjoints and no truncation artifacts.  All semigroup times are
//! grid-aligned.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{inner_product, AlgebraElement, AlgebraSignature, ModuleOperator, ModuleVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    /// Slots range over the nonnegative integers (`L²(R_+, F)`).
    Unilateral,
    /// Slots range over all integers (`L²(R, F)`).
    Bilateral,
}

/// Description of the fiber module `F`: a free module `B^rank`, optionally
/// cut down by a fiber projection (for `pB^rank`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberSpec {
    pub signature: AlgebraSignature,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ModuleOperator>,
}

impl FiberSpec {
    pub fn free(signature: AlgebraSignature, rank: usize) -> Self {
        Self { signature, rank, projection: None }
    }

    /// Canonical fiber generator, passed through the fiber projection if any.
    pub fn generator(&self, index: usize) -> Result<ModuleVector> {
        let e = ModuleVector::generator(&self.signature, self.rank, index);
        match &self.projection {
            Some(p) => p.apply(&e),
            None => Ok(e),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub slots_per_unit: usize,
    pub index_kind: IndexKind,
    pub fiber: FiberSpec,
}

impl GridSpec {
    pub fn new(slots_per_unit: usize, index_kind: IndexKind, fiber: FiberSpec) -> Result<Self> {
        if slots_per_unit == 0 {
            return Err(Error::InvalidSpec("slots_per_unit must be >= 1".into()));
        }
        Ok(Self { slots_per_unit, index_kind, fiber })
    }

    pub fn unilateral(slots_per_unit: usize, fiber: FiberSpec) -> Result<Self> {
        Self::new(slots_per_unit, IndexKind::Unilateral, fiber)
    }

    pub fn bilateral(slots_per_unit: usize, fiber: FiberSpec) -> Result<Self> {
        Self::new(slots_per_unit, IndexKind::Bilateral, fiber)
    }

    /// Grid step `h = 1/N`.
    pub fn step(&self) -> f64 {
        1.0 / self.slots_per_unit as f64
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.slots_per_unit == other.slots_per_unit
            && self.index_kind == other.index_kind
            && self.fiber.signature == other.fiber.signature
            && self.fiber.rank == other.fiber.rank
    }
}

/// A grid-aligned time `t = slots · h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridTime {
    pub slots: u64,
}

impl GridTime {
    pub const ZERO: GridTime = GridTime { slots: 0 };

    pub fn new(slots: u64) -> Self {
        Self { slots }
    }

    /// `t = units` whole time units on a grid with `N` slots per unit.
    pub fn from_units(units: u64, slots_per_unit: usize) -> Self {
        Self { slots: units * slots_per_unit as u64 }
    }

    pub fn as_units(&self, slots_per_unit: usize) -> f64 {
        self.slots as f64 / slots_per_unit as f64
    }

    /// The largest whole number of units `<= t`.
    pub fn whole_units(&self, slots_per_unit: usize) -> u64 {
        self.slots / slots_per_unit as u64
    }
}

/// Upper interval endpoint: finite grid time or `+infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeBound {
    At(GridTime),
    Infinity,
}

impl From<GridTime> for TimeBound {
    fn from(t: GridTime) -> Self {
        TimeBound::At(t)
    }
}

/// Finitely supported function on the slot grid with the `h`-weighted
/// B-valued inner product `<f,g> = h · sum_j <f_j, g_j>`.
#[derive(Debug, Clone)]
pub struct GridVector {
    spec: GridSpec,
    support: BTreeMap<i64, ModuleVector>,
}

impl GridVector {
    pub fn zero(spec: &GridSpec) -> Self {
        Self { spec: spec.clone(), support: BTreeMap::new() }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn set(&mut self, slot: i64, value: ModuleVector) -> Result<()> {
        if self.spec.index_kind == IndexKind::Unilateral && slot < 0 {
            return Err(Error::InvalidSpec("negative slot on a unilateral grid".into()));
        }
        if value.signature() != &self.spec.fiber.signature || value.rank() != self.spec.fiber.rank {
            return Err(Error::ShapeMismatch("fiber vector does not match spec".into()));
        }
        self.support.insert(slot, value);
        Ok(())
    }

    pub fn get(&self, slot: i64) -> Option<&ModuleVector> {
        self.support.get(&slot)
    }

    pub fn support(&self) -> impl Iterator<Item = (i64, &ModuleVector)> {
        self.support.iter().map(|(&j, v)| (j, v))
    }

    pub fn support_slots(&self) -> Vec<i64> {
        self.support.keys().cloned().collect()
    }

    pub fn max_slot(&self) -> Option<i64> {
        self.support.keys().next_back().cloned()
    }

    pub fn min_slot(&self) -> Option<i64> {
        self.support.keys().next().cloned()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn single(spec: &GridSpec, slot: i64, value: ModuleVector) -> Result<Self> {
        let mut v = Self::zero(spec);
        v.set(slot, value)?;
        Ok(v)
    }

    /// Random vector with fiber-Gaussian entries on `slots`, passed through
    /// the fiber projection when the spec carries one.
    pub fn random<R: Rng>(spec: &GridSpec, slots: &[i64], rng: &mut R) -> Result<Self> {
        let mut v = Self::zero(spec);
        for &j in slots {
            let mut fv = ModuleVector::random(&spec.fiber.signature, spec.fiber.rank, rng);
            if let Some(p) = &spec.fiber.projection {
                fv = p.apply(&fv)?;
            }
            v.set(j, fv)?;
        }
        Ok(v)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&j, v) in &other.support {
            match out.support.get_mut(&j) {
                Some(w) => *w = w.add(v),
                None => {
                    out.support.insert(j, v.clone());
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            spec: self.spec.clone(),
            support: self.support.iter().map(|(&j, v)| (j, v.scale(c))).collect(),
        }
    }

    /// Right module action, slotwise.
    pub fn rmul(&self, b: &AlgebraElement) -> Self {
        Self {
            spec: self.spec.clone(),
            support: self.support.iter().map(|(&j, v)| (j, v.rmul(b))).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.inner_product(self).map(|g| g.norm().max(0.0).sqrt()).unwrap_or(0.0)
    }

    /// `<f,g> = h · sum_j <f_j, g_j>`, the Riemann sum of `∫<f(x),g(x)> dx`
    /// which is exact for grid step functions.
    pub fn inner_product(&self, other: &Self) -> Result<AlgebraElement> {
        if !self.spec.same_shape(&other.spec) {
            return Err(Error::ShapeMismatch("grid specs differ".into()));
        }
        let mut acc = AlgebraElement::zero(&self.spec.fiber.signature);
        for (j, v) in &self.support {
            if let Some(w) = other.support.get(j) {
                acc = acc.add(&inner_product(v, w)?);
            }
        }
        Ok(acc.scale(Complex64::new(self.spec.step(), 0.0)))
    }
}

type ApplyFn = Arc<dyn Fn(&GridVector) -> GridVector + Send + Sync>;

/// An adjointable operator as an apply/adjoint-apply pair of pure programs
/// with a declared finite propagation bound (in slots).
#[derive(Clone)]
pub struct GridOperator {
    apply_fn: ApplyFn,
    adjoint_fn: ApplyFn,
    propagation: u64,
}

impl std::fmt::Debug for GridOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridOperator")
            .field("propagation", &self.propagation)
            .finish_non_exhaustive()
    }
}

impl GridOperator {
    pub fn from_fns(apply_fn: ApplyFn, adjoint_fn: ApplyFn, propagation: u64) -> Self {
        Self { apply_fn, adjoint_fn, propagation }
    }

    pub fn identity() -> Self {
        Self {
            apply_fn: Arc::new(|v: &GridVector| v.clone()),
            adjoint_fn: Arc::new(|v: &GridVector| v.clone()),
            propagation: 0,
        }
    }

    pub fn zero() -> Self {
        Self {
            apply_fn: Arc::new(|v: &GridVector| GridVector::zero(v.spec())),
            adjoint_fn: Arc::new(|v: &GridVector| GridVector::zero(v.spec())),
            propagation: 0,
        }
    }

    /// Operator acting slotwise: `(T f)_j = op(j, f_j)`, with the adjoint
    /// given slotwise as well.  Propagation 0.
    pub fn slotwise(
        op: Arc<dyn Fn(i64, &ModuleVector) -> ModuleVector + Send + Sync>,
        op_adj: Arc<dyn Fn(i64, &ModuleVector) -> ModuleVector + Send + Sync>,
    ) -> Self {
        let a = op.clone();
        let apply_fn: ApplyFn = Arc::new(move |v: &GridVector| {
            let mut out = GridVector::zero(v.spec());
            for (j, fv) in v.support() {
                let w = a(j, fv);
                out.set(j, w).expect("slotwise keeps slots valid");
            }
            out
        });
        let adjoint_fn: ApplyFn = Arc::new(move |v: &GridVector| {
            let mut out = GridVector::zero(v.spec());
            for (j, fv) in v.support() {
                let w = op_adj(j, fv);
                out.set(j, w).expect("slotwise keeps slots valid");
            }
            out
        });
        Self { apply_fn, adjoint_fn, propagation: 0 }
    }

    pub fn apply(&self, v: &GridVector) -> GridVector {
        (self.apply_fn)(v)
    }

    pub fn adjoint_apply(&self, v: &GridVector) -> GridVector {
        (self.adjoint_fn)(v)
    }

    pub fn propagation(&self) -> u64 {
        self.propagation
    }

    pub fn adjoint(&self) -> Self {
        Self {
            apply_fn: self.adjoint_fn.clone(),
            adjoint_fn: self.apply_fn.clone(),
            propagation: self.propagation,
        }
    }

    /// `self ∘ other`; propagation bounds add.
    pub fn compose(&self, other: &Self) -> Self {
        let a = self.clone();
        let b = other.clone();
        let (a2, b2) = (self.clone(), other.clone());
        Self {
            apply_fn: Arc::new(move |v| a.apply(&b.apply(v))),
            adjoint_fn: Arc::new(move |v| b2.adjoint_apply(&a2.adjoint_apply(v))),
            propagation: self.propagation + other.propagation,
        }
    }

    /// Pointwise sum; propagation bounds take the max.
    pub fn add(&self, other: &Self) -> Self {
        let a = self.clone();
        let b = other.clone();
        let (a2, b2) = (self.clone(), other.clone());
        Self {
            apply_fn: Arc::new(move |v| a.apply(v).add(&b.apply(v))),
            adjoint_fn: Arc::new(move |v| a2.adjoint_apply(v).add(&b2.adjoint_apply(v))),
            propagation: self.propagation.max(other.propagation),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let a = self.clone();
        let a2 = self.clone();
        let cc = c.conj();
        Self {
            apply_fn: Arc::new(move |v| a.apply(v).scale(c)),
            adjoint_fn: Arc::new(move |v| a2.adjoint_apply(v).scale(cc)),
            propagation: self.propagation,
        }
    }
}

fn shift_vector(v: &GridVector, by: i64, drop_negative: bool) -> GridVector {
    let mut out = GridVector::zero(v.spec());
    for (j, fv) in v.support() {
        let k = j + by;
        if drop_negative && k < 0 {
            continue;
        }
        out.set(k, fv.clone()).expect("shifted slot valid");
    }
    out
}

/// The standard right shift `[v_t f](x) = f(x - t)` on a unilateral grid:
/// support indices move up by `t.slots`; the adjoint moves them down,
/// zeroing everything that would fall below slot 0.
pub fn standard_shift(spec: &GridSpec, t: GridTime) -> Result<GridOperator> {
    if spec.index_kind != IndexKind::Unilateral {
        return Err(Error::InvalidSpec(
            "standard_shift needs a unilateral spec (use bilateral_shift)".into(),
        ));
    }
    let j = t.slots as i64;
    Ok(GridOperator::from_fns(
        Arc::new(move |v| shift_vector(v, j, false)),
        Arc::new(move |v| shift_vector(v, -j, true)),
        t.slots,
    ))
}

/// The bilateral right shift by `t` slots (negative allowed); exact unitary.
pub fn bilateral_shift(spec: &GridSpec, t: i64) -> Result<GridOperator> {
    if spec.index_kind != IndexKind::Bilateral {
        return Err(Error::InvalidSpec(
            "bilateral_shift needs a bilateral spec (use standard_shift)".into(),
        ));
    }
    Ok(GridOperator::from_fns(
        Arc::new(move |v| shift_vector(v, t, false)),
        Arc::new(move |v| shift_vector(v, -t, false)),
        t.unsigned_abs(),
    ))
}

/// Multiplication by the indicator of `[a, b)` in slots; `a > b` gives the
/// zero operator.  Exact self-adjoint projection with propagation 0.
pub fn indicator(_spec: &GridSpec, a: GridTime, b: TimeBound) -> GridOperator {
    let lo = a.slots as i64;
    let hi = match b {
        TimeBound::At(t) => Some(t.slots as i64),
        TimeBound::Infinity => None,
    };
    if let Some(hi) = hi {
        if lo > hi {
            return GridOperator::zero();
        }
    }
    let keep = move |j: i64| j >= lo && hi.map_or(true, |h| j < h);
    let filter: ApplyFn = Arc::new(move |v: &GridVector| {
        let mut out = GridVector::zero(v.spec());
        for (j, fv) in v.support() {
            if keep(j) {
                out.set(j, fv.clone()).expect("slot unchanged");
            }
        }
        out
    });
    GridOperator::from_fns(filter.clone(), filter, 0)
}

/// Periodic shift on the window `[a, b)`: rotates the window slots by
/// `t mod (b - a)` and acts as the identity off the window.
pub fn cyclic_shift(_spec: &GridSpec, a: GridTime, b: GridTime, t: GridTime) -> Result<GridOperator> {
    if a.slots >= b.slots {
        return Err(Error::InvalidSpec("cyclic_shift needs a < b".into()));
    }
    let lo = a.slots as i64;
    let hi = b.slots as i64;
    let period = hi - lo;
    let tau = (t.slots as i64).rem_euclid(period);
    let rotate = move |v: &GridVector, step: i64| {
        let mut out = GridVector::zero(v.spec());
        for (j, fv) in v.support() {
            let k = if j >= lo && j < hi {
                lo + (j - lo + step).rem_euclid(period)
            } else {
                j
            };
            out.set(k, fv.clone()).expect("rotated slot valid");
        }
        out
    };
    Ok(GridOperator::from_fns(
        Arc::new(move |v| rotate(v, tau)),
        Arc::new(move |v| rotate(v, -tau)),
        period as u64,
    ))
}

/// Phase multiplication `[m_t f](x) = e^{itx} f(x)` sampled at `x_j = j·h`.
pub fn multiplication_phase(spec: &GridSpec, t: f64) -> GridOperator {
    let h = spec.step();
    let phase = move |j: i64, s: f64| Complex64::new(0.0, s * t * j as f64 * h).exp();
    GridOperator::slotwise(
        Arc::new(move |j, fv: &ModuleVector| fv.scale(phase(j, 1.0))),
        Arc::new(move |j, fv: &ModuleVector| fv.scale(phase(j, -1.0))),
    )
}

/// Sample `profile(x_j) · fiber_vector` on the slots of `[a, b)`; exact zero
/// samples are dropped from the support.
pub fn sample_profile(
    spec: &GridSpec,
    profile: impl Fn(f64) -> Complex64,
    fiber_vector: &ModuleVector,
    a: GridTime,
    b: GridTime,
) -> Result<GridVector> {
    if a.slots >= b.slots {
        return Err(Error::InvalidSpec("sample_profile needs a < b".into()));
    }
    let h = spec.step();
    let mut out = GridVector::zero(spec);
    for j in a.slots as i64..b.slots as i64 {
        let c = profile(j as f64 * h);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        out.set(j, fiber_vector.scale(c))?;
    }
    Ok(out)
}

/// Max of `||A x - B x|| / ||x||` over the probes; the empirical distance
/// between two operators.
pub fn residual_on_probes(a: &GridOperator, b: &GridOperator, probes: &[GridVector]) -> f64 {
    let mut worst = 0.0_f64;
    for x in probes {
        let n = x.norm();
        if n == 0.0 {
            continue;
        }
        worst = worst.max(a.apply(x).sub(&b.apply(x)).norm() / n);
    }
    worst
}

/// Max adjoint-pairing residual `||<Tf,g> - <f,T†g>||` over probe pairs.
pub fn adjoint_pairing_residual(t: &GridOperator, pairs: &[(GridVector, GridVector)]) -> f64 {
    let mut worst = 0.0_f64;
    for (f, g) in pairs {
        let lhs = t.apply(f).inner_product(g);
        let rhs = f.inner_product(&t.adjoint_apply(g));
        if let (Ok(l), Ok(r)) = (lhs, rhs) {
            worst = worst.max(l.sub(&r).norm());
        }
    }
    worst
}
