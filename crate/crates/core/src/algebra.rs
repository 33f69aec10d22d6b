//! Finite-dimensional C*-algebras `B = ⊕_i M_{n_i}(C)`, free Hilbert modules
//! `B^n` over them, B-valued inner products, and exact adjoints.
//!
//! All scalars are `Complex<f64>`.  Elements are immutable after construction;
//! every operation returns a fresh value.  Summation orders are fixed so that
//! identical inputs give bit-identical results.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of a finite-dimensional C*-algebra: the block dimensions of
/// `M_{n_1}(C) ⊕ … ⊕ M_{n_k}(C)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraSignature {
    block_dims: Vec<usize>,
}

impl AlgebraSignature {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidSpec("signature must be non-empty".into()));
        }
        if block_dims.iter().any(|&n| n == 0) {
            return Err(Error::InvalidSpec("block dimensions must be >= 1".into()));
        }
        Ok(Self { block_dims })
    }

    /// The scalars: a single 1x1 block.
    pub fn scalar() -> Self {
        Self { block_dims: vec![1] }
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }
}

/// An element of `B`, stored as one dense complex matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    signature: AlgebraSignature,
    blocks: Vec<DMatrix<Complex64>>,
}

impl AlgebraElement {
    pub fn new(signature: AlgebraSignature, blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if blocks.len() != signature.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                signature.num_blocks(),
                blocks.len()
            )));
        }
        for (b, &n) in blocks.iter().zip(signature.block_dims()) {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::ShapeMismatch(format!(
                    "block is {}x{}, signature says {}x{}",
                    b.nrows(),
                    b.ncols(),
                    n,
                    n
                )));
            }
        }
        Ok(Self { signature, blocks })
    }

    pub fn zero(signature: &AlgebraSignature) -> Self {
        let blocks = signature
            .block_dims()
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect();
        Self { signature: signature.clone(), blocks }
    }

    pub fn identity(signature: &AlgebraSignature) -> Self {
        let blocks = signature
            .block_dims()
            .iter()
            .map(|&n| DMatrix::identity(n, n))
            .collect();
        Self { signature: signature.clone(), blocks }
    }

    /// Element with independent standard complex Gaussian entries.
    pub fn random<R: Rng>(signature: &AlgebraSignature, rng: &mut R) -> Self {
        let blocks = signature
            .block_dims()
            .iter()
            .map(|&n| DMatrix::from_fn(n, n, |_, _| random_complex(rng)))
            .collect();
        Self { signature: signature.clone(), blocks }
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn block(&self, i: usize) -> &DMatrix<Complex64> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    /// The involution: conjugate transpose of every block.
    pub fn star(&self) -> Self {
        Self {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(|b| b.map(|x| c * x)).collect(),
        }
    }

    fn zip(
        &self,
        other: &Self,
        f: impl Fn(&DMatrix<Complex64>, &DMatrix<Complex64>) -> DMatrix<Complex64>,
    ) -> Self {
        debug_assert_eq!(self.signature, other.signature);
        Self {
            signature: self.signature.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    /// C*-norm: the maximum over blocks of the block operator norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| operator_norm(b)).fold(0.0, f64::max)
    }

    /// Minimum eigenvalue over blocks of the Hermitian part, used for
    /// positivity checks of inner products.
    pub fn min_hermitian_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let h = (b + b.adjoint()).map(|x| x * Complex64::new(0.5, 0.0));
                h.symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Operator norm (largest singular value) of a dense complex matrix.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 || m.norm() == 0.0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    // Box-Muller; avoids pulling a distributions crate for two gaussians.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * th.cos(), r * th.sin()) / std::f64::consts::SQRT_2
}

/// An element of the free module `E = B^n`, with the B-valued inner product
/// `<x,y> = sum_i x_i* y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleVector {
    signature: AlgebraSignature,
    entries: Vec<AlgebraElement>,
}

impl ModuleVector {
    pub fn new(signature: AlgebraSignature, entries: Vec<AlgebraElement>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSpec("module rank must be >= 1".into()));
        }
        for e in &entries {
            if e.signature() != &signature {
                return Err(Error::ShapeMismatch("entry signature differs".into()));
            }
        }
        Ok(Self { signature, entries })
    }

    pub fn zero(signature: &AlgebraSignature, rank: usize) -> Self {
        Self {
            signature: signature.clone(),
            entries: (0..rank).map(|_| AlgebraElement::zero(signature)).collect(),
        }
    }

    /// Canonical generator `e_index` (identity of B in one entry).
    pub fn generator(signature: &AlgebraSignature, rank: usize, index: usize) -> Self {
        let mut v = Self::zero(signature, rank);
        v.entries[index] = AlgebraElement::identity(signature);
        v
    }

    pub fn random<R: Rng>(signature: &AlgebraSignature, rank: usize, rng: &mut R) -> Self {
        Self {
            signature: signature.clone(),
            entries: (0..rank).map(|_| AlgebraElement::random(signature, rng)).collect(),
        }
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize) -> &AlgebraElement {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[AlgebraElement] {
        &self.entries
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.rank(), other.rank());
        Self {
            signature: self.signature.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.rank(), other.rank());
        Self {
            signature: self.signature.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            signature: self.signature.clone(),
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    /// Right module action `x · b` (entrywise right multiplication).
    pub fn rmul(&self, b: &AlgebraElement) -> Self {
        Self {
            signature: self.signature.clone(),
            entries: self.entries.iter().map(|e| e.mul(b)).collect(),
        }
    }

    /// `sqrt(||<x,x>||)`.
    pub fn norm(&self) -> f64 {
        inner_product(self, self).map(|g| g.norm().max(0.0).sqrt()).unwrap_or(0.0)
    }
}

/// `<x,y> = sum_i x_i* y_i`, B-linear in the second argument.
pub fn inner_product(x: &ModuleVector, y: &ModuleVector) -> Result<AlgebraElement> {
    if x.signature() != y.signature() || x.rank() != y.rank() {
        return Err(Error::ShapeMismatch(
            "inner product requires matching signature and rank".into(),
        ));
    }
    let mut acc = AlgebraElement::zero(x.signature());
    for i in 0..x.rank() {
        acc = acc.add(&x.entry(i).star().mul(y.entry(i)));
    }
    Ok(acc)
}

/// Adjointable operator `B^m -> B^n`, an `n x m` matrix of algebra elements
/// acting by left multiplication.
#[derive(Debug, Clone)]
pub struct ModuleOperator {
    signature: AlgebraSignature,
    // row-major: rows[i][j] maps entry j of the input to entry i of the output
    rows: Vec<Vec<AlgebraElement>>,
}

impl ModuleOperator {
    pub fn new(signature: AlgebraSignature, rows: Vec<Vec<AlgebraElement>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidSpec("operator matrix must be non-empty".into()));
        }
        let m = rows[0].len();
        for r in &rows {
            if r.len() != m {
                return Err(Error::ShapeMismatch("ragged operator matrix".into()));
            }
            for e in r {
                if e.signature() != &signature {
                    return Err(Error::ShapeMismatch("entry signature differs".into()));
                }
            }
        }
        Ok(Self { signature, rows })
    }

    pub fn identity(signature: &AlgebraSignature, n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            AlgebraElement::identity(signature)
                        } else {
                            AlgebraElement::zero(signature)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { signature: signature.clone(), rows }
    }

    pub fn random<R: Rng>(
        signature: &AlgebraSignature,
        n: usize,
        m: usize,
        rng: &mut R,
    ) -> Self {
        let rows = (0..n)
            .map(|_| (0..m).map(|_| AlgebraElement::random(signature, rng)).collect())
            .collect();
        Self { signature: signature.clone(), rows }
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &AlgebraElement {
        &self.rows[i][j]
    }

    pub fn apply(&self, x: &ModuleVector) -> Result<ModuleVector> {
        if x.rank() != self.ncols() || x.signature() != &self.signature {
            return Err(Error::ShapeMismatch("operator/vector shape mismatch".into()));
        }
        let entries = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = AlgebraElement::zero(&self.signature);
                for (e, xe) in row.iter().zip(x.entries()) {
                    acc = acc.add(&e.mul(xe));
                }
                acc
            })
            .collect();
        ModuleVector::new(self.signature.clone(), entries)
    }

    /// Conjugate transpose of blocks: `<Tx,y> = <x, T* y>` exactly.
    pub fn adjoint(&self) -> Self {
        let n = self.nrows();
        let m = self.ncols();
        let rows = (0..m)
            .map(|j| (0..n).map(|i| self.rows[i][j].star()).collect())
            .collect();
        Self { signature: self.signature.clone(), rows }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.ncols() != other.nrows() {
            return Err(Error::ShapeMismatch("composition shape mismatch".into()));
        }
        let rows = (0..self.nrows())
            .map(|i| {
                (0..other.ncols())
                    .map(|j| {
                        let mut acc = AlgebraElement::zero(&self.signature);
                        for k in 0..self.ncols() {
                            acc = acc.add(&self.rows[i][k].mul(other.entry(k, j)));
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self { signature: self.signature.clone(), rows })
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nrows(), other.nrows());
        debug_assert_eq!(self.ncols(), other.ncols());
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a.sub(b)).collect())
            .collect();
        Self { signature: self.signature.clone(), rows }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|e| e.scale(c)).collect())
            .collect();
        Self { signature: self.signature.clone(), rows }
    }

    /// Operator norm induced blockwise: since `B^m = ⊕_i (C^{n_i})^m ⊗ …`
    /// decomposes along algebra blocks, the norm is the maximum over blocks
    /// of the norm of the assembled complex matrix.
    pub fn norm(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (bi, &nb) in self.signature.block_dims().iter().enumerate() {
            let big = self.assemble_block(bi, nb);
            worst = worst.max(operator_norm(&big));
        }
        worst
    }

    fn assemble_block(&self, bi: usize, nb: usize) -> DMatrix<Complex64> {
        let n = self.nrows();
        let m = self.ncols();
        let mut big = DMatrix::zeros(n * nb, m * nb);
        for i in 0..n {
            for j in 0..m {
                let blk = self.rows[i][j].block(bi);
                for r in 0..nb {
                    for c in 0..nb {
                        big[(i * nb + r, j * nb + c)] = blk[(r, c)];
                    }
                }
            }
        }
        big
    }
}

/// `true` iff `||T^2 - T|| <= tol` and `||T* - T|| <= tol`.
pub fn is_projection(t: &ModuleOperator, tol: f64) -> Result<bool> {
    if t.nrows() != t.ncols() {
        return Err(Error::ShapeMismatch("projection check needs a square operator".into()));
    }
    let idem = t.compose(t)?.sub(t).norm();
    let herm = t.adjoint().sub(t).norm();
    Ok(idem <= tol && herm <= tol)
}

/// A reduced generating family of a submodule of `B^n`, with its Gram matrix.
#[derive(Debug, Clone)]
pub struct Frame {
    pub vectors: Vec<ModuleVector>,
    pub gram: Vec<Vec<AlgebraElement>>,
    /// Per algebra block, the complex dimension of the column space the
    /// submodule occupies in that block.
    pub per_block_dims: Vec<usize>,
}

/// Reduce a generating family of the right B-submodule spanned by `generators`
/// via per-block rank-revealing SVD at relative threshold `tol`.
///
/// In block `i` a vector occupies an `(n·n_i) x n_i` complex matrix and the
/// B-span is determined by the joint column space; the frame repacks an
/// orthonormal basis of that space into module vectors, at most `n_i` basis
/// columns per vector per block.
pub fn range_frame(generators: &[ModuleVector], tol: f64) -> Result<Frame> {
    if generators.is_empty() {
        return Ok(Frame { vectors: vec![], gram: vec![], per_block_dims: vec![] });
    }
    let sig = generators[0].signature().clone();
    let rank = generators[0].rank();
    for g in generators {
        if g.signature() != &sig || g.rank() != rank {
            return Err(Error::ShapeMismatch("generators must share signature and rank".into()));
        }
    }
    let dims = sig.block_dims().to_vec();
    // Per block: orthonormal basis columns of the joint column space.
    let mut bases: Vec<Vec<DVector<Complex64>>> = Vec::with_capacity(dims.len());
    for (bi, &nb) in dims.iter().enumerate() {
        let rows = rank * nb;
        let mut stacked = DMatrix::zeros(rows, generators.len() * nb);
        for (gi, g) in generators.iter().enumerate() {
            for (ei, e) in g.entries().iter().enumerate() {
                let blk = e.block(bi);
                for r in 0..nb {
                    for c in 0..nb {
                        stacked[(ei * nb + r, gi * nb + c)] = blk[(r, c)];
                    }
                }
            }
        }
        let svd = stacked.svd(true, false);
        let u = svd.u.as_ref().expect("svd with u requested");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let mut cols = Vec::new();
        if smax > 0.0 {
            for (k, &s) in svd.singular_values.iter().enumerate() {
                if s > tol * smax {
                    cols.push(u.column(k).into_owned());
                }
            }
        }
        bases.push(cols);
    }

    let per_block_dims: Vec<usize> = bases.iter().map(|b| b.len()).collect();
    let frame_size = per_block_dims
        .iter()
        .zip(&dims)
        .map(|(&r, &nb)| r.div_ceil(nb))
        .max()
        .unwrap_or(0);

    let mut vectors = Vec::with_capacity(frame_size);
    for j in 0..frame_size {
        let mut entries = vec![AlgebraElement::zero(&sig); rank];
        for (bi, &nb) in dims.iter().enumerate() {
            for c in 0..nb {
                let col_index = j * nb + c;
                if col_index >= bases[bi].len() {
                    continue;
                }
                let q = &bases[bi][col_index];
                for ei in 0..rank {
                    let mut blk = entries[ei].block(bi).clone();
                    for r in 0..nb {
                        blk[(r, c)] = q[ei * nb + r];
                    }
                    let mut blocks: Vec<_> = entries[ei].blocks().to_vec();
                    blocks[bi] = blk;
                    entries[ei] = AlgebraElement::new(sig.clone(), blocks)?;
                }
            }
        }
        vectors.push(ModuleVector::new(sig.clone(), entries)?);
    }

    let mut gram = Vec::with_capacity(frame_size);
    for a in &vectors {
        let mut row = Vec::with_capacity(frame_size);
        for b in &vectors {
            row.push(inner_product(a, b)?);
        }
        gram.push(row);
    }

    Ok(Frame { vectors, gram, per_block_dims })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig_c() -> AlgebraSignature {
        AlgebraSignature::scalar()
    }

    fn sig_m2() -> AlgebraSignature {
        AlgebraSignature::new(vec![2]).unwrap()
    }

    fn sig_two_block() -> AlgebraSignature {
        AlgebraSignature::new(vec![1, 2]).unwrap()
    }

    /// Entry-by-entry oracle for the inner product, written against raw
    /// complex arrays with explicit index loops.  Kept independent of
    /// `inner_product` on purpose.
    fn inner_product_oracle(x: &ModuleVector, y: &ModuleVector) -> AlgebraElement {
        let sig = x.signature().clone();
        let mut blocks = Vec::new();
        for (bi, &nb) in sig.block_dims().iter().enumerate() {
            let mut out = DMatrix::zeros(nb, nb);
            for r in 0..nb {
                for c in 0..nb {
                    let mut s = Complex64::new(0.0, 0.0);
                    for i in 0..x.rank() {
                        let xb = x.entry(i).block(bi);
                        let yb = y.entry(i).block(bi);
                        // (x_i^* y_i)[r,c] = sum_k conj(x_i[k,r]) y_i[k,c]
                        for k in 0..nb {
                            s += xb[(k, r)].conj() * yb[(k, c)];
                        }
                    }
                    out[(r, c)] = s;
                }
            }
            blocks.push(out);
        }
        AlgebraElement::new(sig, blocks).unwrap()
    }

    /// Power-iteration oracle for the operator norm of a block.
    fn power_iteration_norm(m: &DMatrix<Complex64>) -> f64 {
        let a = m.adjoint() * m;
        let n = a.nrows();
        let mut v = DVector::from_element(n, Complex64::new(1.0, 0.5));
        let mut lambda = 0.0;
        for _ in 0..500 {
            let w = &a * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            v = w / Complex64::new(norm, 0.0);
            lambda = norm;
        }
        lambda.sqrt()
    }

    #[test]
    fn generator_inner_product_is_identity() {
        let sig = sig_m2();
        let x = ModuleVector::generator(&sig, 1, 0);
        let ip = inner_product(&x, &x).unwrap();
        assert!(ip.sub(&AlgebraElement::identity(&sig)).norm() < 1e-15);
    }

    #[test]
    fn inner_product_is_b_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sig = sig_two_block();
        for _ in 0..10 {
            let x = ModuleVector::random(&sig, 3, &mut rng);
            let y = ModuleVector::random(&sig, 3, &mut rng);
            let b = AlgebraElement::random(&sig, &mut rng);
            let lhs = inner_product(&x, &y.rmul(&b)).unwrap();
            let rhs = inner_product(&x, &y).unwrap().mul(&b);
            assert!(lhs.sub(&rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn inner_product_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sig = sig_two_block();
        let x = ModuleVector::random(&sig, 2, &mut rng);
        let y = ModuleVector::random(&sig, 2, &mut rng);
        let got = inner_product(&x, &y).unwrap();
        let want = inner_product_oracle(&x, &y);
        assert!(got.sub(&want).norm() < 1e-13);
    }

    #[test]
    fn adjoint_of_identity_is_identity() {
        let sig = sig_two_block();
        let id = ModuleOperator::identity(&sig, 3);
        assert!(id.adjoint().sub(&id).norm() < 1e-15);
    }

    #[test]
    fn adjoint_is_involutive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sig = sig_two_block();
        let t = ModuleOperator::random(&sig, 3, 2, &mut rng);
        assert!(t.adjoint().adjoint().sub(&t).norm() < 1e-14);
    }

    #[test]
    fn adjoint_pairing_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sig = sig_two_block();
        let t = ModuleOperator::random(&sig, 3, 2, &mut rng);
        let ts = t.adjoint();
        let mut worst = 0.0_f64;
        for _ in 0..20 {
            let x = ModuleVector::random(&sig, 2, &mut rng);
            let y = ModuleVector::random(&sig, 3, &mut rng);
            let lhs = inner_product(&t.apply(&x).unwrap(), &y).unwrap();
            let rhs = inner_product(&x, &ts.apply(&y).unwrap()).unwrap();
            worst = worst.max(lhs.sub(&rhs).norm());
        }
        assert!(worst <= 1e-12, "worst pairing residual {worst}");
    }

    #[test]
    fn norm_edge_cases() {
        let sig = sig_c();
        assert_eq!(ModuleVector::zero(&sig, 3).norm(), 0.0);
        assert!((ModuleVector::generator(&sig, 1, 0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norm_matches_power_iteration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sig = sig_two_block();
        let x = ModuleVector::random(&sig, 3, &mut rng);
        let gram = inner_product(&x, &x).unwrap();
        let oracle: f64 = gram
            .blocks()
            .iter()
            .map(power_iteration_norm)
            .fold(0.0, f64::max)
            .sqrt();
        assert!((x.norm() - oracle).abs() < 1e-10);
    }

    #[test]
    fn projection_checks() {
        let sig = sig_m2();
        let id = ModuleOperator::identity(&sig, 2);
        assert!(is_projection(&id, 1e-12).unwrap());
        assert!(!is_projection(&id.scale(Complex64::new(2.0, 0.0)), 1e-12).unwrap());
    }

    #[test]
    fn range_frame_drops_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sig = sig_m2();
        let x = ModuleVector::random(&sig, 2, &mut rng);
        let frame = range_frame(&[x.clone(), x], 1e-8).unwrap();
        assert_eq!(frame.vectors.len(), 1);
    }

    #[test]
    fn range_frame_orthonormal_pair() {
        let sig = sig_m2();
        let e0 = ModuleVector::generator(&sig, 2, 0);
        let e1 = ModuleVector::generator(&sig, 2, 1);
        let frame = range_frame(&[e0, e1], 1e-8).unwrap();
        assert_eq!(frame.vectors.len(), 2);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j {
                    AlgebraElement::identity(&sig)
                } else {
                    AlgebraElement::zero(&sig)
                };
                assert!(frame.gram[i][j].sub(&want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn range_frame_empty_input() {
        let frame = range_frame(&[], 1e-8).unwrap();
        assert!(frame.vectors.is_empty());
    }

    #[test]
    fn range_frame_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sig = sig_two_block();
        let gens: Vec<_> = (0..3).map(|_| ModuleVector::random(&sig, 4, &mut rng)).collect();
        let f1 = range_frame(&gens, 1e-8).unwrap();
        let f2 = range_frame(&f1.vectors, 1e-8).unwrap();
        assert_eq!(f1.vectors.len(), f2.vectors.len());
        assert_eq!(f1.per_block_dims, f2.per_block_dims);
    }

    #[test]
    fn cauchy_schwarz_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sig = sig_two_block();
        for _ in 0..20 {
            let x = ModuleVector::random(&sig, 3, &mut rng);
            let y = ModuleVector::random(&sig, 3, &mut rng);
            let ip = inner_product(&x, &y).unwrap().norm();
            assert!(ip <= x.norm() * y.norm() + 1e-10);
        }
    }

    #[test]
    fn gram_is_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sig = sig_two_block();
        for _ in 0..20 {
            let x = ModuleVector::random(&sig, 3, &mut rng);
            let g = inner_product(&x, &x).unwrap();
            assert!(g.min_hermitian_eigenvalue() >= -1e-12);
            assert!(g.star().sub(&g).norm() < 1e-12);
        }
    }
}
