//! JSON encodings for algebra and grid values.
//!
//! Complex entries are `[re, im]` pairs, matrices are nested row-major
//! arrays, and every top-level value carries its signature so fixtures are
//! self-describing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{AlgebraElement, AlgebraSignature, ModuleOperator, ModuleVector};
use crate::grid::{GridSpec, GridVector};

type BlockRepr = Vec<Vec<[f64; 2]>>;

fn matrix_repr(m: &DMatrix<Complex64>) -> BlockRepr {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn matrix_from_repr(rows: &BlockRepr) -> DMatrix<Complex64> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(nr, nc, |r, c| Complex64::new(rows[r][c][0], rows[r][c][1]))
}

fn blocks_repr(e: &AlgebraElement) -> Vec<BlockRepr> {
    e.blocks().iter().map(matrix_repr).collect()
}

fn element_from_blocks(
    sig: &AlgebraSignature,
    blocks: &[BlockRepr],
) -> Result<AlgebraElement, String> {
    let mats = blocks.iter().map(matrix_from_repr).collect();
    AlgebraElement::new(sig.clone(), mats).map_err(|e| e.to_string())
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    signature: AlgebraSignature,
    blocks: Vec<BlockRepr>,
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ElementRepr { signature: self.signature().clone(), blocks: blocks_repr(self) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(d)?;
        element_from_blocks(&repr.signature, &repr.blocks).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct VectorRepr {
    signature: AlgebraSignature,
    rank: usize,
    entries: Vec<Vec<BlockRepr>>,
}

impl Serialize for ModuleVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        VectorRepr {
            signature: self.signature().clone(),
            rank: self.rank(),
            entries: self.entries().iter().map(blocks_repr).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModuleVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = VectorRepr::deserialize(d)?;
        let entries = repr
            .entries
            .iter()
            .map(|b| element_from_blocks(&repr.signature, b))
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        ModuleVector::new(repr.signature, entries).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    signature: AlgebraSignature,
    rows: Vec<Vec<Vec<BlockRepr>>>,
}

impl Serialize for ModuleOperator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows = (0..self.nrows())
            .map(|i| (0..self.ncols()).map(|j| blocks_repr(self.entry(i, j))).collect())
            .collect();
        OperatorRepr { signature: self.signature().clone(), rows }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModuleOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = OperatorRepr::deserialize(d)?;
        let rows = repr
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|b| element_from_blocks(&repr.signature, b))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        ModuleOperator::new(repr.signature, rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct GridEntryRepr {
    slot: i64,
    vector: ModuleVector,
}

#[derive(Serialize, Deserialize)]
struct GridVectorRepr {
    spec: GridSpec,
    entries: Vec<GridEntryRepr>,
}

impl Serialize for GridVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridVectorRepr {
            spec: self.spec().clone(),
            entries: self
                .support()
                .map(|(slot, v)| GridEntryRepr { slot, vector: v.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = GridVectorRepr::deserialize(d)?;
        let mut v = GridVector::zero(&repr.spec);
        for e in repr.entries {
            v.set(e.slot, e.vector).map_err(serde::de::Error::custom)?;
        }
        Ok(v)
    }
}
