//! Upper unitriangular matrices over F2.
//!
//! A [`UniMatrix`] of dimension `n + 1` is stored as `n + 1` packed rows, bit
//! `j` of row `i` holding entry `(i, j)` (0-based). Dimensions up to 64 are
//! supported, so a row always fits in one `u64` and multiplication is a row
//! XOR loop.
//!
//! Commutators follow `[g, h] = g h g^-1 h^-1`. Much of the Demushkin
//! literature uses `[g, h] = g^-1 h^-1 g h` instead; under that convention a
//! relation `[x1, x2] x2^e` here reads `x2^e [x2, x1]` there.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("dimension {0} outside supported range 2..={MAX_DIM}")]
    BadDim(usize),
    #[error("entry ({0}, {1}) is not strictly above the diagonal")]
    NotAboveDiagonal(usize, usize),
    #[error("malformed matrix text: {0}")]
    Parse(String),
}

/// An element of U_{n+1}(F2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct UniMatrix {
    rows: Vec<u64>,
}

/// Position of a matrix in the descending central series: `level >= k` iff
/// every entry `(i, j)` with `0 < j - i < k` vanishes. The identity has level
/// `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FiltrationLevel(pub usize);

impl UniMatrix {
    pub fn identity(dim: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        UniMatrix {
            rows: (0..dim).map(|i| 1u64 << i).collect(),
        }
    }

    pub fn try_identity(dim: usize) -> Result<Self, MatrixError> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(MatrixError::BadDim(dim));
        }
        Ok(Self::identity(dim))
    }

    /// `I + sum E_{i,i+1}` over the positions where `bits[i]` is set.
    pub fn from_superdiagonal(bits: &[bool]) -> Self {
        let mut m = Self::identity(bits.len() + 1);
        for (i, &b) in bits.iter().enumerate() {
            if b {
                m.rows[i] |= 1 << (i + 1);
            }
        }
        m
    }

    /// Identity plus the listed elementary matrices, 1-based as in `E_{ij}`.
    pub fn from_elementary(dim: usize, entries: &[(usize, usize)]) -> Self {
        let mut m = Self::identity(dim);
        for &(i, j) in entries {
            assert!(1 <= i && i < j && j <= dim, "E_{i}{j} not strictly upper in dim {dim}");
            m.rows[i - 1] ^= 1 << (j - 1);
        }
        m
    }

    /// Builds a matrix from packed rows; diagonal bits are forced to 1 and
    /// anything on or below it is rejected.
    pub fn from_rows(rows: Vec<u64>) -> Result<Self, MatrixError> {
        let dim = rows.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(MatrixError::BadDim(dim));
        }
        let mut out = Vec::with_capacity(dim);
        for (i, r) in rows.into_iter().enumerate() {
            let below = (1u64 << i) - 1;
            if r & below != 0 {
                return Err(MatrixError::NotAboveDiagonal(i, (r & below).trailing_zeros() as usize));
            }
            let mask = if dim == 64 { u64::MAX } else { (1u64 << dim) - 1 };
            if r & !mask != 0 {
                return Err(MatrixError::Parse(format!("row {i} has bits past column {dim}")));
            }
            out.push(r | (1 << i));
        }
        Ok(UniMatrix { rows: out })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Massey length `n` for which this matrix lives in U_{n+1}.
    pub fn n(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// Entry `(i, j)`, 0-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.rows[i] >> j) & 1 == 1
    }

    /// Sets entry `(i, j)` (0-based, `i < j`).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < j && j < self.dim(), "({i}, {j}) not strictly upper");
        if value {
            self.rows[i] |= 1 << j;
        } else {
            self.rows[i] &= !(1 << j);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, &r)| r == 1 << i)
    }

    fn check_dims(&self, other: &Self) -> Result<(), MatrixError> {
        if self.dim() != other.dim() {
            return Err(MatrixError::DimMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// Matrix product over F2.
    pub fn compose(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_dims(other)?;
        Ok(self.mul(other))
    }

    /// Product without the dimension check; panics in debug builds if the
    /// dimensions differ.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        let rows = self
            .rows
            .iter()
            .map(|&r| {
                let mut acc = 0u64;
                let mut bits = r;
                while bits != 0 {
                    let k = bits.trailing_zeros() as usize;
                    acc ^= other.rows[k];
                    bits &= bits - 1;
                }
                acc
            })
            .collect();
        UniMatrix { rows }
    }

    /// Inverse, via `(I + N)^-1 = I + N + N^2 + ...` with `N` nilpotent.
    pub fn invert(&self) -> Self {
        let dim = self.dim();
        let id = Self::identity(dim);
        let nil = UniMatrix {
            rows: self.rows.iter().enumerate().map(|(i, &r)| r ^ (1 << i)).collect(),
        };
        // back substitution row by row from the bottom: X = I + N X
        let mut inv = id.rows.clone();
        for i in (0..dim).rev() {
            let mut acc = 1u64 << i;
            let mut bits = nil.rows[i];
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                acc ^= inv[k];
                bits &= bits - 1;
            }
            inv[i] = acc;
        }
        UniMatrix { rows: inv }
    }

    /// `[A, B] = A B A^-1 B^-1`.
    pub fn commutator(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_dims(other)?;
        Ok(self.comm(other))
    }

    /// Unchecked [`UniMatrix::commutator`].
    pub fn comm(&self, other: &Self) -> Self {
        self.mul(other).mul(&self.invert()).mul(&other.invert())
    }

    /// `A^e` by square-and-multiply; negative exponents go through the inverse.
    pub fn power(&self, e: i64) -> Self {
        let base = if e < 0 { self.invert() } else { self.clone() };
        let mut exp = e.unsigned_abs();
        let mut result = Self::identity(self.dim());
        let mut sq = base;
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.mul(&sq);
            }
            exp >>= 1;
            if exp > 0 {
                if sq.is_identity() {
                    break;
                }
                sq = sq.mul(&sq);
            }
        }
        result
    }

    pub fn filtration_level(&self) -> FiltrationLevel {
        let dim = self.dim();
        let mut level = dim;
        for (i, &r) in self.rows.iter().enumerate() {
            let above = r.checked_shr(i as u32 + 1).unwrap_or(0);
            if above != 0 {
                level = level.min(above.trailing_zeros() as usize + 1);
            }
        }
        FiltrationLevel(level)
    }

    /// Entries `(i, i+1)` for `i = 0..n`.
    pub fn superdiagonal(&self) -> Vec<bool> {
        (0..self.n()).map(|i| self.get(i, i + 1)).collect()
    }

    /// Entries on the `k`-th diagonal, `(i, i+k)` for `i = 0..dim-k`.
    pub fn diagonal(&self, k: usize) -> Vec<bool> {
        (0..self.dim().saturating_sub(k)).map(|i| self.get(i, i + k)).collect()
    }

    /// Canonical text form: one line of `0`/`1` characters per row, column 1
    /// first, rows joined with `\n`.
    pub fn to_text(&self) -> String {
        self.text_rows().join("\n")
    }

    pub fn text_rows(&self) -> Vec<String> {
        let dim = self.dim();
        self.rows
            .iter()
            .map(|&r| (0..dim).map(|j| if (r >> j) & 1 == 1 { '1' } else { '0' }).collect())
            .collect()
    }

    pub fn from_text_rows<S: AsRef<str>>(lines: &[S]) -> Result<Self, MatrixError> {
        let dim = lines.len();
        let mut rows = Vec::with_capacity(dim);
        for (i, line) in lines.iter().enumerate() {
            let line = line.as_ref().trim();
            if line.chars().count() != dim {
                return Err(MatrixError::Parse(format!("row {} has length {}, expected {dim}", i + 1, line.len())));
            }
            let mut r = 0u64;
            for (j, c) in line.chars().enumerate() {
                match c {
                    '0' => {}
                    '1' => r |= 1 << j,
                    other => return Err(MatrixError::Parse(format!("unexpected character {other:?}"))),
                }
            }
            if (r >> i) & 1 != 1 {
                return Err(MatrixError::Parse(format!("diagonal entry ({}, {}) must be 1", i + 1, i + 1)));
            }
            rows.push(r ^ (1 << i));
        }
        Self::from_rows(rows)
    }

    pub fn from_text(text: &str) -> Result<Self, MatrixError> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        Self::from_text_rows(&lines)
    }

    /// Copies `block` onto the diagonal block starting at row/column `offset`.
    pub(crate) fn embed(&mut self, block: &UniMatrix, offset: usize) {
        for (i, &r) in block.rows.iter().enumerate() {
            self.rows[offset + i] = (self.rows[offset + i] & !((u64::MAX >> (64 - block.dim())) << offset)) | (r << offset);
        }
    }
}

impl fmt::Debug for UniMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UniMatrix[{}]", self.text_rows().join(" "))
    }
}

impl fmt::Display for UniMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Serialize for UniMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.text_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for UniMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<String>::deserialize(d)?;
        UniMatrix::from_text_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Smallest `e = 2^c` with `A^e = I` for every `A` in U_{dim}.
pub fn exponent_bound(dim: usize) -> u64 {
    let n = dim as u64; // nilpotency index of N is at most dim
    n.next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, entries: &[(usize, usize)]) -> UniMatrix {
        UniMatrix::from_elementary(dim, entries)
    }

    #[test]
    fn compose_examples() {
        assert_eq!(
            e(3, &[(1, 2)]).compose(&e(3, &[(2, 3)])).unwrap(),
            e(3, &[(1, 2), (2, 3), (1, 3)])
        );
        let a = e(4, &[(1, 2), (2, 3), (1, 4)]);
        assert_eq!(UniMatrix::identity(4).compose(&a).unwrap(), a);
        assert_eq!(
            e(4, &[(1, 2), (3, 4)]).compose(&e(4, &[(2, 3)])).unwrap(),
            e(4, &[(1, 2), (2, 3), (3, 4), (1, 3)])
        );
    }

    #[test]
    fn compose_rejects_mixed_dims() {
        let err = UniMatrix::identity(3).compose(&UniMatrix::identity(4)).unwrap_err();
        assert_eq!(err, MatrixError::DimMismatch(3, 4));
        assert!(UniMatrix::identity(3).commutator(&UniMatrix::identity(5)).is_err());
    }

    #[test]
    fn invert_examples() {
        assert!(UniMatrix::identity(5).invert().is_identity());
        assert_eq!(e(3, &[(1, 2)]).invert(), e(3, &[(1, 2)]));
        let a = e(3, &[(1, 2), (2, 3)]);
        let inv = a.invert();
        assert_eq!(inv, e(3, &[(1, 2), (2, 3), (1, 3)]));
        assert!(a.compose(&inv).unwrap().is_identity());
    }

    #[test]
    fn commutator_examples() {
        assert_eq!(e(3, &[(1, 2)]).commutator(&e(3, &[(2, 3)])).unwrap(), e(3, &[(1, 3)]));
        let a = e(4, &[(1, 2), (2, 4), (3, 4)]);
        assert!(a.commutator(&a).unwrap().is_identity());
        assert!(UniMatrix::identity(4).commutator(&a).unwrap().is_identity());
    }

    #[test]
    fn power_examples() {
        let a = e(4, &[(1, 2), (2, 3), (3, 4)]);
        assert_eq!(a.power(2), e(4, &[(1, 3), (2, 4)]));
        assert!(a.power(4).is_identity());
        assert_eq!(a.power(-2), e(4, &[(1, 3), (2, 4)]));
        assert!(a.power(0).is_identity());
        assert_eq!(a.power(-1), a.invert());
        assert_eq!(a.power(3), a.mul(&a).mul(&a));
    }

    #[test]
    fn filtration_examples() {
        assert_eq!(UniMatrix::identity(4).filtration_level(), FiltrationLevel(4));
        assert_eq!(e(4, &[(1, 2)]).filtration_level(), FiltrationLevel(1));
        assert_eq!(e(4, &[(1, 3)]).filtration_level(), FiltrationLevel(2));
        assert_eq!(e(4, &[(1, 4)]).filtration_level(), FiltrationLevel(3));
    }

    #[test]
    fn superdiagonal_examples() {
        assert_eq!(UniMatrix::identity(4).superdiagonal(), vec![false; 3]);
        assert_eq!(e(4, &[(1, 2), (3, 4)]).superdiagonal(), vec![true, false, true]);
        assert_eq!(e(4, &[(1, 3)]).superdiagonal(), vec![false; 3]);
    }

    #[test]
    fn text_form_is_canonical() {
        let a = e(3, &[(1, 2), (1, 3)]);
        assert_eq!(a.to_text(), "111\n010\n001");
        assert_eq!(UniMatrix::from_text(&a.to_text()).unwrap(), a);
        assert!(UniMatrix::from_text("110\n110\n001").is_err());
        assert!(UniMatrix::from_text("100\n000\n001").is_err());
    }

    #[test]
    fn supports_dim_64() {
        let bits = vec![true; 63];
        let a = UniMatrix::from_superdiagonal(&bits);
        assert!(a.compose(&a.invert()).unwrap().is_identity());
        assert!(a.power(64).is_identity());
        assert!(!a.power(32).is_identity());
        assert_eq!(a.filtration_level(), FiltrationLevel(1));
    }

    #[test]
    fn embed_block() {
        let mut m = UniMatrix::identity(5);
        m.embed(&e(3, &[(1, 2), (1, 3)]), 2);
        assert_eq!(m, e(5, &[(3, 4), (3, 5)]));
    }
}
