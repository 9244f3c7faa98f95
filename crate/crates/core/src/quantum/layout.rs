//! Tensor-product index bookkeeping.
//!
//! Subsystems are ordered qutrit first (basis |g⟩, |e⟩, |f⟩), then the
//! resonators a_1..a_N, then b_1..b_N, each a Fock space |0⟩..|n_max⟩.
//! Resonator-only layouts drop the qutrit factor and keep the same order.
//! The last subsystem varies fastest in the flat basis index.

use crate::error::{Error, Result};

pub const QUTRIT_DIM: usize = 3;

/// A named subsystem of the qutrit + resonator model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Qutrit,
    /// Resonator a_j, zero-based pair index.
    A(usize),
    /// Resonator b_j, zero-based pair index.
    B(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertLayout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    has_qutrit: bool,
    n_pairs: usize,
}

impl HilbertLayout {
    /// Generic layout with no site naming. Every dimension must be at least 1.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(format!("bad layout dims {dims:?}")));
        }
        Ok(Self::build(dims, false, 0))
    }

    /// Qutrit followed by 2N resonators truncated at `n_max` photons.
    pub fn qutrit_resonators(n_pairs: usize, n_max: usize) -> Self {
        let mut dims = vec![QUTRIT_DIM];
        dims.extend(std::iter::repeat(n_max + 1).take(2 * n_pairs));
        Self::build(dims, true, n_pairs)
    }

    /// The 2N resonators alone.
    pub fn resonators(n_pairs: usize, n_max: usize) -> Self {
        Self::build(vec![n_max + 1; 2 * n_pairs], false, n_pairs)
    }

    fn build(dims: Vec<usize>, has_qutrit: bool, n_pairs: usize) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Self {
            dims,
            strides,
            has_qutrit,
            n_pairs,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn has_qutrit(&self) -> bool {
        self.has_qutrit
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    /// Photon-number cutoff of the resonator factors, if any.
    pub fn n_max(&self) -> Option<usize> {
        let first = usize::from(self.has_qutrit);
        self.dims.get(first).map(|d| d - 1).filter(|_| self.n_pairs > 0)
    }

    /// Subsystem index of a named site.
    pub fn site(&self, site: Site) -> Result<usize> {
        let offset = usize::from(self.has_qutrit);
        let idx = match site {
            Site::Qutrit if self.has_qutrit => 0,
            Site::A(j) if j < self.n_pairs => offset + j,
            Site::B(j) if j < self.n_pairs => offset + self.n_pairs + j,
            _ => {
                return Err(Error::DimensionMismatch(format!(
                    "site {site:?} not present in layout {:?}",
                    self.dims
                )))
            }
        };
        Ok(idx)
    }

    /// Flat basis index of a multi-index.
    pub fn index_of(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.dims.len() || multi.iter().zip(&self.dims).any(|(&m, &d)| m >= d) {
            return Err(Error::DimensionMismatch(format!(
                "multi-index {multi:?} does not fit layout {:?}",
                self.dims
            )));
        }
        Ok(multi.iter().zip(&self.strides).map(|(m, s)| m * s).sum())
    }

    /// Multi-index of a flat basis index.
    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.total_dim());
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| (index / s) % d)
            .collect()
    }

    /// Digit of subsystem `k` in flat index `index`.
    #[inline]
    pub fn digit(&self, index: usize, k: usize) -> usize {
        (index / self.strides[k]) % self.dims[k]
    }

    /// Basis index for qutrit level `q` (ignored without a qutrit), photon
    /// numbers `a` on the a-modes and `b` on the b-modes.
    pub fn fock_index(&self, q: usize, a: &[usize], b: &[usize]) -> Result<usize> {
        if a.len() != self.n_pairs || b.len() != self.n_pairs {
            return Err(Error::DimensionMismatch(format!(
                "expected {} photon numbers per resonator set",
                self.n_pairs
            )));
        }
        let mut multi = Vec::with_capacity(self.dims.len());
        if self.has_qutrit {
            multi.push(q);
        }
        multi.extend_from_slice(a);
        multi.extend_from_slice(b);
        self.index_of(&multi)
    }

    /// Layout of the subsystems in `keep` (ascending), dropping names.
    pub fn sublayout(&self, keep: &[usize]) -> Result<HilbertLayout> {
        HilbertLayout::new(keep.iter().map(|&k| self.dims[k]).collect())
    }
}
