//! Dense containers for tensor components at one support element.
//!
//! A [`TensorBlock`] holds plain values; a [`JetBlock`] holds one jet per
//! component so later stages can keep differentiating. Both are row-major
//! over `dim^rank` slots with the leftmost index slowest.

use serde::{Deserialize, Serialize};

use crate::jets::Jet;

/// Index character of one tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    /// Contravariant (upper) index.
    Upper,
    /// Covariant (lower) index.
    Lower,
}

/// Components of one tensor at one support element, with index variance
/// recorded so consumers can tell `R^h_{kij}` from `R_{hkij}` in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorBlock {
    dim: usize,
    variance: Vec<Variance>,
    data: Vec<f64>,
}

impl TensorBlock {
    pub fn zeros(dim: usize, variance: Vec<Variance>) -> TensorBlock {
        let len = dim.pow(variance.len() as u32);
        TensorBlock {
            dim,
            variance,
            data: vec![0.0; len],
        }
    }

    pub fn from_fn(
        dim: usize,
        variance: Vec<Variance>,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> TensorBlock {
        let mut block = TensorBlock::zeros(dim, variance);
        let rank = block.rank();
        let mut idx = vec![0usize; rank];
        for flat in 0..block.data.len() {
            block.unflatten(flat, &mut idx);
            block.data[flat] = f(&idx);
        }
        block
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.dim;
            flat /= self.dim;
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flatten(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let flat = self.flatten(idx);
        self.data[flat] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Componentwise difference (panics on shape mismatch).
    pub fn sub(&self, rhs: &TensorBlock) -> TensorBlock {
        assert_eq!(self.dim, rhs.dim);
        assert_eq!(self.variance, rhs.variance);
        TensorBlock {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, rhs: &TensorBlock) -> TensorBlock {
        assert_eq!(self.dim, rhs.dim);
        assert_eq!(self.variance, rhs.variance);
        TensorBlock {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> TensorBlock {
        TensorBlock {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Visit every component with its index tuple.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut idx = vec![0usize; self.rank()];
        for flat in 0..self.data.len() {
            self.unflatten(flat, &mut idx);
            f(&idx, self.data[flat]);
        }
    }
}

/// Components of one tensor as jets, so the block can still be
/// differentiated in base or fiber directions.
#[derive(Clone)]
pub struct JetBlock {
    dim: usize,
    rank: usize,
    data: Vec<Jet>,
}

impl JetBlock {
    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Jet) -> JetBlock {
        let len = dim.pow(rank as u32);
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; rank];
        for flat in 0..len {
            unflatten(dim, flat, &mut idx);
            data.push(f(&idx));
        }
        JetBlock { dim, rank, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        debug_assert_eq!(idx.len(), self.rank);
        &self.data[flatten(self.dim, idx)]
    }

    /// Drop to plain component values, tagging each slot's variance.
    pub fn values(&self, variance: Vec<Variance>) -> TensorBlock {
        assert_eq!(variance.len(), self.rank);
        TensorBlock {
            dim: self.dim,
            variance,
            data: self.data.iter().map(|j| j.value()).collect(),
        }
    }

    /// Componentwise difference (panics on shape mismatch).
    pub fn sub(&self, rhs: &JetBlock) -> JetBlock {
        assert_eq!(self.dim, rhs.dim);
        assert_eq!(self.rank, rhs.rank);
        JetBlock {
            dim: self.dim,
            rank: self.rank,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn add(&self, rhs: &JetBlock) -> JetBlock {
        assert_eq!(self.dim, rhs.dim);
        assert_eq!(self.rank, rhs.rank);
        JetBlock {
            dim: self.dim,
            rank: self.rank,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }
}

fn flatten(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| {
        debug_assert!(i < dim);
        acc * dim + i
    })
}

fn unflatten(dim: usize, mut flat: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout_with_leftmost_slowest() {
        let block = TensorBlock::from_fn(
            3,
            vec![Variance::Upper, Variance::Lower],
            |idx| (idx[0] * 10 + idx[1]) as f64,
        );
        assert_eq!(block.get(&[2, 1]), 21.0);
        assert_eq!(block.data()[2 * 3 + 1], 21.0);
        assert_eq!(block.max_abs(), 22.0);
    }

    #[test]
    fn difference_and_scale() {
        let a = TensorBlock::from_fn(2, vec![Variance::Lower], |i| i[0] as f64 + 1.0);
        let b = a.scale(3.0);
        let d = b.sub(&a);
        assert_eq!(d.get(&[0]), 2.0);
        assert_eq!(d.get(&[1]), 4.0);
    }
}
