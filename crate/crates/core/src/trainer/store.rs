use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::IndexLayout;

/// Storage precision of an [`EmbeddingStore`].
///
/// Values live in relaxed atomics so that workers can read and write shared
/// rows without locks. Arithmetic is always carried out in `f64`.
pub trait Scalar: Copy + Send + Sync + 'static {
    type Cell: Send + Sync;

    fn cell(v: f64) -> Self::Cell;
    fn load(c: &Self::Cell) -> f64;
    fn store(c: &Self::Cell, v: f64);
}

impl Scalar for f32 {
    type Cell = AtomicU32;

    #[inline]
    fn cell(v: f64) -> AtomicU32 {
        AtomicU32::new((v as f32).to_bits())
    }

    #[inline]
    fn load(c: &AtomicU32) -> f64 {
        f32::from_bits(c.load(Ordering::Relaxed)) as f64
    }

    #[inline]
    fn store(c: &AtomicU32, v: f64) {
        c.store((v as f32).to_bits(), Ordering::Relaxed)
    }
}

impl Scalar for f64 {
    type Cell = AtomicU64;

    #[inline]
    fn cell(v: f64) -> AtomicU64 {
        AtomicU64::new(v.to_bits())
    }

    #[inline]
    fn load(c: &AtomicU64) -> f64 {
        f64::from_bits(c.load(Ordering::Relaxed))
    }

    #[inline]
    fn store(c: &AtomicU64, v: f64) {
        c.store(v.to_bits(), Ordering::Relaxed)
    }
}

/// Input matrix (unigram, char n-gram and word n-gram rows) and output
/// (target) matrix.
///
/// Updates through `&self` are not synchronized: concurrent writers may lose
/// each other's increments, as in lock-free (hogwild) SGD.
pub struct EmbeddingStore<T: Scalar = f32> {
    layout: IndexLayout,
    dim: usize,
    input: Box<[T::Cell]>,
    output: Box<[T::Cell]>,
}

impl<T: Scalar> EmbeddingStore<T> {
    /// Input rows uniform in `[-1/dim, 1/dim]`, output rows zero.
    pub fn new(layout: IndexLayout, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / dim as f64;
        let input = (0..layout.total_rows() * dim)
            .map(|_| T::cell(rng.random_range(-bound..=bound)))
            .collect();
        let output = (0..layout.vocab_size * dim).map(|_| T::cell(0.0)).collect();
        EmbeddingStore {
            layout,
            dim,
            input,
            output,
        }
    }

    pub fn zeros(layout: IndexLayout, dim: usize) -> Self {
        EmbeddingStore {
            layout,
            dim,
            input: (0..layout.total_rows() * dim).map(|_| T::cell(0.0)).collect(),
            output: (0..layout.vocab_size * dim).map(|_| T::cell(0.0)).collect(),
        }
    }

    pub fn layout(&self) -> &IndexLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub(crate) fn input_cells(&self, row: usize) -> &[T::Cell] {
        &self.input[row * self.dim..(row + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn output_cells(&self, row: usize) -> &[T::Cell] {
        &self.output[row * self.dim..(row + 1) * self.dim]
    }

    pub fn input_row(&self, row: usize) -> Vec<f64> {
        self.input_cells(row).iter().map(T::load).collect()
    }

    pub fn output_row(&self, row: usize) -> Vec<f64> {
        self.output_cells(row).iter().map(T::load).collect()
    }

    pub fn set_input_row(&self, row: usize, values: &[f64]) {
        assert_eq!(values.len(), self.dim);
        for (c, &v) in self.input_cells(row).iter().zip(values) {
            T::store(c, v);
        }
    }

    pub fn set_output_row(&self, row: usize, values: &[f64]) {
        assert_eq!(values.len(), self.dim);
        for (c, &v) in self.output_cells(row).iter().zip(values) {
            T::store(c, v);
        }
    }

    /// Copy of both matrices, input first.
    pub fn snapshot(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.input.iter().map(T::load).collect(),
            self.output.iter().map(T::load).collect(),
        )
    }

    pub fn all_finite(&self) -> bool {
        self.input
            .iter()
            .chain(self.output.iter())
            .all(|c| T::load(c).is_finite())
    }
}

impl<T: Scalar> Clone for EmbeddingStore<T> {
    fn clone(&self) -> Self {
        EmbeddingStore {
            layout: self.layout,
            dim: self.dim,
            input: self.input.iter().map(|c| T::cell(T::load(c))).collect(),
            output: self.output.iter().map(|c| T::cell(T::load(c))).collect(),
        }
    }
}

impl<T: Scalar> std::fmt::Debug for EmbeddingStore<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddingStore")
            .field("layout", &self.layout)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

#[inline]
pub(crate) fn add_scaled<T: Scalar>(cells: &[T::Cell], scale: f64, v: &[f64]) {
    for (c, &x) in cells.iter().zip(v) {
        T::store(c, T::load(c) + scale * x);
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(cells: &[T::Cell], v: &[f64]) -> f64 {
    cells.iter().zip(v).map(|(c, &x)| T::load(c) * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initialization_bounds() {
        let layout = IndexLayout::new(4, 3, 2);
        let store: EmbeddingStore = EmbeddingStore::new(layout, 8, 1);
        let (input, output) = store.snapshot();
        assert_eq!(input.len(), 9 * 8);
        assert_eq!(output.len(), 4 * 8);
        assert!(input.iter().all(|v| v.abs() <= 1.0 / 8.0 + 1e-7));
        assert!(output.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_matrix() {
        let layout = IndexLayout::new(5, 0, 0);
        let a: EmbeddingStore<f64> = EmbeddingStore::new(layout, 4, 9);
        let b: EmbeddingStore<f64> = EmbeddingStore::new(layout, 4, 9);
        assert_eq!(a.snapshot(), b.snapshot());
    }
}
