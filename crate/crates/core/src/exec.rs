//! Row-level data parallelism.
//!
//! The heavy stages of the pipeline (building `ξ`, row transforms, kernel and
//! moment reductions) are independent per row of an `n × n` field. With the
//! `parallel` feature those rows are distributed over the rayon pool; without
//! it, or with [`Execution::Sequential`], they run in order on the calling
//! thread. Either way each row is computed by the same code and per-row
//! results are collected in row order, so outputs are bit-identical.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the crate is built without `parallel`.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(row)` for `row in 0..rows`, returning results in row order.
    pub fn map_rows<T, F>(self, rows: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..rows).into_par_iter().map(f).collect();
        }
        (0..rows).map(f).collect()
    }

    /// Runs `f(row, slice)` over consecutive `row_len` chunks of `data`.
    pub fn for_each_row_mut<F>(self, data: &mut [Complex64], row_len: usize, f: F)
    where
        F: Fn(usize, &mut [Complex64]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            data.par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(i, row)| f(i, row));
            return;
        }
        data.chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }

    /// Like [`Execution::for_each_row_mut`] but each worker gets its own
    /// scratch buffer built by `init`.
    pub fn for_each_row_mut_with<S, I, F>(
        self,
        data: &mut [Complex64],
        row_len: usize,
        init: I,
        f: F,
    ) where
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize, &mut [Complex64]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            data.par_chunks_mut(row_len)
                .enumerate()
                .for_each_init(&init, |s, (i, row)| f(s, i, row));
            return;
        }
        let mut scratch = init();
        data.chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(&mut scratch, i, row));
    }

    /// Like [`Execution::map_rows`] with per-worker scratch state.
    pub fn map_rows_with<S, T, I, F>(self, rows: usize, init: I, f: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..rows).into_par_iter().map_init(&init, &f).collect();
        }
        let mut scratch = init();
        (0..rows).map(|i| f(&mut scratch, i)).collect()
    }
}
