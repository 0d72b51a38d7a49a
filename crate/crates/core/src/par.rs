//! Execution policy for the data-parallel inner loops.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on the
//! rayon global pool. Without it every policy runs sequentially, so callers
//! never need their own `cfg` gates.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `(0..n).map(f).collect()`, order preserved.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Number of indices in `0..n` for which `pred` holds.
    pub fn count<F>(self, n: usize, pred: F) -> usize
    where
        F: Fn(usize) -> bool + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().filter(|&i| pred(i)).count(),
            _ => (0..n).filter(|&i| pred(i)).count(),
        }
    }

    /// Fills `out` in chunks of `chunk` elements; `f` receives the chunk index.
    pub fn for_each_chunk<T, F>(self, out: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => out.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
            _ => out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let a = Execution::Sequential.map(100, |i| i * i);
        let b = Execution::Parallel.map(100, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(
            Execution::Sequential.count(1000, |i| i % 7 == 0),
            Execution::Parallel.count(1000, |i| i % 7 == 0)
        );
        let mut x = vec![0usize; 64];
        let mut y = vec![0usize; 64];
        Execution::Sequential.for_each_chunk(&mut x, 8, |i, c| c.fill(i));
        Execution::Parallel.for_each_chunk(&mut y, 8, |i, c| c.fill(i));
        assert_eq!(x, y);
    }
}
