//! Execution shim: rayon's parallel iterators with the `parallel` feature,
//! plain sequential iterators without it.
//!
//! Call sites only use `into_par_iter()` followed by adaptors that exist with
//! the same meaning on both `rayon::iter::ParallelIterator` and
//! `std::iter::Iterator` (`map`, `filter_map`, `min_by`, `collect`, `sum`).
//! Ordered collection makes every result independent of scheduling.

#[cfg(feature = "parallel")]
pub use rayon::prelude::*;

#[cfg(not(feature = "parallel"))]
mod sequential {
    /// Sequential stand-in for `rayon::prelude::IntoParallelIterator`.
    pub trait IntoParallelIterator {
        type Iter: Iterator<Item = Self::Item>;
        type Item;
        fn into_par_iter(self) -> Self::Iter;
    }

    impl<I: IntoIterator> IntoParallelIterator for I {
        type Iter = I::IntoIter;
        type Item = I::Item;
        fn into_par_iter(self) -> Self::Iter {
            self.into_iter()
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub use sequential::*;

/// Name of the execution mode compiled in, for bench and report labels.
pub const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};
