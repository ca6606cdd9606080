//! Data-parallel helpers with sequential fallbacks.
//!
//! The crate's bulk scans (grid searches, trichromatic sweeps, per-sample
//! audits) are expressed through the two functions in this module. With the
//! `parallel` feature (default) they fan work out across threads with
//! [rayon]; without it they run the same closures in a plain loop. Both
//! variants produce identical results in identical order, so everything
//! downstream is oblivious to the choice.
//!
//! The explicitly sequential versions remain available under all feature
//! combinations (as `*_seq`) so benchmarks can compare the two back to back.

/// Maps `f` over `0..n`, sequentially, collecting results in index order.
pub fn map_range_seq<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, sequentially, collecting results in order.
pub fn map_slice_seq<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    /// Maps `f` over `0..n` in parallel, collecting results in index order.
    pub fn map_range<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        (0..n).into_par_iter().map(f).collect()
    }

    /// Maps `f` over a slice in parallel, collecting results in order.
    pub fn map_slice<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
        items.par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    /// Maps `f` over `0..n`, collecting results in index order.
    pub fn map_range<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        super::map_range_seq(n, f)
    }

    /// Maps `f` over a slice, collecting results in order.
    pub fn map_slice<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
        super::map_slice_seq(items, f)
    }
}

pub use imp::{map_range, map_slice};
