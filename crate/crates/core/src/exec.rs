//! Sequential or data-parallel execution of the per-state inner loops.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] runs the
//! per-state loops on the rayon pool once the input is large enough to pay
//! for task spawning. Without the feature both modes run sequentially.

/// Inputs smaller than this always run sequentially.
pub const PAR_THRESHOLD: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn parallel_for(self, len: usize) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel && len >= PAR_THRESHOLD
    }

    /// `(0..len).map(f).collect()`, in parallel when enabled.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.map_sized(len, len, f)
    }

    /// Like [`Exec::map`], with parallelism decided on `work` rather than on
    /// the number of items.
    pub fn map_sized<T, F>(self, len: usize, work: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.parallel_for(work) {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// The first `Some` of `(0..len).map(f)` in index order.
    pub fn find_first<T, F>(self, len: usize, f: F) -> Option<T>
    where
        T: Send,
        F: Fn(usize) -> Option<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.parallel_for(len) {
            use rayon::prelude::*;
            return (0..len).into_par_iter().find_map_first(f);
        }
        (0..len).find_map(f)
    }
}
