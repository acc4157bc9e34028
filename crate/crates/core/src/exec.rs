use std::ops::Range;

/// How data-parallel loops are executed.
///
/// `Parallel` uses the rayon global pool (or whichever pool the caller
/// installed) when the crate is built with the `parallel` feature, and falls
/// back to the calling thread otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
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
    /// Maps `f` over `range`, preserving order.
    pub(crate) fn map<T, F>(self, range: Range<usize>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                range.into_par_iter().map(f).collect()
            }
            _ => range.map(f).collect(),
        }
    }

    /// Maps `f` over `range` and folds the results with an associative,
    /// commutative `combine`.
    pub(crate) fn map_reduce<T, F, C>(self, range: Range<usize>, identity: T, f: F, combine: C) -> T
    where
        T: Send + Clone + Sync,
        F: Fn(usize) -> T + Sync + Send,
        C: Fn(T, T) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                range
                    .into_par_iter()
                    .map(f)
                    .reduce(|| identity.clone(), &combine)
            }
            _ => range.map(f).fold(identity, combine),
        }
    }
}
