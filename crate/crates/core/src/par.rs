//! Data-parallel helpers. With the `parallel` feature (default) work is
//! spread over a rayon pool of the requested width; without it, or with a
//! width of 1, everything runs on the calling thread in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A fixed-width execution context, reusable across calls.
pub struct Parallelism {
    width: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Parallelism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Parallelism").field("width", &self.width).finish()
    }
}

impl Parallelism {
    pub fn new(width: usize) -> Self {
        let width = width.max(1);
        #[cfg(feature = "parallel")]
        {
            let pool = if width > 1 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(width)
                    .build()
                    .ok()
            } else {
                None
            };
            Self { width, pool }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Self { width }
        }
    }

    pub fn sequential() -> Self {
        Self::new(1)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Whether work actually runs on more than one thread.
    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    /// `(0..n).map(f).collect()`, preserving index order.
    pub fn map_range<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Minimum of `f(i)` over `0..n` under a total order. Ties must be broken
    /// inside `less` so the result does not depend on scheduling.
    pub fn min_by_range<T, F, L>(&self, n: usize, f: F, less: L) -> Option<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
        L: Fn(&T, &T) -> bool + Sync + Send,
    {
        let pick = |a: T, b: T| if less(&b, &a) { b } else { a };
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| (0..n).into_par_iter().map(&f).reduce_with(pick));
        }
        (0..n).map(f).reduce(pick)
    }
}
