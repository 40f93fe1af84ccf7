//! Trial-level data parallelism. With the `parallel` feature the work is spread over a
//! scoped rayon pool of the requested size; without it everything runs in order on the
//! calling thread. Results always come back in index order.

/// Evaluate `f(0..count)` and collect in index order.
pub fn map_indexed<T, F>(count: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads > 1 && count > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool");
            return pool.install(|| (0..count).into_par_iter().map(&f).collect());
        }
    }
    let _ = threads;
    (0..count).map(f).collect()
}

/// Whether the crate was compiled with the rayon backend.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let serial = map_indexed(100, 1, |i| i * i);
        let par = map_indexed(100, 4, |i| i * i);
        assert_eq!(serial, par);
        assert_eq!(serial[7], 49);
    }
}
