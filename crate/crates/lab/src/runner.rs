//! Replica-parallel execution on a bounded rayon pool.
//!
//! Work items are indexed by replica and collected in index order, so
//! results do not depend on the number of workers.

use std::sync::OnceLock;

use rayon::prelude::*;
use rayon::ThreadPool;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "BDLAB_WORKERS";

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new().num_threads(worker_count()).build().expect("thread pool")
    })
}

/// `f(0), …, f(n − 1)` evaluated in parallel, returned in index order.
pub fn par_replicas<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    pool().install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

/// Like [`par_replicas`] but short-circuits on the first error in index order.
pub fn try_par_replicas<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    par_replicas(n, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_results() {
        let v = par_replicas(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == (i * i) as u64));
    }

    #[test]
    fn first_error_wins() {
        let r: Result<Vec<u64>, u64> = try_par_replicas(100, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
