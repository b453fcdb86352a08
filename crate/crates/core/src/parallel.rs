//! Shared worker pool, sized by the `REGLAB_THREADS` environment variable.

use std::sync::OnceLock;

use rayon::ThreadPool;

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("REGLAB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("worker pool")
    })
}

/// Run `f` inside the crate's worker pool.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}
