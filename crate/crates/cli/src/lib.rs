//! Command-line harness for depth-based local center clustering: CSV
//! ingestion, synthetic generators, runs and sweeps, reports and plots.

pub mod generate;
pub mod io;
pub mod run;
pub mod score;
pub mod svg;

/// Runs `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}
