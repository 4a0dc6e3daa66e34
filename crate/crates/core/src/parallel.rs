//! Data-parallel map over independent work items (restarts, trials, sweeps).
//!
//! With the `parallel` feature the map runs on the rayon pool; without it,
//! or with [`Execution::Sequential`], it is a plain loop. Output is always in
//! index order, so reductions over it are deterministic either way.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Whether work will actually fan out to multiple threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..count).map(f)` collected in index order.
pub fn map_indexed<T, F>(exec: Execution, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..count).map(f).collect()
}

/// Caps the global worker pool at `threads`. Only the first call takes
/// effect; later calls return an error message.
pub fn set_thread_cap(threads: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}

/// Reads `NILDIST_THREADS` and applies it when set to a positive integer.
pub fn apply_thread_env() -> Result<Option<usize>, String> {
    match std::env::var("NILDIST_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("NILDIST_THREADS must be a positive integer, got {v:?}"))?;
            if n == 0 {
                return Err("NILDIST_THREADS must be positive".into());
            }
            set_thread_cap(n)?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}
