//! Sequential or rayon-backed execution of independent jobs.
//!
//! Results are always returned in job-index order, so the choice of
//! strategy never changes an output.

/// How to run a batch of independent jobs (CV folds, bootstrap replicates).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to sequential execution.
    #[default]
    Parallel,
}

impl Execution {
    /// Evaluates `job(0..count)` and collects the results in index order.
    pub fn map<T, F>(self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..count).map(job).collect(),
            Execution::Parallel => parallel_map(count, job),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(count: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(job).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(count: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(job).collect()
}
