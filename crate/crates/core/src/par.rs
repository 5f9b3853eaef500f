//! Data-parallel batch helpers. With the `parallel` feature (on by default)
//! work is spread over the rayon pool; without it, or with
//! [`Exec::Sequential`], it runs in order on the calling thread. Results are
//! always returned in input order.

use crate::interp::ExecBudget;
use crate::model::Dataset;
use crate::score::{score_response, Scored};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    /// Whether parallel execution is actually available in this build.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

pub struct ScoreJob<'a> {
    pub response: &'a str,
    pub dataset: &'a Dataset,
}

pub fn score_batch(exec: Exec, jobs: &[ScoreJob<'_>], budget: &ExecBudget) -> Vec<Scored> {
    map(exec, jobs, |j| score_response(j.response, j.dataset, budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let f = |x: &u64| x * x + 1;
        assert_eq!(map(Exec::Parallel, &xs, f), map(Exec::Sequential, &xs, f));
        assert_eq!(map(Exec::Parallel, &xs, f)[999], 999 * 999 + 1);
    }
}
