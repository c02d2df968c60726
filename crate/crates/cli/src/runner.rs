use hodgelab::probes::{TrialOutput, TrialRunner};
use hodgelab::Result;
use rayon::prelude::*;

/// Runs trials on the current rayon pool; results come back in trial order,
/// so reports do not depend on the number of workers.
#[derive(Clone, Copy, Debug, Default)]
pub struct RayonRunner;

impl TrialRunner for RayonRunner {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> Result<TrialOutput> + Sync)) -> Vec<Result<TrialOutput>> {
        (0..n).into_par_iter().map(f).collect()
    }
}
