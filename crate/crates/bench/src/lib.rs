//! Fixtures shared by the benchmarks.

use rulerisk::synth::{generate_cohort, inject_missing, CohortSpec};
use rulerisk::Cohort;

/// The default synthetic cohort with `n` records.
pub fn cohort(n: usize) -> Cohort {
    generate_cohort(&CohortSpec { n, ..CohortSpec::default() }).expect("default spec is valid")
}

/// [`cohort`] with 15% of the feature cells blanked.
pub fn cohort_with_gaps(n: usize) -> Cohort {
    inject_missing(&cohort(n), 0.15, 7).expect("valid rate")
}
