//! Teacher analytics: HITS topic weighting and the pretest/posttest
//! statistics (pooled t test, ANCOVA, correlation t test).
//!
//! The t and F tail probabilities come from a self-contained regularized
//! incomplete beta function in [`special`].

mod hits;
mod io;
pub mod special;
mod stats;

pub use hits::{hits, HitsResult, TopicGraph, TopicScore, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
pub use io::{read_edges_csv, read_records_csv, AssessmentRecord, Cohort, Group, MAX_SCORE};
pub use stats::{
    ancova, ancova_fixed_slope, correlation_t, one_way_anova, two_sample_t, AdjustedMean, Effect,
    GroupSample, TestKind, TestReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("self-loop on topic {0:?}")]
    SelfLoop(String),
    #[error("empty topic label")]
    EmptyLabel,
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
    #[error("HITS did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("need at least {needed} observations, got {found}")]
    TooFewObservations { needed: usize, found: usize },
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("paired inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),
    #[error("rank-deficient design: {0}")]
    RankDeficient(&'static str),
    #[error("input contains NaN or infinite values")]
    NonFinite,
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("no grade column values: correlation needs grades")]
    NoGrades,
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

/// Posttest samples `(placebo, treatment)` where treatment is groups A and B.
pub fn treatment_vs_placebo(records: &[AssessmentRecord]) -> (Vec<f64>, Vec<f64>) {
    let placebo = records.iter().filter(|r| r.group == Group::P).map(|r| r.posttest).collect();
    let treatment = records.iter().filter(|r| r.group != Group::P).map(|r| r.posttest).collect();
    (placebo, treatment)
}

/// One [`GroupSample`] per group present, pretest as covariate.
pub fn group_samples(records: &[AssessmentRecord]) -> Vec<GroupSample> {
    Group::ALL
        .iter()
        .filter_map(|&g| {
            let rows: Vec<&AssessmentRecord> = records.iter().filter(|r| r.group == g).collect();
            (!rows.is_empty()).then(|| {
                GroupSample::new(
                    g.as_str(),
                    rows.iter().map(|r| r.pretest).collect(),
                    rows.iter().map(|r| r.posttest).collect(),
                )
            })
        })
        .collect()
}

/// `(posttest, grade)` pairs for records with a grade.
pub fn posttest_grade_pairs(records: &[AssessmentRecord]) -> Result<(Vec<f64>, Vec<f64>), AnalyticsError> {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.grade.map(|g| (r.posttest, g)))
        .collect();
    if pairs.is_empty() {
        return Err(AnalyticsError::NoGrades);
    }
    Ok(pairs.into_iter().unzip())
}
