//! Hotspot classification, histograms, log-normal fits and two-sample tests.

mod histogram;
mod lognormal;
pub mod special;
mod ttest;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use histogram::{histogram, histogram_in_range, Histogram, Scale};
pub use lognormal::{fit_log_normal, LogNormalFit};
pub use ttest::{
    compare, pooled_t_test, t_test, welch_t_test, ComparisonResult, TTestResult, TTestVariant,
};

/// Weekly expected infections above which a venue is a severe hotspot.
pub const DEFAULT_SEVERITY_THRESHOLD: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Mild,
    Severe,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Mild => "mild",
            Severity::Severe => "severe",
        })
    }
}

/// Severe iff `weekly_infections` is strictly above `threshold`; a venue
/// sitting exactly on the threshold is mild.
pub fn classify(weekly_infections: f64, threshold: f64) -> Severity {
    if weekly_infections > threshold {
        Severity::Severe
    } else {
        Severity::Mild
    }
}
