use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::histogram::{histogram_in_range, included_range, Histogram, Scale};
use super::special::student_t_two_sided_p;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestVariant {
    /// Unequal variances, Welch-Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Equal variances, pooled standard deviation.
    Pooled,
}

impl FromStr for TTestVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "welch" => Ok(TTestVariant::Welch),
            "pooled" | "student" => Ok(TTestVariant::Pooled),
            other => Err(Error::arg(format!("unknown t-test variant {other:?}"))),
        }
    }
}

impl fmt::Display for TTestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TTestVariant::Welch => "welch",
            TTestVariant::Pooled => "pooled",
        })
    }
}

/// Two-sided two-sample t-test outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub variant: TTestVariant,
    pub t_stat: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

/// A t-test plus histograms of both samples on shared bin edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    #[serde(flatten)]
    pub test: TTestResult,
    pub histogram_a: Histogram,
    pub histogram_b: Histogram,
}

struct Moments {
    n: f64,
    mean: f64,
    var: f64,
}

fn moments(xs: &[f64], label: &str) -> Result<Moments> {
    if xs.len() < 2 {
        return Err(Error::arg(format!(
            "sample {label} needs at least 2 values, got {}",
            xs.len()
        )));
    }
    if let Some(bad) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::arg(format!(
            "sample {label} contains non-finite value {bad}"
        )));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Moments { n, mean, var })
}

/// Handles samples with no spread: equal constants compare as identical
/// (t = 0, p = 1); distinct constants have no finite t statistic.
fn degenerate(a: &Moments, b: &Moments, variant: TTestVariant) -> Result<Option<TTestResult>> {
    if a.var > 0.0 || b.var > 0.0 {
        return Ok(None);
    }
    if a.mean != b.mean {
        return Err(Error::arg(
            "both samples have zero variance and different means; t is undefined",
        ));
    }
    Ok(Some(TTestResult {
        variant,
        t_stat: 0.0,
        degrees_of_freedom: a.n + b.n - 2.0,
        p_value: 1.0,
        mean_a: a.mean,
        mean_b: b.mean,
    }))
}

/// Welch's unequal-variance t-test, two-sided.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    let (ma, mb) = (moments(a, "a")?, moments(b, "b")?);
    if let Some(r) = degenerate(&ma, &mb, TTestVariant::Welch)? {
        return Ok(r);
    }
    let (sa, sb) = (ma.var / ma.n, mb.var / mb.n);
    let se2 = sa + sb;
    let t = (ma.mean - mb.mean) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (ma.n - 1.0) + sb * sb / (mb.n - 1.0));
    Ok(TTestResult {
        variant: TTestVariant::Welch,
        t_stat: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided_p(t, df),
        mean_a: ma.mean,
        mean_b: mb.mean,
    })
}

/// Student's equal-variance t-test, two-sided.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    let (ma, mb) = (moments(a, "a")?, moments(b, "b")?);
    if let Some(r) = degenerate(&ma, &mb, TTestVariant::Pooled)? {
        return Ok(r);
    }
    let df = ma.n + mb.n - 2.0;
    let pooled = ((ma.n - 1.0) * ma.var + (mb.n - 1.0) * mb.var) / df;
    let t = (ma.mean - mb.mean) / (pooled * (1.0 / ma.n + 1.0 / mb.n)).sqrt();
    Ok(TTestResult {
        variant: TTestVariant::Pooled,
        t_stat: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided_p(t, df),
        mean_a: ma.mean,
        mean_b: mb.mean,
    })
}

pub fn t_test(a: &[f64], b: &[f64], variant: TTestVariant) -> Result<TTestResult> {
    match variant {
        TTestVariant::Welch => welch_t_test(a, b),
        TTestVariant::Pooled => pooled_t_test(a, b),
    }
}

/// Tests `a` against `b` and bins both over their combined range.
pub fn compare(
    a: &[f64],
    b: &[f64],
    bins: usize,
    scale: Scale,
    variant: TTestVariant,
) -> Result<ComparisonResult> {
    let test = t_test(a, b, variant)?;
    let range = match (included_range(a, scale), included_range(b, scale)) {
        (Some((la, ha)), Some((lb, hb))) => Some((la.min(lb), ha.max(hb))),
        (r, None) | (None, r) => r,
    };
    let (histogram_a, histogram_b) = match range {
        Some((lo, hi)) => (
            histogram_in_range(a, bins, scale, lo, hi)?,
            histogram_in_range(b, bins, scale, lo, hi)?,
        ),
        None => (
            super::histogram(a, bins, scale)?,
            super::histogram(b, bins, scale)?,
        ),
    };
    Ok(ComparisonResult {
        test,
        histogram_a,
        histogram_b,
    })
}
