use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log10,
}

impl Scale {
    fn forward(self, x: f64) -> f64 {
        match self {
            Scale::Linear => x,
            Scale::Log10 => x.log10(),
        }
    }

    fn inverse(self, x: f64) -> f64 {
        match self {
            Scale::Linear => x,
            Scale::Log10 => 10f64.powf(x),
        }
    }

    fn admits(self, x: f64) -> bool {
        x.is_finite() && (self == Scale::Linear || x > 0.0)
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Scale::Linear),
            "log10" | "log" => Ok(Scale::Log10),
            other => Err(Error::arg(format!(
                "unknown scale {other:?} (expected linear or log10)"
            ))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Linear => "linear",
            Scale::Log10 => "log10",
        })
    }
}

/// Equal-width histogram in linear or log10 space.
///
/// Bins are half-open `[lo, hi)` except the last, which also takes its right
/// edge. Values the scale cannot represent (non-finite, or non-positive on a
/// log scale) and values outside the requested range land in `excluded`, so
/// `counts.sum() + excluded == values.len()` always holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub scale: Scale,
    pub excluded: u64,
}

impl Histogram {
    /// True when no value was binned.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn empty(scale: Scale, excluded: usize) -> Self {
        Self {
            bin_edges: Vec::new(),
            counts: Vec::new(),
            scale,
            excluded: excluded as u64,
        }
    }
}

/// Bins `values` over the range spanned by the values themselves.
pub fn histogram(values: &[f64], bins: usize, scale: Scale) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::arg("bins must be positive"));
    }
    let (lo, hi) = match included_range(values, scale) {
        Some(r) => r,
        None => return Ok(Histogram::empty(scale, values.len())),
    };
    histogram_in_range(values, bins, scale, lo, hi)
}

/// Bins `values` over the fixed range `[lo, hi]` (in data units). Used to
/// put two distributions on shared edges for overlay plots.
pub fn histogram_in_range(
    values: &[f64],
    bins: usize,
    scale: Scale,
    lo: f64,
    hi: f64,
) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::arg("bins must be positive"));
    }
    if !(scale.admits(lo) && scale.admits(hi) && lo <= hi) {
        return Err(Error::arg(format!(
            "invalid {scale} histogram range [{lo}, {hi}]"
        )));
    }
    let (t_lo, t_hi) = (scale.forward(lo), scale.forward(hi));
    let t_edges: Vec<f64> = if t_lo == t_hi {
        let pad = t_lo.abs().max(1.0) * f64::EPSILON;
        vec![t_lo - pad, t_hi + pad]
    } else {
        let width = (t_hi - t_lo) / bins as f64;
        (0..=bins)
            .map(|i| {
                if i == bins {
                    t_hi
                } else {
                    t_lo + i as f64 * width
                }
            })
            .collect()
    };
    let k = t_edges.len() - 1;
    let (first, last) = (t_edges[0], t_edges[k]);
    let inner = &t_edges[1..k];
    let mut counts = vec![0u64; k];
    let mut excluded = 0u64;
    for &v in values {
        if !scale.admits(v) {
            excluded += 1;
            continue;
        }
        let tv = scale.forward(v);
        if tv < first || tv > last {
            excluded += 1;
            continue;
        }
        counts[inner.partition_point(|&e| e <= tv)] += 1;
    }
    let mut bin_edges: Vec<f64> = t_edges.iter().map(|&e| scale.inverse(e)).collect();
    if t_lo != t_hi {
        // Report the data range exactly rather than its round trip through the transform.
        bin_edges[0] = lo;
        bin_edges[k] = hi;
    }
    Ok(Histogram {
        bin_edges,
        counts,
        scale,
        excluded,
    })
}

/// Smallest and largest value the scale admits, if any.
pub(crate) fn included_range(values: &[f64], scale: Scale) -> Option<(f64, f64)> {
    values
        .iter()
        .copied()
        .filter(|&v| scale.admits(v))
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn linear_hand_binned() {
        let h = histogram(&[1.0, 2.0, 3.0, 4.0], 2, Scale::Linear).unwrap();
        assert_eq!(h.bin_edges, vec![1.0, 2.5, 4.0]);
        assert_eq!(h.counts, vec![2, 2]);
        assert_eq!(h.excluded, 0);
    }

    #[test]
    fn log_hand_binned() {
        let h = histogram(&[0.1, 1.0, 10.0], 2, Scale::Log10).unwrap();
        assert_eq!(h.bin_edges.len(), 3);
        for (e, want) in h.bin_edges.iter().zip([0.1, 1.0, 10.0]) {
            assert_relative_eq!(*e, want, max_relative = 1e-15);
        }
        assert_eq!(h.counts, vec![1, 2]);
    }

    #[test]
    fn log_scale_excludes_zeros() {
        let h = histogram(&[0.0, 0.0, 0.5, 5.0, -1.0], 3, Scale::Log10).unwrap();
        assert_eq!(h.excluded, 3);
        assert_eq!(h.total(), 2);
    }

    #[test]
    fn degenerate_range_single_bin() {
        let h = histogram(&[2.5; 7], 10, Scale::Linear).unwrap();
        assert_eq!(h.counts, vec![7]);
        assert!(h.bin_edges[0] < 2.5 && h.bin_edges[1] > 2.5);
        let h = histogram(&[3.0; 4], 5, Scale::Log10).unwrap();
        assert_eq!(h.counts, vec![4]);
    }

    #[test]
    fn empty_and_invalid() {
        let h = histogram(&[0.0, 0.0], 4, Scale::Log10).unwrap();
        assert!(h.is_empty());
        assert_eq!(h.excluded, 2);
        assert!(histogram(&[], 4, Scale::Linear).unwrap().is_empty());
        assert!(histogram(&[1.0], 0, Scale::Linear).is_err());
    }

    #[test]
    fn fixed_range_counts_outliers_as_excluded() {
        let h = histogram_in_range(&[0.5, 1.0, 2.0, 9.0], 2, Scale::Linear, 1.0, 3.0).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
        assert_eq!(h.excluded, 2);
    }

    proptest! {
        #[test]
        fn conservation(
            values in proptest::collection::vec(prop_oneof![Just(0.0), -5.0f64..1e4, Just(f64::NAN)], 0..200),
            bins in 1usize..40,
            log in any::<bool>(),
        ) {
            let scale = if log { Scale::Log10 } else { Scale::Linear };
            let h = histogram(&values, bins, scale).unwrap();
            prop_assert_eq!(h.total() + h.excluded, values.len() as u64);
            prop_assert!(h.bin_edges.windows(2).all(|w| w[0] < w[1]));
            if !h.is_empty() {
                prop_assert_eq!(h.bin_edges.len(), h.counts.len() + 1);
            }
        }
    }
}
