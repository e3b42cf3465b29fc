//! Recovery and convergence metrics: edge counts against a planted truth,
//! edge-value errors, differential edges between consecutive classes, the
//! effective number of nonzeros, and relative-distance series.

use serde::{Deserialize, Serialize};

use crate::datagen::GroundTruth;
use crate::ensemble::PrecisionEnsemble;
use crate::error::{GglError, Result};
use crate::ppdna::Triple;

/// An estimated entry counts as an edge when its magnitude exceeds this.
pub const EDGE_THRESHOLD: f64 = 1e-10;

/// Two consecutive classes differ at `(i, j)` when their entries differ by
/// more than this.
pub const DIFFERENTIAL_THRESHOLD: f64 = 1e-6;

/// Share of the total absolute mass captured by the effective nonzeros.
pub const NNZ_MASS_FRACTION: f64 = 0.999;

/// Edge counts for one class over unordered pairs `i < j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Differential-edge counts between classes `k` and `k + 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffCounts {
    pub tp_diff: usize,
    pub fp_diff: usize,
    /// Truly differential pairs.
    pub true_diff: usize,
}

/// Everything reported when an estimate is scored against ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub per_class: Vec<EdgeCounts>,
    pub total: EdgeCounts,
    /// Number of true edges summed over classes.
    pub true_edges: usize,
    /// Number of selected off-diagonal edges summed over classes.
    pub selected_edges: usize,
    pub sse: f64,
    pub differential: Vec<DiffCounts>,
    pub differential_total: DiffCounts,
    pub nnz: usize,
    pub density: f64,
}

fn check_shapes(estimate: &PrecisionEnsemble, truth: &GroundTruth) -> Result<()> {
    truth.precisions.check_shape(estimate)
}

/// Per-class `(tp, fp, fn)`; an edge is selected when `|value| > 1e-10` and
/// true when the planted entry is nonzero.
pub fn count_edges(estimate: &PrecisionEnsemble, truth: &GroundTruth) -> Result<Vec<EdgeCounts>> {
    check_shapes(estimate, truth)?;
    let p = estimate.dim();
    Ok((0..estimate.k_classes())
        .map(|k| {
            let mut c = EdgeCounts::default();
            for i in 0..p {
                for j in (i + 1)..p {
                    let selected = estimate.get(k, i, j).abs() > EDGE_THRESHOLD;
                    let real = truth.precisions.get(k, i, j) != 0.0;
                    match (selected, real) {
                        (true, true) => c.tp += 1,
                        (true, false) => c.fp += 1,
                        (false, true) => c.fn_ += 1,
                        (false, false) => {}
                    }
                }
            }
            c
        })
        .collect())
}

/// `sum_k sum_{i<j} (estimate - truth)^2`.
pub fn sse(estimate: &PrecisionEnsemble, truth: &GroundTruth) -> Result<f64> {
    check_shapes(estimate, truth)?;
    let p = estimate.dim();
    let mut acc = 0.0;
    for k in 0..estimate.k_classes() {
        for i in 0..p {
            for j in (i + 1)..p {
                let d = estimate.get(k, i, j) - truth.precisions.get(k, i, j);
                acc += d * d;
            }
        }
    }
    Ok(acc)
}

/// Differential edges between every consecutive pair of classes.
pub fn differential_edges(
    estimate: &PrecisionEnsemble,
    truth: &GroundTruth,
) -> Result<Vec<DiffCounts>> {
    check_shapes(estimate, truth)?;
    let k = estimate.k_classes();
    if k < 2 {
        return Err(GglError::InvalidArgument(
            "differential edges need at least two classes".into(),
        ));
    }
    let p = estimate.dim();
    Ok((0..k - 1)
        .map(|c| {
            let mut d = DiffCounts::default();
            for i in 0..p {
                for j in (i + 1)..p {
                    let est = (estimate.get(c, i, j) - estimate.get(c + 1, i, j)).abs()
                        > DIFFERENTIAL_THRESHOLD;
                    let real = (truth.precisions.get(c, i, j) - truth.precisions.get(c + 1, i, j))
                        .abs()
                        > DIFFERENTIAL_THRESHOLD;
                    if real {
                        d.true_diff += 1;
                    }
                    match (est, real) {
                        (true, true) => d.tp_diff += 1,
                        (true, false) => d.fp_diff += 1,
                        _ => {}
                    }
                }
            }
            d
        })
        .collect())
}

/// Smallest number of entries (over all `p^2 K`, diagonals included) whose
/// magnitudes cover 99.9% of the total absolute mass, and that count divided
/// by `p^2 K`.
pub fn nnz_density(estimate: &PrecisionEnsemble) -> (usize, f64) {
    let mut mags: Vec<f64> = estimate
        .blocks()
        .iter()
        .flat_map(|b| b.iter().map(|v| v.abs()))
        .collect();
    let total_entries = mags.len();
    let total: f64 = mags.iter().sum();
    if total == 0.0 {
        return (0, 0.0);
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    let target = NNZ_MASS_FRACTION * total;
    let mut acc = 0.0;
    let mut nnz = total_entries;
    for (idx, m) in mags.iter().enumerate() {
        acc += m;
        if acc >= target {
            nnz = idx + 1;
            break;
        }
    }
    (nnz, nnz as f64 / total_entries as f64)
}

/// Full report for one estimate.
pub fn edge_report(estimate: &PrecisionEnsemble, truth: &GroundTruth) -> Result<EdgeReport> {
    let per_class = count_edges(estimate, truth)?;
    let total = per_class
        .iter()
        .fold(EdgeCounts::default(), |a, c| EdgeCounts {
            tp: a.tp + c.tp,
            fp: a.fp + c.fp,
            fn_: a.fn_ + c.fn_,
        });
    let differential = if estimate.k_classes() >= 2 {
        differential_edges(estimate, truth)?
    } else {
        Vec::new()
    };
    let differential_total = differential
        .iter()
        .fold(DiffCounts::default(), |a, c| DiffCounts {
            tp_diff: a.tp_diff + c.tp_diff,
            fp_diff: a.fp_diff + c.fp_diff,
            true_diff: a.true_diff + c.true_diff,
        });
    let (nnz, density) = nnz_density(estimate);
    Ok(EdgeReport {
        true_edges: total.tp + total.fn_,
        selected_edges: total.tp + total.fp,
        per_class,
        total,
        sse: sse(estimate, truth)?,
        differential,
        differential_total,
        nnz,
        density,
    })
}

/// Relative distance of every iterate to `reference`.
pub fn distance_series(iterates: &[Triple], reference: &Triple) -> Result<Vec<f64>> {
    iterates
        .iter()
        .map(|t| t.relative_distance(reference))
        .collect()
}

/// Least-squares line through `(i, ys[i])`: returns `(slope, r_squared)`.
pub fn linear_fit(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return (0.0, 1.0);
    }
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, r2)
}

/// The pre-asymptotic part of a `log10` distance series that is usable for a
/// rate fit: iterates `t >= 1` up to (excluding) the first one within a
/// factor of two of the smallest distance, where the reference's own
/// accuracy takes over.
pub fn rate_tail(log10_distances: &[f64]) -> &[f64] {
    let floor = log10_distances
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        + 2f64.log10();
    let rest = log10_distances.get(1..).unwrap_or(&[]);
    let end = rest
        .iter()
        .position(|&l| !(l > floor))
        .unwrap_or(rest.len());
    &rest[..end]
}
