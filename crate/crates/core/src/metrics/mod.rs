//! Dice-family instance segmentation scores, in percent.
//!
//! Conventions for degenerate inputs: two empty masks agree perfectly
//! (DSC 100, IoU 1); an empty set against a non-empty one scores 0; two
//! empty sets score 100.

mod dataset;

use serde::{Deserialize, Serialize};

use crate::imageops::BinaryMask;

pub use dataset::{evaluate_dataset, score_image, EvaluateOptions, ImageMetrics, MetricsReport, Summary, SummaryStat};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("masks differ in size")]
    SizeMismatch,
    #[error("best dice needs a non-empty first set")]
    EmptySetA,
    #[error("IoU threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("prediction and ground truth indices differ: {0}")]
    IndexMismatch(String),
    #[error("cannot read label map {0}")]
    UnreadableLabelMap(String),
}

/// Ordered instance masks of one image, all of one size.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentationSet {
    masks: Vec<BinaryMask>,
}

impl SegmentationSet {
    pub fn new(masks: Vec<BinaryMask>) -> Result<Self, MetricsError> {
        if let Some(first) = masks.first() {
            if masks.iter().any(|m| !m.same_size(first)) {
                return Err(MetricsError::SizeMismatch);
            }
        }
        Ok(SegmentationSet { masks })
    }

    /// One mask per distinct non-zero id not in `ignore`, ascending by id.
    pub fn from_labels(width: usize, height: usize, labels: &[u32], ignore: &[u32]) -> Self {
        let mut ids: Vec<u32> = labels.iter().copied().filter(|&v| v != 0 && !ignore.contains(&v)).collect();
        ids.sort_unstable();
        ids.dedup();
        let index = |id: u32| ids.binary_search(&id).ok();
        let mut bits = vec![vec![false; width * height]; ids.len()];
        for (i, &v) in labels.iter().enumerate() {
            if let Some(k) = (v != 0).then(|| index(v)).flatten() {
                bits[k][i] = true;
            }
        }
        let masks = bits
            .into_iter()
            .map(|b| BinaryMask::from_bits(width, height, b).expect("label buffer matches its size"))
            .collect();
        SegmentationSet { masks }
    }

    pub fn masks(&self) -> &[BinaryMask] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    fn compatible(&self, other: &SegmentationSet) -> bool {
        match (self.masks.first(), other.masks.first()) {
            (Some(a), Some(b)) => a.same_size(b),
            _ => true,
        }
    }
}

fn size_check(a: &BinaryMask, b: &BinaryMask) -> Result<(), MetricsError> {
    if a.same_size(b) {
        Ok(())
    } else {
        Err(MetricsError::SizeMismatch)
    }
}

fn dsc_counts(inter: usize, a: usize, b: usize) -> f64 {
    if a + b == 0 {
        100.0
    } else {
        200.0 * inter as f64 / (a + b) as f64
    }
}

/// Sørensen–Dice coefficient `2|a∩b| / (|a| + |b|)` in percent.
pub fn dsc(a: &BinaryMask, b: &BinaryMask) -> Result<f64, MetricsError> {
    size_check(a, b)?;
    Ok(dsc_counts(a.intersection_count(b), a.count(), b.count()))
}

/// Intersection over union as a fraction.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, MetricsError> {
    size_check(a, b)?;
    let inter = a.intersection_count(b);
    let union = a.count() + b.count() - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// For every mask of `a`, its best DSC against any mask of `b` (0 when
/// `b` is empty).
pub fn best_dice_values(a: &SegmentationSet, b: &SegmentationSet) -> Result<Vec<f64>, MetricsError> {
    if !a.compatible(b) {
        return Err(MetricsError::SizeMismatch);
    }
    let b_counts: Vec<usize> = b.masks.iter().map(BinaryMask::count).collect();
    Ok(a.masks
        .iter()
        .map(|ma| {
            let ca = ma.count();
            b.masks
                .iter()
                .zip(&b_counts)
                .map(|(mb, &cb)| dsc_counts(ma.intersection_count(mb), ca, cb))
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Mean of sorted values, so the result does not depend on input order.
fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Best Dice `(1/M) Σ_i max_j DSC(a_i, b_j)`.
pub fn best_dice(a: &SegmentationSet, b: &SegmentationSet) -> Result<f64, MetricsError> {
    if a.is_empty() {
        return Err(MetricsError::EmptySetA);
    }
    let mut values = best_dice_values(a, b)?;
    Ok(order_free_mean(&mut values))
}

/// `min(BD(pred, gt), BD(gt, pred))`, with the empty-set conventions.
pub fn symmetric_best_dice(pred: &SegmentationSet, gt: &SegmentationSet) -> Result<f64, MetricsError> {
    if !pred.compatible(gt) {
        return Err(MetricsError::SizeMismatch);
    }
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => Ok(100.0),
        (true, false) | (false, true) => Ok(0.0),
        (false, false) => Ok(best_dice(pred, gt)?.min(best_dice(gt, pred)?)),
    }
}

/// Greedy one-to-one matching in descending IoU order; a pair counts when
/// its IoU reaches `iou_threshold`. Returns `(precision, recall)` in
/// percent; an undefined ratio is 0, and two empty sets give (100, 100).
pub fn precision_recall(pred: &SegmentationSet, gt: &SegmentationSet, iou_threshold: f64) -> Result<(f64, f64), MetricsError> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(MetricsError::InvalidThreshold(iou_threshold));
    }
    if !pred.compatible(gt) {
        return Err(MetricsError::SizeMismatch);
    }
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => return Ok((100.0, 100.0)),
        (true, false) | (false, true) => return Ok((0.0, 0.0)),
        _ => {}
    }
    let tp = greedy_matches(pred, gt, iou_threshold)?.len();
    Ok((100.0 * tp as f64 / pred.len() as f64, 100.0 * tp as f64 / gt.len() as f64))
}

/// Matched `(pred, gt, iou)` triples.
pub fn greedy_matches(pred: &SegmentationSet, gt: &SegmentationSet, iou_threshold: f64) -> Result<Vec<(usize, usize, f64)>, MetricsError> {
    let mut pairs = Vec::new();
    for (i, p) in pred.masks.iter().enumerate() {
        for (j, g) in gt.masks.iter().enumerate() {
            let v = iou(p, g)?;
            if v >= iou_threshold {
                pairs.push((i, j, v));
            }
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used_p = vec![false; pred.len()];
    let mut used_g = vec![false; gt.len()];
    let mut matches = Vec::new();
    for (i, j, v) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            matches.push((i, j, v));
        }
    }
    Ok(matches)
}
