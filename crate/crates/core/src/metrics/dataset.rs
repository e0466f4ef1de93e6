//! Scoring directories of label maps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{best_dice_values, precision_recall, MetricsError, SegmentationSet};
use crate::imageops::io;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub name: String,
    pub n_pred: usize,
    pub n_gt: usize,
    pub sbd: f64,
    pub bd_pred_gt: f64,
    pub bd_gt_pred: f64,
    /// Best DSC of each predicted instance against the ground truth.
    pub best_dice_pred: Vec<f64>,
    /// Best DSC of each ground-truth instance against the prediction.
    pub best_dice_gt: Vec<f64>,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl SummaryStat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return SummaryStat { mean: 0.0, std: 0.0 };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        SummaryStat { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sbd: SummaryStat,
    pub bd_pred_gt: SummaryStat,
    pub bd_gt_pred: SummaryStat,
    pub precision: SummaryStat,
    pub recall: SummaryStat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iou_threshold: f64,
    pub images: Vec<ImageMetrics>,
    pub summary: Summary,
}

/// BD with the empty-set conventions of the symmetric score.
fn directed_bd(values: &[f64], other_empty: bool, self_empty: bool) -> f64 {
    match (self_empty, other_empty) {
        (true, true) => 100.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => {
            let mut v = values.to_vec();
            v.sort_by(f64::total_cmp);
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

/// Scores one image pair.
pub fn score_image(name: &str, pred: &SegmentationSet, gt: &SegmentationSet, iou_threshold: f64) -> Result<ImageMetrics, MetricsError> {
    let best_dice_pred = best_dice_values(pred, gt)?;
    let best_dice_gt = best_dice_values(gt, pred)?;
    let bd_pred_gt = directed_bd(&best_dice_pred, gt.is_empty(), pred.is_empty());
    let bd_gt_pred = directed_bd(&best_dice_gt, pred.is_empty(), gt.is_empty());
    let (precision, recall) = precision_recall(pred, gt, iou_threshold)?;
    Ok(ImageMetrics {
        name: name.to_owned(),
        n_pred: pred.len(),
        n_gt: gt.len(),
        sbd: bd_pred_gt.min(bd_gt_pred),
        bd_pred_gt,
        bd_gt_pred,
        best_dice_pred,
        best_dice_gt,
        precision,
        recall,
    })
}

impl MetricsReport {
    pub fn from_images(iou_threshold: f64, images: Vec<ImageMetrics>) -> Self {
        let stat = |f: fn(&ImageMetrics) -> f64| SummaryStat::of(images.iter().map(f));
        let summary = Summary {
            sbd: stat(|m| m.sbd),
            bd_pred_gt: stat(|m| m.bd_pred_gt),
            bd_gt_pred: stat(|m| m.bd_gt_pred),
            precision: stat(|m| m.precision),
            recall: stat(|m| m.recall),
        };
        MetricsReport { iou_threshold, images, summary }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.summary;
        let _ = writeln!(out, "images: {}", self.images.len());
        let _ = writeln!(out, "iou threshold: {}", self.iou_threshold);
        for (name, st) in [
            ("SBD", s.sbd),
            ("BD(pred->gt)", s.bd_pred_gt),
            ("BD(gt->pred)", s.bd_gt_pred),
            ("precision", s.precision),
            ("recall", s.recall),
        ] {
            let _ = writeln!(out, "{name:<13} mean {:>7.2}  std {:>6.2}", st.mean, st.std);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:>4} {:>4} {:>7} {:>7} {:>7} {:>7} {:>7}", "image", "pred", "gt", "SBD", "BDpg", "BDgp", "P", "R");
        for m in &self.images {
            let _ = writeln!(
                out,
                "{:<16} {:>4} {:>4} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2}",
                m.name, m.n_pred, m.n_gt, m.sbd, m.bd_pred_gt, m.bd_gt_pred, m.precision, m.recall
            );
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvaluateOptions {
    /// Ids dropped from both sides of every image.
    pub ignore_ids: Vec<u32>,
    /// Also drop the trunk id recorded in `<dir>/../meta/<name>.json`, when present.
    pub ignore_trunk_from_meta: bool,
}

fn label_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>, MetricsError> {
    let rd = std::fs::read_dir(dir).map_err(|e| MetricsError::UnreadableLabelMap(format!("{}: {e}", dir.display())))?;
    let mut out = BTreeMap::new();
    for entry in rd {
        let path = entry.map_err(|e| MetricsError::UnreadableLabelMap(e.to_string()))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem() {
                out.insert(stem.to_string_lossy().into_owned(), path);
            }
        }
    }
    Ok(out)
}

fn meta_trunk_id(label_path: &Path) -> Option<u32> {
    let dir = label_path.parent()?.parent()?;
    let meta = dir.join("meta").join(label_path.file_stem()?).with_extension("json");
    let text = std::fs::read_to_string(meta).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("trunk_id")?.as_u64().map(|t| t as u32)
}

fn load_set(path: &Path, opts: &EvaluateOptions) -> Result<(SegmentationSet, (usize, usize)), MetricsError> {
    let (w, h, labels) = io::read_labels(path).map_err(|e| MetricsError::UnreadableLabelMap(format!("{}: {e}", path.display())))?;
    let mut ignore = opts.ignore_ids.clone();
    if opts.ignore_trunk_from_meta {
        ignore.extend(meta_trunk_id(path));
    }
    Ok((SegmentationSet::from_labels(w, h, &labels, &ignore), (w, h)))
}

/// Scores every label map of `gt_dir` against the same-named map in
/// `pred_dir`. Both directories must hold exactly the same file names.
pub fn evaluate_dataset(pred_dir: &Path, gt_dir: &Path, iou_threshold: f64, opts: &EvaluateOptions) -> Result<MetricsReport, MetricsError> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(MetricsError::InvalidThreshold(iou_threshold));
    }
    let pred = label_files(pred_dir)?;
    let gt = label_files(gt_dir)?;
    let missing: Vec<&String> = gt.keys().filter(|k| !pred.contains_key(*k)).collect();
    let extra: Vec<&String> = pred.keys().filter(|k| !gt.contains_key(*k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(MetricsError::IndexMismatch(format!("missing predictions {missing:?}, unmatched predictions {extra:?}")));
    }
    let names: Vec<&String> = gt.keys().collect();
    let images = names
        .par_iter()
        .map(|name| {
            let (p, psize) = load_set(&pred[*name], opts)?;
            let (g, gsize) = load_set(&gt[*name], opts)?;
            if psize != gsize {
                return Err(MetricsError::SizeMismatch);
            }
            score_image(name, &p, &g, iou_threshold)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::from_images(iou_threshold, images))
}
