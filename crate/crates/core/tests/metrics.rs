use std::path::Path;

use plantsynth::imageops::{io, BinaryMask};
use plantsynth::metrics::*;
use proptest::prelude::*;

fn mask(w: usize, h: usize, bits: &[usize]) -> BinaryMask {
    let mut m = BinaryMask::new(w, h);
    for &i in bits {
        m.set(i % w, i / w, true);
    }
    m
}

fn set(w: usize, h: usize, masks: &[&[usize]]) -> SegmentationSet {
    SegmentationSet::new(masks.iter().map(|b| mask(w, h, b)).collect()).unwrap()
}

fn oracle_dsc(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for y in 0..a.height() {
        for x in 0..a.width() {
            let (pa, pb) = (a.get(x, y), b.get(x, y));
            na += pa as usize;
            nb += pb as usize;
            inter += (pa && pb) as usize;
        }
    }
    if na + nb == 0 {
        100.0
    } else {
        200.0 * inter as f64 / (na + nb) as f64
    }
}

fn oracle_bd(a: &SegmentationSet, b: &SegmentationSet) -> f64 {
    let mut total = 0.0;
    for ma in a.masks() {
        let mut best = 0.0f64;
        for mb in b.masks() {
            best = best.max(oracle_dsc(ma, mb));
        }
        total += best;
    }
    total / a.len() as f64
}

fn sets() -> impl Strategy<Value = (SegmentationSet, SegmentationSet)> {
    (1usize..=8, 1usize..=8).prop_flat_map(|(w, h)| {
        let m = proptest::collection::vec(any::<bool>(), w * h).prop_map(move |bits| BinaryMask::from_bits(w, h, bits).unwrap());
        (proptest::collection::vec(m.clone(), 1..=5), proptest::collection::vec(m, 1..=5))
            .prop_map(|(a, b)| (SegmentationSet::new(a).unwrap(), SegmentationSet::new(b).unwrap()))
    })
}

proptest! {
    #[test]
    fn best_dice_matches_double_loop((a, b) in sets()) {
        prop_assert!((best_dice(&a, &b).unwrap() - oracle_bd(&a, &b)).abs() < 1e-9);
        let sbd = oracle_bd(&a, &b).min(oracle_bd(&b, &a));
        prop_assert!((symmetric_best_dice(&a, &b).unwrap() - sbd).abs() < 1e-9);
    }

    #[test]
    fn sbd_identities((a, b) in sets()) {
        prop_assert_eq!(symmetric_best_dice(&a, &a).unwrap(), 100.0);
        let ab = symmetric_best_dice(&a, &b).unwrap();
        prop_assert_eq!(ab, symmetric_best_dice(&b, &a).unwrap());
        prop_assert!(best_dice(&a, &b).unwrap() >= ab);
        let mut rev = a.masks().to_vec();
        rev.reverse();
        let rev = SegmentationSet::new(rev).unwrap();
        prop_assert_eq!(best_dice(&rev, &b).unwrap(), best_dice(&a, &b).unwrap());
        prop_assert_eq!(best_dice(&b, &rev).unwrap(), best_dice(&b, &a).unwrap());
    }

    #[test]
    fn perfect_prediction_matches_at_any_threshold((a, _b) in sets(), t in 1e-6f64..=1.0) {
        let mut shuffled = a.masks().to_vec();
        shuffled.rotate_left(1);
        let shuffled = SegmentationSet::new(shuffled).unwrap();
        // Duplicate masks can steal each other's match; keep distinct ones.
        let distinct = a.masks().iter().enumerate().all(|(i, m)| a.masks()[..i].iter().all(|o| o != m) && m.count() > 0);
        prop_assume!(distinct);
        prop_assert_eq!(precision_recall(&shuffled, &a, t).unwrap(), (100.0, 100.0));
    }
}

#[test]
fn merge_case_scores_two_thirds() {
    let gt = set(4, 1, &[&[0, 1], &[2, 3]]);
    let pred = set(4, 1, &[&[0, 1, 2, 3]]);
    let sbd = symmetric_best_dice(&pred, &gt).unwrap();
    assert!((sbd - 200.0 / 3.0).abs() < 0.01);
    assert_eq!(best_dice(&pred, &gt).unwrap(), 200.0 / 3.0);
    assert_eq!(best_dice(&gt, &pred).unwrap(), 200.0 / 3.0);
}

#[test]
fn precision_and_recall_of_partial_prediction() {
    let gt = set(6, 1, &[&[0, 1], &[2, 3], &[4, 5]]);
    let pred = set(6, 1, &[&[0, 1], &[2, 3, 4, 5]]);
    let (p, r) = precision_recall(&pred, &gt, 0.5).unwrap();
    // IoU exactly 0.5 meets the threshold.
    assert_eq!((p, r), (100.0, 200.0 / 3.0));
    let (p, r) = precision_recall(&pred, &gt, 0.6).unwrap();
    assert_eq!((p, r), (50.0, 100.0 / 3.0));
    assert!(matches!(precision_recall(&pred, &gt, 0.0), Err(MetricsError::InvalidThreshold(_))));
}

#[test]
fn empty_set_conventions() {
    let empty = SegmentationSet::new(vec![]).unwrap();
    let one = set(2, 2, &[&[0]]);
    assert_eq!(symmetric_best_dice(&empty, &empty).unwrap(), 100.0);
    assert_eq!(symmetric_best_dice(&one, &empty).unwrap(), 0.0);
    assert_eq!(symmetric_best_dice(&empty, &one).unwrap(), 0.0);
    assert_eq!(best_dice(&one, &empty).unwrap(), 0.0);
    assert!(matches!(best_dice(&empty, &one), Err(MetricsError::EmptySetA)));
}

fn write_labels(dir: &Path, name: &str, w: usize, h: usize, labels: &[u16]) {
    std::fs::create_dir_all(dir).unwrap();
    io::write_png16(&dir.join(format!("{name}.png")), w, h, labels).unwrap();
}

#[test]
fn dataset_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt/label");
    write_labels(&gt, "000000", 4, 2, &[1, 1, 2, 2, 0, 3, 3, 0]);
    write_labels(&gt, "000001", 4, 2, &[5, 5, 5, 0, 0, 0, 0, 7]);
    let report = evaluate_dataset(&gt, &gt, 0.5, &EvaluateOptions::default()).unwrap();
    assert_eq!(report.images.len(), 2);
    assert_eq!(report.summary.sbd, SummaryStat { mean: 100.0, std: 0.0 });
    assert_eq!(report.summary.precision.mean, 100.0);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["summary"]["sbd"]["mean"], 100.0);
    assert!(report.to_text().contains("000001"));
}

#[test]
fn toy_dataset_matches_hand_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    // a: merge of two 2-px leaves, b: perfect, c: one of two leaves missed.
    write_labels(&gt, "a", 4, 1, &[1, 1, 2, 2]);
    write_labels(&pred, "a", 4, 1, &[9, 9, 9, 9]);
    write_labels(&gt, "b", 2, 2, &[1, 0, 0, 2]);
    write_labels(&pred, "b", 2, 2, &[4, 0, 0, 3]);
    write_labels(&gt, "c", 4, 1, &[1, 1, 2, 2]);
    write_labels(&pred, "c", 4, 1, &[1, 1, 0, 0]);
    let report = evaluate_dataset(&pred, &gt, 0.5, &EvaluateOptions::default()).unwrap();
    let by_name = |n: &str| report.images.iter().find(|m| m.name == n).unwrap();
    let a = by_name("a");
    assert_eq!((a.bd_pred_gt, a.bd_gt_pred, a.sbd), (200.0 / 3.0, 200.0 / 3.0, 200.0 / 3.0));
    assert_eq!((a.precision, a.recall), (100.0, 50.0));
    let b = by_name("b");
    assert_eq!((b.sbd, b.precision, b.recall), (100.0, 100.0, 100.0));
    let c = by_name("c");
    assert_eq!((c.bd_pred_gt, c.bd_gt_pred, c.sbd), (100.0, 50.0, 50.0));
    assert_eq!((c.precision, c.recall), (100.0, 50.0));
    let mean = (200.0 / 3.0 + 100.0 + 50.0) / 3.0;
    assert!((report.summary.sbd.mean - mean).abs() < 1e-12);
}

#[test]
fn single_image_summary_equals_its_score() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    write_labels(&gt, "x", 3, 1, &[1, 1, 1]);
    write_labels(&pred, "x", 3, 1, &[1, 1, 0]);
    let r = evaluate_dataset(&pred, &gt, 0.5, &EvaluateOptions::default()).unwrap();
    assert_eq!(r.summary.sbd, SummaryStat { mean: r.images[0].sbd, std: 0.0 });
    assert!((r.images[0].sbd - 80.0).abs() < 1e-12);
}

#[test]
fn trunk_id_from_meta_and_ignore_ids_are_excluded() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt/label");
    write_labels(&gt, "000000", 4, 1, &[1, 1, 3, 2]);
    std::fs::create_dir_all(tmp.path().join("gt/meta")).unwrap();
    std::fs::write(tmp.path().join("gt/meta/000000.json"), r#"{"trunk_id": 3}"#).unwrap();
    let pred = tmp.path().join("pred");
    write_labels(&pred, "000000", 4, 1, &[1, 1, 0, 2]);
    let opts = EvaluateOptions { ignore_trunk_from_meta: true, ..Default::default() };
    assert_eq!(evaluate_dataset(&pred, &gt, 0.5, &opts).unwrap().images[0].sbd, 100.0);
    let opts = EvaluateOptions { ignore_ids: vec![3], ..Default::default() };
    assert_eq!(evaluate_dataset(&pred, &gt, 0.5, &opts).unwrap().images[0].sbd, 100.0);
    let kept = evaluate_dataset(&pred, &gt, 0.5, &EvaluateOptions::default()).unwrap();
    assert!(kept.images[0].sbd < 100.0);
}

#[test]
fn mismatched_file_sets_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    write_labels(&gt, "a", 1, 1, &[1]);
    write_labels(&pred, "b", 1, 1, &[1]);
    assert!(matches!(evaluate_dataset(&pred, &gt, 0.5, &EvaluateOptions::default()), Err(MetricsError::IndexMismatch(_))));
}
