use std::collections::HashMap;

use super::geometry::{signed_area, Point2, Polygon2D};
use super::{BinaryMask, ImageOpsError, RasterImage};

/// Scalar channel the foreground threshold is computed on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdChannel {
    /// `max(0, 2G - R - B)`, for leaves on non-green backgrounds.
    #[default]
    GreenDominance,
    /// Rec. 601 luma, for bright objects on dark backgrounds.
    Luma,
}

impl ThresholdChannel {
    fn value(self, px: [u8; 3]) -> u16 {
        let [r, g, b] = px.map(i32::from);
        match self {
            ThresholdChannel::GreenDominance => (2 * g - r - b).max(0) as u16,
            ThresholdChannel::Luma => ((299 * r + 587 * g + 114 * b + 500) / 1000) as u16,
        }
    }
}

/// Otsu threshold over integer samples: the returned `t` separates
/// background `v <= t` from foreground `v > t`. `None` for constant input.
pub fn otsu_threshold(values: &[u16]) -> Option<u16> {
    let max = *values.iter().max()? as usize;
    let mut hist = vec![0u64; max + 1];
    for &v in values {
        hist[v as usize] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    let mut best: Option<(f64, u16)> = None;
    for (t, &c) in hist.iter().enumerate().take(max) {
        w0 += c as f64;
        sum0 += t as f64 * c as f64;
        if w0 == 0.0 {
            continue;
        }
        let w1 = total - w0;
        if w1 == 0.0 {
            break;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if best.is_none_or(|(b, _)| between > b) {
            best = Some((between, t as u16));
        }
    }
    best.map(|(_, t)| t)
}

/// 3×3 erosion; out-of-image neighbors are ignored.
pub fn erode(mask: &BinaryMask) -> BinaryMask {
    morph(mask, true)
}

/// 3×3 dilation; out-of-image neighbors are ignored.
pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    morph(mask, false)
}

fn morph(mask: &BinaryMask, erode: bool) -> BinaryMask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        let mut acc = erode;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let v = mask.get(nx as usize, ny as usize);
                if erode {
                    acc &= v;
                } else {
                    acc |= v;
                }
            }
        }
        acc
    })
}

pub fn open(mask: &BinaryMask) -> BinaryMask {
    dilate(&erode(mask))
}

pub fn close(mask: &BinaryMask) -> BinaryMask {
    erode(&dilate(mask))
}

/// 4-connected component labels (0 = background, components numbered from 1
/// in raster order of their first pixel) and the pixel count of each.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits()[start] || labels[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        let mut size = 0;
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if mask.bits()[j] && labels[j] == 0 {
                    labels[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Largest 4-connected component; ties go to the component met first in
/// raster order. Empty input gives an empty mask.
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let (labels, sizes) = label_components(mask);
    let Some(best) = sizes
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, usize)>, (i, &s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i as u32 + 1)
    else {
        return mask.clone();
    };
    BinaryMask::from_bits(mask.width(), mask.height(), labels.iter().map(|&l| l == best).collect())
        .expect("same dimensions")
}

/// Threshold, one opening, one closing, then the largest 4-connected component.
pub fn binarize_largest_component(image: &RasterImage, channel: ThresholdChannel) -> Result<BinaryMask, ImageOpsError> {
    let (w, h) = (image.width(), image.height());
    let values: Vec<u16> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| channel.value(image.rgb(x, y)))
        .collect();
    let fg: Vec<bool> = match otsu_threshold(&values) {
        Some(t) => values.iter().map(|&v| v > t).collect(),
        // Constant channel: foreground iff the value is positive.
        None => values.iter().map(|&v| v > 0).collect(),
    };
    let mask = BinaryMask::from_bits(w, h, fg)?;
    let mask = close(&open(&mask));
    if mask.is_empty() {
        return Err(ImageOpsError::AllBackground);
    }
    Ok(largest_component(&mask))
}

/// Mean of foreground pixel centers.
pub fn mask_centroid(mask: &BinaryMask) -> Result<Point2, ImageOpsError> {
    let mut n = 0usize;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (x, y) in mask.iter_set() {
        n += 1;
        sx += x as f64;
        sy += y as f64;
    }
    if n == 0 {
        return Err(ImageOpsError::AllBackground);
    }
    Ok([sx / n as f64, sy / n as f64])
}

/// Marching-squares boundary at the 0.5 iso-level with pixel centers on
/// integer coordinates. Saddle cells are split so diagonal neighbors stay
/// apart (4-connectivity). The outermost loop is returned with collinear
/// vertices removed; holes are ignored.
pub fn trace_contour(mask: &BinaryMask) -> Result<Polygon2D, ImageOpsError> {
    if mask.count() < 3 {
        return Err(ImageOpsError::TooSmall);
    }
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    // Crossing points in doubled coordinates: the midpoint between samples
    // (x, y) and (x+1, y) is (2x+1, 2y).
    type Key = (i64, i64);
    let mut adj: HashMap<Key, [Option<Key>; 2]> = HashMap::new();
    let mut link = |a: Key, b: Key| {
        for (p, q) in [(a, b), (b, a)] {
            let slot = adj.entry(p).or_insert([None, None]);
            if slot[0].is_none() {
                slot[0] = Some(q);
            } else {
                slot[1] = Some(q);
            }
        }
    };
    for cy in -1..h {
        for cx in -1..w {
            let tl = mask.get_signed(cx, cy);
            let tr = mask.get_signed(cx + 1, cy);
            let br = mask.get_signed(cx + 1, cy + 1);
            let bl = mask.get_signed(cx, cy + 1);
            let top = (2 * cx + 1, 2 * cy);
            let right = (2 * cx + 2, 2 * cy + 1);
            let bottom = (2 * cx + 1, 2 * cy + 2);
            let left = (2 * cx, 2 * cy + 1);
            let case = (tl as u8) << 3 | (tr as u8) << 2 | (br as u8) << 1 | bl as u8;
            match case {
                0 | 15 => {}
                0b1000 | 0b0111 => link(left, top),
                0b0100 | 0b1011 => link(top, right),
                0b0010 | 0b1101 => link(right, bottom),
                0b0001 | 0b1110 => link(bottom, left),
                0b1100 | 0b0011 => link(left, right),
                0b1001 | 0b0110 => link(top, bottom),
                // Saddles: cut off each foreground corner separately.
                0b1010 => {
                    link(left, top);
                    link(right, bottom);
                }
                0b0101 => {
                    link(top, right);
                    link(bottom, left);
                }
                _ => unreachable!(),
            }
        }
    }

    let mut keys: Vec<Key> = adj.keys().copied().collect();
    keys.sort_unstable();
    let mut visited: std::collections::HashSet<Key> = std::collections::HashSet::new();
    let mut best: Option<Vec<Point2>> = None;
    let mut best_area = 0.0;
    for &start in &keys {
        if visited.contains(&start) {
            continue;
        }
        let mut loop_pts = Vec::new();
        let mut prev: Option<Key> = None;
        let mut cur = start;
        loop {
            visited.insert(cur);
            loop_pts.push([cur.0 as f64 * 0.5, cur.1 as f64 * 0.5]);
            let [a, b] = adj[&cur];
            let next = match (a, b, prev) {
                (Some(a), Some(b), Some(p)) => {
                    if a == p {
                        b
                    } else {
                        a
                    }
                }
                (Some(a), _, None) => a,
                _ => break,
            };
            prev = Some(cur);
            cur = next;
            if cur == start {
                break;
            }
        }
        let area = signed_area(&loop_pts).abs();
        if area > best_area {
            best_area = area;
            best = Some(loop_pts);
        }
    }
    let pts = remove_collinear(best.ok_or(ImageOpsError::TooSmall)?);
    if pts.len() < 3 {
        return Err(ImageOpsError::TooSmall);
    }
    Polygon2D::new(pts)
}

fn remove_collinear(mut pts: Vec<Point2>) -> Vec<Point2> {
    loop {
        let n = pts.len();
        if n < 4 {
            return pts;
        }
        let keep: Vec<bool> = (0..n)
            .map(|i| {
                let a = pts[(i + n - 1) % n];
                let b = pts[i];
                let c = pts[(i + 1) % n];
                ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs() > 1e-12
            })
            .collect();
        if keep.iter().all(|&k| k) {
            return pts;
        }
        // Drop every other collinear vertex per pass so runs shrink safely.
        let mut out = Vec::with_capacity(n);
        let mut dropped_prev = false;
        for i in 0..n {
            if !keep[i] && !dropped_prev {
                dropped_prev = true;
                continue;
            }
            dropped_prev = false;
            out.push(pts[i]);
        }
        pts = out;
    }
}
