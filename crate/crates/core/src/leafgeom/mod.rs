//! Inspiration-leaf ingestion: real leaf silhouettes are brought into a
//! canonical planar frame and meshed.
//!
//! The canonical frame uses image axes (y grows downward). The stem point
//! sits at the origin, the tip above it (negative y) and the bounding box
//! of the contour is exactly one unit tall.

mod delaunay;
mod pool;

use serde::{Deserialize, Serialize};

use crate::imageops::{
    binarize_largest_component, largest_component, mask_centroid, min_area_rect, trace_contour, BinaryMask,
    ImageOpsError, Point2, Polygon2D, RasterImage, ThresholdChannel, Transform2D,
};

pub use delaunay::{interior_grid, triangulate, Mesh};
pub use pool::{
    build_leaf_pool, read_leaf_manifest, IngestMode, LeafManifestEntry, LeafPool, PoolBuildReport, PoolSplit,
    LEAF_POOL_FORMAT,
};

/// Smallest leaf mask, in pixels, accepted for ingestion.
pub const MIN_LEAF_PIXELS: usize = 50;

/// Interior mesh spacing in canonical units (the leaf is one unit tall).
pub const DEFAULT_INTERIOR_SPACING: f64 = 1.0 / 12.0;

#[derive(Debug, thiserror::Error)]
pub enum LeafGeomError {
    #[error("no leaf found in image")]
    AllBackground,
    #[error("leaf mask smaller than {MIN_LEAF_PIXELS} pixels")]
    TooSmall,
    #[error("polygon area is degenerate")]
    DegeneratePolygon,
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("no leaves were ingested")]
    EmptyPool,
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("pool file: {0}")]
    PoolFormat(String),
    #[error(transparent)]
    Image(#[from] ImageOpsError),
}

fn map_image_err(e: ImageOpsError) -> LeafGeomError {
    match e {
        ImageOpsError::AllBackground => LeafGeomError::AllBackground,
        ImageOpsError::TooSmall => LeafGeomError::TooSmall,
        other => LeafGeomError::Image(other),
    }
}

/// Canonical planar leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafGeometry {
    pub source_id: String,
    pub species_tag: String,
    pub contour: Polygon2D,
    pub mesh: Mesh,
    pub stem_point: Point2,
    pub tip_point: Point2,
}

impl LeafGeometry {
    /// Height of the contour bounding box; 1 for canonical leaves.
    pub fn height(&self) -> f64 {
        let (lo, hi) = self.contour.bounds();
        hi[1] - lo[1]
    }

    /// Rasterizes the contour at `px_per_unit` with a `margin` pixel border.
    /// Returns the mask and the canonical → pixel transform.
    pub fn render_mask(&self, px_per_unit: f64, margin: usize) -> (BinaryMask, Transform2D) {
        let (lo, hi) = self.contour.bounds();
        let m = margin as f64;
        let t = Transform2D::translation(-lo[0], -lo[1])
            .then(Transform2D::scale(px_per_unit, px_per_unit))
            .then(Transform2D::translation(m, m));
        let w = ((hi[0] - lo[0]) * px_per_unit).ceil() as usize + 2 * margin + 1;
        let h = ((hi[1] - lo[1]) * px_per_unit).ceil() as usize + 2 * margin + 1;
        let poly = self.contour.map(|p| t.apply(p)).expect("scaling keeps the polygon valid");
        (poly.rasterize(w, h), t)
    }

    /// Green-on-black rendering suitable for single-leaf ingestion.
    pub fn render_image(&self, px_per_unit: f64, margin: usize) -> (RasterImage, Transform2D) {
        let (mask, t) = self.render_mask(px_per_unit, margin);
        let img = RasterImage::from_fn_rgb(mask.width(), mask.height(), |x, y| {
            if mask.get(x, y) {
                [40, 170, 50]
            } else {
                [20, 15, 10]
            }
        });
        (img, t)
    }
}

/// Options for single-leaf canonicalization.
#[derive(Clone, Debug)]
pub struct SingleLeafOptions {
    pub threshold: ThresholdChannel,
    /// Rotation (radians, x toward y) applied before the centre-of-mass rule.
    pub angle_hint: Option<f64>,
    pub interior_spacing: f64,
}

impl Default for SingleLeafOptions {
    fn default() -> Self {
        Self {
            threshold: ThresholdChannel::GreenDominance,
            angle_hint: None,
            interior_spacing: DEFAULT_INTERIOR_SPACING,
        }
    }
}

fn rotate_about(poly: &Polygon2D, center: Point2, angle: f64) -> Polygon2D {
    let t = Transform2D::rotation(angle).about(center);
    poly.map(|p| t.apply(p)).expect("rotation preserves validity")
}

/// Translate `stem` to the origin and scale the bounding box to unit height.
fn normalize(contour: Polygon2D, stem: Point2, tip: Point2, meta: (String, String), spacing: f64) -> Result<LeafGeometry, LeafGeomError> {
    let (lo, hi) = contour.bounds();
    let height = hi[1] - lo[1];
    if height <= 0.0 {
        return Err(LeafGeomError::DegeneratePolygon);
    }
    let s = 1.0 / height;
    let f = |p: Point2| [(p[0] - stem[0]) * s, (p[1] - stem[1]) * s];
    let contour = contour.map(f)?;
    let mesh = triangulate(&contour, spacing)?;
    Ok(LeafGeometry {
        source_id: meta.0,
        species_tag: meta.1,
        contour,
        mesh,
        stem_point: [0.0, 0.0],
        tip_point: f(tip),
    })
}

/// Index of the extreme vertex under `better`; the lowest index wins ties.
fn extreme_vertex(pts: &[Point2], key: impl Fn(Point2) -> f64, better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    let mut best_key = key(pts[0]);
    for (i, &p) in pts.iter().enumerate().skip(1) {
        let k = key(p);
        if better(k, best_key) {
            best = i;
            best_key = k;
        }
    }
    best
}

/// Vertex farthest from `com` on one side of it (`dir = 1` below, `-1`
/// above). Vertices within half a pixel of the farthest count as tied and
/// the one nearest the vertical through `com` wins, so blunt ends resolve
/// to a stable point.
fn end_vertex(pts: &[Point2], dir: f64, com: Point2) -> Point2 {
    let side: Vec<Point2> = pts.iter().copied().filter(|p| dir * (p[1] - com[1]) > 0.0).collect();
    let side = if side.is_empty() { pts.to_vec() } else { side };
    let dist = |p: Point2| ((p[0] - com[0]).powi(2) + (p[1] - com[1]).powi(2)).sqrt();
    let far = side.iter().map(|&p| dist(p)).fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<Point2> = side.into_iter().filter(|&p| dist(p) >= far - 0.5).collect();
    candidates[extreme_vertex(&candidates, |p| (p[0] - com[0]).abs(), |a, b| a < b)]
}

/// Farthest (or nearest) vertex from `center`. Vertices within half a
/// pixel of the extreme count as tied; the one nearest the line
/// `center → toward` wins, then the lowest index.
fn banded_vertex(pts: &[Point2], center: Point2, toward: Point2, farthest: bool) -> Point2 {
    let dist = |p: Point2| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
    let ds: Vec<f64> = pts.iter().map(|&p| dist(p)).collect();
    let in_band: Box<dyn Fn(f64) -> bool> = if farthest {
        let far = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Box::new(move |d| d >= far - 0.5)
    } else {
        let near = ds.iter().copied().fold(f64::INFINITY, f64::min);
        Box::new(move |d| d <= near + 0.5)
    };
    let dir = [toward[0] - center[0], toward[1] - center[1]];
    let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    let off_line = |p: Point2| {
        if len == 0.0 {
            0.0
        } else {
            ((p[0] - center[0]) * dir[1] - (p[1] - center[1]) * dir[0]).abs() / len
        }
    };
    let mut candidates: Vec<Point2> = pts.iter().zip(&ds).filter(|(_, &d)| in_band(d)).map(|(&p, _)| p).collect();
    if candidates.len() > 1 {
        candidates.retain(|&p| p != toward);
    }
    candidates[extreme_vertex(&candidates, off_line, |a, b| a < b)]
}

const REFINE_PASSES: usize = 4;

/// Tip farthest from `center` (ties resolved toward `far`), stem nearest.
fn plant_ends(pts: &[Point2], center: Point2, far: Point2) -> (Point2, Point2) {
    let tip = banded_vertex(pts, center, far, true);
    (banded_vertex(pts, center, tip, false), tip)
}

/// Rotation about `stem` that puts `tip` straight above it.
fn upright_angle(stem: Point2, tip: Point2) -> f64 {
    let v = [tip[0] - stem[0], tip[1] - stem[1]];
    if v == [0.0, 0.0] {
        0.0
    } else {
        -std::f64::consts::FRAC_PI_2 - v[1].atan2(v[0])
    }
}

/// Aligns the min-area rectangle with the vertical so that the centre of
/// mass lies above the rectangle centre. The vertices farthest from the
/// centre of mass below and above it become stem and tip, and a final turn
/// about the stem makes stem→tip vertical.
pub fn canonicalize_single_leaf(
    image: &RasterImage,
    source_id: &str,
    species_tag: &str,
    opts: &SingleLeafOptions,
) -> Result<LeafGeometry, LeafGeomError> {
    let mask = binarize_largest_component(image, opts.threshold).map_err(map_image_err)?;
    if mask.count() < MIN_LEAF_PIXELS {
        return Err(LeafGeomError::TooSmall);
    }
    let mut contour = trace_contour(&mask).map_err(map_image_err)?;
    let com = mask_centroid(&mask).map_err(map_image_err)?;
    if let Some(hint) = opts.angle_hint {
        contour = rotate_about(&contour, com, hint);
    }
    let rect = min_area_rect(&contour);
    let v = [com[0] - rect.center[0], com[1] - rect.center[1]];
    let scale = rect.half_extents[0].max(rect.half_extents[1]);
    // The rectangle fixes the axis; the centre of mass picks which of its
    // four directions becomes "up". Coincident centres keep the orientation.
    let coincident = (v[0] * v[0] + v[1] * v[1]).sqrt() <= 1e-6 * scale;
    let angle = if !coincident {
        let axis = (0..4)
            .map(|k| rect.angle + k as f64 * std::f64::consts::FRAC_PI_2)
            .fold((f64::NEG_INFINITY, 0.0), |best, a| {
                let dot = a.cos() * v[0] + a.sin() * v[1];
                if dot > best.0 { (dot, a) } else { best }
            })
            .1;
        -std::f64::consts::FRAC_PI_2 - axis
    } else {
        0.0
    };
    let contour = rotate_about(&contour, com, angle);
    let pts = contour.vertices();
    let stem = end_vertex(pts, 1.0, com);
    let tip = end_vertex(pts, -1.0, com);
    let upright = if coincident { 0.0 } else { upright_angle(stem, tip) };
    let contour = rotate_about(&contour, stem, upright);
    let tip = Transform2D::rotation(upright).about(stem).apply(tip);
    normalize(contour, stem, tip, (source_id.to_owned(), species_tag.to_owned()), opts.interior_spacing)
}

/// Canonical form of one leaf cut from a labelled plant image: the contour
/// vertex nearest `plant_center` is the stem, the farthest the tip, and the
/// leaf is rotated so stem→tip points up.
pub fn canonicalize_plant_leaf(
    leaf_mask: &BinaryMask,
    plant_center: Point2,
    source_id: &str,
    species_tag: &str,
    interior_spacing: f64,
) -> Result<LeafGeometry, LeafGeomError> {
    if !plant_center[0].is_finite() || !plant_center[1].is_finite() {
        return Err(LeafGeomError::Manifest("plant centre is not finite".into()));
    }
    let mask = largest_component(leaf_mask);
    if mask.count() < MIN_LEAF_PIXELS {
        return Err(LeafGeomError::TooSmall);
    }
    let contour = trace_contour(&mask).map_err(map_image_err)?;
    let pts = contour.vertices();
    let d2 = |p: Point2| (p[0] - plant_center[0]).powi(2) + (p[1] - plant_center[1]).powi(2);
    let far = pts[extreme_vertex(pts, d2, |a, b| a > b)];
    let (mut stem, mut tip) = plant_ends(pts, plant_center, far);
    let reach = d2(stem).sqrt();
    let mut contour = contour;
    // Re-select the ends against a centre straight below the stem until
    // they settle, so the output reproduces itself when re-ingested.
    for _ in 0..REFINE_PASSES {
        let angle = upright_angle(stem, tip);
        contour = rotate_about(&contour, stem, angle);
        tip = Transform2D::rotation(angle).about(stem).apply(tip);
        let below = [stem[0], stem[1] + reach];
        let pts = contour.vertices();
        let (s, t) = plant_ends(pts, below, [stem[0], stem[1] - 1.0]);
        if s == stem && t == tip {
            break;
        }
        (stem, tip) = (s, t);
    }
    let angle = upright_angle(stem, tip);
    let contour = rotate_about(&contour, stem, angle);
    let tip = Transform2D::rotation(angle).about(stem).apply(tip);
    normalize(contour, stem, tip, (source_id.to_owned(), species_tag.to_owned()), interior_spacing)
}
