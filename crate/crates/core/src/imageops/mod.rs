//! Raster and planar-geometry primitives shared by ingestion, augmentation
//! and scoring. Everything here is a pure function of its inputs.

mod contour;
mod filter;
mod geometry;
pub mod io;
mod raster;
mod slic;
mod transform;

pub use contour::{
    binarize_largest_component, close, dilate, erode, label_components, largest_component, mask_centroid, open,
    otsu_threshold, trace_contour, ThresholdChannel,
};
pub use filter::{gaussian_blur, gaussian_kernel, hsv_jitter, hsv_to_rgb, rgb_to_hsv};
pub use geometry::{
    bounds, convex_hull, distance_to_boundary, min_area_rect, point_in_polygon, segment_distance, signed_area,
    OrientedRect, Point2, Polygon2D,
};
pub use raster::{BinaryMask, RasterImage};
pub use slic::{rgb_to_lab, superpixel_quantize};
pub use transform::{crop_or_pad, crop_or_pad_transform, warp, SideFractions, Transform2D};

#[derive(Debug, thiserror::Error)]
pub enum ImageOpsError {
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("unsupported channel count {0}")]
    UnsupportedChannels(usize),
    #[error("buffer holds {actual} samples, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("no foreground pixel")]
    AllBackground,
    #[error("region too small")]
    TooSmall,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has non-finite coordinates")]
    NonFinite,
    #[error("polygon has zero area")]
    DegeneratePolygon,
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("transform is not invertible")]
    SingularTransform,
    #[error("crop leaves an empty image")]
    EmptyResult,
    #[error("image i/o: {0}")]
    Io(String),
}
