//! Synthetic top-down plant images with exact instance annotations.
//!
//! Leaf silhouettes and textures are harvested from photographs, arranged on
//! a procedural plant skeleton and rendered with a pinhole camera. Each sample
//! comes with RGB, depth, instance labels, amodal masks and metadata, and is
//! a pure function of the configuration, the master seed and its index.
//!
//! The guide in `book/` walks through every module with runnable examples.

pub mod imageops;
pub mod leafgeom;
pub mod rng;
pub mod textures;
pub mod assembly;
pub mod render;
pub mod metrics;
pub mod pipeline;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/leaves.md")]
    mod leaves {}
    #[doc = include_str!("../../../book/src/textures.md")]
    mod textures {}
    #[doc = include_str!("../../../book/src/assembly.md")]
    mod assembly {}
    #[doc = include_str!("../../../book/src/rendering.md")]
    mod rendering {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
