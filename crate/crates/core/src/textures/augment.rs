//! Randomized texture augmentation sequences.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::imageops::{
    crop_or_pad, gaussian_blur, hsv_jitter, superpixel_quantize, warp, Point2, RasterImage, SideFractions, Transform2D,
};

use super::TextureKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    FlipLr,
    FlipUd,
    CropPad,
    Affine,
    Superpixels,
    Blur,
    HsvShift,
    Perspective,
}

/// One augmentation and its parameter ranges. Ranges are inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum AugmentOp {
    FlipLr,
    FlipUd,
    /// Each side independently cropped or padded by up to `max_fraction`
    /// of the image dimension.
    CropPad { max_fraction: f64 },
    Affine {
        scale: (f64, f64),
        /// Translation magnitude per axis as a fraction of that axis, either sign.
        max_translate: f64,
        max_rotate_deg: f64,
        max_shear_deg: f64,
    },
    Superpixels { segments: (usize, usize) },
    Blur { sigma: (f64, f64) },
    /// Independent integer deltas; a zero bound disables that channel.
    HsvShift { max_hue: i32, max_saturation: i32, max_value: i32 },
    /// Corners pulled inward by |N(0, s)| of the image size, s drawn from `scale`.
    Perspective { scale: (f64, f64) },
}

impl AugmentOp {
    pub fn kind(&self) -> OpKind {
        match self {
            AugmentOp::FlipLr => OpKind::FlipLr,
            AugmentOp::FlipUd => OpKind::FlipUd,
            AugmentOp::CropPad { .. } => OpKind::CropPad,
            AugmentOp::Affine { .. } => OpKind::Affine,
            AugmentOp::Superpixels { .. } => OpKind::Superpixels,
            AugmentOp::Blur { .. } => OpKind::Blur,
            AugmentOp::HsvShift { .. } => OpKind::HsvShift,
            AugmentOp::Perspective { .. } => OpKind::Perspective,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentStep {
    pub probability: f64,
    #[serde(flatten)]
    pub op: AugmentOp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub profile: TextureKind,
    pub steps: Vec<AugmentStep>,
}

/// A step that fired, with the parameters it drew.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppliedOp {
    pub kind: OpKind,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentTrace {
    /// Every step in the order it was visited.
    pub order: Vec<OpKind>,
    pub applied: Vec<AppliedOp>,
}

impl AugmentTrace {
    pub fn fired(&self, kind: OpKind) -> bool {
        self.applied.iter().any(|a| a.kind == kind)
    }

    pub fn params(&self, kind: OpKind) -> Option<&[f64]> {
        self.applied.iter().find(|a| a.kind == kind).map(|a| a.params.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("invalid range for {0:?}")]
    Range(OpKind),
}

fn step(probability: f64, op: AugmentOp) -> AugmentStep {
    AugmentStep { probability, op }
}

impl AugmentationPlan {
    /// Leaf texture sequence.
    pub fn leaf() -> Self {
        AugmentationPlan {
            profile: TextureKind::Leaf,
            steps: vec![
                step(0.5, AugmentOp::FlipLr),
                step(0.5, AugmentOp::FlipUd),
                step(0.5, AugmentOp::CropPad { max_fraction: 0.25 }),
                step(
                    0.5,
                    AugmentOp::Affine { scale: (0.8, 1.2), max_translate: 0.2, max_rotate_deg: 45.0, max_shear_deg: 15.0 },
                ),
                step(0.1, AugmentOp::Superpixels { segments: (50, 250) }),
                step(1.0, AugmentOp::Blur { sigma: (0.0, 3.0) }),
                step(1.0, AugmentOp::HsvShift { max_hue: 10, max_saturation: 10, max_value: 10 }),
                step(0.5, AugmentOp::Perspective { scale: (0.01, 0.1) }),
            ],
        }
    }

    /// Background sequence: tamer geometry, no brightness change.
    pub fn background() -> Self {
        let mut plan = Self::leaf();
        plan.profile = TextureKind::Background;
        for s in &mut plan.steps {
            match &mut s.op {
                AugmentOp::CropPad { max_fraction } => *max_fraction = 0.05,
                AugmentOp::Affine { max_translate, max_rotate_deg, max_shear_deg, .. } => {
                    *max_translate = 0.1;
                    *max_rotate_deg = 5.0;
                    *max_shear_deg = 3.0;
                }
                AugmentOp::HsvShift { max_value, .. } => *max_value = 0,
                _ => {}
            }
        }
        plan
    }

    pub fn for_kind(kind: TextureKind) -> Self {
        match kind {
            TextureKind::Leaf => Self::leaf(),
            TextureKind::Background => Self::background(),
        }
    }

    /// Same plan with every step disabled.
    pub fn disabled(mut self) -> Self {
        for s in &mut self.steps {
            s.probability = 0.0;
        }
        self
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        for s in &self.steps {
            if !(0.0..=1.0).contains(&s.probability) {
                return Err(PlanError::Probability(s.probability));
            }
            let ok = match &s.op {
                AugmentOp::FlipLr | AugmentOp::FlipUd => true,
                AugmentOp::CropPad { max_fraction } => (0.0..0.5).contains(max_fraction),
                AugmentOp::Affine { scale, max_translate, max_rotate_deg, max_shear_deg } => {
                    scale.0 > 0.0 && scale.0 <= scale.1 && *max_translate >= 0.0 && *max_rotate_deg >= 0.0 && (0.0..89.0).contains(max_shear_deg)
                }
                AugmentOp::Superpixels { segments } => segments.0 >= 1 && segments.0 <= segments.1,
                AugmentOp::Blur { sigma } => sigma.0 >= 0.0 && sigma.0 <= sigma.1,
                AugmentOp::HsvShift { max_hue, max_saturation, max_value } => {
                    *max_hue >= 0 && *max_saturation >= 0 && *max_value >= 0
                }
                AugmentOp::Perspective { scale } => scale.0 >= 0.0 && scale.0 <= scale.1 && scale.1 < 0.5,
            };
            if !ok {
                return Err(PlanError::Range(s.op.kind()));
            }
        }
        Ok(())
    }

    /// Applies the steps in an rng-shuffled order; output keeps the input size.
    pub fn apply<R: Rng + ?Sized>(&self, tex: &RasterImage, rng: &mut R) -> (RasterImage, AugmentTrace) {
        let mut order: Vec<usize> = (0..self.steps.len()).collect();
        order.shuffle(rng);
        let mut trace = AugmentTrace::default();
        let mut img = tex.to_rgb();
        for i in order {
            let s = &self.steps[i];
            trace.order.push(s.op.kind());
            if !rng.random_bool(s.probability) {
                continue;
            }
            let (next, params) = apply_op(&s.op, &img, rng);
            img = next;
            trace.applied.push(AppliedOp { kind: s.op.kind(), params });
        }
        (img, trace)
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn symmetric<R: Rng + ?Sized>(rng: &mut R, max: f64) -> f64 {
    uniform(rng, -max, max)
}

fn border_color(img: &RasterImage) -> Vec<u8> {
    img.mean_color().into_iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()
}

fn apply_op<R: Rng + ?Sized>(op: &AugmentOp, img: &RasterImage, rng: &mut R) -> (RasterImage, Vec<f64>) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let center = [(w - 1.0) / 2.0, (h - 1.0) / 2.0];
    match *op {
        AugmentOp::FlipLr => (img.flip_horizontal(), vec![]),
        AugmentOp::FlipUd => (img.flip_vertical(), vec![]),
        AugmentOp::CropPad { max_fraction } => {
            let f = SideFractions {
                top: symmetric(rng, max_fraction),
                right: symmetric(rng, max_fraction),
                bottom: symmetric(rng, max_fraction),
                left: symmetric(rng, max_fraction),
            };
            let out = crop_or_pad(img, &f, &border_color(img)).expect("fractions below one half keep the image non-empty");
            (out, vec![f.top, f.right, f.bottom, f.left])
        }
        AugmentOp::Affine { scale, max_translate, max_rotate_deg, max_shear_deg } => {
            let s = uniform(rng, scale.0, scale.1);
            let tx = symmetric(rng, max_translate);
            let ty = symmetric(rng, max_translate);
            let rot = symmetric(rng, max_rotate_deg);
            let shear = symmetric(rng, max_shear_deg);
            let t = Transform2D::scale(s, s)
                .then(Transform2D::shear_x(shear.to_radians()))
                .then(Transform2D::rotation(rot.to_radians()))
                .then(Transform2D::translation(tx * w, ty * h))
                .about(center);
            let out = warp(img, &t, (img.width(), img.height()), &border_color(img)).expect("affine map is invertible");
            (out, vec![s, tx, ty, rot, shear])
        }
        AugmentOp::Superpixels { segments } => {
            let n = rng.random_range(segments.0..=segments.1);
            (superpixel_quantize(img, n), vec![n as f64])
        }
        AugmentOp::Blur { sigma } => {
            let s = uniform(rng, sigma.0, sigma.1);
            (gaussian_blur(img, s), vec![s])
        }
        AugmentOp::HsvShift { max_hue, max_saturation, max_value } => {
            let dh = rng.random_range(-max_hue..=max_hue);
            let ds = rng.random_range(-max_saturation..=max_saturation);
            let dv = rng.random_range(-max_value..=max_value);
            (hsv_jitter(img, dh, ds, dv), vec![dh as f64, ds as f64, dv as f64])
        }
        AugmentOp::Perspective { scale } => {
            let s = uniform(rng, scale.0, scale.1);
            let (x0, y0, x1, y1) = (-0.5, -0.5, w - 0.5, h - 0.5);
            let full: [Point2; 4] = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
            let inward = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
            let mut params = vec![s];
            let mut quad = full;
            if s > 0.0 {
                let normal = Normal::new(0.0, s).expect("positive scale");
                for (q, d) in quad.iter_mut().zip(inward) {
                    let dx = normal.sample(rng).abs().min(0.45) * w;
                    let dy = normal.sample(rng).abs().min(0.45) * h;
                    q[0] += d[0] * dx;
                    q[1] += d[1] * dy;
                    params.extend([dx, dy]);
                }
            }
            // The pulled-in quad is stretched back over the full frame.
            let out = match Transform2D::from_quad(quad, full) {
                Ok(t) => warp(img, &t, (img.width(), img.height()), &border_color(img)).unwrap_or_else(|_| img.clone()),
                Err(_) => img.clone(),
            };
            (out, params)
        }
    }
}
