//! Leaf and background texture pools, augmentation and inpainting.

mod augment;
mod inpaint;

use std::path::{Path, PathBuf};

use base64::Engine;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::imageops::{io, BinaryMask, ImageOpsError, RasterImage};

pub use augment::{AppliedOp, AugmentOp, AugmentStep, AugmentTrace, AugmentationPlan, OpKind, PlanError};
pub use inpaint::{inpaint_background, MAX_ITERATIONS as INPAINT_MAX_ITERATIONS, TOLERANCE as INPAINT_TOLERANCE};

/// First field of every serialized texture pool.
pub const TEXTURE_POOL_FORMAT: &str = "plantsynth-texture-pool/1";

/// Patches narrower or shorter than this are discarded.
pub const MIN_PATCH_SIDE: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum TextureError {
    #[error("every pixel is masked")]
    FullMask,
    #[error("mask and image sizes differ")]
    SizeMismatch,
    #[error("no textures were ingested")]
    EmptyPool,
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("pool file: {0}")]
    PoolFormat(String),
    #[error("no interior rectangle of at least {MIN_PATCH_SIDE}x{MIN_PATCH_SIDE} pixels")]
    PatchTooSmall,
    #[error(transparent)]
    Image(#[from] ImageOpsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextureKind {
    Leaf,
    Background,
}

impl std::str::FromStr for TextureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leaf" => Ok(TextureKind::Leaf),
            "background" => Ok(TextureKind::Background),
            other => Err(format!("unknown texture kind {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyClass {
    Low,
    High,
    Patch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextureEntry {
    pub image: RasterImage,
    pub provenance: String,
    pub class: FrequencyClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TexturePool {
    pub kind: TextureKind,
    pub entries: Vec<TextureEntry>,
}

#[derive(Serialize, Deserialize)]
struct StoredEntry {
    provenance: String,
    class: FrequencyClass,
    width: usize,
    height: usize,
    png_base64: String,
}

#[derive(Serialize, Deserialize)]
struct StoredPool {
    format: String,
    kind: TextureKind,
    entries: Vec<StoredEntry>,
}

impl TexturePool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, TextureError> {
        let b64 = base64::engine::general_purpose::STANDARD;
        let entries = self
            .entries
            .iter()
            .map(|e| {
                Ok(StoredEntry {
                    provenance: e.provenance.clone(),
                    class: e.class,
                    width: e.image.width(),
                    height: e.image.height(),
                    png_base64: b64.encode(io::encode_png8(&e.image)?),
                })
            })
            .collect::<Result<Vec<_>, TextureError>>()?;
        let stored = StoredPool { format: TEXTURE_POOL_FORMAT.into(), kind: self.kind, entries };
        let mut out = serde_json::to_vec_pretty(&stored).map_err(|e| TextureError::PoolFormat(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TexturePool, TextureError> {
        let bad = |e: String| TextureError::PoolFormat(e);
        let stored: StoredPool = serde_json::from_slice(bytes).map_err(|e| bad(e.to_string()))?;
        if stored.format != TEXTURE_POOL_FORMAT {
            return Err(bad(format!("unsupported format {:?}", stored.format)));
        }
        let b64 = base64::engine::general_purpose::STANDARD;
        let entries = stored
            .entries
            .into_iter()
            .map(|e| {
                let png = b64.decode(&e.png_base64).map_err(|err| bad(err.to_string()))?;
                let image = io::decode_png_rgb(&png)?;
                if image.width() != e.width || image.height() != e.height {
                    return Err(bad(format!("{}: stored size mismatch", e.provenance)));
                }
                Ok(TextureEntry { image, provenance: e.provenance, class: e.class })
            })
            .collect::<Result<Vec<_>, TextureError>>()?;
        Ok(TexturePool { kind: stored.kind, entries })
    }

    pub fn load(path: &Path) -> Result<TexturePool, TextureError> {
        let bytes = std::fs::read(path).map_err(|e| TextureError::PoolFormat(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<(), TextureError> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| TextureError::PoolFormat(format!("{}: {e}", path.display())))
    }
}

/// One texture manifest row; `mask` is required for the `patch` class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureManifestEntry {
    pub path: PathBuf,
    pub class: FrequencyClass,
    #[serde(default)]
    pub mask: Option<PathBuf>,
}

/// Reads a CSV manifest with header `path,class[,mask]`. Relative paths
/// resolve against the manifest's directory.
pub fn read_texture_manifest(path: &Path) -> Result<Vec<TextureManifestEntry>, TextureError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .map_err(|e| TextureError::Manifest(format!("{}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for row in reader.deserialize::<TextureManifestEntry>() {
        let mut entry = row.map_err(|e| TextureError::Manifest(e.to_string()))?;
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
        if let Some(m) = entry.mask.take().filter(|m| !m.as_os_str().is_empty()) {
            entry.mask = Some(if m.is_relative() { base.join(m) } else { m });
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Axis-aligned rectangle `(x, y, width, height)`.
pub type PixelRect = (usize, usize, usize, usize);

/// Largest-area axis-aligned rectangle whose pixels all lie in `mask`,
/// found with the per-row histogram stack scan. The first maximum in
/// raster order wins.
pub fn largest_interior_rect(mask: &BinaryMask) -> Option<PixelRect> {
    let (w, h) = (mask.width(), mask.height());
    let mut heights = vec![0usize; w];
    let mut best: Option<(usize, PixelRect)> = None;
    let mut stack: Vec<usize> = Vec::with_capacity(w + 1);
    for y in 0..h {
        for (x, hx) in heights.iter_mut().enumerate() {
            *hx = if mask.get(x, y) { *hx + 1 } else { 0 };
        }
        stack.clear();
        for x in 0..=w {
            let cur = if x < w { heights[x] } else { 0 };
            while let Some(&top) = stack.last() {
                if heights[top] < cur {
                    break;
                }
                stack.pop();
                let height = heights[top];
                let left = stack.last().map_or(0, |&s| s + 1);
                let width = x - left;
                let area = height * width;
                if area > 0 && best.is_none_or(|(a, _)| area > a) {
                    best = Some((area, (left, y + 1 - height, width, height)));
                }
            }
            stack.push(x);
        }
    }
    best.map(|(_, r)| r)
}

fn ingest_texture(entry: &TextureManifestEntry) -> Result<TextureEntry, TextureError> {
    let image = io::read_rgb(&entry.path)?;
    let provenance = entry.path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let image = if entry.class == FrequencyClass::Patch {
        let mask_path = entry
            .mask
            .as_ref()
            .ok_or_else(|| TextureError::Manifest(format!("{provenance}: patch entry without mask")))?;
        let mask = BinaryMask::from_image(&io::read_gray(mask_path)?);
        if mask.width() != image.width() || mask.height() != image.height() {
            return Err(TextureError::SizeMismatch);
        }
        match largest_interior_rect(&mask) {
            Some((x, y, w, h)) if w >= MIN_PATCH_SIDE && h >= MIN_PATCH_SIDE => image.crop(x, y, w, h),
            _ => return Err(TextureError::PatchTooSmall),
        }
    } else {
        image
    };
    Ok(TextureEntry { image, provenance, class: entry.class })
}

/// Loads every manifest entry; failures are logged and skipped. Entries keep
/// manifest order, ties in provenance are not reordered.
pub fn build_texture_pool(entries: &[TextureManifestEntry], kind: TextureKind) -> Result<TexturePool, TextureError> {
    use rayon::prelude::*;
    let loaded: Vec<_> = entries.par_iter().map(|e| (e, ingest_texture(e))).collect();
    let mut pool = TexturePool { kind, entries: Vec::new() };
    for (entry, res) in loaded {
        match res {
            Ok(t) => pool.entries.push(t),
            Err(e) => log::warn!("skipping texture {}: {e}", entry.path.display()),
        }
    }
    if pool.entries.is_empty() {
        return Err(TextureError::EmptyPool);
    }
    Ok(pool)
}

pub fn augment_leaf_texture<R: Rng + ?Sized>(tex: &RasterImage, rng: &mut R) -> RasterImage {
    AugmentationPlan::leaf().apply(tex, rng).0
}

pub fn augment_background_texture<R: Rng + ?Sized>(tex: &RasterImage, rng: &mut R) -> RasterImage {
    AugmentationPlan::background().apply(tex, rng).0
}
