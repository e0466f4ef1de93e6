//! Producing and encoding one sample.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{BackgroundMode, GeneratorConfig};
use super::{GenerateError, Pools};
use crate::assembly::{assemble_plant, sample_plant_params, PlantModel, PlantParams, SkeletonNodeKind};
use crate::imageops::{io, RasterImage};
use crate::render::{render_sample, DiffuseModel, LightRig, SampleBundle, DEPTH_BACKGROUND};
use crate::rng::derive_stream;
use crate::textures::{AppliedOp, AugmentationPlan, TextureKind};

/// Uniform albedo of the flat-green ablation. Equal red and blue keep the
/// hue fixed under any shading factor.
pub const FLAT_GREEN: [u8; 3] = [40, 150, 40];

pub(crate) fn sample_light<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> LightRig {
    let l = &cfg.light;
    let elevation = l.elevation_deg.sample(rng);
    let azimuth = l.azimuth_deg.sample(rng);
    let intensity = l.intensity.sample(rng);
    let ambient = l.ambient.sample(rng);
    let oren_nayar = rng.random_bool(l.oren_nayar_probability);
    let roughness = l.roughness.sample(rng);
    let diffuse = if oren_nayar { DiffuseModel::OrenNayar { roughness } } else { DiffuseModel::Lambert };
    LightRig::from_angles(elevation, azimuth, intensity, ambient, diffuse)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundRecord {
    pub mode: BackgroundMode,
    pub source: Option<String>,
    pub augmentation: Vec<AppliedOp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafRecord {
    pub id: u16,
    pub source_id: String,
    pub texture: String,
    pub node: u32,
    pub visible_pixels: usize,
    pub amodal_pixels: usize,
    pub occlusion_ratio: f64,
    /// Centroid of the amodal mask in pixels, absent when out of frame.
    pub center: Option<[f64; 2]>,
    pub augmentation: Vec<AppliedOp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonNodeRecord {
    pub kind: SkeletonNodeKind,
    pub position: [f64; 3],
    pub pixel: Option<[f64; 2]>,
    pub depth: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRecord {
    pub near: f64,
    pub far: f64,
    pub background_code: u16,
}

/// Contents of `meta/NNNNNN.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub index: u64,
    pub master_seed: u64,
    pub width: usize,
    pub height: usize,
    pub leaf_count: usize,
    pub n_leaves: usize,
    pub trunk_id: u16,
    pub depth: DepthRecord,
    pub leaves: Vec<LeafRecord>,
    pub skeleton_nodes: Vec<SkeletonNodeRecord>,
    pub skeleton_edges: Vec<[u32; 2]>,
    pub params: PlantParams,
    pub light: LightRig,
    pub background: BackgroundRecord,
}

/// A rendered sample before encoding.
pub struct Sample {
    pub index: u64,
    pub model: PlantModel,
    pub bundle: SampleBundle,
    pub meta: SampleMeta,
}

impl Sample {
    pub fn stem(&self) -> String {
        sample_stem(self.index)
    }
}

pub fn sample_stem(index: u64) -> String {
    format!("{index:06}")
}

/// Relative path of leaf `id`'s amodal mask.
pub fn amodal_name(index: u64, id: u16) -> String {
    format!("amodal/{index:06}_{id:02}.png")
}

fn resize_to(img: RasterImage, w: usize, h: usize) -> RasterImage {
    if img.width() == w && img.height() == h {
        img
    } else {
        img.resize(w, h)
    }
}

pub(crate) fn generate_sample(cfg: &GeneratorConfig, pools: &Pools, index: u64) -> Result<Sample, GenerateError> {
    let seed = cfg.master_seed;
    let params = sample_plant_params(&cfg.assembly, &mut derive_stream(seed, index, "params"))
        .map_err(|e| GenerateError::Config(e.to_string()))?;
    let model = assemble_plant(&pools.leaves, pools.leaf_textures.len(), &params, &mut derive_stream(seed, index, "assembly"))
        .map_err(|e| match e {
            crate::assembly::AssemblyError::EmptyPool(what) => GenerateError::EmptyPool(what.to_owned()),
            other => GenerateError::Config(other.to_string()),
        })?;

    let leaf_plan = AugmentationPlan::for_kind(TextureKind::Leaf);
    let mut textures = Vec::with_capacity(model.leaves.len());
    let mut traces = Vec::with_capacity(model.leaves.len());
    for (k, leaf) in model.leaves.iter().enumerate() {
        let entry = &pools.leaf_textures.entries[leaf.instance.texture_ref];
        if cfg.flat_green_leaf {
            textures.push(RasterImage::filled(1, 1, &FLAT_GREEN));
            traces.push(Vec::new());
        } else if cfg.augment.leaf_textures {
            let (img, trace) = leaf_plan.apply(&entry.image, &mut derive_stream(seed, index, &format!("leaf-texture/{k}")));
            textures.push(img);
            traces.push(trace.applied);
        } else {
            textures.push(entry.image.clone());
            traces.push(Vec::new());
        }
    }

    let (w, h) = (cfg.width, cfg.height);
    let mut bg_rng = derive_stream(seed, index, "background");
    let (background, bg_record) = match cfg.background {
        BackgroundMode::None => (None, BackgroundRecord { mode: BackgroundMode::None, source: None, augmentation: Vec::new() }),
        BackgroundMode::Pool => {
            let pool = pools.backgrounds.as_ref().ok_or_else(|| GenerateError::EmptyPool("background".into()))?;
            let entry = &pool.entries[bg_rng.random_range(0..pool.entries.len())];
            let (img, applied) = if cfg.augment.backgrounds {
                let (img, trace) = AugmentationPlan::for_kind(TextureKind::Background).apply(&entry.image, &mut bg_rng);
                (img, trace.applied)
            } else {
                (entry.image.clone(), Vec::new())
            };
            let record = BackgroundRecord { mode: BackgroundMode::Pool, source: Some(entry.provenance.clone()), augmentation: applied };
            (Some(resize_to(img, w, h)), record)
        }
        BackgroundMode::External => {
            let ext = &pools.external;
            if ext.is_empty() {
                return Err(GenerateError::EmptyPool("external background".into()));
            }
            let (name, img) = &ext[bg_rng.random_range(0..ext.len())];
            let record = BackgroundRecord { mode: BackgroundMode::External, source: Some(name.clone()), augmentation: Vec::new() };
            (Some(resize_to(img.clone(), w, h)), record)
        }
    };

    let light = sample_light(cfg, &mut derive_stream(seed, index, "light"));
    let cam = cfg.camera();
    let bundle = render_sample(&model, &cam, &light, background.as_ref(), &textures, &cfg.render);

    let leaves = model
        .leaves
        .iter()
        .enumerate()
        .map(|(k, leaf)| LeafRecord {
            id: k as u16 + 1,
            source_id: leaf.source_id.clone(),
            texture: pools.leaf_textures.entries[leaf.instance.texture_ref].provenance.clone(),
            node: leaf.instance.node_index,
            visible_pixels: bundle.visible_counts[k],
            amodal_pixels: bundle.amodal_counts[k],
            occlusion_ratio: bundle.occlusion_ratios[k],
            center: bundle.leaf_centers[k],
            augmentation: std::mem::take(&mut traces[k]),
        })
        .collect();
    let skeleton_nodes = bundle
        .skeleton
        .nodes
        .iter()
        .zip(&bundle.skeleton_2d)
        .map(|(n, p)| SkeletonNodeRecord {
            kind: n.kind,
            position: n.position,
            pixel: p.as_ref().map(|p| p.pixel),
            depth: p.as_ref().map(|p| p.depth),
        })
        .collect();
    let meta = SampleMeta {
        index,
        master_seed: seed,
        width: w,
        height: h,
        leaf_count: bundle.leaf_count,
        n_leaves: model.leaves.len(),
        trunk_id: bundle.trunk_id,
        depth: DepthRecord { near: bundle.depth.near, far: bundle.depth.far, background_code: DEPTH_BACKGROUND },
        leaves,
        skeleton_nodes,
        skeleton_edges: bundle.skeleton.edges.clone(),
        params,
        light,
        background: bg_record,
    };
    Ok(Sample { index, model, bundle, meta })
}

/// One encoded output file.
pub struct EncodedFile {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl EncodedFile {
    pub fn sha256(&self) -> String {
        hex(&Sha256::digest(&self.bytes))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn gray8(values: impl Iterator<Item = bool>, w: usize, h: usize) -> RasterImage {
    RasterImage::new(w, h, 1, values.map(|b| if b { 255 } else { 0 }).collect()).expect("mask size")
}

/// Encodes every output of `sample`; the meta record comes last.
pub fn encode_sample(sample: &Sample) -> Result<Vec<EncodedFile>, GenerateError> {
    let b = &sample.bundle;
    let (w, h) = (b.width(), b.height());
    let stem = sample.stem();
    let png_err = |e: crate::imageops::ImageOpsError| GenerateError::Io(e.to_string());
    let mut files = vec![
        EncodedFile { path: format!("rgb/{stem}.png"), bytes: io::encode_png8(&b.rgb).map_err(png_err)? },
        EncodedFile { path: format!("depth/{stem}.png"), bytes: io::encode_png16(w, h, &b.depth.encode()).map_err(png_err)? },
        EncodedFile { path: format!("label/{stem}.png"), bytes: io::encode_png16(w, h, &b.labels).map_err(png_err)? },
        EncodedFile { path: format!("label_vis/{stem}.png"), bytes: io::encode_png8(&b.label_vis).map_err(png_err)? },
        EncodedFile {
            path: format!("plant_mask/{stem}.png"),
            bytes: io::encode_png8(&gray8((0..w * h).map(|i| b.plant_mask.get(i % w, i / w)), w, h)).map_err(png_err)?,
        },
    ];
    for (k, mask) in b.amodal_masks.iter().enumerate() {
        let img = gray8((0..w * h).map(|i| mask.get(i % w, i / w)), w, h);
        files.push(EncodedFile { path: amodal_name(sample.index, k as u16 + 1), bytes: io::encode_png8(&img).map_err(png_err)? });
    }
    let mut meta = serde_json::to_vec_pretty(&sample.meta).expect("meta always serializes");
    meta.push(b'\n');
    files.push(EncodedFile { path: format!("meta/{stem}.json"), bytes: meta });
    Ok(files)
}

/// Digest of the drawn plant parameters.
pub fn params_digest(params: &PlantParams) -> String {
    hex(&Sha256::digest(serde_json::to_vec(params).expect("params always serialize")))
}
