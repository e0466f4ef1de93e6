//! Dataset generation: configuration, per-sample orchestration, atomic
//! output and the dataset manifest.
//!
//! Every random choice of sample `i` comes from streams keyed by
//! `(master_seed, i, tag)`, so outputs do not depend on the worker count or
//! the order in which samples finish.

mod config;
pub mod demo;
mod sample;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::imageops::{io, RasterImage};
use crate::leafgeom::{LeafGeomError, LeafPool};
use crate::textures::{TextureError, TexturePool};

pub use config::{AugmentToggles, BackgroundMode, CameraConfig, GeneratorConfig, LightConfig, PoolPaths};
pub use sample::{
    amodal_name, encode_sample, params_digest, sample_stem, BackgroundRecord, DepthRecord, EncodedFile, LeafRecord, Sample,
    SampleMeta, SkeletonNodeRecord, FLAT_GREEN,
};

pub const MANIFEST_FORMAT: &str = "plantsynth-dataset/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GENERATOR_VERSION: &str = concat!("plantsynth ", env!("CARGO_PKG_VERSION"));

/// Per-sample output directories.
pub const OUTPUT_DIRS: [&str; 7] = ["rgb", "depth", "label", "label_vis", "plant_mask", "amodal", "meta"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("empty pool: {0}")]
    EmptyPool(String),
}

impl GenerateError {
    /// Process exit code for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            GenerateError::Config(_) => 1,
            GenerateError::Io(_) => 2,
            GenerateError::EmptyPool(_) => 3,
        }
    }
}

impl From<LeafGeomError> for GenerateError {
    fn from(e: LeafGeomError) -> Self {
        match e {
            LeafGeomError::EmptyPool => GenerateError::EmptyPool("leaf".into()),
            LeafGeomError::Manifest(m) => GenerateError::Config(m),
            other => GenerateError::Io(other.to_string()),
        }
    }
}

impl From<TextureError> for GenerateError {
    fn from(e: TextureError) -> Self {
        match e {
            TextureError::EmptyPool => GenerateError::EmptyPool("texture".into()),
            TextureError::Manifest(m) => GenerateError::Config(m),
            other => GenerateError::Io(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> GenerateError {
    GenerateError::Io(format!("{}: {e}", path.display()))
}

/// Everything a sample draws from, loaded once and shared read-only.
pub struct Pools {
    pub leaves: LeafPool,
    pub leaf_textures: TexturePool,
    pub backgrounds: Option<TexturePool>,
    /// `(file name, image)` in file-name order.
    pub external: Vec<(String, RasterImage)>,
    /// SHA-256 of every pool file read, keyed by config field.
    pub digests: Vec<(String, String)>,
}

fn file_digest(path: &Path) -> Result<String, GenerateError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(sample::hex(&Sha256::digest(bytes)))
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>, GenerateError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        })
        .collect();
    files.sort();
    Ok(files)
}

impl Pools {
    pub fn load(cfg: &GeneratorConfig) -> Result<Pools, GenerateError> {
        let mut digests = Vec::new();
        let leaves_path = cfg.resolve(&cfg.pools.leaves);
        let leaves = LeafPool::load(&leaves_path)?;
        digests.push(("leaves".to_owned(), file_digest(&leaves_path)?));
        if leaves.leaves.is_empty() {
            return Err(GenerateError::EmptyPool("leaf".into()));
        }
        if let Some(id) = cfg.assembly.single_leaf_id {
            if id >= leaves.leaves.len() {
                return Err(GenerateError::Config(format!("single_leaf_id {id} exceeds the {} pooled leaves", leaves.leaves.len())));
            }
        }
        let tex_path = cfg.resolve(&cfg.pools.leaf_textures);
        let leaf_textures = TexturePool::load(&tex_path)?;
        digests.push(("leaf_textures".to_owned(), file_digest(&tex_path)?));
        if leaf_textures.is_empty() {
            return Err(GenerateError::EmptyPool("leaf texture".into()));
        }
        let mut backgrounds = None;
        let mut external = Vec::new();
        let bg_path = cfg.pools.backgrounds.as_ref().map(|p| cfg.resolve(p));
        match (cfg.background, bg_path) {
            (BackgroundMode::None, _) => {}
            (BackgroundMode::Pool, Some(p)) => {
                let pool = TexturePool::load(&p)?;
                if pool.is_empty() {
                    return Err(GenerateError::EmptyPool("background".into()));
                }
                digests.push(("backgrounds".to_owned(), file_digest(&p)?));
                backgrounds = Some(pool);
            }
            (BackgroundMode::External, Some(dir)) => {
                for f in image_files(&dir)? {
                    let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    digests.push((format!("backgrounds/{name}"), file_digest(&f)?));
                    external.push((name, io::read_rgb(&f).map_err(|e| io_err(&f, e))?));
                }
                if external.is_empty() {
                    return Err(GenerateError::EmptyPool("external background".into()));
                }
            }
            (_, None) => return Err(GenerateError::Config("pools.backgrounds is not set".into())),
        }
        Ok(Pools { leaves, leaf_textures, backgrounds, external, digests })
    }
}

/// Renders sample `index` in memory.
pub fn generate_sample(cfg: &GeneratorConfig, pools: &Pools, index: u64) -> Result<Sample, GenerateError> {
    sample::generate_sample(cfg, pools, index)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: u64,
    /// Hex key of the sample's parameter stream.
    pub seed: String,
    pub params_digest: String,
    pub files: Vec<FileRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub generator: String,
    pub config: GeneratorConfig,
    pub pool_digests: Vec<(String, String)>,
    /// False when the run stopped early; `samples` is then the finished prefix.
    pub complete: bool,
    pub samples: Vec<SampleRecord>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<DatasetManifest, GenerateError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut m: DatasetManifest = serde_json::from_str(&text).map_err(|e| GenerateError::Config(format!("{}: {e}", path.display())))?;
        if m.format != MANIFEST_FORMAT {
            return Err(GenerateError::Config(format!("unsupported manifest format {:?}", m.format)));
        }
        m.config.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest always serializes");
        s.push('\n');
        s
    }
}

fn seed_key(seed: u64, index: u64) -> String {
    sample::hex(&crate::rng::derive_stream(seed, index, "params").id().key())
}

fn record_of(sample: &Sample, files: &[EncodedFile]) -> SampleRecord {
    SampleRecord {
        index: sample.index,
        seed: seed_key(sample.meta.master_seed, sample.index),
        params_digest: params_digest(&sample.meta.params),
        files: files.iter().map(|f| FileRecord { path: f.path.clone(), sha256: f.sha256() }).collect(),
    }
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), GenerateError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Rebuilds the record of a sample already on disk, or `None` when it is
/// incomplete.
fn existing_record(out: &Path, index: u64) -> Option<SampleRecord> {
    let stem = sample_stem(index);
    let meta_bytes = fs::read(out.join("meta").join(format!("{stem}.json"))).ok()?;
    let meta: SampleMeta = serde_json::from_slice(&meta_bytes).ok()?;
    let mut paths = vec![
        format!("rgb/{stem}.png"),
        format!("depth/{stem}.png"),
        format!("label/{stem}.png"),
        format!("label_vis/{stem}.png"),
        format!("plant_mask/{stem}.png"),
    ];
    paths.extend((1..=meta.n_leaves as u16).map(|id| amodal_name(index, id)));
    let mut files = Vec::with_capacity(paths.len() + 1);
    for p in paths {
        let bytes = fs::read(out.join(&p)).ok()?;
        files.push(FileRecord { sha256: sample::hex(&Sha256::digest(bytes)), path: p });
    }
    files.push(FileRecord { path: format!("meta/{stem}.json"), sha256: sample::hex(&Sha256::digest(&meta_bytes)) });
    Some(SampleRecord { index, seed: seed_key(meta.master_seed, index), params_digest: params_digest(&meta.params), files })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GenerateOptions {
    /// Keep samples whose files are already complete.
    pub resume: bool,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, GenerateError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GenerateError::Config(format!("worker pool: {e}")))
}

/// Generates `cfg.count` samples into `out`, then writes the manifest.
/// On a failure the manifest still lists the finished prefix.
pub fn generate_dataset(cfg: &GeneratorConfig, out: &Path, opts: &GenerateOptions) -> Result<DatasetManifest, GenerateError> {
    cfg.validate()?;
    let pools = Pools::load(cfg)?;
    for d in OUTPUT_DIRS {
        fs::create_dir_all(out.join(d)).map_err(|e| io_err(out, e))?;
    }
    let pool = thread_pool(cfg.workers)?;
    let chunk = (pool.current_num_threads() * 4).max(16) as u64;
    let mut samples = Vec::with_capacity(cfg.count);
    let mut failure = None;
    let count = cfg.count as u64;
    let mut start = 0u64;
    while start < count && failure.is_none() {
        let end = (start + chunk).min(count);
        let results: Vec<Result<SampleRecord, GenerateError>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|index| {
                    if opts.resume {
                        if let Some(rec) = existing_record(out, index) {
                            return Ok(rec);
                        }
                    }
                    let sample = generate_sample(cfg, &pools, index)?;
                    let files = encode_sample(&sample)?;
                    for f in &files {
                        write_atomic(&out.join(&f.path), &f.bytes)?;
                    }
                    Ok(record_of(&sample, &files))
                })
                .collect()
        });
        for r in results {
            match r {
                Ok(rec) if failure.is_none() => samples.push(rec),
                Ok(_) => {}
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        log::info!("{end}/{count} samples");
        start = end;
    }
    let manifest = DatasetManifest {
        format: MANIFEST_FORMAT.to_owned(),
        generator: GENERATOR_VERSION.to_owned(),
        config: cfg.with_absolute_pools(),
        pool_digests: pools.digests.clone(),
        complete: failure.is_none(),
        samples,
    };
    write_atomic(&out.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

/// Regenerates the listed samples in memory and compares them with their
/// manifest records. Returns the indices that do not match.
pub fn verify_samples(manifest: &DatasetManifest, indices: &[u64]) -> Result<Vec<u64>, GenerateError> {
    let pools = Pools::load(&manifest.config)?;
    let mut bad = Vec::new();
    for &index in indices {
        let rec = manifest
            .samples
            .iter()
            .find(|r| r.index == index)
            .ok_or_else(|| GenerateError::Config(format!("sample {index} is not in the manifest")))?;
        let sample = generate_sample(&manifest.config, &pools, index)?;
        let files = encode_sample(&sample)?;
        if record_of(&sample, &files) != *rec {
            bad.push(index);
        }
    }
    Ok(bad)
}

/// Layout of a contact sheet for `n` samples: `(pairs per row, rows)`.
pub fn preview_grid(n: usize) -> (usize, usize) {
    let cols = (n as f64).sqrt().ceil() as usize;
    let cols = cols.max(1);
    (cols, n.div_ceil(cols))
}

/// Renders samples `0..n` and tiles each rgb image next to its label
/// preview, row-major by index.
pub fn preview(cfg: &GeneratorConfig, n: usize) -> Result<RasterImage, GenerateError> {
    if n < 1 {
        return Err(GenerateError::Config("preview needs n >= 1".into()));
    }
    cfg.validate()?;
    let pools = Pools::load(cfg)?;
    let pool = thread_pool(cfg.workers)?;
    let tiles: Vec<(RasterImage, RasterImage)> = pool.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| generate_sample(cfg, &pools, i).map(|s| (s.bundle.rgb, s.bundle.label_vis)))
            .collect::<Result<_, _>>()
    })?;
    let (w, h) = (cfg.width, cfg.height);
    let (cols, rows) = preview_grid(n);
    let mut sheet = RasterImage::filled(2 * cols * w, rows * h, &[0, 0, 0]);
    for (i, (rgb, vis)) in tiles.iter().enumerate() {
        let (cx, cy) = (i % cols, i / cols);
        for (j, tile) in [rgb, vis].into_iter().enumerate() {
            let x0 = (2 * cx + j) * w;
            for y in 0..h {
                for x in 0..w {
                    sheet.pixel_mut(x0 + x, cy * h + y).copy_from_slice(tile.pixel(x, y));
                }
            }
        }
    }
    Ok(sheet)
}
