//! Procedural stand-ins for real inspiration leaves, textures and
//! backgrounds, so the whole pipeline can run without external data.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::{io_err, GenerateError};
use crate::imageops::{hsv_to_rgb, io, RasterImage};
use crate::leafgeom::{build_leaf_pool, read_leaf_manifest, DEFAULT_INTERIOR_SPACING};
use crate::rng::derive_stream;
use crate::textures::{build_texture_pool, read_texture_manifest, TextureKind};

const SINGLE_LEAVES: u64 = 10;
const PLANTS: u64 = 2;
const LEAF_TEXTURES: u64 = 8;
const BACKGROUNDS: u64 = 4;
const LEAF_IMAGE_SIDE: usize = 192;
const TEXTURE_SIDE: usize = 128;
const BACKGROUND_SIDE: usize = 256;

/// Paths written by [`write_demo_assets`].
#[derive(Clone, Debug)]
pub struct DemoAssets {
    pub root: PathBuf,
    pub config: PathBuf,
    pub leaf_pool: PathBuf,
    pub leaf_texture_pool: PathBuf,
    pub background_pool: PathBuf,
}

/// Smooth noise in [0, 1]: bilinear interpolation of a random lattice.
fn value_noise<R: Rng + ?Sized>(w: usize, h: usize, cell: f64, rng: &mut R) -> Vec<f64> {
    let gw = (w as f64 / cell).ceil() as usize + 2;
    let gh = (h as f64 / cell).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random()).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let fy = y as f64 / cell;
        let (y0, ty) = (fy.floor() as usize, fy.fract());
        for x in 0..w {
            let fx = x as f64 / cell;
            let (x0, tx) = (fx.floor() as usize, fx.fract());
            let at = |i: usize, j: usize| lattice[j * gw + i];
            let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
            let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

fn to_u8(c: [f64; 3]) -> [u8; 3] {
    c.map(|v| v.round().clamp(0.0, 255.0) as u8)
}

/// Leaf outline in its own frame: the base at `u = 0`, the tip at `u = 1`.
#[derive(Clone, Copy, Debug)]
struct LeafShape {
    length: f64,
    width: f64,
    /// Shifts the widest point toward the base (< 1) or the tip (> 1).
    skew: f64,
    bluntness: f64,
}

impl LeafShape {
    fn random<R: Rng + ?Sized>(length: f64, rng: &mut R) -> Self {
        LeafShape {
            length,
            width: length * rng.random_range(0.25..0.5),
            skew: rng.random_range(0.6..1.4),
            bluntness: rng.random_range(1.0..1.6),
        }
    }

    fn half_width(&self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        let s = t.powf(self.skew);
        0.5 * self.width * (PI * s).sin().powf(self.bluntness)
    }

    /// Whether the point `p`, relative to the base and with the leaf axis
    /// along `dir`, lies on the blade.
    fn contains(&self, p: [f64; 2], dir: [f64; 2]) -> bool {
        let u = p[0] * dir[0] + p[1] * dir[1];
        let v = -p[0] * dir[1] + p[1] * dir[0];
        v.abs() <= self.half_width(u / self.length)
    }
}

fn leaf_image<R: Rng + ?Sized>(rng: &mut R) -> RasterImage {
    let side = LEAF_IMAGE_SIDE;
    let shape = LeafShape::random(rng.random_range(110.0..160.0), rng);
    let angle: f64 = rng.random_range(0.0..2.0 * PI);
    let dir = [angle.cos(), angle.sin()];
    let c = side as f64 / 2.0;
    let base = [c - dir[0] * shape.length / 2.0, c - dir[1] * shape.length / 2.0];
    let hue = rng.random_range(85.0..125.0);
    let leaf = hsv_to_rgb([hue, rng.random_range(150.0..230.0), rng.random_range(120.0..200.0)]);
    let soil = [rng.random_range(90.0..130.0), rng.random_range(60.0..80.0), rng.random_range(35.0..50.0)];
    let noise = value_noise(side, side, 12.0, rng);
    RasterImage::from_fn_rgb(side, side, |x, y| {
        let k = 0.85 + 0.3 * noise[y * side + x];
        let p = [x as f64 - base[0], y as f64 - base[1]];
        let col = if shape.contains(p, dir) { leaf } else { soil };
        to_u8(col.map(|v| v * k))
    })
}

/// 16-bit label image of a rosette with leaves radiating from the centre;
/// later leaves cover earlier ones where they meet.
fn plant_labels<R: Rng + ?Sized>(n_leaves: usize, rng: &mut R) -> (usize, usize, Vec<u16>) {
    let side = 360usize;
    let c = side as f64 / 2.0;
    let mut labels = vec![0u16; side * side];
    let offset: f64 = rng.random_range(0.0..2.0 * PI);
    for k in 0..n_leaves {
        let angle = offset + 2.0 * PI * k as f64 / n_leaves as f64 + rng.random_range(-0.1..0.1);
        let dir = [angle.cos(), angle.sin()];
        let shape = LeafShape::random(rng.random_range(90.0..140.0), rng);
        let gap = rng.random_range(20.0..30.0);
        let base = [c + dir[0] * gap, c + dir[1] * gap];
        for y in 0..side {
            for x in 0..side {
                if shape.contains([x as f64 - base[0], y as f64 - base[1]], dir) {
                    labels[y * side + x] = k as u16 + 1;
                }
            }
        }
    }
    (side, side, labels)
}

fn leaf_texture<R: Rng + ?Sized>(high_frequency: bool, rng: &mut R) -> RasterImage {
    let side = TEXTURE_SIDE;
    let hue = rng.random_range(80.0..130.0);
    let sat = rng.random_range(140.0..230.0);
    let val = rng.random_range(110.0..210.0);
    let coarse = value_noise(side, side, 40.0, rng);
    let fine = value_noise(side, side, if high_frequency { 3.0 } else { 10.0 }, rng);
    let vein_hue = if rng.random_bool(0.3) { hue - 40.0 } else { hue + 10.0 };
    let amp = if high_frequency { 0.35 } else { 0.12 };
    RasterImage::from_fn_rgb(side, side, |x, y| {
        let i = y * side + x;
        let u = x as f64 / side as f64 - 0.5;
        let vein = (u.abs() < 0.02) || ((y as f64 / side as f64 + 2.0 * u.abs()) * 9.0).fract() < 0.06;
        let h = if vein { vein_hue } else { hue + 8.0 * (coarse[i] - 0.5) };
        let v = val * (1.0 + 0.25 * (coarse[i] - 0.5) + amp * (fine[i] - 0.5)) * if vein { 1.15 } else { 1.0 };
        to_u8(hsv_to_rgb([h.rem_euclid(360.0), sat, v.min(255.0)]))
    })
}

/// A photo-like texture with an irregular valid region for patch ingestion.
fn patch_texture<R: Rng + ?Sized>(rng: &mut R) -> (RasterImage, RasterImage) {
    let side = TEXTURE_SIDE + 32;
    let tex = leaf_texture(false, rng).resize(side, side);
    let c = side as f64 / 2.0;
    let radius = rng.random_range(0.38..0.46) * side as f64;
    let wobble: f64 = rng.random_range(0.05..0.12);
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    let mask = RasterImage::new(
        side,
        side,
        1,
        (0..side * side)
            .map(|i| {
                let (dx, dy) = ((i % side) as f64 - c, (i / side) as f64 - c);
                let r = radius * (1.0 + wobble * (5.0 * dy.atan2(dx) + phase).sin());
                if dx.hypot(dy) <= r {
                    255
                } else {
                    0
                }
            })
            .collect(),
    )
    .expect("mask size");
    (tex, mask)
}

fn background<R: Rng + ?Sized>(rng: &mut R) -> RasterImage {
    let side = BACKGROUND_SIDE;
    let base = [rng.random_range(70.0..130.0), rng.random_range(50.0..90.0), rng.random_range(30.0..60.0)];
    let coarse = value_noise(side, side, 48.0, rng);
    let fine = value_noise(side, side, 4.0, rng);
    let pebbles: Vec<([f64; 2], f64)> = (0..rng.random_range(10..30))
        .map(|_| ([rng.random_range(0.0..side as f64), rng.random_range(0.0..side as f64)], rng.random_range(2.0..7.0)))
        .collect();
    RasterImage::from_fn_rgb(side, side, |x, y| {
        let i = y * side + x;
        let mut k = 0.7 + 0.4 * coarse[i] + 0.25 * (fine[i] - 0.5);
        if pebbles.iter().any(|(p, r)| (x as f64 - p[0]).hypot(y as f64 - p[1]) < *r) {
            k *= 1.4;
        }
        to_u8(base.map(|v| v * k))
    })
}

const DEMO_CONFIG: &str = r#"# Demo generator configuration. Every field is optional; omitted fields
# take their defaults.
master_seed = 1
count = 100
width = 550
height = 550
background = "pool"

[pools]
leaves = "leaves.jsonl"
leaf_textures = "leaf_textures.json"
backgrounds = "backgrounds.json"
"#;

fn write(path: &Path, bytes: &[u8]) -> Result<(), GenerateError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn png(path: &Path, img: &RasterImage) -> Result<(), GenerateError> {
    io::write_png(path, img).map_err(|e| io_err(path, e))
}

/// Writes raw demo inputs and their manifests under `root`, ingests them
/// into pools and writes a generator config next to the pools.
pub fn write_demo_assets(root: &Path, seed: u64) -> Result<DemoAssets, GenerateError> {
    for d in ["raw/leaves", "raw/plants", "raw/textures", "raw/backgrounds"] {
        fs::create_dir_all(root.join(d)).map_err(|e| io_err(root, e))?;
    }
    let mut leaf_csv = String::from("path,mode,species,angle_hint,split,id\n");
    for i in 0..SINGLE_LEAVES {
        let img = leaf_image(&mut derive_stream(seed, i, "demo/leaf"));
        let name = format!("leaves/leaf_{i:02}.png");
        png(&root.join("raw").join(&name), &img)?;
        let split = if i == SINGLE_LEAVES - 1 { "held-out" } else { "train" };
        let _ = writeln!(leaf_csv, "{name},single-leaf,demo-dicot,,{split},");
    }
    for i in 0..PLANTS {
        let mut rng = derive_stream(seed, i, "demo/plant");
        let n = rng.random_range(4..7);
        let (w, h, labels) = plant_labels(n, &mut rng);
        let name = format!("plants/plant_{i:02}.png");
        let path = root.join("raw").join(&name);
        io::write_png16(&path, w, h, &labels).map_err(|e| io_err(&path, e))?;
        let _ = writeln!(leaf_csv, "{name},plant,demo-rosette,,train,");
    }
    let leaf_manifest = root.join("raw/leaves.csv");
    write(&leaf_manifest, leaf_csv.as_bytes())?;

    let mut tex_csv = String::from("path,class,mask\n");
    for i in 0..LEAF_TEXTURES {
        let mut rng = derive_stream(seed, i, "demo/leaf-texture");
        match i % 4 {
            3 => {
                let (tex, mask) = patch_texture(&mut rng);
                png(&root.join(format!("raw/textures/patch_{i:02}.png")), &tex)?;
                png(&root.join(format!("raw/textures/patch_{i:02}_mask.png")), &mask)?;
                let _ = writeln!(tex_csv, "textures/patch_{i:02}.png,patch,textures/patch_{i:02}_mask.png");
            }
            k => {
                let high = k == 1;
                png(&root.join(format!("raw/textures/leaf_{i:02}.png")), &leaf_texture(high, &mut rng))?;
                let class = if high { "high" } else { "low" };
                let _ = writeln!(tex_csv, "textures/leaf_{i:02}.png,{class},");
            }
        }
    }
    let tex_manifest = root.join("raw/leaf_textures.csv");
    write(&tex_manifest, tex_csv.as_bytes())?;

    let mut bg_csv = String::from("path,class,mask\n");
    for i in 0..BACKGROUNDS {
        png(&root.join(format!("raw/backgrounds/bg_{i:02}.png")), &background(&mut derive_stream(seed, i, "demo/background")))?;
        let _ = writeln!(bg_csv, "backgrounds/bg_{i:02}.png,low,");
    }
    let bg_manifest = root.join("raw/backgrounds.csv");
    write(&bg_manifest, bg_csv.as_bytes())?;

    let assets = DemoAssets {
        root: root.to_path_buf(),
        config: root.join("config.toml"),
        leaf_pool: root.join("leaves.jsonl"),
        leaf_texture_pool: root.join("leaf_textures.json"),
        background_pool: root.join("backgrounds.json"),
    };
    let (leaves, report) = build_leaf_pool(&read_leaf_manifest(&leaf_manifest)?, DEFAULT_INTERIOR_SPACING)?;
    if !report.skipped.is_empty() {
        log::warn!("demo leaves skipped: {:?}", report.skipped);
    }
    leaves.save(&assets.leaf_pool).map_err(|e| io_err(&assets.leaf_pool, e))?;
    build_texture_pool(&read_texture_manifest(&tex_manifest)?, TextureKind::Leaf)?.save(&assets.leaf_texture_pool)?;
    build_texture_pool(&read_texture_manifest(&bg_manifest)?, TextureKind::Background)?.save(&assets.background_pool)?;
    write(&assets.config, DEMO_CONFIG.as_bytes())?;
    Ok(assets)
}
