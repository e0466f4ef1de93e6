//! Software rendering of plant models into every output modality.
//!
//! One z-buffered pass over all primitives yields depth, instance ids and
//! (after deferred shading) the RGB image; a further pass per leaf alone
//! yields its amodal mask. Label passes never blend: each pixel centre takes
//! exactly one primitive's id.

mod camera;
mod raster;

use serde::{Deserialize, Serialize};

use crate::assembly::{PlantModel, SkeletonGraph, Vec3};
use crate::imageops::{hsv_to_rgb, BinaryMask, RasterImage};

pub use camera::{shade_diffuse, Camera, DiffuseModel, LightRig};
pub use raster::{fill_triangle, Fragment, ScreenVertex};

use camera::{dot, normalize};

/// Depth code of background pixels in the 16-bit depth map.
pub const DEPTH_BACKGROUND: u16 = u16::MAX;
/// Largest depth code of a surface pixel.
pub const DEPTH_MAX_CODE: u16 = u16::MAX - 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    /// Stems carry the trunk id instead of their leaf's id.
    pub separate_stem_labels: bool,
    /// Stem and trunk width relative to plant height.
    pub stem_width: f64,
    /// Fraction by which stem colour is darkened from the leaf texture mean.
    pub stem_darken: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { separate_stem_labels: false, stem_width: 0.015, stem_darken: 0.35 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderMode {
    Shaded,
    FlatId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Owner {
    Leaf(usize),
    Stem(usize),
    Trunk,
}

struct Primitive {
    owner: Owner,
    tri: [ScreenVertex; 3],
}

const NONE: u32 = u32::MAX;

/// Raw pass output: per pixel the nearest depth (`INFINITY` if empty), the
/// index of the winning primitive and its interpolated attribute.
struct Buffers {
    width: usize,
    depth: Vec<f64>,
    prim: Vec<u32>,
    attr: Vec<[f64; 2]>,
}

impl Buffers {
    fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        Buffers { width, depth: vec![f64::INFINITY; n], prim: vec![NONE; n], attr: vec![[0.0; 2]; n] }
    }
}

fn run_pass<'a>(prims: impl Iterator<Item = (usize, &'a Primitive)>, cam: &Camera) -> Buffers {
    let mut buf = Buffers::new(cam.width, cam.image_height);
    for (i, p) in prims {
        fill_triangle(&p.tri, cam.width, cam.image_height, |f| {
            let idx = f.y * buf.width + f.x;
            if f.depth < buf.depth[idx] {
                buf.depth[idx] = f.depth;
                buf.prim[idx] = i as u32;
                buf.attr[idx] = f.attr;
            }
        });
    }
    buf
}

fn leaf_primitives(model: &PlantModel, cam: &Camera, k: usize, out: &mut Vec<Primitive>) {
    let leaf = &model.leaves[k];
    let projected: Vec<Option<([f64; 2], f64)>> = leaf.vertices.iter().map(|&v| cam.project(v)).collect();
    for t in &leaf.triangles {
        let mut tri = [ScreenVertex { pos: [0.0; 2], depth: 1.0, attr: [0.0; 2] }; 3];
        let mut ok = true;
        for (slot, &vi) in tri.iter_mut().zip(t) {
            match projected[vi as usize] {
                Some((pos, depth)) => *slot = ScreenVertex { pos, depth, attr: leaf.uv[vi as usize] },
                None => ok = false,
            }
        }
        if ok {
            out.push(Primitive { owner: Owner::Leaf(k), tri });
        }
    }
}

/// Camera-facing quad of world width `width` along `a → b`, extended by
/// half a width past each end so segments seen end-on still show.
fn segment_primitives(a: Vec3, b: Vec3, width: f64, cam: &Camera, owner: Owner, out: &mut Vec<Primitive>) {
    let (Some((pa, mut da)), Some((pb, mut db))) = (cam.project(a), cam.project(b)) else {
        return;
    };
    let f = cam.focal();
    let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
    let len = (dx * dx + dy * dy).sqrt();
    let dir = if len > 1e-6 {
        [dx / len, dy / len]
    } else {
        let near = da.min(db);
        da = near;
        db = near;
        [1.0, 0.0]
    };
    let n = [-dir[1], dir[0]];
    let ha = 0.5 * width * f / da;
    let hb = 0.5 * width * f / db;
    let ea = [pa[0] - dir[0] * ha, pa[1] - dir[1] * ha];
    let eb = [pb[0] + dir[0] * hb, pb[1] + dir[1] * hb];
    let v = |p: [f64; 2], s: f64, h: f64, d: f64| ScreenVertex { pos: [p[0] + s * n[0] * h, p[1] + s * n[1] * h], depth: d, attr: [0.0; 2] };
    let q = [v(ea, 1.0, ha, da), v(eb, 1.0, hb, db), v(eb, -1.0, hb, db), v(ea, -1.0, ha, da)];
    out.push(Primitive { owner, tri: [q[0], q[1], q[2]] });
    out.push(Primitive { owner, tri: [q[0], q[2], q[3]] });
}

fn build_primitives(model: &PlantModel, cam: &Camera, opts: &RenderOptions) -> Vec<Primitive> {
    let mut prims = Vec::new();
    let width = opts.stem_width * model.params.plant_height;
    for (k, leaf) in model.leaves.iter().enumerate() {
        leaf_primitives(model, cam, k, &mut prims);
        for seg in leaf.stem.windows(2) {
            segment_primitives(seg[0], seg[1], width, cam, Owner::Stem(k), &mut prims);
        }
    }
    if model.trunk[1][2] > model.trunk[0][2] {
        segment_primitives(model.trunk[0], model.trunk[1], width, cam, Owner::Trunk, &mut prims);
    }
    prims
}

/// Reserved id of the trunk (and of stems under `separate_stem_labels`).
pub fn trunk_id(n_leaves: usize) -> u16 {
    (n_leaves + 1) as u16
}

fn owner_id(owner: Owner, n: usize, opts: &RenderOptions) -> u16 {
    match owner {
        Owner::Leaf(k) => (k + 1) as u16,
        Owner::Stem(k) if !opts.separate_stem_labels => (k + 1) as u16,
        Owner::Stem(_) | Owner::Trunk => trunk_id(n),
    }
}

fn solo_filter(owner: Owner, k: usize, opts: &RenderOptions) -> bool {
    match owner {
        Owner::Leaf(j) => j == k,
        Owner::Stem(j) => j == k && !opts.separate_stem_labels,
        Owner::Trunk => false,
    }
}

/// Deterministic label colour: black background, grey trunk, golden-ratio
/// hue steps for leaves.
pub fn label_color(id: u16, n_leaves: usize) -> [u8; 3] {
    if id == 0 {
        return [0, 0, 0];
    }
    if id == trunk_id(n_leaves) {
        return [128, 128, 128];
    }
    let hue = (f64::from(id) * 0.618_033_988_749_895).fract() * 360.0;
    let sat = if id % 2 == 0 { 200.0 } else { 255.0 };
    let rgb = hsv_to_rgb([hue, sat, 255.0]);
    rgb.map(|c| c.round().clamp(0.0, 255.0) as u8)
}

pub fn label_vis(labels: &[u16], width: usize, height: usize, n_leaves: usize) -> RasterImage {
    let mut data = Vec::with_capacity(labels.len() * 3);
    for &id in labels {
        data.extend_from_slice(&label_color(id, n_leaves));
    }
    RasterImage::new(width, height, 3, data).expect("label buffer matches its size")
}

/// Per-pixel surface depth along the viewing axis plus the linear 16-bit
/// coding range.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// `INFINITY` where nothing was hit.
    pub values: Vec<f64>,
    pub near: f64,
    pub far: f64,
}

impl DepthMap {
    /// Linear code in `0..=65534`, background 65535.
    pub fn encode(&self) -> Vec<u16> {
        let span = self.far - self.near;
        self.values
            .iter()
            .map(|&d| {
                if !d.is_finite() {
                    DEPTH_BACKGROUND
                } else if span <= 0.0 {
                    0
                } else {
                    let t = ((d - self.near) / span).clamp(0.0, 1.0);
                    (t * f64::from(DEPTH_MAX_CODE)).round() as u16
                }
            })
            .collect()
    }

    /// Inverse of [`encode`](Self::encode), up to quantization.
    pub fn decode(code: u16, near: f64, far: f64) -> f64 {
        if code == DEPTH_BACKGROUND {
            f64::INFINITY
        } else {
            near + (far - near) * f64::from(code) / f64::from(DEPTH_MAX_CODE)
        }
    }
}

/// Output of a single [`rasterize`] call.
#[derive(Clone, Debug)]
pub struct RasterBuffers {
    pub color: RasterImage,
    pub depth: Vec<f64>,
    pub ids: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedNode {
    pub pixel: [f64; 2],
    pub depth: f64,
}

/// Every output modality of one sample.
#[derive(Clone, Debug)]
pub struct SampleBundle {
    pub rgb: RasterImage,
    pub depth: DepthMap,
    pub labels: Vec<u16>,
    pub label_vis: RasterImage,
    pub plant_mask: BinaryMask,
    pub amodal_masks: Vec<BinaryMask>,
    pub visible_counts: Vec<usize>,
    pub amodal_counts: Vec<usize>,
    pub occlusion_ratios: Vec<f64>,
    pub leaf_count: usize,
    pub leaf_centers: Vec<Option<[f64; 2]>>,
    pub skeleton: SkeletonGraph,
    /// Projection of `skeleton.nodes`, same order; `None` behind the camera.
    pub skeleton_2d: Vec<Option<ProjectedNode>>,
    pub trunk_id: u16,
}

impl SampleBundle {
    pub fn width(&self) -> usize {
        self.rgb.width()
    }

    pub fn height(&self) -> usize {
        self.rgb.height()
    }
}

struct Texturing<'a> {
    textures: &'a [RasterImage],
    /// Canonical bounds per leaf: (min, max).
    bounds: Vec<([f64; 2], [f64; 2])>,
    stem_albedo: Vec<[f64; 3]>,
    trunk_albedo: [f64; 3],
}

impl<'a> Texturing<'a> {
    fn new(model: &PlantModel, textures: &'a [RasterImage], opts: &RenderOptions) -> Self {
        let bounds = model.leaves.iter().map(|l| crate::imageops::bounds(&l.uv)).collect();
        let keep = 1.0 - opts.stem_darken;
        let stem_albedo: Vec<[f64; 3]> = model
            .leaves
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let m = textures[k].mean_color();
                [m[0] * keep / 255.0, m[1] * keep / 255.0, m[2] * keep / 255.0]
            })
            .collect();
        let trunk_albedo = if stem_albedo.is_empty() {
            [0.3, 0.25, 0.15]
        } else {
            let n = stem_albedo.len() as f64;
            [0, 1, 2].map(|c| stem_albedo.iter().map(|a| a[c]).sum::<f64>() / n)
        };
        Texturing { textures, bounds, stem_albedo, trunk_albedo }
    }

    fn leaf_albedo(&self, k: usize, uv: [f64; 2]) -> [f64; 3] {
        let tex = &self.textures[k];
        let (lo, hi) = self.bounds[k];
        let sx = (tex.width() as f64 - 1.0) / (hi[0] - lo[0]).max(1e-12);
        let sy = (tex.height() as f64 - 1.0) / (hi[1] - lo[1]).max(1e-12);
        let tx = ((uv[0] - lo[0]) * sx).clamp(0.0, tex.width() as f64 - 1.0);
        let ty = ((uv[1] - lo[1]) * sy).clamp(0.0, tex.height() as f64 - 1.0);
        let mut out = [0.0; 3];
        tex.sample_bilinear(tx, ty, &[0, 0, 0], &mut out);
        out.map(|c| c / 255.0)
    }
}

fn check_inputs(model: &PlantModel, cam: &Camera, textures: &[RasterImage], background: Option<&RasterImage>) {
    assert!(cam.is_valid(), "invalid camera");
    assert!(textures.len() >= model.leaves.len(), "one texture per leaf is required");
    assert!(textures.iter().all(|t| t.channels() == 3), "leaf textures must be RGB");
    if let Some(bg) = background {
        assert!(bg.width() == cam.width && bg.height() == cam.image_height && bg.channels() == 3, "background must be RGB at the camera size");
    }
}

fn shade_pixel(
    owner: Owner,
    uv: [f64; 2],
    pixel: (usize, usize),
    depth: f64,
    model: &PlantModel,
    cam: &Camera,
    light: &LightRig,
    tex: &Texturing,
) -> [u8; 3] {
    let p = cam.unproject(pixel.0 as f64, pixel.1 as f64, depth);
    let c = cam.position();
    let view = normalize([c[0] - p[0], c[1] - p[1], c[2] - p[2]]);
    let (normal, albedo) = match owner {
        Owner::Leaf(k) => {
            let mut n = model.leaves[k].normal;
            if dot(n, view) < 0.0 {
                n = n.map(|v| -v);
            }
            (n, tex.leaf_albedo(k, uv))
        }
        Owner::Stem(k) => (view, tex.stem_albedo[k]),
        Owner::Trunk => (view, tex.trunk_albedo),
    };
    shade_diffuse(normal, light, view, albedo).map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// One pass over the whole model. `FlatId` fills the colour buffer with
/// label colours and ignores light and textures.
pub fn rasterize(
    model: &PlantModel,
    cam: &Camera,
    mode: RenderMode,
    light: &LightRig,
    textures: &[RasterImage],
    opts: &RenderOptions,
) -> RasterBuffers {
    if mode == RenderMode::Shaded {
        check_inputs(model, cam, textures, None);
    }
    let prims = build_primitives(model, cam, opts);
    let buf = run_pass(prims.iter().enumerate(), cam);
    let n = model.leaves.len();
    let ids: Vec<u16> = buf.prim.iter().map(|&p| if p == NONE { 0 } else { owner_id(prims[p as usize].owner, n, opts) }).collect();
    let color = match mode {
        RenderMode::FlatId => label_vis(&ids, cam.width, cam.image_height, n),
        RenderMode::Shaded => {
            let tex = Texturing::new(model, textures, opts);
            let mut img = RasterImage::filled(cam.width, cam.image_height, &[0, 0, 0]);
            for (i, &p) in buf.prim.iter().enumerate() {
                if p != NONE {
                    let px = (i % cam.width, i / cam.width);
                    let rgb = shade_pixel(prims[p as usize].owner, buf.attr[i], px, buf.depth[i], model, cam, light, &tex);
                    img.pixel_mut(px.0, px.1).copy_from_slice(&rgb);
                }
            }
            img
        }
    };
    RasterBuffers { color, depth: buf.depth, ids }
}

/// Mask and depth of leaf `k` rendered with nothing else in the scene
/// (its own stem included unless stems are labelled separately).
pub fn render_solo(model: &PlantModel, cam: &Camera, k: usize, opts: &RenderOptions) -> (BinaryMask, Vec<f64>) {
    let prims = build_primitives(model, cam, opts);
    solo_from(&prims, cam, k, opts)
}

fn solo_from(prims: &[Primitive], cam: &Camera, k: usize, opts: &RenderOptions) -> (BinaryMask, Vec<f64>) {
    let buf = run_pass(prims.iter().enumerate().filter(|(_, p)| solo_filter(p.owner, k, opts)), cam);
    let bits = buf.prim.iter().map(|&p| p != NONE).collect();
    (BinaryMask::from_bits(cam.width, cam.image_height, bits).expect("buffer matches camera size"), buf.depth)
}

/// Renders the model over `background` (black when `None`). `textures[k]`
/// is the already-augmented texture of leaf `k`.
pub fn render_sample(
    model: &PlantModel,
    cam: &Camera,
    light: &LightRig,
    background: Option<&RasterImage>,
    textures: &[RasterImage],
    opts: &RenderOptions,
) -> SampleBundle {
    check_inputs(model, cam, textures, background);
    let (w, h) = (cam.width, cam.image_height);
    let n = model.leaves.len();
    let prims = build_primitives(model, cam, opts);
    let buf = run_pass(prims.iter().enumerate(), cam);
    let labels: Vec<u16> = buf.prim.iter().map(|&p| if p == NONE { 0 } else { owner_id(prims[p as usize].owner, n, opts) }).collect();

    let tex = Texturing::new(model, textures, opts);
    let mut rgb = match background {
        Some(bg) => bg.clone(),
        None => RasterImage::filled(w, h, &[0, 0, 0]),
    };
    for (i, &p) in buf.prim.iter().enumerate() {
        if p != NONE {
            let px = (i % w, i / w);
            let c = shade_pixel(prims[p as usize].owner, buf.attr[i], px, buf.depth[i], model, cam, light, &tex);
            rgb.pixel_mut(px.0, px.1).copy_from_slice(&c);
        }
    }

    let mut visible_counts = vec![0usize; n];
    for &id in &labels {
        if id >= 1 && (id as usize) <= n {
            visible_counts[id as usize - 1] += 1;
        }
    }
    let mut amodal_masks = Vec::with_capacity(n);
    let mut amodal_counts = Vec::with_capacity(n);
    let mut leaf_centers = Vec::with_capacity(n);
    for k in 0..n {
        let (mask, _) = solo_from(&prims, cam, k, opts);
        let count = mask.count();
        leaf_centers.push(crate::imageops::mask_centroid(&mask).ok());
        amodal_counts.push(count);
        amodal_masks.push(mask);
    }
    let occlusion_ratios = visible_counts
        .iter()
        .zip(&amodal_counts)
        .map(|(&v, &a)| if a == 0 { 0.0 } else { 1.0 - v as f64 / a as f64 })
        .collect();
    let leaf_count = amodal_counts.iter().filter(|&&a| a > 0).count();
    let plant_mask = BinaryMask::from_bits(w, h, labels.iter().map(|&id| id != 0).collect()).expect("label size");
    let far = cam.height;
    let near = (cam.height - model.max_z()).min(far);
    let skeleton = model.skeleton.clone();
    let skeleton_2d = skeleton
        .nodes
        .iter()
        .map(|node| cam.project(node.position).map(|(pixel, depth)| ProjectedNode { pixel, depth }))
        .collect();
    SampleBundle {
        label_vis: label_vis(&labels, w, h, n),
        rgb,
        depth: DepthMap { width: w, height: h, values: buf.depth, near, far },
        labels,
        plant_mask,
        amodal_masks,
        visible_counts,
        amodal_counts,
        occlusion_ratios,
        leaf_count,
        leaf_centers,
        skeleton,
        skeleton_2d,
        trunk_id: trunk_id(n),
    }
}
