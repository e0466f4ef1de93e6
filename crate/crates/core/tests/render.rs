use plantsynth::assembly::*;
use plantsynth::imageops::RasterImage;
use plantsynth::render::*;
use plantsynth::rng::derive_stream;

fn params() -> PlantParams {
    let cfg = AssemblyConfig { plant_height: RealRange::point(1.0), ..AssemblyConfig::default() };
    sample_plant_params(&cfg, &mut derive_stream(0, 0, "params")).unwrap()
}

/// Axis-aligned square leaf of side `side` centred at `(cx, cy)` at height
/// `z`; its stem collapses to a point just below the blade.
fn square_leaf(cx: f64, cy: f64, side: f64, z: f64) -> PosedLeaf {
    let h = side / 2.0;
    let corners = [[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h]];
    let below = [cx, cy, z - 0.01];
    PosedLeaf {
        instance: LeafInstance {
            geometry_ref: 0,
            texture_ref: 0,
            node_index: 0,
            phyllotaxy: 0.0,
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            axil: 0.0,
            stem_length: 0.0,
            scale: [1.0; 3],
        },
        source_id: "square".into(),
        vertices: corners.iter().map(|c| [c[0], c[1], z]).collect(),
        uv: corners.to_vec(),
        triangles: vec![[0, 1, 2], [0, 2, 3]],
        normal: [0.0, 0.0, 1.0],
        stem: [below; 3],
        tip: [cx, cy + h, z],
    }
}

fn model(leaves: Vec<PosedLeaf>) -> PlantModel {
    let mut m = PlantModel::empty(params());
    // A zero-height trunk is not drawn.
    m.trunk = [[0.0; 3]; 2];
    m.leaves = leaves;
    m
}

/// 200×200 camera under which a unit square at z = 0 spans 100×100 pixels.
fn unit_camera() -> Camera {
    let f = 100.0 / 20f64.to_radians().tan();
    Camera::new(f / 100.0, 40.0, 200, 200)
}

fn textures(n: usize) -> Vec<RasterImage> {
    vec![RasterImage::filled(8, 8, &[60, 160, 60]); n]
}

fn count(ids: &[u16], id: u16) -> usize {
    ids.iter().filter(|&&v| v == id).count()
}

#[test]
fn empty_model_is_all_background() {
    let cam = unit_camera();
    let buf = rasterize(&model(vec![]), &cam, RenderMode::FlatId, &LightRig::overhead(), &[], &RenderOptions::default());
    assert!(buf.ids.iter().all(|&v| v == 0));
    assert!(buf.depth.iter().all(|d| d.is_infinite()));
    assert!(buf.color.data().iter().all(|&c| c == 0));
}

#[test]
fn unit_square_covers_central_block() {
    let cam = unit_camera();
    let m = model(vec![square_leaf(0.0, 0.0, 1.0, 0.0)]);
    let buf = rasterize(&m, &cam, RenderMode::FlatId, &LightRig::overhead(), &[], &RenderOptions::default());
    let n = count(&buf.ids, 1);
    assert!((9_800..=10_200).contains(&n), "{n} pixels");
    assert_eq!(n + count(&buf.ids, 0), buf.ids.len());
    assert_eq!(buf.ids[100 * 200 + 100], 1);
    assert_eq!(buf.ids[100 * 200 + 40], 0);
}

#[test]
fn nearer_leaf_wins_overlap() {
    let cam = Camera::new(5.0, 40.0, 200, 200);
    let low = square_leaf(-0.2, 0.0, 1.0, 1.0);
    let high = square_leaf(0.2, 0.0, 1.0, 2.0);
    for (leaves, top) in [(vec![low.clone(), high.clone()], 2u16), (vec![high, low], 1u16)] {
        let m = model(leaves);
        let buf = rasterize(&m, &cam, RenderMode::FlatId, &LightRig::overhead(), &[], &RenderOptions::default());
        let (a, _) = cam.project([0.0, 0.0, 2.0]).unwrap();
        let centre = (a[1].round() as usize) * 200 + a[0].round() as usize;
        assert_eq!(buf.ids[centre], top);
        assert!((buf.depth[centre] - 3.0).abs() < 1e-9);
    }
}

#[test]
fn separate_leaves_are_all_visible() {
    let cam = Camera::new(4.0, 40.0, 200, 200);
    let m = model(vec![square_leaf(-0.6, 0.0, 0.4, 0.5), square_leaf(0.0, 0.0, 0.4, 0.5), square_leaf(0.6, 0.0, 0.4, 0.5)]);
    let b = render_sample(&m, &cam, &LightRig::overhead(), None, &textures(3), &RenderOptions::default());
    let mut ids: Vec<u16> = b.labels.iter().copied().filter(|&v| v != 0).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids, vec![1, 2, 3]);
    assert_eq!(b.occlusion_ratios, vec![0.0; 3]);
    assert_eq!(b.leaf_count, 3);
    assert_eq!(b.trunk_id, 4);
}

#[test]
fn covered_leaf_is_fully_occluded() {
    let cam = Camera::new(4.0, 40.0, 200, 200);
    let m = model(vec![square_leaf(0.0, 0.0, 0.3, 0.5), square_leaf(0.0, 0.0, 0.8, 1.0)]);
    let b = render_sample(&m, &cam, &LightRig::overhead(), None, &textures(2), &RenderOptions::default());
    assert_eq!(b.visible_counts[0], 0);
    assert!(b.amodal_counts[0] > 0);
    assert_eq!(b.occlusion_ratios[0], 1.0);
    assert_eq!(b.leaf_count, 2);
    assert!(b.leaf_centers[0].is_some());
}

#[test]
fn visible_is_inside_amodal_and_depth_matches_solo() {
    let cam = Camera::new(4.0, 40.0, 160, 120);
    let m = model(vec![square_leaf(-0.2, 0.1, 0.6, 0.3), square_leaf(0.15, 0.0, 0.5, 0.7), square_leaf(0.0, -0.2, 0.4, 0.5)]);
    let b = render_sample(&m, &cam, &LightRig::overhead(), None, &textures(3), &RenderOptions::default());
    for k in 0..3 {
        let (solo, depth) = render_solo(&m, &cam, k, &RenderOptions::default());
        assert_eq!(solo, b.amodal_masks[k]);
        for (i, &id) in b.labels.iter().enumerate() {
            if id as usize == k + 1 {
                assert!(solo.get(i % 160, i / 160));
                assert!((depth[i] - b.depth.values[i]).abs() < 1e-4);
            }
        }
    }
}

#[test]
fn background_is_composited_and_sentinel_encoded() {
    let cam = Camera::new(4.0, 40.0, 64, 64);
    let m = model(vec![square_leaf(0.0, 0.0, 0.5, 0.5)]);
    let bg = RasterImage::filled(64, 64, &[9, 8, 7]);
    let b = render_sample(&m, &cam, &LightRig::overhead(), Some(&bg), &textures(1), &RenderOptions::default());
    let codes = b.depth.encode();
    for (i, &id) in b.labels.iter().enumerate() {
        let px = b.rgb.pixel(i % 64, i / 64);
        if id == 0 {
            assert_eq!(px, &[9, 8, 7]);
            assert_eq!(codes[i], DEPTH_BACKGROUND);
        } else {
            assert!(codes[i] <= DEPTH_MAX_CODE);
            let d = DepthMap::decode(codes[i], b.depth.near, b.depth.far);
            assert!((d - b.depth.values[i]).abs() <= (b.depth.far - b.depth.near) / 65534.0);
        }
    }
}

#[test]
fn separate_stem_labels_use_trunk_id() {
    let cam = Camera::new(4.0, 40.0, 100, 100);
    let mut leaf = square_leaf(0.5, 0.0, 0.3, 0.5);
    leaf.stem = [[0.0, 0.0, 0.4], [0.2, 0.0, 0.45], [0.35, 0.0, 0.5]];
    let mut m = model(vec![leaf]);
    m.trunk = [[0.0; 3], [0.0, 0.0, 0.4]];
    let opts = RenderOptions { separate_stem_labels: true, stem_width: 0.1, ..RenderOptions::default() };
    let b = render_sample(&m, &cam, &LightRig::overhead(), None, &textures(1), &opts);
    assert!(b.labels.contains(&2));
    let (solo, _) = render_solo(&m, &cam, 0, &opts);
    for (i, &id) in b.labels.iter().enumerate() {
        if id == 2 {
            assert!(!solo.get(i % 100, i / 100));
        }
    }
    let joined_opts = RenderOptions { separate_stem_labels: false, ..opts };
    let joined = render_sample(&m, &cam, &LightRig::overhead(), None, &textures(1), &joined_opts);
    assert!(count(&joined.labels, 1) > count(&b.labels, 1));
}

#[test]
fn oren_nayar_without_roughness_is_lambert() {
    let mut rng = derive_stream(5, 0, "shading");
    use rand::Rng;
    let mut unit = || {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-9);
        v.map(|c| c / n)
    };
    for _ in 0..1000 {
        let (n, l, v) = (unit(), unit(), unit());
        let on = LightRig::new(l, 0.9, 0.2, DiffuseModel::OrenNayar { roughness: 0.0 });
        let la = LightRig::new(l, 0.9, 0.2, DiffuseModel::Lambert);
        let a = shade_diffuse(n, &on, v, [0.3, 0.6, 0.9]);
        let b = shade_diffuse(n, &la, v, [0.3, 0.6, 0.9]);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    }
}

#[test]
fn rendering_is_deterministic() {
    let cam = Camera::new(4.0, 40.0, 80, 80);
    let m = model(vec![square_leaf(0.1, 0.0, 0.5, 0.4), square_leaf(-0.1, 0.1, 0.5, 0.6)]);
    let light = LightRig::from_angles(60.0, 30.0, 0.8, 0.3, DiffuseModel::OrenNayar { roughness: 0.3 });
    let a = render_sample(&m, &cam, &light, None, &textures(2), &RenderOptions::default());
    let b = render_sample(&m, &cam, &light, None, &textures(2), &RenderOptions::default());
    assert_eq!(a.rgb, b.rgb);
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.depth.encode(), b.depth.encode());
}
