//! Plant assembly: leaves posed at nodes along a vertical trunk.
//!
//! World frame: z is up, the trunk runs from the origin to
//! `(0, 0, plant_height)` and the camera looks down from above.

mod params;

use nalgebra::{Matrix4, Point3, Rotation3, Translation3, Vector3};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::leafgeom::{LeafGeometry, LeafPool};

pub use params::{
    linear_scale_curve, sample_plant_params, AssemblyConfig, IntRange, LeafSelection, NormalDist, PlantParams, RealRange,
};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssemblyError {
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("{0} pool is empty")]
    EmptyPool(&'static str),
    #[error("single_leaf_id {0} is outside the leaf pool")]
    LeafIdOutOfRange(usize),
}

/// Per-leaf draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafInstance {
    pub geometry_ref: usize,
    pub texture_ref: usize,
    pub node_index: u32,
    /// Phyllotaxy angle in [0, 2π).
    pub phyllotaxy: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub axil: f64,
    pub stem_length: f64,
    pub scale: Vec3,
}

/// Canonical 2-D leaf point lifted into the leaf's local 3-D frame: tip
/// along +y, lying in z = 0 facing +z.
pub fn lift_canonical(p: [f64; 2]) -> Point3<f64> {
    Point3::new(p[0], -p[1], 0.0)
}

/// Local → world transform of a leaf: scale, intrinsic yaw-pitch-roll
/// (tip direction turned onto the stem direction first), axil tilt of the
/// stem out of the horizontal, phyllotaxy about the trunk, lift to the node.
/// Positive pitch droops the tip; positive axil raises the stem.
pub fn leaf_world_transform(inst: &LeafInstance, params: &PlantParams) -> Matrix4<f64> {
    let len = params.leaf_length;
    let scale = Matrix4::new_nonuniform_scaling(&Vector3::new(len * inst.scale[0], len * inst.scale[1], len * inst.scale[2]));
    let tip_outward = Rotation3::from_axis_angle(&Vector3::z_axis(), -std::f64::consts::FRAC_PI_2);
    let attitude = Rotation3::from_axis_angle(&Vector3::z_axis(), inst.yaw)
        * Rotation3::from_axis_angle(&Vector3::y_axis(), inst.pitch)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), inst.roll);
    let stem = Translation3::new(inst.stem_length, 0.0, 0.0);
    let axil = Rotation3::from_axis_angle(&Vector3::y_axis(), -inst.axil);
    let phyllotaxy = Rotation3::from_axis_angle(&Vector3::z_axis(), inst.phyllotaxy);
    let node = Translation3::new(0.0, 0.0, params.node_height(inst.node_index));
    node.to_homogeneous()
        * phyllotaxy.to_homogeneous()
        * axil.to_homogeneous()
        * stem.to_homogeneous()
        * attitude.to_homogeneous()
        * tip_outward.to_homogeneous()
        * scale
}

/// Trunk attachment, petiole junction (stem midpoint) and leaf base.
pub fn stem_chain(inst: &LeafInstance, params: &PlantParams) -> [Vec3; 3] {
    let z = params.node_height(inst.node_index);
    let (sp, cp) = inst.phyllotaxy.sin_cos();
    let (sa, ca) = inst.axil.sin_cos();
    let l = inst.stem_length;
    let base = [l * ca * cp, l * ca * sp, z + l * sa];
    let mid = [0.5 * base[0], 0.5 * base[1], 0.5 * (z + base[2])];
    [[0.0, 0.0, z], mid, base]
}

/// Node index drawn uniformly; scale = node curve × per-axis jitter.
pub fn assign_node_and_scale<R: Rng + ?Sized>(_leaf_index: usize, params: &PlantParams, rng: &mut R) -> (u32, Vec3) {
    let node = rng.random_range(0..params.n_nodes);
    let base = params.node_scale_curve[node as usize];
    let j = params.leaf_scale_jitter;
    (node, [base * j.sample(rng), base * j.sample(rng), base * j.sample(rng)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "leaf", rename_all = "kebab-case")]
pub enum SkeletonNodeKind {
    TrunkBase,
    TrunkTop,
    Attachment(usize),
    Petiole(usize),
    Tip(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonNode {
    #[serde(flatten)]
    pub kind: SkeletonNodeKind,
    pub position: Vec3,
}

/// Tree rooted at the trunk base. Each leaf contributes attachment →
/// petiole → tip, with the attachment hung off the trunk base.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SkeletonGraph {
    pub nodes: Vec<SkeletonNode>,
    pub edges: Vec<[u32; 2]>,
}

impl SkeletonGraph {
    pub fn leaf_points(&self, leaf: usize) -> Option<[Vec3; 3]> {
        let find = |k: SkeletonNodeKind| self.nodes.iter().find(|n| n.kind == k).map(|n| n.position);
        Some([
            find(SkeletonNodeKind::Attachment(leaf))?,
            find(SkeletonNodeKind::Petiole(leaf))?,
            find(SkeletonNodeKind::Tip(leaf))?,
        ])
    }

    /// Connected with `edges = nodes − 1`.
    pub fn is_tree(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 || self.edges.len() != n - 1 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for &[a, b] in &self.edges {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// A leaf with world-space geometry. `vertices` and `uv` are parallel to
/// the source mesh vertices; `uv` are the canonical 2-D coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosedLeaf {
    pub instance: LeafInstance,
    pub source_id: String,
    pub vertices: Vec<Vec3>,
    pub uv: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
    /// World-space unit normal of the blade's upper face.
    pub normal: Vec3,
    pub stem: [Vec3; 3],
    pub tip: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub params: PlantParams,
    pub leaves: Vec<PosedLeaf>,
    pub trunk: [Vec3; 2],
    pub skeleton: SkeletonGraph,
}

impl PlantModel {
    pub fn empty(params: PlantParams) -> Self {
        let trunk = [[0.0; 3], [0.0, 0.0, params.plant_height]];
        PlantModel { params, leaves: Vec::new(), trunk, skeleton: SkeletonGraph::default() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plant models always serialize")
    }

    pub fn max_z(&self) -> f64 {
        self.leaves
            .iter()
            .flat_map(|l| l.vertices.iter().map(|v| v[2]).chain(l.stem.iter().map(|s| s[2])))
            .chain([self.trunk[1][2]])
            .fold(0.0, f64::max)
    }
}

/// Applies the pose to `geometry`. Vertices that would dip below the
/// ground plane are clamped to z = 0.
pub fn pose_leaf(inst: LeafInstance, geometry: &LeafGeometry, params: &PlantParams) -> PosedLeaf {
    let m = leaf_world_transform(&inst, params);
    let to_world = |p: [f64; 2]| {
        let w = m.transform_point(&lift_canonical(p));
        [w.x, w.y, w.z.max(0.0)]
    };
    let vertices = geometry.mesh.vertices.iter().map(|&p| to_world(p)).collect();
    let n = m.fixed_view::<3, 3>(0, 0).try_inverse().map_or(Vector3::z(), |inv| inv.transpose() * Vector3::z());
    let n = n.try_normalize(1e-300).unwrap_or(Vector3::z());
    let stem = stem_chain(&inst, params);
    PosedLeaf {
        tip: to_world(geometry.tip_point),
        source_id: geometry.source_id.clone(),
        vertices,
        uv: geometry.mesh.vertices.clone(),
        triangles: geometry.mesh.triangles.clone(),
        normal: [n.x, n.y, n.z],
        stem,
        instance: inst,
    }
}

/// Draws N leaves from the pool, poses them and builds the skeleton.
pub fn assemble_plant<R: Rng + ?Sized>(
    pool: &LeafPool,
    n_textures: usize,
    params: &PlantParams,
    rng: &mut R,
) -> Result<PlantModel, AssemblyError> {
    params.validate()?;
    if pool.leaves.is_empty() {
        return Err(AssemblyError::EmptyPool("leaf"));
    }
    if n_textures == 0 {
        return Err(AssemblyError::EmptyPool("texture"));
    }
    if let Some(id) = params.single_leaf_id {
        if id >= pool.leaves.len() {
            return Err(AssemblyError::LeafIdOutOfRange(id));
        }
    }
    let n = params.n_leaves as usize;
    let mut deck: Vec<usize> = (0..pool.leaves.len()).collect();
    if params.leaf_selection == LeafSelection::WithoutReplacement {
        deck.shuffle(rng);
    }
    let mut model = PlantModel::empty(params.clone());
    let mut skeleton = SkeletonGraph {
        nodes: vec![
            SkeletonNode { kind: SkeletonNodeKind::TrunkBase, position: model.trunk[0] },
            SkeletonNode { kind: SkeletonNodeKind::TrunkTop, position: model.trunk[1] },
        ],
        edges: vec![[0, 1]],
    };
    for i in 0..n {
        let (node_index, scale) = assign_node_and_scale(i, params, rng);
        let phyllotaxy = rng.random_range(0.0..std::f64::consts::TAU);
        let roll = params.roll.sample(rng);
        let pitch = params.pitch.sample(rng);
        let yaw = params.yaw.sample(rng);
        let axil = params.axil.sample(rng);
        let stem_length = params.stem_length.sample(rng).max(0.0);
        let drawn = rng.random_range(0..pool.leaves.len());
        let geometry_ref = match (params.single_leaf_id, params.leaf_selection) {
            (Some(id), _) => id,
            (None, LeafSelection::WithReplacement) => drawn,
            (None, LeafSelection::WithoutReplacement) => deck[i % deck.len()],
        };
        let texture_ref = rng.random_range(0..n_textures);
        let inst = LeafInstance {
            geometry_ref,
            texture_ref,
            node_index,
            phyllotaxy,
            roll,
            pitch,
            yaw,
            axil,
            stem_length,
            scale,
        };
        let leaf = pose_leaf(inst, &pool.leaves[geometry_ref], params);
        let base = skeleton.nodes.len() as u32;
        skeleton.nodes.extend([
            SkeletonNode { kind: SkeletonNodeKind::Attachment(i), position: leaf.stem[0] },
            SkeletonNode { kind: SkeletonNodeKind::Petiole(i), position: leaf.stem[1] },
            SkeletonNode { kind: SkeletonNodeKind::Tip(i), position: leaf.tip },
        ]);
        skeleton.edges.extend([[0, base], [base, base + 1], [base + 1, base + 2]]);
        model.leaves.push(leaf);
    }
    model.skeleton = skeleton;
    Ok(model)
}
