//! Plant parameter ranges and their sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AssemblyError;

/// Inclusive integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u32,
    pub max: u32,
}

impl IntRange {
    pub const fn new(min: u32, max: u32) -> Self {
        IntRange { min, max }
    }

    pub const fn point(v: u32) -> Self {
        IntRange { min: v, max: v }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.random_range(self.min..=self.max)
    }
}

/// Inclusive real range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealRange {
    pub min: f64,
    pub max: f64,
}

impl RealRange {
    pub const fn new(min: f64, max: f64) -> Self {
        RealRange { min, max }
    }

    pub const fn point(v: f64) -> Self {
        RealRange { min: v, max: v }
    }

    pub fn is_point(&self) -> bool {
        self.min == self.max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    /// A point range still draws once so the stream position does not
    /// depend on the range width.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if self.is_point() {
            self.min
        } else {
            self.min + u * (self.max - self.min)
        }
    }

    fn ordered(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }
}

/// Normal distribution; `std = 0` is a point mass at `mean`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalDist {
    pub mean: f64,
    pub std: f64,
}

impl NormalDist {
    pub const fn new(mean: f64, std: f64) -> Self {
        NormalDist { mean, std }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        self.mean + self.std * z
    }

    fn scaled(&self, k: f64) -> NormalDist {
        NormalDist::new(self.mean * k, self.std * k)
    }
}

/// How leaves are drawn from the inspiration pool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafSelection {
    #[default]
    WithReplacement,
    /// Distinct leaves while the pool lasts, then the shuffled pool repeats.
    WithoutReplacement,
}

/// Configured ranges and pose distributions. Angles are in degrees and the
/// stem length distribution is relative to the drawn plant height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblyConfig {
    pub n_leaves: IntRange,
    pub n_nodes: IntRange,
    pub plant_height: RealRange,
    pub roll_deg: NormalDist,
    pub pitch_deg: NormalDist,
    pub yaw_deg: NormalDist,
    pub axil_deg: NormalDist,
    pub stem_length: NormalDist,
    /// Leaf length before per-leaf scaling, relative to plant height.
    pub leaf_length: f64,
    /// Per-node scale, linear from `node_scale_bottom` to `node_scale_top`.
    pub node_scale_bottom: f64,
    pub node_scale_top: f64,
    pub leaf_scale_jitter: RealRange,
    pub leaf_selection: LeafSelection,
    /// Fix the per-leaf jitter at 1.
    pub no_leaf_scale: bool,
    /// Fix the plant height at the middle of its range.
    pub no_plant_scale: bool,
    /// Use only this pool leaf for every instance.
    pub single_leaf_id: Option<usize>,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            n_leaves: IntRange::new(4, 16),
            n_nodes: IntRange::new(2, 8),
            plant_height: RealRange::new(0.3, 1.0),
            roll_deg: NormalDist::new(0.0, 10.0),
            pitch_deg: NormalDist::new(25.0, 15.0),
            yaw_deg: NormalDist::new(0.0, 20.0),
            axil_deg: NormalDist::new(40.0, 15.0),
            stem_length: NormalDist::new(0.25, 0.08),
            leaf_length: 0.35,
            node_scale_bottom: 1.0,
            node_scale_top: 0.55,
            leaf_scale_jitter: RealRange::new(0.85, 1.15),
            leaf_selection: LeafSelection::WithReplacement,
            no_leaf_scale: false,
            no_plant_scale: false,
            single_leaf_id: None,
        }
    }
}

impl AssemblyConfig {
    pub fn validate(&self) -> Result<(), AssemblyError> {
        let bad = |what: &str| Err(AssemblyError::InvalidRange(what.to_owned()));
        if self.n_leaves.min < 1 || self.n_leaves.min > self.n_leaves.max {
            return bad("n_leaves");
        }
        if self.n_nodes.min < 1 || self.n_nodes.min > self.n_nodes.max {
            return bad("n_nodes");
        }
        if !self.plant_height.ordered() || self.plant_height.min <= 0.0 {
            return bad("plant_height");
        }
        for (name, d) in [
            ("roll_deg", self.roll_deg),
            ("pitch_deg", self.pitch_deg),
            ("yaw_deg", self.yaw_deg),
            ("axil_deg", self.axil_deg),
            ("stem_length", self.stem_length),
        ] {
            if !d.mean.is_finite() || !d.std.is_finite() || d.std < 0.0 {
                return bad(name);
            }
        }
        if !(self.leaf_length > 0.0 && self.leaf_length.is_finite()) {
            return bad("leaf_length");
        }
        if !(self.node_scale_top > 0.0 && self.node_scale_top <= self.node_scale_bottom && self.node_scale_bottom.is_finite()) {
            return bad("node_scale");
        }
        if !self.leaf_scale_jitter.ordered() || self.leaf_scale_jitter.min <= 0.0 {
            return bad("leaf_scale_jitter");
        }
        Ok(())
    }

    /// Height range after the plant-scale switch.
    pub fn effective_height(&self) -> RealRange {
        if self.no_plant_scale {
            RealRange::point(self.plant_height.midpoint())
        } else {
            self.plant_height
        }
    }

    /// Jitter range after the leaf-scale switch.
    pub fn effective_jitter(&self) -> RealRange {
        if self.no_leaf_scale {
            RealRange::point(1.0)
        } else {
            self.leaf_scale_jitter
        }
    }
}

/// Drawn per-plant quantities plus the per-leaf distributions (radians,
/// scene units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    pub n_leaves: u32,
    pub plant_height: f64,
    pub n_nodes: u32,
    /// `plant_height / (n_nodes − 1)`, 0 for a single node.
    pub node_spacing: f64,
    pub roll: NormalDist,
    pub pitch: NormalDist,
    pub yaw: NormalDist,
    pub axil: NormalDist,
    pub stem_length: NormalDist,
    /// Absolute leaf length before scaling.
    pub leaf_length: f64,
    pub leaf_scale_jitter: RealRange,
    /// Scale multiplier per node, bottom first.
    pub node_scale_curve: Vec<f64>,
    pub leaf_selection: LeafSelection,
    pub single_leaf_id: Option<usize>,
}

impl PlantParams {
    /// `node · d`; the top node can sit an ulp off `plant_height`.
    pub fn node_height(&self, node: u32) -> f64 {
        node as f64 * self.node_spacing
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        let bad = |what: &str| Err(AssemblyError::InvalidRange(what.to_owned()));
        if self.n_leaves < 1 {
            return bad("n_leaves");
        }
        if self.n_nodes < 1 || self.node_scale_curve.len() != self.n_nodes as usize {
            return bad("n_nodes");
        }
        if !(self.plant_height > 0.0) {
            return bad("plant_height");
        }
        if [self.roll, self.pitch, self.yaw, self.axil, self.stem_length].iter().any(|d| !(d.std >= 0.0)) {
            return bad("pose distribution");
        }
        if self.node_scale_curve.windows(2).any(|w| w[1] > w[0]) || self.node_scale_curve.iter().any(|&s| !(s > 0.0)) {
            return bad("node_scale_curve");
        }
        if !self.leaf_scale_jitter.ordered() {
            return bad("leaf_scale_jitter");
        }
        Ok(())
    }
}

pub fn linear_scale_curve(n_nodes: u32, bottom: f64, top: f64) -> Vec<f64> {
    if n_nodes <= 1 {
        return vec![bottom];
    }
    (0..n_nodes)
        .map(|k| bottom + (top - bottom) * k as f64 / (n_nodes - 1) as f64)
        .collect()
}

/// Draws N, height and node count; copies the distributions.
pub fn sample_plant_params<R: Rng + ?Sized>(config: &AssemblyConfig, rng: &mut R) -> Result<PlantParams, AssemblyError> {
    config.validate()?;
    let n_leaves = config.n_leaves.sample(rng);
    let plant_height = config.effective_height().sample(rng);
    let n_nodes = config.n_nodes.sample(rng);
    let node_spacing = if n_nodes > 1 { plant_height / (n_nodes - 1) as f64 } else { 0.0 };
    let deg = |d: NormalDist| d.scaled(std::f64::consts::PI / 180.0);
    Ok(PlantParams {
        n_leaves,
        plant_height,
        n_nodes,
        node_spacing,
        roll: deg(config.roll_deg),
        pitch: deg(config.pitch_deg),
        yaw: deg(config.yaw_deg),
        axil: deg(config.axil_deg),
        stem_length: config.stem_length.scaled(plant_height),
        leaf_length: config.leaf_length * plant_height,
        leaf_scale_jitter: config.effective_jitter(),
        node_scale_curve: linear_scale_curve(n_nodes, config.node_scale_bottom, config.node_scale_top),
        leaf_selection: config.leaf_selection,
        single_leaf_id: config.single_leaf_id,
    })
}
