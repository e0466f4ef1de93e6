//! Generator configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::GenerateError;
use crate::assembly::{AssemblyConfig, RealRange};
use crate::render::{Camera, RenderOptions};

/// Where sample backgrounds come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackgroundMode {
    /// Plain black.
    None,
    /// Augmented patches from a background texture pool.
    #[default]
    Pool,
    /// Unaugmented images from a directory, resized to the frame.
    External,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolPaths {
    pub leaves: PathBuf,
    pub leaf_textures: PathBuf,
    /// Background pool file, or an image directory in `external` mode.
    pub backgrounds: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub fov_y_deg: f64,
    /// Camera height as a multiple of the largest configured plant height.
    pub height_factor: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig { fov_y_deg: 40.0, height_factor: 2.2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightConfig {
    pub elevation_deg: RealRange,
    pub azimuth_deg: RealRange,
    pub intensity: RealRange,
    pub ambient: RealRange,
    /// Chance of Oren-Nayar instead of Lambert shading.
    pub oren_nayar_probability: f64,
    pub roughness: RealRange,
}

impl Default for LightConfig {
    fn default() -> Self {
        LightConfig {
            elevation_deg: RealRange::new(40.0, 90.0),
            azimuth_deg: RealRange::new(0.0, 360.0),
            intensity: RealRange::new(0.7, 1.0),
            ambient: RealRange::new(0.2, 0.4),
            oren_nayar_probability: 0.5,
            roughness: RealRange::new(0.0, 0.5),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentToggles {
    pub leaf_textures: bool,
    pub backgrounds: bool,
}

impl Default for AugmentToggles {
    fn default() -> Self {
        AugmentToggles { leaf_textures: true, backgrounds: true }
    }
}

/// Full generator configuration. Relative pool paths resolve against
/// `base_dir`, which is the config file's directory when loaded from disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub master_seed: u64,
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub background: BackgroundMode,
    /// Leaves take a uniform green albedo instead of a texture.
    pub flat_green_leaf: bool,
    pub pools: PoolPaths,
    pub camera: CameraConfig,
    pub light: LightConfig,
    pub assembly: AssemblyConfig,
    pub render: RenderOptions,
    pub augment: AugmentToggles,
    /// Worker threads; 0 uses every core. Never affects outputs.
    #[serde(skip_serializing)]
    pub workers: usize,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            master_seed: 0,
            count: 10_000,
            width: 550,
            height: 550,
            background: BackgroundMode::Pool,
            flat_green_leaf: false,
            pools: PoolPaths::default(),
            camera: CameraConfig::default(),
            light: LightConfig::default(),
            assembly: AssemblyConfig::default(),
            render: RenderOptions::default(),
            augment: AugmentToggles::default(),
            workers: 0,
            base_dir: PathBuf::from("."),
        }
    }
}

fn ordered(r: RealRange) -> bool {
    r.min.is_finite() && r.max.is_finite() && r.min <= r.max
}

impl GeneratorConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, GenerateError> {
        let mut cfg: GeneratorConfig = toml::from_str(text).map_err(|e| GenerateError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, GenerateError> {
        let text = std::fs::read_to_string(path).map_err(|e| super::io_err(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// TOML text of everything that influences outputs.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |m: &str| Err(GenerateError::Config(m.to_owned()));
        if self.count < 1 {
            return bad("count must be at least 1");
        }
        if self.width < 1 || self.height < 1 {
            return bad("image size must be at least 1x1");
        }
        if !(self.camera.fov_y_deg > 0.0 && self.camera.fov_y_deg < 180.0) {
            return bad("camera.fov_y_deg must lie in (0, 180)");
        }
        if !(self.camera.height_factor > 1.0 && self.camera.height_factor.is_finite()) {
            return bad("camera.height_factor must exceed 1");
        }
        let l = &self.light;
        for (name, r) in [
            ("light.elevation_deg", l.elevation_deg),
            ("light.azimuth_deg", l.azimuth_deg),
            ("light.intensity", l.intensity),
            ("light.ambient", l.ambient),
            ("light.roughness", l.roughness),
        ] {
            if !ordered(r) {
                return Err(GenerateError::Config(format!("{name}: bounds must be finite and ordered")));
            }
        }
        if l.intensity.min < 0.0 || l.ambient.min < 0.0 || l.roughness.min < 0.0 {
            return bad("light intensities and roughness must be non-negative");
        }
        if !(0.0..=1.0).contains(&l.oren_nayar_probability) {
            return bad("light.oren_nayar_probability must lie in [0, 1]");
        }
        if !(self.render.stem_width > 0.0) || !(0.0..=1.0).contains(&self.render.stem_darken) {
            return bad("render.stem_width must be positive and render.stem_darken in [0, 1]");
        }
        if self.background != BackgroundMode::None && self.pools.backgrounds.is_none() {
            return bad("pools.backgrounds is required unless background = \"none\"");
        }
        self.assembly.validate().map_err(|e| GenerateError::Config(format!("assembly: {e}")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_relative() {
            self.base_dir.join(p)
        } else {
            p.to_path_buf()
        }
    }

    /// One camera for the whole dataset, high enough for the tallest plant.
    /// Copy whose pool paths no longer depend on `base_dir`; the manifest
    /// stores this so it can be reloaded from the dataset directory.
    pub fn with_absolute_pools(&self) -> GeneratorConfig {
        let abs = |p: &Path| {
            let p = self.resolve(p);
            std::path::absolute(&p).unwrap_or(p)
        };
        let mut cfg = self.clone();
        cfg.pools.leaves = abs(&self.pools.leaves);
        cfg.pools.leaf_textures = abs(&self.pools.leaf_textures);
        cfg.pools.backgrounds = self.pools.backgrounds.as_deref().map(abs);
        cfg
    }

    pub fn camera(&self) -> Camera {
        Camera::new(self.camera.height_factor * self.assembly.plant_height.max, self.camera.fov_y_deg, self.width, self.height)
    }
}
