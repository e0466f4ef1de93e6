//! Pinhole camera and diffuse lighting.

use serde::{Deserialize, Serialize};

use crate::assembly::Vec3;

/// Top-down pinhole camera at `(0, 0, height)` looking along −z. World +x
/// maps to image right and world +y to image up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub height: f64,
    pub fov_y_deg: f64,
    pub width: usize,
    pub image_height: usize,
}

impl Camera {
    pub fn new(height: f64, fov_y_deg: f64, width: usize, image_height: usize) -> Self {
        Camera { height, fov_y_deg, width, image_height }
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.image_height as f64 / (0.5 * self.fov_y_deg.to_radians()).tan()
    }

    pub fn principal_point(&self) -> [f64; 2] {
        [(self.width as f64 - 1.0) / 2.0, (self.image_height as f64 - 1.0) / 2.0]
    }

    pub fn is_valid(&self) -> bool {
        self.width >= 1
            && self.image_height >= 1
            && self.height > 0.0
            && self.height.is_finite()
            && self.fov_y_deg > 0.0
            && self.fov_y_deg < 180.0
    }

    /// Distance along the viewing axis from the camera to `p`.
    pub fn depth_of(&self, p: Vec3) -> f64 {
        self.height - p[2]
    }

    /// Pixel coordinates (pixel centres at integers) and depth, or `None`
    /// for points at or behind the camera plane.
    pub fn project(&self, p: Vec3) -> Option<([f64; 2], f64)> {
        let d = self.depth_of(p);
        if d <= 1e-9 {
            return None;
        }
        let f = self.focal();
        let [cx, cy] = self.principal_point();
        Some(([cx + f * p[0] / d, cy - f * p[1] / d], d))
    }

    /// World point on the ray through pixel `(u, v)` at viewing depth `d`.
    pub fn unproject(&self, u: f64, v: f64, d: f64) -> Vec3 {
        let f = self.focal();
        let [cx, cy] = self.principal_point();
        [(u - cx) * d / f, -(v - cy) * d / f, self.height - d]
    }

    pub fn position(&self) -> Vec3 {
        [0.0, 0.0, self.height]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum DiffuseModel {
    Lambert,
    OrenNayar { roughness: f64 },
}

/// One directional light plus ambient. `direction` points from the surface
/// toward the light.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightRig {
    pub direction: Vec3,
    pub intensity: f64,
    pub ambient: f64,
    pub diffuse: DiffuseModel,
}

impl LightRig {
    pub fn new(direction: Vec3, intensity: f64, ambient: f64, diffuse: DiffuseModel) -> Self {
        LightRig { direction: normalize(direction), intensity, ambient, diffuse }
    }

    /// Light from elevation/azimuth in degrees.
    pub fn from_angles(elevation_deg: f64, azimuth_deg: f64, intensity: f64, ambient: f64, diffuse: DiffuseModel) -> Self {
        let (se, ce) = elevation_deg.to_radians().sin_cos();
        let (sa, ca) = azimuth_deg.to_radians().sin_cos();
        Self::new([ce * ca, ce * sa, se], intensity, ambient, diffuse)
    }

    pub fn overhead() -> Self {
        Self::new([0.0, 0.0, 1.0], 0.8, 0.3, DiffuseModel::Lambert)
    }
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn normalize(v: Vec3) -> Vec3 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        [v[0] / n, v[1] / n, v[2] / n]
    } else {
        v
    }
}

/// Diffuse reflectance. Lambert: `albedo·(ambient + intensity·max(0, n·ℓ))`.
/// Oren-Nayar uses the two-term qualitative model, which is Lambert at
/// zero roughness.
pub fn shade_diffuse(normal: Vec3, light: &LightRig, view_dir: Vec3, albedo: [f64; 3]) -> [f64; 3] {
    let l = light.direction;
    let cos_i = dot(normal, l);
    let direct = if cos_i <= 0.0 {
        0.0
    } else {
        match light.diffuse {
            DiffuseModel::Lambert => cos_i,
            DiffuseModel::OrenNayar { roughness } => {
                let s2 = roughness * roughness;
                let a = 1.0 - 0.5 * s2 / (s2 + 0.33);
                let b = 0.45 * s2 / (s2 + 0.09);
                if b == 0.0 {
                    cos_i * a
                } else {
                    let cos_r = dot(normal, view_dir).clamp(-1.0, 1.0);
                    let theta_i = cos_i.clamp(-1.0, 1.0).acos();
                    let theta_r = cos_r.acos();
                    let alpha = theta_i.max(theta_r);
                    let beta = theta_i.min(theta_r);
                    let proj = |d: Vec3, c: f64| [d[0] - c * normal[0], d[1] - c * normal[1], d[2] - c * normal[2]];
                    let lp = proj(l, cos_i);
                    let vp = proj(view_dir, cos_r);
                    let denom = (dot(lp, lp) * dot(vp, vp)).sqrt();
                    let cos_phi = if denom > 1e-12 { (dot(lp, vp) / denom).max(0.0) } else { 0.0 };
                    cos_i * (a + b * cos_phi * alpha.sin() * beta.tan())
                }
            }
        }
    };
    let k = light.ambient + light.intensity * direct;
    albedo.map(|c| c * k)
}
