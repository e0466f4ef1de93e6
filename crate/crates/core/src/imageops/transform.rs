use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::Point2;
use super::raster::round_u8;
use super::{ImageOpsError, RasterImage};

/// Projective map on pixel-center coordinates, stored as a 3×3 homogeneous matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform2D {
    pub matrix: Matrix3<f64>,
}

impl Transform2D {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            matrix: Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0),
        }
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        Self {
            matrix: Matrix3::new(sx, 0.0, 0.0, 0.0, sy, 0.0, 0.0, 0.0, 1.0),
        }
    }

    /// Rotation by `angle` radians (x toward y) about the origin.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            matrix: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        }
    }

    /// Horizontal shear: x' = x + tan(angle)·y.
    pub fn shear_x(angle: f64) -> Self {
        Self {
            matrix: Matrix3::new(1.0, angle.tan(), 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        }
    }

    /// `self` applied after `first`.
    pub fn then(self, next: Transform2D) -> Transform2D {
        Transform2D {
            matrix: next.matrix * self.matrix,
        }
    }

    /// Conjugates `self` so it acts about `center` instead of the origin.
    pub fn about(self, center: Point2) -> Transform2D {
        Transform2D::translation(-center[0], -center[1])
            .then(self)
            .then(Transform2D::translation(center[0], center[1]))
    }

    pub fn is_affine(&self) -> bool {
        let m = &self.matrix;
        m[(2, 0)] == 0.0 && m[(2, 1)] == 0.0 && m[(2, 2)] == 1.0
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let v = self.matrix * Vector3::new(p[0], p[1], 1.0);
        [v.x / v.z, v.y / v.z]
    }

    pub fn inverse(&self) -> Result<Transform2D, ImageOpsError> {
        if self.is_affine() {
            let det = self.matrix.fixed_view::<2, 2>(0, 0).determinant();
            if det.abs() <= 1e-9 {
                return Err(ImageOpsError::SingularTransform);
            }
        }
        self.matrix
            .try_inverse()
            .filter(|m| m.iter().all(|v| v.is_finite()))
            .map(|matrix| Transform2D { matrix })
            .ok_or(ImageOpsError::SingularTransform)
    }

    /// Homography taking each `from[i]` to `to[i]`.
    pub fn from_quad(from: [Point2; 4], to: [Point2; 4]) -> Result<Transform2D, ImageOpsError> {
        let mut a = SMatrix::<f64, 8, 8>::zeros();
        let mut b = SVector::<f64, 8>::zeros();
        for i in 0..4 {
            let [x, y] = from[i];
            let [u, v] = to[i];
            let r = 2 * i;
            a.fixed_view_mut::<1, 8>(r, 0)
                .copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
            a.fixed_view_mut::<1, 8>(r + 1, 0)
                .copy_from_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
            b[r] = u;
            b[r + 1] = v;
        }
        let h = a.lu().solve(&b).ok_or(ImageOpsError::SingularTransform)?;
        Ok(Transform2D {
            matrix: Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0),
        })
    }
}

/// Inverse-mapped bilinear resampling: output pixel `p` reads source
/// location `t⁻¹(p)`; taps outside the source read `border`.
pub fn warp(image: &RasterImage, t: &Transform2D, out_size: (usize, usize), border: &[u8]) -> Result<RasterImage, ImageOpsError> {
    let inv = t.inverse()?;
    let (w, h) = out_size;
    let c = image.channels();
    assert_eq!(border.len(), c, "border color must match channel count");
    let mut out = RasterImage::new(w, h, c, vec![0; w * h * c])?;
    let mut buf = vec![0.0; c];
    for y in 0..h {
        for x in 0..w {
            let v = inv.matrix * Vector3::new(x as f64, y as f64, 1.0);
            let dst = out.pixel_mut(x, y);
            if v.z.abs() < 1e-12 || v.z < 0.0 && !inv.is_affine() {
                dst.copy_from_slice(border);
                continue;
            }
            image.sample_bilinear(v.x / v.z, v.y / v.z, border, &mut buf);
            for (o, &s) in dst.iter_mut().zip(&buf) {
                *o = round_u8(s);
            }
        }
    }
    Ok(out)
}

/// Per-side crop (negative) or pad (positive) as a fraction of the image
/// dimension, then resampled back to the input size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SideFractions {
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
    pub left: f64,
}

impl SideFractions {
    pub fn max_abs(&self) -> f64 {
        [self.top, self.right, self.bottom, self.left]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

/// Forward map from source pixel coordinates to the output of `crop_or_pad`.
pub fn crop_or_pad_transform(width: usize, height: usize, f: &SideFractions) -> Result<Transform2D, ImageOpsError> {
    let (w, h) = (width as f64, height as f64);
    let new_w = w * (1.0 + f.left + f.right);
    let new_h = h * (1.0 + f.top + f.bottom);
    if new_w.round() < 1.0 || new_h.round() < 1.0 {
        return Err(ImageOpsError::EmptyResult);
    }
    // Continuous extent of the new canvas in source coordinates (pixel i
    // covers [i - 0.5, i + 0.5]).
    let x0 = -0.5 - f.left * w;
    let y0 = -0.5 - f.top * h;
    let sx = w / new_w;
    let sy = h / new_h;
    Ok(Transform2D::translation(-x0, -y0)
        .then(Transform2D::scale(sx, sy))
        .then(Transform2D::translation(-0.5, -0.5)))
}

pub fn crop_or_pad(image: &RasterImage, f: &SideFractions, fill: &[u8]) -> Result<RasterImage, ImageOpsError> {
    let t = crop_or_pad_transform(image.width(), image.height(), f)?;
    warp(image, &t, (image.width(), image.height()), fill)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image(w: usize, h: usize) -> RasterImage {
        RasterImage::from_fn_rgb(w, h, |x, y| [(x * 37 % 256) as u8, (y * 53 % 256) as u8, ((x * y) % 256) as u8])
    }

    #[test]
    fn identity_is_byte_exact() {
        let img = test_image(13, 9);
        let out = warp(&img, &Transform2D::identity(), (13, 9), &[0, 0, 0]).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn translation_shifts_columns() {
        let img = test_image(10, 10);
        let out = warp(&img, &Transform2D::translation(5.0, 0.0), (10, 10), &[1, 2, 3]).unwrap();
        for y in 0..10 {
            for x in 0..10 {
                if x >= 5 {
                    assert_eq!(out.pixel(x, y), img.pixel(x - 5, y));
                } else {
                    assert_eq!(out.pixel(x, y), &[1, 2, 3]);
                }
            }
        }
    }

    #[test]
    fn four_quarter_turns_restore_image() {
        let img = test_image(16, 16);
        let rot = Transform2D::rotation(std::f64::consts::FRAC_PI_2).about([7.5, 7.5]);
        let mut cur = img.clone();
        for _ in 0..4 {
            cur = warp(&cur, &rot, (16, 16), &[0, 0, 0]).unwrap();
        }
        for (a, b) in cur.data().iter().zip(img.data()) {
            assert!((i32::from(*a) - i32::from(*b)).abs() <= 2);
        }
    }

    #[test]
    fn singular_rejected() {
        let t = Transform2D::scale(0.0, 1.0);
        let img = test_image(4, 4);
        assert!(matches!(warp(&img, &t, (4, 4), &[0, 0, 0]), Err(ImageOpsError::SingularTransform)));
    }

    #[test]
    fn zero_fractions_identity() {
        let img = test_image(11, 7);
        let out = crop_or_pad(&img, &SideFractions::default(), &[0, 0, 0]).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn crop_quarter_each_side_maps_center() {
        let f = SideFractions {
            top: -0.25,
            right: -0.25,
            bottom: -0.25,
            left: -0.25,
        };
        let t = crop_or_pad_transform(100, 100, &f).unwrap();
        // Output pixel u samples source 24.5 + (u + 0.5) / 2.
        let inv = t.inverse().unwrap();
        for u in [0.0, 10.0, 99.0] {
            let p = inv.apply([u, u]);
            let expect = 24.5 + (u + 0.5) * 0.5;
            assert!((p[0] - expect).abs() < 1e-9 && (p[1] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn over_crop_is_empty() {
        let img = test_image(10, 10);
        let f = SideFractions {
            left: -0.5,
            right: -0.5,
            ..Default::default()
        };
        assert!(matches!(crop_or_pad(&img, &f, &[0, 0, 0]), Err(ImageOpsError::EmptyResult)));
    }

    #[test]
    fn quad_homography_maps_corners() {
        let from = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]];
        let to = [[1.0, 0.5], [9.0, 0.0], [10.0, 9.0], [0.0, 10.0]];
        let h = Transform2D::from_quad(from, to).unwrap();
        for i in 0..4 {
            let p = h.apply(from[i]);
            assert!((p[0] - to[i][0]).abs() < 1e-9 && (p[1] - to[i][1]).abs() < 1e-9);
        }
    }
}
