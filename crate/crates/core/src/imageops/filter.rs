use super::raster::round_u8;
use super::RasterImage;

/// Normalized 1-D Gaussian taps for radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders. `sigma <= 0` is the identity.
pub fn gaussian_blur(image: &RasterImage, sigma: f64) -> RasterImage {
    if sigma <= 0.0 || !sigma.is_finite() {
        return image.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h, c) = (image.width(), image.height(), image.channels());
    let src = image.data();
    let mut tmp = vec![0.0f64; w * h * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let sx = (x as i64 + j as i64 - r).clamp(0, w as i64 - 1) as usize;
                    acc += kv * f64::from(src[(y * w + sx) * c + ch]);
                }
                tmp[(y * w + x) * c + ch] = acc;
            }
        }
    }
    let mut out = image.clone();
    let dst = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let sy = (y as i64 + j as i64 - r).clamp(0, h as i64 - 1) as usize;
                    acc += kv * tmp[(sy * w + x) * c + ch];
                }
                dst[(y * w + x) * c + ch] = round_u8(acc);
            }
        }
    }
    out
}

/// RGB in `[0, 255]` to (hue in degrees `[0, 360)`, saturation, value) with
/// saturation and value scaled to `[0, 255]`.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { 255.0 * delta / max };
    [h, s, max]
}

pub fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let s = s / 255.0;
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Additive HSV jitter. Hue deltas are in 1/256 of a turn and wrap; saturation
/// and value deltas are on the 0–255 scale and clamp.
pub fn hsv_jitter(image: &RasterImage, dh: i32, ds: i32, dv: i32) -> RasterImage {
    let mut out = image.to_rgb();
    let dh_deg = f64::from(dh) * 360.0 / 256.0;
    for px in out.data_mut().chunks_exact_mut(3) {
        let [h, s, v] = rgb_to_hsv([px[0], px[1], px[2]].map(f64::from));
        let hsv = [
            (h + dh_deg).rem_euclid(360.0),
            (s + f64::from(ds)).clamp(0.0, 255.0),
            (v + f64::from(dv)).clamp(0.0, 255.0),
        ];
        let rgb = hsv_to_rgb(hsv);
        for (o, v) in px.iter_mut().zip(rgb) {
            *o = round_u8(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_sigma_zero_identity() {
        let img = RasterImage::from_fn_rgb(5, 4, |x, y| [(x * 40) as u8, (y * 50) as u8, 7]);
        assert_eq!(gaussian_blur(&img, 0.0), img);
    }

    #[test]
    fn blur_uniform_unchanged() {
        let img = RasterImage::filled(12, 9, &[90, 120, 30]);
        assert_eq!(gaussian_blur(&img, 2.3), img);
    }

    #[test]
    fn blur_impulse_matches_direct_2d() {
        let mut img = RasterImage::filled(15, 15, &[0]);
        img.pixel_mut(7, 7)[0] = 255;
        let out = gaussian_blur(&img, 1.0);
        // Direct 2-D kernel normalization over the same square support.
        let mut sum = 0.0;
        for dy in -3i32..=3 {
            for dx in -3i32..=3 {
                sum += (-f64::from(dx * dx + dy * dy) / 2.0).exp();
            }
        }
        let expect = 255.0 / sum;
        assert!((f64::from(out.pixel(7, 7)[0]) - expect).abs() <= 1.0);
    }

    #[test]
    fn hsv_zero_delta_identity() {
        let img = RasterImage::from_fn_rgb(16, 16, |x, y| [(x * 16) as u8, (y * 16) as u8, ((x + y) * 8) as u8]);
        let out = hsv_jitter(&img, 0, 0, 0);
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((i32::from(*a) - i32::from(*b)).abs() <= 1);
        }
    }

    #[test]
    fn value_delta_on_gray() {
        let img = RasterImage::filled(2, 2, &[128, 128, 128]);
        assert_eq!(hsv_jitter(&img, 0, 0, 10).pixel(0, 0), &[138, 138, 138]);
    }

    #[test]
    fn half_turn_hue_makes_red_cyan() {
        let img = RasterImage::filled(1, 1, &[255, 0, 0]);
        let p = hsv_jitter(&img, 128, 0, 0).rgb(0, 0);
        assert!(p[1] > 200 && p[2] > 200 && p[0] < 30, "{p:?}");
    }
}
