//! Diffusion inpainting of masked regions.

use crate::imageops::{BinaryMask, RasterImage};

use super::TextureError;

pub const MAX_ITERATIONS: usize = 500;
pub const TOLERANCE: f64 = 0.5;

const NEIGHBOURS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Replaces masked pixels with a diffusion fill. Pixels are first seeded
/// from the nearest unmasked pixels along their row and column, weighted by
/// inverse distance (pixels with none fall back to ring-by-ring averaging
/// inward from the mask border), then relaxed by repeated 3×3 averaging
/// until no value moves more than [`TOLERANCE`] or [`MAX_ITERATIONS`]
/// sweeps have run.
pub fn inpaint_background(image: &RasterImage, plant_mask: &BinaryMask) -> Result<RasterImage, TextureError> {
    let (w, h, c) = (image.width(), image.height(), image.channels());
    if plant_mask.width() != w || plant_mask.height() != h {
        return Err(TextureError::SizeMismatch);
    }
    if plant_mask.count() == w * h {
        return Err(TextureError::FullMask);
    }
    if plant_mask.is_empty() {
        return Ok(image.clone());
    }
    let mut values: Vec<f64> = image.data().iter().map(|&v| f64::from(v)).collect();
    let mut known: Vec<bool> = plant_mask.bits().iter().map(|&m| !m).collect();
    let neighbours = |x: usize, y: usize| {
        NEIGHBOURS.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            (nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h).then(|| ny as usize * w + nx as usize)
        })
    };

    // Axis-line seeding.
    let mut pending = Vec::new();
    for (x, y) in plant_mask.iter_set() {
        let mut sum = vec![0.0; c];
        let mut wsum = 0.0;
        for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (mut nx, mut ny, mut d) = (x as i64 + dx, y as i64 + dy, 1.0);
            while nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                let j = ny as usize * w + nx as usize;
                if !plant_mask.bits()[j] {
                    for k in 0..c {
                        sum[k] += values[j * c + k] / d;
                    }
                    wsum += 1.0 / d;
                    break;
                }
                nx += dx;
                ny += dy;
                d += 1.0;
            }
        }
        let i = y * w + x;
        if wsum > 0.0 {
            for k in 0..c {
                values[i * c + k] = sum[k] / wsum;
            }
            known[i] = true;
        } else {
            pending.push(i);
        }
    }

    // Onion peel: each ring averages only the pixels settled before it.
    while !pending.is_empty() {
        let mut ring = Vec::new();
        let mut rest = Vec::new();
        for &i in &pending {
            let (x, y) = (i % w, i / w);
            let mut sum = vec![0.0; c];
            let mut n = 0.0;
            for j in neighbours(x, y).filter(|&j| known[j]) {
                for k in 0..c {
                    sum[k] += values[j * c + k];
                }
                n += 1.0;
            }
            if n > 0.0 {
                ring.push((i, sum.into_iter().map(|s| s / n).collect::<Vec<_>>()));
            } else {
                rest.push(i);
            }
        }
        for (i, v) in ring {
            values[i * c..(i + 1) * c].copy_from_slice(&v);
            known[i] = true;
        }
        pending = rest;
    }

    // Gauss-Seidel relaxation over the masked pixels.
    let masked: Vec<usize> = plant_mask.iter_set().map(|(x, y)| y * w + x).collect();
    for _ in 0..MAX_ITERATIONS {
        let mut max_change: f64 = 0.0;
        for &i in &masked {
            let (x, y) = (i % w, i / w);
            let mut sum = [0.0; 3];
            let mut n = 0.0;
            for j in neighbours(x, y) {
                for k in 0..c {
                    sum[k] += values[j * c + k];
                }
                n += 1.0;
            }
            for k in 0..c {
                let v = sum[k] / n;
                max_change = max_change.max((v - values[i * c + k]).abs());
                values[i * c + k] = v;
            }
        }
        if max_change < TOLERANCE {
            break;
        }
    }

    let mut out = image.clone();
    let data = out.data_mut();
    for &i in &masked {
        for k in 0..c {
            data[i * c + k] = values[i * c + k].round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_mask(w: usize, h: usize, x0: usize, y0: usize, s: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| (x0..x0 + s).contains(&x) && (y0..y0 + s).contains(&y))
    }

    #[test]
    fn empty_mask_is_identity() {
        let img = RasterImage::from_fn_rgb(10, 10, |x, y| [x as u8, y as u8, 7]);
        assert_eq!(inpaint_background(&img, &BinaryMask::new(10, 10)).unwrap(), img);
    }

    #[test]
    fn full_mask_rejected() {
        let img = RasterImage::filled(4, 4, &[1, 2, 3]);
        let mask = BinaryMask::from_fn(4, 4, |_, _| true);
        assert!(matches!(inpaint_background(&img, &mask), Err(TextureError::FullMask)));
    }

    #[test]
    fn uniform_stays_uniform() {
        let img = RasterImage::filled(30, 20, &[40, 100, 200]);
        let out = inpaint_background(&img, &square_mask(30, 20, 5, 5, 10)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn gradient_fill_is_linear() {
        let (w, h) = (64, 48);
        let img = RasterImage::from_fn_rgb(w, h, |x, _| {
            let v = (x * 4) as u8;
            [v, v, v]
        });
        let mask = square_mask(w, h, 22, 14, 20);
        let mut damaged = img.clone();
        for (x, y) in mask.iter_set() {
            damaged.pixel_mut(x, y).copy_from_slice(&[0, 255, 0]);
        }
        let out = inpaint_background(&damaged, &mask).unwrap();
        for (x, y) in mask.iter_set() {
            let expect = (x * 4) as i32;
            for &v in out.pixel(x, y) {
                assert!((i32::from(v) - expect).abs() <= 3, "({x},{y}) {v} vs {expect}");
            }
        }
        for y in 0..h {
            for x in 0..w {
                if !mask.get(x, y) {
                    assert_eq!(out.pixel(x, y), damaged.pixel(x, y));
                }
            }
        }
    }
}
