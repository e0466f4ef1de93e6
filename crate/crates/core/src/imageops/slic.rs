//! SLIC superpixels: k-means over (L, a, b, x, y) seeded on a regular grid,
//! each segment painted with its mean RGB color.

use super::raster::round_u8;
use super::RasterImage;

const COMPACTNESS: f64 = 10.0;
const ITERATIONS: usize = 10;

fn srgb_to_linear(c: f64) -> f64 {
    let c = c / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// sRGB (D65) to CIE L*a*b*.
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|v| srgb_to_linear(f64::from(v)));
    let x = (0.4124 * r + 0.3576 * g + 0.1805 * b) / 0.95047;
    let y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    let z = (0.0193 * r + 0.1192 * g + 0.9505 * b) / 1.08883;
    let f = |t: f64| {
        if t > 216.0 / 24389.0 {
            t.cbrt()
        } else {
            (24389.0 / 27.0 * t + 16.0) / 116.0
        }
    };
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

fn grid_shape(n: usize, w: usize, h: usize) -> (usize, usize) {
    let kx = ((n as f64 * w as f64 / h as f64).sqrt().ceil() as usize).clamp(1, n.min(w));
    let ky = (n / kx).clamp(1, h);
    (kx, ky)
}

/// Replaces each superpixel with its mean color. At most `n_segments`
/// distinct colors appear in the output.
pub fn superpixel_quantize(image: &RasterImage, n_segments: usize) -> RasterImage {
    let rgb = image.to_rgb();
    let (w, h) = (rgb.width(), rgb.height());
    let n = n_segments.max(1);
    let (kx, ky) = grid_shape(n, w, h);
    let step = ((w * h) as f64 / (kx * ky) as f64).sqrt();
    let lab: Vec<[f64; 3]> = rgb.data().chunks_exact(3).map(|p| rgb_to_lab([p[0], p[1], p[2]])).collect();

    // Center: [L, a, b, x, y].
    let mut centers: Vec<[f64; 5]> = Vec::with_capacity(kx * ky);
    for j in 0..ky {
        for i in 0..kx {
            let x = ((i as f64 + 0.5) * w as f64 / kx as f64).floor().min(w as f64 - 1.0);
            let y = ((j as f64 + 0.5) * h as f64 / ky as f64).floor().min(h as f64 - 1.0);
            let l = lab[y as usize * w + x as usize];
            centers.push([l[0], l[1], l[2], x, y]);
        }
    }
    let spatial = (COMPACTNESS / step).powi(2);
    let dist = |c: &[f64; 5], p: &[f64; 3], x: usize, y: usize| {
        let dc = (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2) + (c[2] - p[2]).powi(2);
        let ds = (c[3] - x as f64).powi(2) + (c[4] - y as f64).powi(2);
        dc + spatial * ds
    };

    let mut labels = vec![usize::MAX; w * h];
    let mut best = vec![f64::INFINITY; w * h];
    let reach = (2.0 * step).ceil() as i64;
    for _ in 0..ITERATIONS {
        labels.iter_mut().for_each(|l| *l = usize::MAX);
        best.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let (cx, cy) = (c[3].round() as i64, c[4].round() as i64);
            for y in (cy - reach).max(0)..(cy + reach + 1).min(h as i64) {
                for x in (cx - reach).max(0)..(cx + reach + 1).min(w as i64) {
                    let i = y as usize * w + x as usize;
                    let d = dist(c, &lab[i], x as usize, y as usize);
                    if d < best[i] {
                        best[i] = d;
                        labels[i] = k;
                    }
                }
            }
        }
        // Pixels outside every search window go to the globally nearest center.
        for i in 0..w * h {
            if labels[i] == usize::MAX {
                let (x, y) = (i % w, i / w);
                labels[i] = (0..centers.len())
                    .min_by(|&a, &b| dist(&centers[a], &lab[i], x, y).total_cmp(&dist(&centers[b], &lab[i], x, y)))
                    .unwrap();
            }
        }
        let mut acc = vec![[0.0f64; 6]; centers.len()];
        for (i, &k) in labels.iter().enumerate() {
            let a = &mut acc[k];
            a[0] += lab[i][0];
            a[1] += lab[i][1];
            a[2] += lab[i][2];
            a[3] += (i % w) as f64;
            a[4] += (i / w) as f64;
            a[5] += 1.0;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a[5] > 0.0 {
                for d in 0..5 {
                    c[d] = a[d] / a[5];
                }
            }
        }
    }

    let mut sums = vec![[0.0f64; 4]; centers.len()];
    for (i, &k) in labels.iter().enumerate() {
        let p = &rgb.data()[i * 3..i * 3 + 3];
        sums[k][0] += f64::from(p[0]);
        sums[k][1] += f64::from(p[1]);
        sums[k][2] += f64::from(p[2]);
        sums[k][3] += 1.0;
    }
    let colors: Vec<[u8; 3]> = sums
        .iter()
        .map(|s| {
            let n = s[3].max(1.0);
            [round_u8(s[0] / n), round_u8(s[1] / n), round_u8(s[2] / n)]
        })
        .collect();
    let mut out = rgb;
    for (px, &k) in out.data_mut().chunks_exact_mut(3).zip(&labels) {
        px.copy_from_slice(&colors[k]);
    }
    if image.channels() == 1 {
        let data = out.data().chunks_exact(3).map(|p| p[0]).collect();
        return RasterImage::new(w, h, 1, data).expect("same dimensions");
    }
    out
}
