//! Z-buffered triangle fill with a top-left rule in 1/256-pixel fixed point.

/// Projected vertex: pixel position, viewing depth and a 2-D attribute
/// interpolated perspective-correctly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScreenVertex {
    pub pos: [f64; 2],
    pub depth: f64,
    pub attr: [f64; 2],
}

const SUBPIXEL: f64 = 256.0;

#[derive(Clone, Copy)]
struct Fixed {
    x: i64,
    y: i64,
}

fn to_fixed(p: [f64; 2]) -> Fixed {
    Fixed { x: (p[0] * SUBPIXEL).round() as i64, y: (p[1] * SUBPIXEL).round() as i64 }
}

#[inline]
fn edge(a: Fixed, b: Fixed, px: i64, py: i64) -> i64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// Points exactly on an edge belong to the triangle only for "top" and
/// "left" edges; exactly one of two triangles sharing an edge claims them.
#[inline]
fn owns_boundary(a: Fixed, b: Fixed) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    dy < 0 || (dy == 0 && dx > 0)
}

/// Fragment at a covered pixel centre.
#[derive(Clone, Copy, Debug)]
pub struct Fragment {
    pub x: usize,
    pub y: usize,
    pub depth: f64,
    pub attr: [f64; 2],
}

/// Calls `emit` for every pixel centre covered by the triangle. Both
/// windings are filled. Coordinates far outside the image are rejected
/// rather than risking fixed-point overflow.
pub fn fill_triangle(tri: &[ScreenVertex; 3], width: usize, height: usize, mut emit: impl FnMut(Fragment)) {
    const LIMIT: f64 = 1.0e6;
    if tri.iter().any(|v| !(v.pos[0].abs() < LIMIT && v.pos[1].abs() < LIMIT && v.depth > 0.0)) {
        return;
    }
    let mut v = *tri;
    let mut f = [to_fixed(v[0].pos), to_fixed(v[1].pos), to_fixed(v[2].pos)];
    let mut area = edge(f[0], f[1], f[2].x, f[2].y);
    if area == 0 {
        return;
    }
    if area < 0 {
        v.swap(1, 2);
        f.swap(1, 2);
        area = -area;
    }
    let min_x = f.iter().map(|p| p.x).min().unwrap();
    let max_x = f.iter().map(|p| p.x).max().unwrap();
    let min_y = f.iter().map(|p| p.y).min().unwrap();
    let max_y = f.iter().map(|p| p.y).max().unwrap();
    let s = SUBPIXEL as i64;
    let x0 = min_x.div_euclid(s).max(0);
    let x1 = max_x.div_euclid(s).min(width as i64 - 1);
    let y0 = min_y.div_euclid(s).max(0);
    let y1 = max_y.div_euclid(s).min(height as i64 - 1);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let own = [owns_boundary(f[1], f[2]), owns_boundary(f[2], f[0]), owns_boundary(f[0], f[1])];
    let inv_d = [1.0 / v[0].depth, 1.0 / v[1].depth, 1.0 / v[2].depth];
    let inv_area = 1.0 / area as f64;
    for py in y0..=y1 {
        let fy = py * s;
        for px in x0..=x1 {
            let fx = px * s;
            let w = [edge(f[1], f[2], fx, fy), edge(f[2], f[0], fx, fy), edge(f[0], f[1], fx, fy)];
            if (0..3).any(|i| w[i] < 0 || (w[i] == 0 && !own[i])) {
                continue;
            }
            let l = [w[0] as f64 * inv_area, w[1] as f64 * inv_area, w[2] as f64 * inv_area];
            let inv_depth = l[0] * inv_d[0] + l[1] * inv_d[1] + l[2] * inv_d[2];
            let depth = 1.0 / inv_depth;
            let mut attr = [0.0; 2];
            for k in 0..2 {
                attr[k] = depth * (l[0] * v[0].attr[k] * inv_d[0] + l[1] * v[1].attr[k] * inv_d[1] + l[2] * v[2].attr[k] * inv_d[2]);
            }
            emit(Fragment { x: px as usize, y: py as usize, depth, attr });
        }
    }
}
