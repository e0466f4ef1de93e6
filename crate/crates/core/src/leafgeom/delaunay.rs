//! Constrained Delaunay triangulation of a simple polygon plus interior
//! points: incremental insertion with Lawson flips, boundary recovery by
//! edge flipping, then removal of everything outside the polygon.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::imageops::{distance_to_boundary, Point2, Polygon2D};

use super::LeafGeomError;

/// Planar triangle mesh. Triangles index `vertices` and have positive
/// shoelace orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| tri_area(self.tri(t))).sum()
    }

    pub fn tri(&self, t: &[u32; 3]) -> [Point2; 3] {
        t.map(|i| self.vertices[i as usize])
    }

    pub fn centroid(&self, t: &[u32; 3]) -> Point2 {
        let [a, b, c] = self.tri(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// True when every triangle is reachable from the first through shared edges.
    pub fn is_edge_connected(&self) -> bool {
        if self.triangles.is_empty() {
            return true;
        }
        let mut by_edge: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (i, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                by_edge.entry((a.min(b), a.max(b))).or_default().push(i);
            }
        }
        let mut seen = vec![false; self.triangles.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            let t = self.triangles[i];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                for &j in &by_edge[&(a.min(b), a.max(b))] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn tri_area([a, b, c]: [Point2; 3]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn coord(p: Point2) -> robust::Coord<f64> {
    robust::Coord { x: p[0], y: p[1] }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

fn incircle(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
}

enum Location {
    Inside(usize),
    OnEdge(usize, usize),
    Duplicate,
}

struct Triangulation {
    pts: Vec<Point2>,
    tris: Vec<[usize; 3]>,
    /// Directed edge a→b to the triangle that holds it in CCW order.
    edges: HashMap<(usize, usize), usize>,
    constrained: HashSet<(usize, usize)>,
    last: usize,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Triangulation {
    fn new(mut pts: Vec<Point2>) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let c = [(lo[0] + hi[0]) * 0.5, (lo[1] + hi[1]) * 0.5];
        let r = 1e3 * span;
        let n = pts.len();
        pts.push([c[0] - r, c[1] - r]);
        pts.push([c[0] + r, c[1] - r]);
        pts.push([c[0], c[1] + r]);
        let mut t = Triangulation {
            pts,
            tris: Vec::new(),
            edges: HashMap::new(),
            constrained: HashSet::new(),
            last: 0,
        };
        t.push_tri([n, n + 1, n + 2]);
        t
    }

    fn push_tri(&mut self, tri: [usize; 3]) -> usize {
        let id = self.tris.len();
        self.tris.push(tri);
        self.register(id);
        id
    }

    fn register(&mut self, id: usize) {
        let t = self.tris[id];
        for k in 0..3 {
            self.edges.insert((t[k], t[(k + 1) % 3]), id);
        }
    }

    fn unregister(&mut self, id: usize) {
        let t = self.tris[id];
        for k in 0..3 {
            self.edges.remove(&(t[k], t[(k + 1) % 3]));
        }
    }

    fn replace_tri(&mut self, id: usize, tri: [usize; 3]) {
        self.unregister(id);
        self.tris[id] = tri;
        self.register(id);
    }

    fn locate(&self, p: Point2) -> Location {
        let mut cur = self.last.min(self.tris.len() - 1);
        let limit = 4 * self.tris.len() + 16;
        for _ in 0..limit {
            let t = self.tris[cur];
            let mut moved = false;
            let mut zeros = Vec::new();
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let o = orient(self.pts[a], self.pts[b], p);
                if o < 0.0 {
                    if let Some(&n) = self.edges.get(&(b, a)) {
                        cur = n;
                        moved = true;
                        break;
                    }
                } else if o == 0.0 {
                    zeros.push((a, b));
                }
            }
            if !moved {
                return match zeros.len() {
                    0 => Location::Inside(cur),
                    1 => Location::OnEdge(zeros[0].0, zeros[0].1),
                    _ => Location::Duplicate,
                };
            }
        }
        // Walks cannot cycle in a Delaunay mesh; this scan only guards
        // against pathological floating input.
        for (i, t) in self.tris.iter().enumerate() {
            let o: Vec<f64> = (0..3).map(|k| orient(self.pts[t[k]], self.pts[t[(k + 1) % 3]], p)).collect();
            if o.iter().all(|&v| v >= 0.0) {
                let zeros: Vec<usize> = (0..3).filter(|&k| o[k] == 0.0).collect();
                return match zeros.len() {
                    0 => Location::Inside(i),
                    1 => Location::OnEdge(t[zeros[0]], t[(zeros[0] + 1) % 3]),
                    _ => Location::Duplicate,
                };
            }
        }
        Location::Duplicate
    }

    /// Inserts point `p`; returns false for duplicates.
    fn insert(&mut self, p: usize) -> bool {
        match self.locate(self.pts[p]) {
            Location::Duplicate => false,
            Location::Inside(t) => {
                let [a, b, c] = self.tris[t];
                self.replace_tri(t, [a, b, p]);
                let t2 = self.push_tri([b, c, p]);
                self.push_tri([c, a, p]);
                self.last = t2;
                self.legalize(a, b, p);
                self.legalize(b, c, p);
                self.legalize(c, a, p);
                true
            }
            Location::OnEdge(a, b) => {
                let t1 = self.edges[&(a, b)];
                let c = apex(self.tris[t1], a, b);
                let t2 = self.edges.get(&(b, a)).copied();
                self.replace_tri(t1, [a, p, c]);
                self.push_tri([p, b, c]);
                self.last = t1;
                let mut legal = vec![(c, a), (b, c)];
                if let Some(t2) = t2 {
                    let d = apex(self.tris[t2], b, a);
                    self.replace_tri(t2, [b, p, d]);
                    self.push_tri([p, a, d]);
                    legal.extend([(a, d), (d, b)]);
                }
                for (u, v) in legal {
                    self.legalize(u, v, p);
                }
                true
            }
        }
    }

    /// Restores the Delaunay property across edge u→v whose triangle has apex p.
    fn legalize(&mut self, u: usize, v: usize, p: usize) {
        let mut stack = vec![(u, v)];
        while let Some((a, b)) = stack.pop() {
            if self.constrained.contains(&key(a, b)) {
                continue;
            }
            let Some(&t2) = self.edges.get(&(b, a)) else {
                continue;
            };
            let q = apex(self.tris[t2], b, a);
            if incircle(self.pts[a], self.pts[b], self.pts[p], self.pts[q]) > 0.0 {
                self.flip(a, b);
                stack.push((a, q));
                stack.push((q, b));
            }
        }
    }

    /// Flips the diagonal a–b of its quad; the new diagonal joins the two apexes.
    fn flip(&mut self, a: usize, b: usize) -> (usize, usize) {
        let t1 = self.edges[&(a, b)];
        let t2 = self.edges[&(b, a)];
        let c = apex(self.tris[t1], a, b);
        let d = apex(self.tris[t2], b, a);
        self.unregister(t1);
        self.unregister(t2);
        self.tris[t1] = [a, d, c];
        self.tris[t2] = [d, b, c];
        self.register(t1);
        self.register(t2);
        (c, d)
    }

    fn crosses(&self, a: usize, b: usize, u: usize, v: usize) -> bool {
        if a == u || a == v || b == u || b == v {
            return false;
        }
        let (pa, pb, pu, pv) = (self.pts[a], self.pts[b], self.pts[u], self.pts[v]);
        let o1 = orient(pu, pv, pa);
        let o2 = orient(pu, pv, pb);
        let o3 = orient(pa, pb, pu);
        let o4 = orient(pa, pb, pv);
        o1 * o2 < 0.0 && o3 * o4 < 0.0
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&(a, b)) || self.edges.contains_key(&(b, a))
    }

    fn is_convex_quad(&self, a: usize, b: usize) -> bool {
        let t1 = self.edges[&(a, b)];
        let t2 = self.edges[&(b, a)];
        let c = apex(self.tris[t1], a, b);
        let d = apex(self.tris[t2], b, a);
        let (pa, pb, pc, pd) = (self.pts[a], self.pts[b], self.pts[c], self.pts[d]);
        let o1 = orient(pc, pd, pa);
        let o2 = orient(pc, pd, pb);
        o1 * o2 < 0.0
    }

    /// Forces segment u–v into the triangulation.
    fn enforce(&mut self, u: usize, v: usize) -> Result<(), LeafGeomError> {
        self.constrained.insert(key(u, v));
        if self.has_edge(u, v) {
            return Ok(());
        }
        let mut crossing: VecDeque<(usize, usize)> = VecDeque::new();
        let mut seen = HashSet::new();
        for t in &self.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if seen.insert(key(a, b)) && self.crosses(a, b, u, v) {
                    crossing.push_back((a, b));
                }
            }
        }
        let mut created = Vec::new();
        let mut stalls = 0usize;
        while let Some((a, b)) = crossing.pop_front() {
            if self.is_convex_quad(a, b) {
                stalls = 0;
                let (c, d) = self.flip(a, b);
                if self.crosses(c, d, u, v) {
                    crossing.push_back((c, d));
                } else {
                    created.push((c, d));
                }
            } else {
                crossing.push_back((a, b));
                stalls += 1;
                if stalls > 2 * crossing.len() + 8 {
                    return Err(LeafGeomError::Triangulation(format!("could not recover boundary edge {u}-{v}")));
                }
            }
        }
        // Re-establish the Delaunay property among the new edges.
        for _ in 0..created.len() * 4 + 4 {
            let mut changed = false;
            for e in created.iter_mut() {
                let (a, b) = *e;
                if key(a, b) == key(u, v) || self.constrained.contains(&key(a, b)) {
                    continue;
                }
                let (Some(&t1), Some(&t2)) = (self.edges.get(&(a, b)), self.edges.get(&(b, a))) else {
                    continue;
                };
                let c = apex(self.tris[t1], a, b);
                let d = apex(self.tris[t2], b, a);
                if incircle(self.pts[a], self.pts[b], self.pts[c], self.pts[d]) > 0.0 && self.is_convex_quad(a, b) {
                    *e = self.flip(a, b);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if self.has_edge(u, v) {
            Ok(())
        } else {
            Err(LeafGeomError::Triangulation(format!("boundary edge {u}-{v} missing after recovery")))
        }
    }
}

fn apex(t: [usize; 3], a: usize, b: usize) -> usize {
    for k in 0..3 {
        if t[k] == a && t[(k + 1) % 3] == b {
            return t[(k + 2) % 3];
        }
    }
    unreachable!("edge {a}->{b} not in triangle {t:?}")
}

/// Square grid of interior points at `spacing`, anchored on the bounding-box
/// minimum and kept away from the boundary by a fifth of the spacing.
pub fn interior_grid(contour: &Polygon2D, spacing: f64) -> Vec<Point2> {
    let (lo, hi) = contour.bounds();
    let mut pts = Vec::new();
    if !(spacing > 0.0) {
        return pts;
    }
    let nx = ((hi[0] - lo[0]) / spacing).floor() as usize;
    let ny = ((hi[1] - lo[1]) / spacing).floor() as usize;
    for j in 1..=ny {
        for i in 1..=nx {
            let p = [lo[0] + i as f64 * spacing, lo[1] + j as f64 * spacing];
            if p[0] >= hi[0] || p[1] >= hi[1] {
                continue;
            }
            if contour.contains(p) && distance_to_boundary(contour.vertices(), p) > 0.2 * spacing {
                pts.push(p);
            }
        }
    }
    pts
}

/// Delaunay mesh of the contour vertices plus an interior grid, with the
/// contour edges enforced and outside triangles discarded.
pub fn triangulate(contour: &Polygon2D, interior_spacing: f64) -> Result<Mesh, LeafGeomError> {
    if contour.area() < 1e-6 {
        return Err(LeafGeomError::DegeneratePolygon);
    }
    let n_contour = contour.len();
    let mut pts: Vec<Point2> = contour.vertices().to_vec();
    pts.extend(interior_grid(contour, interior_spacing));
    let n = pts.len();
    let mut tri = Triangulation::new(pts);
    let mut inserted = vec![false; n];
    for (i, flag) in inserted.iter_mut().enumerate() {
        *flag = tri.insert(i);
    }
    if inserted[..n_contour].iter().any(|&ok| !ok) {
        return Err(LeafGeomError::Triangulation("duplicate contour vertex".into()));
    }
    for i in 0..n_contour {
        tri.enforce(i, (i + 1) % n_contour)?;
    }

    // Compact indices: contour vertices keep their positions.
    let mut remap = vec![u32::MAX; n];
    let mut vertices = Vec::with_capacity(n);
    for i in 0..n {
        if inserted[i] {
            remap[i] = vertices.len() as u32;
            vertices.push(tri.pts[i]);
        }
    }
    let mut triangles = Vec::new();
    for t in &tri.tris {
        if t.iter().any(|&v| v >= n) {
            continue;
        }
        let p = t.map(|v| tri.pts[v]);
        let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        if contour.contains(c) {
            triangles.push(t.map(|v| remap[v]));
        }
    }
    Ok(Mesh { vertices, triangles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(v: &[[f64; 2]]) -> Polygon2D {
        Polygon2D::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quad_with_coarse_spacing_is_two_triangles() {
        let p = poly(&[[0.0, 0.0], [2.0, 0.2], [2.5, 1.8], [0.3, 1.5]]);
        let m = triangulate(&p, 10.0).unwrap();
        assert_eq!(m.triangles.len(), 2);
        assert!((m.area() - p.area()).abs() < 1e-9);
    }

    #[test]
    fn unit_square_half_spacing_area() {
        let p = poly(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let m = triangulate(&p, 0.5).unwrap();
        assert_eq!(m.vertices.len(), 5);
        assert!((m.area() - 1.0).abs() < 1e-6);
        assert!(m.triangles.iter().all(|t| tri_area(m.tri(t)) > 0.0));
    }

    #[test]
    fn l_polygon_skips_concavity() {
        let p = poly(&[[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [1.0, 1.0], [1.0, 3.0], [0.0, 3.0]]);
        let m = triangulate(&p, 0.4).unwrap();
        for t in &m.triangles {
            let c = m.centroid(t);
            assert!(!(c[0] > 1.0 && c[1] > 1.0), "centroid {c:?} in the notch");
            assert!(p.contains(c));
        }
        assert!((m.area() - 5.0).abs() < 1e-9);
        assert!(m.is_edge_connected());
    }

    #[test]
    fn degenerate_rejected() {
        let p = poly(&[[0.0, 0.0], [1e-4, 0.0], [0.0, 1e-4]]);
        assert!(matches!(triangulate(&p, 0.1), Err(LeafGeomError::DegeneratePolygon)));
    }

    #[test]
    fn comb_polygon_boundary_recovered() {
        // Deep narrow teeth force many recovery flips.
        let mut v = vec![[0.0, 0.0]];
        for k in 0..6 {
            let x = k as f64;
            v.push([x + 0.2, 0.0]);
            v.push([x + 0.2, -3.0]);
            v.push([x + 0.8, -3.0]);
            v.push([x + 0.8, 0.0]);
        }
        v.push([6.0, 0.0]);
        v.push([6.0, 1.0]);
        v.push([0.0, 1.0]);
        let p = poly(&v);
        let m = triangulate(&p, 0.3).unwrap();
        assert!((m.area() - p.area()).abs() < 1e-9 * p.area());
        assert!(m.is_edge_connected());
    }
}
