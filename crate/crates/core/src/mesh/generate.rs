//! Mesh generators.

use std::f64::consts::PI;

use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};

use super::{Mesh, OuterBoundary, Region, Triangle};
use crate::{Error, Result};

/// A simple closed polygon, stored counter-clockwise without repeating the
/// first vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

impl Polygon {
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Polygon> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry("polygon needs at least 3 vertices".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if a == c || (!adjacent && segments_intersect(a, b, c, d)) {
                    return Err(Error::InvalidGeometry(format!(
                        "self-intersecting polygon (segments {i} and {j})"
                    )));
                }
            }
        }
        let mut polygon = Polygon { vertices };
        let area = polygon.signed_area();
        if area.abs() < f64::EPSILON {
            return Err(Error::InvalidGeometry("degenerate polygon".into()));
        }
        if area < 0.0 {
            polygon.vertices.reverse();
        }
        Ok(polygon)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
    }

    /// Even–odd point-in-polygon test.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Regular `n`-gon inscribed in a circle.
pub fn circle_polygon(center: [f64; 2], radius: f64, n: usize) -> Result<Polygon> {
    ellipse_polygon(center, radius, radius, 0.0, n)
}

/// Polygon with `n` vertices on an ellipse with semi-axes `a`, `b`, rotated
/// by `angle`.
pub fn ellipse_polygon(center: [f64; 2], a: f64, b: f64, angle: f64, n: usize) -> Result<Polygon> {
    if !(a > 0.0 && b > 0.0) || n < 3 {
        return Err(Error::InvalidGeometry(format!(
            "ellipse needs positive semi-axes and at least 3 vertices (a={a}, b={b}, n={n})"
        )));
    }
    let (s, c) = angle.sin_cos();
    let vertices = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let (x, y) = (a * t.cos(), b * t.sin());
            [center[0] + c * x - s * y, center[1] + s * x + c * y]
        })
        .collect();
    Polygon::new(vertices)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

// Closed-segment intersection, touching counts.
fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(format!("target edge length must be positive, got {h}")))
    }
}

/// Disk of radius `rho_e` with a fitted circular interface of radius `rho_i`.
///
/// Vertices sit on concentric rings; consecutive rings are stitched together
/// by shortest diagonals and the innermost ring is fanned to the centre. One
/// ring lies exactly on `rho_i`.
pub fn generate_disk_mesh(rho_e: f64, rho_i: f64, h: f64) -> Result<Mesh> {
    if !(0.0 < rho_i && rho_i < rho_e && rho_e.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "need 0 < rho_I < rho_E, got rho_E={rho_e}, rho_I={rho_i}"
        )));
    }
    check_h(h)?;
    let inner_rings = ((rho_i / h).round() as usize).max(1);
    let outer_rings = (((rho_e - rho_i) / h).round() as usize).max(1);
    let mut radii: Vec<f64> = (1..=inner_rings).map(|k| rho_i * k as f64 / inner_rings as f64).collect();
    radii.extend((1..=outer_rings).map(|k| rho_i + (rho_e - rho_i) * k as f64 / outer_rings as f64));
    // pin the interface and outer rings exactly
    radii[inner_rings - 1] = rho_i;
    *radii.last_mut().unwrap() = rho_e;

    let mut vertices = vec![[0.0, 0.0]];
    let mut rings: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let m = ((2.0 * PI * r / h).round() as usize).max(6);
        let step = 2.0 * PI / m as f64;
        let phase = if k % 2 == 1 { 0.5 * step } else { 0.0 };
        let mut ids = Vec::with_capacity(m);
        let mut angles = Vec::with_capacity(m);
        for i in 0..m {
            let t = phase + step * i as f64;
            ids.push(vertices.len());
            angles.push(t);
            vertices.push([r * t.cos(), r * t.sin()]);
        }
        rings.push((ids, angles));
    }

    let mut triangles = Vec::new();
    let mut push = |vs: [usize; 3], region: Region, vertices: &[[f64; 2]]| {
        let [a, b, c] = vs;
        let vs = if orient(vertices[a], vertices[b], vertices[c]) > 0.0 { vs } else { [a, c, b] };
        triangles.push(Triangle { vertices: vs, region });
    };

    let first = &rings[0].0;
    for i in 0..first.len() {
        push([0, first[i], first[(i + 1) % first.len()]], Region::Inclusion, &vertices);
    }
    for k in 1..rings.len() {
        let region = if k < inner_rings { Region::Inclusion } else { Region::Background };
        let a = &rings[k - 1].0;
        let (b, tb) = &rings[k];
        let (na, nb) = (a.len(), b.len());
        // start the outer ring at the vertex closest in angle to a[0]
        let t0 = rings[k - 1].1[0];
        let off = (0..nb)
            .min_by(|&x, &y| angle_gap(tb[x], t0).total_cmp(&angle_gap(tb[y], t0)))
            .unwrap();
        let bb = |j: usize| b[(j + off) % nb];
        let (mut i, mut j) = (0, 0);
        // greedy stitch: advance on the ring that gives the shorter diagonal
        while i < na || j < nb {
            let advance_a = if i == na {
                false
            } else if j == nb {
                true
            } else {
                let da = super::dist(vertices[a[(i + 1) % na]], vertices[bb(j)]);
                let db = super::dist(vertices[a[i % na]], vertices[bb(j + 1)]);
                da <= db
            };
            if advance_a {
                push([a[i % na], a[(i + 1) % na], bb(j)], region, &vertices);
                i += 1;
            } else {
                push([a[i % na], bb(j + 1), bb(j)], region, &vertices);
                j += 1;
            }
        }
    }
    Mesh::new(vertices, triangles, OuterBoundary::Circle { radius: rho_e })
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Square `[-half_width, half_width]²` with fitted polygonal inclusions.
pub fn generate_square_mesh(half_width: f64, inclusions: &[Polygon], h: f64) -> Result<Mesh> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidGeometry(format!("half width must be positive, got {half_width}")));
    }
    check_h(h)?;
    let w = half_width;
    for (k, p) in inclusions.iter().enumerate() {
        if p.vertices().iter().any(|v| v[0].abs() >= w || v[1].abs() >= w) {
            return Err(Error::InvalidGeometry(format!(
                "inclusion {k} touches or crosses the outer boundary"
            )));
        }
    }
    let outer = Polygon::new(vec![[-w, -w], [w, -w], [w, w], [-w, w]])?;
    let outer = subdivide(&outer, h);
    triangulate(&outer, inclusions, h, OuterBoundary::Polygonal)
}

/// Disk of radius `rho_e` (polygonal outer boundary with vertices on the
/// circle) with fitted polygonal inclusions.
pub fn generate_disk_mesh_with_inclusions(rho_e: f64, inclusions: &[Polygon], h: f64) -> Result<Mesh> {
    if !(rho_e > 0.0 && rho_e.is_finite()) {
        return Err(Error::InvalidGeometry(format!("radius must be positive, got {rho_e}")));
    }
    check_h(h)?;
    for (k, p) in inclusions.iter().enumerate() {
        if p.vertices().iter().any(|v| v[0].hypot(v[1]) >= rho_e) {
            return Err(Error::InvalidGeometry(format!(
                "inclusion {k} touches or crosses the outer boundary"
            )));
        }
    }
    let n = ((2.0 * PI * rho_e / h).ceil() as usize).max(12);
    let outer = circle_polygon([0.0, 0.0], rho_e, n)?;
    triangulate(&outer, inclusions, h, OuterBoundary::Circle { radius: rho_e })
}

// Splits the edges of `p` so that no edge is longer than `h`.
fn subdivide(p: &Polygon, h: f64) -> Polygon {
    let mut vertices = Vec::new();
    for (a, b) in p.segments() {
        let len = super::dist(a, b);
        let pieces = ((len / h).ceil() as usize).max(1);
        for s in 0..pieces {
            let t = s as f64 / pieces as f64;
            vertices.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    Polygon { vertices }
}

fn triangulate(outer: &Polygon, inclusions: &[Polygon], h: f64, shape: OuterBoundary) -> Result<Mesh> {
    for (i, p) in inclusions.iter().enumerate() {
        for (j, q) in inclusions.iter().enumerate().skip(i + 1) {
            let crossing = p
                .segments()
                .any(|(a, b)| q.segments().any(|(c, d)| segments_intersect(a, b, c, d)));
            if crossing || p.contains(q.vertices()[0]) || q.contains(p.vertices()[0]) {
                return Err(Error::InvalidGeometry(format!("inclusions {i} and {j} overlap")));
            }
        }
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut add_loop = |p: &Polygon| -> Result<()> {
        let pts: Vec<Point2<f64>> = p.vertices().iter().map(|v| Point2::new(v[0], v[1])).collect();
        cdt.add_constraint_edges(pts, true)
            .map_err(|e| Error::InvalidGeometry(format!("triangulation failed: {e:?}")))
    };
    add_loop(outer)?;
    for p in inclusions {
        add_loop(&subdivide(p, h))?;
    }

    let max_area = 3f64.sqrt() / 4.0 * h * h;
    let budget = (10.0 * outer.area() / max_area) as usize + 1000;
    let result = cdt.refine(
        RefinementParameters::<f64>::new()
            .with_max_allowed_area(max_area)
            .with_angle_limit(AngleLimit::from_deg(25.0))
            .with_max_additional_vertices(budget),
    );
    if !result.refinement_complete {
        return Err(Error::InvalidGeometry("mesh refinement did not converge".into()));
    }

    let mut vertices: Vec<[f64; 2]> =
        cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let [pa, pb, pc] = [vertices[a], vertices[b], vertices[c]];
        let bary = [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0];
        let region = if inclusions.iter().any(|p| p.contains(bary)) {
            Region::Inclusion
        } else {
            Region::Background
        };
        let vs = if orient(pa, pb, pc) > 0.0 { [a, b, c] } else { [a, c, b] };
        triangles.push(Triangle { vertices: vs, region });
    }

    if let OuterBoundary::Circle { radius } = shape {
        // Steiner points inserted on the outer chords go onto the circle.
        let probe = Mesh::new(vertices.clone(), triangles.clone(), OuterBoundary::Polygonal)?;
        for (v, on_outer) in probe.outer_vertex_mask().into_iter().enumerate() {
            if on_outer {
                let p = vertices[v];
                let r = p[0].hypot(p[1]);
                vertices[v] = [p[0] * radius / r, p[1] * radius / r];
            }
        }
    }
    Mesh::new(vertices, triangles, shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryLabel;

    #[test]
    fn disk_interface_on_circle() {
        let m = generate_disk_mesh(5.0, 4.0, 1.0).unwrap();
        let iface = m.interface_vertex_mask();
        assert!(iface.iter().any(|&f| f));
        for (v, p) in m.vertices().iter().enumerate() {
            if iface[v] {
                assert!((p[0] * p[0] + p[1] * p[1] - 16.0).abs() < 1e-13);
            }
        }
        assert_eq!(m.loops(BoundaryLabel::Interface).len(), 1);
        assert_eq!(m.loops(BoundaryLabel::Outer).len(), 1);
        assert!(m.max_edge_length() <= 1.5 * 1.0);
    }

    #[test]
    fn disk_triangle_count_scales_like_inverse_h_squared() {
        let a = generate_disk_mesh(5.0, 4.0, 0.5).unwrap().num_triangles() as f64;
        let b = generate_disk_mesh(5.0, 4.0, 0.25).unwrap().num_triangles() as f64;
        assert!((b / a - 4.0).abs() < 0.5, "ratio {}", b / a);
    }

    #[test]
    fn disk_area_converges_quadratically() {
        let err = |h: f64| (generate_disk_mesh(5.0, 4.0, h).unwrap().total_area() - PI * 25.0).abs();
        let rate = (err(0.4) / err(0.2)).log2();
        assert!(rate > 1.8, "rate {rate}");
    }

    #[test]
    fn disk_rejects_bad_radii() {
        assert!(matches!(generate_disk_mesh(1.0, 2.0, 0.1), Err(Error::InvalidGeometry(_))));
        assert!(generate_disk_mesh(5.0, 4.0, 0.0).is_err());
    }

    #[test]
    fn square_with_unit_inclusion() {
        let unit = Polygon::new(vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]).unwrap();
        let m = generate_square_mesh(4.0, &[unit], 0.5).unwrap();
        assert!((m.region_area(Region::Inclusion) - 1.0).abs() < 1e-12);
        assert!((m.total_area() - 64.0).abs() < 1e-10);
    }

    #[test]
    fn square_without_inclusions_is_background() {
        let m = generate_square_mesh(4.0, &[], 0.5).unwrap();
        assert!(m.triangles().iter().all(|t| t.region == Region::Background));
        assert!(m.interface_edges().next().is_none());
    }

    #[test]
    fn two_inclusions_give_two_loops() {
        let a = circle_polygon([-2.0, 0.0], 1.0, 16).unwrap();
        let b = ellipse_polygon([2.0, 1.0], 1.0, 0.5, 0.3, 16).unwrap();
        let m = generate_square_mesh(4.0, &[a, b], 0.5).unwrap();
        assert_eq!(m.loops(BoundaryLabel::Interface).len(), 2);
    }

    #[test]
    fn geometry_errors() {
        let touching = Polygon::new(vec![[3.0, 0.0], [4.0, 0.0], [3.5, 1.0]]).unwrap();
        assert!(generate_square_mesh(4.0, &[touching], 0.5).is_err());
        let bowtie = Polygon::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(bowtie, Err(Error::InvalidGeometry(_))));
        let a = circle_polygon([0.0, 0.0], 1.0, 12).unwrap();
        let b = circle_polygon([0.5, 0.0], 1.0, 12).unwrap();
        assert!(generate_square_mesh(4.0, &[a, b], 0.5).is_err());
    }

    #[test]
    fn disk_with_ellipse_has_outer_vertices_on_circle() {
        let e = ellipse_polygon([1.0, 0.5], 1.5, 0.8, 0.4, 24).unwrap();
        let m = generate_disk_mesh_with_inclusions(5.0, std::slice::from_ref(&e), 0.6).unwrap();
        let outer = m.outer_vertex_mask();
        for (v, p) in m.vertices().iter().enumerate() {
            if outer[v] {
                assert!((p[0].hypot(p[1]) - 5.0).abs() < 1e-12);
            }
        }
        assert!((m.region_area(Region::Inclusion) - e.area()).abs() < 1e-10);
    }
}
