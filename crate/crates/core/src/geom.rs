//! Exact 2D primitives: vectors, 2×2 matrices, convex polygons, half-planes,
//! metric projections, hulls, ray casting and polygon offsetting.
//!
//! Everything here is a pure function of its inputs. Degeneracy tests use the
//! single tolerance [`GEOM_EPS`].

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Global tolerance (meters) for degeneracy and containment tests.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("half-plane intersection has no interior")]
    EmptyIntersection,
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("polygon offset self-intersects")]
    SelfIntersection,
    #[error("invalid convex polygon: {0}")]
    InvalidPolygon(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at angle `theta` (radians) from the +x axis.
    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise perpendicular `(-y, x)`.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            self
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };
    pub const ZERO: Mat2 = Mat2 {
        m: [[0.0, 0.0], [0.0, 0.0]],
    };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    /// `a bᵀ`
    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Mat2::new(a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y)
    }

    pub fn scaled_identity(s: f64) -> Self {
        Mat2::new(s, 0.0, 0.0, s)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.m[r][c]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    /// Solve `self · z = b` by Cramer's rule.
    pub fn solve(&self, b: Vec2) -> Option<Vec2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Vec2::new(
            (b.x * self.m[1][1] - self.m[0][1] * b.y) / d,
            (self.m[0][0] * b.y - self.m[1][0] * b.x) / d,
        ))
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn mul_mat(&self, o: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Eigenvalues as `(re, im)` pairs, ordered by real part.
    pub fn eigenvalues(&self) -> [(f64, f64); 2] {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let s = disc.sqrt();
            [(tr / 2.0 - s, 0.0), (tr / 2.0 + s, 0.0)]
        } else {
            let s = (-disc).sqrt();
            [(tr / 2.0, -s), (tr / 2.0, s)]
        }
    }
}

/// A closed half-plane `{q : (q - anchor)·normal >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub anchor: Vec2,
    /// Unit normal pointing into the kept side.
    pub normal: Vec2,
}

impl HalfPlane {
    /// Normalizes `normal`; panics on a zero normal.
    pub fn new(anchor: Vec2, normal: Vec2) -> Self {
        let n = normal.norm();
        assert!(n > 0.0 && n.is_finite(), "half-plane normal must be nonzero");
        HalfPlane {
            anchor,
            normal: normal / n,
        }
    }

    /// Positive on the kept side.
    #[inline]
    pub fn signed_distance(&self, q: Vec2) -> f64 {
        (q - self.anchor).dot(self.normal)
    }

    pub fn contains(&self, q: Vec2) -> bool {
        self.signed_distance(q) >= -GEOM_EPS
    }
}

/// Counterclockwise convex polygon with at least three distinct vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::InvalidPolygon("fewer than 3 vertices"));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i].dist(vertices[(i + 1) % n]) <= GEOM_EPS {
                return Err(GeomError::InvalidPolygon("repeated vertex"));
            }
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -GEOM_EPS {
                return Err(GeomError::InvalidPolygon("not convex or not counterclockwise"));
            }
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(GeomError::InvalidPolygon("zero or negative area"));
        }
        Ok(ConvexPolygon { vertices })
    }

    /// Regular `n`-gon inscribed in the circle of `radius` about `center`.
    pub fn regular(center: Vec2, radius: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|i| center + Vec2::from_angle(2.0 * PI * i as f64 / n as f64) * radius)
            .collect();
        ConvexPolygon { vertices }
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        ConvexPolygon {
            vertices: vec![
                Vec2::new(x0, y0),
                Vec2::new(x1, y0),
                Vec2::new(x1, y1),
                Vec2::new(x0, y1),
            ],
        }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Inward-facing half-planes, one per edge.
    pub fn halfplanes(&self) -> Vec<HalfPlane> {
        self.edges()
            .map(|(a, b)| HalfPlane::new(a, (b - a).perp()))
            .collect()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        self.vertices.iter().fold(Vec2::ZERO, |acc, &v| acc + v) / n
    }

    /// Minimum over edges of the signed distance to the edge line; positive
    /// strictly inside.
    pub fn inner_margin(&self, q: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| (q - a).cross(b - a) / -(b - a).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, q: Vec2) -> bool {
        self.inner_margin(q) >= -GEOM_EPS
    }

    /// Metric projection of `q` onto the polygon.
    pub fn project(&self, q: Vec2) -> Vec2 {
        if self.inner_margin(q) >= 0.0 {
            return q;
        }
        let mut best = q;
        let mut best_d = f64::INFINITY;
        for (a, b) in self.edges() {
            let p = closest_point_on_segment(q, a, b);
            let d = p.dist(q);
            if d < best_d {
                best_d = d;
                best = p;
            }
        }
        best
    }

    /// Euclidean distance from `q` to the polygon boundary.
    pub fn boundary_distance(&self, q: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| closest_point_on_segment(q, a, b).dist(q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Signed distance: negative inside, positive outside.
    pub fn signed_distance(&self, q: Vec2) -> f64 {
        let d = self.boundary_distance(q);
        if self.inner_margin(q) > 0.0 {
            -d
        } else {
            d
        }
    }

    /// Parameter interval `[t0, t1]` of the chord `{origin + t·dir}` inside
    /// the polygon, or `None` if the line misses it.
    pub fn chord(&self, origin: Vec2, dir: Vec2) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for hp in self.halfplanes() {
            let s0 = hp.signed_distance(origin);
            let rate = dir.dot(hp.normal);
            if rate.abs() < 1e-15 {
                if s0 < -GEOM_EPS {
                    return None;
                }
                continue;
            }
            let t = -s0 / rate;
            if rate > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
        if lo > hi + GEOM_EPS {
            None
        } else {
            Some((lo, hi.max(lo)))
        }
    }

    /// Inward offset of every edge by `r`.
    pub fn eroded(&self, r: f64) -> Result<ConvexPolygon, GeomError> {
        let planes: Vec<HalfPlane> = self
            .halfplanes()
            .into_iter()
            .map(|hp| HalfPlane::new(hp.anchor + hp.normal * r, hp.normal))
            .collect();
        intersect_halfplanes(&planes, self)
    }
}

/// Convex obstacle: a disk or a convex polygon.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexObstacle {
    Disk { center: Vec2, radius: f64 },
    Polygon(ConvexPolygon),
}

impl ConvexObstacle {
    /// Signed distance from `q` to the obstacle (negative inside).
    pub fn signed_distance(&self, q: Vec2) -> f64 {
        match self {
            ConvexObstacle::Disk { center, radius } => q.dist(*center) - radius,
            ConvexObstacle::Polygon(p) => p.signed_distance(q),
        }
    }

    /// Center of a bounding circle and its radius.
    pub fn bounding_circle(&self) -> (Vec2, f64) {
        match self {
            ConvexObstacle::Disk { center, radius } => (*center, *radius),
            ConvexObstacle::Polygon(p) => {
                let c = p.centroid();
                let r = p.vertices().iter().map(|v| v.dist(c)).fold(0.0, f64::max);
                (c, r)
            }
        }
    }

    /// `n` points evenly spread on the boundary.
    pub fn boundary_samples(&self, n: usize) -> Vec<Vec2> {
        match self {
            ConvexObstacle::Disk { center, radius } => (0..n)
                .map(|i| *center + Vec2::from_angle(2.0 * PI * i as f64 / n as f64) * *radius)
                .collect(),
            ConvexObstacle::Polygon(p) => sample_polygon_boundary(p.vertices(), n),
        }
    }

    /// Grows the obstacle outward by `r` (exact for disks, mitred for polygons).
    pub fn dilated(&self, r: f64) -> Result<ConvexObstacle, GeomError> {
        match self {
            ConvexObstacle::Disk { center, radius } => Ok(ConvexObstacle::Disk {
                center: *center,
                radius: radius + r,
            }),
            ConvexObstacle::Polygon(p) => Ok(ConvexObstacle::Polygon(ConvexPolygon::new(
                dilate_polygon(p.vertices(), r)?,
            )?)),
        }
    }
}

/// Anything with a metric projection.
pub trait ConvexSet {
    fn project(&self, q: Vec2) -> Vec2;
}

impl ConvexSet for ConvexPolygon {
    fn project(&self, q: Vec2) -> Vec2 {
        ConvexPolygon::project(self, q)
    }
}

impl ConvexSet for ConvexObstacle {
    fn project(&self, q: Vec2) -> Vec2 {
        match self {
            ConvexObstacle::Disk { center, radius } => {
                let d = q - *center;
                let n = d.norm();
                if n <= *radius {
                    q
                } else {
                    *center + d * (radius / n)
                }
            }
            ConvexObstacle::Polygon(p) => p.project(q),
        }
    }
}

/// Metric projection of `q` onto a convex set.
pub fn project_convex<C: ConvexSet + ?Sized>(q: Vec2, set: &C) -> Vec2 {
    set.project(q)
}

pub fn closest_point_on_segment(q: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let l2 = ab.norm_sq();
    if l2 == 0.0 {
        return a;
    }
    let t = ((q - a).dot(ab) / l2).clamp(0.0, 1.0);
    a + ab * t
}

/// Shoelace signed area; positive for counterclockwise order.
pub fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

/// Clip a convex polygon (vertex list) against one half-plane.
fn clip_polygon(poly: &[Vec2], hp: &HalfPlane) -> Vec<Vec2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let da = hp.signed_distance(a);
        let db = hp.signed_distance(b);
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let t = da / (da - db);
            out.push(a + (b - a) * t);
        }
    }
    out.dedup_by(|p, q| p.dist(*q) <= 1e-12);
    if out.len() > 1 && out[0].dist(out[out.len() - 1]) <= 1e-12 {
        out.pop();
    }
    out
}

/// Intersection of a bounded convex seed with a set of half-planes, by
/// sequential clipping.
pub fn intersect_halfplanes(
    planes: &[HalfPlane],
    seed: &ConvexPolygon,
) -> Result<ConvexPolygon, GeomError> {
    let mut poly = seed.vertices.clone();
    for hp in planes {
        if poly.iter().all(|&v| hp.signed_distance(v) >= 0.0) {
            continue;
        }
        poly = clip_polygon(&poly, hp);
        if poly.len() < 3 {
            return Err(GeomError::EmptyIntersection);
        }
    }
    if signed_area(&poly) <= 1e-18 {
        return Err(GeomError::EmptyIntersection);
    }
    Ok(ConvexPolygon { vertices: poly })
}

/// Counterclockwise convex hull (monotone chain). Collinear boundary points
/// are dropped, so hull vertices are strict corners.
pub fn convex_hull(points: &[Vec2]) -> Result<ConvexPolygon, GeomError> {
    hull_indices(points).map(|idx| ConvexPolygon {
        vertices: idx.into_iter().map(|i| points[i]).collect(),
    })
}

/// Indices (into `points`) of the strict convex hull, counterclockwise.
pub fn hull_indices(points: &[Vec2]) -> Result<Vec<usize>, GeomError> {
    if points.len() < 3 {
        return Err(GeomError::DegenerateInput("fewer than 3 points"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i], points[j]);
        a.x.partial_cmp(&b.x)
            .unwrap()
            .then(a.y.partial_cmp(&b.y).unwrap())
    });
    order.dedup_by(|i, j| points[*i].dist(points[*j]) <= GEOM_EPS);
    let turn = |o: usize, a: usize, b: usize| (points[a] - points[o]).cross(points[b] - points[o]);
    let mut lower: Vec<usize> = Vec::new();
    for &i in &order {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], i) <= GEOM_EPS
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], i) <= GEOM_EPS
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeomError::DegenerateInput("collinear points"));
    }
    Ok(lower)
}

/// Even-odd point-in-polygon test for a simple polygon.
pub fn point_in_polygon(q: Vec2, vertices: &[Vec2]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a.y > q.y) != (b.y > q.y) {
            let x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if q.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from `q` to the boundary of a (not necessarily convex) polygon.
pub fn polygon_boundary_distance(q: Vec2, vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| closest_point_on_segment(q, vertices[i], vertices[(i + 1) % n]).dist(q))
        .fold(f64::INFINITY, f64::min)
}

/// Signed distance to a simple polygon, negative inside.
pub fn polygon_signed_distance(q: Vec2, vertices: &[Vec2]) -> f64 {
    let d = polygon_boundary_distance(q, vertices);
    if point_in_polygon(q, vertices) {
        -d
    } else {
        d
    }
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, s: f64| {
        s.abs() <= GEOM_EPS * (q - p).norm().max(1.0)
            && r.x >= p.x.min(q.x) - GEOM_EPS
            && r.x <= p.x.max(q.x) + GEOM_EPS
            && r.y >= p.y.min(q.y) - GEOM_EPS
            && r.y <= p.y.max(q.y) + GEOM_EPS
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

/// True when no two non-adjacent edges touch and no vertex repeats.
pub fn polygon_is_simple(vertices: &[Vec2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if vertices[i].dist(vertices[j]) <= GEOM_EPS {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Points spread evenly by arc length along a closed polygon.
pub fn sample_polygon_boundary(vertices: &[Vec2], n: usize) -> Vec<Vec2> {
    let m = vertices.len();
    let lengths: Vec<f64> = (0..m)
        .map(|i| vertices[i].dist(vertices[(i + 1) % m]))
        .collect();
    let total: f64 = lengths.iter().sum();
    let mut out = Vec::with_capacity(n);
    let mut edge = 0;
    let mut edge_start = 0.0;
    for k in 0..n {
        let s = total * (k as f64 + 0.5) / n as f64;
        while edge + 1 < m && s > edge_start + lengths[edge] {
            edge_start += lengths[edge];
            edge += 1;
        }
        let t = ((s - edge_start) / lengths[edge]).clamp(0.0, 1.0);
        out.push(vertices[edge].lerp(vertices[(edge + 1) % m], t));
    }
    out
}

/// Drops vertices whose two incident edges are collinear (zero turn).
pub fn merge_collinear(vertices: &[Vec2]) -> Vec<Vec2> {
    let mut v: Vec<Vec2> = vertices.to_vec();
    loop {
        let n = v.len();
        if n <= 3 {
            return v;
        }
        let found = (0..n).find(|&i| {
            let a = v[(i + n - 1) % n];
            let b = v[i];
            let c = v[(i + 1) % n];
            let scale = (b - a).norm() * (c - b).norm();
            (b - a).cross(c - b).abs() <= GEOM_EPS * scale.max(GEOM_EPS) && (b - a).dot(c - b) > 0.0
        });
        match found {
            Some(i) => {
                v.remove(i);
            }
            None => return v,
        }
    }
}

/// Outward mitred offset of a counterclockwise simple polygon by `r >= 0`.
///
/// Every edge is translated by `r` along its outward normal and consecutive
/// offset edges are re-intersected. At convex corners the mitre tip lies
/// farther than `r` from the input, so the result contains the true
/// `r`-dilation.
pub fn dilate_polygon(vertices: &[Vec2], r: f64) -> Result<Vec<Vec2>, GeomError> {
    if r == 0.0 {
        return Ok(vertices.to_vec());
    }
    let v = merge_collinear(vertices);
    let n = v.len();
    let outward = |i: usize| {
        let d = (v[(i + 1) % n] - v[i]).normalized();
        Vec2::new(d.y, -d.x)
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let (n0, n1) = (outward(prev), outward(i));
        // Intersection of the two offset lines through v[i] + r·n0 and v[i] + r·n1.
        let denom = 1.0 + n0.dot(n1);
        if denom <= 1e-12 {
            return Err(GeomError::SelfIntersection);
        }
        out.push(v[i] + (n0 + n1) * (r / denom));
    }
    // Offsetting must not flip any edge.
    for i in 0..n {
        let orig = v[(i + 1) % n] - v[i];
        let new = out[(i + 1) % n] - out[i];
        if orig.dot(new) <= 0.0 {
            return Err(GeomError::SelfIntersection);
        }
    }
    if !polygon_is_simple(&out) {
        return Err(GeomError::SelfIntersection);
    }
    Ok(out)
}

/// Result of a ray cast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Vec2,
    pub distance: f64,
    /// Index of the target that was hit.
    pub target: usize,
}

/// Something a ray can hit.
pub trait RayTarget {
    /// Smallest `t >= 0` with `origin + t·dir` on the target boundary.
    fn ray_distance(&self, origin: Vec2, dir: Vec2) -> Option<f64>;
}

fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = a - origin;
    let t = w.cross(e) / denom;
    let s = w.cross(dir) / denom;
    if t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
        Some(t)
    } else {
        None
    }
}

fn ray_polyline(origin: Vec2, dir: Vec2, vertices: &[Vec2]) -> Option<f64> {
    let n = vertices.len();
    (0..n)
        .filter_map(|i| ray_segment(origin, dir, vertices[i], vertices[(i + 1) % n]))
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

/// A line segment target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment(pub Vec2, pub Vec2);

impl RayTarget for Segment {
    fn ray_distance(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        ray_segment(origin, dir, self.0, self.1)
    }
}

/// A closed simple polygon given by its vertices.
#[derive(Debug, Clone, Copy)]
pub struct PolygonRef<'a>(pub &'a [Vec2]);

impl RayTarget for PolygonRef<'_> {
    fn ray_distance(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        ray_polyline(origin, dir, self.0)
    }
}

impl RayTarget for ConvexObstacle {
    fn ray_distance(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            ConvexObstacle::Disk { center, radius } => {
                let oc = origin - *center;
                let b = oc.dot(dir);
                let c = oc.norm_sq() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                let t0 = -b - s;
                let t1 = -b + s;
                if t0 >= 0.0 {
                    Some(t0)
                } else if t1 >= 0.0 {
                    Some(t1)
                } else {
                    None
                }
            }
            ConvexObstacle::Polygon(p) => ray_polyline(origin, dir, p.vertices()),
        }
    }
}

/// Nearest hit along `origin + t·dir` with `t <= max_range`.
pub fn ray_cast(
    origin: Vec2,
    dir: Vec2,
    targets: &[&dyn RayTarget],
    max_range: f64,
) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for (i, target) in targets.iter().enumerate() {
        if let Some(t) = target.ray_distance(origin, dir) {
            if t <= max_range && best.map_or(true, |b| t < b.distance) {
                best = Some(RayHit {
                    point: origin + dir * t,
                    distance: t,
                    target: i,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> ConvexPolygon {
        ConvexPolygon::rectangle(-1.0, -1.0, 1.0, 1.0)
    }

    #[test]
    fn project_disk_and_square() {
        let disk = ConvexObstacle::Disk {
            center: Vec2::ZERO,
            radius: 1.0,
        };
        assert_eq!(project_convex(Vec2::new(2.0, 0.0), &disk), Vec2::new(1.0, 0.0));
        assert_eq!(project_convex(Vec2::ZERO, &disk), Vec2::ZERO);
        let p = project_convex(Vec2::new(3.0, 4.0), &square());
        assert!(p.dist(Vec2::new(1.0, 1.0)) < 1e-12);
    }

    #[test]
    fn project_square_matches_grid_search() {
        // Brute-force minimization over a 401×401 grid of the square.
        let q = Vec2::new(3.0, 4.0);
        let mut best = (f64::INFINITY, Vec2::ZERO);
        for i in 0..=400 {
            for j in 0..=400 {
                let c = Vec2::new(-1.0 + i as f64 / 200.0, -1.0 + j as f64 / 200.0);
                let d = c.dist(q);
                if d < best.0 {
                    best = (d, c);
                }
            }
        }
        assert!(square().project(q).dist(best.1) < 1e-9);
    }

    #[test]
    fn halfplane_intersection_cases() {
        let sq = square();
        assert_eq!(intersect_halfplanes(&[], &sq).unwrap(), sq);

        let clip = HalfPlane::new(Vec2::new(0.5, 0.0), Vec2::new(-1.0, 0.0));
        let r = intersect_halfplanes(&[clip], &sq).unwrap();
        let xs: Vec<f64> = r.vertices().iter().map(|v| v.x).collect();
        assert!(xs.iter().all(|&x| (-1.0 - 1e-12..=0.5 + 1e-12).contains(&x)));
        assert!((r.area() - 3.0).abs() < 1e-12);

        let a = HalfPlane::new(Vec2::new(-2.0, 0.0), Vec2::new(-1.0, 0.0));
        let b = HalfPlane::new(Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0));
        assert_eq!(
            intersect_halfplanes(&[a, b], &ConvexPolygon::rectangle(-5.0, -5.0, 5.0, 5.0)),
            Err(GeomError::EmptyIntersection)
        );
    }

    #[test]
    fn hull_drops_interior_point() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.5),
        ];
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.len(), 4);
        let tri = vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0)];
        assert_eq!(convex_hull(&tri).unwrap().len(), 3);
        let line = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)];
        assert!(matches!(convex_hull(&line), Err(GeomError::DegenerateInput(_))));
    }

    fn star10() -> Vec<Vec2> {
        (0..10)
            .map(|i| {
                let r = if i % 2 == 0 { 1.0 } else { 0.45 };
                Vec2::from_angle(PI / 2.0 + i as f64 * PI / 5.0) * r
            })
            .collect()
    }

    /// O(n³) hull: a point pair (i, j) is a hull edge if every other point is
    /// strictly left of i→j.
    fn brute_hull_vertices(pts: &[Vec2]) -> Vec<usize> {
        let mut on_hull = vec![false; pts.len()];
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i == j {
                    continue;
                }
                let all_left = (0..pts.len())
                    .filter(|&k| k != i && k != j)
                    .all(|k| (pts[j] - pts[i]).cross(pts[k] - pts[i]) > 1e-12);
                if all_left {
                    on_hull[i] = true;
                    on_hull[j] = true;
                }
            }
        }
        (0..pts.len()).filter(|&i| on_hull[i]).collect()
    }

    #[test]
    fn star_hull_has_five_vertices() {
        let pts = star10();
        let mut idx = hull_indices(&pts).unwrap();
        idx.sort();
        assert_eq!(idx, brute_hull_vertices(&pts));
        assert_eq!(idx, vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn ray_cast_examples() {
        let disk = ConvexObstacle::Disk {
            center: Vec2::new(3.0, 0.0),
            radius: 1.0,
        };
        let targets: [&dyn RayTarget; 1] = [&disk];
        let hit = ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &targets, 10.0).unwrap();
        assert!(hit.point.dist(Vec2::new(2.0, 0.0)) < 1e-12);
        assert!((hit.distance - 2.0).abs() < 1e-12);
        assert!(ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &targets, 1.5).is_none());

        let seg = Segment(Vec2::new(-1.0, 2.0), Vec2::new(1.0, 2.0));
        let targets: [&dyn RayTarget; 1] = [&seg];
        let hit = ray_cast(Vec2::ZERO, Vec2::new(0.0, 1.0), &targets, 10.0).unwrap();
        assert!(hit.point.dist(Vec2::new(0.0, 2.0)) < 1e-12);
    }

    #[test]
    fn dilate_zero_and_square() {
        let sq = square().vertices().to_vec();
        assert_eq!(dilate_polygon(&sq, 0.0).unwrap(), sq);
        let d = dilate_polygon(&sq, 0.1).unwrap();
        let expect = ConvexPolygon::rectangle(-1.1, -1.1, 1.1, 1.1);
        for (a, b) in d.iter().zip(expect.vertices()) {
            assert!(a.dist(*b) < 1e-12);
        }
    }

    fn u_shape() -> Vec<Vec2> {
        [
            (-2.0, 0.0),
            (2.0, 0.0),
            (2.0, 2.0),
            (1.2, 2.0),
            (0.4, 0.7),
            (-0.4, 0.7),
            (-1.2, 2.0),
            (-2.0, 2.0),
        ]
        .iter()
        .map(|&(x, y)| Vec2::new(x, y))
        .collect()
    }

    #[test]
    fn dilated_u_boundary_keeps_clearance() {
        let u = u_shape();
        let d = dilate_polygon(&u, 0.2).unwrap();
        for p in sample_polygon_boundary(&d, 4000) {
            assert!(!point_in_polygon(p, &u));
            assert!(polygon_boundary_distance(p, &u) >= 0.2 - 1e-6);
        }
    }

    #[test]
    fn dilate_detects_collapse() {
        // A slot narrower than 2r closes up.
        let slot = [
            (0.0, 0.0),
            (3.0, 0.0),
            (3.0, 2.0),
            (1.6, 2.0),
            (1.6, 0.5),
            (1.4, 0.5),
            (1.4, 2.0),
            (0.0, 2.0),
        ]
        .iter()
        .map(|&(x, y)| Vec2::new(x, y))
        .collect::<Vec<_>>();
        assert_eq!(dilate_polygon(&slot, 0.2), Err(GeomError::SelfIntersection));
    }

    fn arb_points() -> impl Strategy<Value = Vec<Vec2>> {
        prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..30)
            .prop_map(|v| v.into_iter().map(|(x, y)| Vec2::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn hull_matches_brute_force(pts in arb_points()) {
            if let Ok(mut idx) = hull_indices(&pts) {
                idx.sort();
                prop_assert_eq!(idx, brute_hull_vertices(&pts));
            }
        }

        #[test]
        fn projection_idempotent_and_variational(
            qx in -6.0..6.0f64, qy in -6.0..6.0f64,
            pts in arb_points(),
        ) {
            if let Ok(poly) = convex_hull(&pts) {
                let q = Vec2::new(qx, qy);
                let p = poly.project(q);
                prop_assert!(poly.project(p).dist(p) <= 1e-12);
                if !poly.contains(q) {
                    for &c in poly.vertices() {
                        prop_assert!((q - p).dot(c - p) <= 1e-9);
                    }
                }
            }
        }

        #[test]
        fn clipping_respects_every_plane(
            planes in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, 0.0..std::f64::consts::TAU), 0..8)
        ) {
            let hps: Vec<HalfPlane> = planes
                .iter()
                .map(|&(x, y, a)| HalfPlane::new(Vec2::new(x, y), Vec2::from_angle(a)))
                .collect();
            let seed = ConvexPolygon::regular(Vec2::ZERO, 3.0, 64);
            if let Ok(lf) = intersect_halfplanes(&hps, &seed) {
                for v in lf.vertices() {
                    for hp in &hps {
                        prop_assert!(hp.signed_distance(*v) >= -1e-9);
                    }
                }
            }
        }
    }
}
