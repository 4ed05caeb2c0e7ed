//! Implicit obstacle functions for star-shaped polygons.
//!
//! A polygon is encoded as an AND-OR tree of edge half-planes combined with
//! the R-functions [`r_and`] and [`r_or`]. The negated root value `β` is
//! negative inside, zero on the boundary and positive outside, and behaves
//! like a smoothed distance to the polygon away from its vertices.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::geom::{
    hull_indices, merge_collinear, polygon_is_simple, point_in_polygon, signed_area, HalfPlane,
    Mat2, Vec2,
};

/// Distance from a vertex inside which derivatives are refused.
pub const VERTEX_GUARD: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImplicitError {
    #[error("polygon is not simple")]
    NotSimplePolygon,
    #[error("polygon vertices are not in counterclockwise order")]
    NotCounterClockwise,
    #[error("chain splits mix convex and concave vertices")]
    MixedSplit,
    #[error("R-function exponent must be even and at least 2, got {0}")]
    InvalidExponent(u32),
    #[error("star center lies outside the polygon")]
    CenterOutside,
    #[error("point is within {VERTEX_GUARD} of a polygon vertex")]
    NearVertex,
}

/// `w1 ∧ w2 = w1 + w2 − (w1^p + w2^p)^{1/p}`.
pub fn r_and(w1: f64, w2: f64, p: u32) -> f64 {
    w1 + w2 - p_norm(w1, w2, p)
}

/// `w1 ∨ w2 = w1 + w2 + (w1^p + w2^p)^{1/p}`.
pub fn r_or(w1: f64, w2: f64, p: u32) -> f64 {
    w1 + w2 + p_norm(w1, w2, p)
}

/// `¬w = −w`.
pub fn r_neg(w: f64) -> f64 {
    -w
}

/// `(a^p + b^p)^{1/p}` for even `p`, scaled against overflow.
fn p_norm(a: f64, b: f64, p: u32) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        return 0.0;
    }
    let pi = p as i32;
    m * ((a / m).powi(pi) + (b / m).powi(pi)).powf(1.0 / p as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Edge half-plane `ω(x) = (x − anchor)·n`, with `n` the inward unit
    /// normal. `edge` is the 1-based index of the edge ending at vertex
    /// `edge mod n`.
    Leaf { plane: HalfPlane, edge: usize },
    Internal { op: BoolOp, children: Vec<TreeNode> },
}

/// Value, gradient and Hessian of a scalar field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Mat2,
}

impl Jet {
    fn neg(self) -> Jet {
        Jet {
            value: -self.value,
            grad: -self.grad,
            hess: self.hess.scale(-1.0),
        }
    }
}

fn combine(op: BoolOp, a: Jet, b: Jet, p: u32) -> Result<Jet, ImplicitError> {
    let s = p_norm(a.value, b.value, p);
    if s == 0.0 || !s.is_finite() {
        return Err(ImplicitError::NearVertex);
    }
    let pf = p as f64;
    let pi = p as i32;
    let (ra, rb) = (a.value / s, b.value / s);
    let sa = ra.powi(pi - 1);
    let sb = rb.powi(pi - 1);
    let saa = (pf - 1.0) / s * ra.powi(pi - 2) * rb.powi(pi);
    let sbb = (pf - 1.0) / s * rb.powi(pi - 2) * ra.powi(pi);
    let sab = -(pf - 1.0) / s * sa * sb;

    let ds = a.grad * sa + b.grad * sb;
    let hs = a
        .hess
        .scale(sa)
        .add(&b.hess.scale(sb))
        .add(&Mat2::outer(a.grad, a.grad).scale(saa))
        .add(&Mat2::outer(b.grad, b.grad).scale(sbb))
        .add(&Mat2::outer(a.grad, b.grad).add(&Mat2::outer(b.grad, a.grad)).scale(sab));
    let sign = match op {
        BoolOp::And => -1.0,
        BoolOp::Or => 1.0,
    };
    Ok(Jet {
        value: a.value + b.value + sign * s,
        grad: a.grad + b.grad + ds * sign,
        hess: a.hess.add(&b.hess).add(&hs.scale(sign)),
    })
}

impl TreeNode {
    fn eval(&self, q: Vec2, p: u32) -> f64 {
        match self {
            TreeNode::Leaf { plane, .. } => plane.signed_distance(q),
            TreeNode::Internal { op, children } => {
                let mut it = children.iter().map(|c| c.eval(q, p));
                let first = it.next().expect("internal node has children");
                it.fold(first, |acc, w| match op {
                    BoolOp::And => r_and(acc, w, p),
                    BoolOp::Or => r_or(acc, w, p),
                })
            }
        }
    }

    fn eval_jet(&self, q: Vec2, p: u32) -> Result<Jet, ImplicitError> {
        match self {
            TreeNode::Leaf { plane, .. } => Ok(Jet {
                value: plane.signed_distance(q),
                grad: plane.normal,
                hess: Mat2::ZERO,
            }),
            TreeNode::Internal { op, children } => {
                let mut acc = children[0].eval_jet(q, p)?;
                for c in &children[1..] {
                    acc = combine(*op, acc, c.eval_jet(q, p)?, p)?;
                }
                Ok(acc)
            }
        }
    }

    fn write_expr(&self, out: &mut String) {
        match self {
            TreeNode::Leaf { edge, .. } => {
                let _ = write!(out, "ω{edge}");
            }
            TreeNode::Internal { op, children } => {
                out.push('(');
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push(match op {
                            BoolOp::And => '∧',
                            BoolOp::Or => '∨',
                        });
                    }
                    c.write_expr(out);
                }
                out.push(')');
            }
        }
    }

    /// Number of leaves below this node.
    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.iter().map(TreeNode::leaf_count).sum(),
        }
    }

    /// True if any internal node below (or at) this one uses `op`.
    pub fn uses(&self, op: BoolOp) -> bool {
        match self {
            TreeNode::Leaf { .. } => false,
            TreeNode::Internal { op: o, children } => {
                *o == op || children.iter().any(|c| c.uses(op))
            }
        }
    }
}

/// AND-OR tree of a star-shaped polygon in its body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleTree {
    root: TreeNode,
    p: u32,
    vertices: Vec<Vec2>,
    star_center: Vec2,
}

impl ObstacleTree {
    /// Builds the tree for a simple counterclockwise polygon.
    ///
    /// ```
    /// use starnav::geom::Vec2;
    /// use starnav::implicit::ObstacleTree;
    ///
    /// let square = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
    ///     .map(|(x, y)| Vec2::new(x, y));
    /// let tree = ObstacleTree::build(&square, Vec2::ZERO, 20).unwrap();
    /// assert_eq!(tree.to_expr(), "¬(ω1∧ω2∧ω3∧ω4)");
    /// assert!(tree.beta(Vec2::new(2.0, 0.0)) > 0.0);
    /// ```
    pub fn build(vertices: &[Vec2], star_center: Vec2, p: u32) -> Result<Self, ImplicitError> {
        if p < 2 || p % 2 != 0 {
            return Err(ImplicitError::InvalidExponent(p));
        }
        if !polygon_is_simple(vertices) {
            return Err(ImplicitError::NotSimplePolygon);
        }
        if signed_area(vertices) <= 0.0 {
            return Err(ImplicitError::NotCounterClockwise);
        }
        let v = merge_collinear(vertices);
        let n = v.len();
        let convex: Vec<bool> = (0..n)
            .map(|i| {
                let a = v[(i + n - 1) % n];
                let b = v[i];
                let c = v[(i + 1) % n];
                (b - a).cross(c - b) > 0.0
            })
            .collect();
        let mut hull = hull_indices(&v).map_err(|_| ImplicitError::NotSimplePolygon)?;
        hull.sort_unstable();

        let leaf = |i: usize| {
            let a = v[i];
            let b = v[(i + 1) % n];
            TreeNode::Leaf {
                plane: HalfPlane::new(a, (b - a).perp()),
                edge: i + 1,
            }
        };

        let mut chains = Vec::with_capacity(hull.len());
        for k in 0..hull.len() {
            let start = hull[k];
            let end = hull[(k + 1) % hull.len()];
            let len = (end + n - start) % n;
            let len = if len == 0 { n } else { len };
            let idx: Vec<usize> = (0..=len).map(|s| (start + s) % n).collect();
            chains.push(build_chain(&idx, &v, &convex, &leaf)?);
        }
        let root = if chains.len() == 1 {
            chains.pop().unwrap()
        } else {
            TreeNode::Internal {
                op: BoolOp::And,
                children: chains,
            }
        };
        Ok(ObstacleTree {
            root,
            p,
            vertices: vertices.to_vec(),
            star_center,
        })
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// The polygon as given to [`ObstacleTree::build`].
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn star_center(&self) -> Vec2 {
        self.star_center
    }

    /// `β` in the body frame.
    pub fn beta(&self, q: Vec2) -> f64 {
        r_neg(self.root.eval(q, self.p))
    }

    /// `β`, `∇β` and `∇²β` in the body frame.
    pub fn beta_jet(&self, q: Vec2) -> Result<Jet, ImplicitError> {
        if self.vertices.iter().any(|v| v.dist(q) <= VERTEX_GUARD) {
            return Err(ImplicitError::NearVertex);
        }
        Ok(self.root.eval_jet(q, self.p)?.neg())
    }

    /// Symbolic form of `β`, e.g. `¬((ω1∨ω2)∧(ω3∨ω4)∧ω5)`.
    pub fn to_expr(&self) -> String {
        let mut s = String::from("¬");
        match &self.root {
            TreeNode::Leaf { .. } => {
                s.push('(');
                self.root.write_expr(&mut s);
                s.push(')');
            }
            TreeNode::Internal { .. } => self.root.write_expr(&mut s),
        }
        s
    }

    /// `0.9` times the distance from the star center to the polygon boundary.
    pub fn choose_rho(&self) -> Result<f64, ImplicitError> {
        let c = self.star_center;
        if !point_in_polygon(c, &self.vertices) {
            return Err(ImplicitError::CenterOutside);
        }
        let d = crate::geom::polygon_boundary_distance(c, &self.vertices);
        if d <= crate::geom::GEOM_EPS {
            return Err(ImplicitError::CenterOutside);
        }
        Ok(0.9 * d)
    }
}

fn build_chain(
    idx: &[usize],
    v: &[Vec2],
    convex: &[bool],
    leaf: &dyn Fn(usize) -> TreeNode,
) -> Result<TreeNode, ImplicitError> {
    if idx.len() == 2 {
        return Ok(leaf(idx[0]));
    }
    let pts: Vec<Vec2> = idx.iter().map(|&i| v[i]).collect();
    let mut splits: Vec<usize> = hull_indices(&pts)
        .map_err(|_| ImplicitError::NotSimplePolygon)?
        .into_iter()
        .filter(|&k| k != 0 && k != idx.len() - 1)
        .collect();
    splits.sort_unstable();
    if splits.is_empty() {
        return Err(ImplicitError::NotSimplePolygon);
    }
    let concave = splits.iter().filter(|&&k| !convex[idx[k]]).count();
    let op = if concave == splits.len() {
        BoolOp::Or
    } else if concave == 0 {
        BoolOp::And
    } else {
        return Err(ImplicitError::MixedSplit);
    };
    let mut bounds = vec![0];
    bounds.extend(splits);
    bounds.push(idx.len() - 1);
    let children = bounds
        .windows(2)
        .map(|w| build_chain(&idx[w[0]..=w[1]], v, convex, leaf))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TreeNode::Internal { op, children })
}

/// An obstacle tree placed in the world by a rotation and a translation
/// of its star center.
#[derive(Debug, Clone)]
pub struct PlacedObstacle {
    pub tree: Arc<ObstacleTree>,
    /// Heading of the body frame (radians).
    pub angle: f64,
    pub rotation: Mat2,
    /// World position of the star center `x*`.
    pub center: Vec2,
    pub epsilon: f64,
    pub rho: f64,
    bound: f64,
}

impl PlacedObstacle {
    pub fn new(tree: Arc<ObstacleTree>, angle: f64, center: Vec2, epsilon: f64) -> Result<Self, ImplicitError> {
        let rho = tree.choose_rho()?;
        let c = tree.star_center();
        let bound = tree
            .vertices()
            .iter()
            .map(|v| v.dist(c))
            .fold(0.0, f64::max);
        Ok(PlacedObstacle {
            tree,
            angle,
            rotation: Mat2::rotation(angle),
            center,
            epsilon,
            rho,
            bound,
        })
    }

    /// World point to body frame.
    pub fn to_body(&self, x: Vec2) -> Vec2 {
        self.rotation.transpose().mul_vec(x - self.center) + self.tree.star_center()
    }

    /// Body point to world frame.
    pub fn to_world(&self, b: Vec2) -> Vec2 {
        self.rotation.mul_vec(b - self.tree.star_center()) + self.center
    }

    pub fn world_vertices(&self) -> Vec<Vec2> {
        self.tree.vertices().iter().map(|&b| self.to_world(b)).collect()
    }

    /// Radius of a circle about `center` containing the polygon.
    pub fn bounding_radius(&self) -> f64 {
        self.bound
    }

    pub fn beta(&self, x: Vec2) -> f64 {
        self.tree.beta(self.to_body(x))
    }

    /// World-frame `β`, `∇β`, `∇²β`.
    pub fn beta_jet(&self, x: Vec2) -> Result<Jet, ImplicitError> {
        let j = self.tree.beta_jet(self.to_body(x))?;
        let r = &self.rotation;
        Ok(Jet {
            value: j.value,
            grad: r.mul_vec(j.grad),
            hess: r.mul_mat(&j.hess).mul_mat(&r.transpose()),
        })
    }

    pub fn beta_grad(&self, x: Vec2) -> Result<Vec2, ImplicitError> {
        self.beta_jet(x).map(|j| j.grad)
    }

    pub fn beta_hess(&self, x: Vec2) -> Result<Mat2, ImplicitError> {
        self.beta_jet(x).map(|j| j.hess)
    }
}
