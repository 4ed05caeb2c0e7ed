//! The map `h` from the mapped layer to the model layer, with its first and
//! second derivatives and the lift to unicycle poses.
//!
//! Near star `j`, `h(x) = x + σ_j(x)(ν_j(x) − 1)(x − x*_j)`, where the switch
//! `σ_j` is one on the obstacle boundary and zero outside the band
//! `β_j ≥ ε_j`, and `ν_j = ρ_j/‖x − x*_j‖` scales the boundary onto a circle.

use thiserror::Error;

use crate::geom::{Mat2, Vec2};
use crate::implicit::{ImplicitError, PlacedObstacle};
use crate::world::SemanticMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DiffeoError {
    #[error("point is too close to a polygon vertex")]
    NearVertex,
    #[error("point coincides with a star center")]
    AtStarCenter,
    #[error("Jacobian is singular")]
    Singular,
    #[error("inverse did not converge")]
    NoConvergence,
}

impl From<ImplicitError> for DiffeoError {
    fn from(_: ImplicitError) -> Self {
        DiffeoError::NearVertex
    }
}

/// `ζ(χ) = e^{−1/χ}` for `χ > 0`, else 0.
pub fn zeta(chi: f64) -> f64 {
    if chi > 0.0 {
        (-1.0 / chi).exp()
    } else {
        0.0
    }
}

/// `ζ'(χ) = ζ(χ)/χ²`.
pub fn zeta1(chi: f64) -> f64 {
    if chi > 0.0 {
        zeta(chi) / (chi * chi)
    } else {
        0.0
    }
}

/// `ζ''(χ) = ζ(χ)(1/χ⁴ − 2/χ³)`.
pub fn zeta2(chi: f64) -> f64 {
    if chi > 0.0 {
        let c3 = chi * chi * chi;
        zeta(chi) * (1.0 / (c3 * chi) - 2.0 / c3)
    } else {
        0.0
    }
}

/// `η(χ) = ζ(ε − χ)/ζ(ε)` and its first two derivatives.
fn eta(chi: f64, eps: f64) -> (f64, f64, f64) {
    let z = zeta(eps);
    let u = eps - chi;
    (zeta(u) / z, -zeta1(u) / z, zeta2(u) / z)
}

/// Switch values and derivatives for every star in a map.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchEval {
    pub sigma: Vec<f64>,
    pub sigma_d: f64,
    pub grads: Vec<Vec2>,
    pub hessians: Vec<Mat2>,
}

#[derive(Debug, Clone, Copy)]
struct Switch {
    sigma: f64,
    grad: Vec2,
    hess: Mat2,
}

fn switch_of(star: &PlacedObstacle, x: Vec2) -> Result<Switch, DiffeoError> {
    let j = star.beta_jet(x)?;
    let (s, s1, s2) = eta(j.value, star.epsilon);
    Ok(Switch {
        sigma: s,
        grad: j.grad * s1,
        hess: Mat2::outer(j.grad, j.grad).scale(s2).add(&j.hess.scale(s1)),
    })
}

/// Evaluates every switch `σ_j`, and `σ_d = 1 − Σσ_j`.
pub fn switches(x: Vec2, map: &SemanticMap) -> Result<SwitchEval, DiffeoError> {
    let mut out = SwitchEval {
        sigma: Vec::with_capacity(map.stars.len()),
        sigma_d: 1.0,
        grads: Vec::with_capacity(map.stars.len()),
        hessians: Vec::with_capacity(map.stars.len()),
    };
    for star in &map.stars {
        let sw = if star.beta(x) < star.epsilon {
            switch_of(star, x)?
        } else {
            Switch {
                sigma: 0.0,
                grad: Vec2::ZERO,
                hess: Mat2::ZERO,
            }
        };
        out.sigma.push(sw.sigma);
        out.grads.push(sw.grad);
        out.hessians.push(sw.hess);
    }
    out.sigma_d = 1.0 - out.sigma.iter().sum::<f64>();
    Ok(out)
}

/// Deforming factor `ν = ρ/‖x − x*‖` with gradient and Hessian.
pub fn nu(x: Vec2, center: Vec2, rho: f64) -> Result<(f64, Vec2, Mat2), DiffeoError> {
    let w = x - center;
    let r2 = w.norm_sq();
    if r2 == 0.0 {
        return Err(DiffeoError::AtStarCenter);
    }
    let r = r2.sqrt();
    let r3 = r2 * r;
    let grad = w * (-rho / r3);
    let hess = Mat2::outer(w, w)
        .scale(3.0 * rho / (r3 * r2))
        .add(&Mat2::scaled_identity(-rho / r3));
    Ok((rho / r, grad, hess))
}

/// `h(x)`, `D_x h` and `∂[D_x h]_{ab}/∂x_c` stored as `djac[a][b][c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffeoEval {
    pub y: Vec2,
    pub jacobian: Mat2,
    pub djac: [[[f64; 2]; 2]; 2],
    /// Index into `SemanticMap::stars` of the star whose band contains `x`.
    pub active: Option<usize>,
}

impl DiffeoEval {
    fn identity(x: Vec2) -> Self {
        DiffeoEval {
            y: x,
            jacobian: Mat2::IDENTITY,
            djac: [[[0.0; 2]; 2]; 2],
            active: None,
        }
    }
}

/// Stars whose band might contain `x`, with `β_j(x) < ε_j` confirmed.
fn active_stars(x: Vec2, map: &SemanticMap) -> impl Iterator<Item = usize> + '_ {
    map.stars.iter().enumerate().filter_map(move |(j, s)| {
        let reach = s.bounding_radius() + (10.0 * s.epsilon).max(1.0);
        if x.dist(s.center) <= reach && s.beta(x) < s.epsilon {
            Some(j)
        } else {
            None
        }
    })
}

/// Evaluates `h` and its derivatives at `x`.
///
/// ```
/// use starnav::diffeo::diffeo_eval;
/// use starnav::geom::{Mat2, Vec2};
/// use starnav::world::SemanticMap;
///
/// let d = diffeo_eval(Vec2::new(1.0, 2.0), &SemanticMap::new()).unwrap();
/// assert_eq!(d.y, Vec2::new(1.0, 2.0));
/// assert_eq!(d.jacobian, Mat2::IDENTITY);
/// ```
pub fn diffeo_eval(x: Vec2, map: &SemanticMap) -> Result<DiffeoEval, DiffeoError> {
    let mut out = DiffeoEval::identity(x);
    for j in active_stars(x, map) {
        let star = &map.stars[j];
        let sw = switch_of(star, x)?;
        let (nv, gnu, hnu) = nu(x, star.center, star.rho)?;
        let w = x - star.center;
        let a = sw.sigma * (nv - 1.0);
        let ga = sw.grad * (nv - 1.0) + gnu * sw.sigma;
        let ha = sw
            .hess
            .scale(nv - 1.0)
            .add(&Mat2::outer(sw.grad, gnu))
            .add(&Mat2::outer(gnu, sw.grad))
            .add(&hnu.scale(sw.sigma));

        out.y += w * a;
        out.jacobian = out
            .jacobian
            .add(&Mat2::scaled_identity(a))
            .add(&Mat2::outer(w, ga));
        let wv = [w.x, w.y];
        let gv = [ga.x, ga.y];
        for (ia, row) in out.djac.iter_mut().enumerate() {
            for (ib, col) in row.iter_mut().enumerate() {
                for (ic, v) in col.iter_mut().enumerate() {
                    let mut t = wv[ia] * ha.get(ib, ic);
                    if ia == ib {
                        t += gv[ic];
                    }
                    if ia == ic {
                        t += gv[ib];
                    }
                    *v += t;
                }
            }
        }
        out.active = Some(j);
    }
    Ok(out)
}

/// `h(x)` alone. Needs only values of `β`, so unlike [`diffeo_eval`] it is
/// defined at polygon vertices.
pub fn map_point(x: Vec2, map: &SemanticMap) -> Result<Vec2, DiffeoError> {
    let mut y = x;
    for j in active_stars(x, map) {
        let star = &map.stars[j];
        let sigma = eta(star.beta(x), star.epsilon).0;
        let w = x - star.center;
        if w.norm_sq() == 0.0 {
            return Err(DiffeoError::AtStarCenter);
        }
        y += w * (sigma * (star.rho / w.norm() - 1.0));
    }
    Ok(y)
}

/// Quantities of the lifted map `(x, ψ) ↦ (h(x), ξ(x, ψ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se2Eval {
    pub diffeo: DiffeoEval,
    /// `e = D_x h · [cos ψ, sin ψ]`.
    pub e: Vec2,
    /// `ξ = atan2(e₂, e₁)`.
    pub xi: f64,
    pub dxi_dpsi: f64,
    /// Row `D_x ξ`.
    pub dxi_dx: Vec2,
    /// `D_x ξ · [cos ψ, sin ψ]`.
    pub dxi_t: f64,
}

pub fn se2_eval(x: Vec2, psi: f64, map: &SemanticMap) -> Result<Se2Eval, DiffeoError> {
    let d = diffeo_eval(x, map)?;
    let t = Vec2::from_angle(psi);
    let e = d.jacobian.mul_vec(t);
    let n2 = e.norm_sq();
    if n2 == 0.0 {
        return Err(DiffeoError::Singular);
    }
    let tv = [t.x, t.y];
    // ∂e_a/∂x_c = Σ_b ∂J_ab/∂x_c t_b
    let mut de = [[0.0; 2]; 2];
    for (ia, row) in de.iter_mut().enumerate() {
        for (ic, v) in row.iter_mut().enumerate() {
            *v = (0..2).map(|ib| d.djac[ia][ib][ic] * tv[ib]).sum();
        }
    }
    let dxi_dx = Vec2::new(
        (e.x * de[1][0] - e.y * de[0][0]) / n2,
        (e.x * de[1][1] - e.y * de[0][1]) / n2,
    );
    let (alpha1, alpha2) = (-e.y, e.x);
    let beta = |ia: usize| -> f64 {
        let mut s = 0.0;
        for ib in 0..2 {
            for ic in 0..2 {
                s += d.djac[ia][ib][ic] * tv[ib] * tv[ic];
            }
        }
        s
    };
    let dxi_t = (alpha1 * beta(0) + alpha2 * beta(1)) / n2;
    Ok(Se2Eval {
        diffeo: d,
        e,
        xi: e.y.atan2(e.x),
        dxi_dpsi: d.jacobian.det() / n2,
        dxi_dx,
        dxi_t,
    })
}

/// Solves `h(x) = y` by damped Newton iteration from `x0`.
pub fn inverse_h(y: Vec2, map: &SemanticMap, x0: Vec2) -> Result<Vec2, DiffeoError> {
    const TOL: f64 = 1e-10;
    let mut x = x0;
    let mut d = diffeo_eval(x, map)?;
    let mut res = (d.y - y).norm();
    for _ in 0..100 {
        if res < TOL {
            return Ok(x);
        }
        let step = d.jacobian.solve(d.y - y).ok_or(DiffeoError::Singular)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = x - step * lambda;
            if let Ok(dc) = diffeo_eval(cand, map) {
                let rc = (dc.y - y).norm();
                if rc < res {
                    x = cand;
                    d = dc;
                    res = rc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res < TOL {
        Ok(x)
    } else {
        Err(DiffeoError::NoConvergence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ConvexPolygon;
    use crate::world::{CatalogueEntry, FamiliarObstacle, World};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn u_entry() -> CatalogueEntry {
        let raw = [
            (-2.0, 0.0),
            (2.0, 0.0),
            (2.0, 2.0),
            (1.4, 2.0),
            (0.4, 1.0),
            (-0.4, 1.0),
            (-1.4, 2.0),
            (-2.0, 2.0),
        ]
        .map(|(x, y)| Vec2::new(x, y))
        .to_vec();
        CatalogueEntry::new("u", raw, Vec2::new(0.0, 0.35), 0.3, 0.2, 20).unwrap()
    }

    fn one_star() -> (World, SemanticMap) {
        let f = FamiliarObstacle::new(&u_entry(), 0.4, Vec2::new(1.0, -0.5)).unwrap();
        let w = World::new(
            ConvexPolygon::rectangle(-10.0, -10.0, 10.0, 10.0),
            vec![f],
            vec![],
            Vec2::new(6.0, 6.0),
            0.2,
            5.0,
        )
        .unwrap();
        let mut m = SemanticMap::new();
        m.discover(&w, 0);
        (w, m)
    }

    /// Uniform sample from the band `0 < β < ε` by rejection.
    fn band_point(star: &PlacedObstacle, rng: &mut ChaCha8Rng) -> Vec2 {
        let r = star.bounding_radius() + 1.0;
        loop {
            let q = star.center + Vec2::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
            let b = star.beta(q);
            if b > 0.0 && b < star.epsilon && star.world_vertices().iter().all(|v| v.dist(q) > 1e-7) {
                return q;
            }
        }
    }

    fn fd<T>(f: impl Fn(Vec2) -> T, x: Vec2, dir: Vec2, h: f64, comb: impl Fn([T; 4], f64) -> T) -> T {
        comb([f(x + dir * (2.0 * h)), f(x + dir * h), f(x - dir * h), f(x - dir * (2.0 * h))], h)
    }

    fn d1(v: [f64; 4], h: f64) -> f64 {
        (-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * h)
    }

    fn d1v(v: [Vec2; 4], h: f64) -> Vec2 {
        (v[0] * -1.0 + v[1] * 8.0 - v[2] * 8.0 + v[3]) / (12.0 * h)
    }

    #[test]
    fn zeta_examples() {
        assert_eq!((zeta(-1.0), zeta1(-1.0), zeta2(-1.0)), (0.0, 0.0, 0.0));
        assert!((zeta(1.0) - 1.0 / E).abs() < 1e-15);
        assert!((zeta1(1.0) - 1.0 / E).abs() < 1e-15);
        // ζ''(0.5) is exactly zero, so the error is measured against ζ'(0.5).
        let n = fd(|q| zeta1(q.x), Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.0), 1e-5, d1);
        assert!((n - zeta2(0.5)).abs() <= 1e-6 * n.abs().max(zeta1(0.5)));
        for chi in [0.05, 0.2, 0.3, 1.0, 3.0] {
            let n = fd(|q| zeta1(q.x), Vec2::new(chi, 0.0), Vec2::new(1.0, 0.0), 1e-5, d1);
            assert!((n - zeta2(chi)).abs() <= 1e-6 * n.abs(), "{chi}");
        }
    }

    #[test]
    fn nu_examples() {
        let (v, g, _) = nu(Vec2::new(2.0, 0.0), Vec2::ZERO, 1.0).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(g, Vec2::new(-0.25, 0.0));
        let (v, _, _) = nu(Vec2::new(0.6, 0.8), Vec2::ZERO, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(nu(Vec2::ZERO, Vec2::ZERO, 1.0), Err(DiffeoError::AtStarCenter));
        let x = Vec2::new(0.7, -1.3);
        let (_, _, h) = nu(x, Vec2::ZERO, 0.8).unwrap();
        let g = |q: Vec2| nu(q, Vec2::ZERO, 0.8).unwrap().1;
        let c0 = fd(g, x, Vec2::new(1.0, 0.0), 1e-5, d1v);
        let c1 = fd(g, x, Vec2::new(0.0, 1.0), 1e-5, d1v);
        let n = Mat2::new(c0.x, c1.x, c0.y, c1.y);
        assert!(n.add(&h.scale(-1.0)).frobenius() <= 1e-6 * n.frobenius());
    }

    #[test]
    fn switch_examples() {
        let (_, m) = one_star();
        let star = &m.stars[0];
        let edge = star.world_vertices();
        let q = edge[0].lerp(edge[1], 0.5);
        let s = switches(q, &m).unwrap();
        assert!((s.sigma[0] - 1.0).abs() < 1e-9);
        let far = switches(Vec2::new(8.0, 8.0), &m).unwrap();
        assert_eq!(far.sigma, vec![0.0]);
        assert_eq!(far.sigma_d, 1.0);
        assert_eq!(far.grads[0], Vec2::ZERO);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let q = Vec2::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            if star.world_vertices().iter().any(|v| v.dist(q) < 1e-6) || star.beta(q) < 0.0 {
                continue;
            }
            let s = switches(q, &m).unwrap();
            assert!((s.sigma.iter().sum::<f64>() + s.sigma_d - 1.0).abs() < 1e-15);
        }
    }

    /// `h` written out directly as a partition of unity over all stars.
    fn h_oracle(x: Vec2, m: &SemanticMap) -> Vec2 {
        let s = switches(x, m).unwrap();
        let mut y = x * s.sigma_d;
        for (j, star) in m.stars.iter().enumerate() {
            let w = x - star.center;
            y += (w * (star.rho / w.norm()) + star.center) * s.sigma[j];
        }
        y
    }

    #[test]
    fn identity_far_away_and_boundary_onto_circle() {
        let (_, m) = one_star();
        let d = diffeo_eval(Vec2::new(8.0, 8.0), &m).unwrap();
        assert_eq!(d.y, Vec2::new(8.0, 8.0));
        assert_eq!(d.jacobian, Mat2::IDENTITY);
        assert_eq!(d.djac, [[[0.0; 2]; 2]; 2]);
        let star = &m.stars[0];
        let v = star.world_vertices();
        for k in 0..v.len() {
            let q = v[k].lerp(v[(k + 1) % v.len()], 0.3);
            let y = map_point(q, &m).unwrap();
            assert!((y.dist(star.center) - star.rho).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_partition_of_unity_form() {
        let (_, m) = one_star();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let q = band_point(&m.stars[0], &mut rng);
            let a = map_point(q, &m).unwrap();
            let b = h_oracle(q, &m);
            assert!(a.dist(b) < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (_, m) = one_star();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        for _ in 0..1000 {
            let x = band_point(&m.stars[0], &mut rng);
            let d = diffeo_eval(x, &m).unwrap();
            assert!(d.jacobian.det() > 0.0 && d.jacobian.trace() > 0.0);
            let hmap = |q: Vec2| map_point(q, &m).unwrap();
            let c0 = fd(hmap, x, e[0], 1e-5, d1v);
            let c1 = fd(hmap, x, e[1], 1e-5, d1v);
            let jn = Mat2::new(c0.x, c1.x, c0.y, c1.y);
            assert!(jn.add(&d.jacobian.scale(-1.0)).frobenius() <= 1e-6 * jn.frobenius());

            let mut scale = 0.0f64;
            let mut num = [[[0.0; 2]; 2]; 2];
            for c in 0..2 {
                let jm = |q: Vec2| diffeo_eval(q, &m).unwrap().jacobian;
                let col = fd(jm, x, e[c], 1e-5, |v, h| {
                    v[0].scale(-1.0)
                        .add(&v[1].scale(8.0))
                        .add(&v[2].scale(-8.0))
                        .add(&v[3])
                        .scale(1.0 / (12.0 * h))
                });
                for a in 0..2 {
                    for b in 0..2 {
                        num[a][b][c] = col.get(a, b);
                        scale = scale.max(col.get(a, b).abs());
                    }
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let err = (num[a][b][c] - d.djac[a][b][c]).abs();
                        assert!(err <= 1e-5 * num[a][b][c].abs().max(scale).max(1e-3), "{a}{b}{c}: {err}");
                    }
                }
            }
        }
    }

    #[test]
    fn se2_identity_and_derivatives() {
        let s = se2_eval(Vec2::new(8.0, 8.0), PI / 2.0, &one_star().1).unwrap();
        assert!(s.e.dist(Vec2::new(0.0, 1.0)) < 1e-15);
        assert!((s.xi - PI / 2.0).abs() < 1e-15);
        assert_eq!(s.dxi_dpsi, 1.0);

        let (_, m) = one_star();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let x = band_point(&m.stars[0], &mut rng);
            let psi = rng.gen_range(-PI..PI);
            let s = se2_eval(x, psi, &m).unwrap();
            let xi = |q: Vec2, p: f64| se2_eval(q, p, &m).unwrap().xi;
            let unwrap = |v: f64, r: f64| r + (v - r + PI).rem_euclid(2.0 * PI) - PI;
            let dpsi = fd(|q| unwrap(xi(x, psi + q.x), s.xi), Vec2::ZERO, Vec2::new(1.0, 0.0), 1e-6, d1);
            assert!((dpsi - s.dxi_dpsi).abs() <= 1e-5 * dpsi.abs());
            assert!(s.dxi_dpsi > 0.0);
            let t = Vec2::from_angle(psi);
            let dt = fd(|q| unwrap(xi(q, psi), s.xi), x, t, 1e-5, d1);
            assert!((dt - s.dxi_t).abs() <= 1e-4 * dt.abs().max(1.0));
            assert!((s.dxi_dx.dot(t) - s.dxi_t).abs() < 1e-9 * s.dxi_t.abs().max(1.0));
        }
    }

    #[test]
    fn inverse_examples() {
        let (_, m) = one_star();
        assert_eq!(inverse_h(Vec2::new(8.0, 8.0), &m, Vec2::new(8.0, 8.0)).unwrap(), Vec2::new(8.0, 8.0));
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let x = band_point(&m.stars[0], &mut rng);
            let y = map_point(x, &m).unwrap();
            let got = inverse_h(y, &m, x + Vec2::new(0.01, -0.01)).unwrap();
            assert!(got.dist(x) < 1e-8);
        }
        let star = &m.stars[0];
        let y = star.center + Vec2::from_angle(2.0) * star.rho;
        let x0 = crate::world::level_point(star, Vec2::from_angle(2.0), 0.05);
        let x = inverse_h(y, &m, x0).unwrap();
        assert!(star.beta(x).abs() < 1e-8);
    }
}
