//! Validation of `B_∞ ⊆ K ⊆ R·B_∞`.

use super::{all_linf_vertices, chord_bisection, dot, lp, ConvexBody, Shape, MAX_VERTEX_DIM, TOL_CHORD};
use super::robust::robust_interior_contains;
use crate::seed;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SandwichFailure {
    /// `B_∞ ⊄ K`.
    Inner,
    /// `K ⊄ R·B_∞`.
    Outer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandwichReport {
    pub inner_ok: bool,
    pub outer_ok: bool,
    /// A point of `B_∞ \ K` (inner failure) or of `K \ R·B_∞` (outer failure).
    pub witness: Option<Vec<f64>>,
    pub failures: Vec<SandwichFailure>,
    /// False when `outer_ok` rests on Monte Carlo falsification only.
    pub outer_exact: bool,
}

impl SandwichReport {
    pub fn ok(&self) -> bool {
        self.inner_ok && self.outer_ok
    }
}

const FALSIFY_DIRECTIONS: usize = 512;

/// Checks both sandwich inclusions. Never fails; problems are reported.
pub fn sandwich_validate(body: &ConvexBody) -> SandwichReport {
    let n = body.dim();
    let origin = vec![0.0; n];
    let (inner_ok, inner_witness) = match robust_interior_contains(body, &origin, 1.0) {
        Ok(true) => (true, None),
        Ok(false) => (false, inner_witness(body)),
        // oracle bodies above the vertex cap: nothing conclusive, report failure
        Err(_) => (false, None),
    };

    let limit = body.declared_r() * (1.0 + TOL_CHORD);
    let (outer_ok, outer_witness, outer_exact) = match outer_extreme(body) {
        Some(p) => {
            let ok = p.iter().all(|v| v.abs() <= limit);
            (ok, (!ok).then_some(p), true)
        }
        None => {
            let (lo, hi) = body.bounding_box();
            if lo.iter().chain(hi).all(|v| v.abs() <= limit) && !body_may_exceed_bbox(body) {
                (true, None, true)
            } else {
                match falsify_outer(body, limit) {
                    Some(w) => (false, Some(w), true),
                    None => (true, None, false),
                }
            }
        }
    };

    let mut failures = Vec::new();
    if !inner_ok {
        failures.push(SandwichFailure::Inner);
    }
    if !outer_ok {
        failures.push(SandwichFailure::Outer);
    }
    SandwichReport {
        inner_ok,
        outer_ok,
        witness: inner_witness.or(outer_witness),
        failures,
        outer_exact,
    }
}

/// Oracle-only bodies get a nominal `[-R, R]ⁿ` box that is not a proven bound.
fn body_may_exceed_bbox(body: &ConvexBody) -> bool {
    match body.shape() {
        Shape::Oracle(_) => true,
        Shape::Intersection(parts) => parts.iter().all(|p| matches!(p, Shape::Oracle(_))),
        _ => false,
    }
}

/// A vertex of `B_∞` outside the body.
fn inner_witness(body: &ConvexBody) -> Option<Vec<f64>> {
    let n = body.dim();
    if let Some((a, b)) = body.halfspaces() {
        for (row, bi) in a.iter().zip(&b) {
            let v: Vec<f64> = row.iter().map(|x| if *x >= 0.0 { 1.0 } else { -1.0 }).collect();
            if dot(row, &v) > *bi {
                return Some(v);
            }
        }
    }
    if n > MAX_VERTEX_DIM {
        return None;
    }
    let mut found = None;
    all_linf_vertices(&vec![0.0; n], 1.0, |y| {
        if body.member(y) {
            true
        } else {
            found = Some(y.to_vec());
            false
        }
    });
    found
}

/// The member point of largest ∞-norm, when it can be computed exactly.
fn outer_extreme(body: &ConvexBody) -> Option<Vec<f64>> {
    let n = body.dim();
    let best_axis = |lo: &[f64], hi: &[f64]| {
        let mut best = (0, hi[0]);
        for (i, v) in (0..n).flat_map(|i| [(i, hi[i]), (i, lo[i])]) {
            if v.abs() > best.1.abs() {
                best = (i, v);
            }
        }
        best
    };
    match body.shape() {
        Shape::Box { center, .. } | Shape::Ball { center, .. } => {
            let (lo, hi) = body.bounding_box();
            let (i, v) = best_axis(lo, hi);
            let mut p = center.clone();
            p[i] = v;
            Some(p)
        }
        Shape::Simplex { corner, size } => {
            let (lo, hi) = body.bounding_box();
            let (i, v) = best_axis(lo, hi);
            let mut p = corner.clone();
            if v != lo[i] {
                p[i] += size;
            }
            Some(p)
        }
        _ => {
            let (a, b) = body.halfspaces()?;
            let mut best: Option<Vec<f64>> = None;
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut c = vec![0.0; n];
                    c[i] = s;
                    if let lp::LpOutcome::Optimal { point, .. } = lp::maximize(&a, &b, &c) {
                        let better = best.as_ref().is_none_or(|p| linf(&point) > linf(p));
                        if better {
                            best = Some(point);
                        }
                    }
                }
            }
            best
        }
    }
}

fn linf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Searches chords through the interior point for a member outside `R·B_∞`.
fn falsify_outer(body: &ConvexBody, limit: f64) -> Option<Vec<f64>> {
    let n = body.dim();
    let x0 = body.interior_point().to_vec();
    let tol = TOL_CHORD * body.declared_r();
    let mut rng = seed::rng(0, "sandwich-falsify");
    let check = |d: &[f64]| -> Option<Vec<f64>> {
        let seg = chord_bisection(body, &x0, d, tol).ok()?;
        for t in [seg.t_lo, seg.t_hi] {
            let p: Vec<f64> = x0.iter().zip(d).map(|(x, di)| x + t * di).collect();
            if linf(&p) > limit && body.member(&p) {
                return Some(p);
            }
        }
        None
    };
    for i in 0..n {
        let mut d = vec![0.0; n];
        d[i] = 1.0;
        if let Some(w) = check(&d) {
            return Some(w);
        }
    }
    for _ in 0..FALSIFY_DIRECTIONS {
        let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d: Vec<f64> = g.iter().map(|v| v / norm).collect();
        if let Some(w) = check(&d) {
            return Some(w);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Oracle;

    #[test]
    fn unit_cube_passes() {
        let r = sandwich_validate(&ConvexBody::cube(3, 1.0).unwrap());
        assert!(r.ok() && r.outer_exact && r.witness.is_none());
    }

    #[test]
    fn big_cube_with_small_radius_fails_outer() {
        let b = ConvexBody::boxed(vec![0.0; 3], vec![2.0; 3], 1.0).unwrap();
        let r = sandwich_validate(&b);
        assert!(r.inner_ok && !r.outer_ok);
        assert_eq!(r.failures, vec![SandwichFailure::Outer]);
        assert_eq!(r.witness, Some(vec![2.0, 0.0, 0.0]));
    }

    #[test]
    fn cutting_halfspace_fails_inner() {
        let b = ConvexBody::intersection(
            vec![
                Shape::HPolytope { a: vec![vec![1.0, 1.0]], b: vec![1.0] },
                Shape::Box { center: vec![0.0, 0.0], halfwidths: vec![1.0, 1.0] },
            ],
            1.0,
        )
        .unwrap();
        let r = sandwich_validate(&b);
        assert!(!r.inner_ok && r.outer_ok);
        let w = r.witness.unwrap();
        assert!(!b.contains(&w).unwrap());
        assert_eq!(w, vec![1.0, 1.0]);
    }

    #[test]
    fn polytope_outer_uses_lp() {
        // cross-polytope ‖x‖₁ ≤ 2 contains B_∞ in 2-D and reaches ∞-norm 2
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let good = ConvexBody::h_polytope(a.clone(), vec![2.0; 4], 2.0).unwrap();
        assert!(sandwich_validate(&good).ok());
        let tight = ConvexBody::h_polytope(a, vec![2.0; 4], 1.5).unwrap();
        let r = sandwich_validate(&tight);
        assert!(!r.outer_ok);
        assert!((linf(r.witness.as_ref().unwrap()) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_outer_falsified() {
        let disc = |rad: f64| Oracle::new("disc", move |x: &[f64]| x[0] * x[0] + x[1] * x[1] <= rad * rad);
        let ok = ConvexBody::oracle(2, disc(1.5), vec![0.0, 0.0], 1.5).unwrap();
        let r = sandwich_validate(&ok);
        assert!(r.ok() && !r.outer_exact);
        let bad = ConvexBody::oracle(2, disc(1.5), vec![0.0, 0.0], 1.0).unwrap();
        let r = sandwich_validate(&bad);
        assert!(r.inner_ok && !r.outer_ok);
        assert!(linf(r.witness.as_ref().unwrap()) > 1.0);
    }
}
