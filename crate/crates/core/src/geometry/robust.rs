//! The robust interior `K_r = {x : x + v ∈ K for all ‖v‖_∞ ≤ r}`.

use super::{all_linf_vertices, dot, ConvexBody, Shape, UniformSampler, MAX_VERTEX_DIM};
use crate::error::{check_dim, invalid, Error, Result};
use crate::seed;

/// Whether the whole ∞-ball of radius `r` around `x` lies in the body.
///
/// Exact for every shape: halfspaces use `aᵢ·x + r‖aᵢ‖₁ ≤ bᵢ`, balls use
/// `Σ(|xᵢ − cᵢ| + r)² ≤ ρ²`, and oracle parts are checked at the 2ⁿ vertices of
/// the ∞-ball (n ≤ 20).
pub fn robust_interior_contains(body: &ConvexBody, x: &[f64], r: f64) -> Result<bool> {
    check_dim(body.dim(), x.len())?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", "must be positive and finite"));
    }
    robust_member(body.shape(), x, r)
}

fn robust_member(shape: &Shape, x: &[f64], r: f64) -> Result<bool> {
    Ok(match shape {
        Shape::Box { center, halfwidths } => x
            .iter()
            .zip(center)
            .zip(halfwidths)
            .all(|((xi, c), h)| (xi - c).abs() + r <= *h),
        Shape::Ball { center, radius } => {
            x.iter().zip(center).map(|(xi, c)| ((xi - c).abs() + r).powi(2)).sum::<f64>() <= radius * radius
        }
        Shape::Intersection(parts) => {
            for p in parts {
                if !robust_member(p, x, r)? {
                    return Ok(false);
                }
            }
            true
        }
        Shape::Oracle(_) => {
            if x.len() > MAX_VERTEX_DIM {
                return Err(Error::Unsupported(format!(
                    "robust interior of oracle bodies is limited to n ≤ {MAX_VERTEX_DIM}"
                )));
            }
            all_linf_vertices(x, r, |y| shape.member(y))
        }
        _ => {
            let (a, b) = shape.halfspaces().expect("polyhedral");
            a.iter()
                .zip(&b)
                .all(|(row, bi)| dot(row, x) + r * row.iter().map(|v| v.abs()).sum::<f64>() <= *bi)
        }
    })
}

/// Monte Carlo estimate of `vol(K_ε)/vol(K)` against the bound `(1 − ε)ⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustVolumeCheck {
    pub ratio_estimate: f64,
    /// Three binomial standard errors.
    pub ci_halfwidth: f64,
    pub bound: f64,
    pub samples: usize,
    /// False when the uniform points came from a walk rather than an exact
    /// sampler.
    pub exact_sampler: bool,
    pub pass: bool,
}

/// Estimates `vol(K_ε)/vol(K)` from `samples` uniform points of `K`.
pub fn check_robust_interior_volume(body: &ConvexBody, eps: f64, samples: usize, seed: u64) -> Result<RobustVolumeCheck> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("epsilon", "must lie in (0, 1)"));
    }
    if samples < 100 {
        return Err(invalid("samples", "at least 100 samples are needed for a binomial CI"));
    }
    let mut rng = seed::rng(seed, "robust-volume");
    let sampler = UniformSampler::for_body(body, &mut rng);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = sampler.sample(body, &mut rng)?;
        hits += robust_interior_contains(body, &x, eps)? as usize;
    }
    let p = hits as f64 / samples as f64;
    let ci = 3.0 * (p * (1.0 - p) / samples as f64).sqrt();
    let bound = (1.0 - eps).powi(body.dim() as i32);
    Ok(RobustVolumeCheck {
        ratio_estimate: p,
        ci_halfwidth: ci,
        bound,
        samples,
        exact_sampler: sampler.is_exact(),
        pass: p + ci >= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Oracle;

    #[test]
    fn cube_shrinks_per_face() {
        let c = ConvexBody::cube(3, 1.0).unwrap();
        assert!(robust_interior_contains(&c, &[0.4; 3], 0.5).unwrap());
        assert!(!robust_interior_contains(&c, &[0.6, 0.0, 0.0], 0.5).unwrap());
        assert!(robust_interior_contains(&c, &[0.0; 3], 0.0).is_err());
    }

    #[test]
    fn halfspace_criterion_matches_corner_checks() {
        let b = ConvexBody::intersection(
            vec![
                Shape::HPolytope { a: vec![vec![1.0, 1.0]], b: vec![1.0] },
                Shape::Box { center: vec![0.0, 0.0], halfwidths: vec![1.0, 1.0] },
            ],
            1.0,
        )
        .unwrap();
        let x = [0.2, 0.2];
        let corners_in = all_linf_vertices(&x, 0.2, |y| b.member(y));
        assert!(corners_in);
        assert_eq!(robust_interior_contains(&b, &x, 0.2).unwrap(), corners_in);
        let x = [0.4, 0.4];
        assert_eq!(
            robust_interior_contains(&b, &x, 0.2).unwrap(),
            all_linf_vertices(&x, 0.2, |y| b.member(y))
        );
    }

    #[test]
    fn ball_and_oracle_agree() {
        let ball = ConvexBody::ball(vec![0.0, 0.0], 2.0, 2.0).unwrap();
        let oracle = ConvexBody::oracle(
            2,
            Oracle::new("disc", |x: &[f64]| x[0] * x[0] + x[1] * x[1] <= 4.0),
            vec![0.0, 0.0],
            2.0,
        )
        .unwrap();
        for x in [[0.0, 0.0], [0.5, 0.7], [1.2, -0.3], [1.0, 1.0]] {
            for r in [0.1, 0.4, 0.9] {
                assert_eq!(
                    robust_interior_contains(&ball, &x, r).unwrap(),
                    robust_interior_contains(&oracle, &x, r).unwrap(),
                    "{x:?} {r}"
                );
            }
        }
    }

    #[test]
    fn cube_volume_ratio_is_tight() {
        let c = ConvexBody::cube(2, 1.0).unwrap();
        let r = check_robust_interior_volume(&c, 0.5, 20_000, 7).unwrap();
        assert!((r.ratio_estimate - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / 20_000.0).sqrt());
        assert!(r.pass);
        assert!(check_robust_interior_volume(&c, 0.5, 10, 7).is_err());
    }
}
