//! Ground-truth uniform samplers.

use super::{BodyKind, ConvexBody, Shape};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

/// Exactly uniform sample from a box, Euclidean ball or simplex.
pub fn exact_uniform_sample<R: Rng + ?Sized>(body: &ConvexBody, rng: &mut R) -> Result<Vec<f64>> {
    match body.shape() {
        Shape::Box { center, halfwidths } => Ok(center
            .iter()
            .zip(halfwidths)
            .map(|(c, h)| c + h * rng.random_range(-1.0..=1.0))
            .collect()),
        Shape::Ball { center, radius } => {
            let n = center.len();
            let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
            Ok(center.iter().zip(&g).map(|(c, gi)| c + r * gi / norm).collect())
        }
        Shape::Simplex { corner, size } => {
            let n = corner.len();
            let e: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = e.iter().sum();
            Ok(corner.iter().zip(&e).map(|(c, ei)| c + size * ei / total).collect())
        }
        _ => Err(Error::Unsupported(format!(
            "no exact sampler for {:?}; use UniformSampler",
            body.kind()
        ))),
    }
}

pub(crate) fn has_exact_sampler(body: &ConvexBody) -> bool {
    matches!(body.kind(), BodyKind::Box | BodyKind::EuclideanBall | BodyKind::Simplex)
}

/// Strategy for drawing (approximately) uniform points from any body.
#[derive(Clone, Debug, PartialEq)]
pub enum UniformSampler {
    /// Closed-form sampler for reference bodies.
    Exact,
    /// Rejection from the bounding box; exact, used when the acceptance rate
    /// measured on a pilot is at least [`UniformSampler::MIN_ACCEPTANCE`].
    Rejection { acceptance: f64 },
    /// Independent coordinate Hit-and-Run runs of `burn_in` steps from the
    /// body's interior point. Approximate.
    Walk { burn_in: usize },
}

impl UniformSampler {
    pub const MIN_ACCEPTANCE: f64 = 1e-3;
    const PILOT: usize = 4000;

    pub fn for_body<R: Rng + ?Sized>(body: &ConvexBody, rng: &mut R) -> Self {
        if has_exact_sampler(body) {
            return Self::Exact;
        }
        let (lo, hi) = body.bounding_box();
        let mut x = vec![0.0; body.dim()];
        let mut hits = 0usize;
        for _ in 0..Self::PILOT {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = rng.random_range(lo[i]..=hi[i]);
            }
            hits += body.member(&x) as usize;
        }
        let acceptance = hits as f64 / Self::PILOT as f64;
        if acceptance >= Self::MIN_ACCEPTANCE {
            Self::Rejection { acceptance }
        } else {
            Self::Walk {
                burn_in: 1000 * body.dim() * body.dim(),
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::Walk { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, body: &ConvexBody, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Self::Exact => exact_uniform_sample(body, rng),
            Self::Rejection { .. } => {
                let (lo, hi) = body.bounding_box();
                let mut x = vec![0.0; body.dim()];
                let cap = (100.0 / Self::MIN_ACCEPTANCE) as usize;
                for _ in 0..cap {
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi = rng.random_range(lo[i]..=hi[i]);
                    }
                    if body.member(&x) {
                        return Ok(x);
                    }
                }
                Err(Error::Unsupported("rejection sampler exhausted its attempt budget".into()))
            }
            Self::Walk { burn_in } => {
                let mut x = body.interior_point().to_vec();
                for _ in 0..*burn_in {
                    crate::schemes::chr_move(body, &mut x, rng)?;
                }
                Ok(x)
            }
        }
    }

    pub fn samples<R: Rng + ?Sized>(&self, body: &ConvexBody, count: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        (0..count).map(|_| self.sample(body, rng)).collect()
    }
}

/// One uniform sample using the best available strategy.
pub fn uniform_sample<R: Rng + ?Sized>(body: &ConvexBody, rng: &mut R) -> Result<Vec<f64>> {
    UniformSampler::for_body(body, rng).sample(body, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn box_sample_mean() {
        let b = ConvexBody::cube(2, 1.0).unwrap();
        let mut rng = seed::rng(1, "box-mean");
        let n = 100_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let x = exact_uniform_sample(&b, &mut rng).unwrap();
            mean[0] += x[0] / n as f64;
            mean[1] += x[1] / n as f64;
        }
        // sd of uniform[-1,1] is 1/√3, so 3/√n is a >5σ band
        assert!(mean.iter().all(|m| m.abs() < 3.0 / (n as f64).sqrt()));
    }

    #[test]
    fn ball_samples_stay_inside() {
        let b = ConvexBody::ball(vec![0.0; 3], 1.0, 1.0).unwrap();
        let mut rng = seed::rng(2, "ball");
        for _ in 0..10_000 {
            let x = exact_uniform_sample(&b, &mut rng).unwrap();
            assert!(x.iter().map(|v| v * v).sum::<f64>() <= 1.0);
        }
    }

    #[test]
    fn unit_square_quadrant_fraction() {
        let b = ConvexBody::boxed(vec![0.5, 0.5], vec![0.5, 0.5], 1.0).unwrap();
        let mut rng = seed::rng(3, "quadrant");
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let x = exact_uniform_sample(&b, &mut rng).unwrap();
                x[0] <= 0.5 && x[1] <= 0.5
            })
            .count();
        let p = hits as f64 / n as f64;
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((p - 0.25).abs() < 4.0 * se, "{p}");
    }

    #[test]
    fn simplex_samples_are_members_with_expected_mean() {
        let s = ConvexBody::simplex(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let mut rng = seed::rng(4, "simplex");
        let n = 50_000;
        let mut m = 0.0;
        for _ in 0..n {
            let x = exact_uniform_sample(&s, &mut rng).unwrap();
            assert!(s.contains(&x).unwrap());
            m += x[0] / n as f64;
        }
        // centroid of the triangle is (1/3, 1/3); sd of x₁ is √(1/18)
        assert!((m - 1.0 / 3.0).abs() < 4.0 * (1.0f64 / 18.0 / n as f64).sqrt());
    }

    #[test]
    fn polytopes_use_rejection_and_oracles_fall_back() {
        let h = ConvexBody::h_polytope(
            vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 1.0],
            2.0,
        )
        .unwrap();
        let mut rng = seed::rng(5, "pick");
        assert!(exact_uniform_sample(&h, &mut rng).is_err());
        let s = UniformSampler::for_body(&h, &mut rng);
        assert!(matches!(s, UniformSampler::Rejection { .. }));
        let x = s.sample(&h, &mut rng).unwrap();
        assert!(h.contains(&x).unwrap());
    }
}
