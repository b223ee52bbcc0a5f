//! Chords `{t : x + t·d ∈ K}` through a member point.

use super::{dot, ConvexBody, Shape, TOL_CHORD};
use crate::error::{check_dim, invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChordExactness {
    Exact,
    /// Endpoints are members and lie within `tolerance` of the true boundary.
    Bisection { tolerance: f64 },
}

/// Parameter interval `[t_lo, t_hi]` of a line through a member point, which
/// sits at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordSegment {
    pub t_lo: f64,
    pub t_hi: f64,
    pub exactness: ChordExactness,
}

impl ChordSegment {
    pub fn length(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    fn exact(t_lo: f64, t_hi: f64) -> Self {
        // x is a member, so 0 is in the chord; clamp rounding noise.
        Self {
            t_lo: t_lo.min(0.0),
            t_hi: t_hi.max(0.0),
            exactness: ChordExactness::Exact,
        }
    }
}

enum Dir<'a> {
    Axis(usize),
    Vector(&'a [f64]),
}

impl Dir<'_> {
    #[inline]
    fn comp(&self, i: usize) -> f64 {
        match self {
            Dir::Axis(a) => (*a == i) as u8 as f64,
            Dir::Vector(v) => v[i],
        }
    }

    fn dot(&self, row: &[f64]) -> f64 {
        match self {
            Dir::Axis(a) => row[*a],
            Dir::Vector(v) => dot(row, v),
        }
    }
}

/// Chord along a unit direction. Exact for structured bodies, bisection
/// against the membership oracle otherwise.
pub fn chord(body: &ConvexBody, x: &[f64], direction: &[f64]) -> Result<ChordSegment> {
    check_dim(body.dim(), x.len())?;
    check_dim(body.dim(), direction.len())?;
    let norm = dot(direction, direction).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid("direction", format!("must have unit norm, got {norm}")));
    }
    if !body.member(x) {
        return Err(Error::NotInBody);
    }
    chord_inner(body, x, Dir::Vector(direction))
}

/// Chord along the coordinate axis `axis` (0-based).
pub fn chord_axis(body: &ConvexBody, x: &[f64], axis: usize) -> Result<ChordSegment> {
    check_dim(body.dim(), x.len())?;
    if axis >= body.dim() {
        return Err(invalid("axis", format!("{axis} out of range for dimension {}", body.dim())));
    }
    if !body.member(x) {
        return Err(Error::NotInBody);
    }
    chord_inner(body, x, Dir::Axis(axis))
}

fn chord_inner(body: &ConvexBody, x: &[f64], d: Dir<'_>) -> Result<ChordSegment> {
    match exact_interval(body.shape(), x, &d) {
        Some((lo, hi)) => Ok(ChordSegment::exact(lo, hi)),
        None => bisect(body, x, &d, TOL_CHORD * body.declared_r()),
    }
}

/// Chord by bisection against the membership oracle, for any body. The
/// returned endpoints are members; the true boundary lies within `tol` beyond
/// each of them.
pub fn chord_bisection(body: &ConvexBody, x: &[f64], direction: &[f64], tol: f64) -> Result<ChordSegment> {
    check_dim(body.dim(), x.len())?;
    check_dim(body.dim(), direction.len())?;
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if !body.member(x) {
        return Err(Error::NotInBody);
    }
    bisect(body, x, &Dir::Vector(direction), tol)
}

fn bisect(body: &ConvexBody, x: &[f64], d: &Dir<'_>, tol: f64) -> Result<ChordSegment> {
    let n = body.dim();
    let limit = 2.0 * body.declared_r() * (n as f64).sqrt();
    let mut y = x.to_vec();
    let mut at = |t: f64| {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = x[i] + t * d.comp(i);
        }
        body.member(&y)
    };
    let mut ends = [0.0; 2];
    for (slot, sign) in ends.iter_mut().zip([-1.0, 1.0]) {
        if at(sign * limit) {
            return Err(Error::BracketNotFound { limit });
        }
        let (mut inside, mut outside) = (0.0, limit);
        while outside - inside > tol {
            let mid = 0.5 * (inside + outside);
            if at(sign * mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        *slot = sign * inside;
    }
    Ok(ChordSegment {
        t_lo: ends[0],
        t_hi: ends[1],
        exactness: ChordExactness::Bisection { tolerance: tol },
    })
}

/// Exact chord interval, or `None` if some part only has an oracle.
fn exact_interval(shape: &Shape, x: &[f64], d: &Dir<'_>) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut halfspace = |s: f64, slack: f64| {
        // s·t ≤ slack
        if s > 0.0 {
            hi = hi.min(slack / s);
        } else if s < 0.0 {
            lo = lo.max(slack / s);
        }
    };
    match shape {
        Shape::Box { center, halfwidths } => {
            for i in 0..x.len() {
                let di = d.comp(i);
                if di != 0.0 {
                    halfspace(di, center[i] + halfwidths[i] - x[i]);
                    halfspace(-di, x[i] - (center[i] - halfwidths[i]));
                }
            }
        }
        Shape::HPolytope { a, b } => {
            for (row, bi) in a.iter().zip(b) {
                halfspace(d.dot(row), bi - dot(row, x));
            }
        }
        Shape::Simplex { corner, size } => {
            let mut sd = 0.0;
            let mut sx = 0.0;
            for i in 0..x.len() {
                let di = d.comp(i);
                halfspace(-di, x[i] - corner[i]);
                sd += di;
                sx += x[i] - corner[i];
            }
            halfspace(sd, size - sx);
        }
        Shape::Ball { center, radius } => {
            // |y + t d|² = ρ² with y = x − c
            let mut dd = 0.0;
            let mut yd = 0.0;
            let mut yy = 0.0;
            for i in 0..x.len() {
                let di = d.comp(i);
                let yi = x[i] - center[i];
                dd += di * di;
                yd += yi * di;
                yy += yi * yi;
            }
            let disc = (yd * yd - dd * (yy - radius * radius)).max(0.0);
            let root = disc.sqrt();
            // numerically stable pair of roots
            let q = -(yd + yd.signum() * root);
            let (r1, r2) = if q == 0.0 {
                (-root / dd, root / dd)
            } else {
                (q / dd, (yy - radius * radius) / q)
            };
            lo = r1.min(r2);
            hi = r1.max(r2);
        }
        Shape::Intersection(parts) => {
            for p in parts {
                let (plo, phi) = exact_interval(p, x, d)?;
                lo = lo.max(plo);
                hi = hi.min(phi);
            }
        }
        Shape::Oracle(_) => return None,
    }
    Some((lo, hi))
}
