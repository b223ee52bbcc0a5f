//! Convex bodies given by a membership oracle, with exact structure where the
//! shape is known (boxes, balls, simplices, H-polytopes and their intersections).
//!
//! Membership is closed: boundary points are members. Every body is validated
//! at construction; bodies with empty interior or unbounded extent are
//! rejected.

pub mod chord;
mod lp;
pub mod robust;
pub mod sample;
pub mod sandwich;

pub use chord::{chord, chord_axis, chord_bisection, ChordExactness, ChordSegment};
pub use robust::{check_robust_interior_volume, robust_interior_contains, RobustVolumeCheck};
pub use sample::{exact_uniform_sample, uniform_sample, UniformSampler};
pub use sandwich::{sandwich_validate, SandwichFailure, SandwichReport};

use crate::error::{check_dim, invalid, Error, Result};
use std::fmt;
use std::sync::Arc;

/// Relative bisection tolerance for chords of oracle bodies (scaled by the
/// declared outer radius).
pub const TOL_CHORD: f64 = 1e-9;

/// Largest dimension for which ∞-ball vertex enumeration is used.
pub const MAX_VERTEX_DIM: usize = 20;

/// A membership predicate for bodies without exact structure.
#[derive(Clone)]
pub struct Oracle {
    name: String,
    f: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
}

impl Oracle {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Oracle({})", self.name)
    }
}

/// The geometric description of a body.
#[derive(Clone, Debug)]
pub enum Shape {
    Box { center: Vec<f64>, halfwidths: Vec<f64> },
    HPolytope { a: Vec<Vec<f64>>, b: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : xᵢ ≥ cornerᵢ, Σ(xᵢ − cornerᵢ) ≤ size}`.
    Simplex { corner: Vec<f64>, size: f64 },
    Intersection(Vec<Shape>),
    Oracle(Oracle),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BodyKind {
    Box,
    HPolytope,
    EuclideanBall,
    Simplex,
    Intersection,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    LInf,
}

impl Norm {
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        let it = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L2 => it.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::LInf => it.fold(0.0, f64::max),
        }
    }
}

/// A diameter value, either exact or a guaranteed upper bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diameter {
    pub value: f64,
    pub exact: bool,
}

/// A closed convex body in ℝⁿ with a declared ∞-norm outer radius `R`.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
    declared_r: f64,
    bbox_lo: Vec<f64>,
    bbox_hi: Vec<f64>,
    interior: Vec<f64>,
}

impl Shape {
    fn dim(&self) -> Option<usize> {
        match self {
            Shape::Box { center, .. } | Shape::Ball { center, .. } => Some(center.len()),
            Shape::Simplex { corner, .. } => Some(corner.len()),
            Shape::HPolytope { a, .. } => a.first().map(|r| r.len()),
            Shape::Intersection(parts) => parts.iter().find_map(|p| p.dim()),
            Shape::Oracle(_) => None,
        }
    }

    pub(crate) fn member(&self, x: &[f64]) -> bool {
        match self {
            Shape::Box { center, halfwidths } => x
                .iter()
                .zip(center)
                .zip(halfwidths)
                .all(|((xi, c), h)| (xi - c).abs() <= *h),
            Shape::HPolytope { a, b } => a.iter().zip(b).all(|(row, bi)| dot(row, x) <= *bi),
            Shape::Ball { center, radius } => {
                x.iter().zip(center).map(|(xi, c)| (xi - c) * (xi - c)).sum::<f64>() <= radius * radius
            }
            Shape::Simplex { corner, size } => {
                let mut total = 0.0;
                for (xi, c) in x.iter().zip(corner) {
                    if xi < c {
                        return false;
                    }
                    total += xi - c;
                }
                total <= *size
            }
            Shape::Intersection(parts) => parts.iter().all(|p| p.member(x)),
            Shape::Oracle(o) => (o.f)(x),
        }
    }

    /// Halfspace description, if the shape is polyhedral.
    pub(crate) fn halfspaces(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        match self {
            Shape::Box { center, halfwidths } => {
                let n = center.len();
                let mut a = Vec::with_capacity(2 * n);
                let mut b = Vec::with_capacity(2 * n);
                for i in 0..n {
                    a.push(unit(n, i, 1.0));
                    b.push(center[i] + halfwidths[i]);
                    a.push(unit(n, i, -1.0));
                    b.push(-(center[i] - halfwidths[i]));
                }
                Some((a, b))
            }
            Shape::HPolytope { a, b } => Some((a.clone(), b.clone())),
            Shape::Simplex { corner, size } => {
                let n = corner.len();
                let mut a: Vec<Vec<f64>> = (0..n).map(|i| unit(n, i, -1.0)).collect();
                let mut b: Vec<f64> = corner.iter().map(|c| -c).collect();
                a.push(vec![1.0; n]);
                b.push(corner.iter().sum::<f64>() + size);
                Some((a, b))
            }
            Shape::Intersection(parts) => {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for p in parts {
                    let (pa, pb) = p.halfspaces()?;
                    a.extend(pa);
                    b.extend(pb);
                }
                Some((a, b))
            }
            Shape::Ball { .. } | Shape::Oracle(_) => None,
        }
    }

    fn scaled(&self, f: f64) -> Shape {
        match self {
            Shape::Box { center, halfwidths } => Shape::Box {
                center: center.iter().map(|c| c * f).collect(),
                halfwidths: halfwidths.iter().map(|h| h * f).collect(),
            },
            Shape::HPolytope { a, b } => Shape::HPolytope {
                a: a.clone(),
                b: b.iter().map(|bi| bi * f).collect(),
            },
            Shape::Ball { center, radius } => Shape::Ball {
                center: center.iter().map(|c| c * f).collect(),
                radius: radius * f,
            },
            Shape::Simplex { corner, size } => Shape::Simplex {
                corner: corner.iter().map(|c| c * f).collect(),
                size: size * f,
            },
            Shape::Intersection(parts) => Shape::Intersection(parts.iter().map(|p| p.scaled(f)).collect()),
            Shape::Oracle(o) => {
                let inner = o.f.clone();
                Shape::Oracle(Oracle {
                    name: format!("{}*{f}", o.name),
                    f: Arc::new(move |x: &[f64]| {
                        let y: Vec<f64> = x.iter().map(|v| v / f).collect();
                        inner(&y)
                    }),
                })
            }
        }
    }

    /// ∞-norm distance from a member `x` to the complement, where a closed form
    /// exists. Oracle parts return `None`.
    fn linf_margin(&self, x: &[f64]) -> Option<f64> {
        match self {
            Shape::Box { center, halfwidths } => Some(
                x.iter()
                    .zip(center)
                    .zip(halfwidths)
                    .map(|((xi, c), h)| h - (xi - c).abs())
                    .fold(f64::INFINITY, f64::min),
            ),
            Shape::Ball { center, radius } => {
                let n = x.len() as f64;
                let s: f64 = x.iter().zip(center).map(|(xi, c)| (xi - c).abs()).sum();
                let q: f64 = x.iter().zip(center).map(|(xi, c)| (xi - c).powi(2)).sum::<f64>() - radius * radius;
                // largest r with Σ(|yᵢ| + r)² ≤ ρ²
                let disc = s * s - n * q;
                if disc < 0.0 {
                    return Some(f64::NEG_INFINITY);
                }
                Some((-s + disc.sqrt()) / n)
            }
            Shape::Intersection(parts) => {
                let mut m = f64::INFINITY;
                for p in parts {
                    m = m.min(p.linf_margin(x)?);
                }
                Some(m)
            }
            Shape::Oracle(_) => None,
            _ => {
                let (a, b) = self.halfspaces().expect("polyhedral");
                Some(
                    a.iter()
                        .zip(&b)
                        .filter_map(|(row, bi)| {
                            let w: f64 = row.iter().map(|v| v.abs()).sum();
                            (w > 0.0).then(|| (bi - dot(row, x)) / w)
                        })
                        .fold(f64::INFINITY, f64::min),
                )
            }
        }
    }

    /// A point that is a natural candidate for the interior.
    fn center_hint(&self) -> Option<Vec<f64>> {
        match self {
            Shape::Box { center, .. } | Shape::Ball { center, .. } => Some(center.clone()),
            Shape::Simplex { corner, size } => {
                let n = corner.len() as f64;
                Some(corner.iter().map(|c| c + size / (n + 1.0)).collect())
            }
            _ => None,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(n: usize, i: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = s;
    v
}

fn check_finite(name: &'static str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(name, "entries must be finite"))
    }
}

/// Visits the 2ⁿ vertices of the ∞-ball of radius `r` around `x`, stopping at
/// the first vertex for which `visit` returns false.
pub(crate) fn all_linf_vertices(x: &[f64], r: f64, mut visit: impl FnMut(&[f64]) -> bool) -> bool {
    let n = x.len();
    let mut y = vec![0.0; n];
    for mask in 0u64..(1u64 << n) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = if mask >> i & 1 == 1 { x[i] + r } else { x[i] - r };
        }
        if !visit(&y) {
            return false;
        }
    }
    true
}

impl ConvexBody {
    /// The axis-aligned box with the given center and half-widths.
    pub fn boxed(center: Vec<f64>, halfwidths: Vec<f64>, declared_r: f64) -> Result<Self> {
        check_dim(center.len(), halfwidths.len())?;
        check_finite("center", &center)?;
        check_finite("halfwidths", &halfwidths)?;
        if center.is_empty() {
            return Err(invalid("dim", "must be at least 1"));
        }
        if halfwidths.iter().any(|&h| h <= 0.0) {
            return Err(Error::InvalidBody("box half-widths must be positive".into()));
        }
        Self::finish(Shape::Box { center, halfwidths }, declared_r, None)
    }

    /// The cube `[-half, half]ⁿ` with declared radius `max(1, half)`.
    pub fn cube(n: usize, half: f64) -> Result<Self> {
        Self::boxed(vec![0.0; n], vec![half; n], half.max(1.0))
    }

    pub fn h_polytope(a: Vec<Vec<f64>>, b: Vec<f64>, declared_r: f64) -> Result<Self> {
        check_dim(a.len(), b.len())?;
        let n = a.first().map(|r| r.len()).ok_or_else(|| invalid("A", "needs at least one row"))?;
        if n == 0 {
            return Err(invalid("A", "rows must be non-empty"));
        }
        for row in &a {
            check_dim(n, row.len())?;
            check_finite("A", row)?;
        }
        check_finite("b", &b)?;
        Self::finish(Shape::HPolytope { a, b }, declared_r, None)
    }

    pub fn ball(center: Vec<f64>, radius: f64, declared_r: f64) -> Result<Self> {
        check_finite("center", &center)?;
        if center.is_empty() {
            return Err(invalid("dim", "must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBody("ball radius must be positive".into()));
        }
        Self::finish(Shape::Ball { center, radius }, declared_r, None)
    }

    pub fn simplex(corner: Vec<f64>, size: f64, declared_r: f64) -> Result<Self> {
        check_finite("corner", &corner)?;
        if corner.is_empty() {
            return Err(invalid("dim", "must be at least 1"));
        }
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::InvalidBody("simplex size must be positive".into()));
        }
        Self::finish(Shape::Simplex { corner, size }, declared_r, None)
    }

    /// Intersection of shapes. Individual parts may be unbounded (e.g. a single
    /// halfspace) as long as the intersection is a body.
    pub fn intersection(parts: Vec<Shape>, declared_r: f64) -> Result<Self> {
        if parts.is_empty() {
            return Err(invalid("parts", "needs at least one part"));
        }
        let mut flat = Vec::new();
        flatten(parts, &mut flat);
        let n = flat
            .iter()
            .find_map(|p| p.dim())
            .ok_or_else(|| invalid("parts", "at least one part must have explicit structure"))?;
        for p in &flat {
            if let Some(d) = p.dim() {
                check_dim(n, d)?;
            }
        }
        Self::finish(Shape::Intersection(flat), declared_r, None)
    }

    /// A body known only through its membership predicate. `interior_point`
    /// must lie strictly inside.
    pub fn oracle(
        dim: usize,
        oracle: Oracle,
        interior_point: Vec<f64>,
        declared_r: f64,
    ) -> Result<Self> {
        check_dim(dim, interior_point.len())?;
        let eps = 1e-9 * declared_r;
        if dim <= MAX_VERTEX_DIM && !all_linf_vertices(&interior_point, eps, |y| (oracle.f)(y)) {
            return Err(Error::InvalidBody("interior_point is not strictly inside the body".into()));
        }
        Self::finish(Shape::Oracle(oracle), declared_r, Some(interior_point))
    }

    fn finish(shape: Shape, declared_r: f64, interior_hint: Option<Vec<f64>>) -> Result<Self> {
        if !(declared_r.is_finite() && declared_r >= 1.0) {
            return Err(invalid("declared_R", "must be finite and at least 1"));
        }
        let dim = shape
            .dim()
            .or(interior_hint.as_ref().map(|p| p.len()))
            .ok_or_else(|| invalid("dim", "cannot infer dimension"))?;

        let (bbox_lo, bbox_hi, interior) = match &shape {
            Shape::Box { center, halfwidths } => (
                center.iter().zip(halfwidths).map(|(c, h)| c - h).collect(),
                center.iter().zip(halfwidths).map(|(c, h)| c + h).collect(),
                center.clone(),
            ),
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
                center.clone(),
            ),
            Shape::Simplex { corner, size } => (
                corner.clone(),
                corner.iter().map(|c| c + size).collect(),
                shape.center_hint().unwrap(),
            ),
            _ => match shape.halfspaces() {
                Some((a, b)) => polyhedral_extent(&a, &b, dim)?,
                None => general_extent(&shape, dim, declared_r, interior_hint)?,
            },
        };
        Ok(Self {
            dim,
            shape,
            declared_r,
            bbox_lo,
            bbox_hi,
            interior,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn declared_r(&self) -> f64 {
        self.declared_r
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn kind(&self) -> BodyKind {
        match self.shape {
            Shape::Box { .. } => BodyKind::Box,
            Shape::HPolytope { .. } => BodyKind::HPolytope,
            Shape::Ball { .. } => BodyKind::EuclideanBall,
            Shape::Simplex { .. } => BodyKind::Simplex,
            Shape::Intersection(_) => BodyKind::Intersection,
            Shape::Oracle(_) => BodyKind::Oracle,
        }
    }

    /// Closed membership test.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.shape.member(x))
    }

    /// Membership without the dimension check, for hot loops.
    pub(crate) fn member(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        self.shape.member(x)
    }

    /// Axis-aligned bounding box `(lo, hi)`. Exact except for oracle bodies and
    /// intersections involving balls or oracles, where it is an outer box.
    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.bbox_lo, &self.bbox_hi)
    }

    /// A point strictly inside the body.
    pub fn interior_point(&self) -> &[f64] {
        &self.interior
    }

    pub fn halfspaces(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        self.shape.halfspaces()
    }

    /// `factor · K`, scaled about the origin.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(invalid("factor", "must be positive"));
        }
        Ok(Self {
            dim: self.dim,
            shape: self.shape.scaled(factor),
            declared_r: self.declared_r,
            bbox_lo: self.bbox_lo.iter().map(|v| v * factor).collect(),
            bbox_hi: self.bbox_hi.iter().map(|v| v * factor).collect(),
            interior: self.interior.iter().map(|v| v * factor).collect(),
        })
    }

    /// `inf_{z ∈ ∂K} ‖x − z‖_∞` for a member `x`; zero for non-members.
    pub fn linf_boundary_distance(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        if !self.member(x) {
            return Ok(0.0);
        }
        if let Some(m) = self.shape.linf_margin(x) {
            return Ok(m.max(0.0));
        }
        if self.dim > MAX_VERTEX_DIM {
            return Err(Error::Unsupported(format!(
                "∞-margin of oracle bodies is limited to n ≤ {MAX_VERTEX_DIM}"
            )));
        }
        // bisection on r using the vertex criterion
        let (mut lo, mut hi) = (0.0, 2.0 * self.declared_r);
        let tol = TOL_CHORD * self.declared_r;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if all_linf_vertices(x, mid, |y| self.member(y)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Largest ∞-ball radius that fits inside the body. Exact for polyhedral
    /// bodies, boxes and balls; otherwise the margin at the interior point, a
    /// lower bound.
    pub fn linf_inradius(&self) -> f64 {
        match &self.shape {
            Shape::Box { halfwidths, .. } => halfwidths.iter().copied().fold(f64::INFINITY, f64::min),
            Shape::Ball { radius, .. } => radius / (self.dim as f64).sqrt(),
            _ => {
                if let Some((a, b)) = self.halfspaces() {
                    let w: Vec<f64> = a.iter().map(|r| r.iter().map(|v| v.abs()).sum()).collect();
                    if let Some((r, _)) = lp::inscribed_radius(&a, &b, &w, 1e12) {
                        return r;
                    }
                }
                self.linf_boundary_distance(&self.interior).unwrap_or(0.0)
            }
        }
    }

    /// Diameter in the given norm, exact where cheaply available, otherwise an
    /// upper bound from the bounding box.
    pub fn diameter(&self, norm: Norm) -> Diameter {
        let widths: Vec<f64> = self.bbox_hi.iter().zip(&self.bbox_lo).map(|(h, l)| h - l).collect();
        let box_bound = match norm {
            Norm::L2 => widths.iter().map(|w| w * w).sum::<f64>().sqrt(),
            Norm::LInf => widths.iter().copied().fold(0.0, f64::max),
        };
        match (&self.shape, norm) {
            (Shape::Box { .. }, _) => Diameter { value: box_bound, exact: true },
            (Shape::Ball { radius, .. }, _) => Diameter { value: 2.0 * radius, exact: true },
            (Shape::Simplex { size, .. }, Norm::L2) if self.dim >= 2 => Diameter {
                value: size * 2f64.sqrt(),
                exact: true,
            },
            (Shape::Simplex { size, .. }, _) => Diameter { value: *size, exact: true },
            (Shape::HPolytope { .. } | Shape::Intersection(_), Norm::LInf) if self.halfspaces().is_some() => {
                Diameter { value: box_bound, exact: true }
            }
            (Shape::HPolytope { .. } | Shape::Intersection(_), Norm::L2) => match self.vertices() {
                Some(vs) => {
                    let mut d: f64 = 0.0;
                    for (i, u) in vs.iter().enumerate() {
                        for v in &vs[i + 1..] {
                            d = d.max(Norm::L2.dist(u, v));
                        }
                    }
                    Diameter { value: d, exact: true }
                }
                None => Diameter { value: box_bound, exact: false },
            },
            _ => Diameter { value: box_bound, exact: false },
        }
    }

    /// Vertices of a polyhedral body in dimension ≤ 3, by solving every
    /// n-subset of the constraints. `None` when the body is not polyhedral or
    /// the enumeration would be too large.
    pub fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        let (a, b) = self.halfspaces()?;
        let n = self.dim;
        let m = a.len();
        if n > 3 || crate::special::ln_binomial(m as u64, n as u64) > (1e5f64).ln() {
            return None;
        }
        let scale = self.declared_r.max(1.0);
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let mat = nalgebra::DMatrix::from_fn(n, n, |r, c| a[idx[r]][c]);
            let rhs = nalgebra::DVector::from_fn(n, |r, _| b[idx[r]]);
            if let Some(sol) = mat.lu().solve(&rhs) {
                let p: Vec<f64> = sol.iter().copied().collect();
                let feasible = a.iter().zip(&b).all(|(row, bi)| dot(row, &p) <= bi + 1e-9 * scale);
                if feasible && p.iter().all(|v| v.is_finite()) && !out.iter().any(|q| Norm::LInf.dist(q, &p) < 1e-9 * scale) {
                    out.push(p);
                }
            }
            // next combination
            let mut i = n;
            loop {
                if i == 0 {
                    return Some(out);
                }
                i -= 1;
                if idx[i] < m - n + i {
                    idx[i] += 1;
                    for j in i + 1..n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

fn flatten(parts: Vec<Shape>, out: &mut Vec<Shape>) {
    for p in parts {
        match p {
            Shape::Intersection(inner) => flatten(inner, out),
            other => out.push(other),
        }
    }
}

type Extent = (Vec<f64>, Vec<f64>, Vec<f64>);

fn polyhedral_extent(a: &[Vec<f64>], b: &[f64], dim: usize) -> Result<Extent> {
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    for i in 0..dim {
        for (sign, slot) in [(1.0, &mut hi[i]), (-1.0, &mut lo[i])] {
            match lp::maximize(a, b, &unit(dim, i, sign)) {
                lp::LpOutcome::Optimal { value, .. } => *slot = sign * value,
                lp::LpOutcome::Unbounded => {
                    return Err(Error::InvalidBody(format!("unbounded along axis {}", i + 1)))
                }
                lp::LpOutcome::Infeasible => return Err(Error::InvalidBody("empty".into())),
            }
        }
    }
    let scale = lo.iter().chain(&hi).fold(1.0f64, |m, v| m.max(v.abs()));
    let w: Vec<f64> = a.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    match lp::inscribed_radius(a, b, &w, 2.0 * scale) {
        Some((r, c)) if r > 1e-12 * scale => Ok((lo, hi, c)),
        _ => Err(Error::InvalidBody("empty interior".into())),
    }
}

fn general_extent(shape: &Shape, dim: usize, declared_r: f64, hint: Option<Vec<f64>>) -> Result<Extent> {
    // Candidate interior points: the hint, part centers, the origin.
    let mut candidates: Vec<Vec<f64>> = hint.into_iter().collect();
    let mut lo = vec![-declared_r; dim];
    let mut hi = vec![declared_r; dim];
    let mut bounded_part = false;
    if let Shape::Intersection(parts) = shape {
        let polyhedral: Vec<&Shape> = parts.iter().filter(|p| p.halfspaces().is_some()).collect();
        if !polyhedral.is_empty() {
            let (mut pa, mut pb) = (Vec::new(), Vec::new());
            for p in &polyhedral {
                let (a, b) = p.halfspaces().unwrap();
                pa.extend(a);
                pb.extend(b);
            }
            let w: Vec<f64> = pa.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
            if let Some((_, c)) = lp::inscribed_radius(&pa, &pb, &w, 1e6 * declared_r) {
                candidates.push(c);
            }
            if let Ok((plo, phi, _)) = polyhedral_extent(&pa, &pb, dim) {
                bounded_part = true;
                lo[..dim].copy_from_slice(&plo[..dim]);
                hi[..dim].copy_from_slice(&phi[..dim]);
            }
        }
        for p in parts {
            if let Some(c) = p.center_hint() {
                candidates.push(c);
            }
            if let Shape::Ball { center, radius } = p {
                bounded_part = true;
                for i in 0..dim {
                    lo[i] = lo[i].max(center[i] - radius);
                    hi[i] = hi[i].min(center[i] + radius);
                }
            }
        }
        if !bounded_part && parts.iter().all(|p| !matches!(p, Shape::Oracle(_))) {
            return Err(Error::InvalidBody("intersection is unbounded".into()));
        }
    }
    candidates.push(vec![0.0; dim]);
    for i in 0..dim {
        if lo[i] >= hi[i] {
            return Err(Error::InvalidBody("empty interior".into()));
        }
    }
    candidates.push(lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect());

    let eps = 1e-9 * declared_r;
    let interior = candidates
        .into_iter()
        .find(|c| {
            c.len() == dim
                && shape.member(c)
                && (dim > MAX_VERTEX_DIM || all_linf_vertices(c, eps, |y| shape.member(y)))
        })
        .ok_or_else(|| Error::InvalidBody("no interior point found (empty interior?)".into()))?;

    // Oracle-backed bodies must end within the declared box along every axis
    // through the interior point.
    if !bounded_part {
        let limit = 2.0 * declared_r * (dim as f64).sqrt();
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut y = interior.clone();
                y[i] += s * limit;
                if shape.member(&y) {
                    return Err(Error::InvalidBody(format!(
                        "body extends beyond 2·R·√n along axis {} (unbounded or R too small)",
                        i + 1
                    )));
                }
            }
        }
    }
    Ok((lo, hi, interior))
}

/// A random H-polytope `{x : aᵢ·x ≤ bᵢ} ∩ [-R, R]ⁿ` with `facets` random cuts,
/// each satisfying `‖aᵢ‖₁ ≤ bᵢ`, so that `B_∞ ⊆ K ⊆ R·B_∞`.
pub fn random_polytope<G: rand::Rng + ?Sized>(n: usize, facets: usize, declared_r: f64, rng: &mut G) -> Result<ConvexBody> {
    use rand_distr::StandardNormal;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(declared_r > 1.0) {
        return Err(invalid("declared_R", "must exceed 1 so random cuts fit between B_∞ and R·B_∞"));
    }
    let mut a = Vec::with_capacity(facets + 2 * n);
    let mut b = Vec::with_capacity(facets + 2 * n);
    for _ in 0..facets {
        let row: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let l1: f64 = row.iter().map(|v| v.abs()).sum();
        // offset between the B_∞ support ‖a‖₁ and the R·B_∞ support R‖a‖₁
        b.push(l1 * (1.0 + rng.random::<f64>() * (declared_r - 1.0)));
        a.push(row);
    }
    for i in 0..n {
        a.push(unit(n, i, 1.0));
        b.push(declared_r);
        a.push(unit(n, i, -1.0));
        b.push(declared_r);
    }
    ConvexBody::h_polytope(a, b, declared_r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> ConvexBody {
        // {x₁ + x₂ ≤ 1, x ≥ −1}
        ConvexBody::h_polytope(
            vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 1.0],
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn random_polytopes_are_sandwiched() {
        let mut rng = crate::seed::rng(11, "random-polytope");
        for _ in 0..20 {
            let k = random_polytope(2, 6, 2.0, &mut rng).unwrap();
            assert!(sandwich_validate(&k).ok());
        }
    }

    #[test]
    fn closed_membership() {
        let b = ConvexBody::cube(2, 1.0).unwrap();
        assert!(b.contains(&[0.0, 0.0]).unwrap());
        assert!(b.contains(&[1.0, 1.0]).unwrap());
        assert!(!b.contains(&[1.0 + 1e-12, 0.0]).unwrap());
        assert!(!tri().contains(&[0.6, 0.6]).unwrap());
        assert!(tri().contains(&[0.5, 0.5]).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let b = ConvexBody::cube(2, 1.0).unwrap();
        assert!(matches!(b.contains(&[0.0; 3]), Err(Error::DimensionMismatch { expected: 2, got: 3 })));
    }

    #[test]
    fn degenerate_bodies_are_rejected() {
        // a segment along e₁ embedded in the plane
        let seg = ConvexBody::h_polytope(
            vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![0.0, 0.0, 1.0, 1.0],
            1.0,
        );
        assert!(matches!(seg, Err(Error::InvalidBody(_))));
        let half = ConvexBody::h_polytope(vec![vec![1.0, 1.0]], vec![1.0], 1.0);
        assert!(matches!(half, Err(Error::InvalidBody(_))));
        assert!(ConvexBody::boxed(vec![0.0, 0.0], vec![1.0, 0.0], 1.0).is_err());
        assert!(ConvexBody::cube(2, 1.0).unwrap().scaled(0.0).is_err());
        assert!(ConvexBody::boxed(vec![0.0], vec![1.0], 0.5).is_err());
    }

    #[test]
    fn polytope_bounding_box_is_exact() {
        let b = tri();
        let (lo, hi) = b.bounding_box();
        assert!((lo[0] + 1.0).abs() < 1e-9 && (hi[0] - 2.0).abs() < 1e-9);
        assert!(b.member(b.interior_point()));
    }

    #[test]
    fn intersection_with_halfspace() {
        let body = ConvexBody::intersection(
            vec![
                Shape::Ball { center: vec![0.0, 0.0], radius: 2.0 },
                Shape::HPolytope { a: vec![vec![1.0, 0.0]], b: vec![0.5] },
            ],
            2.0,
        )
        .unwrap();
        assert!(body.contains(&[0.5, 0.0]).unwrap());
        assert!(!body.contains(&[0.6, 0.0]).unwrap());
        assert!(!body.contains(&[0.0, 2.1]).unwrap());
        let unbounded = ConvexBody::intersection(
            vec![Shape::HPolytope { a: vec![vec![1.0, 0.0]], b: vec![0.5] }],
            2.0,
        );
        assert!(unbounded.is_err());
    }

    #[test]
    fn oracle_body_validation() {
        let disk = Oracle::new("disk", |x: &[f64]| x[0] * x[0] + x[1] * x[1] <= 4.0);
        let ok = ConvexBody::oracle(2, disk.clone(), vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(ok.kind(), BodyKind::Oracle);
        let plane = Oracle::new("plane", |_: &[f64]| true);
        assert!(ConvexBody::oracle(2, plane, vec![0.0, 0.0], 2.0).is_err());
        assert!(ConvexBody::oracle(2, disk, vec![5.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn linf_margins() {
        let cube = ConvexBody::cube(3, 1.0).unwrap();
        assert!((cube.linf_boundary_distance(&[0.5, 0.0, -0.2]).unwrap() - 0.5).abs() < 1e-15);
        let ball = ConvexBody::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        // the ∞-ball of radius 1/√2 at the center touches the circle
        assert!((ball.linf_boundary_distance(&[0.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let disk = Oracle::new("disk", |x: &[f64]| x[0] * x[0] + x[1] * x[1] <= 1.0);
        let ob = ConvexBody::oracle(2, disk, vec![0.0, 0.0], 1.0).unwrap();
        assert!((ob.linf_boundary_distance(&[0.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-8);
        assert!((tri().linf_inradius() - tri().linf_boundary_distance(&[-1.0 + 0.75, -1.0 + 0.75]).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn diameters() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        assert!((cube.diameter(Norm::L2).value - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(cube.diameter(Norm::LInf).value, 2.0);
        let t = tri();
        // vertices (−1,−1), (2,−1), (−1,2)
        let d = t.diameter(Norm::L2);
        assert!(d.exact && (d.value - 18f64.sqrt()).abs() < 1e-9);
        assert_eq!(t.vertices().unwrap().len(), 3);
    }

    #[test]
    fn scaling_about_origin() {
        let s = ConvexBody::cube(2, 1.0).unwrap().scaled(0.5).unwrap();
        assert!(s.contains(&[0.5, -0.5]).unwrap());
        assert!(!s.contains(&[0.51, 0.0]).unwrap());
        let t = tri().scaled(0.5).unwrap();
        assert!(t.contains(&[0.25, 0.25]).unwrap() && !t.contains(&[0.3, 0.25]).unwrap());
    }
}
