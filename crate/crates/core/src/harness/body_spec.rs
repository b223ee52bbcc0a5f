//! Body specifications in TOML.
//!
//! ```toml
//! dim = 2
//! kind = "h_polytope"       # box | h_polytope | euclidean_ball | simplex | intersection
//! declared_R = 2.0
//! A = [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
//! b = [1.5, 1.0, 1.0]
//! ```
//!
//! Boxes take `center` and `halfwidths`, balls `center` and `radius`, simplices
//! `corner` and `size`. An intersection lists its parts as `[[parts]]` tables,
//! each with its own `kind` and fields.

use crate::error::{Error, Result};
use crate::geometry::{sandwich_validate, ConvexBody, SandwichFailure, SandwichReport, Shape};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartSpec {
    kind: String,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    a: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    halfwidths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corner: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    size: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodySpec {
    dim: usize,
    kind: String,
    #[serde(rename = "declared_R")]
    declared_r: f64,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    a: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    halfwidths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corner: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parts: Option<Vec<PartSpec>>,
}

/// A body loaded from a spec, with the sandwich validation it went through.
#[derive(Clone, Debug)]
pub struct LoadedBody {
    pub body: ConvexBody,
    pub sandwich: SandwichReport,
    /// Human-readable sandwich failures.
    pub warnings: Vec<String>,
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

fn need<T: Clone>(field: &Option<T>, name: &str, at: &str) -> Result<T> {
    field
        .clone()
        .ok_or_else(|| parse_err(format!("{at}{name}"), format!("missing field `{name}`")))
}

fn check_len(v: &[f64], dim: usize, name: &str, at: &str) -> Result<()> {
    if v.len() != dim {
        return Err(parse_err(
            format!("{at}{name}"),
            format!("`{name}` has {} entries, expected dim = {dim}", v.len()),
        ));
    }
    Ok(())
}

fn shape_of(p: &PartSpec, dim: usize, at: &str) -> Result<Shape> {
    Ok(match p.kind.as_str() {
        "box" => {
            let center = need(&p.center, "center", at)?;
            let halfwidths = need(&p.halfwidths, "halfwidths", at)?;
            check_len(&center, dim, "center", at)?;
            check_len(&halfwidths, dim, "halfwidths", at)?;
            Shape::Box { center, halfwidths }
        }
        "h_polytope" => {
            let a = need(&p.a, "A", at)?;
            let b = need(&p.b, "b", at)?;
            for (i, row) in a.iter().enumerate() {
                check_len(row, dim, &format!("A[{i}]"), at)?;
            }
            if a.len() != b.len() {
                return Err(parse_err(
                    format!("{at}b"),
                    format!("`b` has {} entries but `A` has {} rows", b.len(), a.len()),
                ));
            }
            Shape::HPolytope { a, b }
        }
        "euclidean_ball" => {
            let center = need(&p.center, "center", at)?;
            check_len(&center, dim, "center", at)?;
            Shape::Ball {
                center,
                radius: need(&p.radius, "radius", at)?,
            }
        }
        "simplex" => {
            let corner = need(&p.corner, "corner", at)?;
            check_len(&corner, dim, "corner", at)?;
            Shape::Simplex {
                corner,
                size: need(&p.size, "size", at)?,
            }
        }
        other => {
            return Err(parse_err(
                format!("{at}kind"),
                format!("unknown kind `{other}`; expected box, h_polytope, euclidean_ball or simplex"),
            ))
        }
    })
}

fn build(spec: &BodySpec) -> Result<ConvexBody> {
    if spec.dim == 0 {
        return Err(parse_err("dim", "`dim` must be at least 1"));
    }
    let r = spec.declared_r;
    if spec.kind == "intersection" {
        let parts = need(&spec.parts, "parts", "")?;
        if parts.is_empty() {
            return Err(parse_err("parts", "`parts` must not be empty"));
        }
        let shapes = parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if p.kind == "intersection" {
                    return Err(parse_err(format!("parts[{i}].kind"), "nested intersections are not supported"));
                }
                shape_of(p, spec.dim, &format!("parts[{i}]."))
            })
            .collect::<Result<Vec<_>>>()?;
        return ConvexBody::intersection(shapes, r);
    }
    let flat = PartSpec {
        kind: spec.kind.clone(),
        a: spec.a.clone(),
        b: spec.b.clone(),
        center: spec.center.clone(),
        halfwidths: spec.halfwidths.clone(),
        radius: spec.radius,
        corner: spec.corner.clone(),
        size: spec.size,
    };
    match shape_of(&flat, spec.dim, "")? {
        Shape::Box { center, halfwidths } => ConvexBody::boxed(center, halfwidths, r),
        Shape::HPolytope { a, b } => ConvexBody::h_polytope(a, b, r),
        Shape::Ball { center, radius } => ConvexBody::ball(center, radius, r),
        Shape::Simplex { corner, size } => ConvexBody::simplex(corner, size, r),
        _ => unreachable!(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&c| c == b'\n').count() + 1
}

/// Parses a body spec and runs sandwich validation; failures become warnings.
pub fn parse_body_spec(text: &str) -> Result<LoadedBody> {
    let spec: BodySpec = toml::from_str(text).map_err(|e| {
        let location = match e.span() {
            Some(s) => format!("line {}", line_of(text, s.start)),
            None => "document".into(),
        };
        parse_err(location, e.message().to_string())
    })?;
    let body = build(&spec)?;
    let sandwich = sandwich_validate(&body);
    let witness = sandwich.witness.as_ref().map(|w| format!(" (witness {w:?})")).unwrap_or_default();
    let warnings = sandwich
        .failures
        .iter()
        .map(|f| match f {
            SandwichFailure::Inner => format!("the unit cube B_inf is not contained in the body{witness}"),
            SandwichFailure::Outer => format!("the body is not contained in declared_R * B_inf{witness}"),
        })
        .collect();
    Ok(LoadedBody { body, sandwich, warnings })
}

pub fn load_body_spec(path: impl AsRef<Path>) -> Result<LoadedBody> {
    let text = std::fs::read_to_string(path)?;
    parse_body_spec(&text)
}

fn part_of(shape: &Shape) -> Result<PartSpec> {
    let mut p = PartSpec::default();
    match shape {
        Shape::Box { center, halfwidths } => {
            p.kind = "box".into();
            p.center = Some(center.clone());
            p.halfwidths = Some(halfwidths.clone());
        }
        Shape::HPolytope { a, b } => {
            p.kind = "h_polytope".into();
            p.a = Some(a.clone());
            p.b = Some(b.clone());
        }
        Shape::Ball { center, radius } => {
            p.kind = "euclidean_ball".into();
            p.center = Some(center.clone());
            p.radius = Some(*radius);
        }
        Shape::Simplex { corner, size } => {
            p.kind = "simplex".into();
            p.corner = Some(corner.clone());
            p.size = Some(*size);
        }
        Shape::Intersection(_) => return Err(Error::Unsupported("nested intersections".into())),
        Shape::Oracle(o) => {
            return Err(Error::Unsupported(format!("oracle body `{}` has no spec form", o.name())))
        }
    }
    Ok(p)
}

/// The spec text of a body. Oracle bodies cannot be serialized.
pub fn body_spec_to_toml(body: &ConvexBody) -> Result<String> {
    let mut spec = BodySpec {
        dim: body.dim(),
        kind: String::new(),
        declared_r: body.declared_r(),
        a: None,
        b: None,
        center: None,
        halfwidths: None,
        radius: None,
        corner: None,
        size: None,
        parts: None,
    };
    if let Shape::Intersection(parts) = body.shape() {
        spec.kind = "intersection".into();
        spec.parts = Some(parts.iter().map(part_of).collect::<Result<_>>()?);
    } else {
        let p = part_of(body.shape())?;
        spec.kind = p.kind;
        spec.a = p.a;
        spec.b = p.b;
        spec.center = p.center;
        spec.halfwidths = p.halfwidths;
        spec.radius = p.radius;
        spec.corner = p.corner;
        spec.size = p.size;
    }
    toml::to_string(&spec).map_err(|e| Error::Unsupported(e.to_string()))
}
