//! Small linear programs over H-polytopes, backed by `minilp`.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Unbounded,
    Infeasible,
}

/// Maximizes `objective · x` subject to `A x ≤ b`.
pub(crate) fn maximize(a: &[Vec<f64>], b: &[f64], objective: &[f64]) -> LpOutcome {
    let n = objective.len();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = objective
        .iter()
        .map(|&c| problem.add_var(c, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for (row, &rhs) in a.iter().zip(b) {
        let expr: Vec<_> = (0..n)
            .filter(|&j| row[j] != 0.0)
            .map(|j| (vars[j], row[j]))
            .collect();
        if expr.is_empty() {
            if rhs < 0.0 {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        problem.add_constraint(expr.as_slice(), ComparisonOp::Le, rhs);
    }
    match problem.solve() {
        Ok(sol) if !sol.objective().is_finite() => LpOutcome::Unbounded,
        Ok(sol) => LpOutcome::Optimal {
            value: sol.objective(),
            point: vars.iter().map(|&v| sol[v]).collect(),
        },
        Err(minilp::Error::Unbounded) => LpOutcome::Unbounded,
        Err(minilp::Error::Infeasible) => LpOutcome::Infeasible,
    }
}

/// Largest `r` with `aᵢ·x + r·wᵢ ≤ bᵢ` for all rows, where `wᵢ` is the given row
/// weight (‖aᵢ‖₂ for the Euclidean inradius, ‖aᵢ‖₁ for the ∞-norm one).
/// `r` is capped at `cap` so the program stays bounded.
pub(crate) fn inscribed_radius(
    a: &[Vec<f64>],
    b: &[f64],
    weights: &[f64],
    cap: f64,
) -> Option<(f64, Vec<f64>)> {
    let n = a.first().map_or(0, |r| r.len());
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = (0..n)
        .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let r = problem.add_var(1.0, (0.0, cap));
    for ((row, &rhs), &w) in a.iter().zip(b).zip(weights) {
        let mut expr: Vec<_> = (0..n)
            .filter(|&j| row[j] != 0.0)
            .map(|j| (xs[j], row[j]))
            .collect();
        if expr.is_empty() {
            if rhs < 0.0 {
                return None;
            }
            continue;
        }
        expr.push((r, w));
        problem.add_constraint(expr.as_slice(), ComparisonOp::Le, rhs);
    }
    let sol = problem.solve().ok()?;
    Some((sol[r], xs.iter().map(|&v| sol[v]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_support() {
        // x ≥ 0, y ≥ 0, x + y ≤ 1
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let b = vec![0.0, 0.0, 1.0];
        match maximize(&a, &b, &[1.0, 0.0]) {
            LpOutcome::Optimal { value, point } => {
                assert!((value - 1.0).abs() < 1e-9);
                assert!((point[0] - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let (r, _) = inscribed_radius(&a, &b, &[1.0, 1.0, 2f64.sqrt()], 10.0).unwrap();
        assert!((r - 1.0 / (2.0 + 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn halfplane_is_unbounded() {
        let a = vec![vec![1.0, 1.0]];
        assert_eq!(maximize(&a, &[1.0], &[1.0, 0.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let a = vec![vec![1.0], vec![-1.0]];
        assert_eq!(maximize(&a, &[-1.0, -1.0], &[1.0]), LpOutcome::Infeasible);
    }
}
