//! Closed-form bound calculators. Universal constants the analysis leaves
//! unspecified default to 1 and are exposed in [`Constants`].

use crate::error::{invalid, Result};
use crate::schemes::default_tau;
use std::f64::consts::PI;
use std::fmt;

/// The unspecified constants.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Constants {
    pub c_main: f64,
    pub c_cond: f64,
    pub c_flow: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c_main: 1.0,
            c_cond: 1.0,
            c_flow: 1.0,
        }
    }
}

/// Parameters shared by the calculators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    pub n: u64,
    pub r: f64,
    pub m: f64,
    pub eps: f64,
    pub s: f64,
    pub sigma: f64,
    pub constants: Constants,
}

impl BoundParams {
    /// Defaults `s = ε/(2M)` and `σ = s/(100 n ln n)`, the choices made in the
    /// proof of the main theorem.
    pub fn new(n: u64, r: f64, m: f64, eps: f64) -> Result<Self> {
        let s = eps / (2.0 * m);
        let p = Self {
            n,
            r,
            m,
            eps,
            s,
            sigma: sigma_for(s, n),
            constants: Constants::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", "must be at least 2"));
        }
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(invalid("R", "must be finite and at least 1"));
        }
        if !(self.m >= 1.0 && self.m.is_finite()) {
            return Err(invalid("M", "must be finite and at least 1"));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(invalid("eps", "must lie in (0, 1/2)"));
        }
        if !(self.s > 0.0 && self.s < 0.5) {
            return Err(invalid("s", "must lie in (0, 1/2)"));
        }
        if !(self.sigma > 0.0) {
            return Err(invalid("sigma", "must be positive"));
        }
        Ok(())
    }
}

/// `σ = s/(100 n ln n)`.
pub fn sigma_for(s: f64, n: u64) -> f64 {
    let n = n as f64;
    s / (100.0 * n * n.ln())
}

/// `ε = 100 n σ ln n`, the boundary-layer mass in the Gaussian flow bound.
pub fn gaussian_flow_epsilon(n: u64, sigma: f64) -> f64 {
    let n = n as f64;
    100.0 * n * sigma * n.ln()
}

/// `⌈C M⁴ R⁴ n⁷ ln⁶n ln(2M/ε) / ε⁴⌉` as an integer-valued float.
pub fn theorem_main_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    let n = p.n as f64;
    let ln_n = n.ln();
    let tail = (2.0 * p.m / p.eps).ln();
    let direct = p.constants.c_main * p.m.powi(4) * p.r.powi(4) * n.powi(7) * ln_n.powi(6) * tail / p.eps.powi(4);
    if direct.is_finite() {
        return Ok(direct.ceil());
    }
    let log = p.constants.c_main.ln() + 4.0 * p.m.ln() + 4.0 * p.r.ln() + 7.0 * ln_n + 6.0 * ln_n.ln() + tail.ln()
        - 4.0 * p.eps.ln();
    Ok(log.exp().ceil())
}

/// `(1 + (1 − Φ_s²/2)^k / s)·H_s`.
pub fn ls_mixing_estimate(h_s: f64, phi_s: f64, s: f64, k: u64) -> Result<f64> {
    if !(h_s >= 0.0) {
        return Err(invalid("H_s", "must be non-negative"));
    }
    if !(0.0..=1.0).contains(&phi_s) {
        return Err(invalid("Phi_s", "must lie in [0, 1]"));
    }
    if !(s > 0.0 && s < 0.5) {
        return Err(invalid("s", "must lie in (0, 1/2)"));
    }
    let decay = (1.0 - phi_s * phi_s / 2.0).powf(k as f64);
    Ok((1.0 + decay / s) * h_s)
}

/// `c·s²/(R² n^{3.5} ln³n)`.
pub fn s_conductance_lower_bound(s: f64, r: f64, n: u64, c_cond: f64) -> Result<f64> {
    if !(s > 0.0 && s < 0.5) {
        return Err(invalid("s", "must lie in (0, 1/2)"));
    }
    if !(r >= 1.0) {
        return Err(invalid("R", "must be at least 1"));
    }
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    let nf = n as f64;
    Ok(c_cond * s * s / (r * r * nf.powf(3.5) * nf.ln().powi(3)))
}

/// `σ√π/(R√2)`: one-step CHR flow dominates one-step Gaussian flow by this
/// factor.
pub fn flow_comparison_factor(sigma: f64, r: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    if !(r >= 1.0) {
        return Err(invalid("R", "must be at least 1"));
    }
    Ok(sigma * PI.sqrt() / (r * 2f64.sqrt()))
}

/// `1/τ`: single-step Gaussian flow is at least this fraction of τ-step flow.
pub fn multi_step_flow_comparison(tau: u64) -> Result<f64> {
    if tau < 1 {
        return Err(invalid("tau", "must be at least 1"));
    }
    Ok(1.0 / tau as f64)
}

/// `(c σ/(R√n))·(min(π(S), π(K − S)) − ε)`, clamped at 0.
pub fn gaussian_flow_lower_bound(
    sigma: f64,
    r: f64,
    n: u64,
    eps: f64,
    measure_s: f64,
    measure_complement: f64,
    c_flow: f64,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    if !(r >= 1.0) {
        return Err(invalid("R", "must be at least 1"));
    }
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    if !(0.0..0.5).contains(&eps) {
        return Err(invalid("eps", "the boundary layer must have mass below 1/2"));
    }
    if !((0.0..=1.0).contains(&measure_s) && (0.0..=1.0).contains(&measure_complement))
        || (measure_s + measure_complement - 1.0).abs() > 1e-9
    {
        return Err(invalid("measures", "must lie in [0, 1] and sum to 1"));
    }
    let coef = c_flow * sigma / (r * (n as f64).sqrt());
    Ok((coef * (measure_s.min(measure_complement) - eps)).max(0.0))
}

/// The constant of the s-conductance bound obtained by chaining the flow
/// comparisons with `τ = 20 n ln n` and `σ = s/(100 n ln n)`:
/// `c_flow·√(π/2)/(2·10⁵)`.
pub fn composed_c_cond(c_flow: f64) -> f64 {
    c_flow * (PI / 2.0).sqrt() / 2e5
}

/// One line of the bounds table.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub name: &'static str,
    /// What the number bounds.
    pub description: &'static str,
    pub formula: &'static str,
    pub value: f64,
    /// True when the value depends on a constant left at its default of 1.
    pub shape_only: bool,
}

/// Every calculator evaluated at `p`.
pub fn bounds_table(p: &BoundParams, constants_pinned: bool) -> Result<Vec<BoundRow>> {
    p.validate()?;
    let tau = default_tau(p.n as usize) as u64;
    let eps_flow = gaussian_flow_epsilon(p.n, p.sigma);
    let flow = if eps_flow < 0.5 {
        gaussian_flow_lower_bound(p.sigma, p.r, p.n, eps_flow, 0.5, 0.5, p.constants.c_flow)?
    } else {
        f64::NAN
    };
    let h_s = p.m * p.s;
    let phi = s_conductance_lower_bound(p.s, p.r, p.n, p.constants.c_cond)?.min(1.0);
    let k = theorem_main_bound(p)?;
    let ls = ls_mixing_estimate(h_s, phi, p.s, k.min(u64::MAX as f64) as u64)?;
    let shape = !constants_pinned;
    Ok(vec![
        BoundRow {
            name: "main-mixing-bound",
            description: "CHR steps sufficient for TV ≤ ε from an M-warm start",
            formula: "ceil(C M^4 R^4 n^7 ln^6 n ln(2M/eps) / eps^4)",
            value: k,
            shape_only: shape,
        },
        BoundRow {
            name: "ls-mixing-estimate",
            description: "Lovász–Simonovits TV bound at that step count with H_s = M s",
            formula: "(1 + (1 - Phi_s^2/2)^k / s) H_s",
            value: ls,
            shape_only: shape,
        },
        BoundRow {
            name: "s-conductance-lower-bound",
            description: "s-conductance of CHR",
            formula: "c s^2 / (R^2 n^3.5 ln^3 n)",
            value: phi,
            shape_only: shape,
        },
        BoundRow {
            name: "flow-comparison-factor",
            description: "one-step CHR flow over one-step Gaussian flow",
            formula: "sigma sqrt(pi) / (R sqrt(2))",
            value: flow_comparison_factor(p.sigma, p.r)?,
            shape_only: false,
        },
        BoundRow {
            name: "multi-step-flow-factor",
            description: "one-step over tau-step Gaussian flow, tau = ceil(20 n ln n)",
            formula: "1 / tau",
            value: multi_step_flow_comparison(tau)?,
            shape_only: false,
        },
        BoundRow {
            name: "gaussian-flow-lower-bound",
            description: "tau-step Gaussian flow of a balanced cut (NaN when 100 n sigma ln n >= 1/2)",
            formula: "(c sigma / (R sqrt n)) (min(pi(S), pi(K-S)) - 100 n sigma ln n)",
            value: flow,
            shape_only: shape,
        },
        BoundRow {
            name: "composed-c-cond",
            description: "s-conductance constant implied by chaining the flow comparisons",
            formula: "c_flow sqrt(pi/2) / (2e5)",
            value: composed_c_cond(p.constants.c_flow),
            shape_only: shape,
        },
    ])
}

impl fmt::Display for BoundRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:>16.8e}{}  {}",
            self.name,
            self.value,
            if self.shape_only { " (shape-only)" } else { "" },
            self.formula
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn main_bound_value() {
        let p = BoundParams::new(2, 1.0, 1.0, 0.25).unwrap();
        assert_eq!(theorem_main_bound(&p).unwrap(), 7557.0);
        assert!(BoundParams::new(2, 1.0, 1.0, 0.5).is_err());
        assert!(BoundParams::new(1, 1.0, 1.0, 0.25).is_err());
        let big = BoundParams::new(1_000_000, 10.0, 10.0, 0.01).unwrap();
        assert!(theorem_main_bound(&big).unwrap().is_finite());
    }

    #[test]
    fn ls_values() {
        assert!((ls_mixing_estimate(0.1, 0.3, 0.25, 0).unwrap() - 0.5).abs() < 1e-15);
        let v = ls_mixing_estimate(0.1, 1.0, 0.25, 60).unwrap();
        assert!((v - 0.1).abs() < 1e-15);
        assert!(ls_mixing_estimate(0.1, 1.5, 0.25, 1).is_err());
    }

    #[test]
    fn flow_factor_forms_agree() {
        for (sigma, r) in [(0.1, 1.0), (0.003, 7.0), (2.0, 1.5)] {
            let a = flow_comparison_factor(sigma, r).unwrap();
            let b = (2.0 * PI).sqrt() * sigma / (2.0 * r);
            assert!((a - b).abs() <= 1e-14 * a.max(1.0));
        }
        let unit = flow_comparison_factor(2f64.sqrt() / PI.sqrt(), 1.0).unwrap();
        assert!((unit - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_flow_examples() {
        let v = gaussian_flow_lower_bound(1e-3, 1.0, 2, 0.1, 0.5, 0.5, 1.0 / 32.0).unwrap();
        assert!((v - 1e-3 / (32.0 * 2f64.sqrt()) * 0.4).abs() < 1e-18);
        assert_eq!(gaussian_flow_lower_bound(1e-3, 1.0, 2, 0.1, 0.05, 0.95, 1.0).unwrap(), 0.0);
        assert!(gaussian_flow_lower_bound(1e-3, 1.0, 2, 0.6, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn composition_matches_chained_factors() {
        for n in [2u64, 3, 10, 1000] {
            for s in [0.01, 0.1, 0.3] {
                let r = 2.5;
                let nf = n as f64;
                let sigma = sigma_for(s, n);
                let tau = 20.0 * nf * nf.ln();
                let chained = flow_comparison_factor(sigma, r).unwrap() / tau * sigma / (r * nf.sqrt());
                let direct = s_conductance_lower_bound(s, r, n, composed_c_cond(1.0)).unwrap();
                assert!((chained - direct).abs() <= 1e-12 * direct, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn table_has_every_bound() {
        let p = BoundParams::new(2, 1.0, 4.0, 0.25).unwrap();
        let t = bounds_table(&p, false).unwrap();
        assert_eq!(t.len(), 7);
        assert!(t[0].shape_only && !t[3].shape_only);
    }
}
