//! Multi-indices, multinomial weights and the Gaussian mixture that the
//! τ-step Gaussian walk follows away from the boundary.

use crate::error::{invalid, Error, Result};
use crate::special::{compensated_sum, ln_binomial, ln_factorial, log_normal_pdf, log_sum_exp, two_phi_minus_one};
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::Write;

/// Default cap on the number of enumerated multi-indices.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// A composition `I = (i₁, …, iₙ)` of `τ` into non-negative parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    counts: Vec<u64>,
    tau: u64,
}

impl MultiIndex {
    /// Fails unless the counts sum to `tau`.
    pub fn new(counts: Vec<u64>, tau: u64) -> Result<Self> {
        if counts.is_empty() {
            return Err(invalid("I", "needs at least one coordinate"));
        }
        let total: u64 = counts.iter().sum();
        if total != tau {
            return Err(invalid("I", format!("entries sum to {total}, expected τ = {tau}")));
        }
        Ok(Self { counts, tau })
    }

    pub(crate) fn from_counts(counts: Vec<u64>) -> Self {
        let tau = counts.iter().sum();
        Self { counts, tau }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// Every coordinate was chosen at least once.
    pub fn is_full_rank(&self) -> bool {
        self.counts.iter().all(|&c| c >= 1)
    }

    /// `ln λ_I = ln(τ!/Πiⱼ!) − τ ln n`.
    pub fn ln_lambda(&self) -> f64 {
        let n = self.counts.len() as f64;
        ln_factorial(self.tau) - self.counts.iter().map(|&c| ln_factorial(c)).sum::<f64>() - self.tau as f64 * n.ln()
    }

    pub fn lambda(&self) -> f64 {
        self.ln_lambda().exp()
    }
}

/// `λ_I` for an index of dimension `n`.
pub fn lambda_weight(index: &MultiIndex, n: usize) -> Result<f64> {
    crate::error::check_dim(n, index.dim())?;
    Ok(index.lambda())
}

/// Number of compositions of `τ` into `n` parts (`full_rank_only`: positive parts).
pub fn multi_index_count(n: usize, tau: u64, full_rank_only: bool) -> f64 {
    let n = n as u64;
    if full_rank_only {
        if tau < n {
            return 0.0;
        }
        ln_binomial(tau - 1, n - 1).exp().round()
    } else {
        ln_binomial(tau + n - 1, n - 1).exp().round()
    }
}

/// Iterator over compositions in reverse lexicographic order, so for
/// `n = 2, τ = 2` it yields `(2,0), (1,1), (0,2)`.
#[derive(Clone, Debug)]
pub struct MultiIndices {
    current: Option<Vec<u64>>,
    offset: u64,
}

impl Iterator for MultiIndices {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let cur = self.current.as_mut()?;
        let out = MultiIndex::from_counts(cur.iter().map(|c| c + self.offset).collect());
        // advance: find the rightmost non-last position with a positive entry
        let n = cur.len();
        let pos = (0..n.saturating_sub(1)).rev().find(|&j| cur[j] > 0);
        match pos {
            None => self.current = None,
            Some(j) => {
                cur[j] -= 1;
                let rest: u64 = cur[j + 1..].iter().sum::<u64>() + 1;
                for c in &mut cur[j + 1..] {
                    *c = 0;
                }
                cur[j + 1] = rest;
            }
        }
        Some(out)
    }
}

/// All of `M_{n,τ}` (or its full-rank part), refusing when there are more than
/// `cap` of them.
pub fn enumerate_multi_indices_capped(n: usize, tau: u64, full_rank_only: bool, cap: u64) -> Result<MultiIndices> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let count = multi_index_count(n, tau, full_rank_only);
    if count > cap as f64 {
        return Err(Error::EnumerationCap { count, cap });
    }
    let (offset, budget) = if full_rank_only {
        if tau < n as u64 {
            return Ok(MultiIndices { current: None, offset: 1 });
        }
        (1, tau - n as u64)
    } else {
        (0, tau)
    };
    let mut first = vec![0; n];
    first[0] = budget;
    Ok(MultiIndices {
        current: Some(first),
        offset,
    })
}

/// [`enumerate_multi_indices_capped`] with the default cap.
pub fn enumerate_multi_indices(n: usize, tau: u64, full_rank_only: bool) -> Result<MultiIndices> {
    enumerate_multi_indices_capped(n, tau, full_rank_only, ENUMERATION_CAP)
}

/// Tallies `τ` uniform axis choices; the result has law `{λ_I}`.
pub fn sample_multi_index<R: Rng + ?Sized>(n: usize, tau: u64, rng: &mut R) -> MultiIndex {
    assert!(n >= 1, "n must be at least 1");
    let mut counts = vec![0u64; n];
    for _ in 0..tau {
        counts[rng.random_range(0..n)] += 1;
    }
    MultiIndex { counts, tau }
}

fn sample_full_rank<R: Rng + ?Sized>(n: usize, tau: u64, rng: &mut R) -> Result<MultiIndex> {
    if tau < n as u64 {
        return Err(Error::Precondition(format!("no full-rank index exists for n = {n}, τ = {tau}")));
    }
    for _ in 0..10_000_000u32 {
        let i = sample_multi_index(n, tau, rng);
        if i.is_full_rank() {
            return Ok(i);
        }
    }
    Err(Error::Unsupported("full-rank indices are too rare to sample by rejection".into()))
}

/// Union bound `n(1 − 1/n)^τ` on the weight of non-full-rank indices.
pub fn non_full_rank_mass(n: usize, tau: u64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    let n = n as f64;
    Ok(n * (1.0 - 1.0 / n).powf(tau as f64))
}

/// Exact weight of non-full-rank indices by inclusion–exclusion,
/// `Σ_{k=1}^{n} (−1)^{k+1} C(n,k)(1 − k/n)^τ`. Alternating, so only used for
/// small `n`.
pub fn non_full_rank_mass_exact(n: usize, tau: u64) -> Result<f64> {
    if n < 1 {
        return Err(invalid("n", "must be at least 1"));
    }
    if n > 60 {
        return Err(Error::Unsupported("inclusion–exclusion is numerically unstable beyond n = 60".into()));
    }
    let nf = n as f64;
    let terms = (1..=n).map(|k| {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let base = 1.0 - k as f64 / nf;
        let p = if tau == 0 { 1.0 } else { base.powf(tau as f64) };
        sign * ln_binomial(n as u64, k as u64).exp() * p
    });
    Ok(compensated_sum(terms).clamp(0.0, 1.0))
}

/// Exact total variation between `N(v, Σ_I)` and `N(u, Σ_I)` with
/// `Σ_I = diag(iⱼσ²)`: `2Φ(Δ/2) − 1` for the Mahalanobis distance `Δ`.
///
/// Zero-variance coordinates are point masses; if `v` and `u` differ there the
/// supports are disjoint and the distance is 1.
pub fn gaussian_tv_equal_cov(v: &[f64], u: &[f64], index: &MultiIndex, sigma: f64) -> Result<f64> {
    crate::error::check_dim(v.len(), u.len())?;
    crate::error::check_dim(v.len(), index.dim())?;
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let mut d2 = 0.0;
    for ((vj, uj), &c) in v.iter().zip(u).zip(index.counts()) {
        let d = vj - uj;
        if c == 0 {
            if d != 0.0 {
                return Ok(1.0);
            }
            continue;
        }
        d2 += d * d / (c as f64 * sigma * sigma);
    }
    Ok(two_phi_minus_one(0.5 * d2.sqrt()))
}

/// `‖v − u‖₂ / (2σ)`.
pub fn pinsker_bound(v: &[f64], u: &[f64], sigma: f64) -> Result<f64> {
    crate::error::check_dim(v.len(), u.len())?;
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let d: f64 = v.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(d / (2.0 * sigma))
}

/// `Σ_I λ_I d_TV(G_{v,I}, G_{u,I})` over all of `M_{n,τ}`.
pub fn aggregate_tv(v: &[f64], u: &[f64], sigma: f64, tau: u64) -> Result<f64> {
    let mut terms = Vec::new();
    for i in enumerate_multi_indices(v.len(), tau, false)? {
        terms.push(i.lambda() * gaussian_tv_equal_cov(v, u, &i, sigma)?);
    }
    Ok(compensated_sum(terms))
}

/// How a mixture density is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityMode {
    ExactEnumeration,
    /// Average over `samples` full-rank indices, scaled by the full-rank mass.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureDensity {
    pub log_density: f64,
    /// Standard error of the density (not its log); zero when exact.
    pub std_error: f64,
}

fn component_log_density(v: &[f64], sigma: f64, index: &MultiIndex, x: &[f64]) -> f64 {
    x.iter()
        .zip(v)
        .zip(index.counts())
        .map(|((xj, vj), &c)| log_normal_pdf(*xj, *vj, c as f64 * sigma * sigma))
        .sum()
}

/// Log-density at `x` of the full-rank part `Σ_{I full rank} λ_I G_{v,I}`.
pub fn mixture_log_density(v: &[f64], sigma: f64, tau: u64, x: &[f64], mode: DensityMode) -> Result<MixtureDensity> {
    crate::error::check_dim(v.len(), x.len())?;
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let n = v.len();
    match mode {
        DensityMode::ExactEnumeration => {
            let terms: Vec<f64> = enumerate_multi_indices(n, tau, true)?
                .map(|i| i.ln_lambda() + component_log_density(v, sigma, &i, x))
                .collect();
            Ok(MixtureDensity {
                log_density: log_sum_exp(terms),
                std_error: 0.0,
            })
        }
        DensityMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(invalid("samples", "need at least 2"));
            }
            let full_mass = 1.0 - if n >= 2 { non_full_rank_mass_exact(n, tau)? } else { 0.0 };
            let mut rng = crate::seed::rng(seed, "mixture-density");
            let logs: Vec<f64> = (0..samples)
                .map(|_| sample_full_rank(n, tau, &mut rng).map(|i| component_log_density(v, sigma, &i, x)))
                .collect::<Result<_>>()?;
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let scaled: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
            let mean = scaled.iter().sum::<f64>() / samples as f64;
            let var = scaled.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
            Ok(MixtureDensity {
                log_density: full_mass.ln() + m + mean.ln(),
                std_error: full_mass * m.exp() * (var / samples as f64).sqrt(),
            })
        }
    }
}

/// A draw from `Σ_{I full rank} λ_I G_{v,I}` normalized to a probability law.
pub fn sample_full_rank_mixture<R: Rng + ?Sized>(v: &[f64], sigma: f64, tau: u64, rng: &mut R) -> Result<Vec<f64>> {
    let i = sample_full_rank(v.len(), tau, rng)?;
    Ok(v.iter()
        .zip(i.counts())
        .map(|(vj, &c)| vj + sigma * (c as f64).sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Writes `i_1..i_n,lambda` rows for every index of `M_{n,τ}`.
pub fn write_weights_csv<W: Write>(mut w: W, n: usize, tau: u64, full_rank_only: bool) -> Result<()> {
    let indices = enumerate_multi_indices(n, tau, full_rank_only)?;
    let header: Vec<String> = (1..=n).map(|j| format!("i_{j}")).collect();
    writeln!(w, "{},lambda", header.join(","))?;
    for i in indices {
        let cells: Vec<String> = i.counts().iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{}", cells.join(","), i.lambda())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn idx(c: &[u64]) -> MultiIndex {
        MultiIndex::from_counts(c.to_vec())
    }

    #[test]
    fn weights_for_two_steps() {
        assert!((idx(&[2, 0]).lambda() - 0.25).abs() < 1e-15);
        assert!((idx(&[1, 1]).lambda() - 0.5).abs() < 1e-15);
        assert!((idx(&[7]).lambda() - 1.0).abs() < 1e-15);
        assert!(MultiIndex::new(vec![1, 1], 3).is_err());
    }

    #[test]
    fn enumeration_order_and_counts() {
        let all: Vec<_> = enumerate_multi_indices(2, 2, false).unwrap().map(|i| i.counts().to_vec()).collect();
        assert_eq!(all, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let fr: Vec<_> = enumerate_multi_indices(2, 2, true).unwrap().map(|i| i.counts().to_vec()).collect();
        assert_eq!(fr, vec![vec![1, 1]]);
        assert_eq!(enumerate_multi_indices(3, 4, true).unwrap().count(), 3);
        assert_eq!(enumerate_multi_indices(4, 6, false).unwrap().count(), 84);
        assert_eq!(enumerate_multi_indices(3, 2, true).unwrap().count(), 0);
        assert!(matches!(
            enumerate_multi_indices(10, 100, false),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=4 {
            for tau in 0..=12 {
                let s = compensated_sum(enumerate_multi_indices(n, tau, false).unwrap().map(|i| i.lambda()));
                assert!((s - 1.0).abs() < 1e-12, "n={n} τ={tau}: {s}");
            }
        }
    }

    #[test]
    fn large_tau_stays_finite() {
        let i = idx(&[5000, 5000]);
        assert!(i.ln_lambda().is_finite());
        assert!(i.lambda() > 0.0);
    }

    #[test]
    fn non_full_rank_values() {
        let b = non_full_rank_mass(2, 28).unwrap();
        assert!((b - 2.0 * 0.5f64.powi(28)).abs() < 1e-22);
        assert!((non_full_rank_mass_exact(2, 28).unwrap() - b).abs() < 1e-22);
        assert!(b <= 2f64.powi(-19));
        assert_eq!(non_full_rank_mass(3, 0).unwrap(), 3.0);
        assert_eq!(non_full_rank_mass_exact(3, 0).unwrap(), 1.0);
        // n = 3, τ = 4: full-rank weight is 3·4!/(2!·3⁴) = 36/81
        assert!((non_full_rank_mass_exact(3, 4).unwrap() - (1.0 - 36.0 / 81.0)).abs() < 1e-14);
    }

    #[test]
    fn density_plug_in_values() {
        let sigma = 0.3;
        let d = mixture_log_density(&[0.2], sigma, 3, &[0.5], DensityMode::ExactEnumeration).unwrap();
        assert!((d.log_density - log_normal_pdf(0.5, 0.2, 3.0 * sigma * sigma)).abs() < 1e-13);
        let d = mixture_log_density(&[0.0, 0.0], sigma, 2, &[0.0, 0.0], DensityMode::ExactEnumeration).unwrap();
        let want = 0.5 / (2.0 * PI * sigma * sigma);
        assert!((d.log_density.exp() - want).abs() < 1e-12);
    }

    #[test]
    fn tv_values() {
        let i = idx(&[1, 1]);
        assert_eq!(gaussian_tv_equal_cov(&[0.0, 0.0], &[0.0, 0.0], &i, 1.0).unwrap(), 0.0);
        let tv = gaussian_tv_equal_cov(&[0.0, 0.0], &[1.0, 0.0], &i, 1.0).unwrap();
        assert!((tv - 0.382_924_922_548_026_2).abs() < 1e-14);
        let singular = idx(&[2, 0]);
        assert_eq!(gaussian_tv_equal_cov(&[0.0, 0.0], &[0.0, 0.1], &singular, 1.0).unwrap(), 1.0);
        assert!((pinsker_bound(&[0.0, 0.0], &[0.3, 0.4], 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((pinsker_bound(&[0.0], &[1.0], 0.5).unwrap() - 1.0).abs() < 1e-15);
    }
}
