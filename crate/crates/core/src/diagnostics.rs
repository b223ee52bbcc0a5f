//! Statistical diagnostics: binned TV estimates, KS statistics, empirical
//! mixing times and checks of the near-boundary-free Gaussian iterate.

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{ConvexBody, Shape, UniformSampler};
use crate::mixture::{aggregate_tv, sample_full_rank_mixture};
use crate::schemes::{default_tau, gaussian_iterate, run_chain, ChainStart, GaussianWalkParams, MarkovScheme, WarmStart};
use crate::seed;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// Number of blocks in the jackknife CI.
pub const JACKKNIFE_BLOCKS: usize = 20;

/// A rectangular grid with one extra overflow cell for points outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct BinGrid {
    /// Increasing cell edges per axis.
    edges: Vec<Vec<f64>>,
    /// Whether every axis is evenly spaced, which allows direct indexing.
    even: bool,
}

fn check_cells(bins: &[usize]) -> Result<()> {
    let total = bins.iter().try_fold(1usize, |acc, &b| acc.checked_mul(b));
    if total.is_none_or(|t| t > 50_000_000) {
        return Err(invalid("bins", "grid has too many cells"));
    }
    Ok(())
}

impl BinGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, bins: Vec<usize>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        check_dim(lo.len(), bins.len())?;
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(invalid("grid", "each lower edge must be below the upper edge"));
        }
        if bins.contains(&0) {
            return Err(invalid("bins", "need at least one bin per axis"));
        }
        check_cells(&bins)?;
        let edges = (0..lo.len())
            .map(|i| {
                let w = (hi[i] - lo[i]) / bins[i] as f64;
                let mut e: Vec<f64> = (0..bins[i]).map(|j| lo[i] + j as f64 * w).collect();
                e.push(hi[i]);
                e
            })
            .collect();
        Ok(Self { edges, even: true })
    }

    /// A grid with explicit, strictly increasing edges on every axis.
    pub fn from_edges(edges: Vec<Vec<f64>>) -> Result<Self> {
        if edges.is_empty() {
            return Err(invalid("edges", "need at least one axis"));
        }
        for e in &edges {
            if e.len() < 2 || e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid("edges", "each axis needs at least two finite, strictly increasing edges"));
            }
        }
        check_cells(&edges.iter().map(|e| e.len() - 1).collect::<Vec<_>>())?;
        Ok(Self { edges, even: false })
    }

    /// `k` bins per axis over `[lo, hi]`.
    pub fn uniform(lo: &[f64], hi: &[f64], k: usize) -> Result<Self> {
        Self::new(lo.to_vec(), hi.to_vec(), vec![k; lo.len()])
    }

    /// `k` bins per axis over the body's bounding box.
    pub fn for_body(body: &ConvexBody, k: usize) -> Result<Self> {
        let (lo, hi) = body.bounding_box();
        Self::uniform(lo, hi, k)
    }

    /// `⌈N^{1/(n+2)}⌉` bins per axis for `N` samples in dimension `n`.
    pub fn default_bins(samples: usize, n: usize) -> usize {
        ((samples as f64).powf(1.0 / (n as f64 + 2.0)).ceil() as usize).max(1)
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    /// Bins along `axis`.
    pub fn bins(&self, axis: usize) -> usize {
        self.edges[axis].len() - 1
    }

    /// Number of cells including the overflow cell.
    pub fn cell_count(&self) -> usize {
        self.edges.iter().map(|e| e.len() - 1).product::<usize>() + 1
    }

    pub fn overflow_cell(&self) -> usize {
        self.cell_count() - 1
    }

    /// Cell index of `x`; points outside the grid go to the overflow cell.
    pub fn index(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for (e, &xi) in self.edges.iter().zip(x) {
            let b = e.len() - 1;
            let (l, h) = (e[0], e[b]);
            if !(xi >= l && xi <= h) {
                return self.overflow_cell();
            }
            let j = if self.even {
                ((xi - l) / (h - l) * b as f64) as usize
            } else {
                e.partition_point(|&v| v <= xi) - 1
            };
            idx = idx * b + j.min(b - 1);
        }
        idx
    }

    /// Lower and upper corner of an interior cell.
    pub fn cell_bounds(&self, mut cell: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in (0..n).rev() {
            let b = self.bins(i);
            let j = cell % b;
            cell /= b;
            lo[i] = self.edges[i][j];
            hi[i] = self.edges[i][j + 1];
        }
        (lo, hi)
    }

    pub fn histogram(&self, samples: &[Vec<f64>]) -> Vec<u64> {
        let mut h = vec![0u64; self.cell_count()];
        for x in samples {
            h[self.index(x)] += 1;
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvMethod {
    Binned,
    /// Largest per-axis KS statistic; a lower bound on the TV.
    MarginalKsProxy,
}

/// An estimated total variation distance.
#[derive(Clone, Debug, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    pub method: TvMethod,
    pub bins_per_axis: usize,
    pub samples: usize,
    /// Three jackknife standard errors.
    pub ci_halfwidth: f64,
    /// Expected value of the estimator when the true binned TV is zero,
    /// assuming independent samples.
    pub bias: f64,
}

impl TvEstimate {
    /// Smallest TV the estimator can resolve: bias plus CI.
    pub fn noise_floor(&self) -> f64 {
        self.bias + self.ci_halfwidth
    }
}

fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn normalize(h: &[u64]) -> Vec<f64> {
    let total: u64 = h.iter().sum();
    h.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

/// `½ Σ E|p̂ − q̂|` at `p = q`, Gaussian approximation.
fn tv_bias(p: &[f64], inv_n: f64) -> f64 {
    0.5 * p.iter().map(|&pi| (2.0 * pi * (1.0 - pi) * inv_n / PI).sqrt()).sum::<f64>()
}

/// Leave-one-block-out jackknife standard error of `stat` over contiguous
/// blocks of cell-index lists.
fn jackknife_se(cells: &[usize], ncells: usize, stat: impl Fn(&[u64]) -> f64 + Sync) -> f64 {
    let b = JACKKNIFE_BLOCKS.min(cells.len());
    if b < 2 {
        return 0.0;
    }
    let mut full = vec![0u64; ncells];
    for &c in cells {
        full[c] += 1;
    }
    let chunk = cells.len().div_ceil(b);
    let thetas: Vec<f64> = cells
        .par_chunks(chunk)
        .map(|block| {
            let mut h = full.clone();
            for &c in block {
                h[c] -= 1;
            }
            stat(&h)
        })
        .collect();
    let b = thetas.len() as f64;
    let mean = thetas.iter().sum::<f64>() / b;
    ((b - 1.0) / b * thetas.iter().map(|t| (t - mean).powi(2)).sum::<f64>()).sqrt()
}

/// Probability of each grid cell under the uniform law on a body.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMasses {
    pub masses: Vec<f64>,
    /// Number of reference samples, or `None` when the masses are exact.
    pub samples: Option<usize>,
}

const REFERENCE_SAMPLES: usize = 400_000;

impl ReferenceMasses {
    /// Exact for boxes, Monte Carlo otherwise.
    pub fn for_body(body: &ConvexBody, grid: &BinGrid) -> Result<Self> {
        check_dim(body.dim(), grid.dim())?;
        if let Shape::Box { center, halfwidths } = body.shape() {
            let vol: f64 = halfwidths.iter().map(|h| 2.0 * h).product();
            let mut masses = vec![0.0; grid.cell_count()];
            let mut inside = 0.0;
            for (c, m) in masses.iter_mut().enumerate().take(grid.cell_count() - 1) {
                let (lo, hi) = grid.cell_bounds(c);
                let mut v = 1.0;
                for i in 0..lo.len() {
                    let a = lo[i].max(center[i] - halfwidths[i]);
                    let b = hi[i].min(center[i] + halfwidths[i]);
                    v *= (b - a).max(0.0);
                }
                *m = v / vol;
                inside += *m;
            }
            masses[grid.overflow_cell()] = (1.0 - inside).max(0.0);
            return Ok(Self { masses, samples: None });
        }
        let mut rng = seed::rng(0, "reference-masses");
        let sampler = UniformSampler::for_body(body, &mut rng);
        let pts = sampler.samples(body, REFERENCE_SAMPLES, &mut rng)?;
        Ok(Self {
            masses: normalize(&grid.histogram(&pts)),
            samples: Some(REFERENCE_SAMPLES),
        })
    }
}

/// Binned TV between the empirical law of `samples` and the uniform law on
/// `body`, over `bins_per_axis` bins of the bounding box.
///
/// Sample order matters for the CI: the jackknife drops contiguous blocks, so
/// samples from one chain should be adjacent.
pub fn tv_to_uniform(samples: &[Vec<f64>], body: &ConvexBody, bins_per_axis: usize) -> Result<TvEstimate> {
    let grid = BinGrid::for_body(body, bins_per_axis)?;
    let reference = ReferenceMasses::for_body(body, &grid)?;
    tv_to_reference(samples, body, &grid, &reference)
}

/// [`tv_to_uniform`] with a precomputed grid and reference.
pub fn tv_to_reference(
    samples: &[Vec<f64>],
    body: &ConvexBody,
    grid: &BinGrid,
    reference: &ReferenceMasses,
) -> Result<TvEstimate> {
    if samples.is_empty() {
        return Err(invalid("samples", "need at least one sample"));
    }
    if reference.masses.iter().sum::<f64>() <= 0.0 {
        return Err(invalid("reference", "zero total reference mass"));
    }
    for x in samples {
        if !body.contains(x)? {
            return Err(Error::NotInBody);
        }
    }
    let cells: Vec<usize> = samples.iter().map(|x| grid.index(x)).collect();
    Ok(tv_of_cells(&cells, grid, reference))
}

fn tv_of_cells(cells: &[usize], grid: &BinGrid, reference: &ReferenceMasses) -> TvEstimate {
    let q = &reference.masses;
    let stat = |h: &[u64]| half_l1(&normalize(h), q);
    let mut full = vec![0u64; grid.cell_count()];
    for &c in cells {
        full[c] += 1;
    }
    let value = stat(&full);
    let se = jackknife_se(cells, grid.cell_count(), stat);
    let n = cells.len() as f64;
    let inv = 1.0 / n + reference.samples.map_or(0.0, |m| 1.0 / m as f64);
    TvEstimate {
        value,
        method: TvMethod::Binned,
        bins_per_axis: grid.bins(0),
        samples: cells.len(),
        ci_halfwidth: 3.0 * se,
        bias: tv_bias(q, inv),
    }
}

/// Binned TV between two sample sets on a grid fixed in advance.
pub fn two_sample_tv(a: &[Vec<f64>], b: &[Vec<f64>], grid: &BinGrid) -> Result<TvEstimate> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("samples", "both sample sets must be non-empty"));
    }
    let ca: Vec<usize> = a.iter().map(|x| grid.index(x)).collect();
    let cb: Vec<usize> = b.iter().map(|x| grid.index(x)).collect();
    let hist = |cells: &[usize]| {
        let mut h = vec![0u64; grid.cell_count()];
        for &c in cells {
            h[c] += 1;
        }
        h
    };
    let (ha, hb) = (hist(&ca), hist(&cb));
    let (pa, pb) = (normalize(&ha), normalize(&hb));
    let value = half_l1(&pa, &pb);
    let se_a = jackknife_se(&ca, grid.cell_count(), |h| half_l1(&normalize(h), &pb));
    let se_b = jackknife_se(&cb, grid.cell_count(), |h| half_l1(&pa, &normalize(h)));
    let pooled: Vec<f64> = ha
        .iter()
        .zip(&hb)
        .map(|(x, y)| (x + y) as f64 / (a.len() + b.len()) as f64)
        .collect();
    Ok(TvEstimate {
        value,
        method: TvMethod::Binned,
        bins_per_axis: grid.bins(0),
        samples: a.len().min(b.len()),
        ci_halfwidth: 3.0 * (se_a * se_a + se_b * se_b).sqrt(),
        bias: tv_bias(&pooled, 1.0 / a.len() as f64 + 1.0 / b.len() as f64),
    })
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("samples", "both sample sets must be non-empty"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Per-axis KS statistics between two point sets.
pub fn ks_per_axis(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.first().map_or(0, |x| x.len());
    (0..n)
        .map(|i| {
            let xa: Vec<f64> = a.iter().map(|x| x[i]).collect();
            let xb: Vec<f64> = b.iter().map(|x| x[i]).collect();
            ks_two_sample(&xa, &xb)
        })
        .collect()
}

/// The largest per-axis KS statistic as a TV lower-bound proxy.
pub fn marginal_ks_proxy(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<TvEstimate> {
    let ks = ks_per_axis(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    Ok(TvEstimate {
        value: ks.into_iter().fold(0.0, f64::max),
        method: TvMethod::MarginalKsProxy,
        bins_per_axis: 0,
        samples: a.len().min(b.len()),
        // asymptotic 0.3% critical value of the KS distribution
        ci_halfwidth: 1.73 * ((na + nb) / (na * nb)).sqrt(),
        bias: 0.0,
    })
}

/// Pooled TV estimates of a warm-started scheme at a list of step counts.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingReport {
    pub checkpoints: Vec<usize>,
    pub estimates: Vec<TvEstimate>,
    pub threshold: f64,
    /// First checkpoint with `estimate + ci < threshold`.
    pub reached: Option<usize>,
}

impl MixingReport {
    pub fn passes(&self, i: usize) -> bool {
        let e = &self.estimates[i];
        e.value + e.ci_halfwidth < self.threshold
    }

    /// CSV with header `checkpoint,tv_estimate,ci,pass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "checkpoint,tv_estimate,ci,pass")?;
        for (i, (c, e)) in self.checkpoints.iter().zip(&self.estimates).enumerate() {
            writeln!(w, "{c},{},{},{}", e.value, e.ci_halfwidth, self.passes(i))?;
        }
        Ok(())
    }
}

/// Options for [`mixing_time_empirical`].
#[derive(Clone, Debug, PartialEq)]
pub struct MixingOptions {
    pub m: f64,
    pub threshold: f64,
    pub checkpoints: Vec<usize>,
    pub chains: usize,
    pub bins_per_axis: usize,
    /// A grid fixed in advance; overrides `bins_per_axis`.
    pub grid: Option<BinGrid>,
    pub seed: u64,
}

/// Runs `chains` walks from an `M`-warm start and estimates the TV to uniform
/// of the pooled states at every checkpoint.
pub fn mixing_time_empirical<S: MarkovScheme>(scheme: &S, body: &ConvexBody, opts: &MixingOptions) -> Result<MixingReport> {
    let cps = &opts.checkpoints;
    if cps.is_empty() || cps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints", "must be non-empty and strictly increasing"));
    }
    if opts.chains < 2 {
        return Err(invalid("chains", "need at least 2 chains"));
    }
    let warm = WarmStart::new(body, opts.m)?;
    let grid = match &opts.grid {
        Some(g) => {
            check_dim(body.dim(), g.dim())?;
            g.clone()
        }
        None => BinGrid::for_body(body, opts.bins_per_axis)?,
    };
    let reference = ReferenceMasses::for_body(body, &grid)?;
    let last = *cps.last().unwrap();
    // only cell indices are kept, checkpoint-major per chain
    let per_chain: Vec<Vec<usize>> = (0..opts.chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(opts.seed, "mixing", 0, c);
            let mut x = warm.sample(&mut rng)?;
            let mut out = Vec::with_capacity(cps.len());
            let mut next = 0;
            for s in 0..=last {
                if s > 0 {
                    scheme.step(body, &mut x, &mut rng)?;
                }
                if next < cps.len() && cps[next] == s {
                    out.push(grid.index(&x));
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut estimates = Vec::with_capacity(cps.len());
    for k in 0..cps.len() {
        let cells: Vec<usize> = per_chain.iter().map(|c| c[k]).collect();
        estimates.push(tv_of_cells(&cells, &grid, &reference));
    }
    let mut report = MixingReport {
        checkpoints: cps.clone(),
        estimates,
        threshold: opts.threshold,
        reached: None,
    };
    report.reached = (0..cps.len()).find(|&i| report.passes(i)).map(|i| cps[i]);
    Ok(report)
}

/// Pools every `thinning`-th state of independent chains (chain-major order).
pub fn pooled_trajectory_states<S: MarkovScheme>(
    scheme: &S,
    body: &ConvexBody,
    start: &ChainStart,
    chains: usize,
    steps: usize,
    thinning: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let trajectories: Vec<Vec<Vec<f64>>> = (0..chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(seed, "pooled", 0, c);
            let x0 = match start {
                ChainStart::Point(p) => p.clone(),
                ChainStart::Warm(w) => w.sample(&mut rng)?,
            };
            Ok(run_chain(scheme, body, &x0, steps, &mut rng, Some(thinning))?.states)
        })
        .collect::<Result<_>>()?;
    Ok(trajectories.into_iter().flatten().collect())
}

/// Outcome of a statistical check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    /// The estimator cannot resolve the bound at this sample size.
    Inconclusive,
    Fail,
}

impl Verdict {
    /// Inconclusive when the noise floor exceeds the bound, since neither
    /// outcome would mean anything; otherwise pass when `estimate ≤ bound + slack`,
    /// else fail.
    pub fn judge(estimate: f64, bound: f64, slack: f64, noise_floor: f64) -> Self {
        if noise_floor > bound {
            Verdict::Inconclusive
        } else if estimate <= bound + slack {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

/// Bounds from the probability appendix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbabilityQuery {
    /// `P[X > (1+δ)μ] ≤ exp(−μ((1+δ)ln(1+δ) − δ))` for a sum of independent
    /// Bernoulli variables with mean `μ`.
    Chernoff { mu: f64, delta: f64 },
    /// `P[|X| ≥ t] ≤ exp(−t²/(2σ²))` for `X ~ N(0, σ²)`, valid for `t ≥ σ`.
    GaussianTail { t: f64, sigma: f64 },
    /// `d_TV ≤ √(D_KL/2)`.
    Pinsker { d_kl: f64 },
}

pub fn probability_bounds(query: ProbabilityQuery) -> Result<f64> {
    match query {
        ProbabilityQuery::Chernoff { mu, delta } => {
            if !(mu >= 0.0 && delta > 0.0) {
                return Err(invalid("chernoff", "needs μ ≥ 0 and δ > 0"));
            }
            Ok((-mu * ((1.0 + delta) * (1.0 + delta).ln() - delta)).exp())
        }
        ProbabilityQuery::GaussianTail { t, sigma } => {
            if !(sigma > 0.0) {
                return Err(invalid("sigma", "must be positive"));
            }
            if t < sigma {
                return Err(invalid("t", "the tail bound needs t ≥ σ"));
            }
            Ok((-t * t / (2.0 * sigma * sigma)).exp())
        }
        ProbabilityQuery::Pinsker { d_kl } => {
            if !(d_kl >= 0.0) {
                return Err(invalid("d_kl", "must be non-negative"));
            }
            Ok((d_kl / 2.0).sqrt())
        }
    }
}

/// A grid centred at `center` wide enough for `τ` Gaussian steps of size `σ`:
/// half-width `6σ√(τ/n)` per axis plus `extra`.
pub fn iterate_grid(center: &[f64], sigma: f64, tau: usize, extra: f64, bins: usize) -> Result<BinGrid> {
    let n = center.len() as f64;
    let h = 6.0 * sigma * (tau as f64 / n).sqrt() + extra;
    BinGrid::uniform(
        &center.iter().map(|c| c - h).collect::<Vec<_>>(),
        &center.iter().map(|c| c + h).collect::<Vec<_>>(),
        bins,
    )
}

/// Gaussian-iterate versus mixture check away from the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma11Report {
    pub n: usize,
    pub sigma: f64,
    pub tau: usize,
    pub tv: TvEstimate,
    /// `2n⁻⁵`.
    pub bound: f64,
    pub rejection_frequency: f64,
    pub rejection_std_error: f64,
    /// `1.5n⁻⁵`.
    pub rejection_bound: f64,
    pub rejection_pass: bool,
    pub verdict: Verdict,
}

fn samples_par<T: Send>(
    count: usize,
    seed: u64,
    label: &str,
    f: impl Fn(&mut seed::WalkRng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    const CHUNK: usize = 4096;
    let chunks: Vec<Vec<T>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(seed, label, 0, c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn deep_interior_cube(n: usize, sigma: f64, half_width: f64) -> Result<ConvexBody> {
    if !(n >= 2) {
        return Err(invalid("n", "must be at least 2"));
    }
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let need = 100.0 * sigma * (n as f64).ln();
    if !(half_width > need) {
        return Err(Error::Precondition(format!(
            "hypothesis vacuous: the centre's ∞-distance to the boundary {half_width} does not exceed 100σ ln n = {need}"
        )));
    }
    ConvexBody::cube(n, half_width)
}

/// Compares `samples` draws of the τ-step Gaussian iterate from the centre of
/// `[-h, h]ⁿ` with draws from the full-rank mixture.
pub fn lemma11_check(n: usize, sigma: f64, half_width: f64, samples: usize, seed: u64) -> Result<Lemma11Report> {
    let body = deep_interior_cube(n, sigma, half_width)?;
    if samples < 100 {
        return Err(invalid("samples", "need at least 100"));
    }
    let tau = default_tau(n);
    let params = GaussianWalkParams::new(sigma, tau)?;
    let v = vec![0.0; n];
    let iterates = samples_par(samples, seed, "lemma11-iterate", |rng| gaussian_iterate(&body, &v, params, rng))?;
    let rejections = iterates.iter().filter(|i| i.rejected).count();
    let walk: Vec<Vec<f64>> = iterates.into_iter().map(|i| i.point).collect();
    let mixture = samples_par(samples, seed, "lemma11-mixture", |rng| {
        sample_full_rank_mixture(&v, sigma, tau as u64, rng)
    })?;
    let grid = iterate_grid(&v, sigma, tau, 0.0, BinGrid::default_bins(samples, n))?;
    let tv = two_sample_tv(&walk, &mixture, &grid)?;

    let nf = n as f64;
    let bound = 2.0 * nf.powi(-5);
    let p = rejections as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    let rejection_bound = 1.5 * nf.powi(-5);
    let floor = tv.noise_floor();
    Ok(Lemma11Report {
        n,
        sigma,
        tau,
        verdict: Verdict::judge(tv.value, bound, 3.0 * floor, floor),
        tv,
        bound,
        rejection_frequency: p,
        rejection_std_error: se,
        rejection_bound,
        rejection_pass: p <= rejection_bound + 3.0 * se,
    })
}

/// Two τ-step Gaussian laws from nearby deep-interior points.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma12Report {
    pub tv: TvEstimate,
    /// `3/4`.
    pub bound: f64,
    /// `Σ λ_I d_TV(G_{v,I}, G_{u,I})` at `τ = 6` for `n = 2`, the enumerable
    /// analytic counterpart.
    pub mixture_aggregate: Option<f64>,
    pub verdict: Verdict,
}

/// Compares the τ-step Gaussian laws from `u` and `v` inside `[-h, h]ⁿ`.
pub fn lemma12_check(
    sigma: f64,
    u: &[f64],
    v: &[f64],
    half_width: f64,
    samples: usize,
    seed: u64,
) -> Result<Lemma12Report> {
    check_dim(u.len(), v.len())?;
    let n = u.len();
    let body = deep_interior_cube(n, sigma, half_width)?;
    let dist = u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if dist > sigma * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("‖u − v‖₂ = {dist} exceeds σ = {sigma}")));
    }
    let need = 100.0 * sigma * (n as f64).ln();
    for p in [u, v] {
        if body.linf_boundary_distance(p)? <= need {
            return Err(Error::Precondition("both points must be deep inside the body".into()));
        }
    }
    if samples < 100 {
        return Err(invalid("samples", "need at least 100"));
    }
    let tau = default_tau(n);
    let params = GaussianWalkParams::new(sigma, tau)?;
    let from_u = samples_par(samples, seed, "lemma12-u", |rng| Ok(gaussian_iterate(&body, u, params, rng)?.point))?;
    let from_v = samples_par(samples, seed, "lemma12-v", |rng| Ok(gaussian_iterate(&body, v, params, rng)?.point))?;
    let mid: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
    let grid = iterate_grid(&mid, sigma, tau, 0.5 * dist, BinGrid::default_bins(samples, n))?;
    let tv = two_sample_tv(&from_u, &from_v, &grid)?;
    let mixture_aggregate = if n == 2 { Some(aggregate_tv(v, u, sigma, 6)?) } else { None };
    let bound = 0.75;
    let floor = tv.noise_floor();
    Ok(Lemma12Report {
        verdict: Verdict::judge(tv.value, bound, 2.0 * tv.ci_halfwidth, floor),
        tv,
        bound,
        mixture_aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::exact_uniform_sample;

    #[test]
    fn grid_indexing() {
        let g = BinGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], 2).unwrap();
        assert_eq!(g.cell_count(), 5);
        assert_eq!(g.index(&[0.1, 0.1]), 0);
        assert_eq!(g.index(&[0.1, 0.9]), 1);
        assert_eq!(g.index(&[0.9, 0.1]), 2);
        assert_eq!(g.index(&[1.0, 1.0]), 3);
        assert_eq!(g.index(&[1.5, 0.5]), 4);
        assert_eq!(g.cell_bounds(1), (vec![0.0, 0.5], vec![0.5, 1.0]));
    }

    #[test]
    fn explicit_edges() {
        let g = BinGrid::from_edges(vec![vec![-1.0, -0.5, 0.5, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(g.cell_count(), 4);
        assert_eq!(g.index(&[-0.5, 0.2]), 1);
        assert_eq!(g.index(&[0.7, 1.0]), 2);
        assert_eq!(g.index(&[1.2, 0.5]), 3);
        assert_eq!(g.cell_bounds(1), (vec![-0.5, 0.0], vec![0.5, 1.0]));
        let b = ConvexBody::boxed(vec![0.0, 0.5], vec![1.0, 0.5], 1.0).unwrap();
        let r = ReferenceMasses::for_body(&b, &g).unwrap();
        assert!((r.masses[1] - 0.5).abs() < 1e-15 && r.masses[3] == 0.0);
        assert!(BinGrid::from_edges(vec![vec![0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn all_in_one_bin_gives_half() {
        let b = ConvexBody::boxed(vec![0.0], vec![1.0], 1.0).unwrap();
        let samples = vec![vec![-0.5]; 100];
        let e = tv_to_uniform(&samples, &b, 2).unwrap();
        assert!((e.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_samples_have_small_tv() {
        let b = ConvexBody::cube(2, 1.0).unwrap();
        let mut rng = seed::rng(1, "tv-exact");
        let s: Vec<_> = (0..100_000).map(|_| exact_uniform_sample(&b, &mut rng).unwrap()).collect();
        let e = tv_to_uniform(&s, &b, 4).unwrap();
        assert!(e.value <= 0.02, "{e:?}");
        let g = BinGrid::for_body(&b, 4).unwrap();
        assert_eq!(two_sample_tv(&s, &s, &g).unwrap().value, 0.0);
    }

    #[test]
    fn ks_statistic() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.1], &[1.0, 2.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[0.0, 1.0, 2.0, 3.0], &[1.5, 2.5]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn appendix_bounds() {
        let c = probability_bounds(ProbabilityQuery::Chernoff { mu: 10.0, delta: 1.0 }).unwrap();
        assert!(c <= (-10.0f64 / 3.0).exp());
        let g = probability_bounds(ProbabilityQuery::GaussianTail { t: 2.0, sigma: 2.0 }).unwrap();
        assert!((g - (-0.5f64).exp()).abs() < 1e-15);
        assert!(probability_bounds(ProbabilityQuery::GaussianTail { t: 1.0, sigma: 2.0 }).is_err());
        assert_eq!(probability_bounds(ProbabilityQuery::Pinsker { d_kl: 0.0 }).unwrap(), 0.0);
    }

    #[test]
    fn verdicts() {
        assert_eq!(Verdict::judge(0.01, 0.06, 0.0, 0.02), Verdict::Pass);
        assert_eq!(Verdict::judge(0.1, 0.06, 0.0, 0.02), Verdict::Fail);
        assert_eq!(Verdict::judge(0.1, 0.06, 0.0, 0.08), Verdict::Inconclusive);
        assert_eq!(Verdict::judge(0.01, 0.06, 0.0, 0.08), Verdict::Inconclusive);
    }

    #[test]
    fn lemma_checks_reject_vacuous_regime() {
        assert!(matches!(lemma11_check(2, 0.1, 1.0, 1000, 1), Err(Error::Precondition(_))));
        assert!(lemma12_check(0.001, &[0.0, 0.0], &[0.01, 0.0], 1.0, 1000, 1).is_err());
    }

    #[test]
    fn small_lemma11_run() {
        let r = lemma11_check(2, 1e-3, 1.0, 20_000, 3).unwrap();
        assert_eq!(r.tau, 28);
        assert_eq!(r.rejection_frequency, 0.0);
        assert!(r.rejection_pass);
        assert_ne!(r.verdict, Verdict::Fail, "{r:?}");
    }
}
