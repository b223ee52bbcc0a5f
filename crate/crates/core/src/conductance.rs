//! Finite-state surrogates of the walks and exact flow computations on them,
//! plus Monte Carlo checks of isoperimetry and the overlap property on bodies.

use crate::diagnostics::{two_sample_tv, BinGrid, TvEstimate};
use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{robust_interior_contains, ConvexBody, Norm, UniformSampler};
use crate::schemes::{random_direction, MarkovScheme};
use crate::seed;
use crate::special::normal_interval_mass;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use std::io::Write;

/// Largest chain for exact subset enumeration.
pub const MAX_EXACT_STATES: usize = 22;

/// A finite Markov chain with a stationary distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteChain {
    /// Cell centres, when the chain discretizes a body.
    states: Vec<Vec<f64>>,
    p: DMatrix<f64>,
    pi: Vec<f64>,
}

impl DiscreteChain {
    /// A chain from a row-stochastic matrix and a distribution that must be
    /// stationary for it (checked to 1e-10).
    pub fn from_matrix(p: DMatrix<f64>, pi: Vec<f64>) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return Err(invalid("P", "must be a non-empty square matrix"));
        }
        check_dim(n, pi.len())?;
        if p.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(invalid("P", "entries must be finite and non-negative"));
        }
        let chain = Self { states: Vec::new(), p, pi };
        if chain.row_sum_defect() > 1e-12 {
            return Err(invalid("P", "rows must sum to 1"));
        }
        if (chain.pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("pi", "must sum to 1"));
        }
        if chain.stationarity_defect() > 1e-10 {
            return Err(invalid("pi", "is not stationary for P"));
        }
        Ok(chain)
    }

    fn with_states(states: Vec<Vec<f64>>, p: DMatrix<f64>) -> Self {
        let n = states.len();
        Self {
            states,
            p,
            pi: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// `max_i |Σ_j P_ij − 1|`.
    pub fn row_sum_defect(&self) -> f64 {
        self.p.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max_ij |π_i P_ij − π_j P_ji|`.
    pub fn reversibility_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.pi[i] * self.p[(i, j)] - self.pi[j] * self.p[(j, i)]).abs());
            }
        }
        worst
    }

    /// `‖πP − π‖_∞`.
    pub fn stationarity_defect(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|j| ((0..n).map(|i| self.pi[i] * self.p[(i, j)]).sum::<f64>() - self.pi[j]).abs())
            .fold(0.0, f64::max)
    }

    /// The chain of `τ` steps, `P^τ`.
    pub fn power(&self, tau: u32) -> Result<Self> {
        if tau == 0 {
            return Err(invalid("tau", "must be at least 1"));
        }
        let mut out = self.p.clone();
        for _ in 1..tau {
            out = &out * &self.p;
        }
        Ok(Self {
            states: self.states.clone(),
            p: out,
            pi: self.pi.clone(),
        })
    }

    /// `W_ij = π_i P_ij`.
    fn flow_matrix(&self) -> DMatrix<f64> {
        let mut w = self.p.clone();
        for (i, mut row) in w.row_iter_mut().enumerate() {
            row *= self.pi[i];
        }
        w
    }

    /// Distribution after one step from `mu`.
    pub fn step_distribution(&self, mu: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|j| (0..n).map(|i| mu[i] * self.p[(i, j)]).sum()).collect()
    }

    /// `d_TV(μ_k, π)` for `k = 0..=k_max`, by repeated vector–matrix products.
    pub fn tv_trajectory(&self, mu0: &[f64], k_max: usize) -> Result<Vec<f64>> {
        check_dim(self.len(), mu0.len())?;
        let mut mu = mu0.to_vec();
        let mut out = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            if k > 0 {
                mu = self.step_distribution(&mu);
            }
            out.push(0.5 * mu.iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).sum::<f64>());
        }
        Ok(out)
    }

    /// Smallest eigenvalue of `Π^{1/2} P Π^{-1/2}` (symmetric for reversible
    /// chains). Non-negative means the flow matrix is positive semidefinite.
    pub fn min_eigenvalue(&self) -> f64 {
        self.symmetrized().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn symmetrized(&self) -> SymmetricEigen<f64, nalgebra::Dyn, > {
        let n = self.len();
        let sq: Vec<f64> = self.pi.iter().map(|p| p.sqrt()).collect();
        let a = DMatrix::from_fn(n, n, |i, j| sq[i] * self.p[(i, j)] / sq[j]);
        let s = (&a + a.transpose()) * 0.5;
        SymmetricEigen::new(s)
    }
}

struct Grid {
    lo: Vec<f64>,
    width: Vec<f64>,
}

impl Grid {
    fn new(body: &ConvexBody, cells: &[usize]) -> Self {
        let (lo, hi) = body.bounding_box();
        Self {
            lo: lo.to_vec(),
            width: (0..lo.len()).map(|i| (hi[i] - lo[i]) / cells[i] as f64).collect(),
        }
    }

    fn center(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(i, &j)| self.lo[i] + (j as f64 + 0.5) * self.width[i])
            .collect()
    }
}

/// In-body grid cells and, for each state, its grid multi-index.
fn grid_states(body: &ConvexBody, cells: &[usize]) -> Result<(Grid, Vec<Vec<usize>>, Vec<Vec<f64>>)> {
    let n = body.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::Unsupported("discretizations are limited to dimensions 2 and 3".into()));
    }
    check_dim(n, cells.len())?;
    if cells.contains(&0) {
        return Err(invalid("cells", "need at least one cell per axis"));
    }
    let grid = Grid::new(body, cells);
    let mut idx = Vec::new();
    let mut centers = Vec::new();
    let total: usize = cells.iter().product();
    for flat in 0..total {
        let mut m = vec![0; n];
        let mut r = flat;
        for (slot, &k) in m.iter_mut().zip(cells).rev() {
            *slot = r % k;
            r /= k;
        }
        let c = grid.center(&m);
        if body.member(&c) {
            idx.push(m);
            centers.push(c);
        }
    }
    if centers.is_empty() {
        return Err(Error::InvalidBody("no grid cell centre lies inside the body".into()));
    }
    if centers.len() < 2 {
        return Err(invalid("cells", "the discretization must have at least 2 states"));
    }
    Ok((grid, idx, centers))
}

/// States sharing every grid index except along `axis`, keyed by state.
fn lines(idx: &[Vec<usize>], axis: usize) -> Vec<Vec<usize>> {
    let mut groups: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
    for (s, m) in idx.iter().enumerate() {
        let mut key = m.clone();
        key[axis] = usize::MAX;
        groups.entry(key).or_default().push(s);
    }
    let mut out = vec![Vec::new(); idx.len()];
    for members in groups.values() {
        for &s in members {
            out[s] = members.clone();
        }
    }
    out
}

/// Coordinate Hit-and-Run on the in-body cells of a `cells`-per-axis grid over
/// the bounding box: pick an axis, then a uniform in-body cell on that grid line
/// (the current cell included).
pub fn discretize_chr(body: &ConvexBody, cells: usize) -> Result<DiscreteChain> {
    discretize_chr_grid(body, &vec![cells; body.dim()])
}

/// [`discretize_chr`] with a cell count per axis.
pub fn discretize_chr_grid(body: &ConvexBody, cells: &[usize]) -> Result<DiscreteChain> {
    let (_, idx, centers) = grid_states(body, cells)?;
    let n = body.dim();
    let m = centers.len();
    let mut p = DMatrix::zeros(m, m);
    for axis in 0..n {
        for (s, line) in lines(&idx, axis).iter().enumerate() {
            let w = 1.0 / (n as f64 * line.len() as f64);
            for &t in line {
                p[(s, t)] += w;
            }
        }
    }
    Ok(DiscreteChain::with_states(centers, p))
}

/// The Gaussian coordinate walk on grid cells: pick an axis, move to the cell
/// on that line receiving the `N(0, σ²)` mass of its interval, stay put with
/// the mass that falls outside the body.
pub fn discretize_gaussian(body: &ConvexBody, cells: usize, sigma: f64) -> Result<DiscreteChain> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let (grid, idx, centers) = grid_states(body, &vec![cells; body.dim()])?;
    let n = body.dim();
    let m = centers.len();
    let mut p = DMatrix::zeros(m, m);
    for axis in 0..n {
        let w = grid.width[axis];
        for (s, line) in lines(&idx, axis).iter().enumerate() {
            for &t in line {
                if t == s {
                    continue;
                }
                let d = (idx[t][axis] as f64 - idx[s][axis] as f64) * w;
                p[(s, t)] += normal_interval_mass(d - 0.5 * w, d + 0.5 * w, sigma) / n as f64;
            }
        }
    }
    for s in 0..m {
        let out: f64 = p.row(s).sum();
        p[(s, s)] = 1.0 - out;
    }
    Ok(DiscreteChain::with_states(centers, p))
}

fn check_indices(chain: &DiscreteChain, set: &[usize]) -> Result<()> {
    match set.iter().find(|&&i| i >= chain.len()) {
        Some(i) => Err(invalid("subset", format!("state {i} out of range for {} states", chain.len()))),
        None => Ok(()),
    }
}

/// `Φ(A, B) = Σ_{i∈A} π_i Σ_{j∈B} P_ij`.
pub fn ergodic_flow(chain: &DiscreteChain, a: &[usize], b: &[usize]) -> Result<f64> {
    check_indices(chain, a)?;
    check_indices(chain, b)?;
    Ok(a.iter()
        .map(|&i| chain.pi[i] * b.iter().map(|&j| chain.p[(i, j)]).sum::<f64>())
        .sum())
}

/// `Φ(A) = Φ(A, S − A)` for a membership mask.
pub fn cut_flow(chain: &DiscreteChain, in_a: &[bool]) -> Result<f64> {
    check_dim(chain.len(), in_a.len())?;
    let (a, b) = split(in_a);
    ergodic_flow(chain, &a, &b)
}

fn split(in_a: &[bool]) -> (Vec<usize>, Vec<usize>) {
    (0..in_a.len()).partition(|&i| in_a[i])
}

/// `Q(A)`.
pub fn measure(chain: &DiscreteChain, in_a: &[bool]) -> f64 {
    in_a.iter().zip(&chain.pi).filter(|(a, _)| **a).map(|(_, p)| p).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SConductanceMode {
    /// All subsets of the states.
    Exact,
    /// All subsets of the atom-free lift, in which each state is an interval of
    /// length `π_i` and subsets may cover a state fractionally. Exact when the
    /// flow matrix is positive semidefinite (checked).
    ExactLifted,
    /// Sweep cuts along the second eigenvector plus random subsets; an upper
    /// bound.
    Sweep { random_subsets: usize, seed: u64 },
}

/// The minimizing set of an s-conductance computation.
#[derive(Clone, Debug, PartialEq)]
pub struct SConductance {
    pub value: f64,
    pub s: f64,
    pub subset: Vec<bool>,
    /// A state covered fractionally, with its covered fraction (lifted mode).
    pub fractional: Option<(usize, f64)>,
    pub measure: f64,
    pub flow: f64,
    /// True when `value` is only an upper bound on the infimum.
    pub upper_bound: bool,
}

impl SConductance {
    /// Bitmask of the subset, state 0 in the lowest bit.
    pub fn subset_bits(&self) -> u64 {
        self.subset
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .fold(0u64, |m, (i, _)| m | (1 << i))
    }

    /// CSV with header `subset_bits,measure,flow,ratio`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "subset_bits,measure,flow,ratio")?;
        writeln!(w, "{},{},{},{}", self.subset_bits(), self.measure, self.flow, self.value)?;
        Ok(())
    }
}

const HALF: f64 = 0.5 + 1e-12;

/// `inf_{s < Q(A) ≤ 1/2} Φ(A)/(Q(A) − s)`.
pub fn s_conductance(chain: &DiscreteChain, s: f64, mode: SConductanceMode) -> Result<SConductance> {
    if !(0.0..0.5).contains(&s) {
        return Err(invalid("s", "must lie in [0, 1/2)"));
    }
    match mode {
        SConductanceMode::Exact => exact(chain, s, false),
        SConductanceMode::ExactLifted => {
            if chain.min_eigenvalue() < -1e-12 {
                return Err(Error::Precondition(
                    "the lifted infimum is only exact for chains with positive semidefinite flow matrix".into(),
                ));
            }
            exact(chain, s, true)
        }
        SConductanceMode::Sweep { random_subsets, seed } => sweep(chain, s, random_subsets, seed),
    }
}

struct Incremental<'a> {
    w: &'a DMatrix<f64>,
    rows: Vec<f64>,
    inside: Vec<bool>,
    row_in: Vec<f64>,
    col_in: Vec<f64>,
    q: f64,
    phi: f64,
}

impl<'a> Incremental<'a> {
    fn new(w: &'a DMatrix<f64>) -> Self {
        let n = w.nrows();
        Self {
            w,
            rows: w.row_iter().map(|r| r.sum()).collect(),
            inside: vec![false; n],
            row_in: vec![0.0; n],
            col_in: vec![0.0; n],
            q: 0.0,
            phi: 0.0,
        }
    }

    /// Flow out of `t` to states outside `A ∪ {t}`, for `t ∉ A`.
    fn out_of(&self, t: usize) -> f64 {
        self.rows[t] - self.row_in[t] - self.w[(t, t)]
    }

    fn toggle(&mut self, t: usize, pi_t: f64) {
        let wtt = self.w[(t, t)];
        if self.inside[t] {
            let row = self.row_in[t] - wtt;
            let col = self.col_in[t] - wtt;
            self.phi += col - (self.rows[t] - row - wtt);
            self.q -= pi_t;
            for k in 0..self.rows.len() {
                self.row_in[k] -= self.w[(k, t)];
                self.col_in[k] -= self.w[(t, k)];
            }
        } else {
            self.phi += self.out_of(t) - self.col_in[t];
            self.q += pi_t;
            for k in 0..self.rows.len() {
                self.row_in[k] += self.w[(k, t)];
                self.col_in[k] += self.w[(t, k)];
            }
        }
        self.inside[t] = !self.inside[t];
    }
}

fn exact(chain: &DiscreteChain, s: f64, lifted: bool) -> Result<SConductance> {
    let n = chain.len();
    if n > MAX_EXACT_STATES {
        return Err(Error::Unsupported(format!(
            "exact s-conductance enumerates subsets of at most {MAX_EXACT_STATES} states; use sweep mode"
        )));
    }
    let w = chain.flow_matrix();
    let mut inc = Incremental::new(&w);
    let mut best: Option<(f64, u64, Option<(usize, f64)>)> = None;
    let mut consider = |ratio: f64, mask: u64, frac: Option<(usize, f64)>| {
        if best.as_ref().is_none_or(|b| ratio < b.0) {
            best = Some((ratio, mask, frac));
        }
    };
    let mut mask = 0u64;
    for g in 1u64..(1u64 << n) {
        let t = g.trailing_zeros() as usize;
        inc.toggle(t, chain.pi[t]);
        mask ^= 1 << t;
        if inc.q > s && inc.q <= HALF {
            consider(inc.phi / (inc.q - s), mask, None);
        }
        if lifted && inc.q < 0.5 {
            for u in 0..n {
                if inc.inside[u] || inc.q + chain.pi[u] <= 0.5 {
                    continue;
                }
                let a = (0.5 - inc.q) / chain.pi[u];
                let phi = inc.phi + a * (inc.out_of(u) - inc.col_in[u]) + w[(u, u)] * a * (1.0 - a);
                consider(phi / (0.5 - s), mask, Some((u, a)));
            }
        }
    }
    // the empty set is reached only at g = 0 and is never admissible
    let (_, mask, frac) = best.ok_or(Error::NoAdmissibleSubset { s })?;
    let subset: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
    // recompute the minimizer from scratch to shed incremental rounding
    let coverage: Vec<f64> = (0..n)
        .map(|i| match frac {
            Some((u, a)) if u == i => a,
            _ => subset[i] as u8 as f64,
        })
        .collect();
    let (flow, q) = fractional_flow(&w, &chain.pi, &coverage);
    Ok(SConductance {
        value: flow / (q - s),
        s,
        subset,
        fractional: frac,
        measure: q,
        flow,
        upper_bound: false,
    })
}

/// Flow `Σ W_ij a_i (1 − a_j)` and measure `Σ π_i a_i` of a fractional set.
fn fractional_flow(w: &DMatrix<f64>, pi: &[f64], a: &[f64]) -> (f64, f64) {
    let n = pi.len();
    let mut flow = 0.0;
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            flow += w[(i, j)] * a[i] * (1.0 - a[j]);
        }
    }
    (flow, pi.iter().zip(a).map(|(p, x)| p * x).sum())
}

fn sweep(chain: &DiscreteChain, s: f64, random_subsets: usize, seed: u64) -> Result<SConductance> {
    let n = chain.len();
    let w = chain.flow_matrix();
    let mut orders: Vec<Vec<usize>> = Vec::new();
    if n >= 2 {
        let eig = chain.symmetrized();
        let mut by_value: Vec<usize> = (0..n).collect();
        by_value.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let v = eig.eigenvectors.column(by_value[1]);
        let f: Vec<f64> = (0..n).map(|i| v[i] / chain.pi[i].sqrt()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
        orders.push(order.clone());
        order.reverse();
        orders.push(order);
    }
    let mut rng = seed::rng(seed, "sweep");
    for _ in 0..random_subsets {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        orders.push(order);
    }
    let mut best: Option<(f64, Vec<bool>)> = None;
    for order in &orders {
        let mut inc = Incremental::new(&w);
        for &t in order {
            inc.toggle(t, chain.pi[t]);
            if inc.q > HALF {
                break;
            }
            if inc.q > s {
                let r = inc.phi / (inc.q - s);
                if best.as_ref().is_none_or(|b| r < b.0) {
                    best = Some((r, inc.inside.clone()));
                }
            }
        }
    }
    let (_, subset) = best.ok_or(Error::NoAdmissibleSubset { s })?;
    let flow = cut_flow(chain, &subset)?;
    let q = measure(chain, &subset);
    Ok(SConductance {
        value: flow / (q - s),
        s,
        subset,
        fractional: None,
        measure: q,
        flow,
        upper_bound: true,
    })
}

/// `sup_{Q(A) ≤ s} |μ₀(A) − Q(A)|` over fractional sets of the atom-free lift:
/// a fractional knapsack on the density ratios `μ₀ᵢ/πᵢ`.
pub fn lifted_h_s(mu0: &[f64], pi: &[f64], s: f64) -> Result<f64> {
    check_dim(pi.len(), mu0.len())?;
    let fill = |mut order: Vec<usize>, sign: f64| {
        order.sort_by(|&a, &b| (sign * mu0[b] / pi[b]).total_cmp(&(sign * mu0[a] / pi[a])));
        let (mut cap, mut gain) = (s, 0.0);
        for i in order {
            let excess = sign * (mu0[i] / pi[i] - 1.0);
            if excess <= 0.0 || cap <= 0.0 {
                break;
            }
            let take = cap.min(pi[i]);
            gain += take * excess;
            cap -= take;
        }
        gain
    };
    let idx: Vec<usize> = (0..pi.len()).collect();
    Ok(fill(idx.clone(), 1.0).max(fill(idx, -1.0)))
}

/// One-step versus τ-step flow across a cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiStepFlow {
    pub one_step: f64,
    pub tau_step: f64,
    pub tau: u32,
    /// `one_step ≥ tau_step/τ` up to 1e-14.
    pub holds: bool,
}

/// Compares `Φ_P(A)` with `Φ_{P^τ}(A)/τ`.
pub fn multi_step_flow_check(chain: &DiscreteChain, in_a: &[bool], tau: u32) -> Result<MultiStepFlow> {
    let one_step = cut_flow(chain, in_a)?;
    let tau_step = cut_flow(&chain.power(tau)?, in_a)?;
    Ok(MultiStepFlow {
        one_step,
        tau_step,
        tau,
        holds: one_step + 1e-14 >= tau_step / tau as f64,
    })
}

/// Monte Carlo estimate of both sides of the isoperimetric inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct IsoperimetryReport {
    /// `vol(K − (K₁ ∪ K₂))/vol(K)`.
    pub lhs_estimate: f64,
    pub lhs_ci: f64,
    /// `2δ/(D − δ)·min(vol K₁, vol K₂)/vol(K)`.
    pub rhs_estimate: f64,
    pub rhs_ci: f64,
    pub diameter: f64,
    pub diameter_exact: bool,
    /// `δ ≥ D`: the inequality has no content.
    pub vacuous: bool,
    pub pass: bool,
}

/// A measurable subset of a body, given by its indicator.
pub type Region<'a> = &'a (dyn Fn(&[f64]) -> bool + Sync);

/// Pairs sampled to falsify the distance precondition.
pub const DISTANCE_PAIRS: usize = 10_000;

/// Checks `vol(K − (K₁∪K₂)) ≥ 2δ/(D−δ)·min(vol K₁, vol K₂)` by uniform sampling.
pub fn isoperimetry_check(
    body: &ConvexBody,
    k1: Region<'_>,
    k2: Region<'_>,
    delta: f64,
    norm: Norm,
    samples: usize,
    seed: u64,
) -> Result<IsoperimetryReport> {
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    if samples < 100 {
        return Err(invalid("samples", "need at least 100"));
    }
    let mut rng = seed::rng(seed, "isoperimetry");
    let sampler = UniformSampler::for_body(body, &mut rng);
    let pts = sampler.samples(body, samples, &mut rng)?;
    let mut in1 = Vec::new();
    let mut in2 = Vec::new();
    let mut rest = 0usize;
    for x in &pts {
        match (k1(x), k2(x)) {
            (true, true) => return Err(Error::Precondition("K₁ and K₂ overlap".into())),
            (true, false) => in1.push(x),
            (false, true) => in2.push(x),
            (false, false) => rest += 1,
        }
    }
    if !in1.is_empty() && !in2.is_empty() {
        for _ in 0..DISTANCE_PAIRS {
            let a = in1[rng.random_range(0..in1.len())];
            let b = in2[rng.random_range(0..in2.len())];
            if norm.dist(a, b) < delta * (1.0 - 1e-12) {
                return Err(Error::Precondition(format!(
                    "K₁ and K₂ contain points at distance {} < δ = {delta}",
                    norm.dist(a, b)
                )));
            }
        }
    }
    let nf = samples as f64;
    let ci = |p: f64| 3.0 * (p * (1.0 - p) / nf).sqrt();
    let (p1, p2, p0) = (in1.len() as f64 / nf, in2.len() as f64 / nf, rest as f64 / nf);
    let d = body.diameter(norm);
    let vacuous = delta >= d.value;
    let factor = if vacuous { f64::INFINITY } else { 2.0 * delta / (d.value - delta) };
    let pmin = p1.min(p2);
    let (rhs, rhs_ci) = if pmin == 0.0 { (0.0, 0.0) } else { (factor * pmin, factor * ci(pmin)) };
    let lhs_ci = ci(p0);
    Ok(IsoperimetryReport {
        lhs_estimate: p0,
        lhs_ci,
        rhs_estimate: rhs,
        rhs_ci,
        diameter: d.value,
        diameter_exact: d.exact,
        vacuous,
        pass: p0 + lhs_ci >= rhs - rhs_ci,
    })
}

/// `νδ/(4(D − δ))`.
pub fn lemma_kr_bound(nu: f64, delta: f64, diameter: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 0.5) {
        return Err(invalid("nu", "must lie in (0, 1/2)"));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    if diameter < 2.0 * delta {
        return Err(invalid("D", "must be at least 2δ"));
    }
    Ok(nu * delta / (4.0 * (diameter - delta)))
}

/// Empirical overlap of τ-step kernels on the robust interior.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapReport {
    pub max_tv_estimate: f64,
    /// `1 − max_tv_estimate`.
    pub nu_estimate: f64,
    pub pairs: usize,
    /// Largest noise floor among the per-pair estimates.
    pub noise_floor: f64,
    pub pass: bool,
}

/// Parameters of [`overlap_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapOptions {
    /// `K′ = K_r`.
    pub r: f64,
    pub delta: f64,
    pub pairs: usize,
    pub samples_per_kernel: usize,
    /// Pass when `ν_estimate ≥ nu_threshold`.
    pub nu_threshold: f64,
    pub seed: u64,
}

fn kernel_samples<S: MarkovScheme>(
    scheme: &S,
    body: &ConvexBody,
    x: &[f64],
    count: usize,
    rng: &mut seed::WalkRng,
) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|_| {
            let mut y = x.to_vec();
            scheme.step(body, &mut y, rng)?;
            Ok(y)
        })
        .collect()
}

/// Samples pairs `u ∈ K_r`, `v = u + δ·d ∈ K_r` for random unit `d` and
/// compares one transition of `scheme` from each. The bin grid of each pair is
/// the bounding box of an independent pilot run, fixed before the compared
/// samples are drawn.
pub fn overlap_check<S: MarkovScheme>(body: &ConvexBody, scheme: &S, opts: &OverlapOptions) -> Result<OverlapReport> {
    if !(opts.delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    if opts.samples_per_kernel < 100 {
        return Err(invalid("samples_per_kernel", "need at least 100"));
    }
    let n = body.dim();
    let mut rng = seed::rng(opts.seed, "overlap");
    let sampler = UniformSampler::for_body(body, &mut rng);
    let mut estimates: Vec<TvEstimate> = Vec::new();
    for pair in 0..opts.pairs {
        let mut u = None;
        for _ in 0..100_000 {
            let x = sampler.sample(body, &mut rng)?;
            if robust_interior_contains(body, &x, opts.r)? {
                u = Some(x);
                break;
            }
        }
        let u = u.ok_or_else(|| Error::Precondition("K′ appears to be empty".into()))?;
        let mut v = None;
        for _ in 0..1000 {
            let d = random_direction(n, &mut rng);
            let cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + opts.delta * b).collect();
            if body.member(&cand) && robust_interior_contains(body, &cand, opts.r)? {
                v = Some(cand);
                break;
            }
        }
        let Some(v) = v else { continue };
        let mut pilot_rng = seed::stream(opts.seed, "overlap-pilot", pair as u64, 0);
        let pilot_count = (opts.samples_per_kernel / 10).max(100);
        let mut pilot = kernel_samples(scheme, body, &u, pilot_count, &mut pilot_rng)?;
        pilot.extend(kernel_samples(scheme, body, &v, pilot_count, &mut pilot_rng)?);
        let (blo, bhi) = body.bounding_box();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for x in &pilot {
            for i in 0..n {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
        for i in 0..n {
            let pad = 0.1 * (hi[i] - lo[i]).max(1e-12 * body.declared_r());
            lo[i] = (lo[i] - pad).max(blo[i]);
            hi[i] = (hi[i] + pad).min(bhi[i]);
        }
        let grid = BinGrid::new(lo, hi, vec![BinGrid::default_bins(opts.samples_per_kernel, n); n])?;
        let mut krng = seed::stream(opts.seed, "overlap-kernel", pair as u64, 0);
        let from_u = kernel_samples(scheme, body, &u, opts.samples_per_kernel, &mut krng)?;
        let from_v = kernel_samples(scheme, body, &v, opts.samples_per_kernel, &mut krng)?;
        estimates.push(two_sample_tv(&from_u, &from_v, &grid)?);
    }
    if estimates.is_empty() {
        return Err(Error::Precondition("no admissible pair (u, v) was found in K′".into()));
    }
    let max_tv = estimates.iter().map(|e| e.value).fold(0.0, f64::max);
    let floor = estimates.iter().map(|e| e.noise_floor()).fold(0.0, f64::max);
    Ok(OverlapReport {
        max_tv_estimate: max_tv,
        nu_estimate: 1.0 - max_tv,
        pairs: estimates.len(),
        noise_floor: floor,
        pass: 1.0 - max_tv >= opts.nu_threshold,
    })
}

/// An exactly verified overlap property of a discrete chain: for states of
/// `K′` whose centres are within `δ`, the rows of `P` are within `1 − ν` in TV.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapCertificate {
    pub k_prime: Vec<bool>,
    /// `1 − π(K′)`.
    pub epsilon: f64,
    pub delta: f64,
    pub nu: f64,
    /// Number of state pairs within `δ`.
    pub pairs: usize,
}

/// Computes the best `ν` for `(K′, δ)` on a chain built from a body.
pub fn discrete_overlap(chain: &DiscreteChain, k_prime: &[bool], delta: f64) -> Result<OverlapCertificate> {
    check_dim(chain.len(), k_prime.len())?;
    if chain.states.is_empty() {
        return Err(Error::Unsupported("the chain has no state coordinates".into()));
    }
    let members: Vec<usize> = (0..chain.len()).filter(|&i| k_prime[i]).collect();
    if members.is_empty() {
        return Err(Error::Precondition("K′ is empty".into()));
    }
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            if Norm::L2.dist(&chain.states[i], &chain.states[j]) <= delta {
                pairs += 1;
                let tv = 0.5 * (0..chain.len()).map(|k| (chain.p[(i, k)] - chain.p[(j, k)]).abs()).sum::<f64>();
                worst = worst.max(tv);
            }
        }
    }
    Ok(OverlapCertificate {
        k_prime: k_prime.to_vec(),
        epsilon: 1.0 - measure(chain, k_prime),
        delta,
        nu: 1.0 - worst,
        pairs,
    })
}

/// Exact flow across a cut against the overlap-based lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowBoundCheck {
    pub flow: f64,
    /// `νδ/(4(D−δ))·min(π(T₁), π(T₂))`, `Tᵢ = Sᵢ ∩ K′`.
    pub bound_t: f64,
    /// `νδ/(4(D−δ))·min(π(S₁) − ε, π(S₂) − ε)`, clamped at 0.
    pub bound: f64,
    pub pass: bool,
}

/// Compares `Φ(S₁)` with the bounds implied by an overlap certificate.
///
/// A certificate with `ν ≥ 1/2` also certifies every smaller `ν`; the bound is
/// evaluated just below 1/2 in that case.
pub fn flow_vs_bound_check(
    chain: &DiscreteChain,
    s1: &[bool],
    cert: &OverlapCertificate,
    diameter: f64,
) -> Result<FlowBoundCheck> {
    check_dim(chain.len(), s1.len())?;
    check_dim(chain.len(), cert.k_prime.len())?;
    if !(cert.nu > 0.0) || cert.pairs == 0 {
        return Err(Error::Precondition("the overlap property has not been established".into()));
    }
    let nu = cert.nu.min(0.5 - 1e-9);
    let coef = lemma_kr_bound(nu, cert.delta, diameter)?;
    let flow = cut_flow(chain, s1)?;
    let t1: Vec<bool> = s1.iter().zip(&cert.k_prime).map(|(a, k)| *a && *k).collect();
    let t2: Vec<bool> = s1.iter().zip(&cert.k_prime).map(|(a, k)| !*a && *k).collect();
    let bound_t = coef * measure(chain, &t1).min(measure(chain, &t2));
    let m1 = measure(chain, s1);
    let bound = (coef * (m1 - cert.epsilon).min(1.0 - m1 - cert.epsilon)).max(0.0);
    Ok(FlowBoundCheck {
        flow,
        bound_t,
        bound,
        pass: flow + 1e-14 >= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::random_polytope;
    use crate::schemes::Scheme;

    fn two_state(p: f64) -> DiscreteChain {
        DiscreteChain::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0 - p, p, p, 1.0 - p]), vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn two_by_two_grid() {
        let b = ConvexBody::cube(2, 1.0).unwrap();
        let c = discretize_chr(&b, 2).unwrap();
        assert_eq!(c.len(), 4);
        for i in 0..4 {
            assert!((c.transition()[(i, i)] - 0.5).abs() < 1e-15);
            let off: Vec<f64> = (0..4).filter(|&j| j != i).map(|j| c.transition()[(i, j)]).collect();
            assert_eq!(off.iter().filter(|&&v| (v - 0.25).abs() < 1e-15).count(), 2);
            assert_eq!(off.iter().filter(|&&v| v == 0.0).count(), 1);
        }
    }

    #[test]
    fn collinear_grid() {
        let b = ConvexBody::boxed(vec![0.0, 0.0], vec![1.5, 1.0], 1.5).unwrap();
        let c = discretize_chr(&b, 3).unwrap();
        assert_eq!(c.len(), 9);
        let c = discretize_chr_grid(&ConvexBody::cube(2, 1.0).unwrap(), &[4, 1]).unwrap();
        assert_eq!(c.len(), 4);
        for i in 0..4 {
            assert!((c.transition()[(i, i)] - (0.5 + 0.125)).abs() < 1e-15);
        }
        assert!(discretize_chr(&ConvexBody::cube(2, 1.0).unwrap(), 1).is_err());
    }

    #[test]
    fn chains_are_reversible_and_stationary() {
        let mut rng = seed::rng(1, "rev");
        let k = random_polytope(2, 5, 2.0, &mut rng).unwrap();
        for c in [discretize_chr(&k, 8).unwrap(), discretize_gaussian(&k, 8, 0.3).unwrap()] {
            assert!(c.reversibility_defect() <= 1e-12);
            assert!(c.stationarity_defect() <= 1e-10);
            assert!(c.row_sum_defect() <= 1e-12);
        }
    }

    #[test]
    fn flows() {
        let c = two_state(0.3);
        assert_eq!(ergodic_flow(&c, &[0, 1], &[]).unwrap(), 0.0);
        assert!((ergodic_flow(&c, &[0], &[1]).unwrap() - 0.15).abs() < 1e-15);
        assert!(ergodic_flow(&c, &[2], &[0]).is_err());
        let r = s_conductance(&c, 0.0, SConductanceMode::Exact).unwrap();
        assert!((r.value - 0.3).abs() < 1e-15);
    }

    #[test]
    fn exact_matches_brute_force_and_sweep_bounds_it() {
        let mut rng = seed::rng(2, "sc");
        let k = random_polytope(2, 4, 2.0, &mut rng).unwrap();
        let c = discretize_chr(&k, 4).unwrap();
        assert!(c.len() <= MAX_EXACT_STATES);
        for s in [0.0, 0.05, 0.2] {
            let e = s_conductance(&c, s, SConductanceMode::Exact).unwrap();
            let mut brute = f64::INFINITY;
            for mask in 1u64..(1 << c.len()) {
                let a: Vec<bool> = (0..c.len()).map(|i| mask >> i & 1 == 1).collect();
                let q = measure(&c, &a);
                if q > s && q <= HALF {
                    brute = brute.min(cut_flow(&c, &a).unwrap() / (q - s));
                }
            }
            assert!((e.value - brute).abs() <= 1e-12 * brute.max(1.0));
            let sw = s_conductance(&c, s, SConductanceMode::Sweep { random_subsets: 50, seed: 3 }).unwrap();
            assert!(sw.upper_bound && sw.value >= e.value - 1e-12);
            let l = s_conductance(&c, s, SConductanceMode::ExactLifted).unwrap();
            assert!(l.value <= e.value + 1e-12);
        }
    }

    #[test]
    fn monotone_in_s() {
        let c = discretize_chr(&ConvexBody::cube(2, 1.0).unwrap(), 4).unwrap();
        let mut last = 0.0;
        for s in [0.0, 0.1, 0.2, 0.3, 0.4] {
            let v = s_conductance(&c, s, SConductanceMode::Exact).unwrap().value;
            assert!(v >= last - 1e-12);
            last = v;
        }
        let third = DiscreteChain::from_matrix(DMatrix::from_element(3, 3, 1.0 / 3.0), vec![1.0 / 3.0; 3]).unwrap();
        assert!(matches!(
            s_conductance(&third, 0.4, SConductanceMode::Exact),
            Err(Error::NoAdmissibleSubset { .. })
        ));
    }

    #[test]
    fn lifted_h_s_greedy() {
        // μ₀ concentrated on one of four states: ratio 4 on mass 1/4
        let pi = [0.25; 4];
        let mu = [1.0, 0.0, 0.0, 0.0];
        assert!((lifted_h_s(&mu, &pi, 0.1).unwrap() - 0.3).abs() < 1e-15);
        assert!((lifted_h_s(&mu, &pi, 0.4).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn multi_step_flow_holds() {
        let c = discretize_gaussian(&ConvexBody::cube(2, 1.0).unwrap(), 4, 0.4).unwrap();
        let mut rng = seed::rng(4, "cuts");
        for _ in 0..20 {
            let a: Vec<bool> = (0..c.len()).map(|_| rng.random()).collect();
            for tau in 1..=5 {
                assert!(multi_step_flow_check(&c, &a, tau).unwrap().holds);
            }
        }
    }

    #[test]
    fn isoperimetry_on_box_slabs() {
        let b = ConvexBody::cube(2, 1.0).unwrap();
        let delta = 0.2;
        let k1 = move |x: &[f64]| x[0] <= -delta / 2.0;
        let k2 = move |x: &[f64]| x[0] >= delta / 2.0;
        let r = isoperimetry_check(&b, &k1, &k2, delta, Norm::L2, 100_000, 5).unwrap();
        assert!(r.pass && r.diameter_exact);
        assert!((r.lhs_estimate - delta / 2.0).abs() <= r.lhs_ci);
        let none = |_: &[f64]| false;
        let r = isoperimetry_check(&b, &none, &k2, delta, Norm::L2, 1000, 5).unwrap();
        assert_eq!(r.rhs_estimate, 0.0);
        assert!(r.pass);
        let close = |x: &[f64]| x[0] >= 0.0;
        assert!(isoperimetry_check(&b, &k1, &close, delta, Norm::L2, 1000, 5).is_err());
    }

    #[test]
    fn kr_bound_values() {
        assert!((lemma_kr_bound(0.25, 1.0, 2.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!(lemma_kr_bound(0.25, 1.0, 1.5).is_err());
        assert!(lemma_kr_bound(0.6, 0.1, 1.0).is_err());
    }

    #[test]
    fn overlap_extremes() {
        let b = ConvexBody::cube(2, 1.0).unwrap();
        let base = OverlapOptions {
            r: 0.3,
            delta: 1e-9,
            pairs: 1,
            samples_per_kernel: 20_000,
            nu_threshold: 0.5,
            seed: 6,
        };
        let same = overlap_check(&b, &Scheme::GaussianWalk { sigma: 0.1 }, &base).unwrap();
        assert!(same.max_tv_estimate <= same.noise_floor + 0.02, "{same:?}");
        let far = OverlapOptions { delta: 0.5, ..base };
        let chr = overlap_check(&b, &Scheme::CoordinateHitAndRun, &far).unwrap();
        assert!(chr.max_tv_estimate > 0.8, "{chr:?}");
    }

    #[test]
    fn flow_bound_on_gaussian_chain() {
        let b = ConvexBody::cube(2, 1.0).unwrap();
        let c = discretize_gaussian(&b, 4, 0.5).unwrap().power(3).unwrap();
        let all = vec![true; c.len()];
        let cert = discrete_overlap(&c, &all, 0.6).unwrap();
        assert!(cert.nu > 0.0);
        let half: Vec<bool> = c.states().iter().map(|x| x[0] < 0.0).collect();
        let r = flow_vs_bound_check(&c, &half, &cert, 2.0 * 2f64.sqrt()).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
