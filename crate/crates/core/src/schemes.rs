//! Markov schemes on convex bodies: coordinate Hit-and-Run, the Gaussian
//! coordinate walk and its τ-step iterate, and classical Hit-and-Run.
//! Plus warm starts and a trajectory runner.

use crate::error::{invalid, Error, Result};
use crate::geometry::{chord, chord_axis, robust_interior_contains, ConvexBody, UniformSampler};
use crate::seed;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::io::Write;

/// A transition kernel on a body.
pub trait MarkovScheme: Send + Sync {
    fn name(&self) -> &str;

    /// Whether the kernel is reversible with respect to the uniform law on the
    /// body.
    fn reversible_wrt_uniform(&self) -> bool;

    /// Moves `x` in place. `x` must be a member of `body`.
    fn step<R: Rng + ?Sized>(&self, body: &ConvexBody, x: &mut [f64], rng: &mut R) -> Result<()>;
}

/// Parameters of the Gaussian coordinate walk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianWalkParams {
    pub sigma: f64,
    pub tau: usize,
}

impl GaussianWalkParams {
    pub fn new(sigma: f64, tau: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", "must be positive and finite"));
        }
        Ok(Self { sigma, tau })
    }

    /// `σ` with the default iterate count for dimension `n`.
    pub fn with_default_tau(n: usize, sigma: f64) -> Result<Self> {
        Self::new(sigma, default_tau(n))
    }
}

/// `⌈20 n ln n⌉`, at least 1.
pub fn default_tau(n: usize) -> usize {
    let n = n as f64;
    ((20.0 * n * n.ln()).ceil() as usize).max(1)
}

/// The schemes implemented here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    CoordinateHitAndRun,
    /// One Gaussian coordinate step with standard deviation `sigma`.
    GaussianWalk { sigma: f64 },
    /// `tau` Gaussian steps per transition.
    GaussianIterate(GaussianWalkParams),
    HitAndRun,
}

impl MarkovScheme for Scheme {
    fn name(&self) -> &str {
        match self {
            Scheme::CoordinateHitAndRun => "chr",
            Scheme::GaussianWalk { .. } => "gaussian",
            Scheme::GaussianIterate(_) => "gaussian-iterate",
            Scheme::HitAndRun => "hnr",
        }
    }

    fn reversible_wrt_uniform(&self) -> bool {
        true
    }

    fn step<R: Rng + ?Sized>(&self, body: &ConvexBody, x: &mut [f64], rng: &mut R) -> Result<()> {
        match *self {
            Scheme::CoordinateHitAndRun => chr_move(body, x, rng),
            Scheme::GaussianWalk { sigma } => gaussian_move(body, x, sigma, rng).map(|_| ()),
            Scheme::GaussianIterate(p) => {
                for _ in 0..p.tau {
                    gaussian_move(body, x, p.sigma, rng)?;
                }
                Ok(())
            }
            Scheme::HitAndRun => hnr_move(body, x, rng),
        }
    }
}

fn require_member(body: &ConvexBody, x: &[f64]) -> Result<()> {
    if body.contains(x)? {
        Ok(())
    } else {
        Err(Error::NotInBody)
    }
}

/// One coordinate Hit-and-Run step: a uniform axis, then a uniform point on the
/// chord through `x` along it.
pub fn chr_step<R: Rng + ?Sized>(body: &ConvexBody, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    require_member(body, x)?;
    let mut y = x.to_vec();
    chr_move(body, &mut y, rng)?;
    Ok(y)
}

pub(crate) fn chr_move<R: Rng + ?Sized>(body: &ConvexBody, x: &mut [f64], rng: &mut R) -> Result<()> {
    let i = rng.random_range(0..body.dim());
    let seg = chord_axis(body, x, i)?;
    let xi = x[i];
    // rounding can push x + t·eᵢ just outside; redraw t in that case
    loop {
        x[i] = xi + rng.random_range(seg.t_lo..=seg.t_hi);
        if body.member(x) {
            return Ok(());
        }
        x[i] = xi;
    }
}

/// The outcome of one Gaussian coordinate step.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianStep {
    pub point: Vec<f64>,
    pub axis: usize,
    pub accepted: bool,
}

/// One step of the Gaussian coordinate walk: propose `x + κ·eᵢ` with
/// `κ ~ N(0, σ²)`; stay put if the proposal leaves the body.
pub fn gaussian_step<R: Rng + ?Sized>(body: &ConvexBody, x: &[f64], sigma: f64, rng: &mut R) -> Result<GaussianStep> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", "must be positive and finite"));
    }
    require_member(body, x)?;
    let mut y = x.to_vec();
    let (axis, accepted) = gaussian_move(body, &mut y, sigma, rng)?;
    Ok(GaussianStep { point: y, axis, accepted })
}

pub(crate) fn gaussian_move<R: Rng + ?Sized>(
    body: &ConvexBody,
    x: &mut [f64],
    sigma: f64,
    rng: &mut R,
) -> Result<(usize, bool)> {
    let i = rng.random_range(0..body.dim());
    let kappa: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
    let xi = x[i];
    x[i] = xi + kappa;
    if body.member(x) {
        Ok((i, true))
    } else {
        x[i] = xi;
        Ok((i, false))
    }
}

/// The state after `τ` Gaussian steps.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianIterate {
    pub point: Vec<f64>,
    /// Whether any of the `τ` proposals was rejected.
    pub rejected: bool,
    /// How often each axis was chosen.
    pub axis_counts: Vec<u64>,
}

/// Applies `τ` Gaussian steps.
pub fn gaussian_iterate<R: Rng + ?Sized>(
    body: &ConvexBody,
    x: &[f64],
    params: GaussianWalkParams,
    rng: &mut R,
) -> Result<GaussianIterate> {
    let params = GaussianWalkParams::new(params.sigma, params.tau)?;
    require_member(body, x)?;
    let mut y = x.to_vec();
    let mut rejected = false;
    let mut axis_counts = vec![0u64; body.dim()];
    for _ in 0..params.tau {
        let (i, ok) = gaussian_move(body, &mut y, params.sigma, rng)?;
        axis_counts[i] += 1;
        rejected |= !ok;
    }
    Ok(GaussianIterate {
        point: y,
        rejected,
        axis_counts,
    })
}

/// One classical Hit-and-Run step along a uniformly random direction.
pub fn hnr_step<R: Rng + ?Sized>(body: &ConvexBody, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    require_member(body, x)?;
    let mut y = x.to_vec();
    hnr_move(body, &mut y, rng)?;
    Ok(y)
}

/// A uniform point of the unit sphere.
pub fn random_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

fn hnr_move<R: Rng + ?Sized>(body: &ConvexBody, x: &mut [f64], rng: &mut R) -> Result<()> {
    let d = random_direction(body.dim(), rng);
    let seg = chord(body, x, &d)?;
    let x0 = x.to_vec();
    loop {
        let t = rng.random_range(seg.t_lo..=seg.t_hi);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = x0[i] + t * d[i];
        }
        if body.member(x) {
            return Ok(());
        }
    }
}

/// An `M`-warm start: the uniform law on the scaled copy `M^{-1/n}·K`, whose
/// density with respect to the uniform law on `K` is exactly `M` on its support.
#[derive(Clone, Debug)]
pub struct WarmStart {
    m: f64,
    support: ConvexBody,
    sampler: UniformSampler,
}

impl WarmStart {
    /// Needs the origin in the interior of `body`; checked via a small ∞-ball.
    pub fn new(body: &ConvexBody, m: f64) -> Result<Self> {
        if !(m >= 1.0 && m.is_finite()) {
            return Err(invalid("M", "must be finite and at least 1"));
        }
        let origin = vec![0.0; body.dim()];
        let margin = 1e-6 * body.declared_r();
        if !robust_interior_contains(body, &origin, margin)? {
            return Err(Error::Precondition(
                "warm starts scale about the origin, which must be interior to the body".into(),
            ));
        }
        let support = body.scaled(m.powf(-1.0 / body.dim() as f64))?;
        let mut pilot = seed::rng(0, "warm-start-pilot");
        let sampler = UniformSampler::for_body(&support, &mut pilot);
        Ok(Self { m, support, sampler })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// The scaled copy the warm law is uniform on.
    pub fn support(&self) -> &ConvexBody {
        &self.support
    }

    pub fn is_exact(&self) -> bool {
        self.sampler.is_exact()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.sampler.sample(&self.support, rng)
    }
}

/// One draw from the `M`-warm start of `body`.
pub fn warm_start_sample<R: Rng + ?Sized>(body: &ConvexBody, m: f64, rng: &mut R) -> Result<Vec<f64>> {
    WarmStart::new(body, m)?.sample(rng)
}

/// Recorded states of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub chain_id: u64,
    /// Step index of each recorded state.
    pub steps: Vec<usize>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Runs `steps` transitions from `start`.
///
/// Without thinning the start and every subsequent state are recorded. With
/// thinning `k` the states after steps `k, 2k, …` are recorded.
pub fn run_chain<S: MarkovScheme, R: Rng + ?Sized>(
    scheme: &S,
    body: &ConvexBody,
    start: &[f64],
    steps: usize,
    rng: &mut R,
    thinning: Option<usize>,
) -> Result<Trajectory> {
    require_member(body, start)?;
    if thinning == Some(0) {
        return Err(invalid("thinning", "must be at least 1"));
    }
    let mut x = start.to_vec();
    let mut out = Trajectory {
        chain_id: 0,
        steps: Vec::new(),
        states: Vec::new(),
    };
    let k = thinning.unwrap_or(1);
    if thinning.is_none() {
        out.steps.push(0);
        out.states.push(x.clone());
    }
    for s in 1..=steps {
        scheme.step(body, &mut x, rng)?;
        if s % k == 0 {
            out.steps.push(s);
            out.states.push(x.clone());
        }
    }
    Ok(out)
}

/// How each chain of a batch is started.
#[derive(Clone, Debug)]
pub enum ChainStart {
    Point(Vec<f64>),
    Warm(WarmStart),
}

/// Runs independent chains in parallel, chain `c` drawing from stream `c` of
/// `(master, label)`. Results are ordered by chain index.
#[allow(clippy::too_many_arguments)]
pub fn run_chains<S: MarkovScheme>(
    scheme: &S,
    body: &ConvexBody,
    start: &ChainStart,
    chains: usize,
    steps: usize,
    master: u64,
    label: &str,
    thinning: Option<usize>,
) -> Result<Vec<Trajectory>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(master, label, 0, c);
            let x0 = match start {
                ChainStart::Point(p) => p.clone(),
                ChainStart::Warm(w) => w.sample(&mut rng)?,
            };
            let mut t = run_chain(scheme, body, &x0, steps, &mut rng, thinning)?;
            t.chain_id = c;
            Ok(t)
        })
        .collect()
}

/// Writes trajectories as CSV with header `chain_id,step,x_1..x_n`.
pub fn write_trajectories_csv<W: Write>(mut w: W, trajectories: &[Trajectory]) -> Result<()> {
    let n = trajectories
        .iter()
        .find_map(|t| t.states.first().map(|s| s.len()))
        .unwrap_or(0);
    write!(w, "chain_id,step")?;
    for i in 1..=n {
        write!(w, ",x_{i}")?;
    }
    writeln!(w)?;
    for t in trajectories {
        for (s, x) in t.steps.iter().zip(&t.states) {
            write!(w, "{},{}", t.chain_id, s)?;
            for v in x {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn square() -> ConvexBody {
        ConvexBody::cube(2, 1.0).unwrap()
    }

    #[test]
    fn default_tau_values() {
        assert_eq!(default_tau(2), 28);
        assert_eq!(default_tau(3), 66);
        assert_eq!(default_tau(1), 1);
    }

    #[test]
    fn chr_moves_one_coordinate() {
        let b = square();
        let mut rng = seed::rng(1, "chr-one");
        for _ in 0..1000 {
            let y = chr_step(&b, &[0.3, -0.2], &mut rng).unwrap();
            let changed = (y[0] != 0.3) as u8 + (y[1] != -0.2) as u8;
            assert!(changed <= 1);
            assert!(b.contains(&y).unwrap());
        }
        assert!(matches!(chr_step(&b, &[2.0, 0.0], &mut rng), Err(Error::NotInBody)));
    }

    #[test]
    fn gaussian_acceptance_at_flat_face() {
        let b = square();
        let mut rng = seed::rng(2, "gauss-acc");
        let (mut tried, mut acc) = (0u32, 0u32);
        while tried < 40_000 {
            let s = gaussian_step(&b, &[0.9, 0.0], 0.2, &mut rng).unwrap();
            if s.axis == 0 {
                tried += 1;
                acc += s.accepted as u32;
            }
        }
        let p = acc as f64 / tried as f64;
        let want = normal_cdf(0.5) - normal_cdf(-9.5);
        assert!((p - want).abs() < 4.0 * (want * (1.0 - want) / tried as f64).sqrt(), "{p} vs {want}");
    }

    #[test]
    fn iterate_zero_and_one() {
        let b = square();
        let x = [0.1, 0.2];
        let mut r1 = seed::rng(3, "it");
        let it = gaussian_iterate(&b, &x, GaussianWalkParams::new(0.1, 0).unwrap(), &mut r1).unwrap();
        assert_eq!(it.point, x.to_vec());
        let mut r1 = seed::rng(3, "it");
        let mut r2 = seed::rng(3, "it");
        let it = gaussian_iterate(&b, &x, GaussianWalkParams::new(0.1, 1).unwrap(), &mut r1).unwrap();
        let st = gaussian_step(&b, &x, 0.1, &mut r2).unwrap();
        assert_eq!(it.point, st.point);
        assert!(GaussianWalkParams::new(0.0, 3).is_err());
    }

    #[test]
    fn hnr_directions_average_to_zero() {
        let mut rng = seed::rng(4, "dirs");
        let n = 20_000;
        let mut m = [0.0; 3];
        for _ in 0..n {
            let d = random_direction(3, &mut rng);
            for i in 0..3 {
                m[i] += d[i] / n as f64;
            }
        }
        // each coordinate has variance 1/3
        assert!(m.iter().all(|v| v.abs() < 4.0 * (1.0f64 / 3.0 / n as f64).sqrt()));
    }

    #[test]
    fn warm_start_support() {
        let b = square();
        let mut rng = seed::rng(5, "warm");
        let w = WarmStart::new(&b, 4.0).unwrap();
        for _ in 0..2000 {
            let x = w.sample(&mut rng).unwrap();
            assert!(x.iter().all(|v| v.abs() <= 0.5));
        }
        let w = WarmStart::new(&b, 2.0).unwrap();
        let s = 2f64.powf(-0.5);
        for _ in 0..2000 {
            let x = w.sample(&mut rng).unwrap();
            assert!(x.iter().all(|v| v.abs() <= s + 1e-15));
        }
        assert!(WarmStart::new(&b, 0.5).is_err());
        let shifted = ConvexBody::boxed(vec![3.0, 3.0], vec![1.0, 1.0], 4.0).unwrap();
        assert!(matches!(WarmStart::new(&shifted, 2.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn run_chain_shapes_and_determinism() {
        let b = square();
        let mut rng = seed::rng(6, "run");
        let t = run_chain(&Scheme::CoordinateHitAndRun, &b, &[0.0, 0.0], 0, &mut rng, None).unwrap();
        assert_eq!(t.states, vec![vec![0.0, 0.0]]);
        let t = run_chain(&Scheme::CoordinateHitAndRun, &b, &[0.0, 0.0], 100_000, &mut rng, Some(10)).unwrap();
        assert_eq!(t.len(), 10_000);
        assert!(t.states.iter().all(|x| b.contains(x).unwrap()));
        let a = run_chains(&Scheme::HitAndRun, &b, &ChainStart::Point(vec![0.0, 0.0]), 4, 50, 9, "det", None).unwrap();
        let c = run_chains(&Scheme::HitAndRun, &b, &ChainStart::Point(vec![0.0, 0.0]), 4, 50, 9, "det", None).unwrap();
        assert_eq!(a, c);
        assert_ne!(a[0].states, a[1].states);
    }

    #[test]
    fn csv_header_and_rows() {
        let t = Trajectory {
            chain_id: 3,
            steps: vec![0, 1],
            states: vec![vec![0.0, 1.0], vec![0.5, 1.0]],
        };
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &[t]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "chain_id,step,x_1,x_2\n3,0,0,1\n3,1,0.5,1\n");
    }
}
