//! The verification presets. Each one checks a family of inequalities at desk
//! scale and returns its checks and CSV files.

use super::{Check, Overrides, PresetOutput};
use crate::bounds::{bounds_table, ls_mixing_estimate, s_conductance_lower_bound, theorem_main_bound, BoundParams, Constants};
use crate::conductance::{
    cut_flow, discrete_overlap, discretize_chr, discretize_gaussian, flow_vs_bound_check, isoperimetry_check,
    lifted_h_s, measure, multi_step_flow_check, s_conductance, DiscreteChain, SConductanceMode,
};
use crate::diagnostics::{
    ks_per_axis, lemma11_check, lemma12_check, mixing_time_empirical, pooled_trajectory_states, two_sample_tv,
    BinGrid, MixingOptions, Verdict,
};
use crate::error::{Error, Result};
use crate::geometry::{
    check_robust_interior_volume, exact_uniform_sample, random_polytope, robust_interior_contains, ConvexBody, Norm,
    UniformSampler,
};
use crate::mixture::{gaussian_tv_equal_cov, pinsker_bound, sample_multi_index};
use crate::schemes::{random_direction, ChainStart, Scheme, WarmStart};
use crate::seed;
use rand::Rng;
use std::fmt::Write as _;

/// Every preset name, in the order `verify all` runs them.
pub const PRESETS: [&str; 13] = [
    "uniformity",
    "reversibility",
    "flow-symmetry",
    "pinsker",
    "lemma11",
    "lemma12",
    "robust-interior",
    "isoperimetry",
    "s-conductance",
    "ls-mixing",
    "multi-step-flow",
    "scaling",
    "bounds-table",
];

struct Params<'a> {
    overrides: &'a Overrides,
    defaults: &'static [(&'static str, f64)],
}

impl<'a> Params<'a> {
    fn new(overrides: &'a Overrides, defaults: &'static [(&'static str, f64)]) -> Result<Self> {
        for k in overrides.keys() {
            if !defaults.iter().any(|(d, _)| d == k) {
                let known: Vec<&str> = defaults.iter().map(|(d, _)| *d).collect();
                return Err(Error::Parse {
                    location: format!("override `{k}`"),
                    message: format!("unknown parameter; this preset accepts {}", known.join(", ")),
                });
            }
        }
        Ok(Self { overrides, defaults })
    }

    fn f(&self, key: &str) -> f64 {
        self.overrides
            .get(key)
            .copied()
            .unwrap_or_else(|| self.defaults.iter().find(|(d, _)| *d == key).expect("declared parameter").1)
    }

    fn u(&self, key: &str) -> Result<usize> {
        let v = self.f(key);
        if !(v >= 0.0 && v.fract() == 0.0 && v < 1e12) {
            return Err(Error::Parse {
                location: format!("override `{key}`"),
                message: format!("expected a non-negative integer, got {v}"),
            });
        }
        Ok(v as usize)
    }
}

fn check(name: &str, tag: &str, measured: f64, bound: Option<f64>, verdict: Verdict) -> Check {
    Check {
        name: name.into(),
        tag: tag.into(),
        measured,
        bound,
        noise_floor: None,
        verdict,
        detail: String::new(),
    }
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Zero violations out of `total`.
fn violations(name: &str, tag: &str, count: usize, total: usize) -> Check {
    let mut c = check(name, tag, count as f64, Some(0.0), pass_if(count == 0));
    c.detail = format!("{count} of {total} violated");
    c
}

fn random_subset<R: Rng>(len: usize, rng: &mut R) -> Vec<bool> {
    loop {
        let a: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        if a.iter().any(|&b| b) && !a.iter().all(|&b| b) {
            return a;
        }
    }
}

fn instance_body(seed: u64, label: &str, i: u64) -> Result<ConvexBody> {
    random_polytope(2, 6, 2.0, &mut seed::stream(seed, label, i, 0))
}

pub(super) fn run(name: &str, ov: &Overrides, seed: u64) -> Result<PresetOutput> {
    let mut out = PresetOutput::default();
    match name {
        "uniformity" => uniformity(ov, seed, &mut out)?,
        "reversibility" => reversibility(ov, seed, &mut out)?,
        "flow-symmetry" => flow_symmetry(ov, seed, &mut out)?,
        "pinsker" => pinsker(ov, seed, &mut out)?,
        "lemma11" => iterate_vs_mixture(ov, seed, &mut out)?,
        "lemma12" => nearby_starts(ov, seed, &mut out)?,
        "robust-interior" => robust_interior(ov, seed, &mut out)?,
        "isoperimetry" => isoperimetry(ov, seed, &mut out)?,
        "s-conductance" => s_conductance_preset(ov, seed, &mut out)?,
        "ls-mixing" => ls_mixing(ov, seed, &mut out)?,
        "multi-step-flow" => multi_step_flow(ov, seed, &mut out)?,
        "scaling" => scaling(ov, seed, &mut out)?,
        "bounds-table" => table(ov, &mut out)?,
        other => {
            return Err(Error::Parse {
                location: "preset".into(),
                message: format!("unknown preset `{other}`; expected one of {}", PRESETS.join(", ")),
            })
        }
    }
    Ok(out)
}

fn uniformity(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(
        ov,
        &[
            ("chains", 64.0),
            ("steps", 5000.0),
            ("thinning", 5.0),
            ("reference", 200_000.0),
            ("bins", 4.0),
            ("M", 4.0),
            ("tv_bound", 0.05),
            ("ks_bound", 0.02),
        ],
    )?;
    let body = ConvexBody::cube(3, 1.0)?;
    let warm = WarmStart::new(&body, p.f("M"))?;
    let pooled = pooled_trajectory_states(
        &Scheme::CoordinateHitAndRun,
        &body,
        &ChainStart::Warm(warm),
        p.u("chains")?,
        p.u("steps")?,
        p.u("thinning")?,
        seed::sub_seed(seed, "uniformity-walk", 0),
    )?;
    let mut rng = seed::rng(seed, "uniformity-reference");
    let reference = (0..p.u("reference")?)
        .map(|_| exact_uniform_sample(&body, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    out.seed_labels.extend(["uniformity-walk".into(), "uniformity-reference".into()]);

    let grid = BinGrid::for_body(&body, p.u("bins")?)?;
    let tv = two_sample_tv(&pooled, &reference, &grid)?;
    let bound = p.f("tv_bound");
    let mut c = check(
        "binned-tv-to-exact-sampler",
        "pooled CHR states vs exact uniform",
        tv.value,
        Some(bound),
        Verdict::judge(tv.value, bound, 0.0, tv.noise_floor()),
    );
    c.noise_floor = Some(tv.noise_floor());
    c.detail = format!("{} walk states, {} reference", pooled.len(), reference.len());
    out.checks.push(c);

    let ks = ks_per_axis(&pooled, &reference)?;
    let worst = ks.iter().copied().fold(0.0, f64::max);
    let (na, nb) = (pooled.len() as f64, reference.len() as f64);
    // 5% critical value of the two-sample KS statistic for independent samples
    let floor = 1.358 * ((na + nb) / (na * nb)).sqrt();
    let bound = p.f("ks_bound");
    let mut c = check(
        "per-axis-ks",
        "max marginal KS vs exact uniform",
        worst,
        Some(bound),
        Verdict::judge(worst, bound, 0.0, floor),
    );
    c.noise_floor = Some(floor);
    out.checks.push(c);

    let mut csv = String::from("axis,ks\n");
    for (i, k) in ks.iter().enumerate() {
        let _ = writeln!(csv, "{},{k}", i + 1);
    }
    let _ = writeln!(csv, "tv,{}", tv.value);
    out.files.push(("uniformity.csv".into(), csv));
    Ok(())
}

fn chr_chains(seed: u64, label: &str, instances: usize, cells: usize) -> Result<Vec<(ConvexBody, DiscreteChain)>> {
    (0..instances as u64)
        .map(|i| {
            let body = instance_body(seed, label, i)?;
            let chain = discretize_chr(&body, cells)?;
            Ok((body, chain))
        })
        .collect()
}

fn reversibility(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("instances", 20.0), ("cells", 8.0)])?;
    let chains = chr_chains(seed, "reversibility-body", p.u("instances")?, p.u("cells")?)?;
    out.seed_labels.push("reversibility-body".into());
    let mut csv = String::from("instance,states,reversibility_defect,stationarity_defect\n");
    let (mut rev, mut stat) = (0.0f64, 0.0f64);
    for (i, (_, c)) in chains.iter().enumerate() {
        let (r, s) = (c.reversibility_defect(), c.stationarity_defect());
        rev = rev.max(r);
        stat = stat.max(s);
        let _ = writeln!(csv, "{i},{},{r},{s}", c.len());
    }
    out.checks.push(check(
        "detailed-balance",
        "max |pi_i P_ij - pi_j P_ji|",
        rev,
        Some(1e-12),
        pass_if(rev <= 1e-12),
    ));
    out.checks.push(check(
        "stationarity",
        "||pi P - pi||_inf",
        stat,
        Some(1e-10),
        pass_if(stat <= 1e-10),
    ));
    out.files.push(("reversibility.csv".into(), csv));
    Ok(())
}

fn flow_symmetry(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("instances", 20.0), ("cells", 8.0), ("subsets", 100.0)])?;
    let chains = chr_chains(seed, "flow-symmetry-body", p.u("instances")?, p.u("cells")?)?;
    out.seed_labels.extend(["flow-symmetry-body".into(), "flow-symmetry-cuts".into()]);
    let mut csv = String::from("instance,max_discrepancy\n");
    let mut worst = 0.0f64;
    for (i, (_, c)) in chains.iter().enumerate() {
        let mut rng = seed::stream(seed, "flow-symmetry-cuts", i as u64, 0);
        let mut here = 0.0f64;
        for _ in 0..p.u("subsets")? {
            let a = random_subset(c.len(), &mut rng);
            let comp: Vec<bool> = a.iter().map(|b| !b).collect();
            here = here.max((cut_flow(c, &a)? - cut_flow(c, &comp)?).abs());
        }
        worst = worst.max(here);
        let _ = writeln!(csv, "{i},{here}");
    }
    out.checks.push(check(
        "flow-symmetry",
        "Phi(A) = Phi(S - A)",
        worst,
        Some(1e-10),
        pass_if(worst <= 1e-10),
    ));
    out.files.push(("flow_symmetry.csv".into(), csv));
    Ok(())
}

fn pinsker(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("instances", 1000.0)])?;
    let mut rng = seed::rng(seed, "pinsker");
    out.seed_labels.push("pinsker".into());
    let mut csv = String::from("instance,n,tau,sigma,distance,tv,bound\n");
    let mut bad = 0;
    let total = p.u("instances")?;
    for i in 0..total {
        let n = rng.random_range(2..=6usize);
        let tau = rng.random_range(n as u64..=60);
        let index = loop {
            let ix = sample_multi_index(n, tau, &mut rng);
            if ix.is_full_rank() {
                break ix;
            }
        };
        let sigma = 10f64.powf(rng.random_range(-4.0..0.0));
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dir = random_direction(n, &mut rng);
        let dist = rng.random_range(0.0..4.0) * sigma * (tau as f64).sqrt();
        let u: Vec<f64> = v.iter().zip(&dir).map(|(a, d)| a + dist * d).collect();
        let tv = gaussian_tv_equal_cov(&v, &u, &index, sigma)?;
        let bound = pinsker_bound(&v, &u, sigma)?.min(1.0);
        bad += (tv > bound) as usize;
        let _ = writeln!(csv, "{i},{n},{tau},{sigma},{dist},{tv},{bound}");
    }
    out.checks.push(violations(
        "pinsker-domination",
        "2 Phi(Delta/2) - 1 <= min(1, |v - u| / (2 sigma))",
        bad,
        total,
    ));
    out.files.push(("pinsker.csv".into(), csv));
    Ok(())
}

fn iterate_vs_mixture(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("n", 2.0), ("sigma", 1e-3), ("half_width", 1.0), ("samples", 1e6)])?;
    let r = lemma11_check(p.u("n")?, p.f("sigma"), p.f("half_width"), p.u("samples")?, seed::sub_seed(seed, "lemma11", 0))?;
    out.seed_labels.push("lemma11".into());
    let mut c = check(
        "rejection-frequency",
        "P[some proposal of the tau-iterate rejected] <= 1.5 n^-5",
        r.rejection_frequency,
        Some(r.rejection_bound),
        pass_if(r.rejection_pass),
    );
    c.detail = format!("std error {:.3e}, slack 3 std errors, tau {}", r.rejection_std_error, r.tau);
    out.checks.push(c);
    let mut c = check(
        "iterate-vs-mixture",
        "d_TV(tau-iterate, full-rank mixture) <= 2 n^-5",
        r.tv.value,
        Some(r.bound),
        r.verdict,
    );
    c.noise_floor = Some(r.tv.noise_floor());
    c.detail = format!("{} bins per axis, ci {:.3e}", r.tv.bins_per_axis, r.tv.ci_halfwidth);
    out.checks.push(c);
    let csv = format!(
        "n,sigma,tau,samples,rejection_frequency,rejection_bound,tv,ci,bias,bound,verdict\n{},{},{},{},{},{},{},{},{},{},{}\n",
        r.n,
        r.sigma,
        r.tau,
        r.tv.samples,
        r.rejection_frequency,
        r.rejection_bound,
        r.tv.value,
        r.tv.ci_halfwidth,
        r.tv.bias,
        r.bound,
        r.verdict.label()
    );
    out.files.push(("lemma11.csv".into(), csv));
    Ok(())
}

fn nearby_starts(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("sigma", 1e-3), ("half_width", 1.0), ("samples", 1e6)])?;
    let sigma = p.f("sigma");
    let u = [0.0, 0.0];
    let v = [0.6 * sigma, 0.8 * sigma];
    let r = lemma12_check(sigma, &u, &v, p.f("half_width"), p.u("samples")?, seed::sub_seed(seed, "lemma12", 0))?;
    out.seed_labels.push("lemma12".into());
    let mut c = check(
        "nearby-start-overlap",
        "d_TV(G^tau(u, .), G^tau(v, .)) <= 3/4 for |u - v| <= sigma",
        r.tv.value,
        Some(r.bound),
        r.verdict,
    );
    c.noise_floor = Some(r.tv.noise_floor());
    c.detail = format!("slack 2 ci = {:.3e}", 2.0 * r.tv.ci_halfwidth);
    out.checks.push(c);
    let agg = r.mixture_aggregate.unwrap_or(f64::NAN);
    let mut c = check(
        "mixture-aggregate",
        "sum_I lambda_I d_TV(G_v,I, G_u,I) <= 1/2",
        agg,
        Some(0.5),
        pass_if(agg <= 0.5),
    );
    c.detail = "all multi-indices enumerated at tau = 6".into();
    out.checks.push(c);
    let csv = format!(
        "sigma,samples,tv,ci,bias,bound,mixture_aggregate,verdict\n{sigma},{},{},{},{},{},{agg},{}\n",
        r.tv.samples,
        r.tv.value,
        r.tv.ci_halfwidth,
        r.tv.bias,
        r.bound,
        r.verdict.label()
    );
    out.files.push(("lemma12.csv".into(), csv));
    Ok(())
}

fn robust_interior(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("instances", 20.0), ("samples", 20_000.0), ("points", 1000.0)])?;
    out.seed_labels.extend([
        "robust-interior-body".into(),
        "robust-interior".into(),
        "robust-interior-points".into(),
    ]);
    let mut csv = String::from("instance,eps,ratio,ci,bound,pass,scaled_points_outside\n");
    let (mut vol_bad, mut pt_bad, mut runs) = (0, 0, 0);
    for i in 0..p.u("instances")? as u64 {
        let body = instance_body(seed, "robust-interior-body", i)?;
        for (k, eps) in [0.1, 0.3].into_iter().enumerate() {
            let r = check_robust_interior_volume(&body, eps, p.u("samples")?, seed::sub_seed(seed, "robust-interior", 2 * i + k as u64))?;
            let shrunk = body.scaled(1.0 - eps)?;
            let mut rng = seed::stream(seed, "robust-interior-points", i, k as u64);
            let sampler = UniformSampler::for_body(&shrunk, &mut rng);
            let mut outside = 0;
            for _ in 0..p.u("points")? {
                let x = sampler.sample(&shrunk, &mut rng)?;
                outside += !robust_interior_contains(&body, &x, eps)? as usize;
            }
            runs += 1;
            vol_bad += !r.pass as usize;
            pt_bad += (outside > 0) as usize;
            let _ = writeln!(
                csv,
                "{i},{eps},{},{},{},{},{outside}",
                r.ratio_estimate, r.ci_halfwidth, r.bound, r.pass
            );
        }
    }
    out.checks.push(violations(
        "robust-interior-volume",
        "vol(K_eps)/vol(K) >= (1 - eps)^n within ci",
        vol_bad,
        runs,
    ));
    out.checks.push(violations(
        "scaled-body-in-robust-interior",
        "(1 - eps) K is inside K_eps",
        pt_bad,
        runs,
    ));
    out.files.push(("robust_interior.csv".into(), csv));
    Ok(())
}

fn isoperimetry(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("instances", 50.0), ("samples", 20_000.0), ("box_samples", 200_000.0), ("box_delta", 0.2)])?;
    out.seed_labels.extend(["isoperimetry-instance".into(), "isoperimetry".into()]);
    let mut csv = String::from("instance,norm,delta,lhs,lhs_ci,rhs,rhs_ci,diameter,pass\n");
    let total = p.u("instances")?;
    let mut bad = 0;
    for i in 0..total as u64 {
        let mut rng = seed::stream(seed, "isoperimetry-instance", i, 0);
        let body = if i % 5 == 0 {
            ConvexBody::cube(2, 1.0)?
        } else {
            random_polytope(2, 6, 2.0, &mut rng)?
        };
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let w = [theta.cos(), theta.sin()];
        let gap = rng.random_range(0.05..0.8);
        let a = rng.random_range(-0.8..0.8) - gap / 2.0;
        // the half-planes are gap apart in l2 and gap/|w|_1 apart in l_inf
        let (norm, delta) = if i % 2 == 0 {
            (Norm::L2, gap)
        } else {
            (Norm::LInf, gap / (w[0].abs() + w[1].abs()))
        };
        let k1 = move |x: &[f64]| w[0] * x[0] + w[1] * x[1] <= a;
        let k2 = move |x: &[f64]| w[0] * x[0] + w[1] * x[1] >= a + gap;
        let r = isoperimetry_check(&body, &k1, &k2, delta, norm, p.u("samples")?, seed::sub_seed(seed, "isoperimetry", i))?;
        bad += !r.pass as usize;
        let _ = writeln!(
            csv,
            "{i},{norm:?},{delta},{},{},{},{},{},{}",
            r.lhs_estimate, r.lhs_ci, r.rhs_estimate, r.rhs_ci, r.diameter, r.pass
        );
    }
    out.checks.push(violations(
        "isoperimetric-inequality",
        "vol(K - (K1 u K2)) >= 2 delta/(D - delta) min(vol K1, vol K2) within ci",
        bad,
        total,
    ));

    let body = ConvexBody::cube(2, 1.0)?;
    let delta = p.f("box_delta");
    let k1 = move |x: &[f64]| x[0] <= -delta / 2.0;
    let k2 = move |x: &[f64]| x[0] >= delta / 2.0;
    let r = isoperimetry_check(&body, &k1, &k2, delta, Norm::L2, p.u("box_samples")?, seed::sub_seed(seed, "isoperimetry", u64::MAX))?;
    let exact = delta / 2.0;
    let d = 2.0 * 2f64.sqrt();
    let exact_rhs = 2.0 * delta / (d - delta) * (1.0 - delta / 2.0) / 2.0;
    let err = (r.lhs_estimate - exact).abs();
    let mut c = check(
        "box-slab-closed-form",
        "|lhs estimate - delta/2| within ci",
        err,
        Some(r.lhs_ci),
        pass_if(err <= r.lhs_ci && r.pass && (r.rhs_estimate - exact_rhs).abs() <= r.rhs_ci),
    );
    c.detail = format!("lhs {:.5} vs {exact}, rhs {:.5} vs {exact_rhs:.5}", r.lhs_estimate, r.rhs_estimate);
    out.checks.push(c);
    let _ = writeln!(
        csv,
        "box,L2,{delta},{},{},{},{},{},{}",
        r.lhs_estimate, r.lhs_ci, r.rhs_estimate, r.rhs_ci, r.diameter, r.pass
    );
    out.files.push(("isoperimetry.csv".into(), csv));
    Ok(())
}

fn s_conductance_preset(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(
        ov,
        &[("instances", 10.0), ("cells", 4.0), ("s", 0.1), ("sweep_subsets", 200.0), ("cuts", 20.0), ("sigma", 0.5)],
    )?;
    out.seed_labels.extend([
        "s-conductance-body".into(),
        "s-conductance-sweep".into(),
        "s-conductance-cuts".into(),
    ]);
    let s = p.f("s");
    let cells = p.u("cells")?;
    let instances = p.u("instances")?;
    let mut csv = String::from("instance,states,exact,sweep,ratio_to_asymptotic_form,subset_bits\n");
    let mut sandwich_bad = 0;
    let mut min_ratio = f64::INFINITY;
    for (i, (body, c)) in chr_chains(seed, "s-conductance-body", instances, cells)?.iter().enumerate() {
        let exact = s_conductance(c, s, SConductanceMode::Exact)?;
        let sweep = s_conductance(
            c,
            s,
            SConductanceMode::Sweep {
                random_subsets: p.u("sweep_subsets")?,
                seed: seed::sub_seed(seed, "s-conductance-sweep", i as u64),
            },
        )?;
        sandwich_bad += (sweep.value < exact.value - 1e-12) as usize;
        let ratio = exact.value / s_conductance_lower_bound(s, body.declared_r(), 2, 1.0)?;
        min_ratio = min_ratio.min(ratio);
        let _ = writeln!(csv, "{i},{},{},{},{ratio},{}", c.len(), exact.value, sweep.value, exact.subset_bits());
    }
    out.checks.push(violations(
        "exact-below-sweep",
        "exact Phi_s <= sweep upper bound",
        sandwich_bad,
        instances,
    ));
    let mut c = check(
        "ratio-to-asymptotic-form",
        "Phi_s / (s^2 / (R^2 n^3.5 ln^3 n)), reported only",
        min_ratio,
        None,
        pass_if(min_ratio >= 0.0),
    );
    c.detail = "smallest ratio over instances; the constant is unspecified".into();
    out.checks.push(c);

    // flow across cuts of a tau-step Gaussian chain against the overlap bound
    let mut flow_csv = String::from("instance,cut,nu,delta,flow,bound,pass\n");
    let (mut bad, mut total) = (0, 0);
    for i in 0..instances as u64 {
        let body = instance_body(seed, "s-conductance-body", i)?;
        let chain = discretize_gaussian(&body, cells, p.f("sigma"))?.power(3)?;
        let (lo, hi) = body.bounding_box();
        let side = lo.iter().zip(hi).map(|(l, h)| (h - l) / cells as f64).fold(0.0, f64::max);
        let all = vec![true; chain.len()];
        let cert = discrete_overlap(&chain, &all, 1.01 * side)?;
        let diameter = body.diameter(Norm::L2).value;
        let mut rng = seed::stream(seed, "s-conductance-cuts", i, 0);
        let mut cuts = vec![chain.states().iter().map(|x| x[0] < 0.0).collect::<Vec<_>>()];
        for _ in 0..p.u("cuts")? {
            cuts.push(balanced_cut(&chain, &mut rng));
        }
        for (j, cut) in cuts.iter().enumerate() {
            let r = flow_vs_bound_check(&chain, cut, &cert, diameter)?;
            bad += !r.pass as usize;
            total += 1;
            let _ = writeln!(flow_csv, "{i},{j},{},{},{},{},{}", cert.nu, cert.delta, r.flow, r.bound, r.pass);
        }
    }
    out.checks.push(violations(
        "flow-vs-overlap-bound",
        "Phi(S1) >= nu delta/(4(D - delta)) min(pi(S1) - eps, pi(S2) - eps)",
        bad,
        total,
    ));
    out.files.push(("s_conductance.csv".into(), csv));
    out.files.push(("flow_bound.csv".into(), flow_csv));
    Ok(())
}

/// States in random order until half the stationary mass is covered.
fn balanced_cut<R: Rng>(chain: &DiscreteChain, rng: &mut R) -> Vec<bool> {
    let mut order: Vec<usize> = (0..chain.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut cut = vec![false; chain.len()];
    let mut mass = 0.0;
    for i in order {
        if mass >= 0.5 {
            break;
        }
        cut[i] = true;
        mass += chain.stationary()[i];
    }
    cut
}

fn ls_mixing(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("instances", 10.0), ("cells", 4.0), ("starts", 3.0), ("k_max", 200.0)])?;
    out.seed_labels.extend(["ls-mixing-body".into(), "ls-mixing-start".into()]);
    let k_max = p.u("k_max")?;
    let mut csv = String::from("instance,start,s,phi_s,h_s,min_margin\n");
    let (mut bad, mut total) = (0, 0);
    for (i, (_, c)) in chr_chains(seed, "ls-mixing-body", p.u("instances")?, p.u("cells")?)?.iter().enumerate() {
        let pi = c.stationary();
        let mut rng = seed::stream(seed, "ls-mixing-start", i as u64, 0);
        for j in 0..p.u("starts")? {
            let a = random_subset(c.len(), &mut rng);
            let qa = measure(c, &a);
            let mu0: Vec<f64> = a.iter().zip(pi).map(|(&inside, &q)| if inside { q / qa } else { 0.0 }).collect();
            let tv = c.tv_trajectory(&mu0, k_max)?;
            for s in [0.05, 0.1] {
                // a smaller Phi_s only weakens the estimate, so clamping to 1 keeps it valid
                let phi = s_conductance(c, s, SConductanceMode::ExactLifted)?.value.min(1.0);
                let h = lifted_h_s(&mu0, pi, s)?;
                let mut margin = f64::INFINITY;
                for (k, d) in tv.iter().enumerate() {
                    let est = ls_mixing_estimate(h, phi, s, k as u64)?;
                    margin = margin.min(est - d);
                    bad += (d > &(est + 1e-12)) as usize;
                    total += 1;
                }
                let _ = writeln!(csv, "{i},{j},{s},{phi},{h},{margin}");
            }
        }
    }
    out.checks.push(violations(
        "ls-estimate-dominates-tv",
        "d_TV(mu_k, pi) <= H_s + (H_s/s)(1 - Phi_s^2/2)^k",
        bad,
        total,
    ));
    out.files.push(("ls_mixing.csv".into(), csv));
    Ok(())
}

fn multi_step_flow(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(ov, &[("instances", 10.0), ("cuts", 5.0), ("cells", 4.0)])?;
    out.seed_labels.extend(["multi-step-flow-body".into(), "multi-step-flow-cuts".into()]);
    let mut csv = String::from("instance,cut,tau,one_step,tau_step,holds\n");
    let (mut bad, mut total) = (0, 0);
    for i in 0..p.u("instances")? as u64 {
        let body = instance_body(seed, "multi-step-flow-body", i)?;
        let mut rng = seed::stream(seed, "multi-step-flow-cuts", i, 0);
        let chain = if i % 2 == 0 {
            discretize_gaussian(&body, p.u("cells")?, rng.random_range(0.2..0.6))?
        } else {
            discretize_chr(&body, p.u("cells")?)?
        };
        for j in 0..p.u("cuts")? {
            let a = random_subset(chain.len(), &mut rng);
            for tau in 2..=5 {
                let r = multi_step_flow_check(&chain, &a, tau)?;
                bad += !r.holds as usize;
                total += 1;
                let _ = writeln!(csv, "{i},{j},{tau},{},{},{}", r.one_step, r.tau_step, r.holds);
            }
        }
    }
    out.checks.push(violations(
        "multi-step-flow",
        "Phi_P(A) >= Phi_{P^tau}(A) / tau",
        bad,
        total,
    ));
    out.files.push(("multi_step_flow.csv".into(), csv));
    Ok(())
}

fn scaling(ov: &Overrides, seed: u64, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(
        ov,
        &[
            ("n_min", 2.0),
            ("n_max", 6.0),
            ("chains", 100_000.0),
            ("M", 4.0),
            ("threshold", 0.25),
            ("max_steps", 40.0),
        ],
    )?;
    out.seed_labels.push("scaling".into());
    let threshold = p.f("threshold");
    let mut csv = String::from("n,checkpoint,tv_estimate,ci,pass\n");
    let mut summary = String::from("n,reached,optimistic,main_bound\n");
    let mut rows = Vec::new();
    for n in p.u("n_min")?..=p.u("n_max")? {
        let body = ConvexBody::cube(n, 1.0)?;
        // cells aligned with the warm start's support: the CHR law on the cube is
        // constant on each of them, so the binned TV is the exact TV
        let a = p.f("M").powf(-1.0 / n as f64);
        let opts = MixingOptions {
            m: p.f("M"),
            threshold,
            checkpoints: (0..=p.u("max_steps")?).collect(),
            chains: p.u("chains")?,
            bins_per_axis: 3,
            seed: seed::sub_seed(seed, "scaling", n as u64),
            grid: Some(BinGrid::from_edges(vec![vec![-1.0, -a, a, 1.0]; n])?),
        };
        let report = mixing_time_empirical(&Scheme::CoordinateHitAndRun, &body, &opts)?;
        let mut csv_buf = Vec::new();
        report.write_csv(&mut csv_buf)?;
        for line in String::from_utf8_lossy(&csv_buf).lines().skip(1) {
            let _ = writeln!(csv, "{n},{line}");
        }
        let optimistic = report
            .checkpoints
            .iter()
            .zip(&report.estimates)
            .find(|(_, e)| e.value - e.ci_halfwidth < threshold)
            .map(|(c, _)| *c);
        let mut bp = BoundParams::new(n as u64, 1.0, p.f("M"), threshold)?;
        bp.constants = Constants::default();
        let main = theorem_main_bound(&bp)?;
        let reached = report.reached;
        let show = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(summary, "{n},{},{},{main}", show(reached), show(optimistic));
        let measured = reached.map(|r| r as f64).unwrap_or(f64::INFINITY);
        let mut c = check(
            &format!("mixing-below-main-bound-n{n}"),
            "empirical TV < threshold before the main bound at C = 1",
            measured,
            Some(main),
            pass_if(measured <= main),
        );
        if reached.is_none() {
            c.detail = format!("threshold not reached within {} steps", p.u("max_steps")?);
        }
        out.checks.push(c);
        rows.push((n, reached, optimistic));
    }
    // reached(n) must not precede the most optimistic reading for n - 1
    let bad = rows
        .windows(2)
        .filter(|w| match (w[1].1, w[0].2) {
            (Some(now), Some(before)) => now < before,
            (None, _) => false,
            (Some(_), None) => true,
        })
        .count();
    out.checks.push(violations(
        "mixing-non-decreasing-in-n",
        "reached(n) >= optimistic(n - 1)",
        bad,
        rows.len().saturating_sub(1),
    ));
    out.files.push(("scaling.csv".into(), csv));
    out.files.push(("scaling_summary.csv".into(), summary));
    Ok(())
}

fn table(ov: &Overrides, out: &mut PresetOutput) -> Result<()> {
    let p = Params::new(
        ov,
        &[("n", 2.0), ("R", 1.0), ("M", 1.0), ("eps", 0.25), ("c_main", 1.0), ("c_cond", 1.0), ("c_flow", 1.0)],
    )?;
    let mut bp = BoundParams::new(p.u("n")? as u64, p.f("R"), p.f("M"), p.f("eps"))?;
    bp.constants = Constants {
        c_main: p.f("c_main"),
        c_cond: p.f("c_cond"),
        c_flow: p.f("c_flow"),
    };
    let pinned = ["c_main", "c_cond", "c_flow"].iter().any(|k| ov.contains_key(*k));
    let mut csv = String::from("name,formula,value,shape_only\n");
    for row in bounds_table(&bp, pinned)? {
        let mut c = check(
            row.name,
            row.formula,
            row.value,
            None,
            pass_if(row.value.is_finite() || row.name == "gaussian-flow-lower-bound"),
        );
        c.detail = row.description.to_string();
        if row.shape_only {
            c.detail.push_str("; shape only, constant left at its default");
        }
        out.checks.push(c);
        let _ = writeln!(csv, "{},{},{},{}", row.name, row.formula, row.value, row.shape_only);
    }
    out.files.push(("bounds_table.csv".into(), csv));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(pairs: &[(&str, f64)]) -> Overrides {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn unknown_override_is_rejected() {
        assert!(run("pinsker", &small(&[("bogus", 1.0)]), 0).is_err());
        assert!(run("pinsker", &small(&[("instances", 1.5)]), 0).is_err());
    }

    #[test]
    fn cheap_presets_pass() {
        for (name, ov) in [
            ("pinsker", small(&[("instances", 200.0)])),
            ("reversibility", small(&[("instances", 3.0)])),
            ("flow-symmetry", small(&[("instances", 2.0), ("subsets", 20.0)])),
            ("multi-step-flow", small(&[("instances", 2.0)])),
            ("bounds-table", Overrides::new()),
        ] {
            let out = run(name, &ov, 5).unwrap();
            assert!(out.checks.iter().all(|c| c.verdict == Verdict::Pass), "{name}: {:?}", out.checks);
        }
    }

    #[test]
    fn bounds_table_main_value() {
        let out = run("bounds-table", &Overrides::new(), 0).unwrap();
        let main = out.checks.iter().find(|c| c.name == "main-mixing-bound").unwrap();
        assert_eq!(main.measured, 7557.0);
    }
}
