//! Experiment plumbing: body specs, run configuration, the verification
//! presets, manifests and reports.
//!
//! Every preset derives its randomness from the master seed through
//! [`crate::seed`], with the preset name as label prefix, the instance index as
//! instance and the chain index as stream. Presets run sequentially; each may
//! use rayon internally.

mod body_spec;
mod presets;

pub use body_spec::{body_spec_to_toml, load_body_spec, parse_body_spec, LoadedBody};
pub use presets::PRESETS;

use crate::bounds::{BoundParams, Constants};
use crate::diagnostics::{mixing_time_empirical, BinGrid, MixingOptions, MixingReport, Verdict};
use crate::error::{invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::schemes::{GaussianWalkParams, Scheme};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Scheme selection as written in configs and on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    /// `chr`, `hnr` or `gauss`.
    pub name: String,
    pub sigma: Option<f64>,
    /// Gaussian steps per transition; a single step when absent.
    pub tau: Option<usize>,
}

impl SchemeConfig {
    pub fn build(&self) -> Result<Scheme> {
        match self.name.as_str() {
            "chr" => Ok(Scheme::CoordinateHitAndRun),
            "hnr" => Ok(Scheme::HitAndRun),
            "gauss" => {
                let sigma = self.sigma.ok_or_else(|| invalid("sigma", "required for the gauss scheme"))?;
                match self.tau {
                    Some(tau) => Ok(Scheme::GaussianIterate(GaussianWalkParams::new(sigma, tau)?)),
                    None => {
                        GaussianWalkParams::new(sigma, 1)?;
                        Ok(Scheme::GaussianWalk { sigma })
                    }
                }
            }
            other => Err(Error::Parse {
                location: "scheme.name".into(),
                message: format!("unknown scheme `{other}`; expected chr, hnr or gauss"),
            }),
        }
    }
}

/// A mixing experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub body: PathBuf,
    pub scheme: SchemeConfig,
    #[serde(rename = "M")]
    pub m: f64,
    pub eps: f64,
    pub chains: usize,
    pub checkpoints: Vec<usize>,
    /// Bins per axis; `⌈chains^{1/(n+2)}⌉` when absent.
    pub bins: Option<usize>,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub constants: Constants,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            location: "config".into(),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks referenced files and parameter ranges before anything runs.
    pub fn validate(&self) -> Result<()> {
        if !self.body.is_file() {
            return Err(Error::Precondition(format!("body file {} does not exist", self.body.display())));
        }
        // the bound parameters constrain M and ε; n and R are checked per body
        BoundParams::new(2, 1.0, self.m, self.eps)?;
        self.scheme.build()?;
        if self.chains < 2 {
            return Err(invalid("chains", "need at least 2 chains"));
        }
        let cps = &self.checkpoints;
        if cps.is_empty() || cps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("checkpoints", "must be non-empty and strictly increasing"));
        }
        if self.bins == Some(0) {
            return Err(invalid("bins", "must be positive"));
        }
        Ok(())
    }

    /// Canonical TOML: keys sorted at every level.
    pub fn canonical(&self) -> Result<String> {
        let value = toml::Value::try_from(self).map_err(|e| Error::Unsupported(e.to_string()))?;
        toml::to_string(&value).map_err(|e| Error::Unsupported(e.to_string()))
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.canonical()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Numeric preset parameters overriding the defaults, by name.
pub type Overrides = BTreeMap<String, f64>;

/// One checked inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The inequality being checked.
    pub tag: String,
    pub measured: f64,
    pub bound: Option<f64>,
    pub noise_floor: Option<f64>,
    pub verdict: Verdict,
    pub detail: String,
}

impl Check {
    pub fn line(&self) -> String {
        let mut s = format!("{}: {} [{}]", self.verdict.label().to_uppercase(), self.name, self.tag);
        if self.verdict == Verdict::Inconclusive {
            if let (Some(f), Some(b)) = (self.noise_floor, self.bound) {
                let _ = write!(s, ": noise floor {} > bound {}", fmt_num(f), fmt_num(b));
            }
        } else {
            let _ = write!(s, ": measured {}", fmt_num(self.measured));
            if let Some(b) = self.bound {
                let _ = write!(s, ", bound {}", fmt_num(b));
            }
            if let Some(f) = self.noise_floor {
                let _ = write!(s, ", noise floor {}", fmt_num(f));
            }
        }
        if !self.detail.is_empty() {
            let _ = write!(s, " ({})", self.detail);
        }
        s
    }
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e6).contains(&x.abs()) {
        let s = format!("{x:.6}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{x:.4e}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// What a run did and produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub preset: String,
    pub config_hash: String,
    pub version: String,
    pub master_seed: u64,
    /// Derivation labels of the generators used, in the order they were used.
    pub seed_labels: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputFile>,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn empty(preset: &str, master_seed: u64) -> Self {
        Self {
            preset: preset.into(),
            config_hash: String::new(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed,
            seed_labels: Vec::new(),
            started_unix: now(),
            finished_unix: now(),
            outputs: Vec::new(),
            checks: Vec::new(),
        }
    }

    /// The worst verdict; `Pass` for a run without checks.
    pub fn verdict(&self) -> Verdict {
        self.checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass)
    }

    /// 0 when everything passed, 1 on any failure, 2 when something was
    /// inconclusive and nothing failed.
    pub fn exit_code(&self) -> i32 {
        match self.verdict() {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Unsupported(e.to_string()))
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// The human-readable report: a header, then one line per check. Contains no
/// timestamps, so equal runs give equal reports.
pub fn emit_report(manifest: &RunManifest) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# coordwalk report: {}", manifest.preset);
    let _ = writeln!(s, "# version {}, master seed {}", manifest.version, manifest.master_seed);
    if !manifest.config_hash.is_empty() {
        let _ = writeln!(s, "# config {}", manifest.config_hash);
    }
    for c in &manifest.checks {
        let _ = writeln!(s, "{}", c.line());
    }
    s
}

/// CSV of the checks, header `check,tag,measured,bound,noise_floor,verdict`.
pub fn checks_csv(checks: &[Check]) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut s = String::from("check,tag,measured,bound,noise_floor,verdict\n");
    for c in checks {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            c.name,
            c.tag,
            c.measured,
            opt(c.bound),
            opt(c.noise_floor),
            c.verdict.label()
        );
    }
    s
}

/// Output of a preset before anything is written.
#[derive(Clone, Debug, Default)]
pub struct PresetOutput {
    pub checks: Vec<Check>,
    pub seed_labels: Vec<String>,
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
}

/// Runs a named preset. With `out_dir` the CSVs, the report and
/// `manifest.toml` are written there.
pub fn run_preset(name: &str, overrides: &Overrides, seed: u64, out_dir: Option<&Path>) -> Result<RunManifest> {
    let mut manifest = RunManifest::empty(name, seed);
    let canonical = format!(
        "preset = {name:?}\nseed = {seed}\n{}",
        toml::to_string(overrides).map_err(|e| Error::Unsupported(e.to_string()))?
    );
    manifest.config_hash = sha256_hex(canonical.as_bytes());
    let out = presets::run(name, overrides, seed)?;
    manifest.checks = out.checks;
    manifest.seed_labels = out.seed_labels;
    let mut files = out.files;
    files.push((format!("{name}_checks.csv"), checks_csv(&manifest.checks)));
    for (file, contents) in &files {
        manifest.outputs.push(OutputFile {
            path: file.clone(),
            sha256: sha256_hex(contents.as_bytes()),
        });
    }
    manifest.finished_unix = now();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (file, contents) in &files {
            std::fs::write(dir.join(file), contents)?;
        }
        std::fs::write(dir.join(format!("{name}_report.txt")), emit_report(&manifest))?;
        std::fs::write(dir.join("manifest.toml"), manifest.to_toml()?)?;
    }
    Ok(manifest)
}

/// Runs the mixing experiment of a config on a body. Returns the report and a
/// manifest with one check per checkpoint.
pub fn run_mixing(config: &ExperimentConfig, body: &ConvexBody) -> Result<(MixingReport, RunManifest)> {
    let scheme = config.scheme.build()?;
    BoundParams::new(body.dim().max(2) as u64, body.declared_r(), config.m, config.eps)?;
    let opts = MixingOptions {
        m: config.m,
        threshold: config.eps,
        checkpoints: config.checkpoints.clone(),
        chains: config.chains,
        bins_per_axis: config.bins.unwrap_or_else(|| BinGrid::default_bins(config.chains, body.dim())),
        seed: config.seed,
        grid: None,
    };
    let report = mixing_time_empirical(&scheme, body, &opts)?;
    let mut manifest = RunManifest::empty("diagnose", config.seed);
    manifest.config_hash = config.hash()?;
    manifest.seed_labels.push("mixing".into());
    for (i, (c, e)) in report.checkpoints.iter().zip(&report.estimates).enumerate() {
        manifest.checks.push(Check {
            name: format!("tv-at-{c}"),
            tag: "estimate + ci < eps".into(),
            measured: e.value,
            bound: Some(config.eps),
            noise_floor: Some(e.noise_floor()),
            verdict: if report.passes(i) {
                Verdict::Pass
            } else if e.noise_floor() >= config.eps {
                Verdict::Inconclusive
            } else {
                Verdict::Fail
            },
            detail: format!("ci {}", fmt_num(e.ci_halfwidth)),
        });
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    manifest.outputs.push(OutputFile {
        path: "mixing.csv".into(),
        sha256: sha256_hex(&csv),
    });
    manifest.finished_unix = now();
    Ok((report, manifest))
}
