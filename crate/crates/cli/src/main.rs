use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use coordwalk::bounds::{bounds_table, sigma_for, BoundParams, Constants};
use coordwalk::conductance::{discretize_chr, discretize_gaussian, s_conductance, SConductanceMode};
use coordwalk::diagnostics::Verdict;
use coordwalk::harness::{emit_report, load_body_spec, run_mixing, run_preset, ExperimentConfig, Overrides, SchemeConfig, PRESETS};
use coordwalk::schemes::{run_chains, write_trajectories_csv, ChainStart, WarmStart};
use coordwalk::ConvexBody;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "coordwalk", version, about = "Coordinate Hit-and-Run and the checks of its mixing analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run chains on a body and write their states as CSV.
    Sample(SampleArgs),
    /// Estimate TV to uniform at checkpoints, from an M-warm start.
    Diagnose(DiagnoseArgs),
    /// s-conductance of a discretized chain.
    Conductance(ConductanceArgs),
    /// Print every bound calculator at the given parameters.
    Bound(BoundArgs),
    /// Run a verification preset, or `all` of them.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct SchemeArgs {
    #[arg(long, value_enum, default_value = "chr")]
    scheme: SchemeName,
    /// Gaussian step size, for `--scheme gauss`.
    #[arg(long)]
    sigma: Option<f64>,
    /// Gaussian steps per transition.
    #[arg(long)]
    tau: Option<usize>,
}

impl SchemeArgs {
    fn config(&self) -> SchemeConfig {
        SchemeConfig {
            name: self.scheme.as_str().into(),
            sigma: self.sigma,
            tau: self.tau,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeName {
    Chr,
    Hnr,
    Gauss,
}

impl SchemeName {
    fn as_str(self) -> &'static str {
        match self {
            SchemeName::Chr => "chr",
            SchemeName::Hnr => "hnr",
            SchemeName::Gauss => "gauss",
        }
    }
}

#[derive(clap::Args)]
struct SampleArgs {
    #[arg(long)]
    body: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Start every chain here (comma-separated); otherwise from an M-warm start.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
    #[arg(long = "M", default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long)]
    steps: usize,
    /// Record every k-th state only.
    #[arg(long)]
    thinning: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DiagnoseArgs {
    #[arg(long)]
    body: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long = "M", default_value_t = 4.0)]
    m: f64,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    chains: usize,
    /// Step counts, e.g. `1e2,1e3,1e4`.
    #[arg(long, value_delimiter = ',', value_parser = parse_count, default_value = "1e2,1e3")]
    checkpoints: Vec<usize>,
    /// Bins per axis; chosen from the chain count when absent.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChainKind {
    Chr,
    Gauss,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Sweep,
}

#[derive(clap::Args)]
struct ConductanceArgs {
    #[arg(long)]
    body: PathBuf,
    /// Grid cells per axis.
    #[arg(long)]
    cells: usize,
    #[arg(long)]
    s: f64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "chr")]
    chain: ChainKind,
    #[arg(long)]
    sigma: Option<f64>,
    /// Random subsets tried on top of the sweep cuts.
    #[arg(long, default_value_t = 1000)]
    subsets: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BoundArgs {
    #[arg(long)]
    n: u64,
    #[arg(long = "R", default_value_t = 1.0)]
    r: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    m: f64,
    #[arg(long)]
    eps: f64,
    /// Defaults to eps/(2M).
    #[arg(long)]
    s: Option<f64>,
    /// Defaults to s/(100 n ln n).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "C-main")]
    c_main: Option<f64>,
    #[arg(long = "c-cond")]
    c_cond: Option<f64>,
    #[arg(long = "c-flow")]
    c_flow: Option<f64>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// A preset name or `all`.
    preset: String,
    #[arg(long)]
    seed: u64,
    /// `key=value` for one preset; `preset.key=value` with `all`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for CSVs, reports and manifests.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_count(s: &str) -> Result<usize, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(format!("`{s}` is not a step count"));
    }
    Ok(v as usize)
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load(path: &Path) -> anyhow::Result<ConvexBody> {
    let loaded = load_body_spec(path).with_context(|| format!("loading {}", path.display()))?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.body)
}

fn exit(v: Verdict) -> ExitCode {
    ExitCode::from(match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 2,
    })
}

fn sample(a: SampleArgs) -> anyhow::Result<ExitCode> {
    let body = load(&a.body)?;
    let scheme = a.scheme.config().build()?;
    let start = match a.start {
        Some(p) => ChainStart::Point(p),
        None => ChainStart::Warm(WarmStart::new(&body, a.m)?),
    };
    let runs = run_chains(&scheme, &body, &start, a.chains, a.steps, a.seed, "sample", a.thinning)?;
    let mut w = output(a.out.as_deref())?;
    write_trajectories_csv(&mut w, &runs)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn diagnose(a: DiagnoseArgs) -> anyhow::Result<ExitCode> {
    let config = ExperimentConfig {
        body: a.body.clone(),
        scheme: a.scheme.config(),
        m: a.m,
        eps: a.eps,
        chains: a.chains,
        checkpoints: a.checkpoints,
        bins: a.bins,
        seed: a.seed,
        output_dir: a.out.clone().unwrap_or_default(),
        constants: Constants::default(),
    };
    config.validate()?;
    let body = load(&a.body)?;
    let (report, manifest) = run_mixing(&config, &body)?;
    let mut w = output(a.out.as_deref())?;
    report.write_csv(&mut w)?;
    w.flush()?;
    // the run passes once some checkpoint is below eps
    let verdict = if report.reached.is_some() {
        Verdict::Pass
    } else {
        manifest.checks.last().map_or(Verdict::Fail, |c| c.verdict)
    };
    Ok(exit(verdict))
}

fn conductance(a: ConductanceArgs) -> anyhow::Result<ExitCode> {
    let body = load(&a.body)?;
    let chain = match a.chain {
        ChainKind::Chr => discretize_chr(&body, a.cells)?,
        ChainKind::Gauss => {
            let Some(sigma) = a.sigma else { bail!("--sigma is required for --chain gauss") };
            discretize_gaussian(&body, a.cells, sigma)?
        }
    };
    let mode = match a.mode {
        Mode::Exact => SConductanceMode::Exact,
        Mode::Sweep => SConductanceMode::Sweep {
            random_subsets: a.subsets,
            seed: a.seed,
        },
    };
    let res = s_conductance(&chain, a.s, mode)?;
    let mut w = output(a.out.as_deref())?;
    res.write_csv(&mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn bound(a: BoundArgs) -> anyhow::Result<ExitCode> {
    let mut p = BoundParams::new(a.n, a.r, a.m, a.eps)?;
    if let Some(s) = a.s {
        p.s = s;
        p.sigma = sigma_for(s, a.n);
    }
    if let Some(sigma) = a.sigma {
        p.sigma = sigma;
    }
    let pinned = a.c_main.is_some() || a.c_cond.is_some() || a.c_flow.is_some();
    p.constants = Constants {
        c_main: a.c_main.unwrap_or(1.0),
        c_cond: a.c_cond.unwrap_or(1.0),
        c_flow: a.c_flow.unwrap_or(1.0),
    };
    p.validate()?;
    let rows = bounds_table(&p, pinned)?;
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = std::io::stdout().lock();
    writeln!(out, "n = {}, R = {}, M = {}, eps = {}, s = {}, sigma = {:e}", p.n, p.r, p.m, p.eps, p.s, p.sigma)?;
    for r in rows {
        let note = if r.shape_only { "  (shape-only)" } else { "" };
        writeln!(out, "{:<width$}  {:>14.6e}  {}{note}", r.name, r.value, r.formula)?;
        writeln!(out, "{:<width$}  {}", "", r.description)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_sets(sets: &[String], presets: &[&str]) -> anyhow::Result<Vec<Overrides>> {
    let mut out = vec![Overrides::new(); presets.len()];
    for s in sets {
        let Some((key, value)) = s.split_once('=') else { bail!("--set expects KEY=VALUE, got `{s}`") };
        let value: f64 = value.trim().parse().with_context(|| format!("value of `{key}`"))?;
        let (target, key) = match key.split_once('.') {
            Some((p, k)) => (Some(p), k),
            None => (None, key),
        };
        let i = match target {
            Some(p) => presets.iter().position(|q| *q == p).with_context(|| format!("`{p}` is not being run"))?,
            None if presets.len() == 1 => 0,
            None => bail!("with `all`, write --set {}", "<preset>.<key>=<value>"),
        };
        out[i].insert(key.trim().to_string(), value);
    }
    Ok(out)
}

fn verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let presets: Vec<&str> = if a.preset == "all" {
        PRESETS.to_vec()
    } else {
        vec![a.preset.as_str()]
    };
    let sets = parse_sets(&a.set, &presets)?;
    let mut worst = Verdict::Pass;
    for (name, ov) in presets.iter().zip(&sets) {
        let dir = match &a.out {
            Some(d) if presets.len() > 1 => Some(d.join(name)),
            other => other.clone(),
        };
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        let manifest = run_preset(name, ov, a.seed, dir.as_deref())?;
        print!("{}", emit_report(&manifest));
        worst = worst.max(manifest.verdict());
    }
    Ok(exit(worst))
}

fn main() -> ExitCode {
    // exit code 2 means inconclusive, so usage errors get 3 instead of clap's 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::Sample(a) => sample(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Conductance(a) => conductance(a),
        Command::Bound(a) => bound(a),
        Command::Verify(a) => verify(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
