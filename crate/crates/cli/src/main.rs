//! `sparsetrig` command-line front end.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sparsetrig::experiments::{
    embedding_check, fit_rate, parse_m_list, rate_sweep, sampling_gap_experiment,
    verify_auxiliary_lemmas, EmbeddingTag, RateTask,
};
use sparsetrig::index::{enumerate_layer, write_index_set};
use sparsetrig::mterm::{fooling_a2a, greedy_mterm, layered_mterm, maurey_mterm};
use sparsetrig::poly::{norm, parse_coefficients, write_coefficients};
use sparsetrig::recovery::{recover_pipeline, RecoveryConfig, Solver};
use sparsetrig::{Error, Result, SpaceParams, SparseTrigPoly};

#[derive(Parser, Debug)]
#[command(name = "sparsetrig", version, about = "Sparse trigonometric approximation and sampling recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Params,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Print the frequencies of the layer H_n.
    Layers,
    /// Norm of a coefficient file (default f = 1).
    Norm,
    /// m-term approximation (greedy, maurey or layered).
    Mterm,
    /// Rate sweep over an m list, CSV output.
    Rates,
    /// Sampling recovery of a coefficient file.
    Recover,
    /// Random-polynomial embedding check.
    Embeddings,
    /// Numeric checks of the auxiliary inequalities.
    Lemmas,
    /// Linear vs nonlinear sampling comparison.
    Gap,
}

/// Run parameters. Every field may come from `--config` or a flag; flags win.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    /// Set in config files and sidecars; the subcommand decides on the command line.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    command: Option<Command>,
    /// Derived results appended to sidecars; ignored when replaying.
    #[arg(skip)]
    #[serde(default, skip_serializing)]
    results: Option<toml::Table>,
    /// TOML file with the same keys as the flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Layer level, sparsity, or largest scale depending on the command.
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Cube radius for recovery.
    #[arg(long = "M", global = true)]
    #[serde(rename = "M")]
    big_m: Option<u64>,
    /// Sample-budget constant.
    #[arg(long = "C", global = true)]
    #[serde(rename = "C")]
    big_c: Option<f64>,
    /// Term count, or a list: `64..16384` (dyadic) or `4,8,16`.
    #[arg(long, global = true)]
    m: Option<String>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Master seed (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, global = true)]
    seeds: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// omp or sqrt_lasso.
    #[arg(long, global = true)]
    solver: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    iters: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Largest enumeration or grid size.
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// wiener, wiener_plain, besov, sobolev or lebesgue.
    #[arg(long, global = true)]
    space: Option<String>,
    /// Coefficient file (`k1 k2 ... re im` per line).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// sigma-upper, sigma-lower, a2a or recovery.
    #[arg(long, global = true)]
    task: Option<String>,
    /// greedy, maurey or layered.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Embedding tag such as B-to-A-norm1.
    #[arg(long, global = true)]
    tag: Option<String>,
    /// Fixed log exponent for the rate fit.
    #[arg(long = "fit-b", global = true)]
    fit_b: Option<f64>,
    /// Record wall-clock time (reports are then not byte-reproducible).
    #[arg(long, global = true)]
    timing: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Params {
    fn overlay(mut self, top: &Params) -> Params {
        overlay!(self, top, d, r, theta, p, q, eta, n, big_m, big_c, m, trials, seed, seeds, jobs,
            out, solver, lambda, iters, tol, cap, space, input, task, method, tag, fit_b, timing);
        self
    }
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::InvalidParameter(format!("missing required flag --{flag}")))
}

impl Params {
    fn d(&self) -> Result<usize> {
        need(&self.d, "d")
    }
    fn r(&self) -> Result<f64> {
        need(&self.r, "r")
    }
    fn theta(&self) -> Result<f64> {
        need(&self.theta, "theta")
    }
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
    fn seed_list(&self) -> Vec<u64> {
        let s = self.seed();
        (0..self.seeds.unwrap_or(1).max(1)).map(|i| s + i).collect()
    }
    fn m_list(&self) -> Result<Vec<u64>> {
        parse_m_list(&need(&self.m, "m")?)
    }
    fn single_m(&self) -> Result<u64> {
        let list = self.m_list()?;
        match list[..] {
            [m] => Ok(m),
            _ => Err(Error::InvalidParameter("expected a single --m value".into())),
        }
    }
    fn solver(&self) -> Result<Solver> {
        match &self.solver {
            None => Ok(Solver::Omp),
            Some(s) => s.parse().map_err(Error::InvalidParameter),
        }
    }
    fn space(&self) -> Result<SpaceParams> {
        let name = self.space.clone().unwrap_or_else(|| "wiener".into());
        let sp = match name.as_str() {
            "wiener" => SpaceParams::WienerWeighted { r: self.r()?, theta: self.theta()? },
            "wiener_plain" | "wiener-plain" => SpaceParams::WienerPlain { eta: need(&self.eta, "eta")? },
            "besov" => SpaceParams::Besov { r: self.r()?, p: need(&self.p, "p")?, theta: self.theta()? },
            "sobolev" => SpaceParams::SobolevW { r: self.r()?, p: need(&self.p, "p")? },
            "lebesgue" => SpaceParams::Lebesgue { q: need(&self.q, "q")? },
            other => return Err(Error::InvalidParameter(format!("unknown space {other:?}"))),
        };
        sp.validate()?;
        Ok(sp)
    }
    fn input_poly(&self) -> Result<Option<SparseTrigPoly>> {
        match &self.input {
            None => Ok(None),
            Some(path) => {
                let f = parse_coefficients(&fs::read_to_string(path)?)?;
                if let Some(d) = self.d {
                    if d != f.dim() {
                        return Err(Error::DimensionMismatch { expected: d, found: f.dim() });
                    }
                }
                Ok(Some(f))
            }
        }
    }
    fn recovery_config(&self, n: usize, m_radius: u64) -> Result<RecoveryConfig> {
        let dflt = RecoveryConfig::default();
        let cfg = RecoveryConfig {
            n,
            m_radius,
            q: self.q.unwrap_or(dflt.q),
            c_budget: self.big_c.unwrap_or(dflt.c_budget),
            solver: self.solver()?,
            lambda: self.lambda,
            iters: self.iters.unwrap_or(dflt.iters),
            tol: self.tol.unwrap_or(dflt.tol),
            grid_cap: self.cap.unwrap_or(dflt.grid_cap),
            timing: self.timing.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Collected outputs; written after the computation finishes.
struct Output {
    stdout: String,
    /// `(suffix, contents)` files written next to `--out`.
    extra: Vec<(String, String)>,
    /// Extra sidecar sections.
    meta: String,
}

impl Output {
    fn text(stdout: String) -> Self {
        Output { stdout, extra: Vec::new(), meta: String::new() }
    }
}

fn cmd_layers(p: &Params) -> Result<Output> {
    let d = p.d()?;
    let n = u32::try_from(need(&p.n, "n")?)
        .map_err(|_| Error::InvalidParameter("n fits in 32 bits".into()))?;
    let ks = enumerate_layer(n, d, p.cap.unwrap_or(sparsetrig::index::DEFAULT_INDEX_CAP))?;
    let mut s = write_index_set(&ks);
    s.push_str(&format!("# count {}\n", ks.len()));
    Ok(Output::text(s))
}

fn cmd_norm(p: &Params) -> Result<Output> {
    let space = p.space()?;
    let f = match p.input_poly()? {
        Some(f) => f,
        None => SparseTrigPoly::constant(p.d.unwrap_or(1), 1.0.into()),
    };
    let v = norm(&f, &space, None)?;
    Ok(Output::text(format!("{v:.17e}\n")))
}

fn cmd_mterm(p: &Params) -> Result<Output> {
    let f = p
        .input_poly()?
        .ok_or_else(|| Error::InvalidParameter("mterm needs --input".into()))?;
    let m = p.single_m()?;
    let method = p.method.clone().unwrap_or_else(|| "greedy".into());
    let res = match method.as_str() {
        "greedy" => greedy_mterm(&f, m as usize, &p.space()?)?,
        "maurey" => maurey_mterm(&f, m as usize, p.q.unwrap_or(2.0), p.trials.unwrap_or(1), p.seed())?,
        "layered" => layered_mterm(
            &f,
            m,
            p.q.unwrap_or(2.0),
            p.r()?,
            p.theta()?,
            p.seed(),
            p.trials.unwrap_or(sparsetrig::mterm::DEFAULT_TRIALS),
        )?,
        other => return Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
    };
    Ok(Output {
        stdout: res.to_toml(),
        extra: vec![(".coeffs".into(), write_coefficients(&res.approximant))],
        meta: String::new(),
    })
}

fn rate_task(p: &Params) -> Result<RateTask> {
    let d = p.d()?;
    let r = p.r()?;
    let theta = p.theta()?;
    let name = need(&p.task, "task")?;
    Ok(match name.as_str() {
        "sigma-upper" => RateTask::SigmaUpper {
            d,
            r,
            theta,
            q: p.q.unwrap_or(2.0),
            trials: p.trials.unwrap_or(sparsetrig::experiments::SWEEP_TRIALS),
        },
        "sigma-lower" => RateTask::SigmaLower { d, r, theta },
        "a2a" => RateTask::A2a { d, r, theta, eta: need(&p.eta, "eta")? },
        "recovery" => RateTask::Recovery {
            d,
            r,
            theta,
            q: p.q.unwrap_or(2.0),
            c_budget: p.big_c.unwrap_or(2.0),
            solver: p.solver()?,
        },
        other => return Err(Error::InvalidParameter(format!("unknown task {other:?}"))),
    })
}

fn fit_meta(table: &sparsetrig::experiments::RateTable, b: Option<f64>) -> String {
    match fit_rate(table, b) {
        Ok(fit) => format!("\n[results.fit]\n{}", toml::to_string(&fit).expect("fit serializes")),
        Err(e) => format!("\n[results.fit]\nerror = {:?}\n", e.to_string()),
    }
}

fn cmd_rates(p: &Params) -> Result<Output> {
    let task = rate_task(p)?;
    let table = rate_sweep(&task, &p.m_list()?, &p.seed_list())?;
    Ok(Output { stdout: table.to_csv(), extra: Vec::new(), meta: fit_meta(&table, p.fit_b) })
}

fn cmd_recover(p: &Params) -> Result<Output> {
    let n = need(&p.n, "n")? as usize;
    let f = match p.input_poly()? {
        Some(f) => f,
        None => fooling_a2a(n, p.d()?, p.r()?, p.theta()?)?,
    };
    let cfg = p.recovery_config(n, need(&p.big_m, "M")?)?;
    let rep = recover_pipeline(&f, &cfg, p.seed())?;
    Ok(Output {
        stdout: rep.to_toml(),
        extra: vec![(".coeffs".into(), write_coefficients(&rep.approximant))],
        meta: String::new(),
    })
}

fn cmd_embeddings(p: &Params) -> Result<Output> {
    let tag: EmbeddingTag = need(&p.tag, "tag")?.parse().map_err(Error::InvalidParameter)?;
    let top = u32::try_from(p.n.unwrap_or(6))
        .map_err(|_| Error::InvalidParameter("n fits in 32 bits".into()))?;
    let rep = embedding_check(
        tag,
        p.d()?,
        p.r()?,
        need(&p.p, "p")?,
        p.theta.unwrap_or(2.0),
        p.trials.unwrap_or(100),
        0..=top,
        p.seed(),
    )?;
    Ok(Output::text(toml::to_string(&rep).expect("report serializes")))
}

fn cmd_lemmas(_: &Params) -> Result<Output> {
    let mut s = String::new();
    let mut failed = 0;
    for c in verify_auxiliary_lemmas()? {
        s.push_str(&format!(
            "{} {} cases={} worst={:.6e}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.cases,
            c.worst_margin
        ));
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Error::InvalidParameter(format!("{failed} lemma checks failed:\n{s}")));
    }
    Ok(Output::text(s))
}

fn cmd_gap(p: &Params) -> Result<Output> {
    let gap = sampling_gap_experiment(
        p.d()?,
        p.r()?,
        p.theta()?,
        &p.m_list()?,
        &p.seed_list(),
        p.big_c.unwrap_or(2.0),
    )?;
    Ok(Output {
        stdout: gap.ratio.to_csv(),
        extra: vec![
            (".linear.csv".into(), gap.linear.to_csv()),
            (".nonlinear.csv".into(), gap.nonlinear.to_csv()),
        ],
        meta: fit_meta(&gap.ratio, Some(p.fit_b.unwrap_or(0.0))),
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn execute(cli: Cli) -> Result<()> {
    let mut params = match &cli.flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let file: Params = toml::from_str(&text)
                .map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
            if file.command.is_some_and(|c| c != cli.command) {
                return Err(Error::InvalidParameter(format!(
                    "config is for {:?}, invoked {:?}",
                    file.command.unwrap(),
                    cli.command
                )));
            }
            file.overlay(&cli.flags)
        }
        None => cli.flags.clone(),
    };
    params.results.take();
    params.command = Some(cli.command);
    params.seed = Some(params.seed());
    params.config = None;
    if let Some(j) = params.jobs {
        if j == 0 {
            return Err(Error::InvalidParameter("jobs >= 1 violated".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let out = match cli.command {
        Command::Layers => cmd_layers(&params)?,
        Command::Norm => cmd_norm(&params)?,
        Command::Mterm => cmd_mterm(&params)?,
        Command::Rates => cmd_rates(&params)?,
        Command::Recover => cmd_recover(&params)?,
        Command::Embeddings => cmd_embeddings(&params)?,
        Command::Lemmas => cmd_lemmas(&params)?,
        Command::Gap => cmd_gap(&params)?,
    };
    match &params.out {
        None => {
            std::io::stdout().write_all(out.stdout.as_bytes())?;
        }
        Some(path) => {
            fs::write(path, &out.stdout)?;
            for (suffix, text) in &out.extra {
                fs::write(with_suffix(path, suffix), text)?;
            }
            let mut meta = toml::to_string(&params).expect("config serializes");
            meta.push_str(&out.meta);
            fs::write(with_suffix(path, ".meta.toml"), meta)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ErrorRecord {
    error: ErrorBody,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let rec = ErrorRecord { error: ErrorBody { kind: e.kind(), message: e.to_string() } };
            eprint!("{}", toml::to_string(&rec).expect("record serializes"));
            ExitCode::from(1)
        }
    }
}
