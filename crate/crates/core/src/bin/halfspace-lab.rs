use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use halfspace_lab::experiment::report::{json_line, render, Field, Record};
use halfspace_lab::experiment::{
    evaluate, parse_hypothesis, scan_grid, simulate, verify_labels, verify_lemma_suite, DistinguisherResult,
    ExperimentConfig, Format, GridSpec, Problem, Resolved,
};
use halfspace_lab::format::{
    read_examples, read_sidecar, write_sidecar, DataReader, DataWriter, FileKind, HypothesisKind, SampleKind, Sidecar,
    sidecar_path,
};
use halfspace_lab::metrics::{tally, EstimateWithCI, DEFAULT_CONFIDENCE};
use halfspace_lab::oracle::QuadratureSpec;
use halfspace_lab::reduction::{BinarizeBlocks, DEFAULT_BLOCK};
use halfspace_lab::rng::chunk_ranges;
use halfspace_lab::sampler::{
    continuous_chunk, discrete_chunk, draw_discrete_secret, draw_secret, ContinuousLweParams, DiscreteLweParams,
    Hypothesis, Secret,
};
use halfspace_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "halfspace-lab", version, about = "cLWE sampling, binarization and halfspace-learning diagnostics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Base seed for every random stream; overrides a config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    /// Output path; stdout when omitted (required by `gen`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Continuous,
    Discrete,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Metric {
    Agreement,
    Reliable,
    Unfairness,
    Band,
}

#[derive(Subcommand)]
enum Command {
    /// Draw LWE samples into a binary data file plus JSON sidecar.
    Gen(GenArgs),
    /// Binarize a sample file, in place or into --out.
    Reduce {
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate metrics of a direction on a data file.
    Eval(EvalArgs),
    /// Run the bound-verification suite; exits nonzero on any failed verdict.
    VerifyLemmas {
        /// Restrict to these suite labels.
        #[arg(long = "only")]
        only: Vec<String>,
    },
    /// Run the distinguisher on a config, or a grid scan.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "continuous")]
    kind: Kind,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    sigma: f64,
    /// Modulus T of the continuous sampler.
    #[arg(long, default_value_t = 0.1)]
    period: f64,
    /// Modulus q of the discrete sampler.
    #[arg(long, default_value_t = 3329)]
    q: u64,
    #[arg(long, default_value = "alternative")]
    hypothesis: String,
    /// Record the planted secret in the sidecar (needed for `eval --u secret`).
    #[arg(long)]
    store_secret: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    /// Path to a vector (JSON array or whitespace/comma separated), or "secret".
    #[arg(long)]
    u: String,
    #[arg(long, value_enum, required = true)]
    metric: Vec<Metric>,
    /// Band index for the band metric.
    #[arg(long, default_value_t = 0)]
    k: u32,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, required_unless_present = "scan")]
    config: Option<PathBuf>,
    /// All problems when omitted.
    #[arg(long)]
    problem: Option<String>,
    /// Both hypotheses when omitted.
    #[arg(long)]
    hypothesis: Option<String>,
    /// Grid file; runs a scan instead of a single config.
    #[arg(long, requires = "problem")]
    scan: Option<PathBuf>,
    /// Extra half-widths the estimate must clear before deciding "alternative".
    #[arg(long, default_value_t = 0.0)]
    margin_scale: f64,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Chunks generated concurrently before being written in order.
const WRITE_BATCH: usize = 64;

fn gen(g: &Global, a: &GenArgs) -> Result<bool> {
    let out = g.out.as_deref().ok_or_else(|| Error::InvalidArgument("gen needs --out".into()))?;
    let hyp_kind = parse_hypothesis(&a.hypothesis)?;
    let seed = g.seed.unwrap_or(0);
    let alt = hyp_kind == HypothesisKind::Alternative;
    let (sink_period, secret_record, sidecar_kind, q);
    type Rows = Vec<(Vec<f64>, f64)>;
    type ChunkFn<'a> = Box<dyn Fn(u64, usize) -> Result<Rows> + Sync + 'a>;
    let producer: ChunkFn;
    match a.kind {
        Kind::Continuous => {
            let params = ContinuousLweParams {
                d: a.d,
                m: a.m,
                sigma: a.sigma,
                period: a.period,
            };
            params.validate()?;
            let hyp = if alt {
                Hypothesis::Alternative(Secret::Sphere(draw_secret(a.d, seed)?))
            } else {
                Hypothesis::Null
            };
            secret_record = match &hyp {
                Hypothesis::Alternative(Secret::Sphere(s)) => Some(s.clone()),
                _ => None,
            };
            sink_period = a.period;
            sidecar_kind = SampleKind::Continuous;
            q = None;
            producer = Box::new(move |c, len| {
                let mut rows = Vec::with_capacity(len);
                continuous_chunk(&params, &hyp, seed, c, len, |x, y| rows.push((x.to_vec(), y)))?;
                Ok(rows)
            });
        }
        Kind::Discrete => {
            let params = DiscreteLweParams {
                d: a.d,
                m: a.m,
                q: a.q,
                sigma: a.sigma,
            };
            params.validate()?;
            let hyp = if alt {
                Hypothesis::Alternative(Secret::Residues(draw_discrete_secret(a.d, a.q, seed)?))
            } else {
                Hypothesis::Null
            };
            secret_record = match &hyp {
                Hypothesis::Alternative(Secret::Residues(s)) => Some(s.iter().map(|&v| v as f64).collect()),
                _ => None,
            };
            sink_period = a.q as f64;
            sidecar_kind = SampleKind::Discrete;
            q = Some(a.q);
            producer = Box::new(move |c, len| {
                let mut rows = Vec::with_capacity(len);
                discrete_chunk(&params, &hyp, seed, c, len, |x, y| rows.push((x.to_vec(), y)))?;
                Ok(rows)
            });
        }
    }
    let mut w = DataWriter::create(out, FileKind::Samples, a.d, sink_period)?;
    let chunks: Vec<_> = chunk_ranges(a.m).collect();
    for batch in chunks.chunks(WRITE_BATCH) {
        let parts: Vec<Result<Rows>> = batch.par_iter().map(|(c, r)| producer(*c, r.len())).collect();
        for part in parts {
            for (x, y) in part? {
                w.push_sample(&x, y)?;
            }
        }
    }
    w.finish()?;
    write_sidecar(
        out,
        &Sidecar {
            kind: sidecar_kind,
            d: a.d,
            m: a.m,
            period: sink_period,
            sigma: a.sigma,
            q,
            hypothesis: hyp_kind,
            seed,
            binarized: false,
            secret: secret_record.filter(|_| a.store_secret),
        },
    )?;
    Ok(true)
}

fn reduce(g: &Global, input: &Path) -> Result<bool> {
    let reader = DataReader::open(input)?;
    let header = reader.header;
    let target = g.out.clone().unwrap_or_else(|| input.to_path_buf());
    let in_place = g.out.is_none();
    let staging = if in_place {
        let mut s = input.as_os_str().to_owned();
        s.push(".tmp");
        PathBuf::from(s)
    } else {
        target.clone()
    };
    let result = (|| {
        let mut w = DataWriter::create(&staging, FileKind::Examples, header.d as usize, header.period)?;
        for block in BinarizeBlocks::new(reader.samples()?, header.period, DEFAULT_BLOCK)? {
            for e in block? {
                w.push_example(&e.x, e.y)?;
            }
        }
        w.finish()
    })();
    if let Err(e) = result {
        if in_place {
            let _ = std::fs::remove_file(&staging);
        }
        return Err(e);
    }
    if in_place {
        std::fs::rename(&staging, &target).map_err(|e| Error::io(&target, e))?;
    }
    if sidecar_path(input).exists() {
        let mut side = read_sidecar(input)?;
        side.binarized = true;
        write_sidecar(&target, &side)?;
    }
    Ok(true)
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        });
    }
    trimmed
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|e| Error::Format {
                path: path.to_path_buf(),
                reason: format!("{t:?}: {e}"),
            })
        })
        .collect()
}

struct MetricRecord {
    metric: &'static str,
    k: Option<u32>,
    estimate: EstimateWithCI,
}

impl Record for MetricRecord {
    fn columns() -> Vec<String> {
        ["metric", "k", "value", "halfWidth", "n", "confidence"].map(String::from).to_vec()
    }

    fn fields(&self) -> Vec<(String, Field)> {
        vec![
            ("metric".into(), Field::Text(self.metric.into())),
            ("k".into(), self.k.map_or(Field::Text(String::new()), |k| Field::Int(k.into()))),
            ("value".into(), Field::Num(self.estimate.value)),
            ("halfWidth".into(), Field::Num(self.estimate.half_width)),
            ("n".into(), Field::Int(self.estimate.n)),
            ("confidence".into(), Field::Num(self.estimate.confidence)),
        ]
    }
}

fn eval(g: &Global, a: &EvalArgs) -> Result<bool> {
    let u = if a.u == "secret" {
        read_sidecar(&a.input)?
            .secret
            .ok_or_else(|| Error::InvalidArgument("data has no recorded secret; pass --u <file>".into()))?
    } else {
        read_vector(Path::new(&a.u))?
    };
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs().is_nan() || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("u has norm {norm}, expected a unit vector")));
    }
    let (header, examples) = read_examples(&a.input)?;
    let band_threshold = f64::from(a.k) * header.period;
    let t = tally(&examples, &u, band_threshold)?;
    let c = g.confidence;
    let records = a
        .metric
        .iter()
        .map(|m| {
            Ok(match m {
                Metric::Agreement => MetricRecord { metric: "agreement", k: None, estimate: t.agreement(c)? },
                Metric::Reliable => MetricRecord { metric: "reliable", k: None, estimate: t.positive_reliable(c)? },
                Metric::Unfairness => MetricRecord { metric: "unfairness", k: None, estimate: t.unfairness(c)? },
                Metric::Band => MetricRecord { metric: "band", k: Some(a.k), estimate: t.band_joint(c)? },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match g.format.map(Format::from) {
        None => records.iter().map(|r| json_line(r) + "\n").collect(),
        Some(f) => render(&records, f),
    };
    emit(&text, g.out.as_deref())?;
    Ok(true)
}

fn verify(g: &Global, only: &[String]) -> Result<bool> {
    let spec = QuadratureSpec::<f64>::default();
    let reports = if only.is_empty() {
        verify_lemma_suite(&spec)
    } else {
        let labels: Vec<&str> = only.iter().map(String::as_str).collect();
        verify_labels(&spec, &labels)
    };
    if reports.is_empty() {
        return Err(Error::InvalidArgument(format!("no suite matches {only:?}")));
    }
    emit(&render(&reports, g.format.map_or(Format::Csv, Format::from)), g.out.as_deref())?;
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", reports.len());
    }
    Ok(failed == 0)
}

fn experiment(g: &Global, a: &ExperimentArgs) -> Result<bool> {
    let problems = match &a.problem {
        Some(p) => vec![Problem::parse(p)?],
        None => Problem::ALL.to_vec(),
    };
    if let Some(scan) = &a.scan {
        let mut grid: GridSpec = read_json(scan)?;
        grid.confidence = g.confidence;
        if let Some(seed) = g.seed {
            grid.seed = seed;
        }
        let rows = scan_grid(&grid, problems[0]);
        emit(&render(&rows, g.format.map_or(Format::Csv, Format::from)), g.out.as_deref())?;
        return Ok(rows.iter().all(|r| r.outcome.is_ok()));
    }
    let path = a.config.as_deref().expect("clap requires --config without --scan");
    let mut config: ExperimentConfig = read_json(path)?;
    config.confidence = g.confidence;
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    let hyps = match &a.hypothesis {
        Some(h) => vec![parse_hypothesis(h)?],
        None => vec![HypothesisKind::Alternative, HypothesisKind::Null],
    };
    let mut results: Vec<DistinguisherResult> = Vec::new();
    for &h in &hyps {
        // Problems that resolve to the same m share one simulation.
        let mut cache: Vec<(Resolved, Vec<DistinguisherResult>)> = Vec::new();
        for &p in &problems {
            let r = config.resolve(p)?;
            if !cache.iter().any(|(c, _)| *c == r) {
                let sim = simulate(&r, h, 0.0)?;
                cache.push((r, evaluate(&r, &sim, h, a.margin_scale)?));
            }
            let (_, all) = cache.iter().find(|(c, _)| *c == r).expect("just inserted");
            results.extend(all.iter().filter(|res| res.problem == p).cloned());
        }
    }
    emit(&render(&results, g.format.map_or(Format::Json, Format::from)), g.out.as_deref())?;
    Ok(results.iter().all(|r| r.decision == r.hypothesis))
}

fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    if !(g.confidence > 0.0 && g.confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence {} must lie in (0, 1)", g.confidence)));
    }
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Gen(a) => gen(g, a),
        Command::Reduce { input } => reduce(g, input),
        Command::Eval(a) => eval(g, a),
        Command::VerifyLemmas { only } => verify(g, only),
        Command::Experiment(a) => experiment(g, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
