//! `iaas-compose`: generate workloads, rank and compose request sets, manage
//! the policy library and run benchmark grids.
//!
//! Exit status: 0 on success, 2 for usage errors, 3 for invalid input and 4
//! for runtime failures.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iaas_core::compose::{learn, CompositionProblem, LearnParams, ORACLE_CAP};
use iaas_core::harness::{
    rows_from_csv, run_bench, run_composer, summarize, summary_to_csv, ComposerKind, GroupKey,
    RunConfig,
};
use iaas_core::library::{
    greedy_reuse, reuse_compose, similar_entries, Library, LibraryEntry, Linkage, ReuseParams,
    LIBRARY_ENV,
};
use iaas_core::preference::synth::ModelSpec;
use iaas_core::request::{generate_workload, Distribution, WorkloadSpec};
use iaas_core::{Error, IndexedTempCpNet, RequestSet, TempCpNet};

use output::{write_out, CompositionReport, Format};

#[derive(Parser)]
#[command(
    name = "iaas-compose",
    version,
    about = "Qualitative composition of long-term IaaS requests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic request set.
    Gen(GenArgs),
    /// Rank a selection of requests under a model.
    Rank(RankArgs),
    /// Run one composer on one request set.
    Compose(ComposeArgs),
    /// Learn a policy and store it in the library.
    Learn(LearnArgs),
    /// Compose by reusing similar library policies.
    Reuse(ReuseArgs),
    /// Run a benchmark grid and write one CSV row per run.
    Bench(BenchArgs),
    /// Summarize a benchmark CSV.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for every random choice of the command.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model document; a synthetic desk model is generated when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Seed of the synthetic model.
    #[arg(long, default_value_t = 1)]
    model_seed: u64,
    /// Semantic levels per attribute of the synthetic model.
    #[arg(long, default_value_t = 4)]
    levels: usize,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Request-set file; a workload is generated when absent.
    #[arg(long)]
    requests: Option<PathBuf>,
    #[arg(long, value_parser = parse_distribution, default_value = "normal")]
    distribution: Distribution,
    #[arg(long, default_value_t = 10)]
    count: usize,
}

#[derive(Args, Clone)]
struct LearnFlags {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Episode cap; 500 per interval by default.
    #[arg(long)]
    episodes: Option<usize>,
}

impl LearnFlags {
    fn params(&self, seed: u64) -> LearnParams {
        LearnParams {
            alpha: self.alpha,
            gamma: self.gamma,
            episodes: self.episodes,
            seed,
            ..LearnParams::default()
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_distribution, default_value = "normal")]
    distribution: Distribution,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Workload spec document; overrides distribution and count.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated request ids; every request when absent.
    #[arg(long, value_delimiter = ',')]
    select: Option<Vec<String>>,
}

#[derive(Args)]
struct ComposeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = parse_composer, default_value = "q3d_on")]
    composer: ComposerKind,
    #[command(flatten)]
    learn: LearnFlags,
    /// Largest request count for the exact composers.
    #[arg(long, default_value_t = ORACLE_CAP)]
    cap: usize,
    /// Report wall-clock time; output is then no longer reproducible.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct LibraryArgs {
    /// Library directory.
    #[arg(long, env = LIBRARY_ENV)]
    library: PathBuf,
    #[arg(long, value_enum, default_value_t = LinkageArg::Slink)]
    linkage: LinkageArg,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    library: LibraryArgs,
    #[arg(long, value_parser = parse_composer, default_value = "q3d_on")]
    composer: ComposerKind,
    #[command(flatten)]
    learn: LearnFlags,
}

#[derive(Args)]
struct ReuseArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    library: LibraryArgs,
    #[command(flatten)]
    learn: LearnFlags,
    /// Minimum similarity score of a reusable entry.
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    /// Minimum per-request similarity of mapped requests.
    #[arg(long, default_value_t = 0.8)]
    mapping_threshold: f64,
    /// Probability of following a past policy while exploring.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 50)]
    extra_episodes: usize,
    /// Replay the best entry's visit order greedily instead of learning.
    #[arg(long)]
    greedy: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Run-config document; the grid flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model documents; synthetic models otherwise.
    #[arg(long, value_delimiter = ',')]
    models: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    model_seeds: Vec<u64>,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_distribution, default_value = "normal")]
    distributions: Vec<Distribution>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    sizes: Vec<usize>,
    /// Number of seeds, counted up from `--seed`.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_composer, default_value = "q3d_on")]
    composers: Vec<ComposerKind>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, default_value_t = ORACLE_CAP)]
    cap: usize,
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Benchmark CSV to summarize.
    #[arg(long)]
    input: PathBuf,
    /// Grouping columns.
    #[arg(
        long,
        value_delimiter = ',',
        value_enum,
        default_value = "distribution,n,composer,alpha"
    )]
    by: Vec<GroupArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkageArg {
    Slink,
    Clink,
    Upgma,
}

impl From<LinkageArg> for Linkage {
    fn from(l: LinkageArg) -> Self {
        match l {
            LinkageArg::Slink => Linkage::Slink,
            LinkageArg::Clink => Linkage::Clink,
            LinkageArg::Upgma => Linkage::Upgma,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Distribution,
    N,
    Composer,
    Alpha,
}

impl From<GroupArg> for GroupKey {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Distribution => GroupKey::Distribution,
            GroupArg::N => GroupKey::Size,
            GroupArg::Composer => GroupKey::Composer,
            GroupArg::Alpha => GroupKey::Alpha,
        }
    }
}

fn parse_distribution(s: &str) -> Result<Distribution, String> {
    Distribution::parse(s).ok_or_else(|| format!("unknown distribution `{s}`"))
}

fn parse_composer(s: &str) -> Result<ComposerKind, String> {
    ComposerKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = ComposerKind::ALL.iter().map(|k| k.as_str()).collect();
        format!(
            "unknown composer `{s}` (expected one of {})",
            names.join(", ")
        )
    })
}

/// Exit status for a failed command: 3 for bad input, 4 otherwise.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::CorruptEntry { .. } | Error::Cyclic | Error::EmptyIndex => 4,
        Error::ActionSpace { .. } | Error::TooManyCandidates { .. } => 4,
        Error::InfeasibleAction(_) | Error::UndefinedCorrelation(_) | Error::TooFewPoints(_) => 4,
        _ => 3,
    }
}

fn load_model(args: &ModelArgs) -> Result<IndexedTempCpNet, Error> {
    let model = match &args.model {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            TempCpNet::parse(&text)?
        }
        None => {
            if args.levels < 2 {
                return Err(Error::Config(
                    "a synthetic model needs at least two levels".into(),
                ));
            }
            ModelSpec::desk(args.levels).generate(args.model_seed)
        }
    };
    IndexedTempCpNet::build(model)
}

fn load_requests(args: &InputArgs, net: &IndexedTempCpNet, seed: u64) -> Result<RequestSet, Error> {
    match &args.requests {
        Some(path) => RequestSet::read(path),
        None => generate_workload(
            &WorkloadSpec::desk(args.distribution, args.count, seed)
                .with_horizon(net.model().horizon().1),
        ),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen(a) => {
            let spec = match &a.spec {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    let mut spec = WorkloadSpec::from_toml(&text)?;
                    spec.seed = a.common.seed;
                    spec
                }
                None => WorkloadSpec::desk(a.distribution, a.count, a.common.seed),
            };
            let set = generate_workload(&spec)?;
            let text = match a.common.format {
                Format::Text => set.to_tsv(),
                Format::Csv => output::requests_csv(&set),
                Format::Json => output::json(&set),
            };
            write_out(a.common.out.as_deref(), &text)
        }
        Command::Rank(a) => {
            let net = load_model(&a.model)?;
            let set = load_requests(&a.input, &net, a.common.seed)?;
            let selection: Vec<usize> = match &a.select {
                None => (0..set.len()).collect(),
                Some(ids) => ids
                    .iter()
                    .map(|id| {
                        set.position(id)
                            .ok_or_else(|| Error::Config(format!("unknown request id `{id}`")))
                    })
                    .collect::<Result<_, _>>()?,
            };
            let segmented = set.segment_all(net.model())?;
            let refs: Vec<_> = selection.iter().map(|&i| &segmented[i]).collect();
            let locals: Vec<Option<u32>> = (0..net.interval_count())
                .map(|k| net.rank_aggregate(k, &net.interval_aggregate(k, &refs)))
                .collect();
            let total = net.global_rank(&refs);
            let ids: Vec<&str> = selection
                .iter()
                .map(|&i| set.requests()[i].id.as_str())
                .collect();
            write_out(
                a.common.out.as_deref(),
                &output::rank(a.common.format, &ids, &locals, total),
            )
        }
        Command::Compose(a) => {
            let net = load_model(&a.model)?;
            let set = load_requests(&a.input, &net, a.common.seed)?;
            let problem = CompositionProblem::new(&net, &set)?;
            let params = a.learn.params(a.common.seed);
            let started = Instant::now();
            let composition = run_composer(&problem, a.composer, &params, a.cap)?;
            let wall = started.elapsed().as_secs_f64() * 1e3;
            let report = CompositionReport::new(
                a.composer.as_str(),
                &problem,
                &composition,
                a.timing.then_some(wall),
            );
            write_out(a.common.out.as_deref(), &report.render(a.common.format))
        }
        Command::Learn(a) => {
            let learner = a.composer.learner().ok_or_else(|| {
                Error::Config(format!("`{}` is not a learning composer", a.composer))
            })?;
            let net = load_model(&a.model)?;
            let set = load_requests(&a.input, &net, a.common.seed)?;
            let problem = CompositionProblem::new(&net, &set)?;
            let (composition, cube) =
                learn(&problem, learner, &a.learn.params(a.common.seed), None)?;
            let mut library = Library::load(&a.library.library)?;
            library.insert(LibraryEntry::new(
                &problem,
                &composition,
                &cube,
                a.library.linkage.into(),
            )?);
            library.store(&a.library.library)?;
            let report = CompositionReport::new(a.composer.as_str(), &problem, &composition, None);
            write_out(a.common.out.as_deref(), &report.render(a.common.format))
        }
        Command::Reuse(a) => {
            let net = load_model(&a.model)?;
            let set = load_requests(&a.input, &net, a.common.seed)?;
            let problem = CompositionProblem::new(&net, &set)?;
            let library = Library::load(&a.library.library)?;
            let reuse = ReuseParams {
                similarity_threshold: a.threshold,
                mapping_threshold: a.mapping_threshold,
                mu: a.mu,
                extra_episodes: a.extra_episodes,
                linkage: a.library.linkage.into(),
            };
            let params = a.learn.params(a.common.seed);
            let (name, composition) = if a.greedy {
                reuse.validate()?;
                let matches = similar_entries(&library, &problem, &reuse);
                let best = matches
                    .first()
                    .ok_or_else(|| Error::Config("no similar library entry to replay".into()))?;
                (
                    "greedy_reuse",
                    greedy_reuse(&library.entries()[best.entry], &problem),
                )
            } else {
                (
                    "reuse",
                    reuse_compose(&library, &problem, &reuse, &params)?.composition,
                )
            };
            let report = CompositionReport::new(name, &problem, &composition, None);
            write_out(a.common.out.as_deref(), &report.render(a.common.format))
        }
        Command::Bench(a) => {
            let config = match &a.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    RunConfig::from_toml(&text)?
                }
                None => RunConfig {
                    models: a.models.clone(),
                    model_levels: a.levels,
                    model_seeds: a.model_seeds.clone(),
                    distributions: a.distributions.clone(),
                    sizes: a.sizes.clone(),
                    seeds: (a.common.seed..a.common.seed + a.runs).collect(),
                    composers: a.composers.clone(),
                    alphas: a.alphas.clone(),
                    gamma: a.gamma,
                    episodes: a.episodes,
                    oracle_cap: a.cap,
                    timing: a.timing,
                },
            };
            let report = run_bench(&config)?;
            let text = match a.common.format {
                Format::Json => output::json(&report.rows),
                Format::Text => {
                    let keys = [
                        GroupKey::Distribution,
                        GroupKey::Size,
                        GroupKey::Composer,
                        GroupKey::Alpha,
                    ];
                    output::csv_as_table(&summary_to_csv(&keys, &summarize(&report.rows, &keys)))
                }
                Format::Csv => report.to_csv(),
            };
            write_out(a.common.out.as_deref(), &text)
        }
        Command::Report(a) => {
            let text = std::fs::read_to_string(&a.input).map_err(|e| Error::Io {
                path: a.input.clone(),
                source: e,
            })?;
            let rows = rows_from_csv(&text)?;
            let keys: Vec<GroupKey> = a.by.iter().map(|&g| g.into()).collect();
            let csv = summary_to_csv(&keys, &summarize(&rows, &keys));
            let text = match a.common.format {
                Format::Csv => csv,
                Format::Text => output::csv_as_table(&csv),
                Format::Json => output::json(&output::csv_records(&csv)),
            };
            write_out(a.common.out.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
