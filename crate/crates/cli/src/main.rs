//! `ptoh`: enumerate, search, denoise and learn on parallel Tower of Hanoi
//! instances.
//!
//! Failures print `{"error":{"kind":…,"message":…}}` on stderr and exit with
//! status 1 (2 for malformed command lines).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use ptoh::cluster::{cluster_id, Grading};
use ptoh::config::{
    all_configurations, enumerate_neighbors, parse_config, parse_sequence, transition_graph,
};
use ptoh::oracle::{random_walk, DEFAULT_VERTEX_CAP};
use ptoh::rl::{train, ActionSpace, LearnConfig, Scalar};
use ptoh::{denoise, Configuration, HanoiError, Measure, Oracle, PuzzleParams, StateGraph};

#[derive(Parser)]
#[command(name = "ptoh", version, about = "Parallel Tower of Hanoi toolkit")]
struct Cli {
    /// Vertex cap for exhaustive searches [env: HANOI_VERTEX_CAP, default 1000000]
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Worker threads for graph construction
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Shape {
    #[arg(long)]
    t: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Count the configurations, optionally listing them in code order
    Enumerate {
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        list: bool,
    },
    /// List the neighbors of a configuration with the disks moved per step
    Neighbors {
        #[arg(long)]
        p: usize,
        /// Configuration in text form, e.g. "0 1; 2 3"
        config: String,
    },
    /// Least transfers (or steps) between two configurations
    Dist {
        #[arg(long)]
        p: usize,
        from: String,
        to: String,
        #[arg(long, value_enum, default_value_t = MeasureArg::Transfer)]
        measure: MeasureArg,
        /// Stay inside the shared cluster of this uniform grading level
        #[arg(long, value_name = "G")]
        within_cluster: Option<usize>,
    },
    /// Denoise a sequence file ("-" reads stdin)
    Denoise {
        #[arg(long)]
        p: usize,
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Write the rewrite log as JSON lines
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Seeded random walk written as a sequence file
    RandomWalk {
        #[command(flatten)]
        shape: Shape,
        /// Start configuration; defaults to the lowest code
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        stay: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Export the state graph
    ExportDot {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Tabular Q-learning; prints the learning curve as CSV
    Qlearn(QlearnArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Transfer,
    Steps,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Dot,
    Jsonl,
}

#[derive(Clone, Copy, Debug, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, Debug, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum ActionArg {
    SingleDisk,
    FullParallel,
}

/// Flat JSON document; every key doubles as a flag.
#[derive(Args, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QlearnArgs {
    /// JSON file with any of the options below
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    #[serde(skip)]
    output: Option<PathBuf>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Defaults to the tower on post 0 (single tower only)
    #[arg(long)]
    start: Option<String>,
    /// Defaults to the tower on post 1 (single tower only)
    #[arg(long)]
    goal: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    step_cap: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    discount: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    epsilon_decay: Option<f64>,
    #[arg(long)]
    epsilon_min: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    denoise: Option<bool>,
    #[arg(long, value_enum)]
    action_space: Option<ActionArg>,
    #[arg(long)]
    random_starts: Option<bool>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
    /// Record wall-clock seconds in the time_s column
    #[arg(long)]
    timing: Option<bool>,
}

impl QlearnArgs {
    fn overlay(self, base: QlearnArgs) -> QlearnArgs {
        macro_rules! pick {
            ($($f:ident),*) => { QlearnArgs { config: self.config, output: self.output, $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            t,
            n,
            p,
            start,
            goal,
            episodes,
            step_cap,
            learning_rate,
            discount,
            epsilon,
            epsilon_decay,
            epsilon_min,
            seed,
            denoise,
            action_space,
            random_starts,
            precision,
            timing
        )
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let message = rendered
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            fail("Usage", &message);
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            fail(e.kind(), &e.message());
            ExitCode::from(1)
        }
    }
}

fn fail(kind: &str, message: &str) {
    let body = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{body}");
}

enum CliError {
    Hanoi(HanoiError),
    Io(String),
    Config(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Hanoi(e) => e.kind(),
            CliError::Io(_) => "IoError",
            CliError::Config(_) => "InvalidConfig",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Hanoi(e) => e.to_string(),
            CliError::Io(m) | CliError::Config(m) => m.clone(),
        }
    }
}

impl From<HanoiError> for CliError {
    fn from(e: HanoiError) -> Self {
        CliError::Hanoi(e)
    }
}

type Outcome<T = ()> = Result<T, CliError>;

fn vertex_cap(flag: Option<u64>) -> Outcome<u64> {
    if let Some(cap) = flag {
        return Ok(cap);
    }
    match std::env::var("HANOI_VERTEX_CAP") {
        Ok(raw) => raw.trim().parse().map_err(|_| {
            CliError::Config(format!("HANOI_VERTEX_CAP={raw:?} is not a vertex count"))
        }),
        Err(_) => Ok(DEFAULT_VERTEX_CAP),
    }
}

fn check_params(params: PuzzleParams) {
    if !params.is_standard_regime() {
        eprintln!("warning: {params} has p < t + 2; the state graph may be disconnected");
    }
}

fn params_of(shape: Shape) -> Outcome<PuzzleParams> {
    let params = PuzzleParams::new(shape.t, shape.n, shape.p)?;
    check_params(params);
    Ok(params)
}

fn config_arg(text: &str, p: usize) -> Outcome<Configuration> {
    let config = parse_config(text, p)?;
    check_params(config.params());
    Ok(config)
}

fn read_input(path: &Path) -> Outcome<String> {
    if path == Path::new("-") {
        return io::read_to_string(io::stdin()).map_err(|e| CliError::Io(format!("stdin: {e}")));
    }
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cap = vertex_cap(cli.cap)?;
    match cli.command {
        Command::Enumerate { shape, list } => {
            let params = params_of(shape)?;
            let states = params.state_count();
            let mut out = format!("{states}\n");
            if list {
                if states > cap {
                    return Err(HanoiError::CapExceeded {
                        states: states as u128,
                        cap,
                    }
                    .into());
                }
                for config in all_configurations(params) {
                    out.push_str(&format!("{config}\n"));
                }
            }
            emit(None, &out)
        }
        Command::Neighbors { p, config } => {
            let a = config_arg(&config, p)?;
            let mut out = String::new();
            for b in enumerate_neighbors(&a) {
                let tgec = transition_graph(&a, &b)?.tgec();
                out.push_str(&format!("{b}\t{tgec}\n"));
            }
            emit(None, &out)
        }
        Command::Dist {
            p,
            from,
            to,
            measure,
            within_cluster,
        } => {
            let a = config_arg(&from, p)?;
            let b = config_arg(&to, p)?;
            if a.params() != b.params() {
                return Err(HanoiError::ParamsMismatch.into());
            }
            let oracle = Oracle::new(a.params(), cap)?;
            let measure = match measure {
                MeasureArg::Transfer => Measure::Transfers,
                MeasureArg::Steps => Measure::Steps,
            };
            let d = match within_cluster {
                None => oracle.distance_restricted(&a, &b, measure, &|_| true)?,
                Some(g) => {
                    let cluster = cluster_id(&a, &Grading::uniform(a.params().towers(), g))?;
                    if !cluster.contains(&b) {
                        return Err(HanoiError::NotMember.into());
                    }
                    oracle.distance_restricted(&a, &b, measure, &|c| cluster.contains(c))?
                }
            };
            emit(
                None,
                &d.map_or("unreachable\n".to_string(), |d| format!("{d}\n")),
            )
        }
        Command::Denoise {
            p,
            input,
            output,
            report,
        } => {
            let seq = parse_sequence(&read_input(&input)?, p)?;
            check_params(seq.params());
            let (clean, log) = denoise(&seq)?;
            if let Some(path) = report {
                emit(Some(&path), &log.to_json_lines())?;
            }
            let mut out = format!(
                "# transfers {} -> {}, configurations {} -> {}, rewrites {}\n",
                log.initial_transfer_length,
                log.final_transfer_length,
                log.initial_sequence_length,
                log.final_sequence_length,
                log.rewrites.len()
            );
            out.push_str(&ptoh::config::format_sequence(&clean));
            emit(output.as_deref(), &out)
        }
        Command::RandomWalk {
            shape,
            start,
            length,
            seed,
            stay,
            output,
        } => {
            let params = params_of(shape)?;
            let start = match start {
                Some(text) => {
                    let config = parse_config(&text, params.posts())?;
                    if config.params() != params {
                        return Err(HanoiError::ParamsMismatch.into());
                    }
                    config
                }
                None => Configuration::from_code(params, 0)?,
            };
            let walk = random_walk(&start, length, seed, stay)?;
            let mut out = format!("# random walk, {params}, seed {seed}\n");
            out.push_str(&ptoh::config::format_sequence(&walk));
            emit(output.as_deref(), &out)
        }
        Command::ExportDot {
            shape,
            format,
            output,
        } => {
            let params = params_of(shape)?;
            let graph = StateGraph::build(params, cap)?;
            let text = match format {
                GraphFormat::Dot => graph.to_dot(),
                GraphFormat::Jsonl => graph.adjacency_json_lines(),
            };
            emit(output.as_deref(), &text)
        }
        Command::Qlearn(args) => qlearn(args, cap),
    }
}

fn qlearn(args: QlearnArgs, cap: u64) -> Outcome {
    let args = match &args.config {
        Some(path) => {
            let text = read_input(path)?;
            let base: QlearnArgs = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            args.overlay(base)
        }
        None => args,
    };
    match args.precision.unwrap_or(Precision::F64) {
        Precision::F32 => qlearn_as::<f32>(&args, cap),
        Precision::F64 => qlearn_as::<f64>(&args, cap),
    }
}

fn qlearn_as<F: Scalar>(args: &QlearnArgs, cap: u64) -> Outcome {
    let (t, n, p) = (
        args.t.unwrap_or(1),
        args.n.unwrap_or(3),
        args.p.unwrap_or(3),
    );
    let params = PuzzleParams::new(t, n, p)?;
    check_params(params);
    let endpoint = |text: &Option<String>, post: usize, name: &str| -> Outcome<Configuration> {
        let config = match text {
            Some(text) => parse_config(text, p)?,
            None if t == 1 => Configuration::tower(params, post)?,
            None => return Err(CliError::Config(format!("{name} is required when t > 1"))),
        };
        if config.params() != params {
            return Err(HanoiError::ParamsMismatch.into());
        }
        Ok(config)
    };
    let start = endpoint(&args.start, 0, "start")?;
    let goal = endpoint(&args.goal, 1, "goal")?;
    let scalar = |x: f64| F::from_f64(x).expect("finite");
    let mut config = LearnConfig::<F>::new(start, goal);
    config.vertex_cap = cap;
    if let Some(v) = args.episodes {
        config.episodes = v;
    }
    if let Some(v) = args.step_cap {
        config.step_cap = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = scalar(v);
    }
    if let Some(v) = args.discount {
        config.discount = scalar(v);
    }
    if let Some(v) = args.epsilon {
        config.exploration.initial = scalar(v);
    }
    if let Some(v) = args.epsilon_decay {
        config.exploration.decay = scalar(v);
    }
    if let Some(v) = args.epsilon_min {
        config.exploration.floor = scalar(v);
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.denoise {
        config.denoise = v;
    }
    if let Some(v) = args.action_space {
        config.action_space = match v {
            ActionArg::SingleDisk => ActionSpace::SingleDisk,
            ActionArg::FullParallel => ActionSpace::FullParallel,
        };
    }
    if let Some(v) = args.random_starts {
        config.random_starts = v;
    }
    config.record_time = args.timing.unwrap_or(false);
    let curve = train(&config)?;
    emit(args.output.as_deref(), &curve.to_csv())
}
