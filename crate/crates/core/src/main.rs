use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nobn_core::bench::{case_id, run_bench, BenchConfig, BenchRow, CSV_HEADER};
use nobn_core::eml::{epsilon_ml, Subproblem};
use nobn_core::engine::{format_accepted, top_epsilon_with, EpsilonSchedule, SearchOptions};
use nobn_core::error::Error;
use nobn_core::exact::{exact_inference, DEFAULT_FREE_NODE_CAP};
use nobn_core::model::{
    format_probability, parse_evidence, parse_network, print_network, prune_barren, Evidence, Network,
};
use nobn_core::netgen::{format_case, gen_network, make_case, NetShape};

#[derive(Parser)]
#[command(
    name = "nobn",
    version,
    about = "Top-epsilon inference for multi-level noisy-OR networks"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a network, then print its size.
    Validate { net: PathBuf },
    /// Exact inference by enumerating every consistent instantiation.
    Exact {
        net: PathBuf,
        evidence: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FREE_NODE_CAP)]
        cap: usize,
    },
    /// One extension step on a two-level network: every assignment of the
    /// findings' parents with product >= epsilon.
    Eml {
        net: PathBuf,
        evidence: PathBuf,
        #[arg(long)]
        epsilon: f64,
    },
    /// Top-epsilon search, one CSV row per threshold.
    Infer(InferArgs),
    /// Sample cases from a network and run a schedule on each.
    Bench(BenchArgs),
    /// Generate a network and sampled cases.
    Gen(GenArgs),
}

#[derive(Args)]
struct InferArgs {
    net: PathBuf,
    evidence: PathBuf,
    #[arg(long, conflicts_with = "schedule")]
    epsilon: Option<f64>,
    /// Comma-separated, strictly decreasing; defaults to 1e-2,...,1e-20.
    #[arg(long)]
    schedule: Option<String>,
    /// Write the instantiations accepted by the last run here.
    #[arg(long)]
    dump_accepted: Option<PathBuf>,
    /// Fill the gold columns from the exact oracle.
    #[arg(long)]
    gold: bool,
    #[arg(long, default_value_t = DEFAULT_FREE_NODE_CAP)]
    cap: usize,
    /// Nodes kept through barren pruning, comma-separated.
    #[arg(long, value_delimiter = ',')]
    query: Vec<String>,
    /// Posterior file; defaults to the evidence path with extension `.post`.
    #[arg(long)]
    post: Option<PathBuf>,
    #[arg(long)]
    max_states: Option<u64>,
    /// Write 0 in the elapsed_ms column.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BenchArgs {
    net: PathBuf,
    #[arg(long, default_value_t = 12)]
    cases: usize,
    #[arg(long, default_value_t = 26)]
    findings: usize,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = DEFAULT_FREE_NODE_CAP)]
    cap: usize,
    /// Threshold of the deep reference run used when the oracle is out of
    /// reach.
    #[arg(long, default_value_t = 1e-30)]
    gold_epsilon: f64,
    /// Per-run state budget; a run over budget ends its case's schedule.
    #[arg(long)]
    max_states: Option<u64>,
    #[arg(long)]
    no_timing: bool,
    /// Write the convergence summary and states table here instead of
    /// standard error.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 3/10/15/20/97 nodes, q in [0.2, 0.95], leaks in [0, 0.05].
    Default,
    /// Same layout with near-deterministic links.
    Bn3,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "default")]
    preset: Preset,
    /// Nodes per level, shallowest first, e.g. 3,10,15,20,97.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long)]
    max_parents: Option<usize>,
    #[arg(long)]
    parent_locality: Option<f64>,
    #[arg(long, value_parser = parse_range)]
    prior_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range)]
    q_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range)]
    leak_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range)]
    hidden_leak_range: Option<(f64, f64)>,
    #[arg(long, default_value_t = 0)]
    cases: usize,
    #[arg(long, default_value_t = 26)]
    findings: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((p(lo)?, p(hi)?))
}

enum Failure {
    Input(String),
    Resource(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e.kind() {
            Error::FreeNodeCapExceeded { .. } | Error::StateBudgetExceeded { .. } => Failure::Resource(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Network, Failure> {
    parse_network(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_evidence(net: &Network, path: &Path) -> Result<Evidence, Failure> {
    parse_evidence(net, &read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn level_word(levels: usize) -> String {
    const WORDS: [&str; 10] = [
        "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    match WORDS.get(levels.wrapping_sub(1)) {
        Some(w) => w.to_string(),
        None => levels.to_string(),
    }
}

fn validate(path: &Path) -> Outcome {
    let net = load(path)?;
    let levels = net.max_level() + 1;
    println!("{} nodes, {} arcs, {} levels", net.len(), net.arc_count(), levels);
    println!("max_level {}", net.max_level());
    println!("{}-level network", level_word(levels));
    Ok(())
}

fn exact(net: &Path, evidence: &Path, cap: usize) -> Outcome {
    let net = load(net)?;
    let ev = load_evidence(&net, evidence)?;
    let r = exact_inference(&net, &ev, cap)?;
    println!("evidence_probability {}", format_probability(r.evidence_probability));
    println!("instantiations {}", r.instantiation_count);
    for id in 0..net.len() {
        if ev.state_of(id).is_none() {
            println!("posterior {} {}", net.name(id), format_probability(r.posteriors[id]));
        }
    }
    Ok(())
}

fn eml(net: &Path, evidence: &Path, epsilon: f64) -> Outcome {
    let net = load(net)?;
    if net.max_level() != 1 {
        return Err(Failure::Input(format!(
            "eml needs a two-level network, this one has {} levels",
            net.max_level() + 1
        )));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon(epsilon).into());
    }
    let ev = load_evidence(&net, evidence)?;
    let mut known = vec![None; net.len()];
    for &(id, s) in ev.items() {
        known[id] = Some(s);
    }
    let findings: Vec<_> = ev
        .items()
        .iter()
        .copied()
        .filter(|&(id, _)| net.level(id) == 1)
        .collect();
    let sub = Subproblem::new(&net, findings, &known);
    let extensions = epsilon_ml(&net, &sub, epsilon);
    println!("free parents {}", sub.free_parents.len());
    for ext in &extensions {
        let text: Vec<String> = ext
            .parent_states
            .iter()
            .map(|&(id, s)| format!("{}={}", net.name(id), s.tag()))
            .collect();
        println!("{} {}", format_probability(ext.new_factor_product), text.join(" "));
    }
    println!("extensions {}", extensions.len());
    Ok(())
}

fn infer(args: InferArgs) -> Outcome {
    let net = load(&args.net)?;
    let ev = load_evidence(&net, &args.evidence)?;
    let schedule = match (args.epsilon, &args.schedule) {
        (Some(e), _) => EpsilonSchedule::new(vec![e])?,
        (None, Some(text)) => EpsilonSchedule::parse(text)?,
        (None, None) => EpsilonSchedule::default(),
    };
    let query = args
        .query
        .iter()
        .map(|name| {
            net.id(name)
                .ok_or_else(|| Failure::Input(format!("unknown query node `{name}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pruned = prune_barren(&net, &ev, &query);
    let pev = pruned.map_evidence(&ev)?;
    let small = &pruned.network;

    let gold = if args.gold {
        match exact_inference(small, &pev, args.cap) {
            Ok(r) => Some(r.evidence_probability),
            Err(Error::ImpossibleEvidence) => Some(0.0),
            Err(e @ Error::FreeNodeCapExceeded { .. }) => {
                eprintln!("warning: {e}; gold columns left empty");
                None
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };

    let options = SearchOptions {
        keep_accepted: args.dump_accepted.is_some(),
        max_states: args.max_states,
        ..SearchOptions::default()
    };
    let mut csv = format!("{CSV_HEADER}\n");
    let mut last = None;
    for &epsilon in schedule.values() {
        let start = Instant::now();
        let r = top_epsilon_with(small, &pev, epsilon, options)?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let row = BenchRow {
            case_id: args
                .evidence
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            epsilon,
            states_explored: r.states_explored,
            accepted_count: r.accepted_count,
            mass_accumulated: r.mass_accumulated,
            gold_mass: gold,
            mass_fraction: gold.filter(|&g| g > 0.0).map(|g| r.mass_accumulated / g),
            elapsed_ms: (!args.no_timing).then_some(elapsed),
        };
        csv.push_str(&row.to_csv());
        csv.push('\n');
        last = Some(r);
    }
    print!("{csv}");

    let mut post = String::new();
    if let Some(r) = &last {
        match r.posterior_estimates() {
            Some(estimates) => {
                for (id, p) in estimates.iter().enumerate() {
                    post.push_str(&format!("{},{}\n", small.name(id), format_probability(*p)));
                }
            }
            None => eprintln!("warning: nothing accepted; the evidence may be impossible or epsilon too large"),
        }
        if let Some(path) = &args.dump_accepted {
            write(path, &format_accepted(small, r.accepted.as_deref().unwrap_or(&[])))?;
        }
    }
    let post_path = args.post.unwrap_or_else(|| args.evidence.with_extension("post"));
    write(&post_path, &post)
}

fn bench(args: BenchArgs, seed: u64) -> Outcome {
    let net = load(&args.net)?;
    let config = BenchConfig {
        cases: args.cases,
        findings: args.findings,
        seed,
        schedule: match &args.schedule {
            Some(text) => EpsilonSchedule::parse(text)?,
            None => EpsilonSchedule::default(),
        },
        jobs: args.jobs,
        free_node_cap: args.cap,
        gold_epsilon: args.gold_epsilon,
        max_states: args.max_states,
        timing: !args.no_timing,
    };
    if !(config.gold_epsilon.is_finite() && config.gold_epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon(config.gold_epsilon).into());
    }
    let report = run_bench(&net, &config)?;
    print!("{}", report.to_csv());
    match &args.summary {
        Some(path) => write(path, &report.summary())?,
        None => eprint!("{}", report.summary()),
    }
    for c in report.cases.iter().filter(|c| c.truncated_at.is_some()) {
        eprintln!(
            "warning: {} stopped at {:e}: over the state budget",
            c.case_id,
            c.truncated_at.unwrap()
        );
    }
    Ok(())
}

fn gen(args: GenArgs, seed: u64) -> Outcome {
    let mut shape = match args.preset {
        Preset::Default => NetShape {
            seed,
            ..NetShape::default()
        },
        Preset::Bn3 => NetShape::bn3(seed),
    };
    if let Some(v) = args.levels {
        shape.nodes_per_level = v;
    }
    if let Some(v) = args.max_parents {
        shape.max_parents = v;
    }
    if let Some(v) = args.parent_locality {
        shape.parent_locality = v;
    }
    if let Some(v) = args.prior_range {
        shape.prior_range = v;
    }
    if let Some(v) = args.q_range {
        shape.q_range = v;
    }
    if let Some(v) = args.leak_range {
        shape.leak_range = v;
    }
    if let Some(v) = args.hidden_leak_range {
        shape.hidden_leak_range = v;
    }
    let net = gen_network(&shape)?;
    fs::create_dir_all(&args.out).map_err(|e| Failure::Input(format!("{}: {e}", args.out.display())))?;
    write(&args.out.join("network.net"), &print_network(&net))?;
    for i in 0..args.cases {
        let id = case_id(i);
        let case = make_case(&net, seed + i as u64, args.findings)?.with_id(id.clone());
        write(&args.out.join(format!("{id}.case")), &format_case(&net, &case))?;
    }
    println!("{} nodes, {} cases in {}", net.len(), args.cases, args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Validate { net } => validate(&net),
        Command::Exact { net, evidence, cap } => exact(&net, &evidence, cap),
        Command::Eml { net, evidence, epsilon } => eml(&net, &evidence, epsilon),
        Command::Infer(args) => infer(args),
        Command::Bench(args) => bench(args, cli.seed),
        Command::Gen(args) => gen(args, cli.seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
