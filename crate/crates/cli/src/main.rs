//! `folim`: Stone pairings, sequence analysis, tree statistics and
//! tree-depth from the command line.

mod input;

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use folim::equiv::{dist_p, ef_equivalent, TypeTable};
use folim::eval::{has_extension_property, stone_pairing, stone_pairing_sampled};
use folim::folang::parse;
use folim::interp::{builtin_schemes, td_decompose, tree_depth, TdMode};
use folim::json::{parse_rational, statistic_to_json, structure_to_json, tree_to_json};
use folim::seqan::{
    ball_statistics, clip, comb_decompose, fmtp_check, spectrum, trajectory, Spectrum,
};
use folim::structure::ColorCoding;
use folim::treelim::{build_approx, build_tree, statistic_of_tree};
use folim::{EncodeTuple, Formula, RootedTree, Signature, Structure};

use input::{parse_tuple, usage_error, Classify, CliError, CliResult, Inputs, Kind};

/// Version of the `--json` envelope.
const JSON_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "folim",
    version,
    about = "Stone pairings and limits of finite structures"
)]
struct Cli {
    /// Wrap the result in a versioned JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampled commands.
    #[arg(long, global = true, env = "FOLIM_SEED", default_value_t = 0)]
    seed: u64,
    /// Include wall time in the JSON report (output is then not reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArg {
    /// Edge list, or structure JSON if the name ends in `.json`.
    #[arg(long)]
    graph: PathBuf,
    /// Vertex colors for an edge list, one integer per line.
    #[arg(long)]
    colors: Option<PathBuf>,
}

#[derive(Args)]
struct SequenceArg {
    /// Structures of the sequence, in order.
    #[arg(long = "graph", required = true)]
    graphs: Vec<PathBuf>,
}

#[derive(Args)]
struct LimitArg {
    /// Limit spectrum as comma separated rationals; defaults to the
    /// spectrum of the last structure.
    #[arg(long)]
    limit: Option<String>,
}

#[derive(Args)]
struct PairArgs {
    /// First structure.
    #[arg(long)]
    a: PathBuf,
    /// Second structure.
    #[arg(long)]
    b: PathBuf,
    /// Distinguished tuple of the first structure.
    #[arg(long, default_value = "")]
    a_tuple: String,
    /// Distinguished tuple of the second structure.
    #[arg(long, default_value = "")]
    b_tuple: String,
    /// Number of rounds.
    #[arg(long)]
    rounds: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Bound,
}

impl From<Mode> for TdMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => TdMode::Exact,
            Mode::Bound => TdMode::Bound,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Stone pairing of a formula with a structure.
    Pair {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        formula: String,
        /// Number of free variable slots; defaults to the largest free index.
        #[arg(long)]
        arity: Option<usize>,
        /// Estimate by sampling this many tuples instead of counting.
        #[arg(long)]
        samples: Option<u64>,
        /// Failure probability of the sampled confidence radius.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
    /// Pairings of several formulas along a sequence, as CSV.
    Traj {
        #[command(flatten)]
        seq: SequenceArg,
        #[arg(long = "formula", required = true)]
        formulas: Vec<String>,
    },
    /// Component masses in non-increasing order.
    Spectrum {
        #[command(flatten)]
        graph: GraphArg,
    },
    /// Clip values of a sequence against a limit spectrum.
    Clip {
        #[command(flatten)]
        seq: SequenceArg,
        #[command(flatten)]
        limit: LimitArg,
    },
    /// Component columns and residues of a sequence.
    Comb {
        #[command(flatten)]
        seq: SequenceArg,
        #[command(flatten)]
        limit: LimitArg,
        /// Quantifier rank of the statistics used for matching.
        #[arg(long, default_value_t = 1)]
        rank: usize,
    },
    /// Frequencies of rooted ball types.
    Balls {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        radius: usize,
    },
    /// Tree statistic of a rooted tree.
    Stat {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        rank: usize,
    },
    /// Finite tree realising a tree statistic.
    BuildTree {
        #[arg(long)]
        stat: PathBuf,
        #[arg(long)]
        target: usize,
    },
    /// Finite tree approximating a tree statistic through heavy branches.
    BuildApprox {
        #[arg(long)]
        stat: PathBuf,
        #[arg(long)]
        target: usize,
        /// Arity of the formulas to approximate.
        #[arg(long, default_value_t = 1)]
        arity: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Mass transport check of a tree statistic; exits 3 on violations.
    Fmtp {
        #[arg(long)]
        stat: PathBuf,
    },
    /// Ehrenfeucht-Fraisse equivalence.
    Ef(PairArgs),
    /// Elementary distance, `2^-r` for the least distinguishing rank.
    Dist(PairArgs),
    /// Tree-depth with a certificate forest.
    Td {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
    },
    /// Colored tree whose closure scheme recovers the graph.
    TdDecompose {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        height: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
    },
    /// Apply an interpretation scheme and translate formulas.
    Interp {
        /// Scheme JSON file.
        #[arg(long, conflicts_with = "builtin")]
        scheme: Option<PathBuf>,
        /// Built-in scheme: I_YtoF, I_FtoY, I_RtoP or I_t.
        #[arg(long)]
        builtin: Option<String>,
        /// Color count of the built-in tree schemes.
        #[arg(long, default_value_t = 0)]
        scheme_colors: usize,
        /// Height parameter of I_t.
        #[arg(long, default_value_t = 1)]
        t: usize,
        /// Structure to interpret.
        #[arg(long, conflicts_with = "tree")]
        graph: Option<PathBuf>,
        /// Rooted tree JSON to interpret; colors are written as bits for
        /// I_t and as one relation per color otherwise.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        colors: Option<PathBuf>,
        /// Target formula to translate back to the source signature.
        #[arg(long)]
        formula: Option<String>,
    },
    /// Exhaustive check of the k-extension property.
    ExtProp {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Parse a formula and print its normal form and measures.
    Parse {
        #[arg(long)]
        formula: String,
        /// Number of color relations C1..Cc besides adj.
        #[arg(long, default_value_t = 0)]
        color_count: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Pair { .. } => "pair",
            Command::Traj { .. } => "traj",
            Command::Spectrum { .. } => "spectrum",
            Command::Clip { .. } => "clip",
            Command::Comb { .. } => "comb",
            Command::Balls { .. } => "balls",
            Command::Stat { .. } => "stat",
            Command::BuildTree { .. } => "build-tree",
            Command::BuildApprox { .. } => "build-approx",
            Command::Fmtp { .. } => "fmtp",
            Command::Ef(_) => "ef",
            Command::Dist(_) => "dist",
            Command::Td { .. } => "td",
            Command::TdDecompose { .. } => "td-decompose",
            Command::Interp { .. } => "interp",
            Command::ExtProp { .. } => "ext-prop",
            Command::Parse { .. } => "parse",
        }
    }
}

/// Result of a subcommand in both output forms.
struct Outcome {
    text: String,
    json: Value,
    /// Ran to completion but found a violated precondition.
    failed: bool,
}

impl Outcome {
    fn new(text: impl Into<String>, json: Value) -> Self {
        Self {
            text: text.into(),
            json,
            failed: false,
        }
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    version: u32,
    command: &'a str,
    argv: Vec<String>,
    inputs_digest: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
    result: &'a Value,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serialisable")
}

fn parse_formula(text: &str, sig: &Signature) -> CliResult<Formula> {
    parse(text, sig).input()
}

fn load_sequence(inputs: &mut Inputs, seq: &SequenceArg) -> CliResult<Vec<Structure>> {
    seq.graphs
        .iter()
        .map(|p| inputs.structure(p, None))
        .collect()
}

fn limit_spectrum(limit: &LimitArg, seq: &[Structure]) -> CliResult<Spectrum> {
    match &limit.limit {
        Some(text) => {
            let masses = text
                .split(',')
                .map(|t| parse_rational(t.trim()))
                .collect::<Result<Vec<_>, _>>()
                .input()?;
            Spectrum::from_masses(masses).input()
        }
        None => spectrum(seq.last().expect("at least one structure")).pre(),
    }
}

fn tree_outcome(tree: &RootedTree, extra: Value) -> Outcome {
    let tj = serde_json::to_value(tree_to_json(tree)).expect("serialisable");
    let mut json = json!({ "tree": tj });
    if let (Value::Object(m), Value::Object(e)) = (&mut json, extra) {
        m.extend(e);
    }
    Outcome::new(pretty(&tj), json)
}

fn run(cmd: &Command, seed: u64, inputs: &mut Inputs) -> CliResult<Outcome> {
    Ok(match cmd {
        Command::Pair {
            graph,
            formula,
            arity,
            samples,
            delta,
        } => {
            let s = inputs.structure(&graph.graph, graph.colors.as_deref())?;
            let phi = parse_formula(formula, s.signature())?;
            let p = arity.unwrap_or_else(|| phi.rank());
            match samples {
                Some(samples) => {
                    let e = stone_pairing_sampled(&s, &phi, p, *samples, *delta, seed).pre()?;
                    Outcome::new(
                        format!("estimate={} radius={}", e.estimate, e.radius),
                        json!({
                            "estimate": e.estimate,
                            "radius": e.radius,
                            "hits": e.hits,
                            "samples": e.samples,
                            "delta": e.delta,
                            "arity": p,
                        }),
                    )
                }
                None => {
                    let v = stone_pairing(&s, &phi, p).pre()?;
                    Outcome::new(v.to_string(), json!({ "value": v.to_string(), "arity": p }))
                }
            }
        }
        Command::Traj { seq, formulas } => {
            let structures = load_sequence(inputs, seq)?;
            let sig = structures[0].signature().clone();
            let parsed = formulas
                .iter()
                .map(|f| {
                    parse_formula(f, &sig).map(|phi| {
                        let p = phi.rank();
                        (phi, p)
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            let t = trajectory(&structures, &parsed).pre()?;
            let mut text = String::from("index,size");
            for f in formulas {
                text.push(',');
                text.push_str(&csv_field(f));
            }
            let mut rows = Vec::new();
            for (n, row) in t.values.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                text.push_str(&format!(
                    "\n{n},{},{}",
                    structures[n].size(),
                    cells.join(",")
                ));
                rows.push(json!({ "size": structures[n].size(), "values": cells }));
            }
            Outcome::new(text, json!({ "formulas": formulas, "rows": rows }))
        }
        Command::Spectrum { graph } => {
            let s = inputs.structure(&graph.graph, graph.colors.as_deref())?;
            let sp = spectrum(&s).pre()?;
            let masses: Vec<String> = sp.masses().iter().map(|m| m.to_string()).collect();
            let mut text = String::from("index,mass");
            for (i, m) in masses.iter().enumerate() {
                text.push_str(&format!("\n{i},{m}"));
            }
            Outcome::new(text, json!({ "masses": masses }))
        }
        Command::Clip { seq, limit } => {
            let structures = load_sequence(inputs, seq)?;
            let limit = limit_spectrum(limit, &structures)?;
            let spectra = structures
                .iter()
                .map(spectrum)
                .collect::<Result<Vec<_>, _>>()
                .pre()?;
            let clips = clip(&spectra, &limit).pre()?;
            let mut text = String::from("index,clip");
            for (n, c) in clips.iter().enumerate() {
                text.push_str(&format!("\n{n},{c}"));
            }
            Outcome::new(text, json!({ "clip": clips }))
        }
        Command::Comb { seq, limit, rank } => {
            let structures = load_sequence(inputs, seq)?;
            let limit = limit_spectrum(limit, &structures)?;
            let comb = comb_decompose(&structures, *rank, &limit).pre()?;
            let join = |vs: &[usize]| {
                vs.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let mut text = String::from("structure,column,vertices");
            for n in 0..structures.len() {
                for (i, col) in comb.columns.iter().enumerate() {
                    if let Some(vs) = &col[n] {
                        text.push_str(&format!("\n{n},{i},{}", join(vs)));
                    }
                }
                text.push_str(&format!("\n{n},residue,{}", join(&comb.residues[n])));
            }
            Outcome::new(
                text,
                json!({
                    "clip": comb.clip,
                    "columns": comb.columns,
                    "residues": comb.residues,
                }),
            )
        }
        Command::Balls { graph, radius } => {
            let s = inputs.structure(&graph.graph, graph.colors.as_deref())?;
            let stats = ball_statistics(&s, *radius).pre()?;
            let names: Vec<&str> = s
                .signature()
                .relations()
                .iter()
                .map(|r| r.name.as_str())
                .collect();
            let mut text = String::from("size,tuples,frequency");
            let mut rows = Vec::new();
            for (code, freq) in &stats {
                let tuples: Vec<String> = code
                    .tuples
                    .iter()
                    .map(|(rel, t)| {
                        let args: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                        format!("{}({})", names[*rel], args.join(" "))
                    })
                    .collect();
                let tuples = tuples.join(" ");
                text.push_str(&format!("\n{},{},{freq}", code.size, csv_field(&tuples)));
                rows.push(
                    json!({ "size": code.size, "tuples": tuples, "frequency": freq.to_string() }),
                );
            }
            Outcome::new(text, json!({ "radius": radius, "types": rows }))
        }
        Command::Stat { tree, rank } => {
            let t = inputs.tree(tree)?;
            let stat = statistic_of_tree(&t, *rank).pre()?;
            let sj = statistic_to_json(&stat);
            Outcome::new(
                pretty(&sj),
                serde_json::to_value(&sj).expect("serialisable"),
            )
        }
        Command::BuildTree { stat, target } => {
            let stat = inputs.statistic(stat)?;
            let r = build_tree(&stat, *target).pre()?;
            tree_outcome(
                &r.tree,
                json!({
                    "scale": r.scale,
                    "target": r.target,
                    "size": r.size,
                    "c_bound": r.c_bound,
                    "degenerate": r.degenerate,
                }),
            )
        }
        Command::BuildApprox {
            stat,
            target,
            arity,
            eps,
        } => {
            let stat = inputs.statistic(stat)?;
            let r = build_approx(&stat, *arity, *eps, *target).pre()?;
            let heavy: Vec<Value> = r
                .heavy_sons
                .iter()
                .map(|(e, k)| json!({ "tuple": e.to_string(), "copies": k }))
                .collect();
            tree_outcome(
                &r.tree,
                json!({
                    "target": r.target,
                    "size": r.size,
                    "c_bound": r.c_bound,
                    "heavy_sons": heavy,
                    "root_type_matches": r.root_type_matches,
                    "degenerate": r.degenerate,
                }),
            )
        }
        Command::Fmtp { stat } => {
            let stat = inputs.statistic(stat)?;
            let violations = fmtp_check(&stat);
            // Type ids follow the order of `stat` output.
            let mut table = TypeTable::new();
            for t in stat.masses().keys() {
                for ty in &t.path {
                    table.intern(ty);
                }
            }
            let mut ids = |e: &EncodeTuple| {
                e.path
                    .iter()
                    .map(|ty| table.intern(ty).to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let mut text = String::from("kind,parent,child,w,mu_parent,mu_child");
            let mut rows = Vec::new();
            for v in &violations {
                let kind = format!("{:?}", v.kind);
                let (parent, child) = (ids(&v.parent), ids(&v.child));
                text.push_str(&format!(
                    "\n{kind},{parent},{child},{},{},{}",
                    v.w, v.mu_parent, v.mu_child
                ));
                rows.push(json!({
                    "kind": kind,
                    "parent": parent,
                    "child": child,
                    "w": v.w,
                    "mu_parent": v.mu_parent.to_string(),
                    "mu_child": v.mu_child.to_string(),
                }));
            }
            Outcome {
                text,
                json: json!({ "consistent": violations.is_empty(), "violations": rows }),
                failed: !violations.is_empty(),
            }
        }
        Command::Ef(args) => {
            let (a, at, b, bt) = load_pair(inputs, args)?;
            let eq = ef_equivalent(&a, &at, &b, &bt, args.rounds).pre()?;
            Outcome::new(
                eq.to_string(),
                json!({ "equivalent": eq, "rounds": args.rounds }),
            )
        }
        Command::Dist(args) => {
            let (a, at, b, bt) = load_pair(inputs, args)?;
            let d = dist_p(&a, &at, &b, &bt, args.rounds).pre()?;
            Outcome::new(
                d.value().to_string(),
                json!({
                    "value": d.value().to_string(),
                    "first_failure": d.first_failure,
                    "r_max": d.r_max,
                }),
            )
        }
        Command::Td { graph, mode } => {
            let g = inputs.structure(&graph.graph, graph.colors.as_deref())?;
            let td = tree_depth(&g, (*mode).into()).pre()?;
            let parent: Vec<String> = td.parent.iter().map(|p| p.to_string()).collect();
            Outcome::new(
                format!("{}\n{}", td.depth, parent.join(" ")),
                json!({ "depth": td.depth, "parent": td.parent }),
            )
        }
        Command::TdDecompose {
            graph,
            height,
            mode,
        } => {
            let g = inputs.structure(&graph.graph, graph.colors.as_deref())?;
            let y = td_decompose(&g, *height, (*mode).into()).pre()?;
            tree_outcome(&y, json!({}))
        }
        Command::Interp {
            scheme,
            builtin,
            scheme_colors,
            t,
            graph,
            tree,
            colors,
            formula,
        } => {
            let scheme = match (scheme, builtin) {
                (Some(path), _) => inputs.scheme(path)?,
                (None, Some(name)) => {
                    match builtin_schemes(*scheme_colors, *t).remove(name.as_str()) {
                        Some(s) => s,
                        None => return usage_error(format!("unknown built-in scheme `{name}`")),
                    }
                }
                (None, None) => return usage_error("one of --scheme or --builtin is required"),
            };
            let source = match (graph, tree) {
                (Some(path), _) => Some(inputs.structure(path, colors.as_deref())?),
                (None, Some(path)) => {
                    let y = inputs.tree(path)?;
                    let count = scheme.source().color_count();
                    let coding = if builtin.as_deref() == Some("I_t") {
                        ColorCoding::Bits(count)
                    } else {
                        ColorCoding::Indexed(count)
                    };
                    Some(y.to_structure(coding).pre()?)
                }
                (None, None) => None,
            };
            if source.is_none() && formula.is_none() {
                return usage_error("nothing to do: give --graph, --tree or --formula");
            }
            let mut text = Vec::new();
            let mut out = serde_json::Map::new();
            if let Some(a) = source {
                let image = scheme.apply(&a).pre()?;
                let sj = structure_to_json(&image);
                text.push(pretty(&sj));
                out.insert(
                    "structure".into(),
                    serde_json::to_value(&sj).expect("serialisable"),
                );
            }
            if let Some(f) = formula {
                let phi = parse_formula(f, scheme.target())?;
                let back = scheme.translate(&phi).pre()?;
                text.push(back.to_string());
                out.insert("formula".into(), Value::String(back.to_string()));
            }
            Outcome::new(text.join("\n"), Value::Object(out))
        }
        Command::ExtProp { graph, k } => {
            let g = inputs.structure(&graph.graph, graph.colors.as_deref())?;
            let holds = has_extension_property(&g, *k).pre()?;
            Outcome::new(holds.to_string(), json!({ "holds": holds, "k": k }))
        }
        Command::Parse {
            formula,
            color_count,
        } => {
            let phi = parse_formula(formula, &Signature::colored_graph(*color_count))?;
            let free: BTreeSet<String> = phi.free_vars().iter().map(|v| format!("x{v}")).collect();
            let free: Vec<String> = free.into_iter().collect();
            let fragment = phi.fragment().to_string();
            Outcome::new(
                format!(
                    "formula: {phi}\nfree: {}\nqrank: {}\nfragment: {fragment}",
                    free.join(" "),
                    phi.qrank()
                ),
                json!({
                    "formula": phi.to_string(),
                    "free": free,
                    "qrank": phi.qrank(),
                    "fragment": fragment,
                }),
            )
        }
    })
}

type Pointed = (Structure, Vec<usize>, Structure, Vec<usize>);

fn load_pair(inputs: &mut Inputs, args: &PairArgs) -> CliResult<Pointed> {
    let a = inputs.structure(&args.a, None)?;
    let b = inputs.structure(&args.b, None)?;
    let at = parse_tuple(&args.a_tuple).usage()?;
    let bt = parse_tuple(&args.b_tuple).usage()?;
    Ok((a, at, b, bt))
}

fn emit(
    cli: &Cli,
    argv: Vec<String>,
    digest: String,
    outcome: &Outcome,
    wall: f64,
) -> CliResult<()> {
    let mut body = if cli.json {
        pretty(&RunReport {
            version: JSON_VERSION,
            command: cli.command.name(),
            argv,
            inputs_digest: digest,
            seed: cli.seed,
            wall_time_ms: cli.timing.then_some(wall),
            result: &outcome.json,
        })
    } else {
        outcome.text.clone()
    };
    body.push('\n');
    match &cli.out {
        Some(path) => fs::write(path, body).pre(),
        None => std::io::stdout().write_all(body.as_bytes()).pre(),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Kind::Usage.exit_code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let start = Instant::now();
    let mut inputs = Inputs::default();
    let result = run(&cli.command, cli.seed, &mut inputs).and_then(|outcome| {
        let wall = start.elapsed().as_secs_f64() * 1e3;
        emit(&cli, argv[1..].to_vec(), inputs.digest(), &outcome, wall)?;
        Ok(outcome.failed)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(Kind::Precondition.exit_code()),
        Err(CliError { kind, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(kind.exit_code())
        }
    }
}
