//! Subcommands of the `qmut` binary.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use qmut::document::{parse_quiver, serialize_quiver, LimitsDocument, ReportDocument};
use qmut::dynamics::{conjecture_scan, orbit_size};
use qmut::gadgets::{
    build_subset_sum_gadget, build_x3c_gadget, decide_icebound_free_via_gadget, decide_k_via_gadget,
    find_icebound_free_subset, parse_values, subset_sum_oracle, x3c_oracle, SubsetSumInstance, X3CInstance,
};
use qmut::{canonical_form, explore, Dedup, MutationSequence, Predicate, Quiver, SearchLimits, VertexId};

use crate::summary::{summarize, GrowthSummary};
use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "qmut", version, about = "Quiver mutation laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply a mutation sequence to a quiver document.
    Mutate(MutateArgs),
    /// Breadth-first search of the mutation class for a property.
    Explore(ExploreArgs),
    /// Size of a two-mutable-vertex mutation class, labeled and up to isomorphism.
    Orbit(OrbitArgs),
    /// Build (and optionally decide) a reduction gadget.
    #[command(subcommand)]
    Gadget(GadgetCommand),
    /// Alternate mutations at two vertices; classify growth and check the ratio limit.
    Dynamics(DynamicsArgs),
    /// Collect A-B multiplicities over the class of a weighted path quiver.
    Conjecture(ConjectureArgs),
    /// Canonical key of a quiver up to relabeling.
    Canon(CanonArgs),
    /// Start the local HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Quiver document (JSON); `-` reads standard input.
    #[arg(long, short)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the resulting document here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// Stop after this many distinct states.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_states: Option<u64>,
    /// Do not expand states at this depth.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_depth: Option<u32>,
    /// Do not expand states with a larger arrow multiplicity (or `unlimited`).
    #[arg(long)]
    pub max_multiplicity: Option<String>,
    /// Wall-clock budget in milliseconds.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub time_budget_ms: Option<u64>,
}

impl LimitArgs {
    fn limits(&self) -> Result<SearchLimits, Failure> {
        Ok(LimitsDocument {
            max_states: self.max_states,
            max_depth: self.max_depth,
            max_multiplicity: self.max_multiplicity.clone(),
            time_budget_ms: self.time_budget_ms,
        }
        .to_limits()?)
    }
}

#[derive(Debug, Args)]
pub struct MutateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated vertices, applied left to right.
    #[arg(long, value_delimiter = ',', required = true)]
    pub seq: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DedupArg {
    Labeled,
    Iso,
}

#[derive(Debug, Args)]
#[group(id = "predicate", required = true, multiple = false)]
pub struct PredicateArgs {
    /// Some pair of vertices has exactly K arrows.
    #[arg(long, value_name = "K")]
    pub pair_exactly: Option<BigUint>,
    /// No arrows between frozen vertices.
    #[arg(long)]
    pub no_icebound: bool,
    /// Record the U-V multiplicity over the whole (bounded) class.
    #[arg(long, value_name = "U,V")]
    pub collect: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub predicate: PredicateArgs,
    #[arg(long, value_enum, default_value = "labeled")]
    pub dedup: DedupArg,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Debug, Subcommand)]
pub enum GadgetCommand {
    /// Subset-Sum gadget: frozen A, B and one mutable C_i per value.
    SubsetSum(SubsetSumArgs),
    /// Exact-cover gadget: frozen A_i and C, one mutable vertex per triple.
    X3c(X3cArgs),
}

#[derive(Debug, Args)]
pub struct SubsetSumArgs {
    /// Comma-separated positive values.
    #[arg(long, conflicts_with = "instance")]
    pub values: Option<String>,
    /// Instance file: values on the first line, optional target on the second.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Target multiplicity; defaults to the instance file's target.
    #[arg(long)]
    pub k: Option<u64>,
    /// Decide whether k arrows occur in the gadget's class.
    #[arg(long)]
    pub decide: bool,
    /// Compare the decision with the dynamic-programming oracle.
    #[arg(long, requires = "decide")]
    pub check_oracle: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct X3cArgs {
    /// Instance file: n on the first line, then one triple `i j k` per line.
    #[arg(long)]
    pub instance: PathBuf,
    /// Decide whether some member of the class has no icebound arrows.
    #[arg(long)]
    pub decide: bool,
    /// Compare the decision with the exact-cover oracle.
    #[arg(long, requires = "decide")]
    pub check_oracle: bool,
    /// Print the triple vertices whose mutation clears the icebound arrows.
    #[arg(long, requires = "decide")]
    pub witness: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub c: String,
    #[arg(long)]
    pub d: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    /// Outside vertex A for the ratio delta(A,C)/delta(A,D).
    #[arg(long, value_name = "A")]
    pub ratio: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Write the per-step table (tab-separated) here; `-` for standard output.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    /// Print the full summary as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ConjectureArgs {
    /// Path weights x0,...,xk.
    #[arg(long)]
    pub weights: String,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Debug, Args)]
pub struct CanonArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Also print the canonical position of every vertex.
    #[arg(long)]
    pub positions: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "QMUT_PORT", default_value_t = 8787)]
    pub port: u16,
    #[arg(long, default_value_t = Ipv4Addr::LOCALHOST)]
    pub host: Ipv4Addr,
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))
    }
}

fn load_quiver(args: &InputArgs) -> Result<Quiver, Failure> {
    Ok(parse_quiver(&read_input(&args.input)?)?)
}

fn emit_document(q: &Quiver, output: &OutputArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let bytes = serialize_quiver(q);
    match &output.output {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display()))),
        None => Ok(out.write_all(&bytes)?),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn vertex(name: &str) -> Result<VertexId, Failure> {
    Ok(VertexId::new(name.trim())?)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Mutate(a) => {
            let q = load_quiver(&a.input)?;
            let seq = MutationSequence::from_names(&a.seq)?;
            emit_document(&q.mutate_seq(&seq)?, &a.output, out)
        }
        Command::Explore(a) => explore_cmd(a, out),
        Command::Orbit(a) => {
            let q = load_quiver(&a.input)?;
            let size = orbit_size(&q, &a.limits.limits()?)?;
            writeln!(out, "labeled {}", size.labeled)?;
            writeln!(out, "iso {}", size.iso)?;
            Ok(())
        }
        Command::Gadget(GadgetCommand::SubsetSum(a)) => subset_sum_cmd(a, out),
        Command::Gadget(GadgetCommand::X3c(a)) => x3c_cmd(a, out),
        Command::Dynamics(a) => dynamics_cmd(a, out),
        Command::Conjecture(a) => {
            let weights = parse_values(&a.weights)?;
            let r = conjecture_scan(&weights, &a.limits.limits()?)?;
            let observed: Vec<String> = r.observed.iter().map(ToString::to_string).collect();
            writeln!(out, "observed {}", observed.join(","))?;
            writeln!(out, "product {}", r.product)?;
            writeln!(out, "visited {}", r.visited)?;
            writeln!(out, "exhausted {}", r.exhausted)?;
            writeln!(out, "truncated_by {}", limit_names(&r.truncated_by))?;
            writeln!(out, "consistent {}", yes_no(r.consistent))?;
            Ok(())
        }
        Command::Canon(a) => {
            let q = load_quiver(&a.input)?;
            let form = canonical_form(&q);
            writeln!(out, "{}", form.key.to_hex())?;
            if a.positions {
                for &i in &form.order {
                    writeln!(out, "{}", q.vertices()[i])?;
                }
            }
            Ok(())
        }
        Command::Serve(a) => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::service::serve(SocketAddr::from((a.host, a.port))))
        }
    }
}

fn limit_names(limits: &BTreeSet<qmut::Limit>) -> String {
    if limits.is_empty() {
        "-".to_string()
    } else {
        limits.iter().map(|l| l.name()).collect::<Vec<_>>().join(",")
    }
}

fn explore_cmd(a: ExploreArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let q = load_quiver(&a.input)?;
    let p = &a.predicate;
    let predicate = if let Some(k) = &p.pair_exactly {
        Predicate::PairExactlyK(k.clone())
    } else if p.no_icebound {
        Predicate::NoIcebound
    } else {
        let pair = p.collect.as_deref().unwrap_or_default();
        let (u, v) = pair
            .split_once(',')
            .ok_or_else(|| Failure::new("ParseError", format!("--collect expects U,V, got {pair:?}")))?;
        Predicate::CollectPairMultiplicities(vertex(u)?, vertex(v)?)
    };
    predicate.check_against(&q)?;
    let dedup = match a.dedup {
        DedupArg::Labeled => Dedup::Labeled,
        DedupArg::Iso => Dedup::Isomorphism,
    };
    let report = explore(&q, &predicate, &a.limits.limits()?, dedup);
    let doc = ReportDocument::from(&report);
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("reports serialize"))?;
    } else {
        writeln!(out, "visited {}", report.visited)?;
        writeln!(out, "dedup {}", if dedup == Dedup::Labeled { "labeled" } else { "iso" })?;
        writeln!(out, "exhausted {}", report.exhausted)?;
        writeln!(out, "truncated_by {}", limit_names(&report.truncated_by))?;
        if let Some(w) = &report.witness {
            writeln!(out, "witness {}", if w.is_empty() { "(empty)".to_string() } else { w.to_string() })?;
        }
        if let Some(c) = &doc.collected {
            writeln!(out, "collected {}", c.join(","))?;
        }
    }
    if !matches!(predicate, Predicate::CollectPairMultiplicities(..)) {
        writeln!(out, "{}", report.answer().map_or("unknown", yes_no))?;
    }
    Ok(())
}

fn subset_sum_cmd(a: SubsetSumArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let inst = match (&a.values, &a.instance) {
        (Some(v), None) => SubsetSumInstance::new(parse_values(v)?, None)?,
        (None, Some(path)) => String::from_utf8_lossy(&read_input(path)?).parse::<SubsetSumInstance>()?,
        _ => return Err(Failure::new("InvalidInstance", "give exactly one of --values or --instance")),
    };
    let q = build_subset_sum_gadget(&inst.values)?;
    if !a.decide {
        return emit_document(&q, &a.output, out);
    }
    if a.output.output.is_some() {
        emit_document(&q, &a.output, out)?;
    }
    let k = a
        .k
        .or(inst.target)
        .ok_or_else(|| Failure::new("InvalidInstance", "--decide needs --k or a target line in the instance"))?;
    let answer = decide_k_via_gadget(&inst.values, k)?;
    if a.check_oracle {
        let oracle = subset_sum_oracle(&inst.values, k);
        if oracle != answer {
            writeln!(out, "oracle {} (disagrees)", yes_no(oracle))?;
            writeln!(out, "{}", yes_no(answer))?;
            return Err(Failure::new("OracleMismatch", format!("gadget says {}, oracle says {}", yes_no(answer), yes_no(oracle))));
        }
        writeln!(out, "oracle {} (agrees)", yes_no(oracle))?;
    }
    writeln!(out, "{}", yes_no(answer))?;
    Ok(())
}

fn x3c_cmd(a: X3cArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let inst: X3CInstance = String::from_utf8_lossy(&read_input(&a.instance)?).parse()?;
    let q = build_x3c_gadget(&inst)?;
    if !a.decide {
        return emit_document(&q, &a.output, out);
    }
    if a.output.output.is_some() {
        emit_document(&q, &a.output, out)?;
    }
    let answer = if a.witness {
        let witness = find_icebound_free_subset(&inst)?;
        if let Some(w) = &witness {
            let names: Vec<&str> = w.iter().map(VertexId::as_str).collect();
            writeln!(out, "witness {}", names.join(","))?;
        }
        witness.is_some()
    } else {
        decide_icebound_free_via_gadget(&inst)?
    };
    if a.check_oracle {
        let oracle = x3c_oracle(&inst);
        if oracle != answer {
            writeln!(out, "oracle {} (disagrees)", yes_no(oracle))?;
            writeln!(out, "{}", yes_no(answer))?;
            return Err(Failure::new("OracleMismatch", format!("gadget says {}, oracle says {}", yes_no(answer), yes_no(oracle))));
        }
        writeln!(out, "oracle {} (agrees)", yes_no(oracle))?;
    }
    writeln!(out, "{}", yes_no(answer))?;
    Ok(())
}

fn dynamics_cmd(a: DynamicsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let q = load_quiver(&a.input)?;
    let steps = usize::try_from(a.steps).map_err(|_| Failure::new("InvalidSteps", "too many steps"))?;
    let (trace, summary) = summarize(&q, &a.c, &a.d, steps, a.ratio.as_deref(), a.tol)?;
    match &a.tsv {
        Some(path) if path == Path::new("-") => out.write_all(trace.to_tsv().as_bytes())?,
        Some(path) => fs::write(path, trace.to_tsv()).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))?,
        None => {}
    }
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&summary).expect("summaries serialize"))?;
        return Ok(());
    }
    writeln!(out, "alpha {}", summary.alpha)?;
    let last = summary.steps.last().expect("at least one step");
    writeln!(out, "total {} after {} steps", last.total, last.step)?;
    match summary.first_return {
        Some(k) => writeln!(out, "returns to start after {k} steps")?,
        None => writeln!(out, "no return to start within {steps} steps")?,
    }
    match &summary.growth {
        GrowthSummary::Trivial => writeln!(out, "growth trivial")?,
        GrowthSummary::Periodic { period } => writeln!(out, "growth periodic {period}")?,
        GrowthSummary::Linear => writeln!(out, "growth linear")?,
        GrowthSummary::Exponential => writeln!(out, "growth exponential")?,
        GrowthSummary::Inconclusive { reason } => writeln!(out, "growth inconclusive ({reason})")?,
    }
    if a.ratio.is_some() {
        match &summary.ratio {
            Some(r) => match (r.estimate, r.target, r.converged) {
                (Some(estimate), Some(target), Some(converged)) => {
                    writeln!(out, "estimate {estimate:.12}")?;
                    writeln!(out, "target {target:.12}")?;
                    writeln!(out, "error {:.3e}", (estimate - target).abs())?;
                    writeln!(out, "{}", if converged { "converged" } else { "not converged" })?;
                }
                _ => writeln!(out, "ratio unavailable: {}", r.note.as_deref().unwrap_or("unknown reason"))?,
            },
            None => writeln!(out, "ratio unavailable")?,
        }
    }
    Ok(())
}
