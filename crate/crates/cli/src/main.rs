//! `cliquesum` command-line front end.
//!
//! Artifacts are JSON, written to `--out` or, without it, to standard output.
//! Exit codes: 0 pass, 1 verification failure, 2 input error,
//! 3 internal or structural error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use cliquesum::cycles::DEFAULT_CYCLE_CAP;
use cliquesum::decompose::{decompose, merge_ctype_neighbors, ComponentTree};
use cliquesum::dynamic::{update, DynConfig};
use cliquesum::generate::{generate_instance, GenParams};
use cliquesum::io::{read_json, to_json, write_json};
use cliquesum::isolation::{
    audit_maximum_matchings, audit_perfect_matchings, default_shift, matching_weights, unique_shortest_paths,
    EdgeWeights,
};
use cliquesum::normalize::{check_properties, normalize, GadgetMap};
use cliquesum::pullback::{end_to_end, end_to_end_with_tree, sha256_json, Manifest, PipelineOptions, Run};
use cliquesum::verify::{audit_lemma_bounds, verify_nonzero_circulation, Report, Witness};
use cliquesum::{EdgeId, EdgeTag, Error, Graph, VertexId, WeightAssignment};

#[derive(Parser)]
#[command(name = "cliquesum", version, about = "Nonzero-circulation weights for clique-sum graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance.
    Generate(GenerateArgs),
    /// Decompose a biconnected graph into a component tree.
    Decompose(DecomposeArgs),
    /// Normalize a component tree and record the gadget map.
    Normalize(NormalizeArgs),
    /// Build weights for a graph and write the manifest.
    Weigh(WeighArgs),
    /// Check every cycle for nonzero circulation, or check a component tree.
    Verify(VerifyArgs),
    /// Minimum-weight perfect (or maximum) matching with a uniqueness audit.
    Match(MatchArgs),
    /// Unique shortest paths between all ordered vertex pairs.
    Paths(MatchArgs),
    /// Reweight after inserting a batch of edges into a bipartite graph.
    DynUpdate(DynArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the ground-truth component tree here.
    #[arg(long)]
    tree_out: Option<PathBuf>,
    #[arg(long)]
    bipartite: bool,
    #[arg(long, default_value_t = 5)]
    pieces: usize,
    #[arg(long, default_value_t = 28)]
    total_max: usize,
    /// Probability of dropping a non-clique edge of a piece.
    #[arg(long, default_value_t = 0.1)]
    thin: f64,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    /// Component tree to normalize.
    #[arg(long, required_unless_present = "graph")]
    tree: Option<PathBuf>,
    /// Decompose this graph first instead of reading a tree.
    #[arg(long, conflicts_with = "tree")]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WeighArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Use this component tree instead of decomposing.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// The tree is claimed to be normalized already; check that strictly.
    #[arg(long, requires = "tree")]
    normalized: bool,
    #[arg(long, default_value_t = 3)]
    width: usize,
    /// Cycle enumeration cap for the built-in verification.
    #[arg(long, default_value_t = DEFAULT_CYCLE_CAP)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, required_unless_present = "tree")]
    graph: Option<PathBuf>,
    /// Weights file or manifest. Without it the weights are built first and
    /// the cross-layer bounds are audited as well.
    #[arg(long, requires = "graph")]
    weights: Option<PathBuf>,
    /// Component tree to validate.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Require the tree to satisfy the normalization properties.
    #[arg(long, requires = "tree")]
    normalized: bool,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value_t = DEFAULT_CYCLE_CAP)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Weights file or manifest; built from the graph when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DynArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Isolating weights of the graph before the batch.
    #[arg(long)]
    weights: PathBuf,
    /// JSON list of `{u, v}` or `{id, u, v}` edges to insert.
    #[arg(long)]
    insert: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure tagged with the stage that produced it.
struct Failure {
    stage: &'static str,
    code: u8,
    message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ZeroCirculation { .. } | Error::IsolationViolated(_) => 1,
        Error::Structural(_) | Error::UnknownBag(_) | Error::Parameter(_) | Error::ShiftBaseTooSmall { .. } => 3,
        _ => 2,
    }
}

trait Stage<T> {
    fn at(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> Stage<T> for cliquesum::Result<T> {
    fn at(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { stage, code: exit_code(&e), message: e.to_string() })
    }
}

fn verification_failure(stage: &'static str, message: String) -> Failure {
    Failure { stage, code: 1, message }
}

fn emit<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<(), Failure> {
    match out {
        Some(p) => write_json(p, value).at("write"),
        None => {
            println!("{}", to_json(value).at("write")?);
            Ok(())
        }
    }
}

/// Summary lines go to stdout only when the artifact goes to a file.
fn say(out: &Option<PathBuf>, line: String) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn read_graph(p: &Path) -> Result<Graph, Failure> {
    read_json(p).at("read graph")
}

struct Loaded {
    weights: WeightAssignment,
    from_manifest: bool,
    /// False when a manifest's weights do not match their recorded hash.
    intact: bool,
}

/// Reads either a plain weights file or a manifest.
fn read_weights(p: &Path) -> Result<Loaded, Failure> {
    let v: Value = read_json(p).at("read weights")?;
    if v.get("weights").is_some() && v.get("provenance").is_some() {
        let m: Manifest = serde_json::from_value(v).map_err(Error::from).at("read weights")?;
        let intact = match m.provenance.get("weights") {
            Some(h) => sha256_json(&m.weights).at("read weights")? == *h,
            None => true,
        };
        return Ok(Loaded { weights: m.weights, from_manifest: true, intact });
    }
    let weights =
        serde_json::from_value(v).map_err(|e| Error::Parse(format!("{}: {e}", p.display()))).at("read weights")?;
    Ok(Loaded { weights, from_manifest: false, intact: true })
}

fn build(g: &Graph, width: usize) -> Result<Run, Failure> {
    end_to_end(g, &PipelineOptions { width, ..PipelineOptions::default() }).at("weigh")
}

fn weights_for(g: &Graph, weights: &Option<PathBuf>, width: usize) -> Result<WeightAssignment, Failure> {
    match weights {
        Some(p) => {
            let l = read_weights(p)?;
            if !l.intact {
                return Err(verification_failure("read weights", "manifest weights do not match their recorded hash".into()));
            }
            Ok(l.weights)
        }
        None => Ok(build(g, width)?.weights),
    }
}

fn generate(a: &GenerateArgs) -> Result<(), Failure> {
    let params = GenParams {
        pieces: a.pieces,
        total_max: a.total_max,
        bipartite: a.bipartite,
        thin_prob: a.thin,
        ..GenParams::default()
    };
    let inst = generate_instance(a.seed, &params);
    emit(&a.out, &inst.graph)?;
    if let Some(p) = &a.tree_out {
        write_json(p, &inst.tree).at("write")?;
    }
    say(
        &a.out,
        format!(
            "generated seed {}: {} vertices, {} edges, {} pieces",
            a.seed,
            inst.graph.vertex_count(),
            inst.graph.edge_count(),
            inst.tree.nodes.len()
        ),
    );
    Ok(())
}

fn decompose_graph(p: &Path, width: usize) -> Result<ComponentTree, Failure> {
    let g = read_graph(p)?;
    Ok(merge_ctype_neighbors(decompose(&g.real_part(), width).at("decompose")?))
}

fn decompose_cmd(a: &DecomposeArgs) -> Result<(), Failure> {
    let t = decompose_graph(&a.graph, a.width)?;
    emit(&a.out, &t)?;
    say(&a.out, format!("decomposed into {} nodes", t.nodes.len()));
    Ok(())
}

#[derive(Serialize)]
struct NormalizedJson<'a> {
    tree: &'a ComponentTree,
    gadget_map: &'a GadgetMap,
}

fn normalize_cmd(a: &NormalizeArgs) -> Result<(), Failure> {
    let t = match (&a.tree, &a.graph) {
        (Some(p), _) => read_json(p).at("read tree")?,
        (None, Some(g)) => decompose_graph(g, a.width)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    t.validate(a.width).at("read tree")?;
    let n = normalize(&t).at("normalize")?;
    emit(&a.out, &NormalizedJson { tree: &n.tree, gadget_map: &n.map })?;
    say(&a.out, format!("normalized: {} nodes became {}", t.nodes.len(), n.tree.nodes.len()));
    Ok(())
}

fn print_witness(out: &Option<PathBuf>, w: &Witness) {
    let vs: Vec<String> = w.vertices.iter().map(|v| v.0.to_string()).collect();
    say(out, format!("zero-circulation cycle through vertices {}", vs.join(" ")));
}

fn weigh(a: &WeighArgs) -> Result<(), Failure> {
    let g = read_graph(&a.graph)?;
    let opts = PipelineOptions { width: a.width, verify_cap: Some(a.cap), ..PipelineOptions::default() };
    let run = match &a.tree {
        Some(p) => {
            let t: ComponentTree = read_json(p).at("read tree")?;
            if a.normalized {
                check_properties(&t).at("normalize")?;
            }
            end_to_end_with_tree(&g, &t, &opts).at("weigh")?
        }
        None => end_to_end(&g, &opts).at("weigh")?,
    };
    let report = verify_nonzero_circulation(&g.real_part(), &run.weights, a.cap).at("verify")?;
    emit(&a.out, &run.manifest)?;
    say(
        &a.out,
        format!(
            "K {} B_shift {} m {} max_bits {}; {} cycles, {} with zero circulation",
            run.manifest.k,
            run.manifest.b_shift,
            run.manifest.m,
            run.manifest.max_bits,
            report.cycles_total,
            report.zero_witnesses.len()
        ),
    );
    if let Some(w) = report.zero_witnesses.first() {
        print_witness(&a.out, w);
        return Err(verification_failure("verify", "weights leave a cycle with zero circulation".into()));
    }
    Ok(())
}

fn verify_tree(p: &Path, width: usize, normalized: bool) -> Result<String, Failure> {
    let t: ComponentTree = read_json(p).at("read tree")?;
    t.validate(width).at("verify tree")?;
    if normalized {
        check_properties(&t).at("verify tree")?;
    }
    Ok(format!("component tree with {} nodes is valid{}", t.nodes.len(), if normalized { " and normalized" } else { "" }))
}

fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    if let Some(p) = &a.tree {
        let line = verify_tree(p, a.width, a.normalized)?;
        if a.graph.is_none() {
            println!("{line}");
            return Ok(());
        }
        eprintln!("{line}");
    }
    let g = read_graph(a.graph.as_ref().expect("clap requires --graph"))?.real_part();
    let mut intact = true;
    let (w, audits) = match &a.weights {
        Some(p) => {
            let l = read_weights(p)?;
            intact = l.intact;
            (l.weights, None)
        }
        None => {
            let run = build(&g, a.width)?;
            let (mut l4, mut l5) = (0, 0);
            for b in &run.blocks {
                let x = audit_lemma_bounds(&b.gprime, &b.aux, &b.wprime.cross, &b.wprime.k, a.cap).at("verify")?;
                l4 += x.lemma4_violations.len();
                l5 += x.lemma5_violations.len();
            }
            (run.weights, Some((l4, l5)))
        }
    };
    let mut report: Report = verify_nonzero_circulation(&g, &w, a.cap).at("verify")?;
    if let Some((l4, l5)) = audits {
        report.lemma4_violations = l4;
        report.lemma5_violations = l5;
    }
    emit(&a.out, &report)?;
    say(
        &a.out,
        format!(
            "{} cycles, {} with zero circulation, min |circulation| {}, max_bits {}",
            report.cycles_total,
            report.zero_witnesses.len(),
            report.min_abs_circulation.as_ref().map_or("-".to_string(), |x| x.to_string()),
            report.max_bits
        ),
    );
    for w in report.zero_witnesses.iter().take(1) {
        print_witness(&a.out, w);
    }
    if !intact {
        return Err(verification_failure("verify", "manifest weights do not match their recorded hash".into()));
    }
    if !report.passed() {
        return Err(verification_failure("verify", "verification failed".into()));
    }
    Ok(())
}

fn match_cmd(a: &MatchArgs) -> Result<(), Failure> {
    let g = read_graph(&a.graph)?;
    let w = weights_for(&g, &a.weights, a.width)?;
    let wu = matching_weights(&g, &w).at("match")?;
    let pm = audit_perfect_matchings(&g, &wu).at("match")?;
    let (kind, audit) = if pm.count > 0 { ("perfect", pm) } else { ("maximum", audit_maximum_matchings(&g, &wu).at("match")?) };
    emit(&a.out, &json!({ "kind": kind, "audit": audit }))?;
    let min = audit.minimum.as_ref().expect("some matching exists");
    say(
        &a.out,
        format!("{} {kind} matchings; minimum weight {} with edges {:?}", audit.count, min.weight, edge_ids(&min.edges)),
    );
    if let Some(t) = &audit.tie {
        say(&a.out, format!("tied matching with edges {:?}", edge_ids(&t.edges)));
        return Err(verification_failure("match", format!("minimum-weight {kind} matching is not unique")));
    }
    Ok(())
}

fn edge_ids(es: &[EdgeId]) -> Vec<u32> {
    es.iter().map(|e| e.0).collect()
}

fn paths_cmd(a: &MatchArgs) -> Result<(), Failure> {
    let g = read_graph(&a.graph)?.real_part();
    let w = weights_for(&g, &a.weights, a.width)?;
    let r = unique_shortest_paths(&g, &w, &default_shift(&g, &w)).at("paths")?;
    emit(&a.out, &r)?;
    say(
        &a.out,
        format!("{} ordered pairs, {} paths, {} ties, {} distance mismatches", r.pairs, r.paths, r.ties.len(), r.distance_mismatches.len()),
    );
    if !r.passed() {
        return Err(verification_failure("paths", "shortest paths are not unique".into()));
    }
    Ok(())
}

#[derive(Deserialize)]
struct Insertion {
    id: Option<EdgeId>,
    u: VertexId,
    v: VertexId,
}

fn dyn_update(a: &DynArgs) -> Result<(), Failure> {
    let mut g = read_graph(&a.graph)?;
    // a manifest carries circulation weights; orient them across the bipartition
    let l = read_weights(&a.weights)?;
    let w_old: EdgeWeights = if l.from_manifest {
        let present = l.weights.restrict(g.edges().map(|e| e.id));
        matching_weights(&g, &present).at("dyn-update")?
    } else {
        l.weights.iter().map(|(e, x)| (e, x.clone())).collect::<BTreeMap<EdgeId, BigInt>>()
    };
    let batch: Vec<Insertion> = read_json(&a.insert).at("read insertions")?;
    let mut ids = Vec::new();
    for e in batch {
        let id = e.id.unwrap_or_else(|| g.next_edge_id());
        g.add_edge(id, e.u, e.v, EdgeTag::Real).at("read insertions")?;
        ids.push(id);
    }
    let u = update(&g, &ids, &w_old, &DynConfig::default()).at("dyn-update")?;
    emit(&a.out, &json!({ "graph": g, "update": u }))?;
    let line = match &u.selected {
        Some(s) => format!(
            "{} insertions, {} candidates, candidate {} isolates (primes {:?}), {} perfect matchings",
            ids.len(),
            u.family_size,
            s.index,
            s.candidate.primes,
            s.audit.count
        ),
        None => format!("{} insertions; old weights kept", ids.len()),
    };
    say(&a.out, line);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Normalize(a) => normalize_cmd(a),
        Command::Weigh(a) => weigh(a),
        Command::Verify(a) => verify(a),
        Command::Match(a) => match_cmd(a),
        Command::Paths(a) => paths_cmd(a),
        Command::DynUpdate(a) => dyn_update(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
