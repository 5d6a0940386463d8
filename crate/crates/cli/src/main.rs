//! `m4c`: cascade morphology modeling and size prediction.
//!
//! Subcommands cover the full workflow: generate a synthetic corpus,
//! reconstruct cascade graphs from action logs, encode them, fit a Markov
//! chain, extract typical-state features, run the cross-validated
//! prediction experiment, and export DOT renderings.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use m4c_core::cascade::{
    build_cascade, parse_actions_jsonl, write_actions_jsonl, ActionEvent, CascadeGraph,
    FollowerGraph,
};
use m4c_core::encode::{dfs_encode, rle_encode, RunLengthSequence};
use m4c_core::error::Error;
use m4c_core::features::{presence_vector, rank_and_select_features, typical_states};
use m4c_core::markov::{fit, select_global_order_with, OrderRule};
use m4c_core::pipeline::{
    export_dot, run_experiment, write_outputs, ExperimentConfig, FeatureMode, SelectedFeature,
};
use m4c_core::synth::{generate_cascades, generate_follower_graph, labels_csv, GeneratorConfig};

#[derive(Parser)]
#[command(name = "m4c", version, about = "Cascade morphology modeling and size prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic follower graph and two-class cascade corpus.
    Generate(GenerateArgs),
    /// Reconstruct cascade graphs and print a per-cascade summary.
    Construct(InputArgs),
    /// Encode each cascade as a binary traversal code and run-length sequence.
    Encode(EncodeArgs),
    /// Fit a Markov chain over the encoded corpus and emit it as JSON.
    Fit(FitArgs),
    /// Extract typical-state features and emit per-cascade presence vectors.
    Features(FeaturesArgs),
    /// Run the cross-validated size-prediction experiment.
    Evaluate(EvaluateArgs),
    /// Write one DOT file per cascade.
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Follower graph TSV (one `src<TAB>dst` edge per line).
    #[arg(long)]
    follower: PathBuf,
    /// Action log JSONL (`{"cascade_id","user","ts"}` per line).
    #[arg(long)]
    actions: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Master RNG seed (required for reproducibility).
    #[arg(long)]
    seed: u64,
    /// Generator settings as JSON; flags override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    user_count: Option<usize>,
    #[arg(long)]
    cascades_per_class: Option<usize>,
    #[arg(long)]
    follows_per_user: Option<usize>,
    #[arg(long)]
    tau2: Option<usize>,
    /// Output directory for follower.tsv, actions.jsonl, labels.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Keep only the first `tau1` edges of each cascade before encoding.
    #[arg(long)]
    tau1: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    tau1: Option<usize>,
    #[arg(long, default_value_t = 5)]
    max_order: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Use the first significant autocorrelation lag instead of the largest.
    #[arg(long)]
    first_significant: bool,
    /// Output file for the model JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 10)]
    tau1: usize,
    #[arg(long, default_value_t = 20)]
    tau2: usize,
    #[arg(long, default_value_t = 5)]
    max_order: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    realization_count: usize,
    #[arg(long, default_value_t = 50)]
    realization_length: usize,
    #[arg(long, default_value_t = 10_000)]
    max_states: usize,
    #[arg(long, default_value_t = 100)]
    top_k: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for features.csv and features_selected.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Master RNG seed (required for reproducibility).
    #[arg(long)]
    seed: u64,
    /// Experiment settings as JSON; flags override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau1: Option<usize>,
    #[arg(long)]
    tau2: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// m4c | baseline | both
    #[arg(long)]
    feature_mode: Option<String>,
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    realization_count: Option<usize>,
    #[arg(long)]
    realization_length: Option<usize>,
    #[arg(long)]
    max_states: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    use_klt: bool,
    /// Select features once over the whole corpus instead of per fold.
    #[arg(long)]
    global_selection: bool,
    #[arg(long)]
    threshold: Option<f64>,
    /// Output directory for metrics, ROC, and feature files.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExportDotArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Export only this cascade.
    #[arg(long)]
    cascade_id: Option<String>,
    #[arg(long)]
    tau1: Option<usize>,
    /// Output directory for `<cascade_id>.dot` files.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Construct(args) => cmd_construct(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Features(args) => cmd_features(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::ExportDot(args) => cmd_export_dot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn load_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad config {}: {e}", path.display())))
}

fn load_inputs(
    input: &InputArgs,
) -> Result<(FollowerGraph, BTreeMap<String, Vec<ActionEvent>>), Error> {
    let fg = FollowerGraph::from_tsv(BufReader::new(File::open(&input.follower).map_err(
        |e| Error::Data(format!("cannot open {}: {e}", input.follower.display())),
    )?))?;
    let actions = parse_actions_jsonl(BufReader::new(File::open(&input.actions).map_err(
        |e| Error::Data(format!("cannot open {}: {e}", input.actions.display())),
    )?))?;
    Ok((fg, actions))
}

/// Cascades in action-log order, keyed by id.
fn build_all(
    fg: &FollowerGraph,
    actions: &BTreeMap<String, Vec<ActionEvent>>,
) -> Result<Vec<(String, CascadeGraph)>, Error> {
    actions
        .iter()
        .map(|(id, events)| Ok((id.clone(), build_cascade(fg, events)?)))
        .collect()
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Error> {
    let mut cfg: GeneratorConfig = match &args.config {
        Some(path) => load_json_config(path)?,
        None => GeneratorConfig::default(),
    };
    cfg.seed = args.seed;
    if let Some(v) = args.user_count {
        cfg.user_count = v;
    }
    if let Some(v) = args.cascades_per_class {
        cfg.cascades_per_class = v;
    }
    if let Some(v) = args.follows_per_user {
        cfg.follows_per_user = v;
    }
    if let Some(v) = args.tau2 {
        cfg.tau2 = v;
    }
    let fg = generate_follower_graph(&cfg)?;
    let cascades = generate_cascades(&fg, &cfg)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let mut tsv = File::create(args.out_dir.join("follower.tsv"))?;
    fg.to_tsv(&mut tsv)?;
    let mut jsonl = File::create(args.out_dir.join("actions.jsonl"))?;
    for c in &cascades {
        write_actions_jsonl(&c.events, &mut jsonl)?;
    }
    std::fs::write(args.out_dir.join("labels.csv"), labels_csv(&cascades))?;
    println!(
        "wrote {} cascades over {} users to {}",
        cascades.len(),
        cfg.user_count,
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_construct(args: InputArgs) -> Result<(), Error> {
    let (fg, actions) = load_inputs(&args)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "cascade_id\troot\tnodes\tedges")?;
    for (id, c) in build_all(&fg, &actions)? {
        writeln!(out, "{id}\t{}\t{}\t{}", c.root(), c.node_count(), c.edge_count())?;
    }
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> Result<(), Error> {
    let (fg, actions) = load_inputs(&args.input)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (id, c) in build_all(&fg, &actions)? {
        let c = match args.tau1 {
            Some(t) => c.truncate(t),
            None => c,
        };
        let code = dfs_encode(&c)?;
        let runs = rle_encode(&code);
        let runs_text = runs
            .runs()
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{id}\t{code}\t{runs_text}")?;
    }
    Ok(())
}

fn encode_corpus(
    cascades: &[(String, CascadeGraph)],
    tau1: Option<usize>,
) -> Result<Vec<RunLengthSequence>, Error> {
    cascades
        .iter()
        .map(|(_, c)| {
            let c = match tau1 {
                Some(t) => c.truncate(t),
                None => c.clone(),
            };
            Ok(rle_encode(&dfs_encode(&c)?))
        })
        .collect()
}

fn cmd_fit(args: FitArgs) -> Result<(), Error> {
    let (fg, actions) = load_inputs(&args.input)?;
    let cascades = build_all(&fg, &actions)?;
    let seqs = encode_corpus(&cascades, args.tau1)?;
    let rule = if args.first_significant {
        OrderRule::FirstSignificant
    } else {
        OrderRule::LargestSignificant
    };
    let order = select_global_order_with(&seqs, args.max_order, rule)?;
    let chain = fit(&seqs, order, args.alpha)?;
    let json = chain.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    eprintln!(
        "fitted order-{order} chain over {} sequences ({} symbols)",
        seqs.len(),
        chain.alphabet().len()
    );
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> Result<(), Error> {
    if args.tau2 <= args.tau1 || args.tau1 == 0 {
        return Err(Error::Config(format!(
            "need tau2 > tau1 >= 1, got tau1 = {}, tau2 = {}",
            args.tau1, args.tau2
        )));
    }
    let (fg, actions) = load_inputs(&args.input)?;
    let cascades = build_all(&fg, &actions)?;

    // Labels from full cascades; features from the tau1 prefix of cascades
    // that have one.
    let eligible: Vec<&(String, CascadeGraph)> = cascades
        .iter()
        .filter(|(_, c)| c.edge_count() >= args.tau1)
        .collect();
    if eligible.is_empty() {
        return Err(Error::Data(format!(
            "no cascades with at least {} edges",
            args.tau1
        )));
    }
    let labels: Vec<bool> = eligible
        .iter()
        .map(|(_, c)| c.edge_count() >= args.tau2)
        .collect();
    let seqs: Vec<RunLengthSequence> = eligible
        .iter()
        .map(|(_, c)| Ok(rle_encode(&dfs_encode(&c.truncate(args.tau1))?)))
        .collect::<Result<_, Error>>()?;

    let order = select_global_order_with(&seqs, args.max_order, OrderRule::LargestSignificant)?;
    let chain = fit(&seqs, order, args.alpha)?;
    let candidates = typical_states(
        &chain,
        args.realization_count,
        args.realization_length,
        args.max_states,
        args.seed,
    )?;
    let features = rank_and_select_features(&candidates, &seqs, &labels, args.top_k)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let manifest: Vec<SelectedFeature> = features
        .iter()
        .enumerate()
        .map(|(i, f)| SelectedFeature {
            rank: i + 1,
            subsequence: f.subsequence.clone(),
            info_gain: f.info_gain,
            typicality_rank: f.typicality_rank,
        })
        .collect();
    std::fs::write(
        args.out_dir.join("features_selected.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let mut csv = String::from("cascade_id,label");
    for i in 1..=features.len() {
        csv.push_str(&format!(",f{i}"));
    }
    csv.push('\n');
    for (((id, _), label), seq) in eligible.iter().zip(&labels).zip(&seqs) {
        csv.push_str(id);
        csv.push_str(if *label { ",1" } else { ",0" });
        for v in presence_vector(seq, &features) {
            csv.push_str(&format!(",{}", v as u8));
        }
        csv.push('\n');
    }
    std::fs::write(args.out_dir.join("features.csv"), csv)?;
    println!(
        "selected {} features over {} eligible cascades (chain order {order})",
        features.len(),
        eligible.len()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let mut cfg: ExperimentConfig = match &args.config {
        Some(path) => load_json_config(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.seed = args.seed;
    if let Some(v) = args.tau1 {
        cfg.tau1 = v;
    }
    if let Some(v) = args.tau2 {
        cfg.tau2 = v;
    }
    if let Some(v) = args.folds {
        cfg.folds = v;
    }
    if let Some(mode) = &args.feature_mode {
        cfg.feature_mode = match mode.as_str() {
            "m4c" => FeatureMode::M4c,
            "baseline" => FeatureMode::Baseline,
            "both" => FeatureMode::Both,
            other => {
                return Err(Error::Config(format!(
                    "unknown feature mode `{other}`; expected m4c, baseline, or both"
                )))
            }
        };
    }
    if let Some(v) = args.max_order {
        cfg.max_order = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.realization_count {
        cfg.realization_count = v;
    }
    if let Some(v) = args.realization_length {
        cfg.realization_length = v;
    }
    if let Some(v) = args.max_states {
        cfg.max_states = v;
    }
    if let Some(v) = args.top_k {
        cfg.top_k = v;
    }
    if args.use_klt {
        cfg.use_klt = true;
    }
    if args.global_selection {
        cfg.global_selection = true;
    }
    if let Some(v) = args.threshold {
        cfg.threshold = v;
    }
    cfg.validate()?;

    let (fg, actions) = load_inputs(&args.input)?;
    let report = run_experiment(&fg, &actions, &cfg)?;
    write_outputs(&report, &args.out_dir)?;
    if let Some(m) = &report.m4c {
        println!(
            "m4c: accuracy {:.4}, detection rate {:.4}, false positive rate {:.4}",
            m.accuracy, m.detection_rate, m.false_positive_rate
        );
    }
    if let Some(b) = &report.baseline {
        println!(
            "baseline: accuracy {:.4}, detection rate {:.4}, false positive rate {:.4}",
            b.accuracy, b.detection_rate, b.false_positive_rate
        );
    }
    println!("wrote reports to {}", args.out_dir.display());
    Ok(())
}

fn cmd_export_dot(args: ExportDotArgs) -> Result<(), Error> {
    let (fg, actions) = load_inputs(&args.input)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let mut written = 0usize;
    for (id, c) in build_all(&fg, &actions)? {
        if let Some(want) = &args.cascade_id {
            if want != &id {
                continue;
            }
        }
        let c = match args.tau1 {
            Some(t) => c.truncate(t),
            None => c,
        };
        std::fs::write(args.out_dir.join(format!("{id}.dot")), export_dot(&c))?;
        written += 1;
    }
    if written == 0 {
        return Err(Error::Data(match args.cascade_id {
            Some(id) => format!("cascade `{id}` not found"),
            None => "no cascades in input".into(),
        }));
    }
    println!("wrote {written} DOT files to {}", args.out_dir.display());
    Ok(())
}
