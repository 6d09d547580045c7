// SPDX-License-Identifier: Apache-2.0

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lockbench::dataset::{build_dataset, Dataset, DatasetConfig, Split, SplitPolicy, WrongKeyPolicy};
use lockbench::explain::{explain_all, ExplainConfig};
use lockbench::fixtures::desk_suite;
use lockbench::gnn::{
    attack, samples_from_dataset, train, AttackMode, GinModel, Hyper, LossWeights, Readout, SampleSpec, TrainConfig,
};
use lockbench::graph::{key_bit_subgraph, FeatureMap, FeaturePolicy};
use lockbench::lock::{lock, LockRecipe, LockedCircuit, Scheme};
use lockbench::metrics::{key_precision, prediction_accuracy, report_table, AttackRecord};
use lockbench::netlist::parse_bench;
use lockbench::par::Exec;
use lockbench::sim::ErMode;
use lockbench::Netlist;

use config::{usage, Settings, Usage};

/// Base directory for default outputs.
const OUT_ENV: &str = "LOCKBENCH_OUT";

#[derive(Parser)]
#[command(name = "lockbench", version, about = "Logic-locking workbench and oracle-less GNN key attack")]
struct Cli {
    /// `key = value` settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the parallel loops (1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lock a BENCH netlist.
    Lock(LockArgs),
    /// Build a labeled corpus of locked circuits, variants and key error rates.
    Dataset(DatasetArgs),
    /// Train a model on a saved corpus.
    Train(TrainArgs),
    /// Predict the key of a locked circuit.
    Attack(AttackArgs),
    /// Explain the per-bit predictions on a locked circuit.
    Explain(ExplainArgs),
    /// Attack every circuit of a corpus split and report the metrics.
    Eval(EvalArgs),
}

#[derive(Args)]
struct LockArgs {
    input: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(Scheme))]
    scheme: Option<Scheme>,
    #[arg(long)]
    key_width: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scheme parameter, `name=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
}

#[derive(Args)]
struct DatasetArgs {
    /// BENCH files, or directories searched for `*.bench`.
    inputs: Vec<PathBuf>,
    /// Also add this many generated circuits.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Comma-separated scheme list.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    key_width: Option<usize>,
    #[arg(long)]
    wrong_keys: Option<usize>,
    /// Netlists per locked circuit, the locked one included.
    #[arg(long)]
    variants: Option<usize>,
    #[arg(long)]
    passes: Option<usize>,
    /// `uniform` or `stratified`.
    #[arg(long)]
    wrong_key_policy: Option<String>,
    /// Monte Carlo patterns per error rate; exhaustive when absent.
    #[arg(long)]
    er_samples: Option<u64>,
    /// `none`, `random:FRACTION`, `circuit:NAME,...` or `scheme:NAME,...`.
    #[arg(long)]
    split: Option<String>,
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    /// `sum` or `mean`.
    #[arg(long)]
    readout: Option<String>,
    #[arg(long)]
    hops: Option<usize>,
    /// `default`, `first-seen`, `random` or `by-count`.
    #[arg(long)]
    feature_map: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    warm_epochs: Option<usize>,
    #[arg(long)]
    lr_start: Option<f64>,
    #[arg(long)]
    lr_peak: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    key_weight: Option<f64>,
    #[arg(long)]
    er_weight: Option<f64>,
    /// Skip the keyed whole-graph error-rate samples.
    #[arg(long)]
    no_er_samples: bool,
    /// Add error-rate samples of XOR/XNOR-complemented circuits.
    #[arg(long)]
    complemented: bool,
    /// Write the epoch history as CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    /// Locked-circuit directory or BENCH file.
    locked: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// `structure` or `refined`.
    #[arg(long)]
    mode: Option<String>,
    /// Write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    locked: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Only this key bit; all bits when absent.
    #[arg(long)]
    bit: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    dataset: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    /// `train`, `validation` or `all`.
    #[arg(long)]
    split: Option<String>,
    /// Write the report table as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
    /// `key-precision>=70`, `prediction-accuracy>50`, ...; repeatable.
    #[arg(long = "assert")]
    asserts: Vec<String>,
}

struct Ctx {
    settings: Settings,
    seed: u64,
    json: bool,
    exec: Exec,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<Usage>().is_some() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let section = match &cli.command {
        Command::Lock(_) => "lock",
        Command::Dataset(_) => "dataset",
        Command::Train(_) => "train",
        Command::Attack(_) => "attack",
        Command::Explain(_) => "explain",
        Command::Eval(_) => "eval",
    };
    let settings = Settings::load(cli.config.as_deref(), section)?;
    let threads = settings.get(cli.threads, "threads")?;
    let exec = match threads {
        Some(0) => return Err(usage("--threads must be at least 1")),
        Some(1) => Exec::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let ctx = Ctx { seed: settings.or(cli.seed, "seed", 0)?, json: settings.flag(cli.json, "json")?, settings, exec };
    match cli.command {
        Command::Lock(a) => cmd_lock(&ctx, a),
        Command::Dataset(a) => cmd_dataset(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Attack(a) => cmd_attack(&ctx, a),
        Command::Explain(a) => cmd_explain(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
    }
}

fn default_out(name: &str) -> PathBuf {
    let base = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("lockbench-out"));
    base.join(name)
}

fn read_bench(path: &Path) -> Result<Netlist> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("circuit");
    Ok(parse_bench(&text).with_context(|| format!("parsing {}", path.display()))?.with_name(stem))
}

fn with_params(mut recipe: LockRecipe, params: &[String]) -> Result<LockRecipe> {
    for p in params {
        let (k, v) = p.split_once('=').ok_or_else(|| usage(format!("--param `{p}` is not name=value")))?;
        recipe = recipe.with_param(k.trim(), v.trim());
    }
    Ok(recipe)
}

fn params_of(settings: &Settings, flags: Vec<String>) -> Result<Vec<String>> {
    if !flags.is_empty() {
        return Ok(flags);
    }
    let joined: Option<String> = settings.get(None, "param")?;
    Ok(joined.map(|s| s.split(',').map(str::to_string).collect()).unwrap_or_default())
}

fn emit(ctx: &Ctx, value: serde_json::Value, text: impl FnOnce() -> String) {
    if ctx.json {
        println!("{value}");
    } else {
        println!("{}", text());
    }
}

fn cmd_lock(ctx: &Ctx, a: LockArgs) -> Result<ExitCode> {
    let s = &ctx.settings;
    let input: PathBuf = s.need(a.input, "input")?;
    let scheme: Scheme = s.need(a.scheme, "scheme")?;
    let width: usize = s.need(a.key_width, "key-width")?;
    let out = s.get(a.out, "out")?.unwrap_or_else(|| default_out("locked"));
    let nl = read_bench(&input)?;
    let recipe = with_params(LockRecipe::new(scheme, width, ctx.seed), &params_of(s, a.params)?)?;
    let lc = lock(&nl, &recipe)?;
    lc.save(&out)?;
    emit(
        ctx,
        json!({ "out": out, "scheme": scheme, "key_width": width, "key": lc.correct_key.to_string(),
                "gates": lc.netlist.gate_count() }),
        || format!("locked {} with {scheme} ({width} key bits) into {}", nl.name(), out.display()),
    );
    Ok(ExitCode::SUCCESS)
}

fn bench_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "bench"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn parse_split(spec: &str, seed: u64) -> Result<Option<SplitPolicy>> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let list = || rest.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect::<Vec<_>>();
    Ok(match kind {
        "none" => None,
        "random" => {
            let fraction = rest.parse().map_err(|_| usage(format!("bad split fraction `{rest}`")))?;
            Some(SplitPolicy::Random { fraction, seed })
        }
        "circuit" => Some(SplitPolicy::ByCircuit { holdout: list() }),
        "scheme" => Some(SplitPolicy::ByScheme {
            holdout: list().iter().map(|x| x.parse()).collect::<Result<_, _>>().map_err(|e| usage(format!("{e}")))?,
        }),
        _ => return Err(usage(format!("unknown split `{spec}`"))),
    })
}

fn cmd_dataset(ctx: &Ctx, a: DatasetArgs) -> Result<ExitCode> {
    let s = &ctx.settings;
    let mut inputs = a.inputs;
    if inputs.is_empty() {
        if let Some(list) = s.get::<String>(None, "inputs")? {
            inputs = list.split(',').map(PathBuf::from).collect();
        }
    }
    let mut originals: Vec<Netlist> = bench_files(&inputs)?.iter().map(|f| read_bench(f)).collect::<Result<_>>()?;
    let synthetic: usize = s.or(a.synthetic, "synthetic", 0)?;
    originals.extend(desk_suite(synthetic, ctx.seed));
    if originals.is_empty() {
        return Err(usage("no circuits: give BENCH inputs or --synthetic N"));
    }
    let schemes: String = s.or(a.schemes, "schemes", "xor".to_string())?;
    let width: usize = s.or(a.key_width, "key-width", 8)?;
    let params = params_of(s, a.params)?;
    let recipes = schemes
        .split(',')
        .map(|x| {
            let scheme: Scheme = x.trim().parse().map_err(|e| usage(format!("{e}")))?;
            with_params(LockRecipe::new(scheme, width, ctx.seed), &params)
        })
        .collect::<Result<Vec<_>>>()?;
    let policy = match s.or(a.wrong_key_policy, "wrong-key-policy", "uniform".to_string())?.as_str() {
        "uniform" => WrongKeyPolicy::Uniform,
        "stratified" => WrongKeyPolicy::Stratified,
        other => return Err(usage(format!("unknown wrong-key policy `{other}`"))),
    };
    let defaults = DatasetConfig::default();
    let cfg = DatasetConfig {
        wrong_keys: s.or(a.wrong_keys, "wrong-keys", defaults.wrong_keys)?,
        variants: s.or(a.variants, "variants", defaults.variants)?,
        seed: ctx.seed,
        passes: s.or(a.passes, "passes", defaults.passes)?,
        wrong_key_policy: policy,
        er_mode: match s.get(a.er_samples, "er-samples")? {
            Some(n) => ErMode::monte_carlo(n, ctx.seed),
            None => ErMode::exhaustive(),
        },
    };
    let mut ds = build_dataset(&originals, &recipes, &cfg, ctx.exec)?;
    if let Some(split) = parse_split(&s.or(a.split, "split", "random:0.25".to_string())?, ctx.seed)? {
        ds.split(&split)?;
    }
    let out = s.get(a.out, "out")?.unwrap_or_else(|| default_out("dataset"));
    ds.save(&out)?;
    let validation = ds.entries_in(Split::Validation).count();
    emit(
        ctx,
        json!({ "out": out, "rows": ds.rows.len(), "entries": ds.entries.len(), "validation_entries": validation }),
        || format!("{} rows over {} locked circuits ({validation} held out) in {}", ds.rows.len(), ds.entries.len(), out.display()),
    );
    Ok(ExitCode::SUCCESS)
}

fn feature_map(name: &str, seed: u64, ds: &Dataset) -> Result<FeatureMap> {
    let corpus: Vec<&Netlist> = ds.entries.iter().map(|e| &e.locked.netlist).collect();
    Ok(match name {
        "default" => FeatureMap::default(),
        "first-seen" => FeatureMap::build(FeaturePolicy::Default, &corpus),
        "random" => FeatureMap::build(FeaturePolicy::Random(seed), &corpus),
        "by-count" => FeatureMap::build(FeaturePolicy::ByGateCountDesc, &corpus),
        _ => return Err(usage(format!("unknown feature map `{name}`"))),
    })
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> Result<ExitCode> {
    let s = &ctx.settings;
    let dir: PathBuf = s.need(a.dataset, "dataset")?;
    let ds = Dataset::load(&dir)?;
    let fmap = feature_map(&s.or(a.feature_map, "feature-map", "default".to_string())?, ctx.seed, &ds)?;
    let hd = Hyper::default();
    let readout = match s.or(a.readout, "readout", "sum".to_string())?.as_str() {
        "sum" => Readout::Sum,
        "mean" => Readout::Mean,
        other => return Err(usage(format!("unknown readout `{other}`"))),
    };
    let hyper = Hyper {
        hidden: s.or(a.hidden, "hidden", hd.hidden)?,
        layers: s.or(a.layers, "layers", hd.layers)?,
        readout,
        hops: s.or(a.hops, "hops", hd.hops)?,
        seed: ctx.seed,
        ..hd
    };
    let td = TrainConfig::default();
    let cfg = TrainConfig {
        max_epochs: s.or(a.epochs, "epochs", td.max_epochs)?,
        warm_epochs: s.or(a.warm_epochs, "warm-epochs", td.warm_epochs)?,
        lr_start: s.or(a.lr_start, "lr-start", td.lr_start)?,
        lr_peak: s.or(a.lr_peak, "lr-peak", td.lr_peak)?,
        patience: s.or(a.patience, "patience", td.patience)?,
        batch_size: s.or(a.batch_size, "batch-size", td.batch_size)?,
        loss_weights: LossWeights {
            key: s.or(a.key_weight, "key-weight", 1.0)?,
            er: s.or(a.er_weight, "er-weight", 1.0)?,
        },
        seed: ctx.seed,
        ..td
    };
    let spec = SampleSpec {
        hops: hyper.hops,
        er_samples: !s.flag(a.no_er_samples, "no-er-samples")?,
        complemented: s.flag(a.complemented, "complemented")?,
    };
    let tr = samples_from_dataset(&ds, &fmap, &spec, Split::Train, ctx.exec)?;
    let va = samples_from_dataset(&ds, &fmap, &spec, Split::Validation, ctx.exec)?;
    let mut model = GinModel::new(hyper, fmap);
    let history = train(&mut model, &tr, &va, &cfg, ctx.exec)?;
    let out = s.get(a.out, "out")?.unwrap_or_else(|| default_out("model.bin"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    model.save(&out)?;
    if let Some(path) = s.get(a.history, "history")? {
        std::fs::write(&path, history.to_csv())?;
    }
    if ctx.json {
        print!("{}", history.to_json_lines());
    } else {
        for r in &history.epochs {
            let val = r.val_key_acc.map(|v| format!(" val_acc {v:.4}")).unwrap_or_default();
            println!("epoch {:3} lr {:.5} loss {:.5} key_acc {:.4} er_mse {:.5}{val}", r.epoch, r.lr, r.loss, r.key_acc, r.er_mse);
        }
        println!(
            "stopped ({:?}) after {} epochs; best epoch {}; model in {}",
            history.stop,
            history.epochs.len(),
            history.best_epoch,
            out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn read_locked(path: &Path) -> Result<Netlist> {
    if path.is_dir() {
        Ok(LockedCircuit::load(path)?.netlist)
    } else {
        read_bench(path)
    }
}

fn parse_mode(s: &Settings, flag: Option<String>) -> Result<AttackMode> {
    s.or(flag, "mode", "structure".to_string())?.parse().map_err(usage)
}

fn cmd_attack(ctx: &Ctx, a: AttackArgs) -> Result<ExitCode> {
    let s = &ctx.settings;
    let nl = read_locked(&s.need::<PathBuf>(a.locked, "locked")?)?;
    let model = GinModel::load(&s.need::<PathBuf>(a.model, "model")?)?;
    let mode = parse_mode(s, a.mode)?;
    let r = attack(&model, &nl, mode)?;
    let report = json!({
        "circuit": nl.name(),
        "key": r.key.to_string(),
        "structure_key": r.structure_key.to_string(),
        "bit_probs": r.bit_probs,
        "flips": r.flips,
        "predicted_er": r.predicted_er,
    });
    if let Some(out) = s.get::<PathBuf>(a.out, "out")? {
        std::fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    emit(ctx, report, || format!("{}", r.key));
    Ok(ExitCode::SUCCESS)
}

fn cmd_explain(ctx: &Ctx, a: ExplainArgs) -> Result<ExitCode> {
    let s = &ctx.settings;
    let nl = read_locked(&s.need::<PathBuf>(a.locked, "locked")?)?;
    let model = GinModel::load(&s.need::<PathBuf>(a.model, "model")?)?;
    let bits: Vec<usize> = match s.get(a.bit, "bit")? {
        Some(b) if b >= nl.p() => return Err(usage(format!("bit {b} out of range for {} key bits", nl.p()))),
        Some(b) => vec![b],
        None => (0..nl.p()).collect(),
    };
    let ed = ExplainConfig::default();
    let cfg = ExplainConfig {
        k: s.or(a.k, "k", ed.k)?,
        steps: s.or(a.steps, "steps", ed.steps)?,
        lr: s.or(a.lr, "lr", ed.lr)?,
        lambda: s.or(a.lambda, "lambda", ed.lambda)?,
        seed: ctx.seed,
    };
    let graphs = bits
        .iter()
        .map(|&i| key_bit_subgraph(&nl, i, model.hyper.hops, &model.fmap, None))
        .collect::<Result<Vec<_>, _>>()?;
    let expls = explain_all(&model, &graphs, &cfg, ctx.exec)?;
    let out = s.get(a.out, "out")?.unwrap_or_else(|| default_out("explain"));
    std::fs::create_dir_all(&out)?;
    let mut summary = Vec::new();
    for (&i, e) in bits.iter().zip(&expls) {
        std::fs::write(out.join(format!("bit{i}.json")), serde_json::to_string_pretty(&e.to_json())? + "\n")?;
        std::fs::write(out.join(format!("bit{i}.dot")), e.to_dot())?;
        let top: Vec<_> = e.top_k.iter().map(|&j| (&e.node_ids[e.edges[j].0], &e.node_ids[e.edges[j].1])).collect();
        summary.push(json!({ "bit": i, "predicted": e.predicted_label, "top_edges": top }));
    }
    emit(ctx, json!({ "out": out, "bits": summary }), || {
        let mut t = String::new();
        for v in &summary {
            t.push_str(&format!("bit {}: predicted {} via {}\n", v["bit"], v["predicted"], v["top_edges"]));
        }
        t + &format!("explanations in {}", out.display())
    });
    Ok(ExitCode::SUCCESS)
}

struct Check {
    metric: String,
    op: String,
    bound: f64,
}

fn parse_check(text: &str) -> Result<Check> {
    let at = text.find(['<', '>', '=']).ok_or_else(|| usage(format!("assertion `{text}` has no comparison")))?;
    let (metric, rest) = text.split_at(at);
    let op_len = if rest[1..].starts_with('=') { 2 } else { 1 };
    let (op, bound) = rest.split_at(op_len);
    if !matches!(op, ">=" | "<=" | ">" | "<" | "==") {
        return Err(usage(format!("bad comparison `{op}` in `{text}`")));
    }
    let metric = metric.trim().to_string();
    if !matches!(metric.as_str(), "key-precision" | "prediction-accuracy") {
        return Err(usage(format!("unknown metric `{metric}`")));
    }
    let bound = bound.trim().parse().map_err(|_| usage(format!("bad bound in `{text}`")))?;
    Ok(Check { metric, op: op.to_string(), bound })
}

impl Check {
    fn holds(&self, v: f64) -> bool {
        match self.op.as_str() {
            ">=" => v >= self.bound,
            "<=" => v <= self.bound,
            ">" => v > self.bound,
            "<" => v < self.bound,
            _ => v == self.bound,
        }
    }
}

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> Result<ExitCode> {
    let s = &ctx.settings;
    let mut asserts = a.asserts;
    if asserts.is_empty() {
        if let Some(list) = s.get::<String>(None, "assert")? {
            asserts = list.split(',').map(str::to_string).collect();
        }
    }
    let checks = asserts.iter().map(|t| parse_check(t)).collect::<Result<Vec<_>>>()?;
    let ds = Dataset::load(&s.need::<PathBuf>(a.dataset, "dataset")?)?;
    let model = GinModel::load(&s.need::<PathBuf>(a.model, "model")?)?;
    let mode = parse_mode(s, a.mode)?;
    let split = s.or(a.split, "split", "validation".to_string())?;
    let entries: Vec<_> = match split.as_str() {
        "all" => ds.entries.iter().collect(),
        "train" => ds.entries_in(Split::Train).collect(),
        "validation" => ds.entries_in(Split::Validation).collect(),
        other => return Err(usage(format!("unknown split `{other}`"))),
    };
    if entries.is_empty() {
        bail!("split `{split}` has no circuits");
    }
    let records = lockbench::par::map(ctx.exec, &entries, |e| -> Result<AttackRecord> {
        let nl = &e.locked.netlist;
        let r = attack(&model, nl, mode)?;
        Ok(AttackRecord {
            scheme_set: e.locked.recipe.scheme.to_string(),
            circuit: nl.name().to_string(),
            prediction_accuracy: prediction_accuracy(&r.key, &e.locked.correct_key)?,
            key_precision: key_precision(&ds.originals[e.original], nl, &r.key, ds.config.er_mode)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let table = report_table(&records, ctx.seed)?;
    if let Some(path) = s.get::<PathBuf>(a.table, "table")? {
        std::fs::write(path, table.to_csv())?;
    }
    let n = records.len() as f64;
    let pa = records.iter().map(|r| r.prediction_accuracy).sum::<f64>() / n;
    let kp = records.iter().map(|r| r.key_precision).sum::<f64>() / n;
    let results: Vec<_> = checks
        .iter()
        .map(|c| {
            let v = if c.metric == "key-precision" { kp } else { pa };
            (c, v, c.holds(v))
        })
        .collect();
    let ok = results.iter().all(|r| r.2);
    emit(
        ctx,
        json!({
            "rows": table.rows,
            "prediction_accuracy": pa,
            "key_precision": kp,
            "assertions": results.iter().map(|(c, v, pass)| json!({
                "metric": c.metric, "op": c.op, "bound": c.bound, "value": v, "pass": pass,
            })).collect::<Vec<_>>(),
        }),
        || {
            let mut t = table.to_text();
            t.push_str(&format!("overall: prediction accuracy {pa:.2}%, key precision {kp:.2}%"));
            for (c, v, pass) in &results {
                let verdict = if *pass { "ok" } else { "FAILED" };
                t.push_str(&format!("\nassert {}{}{}: {v:.2} {verdict}", c.metric, c.op, c.bound));
            }
            t
        },
    );
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
