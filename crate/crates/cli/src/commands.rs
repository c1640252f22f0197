use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use eann::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use eann::eval::{class_emoji_distribution, error_emoji_analysis, mcnemar, AttentionExplanation};
use eann::gradcheck::{check_model, tiny_problem};
use eann::layers::Mode;
use eann::model::{EmojiSource, Model};
use eann::preprocess::{
    build_vocab, corpus_stats, dataset_to_string, document_emotion, load_dataset, load_sidecar, stratified_split,
    stub_emotion_encoder, Document, Glove, Label, Truncation, DEFAULT_RATIOS,
};
use eann::train::{train_with, EpochLog};
use eann::Exec;

use crate::config::RunConfig;
use crate::{
    AnalyzeEmojiArgs, CheckFailed, Common, CompareArgs, Dims, EmojiArgs, ExplainArgs, GradcheckArgs, ModelDataArgs,
    SplitArgs, TrainArgs, UsageError,
};

/// Loaded config with the seed resolved and common flags applied.
fn setup(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    cfg.resolve_seed(common.seed)?;
    override_path(&mut cfg.paths.out_dir, &common.out);
    override_path(&mut cfg.paths.emotion, &common.emotion);
    if common.sequential {
        cfg.train.exec = Exec::Sequential;
    }
    Ok(cfg)
}

fn override_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if let Some(p) = flag {
        *slot = Some(p.clone());
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| UsageError(format!("missing --{flag} (or its [paths] entry in the config)")).into())
}

fn exec(cfg: &RunConfig) -> Exec {
    cfg.train.exec
}

/// Reads a dataset, rejects duplicate ids and attaches the sidecar if one
/// is configured.
fn load_docs(path: &Path, cfg: &RunConfig) -> Result<Vec<Document>> {
    let mut docs = load_dataset(path)?;
    let mut seen = HashSet::new();
    for d in &docs {
        if !seen.insert(d.id.as_str()) {
            bail!("{}: duplicate document id `{}`", path.display(), d.id);
        }
    }
    if let Some(sidecar) = &cfg.paths.emotion {
        attach_sidecar(&mut docs, sidecar)?;
    }
    Ok(docs)
}

fn attach_sidecar(docs: &mut [Document], sidecar: &Path) -> Result<()> {
    let mut vectors = load_sidecar(sidecar)?;
    for d in docs.iter_mut() {
        let v = vectors
            .remove(&d.id)
            .ok_or_else(|| anyhow!("{}: no emotion vector for document `{}`", sidecar.display(), d.id))?;
        d.set_emoji(v)?;
    }
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    required(&cfg.paths.out_dir, "out")
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| serde_json::to_string(x).expect("serializable") + "\n")
        .collect()
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn split(args: SplitArgs) -> Result<Value> {
    let mut cfg = setup(&args.common)?;
    override_path(&mut cfg.paths.data, &args.data);
    let data = required(&cfg.paths.data, "data")?;
    let out = out_dir(&cfg)?;
    let docs = load_docs(data, &cfg)?;
    let seed = cfg.seed.expect("resolved");
    let splits = stratified_split(&docs, DEFAULT_RATIOS, seed)?;

    create_out(out)?;
    let mut summary = json!({ "command": "split", "seed": seed });
    for (name, part) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
        write(&out.join(format!("{name}.jsonl")), dataset_to_string(part))?;
        summary[name] = serde_json::to_value(corpus_stats(part))?;
    }
    cfg.write_resolved(out)?;
    Ok(summary)
}

pub fn emoji(args: EmojiArgs) -> Result<Value> {
    let mut cfg = setup(&args.common)?;
    override_path(&mut cfg.paths.data, &args.data);
    // The sidecar is the input here, not something to pre-attach.
    let sidecar = args.sidecar.or(cfg.paths.emotion.take());
    let data = required(&cfg.paths.data, "data")?.to_path_buf();
    let out = out_dir(&cfg)?.to_path_buf();
    let mut docs = load_docs(&data, &cfg)?;
    let source = match &sidecar {
        Some(path) => {
            attach_sidecar(&mut docs, path)?;
            "sidecar"
        }
        None => {
            for d in docs.iter_mut() {
                let v = document_emotion(&d.text, stub_emotion_encoder);
                d.set_emoji(v)?;
            }
            "stub"
        }
    };
    let name = data.file_name().ok_or_else(|| UsageError("--data must name a file".into()))?;
    let target = out.join(name);
    if target == data {
        return Err(UsageError(format!("--out would overwrite the input {}", data.display())).into());
    }
    cfg.paths.emotion = sidecar;

    create_out(&out)?;
    write(&target, dataset_to_string(&docs))?;
    cfg.write_resolved(&out)?;
    Ok(json!({
        "command": "emoji",
        "source": source,
        "documents": docs.len(),
        "output": display(&target),
    }))
}

fn apply_train_flags(cfg: &mut RunConfig, a: &TrainArgs) {
    override_path(&mut cfg.paths.train, &a.train);
    override_path(&mut cfg.paths.val, &a.val);
    override_path(&mut cfg.paths.embeddings, &a.embeddings);
    let m = &mut cfg.model;
    if let Some(v) = a.variant {
        m.variant = v;
    }
    if let Some(d) = a.embed_dim {
        m.embed_dim = d;
    }
    if let Some(p) = a.dropout {
        m.dropout = p;
    }
    if a.finetune_embeddings {
        m.finetune_embeddings = true;
    }
    if a.truncate_tail {
        m.truncation = Truncation::KeepLast;
    }
    if a.emoji_probabilities {
        m.emoji_source = EmojiSource::Probabilities;
    }
    let t = &mut cfg.train;
    if let Some(e) = a.epochs {
        t.epochs = e;
    }
    if let Some(lr) = a.lr {
        t.lr = lr;
    }
    if let Some(b) = a.batch_size {
        t.batch_size = b;
    }
    if let Some(c) = a.clip_norm {
        t.clip_norm = Some(c);
    }
}

pub fn train(args: TrainArgs) -> Result<Value> {
    let mut cfg = setup(&args.common)?;
    apply_train_flags(&mut cfg, &args);
    cfg.model.validate().map_err(|e| UsageError(e.to_string()))?;
    cfg.train.validate().map_err(|e| UsageError(e.to_string()))?;
    let train_path = required(&cfg.paths.train, "train")?;
    let val_path = required(&cfg.paths.val, "val")?;
    let out = out_dir(&cfg)?.to_path_buf();

    let train_docs = load_docs(train_path, &cfg)?;
    let val_docs = load_docs(val_path, &cfg)?;
    let glove = match &cfg.paths.embeddings {
        Some(p) => Glove::load(p, cfg.model.embed_dim)?,
        None => {
            log::warn!("no embeddings given; every token starts from a random vector");
            Glove::new(cfg.model.embed_dim)
        }
    };
    let (vocab, table) = build_vocab(&train_docs, &glove, cfg.model.seed)?;
    let model = Model::build(cfg.model.clone(), table, vocab)?;
    // Surface missing emotion vectors before any output exists.
    model.prepare_all(&train_docs)?;
    model.prepare_all(&val_docs)?;

    create_out(&out)?;
    cfg.write_resolved(&out)?;
    let log_path = out.join("train_log.jsonl");
    let mut log_file =
        std::io::BufWriter::new(std::fs::File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    let outcome = train_with(model, &train_docs, &val_docs, &cfg.train, |entry: &EpochLog| {
        let line = serde_json::to_string(entry)? + "\n";
        log_file
            .write_all(line.as_bytes())
            .and_then(|_| log_file.flush())
            .map_err(|e| eann::Error::Io {
                path: log_path.clone(),
                source: e,
            })
    })?;
    drop(log_file);
    let ckpt_path = out.join("model.ckpt");
    save_checkpoint(&Checkpoint::new(outcome.best, Some(outcome.best_epoch)), &ckpt_path)?;
    Ok(json!({
        "command": "train",
        "variant": cfg.model.variant,
        "epochs": outcome.log.len(),
        "best_epoch": outcome.best_epoch.epoch,
        "val_macro_f1": outcome.best_epoch.val_macro_f1,
        "final_train_loss": outcome.log.last().map(|l| l.train_loss),
        "checkpoint": display(&ckpt_path),
    }))
}

/// Config, model and documents for the commands that apply a checkpoint.
fn load_model_and_data(a: &ModelDataArgs) -> Result<(RunConfig, Model, Vec<Document>)> {
    let mut cfg = setup(&a.common)?;
    override_path(&mut cfg.paths.checkpoint, &a.model);
    override_path(&mut cfg.paths.data, &a.data);
    let ckpt = load_checkpoint(required(&cfg.paths.checkpoint, "model")?)?;
    let docs = load_docs(required(&cfg.paths.data, "data")?, &cfg)?;
    let model = ckpt.model;
    model.prepare_all(&docs)?;
    cfg.model = model.config().clone();
    Ok((cfg, model, docs))
}

pub fn evaluate(args: ModelDataArgs) -> Result<Value> {
    let (cfg, model, docs) = load_model_and_data(&args)?;
    let report = eann::eval::evaluate(&model, &docs, exec(&cfg))?;
    let mut summary = json!({ "command": "evaluate" });
    summary["report"] = serde_json::to_value(&report)?;
    if let Some(out) = &cfg.paths.out_dir {
        create_out(out)?;
        write(&out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        cfg.write_resolved(out)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub predicted: Label,
    /// Probability of the offensive class.
    pub score: f64,
}

pub fn predict(args: ModelDataArgs) -> Result<Value> {
    let (cfg, model, docs) = load_model_and_data(&args)?;
    let out = out_dir(&cfg)?;
    let preds = model.predict(&docs, exec(&cfg))?;
    let records: Vec<PredictionRecord> = docs
        .iter()
        .zip(preds.labels.iter().zip(&preds.scores))
        .map(|(d, (&predicted, &score))| PredictionRecord {
            id: d.id.clone(),
            predicted,
            score,
        })
        .collect();
    create_out(out)?;
    let path = out.join("predictions.jsonl");
    write(&path, jsonl(&records))?;
    cfg.write_resolved(out)?;
    Ok(json!({
        "command": "predict",
        "documents": records.len(),
        "offensive": preds.labels.iter().filter(|&&l| l == Label::Offensive).count(),
        "output": display(&path),
    }))
}

pub fn explain(args: ExplainArgs) -> Result<Value> {
    let (cfg, model, docs) = load_model_and_data(&args.inner)?;
    if model.config().variant.attention().is_none() {
        return Err(UsageError(format!("{} has no attention layer to explain", model.config().variant)).into());
    }
    let out = out_dir(&cfg)?;
    let wanted: HashSet<&str> = args.ids.iter().map(String::as_str).collect();
    let known: HashSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    if let Some(missing) = args.ids.iter().find(|id| !known.contains(id.as_str())) {
        bail!("document `{missing}` is not in the dataset");
    }
    let mut records: Vec<AttentionExplanation> = Vec::new();
    let mut skipped = 0;
    for d in &docs {
        if !wanted.is_empty() && !wanted.contains(d.id.as_str()) {
            continue;
        }
        if d.tokens.is_empty() {
            if wanted.contains(d.id.as_str()) {
                bail!("document `{}` has no tokens to explain", d.id);
            }
            skipped += 1;
            continue;
        }
        records.push(eann::eval::explain(&model, d)?);
    }
    create_out(out)?;
    let path = out.join("explanations.jsonl");
    write(&path, jsonl(&records))?;
    cfg.write_resolved(out)?;
    Ok(json!({
        "command": "explain",
        "documents": records.len(),
        "skipped_empty": skipped,
        "output": display(&path),
    }))
}

fn load_predictions(path: &Path) -> Result<HashMap<String, Label>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = HashMap::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: PredictionRecord =
            serde_json::from_str(line).with_context(|| format!("{}: line {}", path.display(), n + 1))?;
        if out.insert(r.id.clone(), r.predicted).is_some() {
            bail!("{}: duplicate prediction for `{}`", path.display(), r.id);
        }
    }
    Ok(out)
}

/// Predictions aligned with `docs`; every document must be covered.
fn aligned(docs: &[Document], preds: &HashMap<String, Label>, path: &Path) -> Result<Vec<Label>> {
    if preds.len() != docs.len() {
        bail!("{} holds {} predictions for {} gold documents", path.display(), preds.len(), docs.len());
    }
    docs.iter()
        .map(|d| {
            preds
                .get(&d.id)
                .copied()
                .ok_or_else(|| anyhow!("{}: no prediction for `{}`", path.display(), d.id))
        })
        .collect()
}

pub fn compare(args: CompareArgs) -> Result<Value> {
    let cfg = setup(&args.common)?;
    let docs = load_docs(&args.gold, &cfg)?;
    let gold: Vec<Label> = docs.iter().map(|d| d.label).collect();
    let a = aligned(&docs, &load_predictions(&args.a)?, &args.a)?;
    let b = aligned(&docs, &load_predictions(&args.b)?, &args.b)?;
    let result = mcnemar(&gold, &a, &b)?;
    let mut summary = serde_json::to_value(result)?;
    summary["command"] = json!("compare");
    if let Some(out) = &cfg.paths.out_dir {
        create_out(out)?;
        write(&out.join("mcnemar.json"), serde_json::to_string_pretty(&result)? + "\n")?;
        cfg.write_resolved(out)?;
    }
    Ok(summary)
}

pub fn analyze_emoji(args: AnalyzeEmojiArgs) -> Result<Value> {
    let mut cfg = setup(&args.common)?;
    override_path(&mut cfg.paths.data, &args.data);
    let docs = load_docs(required(&cfg.paths.data, "data")?, &cfg)?;
    let out = out_dir(&cfg)?;
    if let Some(bad) = args.subset.iter().find(|&&i| i >= eann::layers::EMOJI_DIM) {
        return Err(UsageError(format!("emoji index {bad} is out of range")).into());
    }
    let subset = (!args.subset.is_empty()).then_some(args.subset.as_slice());
    let dist = class_emoji_distribution(&docs, subset)?;
    let errors = match &args.predictions {
        Some(p) => {
            let predicted = aligned(&docs, &load_predictions(p)?, p)?;
            Some(error_emoji_analysis(&docs, &predicted)?)
        }
        None => None,
    };

    create_out(out)?;
    write(&out.join("class_emoji.csv"), dist.to_csv())?;
    let mut summary = json!({ "command": "analyze-emoji", "documents": docs.len(), "emojis": dist.indices.len() });
    if let Some(e) = &errors {
        write(&out.join("error_emoji.json"), serde_json::to_string_pretty(e)? + "\n")?;
        summary["empty_cells"] = json!([
            ("correct_neutral", e.correct_neutral.empty),
            ("correct_offensive", e.correct_offensive.empty),
            ("incorrect_neutral", e.incorrect_neutral.empty),
            ("incorrect_offensive", e.incorrect_offensive.empty),
        ]
        .iter()
        .filter(|(_, empty)| *empty)
        .map(|(name, _)| *name)
        .collect::<Vec<_>>());
    }
    cfg.write_resolved(out)?;
    Ok(summary)
}

/// Default tiny instance. Random instances can contain coordinates whose
/// gradient (~1e-9) is below the finite-difference roundoff floor.
const GRADCHECK_SEED: u64 = 1;

pub fn gradcheck(args: GradcheckArgs) -> Result<Value> {
    let seed = if args.seed.is_none() && std::env::var(crate::config::SEED_ENV).is_err() {
        GRADCHECK_SEED
    } else {
        RunConfig::default().resolve_seed(args.seed)?
    };
    if args.docs < 2 {
        return Err(UsageError("--docs must be at least 2 (batch norm)".into()).into());
    }
    let Dims::Tiny = args.dims;
    let (model, docs) = tiny_problem(args.variant, args.docs, seed)?;
    let mut worst = None;
    let mut per_mode = serde_json::Map::new();
    for (name, mode) in [("infer", Mode::Infer), ("train", Mode::Train)] {
        let r = check_model(&model, &docs, mode, Exec::Parallel)?;
        per_mode.insert(name.into(), json!(r.max_rel_err));
        if worst.as_ref().is_none_or(|w: &eann::gradcheck::GradCheckReport| r.max_rel_err > w.max_rel_err) {
            worst = Some(r);
        }
    }
    let worst = worst.expect("two modes ran");
    let pass = worst.max_rel_err < args.tolerance;
    let summary = json!({
        "command": "gradcheck",
        "variant": args.variant,
        "seed": seed,
        "max_rel_err": worst.max_rel_err,
        "worst": worst.worst,
        "coordinates": worst.coordinates,
        "modes": per_mode,
        "tolerance": args.tolerance,
        "pass": pass,
    });
    if pass {
        Ok(summary)
    } else {
        Err(CheckFailed(summary).into())
    }
}
