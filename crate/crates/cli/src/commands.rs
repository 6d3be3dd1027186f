use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use hybrid_bn::data::io::{parse_record, read_embeddings, write_embeddings, write_records};
use hybrid_bn::data::{build_dataset, default_ground_truth, Diagnosis, EmbedderSpec, SyntheticEmbedder};
use hybrid_bn::discrete::DiscreteBn;
use hybrid_bn::eval::{run_experiment, ExperimentPlan, ModelKind, ResultRow, ResultTable, TrainedModel};
use hybrid_bn::evidence::EvidencePattern;
use hybrid_bn::Embedding;

use crate::config::{hash_json, require_seed, sha256_file, FileConfig};
use crate::store::{self, CheckpointManifest};
use crate::{EvaluateArgs, EvidenceArg, InferArgs, ModelArg, ReportArgs, SimulateArgs, TrainArgs};

fn model_kind(model: ModelArg, ablate: bool) -> Result<ModelKind> {
    Ok(match (model, ablate) {
        (ModelArg::Bn, false) => ModelKind::Bn,
        (ModelArg::Bnpp, false) => ModelKind::BnPlus,
        (ModelArg::Ff, false) => ModelKind::Ff,
        (ModelArg::Gen, false) => ModelKind::Gen,
        (ModelArg::Discr, false) => ModelKind::Discr,
        (ModelArg::Gen, true) => ModelKind::GenAblated,
        (ModelArg::Discr, true) => ModelKind::DiscrAblated,
        (m, true) => bail!("--ablate applies to gen and discr only, not {m:?}"),
    })
}

fn pattern(e: EvidenceArg) -> EvidencePattern {
    match e {
        EvidenceArg::Bst => EvidencePattern::Bst,
        EvidenceArg::Bs => EvidencePattern::Bs,
        EvidenceArg::Bt => EvidencePattern::Bt,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct SimulateManifest {
    seed: u64,
    n_train: usize,
    n_test: usize,
    config_hash: String,
    ground_truth: String,
    files: BTreeMap<String, String>,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let seed = require_seed(a.common.seed, &file, "simulate")?;
    let gt_path = a.ground_truth.or(file.ground_truth.clone());
    let gt = match &gt_path {
        Some(p) => DiscreteBn::load(p).with_context(|| format!("loading ground truth {}", p.display()))?,
        None => default_ground_truth(),
    };
    let n_train = a.n_train.or(file.n_train).unwrap_or(4000);
    let n_test = a.n_test.or(file.n_test).unwrap_or(1000);
    let params = file.embedder.unwrap_or_default();
    let embedder = EmbedderSpec::Synthetic(SyntheticEmbedder::generate(&params)?);
    let split = build_dataset(&gt, &embedder, n_train, n_test, seed)?;

    let out = &a.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_records(&out.join(store::TRAIN), &split.train.records, false)?;
    write_records(&out.join(store::TEST), &split.test.records, false)?;
    write_records(&out.join(store::TRAIN_EXT), &split.train.records, true)?;
    write_records(&out.join(store::TEST_EXT), &split.test.records, true)?;
    write_embeddings(&out.join(store::EMBEDDINGS), &[&split.train, &split.test])?;

    let mut files = BTreeMap::new();
    for f in [store::TRAIN, store::TEST, store::TRAIN_EXT, store::TEST_EXT, store::EMBEDDINGS] {
        files.insert(f.to_string(), sha256_file(&out.join(f))?);
    }
    let resolved = (seed, n_train, n_test, &gt_path, params);
    write_json(
        &out.join(store::MANIFEST),
        &SimulateManifest {
            seed,
            n_train,
            n_test,
            config_hash: hash_json(&resolved)?,
            ground_truth: gt_path.map_or("built-in default".into(), |p| p.display().to_string()),
            files,
        },
    )?;

    let thirds = hybrid_bn::data::partition_sizes(n_train);
    println!("train: {n_train} records (symptoms masked {}, text masked {}, fully observed {})", thirds[0], thirds[1], thirds[2]);
    println!("test:  {n_test} records (fully observed)");
    for d in Diagnosis::ALL {
        println!(
            "{:<5} positives: train {}, test {}",
            d.name(),
            split.train.positives(d),
            split.test.positives(d)
        );
    }
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let kind = model_kind(a.model, a.ablate)?;
    let seed = if kind.is_stochastic() {
        require_seed(a.common.seed, &file, "training this model")?
    } else {
        a.common.seed.or(file.seed).unwrap_or(0)
    };
    let cfg = file.model_config(a.alpha);
    let (train, _) = store::load_split(&a.data.data, a.data.embeddings.as_deref(), kind == ModelKind::BnPlus)?;
    let model = TrainedModel::train(kind, &train, &cfg, seed)?;
    let generative = matches!(kind, ModelKind::Gen | ModelKind::GenAblated);
    let manifest = CheckpointManifest {
        model: kind,
        seed,
        config: cfg,
        config_hash: hash_json(&(kind, seed, &cfg))?,
        alpha: generative.then_some(cfg.alpha),
        train_records: train.len(),
    };
    store::save_model(&a.out, &model, &manifest)?;
    println!("trained {kind} on {} records (seed {seed}) -> {}", train.len(), a.out.display());
    Ok(())
}

fn read_record_arg(arg: &str) -> Result<String> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok(arg.to_string());
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading record file {arg}"))?;
    text.lines()
        .find(|l| !l.trim().is_empty())
        .map(str::to_string)
        .with_context(|| format!("{arg} holds no record"))
}

pub fn infer(a: InferArgs) -> Result<()> {
    let (model, _) = store::load_model(&a.checkpoint)?;
    let kind = model.kind();
    let p = pattern(a.evidence);
    if !kind.admits(p) {
        bail!(
            "{kind} can only include background and symptoms as evidence; use --evidence bs (got {})",
            p.label()
        );
    }
    let json = read_record_arg(&a.record)?;
    let mut record = parse_record(&json)?;
    let raw: serde_json::Value = serde_json::from_str(&json)?;
    if record.text_present && p.uses_text() {
        let vec = match raw.get("vec") {
            Some(v) => Embedding::new(serde_json::from_value(v.clone())?)?,
            None => match &a.embeddings {
                Some(path) => read_embeddings(path)?.get(record.id)?.clone(),
                None => bail!("record {} has text: give its \"vec\" inline or pass --embeddings", record.id),
            },
        };
        record.embedding = Some(vec);
    }
    if kind == ModelKind::BnPlus && !record.has_hidden() {
        bail!("BN++ needs fever and pain in the record");
    }
    for d in Diagnosis::ALL {
        let post = model.posterior(&record, p, d)?;
        println!("P({} | {}) = {:.6}", d.name(), p.label(), post[1]);
    }
    if let TrainedModel::Discr(bank) | TrainedModel::DiscrAblated(bank) = &model {
        let evidence = p.evidence(&record, false);
        println!("classifier outputs:");
        for (key, out) in bank.explain(&evidence)? {
            println!("  {key} = {out:.6}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluateManifest<'a> {
    plan: &'a ExperimentPlan,
    config_hash: String,
    train_records: usize,
    test_records: usize,
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let seed = require_seed(a.common.seed, &file, "evaluate")?;
    let models = match a.model {
        Some(m) => vec![model_kind(m, a.ablate)?],
        None if a.ablate => bail!("--ablate needs --model gen or --model discr"),
        None => file.models()?.unwrap_or_else(|| ModelKind::ALL.to_vec()),
    };
    let seeds = match (a.seeds, &file.seeds) {
        (Some(n), _) => (seed..seed + n).collect(),
        (None, Some(list)) => list.clone(),
        (None, None) => (seed..seed + 5).collect(),
    };
    let plan = ExperimentPlan {
        models,
        patterns: EvidencePattern::ALL.to_vec(),
        seeds,
        config: file.model_config(a.alpha),
        report_auc: a.auc || file.report_auc.unwrap_or(false),
    };
    let (train, test) = store::load_split(&a.data.data, a.data.embeddings.as_deref(), true)?;
    let table = run_experiment(&plan, &train, &test)?;

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    std::fs::write(a.out.join("results.json"), table.to_json()?)?;
    std::fs::write(a.out.join("results.txt"), table.to_text())?;
    write_json(
        &a.out.join(store::MANIFEST),
        &EvaluateManifest { plan: &plan, config_hash: hash_json(&plan)?, train_records: train.len(), test_records: test.len() },
    )?;
    print!("{}", table.to_text());
    let failed: usize = table.rows.iter().map(ResultRow::failed).sum();
    if failed > 0 {
        eprintln!("warning: {failed} (cell, seed) results failed; see results.json");
    }
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.results).with_context(|| format!("reading {}", a.results.display()))?;
    let rows: Vec<ResultRow> = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.results.display()))?;
    let table = ResultTable { rows }.to_text();
    match a.out {
        Some(path) => std::fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{table}"),
    }
    Ok(())
}
