//! Batch front end for the silo-match pipeline.
//!
//! One command per stage: `fabricate` a synthetic benchmark, `profile`
//! silo columns, `train` a model over silo manifests, `predict` cross-silo
//! matches, `evaluate` a prediction report against ground truth, and
//! `experiment` for the ablation battery. Every command that writes
//! artifacts also writes a run manifest (config echo + input hashes +
//! output list) next to its primary output, so a run can be reproduced
//! from the manifest alone.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use silomatch_core::fabrication::{self, ScenarioConfig, ScenarioGroundTruth};
use silomatch_core::federation;
use silomatch_core::io::{self, reports};
use silomatch_core::neural::Dims;
use silomatch_core::profiling::{self, SiloProfiles, FEATURE_LEN};
use silomatch_core::sampling::{self, SamplerConfig, Strategy};
use silomatch_core::silo::Silo;
use silomatch_core::training::{self, TrainConfig, TrainedModel};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "silomatch",
    version,
    about = "Cross-silo column match discovery over tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-silo benchmark with ground truth.
    Fabricate(FabricateArgs),
    /// Profile silo columns into a feature matrix.
    Profile(ProfileArgs),
    /// Train a link-prediction model over silo manifests.
    Train(TrainArgs),
    /// Score cross-silo column pairs with a trained model.
    Predict(PredictArgs),
    /// Compare a prediction report against ground truth.
    Evaluate(EvaluateArgs),
    /// Run the ablation battery and emit a summary table.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct FabricateArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenario preset.
    #[arg(long, default_value = "default", value_parser = ["default", "high-perturbation"])]
    preset: String,
    /// Override rows per table.
    #[arg(long)]
    rows: Option<usize>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Silo manifests, one per silo.
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
    /// Profile matrix CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Silo manifests, one per silo. Omit when resuming.
    manifests: Vec<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[arg(long, default_value_t = silomatch_core::adam::DEFAULT_LR)]
    lr: f64,
    /// Negative sampling strategy.
    #[arg(long, default_value = "ns3", value_parser = parse_strategy)]
    sampling: Strategy,
    /// Train silo-by-silo with a split epoch budget.
    #[arg(long)]
    incremental: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    emb_dim: usize,
    #[arg(long, default_value_t = 300)]
    hidden_dim: usize,
    /// Continue training from an existing model file; silo set grows by
    /// the --add-silo manifests and the stored standardizer is kept.
    #[arg(long)]
    resume_from: Option<PathBuf>,
    /// Manifest of a silo to add when resuming (repeatable).
    #[arg(long = "add-silo")]
    add_silo: Vec<PathBuf>,
    /// Also write the per-epoch loss CSV here.
    #[arg(long)]
    loss_out: Option<PathBuf>,
    /// Also write the sampled negative-edge audit here.
    #[arg(long)]
    audit_out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Silo manifests to score across.
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Prediction report CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Scores strictly above this are predicted matches.
    #[arg(long, default_value_t = federation::DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Prediction report CSV (its pair set is the evaluation universe).
    #[arg(long)]
    predictions: PathBuf,
    /// Ground-truth pair CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Metrics JSON to write (also printed to stdout).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Seeds per configuration.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 200)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    emb_dim: usize,
    #[arg(long, default_value_t = 64)]
    hidden_dim: usize,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fabricate(a) => run_fabricate(a),
        Command::Profile(a) => run_profile(a),
        Command::Train(a) => run_train(a),
        Command::Predict(a) => run_predict(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Experiment(a) => run_experiment(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// `model.bin` → `model.bin.run.json`, next to the artifact.
fn run_manifest_path(primary_out: &Path) -> PathBuf {
    let mut name = primary_out
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".run.json");
    primary_out.with_file_name(name)
}

fn write_manifest(
    path: &Path,
    command: &str,
    config: serde_json::Value,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> anyhow::Result<()> {
    let manifest = reports::RunManifest {
        command: command.to_string(),
        config,
        inputs: reports::input_hashes(inputs)?,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    reports::write_run_manifest(path, &manifest)?;
    Ok(())
}

/// The manifest files plus every table file they reference, for hashing.
fn silo_input_files(manifests: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for m in manifests {
        files.push(m.clone());
        let text =
            std::fs::read_to_string(m).with_context(|| format!("reading {}", m.display()))?;
        let spec = io::manifest::parse_manifest(&text, &m.display().to_string())?;
        let dir = m.parent().unwrap_or_else(|| Path::new("."));
        for t in &spec.table_paths {
            files.push(dir.join(t));
        }
    }
    Ok(files)
}

fn load_silos(manifests: &[PathBuf]) -> anyhow::Result<Vec<Silo>> {
    let mut silos = Vec::with_capacity(manifests.len());
    let mut seen = BTreeSet::new();
    for m in manifests {
        let silo =
            io::load_silo(m).with_context(|| format!("loading silo from {}", m.display()))?;
        if !seen.insert(silo.silo_id.clone()) {
            bail!("duplicate silo id {:?}", silo.silo_id);
        }
        silos.push(silo);
    }
    Ok(silos)
}

fn run_fabricate(a: &FabricateArgs) -> anyhow::Result<()> {
    let mut cfg = match a.preset.as_str() {
        "high-perturbation" => fabrication::high_perturbation_scenario(a.seed),
        _ => fabrication::default_scenario(a.seed),
    };
    if let Some(rows) = a.rows {
        cfg.rows_per_table = rows;
    }
    let (silos, truth) = fabrication::fabricate_scenario(&cfg)?;
    std::fs::create_dir_all(&a.out)
        .with_context(|| format!("creating {}", a.out.display()))?;

    let mut outputs = Vec::new();
    for silo in &silos {
        let dir = a.out.join(&silo.silo_id);
        let manifest = io::write_silo(&dir, silo)?;
        for t in &silo.tables {
            outputs.push(dir.join(format!("{}.csv", t.table_id)));
        }
        outputs.push(manifest);
    }
    let truth_path = a.out.join("ground_truth.csv");
    reports::write_ground_truth(&truth_path, &truth.inter)?;
    outputs.push(truth_path);
    let domains_path = a.out.join("domains.csv");
    reports::write_domains(&domains_path, &truth.domain_of)?;
    outputs.push(domains_path);

    write_manifest(
        &a.out.join("run_manifest.json"),
        "fabricate",
        serde_json::to_value(&cfg)?,
        &[],
        &outputs,
    )?;
    log::info!(
        "fabricated {} silos, {} cross-silo truth pairs, into {}",
        silos.len(),
        truth.inter.len(),
        a.out.display()
    );
    Ok(())
}

fn run_profile(a: &ProfileArgs) -> anyhow::Result<()> {
    let silos = load_silos(&a.manifests)?;
    let profiles: Vec<SiloProfiles> = silos.iter().map(profiling::profile_silo).collect();
    for p in &profiles {
        for w in &p.warnings {
            log::warn!("{w}");
        }
    }
    reports::write_profile_matrix(&a.out, &profiles)?;
    let inputs = silo_input_files(&a.manifests)?;
    write_manifest(
        &run_manifest_path(&a.out),
        "profile",
        json!({ "manifests": path_strings(&a.manifests) }),
        &inputs,
        std::slice::from_ref(&a.out),
    )?;
    let n: usize = profiles.iter().map(|p| p.profiles.len()).sum();
    log::info!("profiled {n} columns into {}", a.out.display());
    Ok(())
}

fn run_train(a: &TrainArgs) -> anyhow::Result<()> {
    let (model, silos, manifest_paths) = if let Some(resume) = &a.resume_from {
        if a.add_silo.is_empty() {
            bail!("--resume-from requires at least one --add-silo");
        }
        if !a.manifests.is_empty() {
            bail!("positional manifests conflict with --resume-from; use --add-silo");
        }
        let prev = io::load_model(resume)?;
        let mut paths: Vec<PathBuf> = prev
            .provenance
            .manifest_paths
            .iter()
            .map(PathBuf::from)
            .collect();
        for p in &paths {
            if !p.exists() {
                bail!(
                    "manifest {} recorded in {} no longer exists",
                    p.display(),
                    resume.display()
                );
            }
        }
        paths.extend(a.add_silo.iter().cloned());
        let silos = load_silos(&paths)?;
        let config = TrainConfig {
            epochs: a.epochs,
            lr: a.lr,
            sampling: SamplerConfig::new(a.sampling, a.seed),
            incremental: true,
            seed: a.seed,
            dims: prev.params.dims, // a stored model keeps its shape
        };
        let model = training::continue_pipeline(prev, &silos, &config)?;
        (model, silos, paths)
    } else {
        if a.manifests.is_empty() {
            bail!("at least one silo manifest required");
        }
        let silos = load_silos(&a.manifests)?;
        let config = TrainConfig {
            epochs: a.epochs,
            lr: a.lr,
            sampling: SamplerConfig::new(a.sampling, a.seed),
            incremental: a.incremental,
            seed: a.seed,
            dims: Dims::new(FEATURE_LEN, a.emb_dim, a.hidden_dim),
        };
        let model = training::run_pipeline(&silos, &config)?;
        (model, silos, a.manifests.clone())
    };

    let mut model = model;
    model.provenance.manifest_paths = path_strings(&manifest_paths);
    io::save_model(&model, &a.out)?;
    let mut outputs = vec![a.out.clone()];

    if let Some(loss_path) = &a.loss_out {
        reports::write_loss_csv(loss_path, &model.training_log)?;
        outputs.push(loss_path.clone());
    }
    if let Some(audit_path) = &a.audit_out {
        write_audit(audit_path, &silos, &model)?;
        outputs.push(audit_path.clone());
    }

    let mut inputs = silo_input_files(&manifest_paths)?;
    if let Some(r) = &a.resume_from {
        inputs.push(r.clone());
    }
    write_manifest(
        &run_manifest_path(&a.out),
        "train",
        serde_json::to_value(&model.provenance.config)?,
        &inputs,
        &outputs,
    )?;
    log::info!(
        "trained on {} silos for {} epochs, final loss {:.6}, model at {}",
        silos.len(),
        model.training_log.len(),
        model.training_log.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

/// Re-derives the per-graph negative draws (same seeds as training) and
/// writes them out for inspection.
fn write_audit(path: &Path, silos: &[Silo], model: &TrainedModel) -> anyhow::Result<()> {
    let cfg = &model.provenance.config.sampling;
    let maps = training::silo_feature_maps(silos, &model.params.standardizer)?;
    let graphs = training::build_graphs(silos, &maps)?;
    let mut rows = Vec::new();
    for (gi, g) in graphs.iter().enumerate() {
        let pg = training::per_graph_sampler(cfg, gi);
        let sample = sampling::sample_negative_edges(g, &pg);
        for w in &sample.warnings {
            log::warn!("{w}");
        }
        for &(r, s) in &sample.edges.edges {
            rows.push(reports::NegativeAuditRow {
                receiver: g.node(r).clone(),
                source: g.node(s).clone(),
                strategy: cfg.strategy,
                seed: pg.seed,
            });
        }
    }
    reports::write_negative_audit(path, &rows)?;
    Ok(())
}

fn run_predict(a: &PredictArgs) -> anyhow::Result<()> {
    let model = io::load_model(&a.model)?;
    let silos = load_silos(&a.manifests)?;
    let preds = federation::predict_with_threshold(&model.params, &silos, a.threshold)?;
    reports::write_predictions(&a.out, &preds)?;

    let mut inputs = silo_input_files(&a.manifests)?;
    inputs.push(a.model.clone());
    write_manifest(
        &run_manifest_path(&a.out),
        "predict",
        json!({
            "model": a.model.display().to_string(),
            "threshold": a.threshold,
            "manifests": path_strings(&a.manifests),
        }),
        &inputs,
        std::slice::from_ref(&a.out),
    )?;
    let hits = preds.iter().filter(|p| p.predicted).count();
    log::info!(
        "scored {} cross-silo pairs ({} predicted) into {}",
        preds.len(),
        hits,
        a.out.display()
    );
    Ok(())
}

fn run_evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    let preds = reports::read_predictions(&a.predictions)?;
    let mut universe = BTreeSet::new();
    for p in &preds {
        if p.right <= p.left {
            bail!(
                "prediction report {} has a row out of canonical order: {} vs {}",
                a.predictions.display(),
                p.left,
                p.right
            );
        }
        universe.insert((p.left.clone(), p.right.clone()));
    }
    let truth = reports::read_ground_truth(&a.truth)?;
    let report = federation::evaluate(&preds, &truth, &universe)?;
    reports::write_eval_report(&a.out, &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    write_manifest(
        &run_manifest_path(&a.out),
        "evaluate",
        json!({
            "predictions": a.predictions.display().to_string(),
            "truth": a.truth.display().to_string(),
        }),
        &[a.predictions.clone(), a.truth.clone()],
        std::slice::from_ref(&a.out),
    )?;
    Ok(())
}

fn path_strings(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

// --- experiment -----------------------------------------------------------

struct ExperimentScenario {
    silos: Vec<Silo>,
    truth: ScenarioGroundTruth,
}

fn build_scenario(cfg: &ScenarioConfig) -> anyhow::Result<ExperimentScenario> {
    let (silos, truth) = fabrication::fabricate_scenario(cfg)?;
    Ok(ExperimentScenario { silos, truth })
}

fn pipeline_f1(sc: &ExperimentScenario, config: &TrainConfig) -> anyhow::Result<f64> {
    let model = training::run_pipeline(&sc.silos, config)?;
    let preds = federation::predict_cross_silo(&model, &sc.silos)?;
    let universe = federation::cross_silo_universe(&sc.silos);
    Ok(federation::evaluate(&preds, &sc.truth.inter, &universe)?.f1)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn run_experiment(a: &ExperimentArgs) -> anyhow::Result<()> {
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    std::fs::create_dir_all(&a.out)
        .with_context(|| format!("creating {}", a.out.display()))?;
    let dims = Dims::new(FEATURE_LEN, a.emb_dim, a.hidden_dim);
    let train_config = |strategy: Strategy, incremental: bool, seed: u64| TrainConfig {
        epochs: a.epochs,
        lr: silomatch_core::adam::DEFAULT_LR,
        sampling: SamplerConfig::new(strategy, seed),
        incremental,
        seed,
        dims,
    };

    // Sampling ablation + incremental ablation over the same seeds.
    let strategies = [Strategy::Ns1, Strategy::Ns2, Strategy::Ns3];
    let mut per_strategy: Vec<Vec<f64>> = vec![Vec::new(); 3];
    let mut full_batch_ns3: Vec<f64> = Vec::new();
    for seed in 1..=a.seeds {
        let mut cfg = fabrication::default_scenario(seed);
        cfg.rows_per_table = a.rows;
        let sc = build_scenario(&cfg)?;
        for (si, &strategy) in strategies.iter().enumerate() {
            let f1 = pipeline_f1(&sc, &train_config(strategy, true, seed))?;
            log::info!("seed {seed} {strategy} incremental: F1 {f1:.4}");
            per_strategy[si].push(f1);
        }
        let f1 = pipeline_f1(&sc, &train_config(Strategy::Ns3, false, seed))?;
        log::info!("seed {seed} ns3 full-batch: F1 {f1:.4}");
        full_batch_ns3.push(f1);
    }

    // Baseline gap on the high-perturbation scenario.
    let mut hp = fabrication::high_perturbation_scenario(1);
    hp.rows_per_table = a.rows;
    let sc_hp = build_scenario(&hp)?;
    let model_f1_hp = pipeline_f1(&sc_hp, &train_config(Strategy::Ns3, true, 1))?;
    let baseline_f1_hp = {
        let profiles: Vec<SiloProfiles> =
            sc_hp.silos.iter().map(profiling::profile_silo).collect();
        let preds = federation::baseline_profile_cosine(&profiles, federation::DEFAULT_THRESHOLD);
        let universe = federation::cross_silo_universe(&sc_hp.silos);
        federation::evaluate(&preds, &sc_hp.truth.inter, &universe)?.f1
    };

    // Generalizability curve on the default scenario.
    let mut cfg = fabrication::default_scenario(1);
    cfg.rows_per_table = a.rows;
    let sc = build_scenario(&cfg)?;
    let curve = federation::generalizability_curve(
        &sc.silos,
        &train_config(Strategy::Ns3, true, 1),
        &sc.truth.domain_of,
        &sc.truth.inter,
    )?;

    let metrics = json!({
        "sampling": {
            "ns1": { "mean_f1": mean(&per_strategy[0]), "per_seed": per_strategy[0] },
            "ns2": { "mean_f1": mean(&per_strategy[1]), "per_seed": per_strategy[1] },
            "ns3": { "mean_f1": mean(&per_strategy[2]), "per_seed": per_strategy[2] },
        },
        "incremental": {
            "incremental_mean_f1": mean(&per_strategy[2]),
            "full_batch_mean_f1": mean(&full_batch_ns3),
            "per_seed_full_batch": full_batch_ns3,
        },
        "baseline_gap": {
            "model_f1": model_f1_hp,
            "profile_cosine_f1": baseline_f1_hp,
        },
        "curve": curve
            .iter()
            .map(|p| json!({
                "prefix_size": p.prefix_size,
                "domain_coverage": p.domain_coverage,
                "f1": p.f1,
            }))
            .collect::<Vec<_>>(),
    });
    let metrics_path = a.out.join("metrics.json");
    std::fs::write(
        &metrics_path,
        serde_json::to_string_pretty(&metrics)? + "\n",
    )?;

    let mut md = String::new();
    md.push_str("# Ablation summary\n\n");
    md.push_str(&format!(
        "Defaults: {} seeds, {} epochs, {} rows/table, d_emb={}, d_hid={}\n\n",
        a.seeds, a.epochs, a.rows, a.emb_dim, a.hidden_dim
    ));
    md.push_str("## Negative sampling (incremental)\n\n");
    md.push_str("| strategy | mean F1 |\n|---|---|\n");
    for (si, strategy) in strategies.iter().enumerate() {
        md.push_str(&format!("| {strategy} | {:.4} |\n", mean(&per_strategy[si])));
    }
    md.push_str("\n## Incremental vs full-batch (ns3)\n\n");
    md.push_str("| mode | mean F1 |\n|---|---|\n");
    md.push_str(&format!("| incremental | {:.4} |\n", mean(&per_strategy[2])));
    md.push_str(&format!("| full-batch | {:.4} |\n", mean(&full_batch_ns3)));
    md.push_str("\n## Baseline gap (high perturbation)\n\n");
    md.push_str("| method | F1 |\n|---|---|\n");
    md.push_str(&format!("| model | {model_f1_hp:.4} |\n"));
    md.push_str(&format!("| profile cosine | {baseline_f1_hp:.4} |\n"));
    md.push_str("\n## Generalizability curve\n\n");
    md.push_str("| prefix silos | domain coverage | F1 |\n|---|---|---|\n");
    for p in &curve {
        md.push_str(&format!(
            "| {} | {:.2} | {:.4} |\n",
            p.prefix_size, p.domain_coverage, p.f1
        ));
    }
    let summary_path = a.out.join("summary.md");
    std::fs::write(&summary_path, &md)?;

    write_manifest(
        &a.out.join("run_manifest.json"),
        "experiment",
        json!({
            "seeds": a.seeds,
            "epochs": a.epochs,
            "rows": a.rows,
            "emb_dim": a.emb_dim,
            "hidden_dim": a.hidden_dim,
        }),
        &[],
        &[metrics_path, summary_path],
    )?;
    print!("{md}");
    Ok(())
}
