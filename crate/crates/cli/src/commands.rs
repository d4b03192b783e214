use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use radargnn::eval::{
    data_reduction_study, evaluate_outputs, invariance_report, predict_scenes, transform_deviation, Deviation,
    TransformFamily,
};
use radargnn::model::{prepare_examples, resolve_class_weights, train as train_model, Checkpoint};
use radargnn::scene::{generate_dataset, read_scenes, split_dataset, write_scenes, ClassMap, Scene};
use radargnn::{build_graph as graph_of, InvarianceMode, ModelConfig, ParameterStore, RadarGnn, RigidTransform2D};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

const SPLITS: [&str; 3] = ["train", "val", "test"];

fn create_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    Ok(&cfg.out_dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(radargnn::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes the resolved config and its hash next to the command's outputs.
fn stamp(cfg: &RunConfig, command: &str) -> Result<String, CliError> {
    #[derive(Serialize)]
    struct Run<'a> {
        command: &'a str,
        config_hash: String,
        config: &'a RunConfig,
    }
    let hash = cfg.hash();
    let dir = create_out(cfg)?;
    write_json(
        &dir.join("run.json"),
        &Run {
            command,
            config_hash: hash.clone(),
            config: cfg,
        },
    )?;
    Ok(hash)
}

fn split_path(cfg: &RunConfig, split: &str) -> Result<PathBuf, CliError> {
    if !SPLITS.contains(&split) {
        return Err(CliError::Config(format!("unknown split `{split}`")));
    }
    Ok(cfg.data_dir.join(format!("{split}.jsonl")))
}

fn load_split(cfg: &RunConfig, split: &str) -> Result<Vec<Scene>, CliError> {
    let path = split_path(cfg, split)?;
    if !path.is_file() {
        return Err(CliError::Config(format!("split file {} not found", path.display())));
    }
    let clouds = read_scenes(&path, &ClassMap::default())?;
    Ok(clouds.into_iter().map(Scene::from_cloud).collect::<Result<_, _>>()?)
}

fn load_checkpoint(path: &Path) -> Result<(RadarGnn, ParameterStore, Checkpoint), CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!("checkpoint {} not found", path.display())));
    }
    let ck = Checkpoint::load(path)?;
    let model = RadarGnn::new(ck.model.clone())?;
    let params = ck.parameters()?;
    model.check_params(&params)?;
    Ok((model, params, ck))
}

pub fn generate(cfg: &RunConfig) -> Result<(), CliError> {
    let hash = stamp(cfg, "generate")?;
    let scenes = generate_dataset(&cfg.dataset, cfg.seed)?;
    let ids: Vec<usize> = (0..scenes.len()).collect();
    let split = split_dataset(&ids, cfg.dataset.ratios, cfg.seed)?;
    let dir = create_out(cfg)?;
    #[derive(Serialize)]
    struct Manifest {
        config_hash: String,
        seed: u64,
        scenes: usize,
        splits: Vec<(String, Vec<String>)>,
    }
    let mut manifest = Manifest {
        config_hash: hash,
        seed: cfg.seed,
        scenes: scenes.len(),
        splits: Vec::new(),
    };
    for (name, mut members) in SPLITS.into_iter().zip([split.train, split.val, split.test]) {
        members.sort_unstable();
        let clouds: Vec<_> = members.iter().map(|&i| scenes[i].cloud.clone()).collect();
        write_scenes(dir.join(format!("{name}.jsonl")), &clouds)?;
        manifest
            .splits
            .push((name.to_string(), clouds.iter().map(|c| c.frame_id.clone()).collect()));
        println!("{name}: {} scenes", clouds.len());
    }
    write_json(&dir.join("manifest.json"), &manifest)
}

pub fn build_graph(cfg: &RunConfig) -> Result<(), CliError> {
    stamp(cfg, "build-graph")?;
    let scenes = load_split(cfg, &cfg.eval_split)?;
    let path = create_out(cfg)?.join("graphs.jsonl");
    let mut w = BufWriter::new(File::create(&path)?);
    let mut edges = 0;
    for s in &scenes {
        let g = graph_of(&s.cloud, &cfg.model.graph, cfg.model.mode)?;
        edges += g.num_edges();
        g.write_json(&mut w)?;
        writeln!(w)?;
    }
    w.flush()?;
    println!(
        "{} graphs, {edges} edges, mode {} -> {}",
        scenes.len(),
        cfg.model.mode,
        path.display()
    );
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let hash = stamp(cfg, "train")?;
    let scenes = load_split(cfg, "train")?;
    let model = RadarGnn::new(cfg.model.clone())?;
    let examples = prepare_examples(&model, &scenes)?;
    let weights = resolve_class_weights(&model, &scenes);
    let mut params = model.init_params(cfg.seed)?;
    let dir = create_out(cfg)?;
    let mut history = BufWriter::new(File::create(dir.join("history.csv"))?);
    writeln!(history, "config_hash,epoch,learning_rate,seg,obj,reg,combined")?;
    let result = train_model(&model, &mut params, &examples, &weights, &cfg.train, |r, _| {
        writeln!(
            history,
            "{hash},{},{},{},{},{},{}",
            r.epoch,
            cfg.train.learning_rate_at(r.epoch),
            r.seg,
            r.obj,
            r.reg,
            r.combined
        )?;
        println!("epoch {:>4}  loss {:.6}", r.epoch, r.combined);
        Ok(())
    });
    history.flush()?;
    let records = result?;
    let ck = Checkpoint::new(model.config(), &params, records.len(), Some(hash));
    let path = dir.join("checkpoint.json");
    ck.save(&path)?;
    println!("checkpoint -> {}", path.display());
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let ck_path = cfg
        .checkpoint
        .as_deref()
        .ok_or_else(|| CliError::Config("eval needs --checkpoint".into()))?;
    let (model, params, _) = load_checkpoint(ck_path)?;
    let hash = stamp(cfg, "eval")?;
    let scenes = load_split(cfg, &cfg.eval_split)?;
    let outputs = predict_scenes(&model, &params, &scenes)?;
    let mut report = evaluate_outputs(&outputs, &scenes)?;
    report.config_hash = Some(hash.clone());
    let dir = create_out(cfg)?;
    report.write_json(BufWriter::new(File::create(dir.join("report.json"))?))?;
    report.write_csv(BufWriter::new(File::create(dir.join("report.csv"))?))?;

    #[derive(Serialize)]
    struct Line<'a> {
        config_hash: &'a str,
        #[serde(flatten)]
        output: &'a radargnn::eval::SceneOutput,
    }
    let mut w = BufWriter::new(File::create(dir.join("predictions.jsonl"))?);
    for output in &outputs {
        serde_json::to_writer(
            &mut w,
            &Line {
                config_hash: &hash,
                output,
            },
        )
        .map_err(radargnn::Error::from)?;
        writeln!(w)?;
    }
    w.flush()?;
    for row in &report.classes {
        let ap = row.ap.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{:<14} AP {ap}", row.class.name());
    }
    println!("mAP {:.4}  macro F1 {:.4}", report.map, report.macro_f1);
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
struct InvarianceLine {
    mode: InvarianceMode,
    family: String,
    scenes: usize,
    transforms: usize,
    prob_max: f64,
    prob_mean: f64,
    box_max: f64,
    box_mean: f64,
    claimed: bool,
    passed: bool,
}

fn family_for(name: &str, mode: InvarianceMode) -> Result<Option<TransformFamily>, CliError> {
    match name {
        "claimed" => Ok(Some(TransformFamily::claimed_by(mode).unwrap_or(TransformFamily::Rigid))),
        "translation" => Ok(Some(TransformFamily::Translation)),
        "rigid" => Ok(Some(TransformFamily::Rigid)),
        "identity" => Ok(None),
        other => Err(CliError::Config(format!("unknown transform family `{other}`"))),
    }
}

pub fn invariance(cfg: &RunConfig, checkpoints: &[PathBuf], family: &str) -> Result<(), CliError> {
    let settings = &cfg.invariance;
    let mut models = Vec::new();
    if checkpoints.is_empty() {
        for &mode in &settings.modes {
            let config = ModelConfig {
                mode,
                ..cfg.model.clone()
            };
            let model = RadarGnn::new(config)?;
            let params = model.init_params(cfg.seed)?;
            models.push((model, params));
        }
    } else {
        for path in checkpoints {
            let (model, params, _) = load_checkpoint(path)?;
            models.push((model, params));
        }
    }
    let hash = stamp(cfg, "invariance-test")?;
    let mut scenes = load_split(cfg, &cfg.eval_split)?;
    scenes.truncate(settings.max_scenes);
    let clouds: Vec<_> = scenes.into_iter().map(|s| s.cloud).collect();

    let mut lines = Vec::new();
    for (model, params) in &models {
        let mode = model.config().mode;
        let line = match family_for(family, mode)? {
            Some(fam) => {
                let row = invariance_report(model, params, &clouds, fam, settings.transforms, cfg.seed)?;
                InvarianceLine {
                    mode,
                    family: format!("{fam:?}").to_lowercase(),
                    scenes: row.scenes,
                    transforms: row.transforms,
                    prob_max: row.prob_max,
                    prob_mean: row.prob_mean,
                    box_max: row.box_max,
                    box_mean: row.box_mean,
                    claimed: row.claimed,
                    passed: row.passes(settings.tolerance),
                }
            }
            None => {
                let mut total = Deviation::default();
                for cloud in &clouds {
                    total.merge(&transform_deviation(model, params, cloud, &RigidTransform2D::translation(0.0, 0.0))?);
                }
                InvarianceLine {
                    mode,
                    family: "identity".into(),
                    scenes: clouds.len(),
                    transforms: 1,
                    prob_max: total.prob_max,
                    prob_mean: total.prob_mean(),
                    box_max: total.box_max,
                    box_mean: total.box_mean(),
                    claimed: true,
                    passed: total.prob_max.max(total.box_max) <= settings.tolerance,
                }
            }
        };
        lines.push(line);
    }

    let dir = create_out(cfg)?;
    #[derive(Serialize)]
    struct Report<'a> {
        config_hash: &'a str,
        tolerance: f64,
        rows: &'a [InvarianceLine],
    }
    write_json(
        &dir.join("invariance.json"),
        &Report {
            config_hash: &hash,
            tolerance: settings.tolerance,
            rows: &lines,
        },
    )?;
    let mut w = BufWriter::new(File::create(dir.join("invariance.csv"))?);
    writeln!(w, "config_hash,mode,family,scenes,transforms,prob_max,prob_mean,box_max,box_mean,claimed,passed")?;
    for l in &lines {
        writeln!(
            w,
            "{hash},{},{},{},{},{:e},{:e},{:e},{:e},{},{}",
            l.mode, l.family, l.scenes, l.transforms, l.prob_max, l.prob_mean, l.box_max, l.box_mean, l.claimed, l.passed
        )?;
        println!(
            "{:<22} {:<12} prob max {:.3e} mean {:.3e}  box max {:.3e} mean {:.3e}  {}",
            l.mode.to_string(),
            l.family,
            l.prob_max,
            l.prob_mean,
            l.box_max,
            l.box_mean,
            match (l.claimed, l.passed) {
                (false, _) => "not claimed",
                (true, true) => "pass",
                (true, false) => "FAIL",
            }
        );
    }
    w.flush()?;
    let failed: Vec<String> = lines
        .iter()
        .filter(|l| l.claimed && !l.passed)
        .map(|l| format!("{} under {}", l.mode, l.family))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Gate(format!(
            "deviation above {:e} for {}",
            settings.tolerance,
            failed.join(", ")
        )))
    }
}

pub fn data_reduction(cfg: &RunConfig) -> Result<(), CliError> {
    let hash = stamp(cfg, "data-reduction")?;
    let train = load_split(cfg, "train")?;
    let test = load_split(cfg, &cfg.eval_split)?;
    let report = data_reduction_study(&train, &test, &cfg.model, &cfg.train, &cfg.reduction.study)?;
    let dir = create_out(cfg)?;
    #[derive(Serialize)]
    struct Stamped<'a> {
        config_hash: &'a str,
        #[serde(flatten)]
        report: &'a radargnn::eval::ReductionReport,
    }
    write_json(
        &dir.join("reduction.json"),
        &Stamped {
            config_hash: &hash,
            report: &report,
        },
    )?;
    let mut w = BufWriter::new(File::create(dir.join("reduction.csv"))?);
    writeln!(w, "config_hash,mode,seed,fraction,train_scenes,map,macro_f1,normalized_map,normalized_f1")?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for r in &report.rows {
        writeln!(
            w,
            "{hash},{},{},{},{},{},{},{},{}",
            r.mode,
            r.seed,
            r.fraction,
            r.train_scenes,
            r.map,
            r.macro_f1,
            opt(r.normalized_map),
            opt(r.normalized_f1)
        )?;
    }
    w.flush()?;
    for (mode, score) in &report.smallest_fraction_scores {
        println!("{:<22} {}", mode.to_string(), score.map_or("n/a".into(), |s| format!("{s:.4}")));
    }
    match report.trend_holds {
        Some(false) if cfg.reduction.gate => Err(CliError::Gate(
            "an invariant mode scored below the non-invariant mode at the smallest fraction".into(),
        )),
        other => {
            println!("trend holds: {other:?}");
            Ok(())
        }
    }
}
