use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use curricula::corpus::{load_dataset, load_index_matrix, standardize_on_split, write_index_matrix, Dataset, IndexMatrix, Split};
use curricula::difficulty::{loss_difficulty, read_loss_traces, DifficultyScore};
use curricula::evaluation::binned_balanced_accuracy;
use curricula::filtering::{cluster_filter, filter_by_trend, Baseline};
use curricula::importance::ImportanceVector;
use curricula::lexical::{compute_index_matrix, load_tags, ExtractOptions, FrequencyList};
use curricula::rho_analysis::{
    cluster_trajectories, max_change_indices, read_rho_csv, stage_means, top_k_per_stage, write_change_tsv,
    write_cluster_tsv, write_stage_tsv, RhoTrajectory,
};
use curricula::schedule::CurriculumConfig;
use curricula::trainer::{featurize_dataset, score_split, train, train_with_difficulty, CheckpointFile, TrainConfig};

use crate::args::{AnalyzeArgs, DifficultyBy, EvalArgs, ExtractArgs, FilterArgs, FilterMethod, TrainArgs};
use crate::CliError;

pub struct Globals {
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Globals {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing --{flag} (flag or config key)")))
}

/// Fails with a pointer to the command that produces `path` when it is absent.
fn artifact<'a>(path: &'a Path, what: &str, producer: &str) -> Result<&'a Path, CliError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::Data(format!(
            "{what} {} not found; produce it with `{producer}`",
            path.display()
        )))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> curricula::Result<()>) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn load_inputs(dataset: &Option<PathBuf>, indices: &Option<PathBuf>) -> Result<(Dataset, IndexMatrix), CliError> {
    let d = load_dataset(required(dataset, "dataset")?)?;
    let path = artifact(required(indices, "indices")?, "index matrix", "curricula extract")?;
    let m = load_index_matrix(path, &d)?;
    Ok((d, m))
}

fn read_names(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn read_checkpoint(path: &Path, producer: &str) -> Result<CheckpointFile, CliError> {
    let path = artifact(path, "checkpoint", producer)?;
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    CheckpointFile::read(std::io::BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_trajectory(path: &Path) -> Result<RhoTrajectory, CliError> {
    let path = artifact(path, "importance trajectory", "curricula train")?;
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    read_rho_csv(file).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// The matrix a checkpoint was trained on: same columns, frozen statistics.
fn checkpoint_matrix(ck: &CheckpointFile, m: &IndexMatrix) -> Result<IndexMatrix, CliError> {
    let selected = m.select_columns(&ck.index_names)?;
    Ok(selected.apply_stats(&ck.index_stats)?)
}

pub fn extract(a: &ExtractArgs, g: &Globals) -> Result<(), CliError> {
    if a.sophistication && a.freq.is_none() {
        return Err(CliError::Usage(
            "--sophistication needs a frequency list; pass --freq <FILE>".into(),
        ));
    }
    let d = load_dataset(required(&a.dataset, "dataset")?)?;
    let opts = ExtractOptions {
        k_segment: a.segment,
        first_k: a.first_k,
        frequency: a.freq.as_ref().map(|p| FrequencyList::load(p, a.freq_cutoff)).transpose()?,
        tags: a.tags.as_ref().map(load_tags).transpose()?,
    };
    let m = compute_index_matrix(&d, &opts)?;
    let out = a.out.clone().unwrap_or_else(|| g.out("indices.csv"));
    write_with(&out, |w| write_index_matrix(&m, w))?;
    println!("{} samples x {} indices -> {}", m.n_rows(), m.n_cols(), out.display());
    Ok(())
}

pub fn train_config(a: &TrainArgs, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        weight_decay: a.weight_decay,
        seed,
        validation_steps_per_epoch: a.validation_steps,
        importance_method: a.importance,
        lambda: a.lambda,
        aggregation: a.aggregation,
        argmax_mode: a.argmax,
        curriculum: CurriculumConfig {
            kind: a.curriculum,
            beta: a.beta,
            gamma: a.gamma,
            competence_c0: a.competence_c0,
            competence_shape: a.competence_shape,
            warmup_fraction: a.warmup,
        },
        concat_indices: a.concat_indices,
        hash_dim: a.hash_dim,
        trace_all_splits: a.trace_all_splits,
    }
}

pub fn train_cmd(a: &TrainArgs, g: &Globals) -> Result<(), CliError> {
    let cfg = train_config(a, g.seed);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (d, mut m) = load_inputs(&a.dataset, &a.indices)?;
    if let Some(p) = &a.keep_indices {
        let names = read_names(artifact(p, "index list", "curricula filter")?)?;
        m = m.select_columns(&names)?;
    }
    let z = standardize_on_split(&m, &d, Split::Train)?;

    let record = match &a.difficulty_from_loss {
        Some(p) => {
            let p = artifact(p, "loss traces", "curricula train")?;
            let file = File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let traces = read_loss_traces(file)?;
            let ids: Vec<String> = d.split(Split::Train).map(|s| s.id.clone()).collect();
            train_with_difficulty(&d, &z, &cfg, &loss_difficulty(&traces, &ids)?)?
        }
        None => train(&d, &z, &cfg)?,
    };

    write_with(&g.out("checkpoint.json"), |w| CheckpointFile::from_record(&record).write(w))?;
    write_with(&g.out("rho_trajectory.csv"), |w| record.write_rho_csv(w))?;
    write_with(&g.out("loss_traces.csv"), |w| record.loss_traces.write_csv(w))?;
    write_with(&g.out("metrics.csv"), |w| record.write_metrics_csv(w))?;

    let features = featurize_dataset(&d, &z, &cfg.featurizer())?;
    let test = d.positions_in(Split::Test);
    let test_acc = if test.is_empty() {
        "n/a".to_owned()
    } else {
        format!("{:.4}", score_split(record.best_params(), &d, &features, Split::Test)?.accuracy)
    };
    let best = record.best.as_ref();
    println!(
        "steps {} | best step {} | val accuracy {} | test accuracy {test_acc}",
        record.total_steps,
        best.map_or(0, |b| b.step),
        best.map_or("n/a".into(), |b| format!("{:.4}", b.val_accuracy)),
    );
    if record.skipped_updates > 0 {
        println!("skipped {} updates with all-zero weights", record.skipped_updates);
    }
    if let Some(rho) = record.final_rho() {
        if let Some(j) = rho.argmax_abs() {
            println!("final top index {} (rho {:.4})", record.index_names[j], rho.rho[j]);
        }
    }
    Ok(())
}

pub fn eval(a: &EvalArgs, g: &Globals) -> Result<(), CliError> {
    let by = match (&a.by_index, a.by) {
        (Some(_), None | Some(DifficultyBy::Index)) => DifficultyBy::Index,
        (Some(_), Some(_)) => return Err(CliError::Usage("--by-index conflicts with --by loss/aggregate".into())),
        (None, Some(DifficultyBy::Index)) => return Err(CliError::Usage("--by index needs --by-index <NAME>".into())),
        (None, Some(by)) => by,
        (None, None) => return Err(CliError::Usage("choose a difficulty source: --by-index <NAME>, --by loss or --by aggregate".into())),
    };
    let ck_path = a.checkpoint.clone().unwrap_or_else(|| g.out("checkpoint.json"));
    let ck = read_checkpoint(&ck_path, "curricula train")?;
    let (d, m) = load_inputs(&a.dataset, &a.indices)?;
    let z = checkpoint_matrix(&ck, &m)?;
    let features = featurize_dataset(&d, &z, &ck.config.featurizer())?;
    let score = score_split(&ck.params, &d, &features, a.split)?;
    let pos = d.positions_in(a.split);
    let labels: Vec<usize> = pos.iter().map(|&p| d.samples()[p].label).collect();

    let (difficulty, source) = match by {
        DifficultyBy::Index => {
            let name = a.by_index.as_deref().expect("checked above");
            let Some(j) = m.column_position(name) else {
                return Err(CliError::Usage(format!(
                    "unknown index {name:?}; available: {}",
                    m.index_names().join(", ")
                )));
            };
            (pos.iter().map(|&p| m.get(p, j)).collect::<Vec<f64>>(), name.to_owned())
        }
        DifficultyBy::Loss => {
            let p = a.traces.clone().unwrap_or_else(|| g.out("loss_traces.csv"));
            let p = artifact(&p, "loss traces", "curricula train")?;
            let file = File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let traces = read_loss_traces(file)?;
            let ids: Vec<String> = pos.iter().map(|&p| d.samples()[p].id.clone()).collect();
            let s = loss_difficulty(&traces, &ids).map_err(|e| {
                CliError::Data(format!(
                    "{e}; traces cover only the training split unless produced by `curricula train --trace-all-splits`"
                ))
            })?;
            (s.values, "loss".to_owned())
        }
        DifficultyBy::Aggregate => {
            let p = a.rho.clone().unwrap_or_else(|| g.out("rho_trajectory.csv"));
            let traj = read_trajectory(&p)?;
            let rho = final_rho(&traj, &ck)?;
            let s: DifficultyScore = ck.config.aggregation.apply(&z.select_rows(&pos), &rho, ck.config.argmax_mode)?;
            (s.values, format!("aggregate_{}", ck.config.aggregation.as_str()))
        }
    };

    let report = binned_balanced_accuracy(&score.predictions, &labels, &difficulty, a.bins, a.min_count)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| g.out(&format!("eval_{}_{}.csv", a.split, file_safe(&source))));
    write_with(&out, |w| report.write_csv(w))?;
    println!(
        "{} split by {source}: plain accuracy {:.4} | balanced accuracy {:.4} | {} bins | trend slope {}",
        a.split,
        report.plain_accuracy,
        report.balanced_accuracy,
        report.bins.len(),
        report.trend_slope.map_or("n/a".into(), |s| format!("{s:.4}")),
    );
    Ok(())
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

/// Last trajectory snapshot, reordered to the checkpoint's columns.
fn final_rho(traj: &RhoTrajectory, ck: &CheckpointFile) -> Result<ImportanceVector, CliError> {
    let last = traj
        .values()
        .last()
        .ok_or_else(|| CliError::Data("importance trajectory is empty".into()))?;
    let pos: HashMap<&str, usize> = traj.index_names().iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let rho = ck
        .index_names
        .iter()
        .map(|n| {
            pos.get(n.as_str())
                .map(|&i| last[i])
                .ok_or_else(|| CliError::Data(format!("trajectory has no values for index {n:?}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(ImportanceVector {
        rho,
        method: ck.config.importance_method,
        step: *traj.steps().last().expect("non-empty"),
        lambda: None,
    })
}

pub fn filter(a: &FilterArgs, g: &Globals) -> Result<(), CliError> {
    let method = a
        .method
        .ok_or_else(|| CliError::Usage("missing --method (trend or cluster)".into()))?;
    let (d, m) = load_inputs(&a.dataset, &a.indices)?;
    match method {
        FilterMethod::Trend => {
            let p = a.baseline.clone().unwrap_or_else(|| g.out("checkpoint.json"));
            let ck = read_checkpoint(&p, "curricula train --curriculum none")?;
            if !ck.is_trained_baseline() {
                return Err(CliError::Data(format!(
                    "{} is not a trained run without curriculum; produce one with `curricula train --curriculum none`",
                    p.display()
                )));
            }
            let z = checkpoint_matrix(&ck, &m)?;
            let f = filter_by_trend(&d, &z, Baseline::from(&ck), a.bins, a.keep)?;
            write_with(&g.out("filter_trend.txt"), |w| write_lines(w, &f.kept))?;
            write_with(&g.out("filter_trend.csv"), |w| f.write_csv(w))?;
            println!("kept {} of {} indices by accuracy trend", f.kept.len(), f.ranking.len());
        }
        FilterMethod::Cluster => {
            let z = standardize_on_split(&m, &d, Split::Train)?;
            let z_train = z.select_rows(&d.positions_in(Split::Train));
            let hint = match &a.rho {
                Some(p) => {
                    let traj = read_trajectory(p)?;
                    let last = traj.values().last().cloned().unwrap_or_default();
                    let pos: HashMap<&str, usize> =
                        traj.index_names().iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
                    Some(
                        z.index_names()
                            .iter()
                            .map(|n| pos.get(n.as_str()).map_or(0.0, |&i| last[i].abs()))
                            .collect::<Vec<f64>>(),
                    )
                }
                None => None,
            };
            let f = cluster_filter(&z_train, a.threshold, hint.as_deref())?;
            write_with(&g.out("filter_cluster.txt"), |w| write_lines(w, &f.representatives))?;
            write_with(&g.out("filter_cluster.csv"), |w| f.write_csv(z.index_names(), w))?;
            println!(
                "{} clusters from {} indices; representatives written",
                f.representatives.len(),
                z.n_cols()
            );
        }
    }
    Ok(())
}

fn write_lines(w: &mut impl Write, lines: &[String]) -> curricula::Result<()> {
    for l in lines {
        writeln!(w, "{l}").map_err(|e| curricula::Error::Unsupported(format!("write failed: {e}")))?;
    }
    Ok(())
}

pub fn analyze(a: &AnalyzeArgs, g: &Globals) -> Result<(), CliError> {
    let p = a.rho.clone().unwrap_or_else(|| g.out("rho_trajectory.csv"));
    let traj = read_trajectory(&p)?;
    let all = !(a.stages || a.changes || a.clusters);

    if a.stages || a.changes || all {
        let sm = stage_means(&traj)?;
        if a.stages || all {
            let top = top_k_per_stage(&sm, a.top_k);
            write_with(&g.out("stages.tsv"), |w| write_stage_tsv(&top, w))?;
            for (stage, ranked) in curricula::rho_analysis::STAGE_NAMES.iter().zip(&top) {
                let names: Vec<&str> = ranked.iter().map(|(n, _)| n.as_str()).collect();
                println!("{stage}: {}", names.join(", "));
            }
        }
        if a.changes || all {
            let changes = max_change_indices(&sm);
            write_with(&g.out("changes.tsv"), |w| write_change_tsv(&changes, w))?;
            if let Some(c) = changes.first() {
                println!("largest change: {} {} {:+.4}", c.index, c.stage_pair(), c.change);
            }
        }
    }
    if a.clusters || (all && traj.index_names().len() >= 2) {
        let labels = cluster_trajectories(&traj, a.threshold)?;
        write_with(&g.out("rho_clusters.tsv"), |w| write_cluster_tsv(traj.index_names(), &labels, w))?;
        let n = labels.iter().max().map_or(0, |m| m + 1);
        println!("{n} trajectory clusters from {} indices", labels.len());
    }
    Ok(())
}
