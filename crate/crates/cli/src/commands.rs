//! The five subcommands: gen, train, affinity, cluster, report.

use std::path::{Path, PathBuf};

use mtmv_core::affinity::{branch_affinity, impute_missing, Subject};
use mtmv_core::clustering::{select_branching, SelectParams};
use mtmv_core::datagen::gen_synthetic;
use mtmv_core::widening::{deep_mtmv, view_task_affinities};

use crate::config_io::{parse_config, parse_gen_spec};
use crate::csv_io::{
    loss_table_to_csv, masked_to_affinity, read_affinity_csv, write_affinity_csv,
};
use crate::dataset_io::{load_dataset, save_dataset};
use crate::error::{CliError, Result};
use crate::model_io::{load_model, ARCH_FILE, PARAMS_FILE};
use crate::params_io::save_params;
use crate::round_log::{build_report, read_report, write_report, write_round_log, RunReport};
use crate::{arch_io, stats};

pub const ROUND_LOG_FILE: &str = "round_log.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const META_FILE: &str = "run_meta.json";

/// `gen`: planted-spec config to a dataset directory.
pub fn cmd_gen(config: &Path, out: &Path, seed_override: Option<u64>) -> Result<()> {
    let (mut spec, n_per_task, dims) = parse_gen_spec(config)?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let ds = gen_synthetic(&spec, n_per_task, &dims)?;
    let manifest = save_dataset(&ds, out)?;
    println!(
        "generated {} tasks x {} views, {} examples/task -> {}",
        ds.task_count(),
        ds.view_count(),
        ds.tasks[0].labels.len(),
        manifest.display()
    );
    Ok(())
}

/// Wall-clock metadata, kept out of the primary artifacts so those stay
/// byte-identical across identical runs.
fn write_run_meta(out: &Path) -> Result<()> {
    let epoch_seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "finished_at_epoch_seconds": epoch_seconds,
        "tool_version": env!("CARGO_PKG_VERSION"),
    });
    std::fs::write(out.join(META_FILE), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// `train`: full pipeline; writes round log, architecture, report, params.
pub fn cmd_train(
    config_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
    views: Option<&[usize]>,
) -> Result<()> {
    let mut cfg = parse_config(config_path)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let dataset_path = cfg
        .dataset
        .clone()
        .ok_or_else(|| CliError::Data(String::from("config has no `dataset` path")))?;
    let mut ds = load_dataset(Path::new(&dataset_path))?;
    if let Some(ids) = views {
        let full = ds.view_count();
        ds = ds.subset_views(ids)?;
        if let Some(plans) = cfg.view_plans.take() {
            if plans.len() != full {
                return Err(CliError::Data(format!(
                    "view_plans has {} entries for {} dataset views",
                    plans.len(),
                    full
                )));
            }
            cfg.view_plans = Some(ids.iter().map(|&i| plans[i].clone()).collect());
        }
        if cfg.view_reg.len() == full {
            cfg.view_reg = ids.iter().map(|&i| cfg.view_reg[i]).collect();
        }
    }

    let outcome = deep_mtmv(&ds, &cfg)?;

    std::fs::create_dir_all(out)?;
    write_round_log(&outcome.rounds, &out.join(ROUND_LOG_FILE))?;
    arch_io::save_architecture(&outcome.model.architecture(), &out.join(ARCH_FILE))?;
    save_params(&outcome.model.store, &out.join(PARAMS_FILE))?;
    let report = build_report(&outcome, cfg.seed);
    write_report(&report, &out.join(REPORT_FILE))?;
    write_run_meta(out)?;
    println!(
        "trained: {} rounds, mean accuracy {:.4}, macro F1 {:.4} -> {}",
        report.rounds_run,
        report.final_metrics.mean_accuracy,
        report.final_metrics.macro_f1,
        out.display()
    );
    Ok(())
}

/// `affinity`: per-view task (and, when split, branch) affinity CSVs.
pub fn cmd_affinity(
    model_dir: &Path,
    data_dir: &Path,
    out: &Path,
    views: Option<&[usize]>,
) -> Result<()> {
    let model = load_model(model_dir)?;
    let mut ds = load_dataset(data_dir)?;
    if let Some(ids) = views {
        ds = ds.subset_views(ids)?;
    }
    if ds.view_count() != model.specs.len() {
        return Err(CliError::Data(format!(
            "model has {} views, dataset provides {}",
            model.specs.len(),
            ds.view_count()
        )));
    }
    std::fs::create_dir_all(out)?;
    let task_affs = view_task_affinities(&model, &ds)?;
    for (v, aff) in task_affs.iter().enumerate() {
        write_affinity_csv(aff, &out.join(format!("task_affinity_view{v}.csv")))?;
    }
    if let Some(subjects) = model.partitions.last() {
        for (v, aff) in task_affs.iter().enumerate() {
            let branch = branch_affinity(aff, subjects)?;
            write_affinity_csv(&branch, &out.join(format!("branch_affinity_view{v}.csv")))?;
        }
    }
    println!(
        "wrote {} per-view affinity csv(s) -> {}",
        task_affs.len(),
        out.display()
    );
    Ok(())
}

/// Knobs for `cluster`, mirroring the select_branching parameters.
pub struct ClusterArgs {
    pub affinity_paths: Vec<PathBuf>,
    pub weights: Option<Vec<f64>>,
    pub l0: f64,
    pub alpha: f64,
    pub p_t: u32,
    pub d_min: usize,
    pub d_max: usize,
    pub lambda_scale: f64,
    pub seed: u64,
}

/// `cluster`: affinity CSVs in, assignment JSON + loss table CSV out.
pub fn cmd_cluster(args: &ClusterArgs, out: &Path) -> Result<()> {
    if args.affinity_paths.is_empty() {
        return Err(CliError::Usage(String::from("at least one --affinity csv is required")));
    }
    let masked: Vec<_> = args
        .affinity_paths
        .iter()
        .map(|p| read_affinity_csv(p))
        .collect::<Result<_>>()?;
    let weights = match &args.weights {
        Some(w) => {
            if w.len() != masked.len() {
                return Err(CliError::Usage(format!(
                    "{} weights for {} affinity files",
                    w.len(),
                    masked.len()
                )));
            }
            w.clone()
        }
        None => vec![1.0; masked.len()],
    };
    let any_missing = masked.iter().any(|m| m.observed.iter().any(|&o| !o));
    let affs = if any_missing {
        impute_missing(&masked, &weights, Subject::Branches)?
    } else {
        masked
            .iter()
            .map(|m| masked_to_affinity(m, Subject::Branches))
            .collect::<Result<_>>()?
    };
    let params = SelectParams {
        l0: args.l0,
        alpha: args.alpha,
        p_t: args.p_t,
        d_range: (args.d_min, args.d_max),
        seed: args.seed,
        lambda_scale: args.lambda_scale,
        ..SelectParams::default()
    };
    let decision = select_branching(&affs, &weights, &params)?;

    std::fs::create_dir_all(out)?;
    let mut assignment = serde_json::Map::new();
    for (subject, &cluster) in decision.assignment.labels.iter().enumerate() {
        assignment.insert(subject.to_string(), serde_json::json!(cluster));
    }
    let doc = serde_json::json!({
        "chosen_d": decision.d,
        "loss": decision.loss,
        "assignment": serde_json::Value::Object(assignment),
    });
    std::fs::write(out.join("assignment.json"), serde_json::to_string_pretty(&doc)?)?;
    let table: Vec<(usize, f64)> = decision.candidates.iter().map(|c| (c.d, c.loss)).collect();
    std::fs::write(out.join("loss_table.csv"), loss_table_to_csv(&table))?;
    println!("chose d = {} (loss {:.6}) -> {}", decision.d, decision.loss, out.display());
    Ok(())
}

fn collect_reports(dir: &Path) -> Result<Vec<(PathBuf, RunReport)>> {
    let direct = dir.join(REPORT_FILE);
    if direct.is_file() {
        return Ok(vec![(dir.to_path_buf(), read_report(&direct)?)]);
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join(REPORT_FILE).is_file())
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no {REPORT_FILE} found directly or in subdirectories",
            dir.display()
        )));
    }
    entries
        .into_iter()
        .map(|p| {
            let r = read_report(&p.join(REPORT_FILE))?;
            Ok((p, r))
        })
        .collect()
}

fn metric_of(report: &RunReport, metric: &str) -> Result<f64> {
    match metric {
        "accuracy" => Ok(report.final_metrics.mean_accuracy),
        "macro_f1" => Ok(report.final_metrics.macro_f1),
        other => Err(CliError::Usage(format!(
            "unknown metric `{other}` (expected accuracy or macro_f1)"
        ))),
    }
}

/// `report`: paired t-test between two sets of run outputs.
pub fn cmd_report(dir_a: &Path, dir_b: &Path, metric: &str, out: Option<&Path>) -> Result<()> {
    let runs_a = collect_reports(dir_a)?;
    let runs_b = collect_reports(dir_b)?;
    if runs_a.len() != runs_b.len() {
        return Err(CliError::Data(format!(
            "{} runs under {} vs {} under {}; paired comparison needs equal counts",
            runs_a.len(),
            dir_a.display(),
            runs_b.len(),
            dir_b.display()
        )));
    }
    let scores_a: Vec<f64> =
        runs_a.iter().map(|(_, r)| metric_of(r, metric)).collect::<Result<_>>()?;
    let scores_b: Vec<f64> =
        runs_b.iter().map(|(_, r)| metric_of(r, metric)).collect::<Result<_>>()?;
    let test = stats::paired_t_test(&scores_a, &scores_b)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let doc = serde_json::json!({
        "metric": metric,
        "a": {"dir": dir_a.display().to_string(), "scores": scores_a, "mean": mean(&scores_a)},
        "b": {"dir": dir_b.display().to_string(), "scores": scores_b, "mean": mean(&scores_b)},
        "t_stat": test.t_stat,
        "p_value": test.p_value,
        "degrees_of_freedom": test.degrees_of_freedom,
        "mean_difference": test.mean_difference,
    });
    let rendered = serde_json::to_string_pretty(&doc)?;
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("comparison.json"), &rendered)?;
        let mut csv = String::from("run,score_a,score_b,difference\n");
        for (i, (a, b)) in scores_a.iter().zip(&scores_b).enumerate() {
            csv.push_str(&format!("{i},{a},{b},{}\n", a - b));
        }
        std::fs::write(out.join("comparison.csv"), csv)?;
        println!("t = {:.6}, p = {:.6e} -> {}", test.t_stat, test.p_value, out.display());
    } else {
        println!("{rendered}");
    }
    Ok(())
}
