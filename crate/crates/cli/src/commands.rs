use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};

use flowdpc::eval::{confusion, run_sweep, MetricsReport};
use flowdpc::ingest::{
    encode, generate_synthetic, load_nsl_kdd, load_unsw_nb15, nsl_kdd_encoding, unsw_nb15_encoding,
    Source,
};
use flowdpc::{pipeline, LabeledDataset};

use crate::config::{DatasetSource, RunConfig};
use crate::{CliError, Common, WithOutput};

fn user(e: impl ToString) -> CliError {
    CliError::User(e.to_string())
}

fn internal(e: impl ToString) -> CliError {
    CliError::Internal(e.to_string())
}

fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    RunConfig::resolve(common.config.as_deref(), &common.overrides)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| user(format!("cannot create {}: {e}", dir.display())))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| internal(format!("cannot write {}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(internal)?;
    writeln!(w).and_then(|_| w.flush()).map_err(internal)?;
    Ok(path)
}

/// Loads or generates the configured dataset.
pub fn load_dataset(config: &RunConfig) -> Result<LabeledDataset, CliError> {
    let path = || {
        config
            .dataset
            .path
            .as_deref()
            .ok_or_else(|| user("dataset.path is required"))
    };
    let data = match config.dataset.source {
        DatasetSource::Synthetic => generate_synthetic(&config.synth_config()),
        DatasetSource::NslKdd => load_nsl_kdd(path()?).and_then(|raw| {
            encode(
                &raw,
                &nsl_kdd_encoding().with_mode(config.dataset.categories),
            )
        }),
        DatasetSource::UnswNb15 => {
            load_unsw_nb15(path()?).and_then(|raw| encode(&raw, &unsw_nb15_encoding(&raw)))
        }
        DatasetSource::Csv => LabeledDataset::read_csv(path()?, Source::Synthetic),
    };
    let data = data.map_err(user)?;
    log::info!(
        "dataset: {} rows, {} features, {} anomalies",
        data.n_samples(),
        data.n_features(),
        data.anomaly_count()
    );
    Ok(data)
}

pub fn synth(args: &WithOutput) -> Result<(), CliError> {
    let config = resolve(&args.common)?;
    let synth = config.synth_config();
    synth.validate().map_err(user)?;
    let data = generate_synthetic(&synth).map_err(user)?;
    prepare_out(&args.out)?;
    let (path, mut w) = create(&args.out, "dataset.csv")?;
    data.write_csv(&mut w).map_err(internal)?;
    w.flush().map_err(internal)?;
    println!(
        "{} rows ({} normal, {} anomaly) written to {}",
        data.n_samples(),
        data.n_samples() - data.anomaly_count(),
        data.anomaly_count(),
        path.display()
    );
    Ok(())
}

pub fn detect(args: &WithOutput) -> Result<(), CliError> {
    let config = resolve(&args.common)?;
    let data = load_dataset(&config)?;
    let detector = config.detector(config.method);
    let (prepared, verdict) =
        pipeline::run(&data, &config.preprocess(), &detector).map_err(user)?;
    let cm = confusion(&verdict.is_anomaly, &prepared.labels).map_err(internal)?;
    let report = MetricsReport::new(
        detector.method_name(),
        "default",
        prepared.points.nrows(),
        config.seed,
        cm,
        verdict.params_echo.clone(),
    )
    .map_err(user)?;

    prepare_out(&args.out)?;
    let (_, mut w) = create(&args.out, "results.csv")?;
    verdict.write_csv(&mut w).map_err(internal)?;
    w.flush().map_err(internal)?;
    write_json(
        &args.out,
        "pca.json",
        &serde_json::from_str(&prepared.pca.to_json()).map_err(internal)?,
    )?;
    write_json(
        &args.out,
        "metrics.json",
        &serde_json::to_value(&report).map_err(internal)?,
    )?;
    let results = json!({
        "config": config,
        "points": prepared.points.nrows(),
        "dimensions": prepared.points.ncols(),
        "explained_variance_ratio": prepared.pca.explained_variance_ratio,
        "origins": prepared.origins,
        "verdict": verdict.to_json(),
        "metrics": report,
    });
    write_json(&args.out, "results.json", &results)?;
    println!(
        "{}: {} of {} points anomalous; accuracy {:.4}, g-mean {:.4}, fpr {:.4}",
        report.method,
        verdict.anomaly_count(),
        verdict.len(),
        report.accuracy,
        report.g_mean,
        report.fpr
    );
    Ok(())
}

pub fn sweep(args: &WithOutput) -> Result<(), CliError> {
    let config = resolve(&args.common)?;
    let loaded = match config.dataset.source {
        DatasetSource::Synthetic => None,
        source => {
            let name = serde_json::to_value(source).map_err(internal)?;
            Some((
                name.as_str().unwrap_or("dataset").to_string(),
                Arc::new(load_dataset(&config)?),
            ))
        }
    };
    let spec = config.sweep_spec(loaded);
    let report = run_sweep(&spec).map_err(user)?;

    prepare_out(&args.out)?;
    let (_, mut w) = create(&args.out, "sweep.csv")?;
    report.write_csv(&mut w).map_err(internal)?;
    w.flush().map_err(internal)?;
    for metric in ["accuracy", "g_mean", "fpr"] {
        let (_, mut w) = create(&args.out, &format!("sweep_{metric}.csv"))?;
        report.write_metric_csv(&mut w, metric).map_err(internal)?;
        w.flush().map_err(internal)?;
    }
    let mut doc = report.to_json(&spec);
    doc["config"] = serde_json::to_value(&config).map_err(internal)?;
    write_json(&args.out, "sweep.json", &doc)?;

    let failed = report.cells.iter().filter(|c| c.report().is_none()).count();
    println!(
        "{} cells ({} failed) written to {}",
        report.cells.len(),
        failed,
        args.out.join("sweep.csv").display()
    );
    Ok(())
}

pub fn validate(common: &Common) -> Result<(), CliError> {
    let config = resolve(common)?;
    let text = serde_json::to_string_pretty(&config).map_err(internal)?;
    println!("{text}");
    Ok(())
}
