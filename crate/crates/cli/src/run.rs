use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vsql::data::{gen_noisy_pair, gen_qsd_binary, gen_qsd_three, pixel_vector, Dataset, NoisyParams, QsdParams};
use vsql::train::{
    classical_baseline_fit, fit_prepared, infer, write_metrics_csv, Checkpoint, Model, PreparedSet,
};

use crate::config::{read_json, BaselineRun, DataSpec, TrainRun};
use crate::CliError;

/// Prepared marginals for both splits of a data source.
struct Loaded {
    num_classes: usize,
    train: PreparedSet<f64>,
    test: Option<PreparedSet<f64>>,
}

fn prepare_dataset(ds: &Dataset<f64>, widths: &[usize]) -> vsql::Result<Loaded> {
    let test = if ds.test.is_empty() {
        None
    } else {
        Some(PreparedSet::from_states(&ds.test, widths)?)
    };
    Ok(Loaded {
        num_classes: ds.num_classes,
        train: PreparedSet::from_states(&ds.train, widths)?,
        test,
    })
}

fn load_data(spec: &DataSpec, widths: &[usize]) -> Result<Loaded, CliError> {
    let ds = match spec {
        DataSpec::QsdBinary(p) => gen_qsd_binary(p)?,
        DataSpec::QsdThree(p) => gen_qsd_three(p)?,
        DataSpec::Noisy(p) => gen_noisy_pair(p)?,
        DataSpec::File(path) => Dataset::load_json(path).map_err(|e| CliError::usage(e.to_string()))?,
        DataSpec::Mnist(m) => {
            let (train, test) = m.load().map_err(|e| CliError::usage(format!("MNIST unavailable: {e}")))?;
            return Ok(Loaded {
                num_classes: m.num_classes(),
                train: PreparedSet::from_mnist(&train, widths)?,
                test: Some(PreparedSet::from_mnist(&test, widths)?),
            });
        }
    };
    Ok(prepare_dataset(&ds, widths)?)
}

/// `dir/stem<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    (m, v.sqrt())
}

pub fn train(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut run: TrainRun = read_json(config)?;
    if let Some(s) = seed {
        run.train.seed = s;
        run.data.reseed(s);
    }
    run.train.validate()?;
    if run.repeats == 0 {
        return Err(CliError::usage("repeats must be at least 1"));
    }
    let circuits = run.ansatz.circuits()?;
    let mut widths: Vec<usize> = circuits.iter().map(|c| c.n_qsc()).collect();
    widths.sort_unstable();
    widths.dedup();
    let data = load_data(&run.data, &widths)?;

    let mut finals = Vec::new();
    for r in 0..run.repeats {
        let mut cfg = run.train.clone();
        cfg.seed = run.train.seed + r as u64;
        let model = Model::init(data.train.n_qubits, data.num_classes, circuits.clone(), cfg.seed)?;
        let outcome = fit_prepared(model, &data.train, data.test.as_ref(), &cfg)?;
        let ckpt = Checkpoint::from_model(&outcome.model, &cfg, &outcome.history);
        let (ckpt_path, metrics_path) = if run.repeats == 1 {
            let m = run.metrics_out.clone().unwrap_or_else(|| sibling(out, ".metrics.csv"));
            (out.to_path_buf(), m)
        } else {
            let p = sibling(out, &format!("-r{r}.json"));
            let m = sibling(&p, ".metrics.csv");
            (p, m)
        };
        ckpt.save(&ckpt_path)?;
        write_metrics_csv(&metrics_path, &outcome.history)?;
        let last = outcome.history.last().expect("history has a final row");
        let val = last.val_acc.map_or("n/a".into(), |v| format!("{v:.4}"));
        println!(
            "run {r}: {} parameters, {} iterations, loss {:.5}, train acc {:.4}, val acc {val}",
            ckpt.n_params(),
            outcome.iterations,
            last.loss,
            last.train_acc
        );
        if let Some(v) = last.val_acc {
            finals.push(v);
        }
    }
    if finals.len() > 1 {
        let (m, s) = mean_std(&finals);
        println!("val acc over {} runs: {m:.4} ± {s:.4}", finals.len());
    }
    Ok(())
}

pub fn eval(ckpt_path: &Path, data_path: &Path, predictions: Option<&Path>) -> Result<(), CliError> {
    let ckpt = Checkpoint::<f64>::load(ckpt_path).map_err(|e| CliError::usage(format!("bad checkpoint: {e}")))?;
    let model = ckpt.to_model()?;
    let widths = model.ensemble.widths();
    let text = fs::read(data_path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", data_path.display())))?;
    let data = match serde_json::from_slice::<DataSpec>(&text) {
        Ok(spec) => load_data(&spec, &widths)?,
        Err(_) => {
            let ds: Dataset<f64> = serde_json::from_slice(&text)
                .map_err(|e| CliError::usage(format!("{} is neither a data spec nor a dataset: {e}", data_path.display())))?;
            ds.validate()?;
            prepare_dataset(&ds, &widths)?
        }
    };
    if data.num_classes != model.num_classes {
        return Err(CliError::usage(format!(
            "checkpoint has {} classes, data has {}",
            model.num_classes, data.num_classes
        )));
    }
    let set = data.test.unwrap_or(data.train);
    if set.n_qubits != model.n_qubits {
        return Err(CliError::usage(format!(
            "checkpoint expects {} qubits, data has {}",
            model.n_qubits, set.n_qubits
        )));
    }
    let result = infer(&model, &set, &ckpt.config.shot_cfg)?;
    println!("samples {}", set.len());
    println!("accuracy {:.4}", result.accuracy);
    println!("confusion (rows true, columns predicted):");
    for (label, row) in result.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        println!("  {label}: {}", cells.join(" "));
    }
    let mut csv = String::from("index,label,predicted\n");
    for (i, (&t, &p)) in set.labels.iter().zip(&result.labels).enumerate() {
        let _ = writeln!(csv, "{i},{t},{p}");
    }
    let path = predictions.map_or_else(|| sibling(ckpt_path, ".predictions.csv"), Path::to_path_buf);
    fs::write(&path, csv).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn save_dataset(ds: &Dataset<f64>, out: Option<&Path>) -> Result<(), CliError> {
    let out = out.ok_or_else(|| CliError::usage("--out is required for quantum datasets"))?;
    ds.save_json(out)?;
    let hist: Vec<String> = ds.histogram().iter().map(usize::to_string).collect();
    println!(
        "{} states ({} train, {} test), per class {}",
        ds.len(),
        ds.train.len(),
        ds.test.len(),
        hist.join("/")
    );
    Ok(())
}

pub fn gen_qsd(config: Option<&Path>, out: Option<&Path>, seed: Option<u64>, three: bool) -> Result<(), CliError> {
    let mut p: QsdParams = config.map(read_json).transpose()?.unwrap_or_default();
    if let Some(s) = seed {
        p.seed = s;
    }
    let ds = if three { gen_qsd_three(&p)? } else { gen_qsd_binary(&p)? };
    save_dataset(&ds, out)
}

pub fn gen_noisy(config: Option<&Path>, out: Option<&Path>, seed: Option<u64>) -> Result<(), CliError> {
    let mut p: NoisyParams = config.map(read_json).transpose()?.unwrap_or_default();
    if let Some(s) = seed {
        p.seed = s;
    }
    save_dataset(&gen_noisy_pair(&p)?, out)
}

#[derive(Serialize)]
struct BaselineReport {
    n_params: usize,
    test_accuracy: Vec<f64>,
    mean: f64,
    std: f64,
}

pub fn baseline(config: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut run: BaselineRun = read_json(config)?;
    if let Some(s) = seed {
        run.train.seed = s;
        run.data.seed = s;
    }
    run.train.validate()?;
    if run.repeats == 0 {
        return Err(CliError::usage("repeats must be at least 1"));
    }
    let (train, test) = run.data.load().map_err(|e| CliError::usage(format!("MNIST unavailable: {e}")))?;
    let xs = |s: &vsql::data::MnistSplit| -> vsql::Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let x = s.images.iter().map(|i| pixel_vector(i)).collect::<vsql::Result<_>>()?;
        Ok((x, s.labels.iter().map(|&l| l as usize).collect()))
    };
    let ((tx, ty), (vx, vy)) = (xs(&train)?, xs(&test)?);
    let mut accs = Vec::new();
    let mut n_params = 0;
    for r in 0..run.repeats {
        let mut cfg = run.train.clone();
        cfg.seed = run.train.seed + r as u64;
        let out = classical_baseline_fit(&tx, &ty, &vx, &vy, run.data.num_classes(), &cfg)?;
        println!("run {r}: {} parameters, test acc {:.4}", out.n_params, out.test_accuracy);
        n_params = out.n_params;
        accs.push(out.test_accuracy);
    }
    let (mean, std) = mean_std(&accs);
    println!("test acc over {} runs: {mean:.4} ± {std:.4}", accs.len());
    if let Some(path) = &run.report_out {
        let report = BaselineReport { n_params, test_accuracy: accs, mean, std };
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::runtime(e.to_string()))?;
        fs::write(path, text).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
