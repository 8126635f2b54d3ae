//! Command-line pipeline: generate -> preprocess -> label -> train ->
//! evaluate -> report, over the canonical CSV formats.
//!
//! Every stage restarts from its on-disk inputs, and identical commands
//! with identical seeds produce byte-identical outputs. Exit codes:
//! 0 success, 2 usage error, 1 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use harvest_har::config::{parse_config_text, PipelineConfig};
use harvest_har::data::{
    load_dataset, parse_events_csv, save_dataset, LabelSequence, MultiStreamSeries, RawRecording,
};
use harvest_har::error::{Error, Result};
use harvest_har::eval::{parse_metrics_csv, parse_trace_csv, run_cv, write_report_dir};
use harvest_har::features::{extract, window_label, windows};
use harvest_har::labeling::{learn_labels, predefine_labels};
use harvest_har::models::ensemble::{ensemble_fit, EnsembleTrainConfig};
use harvest_har::models::{save_model, train_rcnn, ModelKind, ModelParams, RcnnTrainConfig, WindowSequence};
use harvest_har::preprocess::{balance, estimate_policy, fuse};
use harvest_har::report::{render_box_plot, render_fold_overlay};
use harvest_har::rng::derive_seed;
use harvest_har::synth;

const SEED_ENV: &str = "HARVEST_HAR_SEED";

#[derive(Parser)]
#[command(
    name = "harvest-har",
    about = "Bag-emptying event detection from wearable fruit-picker sensors",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every stage: seed resolution and config merging.
#[derive(Args)]
struct CommonOpts {
    /// Random seed; falls back to $HARVEST_HAR_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// key=value config file merged under explicit flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value overrides (repeatable); applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl CommonOpts {
    fn seed(&self) -> u64 {
        self.seed
            .or_else(|| std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()))
            .unwrap_or(0)
    }

    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (key, value) in parse_config_text(&text)? {
                cfg.apply(&key, &value)?;
            }
        }
        for pair in &self.set {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set expects key=value, got {pair:?}"))
            })?;
            cfg.apply(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labelled recording (data.csv + data.events.csv).
    Generate {
        /// Number of bag-emptying events.
        #[arg(long)]
        events: usize,
        /// Output directory for the CSV pair.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Bandpass, scale and fuse a raw recording; optionally balance it.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Low cutoff in Hz.
        #[arg(long)]
        low: Option<f64>,
        /// High cutoff in Hz.
        #[arg(long)]
        high: Option<f64>,
        /// Filter order.
        #[arg(long)]
        order: Option<usize>,
        /// Apply class balancing (requires a label column).
        #[arg(long)]
        balance: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Learn refined event labels from approximate event times.
    Label {
        #[arg(long = "in")]
        input: PathBuf,
        /// Event log; defaults to the sibling of --in.
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// 2-means refinement iterations.
        #[arg(long)]
        iters: Option<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Train a model on a labelled dataset and save its parameters.
    Train {
        /// ensemble or rcnn.
        #[arg(long)]
        model: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// k-fold contiguous cross-validation with metrics and traces.
    Evaluate {
        #[arg(long = "in")]
        input: PathBuf,
        /// ensemble or rcnn.
        #[arg(long)]
        model: String,
        /// Label source: predefined, manual, or learned.
        #[arg(long, default_value = "manual")]
        labels: String,
        /// Output directory for metrics.csv, trace_fold*.csv, summary.csv.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Render SVG prediction overlays and the box-whisker summary.
    Report {
        /// Directory written by evaluate.
        #[arg(long = "trace-dir")]
        trace_dir: PathBuf,
        /// The dataset the traces refer to (for the channel panels).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate { events, out, common } => cmd_generate(events, &out, &common),
        Command::Preprocess { input, out, low, high, order, balance, common } => {
            cmd_preprocess(&input, &out, low, high, order, balance, &common)
        }
        Command::Label { input, events, out, iters, common } => {
            cmd_label(&input, events.as_deref(), &out, iters, &common)
        }
        Command::Train { model, input, out, common } => {
            cmd_train(&model, &input, &out, &common)
        }
        Command::Evaluate { input, model, labels, out, common } => {
            cmd_evaluate(&input, &model, &labels, &out, &common)
        }
        Command::Report { trace_dir, data, out, common } => {
            cmd_report(&trace_dir, &data, &out, &common)
        }
    }
}

fn cmd_generate(events: usize, out: &Path, common: &CommonOpts) -> Result<()> {
    let cfg = common.pipeline_config()?;
    let seed = common.seed();
    let mut scenario = synth::default_scenario(events, seed);
    // Apply gen.* overrides on top of the event-count defaults.
    let defaults = synth::default_scenario(0, 0);
    if cfg.scenario.duration_samples != defaults.duration_samples {
        scenario.duration_samples = cfg.scenario.duration_samples;
    }
    scenario.mean_event_duration_s = cfg.scenario.mean_event_duration_s;
    scenario.empty_phase_range_s = cfg.scenario.empty_phase_range_s;
    scenario.picking_amp = cfg.scenario.picking_amp;
    scenario.walking_amp = cfg.scenario.walking_amp;
    scenario.lift_spike_amp = cfg.scenario.lift_spike_amp;
    scenario.shake_amp = cfg.scenario.shake_amp;
    scenario.rssi_near_dbm = cfg.scenario.rssi_near_dbm;
    scenario.rssi_far_dbm = cfg.scenario.rssi_far_dbm;
    scenario.noise_sd = cfg.scenario.noise_sd;

    let (recording, event_log, labels) = synth::generate(&scenario)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let series = MultiStreamSeries::new(
        [
            recording.accel_x().to_vec(),
            recording.accel_y().to_vec(),
            recording.accel_z().to_vec(),
            recording.rssi_held(),
        ],
        false,
    )?;
    let path = out.join("data.csv");
    save_dataset(&series, &event_log, Some(&labels), &path)?;
    println!(
        "generated {} samples, {} events -> {}",
        series.len(),
        event_log.len(),
        path.display()
    );
    Ok(())
}

fn cmd_preprocess(
    input: &Path,
    out: &Path,
    low: Option<f64>,
    high: Option<f64>,
    order: Option<usize>,
    do_balance: bool,
    common: &CommonOpts,
) -> Result<()> {
    let mut cfg = common.pipeline_config()?;
    if let Some(v) = low {
        cfg.filter.low_cut_hz = v;
    }
    if let Some(v) = high {
        cfg.filter.high_cut_hz = v;
    }
    if let Some(v) = order {
        cfg.filter.order = v;
    }
    cfg.filter.validate()?;

    let (series, events, labels) = load_dataset(input)?;
    let raw = RawRecording::from_held_series(&series, 0)?;
    let fused = fuse(&raw, &cfg.filter)?;

    if do_balance {
        let labels = labels.ok_or_else(|| {
            Error::Config("--balance needs a label column in the input".into())
        })?;
        let policy = estimate_policy(&labels.to_events())?.with_seed(common.seed());
        let (bs, bl) = balance(&fused, &labels, &policy)?;
        let new_events = bl.to_events();
        save_dataset(&bs, &new_events, Some(&bl), out)?;
        println!(
            "preprocessed + balanced {} -> {} samples -> {}",
            series.len(),
            bs.len(),
            out.display()
        );
    } else {
        save_dataset(&fused, &events, labels.as_ref(), out)?;
        println!("preprocessed {} samples -> {}", fused.len(), out.display());
    }
    Ok(())
}

fn cmd_label(
    input: &Path,
    events_path: Option<&Path>,
    out: &Path,
    iters: Option<usize>,
    common: &CommonOpts,
) -> Result<()> {
    let mut cfg = common.pipeline_config()?;
    if let Some(v) = iters {
        cfg.labeling.kmeans_iters = v;
    }
    cfg.labeling.seed = common.seed();
    cfg.labeling.validate()?;

    let (series, sibling_events, _) = load_dataset(input)?;
    let events = match events_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_events_csv(&text)?
        }
        None => sibling_events,
    };
    let learned = learn_labels(&series, &events, &cfg.labeling)?;
    save_dataset(&series, &events, Some(&learned), out)?;
    let n_runs = learned.runs().len();
    println!(
        "learned labels for {} logged events -> {} runs -> {}",
        events.len(),
        n_runs,
        out.display()
    );
    Ok(())
}

/// Balanced per-sample training data for the whole-file train command.
fn balanced_training_data(
    series: &MultiStreamSeries,
    labels: &LabelSequence,
    seed: u64,
) -> Result<(MultiStreamSeries, LabelSequence)> {
    match estimate_policy(&labels.to_events()) {
        Ok(policy) => balance(series, labels, &policy.with_seed(seed)),
        // Fewer than two events: train unbalanced.
        Err(Error::InsufficientData(_)) => Ok((series.clone(), labels.clone())),
        Err(e) => Err(e),
    }
}

fn cmd_train(model: &str, input: &Path, out: &Path, common: &CommonOpts) -> Result<()> {
    let kind: ModelKind = model.parse()?;
    let cfg = common.pipeline_config()?;
    cfg.cv.validate()?;
    let seed = common.seed();
    let (series, _, labels) = load_dataset(input)?;
    let labels = labels
        .ok_or_else(|| Error::Config("training needs a label column in the input".into()))?;
    let (series, labels) = if cfg.cv.balance_training {
        balanced_training_data(&series, &labels, derive_seed(seed, 0xba1a))?
    } else {
        (series, labels)
    };

    let width = cfg.cv.window_width;
    let wins = windows(&series, width);
    if wins.is_empty() {
        return Err(Error::InsufficientData(format!(
            "dataset shorter than one {width}-sample window"
        )));
    }
    let mut targets = Vec::with_capacity(wins.len());
    for &(start, _) in &wins {
        targets.push(window_label(&labels, start, width)?);
    }

    let params = match kind {
        ModelKind::Ensemble => {
            let mut feats = Vec::with_capacity(wins.len());
            for (_, view) in &wins {
                feats.push(extract(view)?.0.to_vec());
            }
            let train_cfg = EnsembleTrainConfig { seed, ..cfg.cv.ensemble };
            let (p, trace) = ensemble_fit(&feats, &targets, &train_cfg)?;
            println!(
                "ensemble loss {:.4} -> {:.4} over {} epochs",
                trace.first().unwrap_or(&0.0),
                trace.last().unwrap_or(&0.0),
                trace.len()
            );
            ModelParams::Ensemble(p)
        }
        ModelKind::Rcnn => {
            let group = WindowSequence {
                windows: wins.iter().map(|(_, v)| v.channels.to_vec()).collect(),
                targets: targets.clone(),
            };
            let train_cfg = RcnnTrainConfig { seed, ..cfg.cv.rcnn };
            let (p, trace) = train_rcnn(&[group], &train_cfg)?;
            println!(
                "rcnn loss {:.4} -> {:.4} over {} epochs",
                trace.first().unwrap_or(&0.0),
                trace.last().unwrap_or(&0.0),
                trace.len()
            );
            ModelParams::Rcnn(p)
        }
    };
    save_model(&params, out)?;
    println!("saved {} model -> {}", kind.name(), out.display());
    Ok(())
}

fn cmd_evaluate(
    input: &Path,
    model: &str,
    label_source: &str,
    out: &Path,
    common: &CommonOpts,
) -> Result<()> {
    let kind: ModelKind = model.parse()?;
    let mut cfg = common.pipeline_config()?;
    cfg.cv.seed = common.seed();
    cfg.labeling.seed = common.seed();
    cfg.validate()?;

    let (series, events, manual) = load_dataset(input)?;
    let labels = match label_source {
        "manual" => manual.ok_or_else(|| {
            Error::Config("label source 'manual' needs a label column in the input".into())
        })?,
        "predefined" => predefine_labels(series.len(), &events, &cfg.labeling)?,
        "learned" => learn_labels(&series, &events, &cfg.labeling)?,
        other => {
            return Err(Error::Config(format!(
                "unknown label source {other:?}; expected predefined, manual, or learned"
            )))
        }
    };

    let outcomes = run_cv(&series, &labels, kind, &cfg.cv)?;
    write_report_dir(&outcomes, out)?;
    for o in &outcomes {
        match (&o.metrics, &o.skipped) {
            (Some(m), _) => println!(
                "fold {}: accuracy {:.3} precision {:.3} recall {:.3} f {:.3}",
                o.fold, m.accuracy, m.precision, m.recall, m.f_score
            ),
            (None, reason) => {
                println!("fold {}: skipped ({})", o.fold, reason.as_deref().unwrap_or("?"))
            }
        }
    }
    println!("report -> {}", out.display());
    Ok(())
}

fn cmd_report(trace_dir: &Path, data: &Path, out: &Path, common: &CommonOpts) -> Result<()> {
    let cfg = common.pipeline_config()?;
    let width = cfg.cv.window_width;
    let (series, _, _) = load_dataset(data)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let metrics_path = trace_dir.join("metrics.csv");
    let metrics_text =
        std::fs::read_to_string(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
    let metrics = parse_metrics_csv(&metrics_text)?;
    if metrics.is_empty() {
        return Err(Error::InsufficientData("metrics.csv has no folds".into()));
    }

    let mut plotted = 0usize;
    for (fold, _) in &metrics {
        let trace_path = trace_dir.join(format!("trace_fold{fold}.csv"));
        if !trace_path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
        let trace = parse_trace_csv(&text)?;
        if trace.is_empty() {
            continue;
        }
        let svg = render_fold_overlay(&series, &trace, width, &format!("fold {fold}"))?;
        let path = out.join(format!("fold{fold}.svg"));
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        plotted += 1;
    }
    if plotted == 0 {
        return Err(Error::InsufficientData("no non-empty traces to plot".into()));
    }

    let completed: Vec<&harvest_har::eval::MetricsReport> =
        metrics.iter().filter_map(|(_, m)| m.as_ref()).collect();
    if completed.is_empty() {
        return Err(Error::InsufficientData("all folds were skipped".into()));
    }
    let box_metrics = vec![
        ("accuracy", completed.iter().map(|m| m.accuracy).collect::<Vec<_>>()),
        ("precision", completed.iter().map(|m| m.precision).collect()),
        ("recall", completed.iter().map(|m| m.recall).collect()),
        ("f_score", completed.iter().map(|m| m.f_score).collect()),
    ];
    let svg = render_box_plot(&box_metrics, "cross-validation metrics")?;
    let path = out.join("summary_box.svg");
    std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    println!("wrote {plotted} fold plots + summary box plot -> {}", out.display());
    Ok(())
}
