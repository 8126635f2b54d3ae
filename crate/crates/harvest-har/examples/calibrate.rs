//! Calibration harness for the synthetic task: measures learned-label IoU
//! and cross-validated model scores so generator and training defaults
//! can be tuned against the acceptance thresholds.
//!
//! Usage:
//!   calibrate [events] [seed...]          label IoU on default corpora
//!   calibrate easy [seed...]              IoU on the zero-noise instance
//!   calibrate cv [seed] [events] [epochs] full 6-fold CV of both models

use harvest_har::data::MultiStreamSeries;
use harvest_har::eval::{run_cv, summarize, CvConfig, WindowPrediction};
use harvest_har::labeling::{learn_labels, LabelingConfig};
use harvest_har::models::ModelKind;
use harvest_har::preprocess::{fuse, FilterSpec};
use harvest_har::synth::{default_scenario, generate, ScenarioConfig};

fn mean_iou(truth: &[(usize, usize)], learned: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for t in truth {
        let mut best = 0.0f64;
        for l in learned {
            let inter = t.1.min(l.1).saturating_sub(t.0.max(l.0)) as f64;
            let union = (t.1.max(l.1) - t.0.min(l.0)) as f64;
            best = best.max(inter / union);
        }
        total += best;
    }
    total / truth.len() as f64
}

fn fused_corpus(cfg: &ScenarioConfig) -> (MultiStreamSeries, Vec<(usize, usize)>) {
    let (rec, events, _) = generate(cfg).expect("generate");
    let fused = fuse(&rec, &FilterSpec::default()).expect("fuse");
    (fused, events.events().to_vec())
}

fn report_iou(tag: &str, cfg: &ScenarioConfig, lcfg: &LabelingConfig) {
    let (fused, truth) = fused_corpus(cfg);
    let events = harvest_har::data::EventLog::new(truth.clone()).unwrap();
    let start = std::time::Instant::now();
    let learned = learn_labels(&fused, &events, lcfg).expect("learn labels");
    let runs = learned.runs();
    let iou = mean_iou(&truth, &runs);
    let mean_true: f64 =
        truth.iter().map(|&(s, e)| (e - s) as f64).sum::<f64>() / truth.len() as f64;
    let mean_learned: f64 =
        runs.iter().map(|&(s, e)| (e - s) as f64).sum::<f64>() / runs.len().max(1) as f64;
    println!(
        "{tag}: iou {iou:.3}  true_len {mean_true:.0}  learned_len {mean_learned:.0}  runs {}  ({:.1}s)",
        runs.len(),
        start.elapsed().as_secs_f64()
    );
}

fn sign_changes_per_event(
    trace: &[&WindowPrediction],
    events: &[(usize, usize)],
    width: usize,
) -> f64 {
    let mut total = 0usize;
    let mut counted = 0usize;
    for &(s, e) in events {
        let w_lo = s / width;
        let w_hi = e.div_ceil(width);
        let in_event: Vec<&&WindowPrediction> =
            trace.iter().filter(|p| p.window >= w_lo && p.window < w_hi).collect();
        if in_event.len() < 2 {
            continue;
        }
        counted += 1;
        for pair in in_event.windows(2) {
            if (pair[0].probability >= 0.5) != (pair[1].probability >= 0.5) {
                total += 1;
            }
        }
    }
    if counted == 0 {
        0.0
    } else {
        total as f64 / counted as f64
    }
}

fn run_cv_check(args: &[String]) {
    let seed: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(0);
    let n_events: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(50);

    let (fused, truth) = fused_corpus(&default_scenario(n_events, seed));
    let events = harvest_har::data::EventLog::new(truth.clone()).unwrap();
    let start = std::time::Instant::now();
    let learned = learn_labels(&fused, &events, &LabelingConfig::default()).unwrap();
    println!(
        "labeling: {:.1}s  iou {:.3}",
        start.elapsed().as_secs_f64(),
        mean_iou(&truth, &learned.runs())
    );

    let mut cv = CvConfig { seed, ..Default::default() };
    cv.rcnn.epochs = epochs;
    for kind in [ModelKind::Ensemble, ModelKind::Rcnn] {
        let start = std::time::Instant::now();
        let outcomes = run_cv(&fused, &learned, kind, &cv).unwrap();
        let summary = summarize(&outcomes).unwrap();
        let trace: Vec<&WindowPrediction> =
            outcomes.iter().flat_map(|o| o.trace.iter()).collect();
        let changes = sign_changes_per_event(&trace, &truth, cv.window_width);
        println!(
            "{}: acc {:.3} prec {:.3} rec {:.3} f {:.3}  sign-changes/event {:.2}  ({:.0}s)",
            kind.name(),
            summary.accuracy,
            summary.precision,
            summary.recall,
            summary.f_score,
            changes,
            start.elapsed().as_secs_f64()
        );
        let folds: Vec<String> = outcomes
            .iter()
            .filter_map(|o| o.metrics.as_ref().map(|m| format!("f{}={:.3}", o.fold, m.f_score)))
            .collect();
        println!("  {}", folds.join("  "));
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("cv") => run_cv_check(&args[1..]),
        Some("easy") => {
            let seeds: Vec<u64> = if args.len() > 1 {
                args[1..].iter().map(|s| s.parse().unwrap()).collect()
            } else {
                vec![0, 1, 2]
            };
            for seed in seeds {
                let mut cfg = default_scenario(16, seed);
                cfg.noise_sd = 0.0;
                cfg.picking_amp = 0.05;
                cfg.walking_amp = 0.9;
                cfg.shake_amp = 1.3;
                cfg.lift_spike_amp = 2.0;
                cfg.mean_event_duration_s = 40.0;
                let lcfg =
                    LabelingConfig { window_q: 128, kmeans_iters: 25, ..Default::default() };
                report_iou(&format!("easy seed {seed}"), &cfg, &lcfg);
            }
        }
        _ => {
            let n_events: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(64);
            let seeds: Vec<u64> = if args.len() > 1 {
                args[1..].iter().map(|s| s.parse().unwrap()).collect()
            } else {
                vec![0, 1, 2]
            };
            for seed in seeds {
                report_iou(
                    &format!("seed {seed}"),
                    &default_scenario(n_events, seed),
                    &LabelingConfig::default(),
                );
            }
        }
    }
}
