use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dualtake::domain::{DomainTag, Session};
use dualtake::eval::{run_crossdomain_eval, train_all, EvalReport, MODEL_NAMES};
use dualtake::learners::Model;
use dualtake::pipeline::extract_dataset;
use dualtake::synth::{generate_cohort, read_session, write_session_annotated};
use dualtake::{Dataset, FeatureLayout};

use crate::config::{parse_config, RunConfig};
use crate::output::{Lock, Staging};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Generate,
    Extract,
    Train,
    Evaluate,
    Report,
    Manifest,
}

#[derive(Debug, Clone)]
pub struct Options {
    pub config: PathBuf,
    pub out: PathBuf,
    /// Replaces `cohort.seed`.
    pub seed: Option<u64>,
    pub overwrite: bool,
}

/// Artifact locations under the output directory.
pub mod paths {
    pub const SESSIONS: &str = "sessions";
    pub const DATASET: &str = "dataset.csv";
    pub const REJECTIONS: &str = "rejections.csv";
    pub const MODELS: &str = "models";
    pub const MANIFEST: &str = "features.csv";
    pub const REPORT_JSON: &str = "report.json";
    pub const METRICS: &str = "metrics.csv";
    pub const SUMMARY: &str = "summary.txt";
    pub const ROC: &str = "roc.csv";
    pub const TRACE: &str = "trace.csv";
    pub const TTEST: &str = "ttest.csv";
}

/// A serialized model with the provenance of the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub config_digest: String,
    pub seed: u64,
    pub model: Model<f64>,
}

struct Run {
    config: RunConfig,
    digest: String,
    out: PathBuf,
    staging: Staging,
}

impl Run {
    fn provenance(&self) -> Vec<String> {
        let seeds: Vec<String> = self.config.eval.seeds.iter().map(u64::to_string).collect();
        vec![
            format!("config_digest={}", self.digest),
            format!("cohort_seed={}", self.config.cohort.seed),
            format!("eval_seeds={}", seeds.join(" ")),
        ]
    }

    fn commented(&self, body: &str) -> String {
        let mut out = String::new();
        for line in self.provenance() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(body);
        out
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn report_dir(&self) -> PathBuf {
        self.out.join(&self.config.eval.output)
    }

    fn require(&self, path: PathBuf) -> Result<PathBuf, CliError> {
        if path.exists() {
            Ok(path)
        } else {
            Err(CliError::MissingArtifact(path))
        }
    }
}

fn load_config(opts: &Options) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(&opts.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", opts.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = opts.seed {
        config.cohort.seed = seed;
        config.validate()?;
    }
    Ok(config)
}

pub fn run(command: Command, opts: &Options) -> Result<(), CliError> {
    let config = load_config(opts)?;
    let digest = config.digest()?;
    fs::create_dir_all(&opts.out)?;
    let _lock = Lock::acquire(&opts.out)?;
    let mut run = Run { config, digest, out: opts.out.clone(), staging: Staging::new(opts.overwrite) };
    match command {
        Command::Generate => generate(&mut run)?,
        Command::Extract => extract(&mut run)?,
        Command::Train => train(&mut run)?,
        Command::Evaluate => evaluate(&mut run)?,
        Command::Report => report(&mut run)?,
        Command::Manifest => manifest(&mut run)?,
    }
    run.staging.commit()
}

fn generate(run: &mut Run) -> Result<(), CliError> {
    let target = run.path(paths::SESSIONS);
    run.staging.check_targets(std::slice::from_ref(&target))?;
    let sessions = generate_cohort(&run.config.cohort)?;
    let dir = run.staging.dir(target)?;
    let notes = run.provenance();
    for s in &sessions {
        fs::write(dir.join(format!("{}.txt", s.key())), write_session_annotated(s, &notes))?;
    }
    Ok(())
}

fn read_sessions(dir: &Path) -> Result<Vec<Session>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "txt"));
    files.sort();
    if files.is_empty() {
        return Err(CliError::MissingArtifact(dir.join("*.txt")));
    }
    files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            read_session(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn extract(run: &mut Run) -> Result<(), CliError> {
    let (dataset_path, rejections_path) = (run.path(paths::DATASET), run.path(paths::REJECTIONS));
    run.staging.check_targets(&[dataset_path.clone(), rejections_path.clone()])?;
    let sessions = read_sessions(&run.require(run.path(paths::SESSIONS))?)?;
    let extraction = extract_dataset(&sessions, &run.config.pipeline)?;
    let mut preamble = run.provenance();
    preamble.push(format!("rejected_windows={}", extraction.rejected.len()));
    let mut csv = Vec::new();
    extraction.dataset.write_csv(&mut csv, &preamble)?;
    let csv = String::from_utf8(csv).map_err(|e| CliError::Runtime(e.to_string()))?;
    run.staging.file(dataset_path, &csv)?;
    let mut rejections = String::from("session,window_start,reason\n");
    for r in &extraction.rejected {
        let _ = writeln!(rejections, "{},{:?},\"{}\"", r.session, r.window_start, r.reason.replace('"', "'"));
    }
    let rejections = run.commented(&rejections);
    run.staging.file(rejections_path, &rejections)?;
    Ok(())
}

fn read_dataset(run: &Run) -> Result<(Dataset, Dataset), CliError> {
    let path = run.require(run.path(paths::DATASET))?;
    let file = fs::File::open(&path)?;
    let ds = Dataset::read_csv(file).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok((ds.domain(DomainTag::Car), ds.domain(DomainTag::MicroMobility)))
}

fn train(run: &mut Run) -> Result<(), CliError> {
    let dir = run.path(paths::MODELS);
    let targets: Vec<PathBuf> =
        MODEL_NAMES.iter().map(|m| dir.join(format!("{m}.json"))).chain([dir.join(paths::TRACE)]).collect();
    run.staging.check_targets(&targets)?;
    let (car, micro) = read_dataset(run)?;
    let seed = run.config.eval.seeds[0];
    let trained = train_all(&car, &micro, &run.config.models, seed)?;
    let models =
        [Model::Forest(trained.sources.forest), Model::Mlp(trained.sources.mlp), Model::Ensemble(trained.ensemble)];
    for (path, model) in targets.iter().zip(models) {
        let artifact = ModelArtifact { config_digest: run.digest.clone(), seed, model };
        let text = serde_json::to_string_pretty(&artifact).map_err(|e| CliError::Runtime(e.to_string()))?;
        run.staging.file(path.clone(), &text)?;
    }
    let trace = run.commented(&trained.trace.to_csv());
    run.staging.file(targets[3].clone(), &trace)?;
    Ok(())
}

fn evaluate(run: &mut Run) -> Result<(), CliError> {
    let dir = run.report_dir();
    let (json_path, metrics_path) = (dir.join(paths::REPORT_JSON), dir.join(paths::METRICS));
    run.staging.check_targets(&[json_path.clone(), metrics_path.clone()])?;
    let (car, micro) = read_dataset(run)?;
    let cfg = &run.config;
    let mut report = run_crossdomain_eval(&car, &micro, &cfg.models, cfg.eval.k, &cfg.eval.seeds)?;
    report.config_digest = Some(run.digest.clone());
    let json = report.to_json()?;
    let metrics = run.commented(&report.metrics_csv());
    run.staging.file(json_path, &json)?;
    run.staging.file(metrics_path, &metrics)?;
    Ok(())
}

/// Human-readable digest of an evaluation report.
pub fn summary(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Cross-domain takeover prediction (source: car, target: micro-mobility)");
    let _ = writeln!(out, "config digest: {}", report.config_digest.as_deref().unwrap_or("-"));
    let seeds: Vec<String> = report.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "seeds: {}   folds: {}", seeds.join(" "), report.k);
    let _ = writeln!(out, "windows: {} source, {} target", report.n_source, report.n_target);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<12} {:>9} {:>9} {:>11}", "model", "accuracy", "AUC", "median AUC");
    for m in &report.models {
        let _ = writeln!(out, "{:<12} {:>9.4} {:>9.4} {:>11.4}", m.model, m.accuracy, m.auc, m.median_auc);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Target weight share per TrAdaBoost round (mean over folds and seeds):");
    let rounds = report.runs.iter().flat_map(|r| &r.results).map(|f| f.trace.rows.len()).max().unwrap_or(0);
    for it in 1..=rounds {
        let shares: Vec<f64> =
            report.runs.iter().flat_map(|r| &r.results).filter_map(|f| f.trace.target_fraction(it)).collect();
        let mean = shares.iter().sum::<f64>() / shares.len().max(1) as f64;
        let _ = writeln!(out, "  round {it:>2}: {mean:.4}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Paired t-tests, micro-mobility vs car (p < 0.01):");
    for t in report.ttests.iter().filter(|t| t.test.p < 0.01) {
        let _ = writeln!(
            out,
            "  {:<22} car {:>9.4}  micro {:>9.4}  t = {:>8.3}  p = {:.2e}",
            t.feature, t.car_mean, t.micro_mean, t.test.t, t.test.p
        );
    }
    out
}

fn report(run: &mut Run) -> Result<(), CliError> {
    let dir = run.report_dir();
    let outputs: Vec<PathBuf> =
        [paths::SUMMARY, paths::ROC, paths::TRACE, paths::TTEST].iter().map(|n| dir.join(n)).collect();
    run.staging.check_targets(&outputs)?;
    let path = run.require(dir.join(paths::REPORT_JSON))?;
    let report = EvalReport::from_json(&fs::read_to_string(&path)?)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let bodies = [
        summary(&report),
        run.commented(&report.roc_csv()),
        run.commented(&report.trace_csv()),
        run.commented(&report.ttest_csv()),
    ];
    for (path, body) in outputs.into_iter().zip(bodies) {
        run.staging.file(path, &body)?;
    }
    Ok(())
}

fn manifest(run: &mut Run) -> Result<(), CliError> {
    let path = run.path(paths::MANIFEST);
    run.staging.check_targets(std::slice::from_ref(&path))?;
    let body = run.commented(&FeatureLayout::get().manifest_csv());
    run.staging.file(path, &body)
}
