use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use dualfeat::evaluator::{evaluate_cv, LearnerConfig, LearnerKind, Metric};
use dualfeat::nnkernel::checkpoint;
use dualfeat::rewards::RewardMode;
use dualfeat::search::{
    convergence_csv, dataset_csv, expressions_csv, order_report_csv, rewards_csv, run_search,
    trace_csv, verify_expressions, Ablation, SearchConfig, SearchResult,
};
use dualfeat::synthetic::{product_classification, product_regression};
use dualfeat::tabular::{load_csv, split_folds, Dataset, SchemaSpec};
use dualfeat::transforms::{expression_order, FeatureExpression};

use crate::args::{Cli, Command, DataArgs, EvaluateArgs, ReportArgs, RunArgs, SynthArgs};
use crate::manifest::{InputRecord, RunManifest, Scores, MANIFEST_FILE};
use crate::output::{ensure_dir, sha256_file, write_atomic};
use crate::CliError;

pub const TRANSFORMED: &str = "transformed.csv";
pub const TRANSFORMED_SCHEMA: &str = "schema.txt";
pub const EXPRESSIONS: &str = "expressions.csv";
pub const TRACE: &str = "trace.csv";
pub const REWARDS: &str = "rewards.csv";
pub const ORDER_REPORT: &str = "order_report.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const GENERATION_CKPT: &str = "generation.ckpt";
pub const DISCRIMINATION_CKPT: &str = "discrimination.ckpt";

type CliResult<T = ()> = Result<T, CliError>;

fn out_line(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> CliResult {
    writeln!(out, "{line}").map_err(|source| CliError::Write {
        path: "<stdout>".into(),
        source,
    })
}

pub fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Report(a) => cmd_report(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
    }
}

fn learner(kind: &str, trees: usize, seed: u64) -> CliResult<LearnerConfig> {
    Ok(LearnerConfig {
        kind: kind.parse::<LearnerKind>()?,
        trees,
        seed,
        ..LearnerConfig::default()
    })
}

fn metric(flag: Option<&str>) -> CliResult<Option<Metric>> {
    Ok(flag.map(str::parse::<Metric>).transpose()?)
}

fn load(input: &DataArgs) -> CliResult<Dataset> {
    let schema = SchemaSpec::load(&input.schema)?;
    Ok(load_csv(&input.data, &schema)?)
}

fn search_config(a: &RunArgs) -> CliResult<SearchConfig> {
    Ok(SearchConfig {
        epochs: a.epochs,
        steps: a.steps,
        seed: a.seed,
        learner: learner(&a.learner, a.trees, a.seed)?,
        metric: metric(a.metric.as_deref())?,
        folds: a.folds,
        cap: a.cap,
        ablation: a
            .ablation
            .as_deref()
            .map(str::parse::<Ablation>)
            .transpose()?,
        chain_epochs: a.chain_epochs,
        reward_mode: if a.masked_rewards {
            RewardMode::Masked
        } else {
            RewardMode::Unconditional
        },
        target_sync: a.target_sync,
        ..SearchConfig::default()
    })
}

fn checkpoint_bytes<P: dualfeat::nnkernel::Parameters>(model: &P) -> Vec<u8> {
    let mut buf = Vec::new();
    checkpoint::save(model, &mut buf).expect("writing to memory cannot fail");
    buf
}

fn write_outputs(
    dir: &Path,
    original: &Dataset,
    r: &SearchResult,
) -> CliResult<BTreeMap<String, String>> {
    verify_expressions(&r.best, original)?;
    let mut files: Vec<(&str, &str, Vec<u8>)> = vec![
        (
            "schema",
            TRANSFORMED_SCHEMA,
            SchemaSpec::of_dataset(&r.best).to_text().into_bytes(),
        ),
        (
            "expressions",
            EXPRESSIONS,
            expressions_csv(&r.best)?.into_bytes(),
        ),
        ("trace", TRACE, trace_csv(&r.trace)?.into_bytes()),
        ("rewards", REWARDS, rewards_csv(&r.rewards)?.into_bytes()),
        (
            "order_report",
            ORDER_REPORT,
            order_report_csv(&r.order_report())?.into_bytes(),
        ),
        (
            "convergence",
            CONVERGENCE,
            convergence_csv(&r.convergence)?.into_bytes(),
        ),
        (
            "generation_checkpoint",
            GENERATION_CKPT,
            checkpoint_bytes(&r.generation.q.net),
        ),
    ];
    if let Some(d) = &r.discrimination {
        files.push((
            "discrimination_checkpoint",
            DISCRIMINATION_CKPT,
            checkpoint_bytes(&d.q.net),
        ));
    }
    // The transformed table goes last so its presence implies a complete run.
    files.push((
        "transformed",
        TRANSFORMED,
        dataset_csv(&r.best)?.into_bytes(),
    ));
    let mut outputs = BTreeMap::new();
    for (key, name, bytes) in files {
        write_atomic(&dir.join(name), &bytes)?;
        outputs.insert(key.to_string(), name.to_string());
    }
    Ok(outputs)
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> CliResult {
    let cfg = search_config(a)?;
    let data = InputRecord {
        path: a.input.data.display().to_string(),
        sha256: sha256_file(&a.input.data)?,
    };
    let schema = InputRecord {
        path: a.input.schema.display().to_string(),
        sha256: sha256_file(&a.input.schema)?,
    };
    let d = load(&a.input)?;
    ensure_dir(&a.out)?;
    let stale = a.out.join(TRANSFORMED);
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|source| CliError::Write {
            path: stale.display().to_string(),
            source,
        })?;
    }

    let started = Instant::now();
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        status: "failed".into(),
        error: None,
        seed: a.seed,
        config: serde_json::to_value(&cfg).expect("config serializes"),
        data,
        schema,
        outputs: BTreeMap::new(),
        scores: None,
        epochs_run: 0,
        evaluations: 0,
        wall_clock_seconds: 0.0,
    };
    let result = run_search(&d, &cfg).map_err(CliError::from).and_then(|r| {
        let outputs = write_outputs(&a.out, &d, &r)?;
        Ok((r, outputs))
    });
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let manifest_path = a.out.join(MANIFEST_FILE);
    match result {
        Ok((r, outputs)) => {
            manifest.status = "complete".into();
            manifest.outputs = outputs;
            manifest.epochs_run = r.convergence.len();
            manifest.evaluations = r.evaluations;
            manifest.scores = Some(Scores {
                metric: r.metric.to_string(),
                base: r.base_score,
                best: r.best_score,
                delta: r.best_score - r.base_score,
            });
            write_atomic(&manifest_path, manifest.to_json().as_bytes())?;
            let order = r.order_report();
            out_line(out, format_args!("base {}: {}", r.metric, r.base_score))?;
            out_line(out, format_args!("best {}: {}", r.metric, r.best_score))?;
            out_line(
                out,
                format_args!("delta: {:+.4}", r.best_score - r.base_score),
            )?;
            out_line(
                out,
                format_args!(
                    "features: {} ({} high-order)",
                    r.best.n_features(),
                    order.high
                ),
            )?;
            out_line(out, format_args!("output: {}", a.out.display()))
        }
        Err(e) => {
            manifest.error = Some(e.to_string());
            write_atomic(&manifest_path, manifest.to_json().as_bytes())?;
            Err(e)
        }
    }
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> CliResult {
    let lc = learner(&a.learner, a.trees, a.seed)?;
    lc.validate()?;
    let requested = metric(a.metric.as_deref())?;
    let d = load(&a.input)?;
    let m = requested.unwrap_or_else(|| Metric::default_for(d.task()));
    m.check_task(d.task())?;
    let folds = split_folds(&d, a.folds, a.seed)?;
    let score = evaluate_cv(&d, &lc, &folds, m)?;
    out_line(
        out,
        format_args!(
            "{} ({}-fold cv, {} features): {}",
            m,
            a.folds,
            d.n_features(),
            score.value
        ),
    )
}

fn read_output(dir: &Path, m: &RunManifest, key: &str) -> CliResult<String> {
    let name = m.outputs.get(key).ok_or_else(|| CliError::Manifest {
        path: dir.join(MANIFEST_FILE).display().to_string(),
        message: format!("no {key} output recorded"),
    })?;
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|e| CliError::Manifest {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> CliResult {
    let dir = &a.manifest;
    let m = RunManifest::read(dir)?;
    let corrupt = |message: String| CliError::Manifest {
        path: dir.join(MANIFEST_FILE).display().to_string(),
        message,
    };
    if m.status != "complete" {
        return Err(corrupt(format!(
            "run did not complete: {}",
            m.error.as_deref().unwrap_or("unknown error")
        )));
    }
    let text = read_output(dir, &m, "expressions")?;
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let mut orders = Vec::new();
    for rec in rows.records() {
        let rec = rec.map_err(|e| corrupt(e.to_string()))?;
        let expr: FeatureExpression = rec
            .get(3)
            .ok_or_else(|| corrupt("expressions file lacks the expression column".into()))?
            .parse()
            .map_err(|e: dualfeat::Error| corrupt(e.to_string()))?;
        orders.push(expression_order(&expr));
    }
    let high = orders.iter().filter(|&&o| o >= 2).count();
    let low = orders.len() - high;
    let proportion = if orders.is_empty() {
        0.0
    } else {
        high as f64 / orders.len() as f64
    };

    let conv = read_output(dir, &m, "convergence")?;
    let series = conv.lines().skip(1).filter(|l| !l.is_empty()).count();
    if series != m.epochs_run {
        return Err(corrupt(format!(
            "convergence series has {series} rows, manifest records {} epochs",
            m.epochs_run
        )));
    }
    if let Some(s) = &m.scores {
        out_line(out, format_args!("metric: {}", s.metric))?;
        out_line(out, format_args!("base: {}", s.base))?;
        out_line(out, format_args!("best: {}", s.best))?;
        out_line(out, format_args!("delta: {:+.4}", s.delta))?;
    }
    out_line(out, format_args!("low-order,high-order,high-order-share"))?;
    out_line(out, format_args!("{low},{high},{:.1}%", 100.0 * proportion))?;
    out_line(out, format_args!("convergence:"))?;
    write!(out, "{conv}").map_err(|source| CliError::Write {
        path: "<stdout>".into(),
        source,
    })
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult {
    let d = match a.kind.as_str() {
        "product-regression" => product_regression(a.rows, a.features, a.noise, a.seed)?,
        "product-classification" => product_classification(a.rows, a.seed)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown synthetic kind {other:?} (expected product-regression or product-classification)"
            )))
        }
    };
    ensure_dir(&a.out)?;
    write_atomic(&a.out.join("data.csv"), dataset_csv(&d)?.as_bytes())?;
    write_atomic(
        &a.out.join("schema.txt"),
        SchemaSpec::of_dataset(&d).to_text().as_bytes(),
    )?;
    out_line(
        out,
        format_args!(
            "wrote {} rows x {} features to {}",
            d.n_rows(),
            d.n_features(),
            a.out.display()
        ),
    )
}
