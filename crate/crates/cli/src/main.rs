//! `contamdet`: command-line front end of the contamination detection
//! service. Every subcommand talks HTTP: either to the server named by
//! `--server` (or the config file) or to an ephemeral in-process
//! instance started for the invocation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contamdet_api as api;
use contamdet_client::{Client, ClientError};

#[derive(Parser)]
#[command(name = "contamdet", version, about = "X-ray contamination detection service client")]
struct Cli {
    /// Base URL of a running server (e.g. http://127.0.0.1:8780).
    /// Without it, an in-process server handles the invocation.
    #[arg(long, global = true)]
    server: Option<String>,

    /// Override dataset/training seeds where a subcommand takes one.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Compute threads (serve and in-process modes).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON config file with defaults, e.g. {"server": "http://..."}.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Generate a synthetic dataset (scenes or crops) from a spec file.
    Synth(SynthArgs),
    /// Calibrate the multi-threshold filter on an annotated dataset.
    Calibrate(CalibrateArgs),
    /// Run the filter on one image and report candidate contaminations.
    Detect(DetectArgs),
    /// Train the crop classifier from a manifest.
    Train(TrainArgs),
    /// Random hyper-parameter search with K-fold cross-validation.
    Search(SearchArgs),
    /// Evaluate filter and pipeline on an annotated dataset.
    Evaluate(EvaluateArgs),
    /// Full detection pipeline over a batch of images.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8780")]
    addr: String,
}

#[derive(Args)]
struct SynthArgs {
    /// Dataset spec JSON (scene or crop dataset).
    #[arg(long = "spec", value_name = "FILE")]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Annotated dataset directory (images/ + annotations/).
    #[arg(long)]
    dataset: PathBuf,
    /// Calibration search ranges JSON; defaults apply when omitted.
    #[arg(long)]
    ranges: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// Write the detection report JSON here (stdout summary otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a PNG with circled detections here.
    #[arg(long)]
    annotate: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    hyperparams: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Loss-trace CSV output.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Search-space ranges JSON.
    #[arg(long)]
    space: PathBuf,
    #[arg(long, default_value_t = 8)]
    iterations: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long = "out-table")]
    out_table: PathBuf,
    /// Also export the table as JSON.
    #[arg(long = "out-table-json")]
    out_table_json: Option<PathBuf>,
    #[arg(long = "out-best")]
    out_best: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Image files and/or directories.
    #[arg(long, required = true, num_args = 1..)]
    images: Vec<PathBuf>,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Directory for per-image report JSONs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(serde::Deserialize, Default)]
struct FileConfig {
    server: Option<String>,
}

fn exit_code_for(err: &ClientError) -> u8 {
    match err.kind() {
        "invalid_input" => 1,
        "schema" | "data" | "image" | "json" | "io" | "shape_mismatch" => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Version/help requests are successes; everything else is a
            // usage error.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime");
    match runtime.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

async fn run(cli: Cli) -> contamdet_client::Result<()> {
    if let Some(threads) = cli.threads {
        contamdet_server::configure_threads(threads);
    }

    if let Command::Serve(args) = &cli.command {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .map_err(|e| ClientError::Protocol(format!("bind {}: {e}", args.addr)))?;
        println!("contamdet server on http://{}", args.addr);
        return contamdet_server::serve(listener)
            .await
            .map_err(|e| ClientError::Protocol(format!("server: {e}")));
    }

    let file_config: FileConfig = match &cli.config {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| ClientError::Api {
                    kind: "data".into(),
                    message: format!("{}: {e}", path.display()),
                })?;
            serde_json::from_slice(&bytes).map_err(|e| ClientError::Api {
                kind: "data".into(),
                message: format!("{}: {e}", path.display()),
            })?
        }
        None => FileConfig::default(),
    };

    let base_url = match cli.server.or(file_config.server) {
        Some(url) => url,
        None => {
            let addr = contamdet_server::spawn_ephemeral()
                .await
                .map_err(|e| ClientError::Protocol(format!("local server: {e}")))?;
            format!("http://{addr}")
        }
    };
    let client = Client::new(base_url);

    match cli.command {
        Command::Serve(_) => unreachable!("handled above"),
        Command::Synth(args) => {
            let req = api::SynthRequest {
                config: api::Source::Path { path: args.spec },
                out_dir: args.out,
                seed: cli.seed,
            };
            let result = client.synth(&req).await?;
            println!(
                "synth: wrote {} {} into {}",
                result.images,
                if result.kind == "crops" { "crops" } else { "images" },
                result.out_dir.display()
            );
        }
        Command::Calibrate(args) => {
            let req = api::CalibrateRequest {
                dataset_dir: args.dataset,
                config: args.ranges.map(|path| api::Source::Path { path }),
                out_profile: args.out,
                out_report: args.report,
            };
            let result = client.calibrate(&req).await?;
            println!(
                "calibrate: recall {:.3} ({} contaminations, {} uncalibratable), \
                 {} false positives on the calibration set -> {}",
                result.recall,
                result.contaminations,
                result.uncalibratable,
                result.false_positives,
                result.profile_path.display()
            );
        }
        Command::Detect(args) => {
            let req = api::DetectRequest {
                image: args.image,
                profile: api::Source::Path { path: args.profile },
                out_report: args.out,
                annotate: args.annotate,
            };
            let result = client.detect(&req).await?;
            println!(
                "detect: {} candidate(s) in {:.1} ms",
                result.detections.len(),
                result.duration_ms
            );
            for d in &result.detections {
                println!(
                    "  ({:.1}, {:.1}) k={} area={} ratio={:.2} solidity={:.2}",
                    d.row, d.col, d.threshold_index, d.area, d.aspect_ratio, d.solidity
                );
            }
        }
        Command::Train(args) => {
            let req = api::TrainRequest {
                manifest: args.manifest,
                hyperparams: api::Source::Path { path: args.hyperparams },
                out_model: args.out,
                out_trace: args.trace,
                seed: cli.seed,
            };
            let result = client.train(&req).await?;
            println!(
                "train: {} samples, {} epochs, final loss {:.4} -> {}",
                result.samples,
                result.epochs,
                result.final_loss,
                result.model_path.display()
            );
        }
        Command::Search(args) => {
            let req = api::SearchRequest {
                manifest: args.manifest,
                space: api::Source::Path { path: args.space },
                iterations: args.iterations,
                folds: args.folds,
                seed: cli.seed.unwrap_or(0),
                out_table: args.out_table,
                out_table_json: args.out_table_json,
                out_best: args.out_best,
            };
            let result = client.search(&req).await?;
            println!(
                "search: {} combinations, best F2 {:.4} -> {} / {}",
                result.rows,
                result.best_f2,
                result.table_path.display(),
                result.best_path.display()
            );
        }
        Command::Evaluate(args) => {
            let req = api::EvaluateRequest {
                dataset_dir: args.dataset,
                profile: api::Source::Path { path: args.profile },
                model: args.model,
                config: None,
                out_metrics: args.out,
            };
            let r = client.evaluate(&req).await?;
            println!("evaluate: {} images", r.images);
            println!(
                "  filter:   fp_rate {:.4} fn_rate {:.4} (tn {} fp {} fn {} tp {})",
                r.filter_fp_rate,
                r.filter_fn_rate,
                r.filter_cm.tn,
                r.filter_cm.fp,
                r.filter_cm.fn_,
                r.filter_cm.tp
            );
            println!(
                "  pipeline: fp_rate {:.4} fn_rate {:.4} (tn {} fp {} fn {} tp {})",
                r.pipeline_fp_rate,
                r.pipeline_fn_rate,
                r.pipeline_cm.tn,
                r.pipeline_cm.fp,
                r.pipeline_cm.fn_,
                r.pipeline_cm.tp
            );
            println!(
                "  object recall: filter {:.4}, pipeline {:.4}",
                r.object_recall_filter, r.object_recall_pipeline
            );
        }
        Command::Pipeline(args) => {
            let req = api::PipelineRequest {
                images: args.images,
                profile: api::Source::Path { path: args.profile },
                model: args.model,
                config: None,
                out_dir: args.out,
            };
            let result = client.pipeline(&req).await?;
            println!(
                "pipeline: {} images, {} candidates -> {} true contaminations, {} false alarms \
                 ({} over budget)",
                result.images,
                result.candidates,
                result.true_contaminations,
                result.false_alarms,
                result.budget_exceeded
            );
            for report in &result.reports {
                if report.counts.true_contaminations > 0 {
                    let coords: Vec<String> = report
                        .detections
                        .iter()
                        .filter(|d| d.verdict == api::Verdict::TrueContamination)
                        .map(|d| format!("({:.1}, {:.1})", d.row, d.col))
                        .collect();
                    println!("  {}: contaminated at {}", report.image, coords.join(", "));
                }
            }
        }
    }
    Ok(())
}
