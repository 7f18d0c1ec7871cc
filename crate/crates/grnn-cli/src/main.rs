//! `grnn` command line: transform road networks into linkage networks,
//! simulate diffusion panels, train/predict online, check gradients, and
//! benchmark joint-versus-separate training.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 numeric failure
//! (non-finite values or training divergence).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grnn_core::bench::{bench_csv, complexity_bench, BenchConfig};
use grnn_core::checkpoint::Checkpoint;
use grnn_core::eval::{historical_average, mse, persistence};
use grnn_core::gradcheck::{gradient_check, GradCheckConfig};
use grnn_core::graph::{LinkageNetwork, PropagationMatrix, RoadNetwork};
use grnn_core::online::{content_hash, run_offline, RunManifest, TrainConfig};
use grnn_core::panel::ConditionPanel;
use grnn_core::sim::{simulate_diffusion, SimParams};
use grnn_core::GrnnError;

#[derive(Parser)]
#[command(name = "grnn", version, about = "Traffic prediction over linkage networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArgs {
    /// Node file: vertex_id,lng,lat
    #[arg(long)]
    nodes: PathBuf,
    /// Edge file: segment_id,init_vertex,term_vertex
    #[arg(long)]
    edges: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Build the linkage network from a road network and export its edges.
    Transform {
        #[command(flatten)]
        graph: GraphArgs,
        /// Output directory (linkage.csv, manifest.json)
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic diffusion panel over the linkage network.
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        /// Number of intervals to generate
        #[arg(long)]
        intervals: usize,
        /// Upstream mixing strength in [0, 1]
        #[arg(long, default_value_t = 0.6)]
        beta: f64,
        /// Per-step noise standard deviation
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Daily-cycle increment amplitude
        #[arg(long, default_value_t = 0.8)]
        amplitude: f64,
        /// Minutes per interval
        #[arg(long, default_value_t = 10)]
        interval_minutes: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory (panel.csv, manifest.json)
        #[arg(long)]
        out: PathBuf,
    },
    /// Online training and prediction over a recorded panel.
    Train {
        #[command(flatten)]
        graph: GraphArgs,
        /// Panel file: segment_id,interval_index,value
        #[arg(long)]
        panel: PathBuf,
        /// Truncation window length T
        #[arg(long, default_value_t = 48)]
        window: usize,
        /// Hidden dimension D
        #[arg(long, default_value_t = 16)]
        hidden: usize,
        /// Training epochs per arrival
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        /// Training fraction; predictions are scored on the remainder
        #[arg(long, default_value_t = 0.75)]
        split: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Redraw the hidden state at every window instead of carrying it
        #[arg(long)]
        reset_hidden: bool,
        /// Continue from a saved checkpoint
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Stop after this many arrivals (for later resume)
        #[arg(long)]
        limit: Option<usize>,
        /// Output directory (predictions.csv, checkpoint.json, report.json,
        /// per_segment.csv, manifest.json)
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic gradients against the finite-difference oracle.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 6)]
        hidden_max: usize,
        #[arg(long, default_value_t = 8)]
        nodes_max: usize,
        #[arg(long, default_value_t = 6)]
        window_max: usize,
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Test hook: corrupt one analytic entry to prove the check bites
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Time joint training against n separate single-node models.
    Bench {
        /// Comma-separated graph sizes
        #[arg(long, value_delimiter = ',', default_value = "1,10,50")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 16)]
        hidden: usize,
        #[arg(long, default_value_t = 16)]
        window: usize,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory (bench.csv, manifest.json)
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                GrnnError::Numeric(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_graph(args: &GraphArgs) -> Result<(RoadNetwork, LinkageNetwork), GrnnError> {
    let nodes = fs::read_to_string(&args.nodes)?;
    let edges = fs::read_to_string(&args.edges)?;
    let net = RoadNetwork::from_csv(&nodes, &edges)?;
    let link = LinkageNetwork::from_road_network(&net)?;
    Ok((net, link))
}

fn write(path: &Path, contents: &str) -> Result<(), GrnnError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn run(command: Command) -> Result<ExitCode, GrnnError> {
    match command {
        Command::Transform { graph, out } => {
            let (net, link) = load_graph(&graph)?;
            let export = link.export_pairs();
            write(&out.join("linkage.csv"), &export)?;
            let mut manifest = RunManifest::new(
                "transform",
                serde_json::json!({
                    "nodes": graph.nodes.display().to_string(),
                    "edges": graph.edges.display().to_string(),
                }),
            );
            manifest.graph_hash = Some(content_hash(export.as_bytes()));
            write(&out.join("manifest.json"), &manifest.to_json()?)?;
            let expected = net.degree_products_sum();
            println!(
                "segments (nodes): {}\nlinkages (nnz): {}\nsum indeg*outdeg: {} ({})",
                link.n(),
                link.nnz(),
                expected,
                if link.nnz() == expected { "ok" } else { "MISMATCH" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            graph,
            intervals,
            beta,
            noise,
            amplitude,
            interval_minutes,
            seed,
            out,
        } => {
            let (_, link) = load_graph(&graph)?;
            let params = SimParams {
                beta,
                noise_std: noise,
                amplitude,
                seed,
                interval_minutes,
            };
            let panel = simulate_diffusion(&link, intervals, &params)?;
            let csv = panel.export_csv();
            write(&out.join("panel.csv"), &csv)?;
            let mut manifest = RunManifest::new(
                "simulate",
                serde_json::json!({
                    "intervals": intervals,
                    "sim": params,
                }),
            );
            manifest.graph_hash = Some(content_hash(link.export_pairs().as_bytes()));
            manifest.data_hash = Some(content_hash(csv.as_bytes()));
            write(&out.join("manifest.json"), &manifest.to_json()?)?;
            println!(
                "panel: {} segments x {} intervals -> {}",
                panel.n(),
                panel.len(),
                out.join("panel.csv").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            graph,
            panel,
            window,
            hidden,
            epochs,
            alpha,
            lr,
            split,
            seed,
            reset_hidden,
            resume,
            limit,
            out,
        } => {
            let (_, link) = load_graph(&graph)?;
            let panel_text = fs::read_to_string(&panel)?;
            let panel = ConditionPanel::load_csv(&panel_text, &link)?;
            let cfg = TrainConfig {
                window,
                hidden_dim: hidden,
                epochs,
                alpha,
                lr,
                seed,
                reset_hidden_per_window: reset_hidden,
            };
            let ckpt = match &resume {
                Some(path) => Some(Checkpoint::load(path)?),
                None => None,
            };
            let outcome = run_offline(&link, &panel, &cfg, split, ckpt.as_ref(), limit)?;

            write(&out.join("predictions.csv"), &outcome.predictions_csv())?;
            outcome
                .state
                .to_checkpoint(alpha, Some(&outcome.normalizer))
                .save(&out.join("checkpoint.json"))?;

            // baseline comparison over the same validation intervals
            let mut report = serde_json::to_value(&outcome.report)?;
            if !outcome.rows.is_empty() {
                let first = outcome.rows.first().unwrap().interval;
                let last = outcome.rows.last().unwrap().interval;
                let ha = historical_average(&panel.values, panel.intervals_per_day())?;
                let pers = persistence(&panel.values)?;
                let span = ndarray::s![.., first..=last];
                let truth = panel.values.slice(span).to_owned();
                report["ha_mse"] =
                    serde_json::json!(mse(&truth, &ha.slice(span).to_owned())?);
                report["persistence_mse"] =
                    serde_json::json!(mse(&truth, &pers.slice(span).to_owned())?);
            }
            write(
                &out.join("report.json"),
                &serde_json::to_string_pretty(&report)?,
            )?;
            write(
                &out.join("per_segment.csv"),
                &outcome.report.per_segment_csv(outcome.state.nodes()),
            )?;

            let mut manifest = RunManifest::new("train", serde_json::to_value(&cfg)?);
            manifest.graph_hash = Some(content_hash(link.export_pairs().as_bytes()));
            manifest.data_hash = Some(content_hash(panel.export_csv().as_bytes()));
            manifest.normalizer_min = Some(outcome.normalizer.min);
            manifest.normalizer_max = Some(outcome.normalizer.max);
            manifest.clamped_values = Some(outcome.clamped_values);
            write(&out.join("manifest.json"), &manifest.to_json()?)?;

            if outcome.rows.is_empty() {
                println!("no validation intervals (split covers the whole panel)");
            } else {
                println!(
                    "validation mse: {:.6}  vd: {:.6}  ({} intervals, alpha {})",
                    outcome.report.mse,
                    outcome.report.vd,
                    outcome.report.t_eval,
                    alpha
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck {
            instances,
            hidden_max,
            nodes_max,
            window_max,
            epsilon,
            seed,
            corrupt,
        } => {
            let cfg = GradCheckConfig {
                instances,
                max_hidden: hidden_max,
                max_nodes: nodes_max,
                max_window: window_max,
                epsilon,
                seed,
                corrupt,
                ..Default::default()
            };
            let report = gradient_check(&cfg)?;
            print!("{}", report.render());
            if report.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Bench {
            sizes,
            hidden,
            window,
            steps,
            warmup,
            seed,
            out,
        } => {
            let cfg = BenchConfig {
                sizes,
                hidden_dim: hidden,
                window,
                steps,
                warmup,
                seed,
                ..Default::default()
            };
            let rows = complexity_bench(&cfg)?;
            write(&out.join("bench.csv"), &bench_csv(&rows))?;
            let manifest = RunManifest::new("bench", serde_json::to_value(&cfg)?);
            write(&out.join("manifest.json"), &manifest.to_json()?)?;
            println!(
                "{:>6} {:>16} {:>19} {:>9} {:>13} {:>16}",
                "n", "joint ms/step", "separate ms/step", "speedup", "joint params", "separate params"
            );
            for r in &rows {
                println!(
                    "{:>6} {:>16.3} {:>19.3} {:>9.2} {:>13} {:>16}",
                    r.n,
                    r.joint_ms_per_step,
                    r.separate_ms_per_step,
                    r.speedup,
                    r.joint_param_count,
                    r.separate_param_count
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
