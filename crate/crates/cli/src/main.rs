//! `fibra` — fibration symmetry tools for directed multigraphs.
//!
//! Subcommands: `color` (minimal balanced coloring), `base` (fibration base +
//! compression factor), `test` (isomorphism screens; exit code 3 on a
//! definitive non-isomorphism verdict), `gnn-check` (reduced-form equivalence
//! harness), `train-fbgd` (fibration gradient descent on IDX datasets, CSV
//! trajectory on stdout), and `stats` (compression histogram over a
//! directory).
//!
//! Randomized commands take their default seed from `FIBRA_SEED`; an explicit
//! `--seed` wins.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

use fibra_core::fibration::{build_base, minimal_balanced_coloring};
use fibra_core::gnn::{reduction_deviation, sample_stack, DenseMatrix};
use fibra_core::io::{
    self, checkpoint, load_graph, BaseDocument, ColoringDocument,
};
use fibra_core::isotest::{fibration_test, wl_test, ScreenOutcome, ScreenVerdict};
use fibra_core::mlp::{fbgd_train, FbgdConfig, MlpModel, SyncCriterion};

#[derive(Parser)]
#[command(name = "fibra", version, about = "Fibration symmetries in directed multigraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestMethod {
    Fibration,
    Wl,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Criterion {
    Lambda,
    Xi,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the minimal balanced coloring and print the fibers.
    Color {
        /// Graph file (JSON document or edge list).
        graph: PathBuf,
        /// Ignore node labels during refinement.
        #[arg(long)]
        no_attrs: bool,
        /// Treat an edge-list input as undirected.
        #[arg(long)]
        undirected: bool,
        /// Write the coloring as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the fibration base and report the compression factor.
    Base {
        graph: PathBuf,
        #[arg(long)]
        no_attrs: bool,
        #[arg(long)]
        undirected: bool,
        /// Write the base document (base graph, fiber map, factor) as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run isomorphism screens on two graphs. Exit code 3 means definitively
    /// non-isomorphic; 0 means no negative verdict was available.
    Test {
        graph1: PathBuf,
        graph2: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        method: TestMethod,
    },
    /// Verify reduced-form equivalence on random layer stacks.
    GnnCheck {
        graph: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random stacks to run.
        #[arg(long, default_value_t = 20)]
        stacks: usize,
        /// Layers per stack.
        #[arg(long, default_value_t = 3)]
        layers: usize,
        /// Feature dimension of the random input.
        #[arg(long, default_value_t = 4)]
        dim: usize,
    },
    /// Train an MLP with fibration gradient descent on IDX data and emit a
    /// CSV trajectory (epoch, loss, accuracy, size_l1, size_l2) on stdout.
    TrainFbgd {
        train_images: PathBuf,
        train_labels: PathBuf,
        /// Evaluation images (accuracy falls back to the training set).
        #[arg(long, requires = "test_labels")]
        test_images: Option<PathBuf>,
        #[arg(long, requires = "test_images")]
        test_labels: Option<PathBuf>,
        /// Synchronization threshold; 0 reproduces plain SGD exactly.
        #[arg(long, default_value_t = 5e-2)]
        epsilon: f64,
        /// Epochs between collapse events.
        #[arg(long, default_value_t = 5)]
        period: usize,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Use at most this many training samples.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value_t = 128)]
        hidden1: usize,
        #[arg(long, default_value_t = 64)]
        hidden2: usize,
        /// Cluster on the mean-absolute (lambda) or signed-mean (xi) distance.
        #[arg(long, value_enum, default_value = "lambda")]
        criterion: Criterion,
        /// Save the final model as a JSON checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compression-factor histogram over every graph file in a directory.
    Stats {
        dir: PathBuf,
        #[arg(long)]
        no_attrs: bool,
    },
}

fn seed_or_env(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("FIBRA_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn load(path: &Path, undirected: bool) -> Result<fibra_core::DirectedMultigraph, String> {
    let loaded = load_graph(path).map_err(|e| e.to_string())?;
    if let Some(map) = &loaded.id_map {
        eprintln!(
            "note: node ids densified ({} nodes, first original id {})",
            map.len(),
            map.first().copied().unwrap_or(0)
        );
    }
    let g = loaded.graph;
    if undirected && g.is_directed() {
        g.to_undirected().map_err(|e| e.to_string())
    } else {
        Ok(g)
    }
}

fn cmd_color(
    graph: &Path,
    no_attrs: bool,
    undirected: bool,
    out: Option<&Path>,
) -> Result<ExitCode, String> {
    let g = load(graph, undirected)?;
    let coloring = minimal_balanced_coloring(&g, !no_attrs);
    let classes = coloring.classes();
    println!(
        "{} fiber{}",
        classes.len(),
        if classes.len() == 1 { "" } else { "s" }
    );
    for (i, class) in classes.iter().enumerate() {
        let ids: Vec<String> = class.iter().map(|u| u.0.to_string()).collect();
        println!("  [{i}] size {}: {}", class.len(), ids.join(" "));
    }
    if let Some(path) = out {
        let doc = ColoringDocument::from_coloring(&coloring);
        std::fs::write(path, doc.to_json_pretty()).map_err(|e| e.to_string())?;
        println!("coloring written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_base(
    graph: &Path,
    no_attrs: bool,
    undirected: bool,
    out: Option<&Path>,
) -> Result<ExitCode, String> {
    let g = load(graph, undirected)?;
    let coloring = minimal_balanced_coloring(&g, !no_attrs);
    let base = build_base(&g, &coloring).map_err(|e| e.to_string())?;
    println!(
        "base: {} nodes, {} edges (original {} nodes, {} edges)",
        base.base().node_count(),
        base.base().edge_count(),
        g.node_count(),
        g.edge_count()
    );
    println!("compression_factor {:.3}", base.compression_factor());
    if let Some(path) = out {
        let doc = BaseDocument::from_base(&base);
        std::fs::write(path, doc.to_json_pretty()).map_err(|e| e.to_string())?;
        println!("base written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn describe(verdict: &ScreenVerdict) -> &'static str {
    match verdict.outcome {
        ScreenOutcome::DifferentBases => "DifferentBases",
        ScreenOutcome::SameBases => "SameBases",
        ScreenOutcome::NotIsomorphic => "NotIsomorphic",
        ScreenOutcome::PossiblyIsomorphic => "PossiblyIsomorphic",
    }
}

fn cmd_test(graph1: &Path, graph2: &Path, method: TestMethod) -> Result<ExitCode, String> {
    let g1 = load(graph1, false)?;
    let g2 = load(graph2, false)?;
    let mut negative = false;
    if method != TestMethod::Wl {
        let v = fibration_test(&g1, &g2);
        println!(
            "fibration: {}{}",
            describe(&v),
            if v.exact { "" } else { " (signature comparison only)" }
        );
        negative |= v.is_negative();
    }
    if method != TestMethod::Fibration {
        let v = wl_test(&g1, &g2);
        println!("wl: {}", describe(&v));
        negative |= v.is_negative();
    }
    Ok(if negative {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_gnn_check(
    graph: &Path,
    seed: u64,
    stacks: usize,
    layers: usize,
    dim: usize,
) -> Result<ExitCode, String> {
    let g = load(graph, false)?;
    let coloring = minimal_balanced_coloring(&g, true);
    let base = build_base(&g, &coloring).map_err(|e| e.to_string())?;
    let mut types: Vec<fibra_core::EdgeTypeId> = g.edges().iter().map(|e| e.ty).collect();
    types.sort_unstable();
    types.dedup();
    if types.is_empty() {
        types.push(fibra_core::EdgeTypeId(0));
    }
    let attention_ok = g.edges().iter().all(|e| e.weight > 0.0);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev: f64 = 0.0;
    let mut max_readout: f64 = 0.0;
    for _ in 0..stacks {
        let stack = sample_stack(&mut rng, dim, layers, &types, attention_ok);
        let h_base = DenseMatrix::random(&mut rng, base.fiber_count(), dim, -1.0, 1.0);
        let check = reduction_deviation(&g, &base, &stack, &h_base).map_err(|e| e.to_string())?;
        max_dev = max_dev.max(check.max_relative_deviation);
        max_readout = max_readout.max(check.readout_deviation);
    }
    println!("seed {seed}");
    println!(
        "stacks {} x {} layers, {} fibers over {} nodes",
        stacks,
        layers,
        base.fiber_count(),
        g.node_count()
    );
    println!("max deviation {max_dev:.3e}");
    println!("max readout deviation {max_readout:.3e}");
    if max_dev <= 1e-9 && max_readout <= 1e-9 {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: deviation exceeds 1e-9");
        Ok(ExitCode::from(1))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_train_fbgd(
    train_images: &Path,
    train_labels: &Path,
    test_images: Option<&Path>,
    test_labels: Option<&Path>,
    cfg: FbgdConfig,
    limit: Option<usize>,
    hidden: (usize, usize),
    checkpoint_path: Option<&Path>,
) -> Result<ExitCode, String> {
    let idx = io::load_idx(train_images, train_labels, limit).map_err(|e| e.to_string())?;
    if idx.limit_clamped {
        eprintln!(
            "warning: limit exceeds file contents; using all {} samples",
            idx.count
        );
    }
    let train = idx.to_dataset();
    let eval = match (test_images, test_labels) {
        (Some(ip), Some(lp)) => Some(
            io::load_idx(ip, lp, None)
                .map_err(|e| e.to_string())?
                .to_dataset(),
        ),
        _ => None,
    };

    let classes = train.labels.iter().max().map_or(10, |&m| (m + 1).max(10));
    let sizes = [idx.input_dim(), hidden.0, hidden.1, classes];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = MlpModel::random(&sizes, &mut rng).map_err(|e| e.to_string())?;

    let result = fbgd_train(model, &train, eval.as_ref(), &cfg).map_err(|e| e.to_string())?;

    println!("epoch,loss,accuracy,size_l1,size_l2");
    for rec in &result.trajectory {
        println!(
            "{},{:.6},{:.4},{},{}",
            rec.epoch, rec.loss, rec.accuracy, rec.hidden_sizes[0], rec.hidden_sizes[1]
        );
    }
    for c in &result.collapses {
        eprintln!(
            "collapse at epoch {}: layer {} {} -> {}",
            c.epoch, c.layer, c.before, c.after
        );
    }
    for s in &result.saturations {
        eprintln!(
            "saturation at epoch {}: layer {} would shrink to {} (< {} outputs)",
            s.epoch, s.layer, s.proposed, s.minimum
        );
    }
    if let Some(path) = checkpoint_path {
        let epoch = result.trajectory.last().map_or(0, |r| r.epoch);
        checkpoint::save_checkpoint(&result.model, cfg.seed, epoch, path)
            .map_err(|e| e.to_string())?;
        eprintln!("checkpoint written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(dir: &Path, no_attrs: bool) -> Result<ExitCode, String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("json") | Some("txt") | Some("edges")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("no graph files in {}", dir.display()));
    }

    let mut factors = Vec::new();
    for path in &paths {
        match load(path, false).and_then(|g| {
            let c = minimal_balanced_coloring(&g, !no_attrs);
            build_base(&g, &c)
                .map(|b| b.compression_factor())
                .map_err(|e| e.to_string())
        }) {
            Ok(f) => factors.push(f),
            Err(e) => eprintln!("skipping {}: {e}", path.display()),
        }
    }
    if factors.is_empty() {
        return Err("no loadable graphs".into());
    }

    let mut bins = [0usize; 10];
    for &f in &factors {
        let idx = ((f * 10.0).ceil() as usize).clamp(1, 10) - 1;
        bins[idx] += 1;
    }
    println!("compression-factor histogram over {} graphs", factors.len());
    for (i, &count) in bins.iter().enumerate() {
        let lo = i as f64 / 10.0;
        let hi = lo + 0.1;
        println!("  ({lo:.1}, {hi:.1}]: {count:4} {}", "#".repeat(count.min(60)));
    }
    let mean = factors.iter().sum::<f64>() / factors.len() as f64;
    println!("mean {mean:.3}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Color {
            graph,
            no_attrs,
            undirected,
            out,
        } => cmd_color(&graph, no_attrs, undirected, out.as_deref()),
        Command::Base {
            graph,
            no_attrs,
            undirected,
            out,
        } => cmd_base(&graph, no_attrs, undirected, out.as_deref()),
        Command::Test {
            graph1,
            graph2,
            method,
        } => cmd_test(&graph1, &graph2, method),
        Command::GnnCheck {
            graph,
            seed,
            stacks,
            layers,
            dim,
        } => cmd_gnn_check(&graph, seed_or_env(seed), stacks, layers, dim),
        Command::TrainFbgd {
            train_images,
            train_labels,
            test_images,
            test_labels,
            epsilon,
            period,
            epochs,
            lr,
            batch,
            seed,
            limit,
            hidden1,
            hidden2,
            criterion,
            checkpoint,
        } => {
            let cfg = FbgdConfig {
                epsilon,
                period,
                epochs,
                learning_rate: lr,
                batch_size: batch,
                seed: seed_or_env(seed),
                criterion: match criterion {
                    Criterion::Lambda => SyncCriterion::Lambda,
                    Criterion::Xi => SyncCriterion::Xi,
                },
            };
            cmd_train_fbgd(
                &train_images,
                &train_labels,
                test_images.as_deref(),
                test_labels.as_deref(),
                cfg,
                limit,
                (hidden1, hidden2),
                checkpoint.as_deref(),
            )
        }
        Command::Stats { dir, no_attrs } => cmd_stats(&dir, no_attrs),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
