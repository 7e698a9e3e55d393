use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ensemble_forge::experiment::{run_experiment, ExperimentError, ExperimentReport, ReportFormat};
use ensemble_forge::lab::{
    build_pool, default_members, embeddings_from_csv, embeddings_to_csv, generate_blobs,
    stratified_split, train_embeddings, BlobSpec, LabError, LossKind, LossParams, SplitFractions,
    TrainConfig,
};
use ensemble_forge::{
    diversity_matrix, ensemble_accuracy, majority_vote, select_ensemble, EnsembleMask,
    FoldManifest, PredictionTable, Split, TableError, UmdaConfig, SEED_ENV,
};

#[derive(Parser)]
#[command(
    name = "ensemble-forge",
    version,
    about = "UMDA ensemble selection over classifier prediction tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pairwise correlation-coefficient matrix of a prediction table.
    Diversity {
        table: PathBuf,
        /// Emit JSON (with the degenerate pairs) instead of CSV.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select an ensemble on one fold's validation table.
    Select {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        fold: u32,
        #[command(flatten)]
        umda: UmdaArgs,
        /// Write the per-generation trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Majority vote of a mask over a table.
    Fuse {
        table: PathBuf,
        /// Bits (`1,0,1` or `101`) or classifier names (`a,c`).
        #[arg(long)]
        mask: String,
        /// Predicted labels CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accuracy summary JSON; standard error when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// MV against UMDA on every fold of a manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        umda: UmdaArgs,
        /// Extra baseline for the relative gain, `name=accuracy` with accuracy in [0, 1].
        #[arg(long = "baseline", value_parser = parse_baseline)]
        baselines: Vec<(String, f64)>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a JSON or CSV report.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic data, embedding training and pool construction.
    #[command(subcommand)]
    Lab(LabCommand),
}

#[derive(Args)]
struct UmdaArgs {
    #[arg(long, default_value_t = 40)]
    lambda: usize,
    #[arg(long, default_value_t = 10)]
    mu: usize,
    #[arg(long, default_value_t = 100)]
    gens: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Let marginals reach 0 and 1.
    #[arg(long)]
    no_clamp: bool,
}

impl UmdaArgs {
    fn config(&self) -> UmdaConfig {
        UmdaConfig {
            lambda: self.lambda,
            mu: self.mu,
            generations: self.gens,
            clamp: !self.no_clamp,
            ..UmdaConfig::new(1).with_seed(self.seed)
        }
    }
}

#[derive(Args)]
struct BlobArgs {
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Radius of the ring holding the class means.
    #[arg(long, default_value_t = 3.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.2)]
    stddev: f64,
    #[arg(long, default_value_t = 50)]
    samples: usize,
}

#[derive(Args)]
struct LossArgs {
    #[arg(long)]
    contrastive_margin: Option<f64>,
    #[arg(long)]
    triplet_margin: Option<f64>,
    #[arg(long)]
    nngk_bandwidth: Option<f64>,
    #[arg(long)]
    proxy_alpha: Option<f64>,
    #[arg(long)]
    proxy_margin: Option<f64>,
    #[arg(long)]
    softtriple_lambda: Option<f64>,
    #[arg(long)]
    softtriple_gamma: Option<f64>,
    #[arg(long)]
    softtriple_margin: Option<f64>,
    #[arg(long)]
    softtriple_centers: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 1e-4)]
    fd_step: f64,
}

impl LossArgs {
    fn params(&self) -> LossParams {
        let d = LossParams::default();
        LossParams {
            contrastive_margin: self.contrastive_margin.unwrap_or(d.contrastive_margin),
            triplet_margin: self.triplet_margin.unwrap_or(d.triplet_margin),
            nngk_bandwidth: self.nngk_bandwidth.unwrap_or(d.nngk_bandwidth),
            proxy_alpha: self.proxy_alpha.unwrap_or(d.proxy_alpha),
            proxy_margin: self.proxy_margin.unwrap_or(d.proxy_margin),
            softtriple_lambda: self.softtriple_lambda.unwrap_or(d.softtriple_lambda),
            softtriple_gamma: self.softtriple_gamma.unwrap_or(d.softtriple_gamma),
            softtriple_margin: self.softtriple_margin.unwrap_or(d.softtriple_margin),
            softtriple_centers: self.softtriple_centers.unwrap_or(d.softtriple_centers),
            supcon_temperature: self.temperature.unwrap_or(d.supcon_temperature),
        }
    }

    fn apply(&self, config: &mut TrainConfig) {
        config.params = self.params();
        config.learning_rate = self.lr;
        config.steps = self.steps;
        config.batch_size = self.batch;
        config.fd_step = self.fd_step;
    }
}

#[derive(Subcommand)]
enum LabCommand {
    /// Gaussian blobs as an embedding CSV.
    Gen {
        #[command(flatten)]
        blobs: BlobArgs,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train free embeddings with one loss.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        loss: LossKind,
        #[command(flatten)]
        loss_args: LossArgs,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a six-member pool per fold and write its tables and manifest.
    Pool {
        /// Embedding CSV to split; fresh blobs when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        blobs: BlobArgs,
        #[command(flatten)]
        loss_args: LossArgs,
        #[arg(long, default_value_t = 5)]
        folds: u32,
        /// NNGK centers per member, capped at the training-split size.
        #[arg(long, default_value_t = 100)]
        centers: usize,
        #[arg(long, default_value_t = 1.0)]
        bandwidth: f64,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_baseline(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=accuracy")?;
    let v: f64 = value
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.to_string(), v))
}

enum Failure {
    Validation(String),
    Io(String),
}

impl From<TableError> for Failure {
    fn from(e: TableError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Table(t) => t.into(),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Table(t) => t.into(),
            other => Failure::Validation(other.to_string()),
        }
    }
}

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Diversity { table, json, out } => {
            let m = diversity_matrix(&PredictionTable::load(&table)?);
            if !m.degenerate_pairs.is_empty() {
                eprintln!(
                    "warning: {} pairs involve a classifier with no hits or no misses; reported as 0",
                    m.degenerate_pairs.len()
                );
            }
            emit(out.as_deref(), &if json { m.to_json() } else { m.to_csv() })
        }
        Command::Select {
            manifest,
            fold,
            umda,
            trace,
        } => {
            let manifest = FoldManifest::load(&manifest)?;
            let path = manifest.path(fold, Split::Validation).ok_or_else(|| {
                validation(ExperimentError::ManifestIncomplete {
                    fold,
                    split: Split::Validation,
                })
            })?;
            let table = PredictionTable::load(path)?;
            let sel = select_ensemble(&table, &umda.config()).map_err(validation)?;
            if let Some(t) = trace {
                write(&t, &sel.trace.to_json_lines())?;
            }
            let summary = serde_json::json!({
                "fold": fold,
                "mask": sel.mask.to_string(),
                "popcount": sel.mask.popcount(),
                "selected": sel.selected,
                "validation_fitness": sel.validation_fitness,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("json value")
            );
            Ok(())
        }
        Command::Fuse {
            table,
            mask,
            out,
            summary,
        } => {
            let table = PredictionTable::load(&table)?;
            let mask = EnsembleMask::parse_for(&table, &mask).map_err(validation)?;
            let predicted = majority_vote(&table, &mask).map_err(validation)?;
            let mut csv = String::from("sample_id,truth,predicted\n");
            for ((id, t), p) in table.sample_ids().iter().zip(table.truth()).zip(&predicted) {
                let _ = writeln!(csv, "{id},{t},{p}");
            }
            emit(out.as_deref(), &csv)?;
            let accuracy = ensemble_accuracy(&table, &mask).map_err(validation)?;
            let json = serde_json::to_string_pretty(&serde_json::json!({
                "mask": mask.to_string(),
                "selected": mask.selected_names(&table),
                "accuracy": accuracy,
                "samples": table.len(),
            }))
            .expect("json value");
            match summary {
                Some(p) => write(&p, &(json + "\n")),
                None => {
                    eprintln!("{json}");
                    Ok(())
                }
            }
        }
        Command::Evaluate {
            manifest,
            umda,
            baselines,
            format,
            out,
        } => {
            let manifest = FoldManifest::load(&manifest)?;
            let mut report = run_experiment(&manifest, &umda.config(), umda.seed)?;
            for (name, acc) in baselines {
                report.add_baseline(&name, acc);
            }
            emit(out.as_deref(), &report.emit(format))
        }
        Command::Report { input, format, out } => {
            let text = read(&input)?;
            let report = if text.trim_start().starts_with('{') {
                ExperimentReport::from_json(&text)?
            } else {
                ExperimentReport::from_csv(&text)?
            };
            emit(out.as_deref(), &report.emit(format))
        }
        Command::Lab(cmd) => run_lab(cmd),
    }
}

fn blob_spec(b: &BlobArgs, seed: u64) -> BlobSpec {
    BlobSpec::ring(b.classes, b.dim, b.radius, b.stddev, b.samples, seed)
}

fn run_lab(cmd: LabCommand) -> Result<(), Failure> {
    match cmd {
        LabCommand::Gen { blobs, seed, out } => emit(
            out.as_deref(),
            &embeddings_to_csv(&generate_blobs(&blob_spec(&blobs, seed))?),
        ),
        LabCommand::Train {
            data,
            loss,
            loss_args,
            seed,
            out,
        } => {
            let batch = embeddings_from_csv(&read(&data)?)?;
            let mut config = TrainConfig {
                seed,
                ..TrainConfig::new(loss)
            };
            loss_args.apply(&mut config);
            let outcome = train_embeddings(&batch, &config)?;
            if let (Some(first), Some(last)) =
                (outcome.loss_trace.first(), outcome.loss_trace.last())
            {
                eprintln!(
                    "{loss}: loss {first:.6} -> {last:.6} over {} steps",
                    outcome.loss_trace.len()
                );
            }
            emit(out.as_deref(), &embeddings_to_csv(&outcome.embeddings))
        }
        LabCommand::Pool {
            data,
            blobs,
            loss_args,
            folds,
            centers,
            bandwidth,
            seed,
            out_dir,
        } => {
            let batch = match data {
                Some(p) => embeddings_from_csv(&read(&p)?)?,
                None => generate_blobs(&blob_spec(&blobs, seed))?,
            };
            fs::create_dir_all(&out_dir)
                .map_err(|e| Failure::Io(format!("{}: {e}", out_dir.display())))?;
            let mut entries = Vec::new();
            for fold in 0..folds {
                let fold_seed = seed.wrapping_add(u64::from(fold));
                let [train, validation, test] =
                    stratified_split(&batch, SplitFractions::default(), fold_seed)?;
                let mut members = default_members(centers.min(train.len()), bandwidth, fold_seed);
                for m in &mut members {
                    loss_args.apply(&mut m.train);
                }
                let pool = build_pool(&members, &train, &validation, &test)?;
                for (split, table) in [
                    (Split::Train, &pool.train),
                    (Split::Validation, &pool.validation),
                    (Split::Test, &pool.test),
                ] {
                    let name = format!("fold{fold}_{split}.csv");
                    table.save(out_dir.join(&name))?;
                    entries.push(serde_json::json!({"fold": fold, "split": split, "path": name}));
                }
                eprintln!("fold {fold}: pool of {} written", members.len());
            }
            write(
                &out_dir.join("manifest.json"),
                &(serde_json::to_string_pretty(&entries).expect("json value") + "\n"),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
