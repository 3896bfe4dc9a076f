//! `phishscan`: train, evaluate, query and serve the URL classifier.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on any runtime
//! failure. Runtime failures print a single `error: ...` line to stderr.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use phishscan_core::classifier::{param_count_for, FormatError, ModelError, FORMAT_VERSION};
use phishscan_core::corpus::{
    class_distribution, default_vocabulary, load_csv, stratified_split, write_csv, CorpusError,
    SplitSpec, DEFAULT_MAX_LEN, DEFAULT_TEST_FRACTION,
};
use phishscan_core::evaluator::{render_confusion, render_report};
use phishscan_core::trainer::{evaluate_on, fit, TrainError};
use phishscan_core::{Hyperparams, Model, TrainConfig};
use phishscan_server::{AppState, PredictResponse};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "phishscan",
    version,
    about = "Character-level Bi-LSTM malicious URL classifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a labeled CSV, train on the training part and report on the rest.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
        max_len: usize,
        #[arg(long, default_value_t = 32)]
        embed: usize,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 0.3)]
        dropout: f32,
        #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u32,
        /// Write per-epoch loss and accuracy as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Process examples on one thread.
        #[arg(long)]
        deterministic: bool,
        /// Write the train.csv and test.csv partitions into this directory.
        #[arg(long)]
        dump_split: Option<PathBuf>,
    },
    /// Evaluate a model on a labeled CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Classify one URL and print the result as a JSON line.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        url: String,
    },
    /// Run the HTTP prediction service.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Print a model file's header and integrity status.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("server: {0}")]
    Serve(std::io::Error),
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train {
            data,
            out,
            epochs,
            batch,
            lr,
            max_len,
            embed,
            hidden,
            dropout,
            test_fraction,
            seed,
            history,
            deterministic,
            dump_split,
        } => {
            let records = load_csv(&data)?;
            info!(
                "loaded {} records: {}",
                records.len(),
                class_distribution(&records)
            );
            let spec = SplitSpec {
                test_fraction,
                seed: u64::from(seed),
            };
            let (train, test) = stratified_split(&records, &spec)?;
            info!("split: {} train, {} test", train.len(), test.len());
            if let Some(dir) = dump_split {
                std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
                    path: dir.clone(),
                    source,
                })?;
                write_csv(dir.join("train.csv"), &train)?;
                write_csv(dir.join("test.csv"), &test)?;
            }
            let vocab = default_vocabulary();
            let hp = Hyperparams {
                vocab_size: vocab.size() as usize,
                embed_dim: embed,
                hidden_dim: hidden,
                max_len,
                dropout_rate: dropout,
                seed,
                ..Hyperparams::default()
            };
            let cfg = TrainConfig {
                epochs,
                batch_size: batch,
                learning_rate: lr,
                seed: u64::from(seed),
                deterministic,
                ..TrainConfig::default()
            };
            let val = (!test.is_empty()).then_some(test.as_slice());
            let (model, hist) = fit(&train, val, &hp, &vocab, &cfg)?;
            model.save(&out)?;
            info!("saved model to {}", out.display());
            if let Some(path) = history {
                write_file(&path, hist.to_csv().as_bytes())?;
            }
            if !test.is_empty() {
                print!("{}", render_report(&evaluate_on(&model, &test)?));
            }
            Ok(())
        }
        Command::Eval {
            model,
            data,
            format,
        } => {
            let model = Model::load(&model)?;
            let records = load_csv(&data)?;
            let report = evaluate_on(&model, &records)?;
            match format {
                Format::Text => {
                    print!("{}", render_report(&report));
                    println!();
                    print!("{}", render_confusion(&report.confusion));
                }
                Format::Json => println!("{}", report.to_json()),
            }
            Ok(())
        }
        Command::Predict { model, url } => {
            let model = Model::load(&model)?;
            let response = PredictResponse::from(model.predict(&url)?);
            println!(
                "{}",
                serde_json::to_string(&response).expect("serialisable")
            );
            Ok(())
        }
        Command::Serve {
            model,
            port,
            host,
            static_dir,
        } => {
            let state = AppState::from_path(&model);
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
            runtime
                .block_on(phishscan_server::serve(
                    SocketAddr::new(host, port),
                    state,
                    static_dir,
                ))
                .map_err(CliError::Serve)
        }
        Command::Inspect { model } => {
            let bytes = std::fs::read(&model).map_err(|source| CliError::Io {
                path: model.clone(),
                source,
            })?;
            let (_, hp, vocab) = phishscan_core::classifier::decode(&bytes)?;
            let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
            println!("format version: {FORMAT_VERSION}");
            println!("vocab_size:     {}", hp.vocab_size);
            println!("embed_dim:      {}", hp.embed_dim);
            println!("hidden_dim:     {}", hp.hidden_dim);
            println!("num_classes:    {}", hp.num_classes);
            println!("max_len:        {}", hp.max_len);
            println!("dropout_rate:   {}", hp.dropout_rate);
            println!("seed:           {}", hp.seed);
            println!("vocabulary:     {} entries", vocab.len());
            println!("parameters:     {}", param_count_for(&hp));
            println!("crc32:          {crc:#010x} ok");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
