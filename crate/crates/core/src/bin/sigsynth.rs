use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sigsynth::cli::{self, CompareArgs, GenerateArgs, RunConfig, RunOutput, SampleCentroidsArgs};
use sigsynth::dataset::{Schedule, SignalKind};
use sigsynth::validation::{ValidateOptions, DEFAULT_BINS, DEFAULT_COMPONENTS};
use sigsynth::GenConfig;

#[derive(Parser, Debug)]
#[command(name = "sigsynth", version, about = "Synthetic appliance load signatures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate high sampling rate waveforms.
    GenHf(GenFlags),
    /// Generate low sampling rate (RMS) traces.
    GenLf(GenFlags),
    /// Sample appliance centroids and write them to a file.
    SampleCentroids {
        #[arg(long, value_enum, default_value_t = Kind::Hf)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "appliances", default_value_t = 4)]
        appliances: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a synthetic dataset with a real one (PCA + KL divergence).
    Validate(CompareFlags),
    /// Match each synthetic appliance to the most similar real appliance.
    Match(CompareFlags),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Hf,
    Lf,
}

#[derive(Args, Debug)]
struct GenFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "appliances", default_value_t = 4)]
    appliances: usize,
    #[arg(long)]
    signatures_per_appliance: Option<usize>,
    /// HF cycles per signature.
    #[arg(long = "cycles")]
    cycles: Option<usize>,
    #[arg(long)]
    samples_per_cycle: Option<usize>,
    #[arg(long)]
    var_d: Option<f64>,
    #[arg(long)]
    p_b: Option<f64>,
    /// LF sampling rate.
    #[arg(long)]
    rate_hz: Option<f64>,
    #[arg(long)]
    mains_hz: Option<f64>,
    #[arg(long)]
    time_correlated_amplitude: bool,
    #[arg(long)]
    centroids: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Generate on one thread (output is identical either way).
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct CompareFlags {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[arg(long, default_value_t = DEFAULT_COMPONENTS)]
    components: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Pad/crop length; defaults to the longest real signature.
    #[arg(long)]
    length: Option<usize>,
    /// Compare raw amplitudes instead of unit-peak signatures.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the first two principal scores of both datasets as CSV.
    #[arg(long)]
    projections: Option<PathBuf>,
}

impl GenFlags {
    fn into_args(self) -> GenerateArgs {
        let d = GenConfig::default();
        GenerateArgs {
            config: GenConfig {
                master_seed: self.seed,
                var_d: self.var_d.unwrap_or(d.var_d),
                samples_per_cycle: self.samples_per_cycle.unwrap_or(d.samples_per_cycle),
                cycles_per_signature: self.cycles.unwrap_or(d.cycles_per_signature),
                mains_hz: self.mains_hz.unwrap_or(d.mains_hz),
                time_correlated_amplitude: self.time_correlated_amplitude,
                sample_rate_lf: self.rate_hz.unwrap_or(d.sample_rate_lf),
                p_b: self.p_b.unwrap_or(d.p_b),
                signatures_per_appliance: self.signatures_per_appliance.unwrap_or(d.signatures_per_appliance),
            },
            appliances: self.appliances,
            centroids: self.centroids,
            out: self.out,
            schedule: if self.sequential { Schedule::Sequential } else { Schedule::Parallel },
        }
    }
}

impl CompareFlags {
    fn into_args(self) -> CompareArgs {
        CompareArgs {
            real: self.real,
            synth: self.synth,
            options: ValidateOptions {
                components: self.components,
                bins: self.bins,
                length: self.length,
                normalize_amplitude: !self.no_normalize,
            },
            out: self.out,
            projections: self.projections,
        }
    }
}

fn main() -> ExitCode {
    let config = match Cli::parse().command {
        Command::GenHf(f) => RunConfig::GenHf(f.into_args()),
        Command::GenLf(f) => RunConfig::GenLf(f.into_args()),
        Command::SampleCentroids { kind, seed, appliances, out } => {
            RunConfig::SampleCentroids(SampleCentroidsArgs {
                kind: match kind {
                    Kind::Hf => SignalKind::Hf,
                    Kind::Lf => SignalKind::Lf,
                },
                seed,
                appliances,
                out,
            })
        }
        Command::Validate(f) => RunConfig::Validate(f.into_args()),
        Command::Match(f) => RunConfig::Match(f.into_args()),
    };
    match cli::run(&config) {
        Ok(output) => {
            match output {
                RunOutput::Dataset { path, signatures } => {
                    eprintln!("wrote {signatures} signatures to {}", path.display())
                }
                RunOutput::Centroids { path, count } => {
                    eprintln!("wrote {count} centroids to {}", path.display())
                }
                RunOutput::Report(report) => {
                    if let RunConfig::Validate(CompareArgs { out: None, .. }) = &config {
                        println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
                    } else {
                        print!("{}", report.to_table());
                    }
                }
                RunOutput::Matches(table) => {
                    if let RunConfig::Match(CompareArgs { out: None, .. }) = &config {
                        print!("{}", cli::match_table_csv(&table));
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
