//! Command orchestration behind the `sigsynth` binary.

use std::path::{Path, PathBuf};

use crate::dataset::{CentroidSet, Dataset, Schedule, SignalKind};
use crate::error::{Error, Result};
use crate::io;
use crate::types::GenConfig;
use crate::validation::{self, ValidateOptions, ValidationReport};
use crate::{hf, lf};

#[derive(Clone, Debug, PartialEq)]
pub struct GenerateArgs {
    pub config: GenConfig,
    pub appliances: usize,
    /// Centroid file (or manifest) to use instead of sampling centroids.
    pub centroids: Option<PathBuf>,
    pub out: PathBuf,
    pub schedule: Schedule,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleCentroidsArgs {
    pub kind: SignalKind,
    pub seed: u64,
    pub appliances: usize,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareArgs {
    pub real: PathBuf,
    pub synth: PathBuf,
    pub options: ValidateOptions,
    /// Report or similarity-table destination; stdout when absent.
    pub out: Option<PathBuf>,
    /// Optional plot-ready CSV of the first two principal scores.
    pub projections: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunConfig {
    GenHf(GenerateArgs),
    GenLf(GenerateArgs),
    SampleCentroids(SampleCentroidsArgs),
    Validate(CompareArgs),
    Match(CompareArgs),
}

/// What a run produced.
#[derive(Clone, Debug, PartialEq)]
pub enum RunOutput {
    Dataset { path: PathBuf, signatures: usize },
    Centroids { path: PathBuf, count: usize },
    Report(ValidationReport),
    Matches(validation::MatchTable),
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    match config {
        RunConfig::GenHf(args) => generate(args, SignalKind::Hf),
        RunConfig::GenLf(args) => generate(args, SignalKind::Lf),
        RunConfig::SampleCentroids(args) => sample_centroids(args),
        RunConfig::Validate(args) => run_validate(args),
        RunConfig::Match(args) => run_match(args),
    }
}

fn require_path(p: &Path, flag: &str) -> Result<()> {
    if p.as_os_str().is_empty() {
        return Err(Error::InvalidArgument(format!("{flag} must not be empty")));
    }
    Ok(())
}

fn sampled_centroids(kind: SignalKind, seed: u64, k: usize) -> Result<CentroidSet> {
    Ok(match kind {
        SignalKind::Hf => CentroidSet::Hf(hf::sample_hf_centroids(
            k,
            &hf::HfCentroidRanges::default(),
            &mut hf::centroid_stream(seed),
        )?),
        SignalKind::Lf => CentroidSet::Lf(lf::sample_lf_centroids(
            k,
            &lf::LfCentroidRanges::default(),
            &mut lf::centroid_stream(seed),
        )?),
    })
}

fn generate(args: &GenerateArgs, kind: SignalKind) -> Result<RunOutput> {
    require_path(&args.out, "--out")?;
    args.config.validate()?;
    let centroids = match &args.centroids {
        Some(path) => io::read_centroids(path)?,
        None => sampled_centroids(kind, args.config.master_seed, args.appliances)?,
    };
    if centroids.kind() != kind {
        return Err(Error::InvalidInput(format!(
            "centroid file holds {} centroids, expected {}",
            io::kind_name(centroids.kind()),
            io::kind_name(kind)
        )));
    }
    let ds = match &centroids {
        CentroidSet::Hf(c) => hf::generate_hf_dataset(c, &args.config, args.schedule)?,
        CentroidSet::Lf(c) => lf::generate_lf_dataset(c, &args.config, args.schedule)?,
    };
    io::write_dataset_csv(&ds, &args.out)?;
    Ok(RunOutput::Dataset {
        path: args.out.clone(),
        signatures: ds.len(),
    })
}

fn sample_centroids(args: &SampleCentroidsArgs) -> Result<RunOutput> {
    require_path(&args.out, "--out")?;
    let set = sampled_centroids(args.kind, args.seed, args.appliances)?;
    io::write_centroids(&set, &args.out)?;
    Ok(RunOutput::Centroids {
        path: args.out.clone(),
        count: set.len(),
    })
}

fn load_pair(args: &CompareArgs) -> Result<(Dataset, Dataset)> {
    require_path(&args.real, "--real")?;
    require_path(&args.synth, "--synth")?;
    Ok((io::load_dataset_csv(&args.real)?, io::load_dataset_csv(&args.synth)?))
}

fn run_validate(args: &CompareArgs) -> Result<RunOutput> {
    let (real, synth) = load_pair(args)?;
    let report = validation::validate(&real, &synth, &args.options)?;
    if let Some(out) = &args.out {
        io::write_report(&report, out)?;
    }
    if let Some(path) = &args.projections {
        write_projections(&real, &synth, &args.options, path)?;
    }
    Ok(RunOutput::Report(report))
}

/// Scores on the first two real-data components, one row per signature.
fn write_projections(real: &Dataset, synth: &Dataset, opts: &ValidateOptions, path: &Path) -> Result<()> {
    let (real, synth) = validation::prepare(real, synth, opts)?;
    let model = validation::pca_fit(&real, 2.min(opts.components))?;
    let mut text = String::from("dataset,appliance_id,signature_id,pc1,pc2\n");
    for (name, ds) in [("real", &real), ("synth", &synth)] {
        for (sig, p) in ds.signatures().iter().zip(validation::pca_project(&model, ds)?) {
            let pc2 = p.get(1).copied().unwrap_or(0.0);
            text.push_str(&format!(
                "{name},{},{},{},{}\n",
                sig.appliance_id,
                sig.signature_id,
                io::format_f64(p[0]),
                io::format_f64(pc2)
            ));
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_match(args: &CompareArgs) -> Result<RunOutput> {
    let (real, synth) = load_pair(args)?;
    let (real, synth) = validation::prepare(&real, &synth, &args.options)?;
    let table = validation::match_appliances(&synth, &real)?;
    if let Some(out) = &args.out {
        std::fs::write(out, match_table_csv(&table)).map_err(|e| Error::io(out, e))?;
    }
    Ok(RunOutput::Matches(table))
}

/// `synth_appliance,real_appliance,similarity` for the best match of each
/// synthetic appliance.
pub fn match_table_csv(table: &validation::MatchTable) -> String {
    let mut text = String::from("synth_appliance,real_appliance,similarity\n");
    for m in &table.matches {
        text.push_str(&format!(
            "{},{},{}\n",
            m.synth_appliance,
            m.real_appliance,
            io::format_f64(m.similarity)
        ));
    }
    text
}
