//! Dataset CSV files, manifest sidecars and centroid files.
//!
//! Dataset CSV: header `appliance_id,signature_id,rate_hz,s0,s1,...`, one
//! signature per row, rows may be ragged. Floats are written with 17
//! significant digits so values survive a round trip bit for bit.
//!
//! Every dataset CSV `name.csv` gets a JSON sidecar `name.manifest.json`
//! holding `format_version` and either `"source": "external"` or the full
//! generation record (config including the master seed, plus centroids).
//! Centroid files share the `kind` / `centroids` fields of that record, so a
//! manifest can be passed wherever a centroid file is expected.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{CentroidSet, Dataset, GenerationManifest, Manifest, Schedule, Signature};
use crate::dataset::{SignalKind, SignatureKey, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::{hf, lf};

const FIXED_COLUMNS: usize = 3;

/// Formats `v` with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Path of the manifest sidecar for a dataset CSV.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let width = ds.signatures().iter().map(|s| s.len()).max().unwrap_or(0);
    let mut line = String::from("appliance_id,signature_id,rate_hz");
    for i in 0..width {
        line.push_str(&format!(",s{i}"));
    }
    line.push('\n');
    w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    for s in ds.signatures() {
        line.clear();
        line.push_str(&format!("{},{},{}", s.appliance_id, s.signature_id, format_f64(s.rate_hz())));
        for v in s.samples() {
            line.push(',');
            line.push_str(&format_f64(*v));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_manifest(ds.manifest(), &manifest_path(path))
}

pub fn load_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let expected = ["appliance_id", "signature_id", "rate_hz"];
    if headers.len() < FIXED_COLUMNS || headers.iter().take(FIXED_COLUMNS).ne(expected) {
        return Err(parse_err(1, format!("header must start with {}", expected.join(","))));
    }

    let mut signatures = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() <= FIXED_COLUMNS {
            return Err(parse_err(line, "row has no samples".into()));
        }
        let field = |i: usize| record.get(i).unwrap_or("");
        let int = |i: usize, name: &str| {
            field(i)
                .parse::<u32>()
                .map_err(|e| parse_err(line, format!("{name} {:?}: {e}", field(i))))
        };
        let appliance = int(0, "appliance_id")?;
        let signature = int(1, "signature_id")?;
        let mut nums = Vec::with_capacity(record.len() - 2);
        for i in 2..record.len() {
            let v = field(i)
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("column {} {:?}: {e}", i + 1, field(i))))?;
            nums.push(v);
        }
        let rate = nums.remove(0);
        let sig = Signature::new(SignatureKey::new(appliance, signature), nums, rate)
            .map_err(|e| parse_err(line, e.to_string()))?;
        signatures.push(sig);
    }
    Dataset::new(signatures, Manifest::External)
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    format_version: u32,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(body: &T, path: &Path) -> Result<()> {
    let doc = Versioned {
        format_version: FORMAT_VERSION,
        body,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Versioned<T> = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::InvalidInput(format!(
            "{}: unsupported format_version {}",
            path.display(),
            doc.format_version
        )));
    }
    Ok(doc.body)
}

pub fn write_manifest(m: &Manifest, path: &Path) -> Result<()> {
    write_json(m, path)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    read_json(path)
}

pub fn write_centroids(c: &CentroidSet, path: &Path) -> Result<()> {
    write_json(c, path)
}

/// Reads a centroid file, or the centroids out of a generation manifest.
pub fn read_centroids(path: &Path) -> Result<CentroidSet> {
    read_json(path)
}

pub fn write_report<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rebuilds a generated dataset from its manifest alone.
pub fn regenerate(m: &GenerationManifest, schedule: Schedule) -> Result<Dataset> {
    match &m.centroids {
        CentroidSet::Hf(c) => hf::generate_hf_dataset(c, &m.config, schedule),
        CentroidSet::Lf(c) => lf::generate_lf_dataset(c, &m.config, schedule),
    }
}

/// Kind named in a centroid set, for diagnostics.
pub fn kind_name(kind: SignalKind) -> &'static str {
    match kind {
        SignalKind::Hf => "hf",
        SignalKind::Lf => "lf",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::GenConfig;

    fn sample_ds() -> Dataset {
        let sigs = vec![
            Signature::new(SignatureKey::new(0, 0), vec![0.1, -2.5e-300, 1.0 / 3.0], 30000.0).unwrap(),
            Signature::new(SignatureKey::new(1, 0), vec![std::f64::consts::PI], 1.0).unwrap(),
        ];
        Dataset::new(sigs, Manifest::External).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = sample_ds();
        write_dataset_csv(&ds, &path).unwrap();
        let back = load_dataset_csv(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(read_manifest(&manifest_path(&path)).unwrap(), Manifest::External);
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_dataset_csv(&Dataset::new(vec![], Manifest::External).unwrap(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "appliance_id,signature_id,rate_hz\n");
        assert!(load_dataset_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn two_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "appliance_id,signature_id,rate_hz,s0,s1\n0,0,1,1.5,2\n0,1,1,3\n").unwrap();
        let ds = load_dataset_csv(&path).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.signatures()[1].key(), SignatureKey::new(0, 1));
        assert_eq!(ds.signatures()[0].samples(), &[1.5, 2.0]);
        assert_eq!(ds.signatures()[1].samples(), &[3.0]);
    }

    #[test]
    fn missing_field_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "appliance_id,signature_id,rate_hz,s0,s1\n0,0,1,1,2\n0,1,1,,2\n").unwrap();
        match load_dataset_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.csv");
        std::fs::write(&path, "appliance_id,signature_id,rate_hz,s0\n0,0,1,1\n0,0,1,2\n").unwrap();
        assert!(matches!(load_dataset_csv(&path), Err(Error::Integrity(_))));
    }

    #[test]
    fn bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(&path, "id,sig,rate,s0\n0,0,1,1\n").unwrap();
        assert!(matches!(load_dataset_csv(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn manifest_regenerates_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let cfg = GenConfig {
            master_seed: 99,
            samples_per_cycle: 32,
            cycles_per_signature: 2,
            signatures_per_appliance: 3,
            ..Default::default()
        };
        let centroids = hf::sample_hf_centroids(
            2,
            &hf::HfCentroidRanges { lambda: 5.0, ..Default::default() },
            &mut hf::centroid_stream(99),
        )
        .unwrap();
        let ds = hf::generate_hf_dataset(&centroids, &cfg, Schedule::Parallel).unwrap();
        write_dataset_csv(&ds, &path).unwrap();
        let Manifest::Generated(m) = read_manifest(&manifest_path(&path)).unwrap() else {
            panic!("expected a generated manifest");
        };
        assert_eq!(m.config.master_seed, 99);
        let again = regenerate(&m, Schedule::Sequential).unwrap();
        assert_eq!(again.signatures(), load_dataset_csv(&path).unwrap().signatures());

        // a manifest doubles as a centroid file
        let CentroidSet::Hf(read_back) = read_centroids(&manifest_path(&path)).unwrap() else {
            panic!("expected hf centroids");
        };
        assert_eq!(read_back, centroids);
    }
}
