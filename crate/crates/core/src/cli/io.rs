//! File formats: JSON-lines datasets with a JSON sidecar, CSV tables and
//! plain-text response files.
//!
//! Numbers are written in Rust's shortest round-trip decimal form, so
//! every file re-reads to the same bits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::{Dataset, Example, ExampleMeta, RescaleRange, Scenario, Split};
use crate::physics::FidelityTier;
use crate::{Error, Result};

/// One line of a dataset file. Targets are in rad/ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub scenario: Scenario,
    pub tier: FidelityTier,
    pub target: Vec<f64>,
    pub rescaled: Vec<f64>,
    pub input: Vec<f64>,
    pub seed: u64,
    pub tuple: usize,
    pub repetition: usize,
    pub split: Split,
}

/// Dataset-wide fields, stored next to the records as `<name>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub scenario: Scenario,
    pub tier: FidelityTier,
    pub n_shots: usize,
    pub rescale: Vec<RescaleRange>,
    pub records: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Attaches the path to an I/O error.
fn at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn format_err(path: &Path, line: usize, e: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}:{line}: {e}", path.display()))
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    dataset.validate()?;
    let header = DatasetHeader {
        scenario: dataset.scenario,
        tier: dataset.tier,
        n_shots: dataset.n_shots,
        rescale: dataset.rescale.clone(),
        records: dataset.len(),
    };
    write_json(&sidecar_path(path), &header)?;
    let mut w = BufWriter::new(File::create(path).map_err(at(path))?);
    for (i, e) in dataset.examples.iter().enumerate() {
        let rec = DatasetRecord {
            scenario: dataset.scenario,
            tier: e.meta.tier,
            target: e.target.clone(),
            rescaled: dataset.rescaled_target(i),
            input: e.input.clone(),
            seed: e.meta.seed,
            tuple: e.meta.tuple,
            repetition: e.meta.repetition,
            split: dataset.split[i],
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let header: DatasetHeader = read_json(&sidecar_path(path))?;
    let reader = BufReader::new(File::open(path).map_err(at(path))?);
    let mut examples = Vec::with_capacity(header.records);
    let mut split = Vec::with_capacity(header.records);
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(&line).map_err(|e| format_err(path, n + 1, e))?;
        if rec.scenario != header.scenario {
            return Err(format_err(path, n + 1, "scenario differs from the header"));
        }
        examples.push(Example {
            input: rec.input,
            target: rec.target,
            meta: ExampleMeta { seed: rec.seed, tuple: rec.tuple, repetition: rec.repetition, tier: rec.tier },
        });
        split.push(rec.split);
    }
    if examples.len() != header.records {
        return Err(Error::Format(format!(
            "{}: header announces {} records, found {}",
            path.display(),
            header.records,
            examples.len()
        )));
    }
    let dataset = Dataset {
        scenario: header.scenario,
        tier: header.tier,
        n_shots: header.n_shots,
        examples,
        rescale: header.rescale,
        split,
    };
    dataset.validate()?;
    Ok(dataset)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(at(path))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(at(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Comma-separated table with a header row.
pub struct CsvWriter {
    inner: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut inner = BufWriter::new(File::create(path).map_err(at(path))?);
        writeln!(inner, "{}", header.join(","))?;
        Ok(Self { inner, columns: header.len() })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.columns {
            return Err(Error::DimensionMismatch { expected: self.columns, got: values.len() });
        }
        let cells: Vec<String> = values.iter().map(f64::to_string).collect();
        writeln!(self.inner, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Numeric rows from a text file. Cells are separated by commas or
/// whitespace; blank lines, `#` comments and a non-numeric first line
/// (a header) are skipped.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(at(path))?;
    let mut rows = Vec::new();
    let mut first = true;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if first => {}
            Err(e) => return Err(format_err(path, n + 1, e)),
        }
        first = false;
    }
    if rows.is_empty() {
        return Err(Error::Empty("input rows"));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{generate_scenario_i, linear_grid, AcquisitionPlan};
    use crate::physics::SensorConfig;
    use crate::units::two_pi_khz;

    #[test]
    fn dataset_round_trip_is_byte_identical() {
        let cfg = SensorConfig::default();
        let plan = AcquisitionPlan { n_points: 17, n_shots: 30, ..AcquisitionPlan::averaged() };
        let grid = linear_grid(two_pi_khz(0.5), two_pi_khz(10.0), 5);
        let d = generate_scenario_i(&cfg, FidelityTier::Harmonic, &plan, &grid, None, 3, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        write_dataset(&a, &d).unwrap();
        let back = read_dataset(&a).unwrap();
        assert_eq!(back, d);
        write_dataset(&b, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(std::fs::read(sidecar_path(&a)).unwrap(), std::fs::read(sidecar_path(&b)).unwrap());
        assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 15);
    }

    #[test]
    fn corrupt_dataset_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let header = DatasetHeader {
            scenario: Scenario::AveragedI,
            tier: FidelityTier::Full,
            n_shots: 1,
            rescale: vec![RescaleRange::new(0.0, 1.0).unwrap()],
            records: 1,
        };
        write_json(&sidecar_path(&p), &header).unwrap();
        std::fs::write(&p, "{\"scenario\": 3}\n").unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::Format(_))));
    }

    #[test]
    fn rows_skip_headers_and_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "target,output\n# note\n1.5, 1.6\n\n2 2.1 # trailing\n").unwrap();
        assert_eq!(read_rows(&p).unwrap(), vec![vec![1.5, 1.6], vec![2.0, 2.1]]);
        std::fs::write(&p, "1,2\nx,y\n").unwrap();
        assert!(read_rows(&p).is_err());
    }
}
