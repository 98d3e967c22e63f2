//! Append-only JSON-lines record store.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ModelKind, SurveyRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordKey {
    pub sequence: String,
    pub d: usize,
    pub model_kind: ModelKind,
    pub n_kraus: Option<usize>,
    pub seed: u64,
}

/// One JSON record per line. Opening an existing file loads its records so
/// a survey can skip cells it already holds.
pub struct RecordStore {
    path: PathBuf,
    records: Vec<SurveyRecord>,
    index: HashMap<RecordKey, usize>,
    out: BufWriter<File>,
}

impl RecordStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut records = Vec::new();
        let mut index = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: SurveyRecord = serde_json::from_str(&line)
                    .map_err(|e| Error::Serde(format!("{}:{}: {e}", path.display(), n + 1)))?;
                // a duplicate key keeps its first record
                index.entry(rec.key()).or_insert(records.len());
                records.push(rec);
            }
        }
        let out = BufWriter::new(OpenOptions::new().create(true).append(true).open(&path)?);
        Ok(Self { path, records, index, out })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn contains(&self, key: &RecordKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn get(&self, key: &RecordKey) -> Option<&SurveyRecord> {
        self.index.get(key).map(|&i| &self.records[i])
    }

    /// All records in file order.
    pub fn records(&self) -> &[SurveyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes and flushes one line. Records whose key is already stored are
    /// ignored.
    pub fn append(&mut self, rec: &SurveyRecord) -> Result<()> {
        let key = rec.key();
        if self.index.contains_key(&key) {
            return Ok(());
        }
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.index.insert(key, self.records.len());
        self.records.push(rec.clone());
        Ok(())
    }
}

/// Reads every record of a JSON-lines file.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<SurveyRecord>> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
