//! Exhaustive optimization surveys over sequences and dimensions.

mod gmcm;
mod report;
mod store;

pub use gmcm::{compositions, gmcm_survey, GmcmCandidate, GmcmClass, GmcmSurvey};
pub use report::{estimate_pc_q, verify_conjecture, write_plot_csv, write_summary_csv, ConjectureReport, PcEstimate};
pub use store::{read_records, RecordKey, RecordStore};

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::conjectured_bound;
use crate::error::{Error, Result};
use crate::optimizer::{optimize_classical, AdamConfig};
use crate::patterns::deterministic_complexity;
use crate::quantum::optimize_quantum;
use crate::sequence::{enumerate_sequences, BinarySequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Classical,
    Quantum,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Classical => "classical",
            ModelKind::Quantum => "quantum",
        })
    }
}

/// One optimized `(sequence, d)` cell. A failed cell keeps its key and
/// carries `error` instead of `p_opt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub sequence: BinarySequence,
    #[serde(rename = "L")]
    pub len: usize,
    pub d: usize,
    pub dc: usize,
    pub model_kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_kraus: Option<usize>,
    #[serde(default)]
    pub p_opt: Option<f64>,
    pub bound_emcm: f64,
    pub seed: u64,
    pub restarts_used: usize,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SurveyRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey { sequence: self.sequence.to_string(), d: self.d, model_kind: self.model_kind, n_kraus: self.n_kraus, seed: self.seed }
    }

    /// `bound_emcm - p_opt`, absent for failed cells.
    pub fn gap(&self) -> Option<f64> {
        self.p_opt.map(|p| self.bound_emcm - p)
    }
}

/// Which dimensions to survey for a sequence of deterministic complexity `DC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum DRule {
    /// Every `d` in `1..DC`.
    All,
    /// Only `d = DC - k`, when that is at least 1.
    DcMinus(usize),
    /// Only the given `d`, when it lies below `DC`.
    Fixed(usize),
}

impl DRule {
    pub fn dims(&self, dc: usize) -> Vec<usize> {
        match *self {
            DRule::All => (1..dc).collect(),
            DRule::DcMinus(k) if k >= 1 && k < dc => vec![dc - k],
            DRule::Fixed(d) if d >= 1 && d < dc => vec![d],
            _ => Vec::new(),
        }
    }
}

/// A grid cell awaiting optimization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyCell {
    pub sequence: BinarySequence,
    pub d: usize,
    pub dc: usize,
    pub model_kind: ModelKind,
    pub n_kraus: Option<usize>,
}

/// Run-time knobs shared by both survey kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyOptions {
    pub config: AdamConfig,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Store elapsed seconds per cell. Off by default so reruns stay
    /// byte-identical.
    pub record_wall_time: bool,
}

impl SurveyOptions {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, jobs: None, record_wall_time: false }
    }
}

/// Canonical sequences (`a_1 = 0`) of every length in `lens`, each paired
/// with the dimensions chosen by `rule`, in length-then-lexicographic order.
pub fn survey_grid(
    lens: RangeInclusive<usize>,
    rule: DRule,
    kind: ModelKind,
    n_kraus_set: &[usize],
) -> Result<Vec<SurveyCell>> {
    if *lens.start() < 1 {
        return Err(Error::OutOfRange("sequence lengths start at 1".into()));
    }
    let mut seqs = Vec::new();
    for len in lens {
        seqs.extend(enumerate_sequences(len)?);
    }
    grid_for_sequences(&seqs, rule, kind, n_kraus_set)
}

/// Grid over an explicit list. Sequences are canonicalized and duplicates
/// dropped, keeping first-seen order.
pub fn grid_for_sequences(
    seqs: &[BinarySequence],
    rule: DRule,
    kind: ModelKind,
    n_kraus_set: &[usize],
) -> Result<Vec<SurveyCell>> {
    let kraus: Vec<Option<usize>> = match kind {
        ModelKind::Classical => vec![None],
        ModelKind::Quantum => {
            if n_kraus_set.is_empty() || n_kraus_set.contains(&0) {
                return Err(Error::OutOfRange("quantum surveys need N_K values >= 1".into()));
            }
            n_kraus_set.iter().map(|&n| Some(n)).collect()
        }
    };
    let mut seen = std::collections::HashSet::new();
    let mut cells = Vec::new();
    for sequence in seqs.iter().map(BinarySequence::canonical) {
        if !seen.insert(sequence.clone()) {
            continue;
        }
        let dc = deterministic_complexity(&sequence);
        for d in rule.dims(dc) {
            for &n_kraus in &kraus {
                cells.push(SurveyCell { sequence: sequence.clone(), d, dc, model_kind: kind, n_kraus });
            }
        }
    }
    Ok(cells)
}

pub fn run_classical_survey(
    lens: RangeInclusive<usize>,
    rule: DRule,
    options: &SurveyOptions,
    store: Option<&mut RecordStore>,
) -> Result<Vec<SurveyRecord>> {
    run_survey(&survey_grid(lens, rule, ModelKind::Classical, &[])?, options, store)
}

pub fn run_quantum_survey(
    lens: RangeInclusive<usize>,
    rule: DRule,
    n_kraus_set: &[usize],
    options: &SurveyOptions,
    store: Option<&mut RecordStore>,
) -> Result<Vec<SurveyRecord>> {
    run_survey(&survey_grid(lens, rule, ModelKind::Quantum, n_kraus_set)?, options, store)
}

fn optimize_cell(cell: &SurveyCell, options: &SurveyOptions) -> SurveyRecord {
    let start = Instant::now();
    let config = &options.config;
    let mut record = SurveyRecord {
        sequence: cell.sequence.clone(),
        len: cell.sequence.len(),
        d: cell.d,
        dc: cell.dc,
        model_kind: cell.model_kind,
        n_kraus: cell.n_kraus,
        p_opt: None,
        bound_emcm: f64::NAN,
        seed: config.rng_seed,
        restarts_used: 0,
        iterations: 0,
        wall_time: None,
        error: None,
    };
    let outcome = conjectured_bound(&cell.sequence, cell.d).and_then(|bound| {
        record.bound_emcm = bound;
        match cell.n_kraus {
            None => optimize_classical(&cell.sequence, cell.d, config).map(|f| (f.probability, f.search)),
            Some(nk) => optimize_quantum(&cell.sequence, cell.d, nk, config).map(|f| (f.probability, f.search)),
        }
    });
    match outcome {
        Ok((p, search)) => {
            record.p_opt = Some(p);
            record.restarts_used = search.restarts_used();
            record.iterations = search.total_iterations;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    if options.record_wall_time {
        record.wall_time = Some(start.elapsed().as_secs_f64());
    }
    record
}

/// Optimizes every cell not already in `store` and returns one record per
/// cell in grid order. New records reach the store in grid order through a
/// single writer, so an interrupted run resumes to the same file.
pub fn run_survey(
    cells: &[SurveyCell],
    options: &SurveyOptions,
    mut store: Option<&mut RecordStore>,
) -> Result<Vec<SurveyRecord>> {
    options.config.validate()?;
    let seed = options.config.rng_seed;
    let key_of = |c: &SurveyCell| RecordKey {
        sequence: c.sequence.to_string(),
        d: c.d,
        model_kind: c.model_kind,
        n_kraus: c.n_kraus,
        seed,
    };
    let pending: Vec<(usize, &SurveyCell)> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| store.as_ref().is_none_or(|s| !s.contains(&key_of(c))))
        .collect();

    let (tx, rx) = mpsc::channel::<(usize, SurveyRecord)>();
    let mut fresh: BTreeMap<usize, SurveyRecord> = BTreeMap::new();
    let written = std::thread::scope(|scope| -> Result<()> {
        let writer = scope.spawn(|| -> Result<()> {
            let order: Vec<usize> = pending.iter().map(|(i, _)| *i).collect();
            let mut next = 0;
            let mut buffer: BTreeMap<usize, SurveyRecord> = BTreeMap::new();
            for (i, rec) in rx {
                buffer.insert(i, rec);
                while next < order.len() {
                    let Some(rec) = buffer.remove(&order[next]) else { break };
                    if let Some(s) = store.as_deref_mut() {
                        s.append(&rec)?;
                    }
                    fresh.insert(order[next], rec);
                    next += 1;
                }
            }
            Ok(())
        });
        let work = || {
            pending.par_iter().for_each_with(tx, |tx, (i, cell)| {
                // the receiver only disappears if the writer failed; that error surfaces below
                let _ = tx.send((*i, optimize_cell(cell, options)));
            })
        };
        match options.jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Io(e.to_string()))?
                .install(work),
            None => work(),
        }
        writer.join().map_err(|_| Error::Io("record writer panicked".into()))?
    });
    written?;

    cells
        .iter()
        .enumerate()
        .map(|(i, c)| match fresh.remove(&i) {
            Some(rec) => Ok(rec),
            None => store
                .as_ref()
                .and_then(|s| s.get(&key_of(c)).cloned())
                .ok_or_else(|| Error::Io(format!("no record produced for cell {i}"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_rules() {
        assert_eq!(DRule::All.dims(4), vec![1, 2, 3]);
        assert_eq!(DRule::DcMinus(1).dims(4), vec![3]);
        assert!(DRule::DcMinus(4).dims(4).is_empty());
        assert!(DRule::DcMinus(0).dims(4).is_empty());
        assert_eq!(DRule::Fixed(2).dims(4), vec![2]);
        assert!(DRule::Fixed(4).dims(4).is_empty());
    }

    #[test]
    fn grid_sizes() {
        let g = survey_grid(2..=2, DRule::All, ModelKind::Classical, &[]).unwrap();
        // "00" has DC 1 and contributes nothing; "01" has DC 2
        assert_eq!(g.len(), 1);
        assert_eq!((g[0].sequence.to_string(), g[0].d), ("01".into(), 1));
        let q = survey_grid(3..=3, DRule::All, ModelKind::Quantum, &[1, 2]).unwrap();
        assert!(q.iter().all(|c| c.n_kraus.is_some() && c.d < c.dc));
        assert!(survey_grid(3..=3, DRule::All, ModelKind::Quantum, &[]).is_err());
        let listed: Vec<BinarySequence> = ["110", "001", "01"].iter().map(|s| s.parse().unwrap()).collect();
        let g = grid_for_sequences(&listed, DRule::All, ModelKind::Classical, &[]).unwrap();
        let names: Vec<(String, usize)> = g.iter().map(|c| (c.sequence.to_string(), c.d)).collect();
        assert_eq!(names, [("001".to_string(), 1), ("001".to_string(), 2), ("01".to_string(), 1)]);
    }

    #[test]
    fn record_json_shape() {
        let r = SurveyRecord {
            sequence: "01".parse().unwrap(),
            len: 2,
            d: 1,
            dc: 2,
            model_kind: ModelKind::Classical,
            n_kraus: None,
            p_opt: Some(0.25),
            bound_emcm: 0.25,
            seed: 7,
            restarts_used: 3,
            iterations: 10,
            wall_time: None,
            error: None,
        };
        let j = serde_json::to_string(&r).unwrap();
        assert_eq!(
            j,
            r#"{"sequence":"01","L":2,"d":1,"dc":2,"model_kind":"classical","p_opt":0.25,"bound_emcm":0.25,"seed":7,"restarts_used":3,"iterations":10}"#
        );
        assert_eq!(serde_json::from_str::<SurveyRecord>(&j).unwrap(), r);
        assert_eq!(r.gap(), Some(0.0));
    }
}
