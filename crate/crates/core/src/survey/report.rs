//! Conjecture checks, CSV emitters and probabilistic-complexity estimates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SurveyRecord;
use crate::error::{Error, Result};
use crate::optimizer::{optimize_classical, AdamConfig};
use crate::patterns::deterministic_complexity;
use crate::sequence::BinarySequence;
use crate::ONE_OVER_E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub total_records: usize,
    /// Records without `p_opt`; they are counted but not checked.
    pub failed_records: usize,
    pub tol: f64,
    pub violations_emcm: Vec<SurveyRecord>,
    pub violations_universal: Vec<SurveyRecord>,
    /// Largest `bound_emcm - p_opt`.
    pub max_gap: Option<f64>,
    /// Smallest `bound_emcm - p_opt`; negative only if some record beats its bound.
    pub min_gap: Option<f64>,
}

impl ConjectureReport {
    pub fn holds(&self) -> bool {
        self.violations_emcm.is_empty() && self.violations_universal.is_empty()
    }
}

/// Flags records with `p_opt > bound_emcm + tol` or `p_opt > 1/e + tol`.
pub fn verify_conjecture(records: &[SurveyRecord], tol: f64) -> ConjectureReport {
    let mut report = ConjectureReport {
        total_records: records.len(),
        failed_records: 0,
        tol,
        violations_emcm: Vec::new(),
        violations_universal: Vec::new(),
        max_gap: None,
        min_gap: None,
    };
    for r in records {
        let Some(p) = r.p_opt else {
            report.failed_records += 1;
            continue;
        };
        if p > r.bound_emcm + tol {
            report.violations_emcm.push(r.clone());
        }
        if p > ONE_OVER_E + tol {
            report.violations_universal.push(r.clone());
        }
        let gap = r.bound_emcm - p;
        report.max_gap = Some(report.max_gap.map_or(gap, |g| g.max(gap)));
        report.min_gap = Some(report.min_gap.map_or(gap, |g| g.min(gap)));
    }
    report
}

fn opt_cell<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Columns: sequence, L, d, dc, model_kind, n_kraus, p_opt, bound_emcm, gap, seed.
pub fn write_summary_csv<W: Write>(records: &[SurveyRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sequence", "L", "d", "dc", "model_kind", "n_kraus", "p_opt", "bound_emcm", "gap", "seed"])?;
    for r in records {
        w.write_record([
            r.sequence.to_string(),
            r.len.to_string(),
            r.d.to_string(),
            r.dc.to_string(),
            r.model_kind.to_string(),
            opt_cell(r.n_kraus),
            opt_cell(r.p_opt),
            r.bound_emcm.to_string(),
            opt_cell(r.gap()),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Successful records sorted by `(bound_emcm, p_opt)`, one row per rank:
/// rank, p_opt, bound_emcm, one_over_e.
pub fn write_plot_csv<W: Write>(records: &[SurveyRecord], out: W) -> Result<()> {
    let mut rows: Vec<(f64, f64)> = records.iter().filter_map(|r| r.p_opt.map(|p| (r.bound_emcm, p))).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "p_opt", "bound_emcm", "one_over_e"])?;
    for (i, (bound, p)) in rows.iter().enumerate() {
        w.write_record([(i + 1).to_string(), p.to_string(), bound.to_string(), ONE_OVER_E.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    pub threshold: f64,
    pub dc: usize,
    /// Smallest dimension reaching the threshold.
    pub pc: usize,
    /// `(d, p_opt)` for each dimension tried below `pc`, then `pc` itself
    /// when it is below `DC`.
    pub probabilities: Vec<(usize, f64)>,
}

/// Smallest `d` whose optimized probability reaches `q - 1e-6`, trying
/// `d = 1, 2, ..` and falling back to `DC`.
pub fn estimate_pc_q(seq: &BinarySequence, q: f64, config: &AdamConfig) -> Result<PcEstimate> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::OutOfRange(format!("threshold q = {q} outside (0, 1]")));
    }
    let dc = deterministic_complexity(seq);
    let mut probabilities = Vec::new();
    for d in 1..dc {
        let p = optimize_classical(seq, d, config)?.probability;
        probabilities.push((d, p));
        if p >= q - 1e-6 {
            return Ok(PcEstimate { threshold: q, dc, pc: d, probabilities });
        }
    }
    Ok(PcEstimate { threshold: q, dc, pc: dc, probabilities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::ModelKind;

    fn rec(p: Option<f64>, bound: f64) -> SurveyRecord {
        SurveyRecord {
            sequence: "0001".parse().unwrap(),
            len: 4,
            d: 3,
            dc: 4,
            model_kind: ModelKind::Quantum,
            n_kraus: Some(1),
            p_opt: p,
            bound_emcm: bound,
            seed: 0,
            restarts_used: 1,
            iterations: 1,
            wall_time: None,
            error: p.is_none().then(|| "boom".into()),
        }
    }

    #[test]
    fn empty_report() {
        let r = verify_conjecture(&[], 1e-6);
        assert_eq!(r.total_records, 0);
        assert!(r.holds() && r.max_gap.is_none());
    }

    #[test]
    fn violations_detected() {
        let records = [rec(Some(0.30), 0.316), rec(Some(0.40), 0.316), rec(None, 0.316)];
        let r = verify_conjecture(&records, 1e-6);
        assert_eq!(r.total_records, 3);
        assert_eq!(r.failed_records, 1);
        assert_eq!(r.violations_emcm.len(), 1);
        assert_eq!(r.violations_universal.len(), 1);
        assert!((r.max_gap.unwrap() - 0.016).abs() < 1e-12);
        assert!(r.min_gap.unwrap() < 0.0);
    }

    #[test]
    fn csv_layouts() {
        let records = [rec(Some(0.30), 0.316), rec(None, 0.25), rec(Some(0.2), 0.25)];
        let mut buf = Vec::new();
        write_summary_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sequence,L,d,dc,model_kind,n_kraus,p_opt,bound_emcm,gap,seed");
        assert_eq!(lines[2], "0001,4,3,4,quantum,1,,0.25,,0");

        let mut buf = Vec::new();
        write_plot_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,0.2,0.25,"));
        assert!(lines[2].starts_with("2,0.3,0.316,"));
    }

    #[test]
    fn pc_threshold_validation() {
        let s: BinarySequence = "001".parse().unwrap();
        assert!(estimate_pc_q(&s, 0.0, &AdamConfig::classical()).is_err());
        let one = estimate_pc_q(&s, 1.0, &AdamConfig::classical().with_restarts(3)).unwrap();
        assert_eq!(one.pc, 3);
    }
}
