use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use seqmem::classical::{build_emcm, build_gmcm_with_start, emcm_probability, f_ow, ClassicalModel, EmcmParams, GmcmSignature};
use seqmem::combinatorics::{minimal_pattern_count, primitive_word_count};
use seqmem::optimizer::{optimize_classical, AdamConfig};
use seqmem::quantum::{
    default_grid_points, fourier_one_way_model, optimize_quantum, quantum_one_way_probability, theta_scan, theta_star,
    FourierOneWayParams, QuantumModel,
};
use seqmem::survey::{
    estimate_pc_q, gmcm_survey, grid_for_sequences, read_records, run_survey, survey_grid, verify_conjecture,
    write_plot_csv, write_summary_csv, DRule, ModelKind, RecordStore, SurveyOptions,
};
use seqmem::{dc_and_patterns, expand_pattern, BinarySequence, Error};

use crate::args::*;

/// A command's result: the JSON document plus, for naturally tabular
/// results, the rows `--format csv` prints.
pub struct Output {
    pub doc: Value,
    pub table: Option<Table>,
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Output {
    fn doc(doc: Value) -> Self {
        Self { doc, table: None }
    }
}

pub type CmdResult = Result<Output, Error>;

fn parse_seq(s: &str) -> Result<BinarySequence, Error> {
    s.parse()
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

/// Optimizer fields readable from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
    pub restarts: Option<usize>,
    pub convergence_tol: Option<f64>,
    pub fd_step: Option<f64>,
    pub rng_seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
        }
    }
}

pub struct Context {
    pub seed: u64,
    pub file: ConfigFile,
}

impl Context {
    /// Defaults, then the config file, then flags.
    fn adam(&self, base: AdamConfig, flags: &AdamFlags) -> Result<AdamConfig, Error> {
        let f = &self.file;
        let mut c = base;
        c.learning_rate = flags.lr.or(f.learning_rate).unwrap_or(c.learning_rate);
        c.beta1 = f.beta1.unwrap_or(c.beta1);
        c.beta2 = f.beta2.unwrap_or(c.beta2);
        c.epsilon = f.epsilon.unwrap_or(c.epsilon);
        c.max_iterations = flags.iters.or(f.max_iterations).unwrap_or(c.max_iterations);
        c.restarts = flags.restarts.or(f.restarts).unwrap_or(c.restarts);
        c.convergence_tol = flags.tol.or(f.convergence_tol).unwrap_or(c.convergence_tol);
        c.fd_step = f.fd_step.unwrap_or(c.fd_step);
        c.rng_seed = self.seed;
        c.validate()?;
        Ok(c)
    }
}

pub fn dc(args: &SeqArg) -> CmdResult {
    let seq = parse_seq(args.value())?;
    let r = dc_and_patterns(&seq);
    Ok(Output::doc(json!({ "sequence": seq, "dc": r.dc, "patterns": r.patterns })))
}

pub fn patterns(args: &PatternsArgs) -> CmdResult {
    let seq = parse_seq(args.seq.value())?;
    let r = dc_and_patterns(&seq);
    let mut rows = Vec::new();
    let mut list = Vec::new();
    for p in &r.patterns {
        let rendered = p.render(&seq)?;
        let expansion = match args.len {
            Some(len) => Some(expand_pattern(&seq, *p, len)?.to_string()),
            None => None,
        };
        rows.push(vec![p.tail().to_string(), p.cycle().to_string(), rendered.clone(), expansion.clone().unwrap_or_default()]);
        list.push(json!({ "tail": p.tail(), "cycle": p.cycle(), "rendered": rendered, "expansion": expansion }));
    }
    Ok(Output {
        doc: json!({ "sequence": seq, "dc": r.dc, "patterns": list }),
        table: Some(Table { header: ["tail", "cycle", "rendered", "expansion"].map(String::from).to_vec(), rows }),
    })
}

pub fn count_patterns(args: &CountArgs) -> CmdResult {
    let count = minimal_pattern_count(args.k, args.len)?;
    let primitive = primitive_word_count(args.k, args.len)?;
    // u128 exceeds what JSON numbers carry exactly; emit as strings past 2^53
    let num = |x: u128| if x < (1u128 << 53) { json!(x as u64) } else { json!(x.to_string()) };
    Ok(Output::doc(json!({ "k": args.k, "len": args.len, "count": num(count), "primitive_words": num(primitive) })))
}

pub fn emcm(args: &EmcmArgs) -> CmdResult {
    let opt = emcm_probability(args.len, args.d)?;
    let one_way = f_ow(args.len as u64, args.d as u64)?;
    Ok(Output::doc(json!({
        "L": args.len,
        "d": args.d,
        "probability": opt.probability,
        "params": opt.params,
        "witness": [opt.params.n, opt.params.k, opt.params.t, opt.params.z],
        "f_ow": one_way,
    })))
}

/// Accepts a bare model or any object holding one under `"model"`.
fn load_model(path: &Path) -> Result<Value, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)?;
    Ok(match v.get("model") {
        Some(m) => m.clone(),
        None => v,
    })
}

fn classical_doc(model: &ClassicalModel, seq: &BinarySequence) -> Value {
    json!({ "kind": "classical", "model": model, "sequence": seq, "probability": model.sequence_probability(seq) })
}

pub fn build_model(args: &BuildArgs) -> CmdResult {
    let need = |x: Option<usize>, name: &str| x.ok_or_else(|| Error::OutOfRange(format!("--{name} is required for this model")));
    let seq_or = |len: usize| -> Result<BinarySequence, Error> {
        match &args.seq {
            Some(s) => parse_seq(s),
            None => BinarySequence::one_tick(len),
        }
    };
    let doc = match args.model {
        ModelChoice::Emcm => {
            let len = need(args.len, "L")?;
            let params = match (args.n, args.k, args.t, args.z) {
                (Some(n), Some(k), Some(t), Some(z)) => {
                    let mut p = EmcmParams { len, n, k, t, z, q: 0.0 };
                    let (l_red, d_red) = p.reduced();
                    p.q = match args.q.first() {
                        Some(&q) => q,
                        None if l_red > 0 => 1.0 - d_red as f64 / l_red as f64,
                        None => 0.0,
                    };
                    p
                }
                (None, None, None, None) => emcm_probability(len, need(args.d, "d")?)?.params,
                _ => return Err(Error::OutOfRange("give all of --n --k --t --z, or none".into())),
            };
            let model = build_emcm(&params)?;
            let mut doc = classical_doc(&model, &seq_or(len)?);
            doc["params"] = json!(params);
            doc
        }
        ModelChoice::Gmcm => {
            let sig = GmcmSignature::new(args.blocks.clone(), args.q.clone())?;
            let model = build_gmcm_with_start(&sig, args.start)?;
            let mut doc = classical_doc(&model, &seq_or(sig.dim() + 1)?);
            doc["signature"] = json!(sig);
            doc
        }
        ModelChoice::Fourier => {
            let d = need(args.d, "d")?;
            let theta0 = match args.theta {
                Some(t) => t,
                None => theta_star(d)?,
            };
            let q = args.q.first().copied().unwrap_or(1.0 / (d as f64 + 1.0));
            let params = FourierOneWayParams { d, theta0, q };
            let model = fourier_one_way_model(&params)?;
            let seq = seq_or(args.len.unwrap_or(d + 1))?;
            json!({ "kind": "quantum", "model": model, "params": params, "sequence": seq, "probability": model.sequence_probability(&seq)? })
        }
        ModelChoice::Eval => {
            let path = args.file.as_deref().ok_or_else(|| Error::OutOfRange("--file is required for eval".into()))?;
            let seq = parse_seq(args.seq.as_deref().ok_or_else(|| Error::OutOfRange("--seq is required for eval".into()))?)?;
            let raw = load_model(path)?;
            if raw.get("kraus").is_some() {
                let model: QuantumModel = serde_json::from_value(raw)?;
                json!({ "kind": "quantum", "sequence": seq, "probability": model.sequence_probability(&seq)? })
            } else {
                let model: ClassicalModel = serde_json::from_value(raw)?;
                json!({ "kind": "classical", "sequence": seq, "probability": model.sequence_probability(&seq) })
            }
        }
    };
    Ok(Output::doc(doc))
}

pub fn optimize_classical_cmd(ctx: &Context, args: &OptimizeArgs) -> CmdResult {
    let config = ctx.adam(AdamConfig::classical(), &args.adam)?;
    let seq = parse_seq(&args.seq)?;
    let fit = optimize_classical(&seq, args.d, &config)?;
    Ok(Output::doc(json!({
        "sequence": seq,
        "d": args.d,
        "probability": fit.probability,
        "model": fit.model,
        "restarts_used": fit.search.restarts_used(),
        "iterations": fit.search.total_iterations,
        "failures": fit.search.failures,
        "best_restart": fit.search.best.restart_index,
        "config": config,
    })))
}

pub fn optimize_quantum_cmd(ctx: &Context, args: &OptimizeArgs) -> CmdResult {
    let config = ctx.adam(AdamConfig::quantum(), &args.adam)?;
    let seq = parse_seq(&args.seq)?;
    let fit = optimize_quantum(&seq, args.d, args.nk, &config)?;
    Ok(Output::doc(json!({
        "sequence": seq,
        "d": args.d,
        "n_kraus": args.nk,
        "probability": fit.probability,
        "model": fit.model,
        "restarts_used": fit.search.restarts_used(),
        "iterations": fit.search.total_iterations,
        "failures": fit.search.failures,
        "best_restart": fit.search.best.restart_index,
        "config": config,
    })))
}

pub fn gmcm_survey_cmd(ctx: &Context, args: &GmcmArgs) -> CmdResult {
    let config = ctx.adam(AdamConfig::gmcm(), &args.adam)?;
    let dims: Vec<usize> = match args.d {
        Some(d) => vec![d],
        None => (1..args.len).collect(),
    };
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for d in dims {
        let s = gmcm_survey(args.len, d, &config)?;
        for c in &s.optima {
            let blocks: Vec<String> = c.block_sizes.iter().map(|k| k.to_string()).collect();
            let q: Vec<String> = c.cycle_probs.iter().map(|q| q.to_string()).collect();
            rows.push(vec![s.len.to_string(), d.to_string(), c.probability.to_string(), blocks.join(" "), c.start.to_string(), q.join(" ")]);
        }
        results.push(to_value(&s));
    }
    Ok(Output {
        doc: json!({ "L": args.len, "results": results, "config": config }),
        table: Some(Table { header: ["L", "d", "probability", "blocks", "start", "cycle_probs"].map(String::from).to_vec(), rows }),
    })
}

fn parse_lens(s: &str) -> Result<std::ops::RangeInclusive<usize>, Error> {
    let bad = || Error::OutOfRange(format!("cannot read length range {s:?}; use N or A..B"));
    match s.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok(a..=b)
        }
        None => {
            let n: usize = s.trim().parse().map_err(|_| bad())?;
            Ok(n..=n)
        }
    }
}

fn parse_rule(s: &str) -> Result<DRule, Error> {
    let bad = || Error::OutOfRange(format!("unknown d rule {s:?}; use all, dc-minus:K or fixed:D"));
    match s.split_once(':') {
        None if s == "all" => Ok(DRule::All),
        Some(("dc-minus", k)) => Ok(DRule::DcMinus(k.parse().map_err(|_| bad())?)),
        Some(("fixed", d)) => Ok(DRule::Fixed(d.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

pub fn survey_cmd(ctx: &Context, args: &SurveyArgs, store_path: Option<&Path>, jobs: Option<usize>) -> CmdResult {
    let (kind, base) = match args.kind {
        KindChoice::Classical => (ModelKind::Classical, AdamConfig::classical()),
        KindChoice::Quantum => (ModelKind::Quantum, AdamConfig::quantum()),
    };
    let config = ctx.adam(base, &args.adam)?;
    let rule = match args.d {
        Some(d) => DRule::Fixed(d),
        None => parse_rule(&args.d_rule)?,
    };
    let cells = match (&args.lens, &args.seq_file) {
        (Some(l), None) => survey_grid(parse_lens(l)?, rule, kind, &args.nk)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let seqs = text.lines().filter(|l| !l.trim().is_empty()).map(parse_seq).collect::<Result<Vec<_>, _>>()?;
            grid_for_sequences(&seqs, rule, kind, &args.nk)?
        }
        _ => return Err(Error::OutOfRange("give exactly one of --L or --seq-file".into())),
    };
    let options = SurveyOptions { config: config.clone(), jobs, record_wall_time: args.wall_time };
    let mut store = store_path.map(RecordStore::open).transpose()?;
    let before = store.as_ref().map_or(0, |s| s.len());
    let records = run_survey(&cells, &options, store.as_mut())?;
    let added = store.as_ref().map_or(records.len(), |s| s.len() - before);
    if let Some(path) = &args.csv {
        write_summary_csv(&records, fs::File::create(path)?)?;
    }
    if let Some(path) = &args.plot {
        write_plot_csv(&records, fs::File::create(path)?)?;
    }
    let report = verify_conjecture(&records, args.verify_tol);
    let failed = records.iter().filter(|r| r.p_opt.is_none()).count();
    let mut table = Vec::new();
    write_summary_csv(&records, &mut table)?;
    let doc = json!({
        "kind": kind,
        "d_rule": rule,
        "cells": cells.len(),
        "optimized": added,
        "resumed": cells.len() - added,
        "failed": failed,
        "store": store_path.map(|p| p.display().to_string()),
        "report": {
            "total_records": report.total_records,
            "violations_emcm": report.violations_emcm.len(),
            "violations_universal": report.violations_universal.len(),
            "max_gap": report.max_gap,
            "min_gap": report.min_gap,
            "tol": report.tol,
        },
        "config": config,
    });
    Ok(Output { doc, table: Some(csv_table(&table)) })
}

fn csv_table(bytes: &[u8]) -> Table {
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines().map(|l| l.split(',').map(String::from).collect::<Vec<_>>());
    let header = lines.next().unwrap_or_default();
    Table { header, rows: lines.collect() }
}

pub fn verify_cmd(args: &VerifyArgs) -> CmdResult {
    let records = read_records(&args.records)?;
    let report = verify_conjecture(&records, args.tol);
    Ok(Output::doc(json!({ "holds": report.holds(), "report": report })))
}

pub fn scan_cmd(args: &ScanArgs) -> CmdResult {
    let d = args.d;
    let star = theta_star(d)?;
    let q_default = 1.0 / (d as f64 + 1.0);
    if let Some(theta0) = args.theta {
        let q = args.q.unwrap_or(q_default);
        let p = quantum_one_way_probability(&FourierOneWayParams { d, theta0, q })?;
        return Ok(Output::doc(json!({ "d": d, "theta": theta0, "q": q, "probability": p, "theta_star": star })));
    }
    if args.q.is_some() {
        return Err(Error::OutOfRange("the scan fixes q = 1/(d+1); --q applies with --theta only".into()));
    }
    let grid = args.grid.unwrap_or_else(|| default_grid_points(d));
    let scan = theta_scan(d, grid)?;
    let p_star = quantum_one_way_probability(&FourierOneWayParams::at_classical_q(d, star))?;
    let rows: Vec<Vec<String>> = scan.curve.iter().map(|(t, p)| vec![t.to_string(), p.to_string()]).collect();
    let table = Table { header: vec!["theta".into(), "probability".into()], rows };
    if let Some(path) = &args.curve {
        let mut w = String::from("theta,probability\n");
        for r in &table.rows {
            w.push_str(&r.join(","));
            w.push('\n');
        }
        fs::write(path, w)?;
    }
    Ok(Output {
        doc: json!({
            "d": d,
            "q": scan.q,
            "grid_points": grid,
            "theta_best": scan.theta_best,
            "p_best": scan.p_best,
            "theta_star": star,
            "p_theta_star": p_star,
            "ratio": p_star / scan.p_best,
        }),
        table: Some(table),
    })
}

pub fn pc_cmd(ctx: &Context, args: &PcArgs) -> CmdResult {
    let config = ctx.adam(AdamConfig::classical(), &args.adam)?;
    let seq = parse_seq(&args.seq)?;
    let est = estimate_pc_q(&seq, args.q, &config)?;
    let mut doc = to_value(&est);
    doc["sequence"] = json!(seq);
    doc["config"] = to_value(&config);
    Ok(Output::doc(doc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_rules() {
        assert_eq!(parse_lens("3..7").unwrap(), 3..=7);
        assert_eq!(parse_lens("3..=7").unwrap(), 3..=7);
        assert_eq!(parse_lens("5").unwrap(), 5..=5);
        assert!(parse_lens("7..3").is_err());
        assert!(parse_lens("x").is_err());
        assert_eq!(parse_rule("all").unwrap(), DRule::All);
        assert_eq!(parse_rule("dc-minus:1").unwrap(), DRule::DcMinus(1));
        assert_eq!(parse_rule("fixed:3").unwrap(), DRule::Fixed(3));
        assert!(parse_rule("some").is_err());
    }
}
