//! CSV output.
//!
//! One row per (trial, target node, algorithm), then one `ALL` row per
//! (trial, algorithm) and finally one `ALL`/`ALL` row per algorithm
//! pooling every trial. On summary rows `error` is the mean over localized
//! nodes, `n_anchors_used` is blank, `degree` is the mean network degree
//! and `converged` counts converged estimates. Floats use shortest
//! round-trip formatting, which makes the output byte-stable.

use std::io::{self, Write};

use crate::config::Algorithm;
use crate::harness::{mean, sample_stddev, ExperimentResult, NodeRecord, NodeStatus};

pub const HEADER: &str = "n_nodes,n_anchors,trial,node_id,alg,true_x,true_y,est_x,est_y,error,\
error_norm,n_anchors_used,degree,converged,status,stddev,messages,localized,low_confidence,failed";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

struct Summary {
    mean: Option<f64>,
    stddev: Option<f64>,
    converged: usize,
    localized: usize,
    low_confidence: usize,
    failed: usize,
}

impl Summary {
    fn of<'a>(records: impl Iterator<Item = &'a NodeRecord>) -> Self {
        let mut errors = Vec::new();
        let mut s = Summary {
            mean: None,
            stddev: None,
            converged: 0,
            localized: 0,
            low_confidence: 0,
            failed: 0,
        };
        for r in records {
            s.converged += r.converged as usize;
            match r.status {
                NodeStatus::Ok => errors.extend(r.error()),
                NodeStatus::LowConfidence => s.low_confidence += 1,
                _ => s.failed += 1,
            }
        }
        s.localized = errors.len();
        s.mean = mean(&errors);
        s.stddev = sample_stddev(&errors);
        s
    }
}

pub fn write_header<W: Write>(w: &mut W) -> io::Result<()> {
    writeln!(w, "{HEADER}")
}

/// Writes the rows of one experiment (no header).
pub fn write_rows<W: Write>(w: &mut W, result: &ExperimentResult) -> io::Result<()> {
    let (n, m, r_eff) = (result.n_total, result.n_anchors, result.r_eff);
    let mut nodes: Vec<&NodeRecord> = result.nodes.iter().collect();
    nodes.sort_by_key(|r| (r.trial, r.node_id, r.algorithm));
    let mut trials: Vec<usize> = result.trials.iter().map(|s| s.trial).collect();
    trials.dedup();

    let summary_row = |w: &mut W, trial: &str, alg: Algorithm, s: &Summary, degree: f64, messages: String| {
        writeln!(
            w,
            "{n},{m},{trial},ALL,{alg},,,,,{},{},,{degree},{},summary,{},{messages},{},{},{}",
            opt(s.mean),
            opt(s.mean.map(|e| e / r_eff)),
            s.converged,
            opt(s.stddev),
            s.localized,
            s.low_confidence,
            s.failed,
        )
    };

    let mut cursor = 0;
    for &trial in &trials {
        while cursor < nodes.len() && nodes[cursor].trial == trial {
            let r = nodes[cursor];
            let (ex, ey) = r.estimate.map(|p| (p.x.to_string(), p.y.to_string())).unwrap_or_default();
            let err = r.error();
            writeln!(
                w,
                "{n},{m},{trial},{},{},{},{},{ex},{ey},{},{},{},{},{},{},,,,,",
                r.node_id,
                r.algorithm,
                r.truth.x,
                r.truth.y,
                opt(err),
                opt(err.map(|e| e / r_eff)),
                r.anchors_used,
                r.degree,
                r.converged as u8,
                r.status.keyword(),
            )?;
            cursor += 1;
        }
        for ts in result.trials.iter().filter(|s| s.trial == trial) {
            let s = Summary::of(
                result.nodes.iter().filter(|r| r.trial == trial && r.algorithm == ts.algorithm),
            );
            summary_row(w, &trial.to_string(), ts.algorithm, &s, ts.mean_degree, ts.messages.to_string())?;
        }
    }
    for &alg in &result.algorithms {
        let s = Summary::of(result.nodes.iter().filter(|r| r.algorithm == alg));
        summary_row(w, "ALL", alg, &s, result.mean_degree(), result.mean_messages(alg).to_string())?;
    }
    Ok(())
}

/// Header plus the rows of every experiment, in order.
pub fn write_csv<W: Write>(w: &mut W, results: &[ExperimentResult]) -> io::Result<()> {
    write_header(w)?;
    for r in results {
        write_rows(w, r)?;
    }
    Ok(())
}

pub fn to_csv_string(results: &[ExperimentResult]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, results).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}
