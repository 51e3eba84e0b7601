//! CSV emission and the dataset format read by `pirec recover`.
//!
//! Every file starts with a `# schema=1` line. Floats are written in Rust's
//! shortest round-trip form, so identical results give identical bytes.

use std::io::{BufRead, Write};
use std::path::Path;

use pirec_core::calibration::{CalibrationRow, FeasibleBand};
use pirec_core::recovery::RecoveryOutcome;
use pirec_core::ReceivedBlock;

use crate::sweep::SweepResult;
use crate::{Error, Result};

pub const SCHEMA_LINE: &str = "# schema=1";

pub const SWEEP_HEADER: &str = "snr_db,M,A,B,monitor_flag,trials,P_C,E_W_measured,delta_P_C,\
P_C_halfwidth,E_W_halfwidth,delta_P_C_halfwidth,P_C_NES,E_W_NES";

pub fn write_sweep<W: Write>(mut w: W, result: &SweepResult) -> std::io::Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "# K={}", result.k)?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for p in &result.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.snr_db,
            p.m,
            p.thresholds.a(),
            p.thresholds.b(),
            u8::from(p.early_stop),
            p.trials,
            p.p_c.mean,
            p.e_w.mean,
            p.delta_p_c.mean,
            p.p_c.half_width,
            p.e_w.half_width,
            p.delta_p_c.half_width,
            p.p_c_without_stop.mean,
            p.e_w_without_stop.mean,
        )?;
    }
    Ok(())
}

pub fn write_calibration<W: Write>(mut w: W, rows: &[CalibrationRow]) -> std::io::Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "K,A,B,E_W,E_max_L,T_star")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.k, r.a, r.b, r.e_w, r.e_max_l, r.t_star)?;
    }
    Ok(())
}

pub fn write_feasible<W: Write>(mut w: W, k: usize, bands: &[FeasibleBand]) -> std::io::Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "K,B,A_min,A_max")?;
    for b in bands {
        writeln!(w, "{k},{},{},{}", b.b, b.a_min, b.a_max)?;
    }
    Ok(())
}

/// Per-iteration recovery trace: chosen position (0-based), best score, statistic
/// (empty when not computed).
pub fn write_trace<W: Write>(mut w: W, outcome: &RecoveryOutcome) -> std::io::Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "iteration,pi_hat,l_max,epsilon")?;
    for (i, r) in outcome.trace.iter().enumerate() {
        let eps = r.epsilon.map(|e| e.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", i + 1, r.j_hat, r.l_max, eps)?;
    }
    Ok(())
}

/// Soft observations of a set of blocks, one row per (block, position). `truth`, if
/// given, is stored in a `# pi=` comment (0-based, space separated).
pub fn write_dataset<W: Write>(mut w: W, blocks: &[ReceivedBlock], truth: Option<&[usize]>) -> std::io::Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    if let Some(pi) = truth {
        let joined: Vec<String> = pi.iter().map(usize::to_string).collect();
        writeln!(w, "# pi={}", joined.join(" "))?;
    }
    writeln!(w, "block,index,x,y,z")?;
    for b in blocks {
        for i in 0..b.len() {
            writeln!(w, "{},{},{},{},{}", b.block_id, i, b.x[i], b.y[i], b.z[i])?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub blocks: Vec<ReceivedBlock>,
    pub truth: Option<Vec<usize>>,
}

/// Reads a file written by [`write_dataset`]. Rows of one block must be consecutive
/// and in index order.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut truth = None;
    let mut rows: Vec<(usize, [f64; 3])> = Vec::new();
    let mut seen_header = false;
    let mut expected_index = 0usize;
    let mut current_block = None;
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        let lineno = n + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(pi) = comment.trim().strip_prefix("pi=") {
                let parsed: std::result::Result<Vec<usize>, _> =
                    pi.split_whitespace().map(str::parse).collect();
                truth = Some(parsed.map_err(|e| err(lineno, format!("bad pi entry: {e}")))?);
            }
            continue;
        }
        if !seen_header {
            if line != "block,index,x,y,z" {
                return Err(err(lineno, format!("expected header block,index,x,y,z, got {line:?}")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(err(lineno, format!("expected 5 fields, got {}", fields.len())));
        }
        let block: usize = fields[0].parse().map_err(|e| err(lineno, format!("block: {e}")))?;
        let index: usize = fields[1].parse().map_err(|e| err(lineno, format!("index: {e}")))?;
        if current_block != Some(block) {
            current_block = Some(block);
            expected_index = 0;
        }
        if index != expected_index {
            return Err(err(lineno, format!("expected index {expected_index}, got {index}")));
        }
        expected_index += 1;
        let mut v = [0.0; 3];
        for (slot, f) in v.iter_mut().zip(&fields[2..]) {
            *slot = f.parse().map_err(|e| err(lineno, format!("sample {f:?}: {e}")))?;
        }
        rows.push((block, v));
    }
    let mut blocks: Vec<ReceivedBlock> = Vec::new();
    for (block, [x, y, z]) in rows {
        match blocks.last_mut() {
            Some(b) if b.block_id == block => {
                b.x.push(x);
                b.y.push(y);
                b.z.push(z);
            }
            _ => blocks.push(ReceivedBlock::new(block, vec![x], vec![y], vec![z])?),
        }
    }
    if blocks.is_empty() {
        return Err(Error::Config(format!("{}: dataset holds no samples", path.display())));
    }
    let k = blocks[0].len();
    if let Some(b) = blocks.iter().find(|b| b.len() != k) {
        return Err(Error::Config(format!(
            "{}: block {} has {} samples, block {} has {k}",
            path.display(),
            b.block_id,
            b.len(),
            blocks[0].block_id
        )));
    }
    Ok(Dataset { blocks, truth })
}
