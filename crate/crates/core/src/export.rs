//! Binary and CSV writers for matrices, traces and strategy tables.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::coalition::CoalitionSolution;
use crate::dynamics::MultiFpTrace;
use crate::error::{Error, Result};
use crate::payoff::RuleVariant;

pub const MATRIX_MAGIC: [u8; 4] = *b"RGLM";
/// Largest matrix written as CSV.
pub const MAX_CSV_CELLS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub mesh: u32,
    pub players: u32,
    pub rule: RuleVariant,
}

fn rule_code(rule: RuleVariant) -> u32 {
    match rule {
        RuleVariant::Standard => 0,
        RuleVariant::Weenie => 1,
    }
}

/// Header `magic, M, n, rule` (4 bytes each, little-endian), then the
/// entries row-major as little-endian `f64`. Rows are player 1's `M`
/// thresholds, so the column count follows from the length.
pub fn write_matrix_binary<W: Write>(mut w: W, header: MatrixHeader, m: &Array2<f64>) -> Result<()> {
    if m.nrows() != header.mesh as usize {
        return Err(Error::InvalidInput(format!("{} rows for mesh {}", m.nrows(), header.mesh)));
    }
    w.write_all(&MATRIX_MAGIC)?;
    w.write_all(&header.mesh.to_le_bytes())?;
    w.write_all(&header.players.to_le_bytes())?;
    w.write_all(&rule_code(header.rule).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * m.ncols());
    for row in m.rows() {
        buf.clear();
        row.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut r: R) -> Result<(MatrixHeader, Array2<f64>)> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if head[..4] != MATRIX_MAGIC {
        return Err(Error::InvalidInput("not a matrix file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(head[4 * i..4 * i + 4].try_into().expect("4 bytes"));
    let rule = match word(3) {
        0 => RuleVariant::Standard,
        1 => RuleVariant::Weenie,
        other => return Err(Error::InvalidInput(format!("unknown rule code {other}"))),
    };
    let header = MatrixHeader { mesh: word(1), players: word(2), rule };
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let rows = header.mesh as usize;
    if rows == 0 || body.len() % (8 * rows) != 0 {
        return Err(Error::InvalidInput(format!("{} data bytes do not fill {rows} rows", body.len())));
    }
    let values: Vec<f64> =
        body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let cols = values.len() / rows;
    let m = Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((header, m))
}

pub fn write_matrix_csv<W: Write>(w: W, m: &Array2<f64>) -> Result<()> {
    if m.len() > MAX_CSV_CELLS {
        return Err(Error::ResourceBudget { required_cells: m.len() as u128, budget_cells: MAX_CSV_CELLS as u128 });
    }
    let mut out = csv::Writer::from_writer(w);
    for row in m.rows() {
        out.write_record(row.iter().map(|x| x.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `n, V_n, gap_n`.
pub fn write_value_trace_csv<W: Write>(w: W, trace: &[f64], gaps: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "V_n", "gap_n"])?;
    for (k, v) in trace.iter().enumerate() {
        let gap = gaps.get(k).map_or(String::new(), |g| g.to_string());
        out.write_record([k.to_string(), v.to_string(), gap])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `iteration, play_1, ..., play_n, g, G`. Plays are strategy indices.
pub fn write_multi_fp_csv<W: Write>(w: W, trace: &MultiFpTrace) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let players = trace.distributions.len();
    let mut head = vec!["iteration".to_string()];
    head.extend((1..=players).map(|j| format!("play_{j}")));
    head.extend(["g".to_string(), "G".to_string()]);
    out.write_record(&head)?;
    for (k, point) in trace.gap_trace.iter().enumerate() {
        let mut rec = vec![point.iteration.to_string()];
        match trace.plays.get(k) {
            Some(p) => rec.extend(p.iter().map(|s| s.to_string())),
            None => rec.extend(std::iter::repeat(String::new()).take(players)),
        }
        rec.push(point.gap.to_string());
        rec.push(point.scaled_gap.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub const TABLE_COLUMNS: [&str; 5] =
    ["N", "opponent_value", "player1_strategy", "bloc_strategy", "pseudo_bloc_strategy"];

/// One row per coalition size; missing strategy columns are left empty.
pub fn write_table_csv<W: Write>(w: W, rows: &[CoalitionSolution]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TABLE_COLUMNS)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for s in rows {
        out.write_record([
            s.coalition_size().to_string(),
            s.opponent_value.to_string(),
            s.summary.player1.to_string(),
            opt(s.summary.bloc),
            opt(s.summary.pseudo_bloc),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `(N, opponent value)` pairs from a table CSV.
pub fn read_table_csv<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::InvalidInput(format!("table CSV lacks a `{name}` column")))
    };
    let (n_col, v_col) = (col("N")?, col("opponent_value")?);
    let parse = |s: &str| {
        s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("`{s}` is not a number")))
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push((parse(&rec[n_col])?, parse(&rec[v_col])?));
    }
    Ok(out)
}
