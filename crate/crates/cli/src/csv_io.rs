//! CSV export/import for affinity matrices and candidate loss tables.
//!
//! Affinity layout: header `id,0,1,...` then one row per subject in
//! ascending id order. Empty cells mark unobserved entries on import.

use std::path::Path;

use mtmv_core::affinity::{AffinityMatrix, MaskedMatrix, Subject};
use mtmv_core::Tensor;

use crate::error::{CliError, Result};

pub fn affinity_to_csv(aff: &AffinityMatrix) -> String {
    let n = aff.dim();
    let mut out = String::from("id");
    for j in 0..n {
        out.push_str(&format!(",{j}"));
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&format!("{i}"));
        for j in 0..n {
            out.push_str(&format!(",{}", aff.at(i, j)));
        }
        out.push('\n');
    }
    out
}

pub fn write_affinity_csv(aff: &AffinityMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, affinity_to_csv(aff))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Parses an affinity CSV; empty cells become unobserved mask entries.
pub fn read_affinity_csv(path: &Path) -> Result<MaskedMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_affinity_csv(&text, &path.display().to_string())
}

pub fn parse_affinity_csv(text: &str, context: &str) -> Result<MaskedMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{context}: empty affinity csv")))?;
    let n = header.split(',').count() - 1;
    if n == 0 {
        return Err(CliError::Data(format!("{context}: header has no subject columns")));
    }
    let mut entries = Tensor::zeros(&[n, n]);
    let mut observed = vec![false; n * n];
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        if i >= n {
            return Err(CliError::Data(format!("{context}: more rows than header columns")));
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n + 1 {
            return Err(CliError::Data(format!(
                "{context}: row {i} has {} cells, expected {}",
                cells.len(),
                n + 1
            )));
        }
        for (j, cell) in cells[1..].iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| CliError::Data(format!("{context}: row {i} col {j}: bad number `{cell}`")))?;
            entries.set2(i, j, v);
            observed[i * n + j] = true;
        }
        rows += 1;
    }
    if rows != n {
        return Err(CliError::Data(format!("{context}: {rows} data rows for {n} columns")));
    }
    Ok(MaskedMatrix { entries, observed })
}

/// A fully-observed masked matrix as a validated affinity matrix.
pub fn masked_to_affinity(m: &MaskedMatrix, subject: Subject) -> Result<AffinityMatrix> {
    if m.observed.iter().any(|o| !o) {
        return Err(CliError::Data(String::from("affinity matrix has unobserved entries")));
    }
    AffinityMatrix::new(m.entries.clone(), subject, None).map_err(Into::into)
}

pub fn loss_table_to_csv(candidates: &[(usize, f64)]) -> String {
    let mut out = String::from("d,loss\n");
    for (d, loss) in candidates {
        out.push_str(&format!("{d},{loss}\n"));
    }
    out
}
