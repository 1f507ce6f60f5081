use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::moments::ModifiedServiceMoments;
use crate::netmodel::Algorithm;

use super::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub algorithm: Algorithm,
    /// Idle probability of node 1 per population, or the error that cell hit.
    pub cells: Vec<Result<f64>>,
}

/// Signed deviations `algorithm - reference` per population.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub algorithm: Algorithm,
    pub signed: Vec<Option<f64>>,
}

impl ErrorRow {
    pub fn abs(&self) -> Vec<Option<f64>> {
        self.signed.iter().map(|e| e.map(f64::abs)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub populations: Vec<u32>,
    pub rows: Vec<ErrorRow>,
    /// Algorithms with the smallest absolute error per population after
    /// rounding to three decimals; ties are all listed.
    pub best_per_k: Vec<Vec<Algorithm>>,
}

impl ErrorTable {
    pub fn is_best(&self, algorithm: Algorithm, column: usize) -> bool {
        self.best_per_k[column].contains(&algorithm)
    }

    pub fn row(&self, algorithm: Algorithm) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub populations: Vec<u32>,
    pub rows: Vec<TableRow>,
    /// Deviations from the simulation row, when one was run.
    pub errors: Option<ErrorTable>,
    pub modified: Option<ModifiedServiceMoments>,
    pub diagnostics: Vec<String>,
}

fn thousandths(x: f64) -> i64 {
    (x * 1000.0).round() as i64
}

/// Value rounded to three decimals, as displayed.
pub fn round3(x: f64) -> f64 {
    thousandths(x) as f64 / 1000.0
}

/// Fixed-point rendering with 17 significant digits.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.0000000000000000".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (16 - exp).clamp(0, 340) as usize;
    format!("{x:.decimals$}")
}

impl ComparisonTable {
    pub fn row(&self, algorithm: Algorithm) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn value(&self, algorithm: Algorithm, population: u32) -> Option<f64> {
        let col = self.populations.iter().position(|k| *k == population)?;
        self.row(algorithm)?.cells[col].as_ref().ok().copied()
    }

    /// Deviations of every non-simulation row from `reference`, one entry per population.
    pub fn errors_against(&self, reference: &[Option<f64>]) -> ErrorTable {
        let rows: Vec<ErrorRow> = self
            .rows
            .iter()
            .filter(|r| r.algorithm != Algorithm::Sim)
            .map(|r| ErrorRow {
                algorithm: r.algorithm,
                signed: r
                    .cells
                    .iter()
                    .zip(reference)
                    .map(|(c, s)| match (c, s) {
                        (Ok(v), Some(s)) => Some(v - s),
                        _ => None,
                    })
                    .collect(),
            })
            .collect();
        let best_per_k = (0..self.populations.len())
            .map(|col| {
                let best = rows
                    .iter()
                    .filter_map(|r| r.signed[col].map(|e| thousandths(e.abs())))
                    .min();
                rows.iter()
                    .filter(|r| best.is_some() && r.signed[col].map(|e| thousandths(e.abs())) == best)
                    .map(|r| r.algorithm)
                    .collect()
            })
            .collect();
        ErrorTable {
            populations: self.populations.clone(),
            rows,
            best_per_k,
        }
    }

    fn csv_header(&self) -> String {
        let mut s = String::from("algorithm");
        for k in &self.populations {
            write!(s, ",K={k}").unwrap();
        }
        s.push('\n');
        s
    }

    /// Idle probabilities at full precision; failed cells read `ERR`.
    pub fn to_csv(&self) -> String {
        let mut s = self.csv_header();
        for row in &self.rows {
            s.push_str(row.algorithm.id());
            for c in &row.cells {
                s.push(',');
                match c {
                    Ok(v) => s.push_str(&sig17(*v)),
                    Err(_) => s.push_str("ERR"),
                }
            }
            s.push('\n');
        }
        s
    }

    fn error_csv(&self, signed: bool) -> Option<String> {
        let errors = self.errors.as_ref()?;
        let mut s = self.csv_header();
        for row in &errors.rows {
            s.push_str(row.algorithm.id());
            let values = if signed { row.signed.clone() } else { row.abs() };
            for v in values {
                s.push(',');
                match v {
                    Some(v) => s.push_str(&sig17(v)),
                    None => s.push_str("ERR"),
                }
            }
            s.push('\n');
        }
        Some(s)
    }

    pub fn abserr_csv(&self) -> Option<String> {
        self.error_csv(false)
    }

    pub fn signederr_csv(&self) -> Option<String> {
        self.error_csv(true)
    }

    /// Both tables rounded to three decimals, best errors in bold.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let header = |s: &mut String| {
            s.push('|');
            for k in &self.populations {
                write!(s, " | K={k}").unwrap();
            }
            s.push_str(" |\n|---|");
            for _ in &self.populations {
                s.push_str("---:|");
            }
            s.push('\n');
        };
        s.push_str("Idle probability of node 1\n\n");
        header(&mut s);
        for row in &self.rows {
            write!(s, "| {}", row.algorithm.display_name()).unwrap();
            for c in &row.cells {
                match c {
                    Ok(v) => write!(s, " | {:.3}", round3(*v)).unwrap(),
                    Err(_) => s.push_str(" | ERR"),
                }
            }
            s.push_str(" |\n");
        }
        if let Some(errors) = &self.errors {
            s.push_str("\nAbsolute error against simulation\n\n");
            header(&mut s);
            for row in &errors.rows {
                write!(s, "| {}", row.algorithm.display_name()).unwrap();
                for (col, e) in row.abs().iter().enumerate() {
                    match e {
                        Some(e) if errors.is_best(row.algorithm, col) => write!(s, " | **{:.3}**", round3(*e)).unwrap(),
                        Some(e) => write!(s, " | {:.3}", round3(*e)).unwrap(),
                        None => s.push_str(" | ERR"),
                    }
                }
                s.push_str(" |\n");
            }
        }
        if let Some(m) = &self.modified {
            write!(
                s,
                "\nLoading time with breakdowns: mean {:.6}, variance {:.6}, breakdown probability {:.6}\n",
                m.modified.mean, m.modified.variance, m.p
            )
            .unwrap();
        }
        if !self.diagnostics.is_empty() {
            s.push_str("\nDiagnostics\n\n");
            for d in &self.diagnostics {
                writeln!(s, "- {d}").unwrap();
            }
        }
        s
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}{ext}"))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes the table to `path`. CSV output adds `_abserr` and `_signederr`
/// siblings when the table carries errors. Returns the files written.
pub fn emit(table: &ComparisonTable, format: OutputFormat, path: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    match format {
        OutputFormat::Csv => {
            write(path, &table.to_csv())?;
            written.push(path.to_path_buf());
            for (suffix, text) in [("_abserr", table.abserr_csv()), ("_signederr", table.signederr_csv())] {
                if let Some(text) = text {
                    let p = sibling(path, suffix);
                    write(&p, &text)?;
                    written.push(p);
                }
            }
        }
        OutputFormat::Markdown => {
            write(path, &table.to_markdown())?;
            written.push(path.to_path_buf());
        }
    }
    Ok(written)
}
