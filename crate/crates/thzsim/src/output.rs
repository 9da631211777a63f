//! CSV emission and ingestion.
//!
//! Files are UTF-8 with LF endings and always start with a header row. Reals
//! are written with 6 significant digits in `%g` style; an absent value is an
//! empty field.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::experiment::{DynamicResult, StaticResult, Technique};

pub const STATIC_SAMPLES: &str = "static_samples.csv";
pub const STATIC_SUMMARY: &str = "static_summary.csv";
pub const DYNAMIC: &str = "dynamic.csv";
pub const EFFECTIVE_CONFIG: &str = "config.toml";

pub const STATIC_SAMPLES_HEADER: &str = "d_count,technique,replication,lambda,t_max_gbit";
pub const STATIC_SUMMARY_HEADER: &str = "d_count,technique,mean_lambda,ci_half_width,mean_gain";
pub const DYNAMIC_HEADER: &str = "epoch_index,epoch_minutes,lambda_pddt,lambda_sddt,gain";

/// `%.6g` formatting.
pub fn fmt_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g6).unwrap_or_default()
}

pub fn static_samples_csv(result: &StaticResult) -> String {
    let mut out = format!("{STATIC_SAMPLES_HEADER}\n");
    for p in &result.points {
        for t in Technique::ALL {
            for (rep, &lambda) in p.summary(t).lambdas.iter().enumerate() {
                out += &format!(
                    "{},{},{},{},{}\n",
                    p.d_count,
                    t.as_str(),
                    rep,
                    fmt_g6(lambda),
                    fmt_g6(result.chunk_gbit * lambda)
                );
            }
        }
    }
    out
}

pub fn static_summary_csv(result: &StaticResult) -> String {
    let mut out = format!("{STATIC_SUMMARY_HEADER}\n");
    for p in &result.points {
        for t in Technique::ALL {
            let s = p.summary(t);
            out += &format!(
                "{},{},{},{},{}\n",
                p.d_count,
                t.as_str(),
                fmt_g6(s.interval.mean),
                opt(s.interval.half_width),
                opt(p.mean_gain)
            );
        }
    }
    out
}

pub fn dynamic_csv(result: &DynamicResult) -> String {
    let mut out = format!("{DYNAMIC_HEADER}\n");
    for e in &result.epochs {
        out += &format!(
            "{},{},{},{},{}\n",
            e.index,
            e.minutes,
            fmt_g6(e.lambda_pddt),
            fmt_g6(e.lambda_sddt),
            opt(e.gain)
        );
    }
    out
}

/// Creates `dir` if needed and proves it is writable.
pub fn preflight(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".thzsim-write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)
}

fn write(dir: &Path, name: &str, body: &str) -> io::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

pub fn emit_static(result: &StaticResult, dir: &Path) -> io::Result<Vec<PathBuf>> {
    Ok(vec![
        write(dir, STATIC_SAMPLES, &static_samples_csv(result))?,
        write(dir, STATIC_SUMMARY, &static_summary_csv(result))?,
    ])
}

pub fn emit_dynamic(result: &DynamicResult, dir: &Path) -> io::Result<Vec<PathBuf>> {
    Ok(vec![write(dir, DYNAMIC, &dynamic_csv(result))?])
}

/// A parsed CSV file: header plus rows of raw fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    /// `(1-based line number, fields)`.
    pub rows: Vec<(usize, Vec<String>)>,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: empty file, expected a header row")]
    Empty { path: String },
    #[error("{path}:{line}: {message}")]
    Row { path: String, line: usize, message: String },
}

pub fn parse_table(text: &str, path: &str) -> Result<Table, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| CsvError::Empty { path: path.into() })?;
    let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != header.len() {
            return Err(CsvError::Row {
                path: path.into(),
                line: i + 1,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        rows.push((i + 1, fields));
    }
    Ok(Table { header, rows })
}

pub fn read_table(path: &Path) -> Result<Table, CsvError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CsvError::Io { path: shown.clone(), source })?;
    parse_table(&text, &shown)
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn has_header(&self, expected: &str) -> bool {
        self.header.join(",") == expected
    }
}
