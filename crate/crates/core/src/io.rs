//! CSV and JSON artifacts.
//!
//! CSV files start with `# key: value` metadata lines, then a header row,
//! then data. Floats are written in the shortest form that parses back to
//! the same `f64`, so every file round-trips exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{CurveMeta, DensityCurve};
use crate::lyapunov::{LyapunovSpectrum, Method};

/// Ordered `# key: value` header lines.
pub type Metadata = BTreeMap<String, String>;

pub const SPECTRA_HEADER: &str = "sample_index,j,lambda";
pub const CURVE_HEADER: &str = "xi,density";

fn write_metadata<W: Write + ?Sized>(w: &mut W, meta: &Metadata) -> Result<()> {
    for (k, v) in meta {
        if k.contains(':') || k.contains('\n') || v.contains('\n') {
            return Err(Error::Format(format!("metadata entry {k:?} cannot be written on one line")));
        }
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// Splits a CSV stream into metadata and the data rows after the header.
fn read_sections<R: BufRead>(r: R, header: &str) -> Result<(Metadata, Vec<(usize, String)>)> {
    let mut meta = Metadata::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| Error::Format(format!("line {lineno}: metadata without ':'")))?;
            meta.insert(k.trim().to_string(), v.trim_start().to_string());
        } else if line.trim().is_empty() {
            continue;
        } else if !seen_header {
            if line.trim() != header {
                return Err(Error::Format(format!("line {lineno}: expected header {header:?}")));
            }
            seen_header = true;
        } else {
            rows.push((lineno, line));
        }
    }
    if !seen_header {
        return Err(Error::Format(format!("missing header {header:?}")));
    }
    Ok((meta, rows))
}

fn field<T: std::str::FromStr>(s: Option<&str>, lineno: usize, what: &str) -> Result<T> {
    s.map(str::trim)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format(format!("line {lineno}: bad or missing {what}")))
}

fn meta_value<T: std::str::FromStr>(meta: &Metadata, key: &str) -> Result<T> {
    meta.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format(format!("metadata {key:?} missing or malformed")))
}

/// One row per `(sample, eigenvalue)`, `j` 1-based.
///
/// `n`, `m`, `seed` and `method` are added to `meta`; all spectra must share
/// them.
pub fn write_spectra_csv<W: Write + ?Sized>(w: &mut W, meta: &Metadata, spectra: &[LyapunovSpectrum]) -> Result<()> {
    let mut meta = meta.clone();
    if let Some(first) = spectra.first() {
        if spectra
            .iter()
            .any(|s| s.n != first.n || s.m != first.m || s.method != first.method || s.master_seed != first.master_seed)
        {
            return Err(Error::Format("spectra differ in n, m, method or seed".into()));
        }
        meta.insert("n".into(), first.n.to_string());
        meta.insert("m".into(), first.m.to_string());
        meta.insert("seed".into(), first.master_seed.to_string());
        meta.insert("method".into(), first.method.name().into());
    }
    write_metadata(w, &meta)?;
    writeln!(w, "{SPECTRA_HEADER}")?;
    for s in spectra {
        for (j, l) in s.lambdas.iter().enumerate() {
            writeln!(w, "{},{},{:?}", s.sample_index, j + 1, l)?;
        }
    }
    Ok(())
}

/// Inverse of [`write_spectra_csv`]. Rows of one sample must be contiguous
/// and list `j = 1..=n` in order.
pub fn read_spectra_csv<R: BufRead>(r: R) -> Result<(Metadata, Vec<LyapunovSpectrum>)> {
    let (meta, rows) = read_sections(r, SPECTRA_HEADER)?;
    if rows.is_empty() {
        return Ok((meta, Vec::new()));
    }
    let n: usize = meta_value(&meta, "n")?;
    let m: usize = meta_value(&meta, "m")?;
    let seed: u64 = meta_value(&meta, "seed")?;
    let method = meta
        .get("method")
        .and_then(|s| Method::from_name(s))
        .ok_or_else(|| Error::Format("metadata \"method\" missing or unknown".into()))?;
    let mut out: Vec<LyapunovSpectrum> = Vec::new();
    for (lineno, line) in rows {
        let mut parts = line.split(',');
        let sample: u64 = field(parts.next(), lineno, "sample_index")?;
        let j: usize = field(parts.next(), lineno, "j")?;
        let lambda: f64 = field(parts.next(), lineno, "lambda")?;
        if parts.next().is_some() {
            return Err(Error::Format(format!("line {lineno}: too many fields")));
        }
        let start_new = match out.last() {
            Some(s) => s.sample_index != sample || s.lambdas.len() == n,
            None => true,
        };
        if start_new {
            if let Some(s) = out.last() {
                if s.lambdas.len() != n {
                    return Err(Error::Format(format!("line {lineno}: sample {} is incomplete", s.sample_index)));
                }
            }
            out.push(LyapunovSpectrum {
                lambdas: Vec::with_capacity(n),
                n,
                m,
                method,
                sample_index: sample,
                master_seed: seed,
            });
        }
        let s = out.last_mut().expect("pushed above");
        if j != s.lambdas.len() + 1 {
            return Err(Error::Format(format!("line {lineno}: expected j = {}", s.lambdas.len() + 1)));
        }
        s.lambdas.push(lambda);
    }
    if out.last().is_some_and(|s| s.lambdas.len() != n) {
        return Err(Error::Format("last sample is incomplete".into()));
    }
    Ok((meta, out))
}

/// `xi,density` rows. The curve's label and parameters go into the
/// metadata as `label` and `param.<name>`.
pub fn write_curve_csv<W: Write + ?Sized>(w: &mut W, meta: &Metadata, curve: &DensityCurve) -> Result<()> {
    let mut meta = meta.clone();
    meta.insert("label".into(), curve.meta.label.clone());
    for (k, v) in &curve.meta.params {
        meta.insert(format!("param.{k}"), format!("{v:?}"));
    }
    write_metadata(w, &meta)?;
    writeln!(w, "{CURVE_HEADER}")?;
    for (x, v) in curve.xs.iter().zip(&curve.values) {
        writeln!(w, "{x:?},{v:?}")?;
    }
    Ok(())
}

/// Inverse of [`write_curve_csv`]. `label` and `param.*` entries move back
/// into the curve and are removed from the returned metadata.
pub fn read_curve_csv<R: BufRead>(r: R) -> Result<(Metadata, DensityCurve)> {
    let (mut meta, rows) = read_sections(r, CURVE_HEADER)?;
    let mut xs = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (lineno, line) in rows {
        let mut parts = line.split(',');
        xs.push(field(parts.next(), lineno, "xi")?);
        values.push(field(parts.next(), lineno, "density")?);
        if parts.next().is_some() {
            return Err(Error::Format(format!("line {lineno}: too many fields")));
        }
    }
    let mut cm = CurveMeta::new(meta.remove("label").unwrap_or_default());
    let keys: Vec<String> = meta.keys().filter(|k| k.starts_with("param.")).cloned().collect();
    for k in keys {
        let v = meta.remove(&k).expect("key listed above");
        let x: f64 = v
            .parse()
            .map_err(|_| Error::Format(format!("metadata {k:?} is not a number")))?;
        cm.params.insert(k["param.".len()..].to_string(), x);
    }
    Ok((meta, DensityCurve::new(xs, values, cm)?))
}

pub fn write_json<W: Write + ?Sized, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json<R: BufRead, T: DeserializeOwned>(r: R) -> Result<T> {
    Ok(serde_json::from_reader(r)?)
}
