//! On-disk formats: trajectory and comparison CSVs, the spectrum text block,
//! truncation-scan tables and the run manifest.
//!
//! Every float in a CSV body is printed with 12 significant digits, so the
//! same configuration always produces byte-identical files.

use std::io::{BufRead, Write};

use pcl_core::bath::DissipatonSpectrum;
use pcl_core::observables::{Trajectory, TrajectoryRow};
use pcl_core::Complex64;
use serde::Serialize;

use crate::error::CliError;

pub const TRAJECTORY_COLUMNS: [&str; 8] = ["t", "sx", "sy", "sz", "bloch_norm", "entropy", "p_plus", "p_minus"];

pub fn fmt_float(v: f64) -> String {
    // `+ 0.0` folds negative zero.
    format!("{:.11e}", v + 0.0)
}

fn row_values(r: &TrajectoryRow) -> [f64; 7] {
    [r.sx, r.sy, r.sz, r.bloch_norm, r.entropy, r.p_plus, r.p_minus]
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn write_metadata<W: Write>(out: &mut W, metadata: &[(String, String)]) -> Result<(), CliError> {
    for (k, v) in metadata {
        writeln!(out, "#{k}={v}")?;
    }
    Ok(())
}

pub fn write_trajectory<W: Write>(mut out: W, traj: &Trajectory) -> Result<(), CliError> {
    write_metadata(&mut out, &traj.metadata)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS).map_err(csv_error)?;
    for r in &traj.rows {
        let mut rec = vec![fmt_float(r.t)];
        rec.extend(row_values(r).iter().map(|&v| fmt_float(v)));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_to_string(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory(&mut buf, traj).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Splits `#key=value` lines off the top of a CSV document.
fn split_metadata(text: &str) -> (Vec<(String, String)>, &str) {
    let mut metadata = Vec::new();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix('#') {
        let (head, tail) = line.split_once('\n').unwrap_or((line, ""));
        let head = head.trim_end_matches('\r');
        let (k, v) = head.split_once('=').unwrap_or((head, ""));
        metadata.push((k.to_string(), v.to_string()));
        rest = tail;
    }
    (metadata, rest)
}

fn parse_f64(field: &str, line: usize) -> Result<f64, CliError> {
    field.trim().parse().map_err(|_| CliError::Parse(format!("line {line}: '{field}' is not a number")))
}

pub fn read_trajectory(text: &str) -> Result<Trajectory, CliError> {
    let (metadata, body) = split_metadata(text);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().map_err(|e| CliError::Parse(e.to_string()))?;
    if header.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(CliError::Parse(format!(
            "trajectory header must be '{}', found '{}'",
            TRAJECTORY_COLUMNS.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
        let v = rec.iter().map(|f| parse_f64(f, i + 2)).collect::<Result<Vec<_>, _>>()?;
        if v.len() != 8 {
            return Err(CliError::Parse(format!("row {} has {} fields", i + 2, v.len())));
        }
        rows.push(TrajectoryRow {
            t: v[0],
            sx: v[1],
            sy: v[2],
            sz: v[3],
            bloch_norm: v[4],
            entropy: v[5],
            p_plus: v[6],
            p_minus: v[7],
        });
    }
    Ok(Trajectory { metadata, rows })
}

/// PCL and CL trajectories joined on `t`, with `pcl_*` and `cl_*` columns.
pub fn write_comparison<W: Write>(
    mut out: W,
    pcl: &Trajectory,
    cl: &Trajectory,
    metadata: &[(String, String)],
) -> Result<(), CliError> {
    if pcl.rows.len() != cl.rows.len() || pcl.rows.iter().zip(&cl.rows).any(|(a, b)| a.t != b.t) {
        return Err(CliError::Validation("PCL and CL trajectories are sampled on different time grids".into()));
    }
    write_metadata(&mut out, metadata)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for prefix in ["pcl", "cl"] {
        header.extend(TRAJECTORY_COLUMNS[1..].iter().map(|c| format!("{prefix}_{c}")));
    }
    w.write_record(&header).map_err(csv_error)?;
    for (a, b) in pcl.rows.iter().zip(&cl.rows) {
        let mut rec = vec![fmt_float(a.t)];
        rec.extend(row_values(a).iter().chain(row_values(b).iter()).map(|&v| fmt_float(v)));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Splits a comparison CSV back into its PCL and CL trajectories.
pub fn read_comparison(text: &str) -> Result<(Trajectory, Trajectory), CliError> {
    let (metadata, body) = split_metadata(text);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().map_err(|e| CliError::Parse(e.to_string()))?.clone();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| CliError::Parse(format!("missing column '{name}'")))
    };
    let t_col = column("t")?;
    let mut cols = Vec::new();
    for prefix in ["pcl", "cl"] {
        let idx = TRAJECTORY_COLUMNS[1..]
            .iter()
            .map(|c| column(&format!("{prefix}_{c}")))
            .collect::<Result<Vec<_>, _>>()?;
        cols.push(idx);
    }
    let mut out = [
        Trajectory { metadata: metadata.clone(), rows: Vec::new() },
        Trajectory { metadata, rows: Vec::new() },
    ];
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
        let get = |c: usize| parse_f64(rec.get(c).unwrap_or(""), i + 2);
        let t = get(t_col)?;
        for (traj, idx) in out.iter_mut().zip(&cols) {
            traj.rows.push(TrajectoryRow {
                t,
                sx: get(idx[0])?,
                sy: get(idx[1])?,
                sz: get(idx[2])?,
                bloch_norm: get(idx[3])?,
                entropy: get(idx[4])?,
                p_plus: get(idx[5])?,
                p_minus: get(idx[6])?,
            });
        }
    }
    let [pcl, cl] = out;
    Ok((pcl, cl))
}

/// Text block with `K`, `beta` and one `k re_eta im_eta re_gamma im_gamma pair`
/// row per term (1-based `k` and `pair`). Floats use the shortest exact
/// representation, so parsing restores the spectrum bit for bit.
pub fn spectrum_block(spec: &DissipatonSpectrum) -> String {
    let mut s = String::new();
    s.push_str(&format!("K = {}\n", spec.len()));
    s.push_str(&format!("beta = {:e}\n", spec.beta()));
    s.push_str("# k re_eta im_eta re_gamma im_gamma pair\n");
    for k in 0..spec.len() {
        let (e, g) = (spec.eta()[k], spec.gamma()[k]);
        s.push_str(&format!("{} {:e} {:e} {:e} {:e} {}\n", k + 1, e.re, e.im, g.re, g.im, spec.pair()[k] + 1));
    }
    s
}

pub fn parse_spectrum_block(text: &str) -> Result<DissipatonSpectrum, CliError> {
    let mut k_total = None;
    let mut beta = None;
    let mut eta = Vec::new();
    let mut gamma = Vec::new();
    let mut pair = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "K" => {
                    k_total = Some(value.parse::<usize>().map_err(|_| CliError::Parse(format!("line {}: bad K", i + 1)))?)
                }
                "beta" => beta = Some(parse_f64(value, i + 1)?),
                other => return Err(CliError::Parse(format!("line {}: unknown key '{other}'", i + 1))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(CliError::Parse(format!("line {}: expected 6 fields, found {}", i + 1, fields.len())));
        }
        let index = |f: &str| -> Result<usize, CliError> {
            match f.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(CliError::Parse(format!("line {}: '{f}' is not a 1-based index", i + 1))),
            }
        };
        if index(fields[0])? != eta.len() {
            return Err(CliError::Parse(format!("line {}: terms must be listed in order", i + 1)));
        }
        eta.push(Complex64::new(parse_f64(fields[1], i + 1)?, parse_f64(fields[2], i + 1)?));
        gamma.push(Complex64::new(parse_f64(fields[3], i + 1)?, parse_f64(fields[4], i + 1)?));
        pair.push(index(fields[5])?);
    }
    let k_total = k_total.ok_or_else(|| CliError::Parse("missing K".into()))?;
    let beta = beta.ok_or_else(|| CliError::Parse("missing beta".into()))?;
    if k_total != eta.len() {
        return Err(CliError::Parse(format!("K = {k_total} but {} terms were listed", eta.len())));
    }
    DissipatonSpectrum::new(eta, gamma, pair, beta).map_err(CliError::from_core)
}

/// `levels_a,levels_b,max_bloch_deviation` rows of a truncation scan.
pub fn write_scan_table<W: Write>(
    mut out: W,
    levels: &[usize],
    deviations: &[f64],
    monotone: bool,
    metadata: &[(String, String)],
) -> Result<(), CliError> {
    write_metadata(&mut out, metadata)?;
    writeln!(out, "#monotone={monotone}")?;
    writeln!(out, "levels_a,levels_b,max_bloch_deviation")?;
    for (w, d) in levels.windows(2).zip(deviations) {
        writeln!(out, "{},{},{}", w[0], w[1], fmt_float(*d))?;
    }
    Ok(())
}

/// Reads the `levels_a,levels_b,max_bloch_deviation` rows back.
pub fn read_scan_table<R: BufRead>(input: R) -> Result<Vec<(usize, usize, f64)>, CliError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.starts_with("levels_a") || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(CliError::Parse(format!("line {}: expected 3 fields", i + 1)));
        }
        let level = |s: &str| s.parse::<usize>().map_err(|_| CliError::Parse(format!("line {}: bad level", i + 1)));
        rows.push((level(f[0])?, level(f[1])?, parse_f64(f[2], i + 1)?));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    pub g: f64,
    pub sum_eta: [f64; 2],
    pub spectrum: ManifestSpectrum,
    pub runs: Vec<ManifestRun>,
    pub config: crate::config::Config,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestSpectrum {
    pub beta: f64,
    pub eta_re: Vec<f64>,
    pub eta_im: Vec<f64>,
    pub gamma_re: Vec<f64>,
    pub gamma_im: Vec<f64>,
    /// 1-based partner indices.
    pub pair: Vec<usize>,
}

impl ManifestSpectrum {
    pub fn from_spectrum(spec: &DissipatonSpectrum) -> Self {
        Self {
            beta: spec.beta(),
            eta_re: spec.eta().iter().map(|e| e.re).collect(),
            eta_im: spec.eta().iter().map(|e| e.im).collect(),
            gamma_re: spec.gamma().iter().map(|g| g.re).collect(),
            gamma_im: spec.gamma().iter().map(|g| g.im).collect(),
            pair: spec.pair().iter().map(|p| p + 1).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestRun {
    pub label: String,
    pub model: String,
    pub levels: usize,
    pub rows: usize,
    pub table_nonzeros: usize,
    pub output: String,
    pub lambda: f64,
    pub alpha: f64,
    pub g: f64,
    pub build_seconds: f64,
    pub propagate_seconds: f64,
    pub max_trace_defect: f64,
    pub max_hermiticity_defect: f64,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest always serializes")
    }
}
