//! Command implementations shared by the binary and the tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pcl_core::bath::{log_grid, reconstruction_report, QuadratureConfig, SpectralDensity};
use pcl_core::generator::Generator;
use pcl_core::hierarchy::{CouplingKind, SignConvention};
use pcl_core::integrator::{evolve, tier_convergence_scan};
use pcl_core::observables::Trajectory;

use crate::config::{Config, ModelChoice, Resolved};
use crate::error::CliError;
use crate::formats::{self, Manifest, ManifestRun, ManifestSpectrum};
use crate::presets;
use crate::threads::{par_map, worker_count};

/// Command-line overrides applied on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub model: Option<ModelChoice>,
    pub levels: Option<Vec<usize>>,
}

impl Overrides {
    fn apply(&self, config: &mut Config) {
        if let Some(out) = &self.out {
            config.output.dir = out.display().to_string();
        }
        if let Some(m) = self.model {
            config.coupling.model = m;
        }
        if let Some(levels) = &self.levels {
            if let Some(&l) = levels.last() {
                config.coupling.levels = l;
            }
        }
    }
}

fn out_dir(config: &Config) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&config.output.dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn convention_notes(resolved: &Resolved) -> Vec<String> {
    let mut notes = Vec::new();
    if resolved.convention == SignConvention::Odd {
        let note = "WARNING: sign_convention = odd; this hierarchy does not conserve the trace of the \
                    reduced density matrix and is provided for comparison only"
            .to_string();
        eprintln!("{note}");
        notes.push(note);
    }
    notes
}

fn base_metadata(config: &Config, resolved: &Resolved, kind: CouplingKind) -> Vec<(String, String)> {
    vec![
        ("model".into(), kind.name().into()),
        ("epsilon".into(), config.system.epsilon.to_string()),
        ("alpha".into(), config.system.alpha.to_string()),
        ("lambda".into(), config.system.lambda.to_string()),
        ("beta".into(), resolved.spectrum.beta().to_string()),
        ("K".into(), resolved.spectrum.len().to_string()),
        ("levels".into(), resolved.levels.to_string()),
        ("dt".into(), config.propagation.dt.to_string()),
        ("sign_convention".into(), resolved.convention.name().into()),
        ("g".into(), formats::fmt_float(resolved.g())),
    ]
}

/// One propagation of one model for one member configuration.
struct Job {
    label: String,
    config: Config,
    resolved: Resolved,
    kind: CouplingKind,
}

struct JobResult {
    trajectory: Trajectory,
    run: ManifestRun,
}

fn run_job(job: &Job) -> Result<JobResult, CliError> {
    let r = &job.resolved;
    let start = Instant::now();
    let generator = Generator::build(job.kind, &r.model, &r.spectrum, r.levels, r.convention);
    let build_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let prop = evolve(&generator, &r.propagation).map_err(CliError::from_core)?;
    let propagate_seconds = start.elapsed().as_secs_f64();
    let trajectory = prop
        .trajectory(base_metadata(&job.config, r, job.kind))
        .map_err(|e| CliError::Divergence(format!("{}: unphysical reduced state ({e})", job.label)))?;
    let run = ManifestRun {
        label: job.label.clone(),
        model: job.kind.name().into(),
        levels: r.levels,
        rows: generator.rows(),
        table_nonzeros: generator.table().nnz(),
        output: format!("{}.csv", job.label),
        lambda: job.config.system.lambda,
        alpha: job.config.system.alpha,
        g: r.g(),
        build_seconds,
        propagate_seconds,
        max_trace_defect: prop.max_trace_defect,
        max_hermiticity_defect: prop.max_hermiticity_defect,
    };
    Ok(JobResult { trajectory, run })
}

fn manifest(command: &str, config: &Config, resolved: &Resolved, runs: Vec<ManifestRun>) -> Manifest {
    Manifest {
        command: command.into(),
        notes: convention_notes(resolved),
        warnings: resolved.report.warnings.clone(),
        g: resolved.g(),
        sum_eta: [resolved.report.sum_eta.re, resolved.report.sum_eta.im],
        spectrum: ManifestSpectrum::from_spectrum(&resolved.spectrum),
        runs,
        config: config.clone(),
    }
}

/// Result of `evolve`, `compare` and `preset`: the written files.
#[derive(Debug, Clone, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

fn member_label(config: &Config, member: &Config, kind: CouplingKind) -> String {
    match &config.sweep {
        None => format!("{}_{}", config.output.tag, kind.name()),
        Some(s) => {
            let v = match s.parameter {
                crate::config::SweepParameter::Lambda => member.system.lambda,
                crate::config::SweepParameter::Alpha => member.system.alpha,
            };
            format!("{}_{}{}_{}", config.output.tag, s.parameter.name(), v, kind.name())
        }
    }
}

fn run_members(config: &Config, command: &str, compare: bool) -> Result<Written, CliError> {
    let base = config.resolve()?;
    for w in &base.report.warnings {
        eprintln!("warning: {w}");
    }
    let mut jobs = Vec::new();
    for member in presets::members(config) {
        let resolved = member.resolve()?;
        for &kind in &resolved.kinds {
            jobs.push(Job { label: member_label(config, &member, kind), config: member.clone(), resolved: resolved.clone(), kind });
        }
    }
    let results = par_map(&jobs, worker_count(), run_job).into_iter().collect::<Result<Vec<_>, _>>()?;
    let dir = out_dir(config)?;
    let mut written = Written::default();
    for res in &results {
        let path = dir.join(&res.run.output);
        write_file(&path, formats::trajectory_to_string(&res.trajectory).as_bytes())?;
        written.files.push(path);
    }
    if compare {
        for pair in results.chunks(2) {
            if let [a, b] = pair {
                if a.run.model == "pcl" && b.run.model == "cl" {
                    let label = a.run.label.trim_end_matches("_pcl");
                    let path = dir.join(format!("{label}_compare.csv"));
                    let mut buf = Vec::new();
                    let mut meta = a.trajectory.metadata.clone();
                    meta.retain(|(k, _)| k != "model");
                    formats::write_comparison(&mut buf, &a.trajectory, &b.trajectory, &meta)?;
                    write_file(&path, &buf)?;
                    written.files.push(path);
                }
            }
        }
    }
    let runs = results.into_iter().map(|r| r.run).collect();
    let path = dir.join(format!("{}_manifest.toml", config.output.tag));
    write_file(&path, manifest(command, config, &base, runs).to_toml().as_bytes())?;
    written.files.push(path);
    Ok(written)
}

/// Propagates each requested model and writes one CSV per model plus a manifest.
pub fn evolve_command(mut config: Config, overrides: &Overrides) -> Result<Written, CliError> {
    overrides.apply(&mut config);
    run_members(&config, "evolve", false)
}

/// Propagates both models and additionally writes the joined comparison CSV.
pub fn compare_command(mut config: Config, overrides: &Overrides) -> Result<Written, CliError> {
    overrides.apply(&mut config);
    config.coupling.model = ModelChoice::Both;
    run_members(&config, "compare", true)
}

/// Runs a named preset; both models are compared whenever both are requested.
pub fn preset_command(name: &str, overrides: &Overrides) -> Result<Written, CliError> {
    let mut config = presets::preset(name)?;
    overrides.apply(&mut config);
    let dir = out_dir(&config)?;
    let path = dir.join(format!("{name}.toml"));
    write_file(&path, config.to_toml().as_bytes())?;
    let compare = config.coupling.model == ModelChoice::Both;
    let mut written = run_members(&config, &format!("preset {name}"), compare)?;
    written.files.insert(0, path);
    Ok(written)
}

/// Spectrum text block followed by a reconstruction-error report.
pub fn decompose_command(mut config: Config, overrides: &Overrides) -> Result<String, CliError> {
    overrides.apply(&mut config);
    let resolved = config.resolve()?;
    let mut text = formats::spectrum_block(&resolved.spectrum);
    text.push_str(&format!("# sum_eta = {:e} {:+e}i\n", resolved.report.sum_eta.re, resolved.report.sum_eta.im));
    text.push_str(&format!("# g(lambda = {}) = {:.11e}\n", config.system.lambda, resolved.g()));
    for w in &resolved.report.warnings {
        text.push_str(&format!("# warning: {w}\n"));
    }
    let sd = config.spectral_density()?;
    if matches!(sd, SpectralDensity::Drude { .. }) {
        let grid = log_grid(0.1, 10.0, 60);
        let rep = reconstruction_report(&resolved.spectrum, &sd, &grid, &QuadratureConfig::default())
            .map_err(CliError::from_core)?;
        text.push_str("# reconstruction against quadrature on t in [0.1, 10] (60 log-spaced points)\n");
        text.push_str(&format!("# max_abs_error = {:.6e}\n", rep.max_abs_error));
        text.push_str(&format!("# max_pointwise_relative = {:.6e}\n", rep.max_pointwise_relative));
        text.push_str(&format!("# max_relative_to_peak = {:.6e}\n", rep.max_relative_to_peak));
        text.push_str(&format!("# backward_relative_to_peak = {:.6e}\n", rep.backward_relative_to_peak));
    } else {
        text.push_str("# discrete-mode decomposition is exact; no reconstruction report\n");
    }
    let dir = out_dir(&config)?;
    write_file(&dir.join(format!("{}_spectrum.txt", config.output.tag)), text.as_bytes())?;
    Ok(text)
}

/// One deviation table per requested model.
pub fn scan_command(mut config: Config, overrides: &Overrides) -> Result<String, CliError> {
    let levels = overrides.levels.clone().unwrap_or_else(|| vec![2, 4, 6, 8]);
    let mut ov = overrides.clone();
    ov.levels = None;
    ov.apply(&mut config);
    if levels.len() < 2 {
        return Err(CliError::Validation("scan-L needs at least two levels".into()));
    }
    let resolved = config.resolve()?;
    let dir = out_dir(&config)?;
    let reports = par_map(&resolved.kinds, worker_count(), |&kind| {
        let build = |l: usize| Generator::build(kind, &resolved.model, &resolved.spectrum, l, resolved.convention);
        tier_convergence_scan(&levels, build, &resolved.propagation).map_err(CliError::from_core)
    });
    let mut text = String::new();
    for (&kind, report) in resolved.kinds.iter().zip(reports) {
        let report = report?;
        let meta = base_metadata(&config, &resolved, kind);
        let meta: Vec<_> = meta.into_iter().filter(|(k, _)| k != "levels").collect();
        let mut buf = Vec::new();
        formats::write_scan_table(&mut buf, &report.levels, &report.deviations, report.monotone, &meta)?;
        write_file(&dir.join(format!("{}_{}_scan.csv", config.output.tag, kind.name())), &buf)?;
        text.push_str(&String::from_utf8(buf).expect("ASCII table"));
    }
    Ok(text)
}
