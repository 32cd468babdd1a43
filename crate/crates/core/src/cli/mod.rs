//! The `classical-dj` command line.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
//! computation ran but failed verification (misclassified spectrum, golden
//! mismatch, failed cross-check).

pub mod config;
pub mod crosscheck;
pub mod tables;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::complexbit::{self, ComplexBit, ComplexBitError, DJResult};
use crate::pipeline::{run_basis_inputs, run_pipeline, PipelineRun};
use crate::quantumref::{self, QuantumError};
use crate::signal::PhaseReading;
use crate::spinsim::{embed, Mode, PrecessionSense};
use config::{RawConfig, RunConfig, RunMode};
use tables::TableId;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {field}: {message}")]
    Config { field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Computation(String),
    #[error(
        "golden mismatch in table {table}, row {row}, column {column:?}: expected {expected:?}, got {actual:?}"
    )]
    GoldenMismatch {
        table: String,
        row: usize,
        column: String,
        expected: String,
        actual: String,
    },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::GoldenMismatch { .. } | CliError::Verification(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "classical-dj",
    version,
    about = "De-quantised Deutsch-Jozsa on simulated NMR magnetisation vectors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one computation and report the verdict and recovered function.
    Run(RunArgs),
    /// Regenerate the black-box tables by ideal simulation.
    Tables(TablesArgs),
    /// Write the FID, spectrum and pulse sequence of one run as files.
    Spectrum(SpectrumArgs),
    /// Cross-check every promise function across all modes.
    Crosscheck(CrosscheckArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of input bits.
    #[arg(long)]
    pub n: Option<String>,
    /// Truth table as a bit-string, f(0…0) first.
    #[arg(long)]
    pub f: Option<String>,
    /// Black-box parameters `A,B` or `A,B,C`.
    #[arg(long)]
    pub params: Option<String>,
    /// algebraic, ideal, realistic or quantum.
    #[arg(long)]
    pub mode: Option<String>,
    /// Phase tolerance for quadrant classification, degrees.
    #[arg(long)]
    pub tolerance_deg: Option<String>,
    /// Comma-separated species offsets, Hz.
    #[arg(long)]
    pub offsets: Option<String>,
    /// One T2 for all species, or one per species, seconds.
    #[arg(long)]
    pub t2: Option<String>,
    #[arg(long)]
    pub npoints: Option<String>,
    /// Dwell time, seconds.
    #[arg(long)]
    pub dwell: Option<String>,
    /// full-revolution or no-delay.
    #[arg(long)]
    pub tau_zero: Option<String>,
    /// Exponential line broadening, Hz.
    #[arg(long)]
    pub apodize: Option<String>,
    /// Zero-fill the FID to this many points.
    #[arg(long)]
    pub zero_fill: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Simulate precession in the wrong sense (negative control).
    #[arg(long, hide = true)]
    pub sabotage_precession: bool,
}

impl ConfigArgs {
    /// Config file first, then flags on top.
    pub fn raw(&self) -> Result<RawConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        for (key, value) in [
            ("n", &self.n),
            ("f", &self.f),
            ("params", &self.params),
            ("mode", &self.mode),
            ("tolerance_deg", &self.tolerance_deg),
            ("offsets_hz", &self.offsets),
            ("t2_s", &self.t2),
            ("npoints", &self.npoints),
            ("dwell_s", &self.dwell),
            ("tau_zero", &self.tau_zero),
            ("apodize_hz", &self.apodize),
            ("zero_fill", &self.zero_fill),
            ("out", &self.out),
        ] {
            if let Some(v) = value {
                raw.set(key, v)?;
            }
        }
        Ok(raw)
    }

    fn resolve(&self, default_mode: Option<&str>) -> Result<RunConfig, CliError> {
        let mut raw = self.raw()?;
        if let (None, Some(mode)) = (raw.get("mode"), default_mode) {
            raw.set("mode", mode)?;
        }
        let mut cfg = raw.resolve()?;
        if self.sabotage_precession {
            cfg.pipeline.simulation_sense = PrecessionSense::Clockwise;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Emit the report as one JSON document.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TablesArgs {
    /// Compare against the golden copy; exit 2 on any difference.
    #[arg(long)]
    pub check: bool,
    /// Restrict to these tables.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub only: Vec<TableId>,
    /// Golden file to compare against instead of the built-in copy.
    #[arg(long)]
    pub golden: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Also write FID and spectrum for every basis-bit input.
    #[arg(long)]
    pub basis: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CrosscheckArgs {
    #[arg(long)]
    pub json: bool,
    /// Simulate precession in the wrong sense (negative control).
    #[arg(long, hide = true)]
    pub sabotage_precession: bool,
}

/// Parses `args` (program name first), runs the command, prints its output
/// and returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let mut out = String::new();
    let result = execute(&cli, &mut out);
    print!("{out}");
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, appending everything meant for stdout to `out`
/// (also on failure).
pub fn execute(cli: &Cli, out: &mut String) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => cmd_run(args, out),
        Command::Tables(args) => cmd_tables(args, out),
        Command::Spectrum(args) => cmd_spectrum(args, out),
        Command::Crosscheck(args) => crosscheck::cmd_crosscheck(args, out),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeciesReport {
    pub id: String,
    pub offset_hz: f64,
    /// `[mx, my, mz]` at acquisition start.
    pub final_state: [f64; 3],
    pub direction: String,
    pub reading: Option<PhaseReading>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantumReport {
    /// `(outcome bit-string, probability)`.
    pub distribution: Vec<(String, f64)>,
    pub verdict: complexbit::Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub mode: RunMode,
    pub n: usize,
    pub function: String,
    pub params: Option<String>,
    pub verdict: Option<complexbit::Verdict>,
    pub recovered: Option<String>,
    /// Black-box outputs for input `(1,1)` on every bit.
    pub outputs: Vec<String>,
    pub projected: Vec<String>,
    pub species: Vec<SpeciesReport>,
    pub quantum: Option<QuantumReport>,
    pub spectral_error: Option<String>,
    pub sequence: Option<String>,
}

fn bits_to_strings(bits: &[ComplexBit]) -> Vec<String> {
    bits.iter().map(ComplexBit::to_string).collect()
}

fn function_err(e: ComplexBitError) -> CliError {
    CliError::Config {
        field: "f".into(),
        message: e.to_string(),
    }
}

fn quantum_err(e: QuantumError) -> CliError {
    match e {
        QuantumError::Function(inner) => function_err(inner),
        QuantumError::ArityOutOfRange(n) => CliError::Config {
            field: "n".into(),
            message: format!(
                "quantum mode supports n up to {}, got {n}",
                quantumref::MAX_QUANTUM_ARITY
            ),
        },
        other => CliError::Computation(other.to_string()),
    }
}

fn quantum_report(f: &complexbit::TruthTable) -> Result<QuantumReport, CliError> {
    let q = quantumref::run_quantum_dj(f).map_err(quantum_err)?;
    let n = f.arity();
    Ok(QuantumReport {
        distribution: q
            .distribution
            .iter()
            .enumerate()
            .map(|(k, &p)| (format!("{k:0n$b}"), p))
            .collect(),
        verdict: q.verdict,
    })
}

fn outcome_from(result: &DJResult, report: &mut RunReport) {
    report.verdict = Some(result.verdict);
    report.recovered = Some(result.function.to_string());
    report.projected = bits_to_strings(&result.projected);
}

fn pipeline_report(cfg: &RunConfig, run: &PipelineRun, report: &mut RunReport) {
    report.sequence = Some(run.sequence.to_text());
    report.species = cfg
        .pipeline
        .species
        .iter()
        .zip(&run.final_state)
        .map(|(s, m)| SpeciesReport {
            id: s.id.clone(),
            offset_hz: s.offset_hz,
            final_state: [m.mx, m.my, m.mz],
            direction: m.direction_label(),
            reading: run.readings.iter().find(|r| r.species == s.id).cloned(),
        })
        .collect();
    match &run.spectral {
        Ok(result) => outcome_from(result, report),
        Err(e) => report.spectral_error = Some(e.to_string()),
    }
}

/// Builds the report and, for the simulated modes, the pipeline run.
fn build_report(cfg: &RunConfig) -> Result<(RunReport, Option<PipelineRun>), CliError> {
    let f = cfg.function.truth_table();
    let mut report = RunReport {
        mode: cfg.mode,
        n: f.arity(),
        function: f.to_string(),
        params: None,
        verdict: None,
        recovered: None,
        outputs: Vec::new(),
        projected: Vec::new(),
        species: Vec::new(),
        quantum: None,
        spectral_error: None,
        sequence: None,
    };
    if cfg.mode == RunMode::Quantum {
        let q = quantum_report(&f)?;
        report.verdict = Some(q.verdict);
        report.quantum = Some(q);
        return Ok((report, None));
    }
    let p = cfg.function.params()?;
    report.params = Some(p.to_string());
    let inputs = vec![ComplexBit::DIAGONAL; p.arity()];
    let outputs = complexbit::apply_blackbox(&p, &inputs).map_err(function_err)?;
    report.outputs = bits_to_strings(&outputs);
    match cfg.mode {
        RunMode::Algebraic => {
            let result = complexbit::run_dequantised(&p).map_err(function_err)?;
            outcome_from(&result, &mut report);
            report.species = cfg
                .pipeline
                .species
                .iter()
                .zip(&outputs)
                .map(|(s, z)| {
                    let m = embed(*z).map_err(|e| CliError::Computation(e.to_string()))?;
                    Ok(SpeciesReport {
                        id: s.id.clone(),
                        offset_hz: s.offset_hz,
                        final_state: [m.mx, m.my, m.mz],
                        direction: m.direction_label(),
                        reading: None,
                    })
                })
                .collect::<Result<_, CliError>>()?;
            Ok((report, None))
        }
        RunMode::Ideal | RunMode::Realistic => {
            let mode = if cfg.mode == RunMode::Ideal {
                Mode::Ideal
            } else {
                Mode::Realistic
            };
            let run = run_pipeline(&p, mode, &cfg.pipeline)
                .map_err(|e| CliError::Computation(e.to_string()))?;
            pipeline_report(cfg, &run, &mut report);
            Ok((report, Some(run)))
        }
        RunMode::Quantum => unreachable!("handled above"),
    }
}

/// Fails unless the spectrum recovered exactly the configured function.
fn verify(report: &RunReport) -> Result<(), CliError> {
    if report.mode == RunMode::Quantum || report.mode == RunMode::Algebraic {
        return Ok(());
    }
    if let Some(e) = &report.spectral_error {
        return Err(CliError::Verification(format!(
            "spectrum could not be classified: {e}"
        )));
    }
    match &report.recovered {
        Some(r) if *r == report.function => Ok(()),
        Some(r) => Err(CliError::Verification(format!(
            "recovered f_{r}, expected f_{}",
            report.function
        ))),
        None => Err(CliError::Verification("no function recovered".into())),
    }
}

fn render_report(r: &RunReport, out: &mut String) {
    let _ = writeln!(out, "mode: {}", r.mode.name());
    let _ = writeln!(out, "n: {}", r.n);
    let _ = writeln!(out, "f: f_{}", r.function);
    if let Some(p) = &r.params {
        let _ = writeln!(out, "params (A B{}): {p}", if r.n == 2 { " C" } else { "" });
    }
    if !r.outputs.is_empty() {
        let _ = writeln!(out, "black-box output on (1,1): {}", r.outputs.concat());
    }
    if !r.projected.is_empty() {
        let _ = writeln!(out, "projected: {}", r.projected.concat());
    }
    for s in &r.species {
        let [x, y, z] = s.final_state;
        let _ = write!(
            out,
            "species {} ({} Hz): final ({x:.6}, {y:.6}, {z:.6}) {}",
            s.id, s.offset_hz, s.direction
        );
        if let Some(rd) = &s.reading {
            let quadrant = rd.quadrant.map_or("none".to_string(), |q| q.to_string());
            let _ = write!(
                out,
                "; peak {:.3} Hz, phase {:.2} deg, quadrant {quadrant}",
                rd.peak_freq_hz, rd.phase_deg
            );
        }
        out.push('\n');
    }
    if let Some(q) = &r.quantum {
        for (outcome, p) in &q.distribution {
            let _ = writeln!(out, "P({outcome}) = {p:.6}");
        }
    }
    if let Some(e) = &r.spectral_error {
        let _ = writeln!(out, "spectral readout failed: {e}");
    }
    if let Some(v) = r.verdict {
        let _ = writeln!(out, "verdict: {v}");
    }
    match (&r.recovered, r.mode) {
        (Some(f), _) => {
            let _ = writeln!(out, "recovered: f_{f}");
        }
        (None, RunMode::Quantum) => {
            let _ = writeln!(out, "recovered: not determined (global phase)");
        }
        (None, _) => {}
    }
}

fn cmd_run(args: &RunArgs, out: &mut String) -> Result<(), CliError> {
    let cfg = args.config.resolve(None)?;
    let (report, _) = build_report(&cfg)?;
    if args.json {
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Computation(e.to_string()))?;
        out.push_str(&text);
        out.push('\n');
    } else {
        render_report(&report, out);
    }
    verify(&report)
}

fn cmd_tables(args: &TablesArgs, out: &mut String) -> Result<(), CliError> {
    let ids: Vec<TableId> = if args.only.is_empty() {
        TableId::ALL.to_vec()
    } else {
        TableId::ALL
            .into_iter()
            .filter(|id| args.only.contains(id))
            .collect()
    };
    let generated = ids
        .iter()
        .map(|&id| tables::generate(id))
        .collect::<Result<Vec<_>, _>>()?;
    out.push_str(&tables::render(&generated));
    if args.check {
        let golden = match &args.golden {
            Some(path) => fs::read_to_string(path).map_err(io_err(path))?,
            None => tables::GOLDEN_TABLES.to_string(),
        };
        let summary = tables::check(&generated, &golden)?;
        let _ = writeln!(out, "\n{summary}");
    }
    Ok(())
}

fn write_file(
    dir: &Path,
    name: &str,
    written: &mut Vec<PathBuf>,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| io::Write::flush(&mut w))
        .map_err(io_err(&path))?;
    written.push(path);
    Ok(())
}

fn cmd_spectrum(args: &SpectrumArgs, out: &mut String) -> Result<(), CliError> {
    let cfg = args.config.resolve(Some("realistic"))?;
    if !matches!(cfg.mode, RunMode::Ideal | RunMode::Realistic) {
        return Err(CliError::Config {
            field: "mode".into(),
            message: format!("spectrum needs ideal or realistic, got {}", cfg.mode.name()),
        });
    }
    let dir = match &cfg.out {
        Some(d) if !d.as_os_str().is_empty() => d.clone(),
        _ => {
            return Err(CliError::Config {
                field: "out".into(),
                message: "an output directory is required".into(),
            })
        }
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let (report, run) = build_report(&cfg)?;
    let run = run.expect("simulated modes produce a pipeline run");
    let mut written = Vec::new();
    write_file(&dir, "fid.csv", &mut written, |w| run.fid.write_csv(w))?;
    write_file(&dir, "spectrum.csv", &mut written, |w| {
        run.spectrum.write_csv(w)
    })?;
    write_file(&dir, "sequence.txt", &mut written, |w| {
        io::Write::write_all(w, run.sequence.to_text().as_bytes())
    })?;
    if args.basis {
        for b in run_basis_inputs(&run.params, &cfg.pipeline)
            .map_err(|e| CliError::Computation(e.to_string()))?
        {
            let label = b.label();
            write_file(&dir, &format!("basis_{label}_fid.csv"), &mut written, |w| {
                b.fid.write_csv(w)
            })?;
            write_file(
                &dir,
                &format!("basis_{label}_spectrum.csv"),
                &mut written,
                |w| b.spectrum.write_csv(w),
            )?;
        }
    }
    render_report(&report, out);
    for path in &written {
        let _ = writeln!(out, "wrote {}", path.display());
    }
    verify(&report)
}
