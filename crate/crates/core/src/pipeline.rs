//! End-to-end runs: compile the black-box, simulate the spins, synthesize
//! the FID, transform, and read the function back from the peak phases.

use thiserror::Error;

use crate::complexbit::{self, BlackBoxParams, ComplexBit, ComplexBitError, DJResult};
use crate::signal::{
    self, classify_result, read_phase, spectrum, Acquisition, Fid, PhaseReading, SignalError,
    Spectrum, DEFAULT_TOLERANCE_DEG,
};
use crate::spinsim::{
    blackbox_pulses, compile_blackbox, embed, readout, validate_species, CompileOptions,
    Magnetisation, Mode, PrecessionSense, PulseSequence, PulseTimings, Simulator, SpinError,
    SpinSpecies, TauZeroPolicy,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    ComplexBit(#[from] ComplexBitError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub species: Vec<SpinSpecies>,
    pub timings: PulseTimings,
    pub tau_zero: TauZeroPolicy,
    pub acquisition: Acquisition,
    pub tolerance_deg: f64,
    /// Sense of precession used by the simulator. The FID is always
    /// synthesized with the default sense.
    pub simulation_sense: PrecessionSense,
    /// Exponential line broadening applied before the transform, Hz.
    pub apodize_hz: Option<f64>,
    /// Zero-fill the FID to this many points before the transform.
    pub zero_fill: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            species: SpinSpecies::default_pair(),
            timings: PulseTimings::default(),
            tau_zero: TauZeroPolicy::default(),
            acquisition: Acquisition::default(),
            tolerance_deg: DEFAULT_TOLERANCE_DEG,
            simulation_sense: PrecessionSense::default(),
            apodize_hz: None,
            zero_fill: None,
        }
    }
}

impl PipelineConfig {
    pub fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            species: self.species.clone(),
            timings: self.timings,
            tau_zero: self.tau_zero,
        }
    }

    fn simulator(&self) -> Simulator {
        Simulator::new(self.species.clone()).with_sense(self.simulation_sense)
    }

    fn process(&self, fid: &Fid) -> Spectrum {
        let mut fid = fid.clone();
        if let Some(lb) = self.apodize_hz {
            fid = fid.apodize(lb);
        }
        if let Some(total) = self.zero_fill {
            fid = fid.zero_fill(total);
        }
        spectrum(&fid)
    }

    fn check_species(&self, n: usize) -> Result<(), PipelineError> {
        if self.species.len() < n {
            return Err(SpinError::MissingSpecies {
                needed: n,
                configured: self.species.len(),
            }
            .into());
        }
        validate_species(&self.species)?;
        Ok(())
    }
}

/// Everything one run produces.
#[derive(Debug)]
pub struct PipelineRun {
    pub params: BlackBoxParams,
    pub mode: Mode,
    pub sequence: PulseSequence,
    /// Magnetisation of every configured species at acquisition start.
    pub final_state: Vec<Magnetisation>,
    pub fid: Fid,
    pub spectrum: Spectrum,
    /// Readings of the first `n` species; empty if a line could not be
    /// located.
    pub readings: Vec<PhaseReading>,
    /// Result read directly off the final magnetisation vectors.
    pub direct: Result<DJResult, PipelineError>,
    /// Result read from the spectrum.
    pub spectral: Result<DJResult, SignalError>,
}

/// Reads the first `n` species' final vectors as complex bits.
pub fn direct_readout(final_state: &[Magnetisation], n: usize) -> Result<DJResult, PipelineError> {
    let outputs = final_state
        .iter()
        .take(n)
        .map(readout)
        .collect::<Result<Vec<ComplexBit>, _>>()?;
    Ok(complexbit::recover(&outputs)?)
}

/// Reads every one of the first `n` species from `sp`.
pub fn read_species(
    sp: &Spectrum,
    species: &[SpinSpecies],
    n: usize,
    tolerance_deg: f64,
) -> Result<Vec<PhaseReading>, SignalError> {
    species
        .iter()
        .take(n)
        .map(|s| read_phase(sp, s, tolerance_deg))
        .collect()
}

pub fn run_pipeline(
    p: &BlackBoxParams,
    mode: Mode,
    cfg: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    let n = p.arity();
    cfg.check_species(n)?;
    let sequence = compile_blackbox(p, mode, &cfg.compile_options())?;
    let sim = cfg.simulator();
    let final_state = sim.run(&sim.equilibrium(), &sequence)?;
    let fid = signal::synthesize_fid(&cfg.species, &final_state, &cfg.acquisition)?;
    let spectrum = cfg.process(&fid);
    let (readings, spectral) = match read_species(&spectrum, &cfg.species, n, cfg.tolerance_deg) {
        Ok(r) => {
            let s = classify_result(&r, n);
            (r, s)
        }
        Err(e) => (Vec::new(), Err(e)),
    };
    let direct = direct_readout(&final_state, n);
    Ok(PipelineRun {
        params: *p,
        mode,
        sequence,
        final_state,
        fid,
        spectrum,
        readings,
        direct,
        spectral,
    })
}

/// One row of the basis-input experiments: the black-box applied (as ideal
/// pulses) to basis bits placed in the xy-plane.
#[derive(Debug)]
pub struct BasisRun {
    pub inputs: Vec<ComplexBit>,
    pub outputs: Vec<ComplexBit>,
    pub final_state: Vec<Magnetisation>,
    pub fid: Fid,
    pub spectrum: Spectrum,
}

impl BasisRun {
    /// `10` for input `(1,0)`, `01` for `(0,1)`, joined with `-` across
    /// species.
    pub fn label(&self) -> String {
        self.inputs
            .iter()
            .map(|z| format!("{}{}", z.a as i64, z.b as i64))
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// All `2^n` combinations of basis bits, species 1 varying slowest.
pub fn basis_inputs(n: usize) -> Vec<Vec<ComplexBit>> {
    (0..1usize << n)
        .map(|k| {
            (0..n)
                .map(|i| ComplexBit::basis((k >> (n - 1 - i)) & 1 == 1))
                .collect()
        })
        .collect()
}

pub fn run_basis_inputs(
    p: &BlackBoxParams,
    cfg: &PipelineConfig,
) -> Result<Vec<BasisRun>, PipelineError> {
    let n = p.arity();
    cfg.check_species(n)?;
    let seq = blackbox_pulses(p);
    let sim = cfg.simulator();
    basis_inputs(n)
        .into_iter()
        .map(|inputs| {
            let mut initial = sim.equilibrium();
            for (slot, z) in initial.iter_mut().zip(&inputs) {
                *slot = embed(*z)?;
            }
            let final_state = sim.run(&initial, &seq)?;
            let outputs = final_state
                .iter()
                .take(n)
                .map(readout)
                .collect::<Result<Vec<_>, _>>()?;
            let fid = signal::synthesize_fid(&cfg.species, &final_state, &cfg.acquisition)?;
            let spectrum = cfg.process(&fid);
            Ok(BasisRun {
                inputs,
                outputs,
                final_state,
                fid,
                spectrum,
            })
        })
        .collect()
}
