//! Free-induction decay synthesis, spectra and phase readout.
//!
//! The receiver sits along x with quadrature detection, so a species with
//! transverse magnetisation `mx + i·my` contributes
//! `(mx + i·my) · exp(i·2π·Δν·t) · exp(−t/T2)`; the rotation sense matches
//! [`crate::spinsim::precess`]. On-resonance `I_x` gives a positive
//! absorptive line, `I_-y` a line at −90°.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

use crate::complexbit::{self, ComplexBit, ComplexBitError, DJResult};
use crate::spinsim::{Magnetisation, PrecessionSense, SpinSpecies};

/// Default half-width of the quadrant windows, degrees.
pub const DEFAULT_TOLERANCE_DEG: f64 = 10.0;

/// A peak must exceed this multiple of the median bin magnitude.
const PEAK_TO_MEDIAN: f64 = 5.0;

/// Bins searched either side of the expected peak.
const SEARCH_HALF_WIDTH: usize = 2;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("species {species} at {offset_hz} Hz lies outside the Nyquist band ±{limit_hz} Hz")]
    NyquistViolation {
        species: String,
        offset_hz: f64,
        limit_hz: f64,
    },
    #[error("no peak found for species {species}: {reason}")]
    PeakNotFound { species: String, reason: String },
    #[error("phase {phase_deg:.2}° of species {species} is outside every quadrant window")]
    InconsistentReading { species: String, phase_deg: f64 },
    #[error("expected {expected} readings, got {found}")]
    ReadingCount { expected: usize, found: usize },
    #[error("invalid acquisition: {0}")]
    InvalidAcquisition(String),
    #[error(transparent)]
    Recovery(#[from] ComplexBitError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Acquisition {
    pub dwell_s: f64,
    pub npoints: usize,
}

impl Default for Acquisition {
    /// 4000 points at 100 µs: a 10 kHz spectral width with 2.5 Hz bins.
    fn default() -> Self {
        Self {
            dwell_s: 100e-6,
            npoints: 4000,
        }
    }
}

impl Acquisition {
    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.dwell_s > 0.0 && self.dwell_s.is_finite()) {
            return Err(SignalError::InvalidAcquisition(format!(
                "dwell must be positive, got {}",
                self.dwell_s
            )));
        }
        if self.npoints < 2 {
            return Err(SignalError::InvalidAcquisition(format!(
                "need at least 2 points, got {}",
                self.npoints
            )));
        }
        Ok(())
    }

    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.dwell_s
    }

    pub fn bin_width_hz(&self) -> f64 {
        1.0 / (self.npoints as f64 * self.dwell_s)
    }
}

/// Complex time-domain signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Fid {
    pub samples: Vec<Complex64>,
    pub dwell_s: f64,
}

impl Fid {
    pub fn npoints(&self) -> usize {
        self.samples.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dwell_s
    }

    /// Multiplies by `exp(−π·lb·t)`, a Lorentzian broadening of `lb_hz`.
    pub fn apodize(&self, lb_hz: f64) -> Fid {
        Fid {
            samples: self
                .samples
                .iter()
                .enumerate()
                .map(|(k, s)| s * (-PI * lb_hz * self.time(k)).exp())
                .collect(),
            dwell_s: self.dwell_s,
        }
    }

    /// Pads with zeros up to `total` points (no-op if already longer).
    pub fn zero_fill(&self, total: usize) -> Fid {
        let mut samples = self.samples.clone();
        if total > samples.len() {
            samples.resize(total, Complex64::new(0.0, 0.0));
        }
        Fid {
            samples,
            dwell_s: self.dwell_s,
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// `t_s,real,imag`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_s,real,imag")?;
        for (k, s) in self.samples.iter().enumerate() {
            writeln!(w, "{:.9e},{:.10e},{:.10e}", self.time(k), s.re, s.im)?;
        }
        Ok(())
    }
}

pub fn synthesize_fid(
    species: &[SpinSpecies],
    m: &[Magnetisation],
    acq: &Acquisition,
) -> Result<Fid, SignalError> {
    synthesize_fid_with(species, m, acq, PrecessionSense::default())
}

pub fn synthesize_fid_with(
    species: &[SpinSpecies],
    m: &[Magnetisation],
    acq: &Acquisition,
    sense: PrecessionSense,
) -> Result<Fid, SignalError> {
    acq.validate()?;
    if species.len() != m.len() {
        return Err(SignalError::InvalidAcquisition(format!(
            "{} species but {} magnetisation vectors",
            species.len(),
            m.len()
        )));
    }
    let limit = acq.nyquist_hz();
    for sp in species {
        if sp.offset_hz.abs() >= limit {
            return Err(SignalError::NyquistViolation {
                species: sp.id.clone(),
                offset_hz: sp.offset_hz,
                limit_hz: limit,
            });
        }
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); acq.npoints];
    for (sp, mag) in species.iter().zip(m) {
        let amplitude = Complex64::new(mag.mx, mag.my);
        if amplitude.norm() == 0.0 {
            continue;
        }
        let omega = sense.sign() * TAU * sp.offset_hz;
        for (k, s) in samples.iter_mut().enumerate() {
            let t = k as f64 * acq.dwell_s;
            *s += amplitude * Complex64::from_polar((-t / sp.t2_s).exp(), omega * t);
        }
    }
    Ok(Fid {
        samples,
        dwell_s: acq.dwell_s,
    })
}

/// Frequency-domain signal with bins in ascending frequency order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub freq_axis: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bin_width_hz(&self) -> f64 {
        if self.freq_axis.len() < 2 {
            0.0
        } else {
            self.freq_axis[1] - self.freq_axis[0]
        }
    }

    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|b| b.norm_sqr()).sum()
    }

    /// Index of the bin whose centre is closest to `freq_hz`.
    pub fn nearest_bin(&self, freq_hz: f64) -> usize {
        let idx = ((freq_hz - self.freq_axis[0]) / self.bin_width_hz()).round();
        idx.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    /// `freq_hz,real,imag,magnitude,phase_deg`, ascending frequency.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "freq_hz,real,imag,magnitude,phase_deg")?;
        for (f, b) in self.freq_axis.iter().zip(&self.bins) {
            writeln!(
                w,
                "{:.6},{:.10e},{:.10e},{:.10e},{:.6}",
                f,
                b.re,
                b.im,
                b.norm(),
                phase_deg(*b)
            )?;
        }
        Ok(())
    }
}

fn phase_deg(z: Complex64) -> f64 {
    crate::spinsim::wrap_deg(z.arg().to_degrees())
}

/// Unitary DFT (`exp(−2πi·km/N) / √N`), so the spectral energy equals the
/// FID energy. A line at `+Δν` in the FID lands at `+Δν` on the axis.
pub fn spectrum(fid: &Fid) -> Spectrum {
    let n = fid.npoints();
    if n == 0 {
        return Spectrum {
            bins: vec![],
            freq_axis: vec![],
        };
    }
    let mut buf = fid.samples.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    // index of the most negative frequency
    let start = n.div_ceil(2);
    let width = 1.0 / (n as f64 * fid.dwell_s);
    let bins = (0..n).map(|j| buf[(start + j) % n] * scale).collect();
    let freq_axis = (0..n)
        .map(|j| (j as f64 - (n - start) as f64) * width)
        .collect();
    Spectrum { bins, freq_axis }
}

/// The four readable transverse directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quadrant {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl Quadrant {
    /// Quadrant whose centre (0°, 180°, 90°, −90°) lies within
    /// `tolerance_deg` of `phase_deg`.
    pub fn from_phase(phase_deg: f64, tolerance_deg: f64) -> Option<Quadrant> {
        [
            (0.0, Quadrant::PlusX),
            (180.0, Quadrant::MinusX),
            (90.0, Quadrant::PlusY),
            (-90.0, Quadrant::MinusY),
        ]
        .into_iter()
        .find(|(centre, _)| crate::spinsim::wrap_deg(phase_deg - centre).abs() <= tolerance_deg)
        .map(|(_, q)| q)
    }

    /// Black-box output whose embedding points this way.
    pub fn to_complex_bit(self) -> ComplexBit {
        match self {
            Quadrant::PlusX => ComplexBit::new(1.0, 1.0),
            Quadrant::MinusX => ComplexBit::new(-1.0, -1.0),
            Quadrant::PlusY => ComplexBit::new(-1.0, 1.0),
            Quadrant::MinusY => ComplexBit::new(1.0, -1.0),
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quadrant::PlusX => "+x",
            Quadrant::MinusX => "-x",
            Quadrant::PlusY => "+y",
            Quadrant::MinusY => "-y",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReading {
    pub species: String,
    /// Phase of the peak bin, degrees in (−180, 180].
    pub phase_deg: f64,
    /// `None` when the phase is outside every quadrant window.
    pub quadrant: Option<Quadrant>,
    pub peak_bin: usize,
    pub peak_freq_hz: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Finds the species' line near its offset and classifies its phase.
pub fn read_phase(
    sp: &Spectrum,
    species: &SpinSpecies,
    tolerance_deg: f64,
) -> Result<PhaseReading, SignalError> {
    let not_found = |reason: String| SignalError::PeakNotFound {
        species: species.id.clone(),
        reason,
    };
    if sp.len() < 2 {
        return Err(not_found("spectrum has fewer than two bins".into()));
    }
    let width = sp.bin_width_hz();
    let lo = sp.freq_axis[0] - 0.5 * width;
    let hi = sp.freq_axis[sp.len() - 1] + 0.5 * width;
    if species.offset_hz < lo || species.offset_hz > hi {
        return Err(not_found(format!(
            "offset {} Hz outside spectral width [{lo}, {hi}] Hz",
            species.offset_hz
        )));
    }

    let centre = sp.nearest_bin(species.offset_hz);
    let first = centre.saturating_sub(SEARCH_HALF_WIDTH);
    let last = (centre + SEARCH_HALF_WIDTH).min(sp.len() - 1);
    let peak_bin = (first..=last)
        .max_by(|&a, &b| sp.bins[a].norm().total_cmp(&sp.bins[b].norm()))
        .expect("search window is non-empty");
    let peak = sp.bins[peak_bin];

    let floor = median(sp.bins.iter().map(|b| b.norm()).collect());
    if peak.norm() <= PEAK_TO_MEDIAN * floor || peak.norm() == 0.0 {
        return Err(not_found(format!(
            "peak magnitude {:.3e} does not exceed {PEAK_TO_MEDIAN}× median {:.3e}",
            peak.norm(),
            floor
        )));
    }
    let peak_freq_hz = sp.freq_axis[peak_bin];
    if (peak_freq_hz - species.offset_hz).abs() > width {
        return Err(not_found(format!(
            "strongest bin at {peak_freq_hz} Hz is more than one bin from {} Hz",
            species.offset_hz
        )));
    }

    let phase = phase_deg(peak);
    Ok(PhaseReading {
        species: species.id.clone(),
        phase_deg: phase,
        quadrant: Quadrant::from_phase(phase, tolerance_deg),
        peak_bin,
        peak_freq_hz,
    })
}

/// Turns per-species quadrants back into black-box outputs and recovers
/// the function from them.
pub fn classify_result(readings: &[PhaseReading], n: usize) -> Result<DJResult, SignalError> {
    if readings.len() != n {
        return Err(SignalError::ReadingCount {
            expected: n,
            found: readings.len(),
        });
    }
    let outputs = readings
        .iter()
        .map(|r| {
            r.quadrant.map(Quadrant::to_complex_bit).ok_or_else(|| {
                SignalError::InconsistentReading {
                    species: r.species.clone(),
                    phase_deg: r.phase_deg,
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(complexbit::recover(&outputs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexbit::{TruthTable, Verdict};

    fn on_resonance() -> SpinSpecies {
        SpinSpecies::new("CHCl3", 0.0, 0.5).unwrap()
    }

    fn reading(q: Option<Quadrant>) -> PhaseReading {
        PhaseReading {
            species: "s".into(),
            phase_deg: 0.0,
            quadrant: q,
            peak_bin: 0,
            peak_freq_hz: 0.0,
        }
    }

    #[test]
    fn fid_of_ix_is_positive_real() {
        let fid = synthesize_fid(
            &[on_resonance()],
            &[Magnetisation::IX],
            &Acquisition::default(),
        )
        .unwrap();
        assert_eq!(fid.samples[0], Complex64::new(1.0, 0.0));
        for w in fid.samples.windows(2) {
            assert!(w[1].im.abs() < 1e-15 && w[1].re > 0.0 && w[1].re < w[0].re);
        }
    }

    #[test]
    fn fid_of_minus_y_is_negative_imaginary() {
        let fid = synthesize_fid(
            &[on_resonance()],
            &[Magnetisation::new(0.0, -1.0, 0.0)],
            &Acquisition::default(),
        )
        .unwrap();
        for s in &fid.samples {
            assert!(s.re.abs() < 1e-15 && s.im < 0.0);
        }
    }

    #[test]
    fn nyquist_violation() {
        let sp = SpinSpecies::new("far", 6000.0, 0.5).unwrap();
        assert!(matches!(
            synthesize_fid(&[sp], &[Magnetisation::IX], &Acquisition::default()),
            Err(SignalError::NyquistViolation { .. })
        ));
    }

    #[test]
    fn frequency_axis_is_centred() {
        for n in [4usize, 5, 8] {
            let fid = Fid {
                samples: vec![Complex64::new(1.0, 0.0); n],
                dwell_s: 0.25,
            };
            let sp = spectrum(&fid);
            let width = 1.0 / (n as f64 * 0.25);
            assert!(sp
                .freq_axis
                .windows(2)
                .all(|w| (w[1] - w[0] - width).abs() < 1e-12));
            let zero = sp.freq_axis.iter().position(|&f| f.abs() < 1e-12).unwrap();
            // constant signal puts everything in the 0 Hz bin
            assert!((sp.bins[zero].norm() - (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_of_ix_peaks_at_zero_with_zero_phase() {
        let fid = synthesize_fid(
            &[on_resonance()],
            &[Magnetisation::IX],
            &Acquisition::default(),
        )
        .unwrap();
        let sp = spectrum(&fid);
        let r = read_phase(&sp, &on_resonance(), DEFAULT_TOLERANCE_DEG).unwrap();
        assert_eq!(r.peak_freq_hz, 0.0);
        assert!(r.phase_deg.abs() < 1e-9);
        assert_eq!(r.quadrant, Some(Quadrant::PlusX));
    }

    #[test]
    fn zero_fid_gives_zero_spectrum_and_no_peak() {
        let fid = Fid {
            samples: vec![Complex64::new(0.0, 0.0); 64],
            dwell_s: 1e-4,
        };
        let sp = spectrum(&fid);
        assert!(sp.bins.iter().all(|b| b.norm() == 0.0));
        assert!(matches!(
            read_phase(&sp, &on_resonance(), 10.0),
            Err(SignalError::PeakNotFound { .. })
        ));
    }

    #[test]
    fn minus_y_reads_minus_y() {
        let fid = synthesize_fid(
            &[on_resonance()],
            &[Magnetisation::new(0.0, -1.0, 0.0)],
            &Acquisition::default(),
        )
        .unwrap();
        let r = read_phase(&spectrum(&fid), &on_resonance(), 10.0).unwrap();
        assert_eq!(r.quadrant, Some(Quadrant::MinusY));
        assert!((r.phase_deg + 90.0).abs() < 1e-9);
    }

    #[test]
    fn diagonal_state_is_unclassified() {
        let fid = synthesize_fid(
            &[on_resonance()],
            &[Magnetisation::in_plane(45.0, 1.0)],
            &Acquisition::default(),
        )
        .unwrap();
        let r = read_phase(&spectrum(&fid), &on_resonance(), 10.0).unwrap();
        assert_eq!(r.quadrant, None);
        assert!((r.phase_deg - 45.0).abs() < 1.0);
    }

    #[test]
    fn off_resonance_peak_is_found() {
        let sp2 = SpinSpecies::new("H2O", 1500.0, 0.5).unwrap();
        let species = [on_resonance(), sp2.clone()];
        let m = [Magnetisation::IX, Magnetisation::new(0.0, -1.0, 0.0)];
        let s = spectrum(&synthesize_fid(&species, &m, &Acquisition::default()).unwrap());
        let r = read_phase(&s, &sp2, 10.0).unwrap();
        assert_eq!(r.peak_freq_hz, 1500.0);
        assert_eq!(r.quadrant, Some(Quadrant::MinusY));
    }

    #[test]
    fn quadrant_windows() {
        assert_eq!(Quadrant::from_phase(179.0, 10.0), Some(Quadrant::MinusX));
        assert_eq!(Quadrant::from_phase(-175.0, 10.0), Some(Quadrant::MinusX));
        assert_eq!(Quadrant::from_phase(-85.0, 10.0), Some(Quadrant::MinusY));
        assert_eq!(Quadrant::from_phase(30.0, 10.0), None);
    }

    #[test]
    fn classify_examples() {
        let r = classify_result(&[reading(Some(Quadrant::PlusX))], 1).unwrap();
        assert_eq!(r.verdict, Verdict::Constant);
        assert_eq!(r.function, TruthTable::from_bits("00").unwrap());

        let r = classify_result(&[reading(Some(Quadrant::MinusY))], 1).unwrap();
        assert_eq!(r.verdict, Verdict::Balanced);
        assert_eq!(r.function, TruthTable::from_bits("01").unwrap());

        let r = classify_result(
            &[
                reading(Some(Quadrant::MinusX)),
                reading(Some(Quadrant::MinusY)),
            ],
            2,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Balanced);
        assert_eq!(r.function, TruthTable::from_bits("1010").unwrap());
    }

    #[test]
    fn classify_errors() {
        assert!(matches!(
            classify_result(&[reading(None)], 1),
            Err(SignalError::InconsistentReading { .. })
        ));
        assert!(matches!(
            classify_result(&[reading(Some(Quadrant::PlusX))], 2),
            Err(SignalError::ReadingCount {
                expected: 2,
                found: 1
            })
        ));
        // species 2 can never end up along -x
        assert!(matches!(
            classify_result(
                &[
                    reading(Some(Quadrant::PlusX)),
                    reading(Some(Quadrant::MinusX))
                ],
                2
            ),
            Err(SignalError::Recovery(_))
        ));
    }

    #[test]
    fn csv_headers() {
        let fid = Fid {
            samples: vec![Complex64::new(1.0, 0.0); 4],
            dwell_s: 1e-3,
        };
        let mut buf = Vec::new();
        fid.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t_s,real,imag\n"));
        let mut buf = Vec::new();
        spectrum(&fid).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("freq_hz,real,imag,magnitude,phase_deg\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn apodize_and_zero_fill() {
        let fid = Fid {
            samples: vec![Complex64::new(1.0, 0.0); 4],
            dwell_s: 1e-3,
        };
        assert_eq!(fid.zero_fill(8).npoints(), 8);
        assert_eq!(fid.zero_fill(2).npoints(), 4);
        let a = fid.apodize(10.0);
        assert_eq!(a.samples[0], Complex64::new(1.0, 0.0));
        assert!((a.samples[1].re - (-PI * 10.0 * 1e-3f64).exp()).abs() < 1e-15);
    }
}
