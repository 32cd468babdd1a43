//! Pulse sequences: compilation of the black-boxes into pulses, execution
//! over a set of spin species, and a line-oriented text form.
//!
//! Text form, one event per line:
//!
//! ```text
//! SEL <species> <flip_rad> <phase_deg> <duration_s>
//! HARD <flip_rad> <phase_deg> <duration_s>
//! DELAY <duration_s>
//! ACQ
//! ```
//!
//! Species are numbered from 1. Blank lines and lines starting with `#`
//! are ignored when parsing.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use serde::Serialize;

use super::{
    compute_tau, precess_with, rotate, validate_species, Magnetisation, PrecessionSense, SpinError,
    SpinSpecies, HALF_PI,
};
use crate::complexbit::BlackBoxParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PulseEvent {
    /// Rotation of one species only.
    Selective {
        species: usize,
        flip: f64,
        phase_deg: f64,
        duration: f64,
    },
    /// Rotation of every species. Treated as instantaneous; its duration is
    /// carried for the record only.
    Hard {
        flip: f64,
        phase_deg: f64,
        duration: f64,
    },
    Delay {
        duration: f64,
    },
    Acquire,
}

impl PulseEvent {
    fn validate(&self) -> Result<(), SpinError> {
        let check_flip = |flip: f64| {
            if flip > 0.0 && flip <= TAU {
                Ok(())
            } else {
                Err(SpinError::InvalidEvent(format!(
                    "flip {flip} outside (0, 2π]"
                )))
            }
        };
        let check_duration = |d: f64| {
            if d >= 0.0 && d.is_finite() {
                Ok(())
            } else {
                Err(SpinError::InvalidEvent(format!("duration {d} is negative")))
            }
        };
        match *self {
            PulseEvent::Selective {
                species,
                flip,
                phase_deg,
                duration,
            } => {
                if species == 0 {
                    return Err(SpinError::InvalidEvent(
                        "species are numbered from 1".into(),
                    ));
                }
                check_flip(flip)?;
                check_duration(duration)?;
                finite(phase_deg)
            }
            PulseEvent::Hard {
                flip,
                phase_deg,
                duration,
            } => {
                check_flip(flip)?;
                check_duration(duration)?;
                finite(phase_deg)
            }
            PulseEvent::Delay { duration } => check_duration(duration),
            PulseEvent::Acquire => Ok(()),
        }
    }
}

fn finite(x: f64) -> Result<(), SpinError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(SpinError::InvalidEvent(format!("{x} is not finite")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every duration is taken as zero.
    Ideal,
    /// Selective pulses and delays let off-target species precess.
    Realistic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseSequence {
    events: Vec<PulseEvent>,
    mode: Mode,
}

impl PulseSequence {
    /// Validates every event and that `Acquire`, if present, comes last.
    pub fn new(events: Vec<PulseEvent>, mode: Mode) -> Result<Self, SpinError> {
        for (i, ev) in events.iter().enumerate() {
            ev.validate()?;
            if matches!(ev, PulseEvent::Acquire) && i + 1 != events.len() {
                return Err(SpinError::InvalidEvent("ACQ must be the last event".into()));
            }
        }
        Ok(Self { events, mode })
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Highest species number a selective pulse refers to.
    pub fn species_needed(&self) -> usize {
        self.events
            .iter()
            .filter_map(|e| match e {
                PulseEvent::Selective { species, .. } => Some(*species),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            match *ev {
                PulseEvent::Selective {
                    species,
                    flip,
                    phase_deg,
                    duration,
                } => writeln!(out, "SEL {species} {flip} {phase_deg} {duration}"),
                PulseEvent::Hard {
                    flip,
                    phase_deg,
                    duration,
                } => writeln!(out, "HARD {flip} {phase_deg} {duration}"),
                PulseEvent::Delay { duration } => writeln!(out, "DELAY {duration}"),
                PulseEvent::Acquire => writeln!(out, "ACQ"),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn from_text(text: &str, mode: Mode) -> Result<Self, SpinError> {
        let mut events = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| SpinError::Parse {
                line: idx + 1,
                reason,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<f64, SpinError> {
                fields
                    .get(i)
                    .ok_or_else(|| err(format!("missing field {i}")))?
                    .parse::<f64>()
                    .map_err(|e| err(format!("field {i}: {e}")))
            };
            let arity = |n: usize| -> Result<(), SpinError> {
                if fields.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("expected {} fields, got {}", n, fields.len())))
                }
            };
            let ev = match fields[0] {
                "SEL" => {
                    arity(5)?;
                    let species = fields[1]
                        .parse::<usize>()
                        .map_err(|e| err(format!("species: {e}")))?;
                    PulseEvent::Selective {
                        species,
                        flip: num(2)?,
                        phase_deg: num(3)?,
                        duration: num(4)?,
                    }
                }
                "HARD" => {
                    arity(4)?;
                    PulseEvent::Hard {
                        flip: num(1)?,
                        phase_deg: num(2)?,
                        duration: num(3)?,
                    }
                }
                "DELAY" => {
                    arity(2)?;
                    PulseEvent::Delay { duration: num(1)? }
                }
                "ACQ" => {
                    arity(1)?;
                    PulseEvent::Acquire
                }
                other => return Err(err(format!("unknown event {other:?}"))),
            };
            ev.validate().map_err(|e| err(e.to_string()))?;
            events.push(ev);
        }
        Self::new(events, mode)
    }
}

/// Durations of the selective pulses used in realistic mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseTimings {
    pub selective_90_s: f64,
    pub selective_180_s: f64,
    pub hard_s: f64,
}

impl Default for PulseTimings {
    fn default() -> Self {
        Self {
            selective_90_s: 2.5e-3,
            selective_180_s: 5.0e-3,
            hard_s: 10e-6,
        }
    }
}

/// Handling of the pre-acquisition delay when `C = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauZeroPolicy {
    /// Wait one full revolution of species 2, keeping acquisition timing
    /// uniform across black-boxes.
    #[default]
    FullRevolution,
    /// Acquire immediately.
    NoDelay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    pub species: Vec<SpinSpecies>,
    pub timings: PulseTimings,
    pub tau_zero: TauZeroPolicy,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            species: SpinSpecies::default_pair(),
            timings: PulseTimings::default(),
            tau_zero: TauZeroPolicy::default(),
        }
    }
}

fn selective(species: usize, flip: f64, phase_deg: f64, duration: f64) -> PulseEvent {
    PulseEvent::Selective {
        species,
        flip,
        phase_deg,
        duration,
    }
}

/// The conditional π pulses `(π)_45^A (π)_-45^B` on species 1 and, for two
/// bits, `(π)_-45^C` on species 2.
fn conditional_pulses(p: &BlackBoxParams, duration: f64) -> Vec<PulseEvent> {
    let (a, b, c) = match *p {
        BlackBoxParams::One { a, b } => (a, b, None),
        BlackBoxParams::Two { a, b, c } => (a, b, Some(c)),
    };
    let mut events = Vec::new();
    if a {
        events.push(selective(1, PI, 45.0, duration));
    }
    if b {
        events.push(selective(1, PI, -45.0, duration));
    }
    if c == Some(true) {
        events.push(selective(2, PI, -45.0, duration));
    }
    events
}

/// Only the black-box pulses, as ideal rotations, for feeding arbitrary
/// inputs already placed in the xy-plane.
pub fn blackbox_pulses(p: &BlackBoxParams) -> PulseSequence {
    let mut events = conditional_pulses(p, 0.0);
    events.push(PulseEvent::Acquire);
    PulseSequence::new(events, Mode::Ideal).expect("compiled events are valid")
}

/// The full algorithm from equilibrium: preparation `(π/2)_y` of each
/// species, the black-box, acquisition.
///
/// In realistic mode the species-2 black-box pulse is replaced by letting
/// species 2 precess for `τ(C)` after its preparation pulse, which lands it
/// on the same final direction as the ideal sequence provided species 1 is
/// on resonance.
pub fn compile_blackbox(
    p: &BlackBoxParams,
    mode: Mode,
    opts: &CompileOptions,
) -> Result<PulseSequence, SpinError> {
    let n = p.arity();
    let t = match mode {
        Mode::Ideal => PulseTimings {
            selective_90_s: 0.0,
            selective_180_s: 0.0,
            hard_s: 0.0,
        },
        Mode::Realistic => {
            if opts.species.len() < n {
                return Err(SpinError::MissingSpecies {
                    needed: n,
                    configured: opts.species.len(),
                });
            }
            validate_species(&opts.species)?;
            opts.timings
        }
    };

    let mut events = vec![selective(1, HALF_PI, 90.0, t.selective_90_s)];
    let (first, second): (Vec<_>, Vec<_>) = conditional_pulses(p, t.selective_180_s)
        .into_iter()
        .partition(|e| is_species(e, 1));
    events.extend(first);
    match (n, mode) {
        (1, _) => {}
        (2, Mode::Ideal) => {
            events.push(selective(2, HALF_PI, 90.0, 0.0));
            events.extend(second);
        }
        (2, Mode::Realistic) => {
            events.push(selective(2, HALF_PI, 90.0, t.selective_90_s));
            let c = matches!(p, BlackBoxParams::Two { c: true, .. });
            let delta = opts.species[1].offset_hz - opts.species[0].offset_hz;
            if c || opts.tau_zero == TauZeroPolicy::FullRevolution {
                events.push(PulseEvent::Delay {
                    duration: compute_tau(delta, c)?,
                });
            }
        }
        (other, _) => {
            return Err(SpinError::ArityMismatch(format!(
                "no pulse sequence for n = {other}"
            )))
        }
    }
    events.push(PulseEvent::Acquire);
    PulseSequence::new(events, mode)
}

fn is_species(e: &PulseEvent, target: usize) -> bool {
    matches!(e, PulseEvent::Selective { species, .. } if *species == target)
}

/// Two-bit sequence that prepares both species with one hard `(π/2)_y`
/// pulse instead of selective ones and applies no phase correction to
/// species 2, which therefore dephases during the species-1 pulses.
pub fn compile_hard_prep_uncorrected(
    p: &BlackBoxParams,
    opts: &CompileOptions,
) -> Result<PulseSequence, SpinError> {
    let BlackBoxParams::Two { c, .. } = *p else {
        return Err(SpinError::ArityMismatch(
            "hard-pulse preparation is a two-species sequence".into(),
        ));
    };
    if opts.species.len() < 2 {
        return Err(SpinError::MissingSpecies {
            needed: 2,
            configured: opts.species.len(),
        });
    }
    validate_species(&opts.species)?;
    let delta = opts.species[1].offset_hz - opts.species[0].offset_hz;
    let mut events = vec![PulseEvent::Hard {
        flip: HALF_PI,
        phase_deg: 90.0,
        duration: opts.timings.hard_s,
    }];
    events.extend(
        conditional_pulses(p, opts.timings.selective_180_s)
            .into_iter()
            .filter(|e| is_species(e, 1)),
    );
    events.push(PulseEvent::Delay {
        duration: compute_tau(delta, c)?,
    });
    events.push(PulseEvent::Acquire);
    PulseSequence::new(events, Mode::Realistic)
}

/// Executes sequences over a fixed set of species.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    pub species: Vec<SpinSpecies>,
    pub sense: PrecessionSense,
}

impl Simulator {
    pub fn new(species: Vec<SpinSpecies>) -> Self {
        Self {
            species,
            sense: PrecessionSense::default(),
        }
    }

    pub fn with_sense(mut self, sense: PrecessionSense) -> Self {
        self.sense = sense;
        self
    }

    /// Every species at thermal equilibrium, scaled to `√2` so that the
    /// `(π/2)_y` preparation yields exactly the complex bit `(1,1)`.
    pub fn equilibrium(&self) -> Vec<Magnetisation> {
        vec![Magnetisation::IZ.scale(std::f64::consts::SQRT_2); self.species.len()]
    }

    fn evolve(&self, state: &mut [Magnetisation], duration: f64, skip: Option<usize>) {
        for (i, (m, sp)) in state.iter_mut().zip(&self.species).enumerate() {
            if Some(i) != skip {
                *m = precess_with(m, sp.offset_hz, duration, self.sense);
            }
        }
    }

    /// Folds the events over `initial`, returning the state when `Acquire`
    /// is reached (or at the end of the events).
    pub fn run(
        &self,
        initial: &[Magnetisation],
        seq: &PulseSequence,
    ) -> Result<Vec<Magnetisation>, SpinError> {
        if initial.len() != self.species.len() {
            return Err(SpinError::InitialStateMismatch {
                expected: self.species.len(),
                found: initial.len(),
            });
        }
        let realistic = seq.mode() == Mode::Realistic;
        let mut state = initial.to_vec();
        for ev in seq.events() {
            match *ev {
                PulseEvent::Selective {
                    species,
                    flip,
                    phase_deg,
                    duration,
                } => {
                    let idx = species
                        .checked_sub(1)
                        .filter(|&i| i < state.len())
                        .ok_or(SpinError::UnknownSpecies(species))?;
                    if realistic {
                        self.evolve(&mut state, duration, Some(idx));
                    }
                    state[idx] = rotate(&state[idx], phase_deg, flip);
                }
                PulseEvent::Hard {
                    flip, phase_deg, ..
                } => {
                    for m in state.iter_mut() {
                        *m = rotate(m, phase_deg, flip);
                    }
                }
                PulseEvent::Delay { duration } => {
                    if realistic {
                        self.evolve(&mut state, duration, None);
                    }
                }
                PulseEvent::Acquire => break,
            }
        }
        Ok(state)
    }
}

/// Runs `seq` with the default precession sense.
pub fn run_sequence(
    species: &[SpinSpecies],
    initial: &[Magnetisation],
    seq: &PulseSequence,
) -> Result<Vec<Magnetisation>, SpinError> {
    Simulator::new(species.to_vec()).run(initial, seq)
}
