//! Rotating-frame magnetisation vectors for uncoupled spin species.
//!
//! Complex bits live in the xy-plane: `(1, 0)` sits at −45°, `(0, 1)` at
//! +45°, and sums of bits add as vectors. Pulses are rotations about
//! in-plane axes and free evolution is a rotation about z at each species'
//! resonance offset.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::complexbit::ComplexBit;

pub mod sequence;

pub use sequence::{
    blackbox_pulses, compile_blackbox, compile_hard_prep_uncorrected, run_sequence, CompileOptions,
    Mode, PulseEvent, PulseSequence, PulseTimings, Simulator, TauZeroPolicy,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("(0,0) is not a valid complex bit")]
    ZeroBit,
    #[error("magnetisation {0} is not in the xy-plane")]
    OutOfPlane(Magnetisation),
    #[error("magnetisation vector is zero")]
    ZeroVector,
    #[error("offset difference must be non-zero")]
    ZeroOffsetDifference,
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("sequence needs {needed} spin species, {configured} configured")]
    MissingSpecies { needed: usize, configured: usize },
    #[error("unknown spin species {0}")]
    UnknownSpecies(usize),
    #[error("invalid spin species {id}: {reason}")]
    InvalidSpecies { id: String, reason: String },
    #[error("invalid pulse event: {0}")]
    InvalidEvent(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("expected {expected} initial vectors, got {found}")]
    InitialStateMismatch { expected: usize, found: usize },
}

/// One uncoupled spin species seen from the receiver's rotating frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinSpecies {
    pub id: String,
    /// Resonance offset from the receiver reference, Hz.
    pub offset_hz: f64,
    /// Transverse decay constant, s.
    pub t2_s: f64,
}

impl SpinSpecies {
    pub fn new(id: impl Into<String>, offset_hz: f64, t2_s: f64) -> Result<Self, SpinError> {
        let id = id.into();
        if !(t2_s > 0.0 && t2_s.is_finite()) {
            return Err(SpinError::InvalidSpecies {
                id,
                reason: format!("T2 must be positive, got {t2_s}"),
            });
        }
        if !offset_hz.is_finite() {
            return Err(SpinError::InvalidSpecies {
                id,
                reason: "offset must be finite".into(),
            });
        }
        Ok(Self {
            id,
            offset_hz,
            t2_s,
        })
    }

    /// Species 1 (CHCl3) on resonance and species 2 (H2O) at 1500 Hz,
    /// both with T2 = 0.5 s.
    pub fn default_pair() -> Vec<SpinSpecies> {
        vec![
            SpinSpecies::new("CHCl3", 0.0, 0.5).unwrap(),
            SpinSpecies::new("H2O", 1500.0, 0.5).unwrap(),
        ]
    }
}

/// Rejects species lists that cannot be addressed selectively.
pub fn validate_species(species: &[SpinSpecies]) -> Result<(), SpinError> {
    for (i, s) in species.iter().enumerate() {
        SpinSpecies::new(s.id.clone(), s.offset_hz, s.t2_s)?;
        if species[..i].iter().any(|o| o.offset_hz == s.offset_hz) {
            return Err(SpinError::InvalidSpecies {
                id: s.id.clone(),
                reason: format!("offset {} Hz shared with another species", s.offset_hz),
            });
        }
    }
    Ok(())
}

/// Dimensionless magnetisation `(Mx, My, Mz)` in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Magnetisation {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl Magnetisation {
    /// Thermal equilibrium, along +z.
    pub const IZ: Magnetisation = Magnetisation::new(0.0, 0.0, 1.0);
    pub const IX: Magnetisation = Magnetisation::new(1.0, 0.0, 0.0);
    pub const IY: Magnetisation = Magnetisation::new(0.0, 1.0, 0.0);

    pub const fn new(mx: f64, my: f64, mz: f64) -> Self {
        Self { mx, my, mz }
    }

    /// In-plane vector of the given length at `angle_deg` from +x.
    pub fn in_plane(angle_deg: f64, magnitude: f64) -> Self {
        let t = angle_deg.to_radians();
        Self::new(magnitude * t.cos(), magnitude * t.sin(), 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Magnetisation) -> f64 {
        self.mx * o.mx + self.my * o.my + self.mz * o.mz
    }

    pub fn cross(&self, o: &Magnetisation) -> Magnetisation {
        Magnetisation::new(
            self.my * o.mz - self.mz * o.my,
            self.mz * o.mx - self.mx * o.mz,
            self.mx * o.my - self.my * o.mx,
        )
    }

    pub fn scale(&self, k: f64) -> Magnetisation {
        Magnetisation::new(k * self.mx, k * self.my, k * self.mz)
    }

    pub fn add(&self, o: &Magnetisation) -> Magnetisation {
        Magnetisation::new(self.mx + o.mx, self.my + o.my, self.mz + o.mz)
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, o: &Magnetisation) -> f64 {
        (self.mx - o.mx)
            .abs()
            .max((self.my - o.my).abs())
            .max((self.mz - o.mz).abs())
    }

    /// Angle of the xy projection from +x, degrees in (−180, 180].
    pub fn phase_deg(&self) -> f64 {
        wrap_deg(self.my.atan2(self.mx).to_degrees())
    }

    pub fn transverse(&self) -> f64 {
        self.mx.hypot(self.my)
    }

    /// Name of the direction, `I_x`, `I_-y`, `I_135`, ... for multiples of
    /// 45° in the plane, `I_z` / `I_-z` along z.
    pub fn direction_label(&self) -> String {
        let norm = self.norm();
        if norm == 0.0 {
            return "0".into();
        }
        if self.transverse() <= 1e-9 * norm {
            return if self.mz > 0.0 { "I_z" } else { "I_-z" }.into();
        }
        if self.mz.abs() > 1e-9 * norm {
            return format!("({:.4},{:.4},{:.4})", self.mx, self.my, self.mz);
        }
        let phase = self.phase_deg();
        let step = (phase / 45.0).round();
        if (phase - 45.0 * step).abs() > 1e-6 {
            return format!("I_{phase:.2}");
        }
        match step as i64 {
            0 => "I_x".into(),
            2 => "I_y".into(),
            4 | -4 => "I_-x".into(),
            -2 => "I_-y".into(),
            k => format!("I_{}", 45 * k),
        }
    }
}

impl fmt::Display for Magnetisation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.mx, self.my, self.mz)
    }
}

/// Wraps an angle in degrees into (−180, 180].
pub fn wrap_deg(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(360.0);
    if a > 180.0 {
        a -= 360.0;
    }
    a
}

fn unit_at(deg: f64) -> Magnetisation {
    Magnetisation::in_plane(deg, 1.0)
}

/// `a·u(−45°) + b·u(+45°)`.
pub fn embed(z: ComplexBit) -> Result<Magnetisation, SpinError> {
    if z.is_zero() {
        return Err(SpinError::ZeroBit);
    }
    Ok(unit_at(-45.0).scale(z.a).add(&unit_at(45.0).scale(z.b)))
}

/// Inverse of [`embed`] for vectors in the xy-plane.
pub fn readout(m: &Magnetisation) -> Result<ComplexBit, SpinError> {
    let norm = m.norm();
    if norm == 0.0 {
        return Err(SpinError::ZeroVector);
    }
    if m.mz.abs() >= 1e-9 * norm {
        return Err(SpinError::OutOfPlane(*m));
    }
    Ok(ComplexBit::new(
        m.dot(&unit_at(-45.0)),
        m.dot(&unit_at(45.0)),
    ))
}

/// Right-handed rotation by `flip` radians about the in-plane axis at
/// `axis_phase_deg` from +x. A (π/2) pulse with phase 90° takes `I_z` to
/// `I_x`.
pub fn rotate(m: &Magnetisation, axis_phase_deg: f64, flip: f64) -> Magnetisation {
    let axis = unit_at(axis_phase_deg);
    let (s, c) = flip.sin_cos();
    // Rodrigues
    m.scale(c)
        .add(&axis.cross(m).scale(s))
        .add(&axis.scale(axis.dot(m) * (1.0 - c)))
}

/// Sense of free precession for a positive offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum PrecessionSense {
    /// Phase grows from +x toward +y, so 3π/2 of evolution carries `I_x`
    /// to `I_-y`.
    #[default]
    Counterclockwise,
    Clockwise,
}

impl PrecessionSense {
    pub fn sign(self) -> f64 {
        match self {
            PrecessionSense::Counterclockwise => 1.0,
            PrecessionSense::Clockwise => -1.0,
        }
    }
}

/// Rotation about z by the phase `2π · offset · t` accrued off resonance.
pub fn precess(m: &Magnetisation, offset_hz: f64, t: f64) -> Magnetisation {
    precess_with(m, offset_hz, t, PrecessionSense::Counterclockwise)
}

pub fn precess_with(
    m: &Magnetisation,
    offset_hz: f64,
    t: f64,
    sense: PrecessionSense,
) -> Magnetisation {
    let (s, c) = (sense.sign() * TAU * offset_hz * t).sin_cos();
    Magnetisation::new(m.mx * c - m.my * s, m.mx * s + m.my * c, m.mz)
}

/// Shortest positive delay after which a species at `offset_difference` Hz
/// from the reference species has precessed by 3π/2 (mod 2π) if `c`, or by
/// a full revolution otherwise.
pub fn compute_tau(offset_difference: f64, c: bool) -> Result<f64, SpinError> {
    if offset_difference == 0.0 || !offset_difference.is_finite() {
        return Err(SpinError::ZeroOffsetDifference);
    }
    let target_turns = if c { 0.75 } else { 1.0 };
    // accrued turns are offset·τ; for a negative offset they run backwards
    let turns = if offset_difference > 0.0 {
        target_turns
    } else if c {
        1.0 - target_turns
    } else {
        1.0
    };
    Ok(turns / offset_difference.abs())
}

/// Flip angles used by the compiled sequences.
pub const HALF_PI: f64 = PI / 2.0;
