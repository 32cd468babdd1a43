//! Complex-bit algebra and the classical (de-quantised) Deutsch-Jozsa
//! algorithm for one- and two-bit functions.
//!
//! A [`ComplexBit`] is a pair `(a, b)` read as the complex number `a + bi`.
//! The basis bits `(1, 0)` and `(0, 1)` stand for classical 0 and 1. The
//! black-boxes flip the sign of individual components depending on the
//! hidden function `f`, and the algorithm feeds `1 + i` through the box once
//! and reads the function back from the direction and sign of the result.
//!
//! Amplitudes are never normalised: the classification only depends on
//! direction and sign.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// Largest arity accepted by [`TruthTable`].
pub const MAX_ARITY: usize = 16;

/// Absolute tolerance used when recognising a component as 0 or ±1.
const RECOGNITION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexBitError {
    #[error("promise violation: f = {0} is neither constant nor balanced")]
    PromiseViolation(String),
    #[error("arity mismatch: expected n = {expected}, got n = {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid truth table: {0}")]
    InvalidTruthTable(String),
    #[error("black-box output {0} is not a valid algorithm output")]
    UnrecognisedOutput(ComplexBit),
    #[error("de-quantised algorithm is only defined for n = 1 or n = 2, got n = {0}")]
    UnsupportedArity(usize),
}

/// A classical two-dimensional bit `a + bi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexBit {
    pub a: f64,
    pub b: f64,
}

impl ComplexBit {
    /// Classical 0.
    pub const ZERO: ComplexBit = ComplexBit { a: 1.0, b: 0.0 };
    /// Classical 1.
    pub const ONE: ComplexBit = ComplexBit { a: 0.0, b: 1.0 };
    /// `1 + i`, the algorithm input.
    pub const DIAGONAL: ComplexBit = ComplexBit { a: 1.0, b: 1.0 };

    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Basis bit for a classical value.
    pub fn basis(bit: bool) -> Self {
        if bit {
            Self::ONE
        } else {
            Self::ZERO
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }

    /// Complex product `(a + bi)(c + di)`.
    pub fn complex_mul(self, other: ComplexBit) -> ComplexBit {
        ComplexBit::new(
            self.a * other.a - self.b * other.b,
            self.a * other.b + self.b * other.a,
        )
    }

    pub fn approx_eq(&self, other: &ComplexBit, tol: f64) -> bool {
        (self.a - other.a).abs() <= tol && (self.b - other.b).abs() <= tol
    }
}

impl Add for ComplexBit {
    type Output = ComplexBit;
    fn add(self, rhs: ComplexBit) -> ComplexBit {
        ComplexBit::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Sub for ComplexBit {
    type Output = ComplexBit;
    fn sub(self, rhs: ComplexBit) -> ComplexBit {
        ComplexBit::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl Neg for ComplexBit {
    type Output = ComplexBit;
    fn neg(self) -> ComplexBit {
        ComplexBit::new(-self.a, -self.b)
    }
}

impl Mul<ComplexBit> for f64 {
    type Output = ComplexBit;
    fn mul(self, rhs: ComplexBit) -> ComplexBit {
        ComplexBit::new(self * rhs.a, self * rhs.b)
    }
}

fn fmt_component(x: f64) -> String {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        // avoid printing "-0"
        format!("{}", r as i64)
    } else {
        format!("{x:.4}")
    }
}

impl fmt::Display for ComplexBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", fmt_component(self.a), fmt_component(self.b))
    }
}

/// Outputs of `f: {0,1}^n -> {0,1}`, indexed by the input read as an n-bit
/// binary number with the leftmost bit most significant, so `"0101"` lists
/// `f(00) f(01) f(10) f(11)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TruthTable {
    n: usize,
    values: Vec<bool>,
}

impl TruthTable {
    pub fn new(n: usize, values: Vec<bool>) -> Result<Self, ComplexBitError> {
        if n == 0 || n > MAX_ARITY {
            return Err(ComplexBitError::InvalidTruthTable(format!(
                "arity {n} outside 1..={MAX_ARITY}"
            )));
        }
        if values.len() != 1 << n {
            return Err(ComplexBitError::InvalidTruthTable(format!(
                "expected {} values for n = {n}, got {}",
                1usize << n,
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn constant(n: usize, value: bool) -> Result<Self, ComplexBitError> {
        Self::new(n, vec![value; 1usize.checked_shl(n as u32).unwrap_or(0)])
    }

    /// Parses a bit string, inferring `n` from its length.
    pub fn from_bits(bits: &str) -> Result<Self, ComplexBitError> {
        let values = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ComplexBitError::InvalidTruthTable(format!(
                    "unexpected character {other:?} in {bits:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let len = values.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(ComplexBitError::InvalidTruthTable(format!(
                "length {len} of {bits:?} is not 2^n with n >= 1"
            )));
        }
        Self::new(len.trailing_zeros() as usize, values)
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// `f(x)` with `x` given as an integer index.
    pub fn eval(&self, x: usize) -> bool {
        self.values[x]
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    pub fn is_balanced(&self) -> bool {
        2 * self.values.iter().filter(|&&v| v).count() == self.values.len()
    }

    pub fn satisfies_promise(&self) -> bool {
        self.is_constant() || self.is_balanced()
    }

    pub fn check_promise(&self) -> Result<(), ComplexBitError> {
        if self.satisfies_promise() {
            Ok(())
        } else {
            Err(ComplexBitError::PromiseViolation(self.to_string()))
        }
    }

    /// The function `1 ⊕ f`.
    pub fn complement(&self) -> TruthTable {
        TruthTable {
            n: self.n,
            values: self.values.iter().map(|v| !v).collect(),
        }
    }

    /// Every constant or balanced function of arity `n`, in ascending
    /// order of their bit strings.
    pub fn promise_functions(n: usize) -> Vec<TruthTable> {
        assert!((1..=4).contains(&n), "enumeration is limited to n <= 4");
        let len = 1usize << n;
        (0u32..(1u32 << len))
            .map(|word| {
                let values = (0..len).map(|x| (word >> (len - 1 - x)) & 1 == 1).collect();
                TruthTable { n, values }
            })
            .filter(TruthTable::satisfies_promise)
            .collect()
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &v in &self.values {
            f.write_str(if v { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for TruthTable {
    type Err = ComplexBitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TruthTable::from_bits(s.trim())
    }
}

/// Control bits of the black-box.
///
/// For one input bit `A = f(0)`, `B = f(1)`. For two input bits
/// `A = f(00)`, `B = f(10)` and `C = f(10) ⊕ f(11)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BlackBoxParams {
    One { a: bool, b: bool },
    Two { a: bool, b: bool, c: bool },
}

impl BlackBoxParams {
    pub fn arity(&self) -> usize {
        match self {
            BlackBoxParams::One { .. } => 1,
            BlackBoxParams::Two { .. } => 2,
        }
    }

    /// All parameter sets of the given arity, ordered as binary counting
    /// over `A B` or `A B C`.
    pub fn all(n: usize) -> Result<Vec<BlackBoxParams>, ComplexBitError> {
        match n {
            1 => Ok((0..4u8)
                .map(|k| BlackBoxParams::One {
                    a: k & 2 != 0,
                    b: k & 1 != 0,
                })
                .collect()),
            2 => Ok((0..8u8)
                .map(|k| BlackBoxParams::Two {
                    a: k & 4 != 0,
                    b: k & 2 != 0,
                    c: k & 1 != 0,
                })
                .collect()),
            other => Err(ComplexBitError::UnsupportedArity(other)),
        }
    }

    /// Inverse of [`params_from_truth_table`]. For two bits the missing
    /// `f(01)` follows from the promise: every promise function of two bits
    /// has an even number of ones.
    pub fn to_truth_table(&self) -> TruthTable {
        match *self {
            BlackBoxParams::One { a, b } => TruthTable {
                n: 1,
                values: vec![a, b],
            },
            BlackBoxParams::Two { a, b, c } => TruthTable {
                n: 2,
                values: vec![a, a ^ c, b, b ^ c],
            },
        }
    }

    fn bits(&self) -> String {
        let d = |x: bool| if x { '1' } else { '0' };
        match *self {
            BlackBoxParams::One { a, b } => format!("{} {}", d(a), d(b)),
            BlackBoxParams::Two { a, b, c } => format!("{} {} {}", d(a), d(b), d(c)),
        }
    }
}

impl fmt::Display for BlackBoxParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bits())
    }
}

pub fn params_from_truth_table(f: &TruthTable) -> Result<BlackBoxParams, ComplexBitError> {
    f.check_promise()?;
    let v = f.values();
    match f.arity() {
        1 => Ok(BlackBoxParams::One { a: v[0], b: v[1] }),
        2 => Ok(BlackBoxParams::Two {
            a: v[0],
            b: v[2],
            c: v[2] ^ v[3],
        }),
        other => Err(ComplexBitError::UnsupportedArity(other)),
    }
}

fn sign(flip: bool) -> f64 {
    if flip {
        -1.0
    } else {
        1.0
    }
}

/// One-bit black-box: `(a, b) -> ((-1)^A a, (-1)^B b)`.
pub fn apply_blackbox_n1(p: &BlackBoxParams, z: ComplexBit) -> Result<ComplexBit, ComplexBitError> {
    match *p {
        BlackBoxParams::One { a, b } => Ok(ComplexBit::new(sign(a) * z.a, sign(b) * z.b)),
        BlackBoxParams::Two { .. } => Err(ComplexBitError::ArityMismatch {
            expected: 1,
            found: 2,
        }),
    }
}

/// Two-bit black-box. The first bit transforms like the one-bit box with
/// `(A, B)`; the second keeps `a₂` and flips `b₂` when `C = 1`.
pub fn apply_blackbox_n2(
    p: &BlackBoxParams,
    z1: ComplexBit,
    z2: ComplexBit,
) -> Result<(ComplexBit, ComplexBit), ComplexBitError> {
    match *p {
        BlackBoxParams::Two { a, b, c } => {
            // (-1)^A [a1 + (-1)^(A⊕B) b1 i]
            let first = sign(a) * ComplexBit::new(z1.a, sign(a ^ b) * z1.b);
            let second = ComplexBit::new(z2.a, sign(c) * z2.b);
            Ok((first, second))
        }
        BlackBoxParams::One { .. } => Err(ComplexBitError::ArityMismatch {
            expected: 2,
            found: 1,
        }),
    }
}

/// Applies the black-box of either arity to a slice of `n` complex bits.
pub fn apply_blackbox(
    p: &BlackBoxParams,
    inputs: &[ComplexBit],
) -> Result<Vec<ComplexBit>, ComplexBitError> {
    match (p.arity(), inputs) {
        (1, [z]) => Ok(vec![apply_blackbox_n1(p, *z)?]),
        (2, [z1, z2]) => {
            let (o1, o2) = apply_blackbox_n2(p, *z1, *z2)?;
            Ok(vec![o1, o2])
        }
        (expected, _) => Err(ComplexBitError::ArityMismatch {
            expected,
            found: inputs.len(),
        }),
    }
}

/// Multiplies by `(1 + i) / 2`, mapping `(a, b)` to `((a - b)/2, (a + b)/2)`.
pub fn project(z: ComplexBit) -> ComplexBit {
    0.5 * ComplexBit::DIAGONAL.complex_mul(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Constant,
    Balanced,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Constant => "constant",
            Verdict::Balanced => "balanced",
        })
    }
}

/// Outcome of the classical algorithm: the verdict, the recovered function
/// and the projected outputs it was read from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DJResult {
    pub verdict: Verdict,
    pub function: TruthTable,
    pub projected: Vec<ComplexBit>,
}

/// A projected output is one of `±1` or `±i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Real { negative: bool },
    Imaginary { negative: bool },
}

fn near(x: f64, target: f64) -> bool {
    (x - target).abs() <= RECOGNITION_TOL
}

fn classify_projected(p: ComplexBit) -> Option<Axis> {
    if near(p.a, 0.0) && near(p.b.abs(), 1.0) {
        Some(Axis::Imaginary {
            negative: p.b < 0.0,
        })
    } else if near(p.b, 0.0) && near(p.a.abs(), 1.0) {
        Some(Axis::Real {
            negative: p.a < 0.0,
        })
    } else {
        None
    }
}

/// Reads the verdict and the full function back from black-box outputs
/// obtained with input `1 + i` (one output per input bit).
///
/// For the first (or only) bit, an imaginary projection means `A = B` and a
/// real one `A ≠ B`; a negative sign means `A = 1`. For the second bit of
/// a two-bit function, `i` means `C = 0` and `1` means `C = 1`.
pub fn recover(outputs: &[ComplexBit]) -> Result<DJResult, ComplexBitError> {
    let projected: Vec<ComplexBit> = outputs.iter().copied().map(project).collect();
    let axes = outputs
        .iter()
        .zip(&projected)
        .map(|(&out, &p)| classify_projected(p).ok_or(ComplexBitError::UnrecognisedOutput(out)))
        .collect::<Result<Vec<_>, _>>()?;

    let first = |axis: Axis| match axis {
        Axis::Imaginary { negative } => (negative, negative),
        Axis::Real { negative } => (negative, !negative),
    };

    let params = match axes.as_slice() {
        [only] => {
            let (a, b) = first(*only);
            BlackBoxParams::One { a, b }
        }
        [head, second] => {
            let (a, b) = first(*head);
            let c = match second {
                Axis::Imaginary { negative: false } => false,
                Axis::Real { negative: false } => true,
                _ => return Err(ComplexBitError::UnrecognisedOutput(outputs[1])),
            };
            BlackBoxParams::Two { a, b, c }
        }
        other => return Err(ComplexBitError::UnsupportedArity(other.len())),
    };

    let all_imaginary = axes.iter().all(|a| matches!(a, Axis::Imaginary { .. }));
    Ok(DJResult {
        verdict: if all_imaginary {
            Verdict::Constant
        } else {
            Verdict::Balanced
        },
        function: params.to_truth_table(),
        projected,
    })
}

/// Runs the classical algorithm: one black-box call on `1 + i` per input
/// bit, projection, and recovery.
pub fn run_dequantised(p: &BlackBoxParams) -> Result<DJResult, ComplexBitError> {
    let inputs = vec![ComplexBit::DIAGONAL; p.arity()];
    recover(&apply_blackbox(p, &inputs)?)
}
