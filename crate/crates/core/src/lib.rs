//! Classical Deutsch-Jozsa computation on simulated nuclear spin vectors.
//!
//! The crate works at three levels of fidelity, each checked against the
//! others:
//!
//! - [`complexbit`]: the algorithm on complex bits `a + bi`, exact algebra.
//! - [`spinsim`]: complex bits embedded as xy-plane magnetisation and
//!   manipulated by pulse sequences, with ideal or finite-duration pulses.
//! - [`signal`]: the FID and spectrum an NMR receiver would record, and the
//!   function read back from peak phases.
//!
//! [`quantumref`] holds a state-vector simulation of the quantum algorithm
//! used as a reference, and [`pipeline`] strings the spin and signal stages
//! together.
//!
//! ```
//! use classical_dj::complexbit::{params_from_truth_table, run_dequantised, TruthTable, Verdict};
//!
//! let f: TruthTable = "0110".parse().unwrap();
//! let result = run_dequantised(&params_from_truth_table(&f).unwrap()).unwrap();
//! assert_eq!(result.verdict, Verdict::Balanced);
//! assert_eq!(result.function, f);
//! ```

pub mod cli;
pub mod complexbit;
pub mod pipeline;
pub mod quantumref;
pub mod signal;
pub mod spinsim;
