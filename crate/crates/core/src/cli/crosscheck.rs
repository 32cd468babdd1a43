//! Every promise function for n = 1, 2 through every mode, plus the
//! quantum-reference facts the classical result is measured against.

use std::fmt::Write as _;

use serde::Serialize;

use super::{CliError, CrosscheckArgs};
use crate::complexbit::{params_from_truth_table, run_dequantised, DJResult, TruthTable, Verdict};
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::quantumref::{
    check_embedding_impossible, phase_indistinguishability, run_quantum_dj, StandardEmbedding,
};
use crate::spinsim::{Mode, PrecessionSense};

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrosscheckReport {
    pub checks: Vec<CheckLine>,
}

impl CrosscheckReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.checks.len()
    }
}

fn expected_verdict(f: &TruthTable) -> Verdict {
    if f.is_constant() {
        Verdict::Constant
    } else {
        Verdict::Balanced
    }
}

/// Index of the outcome the quantum algorithm must return with certainty:
/// `f(0)⊕f(1)` for one bit, `(f(00)⊕f(10), f(10)⊕f(11))` for two.
fn expected_quantum_outcome(f: &TruthTable) -> usize {
    let v = f.values();
    match f.arity() {
        1 => usize::from(v[0] ^ v[1]),
        _ => (usize::from(v[0] ^ v[2]) << 1) | usize::from(v[2] ^ v[3]),
    }
}

fn describe(r: &DJResult) -> String {
    format!("{} f_{}", r.verdict, r.function)
}

fn matches(r: &DJResult, f: &TruthTable) -> bool {
    r.verdict == expected_verdict(f) && r.function == *f
}

fn check_simulated(f: &TruthTable, mode: Mode, cfg: &PipelineConfig) -> CheckLine {
    let name = format!(
        "n={} f_{} {}",
        f.arity(),
        f,
        if mode == Mode::Ideal {
            "ideal"
        } else {
            "realistic"
        }
    );
    let fail = |detail: String| CheckLine {
        name: name.clone(),
        passed: false,
        detail,
    };
    let p = match params_from_truth_table(f) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let run = match run_pipeline(&p, mode, cfg) {
        Ok(run) => run,
        Err(e) => return fail(e.to_string()),
    };
    let ok = matches!(&run.spectral, Ok(r) if matches(r, f))
        && matches!(&run.direct, Ok(r) if matches(r, f));
    if ok {
        let detail = run.spectral.as_ref().map(describe).unwrap_or_default();
        return CheckLine {
            name,
            passed: true,
            detail,
        };
    }
    // state dump for diagnosis
    let mut detail = String::new();
    let _ = write!(
        detail,
        "spectral: {}; direct: {}",
        run.spectral
            .as_ref()
            .map_or_else(|e| e.to_string(), describe),
        run.direct.as_ref().map_or_else(|e| e.to_string(), describe)
    );
    for (s, m) in cfg.species.iter().zip(&run.final_state) {
        let _ = write!(detail, "; {} final {} {}", s.id, m, m.direction_label());
    }
    for r in &run.readings {
        let _ = write!(
            detail,
            "; {} phase {:.2} deg at {:.3} Hz",
            r.species, r.phase_deg, r.peak_freq_hz
        );
    }
    fail(detail)
}

pub fn run_crosscheck(cfg: &PipelineConfig) -> CrosscheckReport {
    let mut checks = Vec::new();
    let functions: Vec<TruthTable> = (1..=2).flat_map(TruthTable::promise_functions).collect();

    for f in &functions {
        let name = format!("n={} f_{} algebraic", f.arity(), f);
        checks.push(
            match params_from_truth_table(f).and_then(|p| run_dequantised(&p)) {
                Ok(r) => CheckLine {
                    name,
                    passed: matches(&r, f),
                    detail: describe(&r),
                },
                Err(e) => CheckLine {
                    name,
                    passed: false,
                    detail: e.to_string(),
                },
            },
        );
        checks.push(check_simulated(f, Mode::Ideal, cfg));
        checks.push(check_simulated(f, Mode::Realistic, cfg));

        let name = format!("n={} f_{} quantum", f.arity(), f);
        checks.push(match run_quantum_dj(f) {
            Ok(q) => {
                let expected = expected_quantum_outcome(f);
                CheckLine {
                    name,
                    passed: q.verdict == expected_verdict(f) && q.point_mass() == Some(expected),
                    detail: format!("{} outcome {:?}", q.verdict, q.point_mass()),
                }
            }
            Err(e) => CheckLine {
                name,
                passed: false,
                detail: e.to_string(),
            },
        });
    }

    for f in functions.iter().filter(|f| f.values()[0]) {
        let g = f.complement();
        let name = format!("f_{f} vs f_{g}");
        let quantum_same = phase_indistinguishability(f);
        let classical = (
            params_from_truth_table(f).and_then(|p| run_dequantised(&p)),
            params_from_truth_table(&g).and_then(|p| run_dequantised(&p)),
        );
        let (passed, detail) = match (quantum_same, classical) {
            (Ok(same), (Ok(a), Ok(b))) => (
                same && a.function != b.function && a.function == *f && b.function == g,
                format!(
                    "quantum {}, classical f_{} / f_{}",
                    if same {
                        "indistinguishable"
                    } else {
                        "distinguishable"
                    },
                    a.function,
                    b.function
                ),
            ),
            (q, (a, b)) => (false, format!("{q:?} {a:?} {b:?}")),
        };
        checks.push(CheckLine {
            name,
            passed,
            detail,
        });
    }

    for f in functions.iter().filter(|f| f.is_constant()) {
        let name = format!("embedding witness f_{f}");
        checks.push(
            match check_embedding_impossible(f, &StandardEmbedding { n: f.arity() }) {
                Ok(w) => CheckLine {
                    name,
                    passed: w.is_valid(),
                    detail: format!(
                        "x1={} x2={} overlap {:.1e} image distance {:.1e} gram difference {:.3}",
                        w.x1, w.x2, w.input_overlap, w.image_distance, w.gram_difference
                    ),
                },
                Err(e) => CheckLine {
                    name,
                    passed: false,
                    detail: e.to_string(),
                },
            },
        );
    }

    CrosscheckReport { checks }
}

pub fn cmd_crosscheck(args: &CrosscheckArgs, out: &mut String) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::default();
    if args.sabotage_precession {
        cfg.simulation_sense = PrecessionSense::Clockwise;
    }
    let report = run_crosscheck(&cfg);
    if args.json {
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Computation(e.to_string()))?;
        out.push_str(&text);
        out.push('\n');
    } else {
        for c in &report.checks {
            let tag = if c.passed { "ok  " } else { "FAIL" };
            let _ = writeln!(out, "{tag} {}: {}", c.name, c.detail);
        }
        let _ = writeln!(
            out,
            "crosscheck: {}/{} passed",
            report.passed(),
            report.checks.len()
        );
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of {} cross-checks failed",
            report.checks.len() - report.passed(),
            report.checks.len()
        )))
    }
}
