//! Run configuration: a flat `key = value` file, overridden by flags.
//!
//! ```text
//! # comment
//! n = 2
//! f = 0101
//! mode = realistic
//! offsets_hz = 0, 1500
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::CliError;
use crate::complexbit::{params_from_truth_table, BlackBoxParams, TruthTable};
use crate::pipeline::PipelineConfig;
use crate::signal::Acquisition;
use crate::spinsim::{SpinSpecies, TauZeroPolicy};

pub const KEYS: &[&str] = &[
    "n",
    "f",
    "params",
    "mode",
    "species",
    "offsets_hz",
    "t2_s",
    "sel90_s",
    "sel180_s",
    "hard_s",
    "npoints",
    "dwell_s",
    "tolerance_deg",
    "tau_zero",
    "apodize_hz",
    "zero_fill",
    "out",
];

const DEFAULT_IDS: [&str; 2] = ["CHCl3", "H2O"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Algebraic,
    Ideal,
    Realistic,
    Quantum,
}

impl RunMode {
    pub fn name(&self) -> &'static str {
        match self {
            RunMode::Algebraic => "algebraic",
            RunMode::Ideal => "ideal",
            RunMode::Realistic => "realistic",
            RunMode::Quantum => "quantum",
        }
    }
}

/// Unvalidated settings, keyed by config-file name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn config_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    "config",
                    format!("line {}: expected `key = value`", idx + 1),
                )
            })?;
            raw.set(key.trim(), value.trim())?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(config_err(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| config_err(key, format!("{v:?}: {e}")))
            })
            .transpose()
    }

    fn parse_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|e| config_err(key, format!("{x:?}: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mode = match self.get("mode") {
            None => RunMode::Algebraic,
            Some(m) => <RunMode as clap::ValueEnum>::from_str(m, true)
                .map_err(|_| config_err("mode", format!("unknown mode {m:?}")))?,
        };

        let function = match (self.get("f"), self.get("params")) {
            (Some(_), Some(_)) => return Err(config_err("f", "give either f or params, not both")),
            (None, None) => return Err(config_err("f", "a function (f or params) is required")),
            (Some(bits), None) => FunctionSpec::Table(
                TruthTable::from_bits(bits).map_err(|e| config_err("f", e.to_string()))?,
            ),
            (None, Some(p)) => FunctionSpec::Params(parse_params(p)?),
        };

        let n: Option<usize> = self.parse_num("n")?;
        let arity = function.arity();
        if let Some(n) = n {
            if n != arity {
                return Err(config_err(
                    "n",
                    format!("n = {n} but the function has arity {arity}"),
                ));
            }
        }
        if mode != RunMode::Quantum && !(1..=2).contains(&arity) {
            return Err(config_err(
                "n",
                format!("{} mode supports n = 1 or 2, got {arity}", mode.name()),
            ));
        }

        let defaults = PipelineConfig::default();
        let offsets = self
            .parse_list("offsets_hz")?
            .unwrap_or_else(|| defaults.species.iter().map(|s| s.offset_hz).collect());
        let t2 = self
            .parse_list("t2_s")?
            .unwrap_or_else(|| vec![defaults.species[0].t2_s]);
        if t2.len() != 1 && t2.len() != offsets.len() {
            return Err(config_err(
                "t2_s",
                format!("give 1 or {} values, got {}", offsets.len(), t2.len()),
            ));
        }
        let ids: Vec<String> = match self.get("species") {
            Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
            None => (0..offsets.len())
                .map(|i| {
                    DEFAULT_IDS
                        .get(i)
                        .map_or_else(|| format!("S{}", i + 1), |s| s.to_string())
                })
                .collect(),
        };
        if ids.len() != offsets.len() {
            return Err(config_err(
                "species",
                format!("{} ids for {} offsets", ids.len(), offsets.len()),
            ));
        }
        let species = ids
            .into_iter()
            .zip(&offsets)
            .enumerate()
            .map(|(i, (id, &off))| {
                let t2_s = if t2.len() == 1 { t2[0] } else { t2[i] };
                SpinSpecies::new(id, off, t2_s).map_err(|e| config_err("t2_s", e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        crate::spinsim::validate_species(&species)
            .map_err(|e| config_err("offsets_hz", e.to_string()))?;
        if mode != RunMode::Quantum && species.len() < arity {
            return Err(config_err(
                "offsets_hz",
                format!(
                    "n = {arity} needs {arity} species, {} configured",
                    species.len()
                ),
            ));
        }

        let mut timings = defaults.timings;
        for (key, slot) in [
            ("sel90_s", &mut timings.selective_90_s),
            ("sel180_s", &mut timings.selective_180_s),
            ("hard_s", &mut timings.hard_s),
        ] {
            if let Some(v) = self.parse_num::<f64>(key)? {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(config_err(key, "duration must be non-negative"));
                }
                *slot = v;
            }
        }

        let acquisition = Acquisition {
            dwell_s: self
                .parse_num("dwell_s")?
                .unwrap_or(defaults.acquisition.dwell_s),
            npoints: self
                .parse_num("npoints")?
                .unwrap_or(defaults.acquisition.npoints),
        };
        acquisition.validate().map_err(|e| {
            let field = if acquisition.npoints < 2 {
                "npoints"
            } else {
                "dwell_s"
            };
            config_err(field, e.to_string())
        })?;
        if let Some(sp) = species
            .iter()
            .find(|s| s.offset_hz.abs() >= acquisition.nyquist_hz())
        {
            return Err(config_err(
                "dwell_s",
                format!(
                    "species {} at {} Hz exceeds the Nyquist limit {} Hz",
                    sp.id,
                    sp.offset_hz,
                    acquisition.nyquist_hz()
                ),
            ));
        }

        let tolerance_deg = self
            .parse_num("tolerance_deg")?
            .unwrap_or(defaults.tolerance_deg);
        if !(tolerance_deg > 0.0 && tolerance_deg < 45.0) {
            return Err(config_err("tolerance_deg", "must lie in (0, 45)"));
        }

        let tau_zero = match self.get("tau_zero") {
            None | Some("full-revolution") => TauZeroPolicy::FullRevolution,
            Some("no-delay") => TauZeroPolicy::NoDelay,
            Some(other) => {
                return Err(config_err(
                    "tau_zero",
                    format!("{other:?}: expected full-revolution or no-delay"),
                ))
            }
        };

        let zero_fill: Option<usize> = self.parse_num("zero_fill")?;
        let apodize_hz: Option<f64> = self.parse_num("apodize_hz")?;

        Ok(RunConfig {
            function,
            mode,
            pipeline: PipelineConfig {
                species,
                timings,
                tau_zero,
                acquisition,
                tolerance_deg,
                apodize_hz,
                zero_fill,
                ..defaults
            },
            out: self.get("out").map(PathBuf::from),
        })
    }
}

fn parse_params(text: &str) -> Result<BlackBoxParams, CliError> {
    let bits = text
        .split(',')
        .map(|b| match b.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(config_err("params", format!("{other:?} is not a bit"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    match *bits.as_slice() {
        [a, b] => Ok(BlackBoxParams::One { a, b }),
        [a, b, c] => Ok(BlackBoxParams::Two { a, b, c }),
        _ => Err(config_err("params", "expected A,B or A,B,C")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Table(TruthTable),
    Params(BlackBoxParams),
}

impl FunctionSpec {
    pub fn arity(&self) -> usize {
        match self {
            FunctionSpec::Table(t) => t.arity(),
            FunctionSpec::Params(p) => p.arity(),
        }
    }

    pub fn truth_table(&self) -> TruthTable {
        match self {
            FunctionSpec::Table(t) => t.clone(),
            FunctionSpec::Params(p) => p.to_truth_table(),
        }
    }

    /// Fails with a promise violation for tables that are neither constant
    /// nor balanced.
    pub fn params(&self) -> Result<BlackBoxParams, CliError> {
        match self {
            FunctionSpec::Table(t) => {
                params_from_truth_table(t).map_err(|e| config_err("f", e.to_string()))
            }
            FunctionSpec::Params(p) => Ok(*p),
        }
    }
}

/// Validated settings for `run` and `spectrum`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub function: FunctionSpec,
    pub mode: RunMode,
    pub pipeline: PipelineConfig,
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawConfig {
        RawConfig::parse(text).unwrap()
    }

    fn field(err: CliError) -> String {
        match err {
            CliError::Config { field, .. } => field,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn defaults() {
        let cfg = raw("f = 0101\nmode = realistic\n").resolve().unwrap();
        assert_eq!(cfg.mode, RunMode::Realistic);
        assert_eq!(cfg.pipeline, PipelineConfig::default());
        assert_eq!(cfg.function.arity(), 2);
    }

    #[test]
    fn params_and_overrides() {
        let mut r = raw("params = 1,0,1\noffsets_hz = 0, 800\nt2_s = 0.3\n");
        r.set("mode", "ideal").unwrap();
        let cfg = r.resolve().unwrap();
        assert_eq!(cfg.function.truth_table().to_string(), "1001");
        assert_eq!(cfg.pipeline.species[1].offset_hz, 800.0);
        assert_eq!(cfg.pipeline.species[1].t2_s, 0.3);
        assert_eq!(cfg.pipeline.species[1].id, "H2O");
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(
            field(raw("f = 01\nparams = 0,1").resolve().unwrap_err()),
            "f"
        );
        assert_eq!(field(raw("mode = ideal").resolve().unwrap_err()), "f");
        assert_eq!(field(raw("f = 01\nn = 2").resolve().unwrap_err()), "n");
        assert_eq!(
            field(raw("f = 01\nmode = fancy").resolve().unwrap_err()),
            "mode"
        );
        assert_eq!(
            field(raw("f = 0101\noffsets_hz = 0").resolve().unwrap_err()),
            "offsets_hz"
        );
        assert_eq!(
            field(raw("f = 01\noffsets_hz = 0, 0").resolve().unwrap_err()),
            "offsets_hz"
        );
        assert_eq!(
            field(raw("f = 01\ndwell_s = 1e-3").resolve().unwrap_err()),
            "dwell_s"
        );
        assert_eq!(
            field(raw("f = 01\nnpoints = 1").resolve().unwrap_err()),
            "npoints"
        );
        assert_eq!(
            field(raw("f = 01\ntolerance_deg = 50").resolve().unwrap_err()),
            "tolerance_deg"
        );
        assert_eq!(field(raw("params = 0,2").resolve().unwrap_err()), "params");
        assert_eq!(
            field(raw("f = 01\nt2_s = 1,2,3").resolve().unwrap_err()),
            "t2_s"
        );
        assert_eq!(
            field(RawConfig::parse("colour = red").unwrap_err()),
            "colour"
        );
        assert_eq!(field(RawConfig::parse("just text").unwrap_err()), "config");
    }

    #[test]
    fn quantum_mode_allows_larger_arity() {
        let cfg = raw("f = 00001111\nmode = quantum").resolve().unwrap();
        assert_eq!(cfg.function.arity(), 3);
        assert!(raw("f = 00001111\nmode = ideal").resolve().is_err());
    }

    #[test]
    fn promise_checked_when_params_requested() {
        let cfg = raw("f = 0001").resolve().unwrap();
        assert_eq!(field(cfg.function.params().unwrap_err()), "f");
    }
}
