//! Run configuration from flags and `key = value` files.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use histories_core::bell::DEFAULT_STEP;
use histories_core::C64;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Method {
    Copenhagen,
    Bell,
    Everett,
    BellMc,
    Memory,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Copenhagen => "copenhagen",
            Self::Bell => "bell",
            Self::Everett => "everett",
            Self::BellMc => "bell-mc",
            Self::Memory => "memory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
    #[value(alias = "json")]
    Structured,
}

pub const DEFAULT_TRAJECTORIES: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub observer: Option<String>,
    pub methods: Vec<Method>,
    pub c1: C64,
    pub c2: C64,
    pub step: f64,
    pub trajectories: u64,
    pub seed: u64,
    pub format: Format,
    pub prune_zeros: bool,
}

/// Settings from one source; unset fields fall through to the next.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub observer: Option<String>,
    pub methods: Option<Vec<Method>>,
    pub c1: Option<String>,
    pub c2: Option<String>,
    pub step: Option<f64>,
    pub trajectories: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub prune_zeros: Option<bool>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// One `key = value` per line; `#` starts a comment. `method` may repeat
    /// or hold a comma-separated list, and an empty value selects no method.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| format!("line {}: {msg}", no + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key.replace('_', "-").as_str() {
                "scenario" => out.scenario = Some(value.to_string()),
                "observer" => out.observer = Some(value.to_string()),
                "method" | "methods" => {
                    let list = out.methods.get_or_insert_with(Vec::new);
                    for m in value.split(',').map(str::trim).filter(|m| !m.is_empty()) {
                        list.push(Method::from_str(m, true).map_err(err)?);
                    }
                }
                "c1" => out.c1 = Some(value.to_string()),
                "c2" => out.c2 = Some(value.to_string()),
                "step" => {
                    out.step = Some(
                        value
                            .parse()
                            .map_err(|_| err(format!("bad step `{value}`")))?,
                    )
                }
                "trajectories" => {
                    out.trajectories = Some(
                        value
                            .parse()
                            .map_err(|_| err(format!("bad trajectory count `{value}`")))?,
                    )
                }
                "seed" => {
                    out.seed = Some(
                        value
                            .parse()
                            .map_err(|_| err(format!("bad seed `{value}`")))?,
                    )
                }
                "format" => out.format = Some(Format::from_str(value, true).map_err(err)?),
                "prune-zeros" => {
                    out.prune_zeros = Some(match value {
                        "true" | "yes" | "1" => true,
                        "false" | "no" | "0" => false,
                        _ => return Err(err(format!("bad boolean `{value}`"))),
                    })
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(out)
    }

    /// `self` wins over `fallback` field by field.
    pub fn or(self, fallback: Overrides) -> Overrides {
        Overrides {
            scenario: self.scenario.or(fallback.scenario),
            observer: self.observer.or(fallback.observer),
            methods: self.methods.or(fallback.methods),
            c1: self.c1.or(fallback.c1),
            c2: self.c2.or(fallback.c2),
            step: self.step.or(fallback.step),
            trajectories: self.trajectories.or(fallback.trajectories),
            seed: self.seed.or(fallback.seed),
            format: self.format.or(fallback.format),
            prune_zeros: self.prune_zeros.or(fallback.prune_zeros),
        }
    }

    pub fn resolve(self) -> CliResult<RunConfig> {
        let scenario = self.scenario.ok_or_else(|| {
            CliError::usage("no scenario given (use --scenario or a config file)")
        })?;
        let c1 = match self.c1 {
            Some(s) => parse_complex(&s).map_err(CliError::usage)?,
            None => C64::new(0.7f64.sqrt(), 0.0),
        };
        let c2 = match self.c2 {
            Some(s) => parse_complex(&s).map_err(CliError::usage)?,
            None => C64::new(0.3f64.sqrt(), 0.0),
        };
        let step = self.step.unwrap_or(DEFAULT_STEP);
        if !(step > 0.0 && step.is_finite()) {
            return Err(CliError::usage(format!(
                "step must be positive, got {step}"
            )));
        }
        let mut methods = self.methods.unwrap_or_default();
        let mut seen = Vec::new();
        methods.retain(|m| {
            let fresh = !seen.contains(m);
            seen.push(*m);
            fresh
        });
        Ok(RunConfig {
            scenario,
            observer: self.observer,
            methods,
            c1,
            c2,
            step,
            trajectories: self.trajectories.unwrap_or(DEFAULT_TRAJECTORIES),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            format: self.format.unwrap_or(Format::Markdown),
            prune_zeros: self.prune_zeros.unwrap_or(false),
        })
    }
}

/// Parses `re`, `imi`, `re+imi` or `re-imi` (`i` alone means one).
pub fn parse_complex(text: &str) -> Result<C64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number `{text}` (expected re+imi)");
    let num = |t: &str| -> Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(C64::new(s.parse().map_err(|_| bad())?, 0.0));
    };
    // split before the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(C64::new(
            body[..k].parse().map_err(|_| bad())?,
            num(&body[k..])?,
        )),
        None => Ok(C64::new(0.0, num(body)?)),
    }
}
