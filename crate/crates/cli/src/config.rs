use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};

use opm_core::exactalg::{parse_rational, Rational};
use opm_core::mpr::ProcessSpec;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    #[default]
    QWiener,
    QOu,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Pretty,
}

/// Numbers in the config file may be JSON numbers or strings such as "1/2".
fn number_text<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    let v = Option::<serde_json::Value>::deserialize(d)?;
    match v {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(serde_json::Value::String(s)) => Ok(Some(s)),
        Some(serde_json::Value::Number(n)) => Ok(Some(n.to_string())),
        Some(other) => Err(serde::de::Error::custom(format!("expected a number, got {other}"))),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessConfig {
    pub name: ProcessKind,
    #[serde(deserialize_with = "number_text", skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
    #[serde(deserialize_with = "number_text", skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(deserialize_with = "number_text", skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
}

/// Everything a run needs. Read from `--config` first, then overridden by
/// any flag given on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub process: ProcessConfig,
    pub n_max: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub stu: Option<String>,
}

pub const TOLERANCE_KEYS: &[(&str, f64)] = &[
    ("quadrature", 1e-8),
    ("asc", 1e-7),
    ("kernel", 1e-6),
    ("ck", 1e-6),
    ("cholesky", 1e-10),
    ("coefficients", 1e-10),
    ("z", 3.0),
];

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON file mirroring the run configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub process: Option<ProcessKind>,
    /// Rational ("1/2") or decimal; omitted means symbolic where supported.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true)]
    pub mu: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Three increasing times "s,t,u".
    #[arg(long, global = true)]
    pub stu: Option<String>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn from_args(args: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = args.process {
            if p != cfg.process.name {
                // parameters in the file belong to the other process
                cfg.process = ProcessConfig { name: p, ..Default::default() };
            }
        }
        let over = |slot: &mut Option<String>, v: &Option<String>| {
            if v.is_some() {
                *slot = v.clone();
            }
        };
        over(&mut cfg.process.q, &args.q);
        over(&mut cfg.process.alpha, &args.alpha);
        over(&mut cfg.process.mu, &args.mu);
        over(&mut cfg.stu, &args.stu);
        cfg.n_max = args.n.or(cfg.n_max);
        cfg.paths = args.paths.or(cfg.paths);
        cfg.seed = args.seed.or(cfg.seed);
        cfg.format = args.format.or(cfg.format);
        cfg.output = args.output.clone().or(cfg.output);
        for k in cfg.tolerances.keys() {
            if !TOLERANCE_KEYS.iter().any(|(name, _)| name == k) {
                return Err(CliError::Usage(format!("unknown tolerance `{k}`")));
            }
        }
        Ok(cfg)
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or_else(|| {
            TOLERANCE_KEYS
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .expect("tolerance key")
        })
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn q(&self) -> Result<Option<Rational>, CliError> {
        self.process.q.as_deref().map(parse_number).transpose()
    }

    pub fn spec(&self) -> Result<ProcessSpec, CliError> {
        let q = self.q()?;
        let spec = match self.process.name {
            ProcessKind::QWiener => ProcessSpec::q_wiener(q),
            ProcessKind::QOu => {
                let alpha = match &self.process.alpha {
                    Some(a) => parse_number(a)?,
                    None => Rational::from_integer(1.into()),
                };
                ProcessSpec::alpha_q_ou(q, alpha)
            }
            ProcessKind::Poisson => ProcessSpec::poisson(self.process.mu.as_deref().map(parse_number).transpose()?),
        };
        spec.map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn stu(&self) -> Result<Option<[Rational; 3]>, CliError> {
        let Some(text) = &self.stu else { return Ok(None) };
        let parts = parse_list(text)?;
        let [s, t, u]: [Rational; 3] = parts
            .try_into()
            .map_err(|_| CliError::Usage(format!("--stu needs three values, got `{text}`")))?;
        if !(s < t && t < u) {
            return Err(CliError::Usage(format!("--stu needs s < t < u, got `{text}`")));
        }
        Ok(Some([s, t, u]))
    }
}

pub fn parse_number(text: &str) -> Result<Rational, CliError> {
    parse_rational(text).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn parse_list(text: &str) -> Result<Vec<Rational>, CliError> {
    text.split(',').map(parse_number).collect()
}
