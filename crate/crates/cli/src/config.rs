//! Flat key/value config with job tables.
//!
//! ```text
//! # global settings first
//! seed = 42
//! tol = 1e-10
//! out = reports
//! strict = false
//!
//! [job thm1-cauchy]
//! kind = verify
//! tag = thm1
//! family = cauchy
//! n = 1
//! beta = 3
//! r = 1
//! f = x1
//! ```
//!
//! Keys are `name = value`, one per line; `#` starts a comment; `[job id]`
//! opens a job table. Job ids must be unique.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub id: String,
    pub kind: JobKind,
    pub keys: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Verify,
    Dual,
    Evolve,
    Spectrum,
    Sweep,
}

impl JobKind {
    pub fn parse(s: &str) -> Option<JobKind> {
        match s {
            "verify" => Some(JobKind::Verify),
            "dual" => Some(JobKind::Dual),
            "evolve" => Some(JobKind::Evolve),
            "spectrum" => Some(JobKind::Spectrum),
            "sweep" => Some(JobKind::Sweep),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            JobKind::Verify => "verify",
            JobKind::Dual => "dual",
            JobKind::Evolve => "evolve",
            JobKind::Spectrum => "spectrum",
            JobKind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: String,
    pub strict: bool,
    pub jobs: Vec<JobSpec>,
    /// raw text, hashed into the report
    pub source: String,
}

#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

pub fn parse(text: &str) -> Result<RunConfig, ParseError> {
    let mut cfg = RunConfig {
        seed: 0,
        tol: None,
        out: "reports".to_string(),
        strict: false,
        jobs: Vec::new(),
        source: text.to_string(),
    };
    let mut current: Option<JobSpec> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| err(lineno, "unterminated section header"))?
                .trim();
            let id = inner
                .strip_prefix("job")
                .ok_or_else(|| err(lineno, "only [job <id>] sections are supported"))?
                .trim();
            if id.is_empty() {
                return Err(err(lineno, "job section needs an id"));
            }
            if let Some(done) = current.take() {
                cfg.jobs.push(done);
            }
            if cfg.jobs.iter().any(|j| j.id == id) {
                return Err(err(lineno, format!("duplicate job id '{id}'")));
            }
            current = Some(JobSpec {
                id: id.to_string(),
                kind: JobKind::Verify,
                keys: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(lineno, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(err(lineno, "empty key or value"));
        }
        match &mut current {
            None => match key {
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| err(lineno, format!("bad seed '{value}'")))?
                }
                "tol" => {
                    let t: f64 = value
                        .parse()
                        .map_err(|_| err(lineno, format!("bad tol '{value}'")))?;
                    if !(t > 0.0) {
                        return Err(err(lineno, "tol must be positive"));
                    }
                    cfg.tol = Some(t);
                }
                "out" => cfg.out = value.to_string(),
                "strict" => {
                    cfg.strict = value
                        .parse()
                        .map_err(|_| err(lineno, format!("bad strict flag '{value}'")))?
                }
                other => {
                    return Err(err(lineno, format!("unknown global key '{other}'")));
                }
            },
            Some(job) => {
                if key == "kind" {
                    job.kind = JobKind::parse(value)
                        .ok_or_else(|| err(lineno, format!("unknown job kind '{value}'")))?;
                } else {
                    job.keys.insert(key.to_string(), value.to_string());
                }
            }
        }
    }
    if let Some(done) = current.take() {
        cfg.jobs.push(done);
    }
    Ok(cfg)
}

impl JobSpec {
    pub fn str_key(&self, key: &str) -> Result<&str, String> {
        self.keys
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| format!("job '{}': missing key '{key}'", self.id))
    }

    pub fn f64_key(&self, key: &str) -> Result<f64, String> {
        self.str_key(key)?
            .parse()
            .map_err(|_| format!("job '{}': key '{key}' is not a number", self.id))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, String> {
        match self.keys.get(key) {
            None => Ok(default),
            Some(_) => self.f64_key(key),
        }
    }

    pub fn usize_key(&self, key: &str) -> Result<usize, String> {
        self.str_key(key)?
            .parse()
            .map_err(|_| format!("job '{}': key '{key}' is not an integer", self.id))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, String> {
        match self.keys.get(key) {
            None => Ok(default),
            Some(_) => self.usize_key(key),
        }
    }

    /// Comma-separated list of integers (grid sizes).
    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, String> {
        self.str_key(key)?
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| format!("job '{}': bad integer in '{key}'", self.id))
            })
            .collect()
    }
}
