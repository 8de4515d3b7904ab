//! Run-report assembly, schema validation and atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::jobs::{JobOutcome, JobStatus};

/// Version of the report JSON layout; bump on breaking changes.
pub const SCHEMA_VERSION: u64 = 1;

pub struct RunReport {
    pub json: Value,
    pub exit_code: i32,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.source.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Assembles the report from id-sorted outcomes.
pub fn assemble(cfg: &RunConfig, outcomes: &[JobOutcome], timestamp: &str) -> RunReport {
    debug_assert!(outcomes.windows(2).all(|w| w[0].id <= w[1].id));
    let mut holds = 0usize;
    let mut violated = 0usize;
    let mut waived = 0usize;
    let mut inconclusive = 0usize;
    let mut ok = 0usize;
    let mut skipped = 0usize;
    let mut errors = 0usize;
    let mut gating_failure = false;
    for o in outcomes {
        match o.status {
            JobStatus::Holds => holds += 1,
            JobStatus::Violated => {
                violated += 1;
                if o.waived {
                    waived += 1;
                } else {
                    gating_failure = true;
                }
            }
            JobStatus::Inconclusive => inconclusive += 1,
            JobStatus::Ok => ok += 1,
            JobStatus::Skipped => skipped += 1,
            JobStatus::Error => {
                errors += 1;
                gating_failure = true;
            }
        }
    }

    let jobs: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "id": o.id,
                "kind": o.kind.as_str(),
                "status": serde_json::to_value(o.status).expect("status"),
                "waived": o.waived,
                "detail": o.detail,
            })
        })
        .collect();

    let json = json!({
        "schema_version": SCHEMA_VERSION,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "strict": cfg.strict,
        "timestamp": timestamp,
        "toolchain": {
            "package": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
        },
        "summary": {
            "total": outcomes.len(),
            "holds": holds,
            "violated": violated,
            "waived": waived,
            "inconclusive": inconclusive,
            "ok": ok,
            "skipped": skipped,
            "errors": errors,
        },
        "jobs": jobs,
    });
    RunReport {
        json,
        exit_code: if gating_failure { 1 } else { 0 },
    }
}

/// Validates a report value against the versioned schema. Every report the
/// runner writes must pass.
pub fn validate(report: &Value) -> Result<(), String> {
    let obj = report.as_object().ok_or("report must be an object")?;
    let version = obj
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or("missing schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(format!("unsupported schema_version {version}"));
    }
    for key in ["config_hash", "timestamp"] {
        if !obj.get(key).map(Value::is_string).unwrap_or(false) {
            return Err(format!("missing string field '{key}'"));
        }
    }
    if !obj.get("seed").map(Value::is_u64).unwrap_or(false) {
        return Err("missing integer field 'seed'".into());
    }
    let summary = obj
        .get("summary")
        .and_then(Value::as_object)
        .ok_or("missing summary")?;
    for key in ["total", "holds", "violated", "inconclusive", "ok", "skipped", "errors"] {
        if !summary.get(key).map(Value::is_u64).unwrap_or(false) {
            return Err(format!("summary missing '{key}'"));
        }
    }
    let jobs = obj
        .get("jobs")
        .and_then(Value::as_array)
        .ok_or("missing jobs array")?;
    if jobs.len() as u64 != summary["total"].as_u64().unwrap() {
        return Err("summary total disagrees with job count".into());
    }
    for job in jobs {
        let j = job.as_object().ok_or("job must be an object")?;
        for key in ["id", "kind", "status"] {
            if !j.get(key).map(Value::is_string).unwrap_or(false) {
                return Err(format!("job missing string field '{key}'"));
            }
        }
        if !j.contains_key("detail") {
            return Err("job missing detail".into());
        }
        // verify-style details carry the inequality fields
        if let Some(d) = j["detail"].as_object() {
            if d.contains_key("equation_tag") {
                for key in ["lhs", "rhs", "margin", "err"] {
                    if !d.get(key).map(Value::is_number).unwrap_or(false) {
                        return Err(format!("inequality detail missing number '{key}'"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Writes `contents` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Writes the report JSON and every job CSV under `out_dir`.
pub fn write_outputs(
    out_dir: &str,
    report: &RunReport,
    outcomes: &[JobOutcome],
) -> std::io::Result<PathBuf> {
    let dir = PathBuf::from(out_dir);
    let report_path = dir.join("report.json");
    let pretty = serde_json::to_string_pretty(&report.json).expect("serializable report");
    write_atomic(&report_path, &(pretty + "\n"))?;
    for o in outcomes {
        if let Some((name, csv)) = &o.csv {
            write_atomic(&dir.join(name), csv)?;
        }
    }
    Ok(report_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;

    #[test]
    fn empty_run_validates_and_exits_zero() {
        let cfg = config::parse("").unwrap();
        let rep = assemble(&cfg, &[], "t0");
        assert_eq!(rep.exit_code, 0);
        validate(&rep.json).unwrap();
    }

    #[test]
    fn hash_tracks_source() {
        let a = config::parse("seed = 1\n").unwrap();
        let b = config::parse("seed = 2\n").unwrap();
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a), config_hash(&a));
    }

    #[test]
    fn schema_rejects_bad_reports() {
        assert!(validate(&serde_json::json!({})).is_err());
        assert!(validate(&serde_json::json!({ "schema_version": 99 })).is_err());
    }
}
