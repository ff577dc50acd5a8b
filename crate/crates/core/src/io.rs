//! Metric serialization. Every float is written with 17 significant digits
//! so files are byte-stable and round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

use crate::engine::{MetricsReport, SystemRow, TraceRow};
use crate::error::{Error, Result};
use crate::phy::Mode;

pub const TRACE_HEADER: &str =
    "slot,user,scheduled,sinr_db,rate_bps,served_bits,queue_bits,buffer_s,stalls,quality,played_bits,kqi_loss,latency_ms";
pub const SYSTEM_HEADER: &str = "slot,backlog_bits,kqi_loss,served_bits,mode";
pub const USER_HEADER: &str = "user,throughput_bps,served_bits,download_ratio,pearson,stall_count,mean_kqi_loss,mean_queue_bits,mean_quality,mean_psnr_db,mean_latency_ms";
pub const AGGREGATE_HEADER: &str = "n_slots,cell_edge_throughput_bps,mean_throughput_bps,mean_latency_ms,total_stalls,mean_backlog_bits,mean_sum_kqi_loss,jt_slots,cscb_slots";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `fmt_f64` or an empty field.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    match field {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => field
            .parse()
            .map_err(|_| Error::Serialize(format!("bad number {field:?} in column {what}"))),
    }
}

fn parse_opt(field: &str, what: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, what).map(Some)
    }
}

fn parse_int<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Serialize(format!("bad integer {field:?} in column {what}")))
}

pub fn traces_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 200 + TRACE_HEADER.len() + 1);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.slot,
            r.user,
            r.scheduled,
            fmt_opt(r.sinr_db),
            fmt_f64(r.rate_bps),
            fmt_f64(r.served_bits),
            fmt_f64(r.queue_bits),
            fmt_f64(r.buffer_s),
            r.stalls,
            r.quality,
            fmt_f64(r.played_bits),
            fmt_f64(r.kqi_loss),
            fmt_opt(r.latency_ms),
        );
    }
    out
}

pub fn system_csv(rows: &[SystemRow]) -> String {
    let mut out = String::from(SYSTEM_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.slot,
            fmt_f64(r.backlog_bits),
            fmt_f64(r.kqi_loss),
            fmt_f64(r.served_bits),
            r.mode
        );
    }
    out
}

pub fn users_csv(report: &MetricsReport) -> String {
    let mut out = String::from(USER_HEADER);
    out.push('\n');
    for u in &report.users {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            u.user,
            fmt_f64(u.throughput_bps),
            fmt_f64(u.served_bits),
            fmt_f64(u.download_ratio),
            fmt_opt(u.pearson),
            u.stall_count,
            fmt_f64(u.mean_kqi_loss),
            fmt_f64(u.mean_queue_bits),
            fmt_f64(u.mean_quality),
            fmt_f64(u.mean_psnr_db),
            fmt_opt(u.mean_latency_ms),
        );
    }
    out
}

pub fn aggregate_csv(report: &MetricsReport) -> String {
    let a = &report.aggregate;
    format!(
        "{AGGREGATE_HEADER}\n{},{},{},{},{},{},{},{},{}\n",
        a.n_slots,
        fmt_f64(a.cell_edge_throughput_bps),
        fmt_f64(a.mean_throughput_bps),
        fmt_opt(a.mean_latency_ms),
        a.total_stalls,
        fmt_f64(a.mean_backlog_bits),
        fmt_f64(a.mean_sum_kqi_loss),
        a.jt_slots,
        a.cscb_slots
    )
}

fn rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = Vec<&'a str>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        other => return Err(Error::Serialize(format!("unexpected header {other:?}"))),
    }
    Ok(lines.filter(|l| !l.is_empty()).map(|l| l.split(',').collect()))
}

fn expect_len(f: &[&str], n: usize) -> Result<()> {
    if f.len() == n {
        Ok(())
    } else {
        Err(Error::Serialize(format!("expected {n} fields, found {}", f.len())))
    }
}

pub fn parse_traces_csv(text: &str) -> Result<Vec<TraceRow>> {
    rows(text, TRACE_HEADER)?
        .map(|f| {
            expect_len(&f, 13)?;
            Ok(TraceRow {
                slot: parse_int(f[0], "slot")?,
                user: parse_int(f[1], "user")?,
                scheduled: parse_int(f[2], "scheduled")?,
                sinr_db: parse_opt(f[3], "sinr_db")?,
                rate_bps: parse_f64(f[4], "rate_bps")?,
                served_bits: parse_f64(f[5], "served_bits")?,
                queue_bits: parse_f64(f[6], "queue_bits")?,
                buffer_s: parse_f64(f[7], "buffer_s")?,
                stalls: parse_int(f[8], "stalls")?,
                quality: parse_int(f[9], "quality")?,
                played_bits: parse_f64(f[10], "played_bits")?,
                kqi_loss: parse_f64(f[11], "kqi_loss")?,
                latency_ms: parse_opt(f[12], "latency_ms")?,
            })
        })
        .collect()
}

pub fn parse_system_csv(text: &str) -> Result<Vec<SystemRow>> {
    rows(text, SYSTEM_HEADER)?
        .map(|f| {
            expect_len(&f, 5)?;
            let mode = match f[4] {
                "jt" => Mode::Jt,
                "cscb" => Mode::Cscb,
                other => return Err(Error::Serialize(format!("bad mode {other:?}"))),
            };
            Ok(SystemRow {
                slot: parse_int(f[0], "slot")?,
                backlog_bits: parse_f64(f[1], "backlog_bits")?,
                kqi_loss: parse_f64(f[2], "kqi_loss")?,
                served_bits: parse_f64(f[3], "served_bits")?,
                mode,
            })
        })
        .collect()
}

/// Replaces every float in a JSON tree by its 17-digit rendering.
fn fix_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) if x.is_finite() => Number::from_string_unchecked(fmt_f64(x)).into(),
            Some(x) => Value::String(fmt_f64(x)),
            None => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(fix_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, fix_floats(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with fixed float formatting.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Serialize(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&fix_floats(v)).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `traces.csv`, `system.csv`, `users.csv`, `aggregate.csv` and/or
/// `metrics.json` into `dir`, each prefixed by `prefix`. Returns the paths
/// in write order.
pub fn emit_metrics(report: &MetricsReport, dir: &Path, prefix: &str, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Csv => {
                for (name, body) in [
                    ("traces.csv", traces_csv(&report.traces)),
                    ("system.csv", system_csv(&report.system)),
                    ("users.csv", users_csv(report)),
                    ("aggregate.csv", aggregate_csv(report)),
                ] {
                    let path = dir.join(format!("{prefix}{name}"));
                    write_file(&path, &body)?;
                    written.push(path);
                }
            }
            Format::Json => {
                let path = dir.join(format!("{prefix}metrics.json"));
                write_file(&path, &to_json(report)?)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Two-column plot data.
pub fn xy_csv(x_name: &str, y_name: &str, x: &[f64], y: &[f64]) -> String {
    let mut out = format!("{x_name},{y_name}\n");
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(out, "{},{}", fmt_f64(*a), fmt_f64(*b));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Aggregate;

    fn sample() -> MetricsReport {
        MetricsReport {
            seed: 3,
            slot_duration_s: 1e-3,
            engagement_window_slots: 2,
            traces: vec![TraceRow {
                slot: 0,
                user: 0,
                scheduled: true,
                sinr_db: Some(0.1 + 0.2),
                rate_bps: 1.0 / 3.0,
                served_bits: 12.0,
                queue_bits: 5.5,
                buffer_s: 2.0,
                stalls: 1,
                quality: 3,
                played_bits: 8000.0,
                kqi_loss: 0.25,
                latency_ms: None,
            }],
            system: vec![SystemRow {
                slot: 0,
                backlog_bits: 5.5,
                kqi_loss: 0.25,
                served_bits: 12.0,
                mode: Mode::Cscb,
            }],
            users: Vec::new(),
            aggregate: Aggregate::default(),
        }
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        assert_eq!(parse_traces_csv(&traces_csv(&r.traces)).unwrap(), r.traces);
        assert_eq!(parse_system_csv(&system_csv(&r.system)).unwrap(), r.system);
    }

    #[test]
    fn empty_report_is_headers_only() {
        let r = MetricsReport::default();
        assert_eq!(traces_csv(&r.traces), format!("{TRACE_HEADER}\n"));
        let json: Value = serde_json::from_str(&to_json(&r).unwrap()).unwrap();
        assert_eq!(json["traces"], Value::Array(Vec::new()));
    }

    #[test]
    fn json_uses_fixed_floats() {
        let s = to_json(&sample()).unwrap();
        assert!(s.contains("3.3333333333333331e-1"));
        assert!(s.contains("\"seed\": 3"));
        assert_eq!(s, to_json(&sample()).unwrap());
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_metrics(&sample(), dir.path(), "run_", &[Format::Csv, Format::Json]).unwrap();
        assert_eq!(paths.len(), 5);
        assert!(paths.iter().all(|p| p.exists()));
        let bad = dir.path().join("run_traces.csv").join("x");
        assert!(matches!(emit_metrics(&sample(), &bad, "", &[Format::Csv]), Err(Error::Io { .. })));
    }
}
