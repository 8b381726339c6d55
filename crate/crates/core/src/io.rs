//! CSV codec for sweep rows and JSON helpers for reports.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sweep::{RowStatus, SweepRow};

pub const CSV_HEADER: [&str; 14] = [
    "F",
    "B",
    "b",
    "Nx",
    "Ny",
    "e_alpha",
    "re_E",
    "im_E",
    "gamma",
    "tau",
    "delta_b",
    "delta_N",
    "continuum_gap",
    "status",
];

/// 17 significant digits: enough to round-trip every `f64`.
fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn status_str(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Ok => "ok",
        RowStatus::Unresolved => "unresolved",
        RowStatus::NotFound => "not-found",
    }
}

pub fn write_results<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        let floats = [r.electric, r.magnetic, r.translation].map(fmt_f64);
        let rest = [
            r.e_alpha,
            r.re_e,
            r.im_e,
            r.gamma,
            r.tau,
            r.delta_b,
            r.delta_n,
            r.continuum_gap,
        ]
        .map(fmt_f64);
        let mut rec: Vec<String> = floats.to_vec();
        rec.push(r.nx.to_string());
        rec.push(r.ny.to_string());
        rec.extend(rest);
        rec.push(status_str(r.status).to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::MalformedRow {
            row: 0,
            msg: format!("header must be `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::MalformedRow {
            row,
            msg: e.to_string(),
        })?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::MalformedRow {
                row,
                msg: format!("expected {} fields, got {}", CSV_HEADER.len(), rec.len()),
            });
        }
        let float = |k: usize| -> Result<f64> {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::MalformedRow {
                    row,
                    msg: format!("column {}: {e}", CSV_HEADER[k]),
                })
        };
        let int = |k: usize| -> Result<usize> {
            rec[k]
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::MalformedRow {
                    row,
                    msg: format!("column {}: {e}", CSV_HEADER[k]),
                })
        };
        let status = match rec[13].trim() {
            "ok" => RowStatus::Ok,
            "unresolved" => RowStatus::Unresolved,
            "not-found" => RowStatus::NotFound,
            other => {
                return Err(Error::MalformedRow {
                    row,
                    msg: format!("unknown status `{other}`"),
                })
            }
        };
        rows.push(SweepRow {
            electric: float(0)?,
            magnetic: float(1)?,
            translation: float(2)?,
            nx: int(3)?,
            ny: int(4)?,
            e_alpha: float(5)?,
            re_e: float(6)?,
            im_e: float(7)?,
            gamma: float(8)?,
            tau: float(9)?,
            delta_b: float(10)?,
            delta_n: float(11)?,
            continuum_gap: float(12)?,
            status,
        });
    }
    Ok(rows)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}
