use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::integrator::Record;
use crate::io::fmt_f64;
use crate::scenarios::{SweepRow, SweepSpec};

pub const TRAJECTORY_HEADER: [&str; 9] = [
    "t",
    "x",
    "pi_F",
    "pi_E",
    "N",
    "s",
    "g_eff",
    "Pi",
    "neg_pi_E_flag",
];

fn csv_err(e: ::csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn writer<W: Write>(out: W) -> ::csv::Writer<W> {
    ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Every `stride`-th record starting with the first, so `ceil(len / stride)` rows.
pub fn strided(records: &[Record<f64>], stride: usize) -> Result<Vec<Record<f64>>> {
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be >= 1".into()));
    }
    Ok(records.iter().step_by(stride).copied().collect())
}

pub fn write_trajectory<W: Write>(out: W, records: &[Record<f64>], stride: usize) -> Result<()> {
    let rows = strided(records, stride)?;
    let mut w = writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for r in &rows {
        let flag = if r.neg_pi_e { "1" } else { "0" };
        w.write_record([
            fmt_f64(r.t).as_str(),
            &fmt_f64(r.x),
            &fmt_f64(r.pi_f),
            &fmt_f64(r.pi_e),
            &fmt_f64(r.n),
            &fmt_f64(r.s),
            &fmt_f64(r.g_eff),
            &fmt_f64(r.pi_total),
            flag,
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_to_string(records: &[Record<f64>], stride: usize) -> Result<String> {
    let mut buf = Vec::new();
    write_trajectory(&mut buf, records, stride)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Parses a trajectory CSV written by [`write_trajectory`].
pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<Record<f64>>> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::Parse(format!("unexpected CSV header {:?}", header)));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let num = |k: usize| -> Result<f64> {
            row[k].parse::<f64>().map_err(|e| {
                Error::Parse(format!(
                    "row {}, column {}: {e}",
                    line + 1,
                    TRAJECTORY_HEADER[k]
                ))
            })
        };
        let neg_pi_e = match &row[8] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse(format!(
                    "row {}, column neg_pi_E_flag: expected 0 or 1, got {other:?}",
                    line + 1
                )))
            }
        };
        out.push(Record {
            t: num(0)?,
            x: num(1)?,
            pi_f: num(2)?,
            pi_e: num(3)?,
            n: num(4)?,
            s: num(5)?,
            g_eff: num(6)?,
            pi_total: num(7)?,
            neg_pi_e,
        });
    }
    Ok(out)
}

/// Regime map: one row per sweep cell, coordinates then diagnostics or the error.
pub fn write_sweep<W: Write>(out: W, sweep: &SweepSpec, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["cell".to_string()];
    header.extend(sweep.axes.iter().map(|a| a.path.clone()));
    header.extend(
        [
            "regime", "x_T", "pi_F_T", "pi_E_T", "N_T", "peak_Pi", "error",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut fields = vec![row.cell.to_string()];
        fields.extend(row.coordinates.iter().map(|c| match c {
            crate::scenarios::AxisValue::Number(v) => fmt_f64(*v),
            other => other.to_string(),
        }));
        match &row.outcome {
            Ok(d) => {
                fields.push(d.regime.to_string());
                for v in [
                    d.x_terminal,
                    d.pi_f_terminal,
                    d.pi_e_terminal,
                    d.n_terminal,
                    d.peak_pi,
                ] {
                    fields.push(fmt_f64(v));
                }
                fields.push(String::new());
            }
            Err(e) => {
                fields.push("Unclassified".to_string());
                fields.extend(std::iter::repeat_n(String::new(), 5));
                fields.push(format!("{}: {e}", e.name()));
            }
        }
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
