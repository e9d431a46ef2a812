//! CSV exports: comma separated, header row, LF line endings.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lqr::{GainSample, Trajectory};
use crate::testbed::Component;
use crate::transfer::FrequencyResponse;

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    Error::io(path, source)
}

fn finish(path: &Path, mut w: csv::Writer<std::fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Columns `omega, sigma_max, error`; failed frequencies have an empty
/// value and the reason in `error`.
pub fn write_sigma(path: impl AsRef<Path>, resp: &FrequencyResponse) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["omega", "sigma_max", "error"]).map_err(|e| csv_err(path, e))?;
    for (k, &om) in resp.omegas.iter().enumerate() {
        let (val, err) = match resp.norms[k] {
            Some(s) => (num(s), String::new()),
            None => {
                let msg = resp
                    .failures
                    .iter()
                    .find(|(i, _)| *i == k)
                    .map(|(_, m)| m.clone())
                    .unwrap_or_default();
                (String::new(), msg)
            }
        };
        w.write_record([num(om), val, err]).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Columns `t, x_norm, constraint_residual, u1.., y1..`.
pub fn write_trajectory(path: impl AsRef<Path>, tr: &Trajectory) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let m = tr.u.first().map_or(0, Vec::len);
    let p = tr.y.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string(), "x_norm".into(), "constraint_residual".into()];
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.extend((1..=p).map(|i| format!("y{i}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for k in 0..tr.t.len() {
        let mut row = vec![num(tr.t[k]), num(tr.x_norm[k]), num(tr.constraint_residual[k])];
        row.extend(tr.u[k].iter().map(|&v| num(v)));
        row.extend(tr.y[k].iter().map(|&v| num(v)));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Columns `input, component, i, j, x, y, gain`.
pub fn write_gains(path: impl AsRef<Path>, gains: &[GainSample]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["input", "component", "i", "j", "x", "y", "gain"])
        .map_err(|e| csv_err(path, e))?;
    for g in gains {
        let comp = match g.component {
            Component::U => "u",
            Component::V => "v",
        };
        w.write_record([
            g.input.to_string(),
            comp.to_string(),
            g.i.to_string(),
            g.j.to_string(),
            num(g.x),
            num(g.y),
            num(g.gain),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}
