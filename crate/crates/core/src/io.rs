//! CSV and JSON file formats.
//!
//! Floats are written with Rust's shortest round-trip representation, so
//! reading a file back yields bit-identical values and identical inputs give
//! byte-identical files.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{ScalingFit, SweepRow};
use crate::grid::{MomentumGrid, ProbeWaveFunction};
use crate::spectrum::PositionAmplitudes;
use crate::variational::{Branch, StationaryResult};

pub const PROBE_HEADER: [&str; 3] = ["k", "re", "im"];
pub const SPECTRUM_HEADER: [&str; 5] = ["n", "x", "re", "im", "prob"];
pub const SWEEP_HEADER: [&str; 5] = ["alpha", "shift", "variance_f", "snr", "captured_weight"];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse(format!("{other:?}")),
        }
    } else {
        Error::Parse(e.to_string())
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn read_table<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let found = rdr.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected header {:?}, found {:?}",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad number {f:?}", line + 1)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse(format!("row {}: non-finite value", line + 1)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_probe_csv<W: Write>(probe: &ProbeWaveFunction, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(PROBE_HEADER).map_err(csv_err)?;
    for (k, v) in probe.grid().nodes().zip(probe.values()) {
        wr.write_record([num(k), num(v.re), num(v.im)]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a probe written by [`write_probe_csv`]. The `k` column must be a
/// uniform grid; its first and last entries define the domain.
pub fn read_probe_csv<R: Read>(r: R) -> Result<ProbeWaveFunction> {
    let rows = read_table(r, &PROBE_HEADER)?;
    if rows.len() < MomentumGrid::MIN_POINTS {
        return Err(Error::InvalidGrid(format!(
            "need at least {} rows, got {}",
            MomentumGrid::MIN_POINTS,
            rows.len()
        )));
    }
    let grid = MomentumGrid::new(rows[0][0], rows[rows.len() - 1][0], rows.len())?;
    let tol = 1e-9 * (grid.k_max() - grid.k_min()).max(1.0);
    for (j, row) in rows.iter().enumerate() {
        if (row[0] - grid.node(j)).abs() > tol {
            return Err(Error::InvalidGrid(format!("row {}: k = {} is off the uniform grid", j + 1, row[0])));
        }
    }
    let values = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
    ProbeWaveFunction::new(grid, values)
}

pub fn write_spectrum_csv<W: Write>(amps: &PositionAmplitudes, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(SPECTRUM_HEADER).map_err(csv_err)?;
    for (n, c) in amps.iter() {
        wr.write_record([n.to_string(), (2 * n).to_string(), num(c.re), num(c.im), num(c.norm_sqr())])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a spectrum written by [`write_spectrum_csv`]: consecutive `n`,
/// `x = 2n`, and `prob = re^2 + im^2`.
pub fn read_spectrum_csv<R: Read>(r: R) -> Result<PositionAmplitudes> {
    let rows = read_table(r, &SPECTRUM_HEADER)?;
    let Some(first) = rows.first() else {
        return Err(Error::Parse("spectrum has no rows".into()));
    };
    let as_int = |v: f64, what: &str| -> Result<i64> {
        if v.fract() != 0.0 || v.abs() > 1e15 {
            return Err(Error::Parse(format!("{what} must be an integer, got {v}")));
        }
        Ok(v as i64)
    };
    let n_min = as_int(first[0], "n")?;
    let mut coeffs = Vec::with_capacity(rows.len());
    for (j, row) in rows.iter().enumerate() {
        let n = as_int(row[0], "n")?;
        if n != n_min + j as i64 {
            return Err(Error::Parse(format!("row {}: n = {n} breaks the consecutive run", j + 1)));
        }
        if as_int(row[1], "x")? != 2 * n {
            return Err(Error::Parse(format!("row {}: x = {} is not 2n", j + 1, row[1])));
        }
        let c = Complex64::new(row[2], row[3]);
        if (c.norm_sqr() - row[4]).abs() > 1e-12 * row[4].abs().max(1.0) {
            return Err(Error::Parse(format!("row {}: prob does not match |c|^2", j + 1)));
        }
        coeffs.push(c);
    }
    PositionAmplitudes::new(n_min, coeffs)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        wr.write_record([num(r.alpha), num(r.shift), num(r.variance_f), num(r.snr), num(r.captured_weight)])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowDeltaX {
    pub alpha: f64,
    pub delta_x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub alpha: f64,
    pub error: String,
}

/// JSON written next to a sweep CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub family: String,
    pub params: std::collections::BTreeMap<String, f64>,
    pub weak_value: [f64; 2],
    pub cutoff: i64,
    pub fit: Option<ScalingFit>,
    pub fit_error: Option<String>,
    /// Gauge-invariant shift of every row.
    pub delta_x: Vec<RowDeltaX>,
    pub failures: Vec<RowFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryExport {
    pub shift: f64,
    pub grad_norm: f64,
    pub mu_tilde: [f64; 2],
    pub branch: Branch,
    pub iterations: usize,
    pub probe_csv_path: String,
}

impl StationaryExport {
    pub fn new(result: &StationaryResult, probe_csv_path: impl Into<String>) -> Self {
        Self {
            shift: result.shift,
            grad_norm: result.grad_norm,
            mu_tilde: [result.mu_tilde.re, result.mu_tilde.im],
            branch: result.branch,
            iterations: result.iterations,
            probe_csv_path: probe_csv_path.into(),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::position_eigenstate;

    #[test]
    fn probe_round_trip_is_exact() {
        let g = MomentumGrid::symmetric(64).unwrap();
        let p = ProbeWaveFunction::from_fn(&g, |k| Complex64::new((-k * k).exp() / 3.0, k.sin() * 1e-200)).unwrap();
        let mut buf = Vec::new();
        write_probe_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,re,im\n"));
        let q = read_probe_csv(buf.as_slice()).unwrap();
        assert_eq!(p.values(), q.values());
        assert_eq!(q.grid().n_points(), 64);
    }

    #[test]
    fn probe_rejects_bad_input() {
        assert!(read_probe_csv("k,re\n0,1\n".as_bytes()).is_err());
        assert!(read_probe_csv("k,re,im\n0,1,0\n1,1,0\n".as_bytes()).is_err());
        let mut text = String::from("k,re,im\n");
        for j in 0..20 {
            let k = if j == 7 { 100.0 } else { j as f64 };
            text.push_str(&format!("{k},1,0\n"));
        }
        assert!(matches!(read_probe_csv(text.as_bytes()), Err(Error::InvalidGrid(_))));
        assert!(read_probe_csv("k,re,im\n0,nan,0\n".as_bytes()).is_err());
    }

    #[test]
    fn spectrum_round_trip() {
        let amps = PositionAmplitudes::new(-2, vec![Complex64::new(0.1, -0.2), Complex64::new(0.0, 0.0), Complex64::new(0.9, 0.3)]).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&amps, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("n,x,re,im,prob\n-2,-4,"));
        let back = read_spectrum_csv(buf.as_slice()).unwrap();
        assert_eq!(back, amps);
        assert!(read_spectrum_csv("n,x,re,im,prob\n0,1,1,0,1\n".as_bytes()).is_err());
        assert!(read_spectrum_csv("n,x,re,im,prob\n0,0,1,0,1\n2,4,1,0,1\n".as_bytes()).is_err());
        assert!(read_spectrum_csv("n,x,re,im,prob\n0,0,1,0,0.5\n".as_bytes()).is_err());
        assert!(read_spectrum_csv("n,x,re,im,prob\n".as_bytes()).is_err());
    }

    #[test]
    fn sweep_and_stationary_formats() {
        let rows = [SweepRow { alpha: 4.0, shift: 4.0, variance_f: 16.0, snr: 1.0, captured_weight: 1.0, delta_x: 1.0 }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "alpha,shift,variance_f,snr,captured_weight\n4.0,4.0,16.0,1.0,1.0\n");

        let res = StationaryResult {
            probe: position_eigenstate(&MomentumGrid::symmetric(32).unwrap(), 0.0),
            shift: 1.5,
            grad_norm: 1e-9,
            mu_tilde: Complex64::new(0.3, 0.0),
            branch: Branch::Normalizable,
            iterations: 2,
        };
        let mut buf = Vec::new();
        write_json(&StationaryExport::new(&res, "probe.csv"), &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["mu_tilde"], serde_json::json!([0.3, 0.0]));
        assert_eq!(v["branch"], "Normalizable");
        assert_eq!(v["probe_csv_path"], "probe.csv");
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        assert_eq!(keys.len(), 6);
    }
}
