//! Stable CSV/JSON emission.  CSV schemas are versioned through their
//! headers; an empty result set still writes the header row.

use std::io;
use std::path::Path;

use nradial_core::Estimate;
use serde::Serialize;

/// Generic CSV writer: header plus stringified rows, RFC-style quoting.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Time-series of estimates: `t, mean, std_error, n_samples`.
pub fn write_estimates_csv(path: &Path, points: &[(f64, Estimate)]) -> io::Result<()> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|(t, e)| {
            vec![
                format!("{t}"),
                format!("{}", e.mean),
                format!("{}", e.std_error),
                format!("{}", e.n_samples),
            ]
        })
        .collect();
    write_csv(path, &["t", "mean", "std_error", "n_samples"], &rows)
}

/// Traced curves: `curve_index, t, re, im, accuracy_flag`.
pub fn write_trace_csv(path: &Path, traces: &nradial_core::loewner::TraceSet) -> io::Result<()> {
    let mut rows = Vec::new();
    for (j, curve) in traces.curves.iter().enumerate() {
        for (k, p) in curve.iter().enumerate() {
            rows.push(vec![
                format!("{j}"),
                format!("{}", traces.times[k]),
                format!("{}", p.z.re),
                format!("{}", p.z.im),
                format!("{}", u8::from(p.flagged)),
            ]);
        }
    }
    write_csv(path, &["curve_index", "t", "re", "im", "accuracy_flag"], &rows)
}

/// Discrepancy study: `h, run_id, K, truncated_flag`.
pub fn write_approx_csv(
    path: &Path,
    rows: &[(f64, u64, Option<f64>)],
) -> io::Result<()> {
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|(h, run, k)| {
            vec![
                format!("{h}"),
                format!("{run}"),
                k.map(|v| format!("{v}")).unwrap_or_default(),
                format!("{}", u8::from(k.is_none())),
            ]
        })
        .collect();
    write_csv(path, &["h", "run_id", "K", "truncated_flag"], &out)
}

/// Lattice sweep: `beta, c, n, partition_sum`.
pub fn write_lattice_csv(path: &Path, rows: &[(f64, f64, usize, f64)]) -> io::Result<()> {
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|(beta, c, n, z)| {
            vec![
                format!("{beta}"),
                format!("{c}"),
                format!("{n}"),
                format!("{z}"),
            ]
        })
        .collect();
    write_csv(path, &["beta", "c", "n", "partition_sum"], &out)
}

/// JSON with the manifest hash alongside the payload.
pub fn write_json<T: Serialize>(path: &Path, manifest_hash: &str, payload: &T) -> io::Result<()> {
    #[derive(Serialize)]
    struct Wrapper<'a, T> {
        manifest_hash: &'a str,
        #[serde(flatten)]
        payload: &'a T,
    }
    let json = serde_json::to_string_pretty(&Wrapper {
        manifest_hash,
        payload,
    })?;
    std::fs::write(path, json)
}
