//! Synthetic datasets and CSV I/O.
//!
//! Datasets are plain numeric CSV: one point per row, `d` comma-separated
//! fields, '.' decimal, LF line endings, no header. Weights files hold one
//! value per line. Values are written with 17 significant digits so a
//! write/read round trip reproduces every f64 bit-exactly.

use crate::points::PointSet;
use crate::rng::{derive_seed, SplitMix64};
use crate::{Error, Result};

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Mixture of `n_centers` Gaussian blobs: centers ~ N(0, I), points jittered
/// with standard deviation `blob_scale`.
pub fn gaussian_blobs(
    n: usize,
    d: usize,
    n_centers: usize,
    blob_scale: f64,
    seed: u64,
) -> Result<PointSet> {
    if n == 0 || d == 0 || n_centers == 0 {
        return Err(Error::InvalidParameter("blob dataset needs n, d, centers ≥ 1".into()));
    }
    if !(blob_scale.is_finite() && blob_scale > 0.0) {
        return Err(Error::InvalidParameter("blob scale must be positive".into()));
    }
    let mut rng = SplitMix64::new(derive_seed(seed, 0xb70b));
    let mut centers = vec![0.0; n_centers * d];
    rng.fill_normal(&mut centers);
    let mut data = vec![0.0; n * d];
    for row in data.chunks_exact_mut(d) {
        let c = rng.below(n_centers);
        for (k, v) in row.iter_mut().enumerate() {
            *v = centers[c * d + k] + blob_scale * rng.normal();
        }
    }
    PointSet::from_flat(data, n, d)
}

/// Uniform points in the cube `[-1, 1]^d`.
pub fn uniform_cube(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("cube dataset needs n, d ≥ 1".into()));
    }
    let mut rng = SplitMix64::new(derive_seed(seed, 0xc0be));
    let data: Vec<f64> = (0..n * d).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
    PointSet::from_flat(data, n, d)
}

pub fn write_points_csv<P: AsRef<Path>>(points: &PointSet, path: P) -> Result<()> {
    let mut out = String::new();
    for row in points.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_points_csv<P: AsRef<Path>>(path: P) -> Result<PointSet> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let row: Vec<f64> = t
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {f:?}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse(format!(
                    "line {}: {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty dataset".into()));
    }
    PointSet::from_rows(&rows)
}

/// One value per line.
pub fn write_values<P: AsRef<Path>>(values: &[f64], path: P) -> Result<()> {
    let mut out = String::new();
    for v in values {
        out.push_str(&format!("{v:.16e}\n"));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_values<P: AsRef<Path>>(path: P) -> Result<Vec<f64>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {t:?}: {e}", lineno + 1)))?,
        );
    }
    Ok(out)
}
