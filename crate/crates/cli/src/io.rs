//! CSV files exchanged between subcommands.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which reads back to the identical `f64`.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gravinv_core::{IterationRecord, Mesh, StationSet};

pub const STATIONS_HEADER: [&str; 3] = ["x_m", "y_m", "z_m"];
pub const DATA_HEADER: [&str; 5] = ["x_m", "y_m", "z_m", "gz_mgal", "std_mgal"];
pub const MODEL_HEADER: [&str; 7] = ["i", "j", "k", "x_m", "y_m", "z_m", "rho_gcc"];
pub const LOG_HEADER: [&str; 5] = ["iter", "alpha", "chi2", "re", "seconds"];
pub const SPECTRUM_HEADER: [&str; 2] = ["index", "sigma"];
pub const COMPARE_HEADER: [&str; 5] = ["solver", "subspace", "re", "k", "seconds"];
pub const UPRE_HEADER: [&str; 2] = ["alpha", "upre"];

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    Ok(w)
}

fn rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        bail!("{}: expected header {}, found {}", path.display(), header.join(","), found.join(","));
    }
    r.records()
        .map(|rec| rec.with_context(|| format!("malformed row in {}", path.display())))
        .collect()
}

fn float(rec: &csv::StringRecord, col: usize, path: &Path) -> Result<f64> {
    let field = rec.get(col).unwrap_or("");
    field
        .trim()
        .parse()
        .with_context(|| format!("{}: bad number {field:?} in column {}", path.display(), col + 1))
}

fn integer(rec: &csv::StringRecord, col: usize, path: &Path) -> Result<usize> {
    let field = rec.get(col).unwrap_or("");
    field
        .trim()
        .parse()
        .with_context(|| format!("{}: bad index {field:?} in column {}", path.display(), col + 1))
}

pub fn write_stations(path: &Path, stations: &StationSet) -> Result<()> {
    let mut w = writer(path, &STATIONS_HEADER)?;
    for p in stations.points() {
        w.write_record(p.iter().map(|v| fmt(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stations(path: &Path) -> Result<StationSet> {
    let points = rows(path, &STATIONS_HEADER)?
        .iter()
        .map(|r| Ok([float(r, 0, path)?, float(r, 1, path)?, float(r, 2, path)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(StationSet::new(points)?)
}

/// Gravity values at stations with their standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub stations: StationSet,
    pub gz: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn write_data(path: &Path, data: &DataSet) -> Result<()> {
    let mut w = writer(path, &DATA_HEADER)?;
    for ((p, g), s) in data.stations.points().iter().zip(&data.gz).zip(&data.std) {
        w.write_record([fmt(p[0]), fmt(p[1]), fmt(p[2]), fmt(*g), fmt(*s)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_data(path: &Path) -> Result<DataSet> {
    let recs = rows(path, &DATA_HEADER)?;
    let mut points = Vec::with_capacity(recs.len());
    let mut gz = Vec::with_capacity(recs.len());
    let mut std = Vec::with_capacity(recs.len());
    for r in &recs {
        points.push([float(r, 0, path)?, float(r, 1, path)?, float(r, 2, path)?]);
        gz.push(float(r, 3, path)?);
        std.push(float(r, 4, path)?);
    }
    Ok(DataSet {
        stations: StationSet::new(points)?,
        gz,
        std,
    })
}

pub fn write_model(path: &Path, mesh: &Mesh, model: &[f64]) -> Result<()> {
    let mut w = writer(path, &MODEL_HEADER)?;
    for (idx, rho) in model.iter().enumerate() {
        let (i, j, k) = mesh.ijk(idx);
        let c = mesh.cell_center(idx);
        w.write_record([
            i.to_string(),
            j.to_string(),
            k.to_string(),
            fmt(c[0]),
            fmt(c[1]),
            fmt(c[2]),
            fmt(*rho),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a model laid out on `mesh`; rows may come in any order but every
/// cell must appear once.
pub fn read_model(path: &Path, mesh: &Mesh) -> Result<Vec<f64>> {
    let [nx, ny, nz] = mesh.counts();
    let mut model = vec![f64::NAN; mesh.len()];
    for r in rows(path, &MODEL_HEADER)? {
        let (i, j, k) = (integer(&r, 0, path)?, integer(&r, 1, path)?, integer(&r, 2, path)?);
        if i >= nx || j >= ny || k >= nz {
            bail!("{}: cell ({i},{j},{k}) outside the {nx}x{ny}x{nz} mesh", path.display());
        }
        model[mesh.index(i, j, k)] = float(&r, 6, path)?;
    }
    if let Some(missing) = model.iter().position(|v| v.is_nan()) {
        bail!("{}: no density for cell {:?}", path.display(), mesh.ijk(missing));
    }
    Ok(model)
}

pub fn write_log(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut w = writer(path, &LOG_HEADER)?;
    for r in records {
        w.write_record([
            r.iteration.to_string(),
            fmt(r.alpha),
            fmt(r.chi2),
            r.relative_error.map(fmt).unwrap_or_default(),
            fmt(r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of `log.csv`; `re` is empty when no true model was given.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub alpha: f64,
    pub chi2: f64,
    pub re: Option<f64>,
    pub seconds: f64,
}

pub fn read_log(path: &Path) -> Result<Vec<LogRow>> {
    rows(path, &LOG_HEADER)?
        .iter()
        .map(|r| {
            let re = match r.get(3).map(str::trim) {
                None | Some("") => None,
                Some(_) => Some(float(r, 3, path)?),
            };
            Ok(LogRow {
                iter: integer(r, 0, path)?,
                alpha: float(r, 1, path)?,
                chi2: float(r, 2, path)?,
                re,
                seconds: float(r, 4, path)?,
            })
        })
        .collect()
}

/// 1-based index, descending values.
pub fn write_spectrum(path: &Path, sigma: &[f64]) -> Result<()> {
    let mut w = writer(path, &SPECTRUM_HEADER)?;
    for (i, s) in sigma.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt(*s)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum(path: &Path) -> Result<Vec<f64>> {
    rows(path, &SPECTRUM_HEADER)?
        .iter()
        .map(|r| float(r, 1, path))
        .collect()
}

pub fn write_upre(path: &Path, grid: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(path, &UPRE_HEADER)?;
    for (a, u) in grid {
        w.write_record([fmt(*a), fmt(*u)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub solver: String,
    pub subspace: usize,
    pub re: Option<f64>,
    pub k: usize,
    pub seconds: f64,
}

pub fn write_compare(path: &Path, rows_out: &[CompareRow]) -> Result<()> {
    let mut w = writer(path, &COMPARE_HEADER)?;
    for r in rows_out {
        w.write_record([
            r.solver.clone(),
            r.subspace.to_string(),
            r.re.map(fmt).unwrap_or_default(),
            r.k.to_string(),
            fmt(r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_compare(path: &Path) -> Result<Vec<CompareRow>> {
    rows(path, &COMPARE_HEADER)?
        .iter()
        .map(|r| {
            let re = match r.get(2).map(str::trim) {
                None | Some("") => None,
                Some(_) => Some(float(r, 2, path)?),
            };
            Ok(CompareRow {
                solver: r.get(0).unwrap_or("").to_owned(),
                subspace: integer(r, 1, path)?,
                re,
                k: integer(r, 3, path)?,
                seconds: float(r, 4, path)?,
            })
        })
        .collect()
}
