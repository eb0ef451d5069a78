//! Synthetic generators and CSV ingestion.
//!
//! Generators are pure functions of their parameters and seed. Real data is
//! read from CSV (header row, optional id column, all other columns numeric)
//! and normalized into the unit ball. No skyline pre-filtering is done.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_dataset, Dataset, Tuple};
use crate::scalar::Scalar;

pub const DEFAULT_CLUSTERS: usize = 5;
pub const DEFAULT_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Sphere,
    Clusters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_clusters")]
    pub num_clusters: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_clusters() -> usize {
    DEFAULT_CLUSTERS
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

impl GenSpec {
    pub fn generate<T: Scalar>(&self) -> Result<Dataset<T>> {
        match self.kind {
            GenKind::Sphere => gen_sphere(self.n, self.d, self.seed),
            GenKind::Clusters => {
                gen_clusters(self.n, self.d, self.num_clusters, self.sigma, self.seed)
            }
        }
    }
}

fn unit_gaussian_direction(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if d == 0 {
        return Err(Error::InvalidValue("dimension must be >= 1".into()));
    }
    Ok(())
}

/// `n` points drawn uniformly from the unit sphere in `R^d`.
pub fn gen_sphere<T: Scalar>(n: usize, d: usize, seed: u64) -> Result<Dataset<T>> {
    check_shape(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Vec<T>> = (0..n)
        .map(|_| {
            unit_gaussian_direction(d, &mut rng)
                .into_iter()
                .map(T::lit)
                .collect()
        })
        .collect();
    normalize_dataset(raw)
}

/// Gaussian clusters with spread `sigma` around `k` random sphere points,
/// points assigned to centers round-robin, normalized into the unit ball.
pub fn gen_clusters<T: Scalar>(
    n: usize,
    d: usize,
    k: usize,
    sigma: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    check_shape(n, d)?;
    if k == 0 || k > n {
        return Err(Error::InvalidValue("cluster count must satisfy 1 <= k <= n".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidValue("sigma must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k).map(|_| unit_gaussian_direction(d, &mut rng)).collect();
    let raw: Vec<Vec<T>> = (0..n)
        .map(|i| {
            centers[i % k]
                .iter()
                .map(|&c| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    T::lit(c + sigma * noise)
                })
                .collect()
        })
        .collect();
    normalize_dataset(raw)
}

/// Reads a dataset from CSV text.
pub fn read_csv<T: Scalar, R: Read>(reader: R, id_column: Option<&str>) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(0, 0, e))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let id_idx = match id_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidValue(format!("id column `{name}` not found in header"))
        })?),
        None => None,
    };
    let attributes: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != id_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if attributes.is_empty() {
        return Err(Error::InvalidValue("csv has no numeric columns".into()));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        // Row numbers are 1-based and count the header as row 1.
        let row_no = r + 2;
        let record = record.map_err(|e| csv_error(row_no, 0, e))?;
        let mut values = Vec::with_capacity(attributes.len());
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == id_idx {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Csv {
                row: row_no,
                column: c + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            values.push(T::from_f64(v).ok_or_else(|| Error::Csv {
                row: row_no,
                column: c + 1,
                message: "value not representable".into(),
            })?);
        }
        rows.push(values);
    }
    let ds = normalize_dataset(rows)?.with_attributes(attributes)?;
    match id_idx {
        Some(_) => ds.with_labels(labels),
        None => Ok(ds),
    }
}

fn csv_error(row: usize, column: usize, e: csv::Error) -> Error {
    let (row, column) = match e.position() {
        Some(p) if row == 0 => (p.line() as usize, column),
        _ => (row, column),
    };
    Error::Csv {
        row,
        column,
        message: e.to_string(),
    }
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, id_column: Option<&str>) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(std::io::BufReader::new(file), id_column)
}

/// Writes normalized coordinates with shortest round-trip float formatting.
/// Labels, when present, go to a leading `id` column. The normalization
/// scale is not written, so reading the file back yields scale 1.
pub fn write_csv<T: Scalar, W: Write>(dataset: &Dataset<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<String> = Vec::new();
    if dataset.labels.is_some() {
        header.push("id".into());
    }
    header.extend(dataset.attributes.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (i, t) in dataset.tuples.iter().enumerate() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(labels) = &dataset.labels {
            rec.push(labels[i].clone());
        }
        rec.extend(t.coords.iter().map(|c| format!("{c}")));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn save_csv<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv(dataset, std::io::BufWriter::new(file))
}

/// Builds a dataset directly from already-normalized tuples.
pub fn from_tuples<T: Scalar>(tuples: Vec<Tuple<T>>) -> Result<Dataset<T>> {
    normalize_dataset(tuples.into_iter().map(|t| t.coords).collect())
}
