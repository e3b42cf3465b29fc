//! Synthetic nearest-neighbor network benchmarks, Gaussian sampling, penalty
//! reparameterization, and problem file I/O.
//!
//! The generator scatters `p` points uniformly on the unit square and links
//! two points when each is among the other's `neighbors` nearest neighbors.
//! That common network is shared by every class; each class then receives
//! `ceil(N / extra_frac_denom)` private edges at positions left empty by the
//! common network (`N` = number of common edges). Edge values are drawn
//! uniformly from `[-1, -0.5] ∪ [0.5, 1]`, and each diagonal entry is set to
//! its row's absolute off-diagonal sum plus `0.1`, which makes every precision
//! matrix strictly diagonally dominant and hence positive definite.
//!
//! # File formats
//!
//! * A *manifest* is a JSON document
//!   `{"mode": "covariance" | "observations", "p": .., "K": .., "files": [..], "n": [..]}`
//!   whose file paths are resolved relative to the manifest's directory.
//! * A covariance CSV is a dense `p x p` comma-separated matrix without header.
//! * An observations CSV has a one-line header followed by `n` rows of `p` values.
//! * Ground truth is written as one precision CSV per class plus
//!   `truth.json`, listing the files and every class's edges as `(i, j, value)`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::{GglParams, PrecisionEnsemble, ProblemData};
use crate::error::{GglError, Result};

/// Diagonal margin added on top of the absolute row sums.
pub const DIAGONAL_MARGIN: f64 = 0.1;

/// Planted precision matrices and their edge structure.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub precisions: PrecisionEnsemble,
    /// Edges `(i, j)`, `i < j`, shared by all classes.
    pub common_edges: Vec<(usize, usize)>,
    /// Class-specific edges, disjoint across classes and from the common set.
    pub extra_edges: Vec<Vec<(usize, usize)>>,
}

impl GroundTruth {
    /// Builds ground truth from precision matrices alone: an entry is an edge
    /// when it is nonzero; edges present in every class are "common".
    pub fn from_precisions(precisions: PrecisionEnsemble) -> Self {
        let (p, k) = (precisions.dim(), precisions.k_classes());
        let mut common_edges = Vec::new();
        let mut extra_edges = vec![Vec::new(); k];
        for i in 0..p {
            for j in (i + 1)..p {
                let present: Vec<bool> = (0..k).map(|c| precisions.get(c, i, j) != 0.0).collect();
                if present.iter().all(|&b| b) {
                    common_edges.push((i, j));
                } else {
                    for (c, &b) in present.iter().enumerate() {
                        if b {
                            extra_edges[c].push((i, j));
                        }
                    }
                }
            }
        }
        GroundTruth {
            precisions,
            common_edges,
            extra_edges,
        }
    }

    pub fn dim(&self) -> usize {
        self.precisions.dim()
    }

    pub fn k_classes(&self) -> usize {
        self.precisions.k_classes()
    }

    /// `N`, the size of the common network.
    pub fn common_edge_count(&self) -> usize {
        self.common_edges.len()
    }

    /// Edge set of class `k`, sorted.
    pub fn class_edges(&self, k: usize) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .common_edges
            .iter()
            .chain(&self.extra_edges[k])
            .copied()
            .collect();
        e.sort_unstable();
        e
    }

    /// Total number of true edges summed over classes.
    pub fn total_edges(&self) -> usize {
        (0..self.k_classes())
            .map(|k| self.common_edges.len() + self.extra_edges[k].len())
            .sum()
    }
}

/// `(1 / n) W^T W` for an `n x p` observation matrix.
pub fn sample_covariance(observations: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = observations.nrows();
    if n == 0 || observations.ncols() == 0 {
        return Err(GglError::InvalidArgument(
            "sample covariance needs a non-empty observation matrix".into(),
        ));
    }
    let mut s = observations.tr_mul(observations) / n as f64;
    crate::ensemble::symmetrize_in_place(&mut s);
    Ok(s)
}

fn edge_value(rng: &mut impl Rng) -> f64 {
    let magnitude = rng.gen_range(0.5..=1.0);
    if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// Mutual `neighbors`-nearest-neighbor graph of the given points, as sorted
/// pairs `(i, j)` with `i < j`. Ties in distance are broken by index.
pub fn mutual_knn(points: &[(f64, f64)], neighbors: usize) -> Vec<(usize, usize)> {
    let p = points.len();
    let lists: Vec<Vec<usize>> = (0..p)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..p)
                .filter(|&j| j != i)
                .map(|j| {
                    let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                    ((dx * dx + dy * dy).sqrt(), j)
                })
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(neighbors).map(|(_, j)| j).collect()
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..p {
        for &j in &lists[i] {
            if i < j && lists[j].contains(&i) {
                edges.push((i, j));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Nearest-neighbor network benchmark with `k_classes` related precision
/// matrices. `extra_frac_denom = 0` disables class-specific edges.
pub fn gen_nn_network(
    p: usize,
    k_classes: usize,
    neighbors: usize,
    extra_frac_denom: usize,
    seed: u64,
) -> Result<GroundTruth> {
    if neighbors == 0 || p < neighbors + 1 {
        return Err(GglError::InvalidArgument(format!(
            "need p >= neighbors + 1 (got p = {p}, neighbors = {neighbors})"
        )));
    }
    if k_classes == 0 {
        return Err(GglError::InvalidArgument("need at least one class".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..p)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let common_edges = mutual_knn(&points, neighbors);
    let n_common = common_edges.len();
    let extras_per_class = if extra_frac_denom == 0 {
        0
    } else {
        n_common.div_ceil(extra_frac_denom)
    };

    let free = p * (p - 1) / 2 - n_common;
    if extras_per_class * k_classes > free {
        return Err(GglError::InvalidArgument(format!(
            "not enough empty positions for {extras_per_class} extra edges in each of {k_classes} classes"
        )));
    }

    let mut base = DMatrix::zeros(p, p);
    let mut taken = vec![false; p * p];
    for &(i, j) in &common_edges {
        let v = edge_value(&mut rng);
        base[(i, j)] = v;
        base[(j, i)] = v;
        taken[i * p + j] = true;
    }

    let mut blocks = Vec::with_capacity(k_classes);
    let mut extra_edges = Vec::with_capacity(k_classes);
    for _ in 0..k_classes {
        let mut m = base.clone();
        let mut extra = Vec::with_capacity(extras_per_class);
        while extra.len() < extras_per_class {
            let i = rng.gen_range(0..p);
            let j = rng.gen_range(0..p);
            let (i, j) = if i < j { (i, j) } else { (j, i) };
            if i == j || taken[i * p + j] {
                continue;
            }
            taken[i * p + j] = true;
            let v = edge_value(&mut rng);
            m[(i, j)] = v;
            m[(j, i)] = v;
            extra.push((i, j));
        }
        extra.sort_unstable();
        for i in 0..p {
            let row: f64 = (0..p).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] = row + DIAGONAL_MARGIN;
        }
        blocks.push(m);
        extra_edges.push(extra);
    }
    Ok(GroundTruth {
        precisions: PrecisionEnsemble::new(blocks)?,
        common_edges,
        extra_edges,
    })
}

/// `n` i.i.d. draws from `N(0, (Sigma^(k))^{-1})` for every class; class `k`
/// uses the random stream seeded with `seed + k`.
pub fn sample_gaussian(truth: &GroundTruth, n: usize, seed: u64) -> Result<Vec<DMatrix<f64>>> {
    if n == 0 {
        return Err(GglError::InvalidArgument("need at least one sample".into()));
    }
    let p = truth.dim();
    truth
        .precisions
        .blocks()
        .iter()
        .enumerate()
        .map(|(k, prec)| {
            let cov = prec
                .clone()
                .cholesky()
                .ok_or_else(|| {
                    GglError::InvalidArgument(format!(
                        "precision matrix {k} is not positive definite"
                    ))
                })?
                .inverse();
            let l = cov
                .cholesky()
                .ok_or_else(|| {
                    GglError::InvalidArgument(format!("covariance {k} is not positive definite"))
                })?
                .l();
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let z = DMatrix::from_fn(p, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            Ok((l * z).transpose())
        })
        .collect()
}

/// `lambda1 = w1 (1 - w2)`, `lambda2 = sqrt(2) w1 w2`: `w1` sets the overall
/// sparsity level and `w2` the share of the group term.
pub fn reparam_to_lambda(w1: f64, w2: f64) -> Result<GglParams> {
    if !(w1 > 0.0 && w1.is_finite()) || !(0.0..1.0).contains(&w2) {
        return Err(GglError::InvalidArgument(format!(
            "need w1 > 0 and 0 <= w2 < 1, got ({w1}, {w2})"
        )));
    }
    GglParams::new(w1 * (1.0 - w2), std::f64::consts::SQRT_2 * w1 * w2)
}

/// Inverse of [`reparam_to_lambda`]: `w1 = lambda1 + lambda2 / sqrt 2`,
/// `w2 = (lambda2 / sqrt 2) / w1`.
pub fn reparam_from_lambda(params: &GglParams) -> Result<(f64, f64)> {
    let half = params.lambda2 / std::f64::consts::SQRT_2;
    let w1 = params.lambda1 + half;
    if !(w1 > 0.0) {
        return Err(GglError::InvalidArgument(
            "reparameterization needs a nonzero penalty".into(),
        ));
    }
    Ok((w1, half / w1))
}

/// On-disk description of a problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub mode: ManifestMode,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub files: Vec<String>,
    pub n: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestMode {
    Covariance,
    Observations,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| GglError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| GglError::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| GglError::io(path, e))
}

/// Reads a numeric CSV; `header` skips the first line.
pub fn read_matrix_csv(path: &Path, header: bool) -> Result<DMatrix<f64>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| GglError::parse(path, e.to_string()))?;
        let row = rec
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    GglError::parse(
                        path,
                        format!("row {}: cannot parse {field:?} as a number", line + 1),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(GglError::parse(
                    path,
                    format!(
                        "row {} has {} fields, expected {}",
                        line + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(GglError::parse(path, "no data rows"));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(
        nr,
        nc,
        rows.into_iter().flatten(),
    ))
}

/// Dense CSV with shortest round-trip number formatting.
pub fn matrix_to_csv(m: &DMatrix<f64>, header: Option<&[String]>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_text(path, &matrix_to_csv(m, None))
}

/// Writes an observations CSV with a `x1,...,xp` header.
pub fn write_observations_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = (1..=m.ncols()).map(|j| format!("x{j}")).collect();
    write_text(path, &matrix_to_csv(m, Some(&header)))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = read_text(path)?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|e| GglError::parse(path, e.to_string()))?;
    if m.files.len() != m.k || m.n.len() != m.k {
        return Err(GglError::parse(
            path,
            format!(
                "K = {} but {} files and {} sample counts listed",
                m.k,
                m.files.len(),
                m.n.len()
            ),
        ));
    }
    Ok(m)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text =
        serde_json::to_string_pretty(manifest).map_err(|e| GglError::Internal(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let f = Path::new(file);
    if f.is_absolute() {
        f.to_path_buf()
    } else {
        base.parent().unwrap_or_else(|| Path::new(".")).join(f)
    }
}

/// Loads a problem from a manifest, computing covariances from raw
/// observations when the manifest is in observation mode.
pub fn load_problem(manifest_path: &Path) -> Result<ProblemData> {
    let m = read_manifest(manifest_path)?;
    let mut covs: Vec<DMatrix<f64>> = Vec::with_capacity(m.k);
    let mut first: Option<(String, usize)> = None;
    for (file, &n) in m.files.iter().zip(&m.n) {
        let path = resolve(manifest_path, file);
        let cov = match m.mode {
            ManifestMode::Covariance => {
                let c = read_matrix_csv(&path, false)?;
                if !c.is_square() {
                    return Err(GglError::Validation(format!(
                        "{} is {}x{}, expected a square covariance",
                        path.display(),
                        c.nrows(),
                        c.ncols()
                    )));
                }
                c
            }
            ManifestMode::Observations => {
                let w = read_matrix_csv(&path, true)?;
                if w.nrows() != n {
                    return Err(GglError::Validation(format!(
                        "{} has {} observations, manifest says {n}",
                        path.display(),
                        w.nrows()
                    )));
                }
                sample_covariance(&w)?
            }
        };
        let dim = cov.nrows();
        match &first {
            None => first = Some((file.clone(), dim)),
            Some((f0, d0)) if *d0 != dim => {
                return Err(GglError::Validation(format!(
                    "dimension mismatch: {f0} has p = {d0} but {file} has p = {dim}"
                )));
            }
            _ => {}
        }
        if dim != m.p {
            return Err(GglError::Validation(format!(
                "{file} has p = {dim}, manifest says {}",
                m.p
            )));
        }
        covs.push(cov);
    }
    ProblemData::new(covs, m.n.clone())
}

/// Writes covariances and a covariance-mode manifest into `dir`; returns the
/// manifest path.
pub fn write_problem(dir: &Path, data: &ProblemData) -> Result<PathBuf> {
    let files: Vec<String> = (0..data.k_classes())
        .map(|k| format!("cov_{}.csv", k + 1))
        .collect();
    for (k, f) in files.iter().enumerate() {
        write_matrix_csv(&dir.join(f), data.covariance(k))?;
    }
    let manifest = Manifest {
        mode: ManifestMode::Covariance,
        p: data.dim(),
        k: data.k_classes(),
        files,
        n: data.sample_counts().to_vec(),
    };
    let path = dir.join("manifest.json");
    write_manifest(&path, &manifest)?;
    Ok(path)
}

/// `truth.json` schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct TruthFile {
    p: usize,
    #[serde(rename = "K")]
    k: usize,
    common_edge_count: usize,
    files: Vec<String>,
    common_edges: Vec<(usize, usize)>,
    /// Per class: `(i, j, value)` for every edge, common ones included.
    edges: Vec<Vec<(usize, usize, f64)>>,
}

/// Writes per-class precision CSVs and `truth.json` into `dir`; returns the
/// path of `truth.json`.
pub fn write_truth(dir: &Path, truth: &GroundTruth) -> Result<PathBuf> {
    let files: Vec<String> = (0..truth.k_classes())
        .map(|k| format!("truth_{}.csv", k + 1))
        .collect();
    for (k, f) in files.iter().enumerate() {
        write_matrix_csv(&dir.join(f), truth.precisions.block(k))?;
    }
    let edges = (0..truth.k_classes())
        .map(|k| {
            truth
                .class_edges(k)
                .into_iter()
                .map(|(i, j)| (i, j, truth.precisions.get(k, i, j)))
                .collect()
        })
        .collect();
    let doc = TruthFile {
        p: truth.dim(),
        k: truth.k_classes(),
        common_edge_count: truth.common_edge_count(),
        files,
        common_edges: truth.common_edges.clone(),
        edges,
    };
    let path = dir.join("truth.json");
    let text = serde_json::to_string_pretty(&doc).map_err(|e| GglError::Internal(e.to_string()))?;
    write_text(&path, &(text + "\n"))?;
    Ok(path)
}

/// Reads ground truth written by [`write_truth`].
pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let text = read_text(path)?;
    let doc: TruthFile =
        serde_json::from_str(&text).map_err(|e| GglError::parse(path, e.to_string()))?;
    if doc.files.len() != doc.k || doc.edges.len() != doc.k {
        return Err(GglError::parse(
            path,
            "file and edge lists must have K entries",
        ));
    }
    let blocks = doc
        .files
        .iter()
        .map(|f| read_matrix_csv(&resolve(path, f), false))
        .collect::<Result<Vec<_>>>()?;
    let precisions = PrecisionEnsemble::new(blocks)?;
    if precisions.dim() != doc.p {
        return Err(GglError::Validation(format!(
            "truth matrices have p = {}, truth.json says {}",
            precisions.dim(),
            doc.p
        )));
    }
    let common: std::collections::BTreeSet<(usize, usize)> =
        doc.common_edges.iter().copied().collect();
    let extra_edges = doc
        .edges
        .iter()
        .map(|list| {
            list.iter()
                .map(|&(i, j, _)| (i, j))
                .filter(|e| !common.contains(e))
                .collect()
        })
        .collect();
    Ok(GroundTruth {
        precisions,
        common_edges: doc.common_edges,
        extra_edges,
    })
}
