//! Bias detector: PCA projection of the 4-dim issue vector down to 3
//! dimensions, then a logistic classifier on the projection. Trained against
//! a synthetic labeling oracle that thresholds the total issue scalar.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::FairserveError;
use crate::metrics::{total_issue_scalar, IssueScoreVector, ScalarMode};

pub const PCA_IN: usize = 4;
pub const PCA_OUT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: [f64; PCA_IN],
    /// Rows are orthonormal principal directions, eigenvalue-descending.
    pub components: [[f64; PCA_IN]; PCA_OUT],
    pub explained_variance: [f64; PCA_OUT],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: [f64; PCA_OUT],
    pub bias_term: f64,
    pub threshold: f64,
}

impl Default for LogisticModel {
    fn default() -> Self {
        LogisticModel { weights: [0.0; PCA_OUT], bias_term: 0.0, threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledEpoch {
    pub issue_vector: IssueScoreVector,
    pub label: u8,
}

/// Base label thresholds the scalar; flipped with probability `noise_rate`.
pub fn oracle_label<R: Rng>(
    v: &IssueScoreVector,
    threshold: f64,
    noise_rate: f64,
    mode: ScalarMode,
    rng: &mut R,
) -> u8 {
    let base = (total_issue_scalar(v, mode) > threshold) as u8;
    if noise_rate > 0.0 && rng.gen_bool(noise_rate) {
        1 - base
    } else {
        base
    }
}

/// Jacobi eigendecomposition of a symmetric matrix. Returns (eigenvalues,
/// eigenvectors as columns), unsorted.
pub fn jacobi_eigen(mut a: [[f64; PCA_IN]; PCA_IN]) -> ([f64; PCA_IN], [[f64; PCA_IN]; PCA_IN]) {
    let mut v = [[0.0; PCA_IN]; PCA_IN];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..PCA_IN {
            for q in (p + 1)..PCA_IN {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..PCA_IN {
            for q in (p + 1)..PCA_IN {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..PCA_IN {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..PCA_IN {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut evals = [0.0; PCA_IN];
    for i in 0..PCA_IN {
        evals[i] = a[i][i];
    }
    (evals, v)
}

/// Sample covariance (n-1 denominator) of centered 4-vectors.
pub fn covariance(data: &[[f64; PCA_IN]], mean: &[f64; PCA_IN]) -> [[f64; PCA_IN]; PCA_IN] {
    let n = data.len();
    let mut cov = [[0.0; PCA_IN]; PCA_IN];
    for x in data {
        for i in 0..PCA_IN {
            for j in 0..PCA_IN {
                cov[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= denom;
        }
    }
    cov
}

/// Top-3 principal directions of the sample covariance. Sign convention: the
/// largest-magnitude entry of each component is positive, so checkpoints are
/// byte-reproducible.
pub fn fit_pca(data: &[[f64; PCA_IN]]) -> Result<PcaModel, FairserveError> {
    if data.len() < 4 {
        return Err(FairserveError::DegenerateData);
    }
    let n = data.len() as f64;
    let mut mean = [0.0; PCA_IN];
    for x in data {
        for i in 0..PCA_IN {
            mean[i] += x[i];
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let cov = covariance(data, &mean);
    let (evals, evecs) = jacobi_eigen(cov);

    let mut order: Vec<usize> = (0..PCA_IN).collect();
    order.sort_by(|a, b| evals[*b].partial_cmp(&evals[*a]).unwrap());

    let max_eval = evals[order[0]].max(0.0);
    if evals[order[2]] <= 1e-12 * max_eval.max(1e-300) {
        return Err(FairserveError::DegenerateData);
    }

    let mut components = [[0.0; PCA_IN]; PCA_OUT];
    let mut explained = [0.0; PCA_OUT];
    for (r, &col) in order.iter().take(PCA_OUT).enumerate() {
        for i in 0..PCA_IN {
            components[r][i] = evecs[i][col];
        }
        // deterministic sign
        let mut dominant = 0;
        for i in 1..PCA_IN {
            if components[r][i].abs() > components[r][dominant].abs() {
                dominant = i;
            }
        }
        if components[r][dominant] < 0.0 {
            for v in components[r].iter_mut() {
                *v = -*v;
            }
        }
        explained[r] = evals[col];
    }
    Ok(PcaModel { mean, components, explained_variance: explained })
}

pub fn project(m: &PcaModel, v: &[f64; PCA_IN]) -> [f64; PCA_OUT] {
    let mut out = [0.0; PCA_OUT];
    for (o, row) in out.iter_mut().zip(&m.components) {
        *o = row.iter().zip(v).zip(&m.mean).map(|((c, x), mu)| c * (x - mu)).sum();
    }
    out
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean cross-entropy loss of the current weights on `data`.
pub fn logistic_loss(w: &[f64; PCA_OUT], b: f64, data: &[([f64; PCA_OUT], u8)]) -> f64 {
    let eps = 1e-12;
    data.iter()
        .map(|(x, y)| {
            let p = sigmoid(w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b)
                .clamp(eps, 1.0 - eps);
            let y = *y as f64;
            -y * p.ln() - (1.0 - y) * (1.0 - p).ln()
        })
        .sum::<f64>()
        / data.len() as f64
}

/// Analytic gradient of [`logistic_loss`].
pub fn logistic_grad(
    w: &[f64; PCA_OUT],
    b: f64,
    data: &[([f64; PCA_OUT], u8)],
) -> ([f64; PCA_OUT], f64) {
    let mut gw = [0.0; PCA_OUT];
    let mut gb = 0.0;
    for (x, y) in data {
        let p = sigmoid(w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b);
        let err = p - *y as f64;
        for (g, xi) in gw.iter_mut().zip(x) {
            *g += err * xi;
        }
        gb += err;
    }
    let n = data.len() as f64;
    for g in gw.iter_mut() {
        *g /= n;
    }
    (gw, gb / n)
}

/// Full-batch gradient descent on the cross-entropy loss.
pub fn fit_logistic(
    data: &[([f64; PCA_OUT], u8)],
    lr: f64,
    iters: usize,
) -> Result<LogisticModel, FairserveError> {
    if data.is_empty() {
        return Err(FairserveError::Data("empty logistic training set".into()));
    }
    let first = data[0].1;
    if data.iter().all(|(_, y)| *y == first) {
        return Err(FairserveError::SingleClass);
    }
    let mut w = [0.0; PCA_OUT];
    let mut b = 0.0;
    for _ in 0..iters {
        let (gw, gb) = logistic_grad(&w, b, data);
        for (wi, g) in w.iter_mut().zip(gw) {
            *wi -= lr * g;
        }
        b -= lr * gb;
    }
    Ok(LogisticModel { weights: w, bias_term: b, threshold: 0.5 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub pca: PcaModel,
    pub logistic: LogisticModel,
}

impl DetectorModel {
    /// (probability, biased?) for one epoch-averaged issue vector.
    pub fn predict(&self, v: &IssueScoreVector) -> (f64, bool) {
        let z = project(&self.pca, &v.as_array());
        let p = sigmoid(
            self.logistic.weights.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>()
                + self.logistic.bias_term,
        );
        (p, p > self.logistic.threshold)
    }
}

const CHECKPOINT_HEADER: &str = "fairserve-detector v1";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl DetectorModel {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_HEADER}");
        let join = |xs: &[f64]| xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "mean {}", join(&self.pca.mean));
        for row in &self.pca.components {
            let _ = writeln!(s, "component {}", join(row));
        }
        let _ = writeln!(s, "explained {}", join(&self.pca.explained_variance));
        let _ = writeln!(s, "weights {}", join(&self.logistic.weights));
        let _ = writeln!(s, "bias {}", fmt_f64(self.logistic.bias_term));
        let _ = writeln!(s, "threshold {}", fmt_f64(self.logistic.threshold));
        s
    }

    pub fn from_text(text: &str) -> Result<DetectorModel, FairserveError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != CHECKPOINT_HEADER {
            return Err(FairserveError::Checkpoint(format!(
                "unknown detector checkpoint version: {header:?}"
            )));
        }
        let mut fields = std::collections::HashMap::<String, Vec<Vec<f64>>>::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts
                .next()
                .ok_or_else(|| FairserveError::Checkpoint("empty line".into()))?
                .to_string();
            let vals: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let vals = vals
                .map_err(|e| FairserveError::Checkpoint(format!("bad float in {key}: {e}")))?;
            fields.entry(key).or_default().push(vals);
        }
        let take = |k: &str, n: usize| -> Result<Vec<f64>, FairserveError> {
            let rows = fields
                .get(k)
                .ok_or_else(|| FairserveError::Checkpoint(format!("missing field {k}")))?;
            if rows.len() != 1 || rows[0].len() != n {
                return Err(FairserveError::Checkpoint(format!("malformed field {k}")));
            }
            Ok(rows[0].clone())
        };
        let comp_rows = fields
            .get("component")
            .ok_or_else(|| FairserveError::Checkpoint("missing components".into()))?
            .clone();
        if comp_rows.len() != PCA_OUT || comp_rows.iter().any(|r| r.len() != PCA_IN) {
            return Err(FairserveError::Checkpoint("malformed components".into()));
        }
        let mut components = [[0.0; PCA_IN]; PCA_OUT];
        for (dst, src) in components.iter_mut().zip(&comp_rows) {
            dst.copy_from_slice(src);
        }
        let to4 = |v: Vec<f64>| -> [f64; 4] { [v[0], v[1], v[2], v[3]] };
        let to3 = |v: Vec<f64>| -> [f64; 3] { [v[0], v[1], v[2]] };
        Ok(DetectorModel {
            pca: PcaModel {
                mean: to4(take("mean", PCA_IN)?),
                components,
                explained_variance: to3(take("explained", PCA_OUT)?),
            },
            logistic: LogisticModel {
                weights: to3(take("weights", PCA_OUT)?),
                bias_term: take("bias", 1)?[0],
                threshold: take("threshold", 1)?[0],
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), FairserveError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<DetectorModel, FairserveError> {
        let text = std::fs::read_to_string(path)?;
        DetectorModel::from_text(&text)
    }
}
