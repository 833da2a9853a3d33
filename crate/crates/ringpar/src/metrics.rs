//! Training-time cost models: prediction, least-squares fitting, validity
//! checking, speed ratios, and crossover analysis.
//!
//! Total training time as a function of the worker count `n` decomposes into
//! compute that shrinks with `n`, communication that depends on the
//! architecture, and a constant setup cost:
//!
//! * parameter server: `T/n + C*n + P` — the server moves every worker's
//!   gradient, so communication grows linearly;
//! * ring: `T/n + C*n/(n-1) + P` — per-worker traffic is bounded, so the
//!   communication term falls toward `C` as the ring grows.
//!
//! Both forms are linear in `(T, C, P)` once the basis `{1/n, g(n), 1}` is
//! fixed, so fitting timing samples is ordinary least squares, solved here by
//! Householder QR: exact on consistent data and deterministic. A fit can
//! produce a negative parameter when the data's shape fights the basis; such
//! a model is physically meaningless, so it is flagged invalid rather than
//! rejected outright and callers can still inspect it.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which cost-model shape applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Ps,
    Ring,
}

impl Architecture {
    /// The communication basis function `g(n)`: `n` for a parameter server,
    /// `n/(n-1)` for a ring.
    pub fn comm_factor(&self, workers: u32) -> Result<f64> {
        let n = workers as f64;
        match self {
            Architecture::Ps => {
                if workers == 0 {
                    return Err(Error::invalid("worker count must be at least 1"));
                }
                Ok(n)
            }
            Architecture::Ring => {
                if workers < 2 {
                    return Err(Error::invalid(
                        "ring cost model is singular below 2 workers",
                    ));
                }
                Ok(n / (n - 1.0))
            }
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Architecture::Ps => write!(f, "ps"),
            Architecture::Ring => write!(f, "ring"),
        }
    }
}

/// Fitted (or hand-set) parameters of one training-time model, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub architecture: Architecture,
    /// Training time on a single worker.
    #[serde(rename = "T")]
    pub single_worker_time: f64,
    /// Communication coefficient multiplying the architecture's basis.
    #[serde(rename = "C")]
    pub comm_coeff: f64,
    /// Constant setup and teardown time.
    #[serde(rename = "P")]
    pub overhead: f64,
}

impl CostModel {
    pub fn new(
        architecture: Architecture,
        single_worker_time: f64,
        comm_coeff: f64,
        overhead: f64,
    ) -> Self {
        CostModel {
            architecture,
            single_worker_time,
            comm_coeff,
            overhead,
        }
    }

    /// A model is physically meaningful only with `T > 0`, `C >= 0`, `P >= 0`.
    pub fn is_valid(&self) -> bool {
        self.single_worker_time > 0.0
            && self.comm_coeff >= 0.0
            && self.overhead >= 0.0
            && self.single_worker_time.is_finite()
            && self.comm_coeff.is_finite()
            && self.overhead.is_finite()
    }

    pub fn predict(&self, workers: u32) -> Result<f64> {
        predict_time(self, workers)
    }
}

/// Evaluates the model at `n` workers.
///
/// Both formulas are stated for `n >= 2`. The server form is still well
/// defined at `n = 1` and is accepted there; the ring form divides by
/// `n - 1` and rejects it.
pub fn predict_time(model: &CostModel, workers: u32) -> Result<f64> {
    let g = model.architecture.comm_factor(workers)?;
    let n = workers as f64;
    Ok(model.single_worker_time / n + model.comm_coeff * g + model.overhead)
}

/// One benchmark observation: total training time at a given worker count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    pub workers: u32,
    pub seconds: f64,
}

impl TimingSample {
    pub fn new(workers: u32, seconds: f64) -> Self {
        TimingSample { workers, seconds }
    }

    fn validate_for_fit(&self) -> Result<()> {
        if self.workers < 2 {
            return Err(Error::invalid(format!(
                "sample at n={} cannot enter a fit; the models are defined for n >= 2 \
                 (single-worker times are only the t0 of speed ratios)",
                self.workers
            )));
        }
        if !self.seconds.is_finite() || self.seconds <= 0.0 {
            return Err(Error::invalid(format!(
                "sample at n={} has non-positive time {}",
                self.workers, self.seconds
            )));
        }
        Ok(())
    }
}

/// Outcome of fitting a cost model to timing samples.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub model: CostModel,
    /// Root-mean-square of the per-sample residuals, seconds.
    pub residual_rms: f64,
    /// False whenever any fitted parameter is negative (or `T` is zero).
    pub valid: bool,
    /// Observed minus predicted, one entry per input sample.
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit report serializes")
    }
}

/// Parses a cost model from JSON as written by [`FitReport::to_json`]
/// (extra keys such as `residual_rms` are ignored).
pub fn cost_model_from_json(json: &str) -> Result<CostModel> {
    serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("cost model: {e}"),
    })
}

/// Ordinary least squares over the basis `{1/n, g(n), 1}`.
///
/// Needs at least 3 samples spanning 3 distinct worker counts (three
/// unknowns). The fit itself never fails on shape alone beyond that; a
/// negative fitted parameter yields `valid = false` in the report.
pub fn fit_cost_model(samples: &[TimingSample], architecture: Architecture) -> Result<FitReport> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    let mut distinct: Vec<u32> = samples.iter().map(|s| s.workers).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!(
            "rank-deficient design: need 3 distinct worker counts, got {}",
            distinct.len()
        )));
    }
    for sample in samples {
        sample.validate_for_fit()?;
    }

    let rows: Vec<[f64; 3]> = samples
        .iter()
        .map(|s| {
            let n = s.workers as f64;
            Ok([1.0 / n, architecture.comm_factor(s.workers)?, 1.0])
        })
        .collect::<Result<_>>()?;
    let rhs: Vec<f64> = samples.iter().map(|s| s.seconds).collect();

    let [t, c, p] = householder_least_squares(&rows, &rhs)
        .ok_or_else(|| Error::Fit("design matrix is numerically rank-deficient".to_string()))?;

    let model = CostModel::new(architecture, t, c, p);
    let residuals: Vec<f64> = samples
        .iter()
        .zip(&rows)
        .map(|(s, row)| s.seconds - (t * row[0] + c * row[1] + p * row[2]))
        .collect();
    let residual_rms =
        (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let valid = model.is_valid();
    Ok(FitReport {
        model,
        residual_rms,
        valid,
        residuals,
    })
}

/// Solves `min ||A x - b||` for a tall `m x 3` matrix by Householder QR.
/// Returns `None` when a diagonal of `R` collapses, i.e. the columns are
/// numerically dependent.
fn householder_least_squares(rows: &[[f64; 3]], rhs: &[f64]) -> Option<[f64; 3]> {
    let m = rows.len();
    debug_assert_eq!(m, rhs.len());
    let mut a: Vec<[f64; 3]> = rows.to_vec();
    let mut b: Vec<f64> = rhs.to_vec();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);

    for col in 0..3 {
        let norm = a[col..]
            .iter()
            .map(|row| row[col] * row[col])
            .sum::<f64>()
            .sqrt();
        if norm <= scale * 1e3 * f64::EPSILON {
            return None;
        }
        let alpha = if a[col][col] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = vec![0.0; m];
        for i in col..m {
            v[i] = a[i][col];
        }
        v[col] -= alpha;
        let vnorm2: f64 = v[col..].iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in col..3 {
                let dot: f64 = (col..m).map(|i| v[i] * a[i][j]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in col..m {
                    a[i][j] -= f * v[i];
                }
            }
            let dot: f64 = (col..m).map(|i| v[i] * b[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in col..m {
                b[i] -= f * v[i];
            }
        }
        a[col][col] = alpha;
        for i in col + 1..m {
            a[i][col] = 0.0;
        }
    }

    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut sum = b[i];
        for j in i + 1..3 {
            sum -= a[i][j] * x[j];
        }
        if a[i][i].abs() <= scale * 1e3 * f64::EPSILON {
            return None;
        }
        x[i] = sum / a[i][i];
    }
    Some(x)
}

/// How much faster `n` workers finished than one: `t0 / t`.
pub fn speed_ratio(single_worker_seconds: f64, seconds: f64) -> Result<f64> {
    for (name, value) in [("t0", single_worker_seconds), ("t", seconds)] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::invalid(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }
    Ok(single_worker_seconds / seconds)
}

/// Smallest `n` in `[2, n_max]` where the ring model predicts a time no
/// larger than the server model, or `None` if the ring never catches up.
pub fn crossover(ps: &CostModel, ring: &CostModel, n_max: u32) -> Result<Option<u32>> {
    if ps.architecture != Architecture::Ps || ring.architecture != Architecture::Ring {
        return Err(Error::invalid(
            "crossover takes a ps model and a ring model, in that order",
        ));
    }
    if !ps.is_valid() || !ring.is_valid() {
        return Err(Error::invalid(
            "crossover is only meaningful for valid models (T > 0, C >= 0, P >= 0)",
        ));
    }
    if n_max < 2 {
        return Err(Error::invalid("n_max must be at least 2"));
    }
    for n in 2..=n_max {
        if predict_time(ring, n)? <= predict_time(ps, n)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Reads timing samples from CSV with columns `n,t_seconds`; extra columns
/// (as written by the bench command) are ignored, as is a header line.
pub fn read_samples_csv(reader: impl BufRead) -> Result<Vec<TimingSample>> {
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split(',');
        let n_field = fields.next().unwrap_or("").trim();
        if idx == 0 && n_field.parse::<u32>().is_err() {
            continue; // header row
        }
        let workers: u32 = n_field.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("field 'n': expected a worker count, got '{n_field}'"),
        })?;
        if workers == 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "field 'n': worker count must be at least 1".to_string(),
            });
        }
        let t_field = fields.next().unwrap_or("").trim();
        let seconds: f64 = t_field.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("field 't_seconds': expected seconds, got '{t_field}'"),
        })?;
        if !seconds.is_finite() || seconds <= 0.0 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("field 't_seconds': must be positive, got {seconds}"),
            });
        }
        samples.push(TimingSample::new(workers, seconds));
    }
    Ok(samples)
}

/// Reference server-architecture parameters used across tests and docs.
pub const REFERENCE_PS: CostModel = CostModel {
    architecture: Architecture::Ps,
    single_worker_time: 4223.8,
    comm_coeff: 12.1,
    overhead: 290.8,
};

/// Ring counterpart of [`REFERENCE_PS`].
pub const REFERENCE_RING: CostModel = CostModel {
    architecture: Architecture::Ring,
    single_worker_time: 4400.1,
    comm_coeff: 59.6,
    overhead: 363.5,
};
