//! Gaussian sensing ensembles and the whitening transform.
//!
//! A sensing ensemble holds n raw vectors a_i in R^d (rows of a matrix). The
//! whitening step factors the empirical covariance C = (1/n) sum a_i a_i^T as
//! C = L L^T (Cholesky, L lower triangular with positive diagonal) and solves
//! L a~_i = a_i so that the whitened vectors a~_i have identity empirical
//! covariance. Solutions transport as u~ = L^T u: inner products satisfy
//! a~_i^T (L^T u) = a_i^T u, so a signal recovered in whitened coordinates is
//! mapped back by solving L^T u_hat = u~ (back substitution).

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;

/// Measured amplitudes y_i = |a_i^T u_star|, optionally with the signal that
/// produced them (available in synthetic experiments, absent on real data).
#[derive(Debug, Clone)]
pub struct Measurements {
    values: Array1<f64>,
    ground_truth: Option<Array1<f64>>,
}

impl Measurements {
    /// Measured values must be finite and nonnegative.
    pub fn new(values: Array1<f64>, ground_truth: Option<Array1<f64>>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "measurement {bad} is {} (must be finite and nonnegative)",
                values[bad]
            )));
        }
        Ok(Measurements { values, ground_truth })
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn ground_truth(&self) -> Option<&Array1<f64>> {
        self.ground_truth.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A sensing ensemble: raw vectors, plus the Cholesky factor and whitened
/// vectors once [`SensingEnsemble::whiten`] has run.
#[derive(Debug, Clone)]
pub struct SensingEnsemble {
    raw: Array2<f64>,
    whitened: Option<Array2<f64>>,
    chol: Option<Array2<f64>>,
    seed: u64,
}

/// Draws n i.i.d. standard Gaussian vectors in R^d.
///
/// The same (d, n, seed) triple always yields bit-identical vectors: the
/// stream is a ChaCha8 generator seeded from `seed`, sampled row-major.
/// Requires n > d so the empirical covariance can be invertible.
pub fn generate_ensemble(d: usize, n: usize, seed: u64) -> Result<SensingEnsemble> {
    if d == 0 {
        return Err(Error::InvalidConfig("dimension d must be at least 1".into()));
    }
    if n <= d {
        return Err(Error::InvalidConfig(format!(
            "need more measurements than dimensions (n = {n}, d = {d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        for j in 0..d {
            raw[[i, j]] = StandardNormal.sample(&mut rng);
        }
    }
    Ok(SensingEnsemble { raw, whitened: None, chol: None, seed })
}

impl SensingEnsemble {
    /// Builds an ensemble from explicit rows. This is the unit-test and dump
    /// constructor; it does not require n > d, so whitening may legitimately
    /// fail on such inputs.
    pub fn from_raw(raw: Array2<f64>, seed: u64) -> Result<Self> {
        if raw.nrows() == 0 || raw.ncols() == 0 {
            return Err(Error::InvalidInput("ensemble must be non-empty".into()));
        }
        if let Some(bad) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("raw vector entry {bad} is not finite")));
        }
        Ok(SensingEnsemble { raw, whitened: None, chol: None, seed })
    }

    pub fn n(&self) -> usize {
        self.raw.nrows()
    }

    pub fn d(&self) -> usize {
        self.raw.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn raw_vectors(&self) -> &Array2<f64> {
        &self.raw
    }

    pub fn whitened_vectors(&self) -> Option<&Array2<f64>> {
        self.whitened.as_ref()
    }

    /// Lower-triangular factor of the empirical covariance, if whitened.
    pub fn cholesky_factor(&self) -> Option<&Array2<f64>> {
        self.chol.as_ref()
    }

    pub fn is_whitened(&self) -> bool {
        self.whitened.is_some()
    }

    /// Whitened vectors together with the Cholesky factor; errors if
    /// [`SensingEnsemble::whiten`] has not run.
    pub fn whitened_pair(&self) -> Result<(&Array2<f64>, &Array2<f64>)> {
        match (self.whitened.as_ref(), self.chol.as_ref()) {
            (Some(w), Some(l)) => Ok((w, l)),
            _ => Err(Error::InvalidInput("ensemble has not been whitened".into())),
        }
    }

    /// C = (1/n) sum a_i a_i^T, symmetrized so C[i,j] == C[j,i] exactly.
    pub fn empirical_covariance(&self) -> Array2<f64> {
        let n = self.n() as f64;
        let c = self.raw.t().dot(&self.raw) / n;
        (&c + &c.t()) * 0.5
    }

    /// Factors the empirical covariance and solves L a~_i = a_i per vector.
    /// Fails with the first non-positive Cholesky pivot when the covariance
    /// is numerically singular.
    pub fn whiten(mut self) -> Result<Self> {
        let cov = self.empirical_covariance();
        let l = linalg::cholesky(&cov)?;
        let (n, d) = (self.n(), self.d());
        let mut whitened = Array2::<f64>::zeros((n, d));
        for i in 0..n {
            let ai = self.raw.row(i).to_owned();
            let wi = linalg::forward_substitution(&l, &ai)?;
            whitened.row_mut(i).assign(&wi);
        }
        self.whitened = Some(whitened);
        self.chol = Some(l);
        Ok(self)
    }

    /// y_i = |a_i^T u_star| from the raw vectors; stores the signal so
    /// downstream error metrics and oracle schedules can use it.
    pub fn synthesize_measurements(&self, u_star: &Array1<f64>) -> Result<Measurements> {
        if u_star.len() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "signal has length {}, ensemble dimension is {}",
                u_star.len(),
                self.d()
            )));
        }
        let values = self.raw.dot(u_star).mapv(f64::abs);
        Measurements::new(values, Some(u_star.clone()))
    }

    /// Maps a raw-space point into whitened coordinates: u~ = L^T u.
    pub fn to_whitened_coords(&self, u_raw: &Array1<f64>) -> Result<Array1<f64>> {
        let (_, l) = self.whitened_pair()?;
        if u_raw.len() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "point has length {}, ensemble dimension is {}",
                u_raw.len(),
                self.d()
            )));
        }
        Ok(l.t().dot(u_raw))
    }
}

/// Recovers the raw-space signal from whitened coordinates by solving
/// L^T u_hat = u (back substitution). Inverse of [`SensingEnsemble::to_whitened_coords`].
pub fn unwhiten(l: &Array2<f64>, u: &Array1<f64>) -> Result<Array1<f64>> {
    linalg::transposed_substitution(l, u)
}

/// Compatibility variant that solves L u_hat = u by forward substitution
/// instead. Kept behind an explicit call (config flag `paper_compat_unwhiten`)
/// for comparison against implementations that reuse the whitening solve
/// direction; it does not invert [`SensingEnsemble::to_whitened_coords`] for d > 1.
pub fn unwhiten_forward(l: &Array2<f64>, u: &Array1<f64>) -> Result<Array1<f64>> {
    linalg::forward_substitution(l, u)
}

const DUMP_HEADER_LEN: usize = 24;

/// Serializes an ensemble for cross-implementation comparison: three
/// little-endian u64 words (d, n, seed) followed by the raw vectors,
/// row-major, as little-endian f64.
pub fn encode_ensemble_dump(ensemble: &SensingEnsemble) -> Vec<u8> {
    let (n, d) = (ensemble.n(), ensemble.d());
    let mut out = Vec::with_capacity(DUMP_HEADER_LEN + 8 * n * d);
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&ensemble.seed().to_le_bytes());
    for v in ensemble.raw_vectors().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes [`encode_ensemble_dump`] output. Rejects structurally invalid
/// input (short header, d = 0, n <= d, payload length mismatch) without
/// panicking; the returned ensemble is unwhitened.
pub fn decode_ensemble_dump(bytes: &[u8]) -> Result<SensingEnsemble> {
    if bytes.len() < DUMP_HEADER_LEN {
        return Err(Error::MalformedDump(format!(
            "{} bytes is shorter than the {DUMP_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * (i + 1)].try_into().unwrap());
    let d = word(0);
    let n = word(1);
    let seed = word(2);
    if d == 0 {
        return Err(Error::MalformedDump("dimension d = 0".into()));
    }
    if n <= d {
        return Err(Error::MalformedDump(format!("n = {n} must exceed d = {d}")));
    }
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::MalformedDump(format!("n*d overflows (n = {n}, d = {d})")))?;
    let payload = (bytes.len() - DUMP_HEADER_LEN) as u64;
    if payload != expected {
        return Err(Error::MalformedDump(format!(
            "payload is {payload} bytes, header implies {expected}"
        )));
    }
    let data: Vec<f64> = bytes[DUMP_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let raw = Array2::from_shape_vec((n as usize, d as usize), data)
        .map_err(|e| Error::MalformedDump(e.to_string()))?;
    Ok(SensingEnsemble { raw, whitened: None, chol: None, seed })
}

pub fn write_ensemble_dump(ensemble: &SensingEnsemble, path: &Path) -> Result<()> {
    std::fs::write(path, encode_ensemble_dump(ensemble)).map_err(|e| Error::io(path, e))
}

pub fn read_ensemble_dump(path: &Path) -> Result<SensingEnsemble> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ensemble_dump(&bytes)
}
