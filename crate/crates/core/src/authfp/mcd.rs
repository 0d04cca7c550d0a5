//! Minimum covariance determinant fit (FAST-MCD) and Mahalanobis scoring.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McdConfig {
    /// Fraction of points in the support subset. `None` uses the maximum
    /// breakdown choice `h = ceil((n + d + 1) / 2)`.
    pub support_fraction: Option<f64>,
    pub n_starts: usize,
    pub max_c_steps: usize,
    /// Refit on every point inside the 97.5% chi-square radius of the raw
    /// estimate.
    pub reweight: bool,
}

impl Default for McdConfig {
    fn default() -> Self {
        Self {
            support_fraction: None,
            n_starts: 50,
            max_c_steps: 20,
            reweight: true,
        }
    }
}

/// Robust location and scatter of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct McdModel {
    pub location: DVector<f64>,
    pub scatter: DMatrix<f64>,
    precision: DMatrix<f64>,
    /// Size of the support subset.
    pub h: usize,
    /// Set when the scatter was singular and a ridge was added.
    pub regularized: bool,
}

/// `sqrt` of the chi-square quantile with `dof` degrees of freedom.
pub fn chi_threshold(dof: usize, quantile: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(quantile)
        .sqrt()
}

fn mean_cov(x: &DMatrix<f64>, idx: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let d = x.ncols();
    let mut mu = DVector::zeros(d);
    for &i in idx {
        mu += x.row(i).transpose();
    }
    mu /= idx.len() as f64;
    let mut cov = DMatrix::zeros(d, d);
    for &i in idx {
        let c = x.row(i).transpose() - &mu;
        cov += &c * c.transpose();
    }
    // maximum-likelihood normalization; the consistency factor rescales it
    cov /= idx.len() as f64;
    (mu, cov)
}

fn sq_distances(x: &DMatrix<f64>, mu: &DVector<f64>, precision: &DMatrix<f64>) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| {
            let c = x.row(i).transpose() - mu;
            (c.transpose() * precision * &c)[(0, 0)]
        })
        .collect()
}

fn smallest(values: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

const SINGULAR: f64 = 1e-12;

/// Singularity test on the correlation matrix, so that features with very
/// different units do not trigger it.
fn is_singular(cov: &DMatrix<f64>) -> bool {
    let diag: f64 = cov.diagonal().iter().product();
    if !(diag > 0.0) || cov.diagonal().iter().any(|v| !(*v > 0.0)) {
        return true;
    }
    !(cov.determinant() / diag > SINGULAR)
}

fn to_matrix(data: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = data.first().ok_or(Error::Empty("MCD input"))?.len();
    if d == 0 {
        return Err(Error::Empty("MCD feature vector"));
    }
    if let Some(bad) = data.iter().find(|r| r.len() != d) {
        return Err(Error::dim(d, bad.len(), "MCD row"));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("MCD input".into()));
    }
    Ok(DMatrix::from_fn(data.len(), d, |i, j| data[i][j]))
}

/// Per-coordinate median and MAD, so that fitting runs on unit-scale data.
fn robust_scale(x: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let d = x.ncols();
    let mut center = DVector::zeros(d);
    let mut scale = DVector::zeros(d);
    for j in 0..d {
        let mut col: Vec<f64> = x.column(j).iter().copied().collect();
        let med = median(&mut col);
        let mut dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
        let mut s = median(&mut dev);
        if s == 0.0 {
            let m = col.iter().sum::<f64>() / col.len() as f64;
            s = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
        }
        center[j] = med;
        scale[j] = if s > 0.0 { s } else { 1.0 };
    }
    (center, scale)
}

impl McdModel {
    fn new(location: DVector<f64>, mut scatter: DMatrix<f64>, h: usize, mut regularized: bool) -> Result<Self> {
        let d = scatter.nrows();
        if is_singular(&scatter) {
            let ridge = (scatter.trace() / d as f64).max(1.0) * 1e-6;
            scatter += DMatrix::identity(d, d) * ridge;
            regularized = true;
        }
        let precision = scatter
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NonFinite("scatter is not positive definite".into()))?
            .inverse();
        Ok(Self {
            location,
            scatter,
            precision,
            h,
            regularized,
        })
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::dim(self.dim(), x.len(), "Mahalanobis input"));
        }
        let c = DVector::from_column_slice(x) - &self.location;
        Ok((c.transpose() * &self.precision * &c)[(0, 0)].max(0.0).sqrt())
    }
}

/// Sample mean and unbiased covariance, no trimming.
pub fn fit_gaussian(data: &[Vec<f64>]) -> Result<McdModel> {
    let x = to_matrix(data)?;
    if x.nrows() < 2 {
        return Err(Error::Empty("Gaussian fit needs two points"));
    }
    let idx: Vec<usize> = (0..x.nrows()).collect();
    let (mu, cov) = mean_cov(&x, &idx);
    let n = x.nrows() as f64;
    McdModel::new(mu, cov * (n / (n - 1.0)), x.nrows(), false)
}

/// FAST-MCD: random `(d+1)`-subsets refined by concentration steps, best
/// determinant kept, then scaled for consistency at the normal model.
pub fn mcd_fit<R: Rng + ?Sized>(data: &[Vec<f64>], cfg: &McdConfig, rng: &mut R) -> Result<McdModel> {
    let raw = to_matrix(data)?;
    let (n, d) = raw.shape();
    if n <= d + 1 {
        return Err(Error::InvalidConfig(format!("MCD needs more than {} points, got {n}", d + 1)));
    }
    let h = match cfg.support_fraction {
        Some(f) if (0.5..=1.0).contains(&f) => ((f * n as f64).ceil() as usize).clamp(d + 1, n),
        Some(f) => return Err(Error::InvalidConfig(format!("support fraction {f} outside [0.5, 1]"))),
        None => (n + d + 1).div_ceil(2),
    };
    let (center, scale) = robust_scale(&raw);
    let x = DMatrix::from_fn(n, d, |i, j| (raw[(i, j)] - center[j]) / scale[j]);

    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..cfg.n_starts.max(1) {
        let mut subset = sample(rng, n, d + 1).into_vec();
        let (mut mu, mut cov) = mean_cov(&x, &subset);
        while is_singular(&cov) && subset.len() < n {
            let extra = loop {
                let k = rng.random_range(0..n);
                if !subset.contains(&k) {
                    break k;
                }
            };
            subset.push(extra);
            (mu, cov) = mean_cov(&x, &subset);
        }
        let mut det = f64::INFINITY;
        for _ in 0..cfg.max_c_steps.max(1) {
            let Some(prec) = cov.clone().try_inverse() else { break };
            let next = smallest(&sq_distances(&x, &mu, &prec), h);
            let (m2, c2) = mean_cov(&x, &next);
            let det2 = c2.determinant();
            let converged = next == subset;
            subset = next;
            (mu, cov) = (m2, c2);
            if converged || det2 >= det {
                det = det.min(det2);
                break;
            }
            det = det2;
        }
        if subset.len() == h && best.as_ref().is_none_or(|(b, _)| det < *b) {
            best = Some((det, subset));
        }
    }
    // every start stayed singular: the data lie in a subspace, so take the
    // h points nearest the coordinate-wise median and regularize
    let (det, subset) = best.unwrap_or_else(|| {
        let norms: Vec<f64> = (0..n).map(|i| x.row(i).norm_squared()).collect();
        (0.0, smallest(&norms, h))
    });
    let (mut mu, mut cov) = mean_cov(&x, &subset);
    let singular = !(det > 0.0) || is_singular(&cov);
    if !singular {
        let chi = ChiSquared::new(d as f64).expect("dof");
        let consistency = |mu: &DVector<f64>, cov: &mut DMatrix<f64>| {
            let prec = cov.clone().try_inverse().expect("non-singular scatter");
            let md2 = sq_distances(&x, mu, &prec);
            let med = median(&mut md2.clone());
            if med > 0.0 {
                *cov *= med / chi.inverse_cdf(0.5);
            }
        };
        consistency(&mu, &mut cov);
        if cfg.reweight {
            let prec = cov.clone().try_inverse().expect("non-singular scatter");
            let cutoff = chi.inverse_cdf(0.975);
            let keep: Vec<usize> = sq_distances(&x, &mu, &prec)
                .iter()
                .enumerate()
                .filter(|(_, &m)| m <= cutoff)
                .map(|(i, _)| i)
                .collect();
            if keep.len() > d + 1 {
                let (m2, c2) = mean_cov(&x, &keep);
                if !is_singular(&c2) {
                    (mu, cov) = (m2, c2);
                    consistency(&mu, &mut cov);
                }
            }
        }
    }
    let location = DVector::from_fn(d, |j, _| center[j] + scale[j] * mu[j]);
    let scatter = DMatrix::from_fn(d, d, |i, j| scale[i] * cov[(i, j)] * scale[j]);
    McdModel::new(location, scatter, h, singular)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    fn cloud(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded(seed);
        (0..n)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn threshold_for_five_dims() {
        assert!((chi_threshold(5, 0.975) - 3.5830).abs() < 1e-3);
    }

    #[test]
    fn resists_outliers() {
        let mut data = cloud(200, 3, 1);
        for row in data.iter_mut().take(40) {
            for v in row.iter_mut() {
                *v = *v * 0.1 + 50.0;
            }
        }
        let m = mcd_fit(&data, &McdConfig::default(), &mut seeded(2)).unwrap();
        assert!(m.location.norm() < 0.5, "{}", m.location);
        assert!(m.distance(&[50.0, 50.0, 50.0]).unwrap() > 20.0);
        assert!(!m.regularized);
    }

    #[test]
    fn degenerate_data_is_regularized() {
        let data: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 2.0 * i as f64, 1.0]).collect();
        let m = mcd_fit(&data, &McdConfig::default(), &mut seeded(3)).unwrap();
        assert!(m.regularized);
        assert!(m.distance(&[1.0, 2.0, 1.0]).unwrap().is_finite());
    }

    #[test]
    fn gaussian_fit_matches_moments() {
        let data = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![2.0, 2.0]];
        let m = fit_gaussian(&data).unwrap();
        assert!((m.location[0] - 1.0).abs() < 1e-12);
        assert!((m.scatter[(0, 0)] - 4.0 / 3.0).abs() < 1e-12);
        assert!(m.scatter[(0, 1)].abs() < 1e-12);
    }
}
