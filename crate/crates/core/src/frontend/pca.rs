use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Principal components found by power iteration on the centred data, with
/// the data matrix deflated by each component before searching for the
/// next (`X_k = X_{k-1} - X_{k-1} w w^T`).
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// One unit-norm component per row.
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    /// Set when fewer than the requested components carry variance.
    pub rank_deficient: bool,
}

impl Pca {
    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }

    pub fn project(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::dim(self.mean.len(), x.ncols(), "PCA input"));
        }
        let centred = &x - &self.mean.view().insert_axis(Axis(0));
        Ok(centred.dot(&self.components.t()))
    }
}

const MAX_ITERS: usize = 2000;
const TOL: f64 = 1e-12;

pub fn pca_fit(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Pca> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(Error::Empty("PCA needs at least two rows"));
    }
    if k == 0 || k > d {
        return Err(Error::InvalidConfig(format!("k = {k} must be in 1..={d}")));
    }
    let mean = x.mean_axis(Axis(0)).expect("nonempty");
    let mut resid = &x - &mean.view().insert_axis(Axis(0));
    let denom = (n - 1) as f64;
    let total_variance = resid.mapv(|v| v * v).sum() / denom;
    let mut rng = seeded(seed);
    let mut comps: Vec<Array1<f64>> = Vec::new();
    let mut variances = Vec::new();
    let mut rank_deficient = false;
    for _ in 0..k {
        let remaining = resid.mapv(|v| v * v).sum() / denom;
        if remaining <= 1e-12 * total_variance.max(f64::MIN_POSITIVE) {
            rank_deficient = true;
            break;
        }
        let mut w: Array1<f64> = Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0));
        w /= w.dot(&w).sqrt();
        for _ in 0..MAX_ITERS {
            let mut next = resid.t().dot(&resid.dot(&w));
            // keep exact orthogonality against earlier components
            for c in &comps {
                let p = next.dot(c);
                next.scaled_add(-p, c);
            }
            let norm = next.dot(&next).sqrt();
            if norm == 0.0 {
                break;
            }
            next /= norm;
            let delta = (&next - &w).mapv(|v| v * v).sum().min((&next + &w).mapv(|v| v * v).sum());
            w = next;
            if delta < TOL {
                break;
            }
        }
        let proj = resid.dot(&w);
        variances.push(proj.dot(&proj) / denom);
        let outer = proj.view().insert_axis(Axis(1)).dot(&w.view().insert_axis(Axis(0)));
        resid -= &outer;
        comps.push(w);
    }
    let mut components = Array2::zeros((comps.len(), d));
    for (i, c) in comps.iter().enumerate() {
        components.row_mut(i).assign(c);
    }
    Ok(Pca {
        mean,
        components,
        explained_variance: variances,
        total_variance,
        rank_deficient,
    })
}
