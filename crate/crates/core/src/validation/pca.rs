use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Top principal directions of a set of equal-length sample vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// One unit-norm direction per row.
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Variance along each component (eigenvalues of the sample covariance).
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn project_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|v| {
                x.iter()
                    .zip(&self.mean)
                    .zip(v)
                    .map(|((x, m), v)| (x - m) * v)
                    .sum()
            })
            .collect())
    }

    pub fn reconstruct(&self, scores: &[f64]) -> Result<Vec<f64>> {
        if scores.len() > self.n_components() {
            return Err(Error::DimensionMismatch {
                expected: self.n_components(),
                actual: scores.len(),
            });
        }
        let mut out = self.mean.clone();
        for (s, v) in scores.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(v) {
                *o += s * v;
            }
        }
        Ok(out)
    }
}

pub fn pca_fit(ds: &Dataset, k: usize) -> Result<PcaModel> {
    let rows: Vec<&[f64]> = ds.signatures().iter().map(|s| s.samples()).collect();
    pca_fit_rows(&rows, k)
}

/// Scores of every signature on every component, in dataset order.
pub fn pca_project(model: &PcaModel, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    ds.signatures()
        .iter()
        .map(|s| model.project_one(s.samples()))
        .collect()
}

pub fn pca_fit_rows(rows: &[&[f64]], k: usize) -> Result<PcaModel> {
    if k == 0 {
        return Err(Error::InvalidInput("need at least one component".into()));
    }
    let m = rows.len();
    if m < k + 1 {
        return Err(Error::InvalidInput(format!(
            "{k} components need at least {} signatures, got {m}",
            k + 1
        )));
    }
    let dim = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    if dim < k {
        return Err(Error::InvalidInput(format!(
            "{k} components need signatures of length >= {k}, got {dim}"
        )));
    }

    let mut mean = vec![0.0; dim];
    for r in rows {
        for (acc, v) in mean.iter_mut().zip(r.iter()) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= m as f64;
    }
    let centered = DMatrix::from_fn(m, dim, |i, j| rows[i][j] - mean[j]);
    let scale = 1.0 / (m as f64 - 1.0);
    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() * scale;

    // Eigendecompose whichever of the covariance (dim x dim) or the Gram
    // matrix (m x m) is smaller; they share their nonzero spectrum.
    let (values, mut components): (Vec<f64>, Vec<Vec<f64>>) = if dim <= m {
        let cov = centered.tr_mul(&centered) * scale;
        let (values, vectors) = sorted_eigen(cov, k);
        let comps = vectors.iter().map(|v| v.iter().copied().collect()).collect();
        (values, comps)
    } else {
        let gram = (&centered * centered.transpose()) * scale;
        let (values, vectors) = sorted_eigen(gram, k);
        let comps = vectors
            .iter()
            .map(|u| (centered.transpose() * u).iter().copied().collect())
            .collect();
        (values, comps)
    };
    orthonormalize(&mut components, dim);
    for v in &mut components {
        fix_sign(v);
    }

    let explained_variance: Vec<f64> = values.iter().map(|&l| l.max(0.0)).collect();
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|&l| {
            if total_variance > 0.0 {
                (l / total_variance).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        explained_variance_ratio,
    })
}

/// Top `k` eigenpairs of a symmetric matrix, largest eigenvalue first.
fn sorted_eigen(matrix: DMatrix<f64>, k: usize) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    order.truncate(k);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

/// Modified Gram-Schmidt. Directions that vanish (zero-variance components
/// from the Gram route) are replaced by unit vectors orthogonal to the rest.
fn orthonormalize(vectors: &mut [Vec<f64>], dim: usize) {
    let mut next_axis = 0;
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        let v = &mut rest[0];
        let original = norm(v);
        remove_projections(v, done);
        let n = norm(v);
        if n > 1e-9 * original.max(f64::MIN_POSITIVE) && n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
            continue;
        }
        loop {
            let mut axis = vec![0.0; dim];
            axis[next_axis % dim] = 1.0;
            next_axis += 1;
            remove_projections(&mut axis, done);
            let n = norm(&axis);
            if n > 1e-6 {
                axis.iter_mut().for_each(|x| *x /= n);
                *v = axis;
                break;
            }
        }
    }
}

fn remove_projections(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
        for (x, y) in v.iter_mut().zip(b) {
            *x -= d * y;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn fit(rows: &[Vec<f64>], k: usize) -> PcaModel {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        pca_fit_rows(&refs, k).unwrap()
    }

    fn assert_orthonormal(model: &PcaModel) {
        for (i, a) in model.components().iter().enumerate() {
            for (j, b) in model.components().iter().enumerate() {
                let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - expected).abs() < 1e-8, "<{i},{j}> = {d}");
            }
        }
    }

    #[test]
    fn rank_one_data() {
        let dir = [1.0, -2.0, 0.5, 3.0];
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| dir.iter().map(|d| 4.0 + d * (i as f64 - 3.7)).collect())
            .collect();
        let model = fit(&rows, 1);
        assert!((model.explained_variance_ratio()[0] - 1.0).abs() < 1e-9);
        let model = fit(&rows, 3);
        assert_orthonormal(&model);
        assert!(model.explained_variance_ratio()[1] < 1e-9);
    }

    #[test]
    fn isotropic_cloud_against_closed_form_covariance() {
        let mut s = derive_stream(21, 0, 0);
        let rows: Vec<Vec<f64>> = (0..4000)
            .map(|_| vec![s.standard_normal(), s.standard_normal()])
            .collect();
        // 2x2 covariance eigenvalues in closed form.
        let n = rows.len() as f64;
        let mx = rows.iter().map(|r| r[0]).sum::<f64>() / n;
        let my = rows.iter().map(|r| r[1]).sum::<f64>() / n;
        let sxx = rows.iter().map(|r| (r[0] - mx).powi(2)).sum::<f64>() / (n - 1.0);
        let syy = rows.iter().map(|r| (r[1] - my).powi(2)).sum::<f64>() / (n - 1.0);
        let sxy = rows.iter().map(|r| (r[0] - mx) * (r[1] - my)).sum::<f64>() / (n - 1.0);
        let half_tr = 0.5 * (sxx + syy);
        let root = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
        let (l1, l2) = (half_tr + root, half_tr - root);

        let model = fit(&rows, 2);
        let r = model.explained_variance_ratio();
        assert!((r[0] - l1 / (l1 + l2)).abs() < 1e-10);
        assert!((r[1] - l2 / (l1 + l2)).abs() < 1e-10);
        assert!((r[0] - 0.5).abs() < 0.05 && (r[1] - 0.5).abs() < 0.05);
    }

    #[test]
    fn full_rank_reconstruction() {
        let mut s = derive_stream(22, 0, 0);
        let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..5).map(|_| s.normal(1.0, 4.0)).collect()).collect();
        let model = fit(&rows, 5);
        assert_orthonormal(&model);
        for r in &rows {
            let back = model.reconstruct(&model.project_one(r).unwrap()).unwrap();
            for (a, b) in r.iter().zip(&back) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gram_route_matches_covariance_route() {
        let mut s = derive_stream(23, 0, 0);
        // 8 rows of length 30 -> Gram route; the reference uses a 30x30 covariance.
        let rows: Vec<Vec<f64>> = (0..8).map(|_| (0..30).map(|_| s.standard_normal()).collect()).collect();
        let model = fit(&rows, 5);
        assert_orthonormal(&model);
        let m = DMatrix::from_fn(8, 30, |i, j| rows[i][j] - model.mean()[j]);
        let cov = m.tr_mul(&m) / 7.0;
        let eig = SymmetricEigen::new(cov);
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in model.explained_variance().iter().zip(&values) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        // 8 centered rows span at most 7 directions
        let model = fit(&rows, 7);
        assert_orthonormal(&model);
    }

    #[test]
    fn rank_deficient_gram_route_still_orthonormal() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64; 10]).collect();
        let model = fit(&rows, 3);
        assert_orthonormal(&model);
        assert!((model.explained_variance_ratio()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_basics() {
        let mut s = derive_stream(24, 0, 0);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..4).map(|_| s.standard_normal()).collect()).collect();
        let model = fit(&rows, 3);
        let zero = model.project_one(model.mean()).unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-12));
        let shifted: Vec<f64> = model.mean().iter().zip(&model.components()[0]).map(|(m, c)| m + c).collect();
        let p = model.project_one(&shifted).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12 && p[2].abs() < 1e-12);
        assert!(matches!(model.project_one(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn reconstruction_error_shrinks_with_k() {
        let mut s = derive_stream(25, 0, 0);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..6).map(|j| s.normal(0.0, 1.0 + j as f64)).collect())
            .collect();
        let mut prev = f64::INFINITY;
        for k in 1..=6 {
            let model = fit(&rows, k);
            let err: f64 = rows
                .iter()
                .map(|r| {
                    let back = model.reconstruct(&model.project_one(r).unwrap()).unwrap();
                    r.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                })
                .sum();
            assert!(err <= prev + 1e-9);
            prev = err;
        }
        assert!(prev < 1e-16 * rows.len() as f64 * 100.0);
    }

    #[test]
    fn refit_is_identical_and_signs_fixed() {
        let mut s = derive_stream(26, 0, 0);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..8).map(|_| s.standard_normal()).collect()).collect();
        let a = fit(&rows, 4);
        assert_eq!(a, fit(&rows, 4));
        for v in a.components() {
            let big = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
            assert!(big > 0.0);
        }
        let r = a.explained_variance_ratio();
        assert!(r.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn insufficient_data() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 3.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        assert!(matches!(pca_fit_rows(&refs, 2), Err(Error::InvalidInput(_))));
        assert!(pca_fit_rows(&refs, 1).is_ok());
        let rows = vec![vec![1.0], vec![2.0], vec![4.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        assert!(pca_fit_rows(&refs, 2).is_err());
    }
}
