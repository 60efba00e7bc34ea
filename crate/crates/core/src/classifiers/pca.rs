use serde::{Deserialize, Serialize};

use super::check_dim;
use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues (unsorted, diagonal order) and the matching unit
/// eigenvectors as rows. Sweeps stop once the off-diagonal Frobenius norm is
/// below `max(1e-12, eps * n * ||A||_F)`.
pub fn jacobi_eigen<T: Real>(matrix: &[Vec<T>]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::EmptyInput("Jacobi matrix"));
    }
    for row in matrix {
        check_dim(n, row.len())?;
    }
    let mut a: Vec<Vec<T>> = matrix.to_vec();
    let mut v: Vec<Vec<T>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();

    let frob = a.iter().flatten().map(|&x| x * x).sum::<T>().sqrt();
    let tol = T::lit(1e-12).max(T::epsilon() * T::from_usize_lossy(n) * frob);
    let off_norm = |a: &[Vec<T>]| {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };

    for _sweep in 0..100 {
        if off_norm(&a) < tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    // columns of v are the eigenvectors
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    Ok((values, vectors))
}

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retain {
    /// Smallest count whose cumulative explained variance reaches the fraction.
    Variance(f64),
    Components(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct PcaModel<T: Real> {
    pub mean: Vec<T>,
    /// Orthonormal rows, descending eigenvalue.
    pub components: Vec<Vec<T>>,
    pub eigenvalues: Vec<T>,
    pub total_variance: T,
}

impl<T: Real> PcaModel<T> {
    /// Fits on the rows of `xs`. When samples are fewer than features the
    /// eigenproblem is solved on the `n x n` Gram matrix instead of the
    /// `d x d` covariance; both share the same non-zero spectrum.
    pub fn fit(xs: &[Vec<T>], retain: Retain) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("PCA needs at least 2 samples, got {n}")));
        }
        let d = xs[0].len();
        if d == 0 {
            return Err(Error::InvalidArgument("zero-dimensional PCA input".into()));
        }
        for x in xs {
            check_dim(d, x.len())?;
        }
        match retain {
            Retain::Variance(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::InvalidArgument(format!("variance target {f} not in (0, 1]")));
            }
            Retain::Components(0) => return Err(Error::InvalidArgument("need at least one component".into())),
            _ => {}
        }

        let inv_n = T::from_usize_lossy(n).recip();
        let mut mean = vec![T::zero(); d];
        for x in xs {
            for (m, &v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m *= inv_n);
        let centered: Vec<Vec<T>> = xs.iter().map(|x| x.iter().zip(&mean).map(|(&v, &m)| v - m).collect()).collect();
        let denom = T::from_usize_lossy(n - 1);

        let mut pairs: Vec<(T, Vec<T>)> = if d <= n {
            let mut cov = vec![vec![T::zero(); d]; d];
            for x in &centered {
                for i in 0..d {
                    if x[i] == T::zero() {
                        continue;
                    }
                    for j in i..d {
                        cov[i][j] += x[i] * x[j];
                    }
                }
            }
            for i in 0..d {
                for j in i..d {
                    cov[i][j] /= denom;
                    cov[j][i] = cov[i][j];
                }
            }
            let (vals, vecs) = jacobi_eigen(&cov)?;
            vals.into_iter().zip(vecs).collect()
        } else {
            let mut gram = vec![vec![T::zero(); n]; n];
            for i in 0..n {
                for j in i..n {
                    let g = dot(&centered[i], &centered[j]) / denom;
                    gram[i][j] = g;
                    gram[j][i] = g;
                }
            }
            let (vals, vecs) = jacobi_eigen(&gram)?;
            vals.into_iter()
                .zip(vecs)
                .map(|(lambda, u)| {
                    let mut comp = vec![T::zero(); d];
                    for (ui, x) in u.iter().zip(&centered) {
                        for (c, &xv) in comp.iter_mut().zip(x) {
                            *c += *ui * xv;
                        }
                    }
                    let norm = comp.iter().map(|&c| c * c).sum::<T>().sqrt();
                    if norm > T::zero() {
                        comp.iter_mut().for_each(|c| *c /= norm);
                    }
                    (lambda, comp)
                })
                .collect()
        };
        pairs.iter_mut().for_each(|(l, _)| *l = l.max(T::zero()));
        // stable: equal eigenvalues keep their original order
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));

        let total: T = pairs.iter().map(|p| p.0).sum();
        if !(total > T::zero()) {
            return Err(Error::ZeroVariance);
        }
        let max_lambda = pairs[0].0;
        let positive =
            pairs.iter().take_while(|p| p.0 > max_lambda * T::epsilon() * T::from_usize_lossy(d.max(n))).count().max(1);
        let keep = match retain {
            Retain::Components(c) => c.min(positive),
            Retain::Variance(target) => {
                let target = T::lit(target) - T::lit(1e-12);
                let mut cum = T::zero();
                let mut count = positive;
                for (i, p) in pairs.iter().take(positive).enumerate() {
                    cum += p.0 / total;
                    if cum >= target {
                        count = i + 1;
                        break;
                    }
                }
                count
            }
        };
        pairs.truncate(keep);

        let (eigenvalues, components) = pairs
            .into_iter()
            .map(|(l, mut c)| {
                let (imax, _) = c
                    .iter()
                    .enumerate()
                    .fold((0, T::zero()), |b, (i, &v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
                if c[imax] < T::zero() {
                    c.iter_mut().for_each(|v| *v = -*v);
                }
                (l, c)
            })
            .unzip();
        Ok(Self { mean, components, eigenvalues, total_variance: total })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn explained_variance_ratio(&self) -> Vec<T> {
        self.eigenvalues.iter().map(|&l| l / self.total_variance).collect()
    }

    /// `components * (x - mean)`.
    pub fn transform(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.input_dim(), x.len())?;
        let centered: Vec<T> = x.iter().zip(&self.mean).map(|(&v, &m)| v - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }

    /// `mean + sum_i z_i * component_i` over the first `z.len()` components.
    pub fn reconstruct(&self, z: &[T]) -> Vec<T> {
        let mut out = self.mean.clone();
        for (zi, c) in z.iter().zip(&self.components) {
            for (o, &cv) in out.iter_mut().zip(c) {
                *o += *zi * cv;
            }
        }
        out
    }
}
