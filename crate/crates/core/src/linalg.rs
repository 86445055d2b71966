//! Dense Householder QR for least squares on column-major designs.

/// Column `index` is numerically a combination of `partners`.
#[derive(Debug, Clone, PartialEq)]
pub struct Collinearity {
    pub index: usize,
    pub partners: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct QrFit {
    pub coefficients: Vec<f64>,
    /// Upper-triangular factor, `r[i][j]` for `j >= i`.
    pub r: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl QrFit {
    /// `(R^T R)^{-1}`, i.e. `(X^T X)^{-1}` for the factored design.
    pub fn xtx_inverse(&self) -> Vec<Vec<f64>> {
        let p = self.r.len();
        let rinv = upper_inverse(&self.r);
        let mut out = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                let mut acc = 0.0;
                for k in i.max(j)..p {
                    acc += rinv[i][k] * rinv[j][k];
                }
                out[i][j] = acc;
            }
        }
        out
    }
}

fn upper_inverse(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = r.len();
    let mut inv = vec![vec![0.0; p]; p];
    for j in (0..p).rev() {
        inv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            let mut acc = 0.0;
            for k in i + 1..=j {
                acc += r[i][k] * inv[k][j];
            }
            inv[i][j] = -acc / r[i][i];
        }
    }
    inv
}

fn back_substitute(r: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let p = rhs.len();
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = rhs[i];
        for k in i + 1..p {
            acc -= r[i][k] * x[k];
        }
        x[i] = acc / r[i][i];
    }
    x
}

/// Least squares `min ||X b - y||` via Householder reflections.
///
/// `columns` holds the design column by column. A column whose diagonal
/// entry falls below `rank_tol` times its own norm is reported as collinear
/// with the earlier columns.
pub fn qr_least_squares(columns: &[Vec<f64>], y: &[f64], rank_tol: f64) -> Result<QrFit, Collinearity> {
    let p = columns.len();
    let n = y.len();
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = y.to_vec();
    let mut r = vec![vec![0.0; p]; p];

    for j in 0..p {
        let alpha_sq: f64 = a[j][j..].iter().map(|v| v * v).sum();
        let alpha = alpha_sq.sqrt();
        if norms[j] == 0.0 || alpha <= rank_tol * norms[j] {
            return Err(Collinearity { index: j, partners: collinear_partners(&r, &a, j, rank_tol) });
        }
        let alpha = if a[j][j] > 0.0 { -alpha } else { alpha };
        // v = x - alpha e1, stored in place of column j's tail.
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        r[j][j] = alpha;
        if vnorm_sq > 0.0 {
            for col in a.iter_mut().skip(j + 1) {
                let dot: f64 = v.iter().zip(&col[j..]).map(|(a, b)| a * b).sum();
                let s = 2.0 * dot / vnorm_sq;
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            let dot: f64 = v.iter().zip(&qty[j..]).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm_sq;
            for (c, vi) in qty[j..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        for k in j + 1..p {
            r[j][k] = a[k][j];
        }
    }

    let coefficients = back_substitute(&r, &qty[..p]);
    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - columns.iter().zip(&coefficients).map(|(c, b)| c[i] * b).sum::<f64>())
        .collect();
    Ok(QrFit { coefficients, r, residuals })
}

fn collinear_partners(r: &[Vec<f64>], a: &[Vec<f64>], j: usize, tol: f64) -> Vec<usize> {
    if j == 0 {
        return Vec::new();
    }
    // Project the offending column on the earlier ones: R[..j,..j] c = (Q^T x_j)[..j].
    let sub: Vec<Vec<f64>> = r[..j].iter().map(|row| row[..j].to_vec()).collect();
    let c = back_substitute(&sub, &a[j][..j]);
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    c.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol.sqrt() * scale)
        .map(|(i, _)| i)
        .collect()
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky.
/// Returns `None` when `A` is not numerically positive definite.
pub fn solve_spd(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}

/// Inverse of a symmetric positive-definite matrix, column by column.
pub fn inverse_spd(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_spd(a, &e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let x = vec![vec![1.0; 4], vec![1.0, 2.0, 3.0, 4.0]];
        let y = vec![3.0, 5.0, 7.0, 9.0];
        let fit = qr_least_squares(&x, &y, 1e-10).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
        let inv = fit.xtx_inverse();
        // X^T X = [[4, 10], [10, 30]], det 20.
        assert!((inv[0][0] - 1.5).abs() < 1e-12);
        assert!((inv[0][1] + 0.5).abs() < 1e-12);
        assert!((inv[1][1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cholesky_solve() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let x = solve_spd(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
        assert!(solve_spd(&[vec![1.0, 2.0], vec![2.0, 1.0]], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn duplicate_column_names_its_partner() {
        let c = vec![0.3, 1.0, -2.0, 4.0, 0.5];
        let x = vec![vec![1.0; 5], c.clone(), c];
        let err = qr_least_squares(&x, &[1.0, 2.0, 3.0, 4.0, 5.0], 1e-10).unwrap_err();
        assert_eq!(err.index, 2);
        assert_eq!(err.partners, vec![1]);
    }
}
