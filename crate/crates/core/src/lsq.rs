//! Linear least squares via normal equations.
//!
//! Columns are scaled to unit norm before forming `AᵀA`, the system is solved
//! by Cholesky, and one round of iterative refinement is applied. If the
//! factorisation breaks down the diagonal is loaded with a small ridge term
//! and the fit is flagged.

use thiserror::Error;

/// Ridge term added to the (column-scaled) normal matrix when it is singular.
pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Relative pivot tolerance below which the normal matrix counts as singular.
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LsqError {
    #[error("no samples")]
    Empty,
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("{0} target values for {1} rows")]
    TargetLength(usize, usize),
    #[error("non-finite value in design matrix or targets")]
    NonFinite,
    #[error("normal system could not be factorised even with ridge regularisation")]
    Breakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqSolution {
    pub coefficients: Vec<f64>,
    /// Sum of squared residuals at the solution.
    pub residual_ss: f64,
    /// True when the ridge fallback was needed.
    pub ridge: bool,
}

/// Minimises `Σ (rows[i]·c − y[i])²` over `c`.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LsqSolution, LsqError> {
    if rows.is_empty() {
        return Err(LsqError::Empty);
    }
    if y.len() != rows.len() {
        return Err(LsqError::TargetLength(y.len(), rows.len()));
    }
    let k = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != k {
            return Err(LsqError::Ragged {
                row: i,
                expected: k,
                found: r.len(),
            });
        }
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(LsqError::NonFinite);
    }
    if k == 0 {
        return Ok(LsqSolution {
            coefficients: Vec::new(),
            residual_ss: y.iter().map(|v| v * v).sum(),
            ridge: false,
        });
    }

    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let n = rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();

    let mut g = vec![vec![0.0; k]; k];
    for r in rows {
        for a in 0..k {
            let ra = r[a] * scale[a];
            if ra == 0.0 {
                continue;
            }
            for b in a..k {
                g[a][b] += ra * r[b] * scale[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            g[a][b] = g[b][a];
        }
    }

    let (chol, ridge) = match cholesky(&g) {
        Some(l) => (l, false),
        None => {
            let mut gr = g.clone();
            for (i, row) in gr.iter_mut().enumerate() {
                row[i] += RIDGE_LAMBDA;
            }
            (cholesky(&gr).ok_or(LsqError::Breakdown)?, true)
        }
    };

    let rhs = |res: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; k];
        for (r, e) in rows.iter().zip(res) {
            for j in 0..k {
                v[j] += r[j] * scale[j] * e;
            }
        }
        v
    };

    let mut z = chol_solve(&chol, &rhs(y));
    // One refinement step against the true residual.
    let res = residuals(rows, y, &z, &scale);
    let dz = chol_solve(&chol, &rhs(&res));
    for (zi, d) in z.iter_mut().zip(dz) {
        *zi += d;
    }

    let coefficients: Vec<f64> = z.iter().zip(&scale).map(|(z, s)| z * s).collect();
    let residual_ss = rows
        .iter()
        .zip(y)
        .map(|(r, yi)| {
            let e = dot(r, &coefficients) - yi;
            e * e
        })
        .sum();
    Ok(LsqSolution {
        coefficients,
        residual_ss,
        ridge,
    })
}

fn residuals(rows: &[Vec<f64>], y: &[f64], z: &[f64], scale: &[f64]) -> Vec<f64> {
    rows.iter()
        .zip(y)
        .map(|(r, yi)| {
            let fit: f64 = r.iter().zip(z).zip(scale).map(|((a, z), s)| a * s * z).sum();
            yi - fit
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor, or `None` if a pivot falls below the
/// relative tolerance.
fn cholesky(g: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let k = g.len();
    let max_diag = (0..k).map(|i| g[i][i]).fold(0.0_f64, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    let tol = PIVOT_TOL * max_diag;
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = g[i][j];
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if s <= tol {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = l.len();
    let mut z = vec![0.0; k];
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i][p] * z[p];
        }
        z[i] = s / l[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = z[i];
        for p in i + 1..k {
            s -= l[p][i] * x[p];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Exponent vectors of all monomials in `n` variables with total degree in
/// `1..=degree`, graded by degree and lexicographic within a degree
/// (`x1, x2, x1², x1x2, x2², …`).
pub fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    fn walk(n: usize, left: u32, from: usize, exps: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(exps.clone());
            return;
        }
        for i in from..n {
            exps[i] += 1;
            walk(n, left - 1, i, exps, out);
            exps[i] -= 1;
        }
    }
    let mut out = Vec::new();
    let mut exps = vec![0u32; n];
    for d in 1..=degree {
        walk(n, d, 0, &mut exps, &mut out);
    }
    out
}

/// Evaluates each monomial at `x`.
pub fn expand(x: &[f64], monos: &[Vec<u32>]) -> Vec<f64> {
    monos
        .iter()
        .map(|e| {
            e.iter()
                .zip(x)
                .filter(|(p, _)| **p > 0)
                .map(|(p, v)| v.powi(*p as i32))
                .product()
        })
        .collect()
}

/// Number of monomials in `n` variables of total degree `1..=d`.
pub fn monomial_count(n: usize, d: u32) -> usize {
    // C(n + d, d) − 1
    let mut c: u128 = 1;
    for i in 0..d as u128 {
        c = c * (n as u128 + i + 1) / (i + 1);
    }
    (c - 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let rows = vec![vec![1.0, 1.0], vec![1.0, 2.0]];
        let s = least_squares(&rows, &[2.0, 4.0]).unwrap();
        assert!(s.coefficients[0].abs() < 1e-12);
        assert!((s.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(!s.ridge);
        assert!(s.residual_ss < 1e-20);
    }

    #[test]
    fn overdetermined_mean() {
        let rows = vec![vec![1.0]; 4];
        let s = least_squares(&rows, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s.coefficients[0] - 2.5).abs() < 1e-12);
        assert!((s.residual_ss - 5.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_column_uses_ridge() {
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let s = least_squares(&rows, &[2.0, 4.0, 6.0]).unwrap();
        assert!(s.ridge);
        assert!((s.coefficients[0] + s.coefficients[1] - 2.0).abs() < 1e-6);
        assert!((s.coefficients[0] - s.coefficients[1]).abs() < 1e-6);
    }

    #[test]
    fn zero_column_is_singular_but_solved() {
        let rows = vec![vec![1.0, 0.0], vec![2.0, 0.0]];
        let s = least_squares(&rows, &[1.0, 2.0]).unwrap();
        assert!(s.ridge);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-6);
        assert!(s.coefficients[1].abs() < 1e-6);
    }

    #[test]
    fn errors() {
        assert_eq!(least_squares(&[], &[]), Err(LsqError::Empty));
        assert!(matches!(
            least_squares(&[vec![1.0], vec![1.0, 2.0]], &[1.0, 2.0]),
            Err(LsqError::Ragged { row: 1, .. })
        ));
        assert!(matches!(
            least_squares(&[vec![f64::NAN]], &[1.0]),
            Err(LsqError::NonFinite)
        ));
    }

    #[test]
    fn monomial_order_and_count() {
        let m = monomials(2, 2);
        assert_eq!(m, vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        for n in 1..5 {
            for d in 1..4 {
                assert_eq!(monomials(n, d).len(), monomial_count(n, d), "n={n} d={d}");
            }
        }
        assert_eq!(monomials(3, 1), vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(expand(&[2.0, 3.0], &m), vec![2.0, 3.0, 4.0, 6.0, 9.0]);
    }
}
