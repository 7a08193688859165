//! Small dense linear algebra on row-major `Vec<Vec<f64>>`.

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_dense(m: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.iter().zip(rhs).map(|(r, b)| {
        let mut row = r.clone();
        row.push(*b);
        row
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                for c in col..=n {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    Some(x)
}

/// Singular values of `m` by one-sided Jacobi rotations, sorted descending.
pub fn jacobi_singular_values(m: &[Vec<f64>]) -> Vec<f64> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    // Work on columns of m.
    let mut u: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| m[i][j]).collect()).collect();
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = u[p].iter().map(|v| v * v).sum();
                let beta: f64 = u[q].iter().map(|v| v * v).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(a, b)| a * b).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let a = u[p][k];
                    let b = u[q][k];
                    u[p][k] = c * a - s * b;
                    u[q][k] = s * a + c * b;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = u.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value via [`jacobi_singular_values`].
pub fn spectral_norm(m: &[Vec<f64>]) -> f64 {
    jacobi_singular_values(m).first().copied().unwrap_or(0.0)
}

/// Lawson-Hanson non-negative least squares for `min |A x - b|, x >= 0`.
///
/// Returns the solution and the residual norm.
pub fn nnls(a: &[Vec<f64>], b: &[f64]) -> (Vec<f64>, f64) {
    let m = a.len();
    let n = a[0].len();
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let residual = |x: &[f64]| -> Vec<f64> {
        (0..m).map(|i| b[i] - (0..n).map(|j| a[i][j] * x[j]).sum::<f64>()).collect()
    };
    let tol = 1e-12;
    for _outer in 0..3 * n + 10 {
        let r = residual(&x);
        let w: Vec<f64> = (0..n).map(|j| (0..m).map(|i| a[i][j] * r[i]).sum()).collect();
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let s_p = least_squares_subset(a, b, &idx);
            if s_p.iter().all(|&v| v > tol) {
                x = vec![0.0; n];
                for (k, &col) in idx.iter().enumerate() {
                    x[col] = s_p[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &col) in idx.iter().enumerate() {
                if s_p[k] <= tol {
                    let denom = x[col] - s_p[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[col] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &col) in idx.iter().enumerate() {
                x[col] += alpha * (s_p[k] - x[col]);
            }
            for &col in &idx {
                if x[col] <= tol {
                    x[col] = 0.0;
                    passive[col] = false;
                }
            }
        }
    }
    let r = residual(&x);
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    (x, norm)
}

fn least_squares_subset(a: &[Vec<f64>], b: &[f64], idx: &[usize]) -> Vec<f64> {
    let k = idx.len();
    let m = a.len();
    let mut g = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (p, &cp) in idx.iter().enumerate() {
        for (q, &cq) in idx.iter().enumerate() {
            g[p][q] = (0..m).map(|i| a[i][cp] * a[i][cq]).sum();
        }
        rhs[p] = (0..m).map(|i| a[i][cp] * b[i]).sum();
    }
    solve_dense(&g, &rhs).unwrap_or_else(|| vec![0.0; k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let m = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_dense(&m, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = vec![vec![3.0, 0.0], vec![0.0, -4.0], vec![0.0, 0.0]];
        let sv = jacobi_singular_values(&m);
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn nnls_clips_negative_component() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (x, r) = nnls(&a, &[1.0, -2.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1] == 0.0);
        assert!((r - 2.0).abs() < 1e-12);
    }
}
