use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// QL iteration cap per eigenvalue.
pub const QL_MAX_ITERS: usize = 60;

/// Eigendecomposition `B = V diag(d) V^T` of a symmetric matrix: Householder
/// reduction to tridiagonal form, then implicit QL with Wilkinson-style shifts.
/// `B` is symmetrized as `(B + B^T)/2` first; `d` is ascending.
pub fn sym_eig(b: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let n = b.rows();
    if b.cols() != n {
        return Err(Error::InvalidDimensions(format!(
            "sym_eig needs a square matrix, got {}x{}",
            n,
            b.cols()
        )));
    }
    b.ensure_finite("sym_eig input")?;
    if n == 0 {
        return Ok((DenseMatrix::zeros(0, 0), Vec::new()));
    }
    // Column-major: v[j * n + k] is V(k, j).
    let mut v: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (j, i) = (idx / n, idx % n);
            0.5 * (b.get(i, j) + b.get(j, i))
        })
        .collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    implicit_ql(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let vals = order.iter().map(|&i| d[i]).collect();
    let vecs = DenseMatrix::new(n, n, v)?.select_columns(&order);
    Ok((vecs, vals))
}

/// Householder reduction of the symmetric matrix held in `v` to tridiagonal
/// form (diagonal `d`, subdiagonal `e[1..]`), accumulating the transform in `v`.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let ix = |k: usize, j: usize| j * n + k;
    for j in 0..n {
        d[j] = v[ix(n - 1, j)];
    }
    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[ix(i - 1, j)];
                v[ix(i, j)] = 0.0;
                v[ix(j, i)] = 0.0;
            }
        } else {
            for x in &mut d[..i] {
                *x /= scale;
                h += *x * *x;
            }
            let f = d[i - 1];
            let g = if f > 0.0 { -h.sqrt() } else { h.sqrt() };
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);
            for j in 0..i {
                let f = d[j];
                v[ix(j, i)] = f;
                let mut g = e[j] + v[ix(j, j)] * f;
                for k in j + 1..i {
                    let vkj = v[ix(k, j)];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let (f, g) = (d[j], e[j]);
                let col = &mut v[j * n..(j + 1) * n];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = col[i - 1];
                col[i] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[ix(n - 1, i)] = v[ix(i, i)];
        v[ix(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[ix(k, i + 1)] / h;
            }
            for j in 0..=i {
                let g: f64 = (0..=i).map(|k| v[ix(k, i + 1)] * v[ix(k, j)]).sum();
                for k in 0..=i {
                    v[ix(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[ix(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[ix(n - 1, j)];
        v[ix(n - 1, j)] = 0.0;
    }
    v[ix(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`, rotating the columns of `v`.
fn implicit_ql(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > f64::EPSILON * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITERS {
                    return Err(Error::NoConvergence {
                        routine: "sym_eig",
                        sweeps: QL_MAX_ITERS,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for x in &mut d[l + 2..n] {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = v.split_at_mut((i + 1) * n);
                    let (vi, vi1) = (&mut lo[i * n..], &mut hi[..n]);
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= f64::EPSILON * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Cyclic Jacobi, kept as an independent check of [`sym_eig`].
#[cfg(test)]
pub(crate) fn sym_eig_jacobi(b: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let n = b.rows();
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (b.get(i, j) + b.get(j, i)));
    let mut v = DenseMatrix::identity(n);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (apq, app, aqq) = (a.get(p, q), a.get(p, p), a.get(q, q));
                if apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let rot = |m: &mut DenseMatrix, cols: bool| {
                    for k in 0..n {
                        let (ip, iq) = if cols { ((k, p), (k, q)) } else { ((p, k), (q, k)) };
                        let (xp, xq) = (m.get(ip.0, ip.1), m.get(iq.0, iq.1));
                        m.set(ip.0, ip.1, c * xp - s * xq);
                        m.set(iq.0, iq.1, s * xp + c * xq);
                    }
                };
                rot(&mut a, true);
                rot(&mut a, false);
                rot(&mut v, true);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let d = order.iter().map(|&i| a.get(i, i)).collect();
    (v.select_columns(&order), d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RngState;

    fn assert_col_parallel(v: &DenseMatrix, j: usize, want: &[f64]) {
        let d: f64 = v.col(j).iter().zip(want).map(|(a, b)| a * b).sum();
        assert!((d.abs() - 1.0).abs() < 1e-12, "column {j}: {:?}", v.col(j));
    }

    #[test]
    fn diagonal_input() {
        let b = DenseMatrix::from_row_major(2, 2, &[4., 0., 0., 1.]).unwrap();
        let (v, d) = sym_eig(&b).unwrap();
        assert_eq!(d, vec![1.0, 4.0]);
        assert_col_parallel(&v, 0, &[0., 1.]);
        assert_col_parallel(&v, 1, &[1., 0.]);
    }

    #[test]
    fn analytic_two_by_two() {
        let b = DenseMatrix::from_row_major(2, 2, &[2., 1., 1., 2.]).unwrap();
        let (v, d) = sym_eig(&b).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14 && (d[1] - 3.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_col_parallel(&v, 0, &[h, -h]);
        assert_col_parallel(&v, 1, &[h, h]);
    }

    #[test]
    fn random_symmetric_residual() {
        let g = RngState::new(11).gaussian_matrix(30, 30).unwrap();
        let b = g.add(&g.transpose()).unwrap();
        let (v, d) = sym_eig(&b).unwrap();
        let mut vd = v.clone();
        vd.scale_columns(&d);
        let resid = b.matmul(&v).unwrap().sub(&vd).unwrap().frobenius_norm();
        assert!(resid < 1e-10 * b.frobenius_norm(), "residual {resid}");
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
        let vtv = v.t_matmul(&v).unwrap();
        assert!(vtv.sub(&DenseMatrix::identity(30)).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn agrees_with_jacobi() {
        for (seed, n) in [(1, 1), (2, 2), (3, 7), (4, 40)] {
            let g = RngState::new(seed).gaussian_matrix(n, n).unwrap();
            let b = g.add(&g.transpose()).unwrap();
            let (_, d) = sym_eig(&b).unwrap();
            let (_, dj) = sym_eig_jacobi(&b);
            for (x, y) in d.iter().zip(&dj) {
                assert!((x - y).abs() < 1e-12 * b.frobenius_norm().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn repeated_and_zero_eigenvalues() {
        let (v, d) = sym_eig(&DenseMatrix::identity(5)).unwrap();
        assert!(d.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(v.t_matmul(&v).unwrap().sub(&DenseMatrix::identity(5)).unwrap().frobenius_norm() < 1e-14);
        let (_, d) = sym_eig(&DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(d, vec![0.0; 3]);
    }

    #[test]
    fn rejects_non_square() {
        assert!(sym_eig(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
