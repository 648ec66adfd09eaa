//! Dense Hermitian eigensolver: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit-shift QL iteration.
//!
//! Matrices are row-major `n×n`. Eigenvectors are returned one per row:
//! `vectors[j*n + i]` is component `i` of eigenvector `j`, sorted by
//! ascending eigenvalue.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const QL_MAX_ITER: usize = 60;

#[derive(Clone, Debug)]
pub struct Eigen<T> {
    pub values: Vec<f64>,
    pub vectors: Vec<T>,
    pub n: usize,
}

impl<T: Copy> Eigen<T> {
    pub fn vector(&self, j: usize) -> &[T] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }
}

/// Diagonal `d` and off-diagonal `e` (`e[i]` couples `i` and `i+1`, `e[n-1] = 0`).
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

/// Householder reduction `A = Q T Qᵀ`; returns `T` and the rows of `Qᵀ`.
pub fn tridiagonalize_real(mut a: Vec<f64>, n: usize) -> (Tridiagonal, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut qt = identity(n, 0.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let norm = (lo..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[lo * n + k];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for i in lo..n {
            v[i] = a[i * n + k];
        }
        v[lo] -= alpha;
        let vv = 2.0 * norm * (norm + x0.abs());
        if vv == 0.0 {
            continue;
        }
        let tau = 2.0 / vv;
        // p = τ A v on the trailing block, then w = p − (τ/2)(vᵀp) v.
        for i in lo..n {
            let row = &a[i * n + lo..i * n + n];
            p[i] = tau * row.iter().zip(&v[lo..n]).map(|(x, y)| x * y).sum::<f64>();
        }
        let kk = 0.5 * tau * (lo..n).map(|i| v[i] * p[i]).sum::<f64>();
        for i in lo..n {
            p[i] -= kk * v[i];
        }
        for i in lo..n {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[i * n + lo..i * n + n];
            for (j, x) in row.iter_mut().enumerate() {
                *x -= vi * p[lo + j] + wi * v[lo + j];
            }
        }
        a[lo * n + k] = alpha;
        a[k * n + lo] = alpha;
        for i in lo + 1..n {
            a[i * n + k] = 0.0;
            a[k * n + i] = 0.0;
        }
        // Qᵀ ← H Qᵀ on rows lo..n.
        let mut s = vec![0.0; n];
        for i in lo..n {
            let row = &qt[i * n..(i + 1) * n];
            for (sc, r) in s.iter_mut().zip(row) {
                *sc += v[i] * r;
            }
        }
        for i in lo..n {
            let f = tau * v[i];
            let row = &mut qt[i * n..(i + 1) * n];
            for (r, sc) in row.iter_mut().zip(&s) {
                *r -= f * sc;
            }
        }
    }
    let d = (0..n).map(|i| a[i * n + i]).collect();
    let e = (0..n).map(|i| if i + 1 < n { a[(i + 1) * n + i] } else { 0.0 }).collect();
    (Tridiagonal { d, e }, qt)
}

/// Unitary reduction of a Hermitian matrix `A = U T Uᴴ` with `T` real
/// symmetric tridiagonal; returns `T` and the rows of `Uᴴ`.
pub fn tridiagonalize_hermitian(mut a: Vec<C64>, n: usize) -> (Tridiagonal, Vec<C64>) {
    assert_eq!(a.len(), n * n);
    let zero = C64::new(0.0, 0.0);
    let mut r = identity(n, zero, C64::new(1.0, 0.0));
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    let mut sub = vec![zero; n];
    for k in 0..n.saturating_sub(1) {
        let lo = k + 1;
        let norm = (lo..n).map(|i| a[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        let x0 = a[lo * n + k];
        if norm == 0.0 || (lo + 1 == n) {
            sub[k] = x0;
            continue;
        }
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        for i in lo..n {
            v[i] = a[i * n + k];
        }
        v[lo] -= alpha;
        let vv = 2.0 * norm * (norm + x0.norm());
        let tau = 2.0 / vv;
        for i in lo..n {
            let row = &a[i * n + lo..i * n + n];
            p[i] = tau * row.iter().zip(&v[lo..n]).map(|(x, y)| x * y).sum::<C64>();
        }
        let kk = 0.5 * tau * (lo..n).map(|i| v[i].conj() * p[i]).sum::<C64>().re;
        for i in lo..n {
            p[i] -= kk * v[i];
        }
        for i in lo..n {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[i * n + lo..i * n + n];
            for (j, x) in row.iter_mut().enumerate() {
                *x -= vi * p[lo + j].conj() + wi * v[lo + j].conj();
            }
        }
        sub[k] = alpha;
        // Uᴴ ← H Uᴴ on rows lo..n.
        let mut s = vec![zero; n];
        for i in lo..n {
            let vc = v[i].conj();
            let row = &r[i * n..(i + 1) * n];
            for (sc, x) in s.iter_mut().zip(row) {
                *sc += vc * x;
            }
        }
        for i in lo..n {
            let f = tau * v[i];
            let row = &mut r[i * n..(i + 1) * n];
            for (x, sc) in row.iter_mut().zip(&s) {
                *x -= f * sc;
            }
        }
    }
    // Diagonal phases D make Dᴴ T D real: d₀ = 1, d_{i+1} = d_i·t_{i+1,i}/|t_{i+1,i}|.
    let mut phase = C64::new(1.0, 0.0);
    let mut e = vec![0.0; n];
    for i in 0..n {
        if i > 0 {
            let t = sub[i - 1];
            if t.norm() > 0.0 {
                phase *= t / t.norm();
            }
            e[i - 1] = t.norm();
        }
        let row = &mut r[i * n..(i + 1) * n];
        let c = phase.conj();
        for x in row.iter_mut() {
            *x *= c;
        }
    }
    let d = (0..n).map(|i| a[i * n + i].re).collect();
    (Tridiagonal { d, e }, r)
}

fn identity<T: Copy>(n: usize, zero: T, one: T) -> Vec<T> {
    let mut m = vec![zero; n * n];
    for i in 0..n {
        m[i * n + i] = one;
    }
    m
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. Each rotation is
/// applied to consecutive rows of `zt`, so rows that start as `Qᵀ` end as
/// eigenvectors of the original matrix.
pub fn tql_implicit(t: &mut Tridiagonal, zt: &mut [f64], n: usize) -> Result<()> {
    let d = &mut t.d;
    let e = &mut t.e;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::Eigen { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (head, tail) = zt.split_at_mut((i + 1) * n);
                let zi = &mut head[i * n..];
                let zi1 = &mut tail[..n];
                for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                    let fb = *b;
                    *b = s * *a + c * fb;
                    *a = c * *a - s * fb;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// Eigen-decomposition of a real symmetric matrix.
pub fn symmetric_eigen(a: Vec<f64>, n: usize) -> Result<Eigen<f64>> {
    let (mut t, mut zt) = tridiagonalize_real(a, n);
    tql_implicit(&mut t, &mut zt, n)?;
    let order = sorted_order(&t.d);
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        vectors.extend_from_slice(&zt[j * n..(j + 1) * n]);
    }
    Ok(Eigen { values: order.iter().map(|&j| t.d[j]).collect(), vectors, n })
}

/// Eigen-decomposition of a Hermitian matrix.
pub fn hermitian_eigen(a: Vec<C64>, n: usize) -> Result<Eigen<C64>> {
    let (mut t, r) = tridiagonalize_hermitian(a, n);
    let mut w = identity(n, 0.0, 1.0);
    tql_implicit(&mut t, &mut w, n)?;
    let order = sorted_order(&t.d);
    // Eigenvector j = Σ_i W[i,j]·conj(row i of Dᴴ Uᴴ).
    let mut vectors = vec![C64::new(0.0, 0.0); n * n];
    for (slot, &j) in order.iter().enumerate() {
        let out = &mut vectors[slot * n..(slot + 1) * n];
        for i in 0..n {
            let wij = w[j * n + i];
            if wij == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(&r[i * n..(i + 1) * n]) {
                *o += wij * x.conj();
            }
        }
    }
    Ok(Eigen { values: order.iter().map(|&j| t.d[j]).collect(), vectors, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = lcg(&mut s);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        a
    }

    fn random_hermitian(n: usize, seed: u64) -> Vec<C64> {
        let mut s = seed;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new(lcg(&mut s), 0.0);
            for j in 0..i {
                let x = C64::new(lcg(&mut s), lcg(&mut s));
                a[i * n + j] = x;
                a[j * n + i] = x.conj();
            }
        }
        a
    }

    #[test]
    fn two_by_two_closed_form() {
        let (w1, wk, g) = (2.0, 1.3, 0.07);
        let e = symmetric_eigen(vec![w1, g, g, wk], 2).unwrap();
        let mid = 0.5 * (w1 + wk);
        let rad = (0.25 * (w1 - wk) * (w1 - wk) + g * g).sqrt();
        assert!((e.values[0] - (mid - rad)).abs() < 1e-15);
        assert!((e.values[1] - (mid + rad)).abs() < 1e-15);
    }

    #[test]
    fn diagonal_input_is_untouched() {
        let n = 5;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = (n - i) as f64;
        }
        let e = symmetric_eigen(a, n).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        for j in 0..n {
            let v = e.vector(j);
            assert!((v[n - 1 - j].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn real_matches_nalgebra() {
        let n = 40;
        let a = random_symmetric(n, 7);
        let e = symmetric_eigen(a.clone(), n).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(n, n, &a);
        let mut oracle: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (x, y) in e.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12);
        }
        // A v = λ v and orthonormality.
        for j in 0..n {
            let v = nalgebra::DVector::from_row_slice(e.vector(j));
            assert!((&m * &v - e.values[j] * &v).norm() < 1e-12);
            for k in 0..n {
                let dot: f64 = e.vector(j).iter().zip(e.vector(k)).map(|(a, b)| a * b).sum();
                let delta = if j == k { 1.0 } else { 0.0 };
                assert!((dot - delta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_matches_nalgebra() {
        let n = 30;
        let a = random_hermitian(n, 11);
        let e = hermitian_eigen(a.clone(), n).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(n, n, &a);
        let mut oracle: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (x, y) in e.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        for j in 0..n {
            let v = nalgebra::DVector::from_row_slice(e.vector(j));
            assert!((&m * &v - &v * C64::new(e.values[j], 0.0)).norm() < 1e-12);
            for k in 0..n {
                let dot: C64 = e.vector(j).iter().zip(e.vector(k)).map(|(a, b)| a.conj() * b).sum();
                let delta = if j == k { 1.0 } else { 0.0 };
                assert!((dot - delta).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_is_preserved() {
        let n = 60;
        let a = random_symmetric(n, 3);
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let e = symmetric_eigen(a, n).unwrap();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-12);
    }
}
