//! Hermitian eigendecomposition: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit QL iterations.

use super::matrix::{CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored column-wise.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V f(Λ) V*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        CMatrix::from_fn(n, n, |i, j| {
            let mut s = ZERO;
            for k in 0..n {
                if fv[k] != 0.0 {
                    s += v[(i, k)] * v[(j, k)].conj() * fv[k];
                }
            }
            s
        })
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Full eigendecomposition of a Hermitian matrix. Only the lower triangle is
/// read; the caller is responsible for Hermiticity.
pub fn eigh(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.require_square()?;
    let (mut d, mut e, mut z) = tridiagonalize(a, true);
    let mut z = z.take().expect("vectors requested");
    ql_implicit(&mut d, &mut e, Some(&mut z))?;
    sort_pairs(&mut d, Some(&mut z));
    debug_assert_eq!(d.len(), n);
    Ok(HermitianEigen {
        values: d,
        vectors: z,
    })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &CMatrix) -> Result<Vec<f64>> {
    a.require_square()?;
    let (mut d, mut e, _) = tridiagonalize(a, false);
    ql_implicit(&mut d, &mut e, None)?;
    sort_pairs(&mut d, None);
    Ok(d)
}

/// Largest eigenvalue of a Hermitian matrix given as a row-major slice.
/// Closed forms for n ≤ 2, QL otherwise.
pub(crate) fn max_eigenvalue_slice(n: usize, g: &[C64]) -> f64 {
    match n {
        0 => 0.0,
        1 => g[0].re,
        2 => {
            let a = g[0].re;
            let d = g[3].re;
            let b = g[2].norm();
            let h = 0.5 * (a - d);
            0.5 * (a + d) + h.hypot(b)
        }
        _ => {
            let m = CMatrix::from_row_major(n, n, g.to_vec()).expect("finite gram");
            eigvalsh(&m)
                .map(|v| v[n - 1])
                .unwrap_or_else(|_| power_max(&m))
        }
    }
}

fn power_max(m: &CMatrix) -> f64 {
    let n = m.rows();
    let mut v = vec![ONE; n];
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = m.mat_vec(&v);
        let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw / v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v = w.into_iter().map(|z| z / nw).collect();
        if (next - lambda).abs() <= 1e-15 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Reduces Hermitian `a` to `Z T Z*` with `T` real symmetric tridiagonal.
/// Returns (diagonal, off-diagonal with trailing zero, Z).
fn tridiagonalize(a: &CMatrix, want_vectors: bool) -> (Vec<f64>, Vec<f64>, Option<CMatrix>) {
    let n = a.rows();
    // Work on a Hermitian copy filled from the lower triangle.
    let mut h = CMatrix::from_fn(n, n, |i, j| if i >= j { a[(i, j)] } else { a[(j, i)].conj() });
    for i in 0..n {
        h[(i, i)] = C64::new(h[(i, i)].re, 0.0);
    }
    let mut q = want_vectors.then(|| CMatrix::identity(n));

    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let norm_x = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm_x;
        for (t, i) in (k + 1..n).enumerate() {
            v[t] = h[(i, k)];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v[..len].iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;

        // p = tau * A' v on the trailing block.
        for (t, i) in (k + 1..n).enumerate() {
            let mut s = ZERO;
            for (u, j) in (k + 1..n).enumerate() {
                s += h[(i, j)] * v[u];
            }
            p[t] = s * tau;
        }
        let vp: C64 = v[..len].iter().zip(&p[..len]).map(|(a, b)| a.conj() * b).sum();
        let kfac = vp * (0.5 * tau);
        for t in 0..len {
            p[t] -= kfac * v[t];
        }
        for (t, i) in (k + 1..n).enumerate() {
            for (u, j) in (k + 1..n).enumerate() {
                h[(i, j)] -= v[t] * p[u].conj() + p[t] * v[u].conj();
            }
        }
        h[(k + 1, k)] = alpha;
        h[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            h[(i, k)] = ZERO;
            h[(k, i)] = ZERO;
        }

        if let Some(q) = q.as_mut() {
            // Q <- Q (I - tau v v*)
            for r in 0..n {
                let mut s = ZERO;
                for (t, j) in (k + 1..n).enumerate() {
                    s += q[(r, j)] * v[t];
                }
                s *= tau;
                for (t, j) in (k + 1..n).enumerate() {
                    q[(r, j)] -= s * v[t].conj();
                }
            }
        }
    }

    let d: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
    let mut e = vec![0.0; n];
    // Diagonal phase scaling makes the off-diagonal real and nonnegative.
    let mut delta = ONE;
    let mut phases = vec![ONE; n];
    for i in 0..n.saturating_sub(1) {
        let sub = h[(i + 1, i)];
        let mag = sub.norm();
        e[i] = mag;
        if mag > 0.0 {
            delta *= sub / mag;
        }
        phases[i + 1] = delta;
    }
    if let Some(q) = q.as_mut() {
        for r in 0..n {
            for j in 0..n {
                q[(r, j)] *= phases[j];
            }
        }
    }
    (d, e, q)
}

/// Implicit QL on a real symmetric tridiagonal matrix. `e[i]` couples `i`
/// and `i + 1`; `e[n-1]` must be zero. Rotations are accumulated into the
/// columns of `z` when given.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut CMatrix>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence {
                        routine: "tridiagonal QL",
                        iterations: iter,
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
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                let mut i = m;
                while i > l {
                    i -= 1;
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
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let zh = z[(k, i + 1)];
                            let zi = z[(k, i)];
                            z[(k, i + 1)] = zi * s + zh * c;
                            z[(k, i)] = zi * c - zh * s;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn sort_pairs(d: &mut [f64], z: Option<&mut CMatrix>) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    d.copy_from_slice(&sorted);
    if let Some(z) = z {
        let old = z.clone();
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                z[(r, new_col)] = old[(r, old_col)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::random::{ginibre, stream_rng};

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = stream_rng(seed, 0);
        let g = ginibre(n, n, &mut rng);
        (&g + &g.adjoint()).scale_real(0.5)
    }

    #[test]
    fn reconstructs_random_hermitian() {
        for n in 1..=9 {
            let a = random_hermitian(n, 40 + n as u64);
            let eig = eigh(&a).unwrap();
            let back = eig.map(|x| x);
            assert!((&back - &a).max_abs() < 1e-12, "n={n}");
            let vv = eig.vectors.gram();
            assert!((&vv - &CMatrix::identity(n)).max_abs() < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let vals = eigvalsh(&a).unwrap();
            for (x, y) in vals.iter().zip(&eig.values) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_and_degenerate() {
        let a = CMatrix::diag_real(&[3.0, -1.0, 3.0, 0.0]);
        let v = eigvalsh(&a).unwrap();
        assert_eq!(v, vec![-1.0, 0.0, 3.0, 3.0]);
        let i = CMatrix::identity(5);
        let eig = eigh(&i).unwrap();
        assert!(eig.values.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn two_by_two_closed_form_matches_ql() {
        let a = random_hermitian(2, 7);
        let top = max_eigenvalue_slice(2, a.as_slice());
        assert!((top - eigvalsh(&a).unwrap()[1]).abs() < 1e-14);
    }
}
