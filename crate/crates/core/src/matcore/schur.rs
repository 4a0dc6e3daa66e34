//! Complex Schur form by Householder Hessenberg reduction and single-shift QR.

use super::matrix::{CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// `A = U T U*` with `U` unitary and `T` upper triangular.
#[derive(Clone, Debug)]
pub struct Schur {
    pub unitary: CMatrix,
    pub triangular: CMatrix,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.triangular.diagonal()
    }
}

const ITERATIONS_PER_EIGENVALUE: usize = 40;

pub fn schur(a: &CMatrix) -> Result<Schur> {
    let n = a.require_square()?;
    a.check_finite()?;
    let (mut h, mut u) = hessenberg(a);
    if n == 1 {
        return Ok(Schur {
            unitary: u,
            triangular: h,
        });
    }
    let scale = h.frobenius_norm();
    let eps = f64::EPSILON;
    let max_total = ITERATIONS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    let mut rotations: Vec<(f64, C64)> = Vec::with_capacity(n);

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].l1_norm() + h[(l, l)].l1_norm();
            if s == 0.0 {
                s = scale;
            }
            if h[(l, l - 1)].l1_norm() <= eps * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_total {
            return Err(Error::NoConvergence {
                routine: "complex Schur QR",
                iterations: total,
            });
        }

        let shift = if since_deflation % 10 == 0 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 1.5, h[(hi, hi - 1)].norm() * 0.5)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in l..=hi {
            h[(k, k)] -= shift;
        }
        rotations.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rotations.push((c, s));
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
        }
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let k = l + idx;
            let top = (k + 2).min(hi);
            for i in 0..=top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
            for i in 0..n {
                let x = u[(i, k)];
                let y = u[(i, k + 1)];
                u[(i, k)] = x * c + y * s.conj();
                u[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[(k, k)] += shift;
        }
    }

    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur {
        unitary: u,
        triangular: h,
    })
}

/// Rotation `[[c, s], [-s̄, c]]` with real `c` mapping `(a, b)` to `(r, 0)`.
#[inline]
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Householder reduction `A = U H U*` with `H` upper Hessenberg.
pub fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut u = CMatrix::identity(n);
    let mut v = vec![ZERO; n];
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
        // Left: rows k+1.. of H, all columns k..
        for j in k..n {
            let mut s = ZERO;
            for (t, i) in (k + 1..n).enumerate() {
                s += v[t].conj() * h[(i, j)];
            }
            s *= tau;
            for (t, i) in (k + 1..n).enumerate() {
                h[(i, j)] -= v[t] * s;
            }
        }
        // Right: columns k+1.. of H and U, all rows.
        for m in [&mut h, &mut u] {
            for r in 0..n {
                let mut s = ZERO;
                for (t, j) in (k + 1..n).enumerate() {
                    s += m[(r, j)] * v[t];
                }
                s *= tau;
                for (t, j) in (k + 1..n).enumerate() {
                    m[(r, j)] -= s * v[t].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, u)
}
