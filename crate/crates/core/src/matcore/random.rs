//! Seeded sampling. Every random draw in the crate goes through ChaCha8
//! streams so experiments are reproducible bit for bit from `(seed, stream)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{CMatrix, C64, ZERO};

/// The generator used for all experiments.
pub type SeededRng = ChaCha8Rng;

/// Independent stream `stream` of the generator keyed by `seed`.
///
/// Restarts and trials each take their own stream, so results do not depend
/// on the order in which they are executed.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex normal: real and imaginary parts N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary drawn from `rng`: QR of a Ginibre matrix with the
/// diagonal of R made positive.
pub fn haar_unitary_from<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, n, rng);
    orthonormalize_columns(&g)
}

/// Haar unitary of size `n` for a fixed seed (stream 0).
pub fn haar_unitary(n: usize, seed: u64) -> CMatrix {
    assert!(n >= 1, "haar_unitary needs n >= 1");
    haar_unitary_from(n, &mut stream_rng(seed, 0))
}

/// Uniformly distributed unit vector in C^n.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Gram-Schmidt with one reorthogonalization pass ("twice is enough"),
/// processing columns left to right so the span of the leading `k` columns
/// is preserved. Dependent columns are replaced by a unit vector orthogonal
/// to the columns already accepted.
pub fn orthonormalize_columns(a: &CMatrix) -> CMatrix {
    let n = a.rows();
    let m = a.cols();
    let mut q = CMatrix::zeros(n, m);
    let mut next_fill = 0usize;
    for j in 0..m {
        let mut v = a.column(j);
        let original = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for _ in 0..2 {
            project_out(&q, j, &mut v);
        }
        let mut norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-13 * original.max(1e-300) || norm == 0.0 {
            // Fill with the first standard basis vector not yet in span.
            loop {
                let mut e = vec![ZERO; n];
                e[next_fill % n] = C64::new(1.0, 0.0);
                next_fill += 1;
                for _ in 0..2 {
                    project_out(&q, j, &mut e);
                }
                let en = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if en > 0.5 {
                    v = e;
                    norm = en;
                    break;
                }
            }
        }
        for (i, z) in v.iter().enumerate() {
            q[(i, j)] = z / norm;
        }
    }
    q
}

fn project_out(q: &CMatrix, upto: usize, v: &mut [C64]) {
    let n = q.rows();
    for k in 0..upto {
        let mut dot = ZERO;
        for i in 0..n {
            dot += q[(i, k)].conj() * v[i];
        }
        for i in 0..n {
            v[i] -= q[(i, k)] * dot;
        }
    }
}
