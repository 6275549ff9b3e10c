//! Random model generators for property tests, acceptance runs and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numerics::{ComplexMatrix, C64};
use crate::quantum::DensityMatrix;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `rows × cols` complex Gaussian matrix.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    ComplexMatrix::new(rows, cols, data).expect("finite Gaussian entries")
}

/// First `cols` columns of a Haar-like random unitary of dimension `rows`
/// (Gram–Schmidt on a Gaussian matrix).
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    loop {
        let mut m = gaussian_matrix(rows, cols, rng);
        let mut ok = true;
        for j in 0..cols {
            for k in 0..j {
                let proj: C64 = (0..rows).map(|i| m[(i, k)].conj() * m[(i, j)]).sum();
                for i in 0..rows {
                    let mik = m[(i, k)];
                    m[(i, j)] -= proj * mik;
                }
            }
            let norm = (0..rows).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for i in 0..rows {
                m[(i, j)] /= norm;
            }
        }
        if ok {
            return m;
        }
    }
}

/// `count` Kraus matrices of dimension `d` obtained by slicing a random
/// `(count·d) × d` isometry into stacked blocks; complete by construction.
pub fn random_kraus<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let v = random_isometry(count * d, d, rng);
    (0..count)
        .map(|b| {
            let mut k = ComplexMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    k[(i, j)] = v[(b * d + i, j)];
                }
            }
            k
        })
        .collect()
}

/// Random full-rank mixed state `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = gaussian_matrix(d, d, rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(m.scale_real(1.0 / tr))
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    gaussian_matrix(d, d, rng).hermitian_part()
}

/// Random probability vector of length `n` (normalized uniforms).
pub fn random_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
