//! Dense complex matrices and the Hermitian eigensolver everything else is built on.
//!
//! Matrices are small (d ≤ ~64) and stored row-major. All comparisons are
//! absolute, under an explicit [`ToleranceConfig`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Cyclic Jacobi sweep cap.
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Tolerances used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Invariant validation: Hermitian symmetry, Kraus completeness, row sums.
    pub eps_structural: f64,
    /// "Is this trace / probability zero" decisions and state equality.
    pub eps_zero: f64,
    /// Off-diagonal convergence threshold of the eigensolver.
    pub eps_eig: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_structural: 1e-9,
            eps_zero: 1e-8,
            eps_eig: 1e-12,
        }
    }
}

impl ToleranceConfig {
    /// Checks that all tolerances are strictly positive. An unusual ordering
    /// (anything other than `eps_eig <= eps_structural <= eps_zero`) only logs a warning.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_structural", self.eps_structural),
            ("eps_zero", self.eps_zero),
            ("eps_eig", self.eps_eig),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !(self.eps_eig <= self.eps_structural && self.eps_structural <= self.eps_zero) {
            log::warn!(
                "unusual tolerance ordering: eps_eig={} eps_structural={} eps_zero={}",
                self.eps_eig,
                self.eps_structural,
                self.eps_zero
            );
        }
        Ok(())
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag_real(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// Builds a matrix from nested real rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self::new(rows.len(), cols, data).expect("valid real matrix")
    }

    /// Builds a matrix from nested complex rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::new(rows.len(), cols, rows.concat()).expect("valid complex matrix")
    }

    /// Outer product |v⟩⟨v|.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub(crate) fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Checked product, for callers that cannot guarantee shapes.
    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(self * rhs)
    }

    /// `a · self · a†`.
    pub fn conjugate_by(&self, a: &Self) -> Self {
        &(a * self) * &a.adjoint()
    }

    /// Max-norm distance; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|m_ij − conj(m_ji)|`. Non-square matrices report infinity.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: &ToleranceConfig) -> bool {
        self.hermitian_deviation() <= tol.eps_structural
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        let mut out = self + &adj;
        out.data.iter_mut().for_each(|z| *z *= 0.5);
        out
    }

    /// Returns a copy of the diagonal's real parts.
    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).collect()
    }

    /// Frobenius norm of the strictly off-diagonal part.
    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// Wire encoding: row-major array of rows, each entry a two-element [re, im].
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(D::Error::custom(format!(
                "ragged matrix: row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&[re, im]| C64::new(re, im)))
            .collect();
        ComplexMatrix::new(rows.len(), cols, data).map_err(D::Error::custom)
    }
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V · diag(λ) · V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let lambda = ComplexMatrix::from_diag_real(&self.eigenvalues);
        &(v * &lambda) * &v.adjoint()
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies a
/// real Givens rotation that annihilates it. Sweeps continue until the
/// off-diagonal Frobenius norm drops below `eps_eig · max(1, ‖m‖_F)`.
pub fn eig_hermitian(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<HermitianEigen> {
    let n = m.require_square()?;
    let dev = m.hermitian_deviation();
    if dev > tol.eps_structural {
        return Err(Error::NotHermitian(dev));
    }
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = tol.eps_eig * a.frobenius_norm().max(1.0);

    let mut converged = a.off_diagonal_norm() < threshold;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_JACOBI_SWEEPS {
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = a.off_diagonal_norm() < threshold;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            off_norm: a.off_diagonal_norm(),
        });
    }

    let diag = a.real_diagonal();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// One Jacobi rotation zeroing `a[p][q]`: `a ← U† a U`, `v ← v U`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r; // e^{iφ}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U restricted to (p, q): diag(1, e^{-iφ}) · [[c, s], [-s, c]]
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = phase.conj() * -s;
    let u_qq = phase.conj() * c;

    let n = a.rows;
    // columns: a ← a U
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * u_pp + aiq * u_qp;
        a[(i, q)] = aip * u_pq + aiq * u_qq;
    }
    // rows: a ← U† a
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = u_pp.conj() * apj + u_qp.conj() * aqj;
        a[(q, j)] = u_pq.conj() * apj + u_qq.conj() * aqj;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * u_pp + viq * u_qp;
        v[(i, q)] = vip * u_pq + viq * u_qq;
    }
}

/// Hermitian within `eps_structural` and no eigenvalue below `−eps_structural`.
pub fn is_psd_hermitian(m: &ComplexMatrix, tol: &ToleranceConfig) -> bool {
    if !m.is_square() || !m.is_hermitian(tol) {
        return false;
    }
    match eig_hermitian(m, tol) {
        Ok(e) => e.eigenvalues.first().is_some_and(|&l| l >= -tol.eps_structural),
        Err(_) => false,
    }
}

/// `m ⊕ 0`: embeds a d×d matrix in the top-left block of a (d+1)×(d+1) zero matrix.
pub fn pad_embed(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = m.require_square()?;
    let mut out = ComplexMatrix::zeros(d + 1, d + 1);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Drops the last row and column of a square matrix.
pub fn truncate_top_left(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.require_square()?;
    if n < 2 {
        return Err(Error::DimensionTooSmall);
    }
    let d = n - 1;
    let mut out = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = m[(i, j)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    #[test]
    fn diagonal_input_sorts_eigenvalues() {
        let m = ComplexMatrix::from_diag_real(&[3.0, 1.0, 2.0]);
        let e = eig_hermitian(&m, &tol()).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);
        // permuted identity: eigenvalue 1 lives on basis vector 1, etc.
        let expected = [1usize, 2, 0];
        for (col, &basis) in expected.iter().enumerate() {
            assert!((e.eigenvectors[(basis, col)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_x_spectrum() {
        let e = eig_hermitian(&pauli_x(), &tol()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        // |−⟩ and |+⟩ up to phase, compared through projectors
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let minus = ComplexMatrix::outer(&[C64::new(h, 0.0), C64::new(-h, 0.0)]);
        let plus = ComplexMatrix::outer(&[C64::new(h, 0.0), C64::new(h, 0.0)]);
        let p0 = ComplexMatrix::outer(&e.eigenvectors.column(0));
        let p1 = ComplexMatrix::outer(&e.eigenvectors.column(1));
        assert!(p0.max_abs_diff(&minus) < 1e-12);
        assert!(p1.max_abs_diff(&plus) < 1e-12);
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = ComplexMatrix::from_rows(&[
            vec![C64::new(2.0, 0.0), C64::new(0.0, -1.0), C64::new(0.5, 0.5)],
            vec![C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.5, -0.5), C64::new(0.0, 0.0), C64::new(0.25, 0.0)],
        ]);
        let e = eig_hermitian(&m, &tol()).unwrap();
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-10);
        let vtv = &e.eigenvectors.adjoint() * &e.eigenvectors;
        assert!(vtv.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-10);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&m, &tol()), Err(Error::NotHermitian(_))));
        assert!(!is_psd_hermitian(&m, &tol()));
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let m = ComplexMatrix::from_real_rows(&[
            vec![1.0, 0.3, 0.2],
            vec![0.3, 2.0, 0.1],
            vec![0.2, 0.1, 3.0],
        ]);
        // rotations drive entries to exact zeros, so only a zero threshold is unreachable
        let impossible = ToleranceConfig {
            eps_eig: 0.0,
            ..tol()
        };
        assert!(matches!(
            eig_hermitian(&m, &impossible),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd_hermitian(&ComplexMatrix::identity(3), &tol()));
        assert!(!is_psd_hermitian(&ComplexMatrix::from_diag_real(&[1.0, -0.5]), &tol()));
    }

    #[test]
    fn pad_and_truncate() {
        let one = ComplexMatrix::from_real_rows(&[vec![1.0]]);
        let padded = pad_embed(&one).unwrap();
        assert_eq!(padded, ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]));
        assert_eq!(truncate_top_left(&padded).unwrap(), one);

        let px = pad_embed(&pauli_x()).unwrap();
        assert_eq!(px.rows(), 3);
        assert_eq!(px[(0, 1)], ONE);
        assert!((0..3).all(|k| px[(2, k)] == ZERO && px[(k, 2)] == ZERO));

        let id = truncate_top_left(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(id, ComplexMatrix::identity(3));
        assert!(matches!(truncate_top_left(&one), Err(Error::DimensionTooSmall)));
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert!(matches!(
            ComplexMatrix::new(1, 2, vec![ONE, C64::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(ComplexMatrix::new(2, 2, vec![ONE]).is_err());
        assert!(ComplexMatrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn json_encoding() {
        let m = ComplexMatrix::from_rows(&[vec![C64::new(1.0, -2.0), ZERO]]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[[1.0,-2.0],[0.0,0.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1,0]],[]]").is_err());
        assert!(serde_json::from_str::<ComplexMatrix>("[]").is_err());
    }

    #[test]
    fn tolerance_validation() {
        assert!(tol().validate().is_ok());
        let bad = ToleranceConfig {
            eps_zero: 0.0,
            ..tol()
        };
        assert!(bad.validate().is_err());
        // odd ordering only warns
        let odd = ToleranceConfig {
            eps_eig: 1e-3,
            ..tol()
        };
        assert!(odd.validate().is_ok());
    }
}
