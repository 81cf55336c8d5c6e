//! Naive dense-matrix helpers backing unit-test oracles.
//!
//! Everything here is built directly from operator definitions (Kronecker
//! products and explicit basis action), deliberately sharing no code with the
//! symplectic fast paths it is used to check. Sizes stay tiny (n <= 4).

use crate::pauli::PauliString;
use num_complex::Complex64;

pub type CMat = Vec<Vec<Complex64>>;

pub fn eye(dim: usize) -> CMat {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    let (ar, inner, bc) = (a.len(), b.len(), b[0].len());
    let mut m = vec![vec![Complex64::new(0.0, 0.0); bc]; ar];
    for i in 0..ar {
        for k in 0..inner {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..bc {
                m[i][j] += aik * b[k][j];
            }
        }
    }
    m
}

pub fn scale(a: &CMat, s: Complex64) -> CMat {
    a.iter()
        .map(|row| row.iter().map(|z| z * s).collect())
        .collect()
}

pub fn mat_approx_eq(a: &CMat, b: &CMat, tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    for (ra, rb) in a.iter().zip(b) {
        for (za, zb) in ra.iter().zip(rb) {
            if (za - zb).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Basis convention: qubit 0 is the most significant bit of the index, i.e.
/// the leftmost factor of the tensor product, matching Pauli literals.
pub fn pauli_matrix(p: &PauliString) -> CMat {
    let n = p.num_qubits();
    let dim = 1usize << n;
    let phase = Complex64::new(0.0, 1.0).powu(p.phase() as u32);
    let mut x_mask = 0usize;
    let mut z_mask = 0usize;
    for k in 0..n {
        if p.x_bit(k) {
            x_mask |= 1 << (n - 1 - k);
        }
        if p.z_bit(k) {
            z_mask |= 1 << (n - 1 - k);
        }
    }
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for c in 0..dim {
        let r = c ^ x_mask;
        let sign = if ((r & z_mask).count_ones()) & 1 == 1 {
            -1.0
        } else {
            1.0
        };
        m[r][c] = phase * sign;
    }
    m
}
