//! Standard single- and two-qubit operators and embedding helpers.

use std::f64::consts::FRAC_1_SQRT_2;

use super::matrix::{ComplexMatrix, C64, I, ONE, ZERO};

pub fn id() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

pub fn h() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
}

/// `e^{iφZ/2} = diag(e^{iφ/2}, e^{−iφ/2})`.
pub fn rz_half(phi: f64) -> ComplexMatrix {
    ComplexMatrix::diagonal(&[C64::from_polar(1.0, phi / 2.0), C64::from_polar(1.0, -phi / 2.0)])
}

/// `diag(1, e^{iφ})`.
pub fn phase(phi: f64) -> ComplexMatrix {
    ComplexMatrix::diagonal(&[ONE, C64::from_polar(1.0, phi)])
}

pub fn cz() -> ComplexMatrix {
    ComplexMatrix::diagonal(&[ONE, ONE, ONE, -ONE])
}

/// Controlled-Hadamard, control on the high-order qubit.
pub fn ch() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    let hh = h();
    for i in 0..2 {
        for j in 0..2 {
            m[(2 + i, 2 + j)] = hh[(i, j)];
        }
    }
    m
}

/// `X^x Z^z` (Z applied first).
pub fn pauli_xz(x: bool, z: bool) -> ComplexMatrix {
    match (x, z) {
        (false, false) => id(),
        (true, false) => self::x(),
        (false, true) => self::z(),
        (true, true) => &self::x() * &self::z(),
    }
}

/// Tensor product of `X^{x_j} Z^{z_j}` over all qubits.
pub fn pauli_string(x: &[bool], z: &[bool]) -> ComplexMatrix {
    assert_eq!(x.len(), z.len());
    x.iter().zip(z).fold(ComplexMatrix::identity(1), |acc, (&xb, &zb)| {
        acc.kron(&pauli_xz(xb, zb))
    })
}

/// Embeds a single-qubit operator on `target` of an `n`-qubit register.
pub fn embed1(op: &ComplexMatrix, target: usize, n: usize) -> ComplexMatrix {
    assert!(target < n);
    let mut acc = ComplexMatrix::identity(1);
    for q in 0..n {
        acc = if q == target { acc.kron(op) } else { acc.kron(&id()) };
    }
    acc
}

/// `⊗ op` over `n` qubits.
pub fn tensor_power(op: &ComplexMatrix, n: usize) -> ComplexMatrix {
    (0..n).fold(ComplexMatrix::identity(1), |acc, _| acc.kron(op))
}

/// `|+_θ⟩ = (|0⟩ + e^{iθ}|1⟩)/√2`.
pub fn plus_theta(theta: f64) -> [C64; 2] {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::from_polar(FRAC_1_SQRT_2, theta)]
}

/// `|−_θ⟩ = (|0⟩ − e^{iθ}|1⟩)/√2`.
pub fn minus_theta(theta: f64) -> [C64; 2] {
    [C64::new(FRAC_1_SQRT_2, 0.0), -C64::from_polar(FRAC_1_SQRT_2, theta)]
}

/// Breidbart basis vectors: `cos(π/8)|0⟩ + sin(π/8)|1⟩` and its orthogonal complement.
pub fn breidbart_basis() -> [[C64; 2]; 2] {
    let (s, c) = (std::f64::consts::PI / 8.0).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(s, 0.0)],
        [C64::new(-s, 0.0), C64::new(c, 0.0)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paulis_square_to_identity() {
        for p in [x(), y(), z(), h()] {
            assert!((&p * &p).approx_eq(&id(), 1e-15));
        }
    }

    #[test]
    fn hzh_is_x() {
        let hzh = &(&h() * &z()) * &h();
        assert!(hzh.approx_eq(&x(), 1e-15));
    }

    #[test]
    fn rz_half_matches_phase_up_to_global_phase() {
        let phi = 0.37;
        let a = rz_half(-phi).scale(C64::from_polar(1.0, phi / 2.0));
        assert!(a.approx_eq(&phase(phi), 1e-15));
    }

    #[test]
    fn ch_acts_on_target_when_control_set() {
        let out = ch().apply(&[ZERO, ZERO, ONE, ZERO]).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!((out[2].re - s).abs() < 1e-15 && (out[3].re - s).abs() < 1e-15);
    }
}
