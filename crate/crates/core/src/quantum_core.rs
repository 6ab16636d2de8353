//! Minimal complex linear algebra for small (d <= 8) Hilbert spaces.
//!
//! States, Hermitian observables with eigendecomposition, spin-direction
//! conversions, and unitary evolution. Everything is dense and tiny, so the
//! eigensolver is a cyclic Jacobi sweep with no external dependencies.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;

const HERMITICITY_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;

/// A pure state of the measured system: complex unit vector, 2 <= d <= 8.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    amps: Vec<Complex64>,
}

impl SystemState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let d = amps.len();
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidDimension { dim: d });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self { amps })
    }

    /// Normalizes the input vector, rejecting only near-zero vectors.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(Error::NotNormalized { deviation: 1.0 });
        }
        for a in &mut amps {
            *a /= norm;
        }
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// <self|other>
    pub fn inner(&self, other: &SystemState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Unit 3-vector on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    v: [f64; 3],
}

impl Direction {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDirection {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self { v: [x, y, z] })
    }

    /// Builds the unit vector (sin t cos p, sin t sin p, cos t).
    pub fn from_angles(polar: f64, azimuth: f64) -> Self {
        let (st, ct) = polar.sin_cos();
        let (sp, cp) = azimuth.sin_cos();
        Self {
            v: [st * cp, st * sp, ct],
        }
    }

    pub fn x(&self) -> f64 {
        self.v[0]
    }
    pub fn y(&self) -> f64 {
        self.v[1]
    }
    pub fn z(&self) -> f64 {
        self.v[2]
    }
    pub fn as_array(&self) -> [f64; 3] {
        self.v
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        dot3(self.v, other.v)
    }

    pub fn cross(&self, other: &Direction) -> [f64; 3] {
        cross3(self.v, other.v)
    }
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// A Hermitian observable with its eigendecomposition.
///
/// Eigenvalues are ascending; eigenvector k is column k of `eigenvectors`,
/// with the first nonzero component made real nonnegative so outputs are
/// deterministic.
#[derive(Debug, Clone)]
pub struct ObservableOp {
    dim: usize,
    matrix: Vec<Complex64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Complex64>,
}

impl ObservableOp {
    /// Builds the observable from a row-major d*d matrix, validating
    /// Hermiticity and running the eigendecomposition.
    pub fn new(dim: usize, matrix: Vec<Complex64>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidDimension { dim });
        }
        if matrix.len() != dim * dim {
            return Err(Error::InvalidDimension { dim: matrix.len() });
        }
        let scale = matrix.iter().map(|m| m.norm()).fold(1.0_f64, f64::max);
        let mut dev = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                dev = dev.max((matrix[i * dim + j] - matrix[j * dim + i].conj()).norm());
            }
        }
        if dev > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let (eigenvalues, eigenvectors) = jacobi_eigh(dim, &matrix);
        Ok(Self {
            dim,
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major matrix elements.
    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Row-major unitary whose column k is the eigenvector for eigenvalue k.
    pub fn eigenvectors(&self) -> &[Complex64] {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| self.eigenvectors[i * self.dim + k])
            .collect()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|a| a.abs())
            .fold(0.0, f64::max)
    }

    /// A|psi>
    pub fn apply(&self, state: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.matrix[i * d + j] * state[j]).sum())
            .collect()
    }

    /// <bra|A|ket>
    pub fn matrix_element(&self, bra: &SystemState, ket: &SystemState) -> Complex64 {
        let applied = self.apply(ket.amplitudes());
        bra.amplitudes()
            .iter()
            .zip(&applied)
            .map(|(b, a)| b.conj() * a)
            .sum()
    }

    /// <bra|A^2|ket>
    pub fn matrix_element_sq(&self, bra: &SystemState, ket: &SystemState) -> Complex64 {
        let once = self.apply(ket.amplitudes());
        let twice = self.apply(&once);
        bra.amplitudes()
            .iter()
            .zip(&twice)
            .map(|(b, a)| b.conj() * a)
            .sum()
    }
}

/// Eigendecomposition of a Hermitian observable: ascending eigenvalues and
/// a column-orthonormal eigenvector matrix with A v_k = a_k v_k.
pub fn eigh(obs: &ObservableOp) -> (&[f64], &[Complex64]) {
    (obs.eigenvalues(), obs.eigenvectors())
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Each rotation annihilates one off-diagonal element using the complex
/// Givens rotation U_pp = c, U_pq = -s e^{i phi}, U_qp = s e^{-i phi},
/// U_qq = c with a_pq = |a_pq| e^{i phi} and tan 2theta = 2|a_pq|/(a_pp - a_qq).
fn jacobi_eigh(d: usize, matrix: &[Complex64]) -> (Vec<f64>, Vec<Complex64>) {
    let mut a = matrix.to_vec();
    let mut v = vec![Complex64::ZERO; d * d];
    for i in 0..d {
        v[i * d + i] = Complex64::ONE;
    }
    let scale = matrix.iter().map(|m| m.norm()).fold(1e-300_f64, f64::max);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[p * d + q].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                let abs = apq.norm();
                if abs <= tol {
                    continue;
                }
                let phase = apq / abs;
                let app = a[p * d + p].re;
                let aqq = a[q * d + q].re;
                let theta = 0.5 * (2.0 * abs).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                let se = s * phase;

                // columns: A <- A U, V <- V U
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = akp * c + akq * se.conj();
                    a[k * d + q] = akq * c - akp * se;

                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = vkp * c + vkq * se.conj();
                    v[k * d + q] = vkq * c - vkp * se;
                }
                // rows: A <- U† A
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = apk * c + aqk * se;
                    a[q * d + k] = aqk * c - apk * se.conj();
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let eigs: Vec<f64> = (0..d).map(|i| a[i * d + i].re).collect();
    order.sort_by(|&i, &j| eigs[i].partial_cmp(&eigs[j]).unwrap());

    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenvectors = vec![Complex64::ZERO; d * d];
    for (col, &k) in order.iter().enumerate() {
        eigenvalues.push(eigs[k]);
        let mut column: Vec<Complex64> = (0..d).map(|i| v[i * d + k]).collect();
        fix_phase(&mut column);
        for i in 0..d {
            eigenvectors[i * d + col] = column[i];
        }
    }
    (eigenvalues, eigenvectors)
}

/// Rotates a vector's global phase so its first nonzero component is real
/// nonnegative.
fn fix_phase(column: &mut [Complex64]) {
    let lead = column.iter().find(|c| c.norm() > 1e-12);
    if let Some(&lead) = lead {
        let phase = lead / lead.norm();
        for c in column.iter_mut() {
            *c *= phase.conj();
        }
    }
}

/// n . sigma for a unit direction n.
pub fn spin_observable(n: &Direction) -> ObservableOp {
    let (x, y, z) = (n.x(), n.y(), n.z());
    let m = vec![
        Complex64::new(z, 0.0),
        Complex64::new(x, -y),
        Complex64::new(x, y),
        Complex64::new(-z, 0.0),
    ];
    ObservableOp::new(2, m).expect("n.sigma is Hermitian by construction")
}

/// Spin-up eigenstate of n . sigma: (cos(t/2), e^{i phi} sin(t/2)) with the
/// leading nonzero amplitude real nonnegative.
pub fn bloch_to_spinor(n: &Direction) -> SystemState {
    let polar = n.z().clamp(-1.0, 1.0).acos();
    let azimuth = n.y().atan2(n.x());
    let half = polar / 2.0;
    let mut amps = vec![
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), azimuth),
    ];
    fix_phase(&mut amps);
    SystemState::normalized(amps).expect("spinor construction is normalized")
}

/// exp(-i H tau) |s> via the eigendecomposition of H.
pub fn evolve_state(s: &SystemState, hamiltonian: &ObservableOp, duration: f64) -> Result<SystemState> {
    let d = s.dim();
    if d != hamiltonian.dim() {
        return Err(Error::DimensionMismatch {
            left: d,
            right: hamiltonian.dim(),
        });
    }
    let vecs = hamiltonian.eigenvectors();
    let vals = hamiltonian.eigenvalues();
    // coefficients in the eigenbasis
    let coeffs: Vec<Complex64> = (0..d)
        .map(|k| {
            (0..d)
                .map(|i| vecs[i * d + k].conj() * s.amplitudes()[i])
                .sum::<Complex64>()
        })
        .collect();
    let amps: Vec<Complex64> = (0..d)
        .map(|i| {
            (0..d)
                .map(|k| {
                    vecs[i * d + k] * coeffs[k] * Complex64::from_polar(1.0, -vals[k] * duration)
                })
                .sum()
        })
        .collect();
    SystemState::new(amps)
}
