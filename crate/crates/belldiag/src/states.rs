//! Parametrizations, geometry, and channel operations for Bell diagonal
//! states and general two-qubit density matrices.
//!
//! A Bell diagonal state is stored canonically as a probability vector
//! `theta` over the four Bell states; the correlation vector `t` of the
//! Pauli representation is derived and cached. The two are related by a
//! fixed affine map (see [`theta_to_t`] / [`t_to_theta`]): `theta` lives on
//! the 3-simplex, `t` in the Bell tetrahedron of `R^3`.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance on `sum(theta) == 1`.
pub const THETA_SUM_TOL: f64 = 1e-12;
/// Tolerance below zero allowed for theta components (tetrahedron boundary
/// states produced by floating point must not be rejected).
pub const PHYS_TOL: f64 = 1e-9;

/// Rows of the sign matrix in `t = M theta`.
pub(crate) const T_FROM_THETA: [[f64; 4]; 3] = [
    [1.0, -1.0, 1.0, -1.0],
    [-1.0, 1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, -1.0],
];

/// Rows of the matrix in `theta = (M' t + 1) / 4`.
pub(crate) const THETA_FROM_T: [[f64; 3]; 4] = [
    [1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0],
    [-1.0, -1.0, -1.0],
];

/// Correlation vector of a Bell probability vector.
///
/// Rejects `theta` not summing to 1 within [`THETA_SUM_TOL`]-ish slack
/// (1e-9, so that clamped boundary states pass).
pub fn theta_to_t(theta: [f64; 4]) -> Result<[f64; 3]> {
    let sum: f64 = theta.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::ThetaNotNormalized(sum));
    }
    Ok(t_of_theta_unchecked(theta))
}

pub(crate) fn t_of_theta_unchecked(theta: [f64; 4]) -> [f64; 3] {
    let mut t = [0.0; 3];
    for (i, row) in T_FROM_THETA.iter().enumerate() {
        t[i] = row.iter().zip(theta.iter()).map(|(m, th)| m * th).sum();
    }
    t
}

/// Bell probability vector of a correlation vector. Unphysical `t` is
/// allowed; the result may then have negative components.
pub fn t_to_theta(t: [f64; 3]) -> [f64; 4] {
    let mut theta = [0.0; 4];
    for (i, row) in THETA_FROM_T.iter().enumerate() {
        let dot: f64 = row.iter().zip(t.iter()).map(|(m, ti)| m * ti).sum();
        theta[i] = 0.25 * (dot + 1.0);
    }
    theta
}

/// Whether `t` lies inside the Bell tetrahedron (within [`PHYS_TOL`]).
pub fn is_physical(t: [f64; 3]) -> bool {
    t_to_theta(t).iter().all(|&th| th >= -PHYS_TOL)
}

/// Whether a physical `t` lies inside the separable octahedron
/// `|t1| + |t2| + |t3| <= 1`. The boundary counts as separable.
pub fn is_separable(t: [f64; 3]) -> Result<bool> {
    if !is_physical(t) {
        return Err(Error::UnphysicalState);
    }
    Ok(t.iter().map(|ti| ti.abs()).sum::<f64>() <= 1.0 + 1e-12)
}

/// A Bell diagonal two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonalState {
    theta: [f64; 4],
    t: [f64; 3],
}

impl BellDiagonalState {
    /// Builds a state from Bell probabilities. Components may undershoot
    /// zero by at most [`PHYS_TOL`]; they are clamped into `[0, 1]`.
    pub fn from_theta(theta: [f64; 4]) -> Result<Self> {
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::ThetaNotNormalized(sum));
        }
        for &th in &theta {
            if !(-PHYS_TOL..=1.0 + PHYS_TOL).contains(&th) {
                return Err(Error::ThetaOutOfRange(th));
            }
        }
        let clamped = theta.map(|th| th.clamp(0.0, 1.0));
        Ok(Self {
            theta: clamped,
            t: t_of_theta_unchecked(clamped),
        })
    }

    /// Builds a state from a correlation vector inside the tetrahedron.
    pub fn from_t(t: [f64; 3]) -> Result<Self> {
        if !is_physical(t) {
            return Err(Error::UnphysicalState);
        }
        Self::from_theta(t_to_theta(t))
    }

    /// The completely mixed state `I/4`, center of the tetrahedron.
    pub fn completely_mixed() -> Self {
        Self::from_theta([0.25; 4]).expect("center is physical")
    }

    /// The pure Bell state `Psi_{i+1}` (index 0..4).
    pub fn bell_vertex(i: usize) -> Self {
        let mut theta = [0.0; 4];
        theta[i] = 1.0;
        Self::from_theta(theta).expect("vertex is physical")
    }

    pub fn theta(&self) -> [f64; 4] {
        self.theta
    }

    pub fn t(&self) -> [f64; 3] {
        self.t
    }

    /// `sum_i theta_i^2`, the purity-like quantity entering every risk
    /// formula. Satisfies `sum_i t_i^2 = 4 sum_i theta_i^2 - 1`.
    pub fn sum_theta_sq(&self) -> f64 {
        self.theta.iter().map(|th| th * th).sum()
    }

    /// Dense 4x4 density matrix `1/4 (I + sum_i t_i sigma_i x sigma_i)`.
    pub fn density_matrix(&self) -> DensityMatrix4 {
        let mut m = Matrix4::identity().map(|x: f64| Complex64::new(x, 0.0));
        for (i, &ti) in self.t.iter().enumerate() {
            let s = pauli(i + 1);
            m += s.kronecker(&s) * Complex64::new(ti, 0.0);
        }
        DensityMatrix4 {
            entries: m * Complex64::new(0.25, 0.0),
        }
    }
}

/// Single-qubit Pauli matrix; index 0 is the identity, 1..4 are x, y, z.
pub(crate) fn pauli(i: usize) -> Matrix2<Complex64> {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let j = Complex64::new(0.0, 1.0);
    match i {
        0 => Matrix2::new(l, o, o, l),
        1 => Matrix2::new(o, l, l, o),
        2 => Matrix2::new(o, -j, j, o),
        3 => Matrix2::new(l, o, o, -l),
        _ => panic!("pauli index out of range"),
    }
}

/// The four Bell state vectors in the computational basis, with the phase
/// convention `Psi_1 = (|00> + |11>)/sqrt(2)`, `Psi_2 = (|00> - |11>)/sqrt(2)`,
/// `Psi_3 = (|01> + |10>)/sqrt(2)`, `Psi_4 = (|01> - |10>)/sqrt(2)`.
pub fn bell_state_vector(i: usize) -> Vector4<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let o = Complex64::new(0.0, 0.0);
    match i {
        0 => Vector4::new(s, o, o, s),
        1 => Vector4::new(s, o, o, -s),
        2 => Vector4::new(o, s, s, o),
        3 => Vector4::new(o, s, -s, o),
        _ => panic!("bell state index out of range"),
    }
}

/// A general two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4 {
    entries: Matrix4<Complex64>,
}

impl DensityMatrix4 {
    /// Validates Hermiticity and unit trace (both within 1e-12).
    pub fn new(entries: Matrix4<Complex64>) -> Result<Self> {
        let diff = entries - entries.adjoint();
        if diff.iter().any(|z| z.norm() > 1e-12) {
            return Err(Error::InvalidDensityMatrix("not Hermitian"));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidDensityMatrix("trace is not 1"));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &Matrix4<Complex64> {
        &self.entries
    }

    /// `<Psi_i| rho |Psi_i>` for the Bell state with index `i` (0..4).
    pub fn bell_diagonal_element(&self, i: usize) -> f64 {
        let v = bell_state_vector(i);
        (v.adjoint() * self.entries * v)[(0, 0)].re
    }
}

/// A Pauli channel `rho -> sum_ij p_ij (s_i x s_j) rho (s_i x s_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliChannelSpec {
    p: [[f64; 4]; 4],
}

impl PauliChannelSpec {
    pub fn new(p: [[f64; 4]; 4]) -> Result<Self> {
        let mut sum = 0.0;
        for row in &p {
            for &pij in row {
                if pij < 0.0 {
                    return Err(Error::InvalidChannel("negative coefficient"));
                }
                sum += pij;
            }
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidChannel("coefficients do not sum to 1"));
        }
        Ok(Self { p })
    }

    pub fn coefficients(&self) -> &[[f64; 4]; 4] {
        &self.p
    }
}

/// Applies a Pauli channel to a density matrix.
pub fn apply_pauli_channel(rho: &DensityMatrix4, channel: &PauliChannelSpec) -> DensityMatrix4 {
    let mut out = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let pij = channel.p[i][j];
            if pij == 0.0 {
                continue;
            }
            let k = pauli(i).kronecker(&pauli(j));
            out += k * rho.entries * k * Complex64::new(pij, 0.0);
        }
    }
    DensityMatrix4 { entries: out }
}

/// Projects a density matrix onto the Bell diagonal set by averaging over
/// conjugation with `{I, sx x sx, sy x sy, sz x sz}` and reading off the
/// Bell-basis diagonal.
pub fn twirl(rho: &DensityMatrix4) -> Result<BellDiagonalState> {
    let mut avg = Matrix4::zeros();
    for i in 0..4 {
        let k = pauli(i).kronecker(&pauli(i));
        avg += k * rho.entries * k * Complex64::new(0.25, 0.0);
    }
    let twirled = DensityMatrix4 { entries: avg };
    let theta = std::array::from_fn(|i| twirled.bell_diagonal_element(i));
    BellDiagonalState::from_theta(theta)
}
