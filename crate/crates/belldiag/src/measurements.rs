//! The six measurement strategies as projective bases, Born-rule outcome
//! probabilities, and seeded outcome sampling.
//!
//! Every rank-1 projective outcome on a Bell diagonal state has probability
//! `(1 + a . t) / 4`, where `a_i = <v| sigma_i x sigma_i |v>`. That 3-vector
//! is precomputed per basis column and drives both the likelihood terms and
//! the least-squares direct inversion; [`basis_probs`] itself goes through
//! the dense density matrix so the two routes stay independent.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::states::{bell_state_vector, pauli, BellDiagonalState, T_FROM_THETA};
use crate::{Error, Result};

/// Measurement strategy identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Strategy {
    Bell,
    ParityOrdered,
    ParityRandom,
    Mub,
    Pauli,
    Haar,
    HaarSeparable,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bell => "bell",
            Strategy::ParityOrdered => "parity_ordered",
            Strategy::ParityRandom => "parity_random",
            Strategy::Mub => "mub",
            Strategy::Pauli => "pauli",
            Strategy::Haar => "haar",
            Strategy::HaarSeparable => "haar_separable",
        }
    }

    /// Fixed-basis strategies must split `N` equally over their bases.
    pub fn divisor(self) -> Option<u64> {
        match self {
            Strategy::ParityOrdered => Some(3),
            Strategy::Mub => Some(5),
            Strategy::Pauli => Some(9),
            _ => None,
        }
    }
}

/// Pauli axis of a parity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityOutcome {
    Even,
    Odd,
}

/// An orthonormal two-qubit measurement basis (columns of a unitary).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveBasis {
    label: String,
    vectors: Matrix4<Complex64>,
    bloch: [[f64; 3]; 4],
}

impl ProjectiveBasis {
    /// Validates pairwise orthonormality within 1e-10.
    pub fn new(label: impl Into<String>, vectors: Matrix4<Complex64>) -> Result<Self> {
        let gram = vectors.adjoint() * vectors;
        let id = Matrix4::identity().map(|x: f64| Complex64::new(x, 0.0));
        if (gram - id).iter().any(|z| z.norm() > 1e-10) {
            return Err(Error::NotOrthonormal);
        }
        let mut bloch = [[0.0; 3]; 4];
        for k in 0..4 {
            let v = vectors.column(k);
            for (i, b) in bloch[k].iter_mut().enumerate() {
                let s = pauli(i + 1);
                let op = s.kronecker(&s);
                *b = (v.adjoint() * op * v)[(0, 0)].re;
            }
        }
        Ok(Self {
            label: label.into(),
            vectors,
            bloch,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vectors(&self) -> &Matrix4<Complex64> {
        &self.vectors
    }

    /// `a_i = <v_k| sigma_i x sigma_i |v_k>` for outcome `k`.
    pub fn outcome_bloch(&self, k: usize) -> [f64; 3] {
        self.bloch[k]
    }

    /// Outcome probabilities expressed in theta coordinates:
    /// `p_k = beta_k . theta` on the simplex.
    pub fn outcome_beta(&self, k: usize) -> [f64; 4] {
        beta_from_bloch(self.bloch[k])
    }
}

pub(crate) fn beta_from_bloch(a: [f64; 3]) -> [f64; 4] {
    std::array::from_fn(|k| {
        let dot: f64 = (0..3).map(|j| a[j] * T_FROM_THETA[j][k]).sum();
        0.25 * (1.0 + dot)
    })
}

/// The Bell basis `{Psi_1, Psi_2, Psi_3, Psi_4}`.
pub fn bell_basis() -> ProjectiveBasis {
    let mut m = Matrix4::zeros();
    for k in 0..4 {
        m.set_column(k, &bell_state_vector(k));
    }
    ProjectiveBasis::new("bell", m).expect("Bell basis is orthonormal")
}

fn qubit_eigvec(axis: Axis, plus: bool) -> nalgebra::Vector2<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let j = Complex64::new(0.0, 1.0);
    match (axis, plus) {
        (Axis::X, true) => nalgebra::Vector2::new(s, s),
        (Axis::X, false) => nalgebra::Vector2::new(s, -s),
        (Axis::Y, true) => nalgebra::Vector2::new(s, s * j),
        (Axis::Y, false) => nalgebra::Vector2::new(s, -s * j),
        (Axis::Z, true) => nalgebra::Vector2::new(l, o),
        (Axis::Z, false) => nalgebra::Vector2::new(o, l),
    }
}

/// Product basis of `sigma_i x sigma_j` eigenvectors, outcome order
/// `(+,+), (+,-), (-,+), (-,-)`.
pub fn pauli_product_basis(a: Axis, b: Axis) -> ProjectiveBasis {
    let mut m = Matrix4::zeros();
    for (k, (sa, sb)) in [(true, true), (true, false), (false, true), (false, false)]
        .into_iter()
        .enumerate()
    {
        let v = qubit_eigvec(a, sa).kronecker(&qubit_eigvec(b, sb));
        m.set_column(k, &v);
    }
    let names = ["x", "y", "z"];
    ProjectiveBasis::new(
        format!("pauli_{}{}", names[a.index()], names[b.index()]),
        m,
    )
    .expect("product basis is orthonormal")
}

/// The nine Pauli product bases, row-major over `(x, y, z) x (x, y, z)`.
pub fn pauli_bases() -> Vec<ProjectiveBasis> {
    let mut out = Vec::with_capacity(9);
    for a in Axis::ALL {
        for b in Axis::ALL {
            out.push(pauli_product_basis(a, b));
        }
    }
    out
}

fn two_qubit_pauli(i: usize, j: usize) -> Matrix4<Complex64> {
    pauli(i).kronecker(&pauli(j))
}

/// Common eigenbasis of a commuting pair of two-qubit Pauli operators,
/// built from the rank-1 projectors `(I + s1 A)(I + s2 B)/4` with outcome
/// order `(+,+), (+,-), (-,+), (-,-)` and a real-positive phase convention.
fn joint_eigenbasis(label: &str, a: Matrix4<Complex64>, b: Matrix4<Complex64>) -> ProjectiveBasis {
    let id = Matrix4::identity().map(|x: f64| Complex64::new(x, 0.0));
    let mut m = Matrix4::zeros();
    for (k, (s1, s2)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .into_iter()
        .enumerate()
    {
        let proj = (id + a * Complex64::new(s1, 0.0)) * (id + b * Complex64::new(s2, 0.0))
            * Complex64::new(0.25, 0.0);
        // any nonzero column of the rank-1 projector spans the eigenvector
        let col = (0..4)
            .map(|c| proj.column(c).into_owned())
            .max_by(|u, v| u.norm().partial_cmp(&v.norm()).unwrap())
            .unwrap();
        let mut v = col / Complex64::new(col.norm(), 0.0);
        let lead = v.iter().find(|z| z.norm() > 1e-9).copied().unwrap();
        v *= lead.conj() / lead.norm();
        m.set_column(k, &v);
    }
    ProjectiveBasis::new(label, m).expect("joint eigenbasis is orthonormal")
}

/// Five mutually unbiased bases of dimension four: the three Pauli product
/// bases along z, x, y and the joint eigenbases of the commuting triples
/// `{XY, YZ, ZX}` and `{YX, ZY, XZ}` (three separable, two maximally
/// entangled).
pub fn mub_bases() -> Vec<ProjectiveBasis> {
    vec![
        pauli_product_basis(Axis::Z, Axis::Z),
        pauli_product_basis(Axis::X, Axis::X),
        pauli_product_basis(Axis::Y, Axis::Y),
        joint_eigenbasis("mub_xy_yz", two_qubit_pauli(1, 2), two_qubit_pauli(2, 3)),
        joint_eigenbasis("mub_yx_zy", two_qubit_pauli(2, 1), two_qubit_pauli(3, 2)),
    ]
}

fn ginibre<const D: usize>(rng: &mut impl Rng) -> nalgebra::SMatrix<Complex64, D, D> {
    nalgebra::SMatrix::from_fn(|_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Modified Gram-Schmidt with positive-real normalization coefficients;
/// applied to a Ginibre matrix this yields an exactly Haar Q factor.
fn gram_schmidt<const D: usize>(
    m: nalgebra::SMatrix<Complex64, D, D>,
) -> nalgebra::SMatrix<Complex64, D, D> {
    let mut q = m;
    for k in 0..D {
        for j in 0..k {
            let prev = q.column(j).into_owned();
            let coef = (prev.adjoint() * q.column(k))[(0, 0)];
            let col = q.column(k) - prev * coef;
            q.set_column(k, &col);
        }
        let norm = q.column(k).norm();
        let col = q.column(k) / Complex64::new(norm, 0.0);
        q.set_column(k, &col);
    }
    q
}

/// Samples a Haar-random basis: `U(4)` columns, or `U(2) x U(2)` columns in
/// the separable case.
pub fn haar_basis(rng: &mut impl Rng, separable: bool) -> ProjectiveBasis {
    let (label, m) = if separable {
        let u: Matrix2<Complex64> = gram_schmidt(ginibre::<2>(rng));
        let v: Matrix2<Complex64> = gram_schmidt(ginibre::<2>(rng));
        ("haar_separable", u.kronecker(&v))
    } else {
        ("haar", gram_schmidt(ginibre::<4>(rng)))
    };
    ProjectiveBasis::new(label, m).expect("Haar sample is orthonormal")
}

/// Born-rule outcome probabilities `p_k = <v_k| rho |v_k>` computed on the
/// dense density matrix.
pub fn basis_probs(state: &BellDiagonalState, basis: &ProjectiveBasis) -> [f64; 4] {
    let rho = state.density_matrix();
    std::array::from_fn(|k| {
        let v: Vector4<Complex64> = basis.vectors.column(k).into_owned();
        (v.adjoint() * rho.entries() * v)[(0, 0)].re
    })
}

/// Even/odd probabilities of a Pauli parity check along `axis`:
/// `((1 + t_i)/2, (1 - t_i)/2)`.
pub fn parity_check_probs(state: &BellDiagonalState, axis: Axis) -> (f64, f64) {
    let t = state.t()[axis.index()];
    (0.5 * (1.0 + t), 0.5 * (1.0 - t))
}

/// A declarative measurement plan: strategy plus shot count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub strategy: Strategy,
    pub shots: u64,
}

impl MeasurementPlan {
    pub fn new(strategy: Strategy, shots: u64) -> Self {
        Self { strategy, shots }
    }

    /// Checks the equal-split divisibility constraint of fixed-basis plans.
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.strategy.divisor() {
            if self.shots % d != 0 {
                return Err(Error::Divisibility {
                    strategy: self.strategy.name(),
                    shots: self.shots,
                    divisor: d,
                });
            }
        }
        Ok(())
    }
}

/// Counts per outcome of one measured basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisBlock {
    pub basis: ProjectiveBasis,
    pub counts: [u64; 4],
}

impl BasisBlock {
    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Measurement data, aggregated for fixed-basis plans and per-shot for
/// random-basis plans.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordData {
    /// Aggregated counts per basis (bell, mub, pauli).
    FixedBases(Vec<BasisBlock>),
    /// Even counts per axis for `per_axis` checks in each of x, y, z.
    OrderedParity { even: [u64; 3], per_axis: u64 },
    /// Per-shot axis and parity outcome.
    RandomParity(Vec<(Axis, ParityOutcome)>),
    /// Per-shot basis and observed outcome index.
    RandomBases(Vec<(ProjectiveBasis, usize)>),
}

/// Outcomes of executing a [`MeasurementPlan`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    strategy: Strategy,
    total_shots: u64,
    data: RecordData,
}

/// One multiplicative likelihood term: outcome probability `beta . theta`
/// observed `count` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodTerm {
    pub beta: [f64; 4],
    pub count: f64,
}

impl LikelihoodTerm {
    /// Terms whose probability is constant on the simplex carry no
    /// information (they only shift the log-likelihood by a constant).
    pub fn is_uninformative(&self) -> bool {
        let lo = self.beta.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.beta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo < 1e-14
    }
}

impl OutcomeRecord {
    pub fn new(strategy: Strategy, total_shots: u64, data: RecordData) -> Self {
        Self {
            strategy,
            total_shots,
            data,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn data(&self) -> &RecordData {
        &self.data
    }

    /// Even and odd counts per axis, for parity strategies.
    pub fn parity_counts(&self) -> Option<([u64; 3], [u64; 3])> {
        match &self.data {
            RecordData::OrderedParity { even, per_axis } => {
                let odd = std::array::from_fn(|i| per_axis - even[i]);
                Some((*even, odd))
            }
            RecordData::RandomParity(shots) => {
                let mut even = [0u64; 3];
                let mut odd = [0u64; 3];
                for (axis, parity) in shots {
                    match parity {
                        ParityOutcome::Even => even[axis.index()] += 1,
                        ParityOutcome::Odd => odd[axis.index()] += 1,
                    }
                }
                Some((even, odd))
            }
            _ => None,
        }
    }

    /// Multiplicative likelihood terms `prod_k (beta_k . theta)^{count_k}`
    /// (constant binomial/selection factors dropped).
    pub fn likelihood_terms(&self) -> Vec<LikelihoodTerm> {
        let mut terms = Vec::new();
        match &self.data {
            RecordData::FixedBases(blocks) => {
                for block in blocks {
                    for (k, &c) in block.counts.iter().enumerate() {
                        if c > 0 {
                            terms.push(LikelihoodTerm {
                                beta: block.basis.outcome_beta(k),
                                count: c as f64,
                            });
                        }
                    }
                }
            }
            RecordData::OrderedParity { .. } | RecordData::RandomParity(_) => {
                let (even, odd) = self.parity_counts().unwrap();
                for i in 0..3 {
                    // p_even = (1 + t_i)/2 = beta . theta with beta_k in {0, 1}
                    let beta_even: [f64; 4] =
                        std::array::from_fn(|k| 0.5 * (1.0 + T_FROM_THETA[i][k]));
                    let beta_odd: [f64; 4] =
                        std::array::from_fn(|k| 0.5 * (1.0 - T_FROM_THETA[i][k]));
                    if even[i] > 0 {
                        terms.push(LikelihoodTerm {
                            beta: beta_even,
                            count: even[i] as f64,
                        });
                    }
                    if odd[i] > 0 {
                        terms.push(LikelihoodTerm {
                            beta: beta_odd,
                            count: odd[i] as f64,
                        });
                    }
                }
            }
            RecordData::RandomBases(shots) => {
                for (basis, outcome) in shots {
                    terms.push(LikelihoodTerm {
                        beta: basis.outcome_beta(*outcome),
                        count: 1.0,
                    });
                }
            }
        }
        terms
    }
}

fn sample_categorical(rng: &mut impl Rng, probs: &[f64; 4]) -> usize {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &p) in probs.iter().enumerate() {
        u -= p.max(0.0);
        if u <= 0.0 {
            return k;
        }
    }
    3
}

/// Simulates a measurement plan on a state. Deterministic given the rng
/// state; callers derive independent sub-seeds for parallel trials.
pub fn sample_outcomes(
    state: &BellDiagonalState,
    plan: &MeasurementPlan,
    rng: &mut impl Rng,
) -> Result<OutcomeRecord> {
    plan.validate()?;
    let n = plan.shots;
    let data = match plan.strategy {
        Strategy::Bell => {
            let basis = bell_basis();
            let probs = basis_probs(state, &basis);
            let mut counts = [0u64; 4];
            for _ in 0..n {
                counts[sample_categorical(rng, &probs)] += 1;
            }
            RecordData::FixedBases(vec![BasisBlock { basis, counts }])
        }
        Strategy::ParityOrdered => {
            let per_axis = n / 3;
            let mut even = [0u64; 3];
            for (i, axis) in Axis::ALL.into_iter().enumerate() {
                let (p_even, _) = parity_check_probs(state, axis);
                for _ in 0..per_axis {
                    if rng.random::<f64>() < p_even {
                        even[i] += 1;
                    }
                }
            }
            RecordData::OrderedParity { even, per_axis }
        }
        Strategy::ParityRandom => {
            let mut shots = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let axis = Axis::ALL[rng.random_range(0..3)];
                let (p_even, _) = parity_check_probs(state, axis);
                let parity = if rng.random::<f64>() < p_even {
                    ParityOutcome::Even
                } else {
                    ParityOutcome::Odd
                };
                shots.push((axis, parity));
            }
            RecordData::RandomParity(shots)
        }
        Strategy::Mub | Strategy::Pauli => {
            let bases = if plan.strategy == Strategy::Mub {
                mub_bases()
            } else {
                pauli_bases()
            };
            let per_basis = n / bases.len() as u64;
            let mut blocks = Vec::with_capacity(bases.len());
            for basis in bases {
                let probs = basis_probs(state, &basis);
                let mut counts = [0u64; 4];
                for _ in 0..per_basis {
                    counts[sample_categorical(rng, &probs)] += 1;
                }
                blocks.push(BasisBlock { basis, counts });
            }
            RecordData::FixedBases(blocks)
        }
        Strategy::Haar | Strategy::HaarSeparable => {
            let separable = plan.strategy == Strategy::HaarSeparable;
            let mut shots = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let basis = haar_basis(rng, separable);
                let probs = basis_probs(state, &basis);
                let outcome = sample_categorical(rng, &probs);
                shots.push((basis, outcome));
            }
            RecordData::RandomBases(shots)
        }
    };
    Ok(OutcomeRecord::new(plan.strategy, n, data))
}
