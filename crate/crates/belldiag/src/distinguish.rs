//! Minimum-error discrimination of two equiprobable Bell diagonal states:
//! the Helstrom bound, the achieving projective POVM on the Bell basis, and
//! the LOCC-optimality criterion.

use serde::Serialize;

use crate::states::BellDiagonalState;

const SIGN_TOL: f64 = 1e-12;

/// Outcome of [`optimal_povm`]. Indices are 1-based Bell labels; ties
/// (rho_i = phi_i) land in the negative set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminationResult {
    pub success_bound: f64,
    pub positive_indices: Vec<usize>,
    pub negative_indices: Vec<usize>,
    pub locc_optimal: bool,
}

/// Helstrom success probability for equiprobable states:
/// `1/2 (1 + 1/2 sum_i |rho_i - phi_i|)`.
pub fn helstrom_bound(rho: &BellDiagonalState, phi: &BellDiagonalState) -> f64 {
    let trace_dist: f64 = rho
        .theta()
        .iter()
        .zip(phi.theta().iter())
        .map(|(a, b)| (a - b).abs())
        .sum();
    0.5 * (1.0 + 0.5 * trace_dist)
}

fn sign_partition(rho: &BellDiagonalState, phi: &BellDiagonalState) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..4 {
        if rho.theta()[i] - phi.theta()[i] > SIGN_TOL {
            pos.push(i + 1);
        } else {
            neg.push(i + 1);
        }
    }
    (pos, neg)
}

/// The projective two-outcome POVM onto the positive / non-positive part of
/// the Helstrom matrix, in the Bell basis.
pub fn optimal_povm(rho: &BellDiagonalState, phi: &BellDiagonalState) -> DiscriminationResult {
    let (positive_indices, negative_indices) = sign_partition(rho, phi);
    // Born rule: guess rho on the positive projector, phi on the rest
    let p_pos_rho: f64 = positive_indices.iter().map(|&i| rho.theta()[i - 1]).sum();
    let p_neg_phi: f64 = negative_indices.iter().map(|&i| phi.theta()[i - 1]).sum();
    let success = 0.5 * (p_pos_rho + p_neg_phi);
    let bound = helstrom_bound(rho, phi);
    debug_assert!(
        (success - bound).abs() < 1e-12,
        "sign projector must saturate the Helstrom bound: {success} vs {bound}"
    );
    DiscriminationResult {
        success_bound: success,
        positive_indices,
        negative_indices,
        locc_optimal: is_locc_optimal(rho, phi),
    }
}

/// True iff an LOCC protocol reaches the Helstrom bound: both strict sign
/// counts of rho_i - phi_i must be at most two.
pub fn is_locc_optimal(rho: &BellDiagonalState, phi: &BellDiagonalState) -> bool {
    let mut strictly_pos = 0;
    let mut strictly_neg = 0;
    for i in 0..4 {
        let d = rho.theta()[i] - phi.theta()[i];
        if d > SIGN_TOL {
            strictly_pos += 1;
        } else if d < -SIGN_TOL {
            strictly_neg += 1;
        }
    }
    strictly_pos <= 2 && strictly_neg <= 2
}
