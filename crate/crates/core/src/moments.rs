//! Vacuum moments `φ(W(ξ_1) ⋯ W(ξ_l))`, by the pairing formula and by matrix products.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::combinatorics::{enumerate_pair_partitions, g_coefficient};
use crate::error::{Error, Result};
use crate::fock::{TruncatedFock, TruncatedVector};
use crate::hilbert::DeformationMatrix;
use crate::linalg::{conj_vec, sesquilinear, Mat, Vector};
use crate::scalar::Field;
use crate::wick::{LabeledTensor, WickCache};

/// Longest word evaluated by the pairing path.
pub const MAX_PAIRING_PATH: usize = 8;

/// A word of one-particle vectors, each in a single block.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSpec<S: Field> {
    word: LabeledTensor<S>,
}

impl<S: Field> MomentSpec<S> {
    pub fn new(vectors: Vec<Vector<S>>, block_of: &[usize]) -> Result<Self> {
        Ok(Self { word: LabeledTensor::new(vectors, block_of)? })
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn vectors(&self) -> &[Vector<S>] {
        self.word.legs()
    }

    pub fn labels(&self) -> &[usize] {
        self.word.labels()
    }

    /// Replayable JSON form.
    pub fn to_json(&self) -> String {
        let vectors: Vec<Vec<String>> = self
            .vectors()
            .iter()
            .map(|v| v.iter().map(|x| x.to_string()).collect())
            .collect();
        serde_json::json!({ "labels": self.labels(), "vectors": vectors }).to_string()
    }

    /// Short content hash used to key report rows.
    pub fn digest(&self) -> String {
        let d = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&d[..8])
    }
}

/// `⟨𝒥ξ, η⟩_U`, bilinear in `(ξ, η)`; equals `⟨ξ, η⟩_U` for real `ξ`.
pub fn contraction<S: Field>(xi: &Vector<S>, eta: &Vector<S>, gram_u: &Mat<S>) -> S {
    sesquilinear(&conj_vec(xi), gram_u, eta)
}

/// `Σ_{ν ∈ P_2(l)} g_ν Π_r ⟨𝒥ξ_{i(r)}, ξ_{j(r)}⟩_U`; zero for odd `l`, one for `l = 0`.
pub fn moment_pairings<S: Field>(spec: &MomentSpec<S>, q: &DeformationMatrix<S>, gram_u: &Mat<S>) -> Result<S> {
    let l = spec.len();
    if l > MAX_PAIRING_PATH {
        return Err(Error::SizeLimit(format!("pairing path takes l <= {MAX_PAIRING_PATH}, got {l}")));
    }
    if l % 2 == 1 {
        return Ok(S::zero());
    }
    let xs = spec.vectors();
    let mut total = S::zero();
    for nu in enumerate_pair_partitions(l)? {
        let mut term = g_coefficient(&nu, spec.labels(), q)?;
        for &(i, j) in nu.pairs() {
            if term.is_zero() {
                break;
            }
            term *= contraction(&xs[i], &xs[j], gram_u);
        }
        total += term;
    }
    Ok(total)
}

/// `⟨Ω, W(ξ_1) ⋯ W(ξ_l) Ω⟩_T`, applying the fields right to left. Needs `l ≤ 2 n_max`.
pub fn moment_matrix<S: Field>(spec: &MomentSpec<S>, fock: &TruncatedFock<S>, cache: &WickCache<S>) -> Result<S> {
    let l = spec.len();
    if l > 2 * fock.n_max() {
        return Err(Error::Cutoff(format!(
            "matrix path needs l <= 2 n_max = {}, got {l}",
            2 * fock.n_max()
        )));
    }
    let mut v = TruncatedVector::vacuum(fock);
    for k in (0..l).rev() {
        let leg = spec.word.without(&(0..l).filter(|&i| i != k).collect::<Vec<_>>());
        v = cache.get(&leg, fock)?.operator().apply(&v)?;
    }
    v.vacuum_coefficient()
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub spec_hash: String,
    pub l: usize,
    pub pairing: String,
    pub matrix: String,
    pub abs_diff: f64,
}

#[derive(Clone, Debug)]
pub struct MomentComparison<S: Field> {
    pub pairing: S,
    pub matrix: S,
    pub abs_diff: f64,
}

impl<S: Field> MomentComparison<S> {
    pub fn row(&self, spec: &MomentSpec<S>) -> MomentRow {
        MomentRow {
            spec_hash: spec.digest(),
            l: spec.len(),
            pairing: self.pairing.to_string(),
            matrix: self.matrix.to_string(),
            abs_diff: self.abs_diff,
        }
    }
}

/// Both paths; a disagreement beyond `tol` (relative to `1 + |pairing|`) is an error
/// carrying the spec for replay.
pub fn dual_path<S: Field>(
    spec: &MomentSpec<S>,
    fock: &TruncatedFock<S>,
    cache: &WickCache<S>,
    tol: f64,
) -> Result<MomentComparison<S>> {
    let pairing = moment_pairings(spec, fock.deformation(), fock.gram_u())?;
    let matrix = moment_matrix(spec, fock, cache)?;
    let abs_diff = (pairing.clone() - matrix.clone()).abs_f64();
    if abs_diff > tol * (1.0 + pairing.abs_f64()) {
        return Err(Error::Disagreement {
            pairing: pairing.to_string(),
            matrix: matrix.to_string(),
            spec: spec.to_json(),
        });
    }
    Ok(MomentComparison { pairing, matrix, abs_diff })
}
