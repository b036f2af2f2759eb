//! The finite-dimensional one-particle space: block decomposition, the orthogonal
//! group `U_t = A^{it}`, the deformed inner product `⟨·,·⟩_U`, and the deformation
//! matrix coupling the blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sesquilinear, Mat, Vector};
use crate::scalar::{Field, C64};

pub const MAX_DIM: usize = 8;

/// Symmetric `Q = (q_ij)` with every `|q_ij| < 1`, indexed by block labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationMatrix<S: Field> {
    entries: Mat<S>,
}

impl<S: Field> DeformationMatrix<S> {
    pub fn from_matrix(entries: Mat<S>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::Deformation(format!(
                "must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let sym_tol = if S::EXACT { 0.0 } else { 1e-14 };
        for i in 0..n {
            for j in 0..n {
                let q = &entries[(i, j)];
                if (q.clone() - entries[(j, i)].clone()).abs_f64() > sym_tol {
                    return Err(Error::Deformation(format!("not symmetric at ({i}, {j})")));
                }
                if !q.is_real() {
                    return Err(Error::Deformation(format!("entry ({i}, {j}) is not real")));
                }
                if !(q.abs_f64() < 1.0) {
                    return Err(Error::Deformation(format!(
                        "max|q_ij| < 1 violated: |q_{i}{j}| = {}",
                        q.abs_f64()
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Deformation("rows must all have length equal to the row count".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Deformation("entries must be finite".into()));
        }
        Self::from_matrix(Mat::from_fn(n, n, |i, j| S::from_f64(rows[i][j])))
    }

    pub fn uniform(n_blocks: usize, q: S) -> Result<Self> {
        Self::from_matrix(Mat::from_element(n_blocks, n_blocks, q))
    }

    pub fn n_blocks(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> &S {
        &self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|x| x.abs_f64()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: S) -> Result<Self> {
        Self::from_matrix(self.entries.map(|x| x * c.clone()))
    }

    /// Write `Q = q·Q̃` for a scalar `max|q_ij| < q < 1`.
    pub fn split(&self, q: S) -> Result<UniformSplit<S>> {
        let qf = q.re_f64();
        if !q.is_real() || !(qf < 1.0) || !(self.max_abs() < qf) {
            return Err(Error::Deformation(format!(
                "split needs max|q_ij| = {} < q = {qf} < 1",
                self.max_abs()
            )));
        }
        let tilde = self.entries.map(|x| x / q.clone());
        Ok(UniformSplit { q, tilde: Self::from_matrix(tilde)? })
    }
}

/// `Q = q·Q̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformSplit<S: Field> {
    pub q: S,
    pub tilde: DeformationMatrix<S>,
}

/// A 2-dimensional rotation block spanned by two distinguished real basis vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSpec {
    pub basis: [usize; 2],
    pub lambda: f64,
}

/// Serializable description of `(H_R, U_t)` with its block structure and `Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    /// Block label of each distinguished basis vector.
    pub blocks: Vec<usize>,
    #[serde(default)]
    pub rotations: Vec<RotationSpec>,
    /// Deformation matrix rows, indexed by block labels.
    pub q: Vec<Vec<f64>>,
}

impl SpaceConfig {
    /// All violations at once, for reporting.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim == 0 || self.dim > MAX_DIM {
            out.push(format!("dim = {} must lie in 1..={MAX_DIM}", self.dim));
        }
        if self.blocks.len() != self.dim {
            out.push(format!("blocks has {} labels for dim = {}", self.blocks.len(), self.dim));
        }
        let n_blocks = self.q.len();
        for (a, &b) in self.blocks.iter().enumerate() {
            if b >= n_blocks {
                out.push(format!("basis vector {a} has block label {b} but Q has {n_blocks} rows"));
            }
        }
        if let Err(e) = DeformationMatrix::<C64>::from_real_rows(&self.q) {
            out.push(e.to_string());
        }
        let mut used = vec![false; self.dim];
        for (r, rot) in self.rotations.iter().enumerate() {
            let [a, b] = rot.basis;
            if a >= self.dim || b >= self.dim || a == b {
                out.push(format!("rotation {r}: basis {:?} invalid for dim = {}", rot.basis, self.dim));
                continue;
            }
            for x in [a, b] {
                if used[x] {
                    out.push(format!("rotation {r}: basis vector {x} already used"));
                }
                used[x] = true;
            }
            if self.blocks.get(a) != self.blocks.get(b) {
                out.push(format!("rotation {r}: basis vectors {a} and {b} lie in different blocks"));
            }
            if !(rot.lambda.is_finite() && rot.lambda >= 1.0) {
                out.push(format!("rotation {r}: lambda = {} must be finite and >= 1", rot.lambda));
            }
        }
        out
    }
}

/// Built one-particle space. `A` is the analytic generator, `U_t = A^{it}`, and
/// `⟨ξ,η⟩_U = ξ* G_U η` with `G_U = 2A(1+A)^{-1}`.
#[derive(Clone, Debug)]
pub struct HilbertSetup {
    config: SpaceConfig,
    deformation: DeformationMatrix<C64>,
    /// Eigenpairs of `A`: eigenvalue and unit eigenvector.
    spectrum: Vec<(f64, Vector<C64>)>,
    a: Mat<C64>,
    gram_u: Mat<C64>,
}

pub fn build_space(config: &SpaceConfig) -> Result<HilbertSetup> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(Error::Space(violations.join("; ")));
    }
    let deformation = DeformationMatrix::from_real_rows(&config.q)?;
    let d = config.dim;
    let mut spectrum = Vec::with_capacity(d);
    let mut in_rotation = vec![false; d];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for rot in &config.rotations {
        let [a, b] = rot.basis;
        in_rotation[a] = true;
        in_rotation[b] = true;
        let mut plus = Vector::<C64>::zeros(d);
        plus[a] = C64::new(s, 0.0);
        plus[b] = C64::new(0.0, -s);
        let minus = plus.map(|x| x.conj());
        spectrum.push((rot.lambda, plus));
        spectrum.push((1.0 / rot.lambda, minus));
    }
    for x in (0..d).filter(|&x| !in_rotation[x]) {
        let mut e = Vector::<C64>::zeros(d);
        e[x] = C64::new(1.0, 0.0);
        spectrum.push((1.0, e));
    }
    let a = spectral_sum(d, &spectrum, |lam| C64::new(lam, 0.0));
    let gram_u = spectral_sum(d, &spectrum, |lam| C64::new(2.0 * lam / (1.0 + lam), 0.0));
    Ok(HilbertSetup { config: config.clone(), deformation, spectrum, a, gram_u })
}

fn spectral_sum(d: usize, spectrum: &[(f64, Vector<C64>)], f: impl Fn(f64) -> C64) -> Mat<C64> {
    let mut m = Mat::<C64>::zeros(d, d);
    for (lam, v) in spectrum {
        m += v * v.adjoint() * f(*lam);
    }
    m
}

impl HilbertSetup {
    /// Trivial `U_t` (`A = 1`), so `⟨·,·⟩_U` is the standard inner product.
    pub fn tracial(blocks: Vec<usize>, q: Vec<Vec<f64>>) -> Result<Self> {
        build_space(&SpaceConfig { dim: blocks.len(), blocks, rotations: Vec::new(), q })
    }

    pub fn config(&self) -> &SpaceConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn block_of(&self) -> &[usize] {
        &self.config.blocks
    }

    pub fn deformation(&self) -> &DeformationMatrix<C64> {
        &self.deformation
    }

    pub fn a(&self) -> &Mat<C64> {
        &self.a
    }

    pub fn gram_u(&self) -> &Mat<C64> {
        &self.gram_u
    }

    pub fn is_tracial(&self) -> bool {
        self.config.rotations.iter().all(|r| r.lambda == 1.0)
    }

    /// `A^z` by spectral calculus, `λ^z = exp(z ln λ)`.
    pub fn a_power(&self, z: C64) -> Mat<C64> {
        spectral_sum(self.dim(), &self.spectrum, |lam| (z * lam.ln()).exp())
    }

    /// `U_t = A^{it}`.
    pub fn unitary(&self, t: f64) -> Mat<C64> {
        self.a_power(C64::new(0.0, t))
    }

    /// A few `U_t` used to test commutation with a candidate contraction.
    pub fn sample_unitaries(&self) -> Vec<Mat<C64>> {
        [0.3, 1.0, 2.7].iter().map(|&t| self.unitary(t)).collect()
    }

    pub fn u_inner(&self, xi: &Vector<C64>, eta: &Vector<C64>) -> Result<C64> {
        for v in [xi, eta] {
            if v.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
            }
        }
        Ok(sesquilinear(xi, &self.gram_u, eta))
    }

    /// Generator units in order of least basis index: a fixed vector is `[a]`, a
    /// rotation block `[a, b]`. Spans of leading units are `U_t`-invariant.
    pub fn generator_units(&self) -> Vec<Vec<usize>> {
        let mut units: Vec<Vec<usize>> = self
            .config
            .rotations
            .iter()
            .map(|r| {
                let mut b = r.basis.to_vec();
                b.sort_unstable();
                b
            })
            .collect();
        let mut covered = vec![false; self.dim()];
        for u in &units {
            for &x in u {
                covered[x] = true;
            }
        }
        units.extend((0..self.dim()).filter(|&x| !covered[x]).map(|x| vec![x]));
        units.sort_unstable_by_key(|u| u[0]);
        units
    }

    pub fn basis_vector(&self, a: usize) -> Vector<C64> {
        let mut e = Vector::<C64>::zeros(self.dim());
        e[a] = C64::new(1.0, 0.0);
        e
    }
}

/// The block supporting `v`, `Ok(None)` for the zero vector, an error when `v` has
/// weight in two blocks.
pub fn support_block<S: Field>(v: &Vector<S>, block_of: &[usize]) -> Result<Option<usize>> {
    if v.len() != block_of.len() {
        return Err(Error::DimensionMismatch { expected: block_of.len(), got: v.len() });
    }
    let mut label = None;
    for (a, x) in v.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        match label {
            None => label = Some(block_of[a]),
            Some(b) if b != block_of[a] => {
                return Err(Error::Domain(format!("vector touches blocks {b} and {}", block_of[a])))
            }
            _ => {}
        }
    }
    Ok(label)
}
