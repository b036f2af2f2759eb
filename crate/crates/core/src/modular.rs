//! Tomita-Takesaki data of the vacuum state on the truncated Fock space.
//!
//! `S(ξ_1 ⊗ … ⊗ ξ_n) = ξ̄_n ⊗ … ⊗ ξ̄_1`, `Δ = (A^{-1})^{⊗n}`,
//! `J_φ(η) = (A^{-1/2})^{⊗n} R η̄` (`R` reverses legs), `σ_z(W(ξ)) = W(A^{-iz}ξ)`.

use crate::error::{Error, Result};
use crate::fock::{vacuum_expectation, FockOp, TruncatedFock};
use crate::hilbert::HilbertSetup;
use crate::linalg::{conj_vec, kron_power, Mat, Vector};
use crate::scalar::C64;
use crate::wick::{wick_of_vector, wick_operator, WickCache, WickWord};

/// An antilinear map `v ↦ M v̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct Antilinear {
    pub matrix: Mat<C64>,
}

impl Antilinear {
    pub fn apply(&self, v: &Vector<C64>) -> Vector<C64> {
        &self.matrix * conj_vec(v)
    }

    /// `self ∘ X` for a linear `X`.
    pub fn after_linear(&self, x: &Mat<C64>) -> Antilinear {
        Antilinear { matrix: &self.matrix * x.map(|c| c.conj()) }
    }

    /// `self ∘ other`, which is linear.
    pub fn after(&self, other: &Antilinear) -> Mat<C64> {
        &self.matrix * other.matrix.map(|c| c.conj())
    }
}

pub struct ModularData<'a> {
    setup: &'a HilbertSetup,
    fock: &'a TruncatedFock<C64>,
}

impl<'a> ModularData<'a> {
    pub fn new(setup: &'a HilbertSetup, fock: &'a TruncatedFock<C64>) -> Result<Self> {
        if setup.dim() != fock.d() || setup.block_of() != fock.block_of() {
            return Err(Error::Domain("Fock space was not built over this one-particle space".into()));
        }
        Ok(Self { setup, fock })
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.fock.n_max() {
            return Err(Error::Cutoff(format!("level {n} exceeds n_max = {}", self.fock.n_max())));
        }
        Ok(())
    }

    /// Leg reversal on level `n`.
    pub fn reversal(&self, n: usize) -> Result<Mat<C64>> {
        self.check_level(n)?;
        let size = self.fock.level_dim(n);
        let mut r = Mat::zeros(size, size);
        for w in 0..size {
            let mut word = self.fock.word(n, w);
            word.reverse();
            r[(self.fock.word_index(&word), w)] = C64::new(1.0, 0.0);
        }
        Ok(r)
    }

    /// `Δ^z = (A^{-z})^{⊗n}` on level `n`.
    pub fn delta_power(&self, z: C64, n: usize) -> Result<Mat<C64>> {
        self.check_level(n)?;
        Ok(kron_power(&self.setup.a_power(-z), n))
    }

    pub fn delta_power_full(&self, z: C64) -> Result<FockOp<C64>> {
        self.fock.second_quantized(&self.setup.a_power(-z))
    }

    pub fn s_phi(&self, n: usize) -> Result<Antilinear> {
        Ok(Antilinear { matrix: self.reversal(n)? })
    }

    pub fn j_phi(&self, n: usize) -> Result<Antilinear> {
        let half = kron_power(&self.setup.a_power(C64::new(-0.5, 0.0)), n);
        Ok(Antilinear { matrix: half * self.reversal(n)? })
    }

    /// `J_φ Δ^{1/2}` on level `n`.
    pub fn polar_s(&self, n: usize) -> Result<Antilinear> {
        Ok(self.j_phi(n)?.after_linear(&self.delta_power(C64::new(0.5, 0.0), n)?))
    }

    /// `S` on a full-space vector.
    pub fn s_apply(&self, v: &Vector<C64>) -> Result<Vector<C64>> {
        let mut out = Vector::zeros(self.fock.dim());
        for n in 0..=self.fock.n_max() {
            let part = self.s_phi(n)?.apply(&self.fock.level_part(v, n));
            out.rows_mut(self.fock.offset(n), part.len()).copy_from(&part);
        }
        Ok(out)
    }

    /// `F_T(U_t) = ⊕ U_t^{⊗n}`.
    pub fn fock_unitary(&self, t: f64) -> Result<FockOp<C64>> {
        self.fock.second_quantized(&self.setup.unitary(t))
    }

    /// `α_t(x) = F_T(U_{-t}) x F_T(U_{-t})*`.
    pub fn automorphism(&self, t: f64, x: &FockOp<C64>) -> Result<FockOp<C64>> {
        let f = self.fock_unitary(-t)?;
        Ok(f.compose(x).compose(&f.adjoint(self.fock)?))
    }

    /// `σ_z(W(η)) = W(Δ^{iz} η)`, leg by leg when the word is a simple tensor.
    pub fn modular_flow(&self, z: C64, w: &WickWord<C64>, cache: &WickCache<C64>) -> Result<WickWord<C64>> {
        if let Some(legs) = w.legs() {
            let a = self.setup.a_power(-C64::new(0.0, 1.0) * z);
            let moved = legs.map_legs(|x| &a * x, self.fock.block_of())?;
            return wick_operator(&moved, self.fock);
        }
        let delta = self.delta_power_full(C64::new(0.0, 1.0) * z)?;
        wick_of_vector(&(delta.matrix() * w.argument()), self.fock, cache)
    }

    /// `|φ(yx) − φ(x σ_{-i}(y))|` (with `σ_t = Ad Δ^{it}`).
    pub fn kms_residual(&self, x: &WickWord<C64>, y: &WickWord<C64>, cache: &WickCache<C64>) -> Result<f64> {
        let lhs = vacuum_expectation(&[y.operator(), x.operator()], self.fock)?;
        let sy = self.modular_flow(C64::new(0.0, -1.0), y, cache)?;
        let rhs = vacuum_expectation(&[x.operator(), sy.operator()], self.fock)?;
        Ok((lhs - rhs).norm())
    }

    /// `|S(W(ξ)Ω) − W(ξ)*Ω|`, entrywise max.
    pub fn s_adjoint_residual(&self, w: &WickWord<C64>) -> Result<f64> {
        let adj = w.operator().adjoint(self.fock)?;
        let lhs = self.s_apply(w.argument())?;
        let rhs = adj.matrix().column(0).into_owned();
        Ok(crate::linalg::vec_max_abs_diff(&lhs, &rhs))
    }
}
