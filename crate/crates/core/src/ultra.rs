//! Finite-`m` moments of `u_m(f) = m^{-1/2} Σ_k W(e_k) ⊗ W(f ⊗ e_k)` in
//! `Γ_{Q̃}(R^m) ⊗ Γ_q(H ⊗ R^m)`, their `m → ∞` limit, and the norm decay of the
//! remainder `D(m)` in the Wick-word recursion.

use serde::Serialize;

use crate::combinatorics::{enumerate_pair_partitions, g_coefficient_by, PairPartition};
use crate::error::{Error, Result};
use crate::hilbert::DeformationMatrix;
use crate::linalg::Mat;
use crate::moments::{contraction, moment_pairings, MomentSpec};
use crate::scalar::{Field, C64};

pub const MAX_M: usize = 10;
pub const MAX_WORD: usize = 6;
/// Largest `m` for the `D(m)` surrogate.
pub const MAX_SURROGATE_M: usize = 12;

/// Deformation of the auxiliary factor `Γ_{Q̃}(R^m)`, indexed by the auxiliary basis.
/// A finite matrix is extended by zeros past its size.
#[derive(Clone, Debug, PartialEq)]
pub enum AuxDeformation<S: Field> {
    Uniform(S),
    Matrix(DeformationMatrix<S>),
}

impl<S: Field> AuxDeformation<S> {
    pub fn entry(&self, a: usize, b: usize) -> S {
        match self {
            Self::Uniform(q) => q.clone(),
            Self::Matrix(m) if a < m.n_blocks() && b < m.n_blocks() => m.entry(a, b).clone(),
            Self::Matrix(_) => S::zero(),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Self::Uniform(_))
    }

    /// `q·Q̃` on `n_blocks` labels of `H`.
    pub fn combined(&self, q: &S, n_blocks: usize) -> Result<DeformationMatrix<S>> {
        match self {
            Self::Uniform(qt) => DeformationMatrix::uniform(n_blocks, q.clone() * qt.clone()),
            Self::Matrix(m) => {
                if m.n_blocks() < n_blocks {
                    return Err(Error::Domain(format!(
                        "Q̃ has {} rows but the word uses {n_blocks} block labels",
                        m.n_blocks()
                    )));
                }
                m.scaled(q.clone())
            }
        }
    }

    fn check(&self) -> Result<()> {
        if let Self::Uniform(q) = self {
            if !q.is_real() || !(q.abs_f64() < 1.0) {
                return Err(Error::Deformation(format!("q̃ = {q} must be real with |q̃| < 1")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct UmSpec<S: Field> {
    pub m: usize,
    pub word: MomentSpec<S>,
    pub gram_u: Mat<S>,
    pub q: S,
    pub q_tilde: AuxDeformation<S>,
}

impl<S: Field> UmSpec<S> {
    fn check(&self) -> Result<()> {
        if self.m == 0 || self.m > MAX_M {
            return Err(Error::SizeLimit(format!("m = {} must lie in 1..={MAX_M}", self.m)));
        }
        if self.word.len() > MAX_WORD {
            return Err(Error::SizeLimit(format!("word length {} exceeds {MAX_WORD}", self.word.len())));
        }
        if !self.q.is_real() || !(self.q.abs_f64() < 1.0) {
            return Err(Error::Deformation(format!("q = {} must be real with |q| < 1", self.q)));
        }
        let d = self.gram_u.nrows();
        if let Some(v) = self.word.vectors().iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        self.q_tilde.check()
    }

    fn n_blocks(&self) -> usize {
        self.word.labels().iter().max().map_or(1, |&t| t + 1)
    }

    /// `q^{cr ν'} Π_{(r,s) ∈ ν'} ⟨𝒥f_r, f_s⟩_U`, the second-factor weight of `ν'`.
    fn second_factor_weight(&self, nu: &PairPartition) -> S {
        let xs = self.word.vectors();
        let mut w = self.q.powi(nu.crossing_number());
        for &(r, s) in nu.pairs() {
            w *= contraction(&xs[r], &xs[s], &self.gram_u);
        }
        w
    }
}

fn inv_power<S: Field>(m: usize, e: usize) -> S {
    S::one() / S::from_i64(m as i64).powi(e)
}

/// `m^{-l/2} Σ_{k ∈ [m]^l} φ_{Q̃}(W(e_{k_1}) ⋯) φ_q(W(f_1 ⊗ e_{k_1}) ⋯)`, grouping `k` by
/// the value assignment on the blocks of `ν ∨ ν'`. Works for any `Q̃`.
pub fn um_moment_enumerate<S: Field>(spec: &UmSpec<S>) -> Result<S> {
    spec.check()?;
    let l = spec.word.len();
    if l % 2 == 1 {
        return Ok(S::zero());
    }
    let pairings = enumerate_pair_partitions(l)?;
    let partitions: Vec<_> = pairings.iter().map(|nu| nu.to_set_partition()).collect();
    let mut total = S::zero();
    for (b, nu_b) in pairings.iter().enumerate() {
        let weight = spec.second_factor_weight(nu_b);
        if weight.is_zero() {
            continue;
        }
        for (a, nu_a) in pairings.iter().enumerate() {
            let join = partitions[a].join(&partitions[b])?;
            let block = join.block_index();
            let nb = join.num_blocks();
            let mut assignment = vec![0usize; nb];
            let mut inner = S::zero();
            loop {
                let k: Vec<usize> = block.iter().map(|&j| assignment[j]).collect();
                inner += g_coefficient_by(nu_a, &k, |x, y| spec.q_tilde.entry(x, y));
                // Odometer over [m]^{blocks}.
                let mut pos = 0;
                while pos < nb {
                    assignment[pos] += 1;
                    if assignment[pos] < spec.m {
                        break;
                    }
                    assignment[pos] = 0;
                    pos += 1;
                }
                if pos == nb {
                    break;
                }
            }
            total += weight.clone() * inner;
        }
    }
    Ok(total * inv_power(spec.m, l / 2))
}

/// `Σ_{ν,ν'} q̃^{cr ν} q^{cr ν'} Π_{ν'} ⟨f, f⟩_U m^{|ν∨ν'| − l/2}`, valid for uniform `q̃`.
pub fn um_moment_closedform<S: Field>(spec: &UmSpec<S>) -> Result<S> {
    spec.check()?;
    let AuxDeformation::Uniform(qt) = &spec.q_tilde else {
        return Err(Error::Precondition("closed form requires a uniform q̃".into()));
    };
    let l = spec.word.len();
    if l % 2 == 1 {
        return Ok(S::zero());
    }
    let pairings = enumerate_pair_partitions(l)?;
    let partitions: Vec<_> = pairings.iter().map(|nu| nu.to_set_partition()).collect();
    let mut total = S::zero();
    for (b, nu_b) in pairings.iter().enumerate() {
        let weight = spec.second_factor_weight(nu_b);
        if weight.is_zero() {
            continue;
        }
        for (a, nu_a) in pairings.iter().enumerate() {
            let join = partitions[a].join(&partitions[b])?;
            let deficit = l / 2 - join.num_blocks();
            total += weight.clone() * qt.powi(nu_a.crossing_number()) * inv_power(spec.m, deficit);
        }
    }
    Ok(total)
}

/// `φ(W(f_1) ⋯ W(f_l))` under `Q = q·Q̃`, the `m → ∞` limit.
pub fn um_limit_target<S: Field>(spec: &UmSpec<S>) -> Result<S> {
    spec.check()?;
    let combined = spec.q_tilde.combined(&spec.q, spec.n_blocks())?;
    moment_pairings(&spec.word, &combined, &spec.gram_u)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergencePoint {
    pub m: usize,
    pub value: C64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    pub target: C64,
    /// Least-squares slope of `log|value − target|` against `log m`; `None` when the
    /// error vanishes identically.
    pub slope: Option<f64>,
    pub vanishing: bool,
    /// False when `Q̃` is not uniform; the limit is then reported, not asserted.
    pub uniform: bool,
}

/// Errors below this count as identically zero.
pub const VANISHING_TOL: f64 = 1e-12;

pub fn convergence_experiment(
    word: &MomentSpec<C64>,
    gram_u: &Mat<C64>,
    q: f64,
    q_tilde: &AuxDeformation<C64>,
    m_list: &[usize],
) -> Result<ConvergenceReport> {
    if m_list.is_empty() || m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("m_list must be non-empty and strictly increasing".into()));
    }
    let mut spec = UmSpec {
        m: m_list[0],
        word: word.clone(),
        gram_u: gram_u.clone(),
        q: C64::new(q, 0.0),
        q_tilde: q_tilde.clone(),
    };
    let target = um_limit_target(&spec)?;
    let mut points = Vec::with_capacity(m_list.len());
    for &m in m_list {
        spec.m = m;
        let value = um_moment_enumerate(&spec)?;
        points.push(ConvergencePoint { m, value, abs_error: (value - target).norm() });
    }
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.abs_error > VANISHING_TOL)
        .map(|p| ((p.m as f64).ln(), p.abs_error.ln()))
        .collect();
    let vanishing = fit.is_empty();
    let slope = (fit.len() >= 2).then(|| least_squares_slope(&fit));
    Ok(ConvergenceReport { points, target, slope, vanishing, uniform: q_tilde.is_uniform() })
}

fn least_squares_slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// A leg `f_t ⊗ e_k` (or `e_k` alone in the auxiliary factor, with `t = 0`).
type Leg = (usize, usize);

/// Finite combinations of simple tensors over a deformed Fock space given by its
/// one-particle data, evaluated without building the space.
struct SymbolicFock<'a, S: Field> {
    /// `⟨a, b⟩` on legs.
    inner: &'a dyn Fn(Leg, Leg) -> S,
    /// `⟨𝒥a, b⟩` on legs.
    pair: &'a dyn Fn(Leg, Leg) -> S,
    /// `T(a ⊗ b) = swap(a, b) b ⊗ a`.
    swap: &'a dyn Fn(Leg, Leg) -> S,
}

type Combination<S> = Vec<(S, Vec<Leg>)>;

impl<S: Field> SymbolicFock<'_, S> {
    /// `⟨x, y⟩_T = Σ_k ⟨x_1, y_k⟩ Π_{j<k} swap(y_k, y_j) ⟨x', y ∖ k⟩_T`.
    fn inner_simple(&self, x: &[Leg], y: &[Leg]) -> S {
        if x.len() != y.len() {
            return S::zero();
        }
        if x.is_empty() {
            return S::one();
        }
        let mut acc = S::zero();
        for k in 0..y.len() {
            let mut c = (self.inner)(x[0], y[k]);
            if c.is_zero() {
                continue;
            }
            for j in 0..k {
                c *= (self.swap)(y[k], y[j]);
            }
            if c.is_zero() {
                continue;
            }
            let mut rest = y.to_vec();
            rest.remove(k);
            acc += c * self.inner_simple(&x[1..], &rest);
        }
        acc
    }

    fn inner(&self, x: &Combination<S>, y: &Combination<S>) -> S {
        let mut acc = S::zero();
        for (a, xs) in x {
            for (b, ys) in y {
                acc += a.conj() * b.clone() * self.inner_simple(xs, ys);
            }
        }
        acc
    }

    /// `W(a_1) ⋯ W(a_r) Ω`, each field acting as `l(a) + l*(𝒥a)`.
    fn fields_on_vacuum(&self, legs: &[Leg]) -> Combination<S> {
        let mut cur: Combination<S> = vec![(S::one(), Vec::new())];
        for &a in legs.iter().rev() {
            let mut next = Vec::new();
            for (c, y) in &cur {
                let mut created = Vec::with_capacity(y.len() + 1);
                created.push(a);
                created.extend_from_slice(y);
                next.push((c.clone(), created));
                for k in 0..y.len() {
                    let mut coef = c.clone() * (self.pair)(a, y[k]);
                    for j in 0..k {
                        coef *= (self.swap)(y[k], y[j]);
                    }
                    if !coef.is_zero() {
                        let mut rest = y.clone();
                        rest.remove(k);
                        next.push((coef, rest));
                    }
                }
            }
            cur = next;
        }
        cur
    }
}

/// `Σ_i c_i (A_i ⊗ B_i)` in `F_{Q̃}(R^m) ⊗ F_q(H ⊗ R^m)`.
fn tensor_norm_squared<S: Field>(
    terms: &[(S, Combination<S>, Combination<S>)],
    aux: &SymbolicFock<S>,
    main: &SymbolicFock<S>,
) -> S {
    let mut acc = S::zero();
    for (ci, ai, bi) in terms {
        for (cj, aj, bj) in terms {
            acc += ci.conj() * cj.clone() * aux.inner(ai, aj) * main.inner(bi, bj);
        }
    }
    acc
}

/// `‖D(m)Ω‖` for the recursion step from `W(ξ_2 ⊗ ξ_3)` to `W(ξ_1 ⊗ ξ_2 ⊗ ξ_3)`, where
/// `D(m)` collects the coincident-index terms `k_1 = k_i` with the `m^{-3/2}` prefactor.
pub fn d_remainder_norm<S: Field>(
    xi: &[crate::linalg::Vector<S>; 3],
    gram_u: &Mat<S>,
    q: &S,
    q_tilde: &AuxDeformation<S>,
    m: usize,
) -> Result<f64> {
    if m < 2 || m > MAX_SURROGATE_M {
        return Err(Error::SizeLimit(format!("m = {m} must lie in 2..={MAX_SURROGATE_M}")));
    }
    let d = gram_u.nrows();
    if let Some(v) = xi.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    let f_inner = |s: usize, t: usize| crate::linalg::sesquilinear(&xi[s], gram_u, &xi[t]);
    let f_pair = |s: usize, t: usize| contraction(&xi[s], &xi[t], gram_u);
    let delta = |a: usize, b: usize| if a == b { S::one() } else { S::zero() };

    let aux_inner = |a: Leg, b: Leg| delta(a.1, b.1);
    let aux_swap = |a: Leg, b: Leg| q_tilde.entry(a.1, b.1);
    let aux = SymbolicFock { inner: &aux_inner, pair: &aux_inner, swap: &aux_swap };
    let main_inner = |a: Leg, b: Leg| delta(a.1, b.1) * f_inner(a.0, b.0);
    let main_pair = |a: Leg, b: Leg| delta(a.1, b.1) * f_pair(a.0, b.0);
    let main_swap = |_: Leg, _: Leg| q.clone();
    let main = SymbolicFock { inner: &main_inner, pair: &main_pair, swap: &main_swap };

    let mut terms: Vec<(S, Combination<S>, Combination<S>)> = Vec::new();
    for i in 1..3 {
        let c2 = f_pair(0, i) * q.powi(i);
        for k2 in 0..m {
            for k3 in 0..m {
                if k2 == k3 {
                    continue;
                }
                let k = [if i == 1 { k2 } else { k3 }, k2, k3];
                let aux_legs: Vec<Leg> = k.iter().map(|&kk| (0, kk)).collect();
                let main_legs: Vec<Leg> = (0..3).map(|r| (r, k[r])).collect();
                let without = |legs: &[Leg]| -> Vec<Leg> {
                    legs.iter().enumerate().filter(|&(r, _)| r != i).map(|(_, &l)| l).collect()
                };
                let a_full: Combination<S> = vec![(S::one(), aux_legs.clone())];
                let b_full: Combination<S> = vec![(S::one(), main_legs.clone())];
                terms.push((S::one(), a_full.clone(), b_full.clone()));
                if !c2.is_zero() {
                    terms.push((c2.clone(), a_full, main.fields_on_vacuum(&without(&main_legs))));
                }
                let mut c3 = S::one();
                for j in 1..i {
                    c3 *= q_tilde.entry(k[i], k[j]);
                }
                if !c3.is_zero() {
                    terms.push((c3, aux.fields_on_vacuum(&without(&aux_legs)), b_full));
                }
            }
        }
    }
    let norm_sq = tensor_norm_squared(&terms, &aux, &main).re_f64();
    Ok(norm_sq.max(0.0).sqrt() / (m as f64).powf(1.5))
}

pub fn d_remainder_sequence<S: Field>(
    xi: &[crate::linalg::Vector<S>; 3],
    gram_u: &Mat<S>,
    q: &S,
    q_tilde: &AuxDeformation<S>,
    ms: &[usize],
) -> Result<Vec<(usize, f64)>> {
    ms.iter().map(|&m| Ok((m, d_remainder_norm(xi, gram_u, q, q_tilde, m)?))).collect()
}
