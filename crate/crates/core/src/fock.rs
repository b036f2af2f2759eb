//! Truncated mixed q-deformed Fock space.
//!
//! Level `n` has the basis of words `w ∈ [d]^n` (first letter most significant).
//! `T: e_a ⊗ e_b ↦ q(b(a), b(b)) e_b ⊗ e_a`, `P^(n) = Σ_σ π(σ)`, and the level Gram is
//! `G_T^(n) = G_U^{⊗n} P^(n)`. Full-space vectors and operators live on
//! `F_{≤ n_max} = ⊕_{n ≤ n_max} H^{⊗n}` in level order.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use crate::combinatorics::{complement, f_coefficient_by, subsets};
use crate::error::{Error, Result};
use crate::hilbert::{DeformationMatrix, HilbertSetup, MAX_DIM};
use crate::linalg::{self, kron_power, kron_vecs, ldl_pivots, Mat, Vector};
use crate::scalar::{Field, Rational, C64};

pub const MAX_LEVEL: usize = 5;
/// Words per level must stay below this.
pub const LEVEL_WORD_BUDGET: usize = 4096;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// A weighted permutation of the basis words of one level: `e_w ↦ coeff[w] e_{target[w]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial<S: Field> {
    pub target: Vec<usize>,
    pub coeff: Vec<S>,
}

impl<S: Field> Monomial<S> {
    pub fn identity(size: usize) -> Self {
        Self { target: (0..size).collect(), coeff: vec![S::one(); size] }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Monomial<S>) -> Monomial<S> {
        let target = first.target.iter().map(|&t| self.target[t]).collect();
        let coeff = first
            .coeff
            .iter()
            .zip(&first.target)
            .map(|(c, &t)| c.clone() * self.coeff[t].clone())
            .collect();
        Monomial { target, coeff }
    }

    pub fn add_into(&self, dense: &mut Mat<S>) {
        for (w, (&t, c)) in self.target.iter().zip(&self.coeff).enumerate() {
            dense[(t, w)] += c.clone();
        }
    }

    pub fn to_dense(&self) -> Mat<S> {
        let n = self.target.len();
        let mut m = Mat::zeros(n, n);
        self.add_into(&mut m);
        m
    }
}

/// Every size-budget violation of a `(d, n_max)` pair.
pub fn size_violations(d: usize, n_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    if d == 0 || d > MAX_DIM {
        out.push(format!("dim = {d} must lie in 1..={MAX_DIM}"));
    }
    if n_max > MAX_LEVEL {
        out.push(format!("n_max = {n_max} exceeds {MAX_LEVEL}"));
    }
    let words = (d as u128).saturating_pow(n_max as u32);
    if words >= LEVEL_WORD_BUDGET as u128 {
        out.push(format!("level {n_max} has d^n = {d}^{n_max} = {words} words, budget is < {LEVEL_WORD_BUDGET}"));
    }
    out
}

#[derive(Debug)]
pub struct TruncatedFock<S: Field> {
    id: u64,
    d: usize,
    n_max: usize,
    block_of: Vec<usize>,
    q: DeformationMatrix<S>,
    gram_u: Mat<S>,
    offsets: Vec<usize>,
    p: Vec<Mat<S>>,
    gram: Vec<Mat<S>>,
    chol: Vec<OnceLock<Mat<C64>>>,
    gram_inv: Vec<OnceLock<Mat<C64>>>,
}

impl TruncatedFock<C64> {
    pub fn new(setup: &HilbertSetup, n_max: usize) -> Result<Self> {
        Self::from_parts(
            setup.block_of().to_vec(),
            setup.deformation().clone(),
            setup.gram_u().clone(),
            n_max,
        )
    }
}

impl TruncatedFock<Rational> {
    /// Exact construction for a tracial space (`G_U = 1`).
    pub fn tracial_exact(block_of: Vec<usize>, q: DeformationMatrix<Rational>, n_max: usize) -> Result<Self> {
        let d = block_of.len();
        Self::from_parts(block_of, q, Mat::identity(d, d), n_max)
    }
}

impl<S: Field> TruncatedFock<S> {
    pub fn from_parts(
        block_of: Vec<usize>,
        q: DeformationMatrix<S>,
        gram_u: Mat<S>,
        n_max: usize,
    ) -> Result<Self> {
        let d = block_of.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::SizeLimit(format!("dim = {d} must lie in 1..={MAX_DIM}")));
        }
        if n_max > MAX_LEVEL {
            return Err(Error::SizeLimit(format!("n_max = {n_max} exceeds {MAX_LEVEL}")));
        }
        let words = d.pow(n_max as u32);
        if words >= LEVEL_WORD_BUDGET {
            return Err(Error::SizeLimit(format!(
                "level {n_max} has d^n = {d}^{n_max} = {words} words, budget is < {LEVEL_WORD_BUDGET}"
            )));
        }
        if let Some(&b) = block_of.iter().find(|&&b| b >= q.n_blocks()) {
            return Err(Error::Domain(format!("block label {b} exceeds deformation matrix size")));
        }
        if gram_u.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: d, got: gram_u.nrows() });
        }
        let mut offsets = vec![0];
        for n in 0..=n_max {
            offsets.push(offsets[n] + d.pow(n as u32));
        }
        let mut fock = Self {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            d,
            n_max,
            block_of,
            q,
            gram_u,
            offsets,
            p: Vec::new(),
            gram: Vec::new(),
            chol: (0..=n_max).map(|_| OnceLock::new()).collect(),
            gram_inv: (0..=n_max).map(|_| OnceLock::new()).collect(),
        };
        for n in 0..=n_max {
            let p = fock.symmetrizer(n);
            let g = kron_power(&fock.gram_u, n) * &p;
            check_positive(&g, n)?;
            fock.p.push(p);
            fock.gram.push(g);
        }
        Ok(fock)
    }

    /// Identity of this instance, used as a cache key.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    pub fn deformation(&self) -> &DeformationMatrix<S> {
        &self.q
    }

    pub fn gram_u(&self) -> &Mat<S> {
        &self.gram_u
    }

    pub fn level_dim(&self, n: usize) -> usize {
        self.d.pow(n as u32)
    }

    pub fn offset(&self, n: usize) -> usize {
        self.offsets[n]
    }

    /// Dimension of `F_{≤ n_max}`.
    pub fn dim(&self) -> usize {
        self.offsets[self.n_max + 1]
    }

    pub fn level_of_index(&self, i: usize) -> usize {
        (0..=self.n_max).find(|&n| i < self.offsets[n + 1]).expect("index in range")
    }

    pub fn word_index(&self, word: &[usize]) -> usize {
        word.iter().fold(0, |acc, &a| acc * self.d + a)
    }

    pub fn word(&self, n: usize, mut index: usize) -> Vec<usize> {
        let mut w = vec![0; n];
        for k in (0..n).rev() {
            w[k] = index % self.d;
            index /= self.d;
        }
        w
    }

    fn q_letters(&self, a: usize, b: usize) -> S {
        self.q.entry(self.block_of[a], self.block_of[b]).clone()
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::Cutoff(format!("level {n} exceeds n_max = {}", self.n_max)));
        }
        Ok(())
    }

    /// `T_i` on level `n` (acting on positions `i, i+1`).
    pub fn t_monomial(&self, n: usize, i: usize) -> Result<Monomial<S>> {
        self.check_level(n)?;
        if i + 1 >= n {
            return Err(Error::Domain(format!("T_{i} needs level > {}", i + 1)));
        }
        let size = self.level_dim(n);
        let mut target = Vec::with_capacity(size);
        let mut coeff = Vec::with_capacity(size);
        for w in 0..size {
            let mut word = self.word(n, w);
            coeff.push(self.q_letters(word[i], word[i + 1]));
            word.swap(i, i + 1);
            target.push(self.word_index(&word));
        }
        Ok(Monomial { target, coeff })
    }

    pub fn t_matrix(&self, n: usize, i: usize) -> Result<Mat<S>> {
        Ok(self.t_monomial(n, i)?.to_dense())
    }

    /// `π(σ) = T_{a_1} ⋯ T_{a_r}` for the word `(a_1, .., a_r)`.
    pub fn pi_of_word(&self, n: usize, word: &[usize]) -> Result<Monomial<S>> {
        let mut acc = Monomial::identity(self.level_dim(n));
        for &a in word {
            acc = acc.after(&self.t_monomial(n, a)?);
        }
        Ok(acc)
    }

    /// `P^(n)`, visiting each permutation once through its canonical reduced word
    /// `seg_2 ⋯ seg_n` with `seg_k ∈ {∅, τ_{k-2}, τ_{k-2}τ_{k-3}, ..}`; every step
    /// extends the parent's product by a single `T_i`.
    fn symmetrizer(&self, n: usize) -> Mat<S> {
        let size = self.level_dim(n);
        let mut dense = Mat::zeros(size, size);
        let ts: Vec<Monomial<S>> = (0..n.saturating_sub(1))
            .map(|i| self.t_monomial(n, i).expect("valid generator"))
            .collect();
        fn walk<S: Field>(k: usize, n: usize, acc: &Monomial<S>, ts: &[Monomial<S>], dense: &mut Mat<S>) {
            if k > n {
                acc.add_into(dense);
                return;
            }
            walk(k + 1, n, acc, ts, dense);
            let mut cur = acc.clone();
            for g in (0..k - 1).rev() {
                cur = cur.after(&ts[g]);
                walk(k + 1, n, &cur, ts, dense);
            }
        }
        walk(2, n, &Monomial::identity(size), &ts, &mut dense);
        dense
    }

    pub fn p_matrix(&self, n: usize) -> Result<&Mat<S>> {
        self.check_level(n)?;
        Ok(&self.p[n])
    }

    /// `G_T^(n)`.
    pub fn gram(&self, n: usize) -> Result<&Mat<S>> {
        self.check_level(n)?;
        Ok(&self.gram[n])
    }

    pub fn full_gram(&self) -> Mat<S> {
        linalg::block_diag(&self.gram)
    }

    /// `(1⊗T)(T⊗1)(1⊗T) − (T⊗1)(1⊗T)(T⊗1)` on level 3, max entry.
    pub fn braid_residual(&self) -> f64 {
        let tq = self.two_letter_t();
        let id = Mat::<S>::identity(self.d, self.d);
        let t1 = tq.kronecker(&id);
        let t2 = id.kronecker(&tq);
        linalg::max_abs_diff(&(&t2 * &t1 * &t2), &(&t1 * &t2 * &t1))
    }

    fn two_letter_t(&self) -> Mat<S> {
        let d = self.d;
        let mut m = Mat::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                m[(b * d + a, a * d + b)] = self.q_letters(a, b);
            }
        }
        m
    }

    pub fn check_vector(&self, v: &Vector<S>) -> Result<()> {
        if v.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: v.len() });
        }
        Ok(())
    }

    /// Coordinates of `⟨ξ, e_a⟩_U` for every basis letter `a`.
    fn pairing_row(&self, xi: &Vector<S>) -> Vec<S> {
        (0..self.d)
            .map(|a| {
                let mut acc = S::zero();
                for b in 0..self.d {
                    acc += xi[b].conj() * self.gram_u[(b, a)].clone();
                }
                acc
            })
            .collect()
    }

    /// `l(ξ)`: level `n` → `n+1`; creation out of `n_max` is an error.
    pub fn creation(&self, xi: &Vector<S>, n: usize) -> Result<Mat<S>> {
        self.check_vector(xi)?;
        if n >= self.n_max {
            return Err(Error::Cutoff(format!(
                "creation from level {n} leaves the truncation n_max = {}",
                self.n_max
            )));
        }
        let (rows, cols) = (self.level_dim(n + 1), self.level_dim(n));
        let mut m = Mat::zeros(rows, cols);
        for a in 0..self.d {
            if xi[a].is_zero() {
                continue;
            }
            for w in 0..cols {
                m[(a * cols + w, w)] = xi[a].clone();
            }
        }
        Ok(m)
    }

    /// `l*(ξ)`: level `n` → `n-1`,
    /// `e_w ↦ Σ_k ⟨ξ, e_{w_k}⟩_U Π_{j<k} q(w_k, w_j) e_{w without k}`.
    pub fn annihilation(&self, xi: &Vector<S>, n: usize) -> Result<Mat<S>> {
        self.check_vector(xi)?;
        self.check_level(n)?;
        if n == 0 {
            return Err(Error::Domain("annihilation on the vacuum level has no target level".into()));
        }
        let row = self.pairing_row(xi);
        let (rows, cols) = (self.level_dim(n - 1), self.level_dim(n));
        let mut m = Mat::zeros(rows, cols);
        for w in 0..cols {
            let word = self.word(n, w);
            for k in 0..n {
                let c0 = &row[word[k]];
                if c0.is_zero() {
                    continue;
                }
                let mut c = c0.clone();
                for &wj in &word[..k] {
                    c *= self.q_letters(word[k], wj);
                }
                let mut rest = word.clone();
                rest.remove(k);
                m[(self.word_index(&rest), w)] += c;
            }
        }
        Ok(m)
    }

    /// `R*_{n,k}`: level `n+k` → `H^{⊗n} ⊗ H^{⊗k}` (same coordinates as level `n+k`),
    /// `e_w ↦ Σ_{|J|=k} f_{(J^c,J)} e_{w_{J^c}} ⊗ e_{w_J}`.
    pub fn r_star(&self, n: usize, k: usize) -> Result<Mat<S>> {
        let total = n + k;
        self.check_level(total)?;
        let size = self.level_dim(total);
        let splittings: Vec<(Vec<usize>, Vec<usize>)> = subsets(total, k)
            .into_iter()
            .map(|j| (complement(total, &j), j))
            .collect();
        let mut m = Mat::zeros(size, size);
        for w in 0..size {
            let word = self.word(total, w);
            let labels: Vec<usize> = word.iter().map(|&a| self.block_of[a]).collect();
            for (i_set, j_set) in &splittings {
                let f = f_coefficient_by(i_set, j_set, &labels, |a, b| self.q.entry(a, b).clone());
                let out: Vec<usize> = i_set.iter().chain(j_set).map(|&x| word[x]).collect();
                m[(self.word_index(&out), w)] += f;
            }
        }
        Ok(m)
    }

    /// `ξ_1 ⊗ … ⊗ ξ_n` as level-`n` coordinates.
    pub fn simple_tensor(&self, legs: &[Vector<S>]) -> Result<Vector<S>> {
        self.check_level(legs.len())?;
        for leg in legs {
            self.check_vector(leg)?;
        }
        Ok(kron_vecs(legs))
    }

    pub fn vacuum(&self) -> Vector<S> {
        let mut v = Vector::zeros(self.dim());
        v[0] = S::one();
        v
    }

    /// Embed a level-`n` vector into the full space.
    pub fn embed(&self, n: usize, v: &Vector<S>) -> Result<Vector<S>> {
        self.check_level(n)?;
        if v.len() != self.level_dim(n) {
            return Err(Error::DimensionMismatch { expected: self.level_dim(n), got: v.len() });
        }
        let mut out = Vector::zeros(self.dim());
        out.rows_mut(self.offset(n), v.len()).copy_from(v);
        Ok(out)
    }

    pub fn level_part(&self, v: &Vector<S>, n: usize) -> Vector<S> {
        v.rows(self.offset(n), self.level_dim(n)).into_owned()
    }

    /// `⟨u, v⟩_T` on the full truncated space.
    pub fn inner(&self, u: &Vector<S>, v: &Vector<S>) -> Result<S> {
        for x in [u, v] {
            if x.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
            }
        }
        let mut acc = S::zero();
        for n in 0..=self.n_max {
            acc += linalg::sesquilinear(&self.level_part(u, n), &self.gram[n], &self.level_part(v, n));
        }
        Ok(acc)
    }

    pub fn norm(&self, v: &Vector<S>) -> Result<f64> {
        Ok(self.inner(v, v)?.re_f64().max(0.0).sqrt())
    }

    /// Full-space matrix from level blocks `(from, to, block)`.
    pub fn assemble(&self, blocks: &[(usize, usize, Mat<S>)]) -> Mat<S> {
        let mut m = Mat::zeros(self.dim(), self.dim());
        for (from, to, b) in blocks {
            let mut view = m.view_mut((self.offset(*to), self.offset(*from)), (b.nrows(), b.ncols()));
            view += b;
        }
        m
    }

    /// Block of a full-space matrix from level `from` to level `to`.
    pub fn block(&self, m: &Mat<S>, from: usize, to: usize) -> Mat<S> {
        m.view((self.offset(to), self.offset(from)), (self.level_dim(to), self.level_dim(from)))
            .into_owned()
    }

    /// `l(ξ)` on `F_{≤ n_max}` (compression).
    pub fn creation_op(&self, xi: &Vector<S>) -> Result<FockOp<S>> {
        let blocks = (0..self.n_max)
            .map(|n| Ok((n, n + 1, self.creation(xi, n)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FockOp::compression(self.assemble(&blocks), 1, 1, self.n_max))
    }

    pub fn annihilation_op(&self, xi: &Vector<S>) -> Result<FockOp<S>> {
        let blocks = (1..=self.n_max)
            .map(|n| Ok((n, n - 1, self.annihilation(xi, n)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FockOp::compression(self.assemble(&blocks), -1, -1, self.n_max))
    }

    /// Level-preserving operator `⊕_n L^{⊗n}`.
    pub fn second_quantized(&self, l: &Mat<S>) -> Result<FockOp<S>> {
        if l.shape() != (self.d, self.d) {
            return Err(Error::DimensionMismatch { expected: self.d, got: l.nrows() });
        }
        let blocks: Vec<_> = (0..=self.n_max).map(|n| (n, n, kron_power(l, n))).collect();
        Ok(FockOp::compression(self.assemble(&blocks), 0, 0, self.n_max))
    }

    pub fn level_cholesky(&self, n: usize) -> Result<&Mat<C64>> {
        self.check_level(n)?;
        if let Some(l) = self.chol[n].get() {
            return Ok(l);
        }
        let l = linalg::cholesky(&linalg::to_c64_mat(&self.gram[n]))?;
        Ok(self.chol[n].get_or_init(|| l))
    }

    pub fn full_cholesky(&self) -> Result<Mat<C64>> {
        let blocks = (0..=self.n_max)
            .map(|n| self.level_cholesky(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(linalg::block_diag(&blocks))
    }

    fn level_gram_inverse(&self, n: usize) -> Result<&Mat<C64>> {
        if let Some(g) = self.gram_inv[n].get() {
            return Ok(g);
        }
        let li = linalg::lower_inverse(self.level_cholesky(n)?)?;
        let inv = li.adjoint() * li;
        Ok(self.gram_inv[n].get_or_init(|| inv))
    }

    pub fn full_gram_inverse(&self) -> Result<Mat<C64>> {
        let blocks = (0..=self.n_max)
            .map(|n| self.level_gram_inverse(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(linalg::block_diag(&blocks))
    }

    /// Smallest eigenvalue of `P^(n)` in the `⟨·,·⟩_U^{⊗n}` geometry.
    pub fn min_generalized_eigenvalue(&self, n: usize) -> Result<f64> {
        self.check_level(n)?;
        let g = linalg::to_c64_mat(&self.gram[n]);
        let base = linalg::to_c64_mat(&kron_power(&self.gram_u, n));
        let ev = linalg::generalized_eigenvalues(&g, &base)?;
        Ok(ev[0])
    }

    /// `‖T‖` on `H ⊗ H` with the `⟨·,·⟩_U^{⊗2}` geometry.
    pub fn t_norm(&self) -> Result<f64> {
        let g2 = linalg::to_c64_mat(&kron_power(&self.gram_u, 2));
        let gt = &g2 * linalg::to_c64_mat(&self.two_letter_t());
        let ev = linalg::generalized_eigenvalues(&gt, &g2)?;
        Ok(ev.iter().map(|x| x.abs()).fold(0.0, f64::max))
    }

    /// Operator norm of a level map `from → to` in the `G_T` geometries.
    pub fn level_operator_norm(&self, x: &Mat<S>, from: usize, to: usize) -> Result<f64> {
        linalg::operator_norm(
            &linalg::to_c64_mat(x),
            self.level_cholesky(from)?,
            self.level_cholesky(to)?,
        )
    }

    /// `‖ξ‖_U (1 − ‖T‖)^{-1/2}`.
    pub fn creation_norm_bound(&self, xi: &Vector<S>) -> Result<f64> {
        let norm_u = linalg::sesquilinear(xi, &self.gram_u, xi).re_f64().max(0.0).sqrt();
        Ok(norm_u / (1.0 - self.t_norm()?).sqrt())
    }
}

fn check_positive<S: Field>(g: &Mat<S>, level: usize) -> Result<()> {
    let herm_tol = if S::EXACT { 0.0 } else { 1e-10 * (1.0 + linalg::max_abs(g)) };
    if linalg::max_abs_diff(g, &linalg::adjoint(g)) > herm_tol {
        return Err(Error::NotPositive { level, detail: "Gram matrix is not Hermitian".into() });
    }
    let pivots = ldl_pivots(g);
    if let Some((i, p)) = pivots.iter().enumerate().find(|(_, p)| !(p.re_f64() > 0.0)) {
        return Err(Error::NotPositive { level, detail: format!("LDL pivot {i} = {p}") });
    }
    Ok(())
}

/// `⟨Ω, X_1 ⋯ X_k Ω⟩_T`, applying the factors right to left.
pub fn vacuum_expectation<S: Field>(ops: &[&FockOp<S>], fock: &TruncatedFock<S>) -> Result<S> {
    let mut v = TruncatedVector::vacuum(fock);
    for op in ops.iter().rev() {
        v = op.apply(&v)?;
    }
    v.vacuum_coefficient()
}

const UNBOUNDED: isize = isize::MAX / 4;

/// A matrix on `F_{≤ n_max}` that is the compression of an operator (or a product of
/// compressions). Input levels `v ≤ exact_upto` give the true image; levels
/// `v ≤ closed_upto` additionally have their full image inside the truncation.
/// `[lo, hi]` bounds the level change.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOp<S: Field> {
    matrix: Mat<S>,
    lo: isize,
    hi: isize,
    exact_upto: isize,
    closed_upto: isize,
    n_max: usize,
}

impl<S: Field> FockOp<S> {
    pub fn compression(matrix: Mat<S>, lo: isize, hi: isize, n_max: usize) -> Self {
        let n = n_max as isize;
        Self { matrix, lo, hi, exact_upto: n, closed_upto: (n - hi.max(0)).min(n), n_max }
    }

    pub fn identity(fock: &TruncatedFock<S>) -> Self {
        Self::compression(Mat::identity(fock.dim(), fock.dim()), 0, 0, fock.n_max())
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.matrix
    }

    pub fn level_range(&self) -> (isize, isize) {
        (self.lo, self.hi)
    }

    pub fn exact_upto(&self) -> isize {
        self.exact_upto
    }

    pub fn closed_upto(&self) -> isize {
        self.closed_upto
    }

    pub fn is_exact_everywhere(&self) -> bool {
        self.exact_upto >= self.n_max as isize
    }

    /// `self ∘ rhs` with the truncation bookkeeping.
    pub fn compose(&self, rhs: &FockOp<S>) -> FockOp<S> {
        FockOp {
            matrix: &self.matrix * &rhs.matrix,
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
            exact_upto: rhs.closed_upto.min(self.exact_upto - rhs.hi),
            closed_upto: rhs.closed_upto.min(self.closed_upto - rhs.hi),
            n_max: self.n_max,
        }
    }

    fn combine(&self, rhs: &FockOp<S>, matrix: Mat<S>) -> FockOp<S> {
        FockOp {
            matrix,
            lo: self.lo.min(rhs.lo),
            hi: self.hi.max(rhs.hi),
            exact_upto: self.exact_upto.min(rhs.exact_upto),
            closed_upto: self.closed_upto.min(rhs.closed_upto),
            n_max: self.n_max,
        }
    }

    pub fn add(&self, rhs: &FockOp<S>) -> FockOp<S> {
        self.combine(rhs, &self.matrix + &rhs.matrix)
    }

    pub fn sub(&self, rhs: &FockOp<S>) -> FockOp<S> {
        self.combine(rhs, &self.matrix - &rhs.matrix)
    }

    pub fn scale(&self, c: S) -> FockOp<S> {
        FockOp { matrix: self.matrix.map(|x| x * c.clone()), ..self.clone() }
    }

    /// Max entry difference over the columns on which both operands are exact.
    pub fn exact_difference(&self, rhs: &FockOp<S>, fock: &TruncatedFock<S>) -> Result<f64> {
        let upto = self.exact_upto.min(rhs.exact_upto);
        if upto < 0 {
            return Err(Error::Cutoff("no input level is exact for both operators".into()));
        }
        let cols = fock.offset(upto as usize + 1);
        let a = self.matrix.columns(0, cols).into_owned();
        let b = rhs.matrix.columns(0, cols).into_owned();
        Ok(linalg::max_abs_diff(&a, &b))
    }

    pub fn apply(&self, v: &TruncatedVector<S>) -> Result<TruncatedVector<S>> {
        if v.coeffs.len() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: self.matrix.ncols(), got: v.coeffs.len() });
        }
        let n = self.n_max as isize;
        let mut valid = UNBOUNDED;
        if v.valid_below < UNBOUNDED {
            valid = valid.min(v.valid_below + self.lo);
        }
        if v.top > self.exact_upto {
            valid = valid.min(self.exact_upto + 1 + self.lo);
        }
        if v.top + self.hi > n {
            valid = valid.min(n + 1);
        }
        Ok(TruncatedVector {
            coeffs: &self.matrix * &v.coeffs,
            valid_below: valid,
            top: (v.top + self.hi).max(0),
        })
    }
}

impl FockOp<C64> {
    /// `X† = G^{-1} X* G`; only meaningful when every column is exact.
    pub fn adjoint(&self, fock: &TruncatedFock<C64>) -> Result<FockOp<C64>> {
        if !self.is_exact_everywhere() {
            return Err(Error::Cutoff("adjoint of an operator with inexact columns".into()));
        }
        let g = fock.full_gram();
        let matrix = fock.full_gram_inverse()? * self.matrix.adjoint() * g;
        Ok(FockOp::compression(matrix, -self.hi, -self.lo, self.n_max))
    }
}

/// A full-space vector with a record of which levels are exact: levels below
/// `valid_below` are exact, and the true vector lives on levels `≤ top`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedVector<S: Field> {
    pub coeffs: Vector<S>,
    valid_below: isize,
    top: isize,
}

impl<S: Field> TruncatedVector<S> {
    pub fn vacuum(fock: &TruncatedFock<S>) -> Self {
        Self { coeffs: fock.vacuum(), valid_below: UNBOUNDED, top: 0 }
    }

    /// A vector known exactly.
    pub fn exact(fock: &TruncatedFock<S>, coeffs: Vector<S>) -> Result<Self> {
        if coeffs.len() != fock.dim() {
            return Err(Error::DimensionMismatch { expected: fock.dim(), got: coeffs.len() });
        }
        let top = (0..fock.dim())
            .filter(|&i| !coeffs[i].is_zero())
            .map(|i| fock.level_of_index(i))
            .max()
            .unwrap_or(0) as isize;
        Ok(Self { coeffs, valid_below: UNBOUNDED, top })
    }

    pub fn is_exact_at(&self, level: usize) -> bool {
        (level as isize) < self.valid_below
    }

    pub fn is_exact(&self, n_max: usize) -> bool {
        self.valid_below > n_max as isize
    }

    /// The vacuum coefficient `⟨Ω, v⟩`.
    pub fn vacuum_coefficient(&self) -> Result<S> {
        if !self.is_exact_at(0) {
            return Err(Error::Cutoff("vacuum component depends on truncated levels".into()));
        }
        Ok(self.coeffs[0].clone())
    }
}
