//! Maps on the truncated Wick span and the finite-rank approximating net.
//!
//! A map `Φ` on `{W(η) : η ∈ F_{≤ n_max}}` is stored as the matrix `M` acting on
//! vacuum vectors: `Φ(W(η)) = W(Mη)`. Second quantisation is `M = ⊕ L^{⊗n}`, a radial
//! multiplier is `M = ⊕ φ(n)·1`, and the net is `Γ_{n,t,k} = Γ(e^{-t} T_k) B_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{FockOp, TruncatedFock, TruncatedVector};
use crate::hilbert::HilbertSetup;
use crate::linalg::{self, kron_power, Mat, Vector};
use crate::scalar::{Field, C64};
use crate::wick::{wick_of_vector, wick_operator, WickCache, WickWord};

/// `φ: N → C`, given by explicit values for small `n` and a constant tail.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialSymbol<S: Field> {
    pub values: Vec<S>,
    pub tail: S,
}

impl<S: Field> RadialSymbol<S> {
    pub fn value(&self, n: usize) -> S {
        self.values.get(n).cloned().unwrap_or_else(|| self.tail.clone())
    }

    /// `F_n = δ_{·,n}`.
    pub fn kronecker(n: usize) -> Self {
        let mut values = vec![S::zero(); n + 1];
        values[n] = S::one();
        Self { values, tail: S::zero() }
    }

    /// `B_n = F_0 + … + F_n`.
    pub fn block(n: usize) -> Self {
        Self { values: vec![S::one(); n + 1], tail: S::zero() }
    }

    pub fn constant(c: S) -> Self {
        Self { values: Vec::new(), tail: c }
    }

    pub fn is_finite_rank(&self) -> bool {
        self.tail.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WickSpanMap<S: Field> {
    matrix: Mat<S>,
}

impl<S: Field> WickSpanMap<S> {
    pub fn identity(fock: &TruncatedFock<S>) -> Self {
        Self { matrix: Mat::identity(fock.dim(), fock.dim()) }
    }

    pub fn radial(symbol: &RadialSymbol<S>, fock: &TruncatedFock<S>) -> Self {
        let diag = Vector::from_iterator(
            fock.dim(),
            (0..fock.dim()).map(|i| symbol.value(fock.level_of_index(i))),
        );
        Self { matrix: Mat::from_diagonal(&diag) }
    }

    /// `Γ(L)` after checking that `L` is a block-diagonal contraction commuting with
    /// the supplied samples of `U_t`.
    pub fn second_quantization(l: &Mat<S>, fock: &TruncatedFock<S>, unitaries: &[Mat<S>]) -> Result<Self> {
        check_contraction(l, fock, unitaries)?;
        let blocks: Vec<Mat<S>> = (0..=fock.n_max()).map(|n| kron_power(l, n)).collect();
        Ok(Self { matrix: linalg::block_diag(&blocks) })
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.matrix
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &WickSpanMap<S>) -> WickSpanMap<S> {
        Self { matrix: &self.matrix * &first.matrix }
    }

    pub fn apply_vector(&self, eta: &Vector<S>) -> Vector<S> {
        &self.matrix * eta
    }

    pub fn apply(&self, w: &WickWord<S>, fock: &TruncatedFock<S>, cache: &WickCache<S>) -> Result<WickWord<S>> {
        wick_of_vector(&self.apply_vector(w.argument()), fock, cache)
    }

    /// Number of nonzero columns' rank, computed level by level for block-diagonal maps.
    pub fn rank(&self) -> usize {
        let m = linalg::to_c64_mat(&self.matrix);
        m.rank(1e-12)
    }
}

fn check_contraction<S: Field>(l: &Mat<S>, fock: &TruncatedFock<S>, unitaries: &[Mat<S>]) -> Result<()> {
    let d = fock.d();
    if l.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, got: l.nrows() });
    }
    let blocks = fock.block_of();
    for a in 0..d {
        for b in 0..d {
            if blocks[a] != blocks[b] && !l[(a, b)].is_zero() {
                return Err(Error::Precondition(format!("L mixes blocks at ({a}, {b})")));
            }
        }
    }
    for u in unitaries {
        let diff = linalg::max_abs_diff(&(l * u), &(u * l));
        if diff > 1e-12 {
            return Err(Error::Precondition(format!("L does not commute with U_t (residual {diff:.3e})")));
        }
    }
    let g = linalg::to_c64_mat(fock.gram_u());
    let lc = linalg::to_c64_mat(l);
    let ev = linalg::generalized_eigenvalues(&(lc.adjoint() * &g * &lc), &g)?;
    let norm = ev.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    if norm > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("‖L‖ = {norm} exceeds 1")));
    }
    Ok(())
}

/// `Γ(L)(W(ξ_1 ⊗ …)) = W(Lξ_1 ⊗ …)`.
pub fn second_quantize<S: Field>(
    l: &Mat<S>,
    w: &WickWord<S>,
    fock: &TruncatedFock<S>,
    unitaries: &[Mat<S>],
    cache: &WickCache<S>,
) -> Result<WickWord<S>> {
    check_contraction(l, fock, unitaries)?;
    match w.legs() {
        Some(legs) => wick_operator(&legs.map_legs(|x| l * x, fock.block_of())?, fock),
        None => WickSpanMap::second_quantization(l, fock, unitaries)?.apply(w, fock, cache),
    }
}

/// `m_φ(W(ξ)) = φ(n) W(ξ)` on a homogeneous word of level `n`.
pub fn radial_apply<S: Field>(
    symbol: &RadialSymbol<S>,
    w: &WickWord<S>,
    fock: &TruncatedFock<S>,
    cache: &WickCache<S>,
) -> Result<WickWord<S>> {
    match w.level(fock) {
        Some(n) => {
            let c = symbol.value(n);
            let scaled = wick_of_vector(&w.argument().map(|x| x * c.clone()), fock, cache)?;
            Ok(scaled)
        }
        None => WickSpanMap::radial(symbol, fock).apply(w, fock, cache),
    }
}

/// `T_k`: orthogonal projection onto the first `k` generator units (fixed vectors or
/// rotation pairs), so it commutes with `U_t` and respects the blocks.
pub fn coordinate_projection(setup: &HilbertSetup, k: usize) -> Result<Mat<C64>> {
    let units = setup.generator_units();
    if k > units.len() {
        return Err(Error::Domain(format!("k = {k} exceeds the {} generator units", units.len())));
    }
    let mut p = Mat::zeros(setup.dim(), setup.dim());
    for unit in &units[..k] {
        for &a in unit {
            p[(a, a)] = C64::new(1.0, 0.0);
        }
    }
    Ok(p)
}

pub fn full_rank_index(setup: &HilbertSetup) -> usize {
    setup.generator_units().len()
}

#[derive(Clone, Debug)]
pub struct NetElement {
    pub n: usize,
    pub t: f64,
    pub k: usize,
    pub map: WickSpanMap<C64>,
    pub rank: usize,
}

/// `Γ_{n,t,k} = Γ(e^{-t} T_k) B_n`.
pub fn net_element(setup: &HilbertSetup, fock: &TruncatedFock<C64>, n: usize, t: f64, k: usize) -> Result<NetElement> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    if n > fock.n_max() {
        return Err(Error::Cutoff(format!("n = {n} exceeds n_max = {}", fock.n_max())));
    }
    let l = coordinate_projection(setup, k)? * C64::new((-t).exp(), 0.0);
    let gamma = WickSpanMap::second_quantization(&l, fock, &setup.sample_unitaries())?;
    let map = gamma.after(&WickSpanMap::radial(&RadialSymbol::block(n), fock));
    let rank_k: usize = setup.generator_units()[..k].iter().map(|u| u.len()).sum();
    let rank = (0..=n).map(|j| rank_k.pow(j as u32)).sum();
    Ok(NetElement { n, t, k, map, rank })
}

/// `‖Γ_{n,t,k}(x)/ν − x‖_T` measured on vacuum vectors.
pub fn net_pointwise_defect(elem: &NetElement, w: &WickWord<C64>, nu: f64, fock: &TruncatedFock<C64>) -> Result<f64> {
    if !(nu >= 1.0) {
        return Err(Error::Domain(format!("normaliser ν = {nu} must be >= 1")));
    }
    let xi = w.argument();
    let diff = elem.map.apply_vector(xi) / C64::new(nu, 0.0) - xi;
    fock.norm(&diff)
}

/// `Σ_{k>n} e^{-kt} k²`, summed directly with a geometric remainder bound.
pub fn tail_series(n: usize, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("tail series diverges for t = {t}")));
    }
    let x = (-t).exp();
    let mut sum = 0.0;
    let mut k = n + 1;
    loop {
        let kf = k as f64;
        let term = x.powf(kf) * kf * kf;
        sum += term;
        let ratio = x * ((kf + 1.0) / kf).powi(2);
        if ratio < 1.0 {
            let remainder = term * ratio / (1.0 - ratio);
            if remainder <= 1e-16 * sum.max(f64::MIN_POSITIVE) {
                return Ok(sum);
            }
        }
        k += 1;
        if k > 100_000_000 {
            return Err(Error::Numerical("tail series did not converge".into()));
        }
    }
}

/// `Σ_{k≥1} k² x^k = x(1+x)/(1−x)³`.
pub fn full_series_closed_form(t: f64) -> f64 {
    let x = (-t).exp();
    x * (1.0 + x) / (1.0 - x).powi(3)
}

/// A lower bound for `‖id_{M_N} ⊗ Φ‖` with the matrix amplitudes that attain it.
#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub value: f64,
    /// `C_w ∈ M_N` for each basis word `w`: the witness is `Σ_w C_w ⊗ W(e_w)`.
    pub witness: Vec<Mat<C64>>,
}

/// Whitened Wick basis: `L* W(e_w) L^{-*}` so operator norms become spectral norms.
pub struct WhitenedBasis {
    ops: Vec<Mat<C64>>,
    dim: usize,
}

impl WhitenedBasis {
    pub fn new(fock: &TruncatedFock<C64>, cache: &WickCache<C64>) -> Result<Self> {
        let l = fock.full_cholesky()?;
        let li = linalg::lower_inverse(&l)?;
        let lh = l.adjoint();
        let lih = li.adjoint();
        let ops = (0..fock.dim())
            .map(|i| Ok(&lh * cache.basis_word(i, fock)?.operator().matrix() * &lih))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ops, dim: fock.dim() })
    }

    /// Images `Φ(W(e_w)) = Σ_v M_{vw} W(e_v)` in the same whitened frame.
    fn mapped(&self, map: &WickSpanMap<C64>) -> Vec<Mat<C64>> {
        (0..self.dim)
            .map(|w| {
                let mut acc = Mat::zeros(self.dim, self.dim);
                for v in 0..self.dim {
                    let c = map.matrix()[(v, w)];
                    if c != C64::new(0.0, 0.0) {
                        acc += &self.ops[v] * c;
                    }
                }
                acc
            })
            .collect()
    }
}

fn amplify(coeffs: &[Mat<C64>], ops: &[Mat<C64>], n: usize, dim: usize) -> Mat<C64> {
    let mut x = Mat::zeros(n * dim, n * dim);
    for (c, op) in coeffs.iter().zip(ops) {
        for i in 0..n {
            for j in 0..n {
                let cij = c[(i, j)];
                if cij != C64::new(0.0, 0.0) {
                    let mut view = x.view_mut((i * dim, j * dim), (dim, dim));
                    view += op * cij;
                }
            }
        }
    }
    x
}

/// Largest singular value, from a full SVD.
fn spectral_radius_exact(x: &Mat<C64>) -> f64 {
    x.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Top singular triple by power iteration on `x* x`, warm-started from `v0`. Used inside
/// the search only; reported values come from [`spectral_radius_exact`].
fn top_singular(x: &Mat<C64>, v0: Option<&Vector<C64>>) -> (f64, Vector<C64>, Vector<C64>) {
    let n = x.ncols();
    let mut v = match v0 {
        Some(v) if v.len() == n => v.clone(),
        _ => Vector::from_fn(n, |i, _| C64::new(1.0 + 0.37 * (i as f64).sin(), 0.11 * (i as f64).cos())),
    };
    v /= C64::new(v.norm().max(1e-300), 0.0);
    let xh = x.adjoint();
    let mut sigma = 0.0;
    let mut u = x * &v;
    for _ in 0..80 {
        u = x * &v;
        let s_new = u.norm();
        if !(s_new > 1e-300) {
            return (0.0, u, v);
        }
        u /= C64::new(s_new, 0.0);
        v = &xh * &u;
        let nv = v.norm();
        v /= C64::new(nv.max(1e-300), 0.0);
        let done = (s_new - sigma).abs() <= 1e-10 * s_new;
        sigma = s_new;
        if done {
            break;
        }
    }
    (sigma, u, v)
}

/// `∂σ/∂c` for every amplitude `c = C_w[i,j]`, as `u_i* B_w v_j`.
fn singular_gradient(u: &Vector<C64>, v: &Vector<C64>, ops: &[Mat<C64>], n: usize, dim: usize) -> Vec<Mat<C64>> {
    ops.iter()
        .map(|op| {
            Mat::from_fn(n, n, |i, j| {
                let ui = u.rows(i * dim, dim);
                let vj = v.rows(j * dim, dim);
                (ui.adjoint() * op * vj)[(0, 0)]
            })
        })
        .collect()
}

struct Ratio {
    value: f64,
    grad: Vec<Mat<C64>>,
    vx: Vector<C64>,
    vy: Vector<C64>,
}

struct Problem<'a> {
    base: &'a [Mat<C64>],
    image: &'a [Mat<C64>],
    n: usize,
    dim: usize,
}

impl Problem<'_> {
    fn exact(&self, coeffs: &[Mat<C64>]) -> Option<f64> {
        let sx = spectral_radius_exact(&amplify(coeffs, self.base, self.n, self.dim));
        if !(sx > 1e-300) {
            return None;
        }
        Some(spectral_radius_exact(&amplify(coeffs, self.image, self.n, self.dim)) / sx)
    }

    fn evaluate(&self, coeffs: &[Mat<C64>], warm: Option<&Ratio>) -> Option<Ratio> {
        let (sx, ux, vx) = top_singular(&amplify(coeffs, self.base, self.n, self.dim), warm.map(|r| &r.vx));
        if !(sx > 1e-300) {
            return None;
        }
        let (sy, uy, vy) = top_singular(&amplify(coeffs, self.image, self.n, self.dim), warm.map(|r| &r.vy));
        let gx = singular_gradient(&ux, &vx, self.base, self.n, self.dim);
        let gy = singular_gradient(&uy, &vy, self.image, self.n, self.dim);
        // Ascent direction for log σ_Y − log σ_X.
        let grad = gx
            .iter()
            .zip(&gy)
            .map(|(a, b)| b.map(|z| z.conj()) / C64::new(sy.max(1e-300), 0.0) - a.map(|z| z.conj()) / C64::new(sx, 0.0))
            .collect();
        Some(Ratio { value: sy / sx, grad, vx, vy })
    }

    /// Ascent on `‖(id ⊗ Φ)(X)‖ / ‖X‖` from a start point.
    fn climb(&self, start: Vec<Mat<C64>>, iters: usize) -> Vec<Mat<C64>> {
        let mut cur = start;
        let Some(mut r) = self.evaluate(&cur, None) else {
            return cur;
        };
        let mut step = 0.5;
        for _ in 0..iters {
            let scale = coeff_norm(&cur) / coeff_norm(&r.grad).max(1e-300);
            let mut improved = false;
            for _ in 0..8 {
                let cand: Vec<Mat<C64>> =
                    cur.iter().zip(&r.grad).map(|(c, g)| c + g * C64::new(step * scale, 0.0)).collect();
                if let Some(rc) = self.evaluate(&cand, Some(&r)) {
                    if rc.value > r.value * (1.0 + 1e-9) {
                        cur = cand;
                        r = rc;
                        step = (step * 2.0).min(1.0);
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        cur
    }
}

fn coeff_norm(c: &[Mat<C64>]) -> f64 {
    c.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn random_coeffs(rng: &mut ChaCha8Rng, count: usize, n: usize) -> Vec<Mat<C64>> {
    (0..count)
        .map(|_| Mat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect()
}

pub struct EstimatorSettings {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self { restarts: 3, iterations: 25 }
    }
}

/// Randomised lower bound for `‖id_{M_N} ⊗ Φ‖` on the truncated Wick span with the
/// `G_T` operator norm. Every candidate witness is scored with a full SVD. A witness
/// from a smaller `N` is embedded as a warm start, so feeding each result into the
/// next `N` gives a non-decreasing sequence.
pub fn amplified_norm_estimate(
    map: &WickSpanMap<C64>,
    basis: &WhitenedBasis,
    n_amp: usize,
    seed: u64,
    warm: Option<&NormEstimate>,
    settings: &EstimatorSettings,
) -> Result<NormEstimate> {
    if n_amp == 0 || n_amp > 4 {
        return Err(Error::Domain(format!("amplification N = {n_amp} must lie in 1..=4")));
    }
    if map.matrix().shape() != (basis.dim, basis.dim) {
        return Err(Error::DimensionMismatch { expected: basis.dim, got: map.matrix().nrows() });
    }
    let dim = basis.dim;
    let image = basis.mapped(map);
    let problem = Problem { base: &basis.ops, image: &image, n: n_amp, dim };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n_amp as u64) << 32));
    let mut best: Option<(f64, Vec<Mat<C64>>)> = None;
    let mut consider = |c: Vec<Mat<C64>>, known: Option<f64>| {
        if let Some(v) = known.or_else(|| problem.exact(&c)) {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, c));
            }
        }
    };
    if let Some(w) = warm {
        let padded: Vec<Mat<C64>> = w
            .witness
            .iter()
            .map(|c| {
                let mut m = Mat::zeros(n_amp, n_amp);
                let k = c.nrows().min(n_amp);
                m.view_mut((0, 0), (k, k)).copy_from(&c.view((0, 0), (k, k)));
                m
            })
            .collect();
        // Padding with zeros leaves both norms unchanged, so the previous value carries over.
        consider(padded.clone(), Some(w.value));
        consider(problem.climb(padded, settings.iterations), None);
    }
    // The unit `1 ⊗ W(Ω)` and each single basis word are cheap deterministic probes; with a
    // warm start they add nothing, since `1_N ⊗ W(e_w)` has the same ratio at every `N`.
    let probes = if warm.is_some() { 0 } else { dim };
    for w in 0..probes {
        let mut c = vec![Mat::zeros(n_amp, n_amp); dim];
        c[w] = Mat::identity(n_amp, n_amp);
        consider(c, None);
    }
    for _ in 0..settings.restarts {
        let start = random_coeffs(&mut rng, dim, n_amp);
        consider(problem.climb(start, settings.iterations), None);
    }
    let (value, witness) = best.ok_or_else(|| Error::Numerical("no admissible witness".into()))?;
    Ok(NormEstimate { value, witness })
}

/// Estimates for `N = 1..=n_upto`, each warm-started from the previous witness.
pub fn amplified_norm_profile(
    map: &WickSpanMap<C64>,
    basis: &WhitenedBasis,
    n_upto: usize,
    seed: u64,
    settings: &EstimatorSettings,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_upto);
    let mut prev: Option<NormEstimate> = None;
    for n in 1..=n_upto {
        let est = amplified_norm_estimate(map, basis, n, seed, prev.as_ref(), settings)?;
        out.push(est.value);
        prev = Some(est);
    }
    Ok(out)
}

/// `ν = max(1, estimate at N = 2)`.
pub fn norm_surrogate(elem: &NetElement, basis: &WhitenedBasis, seed: u64) -> Result<f64> {
    let settings = EstimatorSettings::default();
    let profile = amplified_norm_profile(&elem.map, basis, 2, seed, &settings)?;
    Ok(profile[1].max(1.0))
}

/// Smallest spectral value of `Φ(y* y)` (a `G_T`-self-adjoint matrix).
pub fn image_min_eigenvalue(
    map: &WickSpanMap<C64>,
    y: &WickWord<C64>,
    fock: &TruncatedFock<C64>,
    cache: &WickCache<C64>,
) -> Result<f64> {
    let adj: FockOp<C64> = y.operator().adjoint(fock)?;
    let x_vac = adj.apply(&TruncatedVector::exact(fock, y.argument().clone())?)?;
    if !x_vac.is_exact(fock.n_max()) {
        return Err(Error::Cutoff("y* y Ω leaves the truncation".into()));
    }
    let image = wick_of_vector(&map.apply_vector(&x_vac.coeffs), fock, cache)?;
    let g = fock.full_gram();
    let ev = linalg::generalized_eigenvalues(&(&g * image.operator().matrix()), &g)?;
    Ok(ev[0])
}
