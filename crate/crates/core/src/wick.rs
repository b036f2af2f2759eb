//! Wick operators: `W(ξ)` is the unique element of the algebra with `W(ξ)Ω = ξ`,
//!
//! `W(ξ_1 ⊗ … ⊗ ξ_n) = Σ_k Σ_{|J|=k} f_{(J^c,J)} l(ξ_{J^c}) l*(𝒥ξ_{j(1)}) ⋯ l*(𝒥ξ_{j(k)})`.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hasher};
use std::sync::{Arc, Mutex};

use crate::combinatorics::{complement, f_coefficient_by, subsets};
use crate::error::{Error, Result};
use crate::fock::{FockOp, TruncatedFock, TruncatedVector};
use crate::hilbert::support_block;
use crate::linalg::{conj_vec, sesquilinear, Mat, Vector};
use crate::scalar::Field;

/// A simple tensor whose legs each lie in one block.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledTensor<S: Field> {
    legs: Vec<Vector<S>>,
    labels: Vec<usize>,
}

impl<S: Field> LabeledTensor<S> {
    pub fn new(legs: Vec<Vector<S>>, block_of: &[usize]) -> Result<Self> {
        let mut labels = Vec::with_capacity(legs.len());
        for (index, leg) in legs.iter().enumerate() {
            let label = support_block(leg, block_of).map_err(|e| match e {
                Error::Domain(_) => Error::MixedBlockLeg { index },
                other => other,
            })?;
            // A zero leg makes the whole word vanish; any label will do.
            labels.push(label.unwrap_or(0));
        }
        Ok(Self { legs, labels })
    }

    pub fn legs(&self) -> &[Vector<S>] {
        &self.legs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    pub fn map_legs(&self, f: impl Fn(&Vector<S>) -> Vector<S>, block_of: &[usize]) -> Result<Self> {
        Self::new(self.legs.iter().map(f).collect(), block_of)
    }

    /// Drop the legs at the given positions.
    pub fn without(&self, drop: &[usize]) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|i| !drop.contains(i)).collect();
        Self {
            legs: keep.iter().map(|&i| self.legs[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn key(&self, fock_id: u64) -> u64 {
        let mut h = DefaultHasher::new();
        h.write_u64(fock_id);
        h.write_usize(self.legs.len());
        for leg in &self.legs {
            for x in leg.iter() {
                x.hash_into(&mut h);
            }
        }
        h.finish()
    }
}

/// A Wick operator together with its vacuum vector.
#[derive(Clone, Debug)]
pub struct WickWord<S: Field> {
    argument: Vector<S>,
    legs: Option<LabeledTensor<S>>,
    operator: FockOp<S>,
}

impl<S: Field> WickWord<S> {
    /// `W(ξ)Ω` as a full-space vector.
    pub fn argument(&self) -> &Vector<S> {
        &self.argument
    }

    pub fn legs(&self) -> Option<&LabeledTensor<S>> {
        self.legs.as_ref()
    }

    pub fn operator(&self) -> &FockOp<S> {
        &self.operator
    }

    /// The homogeneous level of the argument; `None` when mixed or zero.
    pub fn level(&self, fock: &TruncatedFock<S>) -> Option<usize> {
        let mut level = None;
        for (i, x) in self.argument.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let n = fock.level_of_index(i);
            match level {
                None => level = Some(n),
                Some(m) if m != n => return None,
                _ => {}
            }
        }
        level
    }

    pub fn apply_vacuum(&self, fock: &TruncatedFock<S>) -> Result<TruncatedVector<S>> {
        self.operator.apply(&TruncatedVector::vacuum(fock))
    }
}

fn check_tensor<S: Field>(tensor: &LabeledTensor<S>, fock: &TruncatedFock<S>) -> Result<()> {
    if tensor.len() > fock.n_max() {
        return Err(Error::Cutoff(format!(
            "Wick word of level {} exceeds n_max = {}",
            tensor.len(),
            fock.n_max()
        )));
    }
    for leg in tensor.legs() {
        fock.check_vector(leg)?;
    }
    Ok(())
}

fn wick_matrix<S: Field>(tensor: &LabeledTensor<S>, fock: &TruncatedFock<S>) -> Result<Mat<S>> {
    let n = tensor.len();
    let n_max = fock.n_max();
    let legs = tensor.legs();
    let conj_legs: Vec<Vector<S>> = legs.iter().map(conj_vec).collect();
    let q = fock.deformation();
    let mut blocks = Vec::new();
    for m in 0..=n_max {
        for k in 0..=n.min(m) {
            let out = m + n - 2 * k;
            if out > n_max {
                continue;
            }
            let mut block = Mat::<S>::zeros(fock.level_dim(out), fock.level_dim(m));
            for j_set in subsets(n, k) {
                let i_set = complement(n, &j_set);
                let f = f_coefficient_by(&i_set, &j_set, tensor.labels(), |a, b| q.entry(a, b).clone());
                if f.is_zero() {
                    continue;
                }
                // Annihilators act right to left: l*(𝒥ξ_{j(k)}) first.
                let mut chain = Mat::<S>::identity(fock.level_dim(m), fock.level_dim(m));
                let mut level = m;
                for &j in j_set.iter().rev() {
                    chain = fock.annihilation(&conj_legs[j], level)? * chain;
                    level -= 1;
                }
                for &i in i_set.iter().rev() {
                    chain = fock.creation(&legs[i], level)? * chain;
                    level += 1;
                }
                block += chain * f;
            }
            blocks.push((m, out, block));
        }
    }
    Ok(fock.assemble(&blocks))
}

/// `W(ξ_1 ⊗ … ⊗ ξ_n)` for a simple tensor with single-block legs.
pub fn wick_operator<S: Field>(tensor: &LabeledTensor<S>, fock: &TruncatedFock<S>) -> Result<WickWord<S>> {
    check_tensor(tensor, fock)?;
    let n = tensor.len() as isize;
    let operator = FockOp::compression(wick_matrix(tensor, fock)?, -n, n, fock.n_max());
    let argument = fock.embed(tensor.len(), &fock.simple_tensor(tensor.legs())?)?;
    Ok(WickWord { argument, legs: Some(tensor.clone()), operator })
}

/// `l(ξ) + l*(ξ)` for any `ξ ∈ H` (for real `ξ` this is the field `s(ξ)`).
pub fn field_operator<S: Field>(xi: &Vector<S>, fock: &TruncatedFock<S>) -> Result<FockOp<S>> {
    Ok(fock.creation_op(xi)?.add(&fock.annihilation_op(xi)?))
}

/// The field `s(ξ) = W(ξ)` of a real vector.
pub fn field<S: Field>(xi: &Vector<S>, fock: &TruncatedFock<S>) -> Result<WickWord<S>> {
    fock.check_vector(xi)?;
    if xi.iter().any(|x| !x.is_real()) {
        return Err(Error::Domain("field s(ξ) needs a real vector".into()));
    }
    let legs = LabeledTensor::new(vec![xi.clone()], fock.block_of()).ok();
    Ok(WickWord {
        argument: fock.embed(1, xi)?,
        legs,
        operator: field_operator(xi, fock)?,
    })
}

/// Memoised Wick operators, keyed by the argument and the Fock space identity.
#[derive(Debug, Default)]
pub struct WickCache<S: Field> {
    map: Mutex<HashMap<u64, Arc<WickWord<S>>>>,
}

impl<S: Field> WickCache<S> {
    pub fn new() -> Self {
        Self { map: Mutex::new(HashMap::new()) }
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, tensor: &LabeledTensor<S>, fock: &TruncatedFock<S>) -> Result<Arc<WickWord<S>>> {
        let key = tensor.key(fock.id());
        if let Some(w) = self.map.lock().expect("cache lock").get(&key) {
            if w.legs.as_ref() == Some(tensor) {
                return Ok(Arc::clone(w));
            }
        }
        let w = Arc::new(wick_operator(tensor, fock)?);
        self.map.lock().expect("cache lock").insert(key, Arc::clone(&w));
        Ok(w)
    }

    /// `W(e_w)` for the basis word with full-space index `index`.
    pub fn basis_word(&self, index: usize, fock: &TruncatedFock<S>) -> Result<Arc<WickWord<S>>> {
        let n = fock.level_of_index(index);
        let word = fock.word(n, index - fock.offset(n));
        let legs = word
            .iter()
            .map(|&a| {
                let mut e = Vector::<S>::zeros(fock.d());
                e[a] = S::one();
                e
            })
            .collect();
        self.get(&LabeledTensor::new(legs, fock.block_of())?, fock)
    }
}

/// `W(η) = Σ_w η_w W(e_w)` for an arbitrary full-space vector `η`.
pub fn wick_of_vector<S: Field>(
    eta: &Vector<S>,
    fock: &TruncatedFock<S>,
    cache: &WickCache<S>,
) -> Result<WickWord<S>> {
    if eta.len() != fock.dim() {
        return Err(Error::DimensionMismatch { expected: fock.dim(), got: eta.len() });
    }
    let mut operator: Option<FockOp<S>> = None;
    for (i, c) in eta.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let term = cache.basis_word(i, fock)?.operator.scale(c.clone());
        operator = Some(match operator {
            None => term,
            Some(acc) => acc.add(&term),
        });
    }
    let operator = operator.unwrap_or_else(|| {
        FockOp::compression(Mat::zeros(fock.dim(), fock.dim()), 0, 0, fock.n_max())
    });
    Ok(WickWord { argument: eta.clone(), legs: None, operator })
}

/// Residual of
/// `W(ξ_0 ⊗ R) = W(ξ_0) W(R) − Σ_{i≥1} ⟨𝒥ξ_0, ξ_i⟩_U Π_{1≤j<i} q(t_i, t_j) W(R without ξ_i)`
/// with `R = ξ_1 ⊗ … ⊗ ξ_l`, on the columns where every term is exact.
pub fn wick_recursion_residual<S: Field>(
    tensor: &LabeledTensor<S>,
    fock: &TruncatedFock<S>,
    cache: &WickCache<S>,
) -> Result<f64> {
    let total = tensor.len();
    if total == 0 {
        return Err(Error::Domain("recursion needs at least one leg".into()));
    }
    if total > fock.n_max() {
        return Err(Error::Cutoff(format!("{total} legs exceed n_max = {}", fock.n_max())));
    }
    let q = fock.deformation();
    let labels = tensor.labels();
    let first = tensor.without(&(1..total).collect::<Vec<_>>());
    let rest = tensor.without(&[0]);
    let lhs = cache.get(tensor, fock)?;
    let mut rhs = cache.get(&first, fock)?.operator.compose(&cache.get(&rest, fock)?.operator);
    let xi0 = conj_vec(&tensor.legs()[0]);
    for i in 1..total {
        let mut c = sesquilinear(&xi0, fock.gram_u(), &tensor.legs()[i]);
        for j in 1..i {
            c *= q.entry(labels[i], labels[j]).clone();
        }
        if c.is_zero() {
            continue;
        }
        let reduced = tensor.without(&[0, i]);
        rhs = rhs.sub(&cache.get(&reduced, fock)?.operator.scale(c));
    }
    lhs.operator.exact_difference(&rhs, fock)
}
