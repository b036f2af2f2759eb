//! Pair partitions, crossings, set partitions, index splittings and reduced words.
//!
//! All positions are 0-based; `Display` prints 1-based pairs for humans.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::DeformationMatrix;
use crate::scalar::Field;

pub const MAX_PAIRING_LENGTH: usize = 12;

/// A pairing of `{0, .., l-1}`; pairs are `(i, j)` with `i < j`, sorted by `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairPartition {
    len: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    pub fn new(len: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.len() * 2 != len {
            return Err(Error::Domain(format!("{} pairs cannot cover {len} points", pairs.len())));
        }
        let mut seen = vec![false; len];
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        for &(a, b) in &pairs {
            if a == b || b >= len || seen[a] || seen[b] {
                return Err(Error::Domain(format!("({a}, {b}) is not a valid pair")));
            }
            seen[a] = true;
            seen[b] = true;
        }
        pairs.sort_unstable();
        Ok(Self { len, pairs })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Index pairs `(r, s)` of pairs with `i(r) < i(s) < j(r) < j(s)`.
    pub fn crossing_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, &(ir, jr)) in self.pairs.iter().enumerate() {
            for (s, &(is, js)) in self.pairs.iter().enumerate() {
                if ir < is && is < jr && jr < js {
                    out.push((r, s));
                }
            }
        }
        out
    }

    pub fn crossing_number(&self) -> usize {
        self.crossing_pairs().len()
    }

    pub fn to_set_partition(&self) -> SetPartition {
        SetPartition::from_blocks(self.len, self.pairs.iter().map(|&(a, b)| vec![a, b]).collect())
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "({},{})", a + 1, b + 1)?;
        }
        write!(f, "}}")
    }
}

/// All pairings of `l` points in canonical order. `l = 0` yields the empty pairing.
pub fn enumerate_pair_partitions(l: usize) -> Result<Vec<PairPartition>> {
    if l % 2 == 1 {
        return Err(Error::Domain(format!("no pair partitions of an odd set (l = {l})")));
    }
    if l > MAX_PAIRING_LENGTH {
        return Err(Error::SizeLimit(format!("pairings of l = {l} > {MAX_PAIRING_LENGTH} points")));
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(l / 2);
    let mut used = vec![false; l];
    pair_up(&mut used, &mut current, &mut out);
    Ok(out
        .into_iter()
        .map(|pairs| PairPartition { len: l, pairs })
        .collect())
}

fn pair_up(used: &mut [bool], current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    let Some(first) = used.iter().position(|u| !u) else {
        out.push(current.clone());
        return;
    };
    used[first] = true;
    for partner in first + 1..used.len() {
        if used[partner] {
            continue;
        }
        used[partner] = true;
        current.push((first, partner));
        pair_up(used, current, out);
        current.pop();
        used[partner] = false;
    }
    used[first] = false;
}

/// `(2k-1)!!` for `l = 2k`.
pub fn pairing_count(l: usize) -> usize {
    if l % 2 == 1 {
        return 0;
    }
    (1..l).step_by(2).product::<usize>().max(1)
}

/// `g_ν = Π_{crossing (r,s)} q(t_{i(r)}, t_{j(s)})` for an arbitrary coupling `q`.
pub fn g_coefficient_by<S: Field>(
    nu: &PairPartition,
    labels: &[usize],
    q: impl Fn(usize, usize) -> S,
) -> S {
    let pairs = nu.pairs();
    let mut acc = S::one();
    for (r, s) in nu.crossing_pairs() {
        acc *= q(labels[pairs[r].0], labels[pairs[s].1]);
    }
    acc
}

pub fn g_coefficient<S: Field>(
    nu: &PairPartition,
    labels: &[usize],
    q: &DeformationMatrix<S>,
) -> Result<S> {
    if labels.len() != nu.len() {
        return Err(Error::DimensionMismatch { expected: nu.len(), got: labels.len() });
    }
    if let Some(&bad) = labels.iter().find(|&&t| t >= q.n_blocks()) {
        return Err(Error::Domain(format!("block label {bad} out of range")));
    }
    Ok(g_coefficient_by(nu, labels, |a, b| q.entry(a, b).clone()))
}

/// A partition of `{0, .., l-1}` in canonical form: elements sorted within blocks,
/// blocks ordered by their least element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetPartition {
    len: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn from_blocks(len: usize, blocks: Vec<Vec<usize>>) -> Self {
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort_unstable_by_key(|b| b[0]);
        Self { len, blocks }
    }

    /// Kernel of a multi-index: `r ~ s` iff `k_r = k_s`.
    pub fn kernel<T: PartialEq>(k: &[T]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut reps: Vec<usize> = Vec::new();
        for (r, value) in k.iter().enumerate() {
            match reps.iter().position(|&rep| k[rep] == *value) {
                Some(b) => blocks[b].push(r),
                None => {
                    reps.push(r);
                    blocks.push(vec![r]);
                }
            }
        }
        Self { len: k.len(), blocks }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of each point.
    pub fn block_index(&self) -> Vec<usize> {
        let mut idx = vec![0; self.len];
        for (b, block) in self.blocks.iter().enumerate() {
            for &x in block {
                idx[x] = b;
            }
        }
        idx
    }

    /// Finest partition coarser than both (`ν ∨ ν'`).
    pub fn join(&self, other: &SetPartition) -> Result<SetPartition> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch { expected: self.len, got: other.len });
        }
        let mut parent: Vec<usize> = (0..self.len).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut y = x;
            while parent[y] != r {
                let next = parent[y];
                parent[y] = r;
                y = next;
            }
            r
        }
        for block in self.blocks.iter().chain(other.blocks.iter()) {
            for w in block.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a.max(b)] = a.min(b);
            }
        }
        let roots: Vec<usize> = (0..self.len).map(|x| find(&mut parent, x)).collect();
        Ok(SetPartition::kernel(&roots))
    }

    /// Every block of `self` lies inside a block of `other`.
    pub fn is_finer_than(&self, other: &SetPartition) -> bool {
        if self.len != other.len {
            return false;
        }
        let idx = other.block_index();
        self.blocks.iter().all(|b| b.iter().all(|&x| idx[x] == idx[b[0]]))
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            let inner: Vec<String> = b.iter().map(|x| (x + 1).to_string()).collect();
            write!(f, "{{{}}}", inner.join(","))?;
        }
        write!(f, "}}")
    }
}

/// All increasing `k`-subsets of `{0, .., n-1}` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

pub fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    (0..n).filter(|x| !subset.contains(x)).collect()
}

/// `f_{(I,J)} = Π_{i ∈ I, j ∈ J, i > j} q(t_i, t_j)`.
pub fn f_coefficient_by<S: Field>(
    i_set: &[usize],
    j_set: &[usize],
    labels: &[usize],
    q: impl Fn(usize, usize) -> S,
) -> S {
    let mut acc = S::one();
    for &i in i_set {
        for &j in j_set {
            if i > j {
                acc *= q(labels[i], labels[j]);
            }
        }
    }
    acc
}

/// A permutation in one-line notation: `p[x] = σ(x)`.
pub type Permutation = Vec<usize>;

pub fn identity_permutation(n: usize) -> Permutation {
    (0..n).collect()
}

/// All permutations of `n` points, lexicographic.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut p = identity_permutation(n);
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]).map(|i| i - 1) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("successor exists");
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

pub fn inversions(p: &[usize]) -> usize {
    let mut c = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                c += 1;
            }
        }
    }
    c
}

/// The permutation `τ_{a_1} ∘ … ∘ τ_{a_r}` where `τ_a` swaps `a` and `a+1`.
pub fn compose_word(n: usize, word: &[usize]) -> Result<Permutation> {
    let mut p = identity_permutation(n);
    for &a in word {
        if a + 1 >= n {
            return Err(Error::Domain(format!("generator τ_{a} outside S_{n}")));
        }
        p.swap(a, a + 1);
    }
    Ok(p)
}

fn check_permutation(p: &[usize]) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return Err(Error::Domain(format!("{p:?} is not a permutation")));
        }
        seen[x] = true;
    }
    Ok(())
}

/// A reduced word for `σ`, found by bubble sort; its length is the inversion count.
pub fn reduced_word(p: &[usize]) -> Result<Vec<usize>> {
    check_permutation(p)?;
    let mut p = p.to_vec();
    let mut record = Vec::new();
    loop {
        let Some(i) = (0..p.len().saturating_sub(1)).find(|&i| p[i] > p[i + 1]) else {
            break;
        };
        p.swap(i, i + 1);
        record.push(i);
    }
    record.reverse();
    Ok(record)
}

/// Every reduced word of `σ`.
pub fn all_reduced_words(p: &[usize]) -> Result<Vec<Vec<usize>>> {
    check_permutation(p)?;
    let mut out = Vec::new();
    words_ending_in_descents(&mut p.to_vec(), &mut Vec::new(), &mut out);
    Ok(out)
}

fn words_ending_in_descents(p: &mut Vec<usize>, suffix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let descents: Vec<usize> = (0..p.len().saturating_sub(1)).filter(|&i| p[i] > p[i + 1]).collect();
    if descents.is_empty() {
        out.push(suffix.iter().rev().copied().collect());
        return;
    }
    for i in descents {
        p.swap(i, i + 1);
        suffix.push(i);
        words_ending_in_descents(p, suffix, out);
        suffix.pop();
        p.swap(i, i + 1);
    }
}
