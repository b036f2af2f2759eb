//! Run configuration: TOML schema, defaults, consolidated validation and hashing.

use std::path::PathBuf;

use qaw_core::fock::size_violations;
use qaw_core::hilbert::{build_space, support_block, DeformationMatrix, HilbertSetup, RotationSpec, SpaceConfig};
use qaw_core::linalg::Vector;
use qaw_core::ultra::{AuxDeformation, MAX_M, MAX_SURROGATE_M, MAX_WORD};
use qaw_core::C64;
use serde::{Deserialize, Serialize};

use crate::report::sha256_hex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Fock,
    Moments,
    Modular,
    Multipliers,
    Ultra,
}

impl Experiment {
    pub const ALL: [Experiment; 5] =
        [Experiment::Fock, Experiment::Moments, Experiment::Modular, Experiment::Multipliers, Experiment::Ultra];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fock => "fock",
            Experiment::Moments => "moments",
            Experiment::Modular => "modular",
            Experiment::Multipliers => "multipliers",
            Experiment::Ultra => "ultra",
        }
    }

    /// Each experiment draws from its own stream, so adding one never shifts another.
    pub fn seed(self, base: u64) -> u64 {
        let tag = self as u64 + 1;
        base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Fock space cutoff.
    pub n_max: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub space: Space,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock: Option<FockParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modular: Option<ModularParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<MultipliersParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ultra: Option<UltraParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Space {
    pub dim: usize,
    pub blocks: Vec<usize>,
    #[serde(default)]
    pub rotations: Vec<RotationSpec>,
    pub q: Vec<Vec<f64>>,
    /// Scalar `q` with `Q = q·Q̃`; must satisfy `max|q_ij| < q < 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
}

impl Space {
    pub fn core(&self) -> SpaceConfig {
        SpaceConfig { dim: self.dim, blocks: self.blocks.clone(), rotations: self.rotations.clone(), q: self.q.clone() }
    }

    pub fn is_tracial(&self) -> bool {
        self.rotations.is_empty()
    }
}

macro_rules! tolerances {
    ($($field:ident = $value:expr),* $(,)?) => {
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct Tolerances {
            $(pub $field: f64,)*
        }

        impl Default for Tolerances {
            fn default() -> Self {
                Self { $($field: $value,)* }
            }
        }

        impl Tolerances {
            pub fn scaled(&self, s: f64) -> Self {
                Self { $($field: self.$field * s,)* }
            }

            fn entries(&self) -> Vec<(&'static str, f64)> {
                vec![$((stringify!($field), self.$field),)*]
            }
        }
    };
}

tolerances! {
    braid = 1e-13,
    positivity = 1e-8,
    adjoint = 1e-10,
    norm_bound = 1e-10,
    wick = 1e-12,
    dual_path = 1e-9,
    polar = 1e-11,
    modular = 1e-10,
    kms = 1e-10,
    flow = 1e-11,
    positivity_margin = 1e-8,
    cb_identity = 1e-12,
    closed_form = 1e-12,
}

/// A word of real vectors in the distinguished basis, each supported on one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Word {
    pub vectors: Vec<Vec<f64>>,
}

impl Word {
    pub fn complex(&self) -> Vec<Vector<C64>> {
        self.vectors.iter().map(|v| Vector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FockParams {
    /// Random vectors for the adjointness, norm-bound and vacuum checks.
    pub samples: usize,
}

impl Default for FockParams {
    fn default() -> Self {
        Self { samples: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsParams {
    /// Random real words in addition to `words`.
    pub random: usize,
    /// Longest random word.
    pub max_length: usize,
    /// Also evaluate configured words by the pairing formula in rational arithmetic
    /// (spaces without rotations only).
    pub exact: bool,
    pub words: Vec<Word>,
}

impl Default for MomentsParams {
    fn default() -> Self {
        Self { random: 10, max_length: 4, exact: true, words: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModularParams {
    /// Random Wick words for `S(W Ω) = W* Ω` and the flow check.
    pub words: usize,
    /// Random Wick-word pairs for the KMS check.
    pub pairs: usize,
    pub times: Vec<f64>,
}

impl Default for ModularParams {
    fn default() -> Self {
        Self { words: 10, pairs: 10, times: vec![0.3, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultipliersParams {
    /// Indices `j` of the net schedule `t_j = 1/j`, `n_j = n_max`, `k_j` = full rank.
    pub schedule: Vec<usize>,
    /// Fixture Wick words for the pointwise defect; empty means one unit vector per
    /// generator unit.
    pub words: Vec<Word>,
    /// Largest matrix amplification `N` for the cb-norm profiles (0 skips them).
    pub amplification: usize,
    /// Random positive inputs for the sampled positivity check.
    pub positivity: usize,
}

impl Default for MultipliersParams {
    fn default() -> Self {
        Self { schedule: vec![1, 2, 5, 10, 20], words: Vec::new(), amplification: 2, positivity: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UltraParams {
    /// Strictly increasing list of `m`.
    pub m: Vec<usize>,
    /// Overrides `space.split`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Uniform auxiliary deformation `q̃`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_tilde: Option<f64>,
    /// Auxiliary deformation matrix, extended by zeros past its size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_tilde_matrix: Option<Vec<Vec<f64>>>,
    /// Cross-check uniform words in rational arithmetic (tracial spaces only).
    pub exact: bool,
    /// Empty means the length-4 word on the first basis vector.
    pub words: Vec<Word>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remainder: Option<RemainderParams>,
}

impl Default for UltraParams {
    fn default() -> Self {
        Self {
            m: (2..=10).collect(),
            q: None,
            q_tilde: None,
            q_tilde_matrix: None,
            exact: true,
            words: Vec::new(),
            remainder: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemainderParams {
    /// Three real vectors `ξ_1, ξ_2, ξ_3`.
    pub xi: Vec<Vec<f64>>,
    #[serde(default = "remainder_ms")]
    pub m: Vec<usize>,
}

fn remainder_ms() -> Vec<usize> {
    (2..=8).collect()
}

/// Resolved `q` and auxiliary deformation for the ultra experiment.
pub struct UltraDeformation {
    pub q: f64,
    pub q_tilde: AuxDeformation<C64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn has(&self, e: Experiment) -> bool {
        match e {
            Experiment::Fock => self.fock.is_some(),
            Experiment::Moments => self.moments.is_some(),
            Experiment::Modular => self.modular.is_some(),
            Experiment::Multipliers => self.multipliers.is_some(),
            Experiment::Ultra => self.ultra.is_some(),
        }
    }

    /// Fills in default parameters for an experiment without a section.
    pub fn ensure(&mut self, e: Experiment) {
        match e {
            Experiment::Fock => {
                self.fock.get_or_insert_with(Default::default);
            }
            Experiment::Moments => {
                self.moments.get_or_insert_with(Default::default);
            }
            Experiment::Modular => {
                self.modular.get_or_insert_with(Default::default);
            }
            Experiment::Multipliers => {
                self.multipliers.get_or_insert_with(Default::default);
            }
            Experiment::Ultra => {
                self.ultra.get_or_insert_with(Default::default);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Digest of the normalized config without the output location.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        sha256_hex(c.to_toml().as_bytes())
    }

    pub fn ultra_deformation(&self) -> Result<UltraDeformation, String> {
        let p = self.ultra.clone().unwrap_or_default();
        let q = p.q.or(self.space.split).ok_or("ultra: needs ultra.q or space.split")?;
        if !(q.abs() < 1.0) {
            return Err(format!("ultra: q = {q} must satisfy |q| < 1"));
        }
        let q_tilde = match (p.q_tilde, &p.q_tilde_matrix) {
            (Some(_), Some(_)) => return Err("ultra: give q_tilde or q_tilde_matrix, not both".into()),
            (Some(t), None) => {
                if !(t.abs() < 1.0) {
                    return Err(format!("ultra: q_tilde = {t} must satisfy |q_tilde| < 1"));
                }
                AuxDeformation::Uniform(C64::new(t, 0.0))
            }
            (None, Some(rows)) => AuxDeformation::Matrix(
                DeformationMatrix::from_real_rows(rows).map_err(|e| format!("ultra: q_tilde_matrix: {e}"))?,
            ),
            (None, None) => {
                if p.q.is_some() && p.q != self.space.split {
                    return Err("ultra: q is set without q_tilde or q_tilde_matrix".into());
                }
                let split = DeformationMatrix::<C64>::from_real_rows(&self.space.q)
                    .and_then(|m| m.split(C64::new(q, 0.0)))
                    .map_err(|e| format!("ultra: {e}"))?;
                let first = *split.tilde.entry(0, 0);
                if split.tilde.matrix().iter().all(|&x| x == first) {
                    AuxDeformation::Uniform(first)
                } else {
                    AuxDeformation::Matrix(split.tilde)
                }
            }
        };
        Ok(UltraDeformation { q, q_tilde })
    }

    /// Every violation of every module precondition, or the built space.
    pub fn validate(&self) -> Result<HilbertSetup, Vec<String>> {
        let mut v = Vec::new();
        v.extend(self.space.core().violations().into_iter().map(|s| format!("space: {s}")));
        if self.n_max == 0 {
            v.push("n_max must be at least 1".into());
        }
        v.extend(size_violations(self.space.dim, self.n_max).into_iter().map(|s| format!("size budget: {s}")));
        if let Some(q) = self.space.split {
            if let Err(e) = DeformationMatrix::<C64>::from_real_rows(&self.space.q).and_then(|m| m.split(C64::new(q, 0.0))) {
                v.push(format!("space.split: {e}"));
            }
        }
        for (name, t) in self.tolerances.entries() {
            if !(t.is_finite() && t > 0.0) {
                v.push(format!("tolerances.{name} = {t} must be positive and finite"));
            }
        }
        let setup = if v.is_empty() {
            match build_space(&self.space.core()) {
                Ok(s) => Some(s),
                Err(e) => {
                    v.push(format!("space: {e}"));
                    None
                }
            }
        } else {
            None
        };
        let block_of = self.space.blocks.clone();
        let dim = self.space.dim;
        let check_word = |v: &mut Vec<String>, at: &str, vectors: &[Vec<f64>]| {
            for (i, x) in vectors.iter().enumerate() {
                if x.len() != dim {
                    v.push(format!("{at}: vector {i} has length {} for dim = {dim}", x.len()));
                } else if x.iter().any(|c| !c.is_finite()) {
                    v.push(format!("{at}: vector {i} has non-finite entries"));
                } else if block_of.len() == dim {
                    let c = Vector::from_iterator(dim, x.iter().map(|&a| C64::new(a, 0.0)));
                    if support_block(&c, &block_of).is_err() {
                        v.push(format!("{at}: vector {i} is not supported on a single block"));
                    }
                }
            }
        };
        if let Some(p) = &self.fock {
            if p.samples == 0 {
                v.push("fock.samples must be at least 1".into());
            }
        }
        if let Some(p) = &self.moments {
            let cap = 2 * self.n_max;
            if p.max_length > cap || p.max_length < 2 {
                v.push(format!("moments.max_length = {} must lie in 2..={cap} (2 n_max)", p.max_length));
            }
            for (i, w) in p.words.iter().enumerate() {
                if w.vectors.is_empty() || w.vectors.len() > cap {
                    v.push(format!("moments.words[{i}]: length {} must lie in 1..={cap} (2 n_max)", w.vectors.len()));
                }
                check_word(&mut v, &format!("moments.words[{i}]"), &w.vectors);
            }
        }
        if let Some(p) = &self.modular {
            if self.n_max < 2 {
                v.push("modular: KMS pairs need n_max >= 2".into());
            }
            if let Some(t) = p.times.iter().find(|t| !t.is_finite()) {
                v.push(format!("modular.times: {t} is not finite"));
            }
        }
        if let Some(p) = &self.multipliers {
            if p.schedule.is_empty() || p.schedule.contains(&0) {
                v.push("multipliers.schedule must be non-empty with every j >= 1".into());
            }
            if p.amplification > 4 {
                v.push(format!("multipliers.amplification = {} must lie in 0..=4", p.amplification));
            }
            for (i, w) in p.words.iter().enumerate() {
                if w.vectors.is_empty() || w.vectors.len() > self.n_max {
                    v.push(format!("multipliers.words[{i}]: length {} must lie in 1..={}", w.vectors.len(), self.n_max));
                }
                check_word(&mut v, &format!("multipliers.words[{i}]"), &w.vectors);
            }
        }
        if let Some(p) = &self.ultra {
            if p.m.is_empty() || p.m.windows(2).any(|w| w[0] >= w[1]) || p.m.iter().any(|&m| m == 0 || m > MAX_M) {
                v.push(format!("ultra.m must be strictly increasing within 1..={MAX_M}"));
            }
            for (i, w) in p.words.iter().enumerate() {
                if w.vectors.is_empty() || w.vectors.len() > MAX_WORD {
                    v.push(format!("ultra.words[{i}]: length {} must lie in 1..={MAX_WORD}", w.vectors.len()));
                }
                check_word(&mut v, &format!("ultra.words[{i}]"), &w.vectors);
            }
            match self.ultra_deformation() {
                Err(e) => v.push(e),
                Ok(UltraDeformation { q_tilde: AuxDeformation::Matrix(m), .. }) => {
                    let used = self.space.blocks.iter().max().map_or(1, |&b| b + 1);
                    if m.n_blocks() < used {
                        v.push(format!("ultra: Q̃ has {} rows but the space uses {used} block labels", m.n_blocks()));
                    }
                }
                Ok(_) => {}
            }
            if let Some(r) = &p.remainder {
                if r.xi.len() != 3 {
                    v.push(format!("ultra.remainder.xi needs 3 vectors, got {}", r.xi.len()));
                }
                for (i, x) in r.xi.iter().enumerate() {
                    if x.len() != dim {
                        v.push(format!("ultra.remainder.xi[{i}] has length {} for dim = {dim}", x.len()));
                    }
                }
                if r.m.is_empty() || r.m.iter().any(|&m| !(2..=MAX_SURROGATE_M).contains(&m)) {
                    v.push(format!("ultra.remainder.m must be non-empty within 2..={MAX_SURROGATE_M}"));
                }
            }
        }
        match setup {
            Some(s) if v.is_empty() => Ok(s),
            _ => Err(v),
        }
    }
}
