//! Randomised invariants. Configurations are drawn from seeded generators so a failing
//! case shrinks to a single seed.

use proptest::prelude::*;
use qaw_core::approx::{RadialSymbol, WickSpanMap};
use qaw_core::combinatorics::{enumerate_pair_partitions, pairing_count};
use qaw_core::fock::TruncatedFock;
use qaw_core::hilbert::{build_space, DeformationMatrix, HilbertSetup};
use qaw_core::linalg::{max_abs_diff, vec_max_abs_diff, Mat, Vector};
use qaw_core::modular::ModularData;
use qaw_core::moments::{dual_path, MomentSpec};
use qaw_core::sampling::{self, ConfigShape};
use qaw_core::scalar::ratio;
use qaw_core::ultra::{um_moment_closedform, um_moment_enumerate, AuxDeformation, UmSpec};
use qaw_core::wick::{wick_operator, LabeledTensor, WickCache};
use qaw_core::{Rational, C64};
use rand::Rng;

fn setup(seed: u64, max_dim: usize, rotations: f64) -> HilbertSetup {
    let mut rng = sampling::rng(seed);
    let dim = rng.gen_range(1..=max_dim);
    let shape = ConfigShape { dim, n_blocks: rng.gen_range(1..=dim), max_q: 0.9, rotation_probability: rotations };
    build_space(&sampling::space_config(&mut rng, &shape)).unwrap()
}

/// A vector supported on the basis vectors with block label `label`.
fn on_block(rng: &mut impl Rng, block_of: &[usize], label: usize) -> Vector<C64> {
    Vector::from_fn(block_of.len(), |a, _| {
        if block_of[a] == label {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn random_full_vector(rng: &mut impl Rng, fock: &TruncatedFock<C64>, top: usize) -> Vector<C64> {
    Vector::from_fn(fock.dim(), |i, _| {
        if fock.level_of_index(i) <= top {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn braid_relations_hold(seed in any::<u64>()) {
        let f = TruncatedFock::new(&setup(seed, 3, 0.5), 3).unwrap();
        prop_assert!(f.braid_residual() <= 1e-13);
    }

    #[test]
    fn pairings_are_double_factorial(half in 0usize..6) {
        let l = 2 * half;
        let want: usize = (1..=half).map(|k| 2 * k - 1).product();
        prop_assert_eq!(enumerate_pair_partitions(l).unwrap().len(), want);
        prop_assert_eq!(pairing_count(l), want);
    }

    #[test]
    fn creation_and_annihilation_are_adjoint(seed in any::<u64>()) {
        let s = setup(seed, 3, 0.5);
        let f = TruncatedFock::new(&s, 3).unwrap();
        let mut rng = sampling::rng(seed ^ 1);
        let xi = sampling::complex_vector(&mut rng, s.dim());
        let c = f.creation_op(&xi).unwrap();
        let a = f.annihilation_op(&xi).unwrap();
        // Creation out of the top level is cut off, so `u` stays below it.
        let u = random_full_vector(&mut rng, &f, f.n_max() - 1);
        let v = random_full_vector(&mut rng, &f, f.n_max());
        let lhs = f.inner(&(c.matrix() * &u), &v).unwrap();
        let rhs = f.inner(&u, &(a.matrix() * &v)).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn wick_words_are_multilinear(seed in any::<u64>(), n in 1usize..=3, slot in 0usize..3) {
        let s = setup(seed, 3, 0.5);
        let f = TruncatedFock::new(&s, 3).unwrap();
        let slot = slot % n;
        let mut rng = sampling::rng(seed ^ 2);
        let labels: Vec<usize> = (0..n).map(|_| s.block_of()[rng.gen_range(0..s.dim())]).collect();
        let legs: Vec<Vector<C64>> = labels.iter().map(|&t| on_block(&mut rng, s.block_of(), t)).collect();
        let other = on_block(&mut rng, s.block_of(), labels[slot]);
        let c = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let with = |leg: Vector<C64>| {
            let mut l = legs.clone();
            l[slot] = leg;
            wick_operator(&LabeledTensor::new(l, s.block_of()).unwrap(), &f).unwrap().operator().matrix().clone()
        };
        let combined = with(&legs[slot] + &other * c);
        let expected = with(legs[slot].clone()) + with(other) * c;
        prop_assert!(max_abs_diff(&combined, &expected) <= 1e-10 * (1.0 + combined.norm()));
    }

    #[test]
    fn wick_word_creates_its_tensor_from_the_vacuum(seed in any::<u64>(), n in 0usize..=3) {
        let s = setup(seed, 3, 0.5);
        let f = TruncatedFock::new(&s, 3).unwrap();
        let mut rng = sampling::rng(seed ^ 3);
        let legs: Vec<Vector<C64>> = (0..n).map(|_| sampling::block_vector(&mut rng, s.block_of(), false)).collect();
        let w = wick_operator(&LabeledTensor::new(legs.clone(), s.block_of()).unwrap(), &f).unwrap();
        let out = w.apply_vacuum(&f).unwrap();
        let want = f.embed(n, &f.simple_tensor(&legs).unwrap()).unwrap();
        prop_assert!(vec_max_abs_diff(&out.coeffs, &want) <= 1e-10);
    }

    #[test]
    fn moment_paths_agree(seed in any::<u64>(), half in 1usize..=2) {
        let s = setup(seed, 3, 0.5);
        let f = TruncatedFock::new(&s, 2 * half).unwrap();
        let mut rng = sampling::rng(seed ^ 4);
        let vs = (0..2 * half).map(|_| sampling::block_vector(&mut rng, s.block_of(), true)).collect();
        let spec = MomentSpec::new(vs, s.block_of()).unwrap();
        prop_assert!(dual_path(&spec, &f, &WickCache::new(), 1e-9).is_ok());
    }

    #[test]
    fn tomita_operator_is_an_involution(seed in any::<u64>()) {
        let s = setup(seed, 3, 0.8);
        let f = TruncatedFock::new(&s, 3).unwrap();
        let md = ModularData::new(&s, &f).unwrap();
        let mut rng = sampling::rng(seed ^ 5);
        let v = random_full_vector(&mut rng, &f, f.n_max());
        let back = md.s_apply(&md.s_apply(&v).unwrap()).unwrap();
        prop_assert!(vec_max_abs_diff(&back, &v) <= 1e-9 * (1.0 + v.norm()));
    }

    #[test]
    fn ultra_enumeration_matches_closed_form(
        seed in any::<u64>(),
        half in 1usize..=3,
        m in 1usize..=5,
        qn in -4i64..=4,
        qtn in -4i64..=4,
    ) {
        let mut rng = sampling::rng(seed);
        let l = 2 * half;
        let d = 2;
        let vs = (0..l).map(|_| sampling::rational_vector(&mut rng, d, 3, 2)).collect();
        let word = MomentSpec::new(vs, &[0, 0]).unwrap();
        let gram = Mat::from_row_slice(2, 2, &[ratio(2, 1), ratio(1, 3), ratio(1, 3), ratio(1, 1)]);
        let spec = UmSpec { m, word, gram_u: gram, q: ratio(qn, 5), q_tilde: AuxDeformation::Uniform(ratio(qtn, 5)) };
        prop_assert_eq!(um_moment_enumerate(&spec).unwrap(), um_moment_closedform(&spec).unwrap());
    }
}

fn exact_fock() -> TruncatedFock<Rational> {
    let q = DeformationMatrix::from_matrix(Mat::from_row_slice(2, 2, &[ratio(1, 2), ratio(-1, 3), ratio(-1, 3), ratio(1, 4)]))
        .unwrap();
    TruncatedFock::tracial_exact(vec![0, 1], q, 3).unwrap()
}

proptest! {
    #[test]
    fn radial_projections_are_orthogonal(n in 0usize..=3, k in 0usize..=3) {
        let f = exact_fock();
        let fnm = WickSpanMap::radial(&RadialSymbol::kronecker(n), &f);
        let fk = WickSpanMap::radial(&RadialSymbol::kronecker(k), &f);
        let prod = fnm.after(&fk);
        if n == k {
            prop_assert_eq!(prod, fnm);
        } else {
            prop_assert!(prod.matrix().iter().all(|x| *x == ratio(0, 1)));
        }
    }

    #[test]
    fn block_cutoffs_sum_projections(n in 0usize..=3) {
        let f = exact_fock();
        let mut sum = Mat::<Rational>::zeros(f.dim(), f.dim());
        for k in 0..=n {
            sum += WickSpanMap::radial(&RadialSymbol::kronecker(k), &f).matrix();
        }
        prop_assert_eq!(&sum, &WickSpanMap::radial(&RadialSymbol::block(n), &f).matrix().clone());
        if n == f.n_max() {
            prop_assert_eq!(&sum, &WickSpanMap::identity(&f).matrix().clone());
        }
    }
}
