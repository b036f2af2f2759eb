//! Vacuum moments by the pairing formula and by products of field matrices.

use qaw_core::fock::TruncatedFock;
use qaw_core::hilbert::DeformationMatrix;
use qaw_core::linalg::{Mat, Vector};
use qaw_core::moments::{moment_matrix, moment_pairings, MomentSpec};
use qaw_core::sampling;
use qaw_core::scalar::decimal;
use qaw_core::wick::WickCache;
use qaw_core::{Field, Rational};
use rand::Rng;
use serde_json::Value;

use super::Context;
use crate::config::Word;
use crate::report::{flag, num, Output, Table};

const NAME: &str = "moments";

/// The pairing value in rational arithmetic, for tracial spaces with decimal entries.
fn exact_pairing(ctx: &Context, word: &Word) -> qaw_core::Result<Option<Rational>> {
    let space = &ctx.config.space;
    if !space.is_tracial() {
        return Ok(None);
    }
    let to_rational = |x: f64| decimal(x).ok_or_else(|| qaw_core::Error::Domain(format!("{x} is not finite")));
    let n = space.q.len();
    let mut q = Mat::<Rational>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = to_rational(space.q[i][j])?;
        }
    }
    let vectors = word
        .vectors
        .iter()
        .map(|v| v.iter().map(|&x| to_rational(x)).collect::<qaw_core::Result<Vec<_>>>().map(Vector::from_vec))
        .collect::<qaw_core::Result<Vec<_>>>()?;
    let spec = MomentSpec::new(vectors, &space.blocks)?;
    let gram = Mat::<Rational>::identity(space.dim, space.dim);
    Ok(Some(moment_pairings(&spec, &DeformationMatrix::from_matrix(q)?, &gram)?))
}

pub fn run(ctx: &Context) -> qaw_core::Result<Output> {
    let p = ctx.config.moments.clone().unwrap_or_default();
    let f = TruncatedFock::new(ctx.setup, ctx.config.n_max)?;
    let cache = WickCache::new();
    let mut rng = sampling::rng(ctx.seed);
    let mut words: Vec<(&str, Word)> = p.words.iter().map(|w| ("config", w.clone())).collect();
    for _ in 0..p.random {
        let l = 2 * rng.gen_range(1..=p.max_length / 2);
        let vectors = (0..l)
            .map(|_| sampling::block_vector(&mut rng, ctx.setup.block_of(), true).iter().map(|z| z.re).collect())
            .collect();
        words.push(("random", Word { vectors }));
    }

    let mut out = Output::default();
    let mut t = Table::new(
        NAME,
        &[
            "word", "source", "length", "labels", "spec_hash", "pairing_re", "pairing_im", "matrix_re", "matrix_im",
            "abs_diff", "exact", "pass",
        ],
    );
    let mut worst: f64 = 0.0;
    for (i, (source, word)) in words.iter().enumerate() {
        let spec = MomentSpec::new(word.complex(), ctx.setup.block_of())?;
        let pairing = moment_pairings(&spec, f.deformation(), f.gram_u())?;
        let matrix = moment_matrix(&spec, &f, &cache)?;
        let diff = (pairing - matrix).norm();
        worst = worst.max(diff);
        let mut ok = diff <= ctx.tol.dual_path * (1.0 + pairing.norm());
        let exact = if p.exact && *source == "config" { exact_pairing(ctx, word)? } else { None };
        if let Some(r) = &exact {
            let gap = (r.to_c64() - pairing).norm();
            if gap > ctx.tol.dual_path * (1.0 + pairing.norm()) {
                ok = false;
                out.fail(
                    NAME,
                    "moments.exact_pairing",
                    format!("word {i}: float pairing {pairing} vs exact {r}"),
                    serde_json::from_str(&spec.to_json()).unwrap_or(Value::Null),
                );
            }
        }
        if diff > ctx.tol.dual_path * (1.0 + pairing.norm()) {
            out.fail(
                NAME,
                "moments.dual_path",
                format!("word {i}: pairing {pairing} vs matrix {matrix}"),
                serde_json::from_str(&spec.to_json()).unwrap_or(Value::Null),
            );
        }
        let labels = spec.labels().iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ");
        t.push(vec![
            i.to_string(),
            source.to_string(),
            spec.len().to_string(),
            labels,
            spec.digest(),
            num(pairing.re),
            num(pairing.im),
            num(matrix.re),
            num(matrix.im),
            num(diff),
            exact.map(|r| r.to_string()).unwrap_or_default(),
            flag(ok),
        ]);
    }
    t.note("words", words.len());
    t.note("max_abs_diff", num(worst));
    t.note("failures", out.failures.len());
    out.tables.push(t);
    Ok(out)
}
