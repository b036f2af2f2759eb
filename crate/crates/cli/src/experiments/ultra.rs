//! Convergence of the finite-`m` moments of `u_m` and the decay of the `D(m)` remainder.

use qaw_core::linalg::{Mat, Vector};
use qaw_core::moments::MomentSpec;
use qaw_core::scalar::decimal;
use qaw_core::ultra::{
    convergence_experiment, d_remainder_sequence, um_moment_closedform, um_moment_enumerate, AuxDeformation, UmSpec,
};
use qaw_core::{Error, Rational, C64};
use serde_json::{json, Value};

use super::Context;
use crate::config::{UltraDeformation, Word};
use crate::report::{flag, num, Output, Table};

const NAME: &str = "ultra";

fn rational(x: f64) -> qaw_core::Result<Rational> {
    decimal(x).ok_or_else(|| Error::Domain(format!("{x} is not finite")))
}

/// Exact enumeration and closed form for a uniform `q̃` on a tracial space.
fn exact_pair(ctx: &Context, word: &Word, q: f64, qt: &Rational, m: usize) -> qaw_core::Result<(Rational, Rational)> {
    let vectors = word
        .vectors
        .iter()
        .map(|v| v.iter().map(|&x| rational(x)).collect::<qaw_core::Result<Vec<_>>>().map(Vector::from_vec))
        .collect::<qaw_core::Result<Vec<_>>>()?;
    let d = ctx.setup.dim();
    let spec = UmSpec {
        m,
        word: MomentSpec::new(vectors, ctx.setup.block_of())?,
        gram_u: Mat::identity(d, d),
        q: rational(q)?,
        q_tilde: AuxDeformation::Uniform(qt.clone()),
    };
    Ok((um_moment_enumerate(&spec)?, um_moment_closedform(&spec)?))
}

pub fn run(ctx: &Context) -> qaw_core::Result<Output> {
    let p = ctx.config.ultra.clone().unwrap_or_default();
    let UltraDeformation { q, q_tilde } = ctx.config.ultra_deformation().map_err(Error::Precondition)?;
    let words = if p.words.is_empty() {
        let mut e0 = vec![0.0; ctx.setup.dim()];
        e0[0] = 1.0;
        vec![Word { vectors: vec![e0; 4] }]
    } else {
        p.words.clone()
    };
    let uniform_qt = match &q_tilde {
        AuxDeformation::Uniform(z) => Some(z.re),
        AuxDeformation::Matrix(_) => None,
    };
    // q̃ as a decimal: configured directly, or `Q/q` with the division done exactly.
    let exact_qt = match (p.exact && ctx.config.space.is_tracial(), uniform_qt, p.q_tilde) {
        (true, Some(_), Some(t)) => Some(rational(t)?),
        (true, Some(_), None) => Some(rational(ctx.config.space.q[0][0])? / rational(q)?),
        _ => None,
    };

    let mut out = Output::default();
    let mut t = Table::new(
        NAME,
        &["word", "length", "m", "value_re", "value_im", "target_re", "target_im", "abs_error", "closed_form_gap", "exact", "pass"],
    );
    let mut summary = Vec::new();
    for (i, word) in words.iter().enumerate() {
        let spec = MomentSpec::new(word.complex(), ctx.setup.block_of())?;
        let replay = || json!({ "word": serde_json::from_str::<Value>(&spec.to_json()).unwrap_or(Value::Null), "q": q, "q_tilde": uniform_qt });
        let rep = convergence_experiment(&spec, ctx.setup.gram_u(), q, &q_tilde, &p.m)?;
        for pt in &rep.points {
            let mut ok = true;
            let gap = if rep.uniform {
                let um = UmSpec {
                    m: pt.m,
                    word: spec.clone(),
                    gram_u: ctx.setup.gram_u().clone(),
                    q: C64::new(q, 0.0),
                    q_tilde: q_tilde.clone(),
                };
                let closed = um_moment_closedform(&um)?;
                let gap = (pt.value - closed).norm() / (1.0 + closed.norm());
                if gap > ctx.tol.closed_form {
                    ok = false;
                    out.fail(NAME, "ultra.closed_form", format!("word {i} m {}: gap {gap:.3e}", pt.m), replay());
                }
                num(gap)
            } else {
                String::new()
            };
            if rep.uniform && spec.len() == 2 && pt.abs_error > ctx.tol.closed_form {
                ok = false;
                out.fail(NAME, "ultra.vanishing", format!("word {i} m {}: l = 2 error {:.3e}", pt.m, pt.abs_error), replay());
            }
            let exact_cell = match &exact_qt {
                Some(qt) => {
                    let (e, c) = exact_pair(ctx, word, q, qt, pt.m)?;
                    if e != c {
                        ok = false;
                        out.fail(NAME, "ultra.exact", format!("word {i} m {}: enumeration {e} vs closed form {c}", pt.m), replay());
                    }
                    e.to_string()
                }
                None => String::new(),
            };
            t.push(vec![
                i.to_string(),
                spec.len().to_string(),
                pt.m.to_string(),
                num(pt.value.re),
                num(pt.value.im),
                num(rep.target.re),
                num(rep.target.im),
                num(pt.abs_error),
                gap,
                exact_cell,
                flag(ok),
            ]);
        }
        summary.push((format!("word_{i}_slope"), rep.slope.map(num).unwrap_or_default()));
        summary.push((format!("word_{i}_vanishing"), flag(rep.vanishing)));
        summary.push((format!("word_{i}_uniform"), flag(rep.uniform)));
    }
    for (k, v) in summary {
        t.note(k, v);
    }
    t.note("q", num(q));
    t.note("q_tilde", uniform_qt.map(num).unwrap_or_else(|| "matrix".into()));
    t.note("failures", out.failures.len());
    out.tables.push(t);

    if let Some(r) = &p.remainder {
        let xi = Word { vectors: r.xi.clone() }.complex();
        let xi: [Vector<C64>; 3] = [xi[0].clone(), xi[1].clone(), xi[2].clone()];
        let seq = d_remainder_sequence(&xi, ctx.setup.gram_u(), &C64::new(q, 0.0), &q_tilde, &r.m)?;
        let mut rt = Table::new("ultra_remainder", &["m", "norm"]);
        for (m, norm) in &seq {
            rt.push(vec![m.to_string(), num(*norm)]);
        }
        rt.note("decreasing", flag(seq.windows(2).all(|w| w[1].1 < w[0].1)));
        out.tables.push(rt);
    }
    Ok(out)
}
