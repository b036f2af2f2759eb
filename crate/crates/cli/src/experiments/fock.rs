//! Symmetriser and creation/annihilation checks on the truncated Fock space.

use qaw_core::fock::TruncatedFock;
use qaw_core::linalg::{vec_max_abs_diff, Vector};
use qaw_core::sampling;
use qaw_core::wick::wick_operator;
use qaw_core::C64;
use rand::Rng;
use serde_json::json;

use super::{legs_json, random_tensor, Context};
use crate::report::{flag, num, vector_json, Output, Table};

const NAME: &str = "fock";

pub fn run(ctx: &Context) -> qaw_core::Result<Output> {
    let samples = ctx.config.fock.clone().unwrap_or_default().samples;
    let f = TruncatedFock::new(ctx.setup, ctx.config.n_max)?;
    let mut rng = sampling::rng(ctx.seed);
    let mut out = Output::default();
    let mut t = Table::new(NAME, &["check", "level", "index", "value", "bound", "pass"]);
    let mut row = |out: &mut Output, check: &str, level: String, index: String, value: f64, bound: f64, ok: bool, replay| {
        t.push(vec![check.into(), level.clone(), index.clone(), num(value), num(bound), flag(ok)]);
        if !ok {
            let mut at = String::new();
            if !level.is_empty() {
                at += &format!(" level {level}");
            }
            if !index.is_empty() {
                at += &format!(" sample {index}");
            }
            out.fail(NAME, check, format!("{check}{at}: {value:.6e} vs {bound:.6e}"), replay);
        }
    };

    let braid = f.braid_residual();
    row(&mut out, "braid", String::new(), String::new(), braid, ctx.tol.braid, braid <= ctx.tol.braid, json!({}));
    for n in 0..=f.n_max() {
        let ev = f.min_generalized_eigenvalue(n)?;
        let ok = ev > ctx.tol.positivity;
        row(&mut out, "positivity", n.to_string(), String::new(), ev, ctx.tol.positivity, ok, json!({ "level": n }));
    }
    let t_norm = f.t_norm()?;
    row(&mut out, "t_norm", String::new(), String::new(), t_norm, 1.0, t_norm < 1.0, json!({}));

    let d = ctx.setup.dim();
    for i in 0..samples {
        let n = 1 + i % f.n_max();
        let tensor = random_tensor(&mut rng, ctx.setup, n, false)?;
        let w = wick_operator(&tensor, &f)?;
        let res = vec_max_abs_diff(&w.apply_vacuum(&f)?.coeffs, &f.embed(n, &f.simple_tensor(tensor.legs())?)?);
        let replay = json!({ "legs": legs_json(tensor.legs()) });
        row(&mut out, "wick_vacuum", n.to_string(), i.to_string(), res, ctx.tol.wick, res <= ctx.tol.wick, replay);
    }
    for i in 0..samples {
        let xi = sampling::complex_vector(&mut rng, d);
        let c = f.creation_op(&xi)?;
        let a = f.annihilation_op(&xi)?;
        let below = f.offset(f.n_max());
        let u = Vector::from_fn(f.dim(), |k, _| {
            if k < below {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let v = sampling::complex_vector(&mut rng, f.dim());
        let lhs = f.inner(&(c.matrix() * &u), &v)?;
        let rhs = f.inner(&u, &(a.matrix() * &v))?;
        let res = (lhs - rhs).norm() / (1.0 + lhs.norm());
        let replay = json!({ "xi": vector_json(&xi), "u": vector_json(&u), "v": vector_json(&v) });
        row(&mut out, "adjointness", String::new(), i.to_string(), res, ctx.tol.adjoint, res <= ctx.tol.adjoint, replay);
        let bound = f.creation_norm_bound(&xi)?;
        for n in 0..f.n_max() {
            let norm = f.level_operator_norm(&f.creation(&xi, n)?, n, n + 1)?;
            let cap = bound * (1.0 + ctx.tol.norm_bound);
            let replay = json!({ "xi": vector_json(&xi), "level": n });
            row(&mut out, "creation_norm", n.to_string(), i.to_string(), norm, cap, norm <= cap, replay);
        }
    }
    t.note("braid_residual", num(braid));
    t.note("t_norm", num(t_norm));
    t.note("failures", out.failures.len());
    out.tables.push(t);
    Ok(out)
}
