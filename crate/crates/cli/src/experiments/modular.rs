//! Tomita operator, KMS condition and modular flow on random Wick words.

use qaw_core::fock::TruncatedFock;
use qaw_core::linalg::max_abs_diff;
use qaw_core::modular::ModularData;
use qaw_core::sampling;
use qaw_core::wick::{wick_operator, WickCache};
use qaw_core::C64;
use rand::Rng;
use serde_json::json;

use super::{legs_json, random_tensor, Context};
use crate::report::{flag, num, Output, Table};

const NAME: &str = "modular";

pub fn run(ctx: &Context) -> qaw_core::Result<Output> {
    let p = ctx.config.modular.clone().unwrap_or_default();
    let f = TruncatedFock::new(ctx.setup, ctx.config.n_max)?;
    let m = ModularData::new(ctx.setup, &f)?;
    let cache = WickCache::new();
    let mut rng = sampling::rng(ctx.seed);
    let mut out = Output::default();
    let mut t = Table::new(NAME, &["check", "level", "index", "parameter", "residual", "tolerance", "pass"]);
    let mut worst = [0.0f64; 4];
    let mut row = |out: &mut Output, check: &str, level: usize, index: String, param: String, res: f64, tol: f64, replay| {
        let ok = res <= tol;
        t.push(vec![check.into(), level.to_string(), index.clone(), param.clone(), num(res), num(tol), flag(ok)]);
        if !ok {
            out.fail(NAME, check, format!("{check} level {level} index {index} {param}: {res:.6e} > {tol:.1e}"), replay);
        }
    };

    for n in 0..=f.n_max() {
        let res = max_abs_diff(&m.polar_s(n)?.matrix, &m.s_phi(n)?.matrix);
        worst[0] = worst[0].max(res);
        row(&mut out, "polar", n, String::new(), String::new(), res, ctx.tol.polar, json!({ "level": n }));
    }
    for i in 0..p.words {
        let n = 1 + i % f.n_max();
        let tensor = random_tensor(&mut rng, ctx.setup, n, false)?;
        let w = wick_operator(&tensor, &f)?;
        let res = m.s_adjoint_residual(&w)?;
        worst[1] = worst[1].max(res);
        let replay = json!({ "legs": legs_json(tensor.legs()) });
        row(&mut out, "s_adjoint", n, i.to_string(), String::new(), res, ctx.tol.modular, replay.clone());
        for &time in &p.times {
            let a = m.modular_flow(C64::new(time, 0.0), &w, &cache)?;
            let b = m.automorphism(time, w.operator())?;
            let res = max_abs_diff(a.operator().matrix(), b.matrix());
            worst[2] = worst[2].max(res);
            let replay = json!({ "legs": legs_json(tensor.legs()), "t": time });
            row(&mut out, "flow", n, i.to_string(), format!("t={time}"), res, ctx.tol.flow, replay);
        }
    }
    let top = (f.n_max() / 2).max(1);
    for i in 0..p.pairs {
        let (nx, ny) = (rng.gen_range(1..=top), rng.gen_range(1..=top));
        let x = random_tensor(&mut rng, ctx.setup, nx, false)?;
        let y = random_tensor(&mut rng, ctx.setup, ny, false)?;
        let res = m.kms_residual(&wick_operator(&x, &f)?, &wick_operator(&y, &f)?, &cache)?;
        worst[3] = worst[3].max(res);
        let replay = json!({ "x": legs_json(x.legs()), "y": legs_json(y.legs()) });
        row(&mut out, "kms", nx + ny, i.to_string(), format!("levels={nx}+{ny}"), res, ctx.tol.kms, replay);
    }
    for (name, w) in ["polar", "s_adjoint", "flow", "kms"].iter().zip(worst) {
        t.note(format!("max_{name}"), num(w));
    }
    t.note("kms_form", "phi(yx) = phi(x sigma_{-i}(y))");
    t.note("failures", out.failures.len());
    out.tables.push(t);
    Ok(out)
}
