//! Radial multipliers, second quantisation and the finite-rank net.

use qaw_core::approx::{
    amplified_norm_profile, coordinate_projection, full_rank_index, image_min_eigenvalue, net_element,
    net_pointwise_defect, norm_surrogate, tail_series, EstimatorSettings, RadialSymbol, WhitenedBasis, WickSpanMap,
};
use qaw_core::fock::TruncatedFock;
use qaw_core::linalg::Vector;
use qaw_core::sampling;
use qaw_core::wick::{wick_of_vector, wick_operator, LabeledTensor, WickCache, WickWord};
use qaw_core::C64;
use rand::Rng;
use serde_json::json;

use super::Context;
use crate::report::{flag, num, vector_json, Output, Table};

const NAME: &str = "multipliers";

/// Configured fixtures, or one level-1 word per generator unit, each of unit norm.
fn fixtures(ctx: &Context, f: &TruncatedFock<C64>, cache: &WickCache<C64>) -> qaw_core::Result<Vec<(Vec<Vector<C64>>, WickWord<C64>)>> {
    let p = ctx.config.multipliers.clone().unwrap_or_default();
    let words: Vec<Vec<Vector<C64>>> = if p.words.is_empty() {
        ctx.setup.generator_units().iter().map(|u| vec![ctx.setup.basis_vector(u[0])]).collect()
    } else {
        p.words.iter().map(|w| w.complex()).collect()
    };
    words
        .into_iter()
        .map(|legs| {
            let w = wick_operator(&LabeledTensor::new(legs.clone(), f.block_of())?, f)?;
            let norm = f.norm(w.argument())?;
            Ok((legs, wick_of_vector(&(w.argument() / C64::new(norm, 0.0)), f, cache)?))
        })
        .collect()
}

pub fn run(ctx: &Context) -> qaw_core::Result<Output> {
    let p = ctx.config.multipliers.clone().unwrap_or_default();
    let s = ctx.setup;
    let f = TruncatedFock::new(s, ctx.config.n_max)?;
    let cache = WickCache::new();
    let mut rng = sampling::rng(ctx.seed);
    let mut out = Output::default();
    let full = full_rank_index(s);

    let mut checks = Table::new("multipliers_checks", &["check", "index", "value", "tolerance", "pass"]);
    let l = coordinate_projection(s, full)? * C64::new((-0.5f64).exp(), 0.0);
    let gamma = WickSpanMap::second_quantization(&l, &f, &s.sample_unitaries())?;
    let state = (0..f.dim())
        .map(|i| (gamma.matrix()[(0, i)] - if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max);
    checks.push(vec!["state_preserved".into(), String::new(), num(state), num(0.0), flag(state == 0.0)]);
    if state != 0.0 {
        out.fail(NAME, "approx.state", format!("φ∘Γ(L) − φ = {state:.3e}"), json!({ "t": 0.5 }));
    }
    for n in 0..=f.n_max() {
        let fnm = WickSpanMap::radial(&RadialSymbol::kronecker(n), &f);
        let ok = gamma.after(&fnm) == fnm.after(&gamma);
        checks.push(vec!["radial_commutes".into(), n.to_string(), flag(ok), String::new(), flag(ok)]);
        if !ok {
            out.fail(NAME, "approx.commutation", format!("F_{n} Γ(L) ≠ Γ(L) F_{n}"), json!({ "n": n, "t": 0.5 }));
        }
    }
    let half = f.n_max() / 2;
    let mut margin = f64::INFINITY;
    for i in 0..p.positivity {
        let (n, t, k) = (rng.gen_range(0..=f.n_max()), rng.gen_range(0.05..2.0), rng.gen_range(0..=full));
        let elem = net_element(s, &f, n, t, k)?;
        let eta = Vector::from_fn(f.dim(), |idx, _| {
            if idx < f.offset(half + 1) {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let y = wick_of_vector(&eta, &f, &cache)?;
        let ev = image_min_eigenvalue(&elem.map, &y, &f, &cache)?;
        margin = margin.min(ev);
        let ok = ev >= -ctx.tol.positivity_margin;
        checks.push(vec!["positivity".into(), i.to_string(), num(ev), num(-ctx.tol.positivity_margin), flag(ok)]);
        if !ok {
            let replay = json!({ "n": n, "t": t, "k": k, "eta": vector_json(&eta) });
            out.fail(NAME, "approx.positivity", format!("min eigenvalue of Γ(y*y) = {ev:.3e}"), replay);
        }
    }
    checks.note("positivity_margin", if margin.is_finite() { num(margin) } else { String::new() });
    checks.note("full_rank_index", full);

    let mut net = Table::new("multipliers_net", &["j", "t", "n", "k", "rank", "nu", "word", "level", "defect", "tail_series"]);
    let fixtures = fixtures(ctx, &f, &cache)?;
    let basis = WhitenedBasis::new(&f, &cache)?;
    let mut defects = vec![Vec::new(); fixtures.len()];
    for &j in &p.schedule {
        let t = 1.0 / j as f64;
        let elem = net_element(s, &f, f.n_max(), t, full)?;
        let nu = norm_surrogate(&elem, &basis, ctx.seed.wrapping_add(j as u64))?;
        let tail = tail_series(f.n_max(), t)?;
        for (w, ((legs, word), d)) in fixtures.iter().zip(defects.iter_mut()).enumerate() {
            let defect = net_pointwise_defect(&elem, word, nu, &f)?;
            d.push(defect);
            net.push(vec![
                j.to_string(),
                num(t),
                elem.n.to_string(),
                elem.k.to_string(),
                elem.rank.to_string(),
                num(nu),
                w.to_string(),
                legs.len().to_string(),
                num(defect),
                num(tail),
            ]);
        }
    }
    for (w, d) in defects.iter().enumerate() {
        net.note(format!("word_{w}_final_defect"), d.last().map(|&x| num(x)).unwrap_or_default());
        net.note(format!("word_{w}_decreasing"), flag(d.windows(2).all(|x| x[1] < x[0])));
    }
    net.note("normaliser", "larger of 1 and the amplified estimate at N = 2");

    let mut cb = Table::new("multipliers_cb", &["map", "amplification", "estimate"]);
    if p.amplification > 0 {
        let settings = EstimatorSettings::default();
        let mut maps = vec![("identity".to_string(), WickSpanMap::identity(&f))];
        for n in 0..=f.n_max() {
            maps.push((format!("F_{n}"), WickSpanMap::radial(&RadialSymbol::kronecker(n), &f)));
        }
        for (i, (name, map)) in maps.iter().enumerate() {
            let prof = amplified_norm_profile(map, &basis, p.amplification, ctx.seed ^ i as u64, &settings)?;
            for (n, v) in prof.iter().enumerate() {
                cb.push(vec![name.clone(), (n + 1).to_string(), num(*v)]);
            }
            if !prof.windows(2).all(|w| w[1] >= w[0]) {
                out.fail(NAME, "approx.cb_monotone", format!("{name}: estimates decrease in N: {prof:?}"), json!({ "map": name }));
            }
            if i == 0 && prof.iter().any(|&v| v < 1.0 - ctx.tol.cb_identity) {
                out.fail(NAME, "approx.cb_identity", format!("identity estimates {prof:?} below 1"), json!({ "map": name }));
            }
        }
    }
    cb.note("method", "seeded multi-start ascent; every value is a lower bound");

    checks.note("failures", out.failures.len());
    out.tables.extend([checks, net, cb]);
    Ok(out)
}
