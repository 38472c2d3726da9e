//! Verification suites. Each returns a verdict report and writes its CSV data into the output directory.

use std::f64::consts::TAU;
use std::path::Path;

use bcct::boundary_calculus::{disk_lattice, AnalyticSeries};
use bcct::circle_sets::{
    arc_dist_to_set, validate_set, whitney_decompose, Arc, BeurlingCarlesonSet, LambdaRule,
};
use bcct::cutoff::{certify_decay, CutoffFunction};
use bcct::dbr::{
    divisor_symbol, j_relation_check, kernel_difference_psd, kernel_tuple, permanence_functional_check,
    PermanenceSetup, SymbolB,
};
use bcct::factors::{certify_theta_derivatives, certify_w_derivatives, BoundaryWeight, InnerFunction, OuterFunction};
use bcct::fixtures::{self, FIXTURE_GAIN};
use bcct::spaces::{annihilator_check, annihilator_residual, growth_cap, rapid_weight};
use bcct::transforms::{
    backshift_identity, build_member, flip_check, flip_check_offset, model_space_orthogonality, smooth_transform,
    transform_coefficients, DecayWindow, Family, Ingredients, KMember,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{fmt_num, write_csv, Check, Relation, SuiteReport};

type SuiteResult = Result<SuiteReport, String>;

fn lib<T>(r: bcct::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn io<T>(r: std::io::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("write failed: {e}"))
}

pub fn run(name: &str, cfg: &RunConfig) -> SuiteReport {
    let res = match name {
        "whitney" => whitney(cfg),
        "cutoff" => cutoff(cfg),
        "outer" => outer(cfg),
        "transform" => transform(cfg),
        "weights" => weights_default(cfg),
        "annihilator" => annihilator(cfg),
        "permanence" => permanence(cfg),
        "dbr-psd" => dbr_psd(cfg),
        other => Err(format!("unknown suite {other}")),
    };
    res.unwrap_or_else(|msg| SuiteReport::new(name, vec![Check::failure(name, &msg)], json!(null)))
}

fn cutoff_of(cfg: &RunConfig) -> Result<CutoffFunction, String> {
    lib(CutoffFunction::new(&cfg.set, cfg.k_max, LambdaRule::TailSum { gain: FIXTURE_GAIN }))
}

/// Random gap list: m sorted anchors, each gap taking a random fraction of the room to the next anchor.
pub fn random_set(rng: &mut ChaCha8Rng) -> BeurlingCarlesonSet {
    loop {
        let m = rng.gen_range(1..=8);
        let mut anchors: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        anchors.sort_by(f64::total_cmp);
        let gaps: Vec<Arc> = (0..m)
            .filter_map(|i| {
                let room = if i + 1 < m { anchors[i + 1] - anchors[i] } else { 1.0 + anchors[0] - anchors[i] };
                Arc::from_normalized(anchors[i], room * rng.gen_range(0.1..0.9)).ok()
            })
            .collect();
        if let Ok(e) = validate_set(&gaps) {
            return e;
        }
    }
}

/// Worst deviation from |B| = |A|/(3·2^{|k|}) and dist(B, E) = |B| over the Whitney arcs of `e`.
pub fn whitney_exactness(e: &BeurlingCarlesonSet, k_max: u32) -> bcct::Result<(f64, f64)> {
    let arcs = whitney_decompose(e, k_max)?;
    let mut len_err: f64 = 0.0;
    let mut dist_err: f64 = 0.0;
    for a in &arcs {
        let parent = e.gaps[a.parent].length();
        len_err = len_err.max((a.length - parent / (3.0 * 2f64.powi(a.rank.abs()))).abs());
        dist_err = dist_err.max((arc_dist_to_set(&a.arc, e) - a.length).abs());
    }
    Ok((len_err, dist_err))
}

fn whitney(cfg: &RunConfig) -> SuiteResult {
    let c = cutoff_of(cfg)?;
    io(write_csv(
        &cfg.out.join("whitney.csv"),
        &["parent", "rank", "start", "end", "length", "lambda"],
        c.whitney.iter().map(|a| {
            vec![a.parent.to_string(), a.rank.to_string(), fmt_num(a.arc.start), fmt_num(a.arc.end), fmt_num(a.length), fmt_num(a.lambda)]
        }),
    ))?;
    let (own_len, own_dist) = lib(whitney_exactness(&cfg.set, cfg.k_max))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut len_err, mut dist_err): (f64, f64) = (own_len, own_dist);
    for _ in 0..100 {
        let e = random_set(&mut rng);
        let (l, d) = lib(whitney_exactness(&e, cfg.k_max))?;
        len_err = len_err.max(l);
        dist_err = dist_err.max(d);
    }
    let checks = vec![
        Check::new("length relation", len_err, Relation::AtMost, 1e-12),
        Check::new("distance equals length", dist_err, Relation::AtMost, 1e-12),
    ];
    let details = json!({
        "arcs": c.whitney.len(),
        "tail_mass": c.tail_mass,
        "measure": cfg.set.measure,
        "entropy": cfg.set.entropy,
    });
    Ok(SuiteReport::new("whitney", checks, details))
}

/// Points of the closed disk: half on the circle, half inside at log-uniform distance from it.
fn sample_points(rng: &mut ChaCha8Rng, count: usize, boundary: bool) -> Vec<Complex64> {
    (0..count)
        .map(|i| {
            let t = rng.gen::<f64>() * TAU;
            let r = if boundary && i % 2 == 0 { 1.0 } else { 1.0 - 10f64.powf(-rng.gen_range(0.0..8.0)) };
            Complex64::from_polar(r, t)
        })
        .collect()
}

fn cutoff(cfg: &RunConfig) -> SuiteResult {
    let c = cutoff_of(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let g_max = sample_points(&mut rng, 10_000, true)
        .iter()
        .map(|z| if z.norm() == 1.0 { c.boundary_g(z.arg()).norm() } else { c.eval_g(*z).norm() })
        .fold(0.0, f64::max);
    let re_h = sample_points(&mut rng, 10_000, false).iter().map(|z| c.eval_h(*z).re).fold(f64::NEG_INFINITY, f64::max);
    let rep = lib(certify_decay(&c, &[1, 2, 3, 4], &[0, 1, 2], cfg.grid, 6))?;
    io(write_csv(
        &cfg.out.join("cutoff_decay.csv"),
        &["n", "m", "level", "log10_rho"],
        rep.entries.iter().flat_map(|e| {
            e.levels
                .iter()
                .zip(&e.log10_rho)
                .map(|(l, r)| vec![e.n.to_string(), e.m.to_string(), l.to_string(), fmt_num(*r)])
                .collect::<Vec<_>>()
        }),
    ))?;
    let mut checks = vec![
        Check::new("max |g| on closed disk", g_max, Relation::AtMost, 1.0 + 1e-12),
        Check::new("max Re h in disk", re_h, Relation::Below, 0.0),
    ];
    for e in &rep.entries {
        checks.push(Check::flag(format!("decay certificate monotone N={} m={}", e.n, e.m), e.monotone));
    }
    Ok(SuiteReport::new("cutoff", checks, serde_json::to_value(&rep).unwrap_or_default()))
}

fn outer(cfg: &RunConfig) -> SuiteResult {
    let w = cfg.boundary_weight().map_err(|e| e.to_string())?;
    let outer = lib(OuterFunction::from_weight(&w))?;
    let n = 1024;
    let mut modulus_err: f64 = 0.0;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let t = (i as f64 + 0.37) / n as f64 * TAU;
        let v = outer.boundary_value(t);
        let target = if cfg.set.contains(t) { w.value_at(t) } else { 1.0 };
        if v.is_finite() && cfg.set.dist(t) > 1e-9 {
            modulus_err = modulus_err.max((v.norm() - target).abs() / target);
        }
        rows.push(vec![fmt_num(t), fmt_num(target), fmt_num(v.norm()), fmt_num(v.arg())]);
    }
    io(write_csv(&cfg.out.join("outer.csv"), &["t", "w", "abs_outer", "arg_outer"], rows))?;
    let mean_err = (outer.eval(Complex64::new(0.0, 0.0)).norm().ln() - w.log_integral).abs();
    let mut checks = vec![
        Check::new("boundary modulus relative error", modulus_err, Relation::AtMost, cfg.tol_or(1e-10)),
        Check::new("log|W(0)| against mean of log w", mean_err, Relation::AtMost, cfg.tol_or(1e-10)),
    ];
    let mut details = serde_json::Map::new();
    if matches!(outer.kind, bcct::factors::OuterKind::Piecewise(_)) {
        let wd = lib(certify_w_derivatives(&outer, &cfg.set, &[1, 2], cfg.grid, 6))?;
        for e in &wd.entries {
            checks.push(Check::new(format!("outer derivative constant growth m={}", e.m), e.growth, Relation::AtMost, 4.0));
        }
        details.insert("outer_derivatives".into(), serde_json::to_value(&wd).unwrap_or_default());
    }
    let theta = theta_for(cfg)?;
    for a in theta.singular.atoms.iter().take(1) {
        let carrier = BeurlingCarlesonSet::point(a.angle);
        let td = lib(certify_theta_derivatives(&theta, &carrier, &[1, 2], cfg.grid, 6))?;
        for e in &td.entries {
            checks.push(Check::new(format!("inner derivative constant growth m={}", e.m), e.growth, Relation::AtMost, 4.0));
        }
        details.insert("inner_derivatives".into(), serde_json::to_value(&td).unwrap_or_default());
    }
    Ok(SuiteReport::new("outer", checks, serde_json::Value::Object(details)))
}

/// Configured atoms, or a single K atom of mass 0.1 at angle 0.
fn theta_for(cfg: &RunConfig) -> Result<InnerFunction, String> {
    if cfg.atoms.is_empty() {
        lib(fixtures::k_atom(0.0, 0.1))
    } else {
        cfg.inner().map_err(|e| e.to_string())
    }
}

fn k_members(cfg: &RunConfig) -> Result<Vec<(usize, KMember)>, String> {
    let c = cutoff_of(cfg)?;
    let w = cfg.boundary_weight().map_err(|e| e.to_string())?;
    [0usize, 1, 3]
        .iter()
        .map(|&deg| {
            let ing = Ingredients::K { cutoff: c.clone(), weight: w.clone() };
            lib(build_member(Family::K, AnalyticSeries::monomial(deg), ing, cfg.grid)).map(|m| (deg, m))
        })
        .collect()
}

fn transform(cfg: &RunConfig) -> SuiteResult {
    let members = k_members(cfg)?;
    let pts = disk_lattice(64, 0.9);
    let mut checks = Vec::new();
    let mut details = Vec::new();
    for (deg, m) in &members {
        let tr = lib(smooth_transform(m, DecayWindow::default()))?;
        io(write_csv(
            &cfg.out.join(format!("transform_p{deg}.csv")),
            &["n", "abs_coefficient"],
            tr.series.coeffs.iter().enumerate().map(|(n, c)| vec![n.to_string(), fmt_num(c.norm())]),
        ))?;
        let flip = lib(flip_check(m, &pts))?;
        let shift = (1..=8).map(|k| backshift_identity(m, k)).collect::<bcct::Result<Vec<_>>>();
        let shift = lib(shift)?.into_iter().fold(0.0, f64::max);
        checks.push(Check::new(format!("decay slope p=z^{deg}"), tr.decay.slope, Relation::AtMost, -4.0));
        checks.push(Check::new(format!("transform norm p=z^{deg}"), tr.series.h2_norm(), Relation::AtLeast, 1e-300));
        checks.push(Check::new(format!("flip discrepancy p=z^{deg}"), flip.max_relative, Relation::AtMost, cfg.tol_or(1e-6)));
        checks.push(Check::new(format!("backward shift k<=8 p=z^{deg}"), shift, Relation::AtMost, cfg.tol_or(1e-10)));
        details.push(json!({"degree": deg, "decay": tr.decay, "flip": flip}));
    }
    Ok(SuiteReport::new("transform", checks, json!(details)))
}

/// Rapid weight for a coefficient sequence, with the certification checks; writes alpha.csv.
pub fn weights_for(s: &AnalyticSeries, n_max: u32, out: &Path) -> SuiteResult {
    let w = lib(rapid_weight(s, n_max))?;
    io(write_csv(
        &out.join("alpha.csv"),
        &["k", "alpha"],
        w.alpha.iter().enumerate().map(|(k, a)| vec![k.to_string(), fmt_num(*a)]),
    ))?;
    let norm2: f64 = s.coeffs.iter().map(|c| c.norm_sqr()).sum();
    let energy = w.weighted_energy(&s.coeffs);
    let cap = w.alpha.iter().enumerate().map(|(k, a)| a / growth_cap(k)).fold(0.0, f64::max);
    let checks = vec![
        Check::flag("alpha non-decreasing", w.increasing),
        Check::new("weighted energy minus norm squared", energy - norm2, Relation::AtMost, 2.0),
        Check::new("max alpha_k / k^sqrt(k)", cap, Relation::AtMost, 1.0),
        Check::new("alpha_d^(1/d) at the end of the range", w.root_at_end, Relation::Report, 1.0),
    ];
    Ok(SuiteReport::new("weights", checks, json!({"tail_indices": w.tail_indices, "rapid_certified": w.rapid_certified})))
}

fn weights_default(cfg: &RunConfig) -> SuiteResult {
    let s = AnalyticSeries::from_real(&(0..1usize << 10).map(|k| 2f64.powi(-(k as i32))).collect::<Vec<_>>());
    weights_for(&s, 6, &cfg.out)
}

fn annihilator(cfg: &RunConfig) -> SuiteResult {
    let members = k_members(cfg)?;
    let mut checks = Vec::new();
    for (deg, m) in &members {
        let r = lib(annihilator_check(m, 32))?;
        checks.push(Check::new(format!("annihilator residual k<=32 p=z^{deg}"), r, Relation::AtMost, cfg.tol_or(1e-7)));
    }
    // Negative control: perturb one coefficient of the transform by its own norm.
    let (_, m) = &members[0];
    let mut coeffs = lib(transform_coefficients(m))?;
    let scale = AnalyticSeries::new(coeffs.clone()).h2_norm();
    coeffs[1] += scale;
    let control = lib(annihilator_residual(m, &coeffs, 32, scale))?;
    checks.push(Check::new("negative control residual", control, Relation::AtLeast, 1e-2));
    let pts = disk_lattice(64, 0.9);
    let flip_control = lib(flip_check_offset(m, &pts, Complex64::new(m.samples.l2_norm(), 0.0)))?;
    checks.push(Check::new("flip negative control", flip_control.max_relative, Relation::AtLeast, 1e-2));
    Ok(SuiteReport::new("annihilator", checks, json!(null)))
}

fn permanence(cfg: &RunConfig) -> SuiteResult {
    // Orthogonality for K1 carried by a point, then the K2 split on and off E.
    let grid = cfg.grid.max(18);
    let mut checks = Vec::new();
    let phi = 1.0;
    let carrier = BeurlingCarlesonSet::point(phi);
    let c1 = lib(CutoffFunction::new(&carrier, cfg.k_max, LambdaRule::TailSum { gain: FIXTURE_GAIN }))?;
    let theta1 = lib(fixtures::c_atom(phi, 0.2))?;
    let mut k1 = 0.0f64;
    for j in 0..4 {
        let p = fixtures::damping(phi, 8).mul(&AnalyticSeries::monomial(j));
        let ing = Ingredients::K1 { cutoff: c1.clone(), theta: theta1.clone() };
        let m = lib(build_member(Family::K1, p, ing, grid))?;
        k1 = k1.max(lib(model_space_orthogonality(&m, 32))?);
    }
    checks.push(Check::new("K1 orthogonality to theta z^k", k1, Relation::AtMost, cfg.tol_or(1e-7)));

    let weight = cfg.boundary_weight().map_err(|e| e.to_string())?;
    let on = cfg.set.components()[0].midpoint_angle();
    let off = cfg.set.gaps[0].midpoint_angle();
    let mut trend = serde_json::Map::new();
    for (label, angle, order) in [("on E", on, 8), ("off E", off, 2)] {
        let setup = PermanenceSetup {
            cutoff: cutoff_of(cfg)?,
            weight: weight.clone(),
            theta: lib(fixtures::k_atom(angle, 0.1))?,
            damping: fixtures::damping(angle, order),
            members: 4,
            log2: grid,
            max_k: 32,
            degrees: vec![8, 12, 16, 20, 24, 28, 32],
            n_max: 6,
        };
        let rep = lib(permanence_functional_check(&setup, None))?;
        let orth = rep.orthogonality.iter().cloned().fold(0.0, f64::max);
        checks.push(Check::new(format!("K2 orthogonality, atom {label}"), orth, Relation::AtMost, cfg.tol_or(1e-7)));
        checks.push(Check::new(format!("u1 constant spread, atom {label}"), rep.c1_spread, Relation::Report, 2.0));
        checks.push(Check::new(format!("u2 constant spread, atom {label}"), rep.c2_spread, Relation::Report, 2.0));
        let k_last = rep.alpha.tail_indices.last().copied().unwrap_or(0);
        checks.push(Check::new(format!("last tail index, atom {label}"), k_last as f64, Relation::Report, 0.0));
        trend.insert(label.into(), serde_json::to_value(&rep).unwrap_or_default());
    }
    Ok(SuiteReport::new("permanence", checks, serde_json::Value::Object(trend)))
}

fn dbr_psd(cfg: &RunConfig) -> SuiteResult {
    let w = cfg.boundary_weight().map_err(|e| e.to_string())?;
    let capped = match &w.profile {
        bcct::factors::WeightProfile::Piecewise(p) if p.iter().all(|x| x.value <= 1.0) => w.clone(),
        _ => lib(fixtures::piecewise_weight(&cfg.set))?,
    };
    let theta = theta_for(cfg)?;
    let b = lib(SymbolB::new(theta, capped))?;
    let pts = disk_lattice(32, 0.9);
    let mut checks = Vec::new();
    for n in 1..=5 {
        let bn = lib(divisor_symbol(&b, n))?;
        let e = lib(kernel_difference_psd(&b, &bn, &pts))?;
        checks.push(Check::new(format!("min eigenvalue, divisor n={n}"), e, Relation::AtLeast, -cfg.tol_or(1e-10)));
    }
    let swapped = match kernel_difference_psd(&lib(divisor_symbol(&b, 2))?, &b, &pts) {
        Ok(e) => e < -cfg.tol_or(1e-10),
        Err(bcct::Error::NotADivisor(_)) => true,
        Err(e) => return Err(e.to_string()),
    };
    checks.push(Check::flag("swapped pair rejected", swapped));
    // The tuple check projects conj(b)·k on the grid, so it needs a continuous symbol: jumps alias at O(1/n).
    let zero = Complex64::new(0.4, -0.2);
    let blaschke = || lib(InnerFunction::new(vec![zero], Default::default()));
    let smooth = lib(SymbolB::new(blaschke()?, lib(fixtures::smooth_weight(&cfg.set, cfg.grid.min(16), 0.3))?))?;
    let inner_only = lib(SymbolB::new(blaschke()?, lib(BoundaryWeight::constant(&BeurlingCarlesonSet::full_circle(), 1.0))?))?;
    let mut j_reports = Vec::new();
    for (label, sym) in [("smooth outer", &smooth), ("inner only", &inner_only)] {
        let (f, g) = lib(kernel_tuple(sym, Complex64::new(0.3, 0.1), cfg.grid.min(16)))?;
        let j = lib(j_relation_check(sym, &f, &g, 32))?;
        checks.push(Check::new(format!("kernel tuple pairing, {label}"), j.annihilator, Relation::AtMost, cfg.tol_or(1e-8)));
        checks.push(Check::new(format!("kernel tuple direct residual, {label}"), j.direct, Relation::AtMost, cfg.tol_or(1e-8)));
        j_reports.push(j);
    }
    Ok(SuiteReport::new("dbr-psd", checks, json!({"j_relation": j_reports})))
}
