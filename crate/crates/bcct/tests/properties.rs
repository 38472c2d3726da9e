use std::f64::consts::TAU;

use bcct::boundary_calculus::{
    analytic_part, cauchy_quadrature, conjugate_function, evaluate_in_disk, fejer_means, fourier_coefficients,
    sup_norm, synthesize, AnalyticSeries, BoundaryGrid, TwoSided,
};
use bcct::circle_sets::{
    arc_dist_to_set, assign_lambdas, enumeration_order, residual_segments, validate_set, whitney_decompose, Arc,
    BeurlingCarlesonSet, LambdaRule,
};
use bcct::cutoff::CutoffFunction;
use bcct::dbr::{divisor_symbol, kernel_eval, SymbolB};
use bcct::factors::{Atom, BoundaryWeight, InnerFunction, OuterFunction, Part, SingularMeasure};
use bcct::spaces::{growth_cap, moments_beta, pairing, rapid_weight, weighted_operator_norm, x_norm};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gap_set() -> impl Strategy<Value = BeurlingCarlesonSet> {
    (1usize..=6)
        .prop_flat_map(|m| (prop::collection::vec(0.0f64..1.0, m), prop::collection::vec(0.05f64..0.95, m)))
        .prop_filter_map("gaps must be disjoint and non-degenerate", |(mut anchors, fracs)| {
            anchors.sort_by(f64::total_cmp);
            let m = anchors.len();
            let gaps: Option<Vec<Arc>> = (0..m)
                .map(|i| {
                    let room = if i + 1 < m { anchors[i + 1] - anchors[i] } else { 1.0 + anchors[0] - anchors[i] };
                    if room < 1e-3 {
                        return None;
                    }
                    Arc::from_normalized(anchors[i], room * fracs[i]).ok()
                })
                .collect();
            validate_set(&gaps?).ok()
        })
}

/// Points of the closed disk, a third of them on the circle.
fn disk_point() -> impl Strategy<Value = Complex64> {
    (0.0f64..TAU, 0.0f64..8.0, 0u8..3).prop_map(|(t, depth, kind)| {
        let r = if kind == 0 { 1.0 } else { 1.0 - 10f64.powf(-depth) };
        Complex64::from_polar(r, t)
    })
}

fn cutoff(e: &BeurlingCarlesonSet, k_max: u32) -> CutoffFunction {
    CutoffFunction::new(e, k_max, LambdaRule::TailSum { gain: 4.0 }).unwrap()
}

fn g_at(c: &CutoffFunction, z: Complex64) -> Complex64 {
    if z.norm() == 1.0 {
        c.boundary_g(z.arg())
    } else {
        c.eval_g(z)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn whitney_arcs_are_exact(e in gap_set(), k_max in 1u32..24) {
        for a in whitney_decompose(&e, k_max).unwrap() {
            let parent = e.gaps[a.parent].length();
            prop_assert!((a.length - parent / (3.0 * 2f64.powi(a.rank.abs()))).abs() <= 1e-12);
            prop_assert!((arc_dist_to_set(&a.arc, &e) - a.length).abs() <= 1e-12);
        }
    }

    #[test]
    fn whitney_arcs_and_residuals_tile_each_gap(e in gap_set(), k_max in 1u32..24) {
        let arcs = whitney_decompose(&e, k_max).unwrap();
        let res = residual_segments(&e, k_max).unwrap();
        for (n, g) in e.gaps.iter().enumerate() {
            let covered: f64 = arcs.iter().filter(|a| a.parent == n).map(|a| a.length).sum::<f64>()
                + res[n].0.length()
                + res[n].1.length();
            prop_assert!((covered - g.length()).abs() <= 1e-12);
        }
    }

    #[test]
    fn tail_sum_lambdas_grow_along_enumeration(e in gap_set()) {
        let arcs = assign_lambdas(&whitney_decompose(&e, 16).unwrap(), LambdaRule::default()).unwrap();
        let order = enumeration_order(&arcs);
        for w in order.windows(2) {
            prop_assert!(arcs[w[1]].lambda >= arcs[w[0]].lambda * (1.0 - 1e-12));
        }
        let total: f64 = arcs.iter().map(|a| a.lambda * a.weight()).sum();
        prop_assert!(total.is_finite());
    }

    #[test]
    fn entropy_is_rotation_invariant(e in gap_set(), phi in -10.0f64..10.0) {
        prop_assert!((e.rotate(phi).entropy - e.entropy).abs() <= 1e-12);
    }

    #[test]
    fn fourier_synthesis_round_trip(band in 1usize..40, seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 81)) {
        let c = TwoSided::from_fn(band, |n| {
            let (re, im) = seed[(n + 40) as usize];
            c64(re, im)
        });
        let back = fourier_coefficients(&synthesize(&c, 8).unwrap(), band).unwrap();
        for n in -(band as i64)..=band as i64 {
            prop_assert!((back.get(n) - c.get(n)).norm() <= 1e-12);
        }
    }

    #[test]
    fn conjugate_function_squares_to_minus_identity(coef in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 30)) {
        let n = 256;
        let u: Vec<f64> = (0..n)
            .map(|m| {
                let t = TAU * m as f64 / n as f64;
                coef.iter().enumerate().map(|(k, (a, b))| a * (k as f64 * t).cos() + b * (k as f64 * t).sin()).sum()
            })
            .collect();
        let mean = u.iter().sum::<f64>() / n as f64;
        let twice = conjugate_function(&conjugate_function(&u));
        for (x, y) in u.iter().zip(&twice) {
            prop_assert!((y - (mean - x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn fejer_means_do_not_raise_the_sup(coef in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40), d in 0usize..48) {
        let f = AnalyticSeries::new(coef.iter().map(|&(a, b)| c64(a, b)).collect());
        prop_assert!(sup_norm(&fejer_means(&f, d)) <= sup_norm(&f) + 1e-10);
    }

    #[test]
    fn analytic_projection_agrees_with_cauchy_quadrature(r in 0.0f64..0.9, t in 0.0f64..TAU, a in 0.2f64..1.5) {
        // C^∞ boundary data
        let grid = BoundaryGrid::from_fn(10, |s| (a * s.cos()).exp() * Complex64::from_polar(1.0, (2.0 * s).sin())).unwrap();
        let z = Complex64::from_polar(r, t);
        let series = evaluate_in_disk(&analytic_part(&grid), z).unwrap();
        let quad = cauchy_quadrature(&grid, z).unwrap();
        prop_assert!((series - quad).norm() <= 1e-6 * quad.norm().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cutoff_is_bounded_by_one(e in gap_set(), zs in prop::collection::vec(disk_point(), 50)) {
        let c = cutoff(&e, 16);
        for z in zs {
            prop_assert!(g_at(&c, z).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn cutoff_is_zero_free_inside(e in gap_set(), zs in prop::collection::vec((0.0f64..0.99, 0.0f64..TAU), 50)) {
        let c = cutoff(&e, 16);
        for (r, t) in zs {
            prop_assert!(c.eval_g(Complex64::from_polar(r, t)).norm() > 0.0);
        }
    }

    #[test]
    fn doubling_k_max_stays_within_tail_bound(e in gap_set(), zs in prop::collection::vec((0.0f64..0.999, 0.0f64..TAU), 20)) {
        let coarse = cutoff(&e, 16);
        let fine = cutoff(&e, 32);
        for (r, t) in zs {
            let z = Complex64::from_polar(r, t);
            let diff = (coarse.eval_h(z) - fine.eval_h(z)).norm();
            prop_assert!(diff <= 2.0 * coarse.tail_bound_at(z) + 1e-13, "diff {diff:e}, bound {:e}", coarse.tail_bound_at(z));
        }
    }

    #[test]
    fn rotation_rotates_the_cutoff(e in gap_set(), phi in 0.0f64..TAU, zs in prop::collection::vec((0.0f64..0.95, 0.0f64..TAU), 20)) {
        let c = cutoff(&e, 16);
        let rot = c.rotate(phi).unwrap();
        for (r, t) in zs {
            let z = Complex64::from_polar(r, t);
            let back = z * Complex64::from_polar(1.0, -phi);
            prop_assert!((rot.eval_g(z) - c.eval_g(back)).norm() <= 1e-10);
        }
    }

    #[test]
    fn outer_functions_multiply(e in gap_set(), v1 in prop::collection::vec(0.05f64..3.0, 6), v2 in prop::collection::vec(0.05f64..3.0, 6), zs in prop::collection::vec((0.0f64..0.95, 0.0f64..TAU), 50)) {
        let n = e.components().len();
        let w1 = BoundaryWeight::per_component(&e, &v1[..n]).unwrap();
        let w2 = BoundaryWeight::per_component(&e, &v2[..n]).unwrap();
        let prod: Vec<f64> = (0..n).map(|i| v1[i] * v2[i]).collect();
        let w12 = OuterFunction::from_weight(&BoundaryWeight::per_component(&e, &prod).unwrap()).unwrap();
        let o1 = OuterFunction::from_weight(&w1).unwrap();
        let o2 = OuterFunction::from_weight(&w2).unwrap();
        let via_product = o1.product(&o2).unwrap();
        for (r, t) in zs {
            let z = Complex64::from_polar(r, t);
            let direct = w12.eval(z);
            prop_assert!((o1.eval(z) * o2.eval(z) - direct).norm() <= 1e-6 * direct.norm());
            prop_assert!((via_product.eval(z) - direct).norm() <= 1e-6 * direct.norm());
        }
    }

    #[test]
    fn outer_value_at_origin_is_geometric_mean(e in gap_set(), v in prop::collection::vec(0.05f64..3.0, 6)) {
        let n = e.components().len();
        let w = BoundaryWeight::per_component(&e, &v[..n]).unwrap();
        let o = OuterFunction::from_weight(&w).unwrap();
        prop_assert!((o.eval(c64(0.0, 0.0)).norm().ln() - w.log_integral).abs() <= 1e-8);
    }

    #[test]
    fn singular_inner_functions_are_contractive_and_multiplicative(
        a1 in prop::collection::vec((0.0f64..TAU, 0.01f64..2.0), 1..4),
        a2 in prop::collection::vec((0.0f64..TAU, 0.01f64..2.0), 1..4),
        zs in prop::collection::vec((0.0f64..0.999, 0.0f64..TAU), 30),
    ) {
        let atoms = |v: &[(f64, f64)]| v.iter().map(|&(angle, mass)| Atom { angle, mass, part: Part::K }).collect::<Vec<_>>();
        let n1 = SingularMeasure::new(atoms(&a1), None).unwrap();
        let n2 = SingularMeasure::new(atoms(&a2), None).unwrap();
        let both = SingularMeasure::new([atoms(&a1), atoms(&a2)].concat(), None).unwrap();
        for (r, t) in zs {
            let z = Complex64::from_polar(r, t);
            let s = both.eval(z);
            prop_assert!(s.norm() <= 1.0 + 1e-15);
            prop_assert!((n1.eval(z) * n2.eval(z) - s).norm() <= 1e-10);
        }
    }

    #[test]
    fn symbol_modulus_matches_outer_weight(e in gap_set(), v in prop::collection::vec(0.05f64..1.0, 6), phi in 0.0f64..TAU) {
        let n = e.components().len();
        let w = BoundaryWeight::per_component(&e, &v[..n]).unwrap();
        let nu = SingularMeasure::new(vec![Atom { angle: phi, mass: 0.3, part: Part::K }], None).unwrap();
        let b = SymbolB::new(InnerFunction::new(vec![c64(0.2, 0.1)], nu).unwrap(), w.clone()).unwrap();
        let (bb, _) = b.boundary(12).unwrap();
        for m in (0..bb.size()).step_by(7) {
            let t = bb.angle(m);
            let near_atom = (Complex64::from_polar(1.0, t) - Complex64::from_polar(1.0, phi)).norm() < 1e-3;
            if near_atom || e.is_endpoint(t, 1e-9) || e.dist(t) < 1e-9 {
                continue;
            }
            let target = if e.contains(t) { w.value_at(t) } else { 1.0 };
            prop_assert!((bb.samples[m].norm() - target).abs() <= 1e-6);
        }
    }

    #[test]
    fn rapid_weight_is_certified(ratio in 0.2f64..0.8, wiggle in prop::collection::vec(0.5f64..1.5, 512), n_max in 1u32..6) {
        let s: Vec<f64> = (0..512).map(|k| ratio.powi(k as i32) * wiggle[k]).collect();
        let series = AnalyticSeries::from_real(&s);
        let w = rapid_weight(&series, n_max).unwrap();
        let norm2: f64 = s.iter().map(|x| x * x).sum();
        let budget: f64 = (1..=n_max).map(|n| 2f64.powi(-(n as i32))).sum();
        prop_assert!(w.increasing);
        prop_assert!(w.weighted_energy(&series.coeffs) <= norm2 + budget + 1e-12);
        for (k, a) in w.alpha.iter().enumerate() {
            prop_assert!(*a <= growth_cap(k) * (1.0 + 1e-12));
        }
        prop_assert!(w.rapid_certified);
    }

    #[test]
    fn pairing_obeys_cauchy_schwarz(
        f in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        g in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        growth in 0.0f64..4.0,
    ) {
        let alpha: Vec<f64> = (0..64).map(|k| (1.0 + k as f64).powf(growth)).collect();
        let recip: Vec<f64> = alpha.iter().map(|a| 1.0 / a).collect();
        let f = AnalyticSeries::new(f.iter().map(|&(a, b)| c64(a, b)).collect());
        let g = AnalyticSeries::new(g.iter().map(|&(a, b)| c64(a, b)).collect());
        let lhs = pairing(&f, &g).norm();
        let rhs = x_norm(&f, &alpha).unwrap() * x_norm(&g, &recip).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn backward_shift_contracts_on_constructed_weights(ratio in 0.2f64..0.8, n_max in 1u32..6) {
        let s: Vec<f64> = (0..256).map(|k| ratio.powi(k as i32)).collect();
        let w = rapid_weight(&AnalyticSeries::from_real(&s), n_max).unwrap();
        let d = 96;
        let shift = DMatrix::from_fn(d, d, |row, col| if col == row + 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        prop_assert!(weighted_operator_norm(&shift, &w.alpha[..d]) <= 1.0 + 1e-12);
    }

    #[test]
    fn moment_recursion_ratio(c in -0.9f64..6.0) {
        let b = moments_beta(c, 2048).unwrap();
        for k in 0..2048 {
            let want = (k as f64 + 1.0) / (k as f64 + c + 2.0);
            prop_assert!((b[k + 1] / b[k] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn kernels_are_hermitian_with_nonnegative_diagonal(
        e in gap_set(),
        v in prop::collection::vec(0.05f64..1.0, 6),
        pts in prop::collection::vec((0.0f64..0.99, 0.0f64..TAU), 40),
    ) {
        let n = e.components().len();
        let w = BoundaryWeight::per_component(&e, &v[..n]).unwrap();
        let nu = SingularMeasure::new(vec![Atom { angle: 1.0, mass: 0.5, part: Part::K }], None).unwrap();
        let b = SymbolB::new(InnerFunction::new(vec![c64(-0.3, 0.5)], nu).unwrap(), w).unwrap();
        let zs: Vec<Complex64> = pts.iter().map(|&(r, t)| Complex64::from_polar(r, t)).collect();
        for pair in zs.windows(2) {
            let (l, z) = (pair[0], pair[1]);
            prop_assert!((kernel_eval(&b, l, z).unwrap() - kernel_eval(&b, z, l).unwrap().conj()).norm() <= 1e-12);
            prop_assert!(kernel_eval(&b, l, l).unwrap().re >= 0.0);
        }
    }
}

#[test]
fn kernel_diagonal_nonnegative_at_a_thousand_points() {
    let e = bcct::fixtures::two_gap();
    let w = bcct::fixtures::piecewise_weight(&e).unwrap();
    let nu = SingularMeasure::new(vec![Atom { angle: 0.5, mass: 1.0, part: Part::K }], None).unwrap();
    let b = SymbolB::new(InnerFunction::new(vec![c64(0.5, 0.0)], nu).unwrap(), w).unwrap();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for i in 0..1000 {
        let l = Complex64::from_polar(0.999 * ((i as f64 + 0.5) / 1000.0).sqrt(), golden * i as f64);
        let k = kernel_eval(&b, l, l).unwrap();
        assert!(k.re >= 0.0 && k.im.abs() <= 1e-12, "λ = {l}: {k}");
    }
}

#[test]
fn divisors_approach_the_symbol() {
    let e = bcct::fixtures::two_gap();
    let w = bcct::fixtures::piecewise_weight(&e).unwrap();
    let nu = SingularMeasure::new(vec![Atom { angle: 0.5, mass: 0.6, part: Part::K }], None).unwrap();
    let b = SymbolB::new(InnerFunction::new(vec![c64(0.1, 0.4)], nu).unwrap(), w).unwrap();
    let divisors: Vec<SymbolB> = (1..=6).map(|n| divisor_symbol(&b, n).unwrap()).collect();
    for z in bcct::boundary_calculus::disk_lattice(20, 0.95) {
        let gaps: Vec<f64> = divisors.iter().map(|bn| (bn.eval(z) - b.eval(z)).norm()).collect();
        assert!(gaps.windows(2).all(|p| p[1] < p[0]), "z = {z}: {gaps:?}");
    }
}
