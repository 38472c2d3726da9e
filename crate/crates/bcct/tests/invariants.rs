use std::f64::consts::TAU;

use bcct::boundary_calculus::{set_rule, AnalyticSeries};
use bcct::circle_sets::LambdaRule;
use bcct::cutoff::CutoffFunction;
use bcct::factors::BoundaryWeight;
use bcct::fixtures::two_gap;
use num_complex::Complex64;
use bcct::transforms::{build_member, smooth_transform, transform_coefficients, DecayWindow, Family, Ingredients, KMember};

const GAIN: f64 = 4.0;
fn member(p: AnalyticSeries, log2: u32) -> KMember {
    let e = two_gap();
    let cutoff = CutoffFunction::new(&e, 16, LambdaRule::TailSum { gain: GAIN }).unwrap();
    let weight = BoundaryWeight::per_component(&e, &[0.5, 0.25]).unwrap();
    build_member(Family::K, p, Ingredients::K { cutoff, weight }, log2).unwrap()
}

#[test]
fn e_side_and_gap_side_coefficients_cancel() {
    // C_{s1_E} by graded quadrature on E against the complement route −P₊(s1_{T∖E})
    for deg in [0, 1, 3] {
        let m = member(AnalyticSeries::monomial(deg), 16);
        let rule = set_rule(m.set(), &[], 40, 60, 0.1);
        let gap_side = transform_coefficients(&m).unwrap();
        let scale = gap_side.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (n, want) in gap_side.iter().enumerate().take(64) {
            let e_side: Complex64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&t, &w)| w * m.value_at(t).unwrap() * Complex64::from_polar(1.0, -(n as f64) * t))
                .sum::<Complex64>()
                / TAU;
            assert!((e_side - want).norm() <= 1e-6 * scale, "z^{deg}, n = {n}: {e_side} vs {want}");
        }
    }
}

#[test]
fn refining_the_grid_does_not_worsen_the_slope() {
    for deg in [0, 1, 3] {
        let p = AnalyticSeries::monomial(deg);
        let fit = |log2| smooth_transform(&member(p.clone(), log2), DecayWindow::default()).unwrap().decay;
        let (c14, c16, c18) = (fit(14), fit(16), fit(18));
        // at 2^14 aliasing swamps the window from n = 64 on; the fit flags it as unresolved
        assert!(c14.slope == f64::NEG_INFINITY && c14.fit_hi < c14.window.lo + 7, "z^{deg}: {c14:?}");
        assert!(c16.certifies(4), "z^{deg}: {c16:?}");
        assert!(c18.slope <= c16.slope + 0.5, "z^{deg}: 2^16 {}, 2^18 {}", c16.slope, c18.slope);
    }
}

