//! Reference sets, weights and measures used by the tests and the command line.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::boundary_calculus::AnalyticSeries;
use crate::circle_sets::{validate_family, validate_set, Arc, BeurlingCarlesonSet, GapFamily, LambdaRule, LengthDecay};
use crate::cutoff::CutoffFunction;
use crate::error::Result;
use crate::factors::{Atom, BoundaryWeight, InnerFunction, Part, SingularMeasure};

/// Multiplier gain used by every fixture cut-off.
pub const FIXTURE_GAIN: f64 = 4.0;
pub const FIXTURE_KMAX: u32 = 16;

/// One gap covering the normalized range [0.375, 0.625).
pub fn one_gap() -> BeurlingCarlesonSet {
    validate_set(&[Arc::from_normalized(0.375, 0.25).expect("valid arc")]).expect("valid set")
}

/// Gaps [1/16, 1/4) and [1/2, 5/8); E = [1/4, 1/2] ∪ [5/8, 17/16].
pub fn two_gap() -> BeurlingCarlesonSet {
    validate_set(&[
        Arc::from_normalized(0.0625, 0.1875).expect("valid arc"),
        Arc::from_normalized(0.5, 0.125).expect("valid arc"),
    ])
    .expect("valid set")
}

/// First `m` gaps of lengths 0.2·2^{1−k}, each followed by a spacer.
pub fn geometric_gaps(m: usize) -> Result<BeurlingCarlesonSet> {
    let family = GapFamily { first: 0.2, decay: LengthDecay::Geometric { ratio: 0.5 }, origin: 0.0 };
    validate_family(&family, m, 1.0)
}

pub fn cutoff_for(set: &BeurlingCarlesonSet) -> Result<CutoffFunction> {
    CutoffFunction::new(set, FIXTURE_KMAX, LambdaRule::TailSum { gain: FIXTURE_GAIN })
}

/// w = 1/2 on every component.
pub fn constant_weight(e: &BeurlingCarlesonSet) -> Result<BoundaryWeight> {
    BoundaryWeight::constant(e, 0.5)
}

/// Alternating 1/2, 1/4 across the components.
pub fn piecewise_weight(e: &BeurlingCarlesonSet) -> Result<BoundaryWeight> {
    let values: Vec<f64> = (0..e.components().len()).map(|i| if i % 2 == 0 { 0.5 } else { 0.25 }).collect();
    BoundaryWeight::per_component(e, &values)
}

/// C^∞ bump on (0, 1), equal to 1 on the middle half.
fn plateau(x: f64) -> f64 {
    let step = |y: f64| {
        let f = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
        f(y) / (f(y) + f(1.0 - y))
    };
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else if x < 0.25 {
        step(4.0 * x)
    } else if x > 0.75 {
        step(4.0 * (1.0 - x))
    } else {
        1.0
    }
}

/// Smooth weight: w = depth^{plateau} on each component, so w = 1 near ∂E and w = depth in the middle.
pub fn smooth_weight(e: &BeurlingCarlesonSet, log2: u32, depth: f64) -> Result<BoundaryWeight> {
    let comps = e.components();
    BoundaryWeight::from_fn(e, log2, |t| {
        comps
            .iter()
            .find(|c| c.contains_closed(t))
            .map(|c| depth.powf(plateau(c.offset(t) / c.span())))
            .unwrap_or(1.0)
    })
}

/// Single atom of the given mass, tagged C and carried by the point {e^{iφ}}.
pub fn c_atom(phi: f64, mass: f64) -> Result<InnerFunction> {
    let f = BeurlingCarlesonSet::point(phi);
    InnerFunction::new(vec![], SingularMeasure::new(vec![Atom { angle: phi, mass, part: Part::C }], Some(f))?)
}

/// Single atom tagged K.
pub fn k_atom(phi: f64, mass: f64) -> Result<InnerFunction> {
    InnerFunction::new(vec![], SingularMeasure::new(vec![Atom { angle: phi, mass, part: Part::K }], None)?)
}

/// (z − e^{iφ})^order, used to damp the oscillation of θ near an atom.
pub fn damping(phi: f64, order: usize) -> AnalyticSeries {
    let z0 = Complex64::from_polar(1.0, phi);
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..order {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i + 1] += v;
            next[i] -= v * z0;
        }
        c = next;
    }
    AnalyticSeries::new(c)
}

/// An angle in the larger gap of the two-gap fixture.
pub fn two_gap_off_e_angle() -> f64 {
    0.15 * TAU
}
