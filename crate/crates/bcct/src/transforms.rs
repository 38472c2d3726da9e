//! The families K, K₁, K₂ of boundary functions, their Cauchy transforms and the identities they satisfy.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::boundary_calculus::{grid_angle, indicator_samples, set_rule, AnalyticSeries, BoundaryGrid};
use crate::circle_sets::BeurlingCarlesonSet;
use crate::cutoff::CutoffFunction;
use crate::error::{Error, Result};
use crate::factors::{BoundaryWeight, InnerFunction, OuterFunction, OuterKind};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    K,
    K1,
    K2,
}

#[derive(Debug, Clone)]
pub enum Ingredients {
    /// s = conj(ζ p g W)
    K { cutoff: CutoffFunction, weight: BoundaryWeight },
    /// s = θ conj(ζ p g_F), F of measure zero carrying θ's singular part
    K1 { cutoff: CutoffFunction, theta: InnerFunction },
    /// s = θ conj(ζ p g_E W)
    K2 { cutoff: CutoffFunction, weight: BoundaryWeight, theta: InnerFunction },
}

impl Ingredients {
    pub fn family(&self) -> Family {
        match self {
            Ingredients::K { .. } => Family::K,
            Ingredients::K1 { .. } => Family::K1,
            Ingredients::K2 { .. } => Family::K2,
        }
    }

    pub fn cutoff(&self) -> &CutoffFunction {
        match self {
            Ingredients::K { cutoff, .. } | Ingredients::K1 { cutoff, .. } | Ingredients::K2 { cutoff, .. } => cutoff,
        }
    }

    pub fn theta(&self) -> Option<&InnerFunction> {
        match self {
            Ingredients::K1 { theta, .. } | Ingredients::K2 { theta, .. } => Some(theta),
            Ingredients::K { .. } => None,
        }
    }

    pub fn weight(&self) -> Option<&BoundaryWeight> {
        match self {
            Ingredients::K { weight, .. } | Ingredients::K2 { weight, .. } => Some(weight),
            Ingredients::K1 { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMember {
    pub family: Family,
    pub p: AnalyticSeries,
    pub ingredients: Ingredients,
    outer: Option<OuterFunction>,
    pub samples: BoundaryGrid,
}

fn same_set(a: &BeurlingCarlesonSet, b: &BeurlingCarlesonSet) -> bool {
    a.gaps.len() == b.gaps.len()
        && a.gaps.iter().zip(&b.gaps).all(|(x, y)| (x.start - y.start).abs() < 1e-12 && (x.end - y.end).abs() < 1e-12)
}

/// Smallest number of grid nodes inside any gap or component of the set.
fn min_cells(set: &BeurlingCarlesonSet, log2: u32) -> f64 {
    let n = (1u64 << log2) as f64;
    set.gaps.iter().chain(set.components().iter()).map(|a| a.length() * n).fold(f64::INFINITY, f64::min)
}

pub fn build_member(family: Family, p: AnalyticSeries, ingredients: Ingredients, log2: u32) -> Result<KMember> {
    if ingredients.family() != family {
        return Err(Error::IngredientMismatch(format!(
            "{family:?} requested with {:?} ingredients",
            ingredients.family()
        )));
    }
    let cutoff = ingredients.cutoff();
    if let Some(w) = ingredients.weight() {
        if !same_set(&w.support, &cutoff.set) {
            return Err(Error::IngredientMismatch("weight and cut-off live on different sets".into()));
        }
    }
    if let Ingredients::K1 { theta, .. } = &ingredients {
        if cutoff.set.measure > 1e-12 {
            return Err(Error::IngredientMismatch("K1 needs a carrier of measure zero".into()));
        }
        if theta.singular.atoms.iter().any(|a| cutoff.set.dist(a.angle) > 1e-12) {
            return Err(Error::IngredientMismatch("θ has singular mass off the carrier".into()));
        }
    }
    if min_cells(&cutoff.set, log2) < 8.0 {
        return Err(Error::Resolution(format!("grid 2^{log2} puts fewer than 8 nodes in some arc")));
    }
    let outer = match ingredients.weight() {
        Some(w) => Some(OuterFunction::from_weight(w)?),
        None => None,
    };
    let outer_grid = match &outer {
        Some(o) if matches!(o.kind, OuterKind::Sampled { .. }) => Some(o.boundary_samples(log2)?),
        _ => None,
    };
    let mut member = KMember {
        family,
        p,
        ingredients,
        outer,
        samples: BoundaryGrid::new(log2, vec![ZERO; 1 << log2])?,
    };
    let samples: Vec<Complex64> = (0..1usize << log2)
        .map(|m| {
            let t = grid_angle(log2, m);
            let w = match (&outer_grid, &member.outer) {
                (Some(g), _) => g.samples[m],
                (None, Some(o)) => o.boundary_value(t),
                (None, None) => Complex64::new(1.0, 0.0),
            };
            member.value_with(t, w)
        })
        .collect();
    member.samples = BoundaryGrid::new(log2, samples)?;
    Ok(member)
}

impl KMember {
    pub fn set(&self) -> &BeurlingCarlesonSet {
        &self.ingredients.cutoff().set
    }

    pub fn log2(&self) -> u32 {
        self.samples.log2_size
    }

    fn value_with(&self, t: f64, w: Complex64) -> Complex64 {
        let g = self.ingredients.cutoff().boundary_g(t);
        if g == ZERO {
            return ZERO;
        }
        let zeta = Complex64::from_polar(1.0, t);
        let core = (zeta * self.p.eval(zeta) * g * w).conj();
        match self.ingredients.theta() {
            Some(th) => th.boundary(t) * core,
            None => core,
        }
    }

    /// s(e^{it}) off the grid; needs a closed-form outer factor.
    pub fn value_at(&self, t: f64) -> Option<Complex64> {
        let w = match &self.outer {
            Some(o) => match o.kind {
                OuterKind::Piecewise(_) => o.boundary_value(t),
                OuterKind::Sampled { .. } => return None,
            },
            None => Complex64::new(1.0, 0.0),
        };
        Some(self.value_with(t, w))
    }

    /// Grid samples of s·1_{T∖E} (gap side).
    fn gap_side(&self) -> Vec<Complex64> {
        let ind = indicator_samples(self.set(), self.log2());
        self.samples.samples.iter().zip(&ind).map(|(s, e)| s * (1.0 - e)).collect()
    }

    fn e_side(&self) -> Vec<Complex64> {
        let ind = indicator_samples(self.set(), self.log2());
        self.samples.samples.iter().zip(&ind).map(|(s, e)| s * e).collect()
    }
}

/// Nonnegative DFT coefficients (first half of the band).
fn nonneg_coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2);
    buf.iter().map(|c| c / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayWindow {
    pub lo: usize,
    pub hi: usize,
    /// Fit stops where |S_n| drops below this multiple of the round-off floor.
    pub floor_factor: f64,
}

impl Default for DecayWindow {
    fn default() -> Self {
        DecayWindow { lo: 64, hi: 1024, floor_factor: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: DecayWindow,
    /// Last index used; below `lo + 7` the coefficients hit round-off inside the window and the slope is −∞.
    pub fit_hi: usize,
    /// Median |S_n| over the upper half of the band.
    pub floor: f64,
    pub slope: f64,
}

impl DecayFit {
    /// Slope ≤ −(M+1) certifies |S_n| ≲ n^{−M} on the window.
    pub fn certifies(&self, m: u32) -> bool {
        self.slope <= -(m as f64 + 1.0)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v[v.len() / 2]
}

/// Median |c_n| over the upper half of the band.
pub fn roundoff_floor(coeffs: &[Complex64]) -> f64 {
    median(coeffs[coeffs.len() / 2..].iter().map(|c| c.norm()).collect())
}

/// Number of leading coefficients before the first one below `factor` × round-off floor.
pub fn resolved_length(coeffs: &[Complex64], factor: f64) -> usize {
    let floor = roundoff_floor(coeffs);
    coeffs.iter().position(|c| c.norm() < factor * floor).unwrap_or(coeffs.len())
}

/// Least-squares slope of log|S_n| against log n over the window, cut at the round-off floor.
pub fn fit_decay(coeffs: &[Complex64], window: DecayWindow) -> Result<DecayFit> {
    let len = coeffs.len();
    if window.hi >= len || window.lo < 1 || window.lo >= window.hi {
        return Err(Error::Resolution(format!("window [{}, {}] does not fit a band of {len}", window.lo, window.hi)));
    }
    let floor = roundoff_floor(coeffs);
    let mut end = window.hi;
    for n in window.lo..=window.hi {
        if coeffs[n].norm() < window.floor_factor * floor {
            end = n - 1;
            break;
        }
    }
    if end < window.lo + 7 {
        return Ok(DecayFit { window, fit_hi: end, floor, slope: f64::NEG_INFINITY });
    }
    let pts: Vec<(f64, f64)> = (window.lo..=end).map(|n| ((n as f64).ln(), coeffs[n].norm().ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(DecayFit { window, fit_hi: end, floor, slope: sxy / sxx })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformResult {
    pub family: Family,
    pub log2_size: u32,
    pub series: AnalyticSeries,
    pub decay: DecayFit,
}

impl TransformResult {
    pub fn is_nonzero(&self) -> bool {
        self.series.h2_norm() > 0.0
    }
}

/// Coefficients of the transform for arbitrary samples following the family's route:
/// K uses the complement side, C_{s1_E} = −P₊(s 1_{T∖E}); K1/K2 project s itself.
fn route_coefficients(member: &KMember, samples: &[Complex64]) -> Vec<Complex64> {
    match member.family {
        Family::K => {
            let ind = indicator_samples(member.set(), member.log2());
            let gap: Vec<Complex64> = samples.iter().zip(&ind).map(|(s, e)| -s * (1.0 - e)).collect();
            nonneg_coefficients(&gap)
        }
        Family::K1 | Family::K2 => nonneg_coefficients(samples),
    }
}

pub fn transform_coefficients(member: &KMember) -> Result<Vec<Complex64>> {
    if member.family == Family::K && member.set().is_full_circle() {
        return Err(Error::Precondition("the transform over E needs E ≠ T".into()));
    }
    Ok(route_coefficients(member, &member.samples.samples))
}

pub fn smooth_transform(member: &KMember, window: DecayWindow) -> Result<TransformResult> {
    let coeffs = transform_coefficients(member)?;
    let decay = fit_decay(&coeffs, window)?;
    Ok(TransformResult { family: member.family, log2_size: member.log2(), series: AnalyticSeries::new(coeffs), decay })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipReport {
    pub points: usize,
    pub max_relative: f64,
    pub quadrature_nodes: usize,
}

/// Compare C_{s1_E}(z) from a graded Gauss–Legendre rule on E with the trapezoid sum
/// −∫_{T∖E} s/(1 − z ζ̄) dm on the gap side; `offset` is added to s on both sides.
pub fn flip_check_offset(member: &KMember, points: &[Complex64], offset: Complex64) -> Result<FlipReport> {
    if member.family != Family::K {
        return Err(Error::Precondition("flip identity is stated for family K".into()));
    }
    if member.value_at(0.0).is_none() {
        return Err(Error::Precondition("E-side quadrature needs a closed-form outer factor".into()));
    }
    let rule = set_rule(member.set(), &[], 40, 60, 0.1);
    let e_vals: Vec<(Complex64, Complex64)> = rule
        .nodes
        .iter()
        .map(|&t| (Complex64::from_polar(1.0, -t), member.value_at(t).unwrap_or(ZERO) + offset))
        .collect();
    let log2 = member.log2();
    let n = 1usize << log2;
    let ind = indicator_samples(member.set(), log2);
    let gap: Vec<(Complex64, Complex64)> = (0..n)
        .filter(|&m| ind[m] < 1.0)
        .map(|m| {
            let t = grid_angle(log2, m);
            (Complex64::from_polar(1.0, -t), (member.samples.samples[m] + offset) * (1.0 - ind[m]))
        })
        .collect();
    let mut worst: f64 = 0.0;
    for &z in points {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDomain(format!("{z}")));
        }
        let mut e_side = ZERO;
        for ((_, s), (&w, &t)) in e_vals.iter().zip(rule.weights.iter().zip(&rule.nodes)) {
            let zc = Complex64::from_polar(1.0, -t);
            e_side += w * s / (1.0 - z * zc);
        }
        e_side /= std::f64::consts::TAU;
        let mut c_side = ZERO;
        for (zc, s) in &gap {
            c_side -= s / (1.0 - z * zc);
        }
        c_side /= n as f64;
        let rel = (e_side - c_side).norm() / c_side.norm().max(1e-300);
        worst = worst.max(rel);
    }
    Ok(FlipReport { points: points.len(), max_relative: worst, quadrature_nodes: rule.len() })
}

pub fn flip_check(member: &KMember, points: &[Complex64]) -> Result<FlipReport> {
    flip_check_offset(member, points, ZERO)
}

/// max_n |(q(L) C_s)_n − (C_{q(ζ̄) s})_n| relative to ‖C_s‖.
pub fn backshift_poly(member: &KMember, q: &AnalyticSeries) -> Result<f64> {
    let base = transform_coefficients(member)?;
    let shift = q.len().saturating_sub(1);
    let len = base.len() - shift;
    let mut lhs = vec![ZERO; len];
    for (k, qk) in q.coeffs.iter().enumerate() {
        for (n, v) in lhs.iter_mut().enumerate() {
            *v += qk * base[n + k];
        }
    }
    let log2 = member.log2();
    let twisted: Vec<Complex64> = member
        .samples
        .samples
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let zc = Complex64::from_polar(1.0, -grid_angle(log2, m));
            q.eval(zc) * s
        })
        .collect();
    let rhs = route_coefficients(member, &twisted);
    let scale = AnalyticSeries::new(base).h2_norm().max(1e-300);
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale)
}

pub fn backshift_identity(member: &KMember, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    backshift_poly(member, &AnalyticSeries::monomial(k))
}

/// max_{k ≤ max_k} |Σ_n θ_{n−k} conj(S_n)| / scale.
pub fn model_space_residual(series: &[Complex64], theta_coeffs: &[Complex64], max_k: usize, scale: f64) -> f64 {
    (0..=max_k)
        .map(|k| {
            let mut acc = ZERO;
            for n in k..series.len() {
                if n - k >= theta_coeffs.len() {
                    break;
                }
                acc += theta_coeffs[n - k] * series[n].conj();
            }
            acc.norm()
        })
        .fold(0.0, f64::max)
        / scale.max(1e-300)
}

/// Orthogonality of C_s to θ z^k, k ≤ max_k, in coefficient space, relative to ‖s‖₂.
pub fn model_space_orthogonality(member: &KMember, max_k: usize) -> Result<f64> {
    let theta = member
        .ingredients
        .theta()
        .ok_or_else(|| Error::Precondition("orthogonality to θH² needs family K1 or K2".into()))?;
    let series = transform_coefficients(member)?;
    if max_k >= series.len() {
        return Err(Error::Precondition(format!("max_k = {max_k} exceeds the band")));
    }
    let th = theta.taylor(series.len());
    Ok(model_space_residual(&series, &th, max_k, member.samples.l2_norm()))
}

#[derive(Debug, Clone)]
pub struct Split {
    /// C_{s 1_{T∖E}}
    pub u1: AnalyticSeries,
    /// C_{s 1_E}
    pub u2: AnalyticSeries,
    /// max |u1 + u2 − C_s| relative to ‖C_s‖.
    pub additivity: f64,
}

pub fn split_transform(member: &KMember) -> Result<Split> {
    if member.family != Family::K2 {
        return Err(Error::Precondition("split applies to family K2".into()));
    }
    let u1 = nonneg_coefficients(&member.gap_side());
    let u2 = nonneg_coefficients(&member.e_side());
    let full = nonneg_coefficients(&member.samples.samples);
    let scale = AnalyticSeries::new(full.clone()).h2_norm().max(1e-300);
    let additivity = u1.iter().zip(&u2).zip(&full).map(|((a, b), c)| (a + b - c).norm()).fold(0.0, f64::max) / scale;
    Ok(Split { u1: AnalyticSeries::new(u1), u2: AnalyticSeries::new(u2), additivity })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConstants {
    pub degree: usize,
    /// max_{k ≤ d} |⟨z^k, u₁⟩| / ‖z^k‖_{X(α⁻¹)}
    pub c1: f64,
    /// max_{k ≤ d} |⟨z^k, u₂⟩| / ‖z^k √w‖_{L²(E)}
    pub c2: f64,
    /// sup over all polynomials of degree ≤ d, X(α⁻¹) norm
    pub c1_dual: f64,
    /// sup over all polynomials of degree ≤ d, L²(w 1_E) norm
    pub c2_dual: f64,
}

/// Gram matrix ∫_E ζ^{k−j} w dm of the monomials 1..z^d in L²(w 1_E).
pub fn weighted_gram(weight: &BoundaryWeight, degree: usize) -> DMatrix<Complex64> {
    let moments: Vec<Complex64> = (-(degree as i64)..=degree as i64).map(|n| weight.fourier(n)).collect();
    let d = degree as i64;
    DMatrix::from_fn(degree + 1, degree + 1, |j, k| moments[(j as i64 - k as i64 + d) as usize])
}

/// Norm of the functional a ↦ Σ a_j conj(v_j) against the Gram norm a*Ga.
pub fn dual_norm(gram: &DMatrix<Complex64>, v: &[Complex64]) -> Result<f64> {
    let n = gram.nrows();
    let rhs = DVector::from_iterator(n, v.iter().take(n).copied());
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Precondition("weighted Gram matrix is not positive definite".into()))?;
    let x = chol.solve(&rhs);
    Ok(rhs.dotc(&x).re.max(0.0).sqrt())
}

pub fn split_constants(split: &Split, weight: &BoundaryWeight, alpha: &[f64], degrees: &[usize]) -> Result<Vec<SplitConstants>> {
    let mass = weight.fourier(0).re.sqrt();
    let mut out = Vec::with_capacity(degrees.len());
    for &d in degrees {
        if d >= alpha.len() || d >= split.u1.len() {
            return Err(Error::LengthMismatch(d + 1, alpha.len().min(split.u1.len())));
        }
        let c1 = (0..=d).map(|k| alpha[k].sqrt() * split.u1.get(k).norm()).fold(0.0, f64::max);
        let c2 = (0..=d).map(|k| split.u2.get(k).norm()).fold(0.0, f64::max) / mass;
        let c1_dual = (0..=d).map(|k| alpha[k] * split.u1.get(k).norm_sqr()).sum::<f64>().sqrt();
        let c2_dual = dual_norm(&weighted_gram(weight, d), &split.u2.coeffs[..=d])?;
        out.push(SplitConstants { degree: d, c1, c2, c1_dual, c2_dual });
    }
    Ok(out)
}

/// max/min of a list of positive constants.
pub fn spread(values: &[f64]) -> f64 {
    let mx = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = values.iter().cloned().fold(f64::INFINITY, f64::min);
    mx / mn
}
