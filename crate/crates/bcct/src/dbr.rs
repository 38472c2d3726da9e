//! de Branges–Rovnyak kernels, the divisor recipe for b_n, the J-embedding relation and the
//! permanence functionals on the family K₂.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::boundary_calculus::{disk_lattice, AnalyticSeries, BoundaryGrid};
use crate::circle_sets::{Arc, BeurlingCarlesonSet};
use crate::cutoff::CutoffFunction;
use crate::error::{Error, Result};
use crate::factors::{BoundaryWeight, InnerFunction, OuterFunction, WeightPiece, WeightProfile};
use crate::spaces::{rapid_weight, WeightSequence};
use crate::transforms::{
    build_member, model_space_orthogonality, resolved_length, split_constants, split_transform, spread, Family, Ingredients,
    SplitConstants,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// b = θ·u with |u| = w on E_b and |u| = 1 elsewhere (w ≤ 1).
#[derive(Debug, Clone)]
pub struct SymbolB {
    pub inner: InnerFunction,
    pub outer_weight: BoundaryWeight,
    outer: OuterFunction,
}

impl SymbolB {
    pub fn new(inner: InnerFunction, outer_weight: BoundaryWeight) -> Result<Self> {
        let too_big = match &outer_weight.profile {
            WeightProfile::Piecewise(pieces) => pieces.iter().any(|p| p.value > 1.0),
            WeightProfile::Sampled { values, .. } => values.iter().any(|&v| v > 1.0),
        };
        if too_big {
            return Err(Error::Precondition("|u| must not exceed 1".into()));
        }
        let outer = OuterFunction::from_weight(&outer_weight)?;
        Ok(SymbolB { inner, outer_weight, outer })
    }

    pub fn e_b(&self) -> &BeurlingCarlesonSet {
        &self.outer_weight.support
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.inner.eval(z) * self.outer.eval(z)
    }

    /// Extremality proxy: ∫ log Δ dm = −∞ because Δ vanishes on T∖E_b, which has positive measure.
    pub fn extremal_proxy(&self) -> bool {
        self.e_b().measure < 1.0 - 1e-12
    }

    /// Boundary samples of b and of Δ = √(1 − |b|²).
    pub fn boundary(&self, log2: u32) -> Result<(BoundaryGrid, Vec<f64>)> {
        let u = self.outer.boundary_samples(log2)?;
        let mut b = Vec::with_capacity(u.size());
        let mut delta = Vec::with_capacity(u.size());
        for (m, uv) in u.samples.iter().enumerate() {
            let uv = if uv.is_finite() { *uv } else { ZERO };
            let v = self.inner.boundary(u.angle(m)) * uv;
            delta.push((1.0 - uv.norm_sqr()).max(0.0).sqrt());
            b.push(v);
        }
        Ok((BoundaryGrid::new(log2, b)?, delta))
    }
}

/// k_b(λ, z) = (1 − conj(b(λ)) b(z)) / (1 − conj(λ) z)
pub fn kernel_eval(b: &SymbolB, lambda: Complex64, z: Complex64) -> Result<Complex64> {
    if lambda.norm() >= 1.0 || z.norm() >= 1.0 {
        return Err(Error::OutsideDomain(format!("λ = {lambda}, z = {z}")));
    }
    Ok((1.0 - b.eval(lambda).conj() * b.eval(z)) / (1.0 - lambda.conj() * z))
}

/// Gram matrix [k_b(λ_j, λ_i)]_{ij}.
pub fn kernel_gram(b: &SymbolB, points: &[Complex64]) -> Result<DMatrix<Complex64>> {
    if let Some(p) = points.iter().find(|p| p.norm() >= 1.0) {
        return Err(Error::OutsideDomain(format!("{p}")));
    }
    let vals: Vec<Complex64> = points.iter().map(|&p| b.eval(p)).collect();
    Ok(DMatrix::from_fn(points.len(), points.len(), |i, j| {
        (1.0 - vals[j].conj() * vals[i]) / (1.0 - points[j].conj() * points[i])
    }))
}

pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Largest sampled |b/b_n| over a disk lattice and the circle of radius 0.995.
pub fn divisor_ratio(b: &SymbolB, b_n: &SymbolB, samples: usize) -> f64 {
    let mut pts = disk_lattice(samples / 2, 0.99);
    let ring = samples - pts.len();
    pts.extend((0..ring).map(|m| Complex64::from_polar(0.995, std::f64::consts::TAU * m as f64 / ring as f64)));
    pts.iter()
        .map(|&z| {
            let den = b_n.eval(z).norm();
            if den < 1e-300 {
                0.0
            } else {
                b.eval(z).norm() / den
            }
        })
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of [k_b − k_{b_n}] at the given points, after checking |b/b_n| ≤ 1.
pub fn kernel_difference_psd(b: &SymbolB, b_n: &SymbolB, points: &[Complex64]) -> Result<f64> {
    if points.len() > 64 {
        return Err(Error::Precondition("at most 64 points".into()));
    }
    let ratio = divisor_ratio(b, b_n, 1024);
    if ratio > 1.0 + 1e-8 {
        return Err(Error::NotADivisor(ratio));
    }
    let d = kernel_gram(b, points)? - kernel_gram(b_n, points)?;
    Ok(min_eigenvalue(&d))
}

/// Remove the last 2^{-n} fraction of each arc (the shrinking set J_n).
fn shrink(arc: &Arc, n: u32) -> Result<Arc> {
    Arc::new(arc.start, arc.end - arc.span() * 2f64.powi(-(n as i32)))
}

/// b_n = θ_n u_n with θ_n = B·S_{(1−2^{-n})ν} and |u_n| = |u| on E_n = E ∖ J_n, 1 elsewhere.
pub fn divisor_symbol(b: &SymbolB, n: u32) -> Result<SymbolB> {
    let nu = b.inner.singular.scaled(1.0 - 2f64.powi(-(n as i32)));
    let inner = InnerFunction::new(b.inner.blaschke_zeros.clone(), nu)?;
    let e = b.e_b();
    let weight = match &b.outer_weight.profile {
        WeightProfile::Piecewise(pieces) => {
            let shrunk = pieces
                .iter()
                .map(|p| Ok(WeightPiece { arc: shrink(&p.arc, n)?, value: p.value }))
                .collect::<Result<Vec<_>>>()?;
            BoundaryWeight::piecewise(e, shrunk)?
        }
        WeightProfile::Sampled { log2_size, values } => {
            let comps: Vec<Arc> = e.components().iter().map(|c| shrink(c, n)).collect::<Result<_>>()?;
            let masked = values
                .iter()
                .enumerate()
                .map(|(m, &v)| {
                    let t = crate::boundary_calculus::grid_angle(*log2_size, m);
                    if comps.iter().any(|c| c.contains_closed(t)) {
                        v
                    } else {
                        1.0
                    }
                })
                .collect();
            BoundaryWeight::sampled(e, *log2_size, masked)?
        }
    };
    SymbolB::new(inner, weight)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JReport {
    /// max_{k ≤ k_max} |⟨(f, g), (b z^k, Δ z^k)⟩| / ‖f‖
    pub annihilator: f64,
    /// ‖P₊(b̄ f) + P₊(Δ g)‖ / ‖f‖ over the band
    pub direct: f64,
}

/// Boundary samples of the tuple (k^b_λ, −conj(b(λ)) Δ k_λ), which satisfies the J-relation.
pub fn kernel_tuple(b: &SymbolB, lambda: Complex64, log2: u32) -> Result<(BoundaryGrid, BoundaryGrid)> {
    if lambda.norm() >= 1.0 {
        return Err(Error::OutsideDomain(format!("{lambda}")));
    }
    let bl = b.eval(lambda).conj();
    let (bb, delta) = b.boundary(log2)?;
    let szego = |m: usize| 1.0 / (1.0 - lambda.conj() * Complex64::from_polar(1.0, bb.angle(m)));
    let f = (0..bb.size()).map(|m| (1.0 - bl * bb.samples[m]) * szego(m)).collect();
    let g = (0..bb.size()).map(|m| -bl * delta[m] * szego(m)).collect();
    Ok((BoundaryGrid::new(log2, f)?, BoundaryGrid::new(log2, g)?))
}

pub fn j_relation_check(b: &SymbolB, f: &BoundaryGrid, g: &BoundaryGrid, k_max: usize) -> Result<JReport> {
    if f.log2_size != g.log2_size {
        return Err(Error::Precondition("f and g live on different grids".into()));
    }
    let (bb, delta) = b.boundary(f.log2_size)?;
    let n = f.size();
    let mut buf: Vec<Complex64> =
        (0..n).map(|m| bb.samples[m].conj() * f.samples[m] + delta[m] * g.samples[m]).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let coeffs: Vec<Complex64> = buf[..n / 2].iter().map(|c| c / n as f64).collect();
    let scale = f.l2_norm().max(1e-300);
    let annihilator = coeffs[..=k_max.min(n / 2 - 1)].iter().map(|c| c.norm()).fold(0.0, f64::max) / scale;
    let direct = AnalyticSeries::new(coeffs).h2_norm() / scale;
    Ok(JReport { annihilator, direct })
}

#[derive(Debug, Clone)]
pub struct PermanenceSetup {
    pub cutoff: CutoffFunction,
    pub weight: BoundaryWeight,
    pub theta: InnerFunction,
    /// Each basis member is p_j = damping · z^j.
    pub damping: AnalyticSeries,
    pub members: usize,
    pub log2: u32,
    pub max_k: usize,
    pub degrees: Vec<usize>,
    pub n_max: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermanenceReport {
    pub orthogonality: Vec<f64>,
    pub constants: Vec<Vec<SplitConstants>>,
    pub alpha: WeightSequence,
    /// worst spread over members of the fitted u₁ constants across degrees
    pub c1_spread: f64,
    pub c2_spread: f64,
    pub stable: bool,
}

/// Envelope √(Σ_j |u1_j,k|²) over the resolved range, normalised to unit norm.
fn envelope(series: &[AnalyticSeries]) -> AnalyticSeries {
    let len = series.iter().map(|s| resolved_length(&s.coeffs, 100.0)).max().unwrap_or(0);
    let env: Vec<f64> = (0..len).map(|k| series.iter().map(|s| s.get(k).norm_sqr()).sum::<f64>().sqrt()).collect();
    let norm = env.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    AnalyticSeries::from_real(&env.iter().map(|v| v / norm).collect::<Vec<_>>())
}

/// Orthogonality to θH² and split-functional constants for a basis of K₂ members;
/// α is built from the u₁ pieces unless supplied.
pub fn permanence_functional_check(setup: &PermanenceSetup, alpha: Option<&WeightSequence>) -> Result<PermanenceReport> {
    let mut orthogonality = Vec::new();
    let mut splits = Vec::new();
    for j in 0..setup.members {
        let p = setup.damping.mul(&AnalyticSeries::monomial(j));
        let ing = Ingredients::K2 { cutoff: setup.cutoff.clone(), weight: setup.weight.clone(), theta: setup.theta.clone() };
        let member = build_member(Family::K2, p, ing, setup.log2)?;
        orthogonality.push(model_space_orthogonality(&member, setup.max_k)?);
        splits.push(split_transform(&member)?);
    }
    let alpha = match alpha {
        Some(a) => a.clone(),
        None => {
            // A slowly decaying u1 cannot support N_max levels on the resolved range; fall back to fewer.
            let env = envelope(&splits.iter().map(|s| s.u1.clone()).collect::<Vec<_>>());
            let mut n = setup.n_max;
            loop {
                match rapid_weight(&env, n) {
                    Err(Error::RangeExhausted(_)) if n > 1 => n -= 1,
                    other => break other?,
                }
            }
        }
    };
    let mut constants = Vec::new();
    let (mut c1_spread, mut c2_spread): (f64, f64) = (1.0, 1.0);
    for s in &splits {
        let c = split_constants(s, &setup.weight, &alpha.alpha, &setup.degrees)?;
        c1_spread = c1_spread.max(spread(&c.iter().map(|x| x.c1).collect::<Vec<_>>()));
        c2_spread = c2_spread.max(spread(&c.iter().map(|x| x.c2).collect::<Vec<_>>()));
        constants.push(c);
    }
    Ok(PermanenceReport { orthogonality, constants, alpha, c1_spread, c2_spread, stable: c1_spread <= 2.0 && c2_spread <= 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_sets::validate_set;
    use crate::factors::{Atom, Part, SingularMeasure};

    fn symbol() -> SymbolB {
        let e = validate_set(&[Arc::from_normalized(0.1, 0.3).unwrap()]).unwrap();
        let w = BoundaryWeight::constant(&e, 0.5).unwrap();
        let nu = SingularMeasure::new(vec![Atom { angle: 2.0, mass: 0.4, part: Part::K }], None).unwrap();
        SymbolB::new(InnerFunction::new(vec![Complex64::new(0.3, 0.2)], nu).unwrap(), w).unwrap()
    }

    #[test]
    fn szego_when_b_negligible() {
        let e = BeurlingCarlesonSet::full_circle();
        let tiny = BoundaryWeight::constant(&e, (-700f64).exp()).unwrap();
        let b = SymbolB::new(InnerFunction::one(), tiny).unwrap();
        let l = Complex64::new(0.2, -0.3);
        let z = Complex64::new(-0.1, 0.5);
        assert!((kernel_eval(&b, l, z).unwrap() - 1.0 / (1.0 - l.conj() * z)).norm() < 1e-15);
        let w = BoundaryWeight::constant(&e, 1.0).unwrap();
        let bz = SymbolB::new(InnerFunction::new(vec![Complex64::new(0.0, 0.0)], SingularMeasure::default()).unwrap(), w)
            .unwrap();
        assert!((kernel_eval(&bz, Complex64::new(0.0, 0.0), z).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn hermitian_and_diagonal() {
        let b = symbol();
        let l = Complex64::new(0.4, 0.1);
        let z = Complex64::new(-0.3, 0.6);
        assert!((kernel_eval(&b, l, z).unwrap() - kernel_eval(&b, z, l).unwrap().conj()).norm() < 1e-12);
        let d = kernel_eval(&b, l, l).unwrap();
        assert!((d.re - (1.0 - b.eval(l).norm_sqr()) / (1.0 - l.norm_sqr())).abs() < 1e-12);
    }

    #[test]
    fn divisor_and_swap() {
        let b = symbol();
        let bn = divisor_symbol(&b, 3).unwrap();
        let pts = disk_lattice(32, 0.9);
        assert!(kernel_difference_psd(&b, &bn, &pts).unwrap() >= -1e-10);
        assert!(matches!(kernel_difference_psd(&bn, &b, &pts), Err(Error::NotADivisor(_))));
    }
}
