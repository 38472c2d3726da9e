//! Weighted sequence spaces X(α), X(α⁻¹), the diagonal space D(α⁻¹, w), Toeplitz truncations and area moments.

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary_calculus::{set_rule, AnalyticSeries};
use crate::error::{Error, Result};
use crate::factors::BoundaryWeight;
use crate::transforms::{transform_coefficients, Family, KMember};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    pub alpha: Vec<f64>,
    /// K(0), K(1), …, K(N_max)
    pub tail_indices: Vec<usize>,
    pub increasing: bool,
    /// α_k/k^N non-decreasing over the final half-range for every N < N_max (capped at 6).
    pub rapid_certified: bool,
    /// α_d^{1/d} at the last index, a proxy for α_k^{1/k} → 1.
    pub root_at_end: f64,
}

impl WeightSequence {
    pub fn from_alpha(alpha: Vec<f64>, n_max: u32) -> Self {
        let increasing = alpha.windows(2).all(|w| w[1] >= w[0]);
        let d = alpha.len();
        let half = d / 2;
        let rapid_certified = (0..n_max.min(6)).all(|n| {
            (half.max(1)..d.saturating_sub(1)).all(|k| {
                alpha[k + 1] / ((k + 1) as f64).powi(n as i32) >= alpha[k] / (k as f64).powi(n as i32) * (1.0 - 1e-12)
            })
        });
        let root_at_end = if d > 1 { alpha[d - 1].powf(1.0 / (d - 1) as f64) } else { 1.0 };
        WeightSequence { alpha, tail_indices: Vec::new(), increasing, rapid_certified, root_at_end }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn dual(&self) -> DualSequence {
        DualSequence { recip: self.alpha.iter().map(|a| 1.0 / a).collect() }
    }

    /// Σ α_k |S_k|²
    pub fn weighted_energy(&self, s: &[Complex64]) -> f64 {
        s.iter().zip(&self.alpha).map(|(c, a)| a * c.norm_sqr()).sum()
    }
}

/// Reciprocal weights 1/α_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSequence {
    pub recip: Vec<f64>,
}

impl DualSequence {
    pub fn ones(len: usize) -> Self {
        DualSequence { recip: vec![1.0; len] }
    }
}

/// k^{√k}, the growth cap.
pub fn growth_cap(k: usize) -> f64 {
    let kf = k as f64;
    if k == 0 {
        1.0
    } else {
        kf.powf(kf.sqrt())
    }
}

/// Least K ≥ 1 with Σ_{k≥K} k^N |S_k|² < 2^{−N}, from suffix sums.
fn tail_index(s2: &[f64], n: u32) -> usize {
    let thr = 2f64.powi(-(n as i32));
    let mut tail = 0.0;
    let mut best = s2.len();
    for k in (1..s2.len()).rev() {
        tail += (k as f64).powi(n as i32) * s2[k];
        if tail < thr {
            best = k;
        } else {
            break;
        }
    }
    best
}

/// Rapidly increasing α with Σ α_k|S_k|² ≤ ‖S‖² + Σ_{N=1}^{N_max} 2^{−N}.
pub fn rapid_weight(s: &AnalyticSeries, n_max: u32) -> Result<WeightSequence> {
    let len = s.len();
    let s2: Vec<f64> = s.coeffs.iter().map(|c| c.norm_sqr()).collect();
    let mut ks = vec![0usize];
    for n in 1..=n_max {
        let k = tail_index(&s2, n).max(*ks.last().unwrap_or(&0));
        if k >= len {
            return Err(Error::RangeExhausted(n));
        }
        ks.push(k);
    }
    let mut alpha = vec![1.0; len];
    for (k, a) in alpha.iter_mut().enumerate() {
        let n = ks.iter().rposition(|&kn| kn <= k).unwrap_or(0) as i32;
        let raw = if k == 0 { 1.0 } else { (k as f64).powi(n) };
        *a = raw.min(growth_cap(k));
    }
    let mut w = WeightSequence::from_alpha(alpha, n_max);
    w.tail_indices = ks;
    Ok(w)
}

pub fn x_norm(f: &AnalyticSeries, alpha: &[f64]) -> Result<f64> {
    if f.len() > alpha.len() {
        return Err(Error::LengthMismatch(f.len(), alpha.len()));
    }
    Ok(f.coeffs.iter().zip(alpha).map(|(c, a)| a * c.norm_sqr()).sum::<f64>().sqrt())
}

/// Σ f_k conj(g_k), shorter vector zero-padded.
pub fn pairing(f: &AnalyticSeries, g: &AnalyticSeries) -> Complex64 {
    f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a * b.conj()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToeplitzMode {
    /// T_{h̄} = h̃(L) acting on X(α)
    CoAnalytic,
    /// multiplication by h acting on X(α⁻¹)
    Multiplier,
}

/// (d+1)×(d+1) truncation of the Toeplitz operator in the given mode.
pub fn toeplitz_truncation(h: &AnalyticSeries, d: usize, mode: ToeplitzMode) -> DMatrix<Complex64> {
    DMatrix::from_fn(d + 1, d + 1, |row, col| match mode {
        ToeplitzMode::CoAnalytic if col >= row => h.get(col - row).conj(),
        ToeplitzMode::Multiplier if row >= col => h.get(row - col),
        _ => ZERO,
    })
}

/// Operator norm of `m` on C^{d+1} with the norm Σ weights_k |f_k|².
pub fn weighted_operator_norm(m: &DMatrix<Complex64>, weights: &[f64]) -> f64 {
    let n = m.nrows();
    let sim = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * (weights[i] / weights[j]).sqrt());
    sim.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Weighted norm of the truncation in its matching space: α for co-analytic, 1/α for multipliers.
pub fn toeplitz_weighted_norm(h: &AnalyticSeries, d: usize, mode: ToeplitzMode, alpha: &[f64]) -> Result<f64> {
    if alpha.len() < d + 1 {
        return Err(Error::LengthMismatch(d + 1, alpha.len()));
    }
    let m = toeplitz_truncation(h, d, mode);
    let weights: Vec<f64> = match mode {
        ToeplitzMode::CoAnalytic => alpha[..=d].to_vec(),
        ToeplitzMode::Multiplier => alpha[..=d].iter().map(|a| 1.0 / a).collect(),
    };
    Ok(weighted_operator_norm(&m, &weights))
}

/// max_k |−∫ z^k conj(C) dm + ∫_E z^k conj(s) dm| / scale for given transform coefficients.
pub fn annihilator_residual(member: &KMember, coeffs: &[Complex64], k_max: usize, scale: f64) -> Result<f64> {
    if k_max >= coeffs.len() {
        return Err(Error::Precondition(format!("k_max = {k_max} exceeds the band")));
    }
    let rule = set_rule(member.set(), &[], 40, 60, 0.1);
    let vals: Vec<Complex64> = rule
        .nodes
        .iter()
        .map(|&t| member.value_at(t).map(|v| v.conj()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Precondition("E-side integral needs a closed-form outer factor".into()))?;
    let mut worst: f64 = 0.0;
    for k in 0..=k_max {
        let mut e_side = ZERO;
        for ((&t, &w), v) in rule.nodes.iter().zip(&rule.weights).zip(&vals) {
            e_side += w * Complex64::from_polar(1.0, k as f64 * t) * v;
        }
        e_side /= std::f64::consts::TAU;
        worst = worst.max((e_side - coeffs[k].conj()).norm());
    }
    Ok(worst / scale.max(1e-300))
}

/// The annihilating functionals of the pair (C_{s1_E}, s) evaluated on z^k, k ≤ k_max.
pub fn annihilator_check(member: &KMember, k_max: usize) -> Result<f64> {
    if member.family != Family::K {
        return Err(Error::Precondition("annihilator identity is stated for family K".into()));
    }
    let coeffs = transform_coefficients(member)?;
    let scale = AnalyticSeries::new(coeffs.clone()).h2_norm();
    annihilator_residual(member, &coeffs, k_max, scale)
}

/// β_k(C) = ∫_D |z|^{2k} (1−|z|²)^C dA/π = B(k+1, C+1), by the ratio recursion.
pub fn moments_beta(c: f64, k_max: usize) -> Result<Vec<f64>> {
    if !(c > -1.0) {
        return Err(Error::Precondition(format!("exponent C = {c} must exceed −1")));
    }
    let mut out = Vec::with_capacity(k_max + 1);
    let mut b = 1.0 / (c + 1.0);
    for k in 0..=k_max {
        out.push(b);
        b *= (k as f64 + 1.0) / (k as f64 + c + 2.0);
    }
    Ok(out)
}

/// ln Γ(x) − ln Γ(x + a) for x ≥ 20 from the Stirling series, arranged so no large logs cancel.
fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    let tail = |z: f64| {
        let r = 1.0 / (z * z);
        (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / z
    };
    -a * x.ln() + a - (x + a - 0.5) * (a / x).ln_1p() + tail(x) - tail(x + a)
}

/// B(k+1, C+1) = Γ(k+1)Γ(C+1)/Γ(k+C+2). Plain log-Beta loses ~1e-12 relative near k = 1000
/// to cancellation between two log-gammas of size ~10⁴, so large k go through the Stirling ratio.
pub fn beta_closed_form(k: usize, c: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let x = k as f64 + 1.0;
    if x < 20.0 {
        // k! / ((C+1)(C+2)…(C+k+1))
        (1..=k + 1).fold(1.0, |acc, j| acc * if j <= k { j as f64 } else { 1.0 } / (c + j as f64))
    } else {
        gamma(c + 1.0) * ln_gamma_ratio(x, c + 1.0).exp()
    }
}

/// ∫_0^1 x^k (1−x)^C dx by composite Gauss–Legendre.
pub fn beta_quadrature(k: usize, c: f64, panels: usize) -> f64 {
    let gl = GaussLegendre::new(30).expect("30 nodes");
    let h = 1.0 / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 * h, (p + 1) as f64 * h);
        for (x, w) in gl.nodes().zip(gl.weights()) {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
            acc += 0.5 * (b - a) * w * t.powi(k as i32) * (1.0 - t).powf(c);
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub c: f64,
    pub beta: Vec<f64>,
    /// max relative gap between recursion and closed form
    pub closed_form_error: f64,
    /// (max/min − 1) of β_k k^{C+1} over the window
    pub ratio_spread: f64,
    pub window: (usize, usize),
}

pub fn moment_report(c: f64, window: (usize, usize)) -> Result<MomentReport> {
    let beta = moments_beta(c, window.1)?;
    let closed_form_error = beta
        .iter()
        .enumerate()
        .map(|(k, b)| (b - beta_closed_form(k, c)).abs() / beta_closed_form(k, c))
        .fold(0.0, f64::max);
    let ratios: Vec<f64> = (window.0..=window.1).map(|k| beta[k] * (k as f64).powf(c + 1.0)).collect();
    let mx = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MomentReport { c, beta, closed_form_error, ratio_spread: mx / mn - 1.0, window })
}

/// G_{jk} = δ_{jk}/α_j + ∫_E ζ^j conj(ζ^k) w dm, with its smallest eigenvalue.
pub fn d_space_gram(dual: &DualSequence, w: &BoundaryWeight, d: usize) -> Result<(DMatrix<Complex64>, f64)> {
    if dual.recip.len() < d + 1 {
        return Err(Error::LengthMismatch(d + 1, dual.recip.len()));
    }
    let moments: Vec<Complex64> = (-(d as i64)..=d as i64).map(|n| w.fourier(n)).collect();
    let g = DMatrix::from_fn(d + 1, d + 1, |j, k| {
        let diag = if j == k { dual.recip[j] } else { 0.0 };
        moments[(k as i64 - j as i64 + d as i64) as usize] + diag
    });
    let min_eig = g.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((g, min_eig))
}

/// Coefficients of the projection of the tuple (f, f) onto diagonal polynomials of degree ≤ d.
pub fn diagonal_projection(dual: &DualSequence, w: &BoundaryWeight, f: &AnalyticSeries, d: usize) -> Result<Vec<Complex64>> {
    let (g, _) = d_space_gram(dual, w, d)?;
    let flen = f.len();
    let moments: Vec<Complex64> = (-(flen as i64 + d as i64)..=(flen as i64 + d as i64)).map(|n| w.fourier(n)).collect();
    let off = (flen + d) as i64;
    let rhs = DVector::from_fn(d + 1, |j, _| {
        let mut acc = f.get(j) * dual.recip[j];
        for k in 0..flen {
            acc += f.get(k) * moments[(j as i64 - k as i64 + off) as usize];
        }
        acc
    });
    // G is Hermitian with G_{jk} = ⟨e_k, e_j⟩, so G c = rhs gives the projection.
    let sol = g
        .cholesky()
        .ok_or_else(|| Error::Precondition("Gram matrix is not positive definite".into()))?
        .solve(&rhs);
    Ok(sol.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_sets::BeurlingCarlesonSet;

    #[test]
    fn degenerate_tails() {
        let mut c = vec![0.0; 64];
        c[0] = 1.0;
        let w = rapid_weight(&AnalyticSeries::from_real(&c), 4).unwrap();
        assert_eq!(&w.tail_indices[1..], &[1, 1, 1, 1]);
        assert!(w.increasing);
        for (k, a) in w.alpha.iter().enumerate().skip(2) {
            assert!(*a <= growth_cap(k));
        }
    }

    #[test]
    fn beta_small_cases() {
        let b1 = moments_beta(1.0, 10).unwrap();
        let b0 = moments_beta(0.0, 10).unwrap();
        for k in 0..=10 {
            let kf = k as f64;
            assert!((b1[k] - 1.0 / ((kf + 1.0) * (kf + 2.0))).abs() < 1e-15);
            assert!((b0[k] - 1.0 / (kf + 1.0)).abs() < 1e-15);
        }
        assert!((beta_quadrature(5, 2.5, 8) - beta_closed_form(5, 2.5)).abs() < 1e-13);
        assert!(moments_beta(-1.0, 3).is_err());
    }

    #[test]
    fn closed_form_matches_exact_integer_cases() {
        for k in (0..4096).step_by(7).chain(17..23) {
            let kf = k as f64;
            let e0 = 1.0 / (kf + 1.0);
            let e1 = 1.0 / ((kf + 1.0) * (kf + 2.0));
            assert!((beta_closed_form(k, 0.0) - e0).abs() / e0 < 2e-14, "k = {k}");
            assert!((beta_closed_form(k, 1.0) - e1).abs() / e1 < 2e-14, "k = {k}");
        }
    }

    #[test]
    fn gram_on_full_circle() {
        let e = BeurlingCarlesonSet::full_circle();
        let w = BoundaryWeight::constant(&e, 1.0).unwrap();
        let (g, min) = d_space_gram(&DualSequence::ones(9), &w, 8).unwrap();
        for j in 0..9 {
            for k in 0..9 {
                let want = if j == k { 2.0 } else { 0.0 };
                assert!((g[(j, k)] - want).norm() < 1e-14);
            }
        }
        assert!((min - 2.0).abs() < 1e-12);
    }

    #[test]
    fn backward_shift_contracts() {
        let alpha: Vec<f64> = (0..33).map(|k| (1.0 + k as f64).powi(3)).collect();
        let n = toeplitz_weighted_norm(&AnalyticSeries::monomial(1), 32, ToeplitzMode::CoAnalytic, &alpha).unwrap();
        assert!(n <= 1.0 + 1e-12);
        let c = toeplitz_weighted_norm(&AnalyticSeries::from_real(&[0.7]), 32, ToeplitzMode::Multiplier, &alpha).unwrap();
        assert!((c - 0.7).abs() < 1e-14);
    }
}
