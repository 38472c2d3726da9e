//! Uniform circle grids, FFT-based Fourier coefficients, analytic projection,
//! conjugate functions, Fejér means, interior evaluation and Cauchy quadrature.

use std::f64::consts::TAU;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::circle_sets::BeurlingCarlesonSet;
use crate::error::{Error, Result};

pub const MIN_LOG2: u32 = 8;

/// Samples on the 2^log2_size equispaced points e^{it_m}, t_m = 2πm/size.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    pub log2_size: u32,
    pub samples: Vec<Complex64>,
}

pub fn grid_angle(log2: u32, m: usize) -> f64 {
    TAU * m as f64 / (1usize << log2) as f64
}

impl BoundaryGrid {
    pub fn new(log2_size: u32, samples: Vec<Complex64>) -> Result<Self> {
        if log2_size < MIN_LOG2 {
            return Err(Error::Resolution(format!("grid 2^{log2_size} is below 2^{MIN_LOG2}")));
        }
        if samples.len() != 1usize << log2_size {
            return Err(Error::LengthMismatch(samples.len(), 1usize << log2_size));
        }
        Ok(BoundaryGrid { log2_size, samples })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(log2_size: u32, f: F) -> Result<Self> {
        let n = 1usize << log2_size;
        let samples = (0..n).map(|m| f(grid_angle(log2_size, m))).collect();
        BoundaryGrid::new(log2_size, samples)
    }

    pub fn size(&self) -> usize {
        self.samples.len()
    }

    pub fn angle(&self, m: usize) -> f64 {
        grid_angle(self.log2_size, m)
    }

    /// All coefficients c_n, n = 0..size in FFT order (index m ≥ size/2 holds n = m − size).
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let inv = 1.0 / buf.len() as f64;
        for c in buf.iter_mut() {
            *c *= inv;
        }
        buf
    }

    /// Grid mean, the trapezoid value of ∫ f dm.
    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.size() as f64
    }

    /// Root-mean-square of the samples, the trapezoid L² norm.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.size() as f64).sqrt()
    }

    /// Trapezoid value of ∫ f conj(g) dm.
    pub fn inner(&self, other: &BoundaryGrid) -> Complex64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum::<Complex64>() / self.size() as f64
    }
}

/// Coefficients c_{-band}..c_{band}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSided {
    pub band: usize,
    pub coeffs: Vec<Complex64>,
}

impl TwoSided {
    pub fn get(&self, n: i64) -> Complex64 {
        let idx = n + self.band as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn from_fn<F: Fn(i64) -> Complex64>(band: usize, f: F) -> Self {
        let b = band as i64;
        TwoSided { band, coeffs: (-b..=b).map(f).collect() }
    }
}

pub fn fourier_coefficients(grid: &BoundaryGrid, band: usize) -> Result<TwoSided> {
    let n = grid.size();
    if band >= n / 2 {
        return Err(Error::BandTooLarge { band, size: n });
    }
    let spec = grid.spectrum();
    let b = band as i64;
    Ok(TwoSided { band, coeffs: (-b..=b).map(|k| spec[k.rem_euclid(n as i64) as usize]).collect() })
}

/// Samples of Σ c_n e^{int} on a 2^log2 grid.
pub fn synthesize(c: &TwoSided, log2: u32) -> Result<BoundaryGrid> {
    let n = 1usize << log2;
    if c.band >= n / 2 {
        return Err(Error::BandTooLarge { band: c.band, size: n });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let b = c.band as i64;
    for k in -b..=b {
        buf[k.rem_euclid(n as i64) as usize] += c.get(k);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    BoundaryGrid::new(log2, buf)
}

/// Finite power series Σ f_k z^k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSeries {
    pub coeffs: Vec<Complex64>,
}

impl AnalyticSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        AnalyticSeries { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        AnalyticSeries { coeffs: coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        c[k] = Complex64::new(1.0, 0.0);
        AnalyticSeries { coeffs: c }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Horner evaluation with no domain check.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Horner evaluation of the derivative.
    pub fn eval_derivative(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..self.coeffs.len()).rev() {
            acc = acc * z + self.coeffs[k] * k as f64;
        }
        acc
    }

    pub fn h2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        AnalyticSeries { coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    pub fn add(&self, other: &AnalyticSeries) -> Self {
        let n = self.len().max(other.len());
        AnalyticSeries { coeffs: (0..n).map(|k| self.get(k) + other.get(k)).collect() }
    }

    pub fn truncate(&self, len: usize) -> Self {
        AnalyticSeries { coeffs: (0..len).map(|k| self.get(k)).collect() }
    }

    /// L^k f: drop the first k coefficients.
    pub fn backward_shift(&self, k: usize) -> Self {
        AnalyticSeries { coeffs: self.coeffs.iter().skip(k).copied().collect() }
    }

    pub fn mul(&self, other: &AnalyticSeries) -> Self {
        if self.is_empty() || other.is_empty() {
            return AnalyticSeries::new(Vec::new());
        }
        let mut c = vec![Complex64::new(0.0, 0.0); self.len() + other.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        AnalyticSeries { coeffs: c }
    }

    /// Boundary samples on a 2^log2 grid (band-limited, so exact up to round-off).
    pub fn boundary(&self, log2: u32) -> Result<BoundaryGrid> {
        let n = 1usize << log2;
        if self.len() > n {
            return Err(Error::BandTooLarge { band: self.len(), size: n });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..self.len()].copy_from_slice(&self.coeffs);
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        BoundaryGrid::new(log2, buf)
    }
}

/// Keep the coefficients with n ≥ 0.
pub fn analytic_projection(c: &TwoSided) -> AnalyticSeries {
    AnalyticSeries { coeffs: c.coeffs[c.band..].to_vec() }
}

/// Non-negative coefficients 0..size/2 of grid data.
pub fn analytic_part(grid: &BoundaryGrid) -> AnalyticSeries {
    let spec = grid.spectrum();
    AnalyticSeries { coeffs: spec[..grid.size() / 2].to_vec() }
}

/// Conjugate function: multiplier −i·sign(n) on the Fourier coefficients of real data.
pub fn conjugate_function(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let minus_i = Complex64::new(0.0, -1.0);
    buf[0] = Complex64::new(0.0, 0.0);
    for (m, c) in buf.iter_mut().enumerate().skip(1) {
        if 2 * m == n {
            *c = Complex64::new(0.0, 0.0);
        } else if 2 * m < n {
            *c *= minus_i;
        } else {
            *c *= -minus_i;
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Fejér mean of order `degree`: coefficient k scaled by 1 − k/(degree+1).
pub fn fejer_means(f: &AnalyticSeries, degree: usize) -> AnalyticSeries {
    let d = degree as f64 + 1.0;
    AnalyticSeries { coeffs: (0..=degree).map(|k| f.get(k) * (1.0 - k as f64 / d)).collect() }
}

pub fn evaluate_in_disk(f: &AnalyticSeries, z: Complex64) -> Result<Complex64> {
    if z.norm() > 1.0 - 1e-6 {
        return Err(Error::OutsideDomain(format!("{z}")));
    }
    Ok(f.eval(z))
}

/// Trapezoid value of ∫ s(ζ)/(1 − z conj ζ) dm on grid samples (already multiplied by 1_E).
pub fn cauchy_quadrature(grid: &BoundaryGrid, z: Complex64) -> Result<Complex64> {
    if z.norm() > 0.95 {
        return Err(Error::OutsideDomain(format!("{z}")));
    }
    let n = grid.size();
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, s) in grid.samples.iter().enumerate() {
        let zeta = Complex64::from_polar(1.0, grid.angle(m));
        acc += s / (1.0 - z * zeta.conj());
    }
    Ok(acc / n as f64)
}

/// Indicator of E on the grid; nodes within `snap` radians of a gap endpoint get 1/2.
pub fn indicator_samples(e: &BeurlingCarlesonSet, log2: u32) -> Vec<f64> {
    let n = 1usize << log2;
    let snap = 1e-9 * TAU / n as f64;
    (0..n)
        .map(|m| {
            let t = grid_angle(log2, m);
            if e.is_endpoint(t, snap) {
                0.5
            } else if e.contains(t) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Largest distance (radians) from a gap endpoint to the nearest grid node.
pub fn misalignment(e: &BeurlingCarlesonSet, log2: u32) -> f64 {
    let h = TAU / (1usize << log2) as f64;
    e.endpoints()
        .iter()
        .map(|&t| {
            let r = (t / h).round() * h;
            (t - r).abs()
        })
        .fold(0.0, f64::max)
}

/// Sup of |f| on the circle: dense sampling followed by golden-section refinement of local maxima.
pub fn sup_norm(f: &AnalyticSeries) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    let n = (16 * f.len()).next_power_of_two().max(1 << 10);
    let vals: Vec<f64> =
        (0..n).map(|m| f.eval(Complex64::from_polar(1.0, TAU * m as f64 / n as f64)).norm()).collect();
    let mut best = vals.iter().cloned().fold(0.0, f64::max);
    let h = TAU / n as f64;
    let at = |t: f64| f.eval(Complex64::from_polar(1.0, t)).norm();
    for m in 0..n {
        let prev = vals[(m + n - 1) % n];
        let next = vals[(m + 1) % n];
        if vals[m] >= prev && vals[m] >= next && vals[m] >= 0.9 * best {
            let (mut a, mut b) = ((m as f64 - 1.0) * h, (m as f64 + 1.0) * h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            for _ in 0..60 {
                if at(c) > at(d) {
                    b = d;
                } else {
                    a = c;
                }
                c = b - g * (b - a);
                d = a + g * (b - a);
            }
            best = best.max(at(0.5 * (a + b)));
        }
    }
    best
}

/// Quadrature nodes t_i (radians) and weights for ∫ f dt.
#[derive(Debug, Clone, Default)]
pub struct AngularRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AngularRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value of ∫ f dm = (1/2π) ∫ f dt.
    pub fn integrate_dm<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(*t) * *w;
        }
        acc / TAU
    }

    fn push_panel(&mut self, gl: &GaussLegendre, a: f64, b: f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in gl.nodes().zip(gl.weights()) {
            self.nodes.push(mid + half * x);
            self.weights.push(half * w);
        }
    }
}

/// Composite Gauss-Legendre rule on [a, b] (radians) with panels refined geometrically
/// towards both ends (`depth` halvings) and no panel longer than `max_panel`.
pub fn graded_rule(a: f64, b: f64, points: usize, depth: u32, max_panel: f64) -> AngularRule {
    let gl = GaussLegendre::new(points.max(2)).expect("at least two nodes");
    let half = 0.5 * (b - a);
    // breakpoints measured from each end: half·2^{-k}
    let mut cuts: Vec<f64> = (0..=depth).map(|k| half * 2f64.powi(-(k as i32))).collect();
    cuts.push(0.0);
    cuts.reverse();
    let mut edges: Vec<f64> = cuts.iter().map(|&d| a + d).collect();
    let right: Vec<f64> = cuts.iter().rev().skip(1).map(|&d| b - d).collect();
    edges.extend(right);
    let mut rule = AngularRule::default();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let pieces = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
        let step = (hi - lo) / pieces as f64;
        for p in 0..pieces {
            rule.push_panel(&gl, lo + p as f64 * step, lo + (p + 1) as f64 * step);
        }
    }
    rule
}

/// Graded rule over every component arc of E, with extra breakpoints (for instance atoms).
pub fn set_rule(e: &BeurlingCarlesonSet, breaks: &[f64], points: usize, depth: u32, max_panel: f64) -> AngularRule {
    let mut rule = AngularRule::default();
    for comp in e.components() {
        let mut cuts = vec![comp.start, comp.end];
        for &t in breaks {
            let o = comp.offset(t);
            if o > 0.0 && o < comp.span() {
                cuts.push(comp.start + o);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in cuts.windows(2) {
            let r = graded_rule(w[0], w[1], points, depth, max_panel);
            rule.nodes.extend(r.nodes);
            rule.weights.extend(r.weights);
        }
    }
    rule
}

/// Deterministic points in the disk of radius `r_max`: square-root radial spacing, golden-angle turns.
pub fn disk_lattice(count: usize, r_max: f64) -> Vec<Complex64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let r = r_max * ((i as f64 + 0.5) / count as f64).sqrt();
            Complex64::from_polar(r, golden * i as f64)
        })
        .collect()
}

/// Angle derivatives of log F(e^{it}) from the z-derivatives d1, d2, d3 of log F.
pub fn angle_log_derivatives(z: Complex64, d: [Complex64; 3]) -> [Complex64; 3] {
    let i = Complex64::new(0.0, 1.0);
    let z2 = z * z;
    [i * z * d[0], -z * d[0] - z2 * d[1], -i * (z * d[0] + 3.0 * z2 * d[1] + z2 * z * d[2])]
}

/// F^{(m)}/F for m = 1, 2, 3 from the derivatives of log F (complete Bell polynomials).
pub fn bell_ratios(l: [Complex64; 3]) -> [Complex64; 3] {
    [l[0], l[1] + l[0] * l[0], l[2] + 3.0 * l[0] * l[1] + l[0] * l[0] * l[0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_negative_mode() {
        let g = BoundaryGrid::from_fn(8, |t| Complex64::from_polar(1.0, -3.0 * t)).unwrap();
        let f = fourier_coefficients(&g, 10).unwrap();
        for n in -10..=10 {
            let expect = if n == -3 { 1.0 } else { 0.0 };
            assert!((f.get(n) - expect).norm() < 1e-12);
        }
        assert!(matches!(fourier_coefficients(&g, 128), Err(Error::BandTooLarge { .. })));
    }

    #[test]
    fn cosine_modes() {
        let g = BoundaryGrid::from_fn(8, |t| c(2.0 * t.cos(), 0.0)).unwrap();
        let f = fourier_coefficients(&g, 4).unwrap();
        assert!((f.get(1) - 1.0).norm() < 1e-12 && (f.get(-1) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let f = TwoSided::from_fn(3, |n| if n == -1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(analytic_projection(&f).coeffs.iter().all(|x| x.norm() == 0.0));
        let f = TwoSided::from_fn(3, |n| match n {
            0 => c(2.0, 0.0),
            3 => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        });
        assert_eq!(analytic_projection(&f).coeffs, vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
    }

    #[test]
    fn conjugate_of_cosine() {
        let n = 256;
        let u: Vec<f64> = (0..n).map(|m| grid_angle(8, m).cos()).collect();
        let v = conjugate_function(&u);
        for (m, x) in v.iter().enumerate() {
            assert!((x - grid_angle(8, m).sin()).abs() < 1e-13);
        }
        assert!(conjugate_function(&vec![3.0; 256]).iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn fejer_examples() {
        let z = AnalyticSeries::from_real(&[0.0, 1.0]);
        assert_eq!(fejer_means(&z, 1).coeffs, vec![c(0.0, 0.0), c(0.5, 0.0)]);
        let k = AnalyticSeries::from_real(&[3.0]);
        assert_eq!(fejer_means(&k, 4).get(0), c(3.0, 0.0));
    }

    #[test]
    fn geometric_series_at_half() {
        let d = 20;
        let f = AnalyticSeries::from_real(&vec![1.0; d + 1]);
        assert_eq!(evaluate_in_disk(&f, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let v = evaluate_in_disk(&f, c(0.5, 0.0)).unwrap();
        assert!((v.re - (2.0 - 2f64.powi(-(d as i32)))).abs() < 1e-14);
        assert!(evaluate_in_disk(&f, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn cauchy_trivial_cases() {
        let z = c(0.3, -0.4);
        let one = BoundaryGrid::from_fn(8, |_| c(1.0, 0.0)).unwrap();
        assert!((cauchy_quadrature(&one, z).unwrap() - 1.0).norm() < 1e-14);
        let bar = BoundaryGrid::from_fn(8, |t| Complex64::from_polar(1.0, -t)).unwrap();
        assert!(cauchy_quadrature(&bar, z).unwrap().norm() < 1e-14);
        let id = BoundaryGrid::from_fn(8, |t| Complex64::from_polar(1.0, t)).unwrap();
        assert!((cauchy_quadrature(&id, z).unwrap() - z).norm() < 1e-14);
        assert!(cauchy_quadrature(&one, c(0.96, 0.0)).is_err());
    }

    #[test]
    fn graded_rule_integrates_smooth_functions() {
        let r = graded_rule(0.3, 2.0, 20, 30, 0.25);
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| t.cos() * w).sum();
        assert!((v - (2f64.sin() - 0.3f64.sin())).abs() < 1e-14);
        // integrable endpoint singularity
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| (t - 0.3).ln() * w).sum();
        let exact = |x: f64| x * x.ln() - x;
        assert!((v - exact(1.7)).abs() < 1e-9);
    }

    #[test]
    fn sup_norm_finds_peak() {
        let f = AnalyticSeries::from_real(&[1.0, 1.0]);
        assert!((sup_norm(&f) - 2.0).abs() < 1e-12);
    }
}
