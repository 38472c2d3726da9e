//! The analytic cut-off g = exp(h), h(z) = −Σ λ_j b_j c_j /(r_j b_j − z), built on a Whitney system.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary_calculus::{angle_log_derivatives, bell_ratios, grid_angle};
use crate::circle_sets::{
    assign_lambdas, omitted_mass, residual_segments, whitney_decompose, Arc, BeurlingCarlesonSet, LambdaRule,
    WhitneyArc,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffFunction {
    pub set: BeurlingCarlesonSet,
    pub k_max: u32,
    pub rule: LambdaRule,
    pub whitney: Vec<WhitneyArc>,
    /// Bound on Σ λ_j c_j over the omitted arcs of each gap.
    pub omitted: Vec<f64>,
    pub residuals: Vec<(Arc, Arc)>,
    /// Total omitted λc mass; |h_tail(z)| ≤ tail_mass / dist(z, omitted poles).
    pub tail_mass: f64,
    poles: Vec<Complex64>,
    coefs: Vec<Complex64>,
}

impl CutoffFunction {
    pub fn new(set: &BeurlingCarlesonSet, k_max: u32, rule: LambdaRule) -> Result<Self> {
        let arcs = assign_lambdas(&whitney_decompose(set, k_max)?, rule)?;
        Self::from_arcs(set, k_max, rule, arcs)
    }

    /// Build from an explicit arc list (λ already attached).
    pub fn from_arcs(set: &BeurlingCarlesonSet, k_max: u32, rule: LambdaRule, arcs: Vec<WhitneyArc>) -> Result<Self> {
        for (i, a) in arcs.iter().enumerate() {
            if !(a.length < 1.0) {
                return Err(Error::DegenerateArc(i));
            }
        }
        let lengths: Vec<f64> = set.gaps.iter().map(|g| g.length()).collect();
        let omitted: Vec<f64> = omitted_mass(&lengths, k_max)
            .into_iter()
            .map(|o| match rule {
                LambdaRule::Constant(v) => v * o,
                LambdaRule::TailSum { gain } => gain * (o + 2.0 * o.sqrt()),
            })
            .collect();
        let poles = arcs.iter().map(|a| a.midpoint * a.radius).collect();
        let coefs = arcs.iter().map(|a| a.midpoint * (a.lambda * a.weight())).collect();
        Ok(CutoffFunction {
            set: set.clone(),
            k_max,
            rule,
            tail_mass: omitted.iter().sum(),
            residuals: residual_segments(set, k_max)?,
            omitted,
            whitney: arcs,
            poles,
            coefs,
        })
    }

    pub fn eval_h(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, c) in self.poles.iter().zip(&self.coefs) {
            acc -= c / (p - z);
        }
        acc
    }

    /// h and its first three z-derivatives.
    pub fn h_derivatives(&self, z: Complex64) -> [Complex64; 4] {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (p, c) in self.poles.iter().zip(&self.coefs) {
            let q = 1.0 / (p - z);
            let t = c * q;
            out[0] -= t;
            out[1] -= t * q;
            out[2] -= 2.0 * t * q * q;
            out[3] -= 6.0 * t * q * q * q;
        }
        out
    }

    /// g = exp(h); on the circle, gap endpoints (where the poles accumulate) map to 0.
    pub fn eval_g(&self, z: Complex64) -> Complex64 {
        if (z.norm() - 1.0).abs() < 1e-14 && self.set.is_endpoint(z.arg(), 1e-14) {
            return Complex64::new(0.0, 0.0);
        }
        self.eval_h(z).exp()
    }

    pub fn boundary_g(&self, t: f64) -> Complex64 {
        if self.set.is_endpoint(t, 1e-14) {
            return Complex64::new(0.0, 0.0);
        }
        self.eval_h(Complex64::from_polar(1.0, t)).exp()
    }

    /// log|G^{(m)}(t)| for m = 0..=3 on the circle (−∞ at gap endpoints).
    pub fn log_abs_boundary_derivatives(&self, t: f64) -> [f64; 4] {
        if self.set.is_endpoint(t, 1e-14) {
            return [f64::NEG_INFINITY; 4];
        }
        let z = Complex64::from_polar(1.0, t);
        let d = self.h_derivatives(z);
        let re = d[0].re;
        let b = bell_ratios(angle_log_derivatives(z, [d[1], d[2], d[3]]));
        [re, re + b[0].norm().ln(), re + b[1].norm().ln(), re + b[2].norm().ln()]
    }

    /// Pointwise bound on |h_∞(z) − h(z)| from the omitted arcs.
    pub fn tail_bound_at(&self, z: Complex64) -> f64 {
        let mut total = 0.0;
        for (n, (l, r)) in self.residuals.iter().enumerate() {
            let reach = 1.0 + l.length() / 2.0;
            let d = sector_distance(z, l, reach).min(sector_distance(z, r, reach));
            total += if self.omitted[n] == 0.0 { 0.0 } else { self.omitted[n] / d };
        }
        total
    }

    /// Empirical exponent c_j with |g(b_j)| = |B_j|^{c_j λ_j} at each Whitney midpoint.
    pub fn midpoint_exponents(&self) -> Vec<f64> {
        self.whitney.iter().map(|a| self.eval_h(a.midpoint).re / (a.lambda * a.length.ln())).collect()
    }

    pub fn rotate(&self, phi: f64) -> Result<Self> {
        Self::new(&self.set.rotate(phi), self.k_max, self.rule)
    }
}

/// Distance from z to {ρe^{iθ}: θ ∈ arc, 1 ≤ ρ ≤ reach}.
fn sector_distance(z: Complex64, arc: &Arc, reach: f64) -> f64 {
    let r = z.norm();
    let t = z.arg();
    if arc.contains_closed(t) {
        return if r < 1.0 {
            1.0 - r
        } else if r > reach {
            r - reach
        } else {
            0.0
        };
    }
    let seg = |theta: f64| {
        let u = Complex64::from_polar(1.0, theta);
        let proj = (z * u.conj()).re.clamp(1.0, reach);
        (z - u * proj).norm()
    };
    seg(arc.start).min(seg(arc.end))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub n: u32,
    pub m: u32,
    pub levels: Vec<u32>,
    pub log10_rho: Vec<f64>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub log2_size: u32,
    /// Distances are normalized; level ℓ collects grid points with dist ∈ [2^{-ℓ-1}, 2^{-ℓ}).
    pub levels: Vec<u32>,
    pub points_per_level: Vec<usize>,
    pub derivative_method: String,
    pub entries: Vec<DecayEntry>,
}

impl DecayReport {
    pub fn entry(&self, n: u32, m: u32) -> Option<&DecayEntry> {
        self.entries.iter().find(|e| e.n == n && e.m == m)
    }

    pub fn all_monotone(&self) -> bool {
        self.entries.iter().all(|e| e.monotone)
    }
}

/// Finest usable dyadic level: at least 8 grid points per gap-side bucket.
pub fn finest_level(log2: u32) -> u32 {
    log2.saturating_sub(4)
}

/// Ratios ρ(d) = max |G^{(m)}|/d^N over the last `count` dyadic distance levels of a 2^log2 grid.
pub fn certify_decay(
    c: &CutoffFunction,
    orders: &[u32],
    derivs: &[u32],
    log2: u32,
    count: u32,
) -> Result<DecayReport> {
    if derivs.iter().any(|&m| m > 3) {
        return Err(Error::Precondition("derivative orders above 3 are not supported".into()));
    }
    let top = finest_level(log2);
    if top < count + 1 {
        return Err(Error::Resolution(format!("grid 2^{log2} cannot host {count} dyadic levels")));
    }
    let levels: Vec<u32> = (top + 1 - count..=top).collect();
    let lo = 2f64.powi(-(top as i32) - 1);
    let hi = 2f64.powi(-(levels[0] as i32));
    let n = 1usize << log2;
    let mut best = vec![vec![f64::NEG_INFINITY; levels.len()]; orders.len() * derivs.len()];
    let mut counts = vec![0usize; levels.len()];
    for m_idx in 0..n {
        let t = grid_angle(log2, m_idx);
        let d = c.set.dist(t);
        if !(d >= lo && d < hi) {
            continue;
        }
        let lvl = (-d.log2()).ceil() as u32 - 1;
        let li = (lvl - levels[0]) as usize;
        counts[li] += 1;
        let lg = c.log_abs_boundary_derivatives(t);
        for (ni, &nn) in orders.iter().enumerate() {
            for (mi, &mm) in derivs.iter().enumerate() {
                let v = lg[mm as usize] - nn as f64 * d.ln();
                let slot = &mut best[ni * derivs.len() + mi][li];
                if v > *slot {
                    *slot = v;
                }
            }
        }
    }
    if let Some(i) = counts.iter().position(|&k| k < 8) {
        return Err(Error::Resolution(format!("level {} holds only {} grid points", levels[i], counts[i])));
    }
    let mut entries = Vec::new();
    for (ni, &nn) in orders.iter().enumerate() {
        for (mi, &mm) in derivs.iter().enumerate() {
            let row = &best[ni * derivs.len() + mi];
            let log10: Vec<f64> = row.iter().map(|v| v / std::f64::consts::LN_10).collect();
            let monotone = log10.windows(2).all(|w| w[1] < w[0]);
            entries.push(DecayEntry { n: nn, m: mm, levels: levels.clone(), log10_rho: log10, monotone });
        }
    }
    Ok(DecayReport {
        log2_size: log2,
        levels,
        points_per_level: counts,
        derivative_method: "exact differentiation of the truncated series, gap side only".into(),
        entries,
    })
}

/// Angle of the point at normalized distance d inside gap `n`, measured from its right end.
pub fn point_near_right_end(c: &CutoffFunction, n: usize, d: f64) -> f64 {
    c.set.gaps[n].end - d * TAU
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_sets::validate_set;

    fn two_gap() -> BeurlingCarlesonSet {
        validate_set(&[Arc::from_normalized(0.0625, 0.1875).unwrap(), Arc::from_normalized(0.5, 0.125).unwrap()])
            .unwrap()
    }

    #[test]
    fn origin_value_is_direct_sum() {
        let c = CutoffFunction::new(&two_gap(), 8, LambdaRule::default()).unwrap();
        let direct: f64 = c.whitney.iter().map(|a| -a.lambda * a.weight() / a.radius).sum();
        let h0 = c.eval_h(Complex64::new(0.0, 0.0));
        assert!((h0.re - direct).abs() < 1e-15 && h0.im.abs() < 1e-15);
        assert!(h0.re < 0.0);
        assert!((c.eval_g(Complex64::new(0.0, 0.0)).norm() - h0.re.exp()).abs() < 1e-15);
    }

    #[test]
    fn one_term_formula() {
        let e = validate_set(&[Arc::from_normalized(0.2, 0.3).unwrap()]).unwrap();
        let arcs = assign_lambdas(&whitney_decompose(&e, 0).unwrap(), LambdaRule::Constant(2.0)).unwrap();
        let c = CutoffFunction::from_arcs(&e, 0, LambdaRule::Constant(2.0), arcs.clone()).unwrap();
        let a = arcs[0];
        let l = a.length;
        for k in 0..10 {
            let z = Complex64::from_polar(0.1 * k as f64, 0.7 * k as f64);
            let hand = -2.0 * a.midpoint * l * (1.0 / l).ln() / ((1.0 + l) * a.midpoint - z);
            assert!((c.eval_h(z) - hand).norm() < 1e-15);
        }
    }

    #[test]
    fn vanishes_at_gap_ends_only() {
        let e = two_gap();
        let c = CutoffFunction::new(&e, 8, LambdaRule::default()).unwrap();
        assert_eq!(c.boundary_g(e.gaps[0].start).norm(), 0.0);
        assert!(c.boundary_g(0.375 * TAU).norm() > 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = CutoffFunction::new(&two_gap(), 8, LambdaRule::TailSum { gain: 4.0 }).unwrap();
        let t0 = 0.2 * TAU;
        let g = |t: f64| c.boundary_g(t);
        let eps = 1e-4;
        let (m2, m1, z0, p1, p2) = (g(t0 - 2.0 * eps), g(t0 - eps), g(t0), g(t0 + eps), g(t0 + 2.0 * eps));
        let fd1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * eps);
        let fd2 = (-m2 + 16.0 * m1 - 30.0 * z0 + 16.0 * p1 - p2) / (12.0 * eps * eps);
        let lg = c.log_abs_boundary_derivatives(t0);
        assert!((fd1.norm().ln() - lg[1]).abs() < 1e-6);
        assert!((fd2.norm().ln() - lg[2]).abs() < 1e-5);
    }

    #[test]
    fn midpoint_exponent_at_least_one() {
        let c = CutoffFunction::new(&two_gap(), 10, LambdaRule::default()).unwrap();
        for x in c.midpoint_exponents() {
            assert!(x >= 1.0 - 1e-12);
        }
    }
}
